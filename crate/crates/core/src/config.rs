use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RoundingMode {
    #[default]
    HalfAwayFromZero,
    HalfToEven,
}

impl RoundingMode {
    /// Divides `num` by a positive `den`, rounding to an integer.
    pub fn div(self, num: i128, den: i128) -> i128 {
        assert!(den > 0, "rounding division needs a positive denominator");
        let q = num.div_euclid(den);
        let r = num.rem_euclid(den);
        // q is the floor; decide whether to step up to q + 1.
        match (2 * r).cmp(&den) {
            std::cmp::Ordering::Less => q,
            std::cmp::Ordering::Greater => q + 1,
            std::cmp::Ordering::Equal => match self {
                RoundingMode::HalfAwayFromZero => {
                    if num >= 0 {
                        q + 1
                    } else {
                        q
                    }
                }
                RoundingMode::HalfToEven => {
                    if q % 2 == 0 {
                        q
                    } else {
                        q + 1
                    }
                }
            },
        }
    }
}

/// Engine knobs. Connection weights fall from `weight_initial` by
/// `weight_decrement` per repeated observation, never below `weight_floor`.
/// A lower weight means a stronger bond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub weight_initial: f64,
    pub weight_decrement: f64,
    pub weight_floor: f64,
    /// How many nearest anchors each input attribute contributes.
    pub nearest_k: usize,
    pub rounding: RoundingMode,
    /// Grayscale cells strictly below this value become foreground.
    pub image_threshold: u8,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            weight_initial: 1.0,
            weight_decrement: 0.25,
            weight_floor: 0.0,
            nearest_k: 1,
            rounding: RoundingMode::HalfAwayFromZero,
            image_threshold: 128,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight_initial > self.weight_floor && self.weight_floor >= 0.0) {
            return Err(Error::InvalidConfig(
                "weight_initial must exceed weight_floor, and weight_floor must be >= 0".into(),
            ));
        }
        if self.weight_decrement.is_nan() || self.weight_decrement < 0.0 {
            return Err(Error::InvalidConfig("weight_decrement must be >= 0".into()));
        }
        if self.nearest_k == 0 {
            return Err(Error::InvalidConfig("nearest_k must be >= 1".into()));
        }
        Ok(())
    }

    /// Weight of a connection observed `occurrences` times.
    pub fn weight_for(&self, occurrences: u64) -> f64 {
        let repeats = occurrences.saturating_sub(1) as f64;
        (self.weight_initial - self.weight_decrement * repeats).max(self.weight_floor)
    }
}
