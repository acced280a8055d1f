//! Neuron payloads.
//!
//! Every value is compared exactly. Numeric-like variants project onto a
//! fixed-point [`Scalar`] axis which drives nearest-value retrieval; textual
//! variants have no axis and only ever match exactly.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MONTH_ABBREVIATIONS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

const MONTH_NAMES: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

/// Days per month on the fixed non-leap calendar used for the date axis.
const MONTH_DAYS: [u16; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// Fixed-precision decimal: `scaled / 10^precision`.
///
/// Equality is structural, so `4.9` at precision 1 and `4.90` at precision 2
/// are different values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Decimal {
    pub scaled: i64,
    pub precision: u8,
}

impl Decimal {
    pub const fn new(scaled: i64, precision: u8) -> Self {
        Self { scaled, precision }
    }

    /// Parses `text` at exactly `precision` places; fewer places are padded,
    /// more places are rejected.
    pub fn parse_with_precision(text: &str, precision: u8) -> Result<Self> {
        let err = || Error::ValueParse {
            text: text.to_string(),
            kind: format!("dec{precision}"),
        };
        let parsed: Decimal = text.parse().map_err(|_| err())?;
        if parsed.precision > precision {
            return Err(err());
        }
        let factor = 10i64
            .checked_pow(u32::from(precision - parsed.precision))
            .ok_or_else(err)?;
        let scaled = parsed.scaled.checked_mul(factor).ok_or_else(err)?;
        Ok(Decimal::new(scaled, precision))
    }

    pub fn to_scalar(self) -> Scalar {
        Scalar::new(i128::from(self.scaled), self.precision)
    }

    /// Signed rendering used for bias labels: `+2`, `-3`, `+0.5`.
    pub fn to_signed_string(self) -> String {
        if self.scaled < 0 {
            self.to_string()
        } else {
            format!("+{self}")
        }
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = || Error::ValueParse {
            text: text.to_string(),
            kind: "decimal".into(),
        };
        let trimmed = text.trim();
        let (negative, body) = match trimmed.as_bytes().first() {
            Some(b'-') => (true, &trimmed[1..]),
            Some(b'+') => (false, &trimmed[1..]),
            _ => (false, trimmed),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !whole
            .bytes()
            .chain(frac.bytes())
            .all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        let precision = u8::try_from(frac.len()).map_err(|_| err())?;
        let digits = format!("{whole}{frac}");
        let magnitude: i64 = if digits.is_empty() {
            0
        } else {
            digits.parse().map_err(|_| err())?
        };
        Ok(Decimal::new(
            if negative { -magnitude } else { magnitude },
            precision,
        ))
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.precision == 0 {
            return write!(f, "{}", self.scaled);
        }
        let factor = 10u64.pow(u32::from(self.precision));
        let magnitude = self.scaled.unsigned_abs();
        let sign = if self.scaled < 0 { "-" } else { "" };
        write!(
            f,
            "{sign}{}.{:0width$}",
            magnitude / factor,
            magnitude % factor,
            width = usize::from(self.precision)
        )
    }
}

/// Exact fixed-point position on a value axis. Comparison rescales both sides
/// to the finer precision, so no floating point is involved.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Scalar {
    pub scaled: i128,
    pub precision: u8,
}

impl Scalar {
    pub const fn new(scaled: i128, precision: u8) -> Self {
        Self { scaled, precision }
    }

    pub const fn from_int(i: i64) -> Self {
        Self {
            scaled: i as i128,
            precision: 0,
        }
    }

    fn rescaled(self, precision: u8) -> i128 {
        self.scaled * 10i128.pow(u32::from(precision - self.precision))
    }

    pub fn abs_diff(self, other: Scalar) -> Scalar {
        let p = self.precision.max(other.precision);
        Scalar::new((self.rescaled(p) - other.rescaled(p)).abs(), p)
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(self) -> f64 {
        self.scaled as f64 / 10f64.powi(i32::from(self.precision))
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let p = self.precision.max(other.precision);
        self.rescaled(p).cmp(&other.rescaled(p))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match i64::try_from(self.scaled) {
            Ok(scaled) => Decimal::new(scaled, self.precision).fmt(f),
            Err(_) => write!(f, "{}e-{}", self.scaled, self.precision),
        }
    }
}

/// Payload of a neuron.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Integer(i64),
    Decimal(Decimal),
    /// 1 = January.
    Month(u8),
    DateDM {
        day: u8,
        month: u8,
    },
    TimeHM {
        hour: u8,
        minute: u8,
    },
    Category(String),
    ColorCode(u8),
    Operator(String),
    Token(String),
}

impl Value {
    pub fn decimal(scaled: i64, precision: u8) -> Self {
        Value::Decimal(Decimal::new(scaled, precision))
    }

    pub fn date(day: u8, month: u8) -> Self {
        Value::DateDM { day, month }
    }

    pub fn time(hour: u8, minute: u8) -> Self {
        Value::TimeHM { hour, minute }
    }

    pub fn category(text: impl Into<String>) -> Self {
        Value::Category(text.into())
    }

    pub fn token(text: impl Into<String>) -> Self {
        Value::Token(text.into())
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Integer(_) => ValueKind::Integer,
            Value::Decimal(d) => ValueKind::Decimal(d.precision),
            Value::Month(_) => ValueKind::Month,
            Value::DateDM { .. } => ValueKind::DateDM,
            Value::TimeHM { .. } => ValueKind::TimeHM,
            Value::Category(_) => ValueKind::Category,
            Value::ColorCode(_) => ValueKind::ColorCode,
            Value::Operator(_) => ValueKind::Operator,
            Value::Token(_) => ValueKind::Token,
        }
    }

    /// Position of the value on its ordered axis; `None` for exact-match-only
    /// variants.
    pub fn axis(&self) -> Option<Scalar> {
        match *self {
            Value::Integer(i) => Some(Scalar::from_int(i)),
            Value::Decimal(d) => Some(d.to_scalar()),
            Value::Month(m) => Some(Scalar::from_int(i64::from(m))),
            Value::DateDM { day, month } => Some(Scalar::from_int(day_of_year(day, month))),
            Value::TimeHM { hour, minute } => {
                Some(Scalar::from_int(60 * i64::from(hour) + i64::from(minute)))
            }
            Value::Category(_) | Value::ColorCode(_) | Value::Operator(_) | Value::Token(_) => None,
        }
    }

    /// Distance between two values on their shared axis. Months wrap around
    /// (December is next to January).
    pub fn distance(&self, other: &Value) -> Option<Scalar> {
        if let (Value::Month(a), Value::Month(b)) = (self, other) {
            let d = i64::from(a.abs_diff(*b));
            return Some(Scalar::from_int(d.min(12 - d)));
        }
        Some(self.axis()?.abs_diff(other.axis()?))
    }

    pub fn is_numeric(&self) -> bool {
        self.axis().is_some()
    }
}

/// Cumulative day of year on the non-leap calendar (1 Jan = 1).
pub fn day_of_year(day: u8, month: u8) -> i64 {
    let before: u16 = MONTH_DAYS
        .iter()
        .take(usize::from(month.saturating_sub(1)))
        .sum();
    i64::from(before) + i64::from(day)
}

pub fn days_in_month(month: u8) -> Option<u8> {
    MONTH_DAYS
        .get(usize::from(month).checked_sub(1)?)
        .map(|d| *d as u8)
}

/// Accepts English full names and three-letter abbreviations, any case.
pub fn parse_month(text: &str) -> Option<u8> {
    let lower = text.trim().to_ascii_lowercase();
    MONTH_NAMES
        .iter()
        .position(|name| *name == lower || (lower.len() == 3 && name.starts_with(&lower)))
        .map(|i| i as u8 + 1)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Integer(i) => write!(f, "{i}"),
            Value::Decimal(d) => write!(f, "{d}"),
            Value::Month(m) => f.write_str(month_abbreviation(*m)),
            Value::DateDM { day, month } => write!(f, "{day}-{}", month_abbreviation(*month)),
            Value::TimeHM { hour, minute } => write!(f, "{hour:02}:{minute:02}"),
            Value::ColorCode(c) => write!(f, "{c:02}"),
            Value::Category(s) | Value::Operator(s) | Value::Token(s) => f.write_str(s),
        }
    }
}

fn month_abbreviation(m: u8) -> &'static str {
    MONTH_ABBREVIATIONS
        .get(usize::from(m).wrapping_sub(1))
        .copied()
        .unwrap_or("?")
}

/// Declared kind of an attribute or payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValueKind {
    Integer,
    Decimal(u8),
    Month,
    DateDM,
    TimeHM,
    Category,
    ColorCode,
    Operator,
    Token,
}

impl ValueKind {
    pub fn is_numeric(self) -> bool {
        matches!(
            self,
            ValueKind::Integer
                | ValueKind::Decimal(_)
                | ValueKind::Month
                | ValueKind::DateDM
                | ValueKind::TimeHM
        )
    }

    /// Parses `text` as a value of this kind.
    pub fn parse_value(self, text: &str) -> Result<Value> {
        let text = text.trim();
        let err = || Error::ValueParse {
            text: text.to_string(),
            kind: self.to_string(),
        };
        match self {
            ValueKind::Integer => text.parse().map(Value::Integer).map_err(|_| err()),
            ValueKind::Decimal(p) => Decimal::parse_with_precision(text, p).map(Value::Decimal),
            ValueKind::Month => parse_month(text).map(Value::Month).ok_or_else(err),
            ValueKind::DateDM => {
                let (day, month) = text.split_once('-').ok_or_else(err)?;
                let month = parse_month(month).ok_or_else(err)?;
                let day: u8 = day.trim().parse().map_err(|_| err())?;
                if day == 0 || day > days_in_month(month).unwrap_or(0) {
                    return Err(err());
                }
                Ok(Value::date(day, month))
            }
            ValueKind::TimeHM => {
                let (h, m) = text.split_once(':').ok_or_else(err)?;
                if h.is_empty() || m.len() != 2 {
                    return Err(err());
                }
                let hour: u8 = h.parse().map_err(|_| err())?;
                let minute: u8 = m.parse().map_err(|_| err())?;
                if hour > 23 || minute > 59 {
                    return Err(err());
                }
                Ok(Value::time(hour, minute))
            }
            ValueKind::Category | ValueKind::Operator | ValueKind::Token if text.is_empty() => {
                Err(err())
            }
            ValueKind::Category => Ok(Value::category(text)),
            ValueKind::Operator => Ok(Value::Operator(text.to_string())),
            ValueKind::Token => Ok(Value::token(text)),
            ValueKind::ColorCode => text.parse().map(Value::ColorCode).map_err(|_| err()),
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Integer => f.write_str("int"),
            ValueKind::Decimal(p) => write!(f, "dec{p}"),
            ValueKind::Month => f.write_str("month"),
            ValueKind::DateDM => f.write_str("date-dm"),
            ValueKind::TimeHM => f.write_str("time-hm"),
            ValueKind::Category => f.write_str("cat"),
            ValueKind::ColorCode => f.write_str("color"),
            ValueKind::Operator => f.write_str("op"),
            ValueKind::Token => f.write_str("token"),
        }
    }
}

impl FromStr for ValueKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "int" => ValueKind::Integer,
            "month" => ValueKind::Month,
            "date-dm" => ValueKind::DateDM,
            "time-hm" => ValueKind::TimeHM,
            "cat" => ValueKind::Category,
            other => match other.strip_prefix("dec").map(str::parse::<u8>) {
                Some(Ok(p)) if p <= 9 => ValueKind::Decimal(p),
                _ => {
                    return Err(Error::ValueParse {
                        text: s.to_string(),
                        kind: "value kind".into(),
                    })
                }
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_examples() {
        assert_eq!(Value::time(11, 0).axis(), Some(Scalar::from_int(660)));
        // 31 + 28 + 31 + 30 + 31 + 6
        assert_eq!(Value::date(6, 6).axis(), Some(Scalar::from_int(157)));
        assert_eq!(Value::category("setosa").axis(), None);
        assert_eq!(Value::decimal(49, 1).axis(), Some(Scalar::new(49, 1)));
    }

    #[test]
    fn day_of_year_matches_enumeration() {
        let mut n = 0;
        for month in 1..=12u8 {
            for day in 1..=days_in_month(month).unwrap() {
                n += 1;
                assert_eq!(day_of_year(day, month), n);
            }
        }
        assert_eq!(n, 365);
    }

    #[test]
    fn decimal_equality_is_structural() {
        assert_ne!(Value::decimal(49, 1), Value::decimal(490, 2));
        assert_eq!(
            Decimal::new(49, 1).to_scalar(),
            Decimal::new(490, 2).to_scalar()
        );
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(
            Decimal::parse_with_precision("4.9", 1).unwrap(),
            Decimal::new(49, 1)
        );
        assert_eq!(
            Decimal::parse_with_precision("5", 1).unwrap(),
            Decimal::new(50, 1)
        );
        assert_eq!(
            Decimal::parse_with_precision("-0.5", 1).unwrap(),
            Decimal::new(-5, 1)
        );
        assert!(Decimal::parse_with_precision("4.95", 1).is_err());
        assert!(Decimal::parse_with_precision("x", 1).is_err());
        assert_eq!("+2".parse::<Decimal>().unwrap(), Decimal::new(2, 0));
        assert_eq!(Decimal::new(-5, 1).to_string(), "-0.5");
        assert_eq!(Decimal::new(2, 0).to_signed_string(), "+2");
        assert_eq!(Decimal::new(-3, 0).to_signed_string(), "-3");
    }

    #[test]
    fn parse_and_display_round_trip() {
        let date = ValueKind::DateDM.parse_value("6-June").unwrap();
        assert_eq!(date, ValueKind::DateDM.parse_value("6-jun").unwrap());
        assert_eq!(date.to_string(), "6-Jun");
        assert_eq!(
            ValueKind::TimeHM.parse_value("08:00").unwrap().to_string(),
            "08:00"
        );
        assert!(ValueKind::TimeHM.parse_value("25:00").is_err());
        assert!(ValueKind::TimeHM.parse_value("10:60").is_err());
        assert!(ValueKind::DateDM.parse_value("31-Jun").is_err());
        assert!(ValueKind::Category.parse_value("").is_err());
    }

    #[test]
    fn months_wrap_around() {
        assert_eq!(
            Value::Month(12).distance(&Value::Month(1)),
            Some(Scalar::from_int(1))
        );
        assert_eq!(
            Value::Month(3).distance(&Value::Month(9)),
            Some(Scalar::from_int(6))
        );
    }

    #[test]
    fn kind_names() {
        for k in ["int", "dec1", "date-dm", "time-hm", "cat"] {
            assert_eq!(k.parse::<ValueKind>().unwrap().to_string(), k);
        }
        assert!("float".parse::<ValueKind>().is_err());
    }
}
