use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use super::schema::{Record, Schema};
use super::{define_schema, is_mean_kind, predict, train_record};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldOutcome {
    /// Zero-based index of the held-out record.
    pub index: usize,
    pub expected: Value,
    pub predicted: Option<Value>,
    /// Why prediction failed, when it did.
    pub error: Option<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooReport {
    pub target: String,
    pub numeric: bool,
    pub folds: Vec<FoldOutcome>,
}

impl LooReport {
    pub fn correct(&self) -> usize {
        self.folds.iter().filter(|f| f.correct).count()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.folds.len() as f64
    }

    /// Mean absolute error over folds that produced a prediction (numeric
    /// targets only).
    pub fn mean_absolute_error(&self) -> Option<f64> {
        if !self.numeric {
            return None;
        }
        let errors: Vec<f64> = self
            .folds
            .iter()
            .filter_map(|f| {
                let p = f.predicted.as_ref()?;
                Some(f.expected.distance(p)?.to_f64())
            })
            .collect();
        (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64)
    }
}

impl fmt::Display for LooReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fold\texpected\tpredicted\tcorrect")?;
        for fold in &self.folds {
            let predicted = match (&fold.predicted, &fold.error) {
                (Some(v), _) => v.to_string(),
                (None, Some(e)) => format!("error: {e}"),
                (None, None) => "-".to_string(),
            };
            writeln!(
                f,
                "{}\t{}\t{}\t{}",
                fold.index + 1,
                fold.expected,
                predicted,
                if fold.correct { "yes" } else { "no" }
            )?;
        }
        writeln!(
            f,
            "accuracy {:.4} ({}/{})",
            self.accuracy(),
            self.correct(),
            self.folds.len()
        )?;
        if let Some(mae) = self.mean_absolute_error() {
            writeln!(f, "mean absolute error {mae:.4}")?;
        }
        Ok(())
    }
}

/// Leave-one-out evaluation: each fold copies `template`, trains on every
/// record but one, and predicts the held-out one. Folds run in parallel;
/// the report is in record order.
pub fn evaluate_loo(template: &Mesh, schema: &Schema, records: &[Record]) -> Result<LooReport> {
    if records.len() < 2 {
        return Err(Error::TooFewRecords(records.len()));
    }
    for r in records {
        schema.check_complete(r)?;
    }
    let mut base = template.clone();
    if base.route_table().get(&schema.target().name).is_none() {
        define_schema(&mut base, schema)?;
    }
    let target = &schema.target().name;
    let folds = (0..records.len())
        .into_par_iter()
        .map(|held_out| {
            let mut mesh = base.clone();
            for (i, r) in records.iter().enumerate() {
                if i != held_out {
                    train_record(&mut mesh, schema, r)?;
                }
            }
            let record = &records[held_out];
            let expected = record.get(target).expect("checked complete").clone();
            Ok(
                match predict(&mesh, schema, &record.inputs_of(schema), &[]) {
                    Ok(p) => FoldOutcome {
                        index: held_out,
                        correct: p.value == expected,
                        expected,
                        predicted: Some(p.value),
                        error: None,
                    },
                    Err(e @ Error::NoEvidence) => FoldOutcome {
                        index: held_out,
                        expected,
                        predicted: None,
                        error: Some(e.to_string()),
                        correct: false,
                    },
                    Err(e) => return Err(e),
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LooReport {
        target: target.clone(),
        numeric: is_mean_kind(schema.target().kind),
        folds,
    })
}
