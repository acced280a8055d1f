//! Brute-force reference predictor for numeric-input, categorical-target
//! tables. Works on raw rows with its own parsing, never touching the
//! engine: co-occurrence counts stand in for connections.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// Inputs in tenths, plus the class name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub inputs: Vec<i64>,
    pub class: String,
}

fn tenths(text: &str) -> i64 {
    let (whole, frac) = text.trim().split_once('.').unwrap_or((text.trim(), "0"));
    assert_eq!(frac.len(), 1, "one decimal place expected: {text}");
    whole.parse::<i64>().unwrap() * 10 + frac.parse::<i64>().unwrap()
}

pub fn read_rows(csv_text: &str) -> Vec<Row> {
    csv_text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let fields: Vec<&str> = l.split(',').collect();
            let (class, inputs) = fields.split_last().unwrap();
            Row {
                inputs: inputs.iter().map(|f| tenths(f)).collect(),
                class: class.trim().to_string(),
            }
        })
        .collect()
}

fn weight(occurrences: usize) -> f64 {
    (1.0 - 0.25 * (occurrences as f64 - 1.0)).max(0.0)
}

struct Table<'a> {
    rows: Vec<&'a Row>,
    /// First-appearance rank of each class (stands in for neuron ids).
    class_rank: BTreeMap<&'a str, usize>,
}

impl<'a> Table<'a> {
    fn new(rows: Vec<&'a Row>) -> Self {
        let mut class_rank = BTreeMap::new();
        for r in &rows {
            let next = class_rank.len();
            class_rank.entry(r.class.as_str()).or_insert(next);
        }
        Self { rows, class_rank }
    }

    fn values(&self, attr: usize) -> BTreeSet<i64> {
        self.rows.iter().map(|r| r.inputs[attr]).collect()
    }

    /// Rows holding value `x` at `a` and `y` at `b`.
    fn together(&self, a: usize, x: i64, b: usize, y: i64) -> usize {
        self.rows
            .iter()
            .filter(|r| r.inputs[a] == x && r.inputs[b] == y)
            .count()
    }

    fn with_class(&self, a: usize, x: i64, class: &str) -> usize {
        self.rows
            .iter()
            .filter(|r| r.inputs[a] == x && r.class == class)
            .count()
    }

    fn classes_of(&self, a: usize, x: i64) -> BTreeSet<&'a str> {
        self.rows
            .iter()
            .filter(|r| r.inputs[a] == x)
            .map(|r| r.class.as_str())
            .collect()
    }

    fn nearest(values: &BTreeSet<i64>, x: i64) -> Option<i64> {
        values.iter().copied().min_by_key(|v| ((v - x).abs(), *v))
    }
}

/// (class, summed weight, summed occurrences) chosen by a plurality with
/// the min-weight, max-occurrence, first-seen tie chain.
fn plurality<'a>(
    votes: &[(&'a str, f64, usize)],
    rank: &BTreeMap<&str, usize>,
) -> Option<(&'a str, f64, usize)> {
    let mut groups: BTreeMap<&str, (usize, f64, usize)> = BTreeMap::new();
    for (c, w, o) in votes {
        let g = groups.entry(c).or_insert((0, 0.0, 0));
        g.0 += 1;
        g.1 += w;
        g.2 += o;
    }
    let mut best: Option<(&str, (usize, f64, usize))> = None;
    for (c, g) in groups {
        let better = match &best {
            None => true,
            Some((bc, bg)) => {
                g.0 > bg.0
                    || (g.0 == bg.0 && g.1 < bg.1)
                    || (g.0 == bg.0 && g.1 == bg.1 && g.2 > bg.2)
                    || (g.0 == bg.0 && g.1 == bg.1 && g.2 == bg.2 && rank[c] < rank[bc])
            }
        };
        if better {
            best = Some((c, g));
        }
    }
    best.map(|(c, g)| {
        let c = votes.iter().find(|v| v.0 == c).unwrap().0;
        (c, g.1, g.2)
    })
}

/// Predicted class for `inputs` from `training`, or `None` without evidence.
pub fn predict(training: &[&Row], inputs: &[i64]) -> Option<String> {
    let t = Table::new(training.to_vec());
    let k = inputs.len();
    let mut results = Vec::new();
    for i in 0..k {
        let anchor = Table::nearest(&t.values(i), inputs[i])?;
        let anchor_classes = t.classes_of(i, anchor);
        let mut votes = Vec::new();
        for j in (0..k).filter(|j| *j != i) {
            let candidates: BTreeSet<i64> = t
                .values(j)
                .into_iter()
                .filter(|y| t.together(i, anchor, j, *y) > 0)
                .filter(|y| !t.classes_of(j, *y).is_disjoint(&anchor_classes))
                .collect();
            let Some(sel) = Table::nearest(&candidates, inputs[j]) else {
                continue;
            };
            let shared: Vec<&str> = t
                .classes_of(j, sel)
                .intersection(&anchor_classes)
                .copied()
                .collect();
            let vote = shared
                .iter()
                .map(|c| {
                    let (os, oa) = (t.with_class(j, sel, c), t.with_class(i, anchor, c));
                    (*c, weight(os) + weight(oa), os + oa)
                })
                .min_by(|a, b| {
                    a.1.total_cmp(&b.1)
                        .then(b.2.cmp(&a.2))
                        .then(t.class_rank[a.0].cmp(&t.class_rank[b.0]))
                })?;
            votes.push(vote);
        }
        if let Some(r) = plurality(&votes, &t.class_rank) {
            results.push(r);
        }
    }
    plurality(&results, &t.class_rank).map(|(c, _, _)| c.to_string())
}

/// Leave-one-out predictions, in row order.
pub fn leave_one_out(rows: &[Row]) -> Vec<Option<String>> {
    (0..rows.len())
        .map(|held| {
            let training: Vec<&Row> = rows
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != held)
                .map(|(_, r)| r)
                .collect();
            predict(&training, &rows[held].inputs)
        })
        .collect()
}
