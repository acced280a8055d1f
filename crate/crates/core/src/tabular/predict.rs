use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::schema::{Record, Schema};
use super::{bias_rules, is_mean_kind};
use crate::config::RoundingMode;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, NeuronId, SubnetId, SubnetRole};
use crate::value::{Decimal, Scalar, Value, ValueKind};

/// Result of a nearest-value lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Nearest {
    pub neuron: NeuronId,
    pub distance: Scalar,
    pub exact: bool,
}

/// Up to `k` members of `subnet` closest to `v`: the exact match first, then
/// by distance, smaller axis value, smaller id.
pub fn nearest_neurons(mesh: &Mesh, subnet: SubnetId, v: &Value, k: usize) -> Result<Vec<Nearest>> {
    if mesh.subnet(subnet)?.neurons.is_empty() {
        return Err(Error::EmptySubnet(subnet));
    }
    let exact = mesh.find_value(subnet, v);
    let mut found: Vec<Nearest> = exact
        .map(|neuron| Nearest {
            neuron,
            distance: Scalar::from_int(0),
            exact: true,
        })
        .into_iter()
        .collect();
    if found.len() >= k {
        return Ok(found);
    }
    if v.axis().is_none() {
        return if found.is_empty() {
            Err(Error::NoAxisForCategorical(v.to_string()))
        } else {
            Ok(found)
        };
    }
    let mut ranked: Vec<(Scalar, Scalar, NeuronId)> = mesh
        .members(subnet)?
        .filter(|n| Some(n.id) != exact)
        .filter_map(|n| Some((v.distance(&n.payload)?, n.payload.axis()?, n.id)))
        .collect();
    ranked.sort();
    found.extend(
        ranked
            .into_iter()
            .take(k - found.len())
            .map(|(distance, _, neuron)| Nearest {
                neuron,
                distance,
                exact: false,
            }),
    );
    if found.is_empty() {
        return Err(Error::EmptySubnet(subnet));
    }
    Ok(found)
}

/// The member of `subnet` equal to `v`, or else the one closest to it.
pub fn nearest_neuron(mesh: &Mesh, subnet: SubnetId, v: &Value) -> Result<Nearest> {
    Ok(nearest_neurons(mesh, subnet, v, 1)?.remove(0))
}

/// Neurons of `other` connected to `anchor` that share at least one target
/// neuron with it, by id.
pub fn candidate_set(
    mesh: &Mesh,
    anchor: NeuronId,
    other: SubnetId,
    target: SubnetId,
) -> Result<Vec<NeuronId>> {
    if mesh.subnet(other)?.role != SubnetRole::Attribute {
        return Err(Error::NotAttributeSubnet(other));
    }
    let anchor_targets = mesh.targets_of(anchor, target)?;
    let mut out = Vec::new();
    for n in mesh.neighbors(anchor, Some(other))? {
        if !mesh.targets_of(n, target)?.is_disjoint(&anchor_targets) {
            out.push(n);
        }
    }
    Ok(out)
}

/// A target neuron chosen for one (selected, anchor) pair, with the summed
/// weight and occurrences of its bonds to the two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vote {
    pub neuron: NeuronId,
    pub value: Value,
    pub weight: f64,
    pub occurrences: u64,
}

fn bond(mesh: &Mesh, a: NeuronId, b: NeuronId) -> (f64, u64) {
    mesh.connections_between(a.into(), b.into())
        .fold((f64::INFINITY, 0), |(w, o), c| {
            (w.min(c.weight), o + c.occurrences)
        })
}

/// Resolves the target neuron both `selected` and `anchor` point at. Several
/// shared targets are ranked by minimum summed weight, then maximum
/// occurrences, then smallest id.
pub fn resolve_vote(
    mesh: &Mesh,
    selected: NeuronId,
    anchor: NeuronId,
    target: SubnetId,
) -> Result<Vote> {
    let shared: BTreeSet<NeuronId> = mesh
        .targets_of(selected, target)?
        .intersection(&mesh.targets_of(anchor, target)?)
        .copied()
        .collect();
    let best = shared
        .into_iter()
        .map(|t| {
            let (ws, os) = bond(mesh, selected, t);
            let (wa, oa) = bond(mesh, anchor, t);
            (t, ws + wa, os + oa)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)))
        .ok_or(Error::EmptyIntersection { selected, anchor })?;
    Ok(Vote {
        neuron: best.0,
        value: mesh.payload(best.0)?.clone(),
        weight: best.1,
        occurrences: best.2,
    })
}

/// One entry of a plurality or mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ballot {
    pub value: Value,
    pub neuron: Option<NeuronId>,
    pub weight: f64,
    pub occurrences: u64,
}

impl Ballot {
    pub fn plain(value: Value) -> Self {
        Self {
            value,
            neuron: None,
            weight: 0.0,
            occurrences: 0,
        }
    }
}

impl From<Vote> for Ballot {
    fn from(v: Vote) -> Self {
        Self {
            value: v.value,
            neuron: Some(v.neuron),
            weight: v.weight,
            occurrences: v.occurrences,
        }
    }
}

/// Most frequent value. Ties: minimum summed weight, maximum summed
/// occurrences, smallest neuron id, smallest value.
fn plurality(ballots: &[Ballot]) -> Option<Ballot> {
    let mut groups: BTreeMap<&Value, Ballot> = BTreeMap::new();
    let mut counts: BTreeMap<&Value, usize> = BTreeMap::new();
    for b in ballots {
        *counts.entry(&b.value).or_default() += 1;
        groups
            .entry(&b.value)
            .and_modify(|g| {
                g.weight += b.weight;
                g.occurrences += b.occurrences;
                g.neuron = match (g.neuron, b.neuron) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
            })
            .or_insert_with(|| b.clone());
    }
    groups
        .values()
        .max_by(|gx, gy| {
            counts[&gx.value]
                .cmp(&counts[&gy.value])
                .then(gy.weight.total_cmp(&gx.weight))
                .then(gx.occurrences.cmp(&gy.occurrences))
                .then(match (gx.neuron, gy.neuron) {
                    (Some(a), Some(b)) => b.cmp(&a),
                    _ => Ordering::Equal,
                })
                .then(gy.value.cmp(&gx.value))
        })
        .cloned()
}

fn mean_precision(kind: ValueKind) -> u8 {
    match kind {
        ValueKind::Decimal(p) => p,
        _ => 0,
    }
}

fn scaled_at(value: &Value, precision: u8) -> i128 {
    let s = value.axis().expect("numeric value");
    s.scaled * 10i128.pow(u32::from(precision.saturating_sub(s.precision)))
}

fn numeric_value(kind: ValueKind, scaled: i128) -> Result<Value> {
    let scaled =
        i64::try_from(scaled).map_err(|_| Error::InvalidRange(format!("{scaled} overflows")))?;
    Ok(match kind {
        ValueKind::Decimal(p) => Value::decimal(scaled, p),
        _ => Value::Integer(scaled),
    })
}

/// Combines anchor results: the arithmetic mean for integer and decimal
/// kinds (at the kind's precision), plurality otherwise.
pub fn aggregate(ballots: &[Ballot], kind: ValueKind, rounding: RoundingMode) -> Result<Value> {
    if ballots.is_empty() {
        return Err(Error::EmptyVotes);
    }
    if ballots.iter().any(|b| b.value.kind() != kind) {
        return Err(Error::MixedKinds);
    }
    if !is_mean_kind(kind) {
        return Ok(plurality(ballots).expect("non-empty").value);
    }
    let p = mean_precision(kind);
    let sum: i128 = ballots.iter().map(|b| scaled_at(&b.value, p)).sum();
    numeric_value(kind, rounding.div(sum, ballots.len() as i128))
}

fn apply_bias(
    base: &Value,
    kind: ValueKind,
    adjustments: &[Decimal],
    rounding: RoundingMode,
) -> Result<Value> {
    let p = mean_precision(kind);
    let q = adjustments
        .iter()
        .map(|d| d.precision)
        .max()
        .unwrap_or(0)
        .max(p);
    let total: i128 = scaled_at(base, q)
        + adjustments
            .iter()
            .map(|d| i128::from(d.scaled) * 10i128.pow(u32::from(q - d.precision)))
            .sum::<i128>();
    numeric_value(kind, rounding.div(total, 10i128.pow(u32::from(q - p))))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Traced {
    pub neuron: NeuronId,
    pub value: Value,
}

impl fmt::Display for Traced {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.neuron, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnchorPick {
    pub neuron: Traced,
    pub exact: bool,
    pub distance: Scalar,
}

/// Evidence from one other input attribute for one anchor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTrace {
    pub attribute: String,
    pub input: Value,
    pub candidates: Vec<Traced>,
    pub selected: Option<Traced>,
    pub shared_targets: Vec<Traced>,
    pub vote: Option<Vote>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorTrace {
    pub attribute: String,
    pub input: Value,
    pub anchor: Option<AnchorPick>,
    /// Why no anchor was found, when none was.
    pub skipped: Option<String>,
    pub pairs: Vec<PairTrace>,
    pub result: Option<Ballot>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionTrace {
    pub anchors: Vec<AnchorTrace>,
    pub base: Value,
    pub bias: Vec<(String, Decimal)>,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub value: Value,
    pub trace: PredictionTrace,
}

fn traced(mesh: &Mesh, n: NeuronId) -> Result<Traced> {
    Ok(Traced {
        neuron: n,
        value: mesh.payload(n)?.clone(),
    })
}

/// Member of `candidates` equal to `v`, else the closest one.
fn select_nearest(mesh: &Mesh, candidates: &[NeuronId], v: &Value) -> Result<Option<NeuronId>> {
    let mut best: Option<(Scalar, Scalar, NeuronId)> = None;
    for &n in candidates {
        let payload = mesh.payload(n)?;
        if payload == v {
            return Ok(Some(n));
        }
        let (Some(d), Some(axis)) = (v.distance(payload), payload.axis()) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| (d, axis, n) < *b) {
            best = Some((d, axis, n));
        }
    }
    Ok(best.map(|b| b.2))
}

/// Predicts the target of `partial` from the mesh, then adds the
/// adjustments of the active bias tags.
///
/// Each input value picks an anchor neuron (exact or nearest) in its subnet.
/// For every other input, the anchor's candidate neurons in that subnet are
/// narrowed to the one nearest the given value, and the target neuron it
/// shares with the anchor is that input's vote. The anchor's result is the
/// plurality of its votes, and the anchor results are aggregated.
pub fn predict(
    mesh: &Mesh,
    schema: &Schema,
    partial: &Record,
    bias_tags: &[&str],
) -> Result<Prediction> {
    schema.check_inputs(partial)?;
    let target_attr = schema.target();
    let target = mesh.route(&target_attr.name)?;
    let adjustments = if bias_tags.is_empty() {
        Vec::new()
    } else {
        if !is_mean_kind(target_attr.kind) {
            return Err(Error::BiasOnCategorical);
        }
        let rules = bias_rules(mesh)?;
        bias_tags
            .iter()
            .map(|t| {
                rules
                    .get(*t)
                    .map(|r| (r.tag.clone(), r.adjustment))
                    .ok_or_else(|| Error::UnknownBiasTag((*t).to_string()))
            })
            .collect::<Result<Vec<_>>>()?
    };

    let inputs: Vec<(&str, SubnetId, &Value)> = schema
        .inputs()
        .map(|a| {
            Ok((
                a.name.as_str(),
                mesh.route(&a.name)?,
                partial.get(&a.name).expect("checked"),
            ))
        })
        .collect::<Result<_>>()?;

    let mut anchors = Vec::new();
    for (i, &(name, subnet, v)) in inputs.iter().enumerate() {
        let picks = match nearest_neurons(mesh, subnet, v, mesh.config().nearest_k) {
            Ok(picks) => picks,
            Err(e @ (Error::NoAxisForCategorical(_) | Error::EmptySubnet(_))) => {
                anchors.push(AnchorTrace {
                    attribute: name.to_string(),
                    input: v.clone(),
                    anchor: None,
                    skipped: Some(e.to_string()),
                    pairs: Vec::new(),
                    result: None,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        for pick in picks {
            let anchor = pick.neuron;
            let anchor_targets = mesh.targets_of(anchor, target)?;
            let mut pairs = Vec::new();
            let mut votes = Vec::new();
            for (j, &(other_name, other, other_v)) in inputs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let candidates = candidate_set(mesh, anchor, other, target)?;
                let selected = select_nearest(mesh, &candidates, other_v)?;
                let (shared, vote) = match selected {
                    Some(sel) => {
                        let shared: Vec<NeuronId> = mesh
                            .targets_of(sel, target)?
                            .intersection(&anchor_targets)
                            .copied()
                            .collect();
                        (shared, Some(resolve_vote(mesh, sel, anchor, target)?))
                    }
                    None => (Vec::new(), None),
                };
                votes.extend(vote.clone().map(Ballot::from));
                pairs.push(PairTrace {
                    attribute: other_name.to_string(),
                    input: other_v.clone(),
                    candidates: candidates
                        .iter()
                        .map(|n| traced(mesh, *n))
                        .collect::<Result<_>>()?,
                    selected: selected.map(|n| traced(mesh, n)).transpose()?,
                    shared_targets: shared
                        .iter()
                        .map(|n| traced(mesh, *n))
                        .collect::<Result<_>>()?,
                    vote,
                });
            }
            anchors.push(AnchorTrace {
                attribute: name.to_string(),
                input: v.clone(),
                anchor: Some(AnchorPick {
                    neuron: traced(mesh, anchor)?,
                    exact: pick.exact,
                    distance: pick.distance,
                }),
                skipped: None,
                pairs,
                result: plurality(&votes),
            });
        }
    }

    let results: Vec<Ballot> = anchors.iter().filter_map(|a| a.result.clone()).collect();
    if results.is_empty() {
        return Err(Error::NoEvidence);
    }
    let rounding = mesh.config().rounding;
    let base = aggregate(&results, target_attr.kind, rounding)?;
    let value = if adjustments.is_empty() {
        base.clone()
    } else {
        let ds: Vec<Decimal> = adjustments.iter().map(|(_, d)| *d).collect();
        apply_bias(&base, target_attr.kind, &ds, rounding)?
    };
    Ok(Prediction {
        value: value.clone(),
        trace: PredictionTrace {
            anchors,
            base,
            bias: adjustments,
            value,
        },
    })
}

fn list<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for PredictionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut results = Vec::new();
        for a in &self.anchors {
            match (&a.anchor, &a.skipped) {
                (Some(p), _) => writeln!(
                    f,
                    "anchor {}={} -> {} ({}, distance {})",
                    a.attribute,
                    a.input,
                    p.neuron,
                    if p.exact { "exact" } else { "nearest" },
                    p.distance
                )?,
                (None, reason) => {
                    writeln!(
                        f,
                        "anchor {}={} skipped: {}",
                        a.attribute,
                        a.input,
                        reason.as_deref().unwrap_or("-")
                    )?;
                    continue;
                }
            }
            for p in &a.pairs {
                writeln!(f, "  with {}={}", p.attribute, p.input)?;
                writeln!(f, "    candidates [{}]", list(&p.candidates))?;
                match (&p.selected, &p.vote) {
                    (Some(s), Some(v)) => {
                        writeln!(f, "    selected {s}")?;
                        writeln!(f, "    shared targets [{}]", list(&p.shared_targets))?;
                        writeln!(
                            f,
                            "    vote {} {} (weight {}, occurrences {})",
                            v.neuron, v.value, v.weight, v.occurrences
                        )?;
                    }
                    _ => writeln!(f, "    no vote")?,
                }
            }
            match &a.result {
                Some(r) => {
                    writeln!(f, "  result {}", r.value)?;
                    results.push(r.value.to_string());
                }
                None => writeln!(f, "  no result")?,
            }
        }
        writeln!(f, "aggregate [{}] -> {}", results.join(", "), self.base)?;
        for (tag, d) in &self.bias {
            writeln!(f, "bias {tag} {}", d.to_signed_string())?;
        }
        writeln!(f, "value {}", self.value)
    }
}
