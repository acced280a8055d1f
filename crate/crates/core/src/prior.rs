//! Prior-knowledge subnets: number systems, months, the hour/minute time
//! structure and the operator subnets, plus their interconnections.
//!
//! Builders are idempotent. Structural links are created with
//! [`Mesh::connect_once`], so rebuilding never counts as a new observation.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::mesh::{label_set, EndpointRef, Mesh, NeuronId, SubnetId, SubnetRole};
use crate::value::{Decimal, Value, ValueKind};

pub const INTEGERS: &str = "prior:integers";
pub const DECIMALS: &str = "prior:decimals";
pub const MONTHS: &str = "prior:months";
pub const TIME: &str = "prior:time";
pub const ARITHMETIC: &str = "op:arithmetic";
pub const RELATIONAL: &str = "op:relational";

pub const LESS_THAN: &str = "less than";
pub const NEXT: &str = "next";

pub const ARITHMETIC_OPERATORS: [&str; 4] = ["+", "−", "×", "÷"];
pub const RELATIONAL_OPERATORS: [&str; 6] = ["<", ">", "=", "≤", "≥", "≠"];

/// Ids of the prior-knowledge subnets present in a mesh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PriorCatalog {
    pub integer_subnet: Option<SubnetId>,
    pub decimal_subnet: Option<SubnetId>,
    pub month_subnet: Option<SubnetId>,
    pub time_subnet: Option<SubnetId>,
    pub arithmetic_subnet: Option<SubnetId>,
    pub relational_subnet: Option<SubnetId>,
}

impl PriorCatalog {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        Self {
            integer_subnet: mesh.subnet_id(INTEGERS),
            decimal_subnet: mesh.subnet_id(DECIMALS),
            month_subnet: mesh.subnet_id(MONTHS),
            time_subnet: mesh.subnet_id(TIME),
            arithmetic_subnet: mesh.subnet_id(ARITHMETIC),
            relational_subnet: mesh.subnet_id(RELATIONAL),
        }
    }

    fn prior_subnets(&self) -> impl Iterator<Item = SubnetId> {
        [
            self.integer_subnet,
            self.decimal_subnet,
            self.month_subnet,
            self.time_subnet,
        ]
        .into_iter()
        .flatten()
    }

    /// Whether values of `kind` can be linked into this catalog.
    pub fn supports(&self, kind: ValueKind) -> Result<()> {
        let need = |present: Option<SubnetId>, name| {
            present.map(|_| ()).ok_or(Error::MissingPriorSubnet(name))
        };
        match kind {
            ValueKind::Integer => need(self.integer_subnet, INTEGERS),
            ValueKind::Decimal(_) => need(self.decimal_subnet, DECIMALS),
            ValueKind::Month => need(self.month_subnet, MONTHS),
            ValueKind::DateDM => {
                need(self.integer_subnet, INTEGERS)?;
                need(self.month_subnet, MONTHS)
            }
            ValueKind::TimeHM => {
                need(self.integer_subnet, INTEGERS)?;
                need(self.time_subnet, TIME)
            }
            _ => Ok(()),
        }
    }
}

fn digit_label(k: usize, m: usize) -> String {
    format!("part {k} of {m}")
}

/// Integers `min..=max`, chained low to high by "less than", with every
/// multi-digit value linked from its digit neurons ("part k of m", most
/// significant digit first).
pub fn build_integer_subnet(mesh: &mut Mesh, min: i64, max: i64) -> Result<SubnetId> {
    if min > max {
        return Err(Error::InvalidRange(format!("integers {min}..={max}")));
    }
    let subnet = mesh.ensure_subnet(INTEGERS, SubnetRole::Prior)?;
    let mut previous: Option<NeuronId> = None;
    for i in min..=max {
        let (n, _) = mesh.insert_value(subnet, Value::Integer(i))?;
        if let Some(p) = previous {
            mesh.connect_once(&[p.into(), n.into()], label_set([LESS_THAN]), true)?;
        }
        previous = Some(n);
    }
    for i in min..=max {
        let digits = i.unsigned_abs().to_string();
        if digits.len() < 2 {
            continue;
        }
        let n = mesh
            .find_value(subnet, &Value::Integer(i))
            .expect("inserted above");
        for (k, ch) in digits.chars().enumerate() {
            let d = i64::from(ch.to_digit(10).expect("ascii digit"));
            if let Some(digit) = mesh.find_value(subnet, &Value::Integer(d)) {
                let label = label_set([digit_label(k + 1, digits.len())]);
                mesh.connect_once(&[digit.into(), n.into()], label, true)?;
            }
        }
    }
    Ok(subnet)
}

/// Decimal grid `min, min+step, ...` up to `max`, chained by "less than".
pub fn build_decimal_subnet(
    mesh: &mut Mesh,
    min: Decimal,
    max: Decimal,
    step: Decimal,
) -> Result<SubnetId> {
    if min.precision != max.precision || min.precision != step.precision {
        return Err(Error::InvalidRange(
            "decimal bounds and step must share a precision".into(),
        ));
    }
    if step.scaled <= 0 || min.scaled > max.scaled {
        return Err(Error::InvalidRange(format!(
            "decimals {min}..={max} step {step}"
        )));
    }
    if let Some(existing) = mesh.subnet_id(DECIMALS) {
        let precision = mesh.members(existing)?.find_map(|n| match n.payload {
            Value::Decimal(d) => Some(d.precision),
            _ => None,
        });
        if precision.is_some_and(|p| p != min.precision) {
            return Err(Error::InvalidRange(format!(
                "decimal prior already holds precision {}",
                precision.unwrap_or_default()
            )));
        }
    }
    let subnet = mesh.ensure_subnet(DECIMALS, SubnetRole::Prior)?;
    let mut previous: Option<NeuronId> = None;
    let mut scaled = min.scaled;
    while scaled <= max.scaled {
        let (n, _) = mesh.insert_value(subnet, Value::decimal(scaled, min.precision))?;
        if let Some(p) = previous {
            mesh.connect_once(&[p.into(), n.into()], label_set([LESS_THAN]), true)?;
        }
        previous = Some(n);
        scaled += step.scaled;
    }
    Ok(subnet)
}

/// January to December, each linked to the next, December back to January.
pub fn build_month_subnet(mesh: &mut Mesh) -> Result<SubnetId> {
    let subnet = mesh.ensure_subnet(MONTHS, SubnetRole::Prior)?;
    let ids: Vec<NeuronId> = (1..=12)
        .map(|m| mesh.insert_value(subnet, Value::Month(m)).map(|(n, _)| n))
        .collect::<Result<_>>()?;
    for (i, n) in ids.iter().enumerate() {
        let next = ids[(i + 1) % ids.len()];
        mesh.connect_once(&[(*n).into(), next.into()], label_set([NEXT]), true)?;
    }
    Ok(subnet)
}

/// The hour/minute time structure. No seconds.
pub fn build_time_subnet(mesh: &mut Mesh) -> Result<SubnetId> {
    let subnet = mesh.ensure_subnet(TIME, SubnetRole::Prior)?;
    let (hour, _) = mesh.insert_value(subnet, Value::token("hour"))?;
    let (minute, _) = mesh.insert_value(subnet, Value::token("minute"))?;
    mesh.connect_once(&[hour.into(), minute.into()], BTreeSet::new(), false)?;
    Ok(subnet)
}

/// Arithmetic and relational operator subnets, fully connected inside,
/// bidirectionally.
pub fn build_operator_subnets(mesh: &mut Mesh) -> Result<(SubnetId, SubnetId)> {
    let arithmetic = operator_subnet(mesh, ARITHMETIC, &ARITHMETIC_OPERATORS)?;
    let relational = operator_subnet(mesh, RELATIONAL, &RELATIONAL_OPERATORS)?;
    Ok((arithmetic, relational))
}

fn operator_subnet(mesh: &mut Mesh, name: &str, symbols: &[&str]) -> Result<SubnetId> {
    let subnet = mesh.ensure_subnet(name, SubnetRole::Operator)?;
    let ids: Vec<NeuronId> = symbols
        .iter()
        .map(|s| {
            mesh.insert_value(subnet, Value::Operator((*s).to_string()))
                .map(|(n, _)| n)
        })
        .collect::<Result<_>>()?;
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            mesh.connect_once(&[(*a).into(), (*b).into()], BTreeSet::new(), false)?;
        }
    }
    Ok(subnet)
}

/// Interconnects the prior subnets: month i with integer i, the hour token
/// with integers 1..=24, the minute token with integers 0..=59 (those
/// present), and each operator subnet with every prior subnet. Returns the
/// number of links in place.
pub fn link_prior(mesh: &mut Mesh, catalog: &PriorCatalog) -> Result<usize> {
    let mut count = 0;
    if catalog.month_subnet.is_some() || catalog.time_subnet.is_some() {
        let ints = catalog
            .integer_subnet
            .ok_or(Error::MissingPriorSubnet(INTEGERS))?;
        if let Some(months) = catalog.month_subnet {
            for m in 1..=12u8 {
                let month = mesh.find_value(months, &Value::Month(m));
                let int = mesh.find_value(ints, &Value::Integer(i64::from(m)));
                if let (Some(month), Some(int)) = (month, int) {
                    mesh.connect_once(&[month.into(), int.into()], label_set(["index"]), false)?;
                    count += 1;
                }
            }
        }
        if let Some(time) = catalog.time_subnet {
            for (unit, range) in [("hour", 1..=24), ("minute", 0..=59)] {
                let Some(token) = mesh.find_value(time, &Value::token(unit)) else {
                    continue;
                };
                for i in range {
                    if let Some(int) = mesh.find_value(ints, &Value::Integer(i)) {
                        mesh.connect_once(&[token.into(), int.into()], label_set([unit]), false)?;
                        count += 1;
                    }
                }
            }
        }
    }
    for op in [catalog.arithmetic_subnet, catalog.relational_subnet]
        .into_iter()
        .flatten()
    {
        for prior in catalog.prior_subnets() {
            mesh.connect_once(
                &[op.into(), prior.into()],
                label_set(["operates on"]),
                false,
            )?;
            count += 1;
        }
    }
    Ok(count)
}

fn integer_bounds(mesh: &Mesh, subnet: SubnetId) -> Result<Option<(i64, i64)>> {
    Ok(mesh
        .members(subnet)?
        .fold(None, |acc, n| match (acc, &n.payload) {
            (None, Value::Integer(i)) => Some((*i, *i)),
            (Some((lo, hi)), Value::Integer(i)) => Some((lo.min(*i), hi.max(*i))),
            (acc, _) => acc,
        }))
}

/// Integer prior neuron for `i`, growing the number line to reach it.
fn ensure_integer(mesh: &mut Mesh, catalog: &PriorCatalog, i: i64) -> Result<NeuronId> {
    let ints = catalog
        .integer_subnet
        .ok_or(Error::MissingPriorSubnet(INTEGERS))?;
    if let Some(n) = mesh.find_value(ints, &Value::Integer(i)) {
        return Ok(n);
    }
    let (lo, hi) = integer_bounds(mesh, ints)?.unwrap_or((i, i));
    build_integer_subnet(mesh, lo.min(i), hi.max(i))?;
    link_prior(mesh, catalog)?;
    Ok(mesh
        .find_value(ints, &Value::Integer(i))
        .expect("range now covers i"))
}

/// Decimal prior neuron for `d`, growing the grid (at `d`'s precision) to
/// reach it.
fn ensure_decimal(mesh: &mut Mesh, catalog: &PriorCatalog, d: Decimal) -> Result<NeuronId> {
    let decimals = catalog
        .decimal_subnet
        .ok_or(Error::MissingPriorSubnet(DECIMALS))?;
    if let Some(n) = mesh.find_value(decimals, &Value::Decimal(d)) {
        return Ok(n);
    }
    let bounds = mesh
        .members(decimals)?
        .fold(None, |acc: Option<(i64, i64)>, n| match n.payload {
            Value::Decimal(x) if x.precision == d.precision => {
                Some(acc.map_or((x.scaled, x.scaled), |(lo, hi)| {
                    (lo.min(x.scaled), hi.max(x.scaled))
                }))
            }
            _ => acc,
        });
    let (lo, hi) = bounds.unwrap_or((d.scaled, d.scaled));
    let p = d.precision;
    build_decimal_subnet(
        mesh,
        Decimal::new(lo.min(d.scaled), p),
        Decimal::new(hi.max(d.scaled), p),
        Decimal::new(1, p),
    )?;
    mesh.find_value(decimals, &Value::Decimal(d))
        .ok_or_else(|| Error::InvalidRange(format!("{d} is off the decimal prior grid")))
}

/// Links one attribute neuron to the prior neurons describing it. Returns
/// the number of links in place.
pub fn link_neuron_to_prior(mesh: &mut Mesh, catalog: &PriorCatalog, n: NeuronId) -> Result<usize> {
    let payload = mesh.payload(n)?.clone();
    catalog.supports(payload.kind())?;
    let mut links: Vec<(NeuronId, &str)> = Vec::new();
    match payload {
        Value::Integer(i) => links.push((ensure_integer(mesh, catalog, i)?, "value")),
        Value::Decimal(d) => links.push((ensure_decimal(mesh, catalog, d)?, "value")),
        Value::Month(m) => {
            let months = catalog.month_subnet.expect("checked by supports");
            if let Some(month) = mesh.find_value(months, &Value::Month(m)) {
                links.push((month, "value"));
            }
        }
        Value::DateDM { day, month } => {
            links.push((ensure_integer(mesh, catalog, i64::from(day))?, "day"));
            let months = catalog.month_subnet.expect("checked by supports");
            if let Some(m) = mesh.find_value(months, &Value::Month(month)) {
                links.push((m, "month"));
            }
        }
        Value::TimeHM { hour, .. } => {
            links.push((ensure_integer(mesh, catalog, i64::from(hour))?, "hour"));
            let time = catalog.time_subnet.expect("checked by supports");
            if let Some(token) = mesh.find_value(time, &Value::token("hour")) {
                links.push((token, "unit"));
            }
        }
        Value::Category(_) | Value::ColorCode(_) | Value::Operator(_) | Value::Token(_) => {}
    }
    for (prior, label) in &links {
        mesh.connect_once(
            &[EndpointRef::Neuron(*prior), n.into()],
            label_set([*label]),
            false,
        )?;
    }
    Ok(links.len())
}

/// Links every neuron of an attribute subnet to prior knowledge.
pub fn link_attribute_to_prior(
    mesh: &mut Mesh,
    attribute_subnet: SubnetId,
    catalog: &PriorCatalog,
) -> Result<usize> {
    let members: Vec<NeuronId> = mesh
        .subnet(attribute_subnet)?
        .neurons
        .iter()
        .copied()
        .collect();
    let mut count = 0;
    for n in members {
        count += link_neuron_to_prior(mesh, catalog, n)?;
    }
    Ok(count)
}

/// Builds whatever prior knowledge values of `kinds` need, plus the operator
/// subnets, and interconnects them.
pub fn build_for_kinds(mesh: &mut Mesh, kinds: &[ValueKind]) -> Result<PriorCatalog> {
    let has = |pred: fn(&ValueKind) -> bool| kinds.iter().any(pred);
    let needs_time = has(|k| *k == ValueKind::TimeHM);
    let needs_months = has(|k| matches!(k, ValueKind::DateDM | ValueKind::Month));
    let needs_ints = needs_time || needs_months || has(|k| *k == ValueKind::Integer);
    if needs_ints {
        build_integer_subnet(mesh, 0, if needs_time { 59 } else { 9 })?;
    }
    if needs_months {
        build_month_subnet(mesh)?;
    }
    if needs_time {
        build_time_subnet(mesh)?;
    }
    let mut precisions: Vec<u8> = kinds
        .iter()
        .filter_map(|k| match k {
            ValueKind::Decimal(p) => Some(*p),
            _ => None,
        })
        .collect();
    precisions.dedup();
    match precisions.as_slice() {
        [] => {}
        [p] => {
            build_decimal_subnet(
                mesh,
                Decimal::new(1, *p),
                Decimal::new(9, *p),
                Decimal::new(1, *p),
            )?;
        }
        _ => {
            return Err(Error::InvalidRange(
                "all decimal attributes must share one precision".into(),
            ))
        }
    }
    build_operator_subnets(mesh)?;
    let catalog = PriorCatalog::from_mesh(mesh);
    link_prior(mesh, &catalog)?;
    Ok(catalog)
}
