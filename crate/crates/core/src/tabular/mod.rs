//! Tabular learning: schema subnets, record training, prediction with traces,
//! bias rules and leave-one-out evaluation.

mod evaluate;
mod predict;
mod schema;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use evaluate::{evaluate_loo, FoldOutcome, LooReport};
pub use predict::{
    aggregate, candidate_set, nearest_neuron, nearest_neurons, predict, resolve_vote, AnchorPick,
    AnchorTrace, Ballot, Nearest, PairTrace, Prediction, PredictionTrace, Vote,
};
pub use schema::{Attribute, AttributeRole, Record, Schema};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::mesh::{label_set, EndpointRef, Mesh, NeuronId, SubnetRole};
use crate::prior::{self, PriorCatalog};
use crate::value::{Decimal, Value};

pub const IF_THEN: &str = "If...Then";
pub const BIAS_SUBNET: &str = "bias";
const SCHEMA_KEY: &str = "schema";

/// Creates one subnet per attribute (the target with role target) and routes
/// each attribute name to it. The schema text is kept in the mesh metadata.
pub fn define_schema(mesh: &mut Mesh, schema: &Schema) -> Result<()> {
    for a in schema.attributes() {
        let role = match a.role {
            AttributeRole::Input => SubnetRole::Attribute,
            AttributeRole::Target => SubnetRole::Target,
        };
        let subnet = mesh.create_subnet(&a.name, role)?;
        mesh.register_route(&a.name, subnet)?;
    }
    mesh.set_metadata(SCHEMA_KEY, schema.to_string());
    Ok(())
}

/// The schema stored by [`define_schema`].
pub fn stored_schema(mesh: &Mesh) -> Result<Schema> {
    mesh.metadata(SCHEMA_KEY)
        .ok_or_else(|| Error::SchemaMismatch("mesh has no schema".into()))?
        .parse()
}

/// A fresh mesh with the prior knowledge the schema needs and its attribute
/// subnets.
pub fn init_mesh(config: EngineConfig, schema: &Schema) -> Result<Mesh> {
    let mut mesh = Mesh::with_config(config)?;
    prior::build_for_kinds(&mut mesh, &schema.kinds())?;
    define_schema(&mut mesh, schema)?;
    Ok(mesh)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainReport {
    pub neurons_created: usize,
    pub connections_created: usize,
    pub connections_updated: usize,
}

impl std::ops::AddAssign for TrainReport {
    fn add_assign(&mut self, rhs: Self) {
        self.neurons_created += rhs.neurons_created;
        self.connections_created += rhs.connections_created;
        self.connections_updated += rhs.connections_updated;
    }
}

/// Stores a complete record: each value goes to its attribute subnet, every
/// pair of the record's neurons is connected with "If...Then" (directed in
/// schema order), and new neurons are linked to prior knowledge.
pub fn train_record(mesh: &mut Mesh, schema: &Schema, record: &Record) -> Result<TrainReport> {
    schema.check_complete(record)?;
    let catalog = PriorCatalog::from_mesh(mesh);
    let mut report = TrainReport::default();
    let mut ids: Vec<NeuronId> = Vec::with_capacity(schema.attributes().len());
    for a in schema.attributes() {
        let subnet = mesh.route(&a.name)?;
        let value = record.get(&a.name).expect("checked complete").clone();
        let (n, created) = mesh.insert_value(subnet, value)?;
        if created {
            report.neurons_created += 1;
            prior::link_neuron_to_prior(mesh, &catalog, n)?;
        }
        ids.push(n);
    }
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let id = mesh.connect(&[(*a).into(), (*b).into()], label_set([IF_THEN]), true)?;
            if mesh.connection(id)?.occurrences == 1 {
                report.connections_created += 1;
            } else {
                report.connections_updated += 1;
            }
        }
    }
    Ok(report)
}

/// Feedback for a verified prediction: stored exactly like training data.
pub fn confirm(mesh: &mut Mesh, schema: &Schema, record: &Record) -> Result<TrainReport> {
    train_record(mesh, schema, record)
}

pub fn train_all<'a>(
    mesh: &mut Mesh,
    schema: &Schema,
    records: impl IntoIterator<Item = &'a Record>,
) -> Result<TrainReport> {
    let mut total = TrainReport::default();
    for r in records {
        total += train_record(mesh, schema, r)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasRule {
    pub tag: String,
    pub adjustment: Decimal,
}

impl BiasRule {
    pub fn new(tag: impl Into<String>, adjustment: Decimal) -> Self {
        Self {
            tag: tag.into(),
            adjustment,
        }
    }
}

/// Stores a bias rule as a token neuron in the bias subnet, linked to the
/// target subnet by a connection labeled with the signed adjustment.
pub fn add_bias_rule(mesh: &mut Mesh, schema: &Schema, rule: &BiasRule) -> Result<NeuronId> {
    let target = schema.target();
    if !is_mean_kind(target.kind) {
        return Err(Error::BiasOnCategorical);
    }
    let target_subnet = mesh.route(&target.name)?;
    let bias = mesh.ensure_subnet(BIAS_SUBNET, SubnetRole::Bias)?;
    let (n, created) = mesh.insert_value(bias, Value::token(rule.tag.clone()))?;
    if !created {
        return Err(Error::DuplicateBiasTag(rule.tag.clone()));
    }
    mesh.connect_once(
        &[n.into(), EndpointRef::Subnet(target_subnet)],
        label_set([rule.adjustment.to_signed_string()]),
        true,
    )?;
    Ok(n)
}

/// All stored bias rules, by tag.
pub fn bias_rules(mesh: &Mesh) -> Result<BTreeMap<String, BiasRule>> {
    let mut rules = BTreeMap::new();
    let Some(bias) = mesh.subnet_id(BIAS_SUBNET) else {
        return Ok(rules);
    };
    for n in mesh.members(bias)? {
        let Value::Token(tag) = &n.payload else {
            continue;
        };
        let adjustment = mesh
            .connections_of(n.id.into())
            .filter(|c| {
                c.endpoints
                    .iter()
                    .any(|e| matches!(e, EndpointRef::Subnet(_)))
            })
            .flat_map(|c| c.labels.iter())
            .find_map(|l| l.parse::<Decimal>().ok());
        if let Some(adjustment) = adjustment {
            rules.insert(
                tag.clone(),
                BiasRule {
                    tag: tag.clone(),
                    adjustment,
                },
            );
        }
    }
    Ok(rules)
}

/// Target kinds aggregated by arithmetic mean; every other kind by plurality.
pub(crate) fn is_mean_kind(kind: crate::value::ValueKind) -> bool {
    matches!(
        kind,
        crate::value::ValueKind::Integer | crate::value::ValueKind::Decimal(_)
    )
}
