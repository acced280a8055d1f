//! The mesh of subnets.
//!
//! A [`Mesh`] owns every neuron, subnet and connection, allocates ordinal ids
//! (never reused), deduplicates payloads per subnet and applies the weight law
//! to repeated connections. The central mechanism is realized as the route
//! table plus `Central`-role subnets plus a transient route log.

mod check;
mod restructure;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::value::Value;

pub use check::InvariantViolation;

macro_rules! ordinal_id {
    ($name:ident) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "#{}", self.0)
            }
        }
    };
}

ordinal_id!(NeuronId);
ordinal_id!(SubnetId);
ordinal_id!(ConnectionId);

/// One end of a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EndpointRef {
    Neuron(NeuronId),
    Subnet(SubnetId),
}

impl fmt::Display for EndpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndpointRef::Neuron(n) => write!(f, "neuron {n}"),
            EndpointRef::Subnet(s) => write!(f, "subnet {s}"),
        }
    }
}

impl From<NeuronId> for EndpointRef {
    fn from(n: NeuronId) -> Self {
        EndpointRef::Neuron(n)
    }
}

impl From<SubnetId> for EndpointRef {
    fn from(s: SubnetId) -> Self {
        EndpointRef::Subnet(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubnetRole {
    Prior,
    Attribute,
    Target,
    Shape,
    Super,
    Label,
    Bias,
    Operator,
    Central,
}

impl fmt::Display for SubnetRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SubnetRole::Prior => "prior",
            SubnetRole::Attribute => "attribute",
            SubnetRole::Target => "target",
            SubnetRole::Shape => "shape",
            SubnetRole::Super => "super",
            SubnetRole::Label => "label",
            SubnetRole::Bias => "bias",
            SubnetRole::Operator => "operator",
            SubnetRole::Central => "central",
        };
        f.write_str(s)
    }
}

/// Connection taxonomy, derived from endpoint types and whether any endpoint
/// lives in a central-mechanism subnet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConnectionKind {
    NeuronNeuronSameSubnet,
    NeuronNeuronCrossSubnet,
    NeuronNeuronCentral,
    SubnetSubnet,
    SubnetSubnetCentral,
    NeuronSubnet,
    NeuronSubnetCentral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NeuronId,
    pub payload: Value,
    pub home_subnets: BTreeSet<SubnetId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subnet {
    pub id: SubnetId,
    pub name: String,
    pub role: SubnetRole,
    pub neurons: BTreeSet<NeuronId>,
    pub parent: Option<SubnetId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub id: ConnectionId,
    /// In observation order; the order is the direction when `directed`.
    pub endpoints: Vec<EndpointRef>,
    pub directed: bool,
    /// Empty set is the null label.
    pub labels: BTreeSet<String>,
    pub weight: f64,
    pub occurrences: u64,
    pub kind: ConnectionKind,
}

impl Connection {
    pub fn has_label(&self, label: &str) -> bool {
        self.labels.contains(label)
    }

    pub fn touches(&self, endpoint: EndpointRef) -> bool {
        self.endpoints.contains(&endpoint)
    }

    pub fn neuron_endpoints(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.endpoints.iter().filter_map(|e| match e {
            EndpointRef::Neuron(n) => Some(*n),
            EndpointRef::Subnet(_) => None,
        })
    }
}

/// Builds a label set from anything string-like.
pub fn label_set<I, S>(labels: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    labels.into_iter().map(Into::into).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ConnectionKey {
    endpoints: Vec<EndpointRef>,
    labels: BTreeSet<String>,
}

impl ConnectionKey {
    fn new(endpoints: &[EndpointRef], labels: &BTreeSet<String>) -> Self {
        let mut endpoints = endpoints.to_vec();
        endpoints.sort_unstable();
        Self {
            endpoints,
            labels: labels.clone(),
        }
    }
}

/// A route lookup performed by the central mechanism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteEvent {
    pub input: String,
    pub subnet: SubnetId,
}

/// Transient buffers of the central mechanism. Never persisted and not part
/// of structural identity.
#[derive(Debug, Default)]
struct Scratch {
    route_log: Mutex<Vec<RouteEvent>>,
}

impl Scratch {
    fn log(&self) -> std::sync::MutexGuard<'_, Vec<RouteEvent>> {
        self.route_log
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

impl Clone for Scratch {
    fn clone(&self) -> Self {
        Scratch {
            route_log: Mutex::new(self.log().clone()),
        }
    }
}

/// The persisted portion of a mesh. Everything else is rebuilt from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshParts {
    pub config: EngineConfig,
    pub subnets: Vec<Subnet>,
    pub neurons: Vec<Neuron>,
    pub connections: Vec<Connection>,
    pub route_table: BTreeMap<String, SubnetId>,
    pub metadata: BTreeMap<String, String>,
    pub next_subnet: u64,
    pub next_neuron: u64,
    pub next_connection: u64,
}

/// Result of [`Mesh::connect_once`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linked {
    pub id: ConnectionId,
    pub created: bool,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    config: EngineConfig,
    subnets: BTreeMap<SubnetId, Subnet>,
    neurons: BTreeMap<NeuronId, Neuron>,
    connections: BTreeMap<ConnectionId, Connection>,
    route_table: BTreeMap<String, SubnetId>,
    metadata: BTreeMap<String, String>,
    next_subnet: u64,
    next_neuron: u64,
    next_connection: u64,

    subnet_names: HashMap<String, SubnetId>,
    values: HashMap<SubnetId, HashMap<Value, NeuronId>>,
    incidence: HashMap<EndpointRef, BTreeSet<ConnectionId>>,
    keys: HashMap<ConnectionKey, ConnectionId>,
    scratch: Scratch,
}

impl Default for Mesh {
    fn default() -> Self {
        Self::with_config(EngineConfig::default()).expect("default config is valid")
    }
}

/// Structural identity: ids, payloads, labels, weights, occurrences, routes.
impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.subnets == other.subnets
            && self.neurons == other.neurons
            && self.connections == other.connections
            && self.route_table == other.route_table
            && self.metadata == other.metadata
            && self.next_subnet == other.next_subnet
            && self.next_neuron == other.next_neuron
            && self.next_connection == other.next_connection
    }
}

impl Mesh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_config(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            subnets: BTreeMap::new(),
            neurons: BTreeMap::new(),
            connections: BTreeMap::new(),
            route_table: BTreeMap::new(),
            metadata: BTreeMap::new(),
            next_subnet: 1,
            next_neuron: 1,
            next_connection: 1,
            subnet_names: HashMap::new(),
            values: HashMap::new(),
            incidence: HashMap::new(),
            keys: HashMap::new(),
            scratch: Scratch::default(),
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    // ---- subnets ----

    pub fn create_subnet(&mut self, name: &str, role: SubnetRole) -> Result<SubnetId> {
        if self.subnet_names.contains_key(name) {
            return Err(Error::DuplicateSubnetName(name.to_string()));
        }
        let id = SubnetId(self.next_subnet);
        self.next_subnet += 1;
        self.subnets.insert(
            id,
            Subnet {
                id,
                name: name.to_string(),
                role,
                neurons: BTreeSet::new(),
                parent: None,
            },
        );
        self.subnet_names.insert(name.to_string(), id);
        self.values.insert(id, HashMap::new());
        Ok(id)
    }

    /// Returns the subnet called `name`, creating it with `role` if absent.
    pub fn ensure_subnet(&mut self, name: &str, role: SubnetRole) -> Result<SubnetId> {
        match self.subnet_id(name) {
            Some(id) => Ok(id),
            None => self.create_subnet(name, role),
        }
    }

    pub fn subnet(&self, id: SubnetId) -> Result<&Subnet> {
        self.subnets.get(&id).ok_or(Error::UnknownSubnet(id))
    }

    pub fn subnet_id(&self, name: &str) -> Option<SubnetId> {
        self.subnet_names.get(name).copied()
    }

    pub fn subnet_named(&self, name: &str) -> Result<&Subnet> {
        let id = self
            .subnet_id(name)
            .ok_or_else(|| Error::UnknownSubnetName(name.to_string()))?;
        self.subnet(id)
    }

    pub fn subnets(&self) -> impl Iterator<Item = &Subnet> {
        self.subnets.values()
    }

    pub fn subnet_len(&self, id: SubnetId) -> Result<usize> {
        Ok(self.subnet(id)?.neurons.len())
    }

    pub fn set_parent(&mut self, child: SubnetId, parent: Option<SubnetId>) -> Result<()> {
        if let Some(p) = parent {
            self.subnet(p)?;
        }
        self.subnets
            .get_mut(&child)
            .ok_or(Error::UnknownSubnet(child))?
            .parent = parent;
        Ok(())
    }

    pub fn children_of(&self, parent: SubnetId) -> impl Iterator<Item = &Subnet> {
        self.subnets
            .values()
            .filter(move |s| s.parent == Some(parent))
    }

    // ---- neurons ----

    /// Stores `value` in `subnet` unless an equal payload is already there.
    pub fn insert_value(&mut self, subnet: SubnetId, value: Value) -> Result<(NeuronId, bool)> {
        let index = self
            .values
            .get_mut(&subnet)
            .ok_or(Error::UnknownSubnet(subnet))?;
        if let Some(existing) = index.get(&value) {
            return Ok((*existing, false));
        }
        let id = NeuronId(self.next_neuron);
        self.next_neuron += 1;
        index.insert(value.clone(), id);
        self.neurons.insert(
            id,
            Neuron {
                id,
                payload: value,
                home_subnets: BTreeSet::from([subnet]),
            },
        );
        self.subnets
            .get_mut(&subnet)
            .expect("indexed subnet exists")
            .neurons
            .insert(id);
        Ok((id, true))
    }

    pub fn find_value(&self, subnet: SubnetId, value: &Value) -> Option<NeuronId> {
        self.values.get(&subnet)?.get(value).copied()
    }

    pub fn neuron(&self, id: NeuronId) -> Result<&Neuron> {
        self.neurons.get(&id).ok_or(Error::UnknownNeuron(id))
    }

    pub fn payload(&self, id: NeuronId) -> Result<&Value> {
        Ok(&self.neuron(id)?.payload)
    }

    pub fn neurons(&self) -> impl Iterator<Item = &Neuron> {
        self.neurons.values()
    }

    /// Member neurons of `subnet` in id order.
    pub fn members(&self, subnet: SubnetId) -> Result<impl Iterator<Item = &Neuron>> {
        let s = self.subnet(subnet)?;
        Ok(s.neurons.iter().map(move |n| &self.neurons[n]))
    }

    // ---- connections ----

    fn resolve(&self, endpoint: EndpointRef) -> bool {
        match endpoint {
            EndpointRef::Neuron(n) => self.neurons.contains_key(&n),
            EndpointRef::Subnet(s) => self.subnets.contains_key(&s),
        }
    }

    fn validate_endpoints(&self, endpoints: &[EndpointRef]) -> Result<()> {
        if endpoints.len() < 2 {
            return Err(Error::ArityTooSmall(endpoints.len()));
        }
        let mut seen = BTreeSet::new();
        for e in endpoints {
            if !self.resolve(*e) {
                return Err(Error::UnknownEndpoint(*e));
            }
            if !seen.insert(*e) {
                return Err(Error::DuplicateEndpoint(*e));
            }
        }
        Ok(())
    }

    /// Observes a connection: creates it at the initial weight, or counts one
    /// more occurrence of the existing connection with the same endpoint set
    /// and label set.
    pub fn connect(
        &mut self,
        endpoints: &[EndpointRef],
        labels: BTreeSet<String>,
        directed: bool,
    ) -> Result<ConnectionId> {
        self.validate_endpoints(endpoints)?;
        let key = ConnectionKey::new(endpoints, &labels);
        if let Some(&id) = self.keys.get(&key) {
            self.observe_direction(id, endpoints, directed);
            self.record_occurrence(id)?;
            return Ok(id);
        }
        Ok(self.insert_connection(key, endpoints.to_vec(), labels, directed, 1))
    }

    /// Like [`Mesh::connect`] but leaves an existing connection untouched.
    /// Used for structural facts (prior knowledge) that are not observations.
    pub fn connect_once(
        &mut self,
        endpoints: &[EndpointRef],
        labels: BTreeSet<String>,
        directed: bool,
    ) -> Result<Linked> {
        self.validate_endpoints(endpoints)?;
        let key = ConnectionKey::new(endpoints, &labels);
        if let Some(&id) = self.keys.get(&key) {
            return Ok(Linked { id, created: false });
        }
        let id = self.insert_connection(key, endpoints.to_vec(), labels, directed, 1);
        Ok(Linked { id, created: true })
    }

    fn insert_connection(
        &mut self,
        key: ConnectionKey,
        endpoints: Vec<EndpointRef>,
        labels: BTreeSet<String>,
        directed: bool,
        occurrences: u64,
    ) -> ConnectionId {
        let id = ConnectionId(self.next_connection);
        self.next_connection += 1;
        let kind = self.derive_kind(&endpoints);
        for e in &endpoints {
            self.incidence.entry(*e).or_default().insert(id);
        }
        self.keys.insert(key, id);
        let weight = self.config.weight_for(occurrences);
        self.connections.insert(
            id,
            Connection {
                id,
                endpoints,
                directed,
                labels,
                weight,
                occurrences,
                kind,
            },
        );
        id
    }

    /// Data flowing the other way makes a directed connection bidirectional.
    fn observe_direction(&mut self, id: ConnectionId, endpoints: &[EndpointRef], directed: bool) {
        let conn = self
            .connections
            .get_mut(&id)
            .expect("keyed connection exists");
        if conn.directed && (!directed || conn.endpoints != endpoints) {
            conn.directed = false;
        }
    }

    pub fn record_occurrence(&mut self, id: ConnectionId) -> Result<f64> {
        let conn = self
            .connections
            .get_mut(&id)
            .ok_or(Error::UnknownConnection(id))?;
        conn.occurrences += 1;
        conn.weight = self.config.weight_for(conn.occurrences);
        Ok(conn.weight)
    }

    pub fn connection(&self, id: ConnectionId) -> Result<&Connection> {
        self.connections
            .get(&id)
            .ok_or(Error::UnknownConnection(id))
    }

    pub fn connections(&self) -> impl Iterator<Item = &Connection> {
        self.connections.values()
    }

    /// Connections touching `endpoint`, in id order.
    pub fn connections_of(&self, endpoint: EndpointRef) -> impl Iterator<Item = &Connection> {
        self.incidence
            .get(&endpoint)
            .into_iter()
            .flatten()
            .map(move |id| &self.connections[id])
    }

    /// Connections having both `a` and `b` among their endpoints.
    pub fn connections_between(
        &self,
        a: EndpointRef,
        b: EndpointRef,
    ) -> impl Iterator<Item = &Connection> {
        self.connections_of(a).filter(move |c| c.touches(b))
    }

    /// Looks up the connection with exactly this endpoint set and label set.
    pub fn find_connection(
        &self,
        endpoints: &[EndpointRef],
        labels: &BTreeSet<String>,
    ) -> Option<&Connection> {
        let id = self.keys.get(&ConnectionKey::new(endpoints, labels))?;
        self.connections.get(id)
    }

    /// Neurons sharing at least one connection with `n`, optionally only those
    /// in `subnet_filter`. Direction never restricts traversal.
    pub fn neighbors(&self, n: NeuronId, subnet_filter: Option<SubnetId>) -> Result<Vec<NeuronId>> {
        self.neuron(n)?;
        let filter = match subnet_filter {
            Some(s) => Some(&self.subnet(s)?.neurons),
            None => None,
        };
        let found: BTreeSet<NeuronId> = self
            .connections_of(EndpointRef::Neuron(n))
            .flat_map(Connection::neuron_endpoints)
            .filter(|m| *m != n && filter.is_none_or(|f| f.contains(m)))
            .collect();
        Ok(found.into_iter().collect())
    }

    /// Neighbors of `n` inside the target subnet `target`.
    pub fn targets_of(&self, n: NeuronId, target: SubnetId) -> Result<BTreeSet<NeuronId>> {
        if self.subnet(target)?.role != SubnetRole::Target {
            return Err(Error::NotATargetSubnet(target));
        }
        Ok(self.neighbors(n, Some(target))?.into_iter().collect())
    }

    pub fn classify_connection(&self, id: ConnectionId) -> Result<ConnectionKind> {
        Ok(self.derive_kind(&self.connection(id)?.endpoints))
    }

    fn is_central(&self, endpoint: EndpointRef) -> bool {
        let central = |s: &SubnetId| {
            self.subnets
                .get(s)
                .is_some_and(|s| s.role == SubnetRole::Central)
        };
        match endpoint {
            EndpointRef::Neuron(n) => self
                .neurons
                .get(&n)
                .is_some_and(|n| n.home_subnets.iter().any(central)),
            EndpointRef::Subnet(s) => central(&s),
        }
    }

    fn derive_kind(&self, endpoints: &[EndpointRef]) -> ConnectionKind {
        let neurons: Vec<&Neuron> = endpoints
            .iter()
            .filter_map(|e| match e {
                EndpointRef::Neuron(n) => self.neurons.get(n),
                EndpointRef::Subnet(_) => None,
            })
            .collect();
        let central = endpoints.iter().any(|e| self.is_central(*e));
        if neurons.len() == endpoints.len() {
            if central {
                return ConnectionKind::NeuronNeuronCentral;
            }
            let mut shared = neurons[0].home_subnets.clone();
            for n in &neurons[1..] {
                shared.retain(|s| n.home_subnets.contains(s));
            }
            if shared.is_empty() {
                ConnectionKind::NeuronNeuronCrossSubnet
            } else {
                ConnectionKind::NeuronNeuronSameSubnet
            }
        } else if neurons.is_empty() {
            if central {
                ConnectionKind::SubnetSubnetCentral
            } else {
                ConnectionKind::SubnetSubnet
            }
        } else if central {
            ConnectionKind::NeuronSubnetCentral
        } else {
            ConnectionKind::NeuronSubnet
        }
    }

    fn refresh_kinds(&mut self) {
        let kinds: Vec<(ConnectionId, ConnectionKind)> = self
            .connections
            .values()
            .map(|c| (c.id, self.derive_kind(&c.endpoints)))
            .collect();
        for (id, kind) in kinds {
            self.connections.get_mut(&id).expect("listed").kind = kind;
        }
    }

    // ---- central mechanism ----

    pub fn register_route(&mut self, input: &str, subnet: SubnetId) -> Result<()> {
        self.subnet(subnet)?;
        self.route_table.insert(input.to_string(), subnet);
        Ok(())
    }

    /// Resolves the subnet that receives values of `input`, logging the lookup.
    pub fn route(&self, input: &str) -> Result<SubnetId> {
        let subnet = *self
            .route_table
            .get(input)
            .ok_or_else(|| Error::UnroutableInput(input.to_string()))?;
        self.scratch.log().push(RouteEvent {
            input: input.to_string(),
            subnet,
        });
        Ok(subnet)
    }

    pub fn route_table(&self) -> &BTreeMap<String, SubnetId> {
        &self.route_table
    }

    /// Drains the route log.
    pub fn take_route_log(&self) -> Vec<RouteEvent> {
        std::mem::take(&mut *self.scratch.log())
    }

    pub fn metadata(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn set_metadata(&mut self, key: &str, value: impl Into<String>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    // ---- persistence support ----

    pub fn to_parts(&self) -> MeshParts {
        MeshParts {
            config: self.config.clone(),
            subnets: self.subnets.values().cloned().collect(),
            neurons: self.neurons.values().cloned().collect(),
            connections: self.connections.values().cloned().collect(),
            route_table: self.route_table.clone(),
            metadata: self.metadata.clone(),
            next_subnet: self.next_subnet,
            next_neuron: self.next_neuron,
            next_connection: self.next_connection,
        }
    }

    /// Rebuilds a mesh and its indices, rejecting parts that break any
    /// structural invariant.
    pub fn from_parts(parts: MeshParts) -> Result<Self> {
        let mut mesh = Mesh::with_config(parts.config)?;
        mesh.next_subnet = parts.next_subnet;
        mesh.next_neuron = parts.next_neuron;
        mesh.next_connection = parts.next_connection;
        mesh.route_table = parts.route_table;
        mesh.metadata = parts.metadata;
        let corrupt = |m: String| Error::CorruptArchive(m);
        for s in parts.subnets {
            if mesh.subnet_names.insert(s.name.clone(), s.id).is_some() {
                return Err(corrupt(format!("duplicate subnet name `{}`", s.name)));
            }
            mesh.values.insert(s.id, HashMap::new());
            if mesh.subnets.insert(s.id, s).is_some() {
                return Err(corrupt("duplicate subnet id".into()));
            }
        }
        for n in parts.neurons {
            for s in &n.home_subnets {
                let index = mesh
                    .values
                    .get_mut(s)
                    .ok_or_else(|| corrupt(format!("neuron {} in unknown subnet {s}", n.id)))?;
                if index.insert(n.payload.clone(), n.id).is_some() {
                    return Err(corrupt(format!(
                        "duplicate payload `{}` in subnet {s}",
                        n.payload
                    )));
                }
            }
            if mesh.neurons.insert(n.id, n).is_some() {
                return Err(corrupt("duplicate neuron id".into()));
            }
        }
        for c in parts.connections {
            let key = ConnectionKey::new(&c.endpoints, &c.labels);
            if mesh.keys.insert(key, c.id).is_some() {
                return Err(corrupt(format!("connection {} duplicates another", c.id)));
            }
            for e in &c.endpoints {
                mesh.incidence.entry(*e).or_default().insert(c.id);
            }
            mesh.connections.insert(c.id, c);
        }
        mesh.check_invariants()
            .map_err(|v| corrupt(v.to_string()))?;
        Ok(mesh)
    }
}
