use std::collections::BTreeSet;
use std::fmt;

use super::{EndpointRef, Mesh};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantViolation(pub String);

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvariantViolation {}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(InvariantViolation(format!($($fmt)*)));
        }
    };
}

impl Mesh {
    /// Verifies dedupe, weight law, referential integrity and kind consistency.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        for s in self.subnets.values() {
            ensure!(
                s.id.0 < self.next_subnet,
                "subnet {} at or beyond id counter",
                s.id
            );
            if let Some(p) = s.parent {
                ensure!(
                    self.subnets.contains_key(&p),
                    "subnet {} has dangling parent {p}",
                    s.id
                );
            }
            let mut payloads = BTreeSet::new();
            for n in &s.neurons {
                let neuron = self.neurons.get(n);
                ensure!(neuron.is_some(), "subnet {} lists missing neuron {n}", s.id);
                let neuron = neuron.unwrap();
                ensure!(
                    neuron.home_subnets.contains(&s.id),
                    "neuron {n} does not list subnet {} as home",
                    s.id
                );
                ensure!(
                    payloads.insert(&neuron.payload),
                    "subnet {} holds payload `{}` twice",
                    s.id,
                    neuron.payload
                );
            }
        }
        for n in self.neurons.values() {
            ensure!(
                n.id.0 < self.next_neuron,
                "neuron {} at or beyond id counter",
                n.id
            );
            ensure!(
                !n.home_subnets.is_empty(),
                "neuron {} has no home subnet",
                n.id
            );
            for s in &n.home_subnets {
                let subnet = self.subnets.get(s);
                ensure!(
                    subnet.is_some(),
                    "neuron {} has dangling home subnet {s}",
                    n.id
                );
                ensure!(
                    subnet.unwrap().neurons.contains(&n.id),
                    "subnet {s} misses neuron {}",
                    n.id
                );
            }
        }
        for c in self.connections.values() {
            ensure!(
                c.id.0 < self.next_connection,
                "connection {} at or beyond id counter",
                c.id
            );
            let distinct: BTreeSet<&EndpointRef> = c.endpoints.iter().collect();
            ensure!(
                c.endpoints.len() >= 2 && distinct.len() == c.endpoints.len(),
                "connection {} has fewer than 2 distinct endpoints",
                c.id
            );
            for e in &c.endpoints {
                ensure!(
                    self.resolve(*e),
                    "connection {} has dangling endpoint {e}",
                    c.id
                );
                ensure!(
                    self.incidence.get(e).is_some_and(|ids| ids.contains(&c.id)),
                    "incidence index misses connection {} at {e}",
                    c.id
                );
            }
            ensure!(
                c.occurrences >= 1,
                "connection {} has zero occurrences",
                c.id
            );
            let expected = self.config.weight_for(c.occurrences);
            ensure!(
                c.weight == expected,
                "connection {} weight {} != {expected} for {} occurrences",
                c.id,
                c.weight,
                c.occurrences
            );
            let kind = self.derive_kind(&c.endpoints);
            ensure!(
                c.kind == kind,
                "connection {} stored kind {:?} != {kind:?}",
                c.id,
                c.kind
            );
        }
        for (input, s) in &self.route_table {
            ensure!(
                self.subnets.contains_key(s),
                "route `{input}` points at missing subnet {s}"
            );
        }
        Ok(())
    }
}
