//! Manual merge and split of subnets.

use std::collections::{BTreeSet, HashMap};

use super::{ConnectionId, ConnectionKey, EndpointRef, Mesh, NeuronId, SubnetId};
use crate::error::{Error, Result};
use crate::value::Value;

impl Mesh {
    /// Merges `a` and `b` into a new subnet called `name`.
    ///
    /// Neurons with equal payloads collapse onto the lower id; the other
    /// neuron's connections are rewired to the survivor. Connections that end
    /// up sharing a key are fused (occurrences add up) and connections left
    /// with fewer than two distinct endpoints are dropped.
    pub fn merge_subnets(&mut self, a: SubnetId, b: SubnetId, name: &str) -> Result<SubnetId> {
        if a == b {
            return Err(Error::SelfMerge(a));
        }
        let (role, parent) = {
            let sa = self.subnet(a)?;
            (sa.role, sa.parent)
        };
        self.subnet(b)?;
        let merged = self.create_subnet(name, role)?;
        self.subnets.get_mut(&merged).expect("just created").parent = parent;

        let members: BTreeSet<NeuronId> = self.subnets[&a]
            .neurons
            .union(&self.subnets[&b].neurons)
            .copied()
            .collect();
        let mut survivors: HashMap<Value, NeuronId> = HashMap::new();
        let mut losers = Vec::new();
        for n in members {
            let payload = self.neurons[&n].payload.clone();
            match survivors.get(&payload) {
                Some(&survivor) => losers.push((n, survivor)),
                None => {
                    survivors.insert(payload, n);
                }
            }
        }

        for (loser, survivor) in losers {
            let from = EndpointRef::Neuron(loser);
            let to = EndpointRef::Neuron(survivor);
            for c in self.incidence.remove(&from).unwrap_or_default() {
                self.rewrite_connection(c, |e| if e == from { to } else { e });
            }
            let gone = self.neurons.remove(&loser).expect("member exists");
            for s in gone.home_subnets {
                let subnet = self.subnets.get_mut(&s).expect("home subnet exists");
                subnet.neurons.remove(&loser);
                let index = self.values.get_mut(&s).expect("indexed");
                index.remove(&gone.payload);
                if s != a && s != b {
                    subnet.neurons.insert(survivor);
                    index.insert(gone.payload.clone(), survivor);
                    self.neurons
                        .get_mut(&survivor)
                        .expect("survivor")
                        .home_subnets
                        .insert(s);
                }
            }
        }

        let mut ids: Vec<NeuronId> = survivors.into_values().collect();
        ids.sort_unstable();
        for n in ids {
            let neuron = self.neurons.get_mut(&n).expect("survivor exists");
            neuron.home_subnets.remove(&a);
            neuron.home_subnets.remove(&b);
            neuron.home_subnets.insert(merged);
            self.subnets
                .get_mut(&merged)
                .expect("merged")
                .neurons
                .insert(n);
            self.values
                .get_mut(&merged)
                .expect("merged")
                .insert(neuron.payload.clone(), n);
        }

        let (ea, eb, em) = (
            EndpointRef::Subnet(a),
            EndpointRef::Subnet(b),
            EndpointRef::Subnet(merged),
        );
        let mut subnet_conns: BTreeSet<ConnectionId> = BTreeSet::new();
        subnet_conns.extend(self.incidence.remove(&ea).unwrap_or_default());
        subnet_conns.extend(self.incidence.remove(&eb).unwrap_or_default());
        for c in subnet_conns {
            self.rewrite_connection(c, |e| if e == ea || e == eb { em } else { e });
        }

        for s in self.subnets.values_mut() {
            if s.parent == Some(a) || s.parent == Some(b) {
                s.parent = Some(merged);
            }
        }
        for target in self.route_table.values_mut() {
            if *target == a || *target == b {
                *target = merged;
            }
        }
        self.drop_subnet(a);
        self.drop_subnet(b);
        self.refresh_kinds();
        Ok(merged)
    }

    /// Splits `s` into `<name>/selected` and `<name>/rest` by `selector`.
    /// Either side may be empty. Subnet-level connections of `s` are carried
    /// over to both halves; child subnets follow the selected half.
    pub fn split_subnet(
        &mut self,
        s: SubnetId,
        selector: impl Fn(&Value) -> bool,
    ) -> Result<(SubnetId, SubnetId)> {
        let original = self.subnet(s)?.clone();
        let selected_name = format!("{}/selected", original.name);
        let rest_name = format!("{}/rest", original.name);
        for name in [&selected_name, &rest_name] {
            if self.subnet_names.contains_key(name.as_str()) {
                return Err(Error::DuplicateSubnetName(name.clone()));
            }
        }
        let selected = self.create_subnet(&selected_name, original.role)?;
        let rest = self.create_subnet(&rest_name, original.role)?;
        for half in [selected, rest] {
            self.subnets.get_mut(&half).expect("just created").parent = original.parent;
        }

        for n in &original.neurons {
            let neuron = self.neurons.get_mut(n).expect("member exists");
            let half = if selector(&neuron.payload) {
                selected
            } else {
                rest
            };
            neuron.home_subnets.remove(&s);
            neuron.home_subnets.insert(half);
            self.subnets
                .get_mut(&half)
                .expect("half")
                .neurons
                .insert(*n);
            self.values
                .get_mut(&half)
                .expect("half")
                .insert(neuron.payload.clone(), *n);
        }

        let (es, esel, erest) = (
            EndpointRef::Subnet(s),
            EndpointRef::Subnet(selected),
            EndpointRef::Subnet(rest),
        );
        for c in self.incidence.remove(&es).unwrap_or_default() {
            let copy = self.connections[&c].clone();
            self.rewrite_connection(c, |e| if e == es { esel } else { e });
            let endpoints: Vec<EndpointRef> = copy
                .endpoints
                .iter()
                .map(|e| if *e == es { erest } else { *e })
                .collect();
            self.absorb(endpoints, copy.labels, copy.directed, copy.occurrences);
        }

        for sub in self.subnets.values_mut() {
            if sub.parent == Some(s) {
                sub.parent = Some(selected);
            }
        }
        self.route_table.retain(|_, target| *target != s);
        self.drop_subnet(s);
        self.refresh_kinds();
        Ok((selected, rest))
    }

    fn drop_subnet(&mut self, s: SubnetId) {
        if let Some(sub) = self.subnets.remove(&s) {
            self.subnet_names.remove(&sub.name);
        }
        self.values.remove(&s);
        self.incidence.remove(&EndpointRef::Subnet(s));
    }

    /// Rewrites the endpoints of connection `id` in place, fusing it into an
    /// existing connection on key collision or dropping it when it
    /// degenerates below two endpoints.
    fn rewrite_connection(&mut self, id: ConnectionId, map: impl Fn(EndpointRef) -> EndpointRef) {
        let Some(conn) = self.connections.get(&id) else {
            return;
        };
        let old_key = ConnectionKey::new(&conn.endpoints, &conn.labels);
        let old_endpoints = conn.endpoints.clone();
        if self.keys.get(&old_key) == Some(&id) {
            self.keys.remove(&old_key);
        }
        for e in &old_endpoints {
            if let Some(ids) = self.incidence.get_mut(e) {
                ids.remove(&id);
            }
        }
        let mut endpoints = Vec::with_capacity(old_endpoints.len());
        for e in old_endpoints.into_iter().map(map) {
            if !endpoints.contains(&e) {
                endpoints.push(e);
            }
        }
        let conn = self.connections.remove(&id).expect("checked above");
        if endpoints.len() < 2 {
            return;
        }
        let key = ConnectionKey::new(&endpoints, &conn.labels);
        if let Some(&other) = self.keys.get(&key) {
            self.fuse_into(other, &endpoints, conn.directed, conn.occurrences);
            return;
        }
        for e in &endpoints {
            self.incidence.entry(*e).or_default().insert(id);
        }
        self.keys.insert(key, id);
        self.connections
            .insert(id, super::Connection { endpoints, ..conn });
    }

    fn absorb(
        &mut self,
        endpoints: Vec<EndpointRef>,
        labels: BTreeSet<String>,
        directed: bool,
        occurrences: u64,
    ) {
        let mut distinct = Vec::with_capacity(endpoints.len());
        for e in endpoints {
            if !distinct.contains(&e) {
                distinct.push(e);
            }
        }
        if distinct.len() < 2 {
            return;
        }
        let key = ConnectionKey::new(&distinct, &labels);
        match self.keys.get(&key) {
            Some(&other) => self.fuse_into(other, &distinct, directed, occurrences),
            None => {
                self.insert_connection(key, distinct, labels, directed, occurrences);
            }
        }
    }

    fn fuse_into(
        &mut self,
        id: ConnectionId,
        endpoints: &[EndpointRef],
        directed: bool,
        occurrences: u64,
    ) {
        self.observe_direction(id, endpoints, directed);
        let conn = self
            .connections
            .get_mut(&id)
            .expect("keyed connection exists");
        conn.occurrences += occurrences;
        conn.weight = self.config.weight_for(conn.occurrences);
    }
}
