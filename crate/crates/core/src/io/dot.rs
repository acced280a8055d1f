use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{Connection, EndpointRef, Mesh, SubnetId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DotScope {
    All,
    Subnets(Vec<SubnetId>),
}

fn quote(text: &str) -> String {
    format!("\"{}\"", text.replace('\\', "\\\\").replace('"', "\\\""))
}

fn node_name(e: EndpointRef) -> String {
    match e {
        EndpointRef::Neuron(n) => format!("n{}", n.0),
        EndpointRef::Subnet(s) => format!("s{}", s.0),
    }
}

fn edge_label(c: &Connection) -> String {
    let labels: Vec<&str> = c.labels.iter().map(String::as_str).collect();
    if labels.is_empty() {
        format!("({:?})", c.weight)
    } else {
        format!("{} ({:?})", labels.join(", "), c.weight)
    }
}

/// DOT description of the scoped part of the mesh: one cluster per subnet,
/// nodes labeled with payloads, edges labeled with connection labels and
/// weight. Undirected connections carry no arrowheads; connections with more
/// than two endpoints meet at a point node.
pub fn export_dot(mesh: &Mesh, scope: &DotScope) -> Result<String> {
    let subnets: BTreeSet<SubnetId> = match scope {
        DotScope::All => mesh.subnets().map(|s| s.id).collect(),
        DotScope::Subnets(ids) => {
            for id in ids {
                mesh.subnet(*id)?;
            }
            ids.iter().copied().collect()
        }
    };
    // each neuron is drawn once, in its first in-scope home subnet
    let mut placed: BTreeMap<SubnetId, Vec<EndpointRef>> = BTreeMap::new();
    let mut visible: BTreeSet<EndpointRef> = BTreeSet::new();
    for n in mesh.neurons() {
        if let Some(home) = n.home_subnets.iter().find(|s| subnets.contains(s)) {
            placed.entry(*home).or_default().push(n.id.into());
            visible.insert(n.id.into());
        }
    }
    let edges: Vec<&Connection> = mesh
        .connections()
        .filter(|c| {
            c.endpoints.iter().all(|e| match e {
                EndpointRef::Neuron(_) => visible.contains(e),
                EndpointRef::Subnet(s) => subnets.contains(s),
            })
        })
        .collect();
    let subnet_nodes: BTreeSet<SubnetId> = edges
        .iter()
        .flat_map(|c| c.endpoints.iter())
        .filter_map(|e| match e {
            EndpointRef::Subnet(s) => Some(*s),
            EndpointRef::Neuron(_) => None,
        })
        .collect();

    let mut out = String::from("digraph mesh {\n");
    for id in &subnets {
        let subnet = mesh.subnet(*id)?;
        let _ = writeln!(out, "  subgraph cluster_{} {{", id.0);
        let _ = writeln!(out, "    label={};", quote(&subnet.name));
        if subnet_nodes.contains(id) {
            let _ = writeln!(
                out,
                "    s{} [shape=box, label={}];",
                id.0,
                quote(&subnet.name)
            );
        }
        for e in placed.get(id).into_iter().flatten() {
            if let EndpointRef::Neuron(n) = e {
                let _ = writeln!(
                    out,
                    "    {} [label={}];",
                    node_name(*e),
                    quote(&mesh.payload(*n)?.to_string())
                );
            }
        }
        out.push_str("  }\n");
    }
    for c in edges {
        let label = quote(&edge_label(c));
        let style = if c.directed {
            String::new()
        } else {
            ", dir=none".to_string()
        };
        if c.endpoints.len() == 2 {
            let _ = writeln!(
                out,
                "  {} -> {} [label={label}{style}];",
                node_name(c.endpoints[0]),
                node_name(c.endpoints[1])
            );
        } else {
            let hub = format!("c{}", c.id.0);
            let _ = writeln!(out, "  {hub} [shape=point, xlabel={label}];");
            for (i, e) in c.endpoints.iter().enumerate() {
                if c.directed && i == 0 {
                    let _ = writeln!(out, "  {} -> {hub} [arrowhead=none];", node_name(*e));
                } else {
                    let _ = writeln!(
                        out,
                        "  {hub} -> {}{};",
                        node_name(*e),
                        if c.directed { "" } else { " [dir=none]" }
                    );
                }
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

pub fn write_dot(mesh: &Mesh, path: impl AsRef<Path>, scope: &DotScope) -> Result<()> {
    fs::write(path, export_dot(mesh, scope)?).map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{label_set, SubnetRole};
    use crate::prior;
    use crate::value::Value;

    #[test]
    fn integer_prior_export() {
        let mut mesh = Mesh::new();
        let ints = prior::build_integer_subnet(&mut mesh, 0, 12).unwrap();
        prior::build_month_subnet(&mut mesh).unwrap();
        let dot = export_dot(&mesh, &DotScope::Subnets(vec![ints])).unwrap();
        let nodes = dot
            .lines()
            .filter(|l| l.trim_start().starts_with('n') && !l.contains("->"))
            .count();
        assert_eq!(nodes, 13);
        assert_eq!(dot.matches("less than (1.0)").count(), 12);
        assert!(dot.contains("part 1 of 2"));
        assert!(!dot.contains("Jan"));
        assert!(!dot.contains("dir=none"));
    }

    #[test]
    fn empty_scope_is_valid() {
        let mut mesh = Mesh::new();
        prior::build_month_subnet(&mut mesh).unwrap();
        assert_eq!(
            export_dot(&mesh, &DotScope::Subnets(vec![])).unwrap(),
            "digraph mesh {\n}\n"
        );
        assert!(matches!(
            export_dot(&mesh, &DotScope::Subnets(vec![SubnetId(99)])),
            Err(Error::UnknownSubnet(_))
        ));
    }

    #[test]
    fn weights_hyperedges_and_undirected() {
        let mut mesh = Mesh::new();
        let s = mesh.create_subnet("s", SubnetRole::Attribute).unwrap();
        let ids: Vec<EndpointRef> = (0..3)
            .map(|i| mesh.insert_value(s, Value::Integer(i)).unwrap().0.into())
            .collect();
        mesh.connect(&ids[..2], label_set(["If...Then"]), true)
            .unwrap();
        mesh.connect(&ids[..2], label_set(["If...Then"]), true)
            .unwrap();
        mesh.connect(&ids, label_set(["joint"]), false).unwrap();
        mesh.connect(&[ids[0], s.into()], label_set(["in"]), false)
            .unwrap();
        let dot = export_dot(&mesh, &DotScope::All).unwrap();
        assert!(dot.contains("label=\"If...Then (0.75)\"];"), "{dot}");
        assert!(dot.contains("shape=point, xlabel=\"joint (1.0)\""));
        assert!(dot.contains("dir=none"));
        assert!(dot.contains("[shape=box, label=\"s\"]"));
    }
}
