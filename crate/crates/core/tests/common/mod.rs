#![allow(dead_code)]

use std::path::PathBuf;

use meshnet::image::{load_grid, PixelGrid};
use meshnet::io::{ingest_csv, read_schema};
use meshnet::tabular::{init_mesh, train_all, Record, Schema};
use meshnet::{EngineConfig, Mesh};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn insulin() -> (Schema, Vec<Record>) {
    let schema = read_schema(data("insulin.schema")).unwrap();
    let records = ingest_csv(data("insulin.csv"), &schema).unwrap();
    (schema, records)
}

pub fn iris() -> (Schema, Vec<Record>) {
    let schema = read_schema(data("iris.schema")).unwrap();
    let records = ingest_csv(data("iris.csv"), &schema).unwrap();
    (schema, records)
}

/// A mesh trained on the given records, in order.
pub fn trained<'a>(schema: &Schema, records: impl IntoIterator<Item = &'a Record>) -> Mesh {
    let mut mesh = init_mesh(EngineConfig::default(), schema).unwrap();
    train_all(&mut mesh, schema, records).unwrap();
    mesh
}

/// Iris mesh without the (1-based) record `held_out`.
pub fn iris_without(held_out: usize) -> (Schema, Vec<Record>, Mesh) {
    let (schema, records) = iris();
    let mesh = trained(
        &schema,
        records
            .iter()
            .enumerate()
            .filter(|(i, _)| *i + 1 != held_out)
            .map(|(_, r)| r),
    );
    (schema, records, mesh)
}

pub fn grid(name: &str) -> PixelGrid {
    load_grid(data(name)).unwrap().quantize(128)
}

/// Id-free description of a mesh: subnets by name with their payloads, and
/// connections by endpoint descriptions. Two meshes built from the same
/// facts in a different order have equal canonical forms.
pub fn canonical(mesh: &Mesh) -> (Vec<String>, Vec<String>) {
    use meshnet::EndpointRef;
    let describe = |e: &EndpointRef| match e {
        EndpointRef::Neuron(n) => {
            let neuron = mesh.neuron(*n).unwrap();
            let homes: Vec<&str> = neuron
                .home_subnets
                .iter()
                .map(|s| mesh.subnet(*s).unwrap().name.as_str())
                .collect();
            format!("{}:{}", homes.join("+"), neuron.payload)
        }
        EndpointRef::Subnet(s) => format!("[{}]", mesh.subnet(*s).unwrap().name),
    };
    let mut subnets: Vec<String> = mesh
        .subnets()
        .map(|s| {
            let mut payloads: Vec<String> = mesh
                .members(s.id)
                .unwrap()
                .map(|n| n.payload.to_string())
                .collect();
            payloads.sort();
            let parent = s.parent.map(|p| mesh.subnet(p).unwrap().name.clone());
            format!(
                "{} {:?} {:?} {}",
                s.name,
                s.role,
                parent,
                payloads.join(" ")
            )
        })
        .collect();
    subnets.sort();
    let mut connections: Vec<String> = mesh
        .connections()
        .map(|c| {
            let mut ends: Vec<String> = c.endpoints.iter().map(describe).collect();
            if !c.directed {
                ends.sort();
            }
            format!(
                "{} {:?} w={} n={} d={} {:?}",
                ends.join(" -> "),
                c.labels,
                c.weight,
                c.occurrences,
                c.directed,
                c.kind
            )
        })
        .collect();
    connections.sort();
    (subnets, connections)
}
