mod common;

use common::{insulin, trained};
use meshnet::mesh::label_set;
use meshnet::tabular::{
    add_bias_rule, candidate_set, confirm, nearest_neuron, predict, resolve_vote, BiasRule, Record,
    Schema, IF_THEN,
};
use meshnet::{Mesh, NeuronId, Value};

fn neuron(mesh: &Mesh, subnet: &str, v: Value) -> NeuronId {
    mesh.find_value(mesh.subnet_id(subnet).unwrap(), &v)
        .unwrap()
}

fn query(schema: &Schema, text: &str) -> Record {
    schema.parse_assignments(text).unwrap()
}

fn census(mesh: &Mesh) -> [usize; 3] {
    ["date", "time", "insulin"].map(|s| mesh.subnet_len(mesh.subnet_id(s).unwrap()).unwrap())
}

#[test]
fn ingest_reads_table_rows() {
    let (_, records) = insulin();
    assert_eq!(records.len(), 30);
    assert_eq!(records[10].get("date"), Some(&Value::date(6, 6)));
    assert_eq!(records[10].get("time"), Some(&Value::time(11, 0)));
    assert_eq!(records[10].get("insulin"), Some(&Value::Integer(13)));
}

#[test]
fn subnet_census() {
    let (schema, records) = insulin();
    assert_eq!(census(&trained(&schema, &records[..10])), [5, 6, 6]);
    assert_eq!(census(&trained(&schema, &records)), [15, 12, 9]);
}

#[test]
fn repeated_pair_weight() {
    let (schema, records) = insulin();
    let mesh = trained(&schema, &records[..10]);
    let t = neuron(&mesh, "time", Value::time(18, 0));
    let dose = neuron(&mesh, "insulin", Value::Integer(32));
    let c = mesh
        .find_connection(&[t.into(), dose.into()], &label_set([IF_THEN]))
        .unwrap();
    assert_eq!((c.weight, c.occurrences), (0.75, 2));
}

#[test]
fn retraining_a_record_strengthens_its_connections() {
    let (schema, records) = insulin();
    let mut mesh = trained(&schema, &records[..10]);
    let report = confirm(&mut mesh, &schema, &records[1]).unwrap();
    assert_eq!(report.neurons_created, 0);
    let date = neuron(&mesh, "date", Value::date(1, 6));
    let t = neuron(&mesh, "time", Value::time(18, 0));
    let c = mesh
        .find_connection(&[date.into(), t.into()], &label_set([IF_THEN]))
        .unwrap();
    assert_eq!(c.weight, 0.75);
}

#[test]
fn nearest_values() {
    let (schema, records) = insulin();
    let mesh = trained(&schema, &records[..10]);
    let date = mesh.subnet_id("date").unwrap();
    let n = nearest_neuron(&mesh, date, &Value::date(6, 6)).unwrap();
    assert_eq!(mesh.payload(n.neuron).unwrap(), &Value::date(5, 6));
    assert!(!n.exact);
    let exact = nearest_neuron(&mesh, date, &Value::date(3, 6)).unwrap();
    assert!(exact.exact);
    assert_eq!(exact.distance.scaled, 0);
}

#[test]
fn candidate_sets_and_votes() {
    let (schema, records) = insulin();
    let mesh = trained(&schema, &records[..10]);
    let (date, time, target) = (
        mesh.subnet_id("date").unwrap(),
        mesh.subnet_id("time").unwrap(),
        mesh.subnet_id("insulin").unwrap(),
    );
    let payloads = |ids: Vec<NeuronId>| -> Vec<Value> {
        ids.into_iter()
            .map(|n| mesh.payload(n).unwrap().clone())
            .collect()
    };
    let jun5 = neuron(&mesh, "date", Value::date(5, 6));
    assert_eq!(
        payloads(candidate_set(&mesh, jun5, time, target).unwrap()),
        [Value::time(8, 0), Value::time(18, 0)]
    );
    let ten = neuron(&mesh, "time", Value::time(10, 0));
    assert_eq!(
        payloads(candidate_set(&mesh, ten, date, target).unwrap()),
        [Value::date(2, 6), Value::date(4, 6)]
    );
    let eight = neuron(&mesh, "time", Value::time(8, 0));
    assert_eq!(
        resolve_vote(&mesh, eight, jun5, target).unwrap().value,
        Value::Integer(12)
    );
    let jun4 = neuron(&mesh, "date", Value::date(4, 6));
    let five_pm = neuron(&mesh, "time", Value::time(17, 0));
    assert_eq!(
        resolve_vote(&mesh, jun4, five_pm, target).unwrap().value,
        Value::Integer(34)
    );
}

#[test]
fn golden_predictions() {
    let (schema, records) = insulin();
    let mesh = trained(&schema, &records[..10]);
    let p = predict(
        &mesh,
        &schema,
        &query(&schema, "date=6-Jun,time=11:00"),
        &[],
    )
    .unwrap();
    assert_eq!(p.value, Value::Integer(12));
    let p = predict(
        &mesh,
        &schema,
        &query(&schema, "date=6-Jun,time=17:00"),
        &[],
    )
    .unwrap();
    assert_eq!(p.value, Value::Integer(33));
    let votes: Vec<Value> = p
        .trace
        .anchors
        .iter()
        .map(|a| a.result.clone().unwrap().value)
        .collect();
    assert_eq!(votes, [Value::Integer(32), Value::Integer(34)]);
}

#[test]
fn trace_reverifies_against_mesh() {
    let (schema, records) = insulin();
    let mesh = trained(&schema, &records[..10]);
    let target = mesh.subnet_id("insulin").unwrap();
    let p = predict(
        &mesh,
        &schema,
        &query(&schema, "date=6-Jun,time=11:00"),
        &[],
    )
    .unwrap();
    for a in &p.trace.anchors {
        let anchor = a.anchor.as_ref().unwrap().neuron.neuron;
        let anchor_targets = mesh.targets_of(anchor, target).unwrap();
        for pair in &a.pairs {
            for c in &pair.candidates {
                assert!(mesh.neighbors(anchor, None).unwrap().contains(&c.neuron));
                let shared = mesh.targets_of(c.neuron, target).unwrap();
                assert!(!shared.is_disjoint(&anchor_targets));
            }
            let vote = pair.vote.as_ref().unwrap();
            assert!(mesh.subnet(target).unwrap().neurons.contains(&vote.neuron));
        }
    }
    let text = p.trace.to_string();
    assert!(text.contains("5-Jun") && text.contains("08:00") && text.ends_with("value 12\n"));
}

#[test]
fn bias_rules_shift_prediction() {
    let (schema, records) = insulin();
    let mut mesh = trained(&schema, &records[..10]);
    add_bias_rule(
        &mut mesh,
        &schema,
        &BiasRule::new("extra-sugar", "+2".parse().unwrap()),
    )
    .unwrap();
    add_bias_rule(
        &mut mesh,
        &schema,
        &BiasRule::new("fasting", "-3".parse().unwrap()),
    )
    .unwrap();
    let q = query(&schema, "date=6-Jun,time=11:00");
    let p = predict(&mesh, &schema, &q, &["extra-sugar"]).unwrap();
    assert_eq!(p.value, Value::Integer(14));
    assert_eq!(p.trace.base, Value::Integer(12));
    let both = predict(&mesh, &schema, &q, &["extra-sugar", "fasting"]).unwrap();
    assert_eq!(both.value, Value::Integer(11));
    assert!(matches!(
        predict(&mesh, &schema, &q, &["unknown"]),
        Err(meshnet::Error::UnknownBiasTag(_))
    ));
}

#[test]
fn confirm_adds_new_time() {
    let (schema, records) = insulin();
    let mut mesh = trained(&schema, &records[..10]);
    assert!(mesh
        .find_value(mesh.subnet_id("time").unwrap(), &Value::time(11, 0))
        .is_none());
    let report = confirm(&mut mesh, &schema, &records[10]).unwrap();
    assert_eq!(report.neurons_created, 2);
    assert!(mesh
        .find_value(mesh.subnet_id("time").unwrap(), &Value::time(11, 0))
        .is_some());
    let p = predict(&mesh, &schema, &records[10].inputs_of(&schema), &[]).unwrap();
    assert_eq!(p.value, Value::Integer(13));
}

#[test]
fn predict_rejects_bad_inputs() {
    let (schema, records) = insulin();
    let mesh = trained(&schema, &records[..10]);
    assert!(predict(&mesh, &schema, &records[0], &[]).is_err());
    assert!(predict(&mesh, &schema, &query(&schema, "date=6-Jun"), &[]).is_err());
}
