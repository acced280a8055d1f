use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{Value, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeRole {
    Input,
    Target,
}

impl fmt::Display for AttributeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttributeRole::Input => "input",
            AttributeRole::Target => "target",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: ValueKind,
    pub role: AttributeRole,
}

impl Attribute {
    pub fn new(name: impl Into<String>, kind: ValueKind, role: AttributeRole) -> Self {
        Self {
            name: name.into(),
            kind,
            role,
        }
    }

    pub fn input(name: impl Into<String>, kind: ValueKind) -> Self {
        Self::new(name, kind, AttributeRole::Input)
    }

    pub fn target(name: impl Into<String>, kind: ValueKind) -> Self {
        Self::new(name, kind, AttributeRole::Target)
    }
}

/// Ordered attribute list with exactly one target.
///
/// Text form, one attribute per line: `name:kind:role`. Blank lines and lines
/// starting with `#` are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<Attribute>,
    target: usize,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = BTreeSet::new();
        for a in &attributes {
            if !names.insert(a.name.as_str()) {
                return Err(Error::DuplicateAttribute(a.name.clone()));
            }
        }
        let targets: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == AttributeRole::Target)
            .map(|(i, _)| i)
            .collect();
        match targets.as_slice() {
            [t] => Ok(Self {
                target: *t,
                attributes,
            }),
            _ => Err(Error::NoTarget(targets.len())),
        }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn target(&self) -> &Attribute {
        &self.attributes[self.target]
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Attribute> {
        self.attributes
            .iter()
            .filter(|a| a.role == AttributeRole::Input)
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn kinds(&self) -> Vec<ValueKind> {
        self.attributes.iter().map(|a| a.kind).collect()
    }

    /// Checks a complete training record.
    pub fn check_complete(&self, record: &Record) -> Result<()> {
        self.check_values(record, self.attributes.iter())?;
        self.check_no_extra(record, true)
    }

    /// Checks a prediction input: every input attribute, no target.
    pub fn check_inputs(&self, record: &Record) -> Result<()> {
        if record.get(&self.target().name).is_some() {
            return Err(Error::SchemaMismatch(format!(
                "target `{}` must not be given",
                self.target().name
            )));
        }
        self.check_values(record, self.inputs())?;
        self.check_no_extra(record, false)
    }

    fn check_values<'a>(
        &self,
        record: &Record,
        attrs: impl Iterator<Item = &'a Attribute>,
    ) -> Result<()> {
        for a in attrs {
            let v = record
                .get(&a.name)
                .ok_or_else(|| Error::SchemaMismatch(format!("missing attribute `{}`", a.name)))?;
            if v.kind() != a.kind {
                return Err(Error::SchemaMismatch(format!(
                    "attribute `{}` expects {}, got `{v}`",
                    a.name, a.kind
                )));
            }
        }
        Ok(())
    }

    fn check_no_extra(&self, record: &Record, allow_target: bool) -> Result<()> {
        for name in record.values.keys() {
            match self.attribute(name) {
                Some(a) if a.role == AttributeRole::Input || allow_target => {}
                _ => return Err(Error::SchemaMismatch(format!("unknown attribute `{name}`"))),
            }
        }
        Ok(())
    }

    /// Parses `k=v,k=v` assignments against the schema.
    pub fn parse_assignments(&self, text: &str) -> Result<Record> {
        let mut record = Record::new();
        for pair in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, raw) = pair.split_once('=').ok_or_else(|| {
                Error::SchemaMismatch(format!("expected name=value, got `{pair}`"))
            })?;
            let name = name.trim();
            let attr = self
                .attribute(name)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown attribute `{name}`")))?;
            record.insert(name, attr.kind.parse_value(raw)?);
        }
        Ok(record)
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.attributes {
            writeln!(f, "{}:{}:{}", a.name, a.kind, a.role)?;
        }
        Ok(())
    }
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut attributes = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::RowParse {
                line: i as u64 + 1,
                message,
            };
            let parts: Vec<&str> = line.split(':').map(str::trim).collect();
            let [name, kind, role] = parts.as_slice() else {
                return Err(bad(format!("expected name:kind:role, got `{line}`")));
            };
            if name.is_empty() {
                return Err(bad("empty attribute name".into()));
            }
            let kind: ValueKind = kind.parse().map_err(|e: Error| bad(e.to_string()))?;
            let role = match *role {
                "input" => AttributeRole::Input,
                "target" => AttributeRole::Target,
                other => return Err(bad(format!("unknown role `{other}`"))),
            };
            attributes.push(Attribute::new(*name, kind, role));
        }
        Schema::new(attributes)
    }
}

/// Attribute values of one row, by attribute name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Record {
    values: BTreeMap<String, Value>,
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: Value) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: &str, value: Value) -> Option<Value> {
        self.values.insert(name.to_string(), value)
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.values.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The record without its target value.
    pub fn inputs_of(&self, schema: &Schema) -> Record {
        let mut r = self.clone();
        r.remove(&schema.target().name);
        r
    }
}

impl<S: Into<String>> FromIterator<(S, Value)> for Record {
    fn from_iter<I: IntoIterator<Item = (S, Value)>>(iter: I) -> Self {
        Self {
            values: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}
