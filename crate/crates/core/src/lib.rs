//! Mesh-of-subnets learning engine.
//!
//! Knowledge lives in a [`Mesh`]: subnets of unique values joined by weighted,
//! labeled (hyper)connections. Tabular records and raster images are both
//! turned into mesh structure, and prediction or classification walks it.

pub mod config;
pub mod error;
pub mod image;
pub mod io;
pub mod mesh;
pub mod prior;
pub mod tabular;
pub mod value;

pub use config::{EngineConfig, RoundingMode};
pub use error::{Error, Result};
pub use mesh::{
    Connection, ConnectionId, ConnectionKind, EndpointRef, Mesh, Neuron, NeuronId, Subnet,
    SubnetId, SubnetRole,
};
pub use value::{Decimal, Scalar, Value, ValueKind};
