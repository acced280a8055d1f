use crate::mesh::{ConnectionId, EndpointRef, NeuronId, SubnetId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // mesh
    #[error("subnet name `{0}` is already in use")]
    DuplicateSubnetName(String),
    #[error("unknown subnet {0}")]
    UnknownSubnet(SubnetId),
    #[error("unknown subnet name `{0}`")]
    UnknownSubnetName(String),
    #[error("unknown neuron {0}")]
    UnknownNeuron(NeuronId),
    #[error("unknown connection {0}")]
    UnknownConnection(ConnectionId),
    #[error("connection endpoint {0} does not resolve")]
    UnknownEndpoint(EndpointRef),
    #[error("a connection needs at least 2 distinct endpoints, got {0}")]
    ArityTooSmall(usize),
    #[error("endpoint {0} listed more than once")]
    DuplicateEndpoint(EndpointRef),
    #[error("subnet {0} is not a target subnet")]
    NotATargetSubnet(SubnetId),
    #[error("no subnet is routed for input `{0}`")]
    UnroutableInput(String),
    #[error("cannot merge subnet {0} with itself")]
    SelfMerge(SubnetId),
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    // prior knowledge
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("prior-knowledge subnet `{0}` has not been built")]
    MissingPriorSubnet(&'static str),

    // tabular
    #[error("attribute `{0}` declared twice")]
    DuplicateAttribute(String),
    #[error("schema must declare exactly one target attribute, found {0}")]
    NoTarget(usize),
    #[error("record does not match schema: {0}")]
    SchemaMismatch(String),
    #[error("categorical value `{0}` has no exact match and no distance axis")]
    NoAxisForCategorical(String),
    #[error("subnet {0} has no neurons")]
    EmptySubnet(SubnetId),
    #[error("subnet {0} is not an attribute subnet")]
    NotAttributeSubnet(SubnetId),
    #[error("neurons {selected} and {anchor} share no target neuron")]
    EmptyIntersection {
        selected: NeuronId,
        anchor: NeuronId,
    },
    #[error("no input attribute produced a result")]
    NoEvidence,
    #[error("nothing to aggregate")]
    EmptyVotes,
    #[error("votes mix value kinds")]
    MixedKinds,
    #[error("bias tag `{0}` already defined")]
    DuplicateBiasTag(String),
    #[error("bias tag `{0}` is not defined")]
    UnknownBiasTag(String),
    #[error("bias rules apply only to numeric targets")]
    BiasOnCategorical,
    #[error("leave-one-out needs at least 2 records, got {0}")]
    TooFewRecords(usize),

    // image
    #[error("malformed image: {0}")]
    MalformedImage(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("image has no storable pixels")]
    EmptyImage,
    #[error("grayscale grid must be quantized before transformation")]
    NotQuantized,
    #[error("subnet {0} is not a shape subnet")]
    NotAShapeSubnet(SubnetId),
    #[error("subnet {0} holds no unit pixel chain")]
    NotAUnitSubnet(SubnetId),
    #[error("image model has no registered entries")]
    EmptyModel,

    // io
    #[error("CSV header does not match schema: {0}")]
    HeaderMismatch(String),
    #[error("line {line}: {message}")]
    RowParse { line: u64, message: String },
    #[error("cannot parse value `{text}` as {kind}")]
    ValueParse { text: String, kind: String },
    #[error("archive version `{0}` is not supported")]
    ArchiveVersionMismatch(String),
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
