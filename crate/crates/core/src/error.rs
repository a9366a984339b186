use thiserror::Error;

/// Operand shapes are incompatible for an operation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("shape error in {op}: {detail}")]
pub struct ShapeError {
    pub op: &'static str,
    pub detail: String,
}

impl ShapeError {
    pub fn new(op: &'static str, detail: impl Into<String>) -> Self {
        Self {
            op,
            detail: detail.into(),
        }
    }

    pub fn mismatch(op: &'static str, a: (usize, usize), b: (usize, usize)) -> Self {
        Self::new(op, format!("{}x{} vs {}x{}", a.0, a.1, b.0, b.1))
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("node index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph has no edges")]
    EmptyEdgeSet,
    #[error("label vector has {got} entries, graph has {n} nodes")]
    LabelLength { got: usize, n: usize },
    #[error("label {label} at node {node} is not below class count {classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        classes: usize,
    },
    #[error("non-finite feature value at row {row}")]
    NonFinite { row: usize },
    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),
}

/// Failures while reading a graph file. Each variant is a distinct,
/// stable error code.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o failure")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("line {line}: index out of range ({u}, {v}) for n={n}")]
    IndexOutOfRange { line: usize, u: usize, v: usize, n: usize },
    #[error("line {line}: edge ({u}, {v}) is not listed as u < v")]
    NonCanonicalEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: label {label} not below class count {classes}")]
    LabelOutOfRange { line: usize, label: usize, classes: usize },
    #[error("missing `edges` sentinel")]
    MissingSentinel,
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::Io(_) => "io",
            FormatError::MalformedHeader(_) => "malformed-header",
            FormatError::MalformedLine { .. } => "malformed-line",
            FormatError::IndexOutOfRange { .. } => "index-out-of-range",
            FormatError::NonCanonicalEdge { .. } => "non-canonical-edge",
            FormatError::DuplicateEdge { .. } => "duplicate-edge",
            FormatError::LabelOutOfRange { .. } => "label-out-of-range",
            FormatError::MissingSentinel => "missing-sentinel",
        }
    }
}

#[derive(Debug, Error)]
pub enum TensorError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("{op}: index {index} out of range for {len} rows")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        len: usize,
    },
    #[error("{op}: produced a non-finite value")]
    NonFinite { op: &'static str },
}

#[derive(Debug, Error)]
pub enum LossError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{0}: empty row subset")]
    EmptyRows(&'static str),
    #[error("invalid loss config: {0}")]
    Config(String),
    #[error("input vector is not unit-normalised (norm {0})")]
    NotNormalized(f64),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o failure")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0:?}")]
    VersionMismatch(char),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("checkpoint shape table is inconsistent: {0}")]
    Layout(String),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("training split contains a single class")]
    SingleClass,
    #[error("cannot form {k} clusters from {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("need at least 2 clusters")]
    TooFewClusters,
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("numerical failure at epoch {epoch}: {detail}")]
    Numerical { epoch: usize, detail: String },
    #[error("i/o failure")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Non-finite losses or activations, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical { .. }
                | Error::Tensor(TensorError::NonFinite { .. })
                | Error::Loss(LossError::Tensor(TensorError::NonFinite { .. }))
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
