use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("qubit count must be at least 1")]
    NoQubits,

    #[error("{n_qubits} qubits exceeds the limit of {max} for this representation")]
    DimensionTooLarge { n_qubits: usize, max: usize },

    #[error("basis index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },

    #[error("expected {expected} entries, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("amplitude vector has zero norm")]
    ZeroVector,

    #[error("amplitude vector contains a non-finite entry")]
    NonFiniteAmplitude,

    #[error("squared norm {norm_sqr} is not 1 within tolerance")]
    NotNormalized { norm_sqr: f64 },

    #[error("squared norm drifted to {norm_sqr} after {op}")]
    NormDrift { norm_sqr: f64, op: String },

    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    BadQubit { qubit: usize, n_qubits: usize },

    #[error("control and target are both qubit {0}")]
    ControlIsTarget(usize),

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("expectation has imaginary residue {residue}")]
    ComplexExpectation { residue: f64 },

    #[error("cannot parse Pauli term {0:?}")]
    ParsePauli(String),

    #[error("rotation angle {0} is not finite")]
    NonFiniteAngle(f64),

    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),

    #[error("operator has non-real matrix entries")]
    NotReal,

    #[error("coefficient {0} is not an integer")]
    NonIntegerCoefficient(f64),

    #[error("circuit synthesis supports 1 or 2 qubits, got {0}")]
    UnsupportedSynthesis(usize),

    #[error("target amplitudes are not reachable by the synthesis ansatz: {0}")]
    Unreachable(String),

    #[error("term {0} cannot be assigned to a Z/X measurement setting")]
    Ungroupable(String),

    #[error("readout flip probability {0} outside [0, 0.5)")]
    BadFlipProbability(f64),

    #[error("shot count must be positive")]
    NoShots,

    #[error("reference value is zero")]
    ZeroReference,

    #[error("malformed measurement data: {0}")]
    Data(String),
}

impl Error {
    /// True for errors caused by externally supplied measurement data.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Data(_))
    }
}
