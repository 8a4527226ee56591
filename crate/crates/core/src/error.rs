use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("valuation of an empty series is undefined")]
    EmptySeries,
    #[error("cannot truncate at {requested}: series is only certified up to {horizon}")]
    HorizonExceeded { requested: String, horizon: String },
    #[error("malformed series document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("non-polynomial input at byte {pos}: {detail}")]
    NonPolynomial { pos: usize, detail: String },
    #[error("D(u,{index}) exceeds the declared order {order}")]
    IndexOutOfRange { index: usize, order: usize },
    #[error("declared order {order} but the highest derivative used is {used}")]
    OrderNotAttained { order: usize, used: usize },
    #[error("the equation is identically zero")]
    ZeroEquation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("all leading coefficients A_i vanish")]
    AllLeadingZero,
    #[error("leading data not certified: {0}")]
    Unstable(String),
    #[error("dF/du_{0} vanishes identically along the series")]
    DerivativeIdenticallyZero(usize),
    #[error("dF/du_{i} has exponent {exponent} with the same real part as the leading exponent {lambda}")]
    MixedLeadingExponents {
        i: usize,
        exponent: String,
        lambda: String,
    },
    #[error("slope formula gives {formula} but the Newton polygon gives {hull}")]
    Inconsistent { formula: String, hull: String },
    #[error("Newton polygon needs at least one point")]
    EmptyPolygon,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("seed exponent {exponent} has negative real part")]
    NegativeLeadingExponent { exponent: String },
    #[error("residual leading term at {residual} cannot be cancelled after the last exponent {last}")]
    NotASolutionPrefix { residual: String, last: String },
    #[error("resonance: characteristic value vanishes at exponent {exponent}")]
    Resonance { exponent: String },
    #[error("reduction is not applicable: {0}")]
    NotApplicable(String),
    #[error("not enough terms to choose mu: {0}")]
    InsufficientTerms(String),
    #[error("condition {condition} fails for mu = {mu}: {detail}")]
    ConditionViolated {
        condition: u8,
        mu: usize,
        detail: String,
    },
    #[error("operator term z^{alpha}(delta+s)^{i} has non-positive real exponent")]
    NonPositiveAlpha { alpha: String, i: usize },
    #[error("operator term z^{alpha}(delta+s)^{i} violates Re alpha >= (i-p)k")]
    AlphaBelowSlopeBound { alpha: String, i: usize },
    #[error("nonlinear term with exponent {beta} has non-positive real part")]
    NonPositiveBeta { beta: String },
    #[error("coefficient of (delta+s)^{i} at z^0 disagrees with the linearization")]
    LeadingMismatch { i: usize },
    #[error("L vanishes at exponent {exponent}")]
    ZeroDivisor { exponent: String },
    #[error("root finding failed: {0}")]
    RootFinding(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BorelError {
    #[error("generator {0} has non-positive real part")]
    NonPositiveRealPart(String),
    #[error("basis scaling exceeds the limit {0}")]
    UnboundedDenominator(String),
    #[error("exponent {0} is not in the semigroup spanned by the basis")]
    NotInSemigroup(String),
    #[error("Gamma has a pole at {0}")]
    PoleOfGamma(String),
    #[error("need at least {need} nonzero terms, have {have}")]
    TooFewTerms { have: usize, need: usize },
    #[error("semigroup needs at least one generator")]
    NoGenerators,
}

/// Top-level error of the pipeline and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Borel(#[from] BorelError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed: {0}")]
    VerificationFailed(String),
}

impl Error {
    /// Stable machine-readable code for the error envelope.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Series(e) => match e {
                SeriesError::EmptySeries => "EmptySeries",
                SeriesError::HorizonExceeded { .. } => "HorizonExceeded",
                SeriesError::Malformed(_) => "MalformedSeries",
            },
            Error::Parse(e) => match e {
                ParseError::Syntax { .. } => "SyntaxError",
                ParseError::NonPolynomial { .. } => "NonPolynomial",
                ParseError::IndexOutOfRange { .. } => "IndexOutOfRange",
                ParseError::OrderNotAttained { .. } => "OrderNotAttained",
                ParseError::ZeroEquation => "ZeroEquation",
            },
            Error::Analysis(e) => analysis_code(e),
            Error::Solver(e) => match e {
                SolverError::Analysis(a) => analysis_code(a),
                SolverError::NegativeLeadingExponent { .. } => "NegativeLeadingExponent",
                SolverError::NotASolutionPrefix { .. } => "NotASolutionPrefix",
                SolverError::Resonance { .. } => "Resonance",
                SolverError::NotApplicable(_) => "NotApplicable",
                SolverError::InsufficientTerms(_) => "InsufficientTerms",
                SolverError::ConditionViolated { .. } => "ConditionViolated",
                SolverError::NonPositiveAlpha { .. } => "NonPositiveAlpha",
                SolverError::AlphaBelowSlopeBound { .. } => "AlphaBelowSlopeBound",
                SolverError::NonPositiveBeta { .. } => "NonPositiveBeta",
                SolverError::LeadingMismatch { .. } => "LeadingMismatch",
                SolverError::ZeroDivisor { .. } => "ZeroDivisor",
                SolverError::RootFinding(_) => "RootFinding",
            },
            Error::Borel(e) => match e {
                BorelError::NonPositiveRealPart(_) => "NonPositiveRealPart",
                BorelError::UnboundedDenominator(_) => "UnboundedDenominator",
                BorelError::NotInSemigroup(_) => "NotInSemigroup",
                BorelError::PoleOfGamma(_) => "PoleOfGamma",
                BorelError::TooFewTerms { .. } => "TooFewTerms",
                BorelError::NoGenerators => "NoGenerators",
            },
            Error::Usage(_) => "Usage",
            Error::Invalid(_) => "InvalidInput",
            Error::Io { .. } => "Io",
            Error::VerificationFailed(_) => "VerificationFailed",
        }
    }

    /// 1 usage, 2 parse/validation, 3 mathematical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Parse(_) | Error::Invalid(_) | Error::Io { .. } => 2,
            Error::Series(SeriesError::Malformed(_)) => 2,
            Error::Solver(SolverError::NegativeLeadingExponent { .. }) => 2,
            _ => 3,
        }
    }
}

fn analysis_code(e: &AnalysisError) -> &'static str {
    match e {
        AnalysisError::AllLeadingZero => "AllLeadingZero",
        AnalysisError::Unstable(_) => "Unstable",
        AnalysisError::DerivativeIdenticallyZero(_) => "DerivativeIdenticallyZero",
        AnalysisError::MixedLeadingExponents { .. } => "MixedLeadingExponents",
        AnalysisError::Inconsistent { .. } => "Inconsistent",
        AnalysisError::EmptyPolygon => "EmptyPolygon",
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
