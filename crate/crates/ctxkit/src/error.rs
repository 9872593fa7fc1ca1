//! Crate-wide error type.
//!
//! Every fallible operation in the crate returns [`Error`]. Variants carry the
//! human-readable identifiers involved (measurement names, context keys,
//! rendered sections) so that command-line diagnostics can point at the exact
//! offending piece of a document.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by scenario construction, model validation, analysis,
/// and document parsing.
#[derive(Debug, Error)]
pub enum Error {
    /// Two cover contexts are related by inclusion.
    #[error("cover is not an antichain: context {{{sub}}} is contained in {{{sup}}}")]
    AntichainViolation { sub: String, sup: String },

    /// Some declared measurement belongs to no context.
    #[error("cover does not reach every measurement: missing {missing:?}")]
    CoverageGap { missing: Vec<String> },

    /// A measurement was declared with an empty outcome set.
    #[error("measurement {measurement} has an empty outcome set")]
    EmptyOutcomeSet { measurement: String },

    /// The same context was declared twice.
    #[error("duplicate context {{{key}}}")]
    DuplicateContext { key: String },

    /// A context with no measurements was declared.
    #[error("empty context declared")]
    EmptyContext,

    /// A name was used that is not a declared measurement.
    #[error("unknown measurement {name}")]
    UnknownMeasurement { name: String },

    /// An identifier contains a character reserved by the document or CLI
    /// syntax (comma, equals sign, whitespace, control characters).
    #[error("identifier {name} contains a reserved character")]
    ReservedCharacter { name: String },

    /// Section restriction was asked for a set that is not inside its domain.
    #[error("restriction target {target:?} is not a subset of the section domain")]
    NotSubdomain { target: Vec<String> },

    /// The measurement subsets handed to the Bell-type check do not partition
    /// the measurement set.
    #[error("not a partition of the measurements: {detail}")]
    NotAPartition { detail: String },

    /// The cover's intersection graph is not connected.
    #[error("cover is not connected")]
    DisconnectedCover,

    /// Condition 1 failed: a context has an empty support.
    #[error("context {{{context}}} has an empty support")]
    EmptyContextSupport { context: String },

    /// Condition 2 failed: a supported section has no match in a neighbouring
    /// context.
    #[error(
        "support is not flasque beneath the cover: section {section} of {{{context}}} \
         has no agreeing section in {{{other}}}"
    )]
    FlasquenessViolation {
        context: String,
        section: String,
        other: String,
    },

    /// A listed support section is not an event of its context.
    #[error("section {section} is not an event of context {{{context}}}")]
    SectionOutsideEvents { context: String, section: String },

    /// A derived-section query was made for a set not contained in any context
    /// (and different from the whole measurement set).
    #[error("measurement set {subset:?} is not beneath the cover")]
    NotBeneathCover { subset: Vec<String> },

    /// A query named a section that is not in the support of its context.
    #[error("section {section} is not in the support of context {{{context}}}")]
    UnknownSection { context: String, section: String },

    /// A subcover restriction listed a context that is not in the cover.
    #[error("context {{{context}}} is not part of the cover")]
    NotSubcover { context: String },

    /// The scenario reduces to nothing under Graham reduction, so joint levels
    /// are not constructed (such models have no contextual behaviour).
    #[error("scenario is acyclic under Graham reduction")]
    AcyclicScenario,

    /// A configured size budget was exceeded while building a tower level.
    #[error(
        "resource budget exceeded at tower level {level}: {needed} supported sections \
         over a budget of {budget}"
    )]
    ResourceLimit {
        level: usize,
        needed: u64,
        budget: u64,
    },

    /// A contextual-cycle search was started from a section that extends to a
    /// compatible family.
    #[error("section {section} of {{{context}}} is not logically contextual")]
    NotContextualSection { context: String, section: String },

    /// The built-in zoo has no entry under this name.
    #[error("unknown zoo entry {name}")]
    UnknownZooEntry { name: String },

    /// A section argument (`m1,m2=o1,o2`) could not be interpreted.
    #[error("cannot parse section argument {arg}: {msg}")]
    SectionSyntax { arg: String, msg: String },

    /// A forced analysis route does not apply to the queried model.
    #[error("route {route} is not available here: {reason}")]
    RouteUnavailable { route: String, reason: String },

    /// Strict parsing rejected a field outside the document schema.
    #[error("unknown document field {field} (strict mode)")]
    UnknownField { field: String },

    /// The document declares a format revision this build does not read.
    #[error("unsupported format_version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    /// Document text could not be parsed.
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    /// A structurally valid document failed semantic validation; `location`
    /// names the document field or key at fault.
    #[error("invalid document at {location}: {source}")]
    Document {
        location: String,
        #[source]
        source: Box<Error>,
    },

    /// An internal consistency assertion failed. Seeing this is a bug in the
    /// crate, not in the caller's input.
    #[error("internal validation failure: {detail}")]
    ValidationFailure { detail: String },

    /// Underlying I/O failure when reading a document from disk.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the document location it was triggered from.
    pub fn at_location(self, location: impl Into<String>) -> Error {
        Error::Document {
            location: location.into(),
            source: Box::new(self),
        }
    }
}
