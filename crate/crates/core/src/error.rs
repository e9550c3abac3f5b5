use thiserror::Error;

/// Every failure the library reports. Variants carry the indices that
/// witness the failure so callers can replay them.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("table shape mismatch: {0}")]
    Shape(String),
    #[error("identity is not at index 0 (row/column {0} differs)")]
    NoIdentityAtZero(usize),
    #[error("not associative at ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    #[error("row or column {0} is not a permutation")]
    NotInvertible(usize),
    #[error("map is not a homomorphism at ({0}, {1})")]
    NotHomomorphism(usize, usize),
    #[error("action is not by automorphisms: {0}")]
    InvalidAction(String),
    #[error("size limit exceeded: {what} needs {needed}, cap is {cap}")]
    SizeLimitExceeded { what: String, needed: u128, cap: u128 },
    #[error("equivariance fails at g={0}, h={1}")]
    EquivarianceFails(usize, usize),
    #[error("Peiffer identity fails at h={0}, x={1}")]
    PeifferFails(usize, usize),
    #[error("groupoid axiom fails: {0}")]
    GroupoidAxiom(String),
    #[error("functor axiom fails: {0}")]
    FunctorAxiom(String),
    #[error("source/target mismatch: {0}")]
    SourceTargetMismatch(String),
    #[error("composition not closed in nerve at {0:?}")]
    CompositionNotClosed(Vec<usize>),
    #[error("face closure violated at {0:?}")]
    FaceClosureViolated(Vec<usize>),
    #[error("sets do not cover the base: point {0} missing")]
    NotACover(usize),
    #[error("cocycle condition fails at {0:?}")]
    CocycleConditionFails(Vec<usize>),
    #[error("bundle axiom fails: {0}")]
    BundleAxiom(String),
    #[error("principality fails: {0}")]
    NotPrincipal(String),
    #[error("map is not a bundle morphism: {0}")]
    NotBundleMorphism(String),
    #[error("anafunctor axiom fails: {0}")]
    AnafunctorAxiom(String),
    #[error("quotient action ill-defined: {0}")]
    QuotientActionIllDefined(String),
    #[error("anti-equivariance fails at p={0}, h={1}")]
    AntiEquivarianceFails(usize, usize),
    #[error("Gamma-action axiom fails: {0}")]
    ActionAxiomFails(String),
    #[error("not associative over Y^[4] at {0:?}")]
    GerbeNotAssociative(Vec<usize>),
    #[error("product not well-defined on tensor classes: {0}")]
    ProductIllDefined(String),
    #[error("unit not unique at y={0}")]
    UnitNotUnique(usize),
    #[error("inverse missing for p={0}")]
    InverseMissing(usize),
    #[error("not a refinement at w={0}")]
    NotARefinement(usize),
    #[error("morphism compatibility fails: {0}")]
    MorphismIncompatible(String),
    #[error("descent fails: {0}")]
    DescentFails(String),
    #[error("strict action axiom fails: {0}")]
    ActionNotStrict(String),
    #[error("tau is not a weak equivalence: {0}")]
    TauNotWeakEquivalence(String),
    #[error("result depends on a choice: {0}")]
    ChoiceDependenceDetected(String),
    #[error("beta property ({0}) fails: {1}")]
    BetaPropertyFails(&'static str, String),
    #[error("no trivialization constant on intersections: {0}")]
    NotConstantOnIntersection(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_index(index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index, size })
    }
}
