//! Finite non-abelian gerbes in four equivalent pictures: Čech cocycles with
//! values in a strict 2-group, principal groupoid bundles and anafunctors,
//! bundle gerbes, and principal 2-bundles, with the constructions that
//! translate between them. Everything is finite and checked exhaustively.

pub mod algebra;
pub mod anafunctor;
pub mod bundle;
pub mod cohomology;
pub mod error;
pub mod gerbe;
pub mod groupoid;
pub mod spec;
pub mod twobundle;
pub mod twogroup;

pub use algebra::{FiniteGroup, GroupAction, GroupHom};
pub use bundle::PrincipalBundle;
pub use cohomology::{ConcreteCover, CoverNerve, H0Cocycle, H1Classes, H1Cocycle};
pub use error::{Error, Result};
pub use gerbe::{DiscreteBundleGerbe, GerbeMorphismFP};
pub use groupoid::{FiniteGroupoid, GroupoidFunctor, NatTransformation};
pub use spec::ObjectSpec;
pub use twobundle::{Principal2Bundle, TwoBundleMorphism};
pub use twogroup::{CrossedModule, TwoGroup, TwoGroupHom};
