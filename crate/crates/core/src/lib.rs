//! McKay correspondence data for finite subgroups of `SL_2`, equivariant Tor
//! modules of Kleinian point ideals, and the Euler-characteristic Hall algebra
//! of double quivers with a Serre-relation verifier.

pub mod binpoly;
pub mod chartab;
pub mod check;
pub mod dquiver;
pub mod error;
pub mod ffla;
pub mod hall;
pub mod kacmoody;
pub mod kleinian;
pub mod pipeline;

pub use binpoly::{build_group, choose_modulus, conjugacy_classes, ConjugacyClasses, FiniteMatrixGroup, GroupSpec};
pub use chartab::{canonicalize, character_table, mckay_graph, tensor_multiplicities, AffineType, CharacterTable, McKayGraphData, TensorMultiplicities};
pub use error::{Error, Result};
pub use ffla::{FpMatrix, PrimeField, RationalPolynomial, Subspace};
pub use pipeline::{emit_report, run, Report, RunConfig, Stage};
