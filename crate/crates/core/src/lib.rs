//! Thick families of geodesics built from ε-bushes in finite-dimensional
//! normed spaces.
//!
//! The pipeline: a normalized [`Bush`] feeds a [`LineTree`] of broken-line
//! geodesics labelled by finite bit strings; branches and their pastings
//! form the family, and [`challenge_respond`] plays the thickness game on
//! it, producing a [`ThicknessWitness`] that [`validate_witness`] checks
//! independently.

pub mod bush;
pub mod construction;
pub mod error;
pub mod family;
pub mod gauge;
pub mod io;
pub mod oracle;
pub mod rational;
pub mod simplex;
pub mod space;

pub use bush::{
    dyadic_bush, dyadic_bush_with_budget, lambda_max, midpoint_y, random_bush, shift_bush,
    validate_bush, Bush, BushParts, BushReport, MidpointVector, DEFAULT_DEPTH_BUDGET,
};
pub use construction::{
    child_line, eval_at, intermediate_line, root_line, vertices, BrokenLine, Generator, Label,
    LineTree, SiblingDeviation, Term,
};
pub use error::{Error, Result};
pub use family::{
    branch_eval, challenge_respond, paste, random_pasted_geodesic, truncated_family,
    validate_witness, BranchSpec, BranchValue, ChallengeResponse, Curve, PastedGeodesic,
    ThicknessWitness, WitnessReport,
};
pub use gauge::{gauge_renorm, Renormed};
pub use io::NumberFormat;
pub use oracle::{brute_force_alpha, grid_witness, AlphaReport};
pub use rational::{parse_rational, Rational, Real};
pub use space::{functional_eval, Functional, NormKind, NormedSpace, Vector};
