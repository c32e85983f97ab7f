pub mod distance;
pub mod error;
pub mod functionals;
pub mod lethargy;
mod lp;
pub mod scenario;
pub mod space;

pub use distance::{best_approximant, rho, rho_oracle, DistanceResult, Solver};
pub use error::{Error, Result};
pub use space::{contains, norm_eval, validate_chain, Chain, NormSpec, Subspace, ValidationReport, Vector};
pub use lethargy::{
    build_schedule, check_borodin_condition, check_subspace_condition, construct_prefix, construct_sequence,
    finite_construct, interpolating_family, lipschitz_check, normalize_step, ConstructOptions, ConstructionTrace,
    SequenceOutcome, Tail, TargetSequence,
};
