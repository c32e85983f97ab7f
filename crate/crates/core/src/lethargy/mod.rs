//! Prescribed distance sequences and the constructions that realize them.

mod conditions;
mod construct;
mod steps;
mod targets;

pub use conditions::{
    build_schedule, check_borodin_condition, check_subspace_condition, step_span_samples, BorodinReport,
    BorodinSchedule, SampleCheck, SubspaceConditionReport,
};
pub use construct::{
    construct_prefix, construct_sequence, finite_construct, CoefficientBound, ConstructOptions, ConstructionTrace,
    PrefixOutcome, SequenceOutcome, StepFamilies, StepKind, CONSTRUCT_TOL,
};
pub use steps::{
    interpolating_family, interpolating_family_anchored, lipschitz_check, normalize_step, FamilyMember,
    InterpolationFamily, LipschitzPair, LipschitzReport,
};
pub use targets::{Tail, TargetSequence};
