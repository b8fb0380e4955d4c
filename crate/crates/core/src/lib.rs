//! Parallel divide-and-conquer black-box optimization: NPDC, cooperative
//! coevolution baselines, a shifted/rotated benchmark generator and the
//! analysis helpers used to compare them.

pub mod analysis;
pub mod budget;
pub mod cc;
pub mod decomposition;
pub mod error;
pub mod exec;
pub mod npdc;
pub mod problems;
pub mod record;
pub mod rng;
pub mod search_kernel;
pub mod timing;

pub use budget::Budget;
pub use cc::{run_cc, CcConfig, GroupingStrategy, Workflow};
pub use decomposition::{differential_grouping, natural_grouping, random_grouping, Grouping};
pub use error::{Error, Result};
pub use exec::Executor;
pub use npdc::{run_npdc, run_npdc_detailed, IterationOptions, NpdcConfig, Variant};
pub use problems::{
    make_problem, BaseFunction, CostlyObjective, FnObjective, Objective, ObjectiveProblem,
    ProblemDescriptor, StructureClass,
};
pub use record::{RunRecord, Timing, TrajectoryPoint};
