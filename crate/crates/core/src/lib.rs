//! Anytime, asymptotically optimal bidirectional RRT planning.
//!
//! [`planner::aorrtc`] runs RRT-Connect repeatedly in a cost-augmented search
//! space, each run bounded by the cost of the best simplified solution so
//! far. The crate also provides the baselines used in benchmarks
//! (plain RRT-Connect and Anytime RRT-Connects) and the geometric worlds they
//! are evaluated on.

pub mod augmented;
pub mod informed;
pub mod planner;
pub mod problem;
pub mod simplify;
pub mod space;

pub use augmented::{augmented_distance, extract_path, MetricWeights, SearchTree, TreeRole, VertexId};
pub use informed::InformedSampler;
pub use planner::{
    aorrtc, anytime_rrt_connects, rrt_connect, rrt_connect_plain, AnytimeObserver, AnytimeRecord,
    Budget, FirstSolution, GrowthStep, NoObserver, PlannerConfig, PlannerKind, PlannerRng, SearchOutcome,
    SearchReason, SolutionEvent, StopReason,
};
pub use problem::{Problem, ProblemError};
pub use space::{cost, path_cost, steer, Configuration, ConfigurationSpace, Path, World};
