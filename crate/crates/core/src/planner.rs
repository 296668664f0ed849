//! AORRTC and its baselines.
//!
//! The inner search is a bidirectional RRT-Connect over the cost-augmented
//! space: every sample carries a cost bound, nearest-neighbour queries only
//! see vertices that could meet that bound, and a new vertex's parent is
//! repeatedly re-chosen by lowering its sampled cost. The anytime driver
//! restarts that search under the cost of the best (simplified) solution so
//! far until the budget runs out.
//!
//! Anytime RRT-Connects reuses the same driver and search loop with the cost
//! dimension switched off: only informed configuration sampling remains.

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::augmented::{extract_path, MetricWeights, SearchTree, TreeRole, VertexId};
use crate::informed::{resample_lower, sample_cost_bound, InformedSampler};
use crate::problem::Problem;
use crate::simplify::{simplify, SimplifyConfig};
use crate::space::{cost, steer, Path, World};

/// Edge range used for revolute-joint spaces.
pub const ARM_EDGE_RANGE: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("edge range must be positive, got {0}")]
    EdgeRange(f64),
    #[error("validation resolution must be positive, got {0}")]
    Resolution(f64),
    #[error("time budget must be positive")]
    Budget,
    #[error("unknown planner {0:?} (expected aorrtc, aorrtc-nosimp, rrtc or arrtc)")]
    UnknownPlanner(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub weights: MetricWeights,
    pub edge_range: f64,
    pub validation_resolution: f64,
    /// Grow the smaller tree each iteration instead of strictly alternating.
    pub balance_trees: bool,
    /// Simplify every solution before using its cost as the next bound.
    pub simplify: bool,
    /// Run the parent-lowering resampling loop in `extend`.
    pub resample_costs: bool,
    pub rng_seed: u64,
    pub time_budget: Duration,
    pub max_iterations: Option<u64>,
    pub simplifier: SimplifyConfig,
    /// Share of the remaining budget one simplification call may use.
    pub simplify_budget_fraction: f64,
}

impl PlannerConfig {
    /// Defaults scaled to the problem: 10% of the space diagonal per edge
    /// (2.0 rad for arms) and 1% of the diagonal between validation points.
    pub fn for_problem(problem: &Problem) -> Self {
        let diagonal = problem.space().diagonal();
        let validation_resolution = 0.01 * diagonal;
        PlannerConfig {
            weights: MetricWeights::default(),
            edge_range: if problem.world().is_arm() {
                ARM_EDGE_RANGE
            } else {
                0.1 * diagonal
            },
            validation_resolution,
            balance_trees: true,
            simplify: true,
            resample_costs: true,
            rng_seed: 0,
            time_budget: Duration::from_secs(1),
            max_iterations: None,
            simplifier: SimplifyConfig::with_resolution(validation_resolution),
            simplify_budget_fraction: 0.1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.time_budget = budget;
        self
    }

    pub fn check(&self) -> Result<(), PlannerError> {
        if !(self.edge_range > 0.0) {
            return Err(PlannerError::EdgeRange(self.edge_range));
        }
        if !(self.validation_resolution > 0.0) {
            return Err(PlannerError::Resolution(self.validation_resolution));
        }
        if self.time_budget.is_zero() || self.max_iterations == Some(0) {
            return Err(PlannerError::Budget);
        }
        Ok(())
    }

    fn simplify_config(&self) -> SimplifyConfig {
        SimplifyConfig {
            resolution: self.validation_resolution,
            ..self.simplifier.clone()
        }
    }
}

/// Independent random streams for one planner run, all derived from one seed.
///
/// Configuration and cost-bound sampling, extend's cost resampling, and
/// simplification each draw from their own stream, so toggling one stage
/// does not shift the random sequence seen by the others.
#[derive(Debug, Clone)]
pub struct PlannerRng {
    pub sampling: ChaCha8Rng,
    pub resampling: ChaCha8Rng,
    pub simplifying: ChaCha8Rng,
}

impl PlannerRng {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        PlannerRng {
            sampling: stream(0),
            resampling: stream(1),
            simplifying: stream(2),
        }
    }
}

/// Wall-clock and iteration allowance shared by every search of one run.
#[derive(Debug, Clone)]
pub struct Budget {
    started: Instant,
    deadline: Option<Instant>,
    max_iterations: Option<u64>,
    iterations: u64,
}

impl Budget {
    pub fn new(time: Duration, max_iterations: Option<u64>) -> Self {
        let started = Instant::now();
        Budget {
            started,
            deadline: started.checked_add(time),
            max_iterations,
            iterations: 0,
        }
    }

    pub fn from_config(cfg: &PlannerConfig) -> Self {
        Self::new(cfg.time_budget, cfg.max_iterations)
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn deadline(&self) -> Option<Instant> {
        self.deadline
    }

    pub fn remaining(&self) -> Option<Duration> {
        self.deadline
            .map(|d| d.saturating_duration_since(Instant::now()))
    }

    pub fn exhausted(&self) -> bool {
        self.max_iterations.is_some_and(|m| self.iterations >= m)
            || self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn tick(&mut self) {
        self.iterations += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchReason {
    Solved,
    Timeout,
    /// The bound is at or below the straight-line cost: nothing can beat it.
    BoundInfeasible,
}

/// Result of one inner search, trees included.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub path: Option<Path>,
    pub iterations: u64,
    pub vertices_built: usize,
    pub reason: SearchReason,
    pub elapsed: Duration,
    pub start_tree: SearchTree,
    pub goal_tree: SearchTree,
    /// One entry per iteration that picked a tree to extend.
    pub grown: Vec<GrowthStep>,
}

/// Which tree an iteration extended, with both tree sizes at that moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthStep {
    pub role: TreeRole,
    pub grown_len: usize,
    pub other_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SearchMode {
    /// Cost-augmented search.
    Augmented,
    /// Plain RRT-Connect geometry with informed configuration samples only.
    ConfigurationOnly,
}

struct Context<'a> {
    world: &'a World,
    cfg: &'a PlannerConfig,
    mode: SearchMode,
    connect_step_cap: usize,
}

/// Adds `x_new` to `tree`, starting from parent `x_near` and lowering the
/// parent's cost while the resampled bound finds a valid cheaper one.
/// Returns the new vertex and its cost-to-come.
pub fn extend(
    tree: &mut SearchTree,
    x_near: VertexId,
    x_new: &[f64],
    world: &World,
    cfg: &PlannerConfig,
    rng: &mut PlannerRng,
) -> (VertexId, f64) {
    extend_in(tree, x_near, x_new, world, cfg, SearchMode::Augmented, rng)
}

fn extend_in(
    tree: &mut SearchTree,
    x_near: VertexId,
    x_new: &[f64],
    world: &World,
    cfg: &PlannerConfig,
    mode: SearchMode,
    rng: &mut PlannerRng,
) -> (VertexId, f64) {
    let mut parent = x_near;
    let mut c_new = tree.cost(parent) + cost(tree.config(parent), x_new);
    if mode == SearchMode::Augmented && cfg.resample_costs {
        let g_hat = tree.cost_to_come_estimate(x_new);
        loop {
            let c_rand = resample_lower(c_new, g_hat, &mut rng.resampling);
            let Some(candidate) = tree.nearest(x_new, c_rand, cfg.weights) else {
                break;
            };
            if candidate == parent
                || !world.validate(tree.config(candidate), x_new, cfg.validation_resolution)
            {
                break;
            }
            parent = candidate;
            // strictly below the previous c_new by the nearest filter
            c_new = tree.cost(parent) + cost(tree.config(parent), x_new);
        }
    }
    (tree.push(x_new, c_new, parent), c_new)
}

/// Grows `tree_b` toward `x`, reached in the opposite tree at cost `c`, under
/// the remaining budget `c_max − c`. Returns the vertex placed at `x` when
/// the trees meet.
pub fn connect(
    tree_b: &mut SearchTree,
    x: &[f64],
    c: f64,
    c_max: f64,
    world: &World,
    cfg: &PlannerConfig,
    rng: &mut PlannerRng,
) -> Option<VertexId> {
    let ctx = Context {
        world,
        cfg,
        mode: SearchMode::Augmented,
        connect_step_cap: default_step_cap(tree_b, x, cfg.edge_range),
    };
    connect_in(tree_b, x, c, c_max, &ctx, rng)
}

fn default_step_cap(tree: &SearchTree, x: &[f64], range: f64) -> usize {
    let reach = cost(tree.root(), x) + cost(tree.goal_anchor(), x);
    2 * (reach / range).ceil() as usize + 4
}

fn connect_in(
    tree_b: &mut SearchTree,
    x: &[f64],
    c: f64,
    c_max: f64,
    ctx: &Context<'_>,
    rng: &mut PlannerRng,
) -> Option<VertexId> {
    let bound = match ctx.mode {
        SearchMode::Augmented => c_max - c,
        SearchMode::ConfigurationOnly => f64::INFINITY,
    };
    let mut origins: Vec<VertexId> = Vec::new();
    loop {
        let near = tree_b.nearest(x, bound, ctx.cfg.weights)?;
        // With a finite bound the cost term can steer the query back to an
        // already-used origin; that would only re-add the same vertex.
        if origins.contains(&near) || origins.len() >= ctx.connect_step_cap {
            return None;
        }
        origins.push(near);
        let x_new = steer(tree_b.config(near), x, ctx.cfg.edge_range);
        if !ctx
            .world
            .validate(tree_b.config(near), &x_new, ctx.cfg.validation_resolution)
        {
            return None;
        }
        let (id, _) = extend_in(tree_b, near, &x_new, ctx.world, ctx.cfg, ctx.mode, rng);
        if x_new.as_slice() == x {
            return Some(id);
        }
    }
}

fn pair_mut(trees: &mut [SearchTree; 2], a: usize) -> (&mut SearchTree, &mut SearchTree) {
    let (left, right) = trees.split_at_mut(1);
    if a == 0 {
        (&mut left[0], &mut right[0])
    } else {
        (&mut right[0], &mut left[0])
    }
}

/// One cost-bounded RRT-Connect search in the augmented space.
///
/// Any returned path costs strictly less than `c_max`.
pub fn rrt_connect(
    problem: &Problem,
    c_max: f64,
    cfg: &PlannerConfig,
    rng: &mut PlannerRng,
    budget: &mut Budget,
) -> SearchOutcome {
    search(problem, c_max, cfg, rng, budget, SearchMode::Augmented)
}

fn search(
    problem: &Problem,
    c_max: f64,
    cfg: &PlannerConfig,
    rng: &mut PlannerRng,
    budget: &mut Budget,
    mode: SearchMode,
) -> SearchOutcome {
    let started = Instant::now();
    let start = problem.start();
    let goal = problem.goal();
    let mut trees = [
        SearchTree::new(TreeRole::Start, start.clone(), goal.clone()),
        SearchTree::new(TreeRole::Goal, goal.clone(), start.clone()),
    ];
    let mut grown = Vec::new();
    let finish = |trees: [SearchTree; 2], path, iterations, reason, grown| {
        let [start_tree, goal_tree] = trees;
        SearchOutcome {
            path,
            iterations,
            vertices_built: start_tree.len() + goal_tree.len(),
            reason,
            elapsed: started.elapsed(),
            start_tree,
            goal_tree,
            grown,
        }
    };
    if !(c_max > problem.straight_line_cost()) {
        return finish(trees, None, 0, SearchReason::BoundInfeasible, grown);
    }

    let sampler = InformedSampler::new(problem.space(), start, goal, c_max);
    let diagonal = problem.space().diagonal();
    let ctx = Context {
        world: problem.world(),
        cfg,
        mode,
        connect_step_cap: 2 * (diagonal / cfg.edge_range).ceil() as usize + 4,
    };
    let mut iterations = 0u64;
    let mut a = 0usize;
    loop {
        if budget.exhausted() {
            return finish(trees, None, iterations, SearchReason::Timeout, grown);
        }
        budget.tick();
        iterations += 1;
        if cfg.balance_trees {
            if trees[1 - a].len() < trees[a].len() {
                a = 1 - a;
            }
        } else if iterations > 1 {
            a = 1 - a;
        }

        let Some(x_rand) = sampler.sample(&mut rng.sampling) else {
            continue;
        };
        let (tree_a, tree_b) = pair_mut(&mut trees, a);
        let c_rand = match mode {
            SearchMode::Augmented => {
                let g_hat = tree_a.cost_to_come_estimate(&x_rand);
                let h_hat = tree_a.cost_to_go_estimate(&x_rand);
                match sample_cost_bound(g_hat, h_hat, c_max, &mut rng.sampling) {
                    Ok(Some(c)) => c,
                    _ => continue,
                }
            }
            SearchMode::ConfigurationOnly => f64::INFINITY,
        };
        let Some(near) = tree_a.nearest(&x_rand, c_rand, cfg.weights) else {
            continue;
        };
        grown.push(GrowthStep {
            role: tree_a.role(),
            grown_len: tree_a.len(),
            other_len: tree_b.len(),
        });
        let x_new = steer(tree_a.config(near), &x_rand, cfg.edge_range);
        if !ctx
            .world
            .validate(tree_a.config(near), &x_new, cfg.validation_resolution)
        {
            continue;
        }
        let (new_id, c_new) = extend_in(tree_a, near, &x_new, ctx.world, cfg, mode, rng);
        if let Some(bridge) = connect_in(tree_b, &x_new, c_new, c_max, &ctx, rng) {
            let path = extract_path(tree_a, tree_b, new_id, bridge)
                .expect("bridge vertices come from opposite trees");
            // guard against rounding pushing the joined cost onto the bound
            if mode == SearchMode::ConfigurationOnly || path.cost() < c_max {
                return finish(trees, Some(path), iterations, SearchReason::Solved, grown);
            }
        }
    }
}

/// RRT-Connect for a first solution: the augmented search with an infinite
/// bound, without simplification.
pub fn rrt_connect_plain(problem: &Problem, cfg: &PlannerConfig) -> SearchOutcome {
    let mut rng = PlannerRng::from_seed(cfg.rng_seed);
    let mut budget = Budget::from_config(cfg);
    rrt_connect(problem, f64::INFINITY, cfg, &mut rng, &mut budget)
}

/// One improvement reported by an anytime planner.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionEvent {
    pub elapsed: Duration,
    /// Search iterations consumed when the solution was accepted.
    pub iteration: u64,
    pub cost: f64,
    pub waypoints: usize,
    /// Time spent simplifying this solution (included in `elapsed`).
    pub simplify_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Timeout,
    /// The best cost reached the straight-line lower bound.
    BoundInfeasible,
    /// The observer asked to stop.
    Stopped,
}

#[derive(Debug, Clone)]
pub struct AnytimeRecord {
    pub events: Vec<SolutionEvent>,
    pub final_path: Option<Path>,
    pub reason: StopReason,
    pub searches: usize,
    pub iterations: u64,
    pub vertices_built: usize,
    /// Solutions rejected because they did not beat the current bound.
    pub discarded: usize,
}

impl AnytimeRecord {
    pub fn solved(&self) -> bool {
        self.final_path.is_some()
    }

    pub fn initial(&self) -> Option<&SolutionEvent> {
        self.events.first()
    }

    pub fn best(&self) -> Option<&SolutionEvent> {
        self.events.last()
    }
}

/// Callbacks from an anytime run, invoked on the planner's thread.
pub trait AnytimeObserver {
    fn on_solution(&mut self, _event: &SolutionEvent, _path: &Path) -> ControlFlow<()> {
        ControlFlow::Continue(())
    }

    fn on_search(&mut self, _outcome: &SearchOutcome) {}
}

/// Observer that ignores everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl AnytimeObserver for NoObserver {}

impl<F> AnytimeObserver for F
where
    F: FnMut(&SolutionEvent, &Path) -> ControlFlow<()>,
{
    fn on_solution(&mut self, event: &SolutionEvent, path: &Path) -> ControlFlow<()> {
        self(event, path)
    }
}

/// Observer that stops after the first solution.
#[derive(Debug, Default, Clone, Copy)]
pub struct FirstSolution;

impl AnytimeObserver for FirstSolution {
    fn on_solution(&mut self, _event: &SolutionEvent, _path: &Path) -> ControlFlow<()> {
        ControlFlow::Break(())
    }
}

/// AORRTC: cost-bounded RRT-Connect restarted under each new best cost.
pub fn aorrtc<O: AnytimeObserver + ?Sized>(
    problem: &Problem,
    cfg: &PlannerConfig,
    observer: &mut O,
) -> AnytimeRecord {
    run_anytime(problem, cfg, SearchMode::Augmented, observer)
}

/// Anytime RRT-Connects: restarted RRT-Connect with informed configuration
/// sampling only, keeping a restart's solution when it is cheaper.
pub fn anytime_rrt_connects<O: AnytimeObserver + ?Sized>(
    problem: &Problem,
    cfg: &PlannerConfig,
    observer: &mut O,
) -> AnytimeRecord {
    run_anytime(problem, cfg, SearchMode::ConfigurationOnly, observer)
}

fn run_anytime<O: AnytimeObserver + ?Sized>(
    problem: &Problem,
    cfg: &PlannerConfig,
    mode: SearchMode,
    observer: &mut O,
) -> AnytimeRecord {
    let mut budget = Budget::from_config(cfg);
    let mut rng = PlannerRng::from_seed(cfg.rng_seed);
    let simplifier = cfg.simplify_config();
    let floor = problem.straight_line_cost();
    let world = problem.world();
    let mut record = AnytimeRecord {
        events: Vec::new(),
        final_path: None,
        reason: StopReason::Timeout,
        searches: 0,
        iterations: 0,
        vertices_built: 0,
        discarded: 0,
    };
    let mut bound = f64::INFINITY;
    loop {
        if !(bound > floor) {
            record.reason = StopReason::BoundInfeasible;
            break;
        }
        if budget.exhausted() {
            record.reason = StopReason::Timeout;
            break;
        }
        let outcome = search(problem, bound, cfg, &mut rng, &mut budget, mode);
        observer.on_search(&outcome);
        record.searches += 1;
        record.vertices_built += outcome.vertices_built;
        let raw = match (outcome.reason, outcome.path) {
            (SearchReason::Solved, Some(p)) => p,
            (SearchReason::BoundInfeasible, _) => {
                record.reason = StopReason::BoundInfeasible;
                break;
            }
            _ => {
                record.reason = StopReason::Timeout;
                break;
            }
        };
        let simplify_started = Instant::now();
        let path = if cfg.simplify {
            let deadline = budget
                .remaining()
                .and_then(|r| Instant::now().checked_add(r.mul_f64(cfg.simplify_budget_fraction)));
            simplify(&raw, world, &simplifier, &mut rng.simplifying, deadline)
        } else {
            raw
        };
        let simplify_time = simplify_started.elapsed();
        let c = path.cost();
        if !(c < bound) || !path.is_valid_in(world, cfg.validation_resolution) {
            record.discarded += 1;
            continue;
        }
        bound = c;
        let event = SolutionEvent {
            elapsed: budget.elapsed(),
            iteration: budget.iterations(),
            cost: c,
            waypoints: path.len(),
            simplify_time,
        };
        let flow = observer.on_solution(&event, &path);
        record.events.push(event);
        record.final_path = Some(path);
        if flow.is_break() {
            record.reason = StopReason::Stopped;
            break;
        }
    }
    record.iterations = budget.iterations();
    record
}

/// The planners available to the benchmark harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Aorrtc,
    AorrtcNoSimplify,
    RrtConnect,
    AnytimeRrtConnects,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [
        PlannerKind::Aorrtc,
        PlannerKind::AorrtcNoSimplify,
        PlannerKind::RrtConnect,
        PlannerKind::AnytimeRrtConnects,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Aorrtc => "aorrtc",
            PlannerKind::AorrtcNoSimplify => "aorrtc-nosimp",
            PlannerKind::RrtConnect => "rrtc",
            PlannerKind::AnytimeRrtConnects => "arrtc",
        }
    }

    /// Runs this planner and reports its solutions as an anytime record.
    /// RRT-Connect reports its single unsimplified solution.
    pub fn run<O: AnytimeObserver + ?Sized>(
        self,
        problem: &Problem,
        cfg: &PlannerConfig,
        observer: &mut O,
    ) -> AnytimeRecord {
        match self {
            PlannerKind::Aorrtc => aorrtc(problem, cfg, observer),
            PlannerKind::AorrtcNoSimplify => {
                let cfg = PlannerConfig {
                    simplify: false,
                    ..cfg.clone()
                };
                aorrtc(problem, &cfg, observer)
            }
            PlannerKind::AnytimeRrtConnects => anytime_rrt_connects(problem, cfg, observer),
            PlannerKind::RrtConnect => {
                let outcome = rrt_connect_plain(problem, cfg);
                observer.on_search(&outcome);
                let mut record = AnytimeRecord {
                    events: Vec::new(),
                    final_path: None,
                    reason: match outcome.reason {
                        SearchReason::Solved => StopReason::Stopped,
                        SearchReason::Timeout => StopReason::Timeout,
                        SearchReason::BoundInfeasible => StopReason::BoundInfeasible,
                    },
                    searches: 1,
                    iterations: outcome.iterations,
                    vertices_built: outcome.vertices_built,
                    discarded: 0,
                };
                if let Some(path) = outcome.path {
                    let event = SolutionEvent {
                        elapsed: outcome.elapsed,
                        iteration: outcome.iterations,
                        cost: path.cost(),
                        waypoints: path.len(),
                        simplify_time: Duration::ZERO,
                    };
                    let _ = observer.on_solution(&event, &path);
                    record.events.push(event);
                    record.final_path = Some(path);
                }
                record
            }
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = PlannerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PlannerError::UnknownPlanner(s.to_string()))
    }
}
