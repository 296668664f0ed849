//! Suite files and trial execution.

use std::collections::BTreeMap;
use std::fs;
use std::ops::ControlFlow;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use aorrtc::{Path, PlannerConfig, PlannerKind, Problem, ProblemError, SolutionEvent, StopReason};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::oracle::{grid_oracle, Connectivity, OracleError};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read suite {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed suite {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("problem {id}: {source}")]
    Problem { id: String, source: ProblemError },
    #[error("problem {id}: oracle failed: {source}")]
    Oracle { id: String, source: OracleError },
    #[error("duplicate problem id {0}")]
    DuplicateId(String),
    #[error("unknown planner {0}")]
    UnknownPlanner(String),
    #[error("invalid run options: {0}")]
    Options(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// What a trial's time axis measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clock {
    /// Seconds since the planner started.
    Wall,
    /// Planner iterations; the budget is an iteration count. Runs on this
    /// clock are reproducible bit for bit.
    Iterations,
}

impl Clock {
    pub fn name(self) -> &'static str {
        match self {
            Clock::Wall => "wall",
            Clock::Iterations => "iterations",
        }
    }
}

impl std::str::FromStr for Clock {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wall" => Ok(Clock::Wall),
            "iterations" => Ok(Clock::Iterations),
            other => Err(format!("unknown clock {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteFile {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Failing checks of an acceptance suite make the run fail.
    #[serde(default)]
    pub acceptance: bool,
    /// Per-trial budget in clock units.
    #[serde(default = "default_budget")]
    pub budget: f64,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub planners: Option<Vec<String>>,
    #[serde(default = "default_clock")]
    pub clock: Clock,
    pub problems: Vec<SuiteProblem>,
}

fn default_budget() -> f64 {
    1.0
}

fn default_seeds() -> usize {
    10
}

fn default_clock() -> Clock {
    Clock::Wall
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteProblem {
    pub id: String,
    /// Relative to the suite file.
    pub file: PathBuf,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default)]
    pub checks: Vec<Check>,
}

/// Where a problem's reference optimum comes from.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    Grid {
        resolution: f64,
        #[serde(default = "default_connectivity")]
        connectivity: Connectivity,
    },
    /// The start-goal distance; exact for obstacle-free problems.
    StraightLine,
    Value {
        value: f64,
    },
    /// Best final cost over all trials of the run.
    #[default]
    Empirical,
    None,
}

fn default_connectivity() -> Connectivity {
    Connectivity::AnyAngle
}

/// A pass/fail condition on one problem's trials.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// Fraction of trials solved within the budget is at least `min`.
    Success { planner: String, min: f64 },
    /// Median final cost is within `tolerance` (relative) of the reference.
    MedianWithinReference { planner: String, tolerance: f64 },
    /// Median final cost exceeds the baseline's by at most `tolerance`.
    MedianNotWorse {
        planner: String,
        baseline: String,
        tolerance: f64,
    },
}

#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub id: String,
    pub problem: Problem,
    pub oracle: OracleSpec,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub name: String,
    pub seed: u64,
    pub acceptance: bool,
    pub budget: f64,
    pub seeds: usize,
    pub planners: Vec<PlannerKind>,
    pub clock: Clock,
    pub problems: Vec<LoadedProblem>,
}

impl Suite {
    pub fn load(path: impl AsRef<FsPath>) -> Result<Self, SuiteError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SuiteError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: SuiteFile = serde_json::from_str(&text).map_err(|source| SuiteError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_file(file, path.parent().unwrap_or(FsPath::new(".")))
    }

    pub fn from_file(file: SuiteFile, base: &FsPath) -> Result<Self, SuiteError> {
        let planners = match &file.planners {
            Some(names) => parse_planners(names)?,
            None => PlannerKind::ALL.to_vec(),
        };
        let mut problems = Vec::with_capacity(file.problems.len());
        for p in file.problems {
            if problems.iter().any(|q: &LoadedProblem| q.id == p.id) {
                return Err(SuiteError::DuplicateId(p.id));
            }
            let mut problem = Problem::from_path(base.join(&p.file)).map_err(|source| {
                SuiteError::Problem {
                    id: p.id.clone(),
                    source,
                }
            })?;
            problem.name = p.id.clone();
            problems.push(LoadedProblem {
                id: p.id,
                problem,
                oracle: p.oracle,
                checks: p.checks,
            });
        }
        Ok(Suite {
            name: file.name,
            seed: file.seed,
            acceptance: file.acceptance,
            budget: file.budget,
            seeds: file.seeds,
            planners,
            clock: file.clock,
            problems,
        })
    }
}

pub fn parse_planners<S: AsRef<str>>(names: &[S]) -> Result<Vec<PlannerKind>, SuiteError> {
    names
        .iter()
        .map(|n| {
            n.as_ref()
                .parse()
                .map_err(|_| SuiteError::UnknownPlanner(n.as_ref().to_string()))
        })
        .collect()
}

/// Seed of the `index`-th trial of a suite; the same for every planner so
/// trials are paired across planners.
pub fn trial_seed(suite_seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(suite_seed);
    rng.set_stream(index as u64);
    rng.next_u64()
}

/// Settings for one trial beyond its seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSettings {
    pub budget: f64,
    pub clock: Clock,
    /// Stop the planner after its first reported solution.
    pub first_solution_only: bool,
}

impl TrialSettings {
    /// Planner configuration enforcing this budget on the chosen clock.
    pub fn config(&self, problem: &Problem, seed: u64) -> PlannerConfig {
        let cfg = PlannerConfig::for_problem(problem).with_seed(seed);
        match self.clock {
            Clock::Wall => cfg.with_budget(Duration::from_secs_f64(self.budget)),
            Clock::Iterations => PlannerConfig {
                // far beyond any iteration budget, so only iterations bind
                time_budget: Duration::from_secs(24 * 3600),
                max_iterations: Some(self.budget.max(1.0) as u64),
                ..cfg
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Solved,
    Unsolved,
    Crashed,
}

impl TrialStatus {
    pub fn name(self) -> &'static str {
        match self {
            TrialStatus::Solved => "solved",
            TrialStatus::Unsolved => "unsolved",
            TrialStatus::Crashed => "crashed",
        }
    }
}

/// One improvement, with time in clock units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialEvent {
    pub t: f64,
    pub cost: f64,
    pub waypoints: usize,
    pub simplify_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub problem: String,
    pub planner: PlannerKind,
    pub seed_index: usize,
    pub seed: u64,
    pub budget: f64,
    pub status: TrialStatus,
    pub events: Vec<TrialEvent>,
    pub stop: Option<StopReason>,
    pub searches: usize,
    pub iterations: u64,
    pub discarded: usize,
    /// Breaches of the anytime contract observed while the trial ran.
    pub violations: Vec<String>,
}

impl Trial {
    pub fn solved(&self) -> bool {
        self.status == TrialStatus::Solved
    }

    pub fn initial(&self) -> Option<&TrialEvent> {
        self.events.first()
    }

    pub fn final_cost(&self) -> f64 {
        self.events.last().map_or(f64::INFINITY, |e| e.cost)
    }

    /// Best cost reported at or before `t`; infinite before the first.
    pub fn cost_at(&self, t: f64) -> f64 {
        self.events
            .iter()
            .take_while(|e| e.t <= t)
            .last()
            .map_or(f64::INFINITY, |e| e.cost)
    }

    /// Earliest time a cost at or below `target` was reported.
    pub fn time_to_reach(&self, target: f64) -> Option<f64> {
        self.events.iter().find(|e| e.cost <= target).map(|e| e.t)
    }
}

/// Runs one trial, checking every reported solution as it arrives. A
/// planner panic is caught and recorded as a crashed trial.
pub fn run_trial(
    problem: &Problem,
    planner: PlannerKind,
    seed_index: usize,
    seed: u64,
    settings: &TrialSettings,
) -> Trial {
    let cfg = settings.config(problem, seed);
    let clock = settings.clock;
    let first_only = settings.first_solution_only;
    let resolution = cfg.validation_resolution;
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| {
        let mut events = Vec::new();
        let mut violations = Vec::new();
        let mut previous = f64::INFINITY;
        let mut observer = |event: &SolutionEvent, path: &Path| {
            let verified = path.cost();
            if !(verified < previous) {
                violations.push(format!("cost {verified} does not beat bound {previous}"));
            }
            if verified != event.cost {
                violations.push(format!("reported cost {} but path costs {verified}", event.cost));
            }
            if !path.is_valid_in(problem.world(), resolution) {
                violations.push(format!("path of cost {verified} fails validation"));
            }
            if path.first() != Some(problem.start()) || path.last() != Some(problem.goal()) {
                violations.push("path does not join start and goal".into());
            }
            previous = previous.min(verified);
            events.push(TrialEvent {
                t: match clock {
                    Clock::Wall => event.elapsed.as_secs_f64(),
                    Clock::Iterations => event.iteration as f64,
                },
                cost: event.cost,
                waypoints: event.waypoints,
                simplify_seconds: event.simplify_time.as_secs_f64(),
            });
            if first_only {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        };
        let record = planner.run(problem, &cfg, &mut observer);
        let costs: Vec<f64> = record.events.iter().map(|e| e.cost).collect();
        if costs.windows(2).any(|w| !(w[1] < w[0])) {
            violations.push("record costs are not strictly decreasing".into());
        }
        if let Some(path) = &record.final_path {
            if Some(path.cost()) != costs.last().copied() {
                violations.push("final path differs from the last event".into());
            }
        }
        (record, events, violations)
    }));
    let mut trial = Trial {
        problem: problem.name.clone(),
        planner,
        seed_index,
        seed,
        budget: settings.budget,
        status: TrialStatus::Crashed,
        events: Vec::new(),
        stop: None,
        searches: 0,
        iterations: 0,
        discarded: 0,
        violations: Vec::new(),
    };
    if let Ok((record, events, violations)) = outcome {
        trial.status = if record.solved() {
            TrialStatus::Solved
        } else {
            TrialStatus::Unsolved
        };
        trial.events = events;
        trial.stop = Some(record.reason);
        trial.searches = record.searches;
        trial.iterations = record.iterations;
        trial.discarded = record.discarded;
        trial.violations = violations;
    }
    trial
}

/// Overrides applied on top of a suite's own settings.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub planners: Option<Vec<PlannerKind>>,
    pub seeds: Option<usize>,
    pub budget: Option<f64>,
    pub clock: Option<Clock>,
    /// Worker threads; 0 uses one per CPU.
    pub jobs: usize,
}

/// A resolved reference optimum for one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub value: f64,
    pub error_bound: f64,
    pub kind: String,
}

/// Runs every (problem, planner, seed) trial. Trials come back sorted by
/// problem order, planner and seed index whatever the worker count.
pub fn run_suite(suite: &Suite, opts: &RunOptions) -> Result<SuiteRun, SuiteError> {
    let planners = opts.planners.clone().unwrap_or_else(|| suite.planners.clone());
    let seeds = opts.seeds.unwrap_or(suite.seeds);
    let settings = TrialSettings {
        budget: opts.budget.unwrap_or(suite.budget),
        clock: opts.clock.unwrap_or(suite.clock),
        first_solution_only: false,
    };
    if !(settings.budget.is_finite() && settings.budget > 0.0) {
        return Err(SuiteError::Options(format!("budget {} is not positive", settings.budget)));
    }
    if planners.is_empty() || seeds == 0 {
        return Err(SuiteError::Options("no planners or no seeds".into()));
    }
    let mut tasks = Vec::new();
    for pi in 0..suite.problems.len() {
        for &planner in &planners {
            for s in 0..seeds {
                tasks.push((pi, planner, s));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| SuiteError::Pool(e.to_string()))?;
    let mut trials: Vec<(usize, Trial)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(pi, planner, s)| {
                let seed = trial_seed(suite.seed, s);
                (pi, run_trial(&suite.problems[pi].problem, planner, s, seed, &settings))
            })
            .collect()
    });
    trials.sort_by(|a, b| {
        (a.0, a.1.planner, a.1.seed_index).cmp(&(b.0, b.1.planner, b.1.seed_index))
    });
    let trials: Vec<Trial> = trials.into_iter().map(|(_, t)| t).collect();

    let mut references = BTreeMap::new();
    let mut warnings = Vec::new();
    for lp in &suite.problems {
        let reference = match &lp.oracle {
            OracleSpec::Grid {
                resolution,
                connectivity,
            } => {
                let r = grid_oracle(&lp.problem, *resolution, *connectivity).map_err(|source| {
                    SuiteError::Oracle {
                        id: lp.id.clone(),
                        source,
                    }
                })?;
                Some(Reference {
                    value: r.cost,
                    error_bound: r.error_bound,
                    kind: format!("grid_{connectivity}"),
                })
            }
            OracleSpec::StraightLine => Some(Reference {
                value: lp.problem.straight_line_cost(),
                error_bound: 0.0,
                kind: "straight_line".into(),
            }),
            OracleSpec::Value { value } => Some(Reference {
                value: *value,
                error_bound: 0.0,
                kind: "value".into(),
            }),
            OracleSpec::Empirical => {
                let best = trials
                    .iter()
                    .filter(|t| t.problem == lp.id)
                    .map(Trial::final_cost)
                    .fold(f64::INFINITY, f64::min);
                best.is_finite().then(|| Reference {
                    value: best,
                    error_bound: f64::NAN,
                    kind: "empirical".into(),
                })
            }
            OracleSpec::None => None,
        };
        match reference {
            Some(r) => {
                references.insert(lp.id.clone(), r);
            }
            None => warnings.push(format!(
                "problem {}: no reference optimum, excluded from near-optimality",
                lp.id
            )),
        }
    }
    Ok(SuiteRun {
        suite: suite.name.clone(),
        acceptance: suite.acceptance,
        problems: suite.problems.iter().map(|p| p.id.clone()).collect(),
        checks: suite
            .problems
            .iter()
            .map(|p| (p.id.clone(), p.checks.clone()))
            .collect(),
        planners,
        settings,
        trials,
        references,
        warnings,
    })
}

/// Raw results of a suite run, before aggregation.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub suite: String,
    pub acceptance: bool,
    pub problems: Vec<String>,
    pub checks: Vec<(String, Vec<Check>)>,
    pub planners: Vec<PlannerKind>,
    pub settings: TrialSettings,
    pub trials: Vec<Trial>,
    pub references: BTreeMap<String, Reference>,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..100).map(|i| trial_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 100);
        assert_eq!(a, (0..100).map(|i| trial_seed(7, i)).collect::<Vec<_>>());
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
    }

    #[test]
    fn suite_file_parses() {
        let text = r#"{
            "name": "t", "seed": 3, "acceptance": true, "budget": 200, "seeds": 2,
            "clock": "iterations", "planners": ["aorrtc", "rrtc"],
            "problems": [{
                "id": "a", "file": "a.json",
                "oracle": {"kind": "grid", "resolution": 0.01},
                "checks": [
                    {"type": "success", "planner": "aorrtc", "min": 1.0},
                    {"type": "median_not_worse", "planner": "aorrtc", "baseline": "arrtc", "tolerance": 0.01}
                ]
            }]
        }"#;
        let f: SuiteFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.clock, Clock::Iterations);
        assert_eq!(
            f.problems[0].oracle,
            OracleSpec::Grid {
                resolution: 0.01,
                connectivity: Connectivity::AnyAngle
            }
        );
        assert_eq!(f.problems[0].checks.len(), 2);
        let bad = text.replace("\"seeds\": 2", "\"seeds\": 2, \"extra\": 1");
        assert!(serde_json::from_str::<SuiteFile>(&bad).is_err());
    }

    #[test]
    fn trial_cost_lookup() {
        let trial = Trial {
            problem: "p".into(),
            planner: PlannerKind::Aorrtc,
            seed_index: 0,
            seed: 0,
            budget: 1.0,
            status: TrialStatus::Solved,
            events: vec![
                TrialEvent {
                    t: 0.1,
                    cost: 3.0,
                    waypoints: 4,
                    simplify_seconds: 0.0,
                },
                TrialEvent {
                    t: 0.5,
                    cost: 2.0,
                    waypoints: 3,
                    simplify_seconds: 0.0,
                },
            ],
            stop: Some(StopReason::Timeout),
            searches: 2,
            iterations: 10,
            discarded: 0,
            violations: vec![],
        };
        assert_eq!(trial.cost_at(0.05), f64::INFINITY);
        assert_eq!(trial.cost_at(0.1), 3.0);
        assert_eq!(trial.cost_at(0.7), 2.0);
        assert_eq!(trial.time_to_reach(2.5), Some(0.5));
        assert_eq!(trial.time_to_reach(1.0), None);
        assert_eq!(trial.final_cost(), 2.0);
    }
}
