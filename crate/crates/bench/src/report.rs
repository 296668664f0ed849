//! Aggregated curves, near-optimality tables, check evaluation and CSV output.
//!
//! Time-indexed statistics are taken on an evenly spaced grid of
//! [`TIME_POINTS`] instants ending at the budget. A trial that has not solved
//! by time `t` counts as infinitely expensive at `t`, which keeps cost curves
//! nonincreasing; a median that is still infinite is written as an empty cell.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path as FsPath;

use aorrtc::PlannerKind;

use crate::stats::{clopper_pearson, median, median_interval};
use crate::suite::{Check, Reference, SuiteRun, Trial};

pub const TIME_POINTS: usize = 50;
pub const CONFIDENCE: f64 = 0.99;
/// Problem label of success rows pooled over every problem of the suite.
pub const POOLED: &str = "*";

#[derive(Debug, Clone, PartialEq)]
pub struct SuccessPoint {
    pub problem: String,
    pub planner: PlannerKind,
    pub t: f64,
    pub successes: u64,
    pub trials: u64,
    pub fraction: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostPoint {
    pub problem: String,
    pub planner: PlannerKind,
    pub t: f64,
    pub solved: u64,
    pub trials: u64,
    pub median: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearOptimalRow {
    pub problem: String,
    pub planner: PlannerKind,
    pub epsilon: f64,
    pub reference: f64,
    pub reference_kind: String,
    pub fraction: f64,
    /// Infinite when fewer than half the trials got there.
    pub median_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub problem: String,
    pub check: String,
    pub observed: f64,
    pub threshold: f64,
    /// `None` when the check's planners were not part of the run.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub run: SuiteRun,
    pub success: Vec<SuccessPoint>,
    pub cost: Vec<CostPoint>,
    pub near_optimality: Vec<NearOptimalRow>,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn new(run: SuiteRun, epsilons: &[f64]) -> Self {
        let times = time_grid(run.settings.budget);
        let mut success = Vec::new();
        let mut cost = Vec::new();
        let mut groups: Vec<&str> = run.problems.iter().map(String::as_str).collect();
        groups.push(POOLED);
        for problem in groups {
            for &planner in &run.planners {
                let trials: Vec<&Trial> = run
                    .trials
                    .iter()
                    .filter(|t| t.planner == planner && (problem == POOLED || t.problem == problem))
                    .collect();
                success.extend(success_curve(problem, planner, &trials, &times));
                if problem != POOLED {
                    cost.extend(cost_curve(problem, planner, &trials, &times));
                }
            }
        }
        let near_optimality = near_optimality_report(&run, epsilons);
        let checks = evaluate_checks(&run);
        SuiteReport {
            run,
            success,
            cost,
            near_optimality,
            checks,
        }
    }

    /// False iff this is an acceptance suite and some check failed.
    pub fn passed(&self) -> bool {
        !self.run.acceptance || self.checks.iter().all(|c| c.passed != Some(false))
    }

    pub fn write_csvs(&self, dir: &FsPath) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("trials.csv"), trials_csv(&self.run.trials))?;
        fs::write(dir.join("summary.csv"), summary_csv(&self.run.trials))?;
        fs::write(dir.join("success_curve.csv"), success_csv(&self.success))?;
        fs::write(dir.join("cost_curve.csv"), cost_csv(&self.cost))?;
        fs::write(dir.join("near_optimality.csv"), near_csv(&self.near_optimality))?;
        fs::write(dir.join("reference.csv"), reference_csv(&self.run))?;
        fs::write(dir.join("checks.csv"), checks_csv(&self.checks))?;
        Ok(())
    }
}

pub fn time_grid(budget: f64) -> Vec<f64> {
    (1..=TIME_POINTS)
        .map(|k| budget * k as f64 / TIME_POINTS as f64)
        .collect()
}

pub fn success_curve(
    problem: &str,
    planner: PlannerKind,
    trials: &[&Trial],
    times: &[f64],
) -> Vec<SuccessPoint> {
    let n = trials.len() as u64;
    times
        .iter()
        .map(|&t| {
            let k = trials
                .iter()
                .filter(|tr| tr.initial().is_some_and(|e| e.t <= t))
                .count() as u64;
            let (lower, upper) = clopper_pearson(k, n, CONFIDENCE);
            SuccessPoint {
                problem: problem.to_string(),
                planner,
                t,
                successes: k,
                trials: n,
                fraction: if n == 0 { 0.0 } else { k as f64 / n as f64 },
                lower,
                upper,
            }
        })
        .collect()
}

pub fn cost_curve(problem: &str, planner: PlannerKind, trials: &[&Trial], times: &[f64]) -> Vec<CostPoint> {
    times
        .iter()
        .filter_map(|&t| {
            let costs: Vec<f64> = trials.iter().map(|tr| tr.cost_at(t)).collect();
            let m = median(&costs)?;
            let band = median_interval(&costs, CONFIDENCE);
            Some(CostPoint {
                problem: problem.to_string(),
                planner,
                t,
                solved: costs.iter().filter(|c| c.is_finite()).count() as u64,
                trials: costs.len() as u64,
                median: m,
                lower: band.map(|b| b.0),
                upper: band.map(|b| b.1),
            })
        })
        .collect()
}

/// For each epsilon, the fraction of trials whose final cost is within a
/// factor `1 + epsilon` of the reference and the median time to get there.
/// Problems without a reference are skipped.
pub fn near_optimality_report(run: &SuiteRun, epsilons: &[f64]) -> Vec<NearOptimalRow> {
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    for problem in &run.problems {
        let Some(reference) = run.references.get(problem) else {
            continue;
        };
        for &planner in &run.planners {
            let trials: Vec<&Trial> = run
                .trials
                .iter()
                .filter(|t| &t.problem == problem && t.planner == planner)
                .collect();
            if trials.is_empty() {
                continue;
            }
            for &epsilon in &eps {
                let target = (1.0 + epsilon) * reference.value;
                let times: Vec<f64> = trials
                    .iter()
                    .map(|t| t.time_to_reach(target).unwrap_or(f64::INFINITY))
                    .collect();
                let reached = times.iter().filter(|t| t.is_finite()).count();
                rows.push(NearOptimalRow {
                    problem: problem.clone(),
                    planner,
                    epsilon,
                    reference: reference.value,
                    reference_kind: reference.kind.clone(),
                    fraction: reached as f64 / trials.len() as f64,
                    median_time: median(&times).unwrap_or(f64::INFINITY),
                });
            }
        }
    }
    rows
}

fn final_costs(run: &SuiteRun, problem: &str, planner: PlannerKind) -> Vec<f64> {
    run.trials
        .iter()
        .filter(|t| t.problem == problem && t.planner == planner)
        .map(Trial::final_cost)
        .collect()
}

fn planner_of(run: &SuiteRun, name: &str) -> Option<PlannerKind> {
    name.parse().ok().filter(|p| run.planners.contains(p))
}

pub fn evaluate_checks(run: &SuiteRun) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (problem, checks) in &run.checks {
        for check in checks {
            out.push(evaluate(run, problem, check));
        }
    }
    out
}

fn evaluate(run: &SuiteRun, problem: &str, check: &Check) -> CheckResult {
    let result = |check: String, observed: f64, threshold: f64, passed: Option<bool>| CheckResult {
        problem: problem.to_string(),
        check,
        observed,
        threshold,
        passed,
    };
    match check {
        Check::Success { planner, min } => {
            let label = format!("success[{planner}]");
            let Some(p) = planner_of(run, planner) else {
                return result(label, f64::NAN, *min, None);
            };
            let costs = final_costs(run, problem, p);
            let solved = costs.iter().filter(|c| c.is_finite()).count();
            let fraction = if costs.is_empty() {
                0.0
            } else {
                solved as f64 / costs.len() as f64
            };
            result(label, fraction, *min, Some(fraction >= *min))
        }
        Check::MedianWithinReference { planner, tolerance } => {
            let label = format!("median_within_reference[{planner}]");
            let reference = run.references.get(problem).map(|r: &Reference| r.value);
            let (Some(p), Some(reference)) = (planner_of(run, planner), reference) else {
                return result(label, f64::NAN, f64::NAN, None);
            };
            let m = median(&final_costs(run, problem, p)).unwrap_or(f64::INFINITY);
            let threshold = (1.0 + tolerance) * reference;
            result(label, m, threshold, Some(m <= threshold))
        }
        Check::MedianNotWorse {
            planner,
            baseline,
            tolerance,
        } => {
            let label = format!("median_not_worse[{planner} vs {baseline}]");
            let (Some(p), Some(b)) = (planner_of(run, planner), planner_of(run, baseline)) else {
                return result(label, f64::NAN, f64::NAN, None);
            };
            let m = median(&final_costs(run, problem, p)).unwrap_or(f64::INFINITY);
            let mb = median(&final_costs(run, problem, b)).unwrap_or(f64::INFINITY);
            let threshold = (1.0 + tolerance) * mb;
            result(label, m, threshold, Some(m <= threshold))
        }
    }
}

/// Finite values print in shortest round-trip form, infinities as `inf`.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

/// As [`num`] but an infinite value becomes an empty cell.
fn finite_or_blank(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Column order of `trials.csv`.
pub const TRIALS_HEADER: &str = "problem,planner,seed_index,seed,event,t,cost,waypoints,status";

pub fn trials_csv(trials: &[Trial]) -> String {
    let mut s = String::from(TRIALS_HEADER);
    s.push('\n');
    for t in trials {
        if t.events.is_empty() {
            // unsolved trials keep a row so every trial is accounted for
            let _ = writeln!(
                s,
                "{},{},{},{},,{},inf,,{}",
                t.problem,
                t.planner,
                t.seed_index,
                t.seed,
                num(t.budget),
                t.status.name()
            );
        }
        for (k, e) in t.events.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                t.problem,
                t.planner,
                t.seed_index,
                t.seed,
                k,
                num(e.t),
                num(e.cost),
                e.waypoints,
                t.status.name()
            );
        }
    }
    s
}

pub const SUMMARY_HEADER: &str = "problem,planner,seed_index,seed,status,initial_t,initial_cost,final_t,final_cost,events,searches,iterations,discarded,contract_violations";

pub fn summary_csv(trials: &[Trial]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for t in trials {
        let first = t.events.first();
        let last = t.events.last();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            t.problem,
            t.planner,
            t.seed_index,
            t.seed,
            t.status.name(),
            first.map_or(String::new(), |e| num(e.t)),
            first.map_or(String::new(), |e| num(e.cost)),
            last.map_or(String::new(), |e| num(e.t)),
            num(t.final_cost()),
            t.events.len(),
            t.searches,
            t.iterations,
            t.discarded,
            t.violations.len()
        );
    }
    s
}

pub const SUCCESS_HEADER: &str = "problem,planner,t,successes,trials,fraction,lower,upper";

pub fn success_csv(points: &[SuccessPoint]) -> String {
    let mut s = String::from(SUCCESS_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.problem,
            p.planner,
            num(p.t),
            p.successes,
            p.trials,
            num(p.fraction),
            num(p.lower),
            num(p.upper)
        );
    }
    s
}

pub const COST_HEADER: &str = "problem,planner,t,solved,trials,median,lower,upper";

pub fn cost_csv(points: &[CostPoint]) -> String {
    let mut s = String::from(COST_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.problem,
            p.planner,
            num(p.t),
            p.solved,
            p.trials,
            finite_or_blank(p.median),
            p.lower.map_or(String::new(), finite_or_blank),
            p.upper.map_or(String::new(), finite_or_blank)
        );
    }
    s
}

pub const NEAR_HEADER: &str = "problem,planner,epsilon,reference,reference_kind,fraction,median_t";

pub fn near_csv(rows: &[NearOptimalRow]) -> String {
    let mut s = String::from(NEAR_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.problem,
            r.planner,
            num(r.epsilon),
            num(r.reference),
            r.reference_kind,
            num(r.fraction),
            finite_or_blank(r.median_time)
        );
    }
    s
}

pub const REFERENCE_HEADER: &str = "problem,kind,value,error_bound";

pub fn reference_csv(run: &SuiteRun) -> String {
    let mut s = String::from(REFERENCE_HEADER);
    s.push('\n');
    for problem in &run.problems {
        if let Some(r) = run.references.get(problem) {
            let _ = writeln!(s, "{},{},{},{}", problem, r.kind, num(r.value), num(r.error_bound));
        }
    }
    s
}

pub const CHECKS_HEADER: &str = "problem,check,observed,threshold,result";

pub fn checks_csv(checks: &[CheckResult]) -> String {
    let mut s = String::from(CHECKS_HEADER);
    s.push('\n');
    for c in checks {
        let result = match c.passed {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            c.problem,
            c.check,
            num(c.observed),
            num(c.threshold),
            result
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{Clock, TrialEvent, TrialSettings, TrialStatus};
    use std::collections::BTreeMap;

    fn trial(seed_index: usize, events: &[(f64, f64)]) -> Trial {
        Trial {
            problem: "p".into(),
            planner: PlannerKind::Aorrtc,
            seed_index,
            seed: seed_index as u64,
            budget: 1.0,
            status: if events.is_empty() {
                TrialStatus::Unsolved
            } else {
                TrialStatus::Solved
            },
            events: events
                .iter()
                .map(|&(t, cost)| TrialEvent {
                    t,
                    cost,
                    waypoints: 2,
                    simplify_seconds: 0.0,
                })
                .collect(),
            stop: None,
            searches: 1,
            iterations: 1,
            discarded: 0,
            violations: vec![],
        }
    }

    fn run(trials: Vec<Trial>, reference: f64) -> SuiteRun {
        let mut references = BTreeMap::new();
        references.insert(
            "p".to_string(),
            Reference {
                value: reference,
                error_bound: 0.0,
                kind: "value".into(),
            },
        );
        SuiteRun {
            suite: "s".into(),
            acceptance: true,
            problems: vec!["p".into()],
            checks: vec![(
                "p".into(),
                vec![Check::Success {
                    planner: "aorrtc".into(),
                    min: 1.0,
                }],
            )],
            planners: vec![PlannerKind::Aorrtc],
            settings: TrialSettings {
                budget: 1.0,
                clock: Clock::Wall,
                first_solution_only: false,
            },
            trials,
            references,
            warnings: vec![],
        }
    }

    fn sample() -> Vec<Trial> {
        vec![
            trial(0, &[(0.1, 3.0), (0.4, 2.0), (0.9, 1.1)]),
            trial(1, &[(0.3, 2.5), (0.6, 1.5)]),
            trial(2, &[(0.7, 1.9)]),
            trial(3, &[]),
        ]
    }

    #[test]
    fn curves_are_monotone() {
        let report = SuiteReport::new(run(sample(), 1.0), &[0.1, 1.0]);
        let own: Vec<&SuccessPoint> = report.success.iter().filter(|p| p.problem == "p").collect();
        assert!(own.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        assert!(own.iter().all(|p| (0.0..=1.0).contains(&p.fraction)));
        assert!(own.iter().all(|p| p.lower <= p.fraction && p.fraction <= p.upper));
        assert!(report.cost.windows(2).all(|w| w[1].median <= w[0].median));
        assert_eq!(own.last().unwrap().fraction, 0.75);
        let pooled: Vec<&SuccessPoint> = report.success.iter().filter(|p| p.problem == POOLED).collect();
        assert_eq!(pooled.len(), TIME_POINTS);
    }

    #[test]
    fn near_optimality_semantics() {
        let r = run(sample(), 1.0);
        let rows = near_optimality_report(&r, &[10.0, 0.0, 0.6, 0.2]);
        let fractions: Vec<f64> = rows.iter().map(|r| r.fraction).collect();
        assert!(fractions.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(fractions[0], 0.0);
        assert_eq!(rows.last().unwrap().fraction, 0.75);
        // reached by trial 0 at 0.9 and trial 1 at 0.6 only
        let row = rows.iter().find(|r| r.epsilon == 0.6).unwrap();
        assert_eq!(row.fraction, 0.5);
        assert_eq!(row.median_time, f64::INFINITY);
    }

    #[test]
    fn generous_epsilon_covers_all_solved() {
        let all: Vec<Trial> = sample().into_iter().filter(|t| !t.events.is_empty()).collect();
        let r = run(all, 1.0);
        let rows = near_optimality_report(&r, &[100.0]);
        assert_eq!(rows[0].fraction, 1.0);
    }

    #[test]
    fn missing_reference_is_skipped() {
        let mut r = run(sample(), 1.0);
        r.references.clear();
        assert!(near_optimality_report(&r, &[0.1]).is_empty());
    }

    #[test]
    fn checks_fail_on_unsolved_trial() {
        let report = SuiteReport::new(run(sample(), 1.0), &[]);
        assert_eq!(report.checks[0].passed, Some(false));
        assert!(!report.passed());
        let solved: Vec<Trial> = sample().into_iter().take(3).collect();
        assert!(SuiteReport::new(run(solved, 1.0), &[]).passed());
    }

    #[test]
    fn unsolved_trial_keeps_a_row() {
        let csv = trials_csv(&sample());
        assert_eq!(csv.lines().count(), 1 + 3 + 2 + 1 + 1);
        assert!(csv.lines().last().unwrap().ends_with(",,1,inf,,unsolved"));
        assert!(csv.starts_with(TRIALS_HEADER));
    }

    #[test]
    fn number_formatting() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "");
        assert_eq!(finite_or_blank(f64::INFINITY), "");
    }
}
