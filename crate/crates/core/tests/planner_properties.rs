use std::ops::ControlFlow;
use std::time::Duration;

use aorrtc::space::{AaBox, Obstacle, PlanarObstacle};
use aorrtc::{
    aorrtc, rrt_connect, AnytimeObserver, Budget, ConfigurationSpace, Path, PlannerConfig,
    PlannerKind, PlannerRng, Problem, SearchOutcome, SearchReason, SearchTree, SolutionEvent,
    TreeRole, World,
};
use proptest::prelude::*;

fn boxes(list: &[([f64; 2], [f64; 2])]) -> Vec<Obstacle> {
    list.iter()
        .map(|(lo, hi)| Obstacle::Box(AaBox::new(lo.to_vec(), hi.to_vec()).unwrap()))
        .collect()
}

fn point_problem(name: &str, obstacles: Vec<Obstacle>, start: [f64; 2], goal: [f64; 2]) -> Problem {
    Problem::new(
        name,
        ConfigurationSpace::unit(2).unwrap(),
        World::point(2, obstacles).unwrap(),
        start.into(),
        goal.into(),
    )
    .unwrap()
}

fn free() -> Problem {
    point_problem("free", vec![], [0.1, 0.5], [0.9, 0.5])
}

fn centered_box() -> Problem {
    point_problem(
        "centered-box",
        boxes(&[([0.25, 0.25], [0.75, 0.75])]),
        [0.05, 0.5],
        [0.95, 0.5],
    )
}

fn narrow() -> Problem {
    point_problem(
        "narrow",
        boxes(&[([0.45, 0.0], [0.55, 0.475]), ([0.45, 0.525], [0.55, 1.0])]),
        [0.1, 0.2],
        [0.9, 0.8],
    )
}

fn arm() -> Problem {
    let pi = std::f64::consts::PI;
    Problem::new(
        "arm",
        ConfigurationSpace::new(vec![-pi; 3], vec![pi; 3]).unwrap(),
        World::planar_arm(
            [0.0, 0.0],
            vec![0.3, 0.3, 0.3],
            vec![PlanarObstacle::Box {
                min: [-0.1, 0.4],
                max: [0.1, 1.2],
            }],
        )
        .unwrap(),
        [0.0, 0.0, 0.0].into(),
        [3.0, 0.0, 0.0].into(),
    )
    .unwrap()
}

fn iteration_config(problem: &Problem, seed: u64, iterations: u64) -> PlannerConfig {
    PlannerConfig {
        max_iterations: Some(iterations),
        ..PlannerConfig::for_problem(problem)
            .with_seed(seed)
            .with_budget(Duration::from_secs(3600))
    }
}

fn same_tree(a: &SearchTree, b: &SearchTree) -> bool {
    a.len() == b.len()
        && a.ids().all(|id| {
            a.config(id) == b.config(id) && a.cost(id) == b.cost(id) && a.parent(id) == b.parent(id)
        })
}

fn same_configurations(a: &SearchTree, b: &SearchTree) -> bool {
    a.len() == b.len() && a.ids().all(|id| a.config(id) == b.config(id))
}

/// Keeps the first inner search and stops at the first solution.
#[derive(Default)]
struct FirstSearch {
    outcome: Option<SearchOutcome>,
}

impl AnytimeObserver for FirstSearch {
    fn on_solution(&mut self, _: &SolutionEvent, _: &Path) -> ControlFlow<()> {
        ControlFlow::Break(())
    }

    fn on_search(&mut self, outcome: &SearchOutcome) {
        self.outcome.get_or_insert_with(|| outcome.clone());
    }
}

fn plain(problem: &Problem, cfg: &PlannerConfig) -> SearchOutcome {
    aorrtc::rrt_connect_plain(problem, cfg)
}

#[test]
fn first_search_equals_plain_rrt_connect() {
    for problem in [centered_box(), narrow(), arm()] {
        for seed in 0..15 {
            let cfg = iteration_config(&problem, seed, 50_000);
            let mut obs = FirstSearch::default();
            aorrtc(&problem, &cfg, &mut obs);
            let first = obs.outcome.expect("aorrtc ran a search");
            let base = plain(&problem, &cfg);
            assert_eq!(base.reason, SearchReason::Solved, "{} seed {seed}", problem.name);
            assert!(same_tree(&first.start_tree, &base.start_tree));
            assert!(same_tree(&first.goal_tree, &base.goal_tree));
            assert_eq!(first.path, base.path);
            assert_eq!(first.iterations, base.iterations);
        }
    }
}

#[test]
fn resampling_never_changes_tree_configurations_at_infinite_bound() {
    for problem in [centered_box(), narrow(), arm()] {
        for seed in 0..10 {
            let on = iteration_config(&problem, seed, 50_000);
            let off = PlannerConfig {
                resample_costs: false,
                ..on.clone()
            };
            let a = plain(&problem, &on);
            let b = plain(&problem, &off);
            assert!(same_configurations(&a.start_tree, &b.start_tree), "{} seed {seed}", problem.name);
            assert!(same_configurations(&a.goal_tree, &b.goal_tree));
            // resampling only ever lowers cost-to-come
            for (ta, tb) in [(&a.start_tree, &b.start_tree), (&a.goal_tree, &b.goal_tree)] {
                assert!(ta.ids().all(|id| ta.cost(id) <= tb.cost(id) + 1e-12));
            }
        }
    }
}

#[test]
fn balanced_search_grows_the_smaller_tree() {
    for problem in [centered_box(), narrow()] {
        for seed in 0..10 {
            let cfg = iteration_config(&problem, seed, 50_000);
            let out = plain(&problem, &cfg);
            assert!(!out.grown.is_empty());
            assert!(out.grown.iter().all(|g| g.grown_len <= g.other_len));

            let unbalanced = PlannerConfig {
                balance_trees: false,
                ..cfg
            };
            let out = plain(&problem, &unbalanced);
            // every iteration grows a tree at an infinite bound, so the roles
            // strictly alternate starting from the start tree
            for (k, g) in out.grown.iter().enumerate() {
                let expected = if k % 2 == 0 { TreeRole::Start } else { TreeRole::Goal };
                assert_eq!(g.role, expected);
            }
        }
    }
}

#[test]
fn bounded_search_below_any_solution_times_out() {
    let problem = centered_box();
    let cfg = iteration_config(&problem, 3, 400);
    let mut rng = PlannerRng::from_seed(3);
    let mut budget = Budget::new(Duration::from_secs(3600), Some(400));
    // no path around the box is this short
    let bound = problem.straight_line_cost() * 1.0001;
    let out = rrt_connect(&problem, bound, &cfg, &mut rng, &mut budget);
    assert_eq!(out.reason, SearchReason::Timeout);
    assert_eq!(out.iterations, 400);
    for tree in [&out.start_tree, &out.goal_tree] {
        assert!(tree.ids().all(|id| tree.cost(id) + tree.cost_to_go_estimate(tree.config(id)) < bound));
    }
}

fn assert_tree_sound(tree: &SearchTree, world: &World, resolution: f64) {
    for id in tree.ids() {
        let recomputed = tree.recomputed_cost(id);
        assert!((tree.cost(id) - recomputed).abs() <= 1e-9 * recomputed.max(1.0));
        if let Some(p) = tree.parent(id) {
            assert!(world.validate(tree.config(p), tree.config(id), resolution));
        }
        assert!(tree.cost(id) + 1e-12 >= tree.cost_to_come_estimate(tree.config(id)));
    }
}

#[test]
fn trees_satisfy_cost_recurrence_and_edge_validity() {
    for problem in [centered_box(), narrow(), arm()] {
        for seed in 0..5 {
            let cfg = iteration_config(&problem, seed, 50_000);
            let out = plain(&problem, &cfg);
            assert_tree_sound(&out.start_tree, problem.world(), cfg.validation_resolution);
            assert_tree_sound(&out.goal_tree, problem.world(), cfg.validation_resolution);
        }
    }
}

#[test]
fn bounded_searches_keep_sound_trees() {
    let problem = centered_box();
    let mut obs = Vec::new();
    let cfg = iteration_config(&problem, 11, 20_000);
    struct Collect<'a>(&'a mut Vec<SearchOutcome>);
    impl AnytimeObserver for Collect<'_> {
        fn on_search(&mut self, outcome: &SearchOutcome) {
            self.0.push(outcome.clone());
        }
    }
    let record = aorrtc(&problem, &cfg, &mut Collect(&mut obs));
    assert!(record.events.len() >= 2);
    for out in &obs {
        assert_tree_sound(&out.start_tree, problem.world(), cfg.validation_resolution);
        assert_tree_sound(&out.goal_tree, problem.world(), cfg.validation_resolution);
    }
}

#[test]
fn plain_cost_is_admissible() {
    for problem in [free(), centered_box(), narrow(), arm()] {
        for seed in 0..10 {
            let cfg = iteration_config(&problem, seed, 50_000);
            let out = plain(&problem, &cfg);
            let path = out.path.expect("solved");
            assert!(path.cost() >= problem.straight_line_cost() - 1e-12);
            assert_eq!(path.first(), Some(problem.start()));
            assert_eq!(path.last(), Some(problem.goal()));
            assert!(path.is_valid_in(problem.world(), cfg.validation_resolution));
        }
    }
}

#[test]
fn free_space_converges_to_the_straight_line() {
    let problem = free();
    for seed in 0..10 {
        let cfg = iteration_config(&problem, seed, 10_000);
        let record = aorrtc(&problem, &cfg, &mut aorrtc::NoObserver);
        let best = record.best().unwrap().cost;
        assert!(best <= problem.straight_line_cost() * 1.001);
    }
}

#[test]
fn narrow_passage_is_solved_for_every_seed() {
    let problem = narrow();
    for seed in 0..20 {
        let cfg = iteration_config(&problem, seed, 200_000);
        for kind in [PlannerKind::RrtConnect, PlannerKind::Aorrtc] {
            let record = kind.run(&problem, &cfg, &mut aorrtc::FirstSolution);
            assert!(record.solved(), "{kind} seed {seed}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn anytime_records_improve_strictly(seed in any::<u64>(), iterations in 200u64..4000, which in 0usize..3) {
        let problem = [free(), centered_box(), narrow()][which].clone();
        let cfg = iteration_config(&problem, seed, iterations);
        let world = problem.world().clone();
        let res = cfg.validation_resolution;
        for kind in [PlannerKind::Aorrtc, PlannerKind::AnytimeRrtConnects, PlannerKind::AorrtcNoSimplify] {
            let mut previous = f64::INFINITY;
            let mut ok = true;
            let mut check = |e: &SolutionEvent, p: &Path| {
                ok &= p.cost() < previous && p.cost() == e.cost && p.is_valid_in(&world, res);
                previous = p.cost();
                ControlFlow::Continue(())
            };
            let record = kind.run(&problem, &cfg, &mut check);
            prop_assert!(ok, "{kind}");
            prop_assert!(record.events.windows(2).all(|w| w[1].cost < w[0].cost));
            prop_assert!(record.iterations <= iterations);
        }
    }
}
