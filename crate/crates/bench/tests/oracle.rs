use std::path::PathBuf;

use aorrtc::Problem;
use aorrtc_bench::oracle::{grid_oracle, Connectivity, OracleError};

fn desk(name: &str) -> Problem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("suites/desk/{name}.json"));
    Problem::from_path(path).unwrap()
}

const FINE: f64 = 1.0 / 512.0;

#[test]
fn free_square_is_the_segment_length() {
    let r = grid_oracle(&desk("free-2d"), FINE, Connectivity::AnyAngle).unwrap();
    assert!((r.cost - 0.8).abs() < 1e-12);
    let o = grid_oracle(&desk("free-2d"), FINE, Connectivity::Octile).unwrap();
    assert!((o.cost - 0.8).abs() <= o.error_bound);
}

#[test]
fn centered_box_reproduces_the_taut_string() {
    // analytic route: over the box's top corners and along its top face
    let taut = 2.0 * (0.2f64.powi(2) + 0.25f64.powi(2)).sqrt() + 0.5;
    let any = grid_oracle(&desk("centered-box"), FINE, Connectivity::AnyAngle).unwrap();
    assert!(any.cost >= taut - 1e-12);
    assert!(any.cost - taut < 1e-9, "{} vs {taut}", any.cost);
    let octile = grid_oracle(&desk("centered-box"), FINE, Connectivity::Octile).unwrap();
    assert!(octile.cost > any.cost);
    assert!(octile.cost - taut <= octile.error_bound);
    // the 8-connected bias does not vanish with resolution
    assert!(octile.cost / taut > 1.02);
}

#[test]
fn oracle_converges_from_above() {
    let taut = 2.0 * (0.2f64.powi(2) + 0.25f64.powi(2)).sqrt() + 0.5;
    let mut last = f64::INFINITY;
    for cells in [16.0, 64.0, 256.0] {
        let r = grid_oracle(&desk("centered-box"), 1.0 / cells, Connectivity::AnyAngle).unwrap();
        assert!(r.cost >= taut - 1e-12);
        assert!(r.cost - taut <= r.error_bound);
        assert!(r.cost <= last + 1e-12);
        last = r.cost;
    }
}

#[test]
fn trap_and_passage_match_their_corner_routes() {
    let leg = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let trap = leg([0.1, 0.6], [0.45, 0.52]) + 0.1 + leg([0.55, 0.52], [0.9, 0.6]);
    let r = grid_oracle(&desk("homotopy-trap"), FINE, Connectivity::AnyAngle).unwrap();
    assert!(r.cost >= trap - 1e-12 && r.cost - trap <= r.error_bound);
    let passage = leg([0.1, 0.2], [0.45, 0.475]) + leg([0.45, 0.475], [0.55, 0.525]) + leg([0.55, 0.525], [0.9, 0.8]);
    let r = grid_oracle(&desk("narrow-passage"), FINE, Connectivity::AnyAngle).unwrap();
    assert!(r.cost >= passage - 1e-12 && r.cost - passage <= r.error_bound);
}

#[test]
fn non_planar_problems_are_rejected() {
    for name in ["free-6d", "hypercube-6d", "arm-4link"] {
        assert!(matches!(
            grid_oracle(&desk(name), FINE, Connectivity::AnyAngle),
            Err(OracleError::UnsupportedWorld(_))
        ));
    }
}

#[test]
fn oracle_never_exceeds_planner_costs_beyond_its_error() {
    use aorrtc::{PlannerConfig, PlannerKind};
    use std::time::Duration;
    for name in ["free-2d", "centered-box", "narrow-passage", "homotopy-trap"] {
        let problem = desk(name);
        let r = grid_oracle(&problem, 1.0 / 256.0, Connectivity::AnyAngle).unwrap();
        for seed in 0..5 {
            let cfg = PlannerConfig {
                max_iterations: Some(20_000),
                ..PlannerConfig::for_problem(&problem)
                    .with_seed(seed)
                    .with_budget(Duration::from_secs(3600))
            };
            for kind in PlannerKind::ALL {
                let record = kind.run(&problem, &cfg, &mut aorrtc::NoObserver);
                let found = record.best().expect("solved").cost;
                assert!(r.cost - r.error_bound <= found, "{name} {kind} seed {seed}: {found} vs {}", r.cost);
            }
        }
    }
}
