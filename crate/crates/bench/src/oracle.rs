//! Grid shortest-path oracle for 2-D point worlds.
//!
//! Lattice nodes sit on a regular grid spanning the space bounds; the start and
//! goal are extra nodes joined to the corners of the cell that contains them.
//! Every edge is checked against the obstacles with exact segment tests that do
//! not share code with the planners' collision checker.
//!
//! Two connectivities are offered. `Octile` is plain 8-connected search with
//! octile edge weights; its cost carries a metrication bias of up to
//! `sqrt(4 - 2*sqrt(2)) - 1` (about 8.2%) that does not shrink with the cell
//! size. `AnyAngle` runs Lazy Theta* on the same lattice, letting a node take
//! any visible ancestor as parent, which removes the bias. Both return the cost
//! of a real collision-free polyline, so the value is an upper bound on the
//! optimum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use aorrtc::space::{Obstacle, World};
use aorrtc::Problem;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("the grid oracle needs a 2-D point world, got {0}")]
    UnsupportedWorld(String),
    #[error("resolution must be positive and finite, got {0}")]
    Resolution(f64),
    #[error("grid with {0} nodes exceeds the size limit")]
    TooLarge(usize),
    #[error("{0} configuration lies in an obstacle or outside the bounds")]
    InvalidEndpoint(&'static str),
    #[error("no collision-free grid path joins start and goal")]
    Unreachable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    Octile,
    AnyAngle,
}

impl Connectivity {
    pub fn name(self) -> &'static str {
        match self {
            Connectivity::Octile => "octile",
            Connectivity::AnyAngle => "any_angle",
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Connectivity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "octile" => Ok(Connectivity::Octile),
            "any_angle" | "any-angle" => Ok(Connectivity::AnyAngle),
            other => Err(format!("unknown connectivity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Cost of the returned collision-free polyline.
    pub cost: f64,
    /// `cost - error_bound` is a lower bound on the optimum.
    pub error_bound: f64,
    pub resolution: f64,
    pub connectivity: Connectivity,
    pub waypoints: Vec<[f64; 2]>,
}

/// Worst-case ratio of an octile lattice path to the straight segment it
/// approximates.
pub const OCTILE_METRICATION: f64 = 1.082_392_200_292_393_9;

const MAX_NODES: usize = 25_000_000;

/// Shortest path over the lattice at spacing at most `resolution`.
pub fn grid_oracle(
    problem: &Problem,
    resolution: f64,
    connectivity: Connectivity,
) -> Result<OracleResult, OracleError> {
    let obstacles = match problem.world() {
        World::Point {
            dimension: 2,
            obstacles,
        } => obstacles.as_slice(),
        World::Point { dimension, .. } => {
            return Err(OracleError::UnsupportedWorld(format!("{dimension}-D point world")))
        }
        World::Hypercube { dimension, .. } => {
            return Err(OracleError::UnsupportedWorld(format!("{dimension}-D hypercube")))
        }
        World::PlanarArm(_) => return Err(OracleError::UnsupportedWorld("planar arm".into())),
    };
    let (lo, hi) = (problem.space().lower(), problem.space().upper());
    solve(
        obstacles,
        [lo[0], lo[1]],
        [hi[0], hi[1]],
        [problem.start()[0], problem.start()[1]],
        [problem.goal()[0], problem.goal()[1]],
        resolution,
        connectivity,
    )
}

fn solve(
    obstacles: &[Obstacle],
    lower: [f64; 2],
    upper: [f64; 2],
    start: [f64; 2],
    goal: [f64; 2],
    resolution: f64,
    connectivity: Connectivity,
) -> Result<OracleResult, OracleError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(OracleError::Resolution(resolution));
    }
    let grid = Grid::new(lower, upper, resolution, obstacles)?;
    if !grid.point_free(start) {
        return Err(OracleError::InvalidEndpoint("start"));
    }
    if !grid.point_free(goal) {
        return Err(OracleError::InvalidEndpoint("goal"));
    }
    let search = Search::new(&grid, start, goal);
    let (cost, waypoints) = search.run(connectivity).ok_or(OracleError::Unreachable)?;
    let cell_diagonal = grid.step[0].hypot(grid.step[1]);
    let error_bound = match connectivity {
        // each turn of the optimum may sit up to a cell diagonal off-lattice,
        // and so may each endpoint's attachment
        Connectivity::AnyAngle => cell_diagonal * (waypoints.len() as f64),
        Connectivity::Octile => cost - cost / OCTILE_METRICATION + 2.0 * cell_diagonal,
    };
    Ok(OracleResult {
        cost,
        error_bound,
        resolution,
        connectivity,
        waypoints,
    })
}

struct Grid<'a> {
    origin: [f64; 2],
    step: [f64; 2],
    cells: [usize; 2],
    upper: [f64; 2],
    obstacles: &'a [Obstacle],
}

impl<'a> Grid<'a> {
    fn new(
        lower: [f64; 2],
        upper: [f64; 2],
        resolution: f64,
        obstacles: &'a [Obstacle],
    ) -> Result<Self, OracleError> {
        let mut cells = [0usize; 2];
        let mut step = [0.0; 2];
        for k in 0..2 {
            let extent = upper[k] - lower[k];
            let n = (extent / resolution - 1e-9).ceil().max(1.0);
            if n > MAX_NODES as f64 {
                return Err(OracleError::TooLarge(usize::MAX));
            }
            cells[k] = n as usize;
            step[k] = extent / n;
        }
        let nodes = (cells[0] + 1) * (cells[1] + 1);
        if nodes > MAX_NODES {
            return Err(OracleError::TooLarge(nodes));
        }
        Ok(Grid {
            origin: lower,
            step,
            cells,
            upper,
            obstacles,
        })
    }

    fn node_count(&self) -> usize {
        (self.cells[0] + 1) * (self.cells[1] + 1)
    }

    fn coords(&self, node: usize) -> [f64; 2] {
        let cols = self.cells[0] + 1;
        let (i, j) = (node % cols, node / cols);
        // the last column lands exactly on the upper bound
        let at = |k: usize, idx: usize| {
            if idx == self.cells[k] {
                self.upper[k]
            } else {
                self.origin[k] + idx as f64 * self.step[k]
            }
        };
        [at(0, i), at(1, j)]
    }

    fn index(&self, i: usize, j: usize) -> usize {
        j * (self.cells[0] + 1) + i
    }

    fn in_bounds(&self, p: [f64; 2]) -> bool {
        (0..2).all(|k| self.origin[k] <= p[k] && p[k] <= self.upper[k])
    }

    fn point_free(&self, p: [f64; 2]) -> bool {
        self.in_bounds(p) && self.obstacles.iter().all(|o| !point_inside(o, p))
    }

    fn segment_free(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        self.obstacles.iter().all(|o| !segment_enters(o, a, b))
    }

    /// Lattice corners of the cell containing `p`.
    fn corners(&self, p: [f64; 2]) -> Vec<usize> {
        let cell = |k: usize| {
            let f = ((p[k] - self.origin[k]) / self.step[k]).floor();
            (f.max(0.0) as usize).min(self.cells[k] - 1)
        };
        let (i, j) = (cell(0), cell(1));
        vec![
            self.index(i, j),
            self.index(i + 1, j),
            self.index(i, j + 1),
            self.index(i + 1, j + 1),
        ]
    }

    fn lattice_neighbours(&self, node: usize, out: &mut Vec<usize>) {
        let cols = self.cells[0] + 1;
        let (i, j) = ((node % cols) as isize, (node / cols) as isize);
        for (di, dj) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni >= 0 && nj >= 0 && ni <= self.cells[0] as isize && nj <= self.cells[1] as isize {
                out.push(self.index(ni as usize, nj as usize));
            }
        }
    }
}

fn point_inside(o: &Obstacle, p: [f64; 2]) -> bool {
    match o {
        Obstacle::Box(b) => (0..2).all(|k| b.min[k] < p[k] && p[k] < b.max[k]),
        Obstacle::Sphere(s) => {
            let (dx, dy) = (p[0] - s.center[0], p[1] - s.center[1]);
            dx * dx + dy * dy < s.radius * s.radius
        }
    }
}

/// True iff some point of the closed segment lies in the open obstacle.
fn segment_enters(o: &Obstacle, a: [f64; 2], b: [f64; 2]) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    match o {
        Obstacle::Box(bx) => {
            let (mut enter, mut exit) = (0.0f64, 1.0f64);
            for k in 0..2 {
                if d[k] == 0.0 {
                    if !(bx.min[k] < a[k] && a[k] < bx.max[k]) {
                        return false;
                    }
                } else {
                    let t1 = (bx.min[k] - a[k]) / d[k];
                    let t2 = (bx.max[k] - a[k]) / d[k];
                    enter = enter.max(t1.min(t2));
                    exit = exit.min(t1.max(t2));
                }
            }
            enter < exit
        }
        Obstacle::Sphere(s) => {
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((s.center[0] - a[0]) * d[0] + (s.center[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            };
            let (cx, cy) = (a[0] + t * d[0] - s.center[0], a[1] + t * d[1] - s.center[1]);
            cx * cx + cy * cy < s.radius * s.radius
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on node id for determinism
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'g, 'a> {
    grid: &'g Grid<'a>,
    start: [f64; 2],
    goal: [f64; 2],
    start_corners: Vec<usize>,
    goal_corners: Vec<usize>,
}

impl<'g, 'a> Search<'g, 'a> {
    fn new(grid: &'g Grid<'a>, start: [f64; 2], goal: [f64; 2]) -> Self {
        Search {
            grid,
            start,
            goal,
            start_corners: grid.corners(start),
            goal_corners: grid.corners(goal),
        }
    }

    // node ids: lattice nodes, then start, then goal
    fn start_id(&self) -> usize {
        self.grid.node_count()
    }

    fn goal_id(&self) -> usize {
        self.grid.node_count() + 1
    }

    fn point(&self, node: usize) -> [f64; 2] {
        if node == self.start_id() {
            self.start
        } else if node == self.goal_id() {
            self.goal
        } else {
            self.grid.coords(node)
        }
    }

    fn neighbours(&self, node: usize, out: &mut Vec<usize>) {
        out.clear();
        if node == self.start_id() {
            out.extend_from_slice(&self.start_corners);
        } else if node == self.goal_id() {
            out.extend_from_slice(&self.goal_corners);
        } else {
            self.grid.lattice_neighbours(node, out);
            if self.start_corners.contains(&node) {
                out.push(self.start_id());
            }
            if self.goal_corners.contains(&node) {
                out.push(self.goal_id());
            }
        }
    }

    fn edge(&self, a: usize, b: usize) -> Option<f64> {
        let (p, q) = (self.point(a), self.point(b));
        self.grid.segment_free(p, q).then(|| dist(p, q))
    }

    fn run(&self, connectivity: Connectivity) -> Option<(f64, Vec<[f64; 2]>)> {
        let total = self.grid.node_count() + 2;
        let (start, goal) = (self.start_id(), self.goal_id());
        let mut g = vec![f64::INFINITY; total];
        let mut parent = vec![usize::MAX; total];
        let mut closed = vec![false; total];
        let mut free = vec![None::<bool>; total];
        let mut heap = BinaryHeap::new();
        let any_angle = connectivity == Connectivity::AnyAngle;
        g[start] = 0.0;
        parent[start] = start;
        heap.push(Entry {
            f: dist(self.start, self.goal),
            node: start,
        });
        let mut around = Vec::with_capacity(10);
        while let Some(Entry { node, .. }) = heap.pop() {
            if closed[node] {
                continue;
            }
            if any_angle && parent[node] != node {
                // lazy line-of-sight check deferred to expansion
                let (pp, here) = (self.point(parent[node]), self.point(node));
                if !self.grid.segment_free(pp, here) {
                    self.neighbours(node, &mut around);
                    let mut best = (f64::INFINITY, usize::MAX);
                    for &n in &around {
                        if closed[n] {
                            if let Some(c) = self.edge(n, node) {
                                let cand = g[n] + c;
                                if cand < best.0 || (cand == best.0 && n < best.1) {
                                    best = (cand, n);
                                }
                            }
                        }
                    }
                    if best.1 == usize::MAX {
                        continue;
                    }
                    g[node] = best.0;
                    parent[node] = best.1;
                }
            }
            closed[node] = true;
            if node == goal {
                break;
            }
            self.neighbours(node, &mut around);
            for &n in &around {
                if closed[n] {
                    continue;
                }
                let node_free = *free[n].get_or_insert_with(|| {
                    n >= self.grid.node_count() || self.grid.point_free(self.grid.coords(n))
                });
                if !node_free {
                    continue;
                }
                let Some(step) = self.edge(node, n) else {
                    continue;
                };
                let (via, cand) = if any_angle {
                    let p = parent[node];
                    (p, g[p] + dist(self.point(p), self.point(n)))
                } else {
                    (node, g[node] + step)
                };
                if cand < g[n] {
                    g[n] = cand;
                    parent[n] = via;
                    heap.push(Entry {
                        f: cand + dist(self.point(n), self.goal),
                        node: n,
                    });
                }
            }
        }
        if !closed[goal] {
            return None;
        }
        let mut waypoints = vec![self.goal];
        let mut at = goal;
        while at != start {
            at = parent[at];
            waypoints.push(self.point(at));
        }
        waypoints.reverse();
        let cost = waypoints.windows(2).map(|w| dist(w[0], w[1])).sum();
        Some((cost, waypoints))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aorrtc::space::{AaBox, ConfigurationSpace, Sphere};

    fn problem(obstacles: Vec<Obstacle>, start: [f64; 2], goal: [f64; 2]) -> Problem {
        Problem::new(
            "grid",
            ConfigurationSpace::unit(2).unwrap(),
            World::point(2, obstacles).unwrap(),
            start.into(),
            goal.into(),
        )
        .unwrap()
    }

    fn centered_box() -> Problem {
        let b = AaBox::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap();
        problem(vec![Obstacle::Box(b)], [0.05, 0.5], [0.95, 0.5])
    }

    #[test]
    fn free_space_is_straight() {
        let p = problem(vec![], [0.1, 0.5], [0.9, 0.5]);
        let r = grid_oracle(&p, 1.0 / 64.0, Connectivity::AnyAngle).unwrap();
        assert!((r.cost - 0.8).abs() < 1e-12);
        let o = grid_oracle(&p, 1.0 / 64.0, Connectivity::Octile).unwrap();
        assert!((o.cost - 0.8).abs() <= o.error_bound);
    }

    #[test]
    fn octile_diagonal_pays_metrication() {
        let p = problem(vec![], [0.0, 0.0], [1.0, 0.5]);
        let o = grid_oracle(&p, 0.5 / 32.0, Connectivity::Octile).unwrap();
        let exact = 1.25f64.sqrt();
        let octile = 0.5 * 2f64.sqrt() + 0.5;
        assert!((o.cost - octile).abs() < 1e-9);
        assert!(o.cost / exact <= OCTILE_METRICATION);
        // the worst case, at 22.5 degrees, is cos t + (sqrt 2 - 1) sin t at its maximum
        let worst = (4.0 - 2.0 * 2f64.sqrt()).sqrt();
        assert!((worst - OCTILE_METRICATION).abs() < 1e-15);
        let a = grid_oracle(&p, 0.5 / 32.0, Connectivity::AnyAngle).unwrap();
        assert!((a.cost - exact).abs() < 1e-12);
    }

    #[test]
    fn centered_box_matches_taut_string() {
        let taut = 2.0 * (0.2f64 * 0.2 + 0.25 * 0.25).sqrt() + 0.5;
        let p = centered_box();
        let r = grid_oracle(&p, 1.0 / 128.0, Connectivity::AnyAngle).unwrap();
        assert!(r.cost >= taut - 1e-9);
        assert!(r.cost - taut <= r.error_bound);
        let o = grid_oracle(&p, 1.0 / 128.0, Connectivity::Octile).unwrap();
        assert!(o.cost >= r.cost - 1e-9);
    }

    #[test]
    fn sphere_is_avoided() {
        let s = Sphere::new(vec![0.5, 0.5], 0.2).unwrap();
        let p = problem(vec![Obstacle::Sphere(s)], [0.1, 0.5], [0.9, 0.5]);
        let r = grid_oracle(&p, 1.0 / 128.0, Connectivity::AnyAngle).unwrap();
        // tangent legs plus the wrapped arc
        let leg = (0.4f64 * 0.4 - 0.2 * 0.2).sqrt();
        let arc = 0.2 * (std::f64::consts::PI - 2.0 * (0.2f64 / 0.4).acos());
        let exact = 2.0 * leg + arc;
        assert!(r.cost > exact);
        assert!(r.cost - exact <= r.error_bound);
    }

    #[test]
    fn endpoint_in_obstacle_is_an_error() {
        let b = Obstacle::Box(AaBox::new(vec![0.0, 0.0], vec![0.3, 0.3]).unwrap());
        let obstacles = [b];
        let run = |start, goal| {
            solve(&obstacles, [0.0, 0.0], [1.0, 1.0], start, goal, 0.1, Connectivity::Octile)
        };
        assert_eq!(run([0.1, 0.1], [0.9, 0.9]), Err(OracleError::InvalidEndpoint("start")));
        assert_eq!(run([0.9, 0.9], [1.5, 0.5]), Err(OracleError::InvalidEndpoint("goal")));
        let p = problem(vec![], [0.1, 0.1], [0.9, 0.9]);
        assert_eq!(grid_oracle(&p, 0.0, Connectivity::Octile), Err(OracleError::Resolution(0.0)));
    }

    #[test]
    fn walled_off_goal_is_unreachable() {
        let wall = AaBox::new(vec![0.4, -0.1], vec![0.6, 1.1]).unwrap();
        let p = problem(vec![Obstacle::Box(wall)], [0.1, 0.5], [0.9, 0.5]);
        assert_eq!(
            grid_oracle(&p, 1.0 / 32.0, Connectivity::AnyAngle),
            Err(OracleError::Unreachable)
        );
    }

    #[test]
    fn rejects_other_worlds() {
        let p = Problem::new(
            "cube",
            ConfigurationSpace::unit(3).unwrap(),
            World::hypercube(3, vec![]).unwrap(),
            [0.1, 0.1, 0.1].into(),
            [0.9, 0.9, 0.9].into(),
        )
        .unwrap();
        assert!(matches!(
            grid_oracle(&p, 0.1, Connectivity::Octile),
            Err(OracleError::UnsupportedWorld(_))
        ));
    }

    #[test]
    fn boundary_contact_is_free() {
        let b = AaBox::new(vec![0.25, 0.25], vec![0.75, 0.75]).unwrap();
        let o = Obstacle::Box(b);
        assert!(!segment_enters(&o, [0.0, 0.25], [1.0, 0.25]));
        assert!(segment_enters(&o, [0.0, 0.26], [1.0, 0.26]));
        assert!(!segment_enters(&o, [0.25, 0.3], [0.25, 0.3]));
        assert!(!segment_enters(&o, [0.24, 0.26], [0.26, 0.24]));
        assert!(segment_enters(&o, [0.24, 0.27], [0.27, 0.24]));
    }
}
