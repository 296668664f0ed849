//! The cost-augmented search space: vertices carry a configuration and a
//! cost-to-come, trees are append-only, and nearest-neighbour queries are
//! filtered by a cost bound.

use std::io::{self, Write};

use thiserror::Error;

use crate::space::{cost, squared_distance, Configuration, Path};

/// Relative tolerance for the cost-to-come recurrence.
pub const COST_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(VertexId),
    #[error("configuration has {actual} coordinates, tree expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cost-to-come {given} disagrees with parent recurrence value {expected}")]
    CostRecurrence { given: f64, expected: f64 },
    #[error("bridge vertices belong to trees with the same role ({0:?})")]
    SameTree(TreeRole),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

/// Weights of the augmented distance `w_x·‖x − x_v‖² + w_c·|c − c_v|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricWeights {
    pub config: f64,
    pub cost: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights {
            config: 1.0,
            cost: 1.0,
        }
    }
}

impl MetricWeights {
    pub fn new(config: f64, cost: f64) -> Option<Self> {
        (config.is_finite() && config > 0.0 && cost.is_finite() && cost >= 0.0)
            .then_some(MetricWeights { config, cost })
    }
}

/// Squared augmented distance between vertex `(x_v, c_v)` and query `(x, c)`.
/// An infinite query cost leaves only the configuration term.
pub fn augmented_distance(x_v: &[f64], c_v: f64, x: &[f64], c: f64, w: MetricWeights) -> f64 {
    let d2 = squared_distance(x_v, x);
    if c.is_infinite() {
        return w.config * d2;
    }
    let dc = c - c_v;
    w.config * d2 + w.cost * dc * dc
}

/// Which endpoint a tree is rooted at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeRole {
    Start,
    Goal,
}

/// An owned copy of one vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedVertex {
    pub id: VertexId,
    pub config: Configuration,
    pub cost: f64,
    pub parent: Option<VertexId>,
}

/// One of the two bidirectional trees.
///
/// Vertices are stored in flat arrays indexed by [`VertexId`]; the nearest
/// neighbour index is an exhaustive scan over those arrays, so it always
/// contains exactly the stored vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    role: TreeRole,
    dim: usize,
    coords: Vec<f64>,
    costs: Vec<f64>,
    parents: Vec<Option<VertexId>>,
    goal_anchor: Configuration,
}

impl SearchTree {
    /// A tree holding only `(root, 0)`. `goal_anchor` is the opposing root.
    pub fn new(role: TreeRole, root: Configuration, goal_anchor: Configuration) -> Self {
        assert_eq!(root.len(), goal_anchor.len(), "root and anchor dimensions differ");
        SearchTree {
            role,
            dim: root.len(),
            coords: root.into_inner(),
            costs: vec![0.0],
            parents: vec![None],
            goal_anchor,
        }
    }

    pub fn role(&self) -> TreeRole {
        self.role
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn root(&self) -> &[f64] {
        self.config(VertexId(0))
    }

    pub fn goal_anchor(&self) -> &[f64] {
        &self.goal_anchor
    }

    pub fn contains(&self, id: VertexId) -> bool {
        id.0 < self.len()
    }

    pub fn config(&self, id: VertexId) -> &[f64] {
        &self.coords[id.0 * self.dim..(id.0 + 1) * self.dim]
    }

    /// Stored cost-to-come `g_T`.
    pub fn cost(&self, id: VertexId) -> f64 {
        self.costs[id.0]
    }

    pub fn parent(&self, id: VertexId) -> Option<VertexId> {
        self.parents[id.0]
    }

    pub fn vertex(&self, id: VertexId) -> Option<AugmentedVertex> {
        self.contains(id).then(|| AugmentedVertex {
            id,
            config: Configuration::new(self.config(id).to_vec()),
            cost: self.cost(id),
            parent: self.parent(id),
        })
    }

    pub fn ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.len()).map(VertexId)
    }

    pub fn vertices(&self) -> impl Iterator<Item = AugmentedVertex> + '_ {
        self.ids().filter_map(|id| self.vertex(id))
    }

    /// Admissible cost-to-come estimate `ĝ_T(x)`.
    pub fn cost_to_come_estimate(&self, x: &[f64]) -> f64 {
        cost(self.root(), x)
    }

    /// Admissible cost-to-go estimate `ĥ_T(x)` toward the opposing root.
    pub fn cost_to_go_estimate(&self, x: &[f64]) -> f64 {
        cost(&self.goal_anchor, x)
    }

    /// Augmented-distance minimiser among vertices with `c_v + ĉ(x_v, x) < c`.
    ///
    /// With `c = +∞` the filter always passes and only configuration
    /// distance counts. Ties go to the lowest id.
    pub fn nearest(&self, x: &[f64], c: f64, w: MetricWeights) -> Option<VertexId> {
        debug_assert_eq!(x.len(), self.dim);
        if c.is_nan() {
            return None;
        }
        let mut best: Option<(VertexId, f64)> = None;
        if c == f64::INFINITY {
            for (i, xv) in self.coords.chunks_exact(self.dim).enumerate() {
                let d2 = squared_distance(xv, x);
                if best.is_none_or(|(_, b)| d2 < b) {
                    best = Some((VertexId(i), d2));
                }
            }
            return best.map(|(id, _)| id);
        }
        for (i, (xv, &cv)) in self
            .coords
            .chunks_exact(self.dim)
            .zip(&self.costs)
            .enumerate()
        {
            if cv >= c {
                continue;
            }
            let d2 = squared_distance(xv, x);
            let dc = c - cv;
            let score = w.config * d2 + w.cost * dc * dc;
            if best.is_some_and(|(_, b)| score >= b) {
                continue;
            }
            if cv + d2.sqrt() < c {
                best = Some((VertexId(i), score));
            }
        }
        best.map(|(id, _)| id)
    }

    /// Adds `(x, c)` as a child of `parent`, checking the cost recurrence.
    pub fn insert(
        &mut self,
        x: &[f64],
        c: f64,
        parent: VertexId,
    ) -> Result<VertexId, TreeError> {
        if !self.contains(parent) {
            return Err(TreeError::UnknownVertex(parent));
        }
        if x.len() != self.dim {
            return Err(TreeError::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        let expected = self.cost(parent) + cost(self.config(parent), x);
        if !((c - expected).abs() <= COST_TOLERANCE * expected.abs().max(1.0)) {
            return Err(TreeError::CostRecurrence { given: c, expected });
        }
        Ok(self.push(x, c, parent))
    }

    /// Insert without the recurrence check; callers compute `c` themselves.
    pub(crate) fn push(&mut self, x: &[f64], c: f64, parent: VertexId) -> VertexId {
        let id = VertexId(self.len());
        self.coords.extend_from_slice(x);
        self.costs.push(c);
        self.parents.push(Some(parent));
        id
    }

    /// Vertex ids from the root down to `id`, inclusive.
    pub fn branch(&self, id: VertexId) -> Vec<VertexId> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    /// Cost of the branch to `id`, recomputed edge by edge.
    pub fn recomputed_cost(&self, id: VertexId) -> f64 {
        self.branch(id)
            .windows(2)
            .map(|w| cost(self.config(w[0]), self.config(w[1])))
            .sum()
    }

    /// Writes `id,parent,cost,x0,x1,...` rows; the root's parent is empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "id,parent,cost")?;
        for k in 0..self.dim {
            write!(out, ",x{k}")?;
        }
        writeln!(out)?;
        for id in self.ids() {
            write!(out, "{},", id.0)?;
            if let Some(p) = self.parent(id) {
                write!(out, "{}", p.0)?;
            }
            write!(out, ",{}", self.cost(id))?;
            for v in self.config(id) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Joins the two trees at their bridge vertices into a start-to-goal path.
///
/// The bridges either share a configuration (the usual result of a
/// successful connect) or are joined by one straight edge.
pub fn extract_path(
    tree_a: &SearchTree,
    tree_b: &SearchTree,
    bridge_a: VertexId,
    bridge_b: VertexId,
) -> Result<Path, TreeError> {
    if tree_a.role() == tree_b.role() {
        return Err(TreeError::SameTree(tree_a.role()));
    }
    for (tree, id) in [(tree_a, bridge_a), (tree_b, bridge_b)] {
        if !tree.contains(id) {
            return Err(TreeError::UnknownVertex(id));
        }
    }
    let ((start_tree, start_bridge), (goal_tree, goal_bridge)) = match tree_a.role() {
        TreeRole::Start => ((tree_a, bridge_a), (tree_b, bridge_b)),
        TreeRole::Goal => ((tree_b, bridge_b), (tree_a, bridge_a)),
    };
    let mut waypoints: Vec<Configuration> = start_tree
        .branch(start_bridge)
        .into_iter()
        .map(|id| Configuration::new(start_tree.config(id).to_vec()))
        .collect();
    let mut tail = goal_tree.branch(goal_bridge);
    tail.reverse();
    if goal_tree.config(goal_bridge) == start_tree.config(start_bridge) {
        tail.remove(0);
    }
    waypoints.extend(
        tail.into_iter()
            .map(|id| Configuration::new(goal_tree.config(id).to_vec())),
    );
    if waypoints.len() == 1 {
        // start == goal; keep a degenerate two-waypoint path
        waypoints.push(waypoints[0].clone());
    }
    Ok(Path::new(waypoints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tree2(role: TreeRole, root: [f64; 2], anchor: [f64; 2]) -> SearchTree {
        SearchTree::new(role, root.into(), anchor.into())
    }

    /// Exhaustive oracle written directly from the definition.
    fn brute_nearest(t: &SearchTree, x: &[f64], c: f64, w: MetricWeights) -> Option<VertexId> {
        let mut best: Option<(VertexId, f64)> = None;
        for id in t.ids() {
            let (xv, cv) = (t.config(id), t.cost(id));
            let pass = c.is_infinite() || cv + cost(xv, x) < c;
            if !pass {
                continue;
            }
            let d = augmented_distance(xv, cv, x, c, w);
            match best {
                Some((_, b)) if d >= b => {}
                _ => best = Some((id, d)),
            }
        }
        best.map(|b| b.0)
    }

    fn random_tree(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> SearchTree {
        let root: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        let anchor: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
        let mut t = SearchTree::new(TreeRole::Start, root.into(), anchor.into());
        for _ in 0..n {
            let parent = VertexId(rng.random_range(0..t.len()));
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let c = t.cost(parent) + cost(t.config(parent), &x);
            t.insert(&x, c, parent).unwrap();
        }
        t
    }

    #[test]
    fn distance_examples() {
        let w = MetricWeights::default();
        assert_eq!(augmented_distance(&[0.0, 0.0], 0.0, &[3.0, 4.0], 5.0, w), 50.0);
        assert_eq!(augmented_distance(&[1.0, 2.0], 3.0, &[1.0, 2.0], 3.0, w), 0.0);
        let no_cost = MetricWeights::new(1.0, 0.0).unwrap();
        assert_eq!(augmented_distance(&[0.0, 0.0], 0.0, &[3.0, 4.0], 99.0, no_cost), 25.0);
        assert_eq!(
            augmented_distance(&[0.0, 0.0], 7.0, &[3.0, 4.0], f64::INFINITY, w),
            25.0
        );
        assert!(MetricWeights::new(0.0, 1.0).is_none());
        assert!(MetricWeights::new(1.0, -1.0).is_none());
    }

    #[test]
    fn nearest_single_root() {
        let t = tree2(TreeRole::Start, [0.0, 0.0], [1.0, 0.0]);
        let w = MetricWeights::default();
        assert_eq!(t.nearest(&[0.3, 0.4], 0.6, w), Some(VertexId(0)));
        assert_eq!(t.nearest(&[0.3, 0.4], 0.5, w), None);
        assert_eq!(t.nearest(&[0.3, 0.4], 0.1, w), None);
        assert_eq!(t.nearest(&[0.3, 0.4], f64::INFINITY, w), Some(VertexId(0)));
        assert_eq!(t.nearest(&[0.3, 0.4], f64::NAN, w), None);
    }

    #[test]
    fn nearest_ties_prefer_lowest_id() {
        let mut t = tree2(TreeRole::Start, [0.0, 0.0], [1.0, 0.0]);
        let a = t.insert(&[1.0, 0.0], 1.0, VertexId(0)).unwrap();
        let _b = t.insert(&[-1.0, 0.0], 1.0, VertexId(0)).unwrap();
        assert_eq!(t.nearest(&[0.0, 5.0], f64::INFINITY, MetricWeights::default()), Some(VertexId(0)));
        assert_eq!(t.nearest(&[0.0, 0.0], 10.0, MetricWeights::new(1.0, 0.0).unwrap()), Some(VertexId(0)));
        // equidistant from both children, the root excluded by distance
        assert_eq!(t.nearest(&[0.0, 3.0], f64::INFINITY, MetricWeights::default()), Some(VertexId(0)));
        let mut t2 = tree2(TreeRole::Start, [0.0, 10.0], [1.0, 0.0]);
        let c = cost(&[0.0, 10.0], &[1.0, 0.0]);
        let a2 = t2.insert(&[1.0, 0.0], c, VertexId(0)).unwrap();
        t2.insert(&[-1.0, 0.0], c, VertexId(0)).unwrap();
        assert_eq!(t2.nearest(&[0.0, 0.0], f64::INFINITY, MetricWeights::default()), Some(a2));
        assert_eq!(a, a2);
    }

    #[test]
    fn nearest_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = MetricWeights::default();
        let t = random_tree(&mut rng, 50, 2);
        for _ in 0..100 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let c = rng.random_range(0.0..3.0);
            assert_eq!(t.nearest(&x, c, w), brute_nearest(&t, &x, c, w));
        }
    }

    #[test]
    fn insert_checks() {
        let mut t = tree2(TreeRole::Start, [0.0, 0.0], [1.0, 1.0]);
        let v = t.insert(&[3.0, 4.0], 5.0, VertexId(0)).unwrap();
        assert_eq!(t.cost(v), 5.0);
        assert_eq!(t.parent(v), Some(VertexId(0)));
        assert_eq!(
            t.insert(&[3.0, 4.0], 5.0, VertexId(9)),
            Err(TreeError::UnknownVertex(VertexId(9)))
        );
        assert!(matches!(
            t.insert(&[3.0, 4.0], 4.0, VertexId(0)),
            Err(TreeError::CostRecurrence { .. })
        ));
        assert!(matches!(
            t.insert(&[3.0], 4.0, VertexId(0)),
            Err(TreeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn counting_and_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tree(&mut rng, 40, 3);
        assert_eq!(t.len(), 41);
        assert_eq!(t.ids().filter(|&id| t.parent(id).is_some()).count(), 40);
        for id in t.ids() {
            let rec = t.recomputed_cost(id);
            assert!((rec - t.cost(id)).abs() <= 1e-9 * rec.max(1.0));
            assert_eq!(t.branch(id)[0], VertexId(0));
        }
    }

    #[test]
    fn extract_direct_edge() {
        let s = tree2(TreeRole::Start, [0.0, 0.0], [1.0, 0.0]);
        let g = tree2(TreeRole::Goal, [1.0, 0.0], [0.0, 0.0]);
        for (a, b) in [(&s, &g), (&g, &s)] {
            let p = extract_path(a, b, VertexId(0), VertexId(0)).unwrap();
            assert_eq!(p.len(), 2);
            assert_eq!(p.first().unwrap().as_slice(), &[0.0, 0.0]);
            assert_eq!(p.last().unwrap().as_slice(), &[1.0, 0.0]);
            assert_eq!(p.cost(), 1.0);
        }
        assert_eq!(
            extract_path(&s, &s, VertexId(0), VertexId(0)),
            Err(TreeError::SameTree(TreeRole::Start))
        );
    }

    #[test]
    fn extract_shared_bridge() {
        let mut s = tree2(TreeRole::Start, [0.0, 0.0], [2.0, 0.0]);
        let mut g = tree2(TreeRole::Goal, [2.0, 0.0], [0.0, 0.0]);
        let a = s.insert(&[1.0, 1.0], 2f64.sqrt(), VertexId(0)).unwrap();
        let b = g.insert(&[1.0, 1.0], 2f64.sqrt(), VertexId(0)).unwrap();
        let p = extract_path(&g, &s, b, a).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.first().unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(p.last().unwrap().as_slice(), &[2.0, 0.0]);
        assert!((p.cost() - (s.cost(a) + g.cost(b))).abs() < 1e-12);
    }

    #[test]
    fn csv_dump() {
        let mut t = tree2(TreeRole::Start, [0.0, 0.0], [1.0, 0.0]);
        t.insert(&[3.0, 4.0], 5.0, VertexId(0)).unwrap();
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "id,parent,cost,x0,x1\n0,,0,0,0\n1,0,5,3,4\n"
        );
    }

    proptest! {
        #[test]
        fn nearest_is_filter_sound_and_matches_scan(seed in any::<u64>(), c in 0.0f64..4.0, wc in 0.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tree(&mut rng, 30, 2);
            let w = MetricWeights::new(1.0, wc).unwrap();
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let got = t.nearest(&x, c, w);
            prop_assert_eq!(got, brute_nearest(&t, &x, c, w));
            if let Some(id) = got {
                prop_assert!(t.cost(id) + cost(t.config(id), &x) < c);
            }
        }

        #[test]
        fn path_cost_matches_bridge_costs(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = random_tree(&mut rng, 10, 2);
            let mut g = random_tree(&mut rng, 10, 2);
            s.role = TreeRole::Start;
            g.role = TreeRole::Goal;
            let a = VertexId(rng.random_range(0..s.len()));
            let b = VertexId(rng.random_range(0..g.len()));
            let p = extract_path(&s, &g, a, b).unwrap();
            let expected = s.cost(a) + g.cost(b) + cost(s.config(a), g.config(b));
            prop_assert!((p.cost() - expected).abs() <= 1e-9 * expected.max(1.0));
            prop_assert_eq!(p.first().unwrap().as_slice(), s.root());
            prop_assert_eq!(p.last().unwrap().as_slice(), g.root());
        }
    }
}
