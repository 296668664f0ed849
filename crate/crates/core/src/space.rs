//! Configuration spaces, collision worlds, the path-length cost, steering and
//! discretized edge validation.
//!
//! Everything the planners need from "the world" lives here. The planners only
//! ever talk to a [`Problem`], which bundles a [`ConfigurationSpace`], a
//! [`World`] and the two endpoint configurations.

use std::fmt;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest dimension accepted for hypercube worlds.
pub const MAX_HYPERCUBE_DIMENSION: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("configuration space needs at least one dimension")]
    ZeroDimension,
    #[error("bounds of dimension {index} are empty or not finite: [{lower}, {upper}]")]
    BadBounds { index: usize, lower: f64, upper: f64 },
    #[error("invalid obstacle: {0}")]
    BadObstacle(String),
    #[error("invalid world: {0}")]
    BadWorld(String),
    #[error("a path needs at least two waypoints, got {0}")]
    ShortPath(usize),
}

/// A point of the configuration space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<f64>);

impl Configuration {
    pub fn new(coords: Vec<f64>) -> Self {
        Configuration(coords)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Point at fraction `t` of the way from `self` to `other`.
    pub fn lerp(&self, other: &[f64], t: f64) -> Configuration {
        Configuration(lerp(&self.0, other, t))
    }
}

impl Deref for Configuration {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Configuration {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Configuration {
    fn from(v: Vec<f64>) -> Self {
        Configuration(v)
    }
}

impl<const N: usize> From<[f64; N]> for Configuration {
    fn from(v: [f64; N]) -> Self {
        Configuration(v.to_vec())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c:.4}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Edge cost: Euclidean distance. Doubles as the admissible estimate, since
/// it is exact for straight-line edges.
pub fn cost(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    squared_distance(a, b).sqrt()
}

/// Moves from `from` toward `to` by at most `range`.
pub fn steer(from: &[f64], to: &[f64], range: f64) -> Configuration {
    let d = cost(from, to);
    if d <= range {
        Configuration(to.to_vec())
    } else {
        Configuration(lerp(from, to, range / d))
    }
}

/// Axis-aligned box domain `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ConfigurationSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SpaceError> {
        if lower.is_empty() {
            return Err(SpaceError::ZeroDimension);
        }
        if lower.len() != upper.len() {
            return Err(SpaceError::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (index, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(SpaceError::BadBounds {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(ConfigurationSpace { lower, upper })
    }

    /// The unit hypercube `[0, 1]^n`.
    pub fn unit(dimension: usize) -> Result<Self, SpaceError> {
        Self::new(vec![0.0; dimension], vec![1.0; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Length of the main diagonal of the box.
    pub fn diagonal(&self) -> f64 {
        cost(&self.lower, &self.upper)
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn check_dimension(&self, x: &[f64]) -> Result<(), SpaceError> {
        if x.len() == self.dimension() {
            Ok(())
        } else {
            Err(SpaceError::DimensionMismatch {
                expected: self.dimension(),
                actual: x.len(),
            })
        }
    }

    /// Draws every coordinate independently and uniformly within bounds.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        Configuration(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(&lo, &hi)| rng.random_range(lo..hi))
                .collect(),
        )
    }
}

/// Axis-aligned box obstacle, any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AaBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl AaBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self, SpaceError> {
        if min.len() != max.len() {
            return Err(SpaceError::BadObstacle(format!(
                "box corners have {} and {} coordinates",
                min.len(),
                max.len()
            )));
        }
        if min
            .iter()
            .zip(&max)
            .any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
        {
            return Err(SpaceError::BadObstacle(format!(
                "box corners {min:?} / {max:?} are not ordered finite values"
            )));
        }
        Ok(AaBox { min, max })
    }

    /// Strict interior test: configurations on the boundary are free.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *lo < *v && *v < *hi)
    }
}

/// Ball obstacle, any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Sphere {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, SpaceError> {
        if !(radius.is_finite() && radius >= 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(SpaceError::BadObstacle(format!(
                "sphere at {center:?} with radius {radius} is not finite"
            )));
        }
        Ok(Sphere { center, radius })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        squared_distance(&self.center, x) < self.radius * self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Obstacle {
    Box(AaBox),
    Sphere(Sphere),
}

impl Obstacle {
    fn dimension(&self) -> usize {
        match self {
            Obstacle::Box(b) => b.min.len(),
            Obstacle::Sphere(s) => s.center.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Obstacle::Box(b) => b.contains(x),
            Obstacle::Sphere(s) => s.contains(x),
        }
    }
}

/// Obstacles for the planar arm, living in the arm's workspace plane.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanarObstacle {
    Segment { a: [f64; 2], b: [f64; 2] },
    Box { min: [f64; 2], max: [f64; 2] },
}

impl PlanarObstacle {
    fn is_finite(&self) -> bool {
        let (p, q) = match self {
            PlanarObstacle::Segment { a, b } => (a, b),
            PlanarObstacle::Box { min, max } => (min, max),
        };
        p.iter().chain(q).all(|v| v.is_finite())
    }

    fn hits_segment(&self, p: [f64; 2], q: [f64; 2]) -> bool {
        match self {
            PlanarObstacle::Segment { a, b } => segments_intersect(p, q, *a, *b),
            PlanarObstacle::Box { min, max } => segment_hits_box(p, q, *min, *max),
        }
    }
}

/// A chain of revolute joints in the plane. Joint angles are relative to the
/// previous link; the configuration has one angle per link.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarArm {
    pub base: [f64; 2],
    pub link_lengths: Vec<f64>,
    pub obstacles: Vec<PlanarObstacle>,
}

impl PlanarArm {
    /// Joint positions, base first and tip last (`links + 1` points).
    pub fn forward_kinematics(&self, angles: &[f64]) -> Vec<[f64; 2]> {
        let mut points = Vec::with_capacity(self.link_lengths.len() + 1);
        let mut p = self.base;
        let mut heading = 0.0;
        points.push(p);
        for (len, theta) in self.link_lengths.iter().zip(angles) {
            heading += theta;
            p = [p[0] + len * heading.cos(), p[1] + len * heading.sin()];
            points.push(p);
        }
        points
    }

    fn is_free(&self, angles: &[f64]) -> bool {
        let joints = self.forward_kinematics(angles);
        joints.windows(2).all(|link| {
            self.obstacles
                .iter()
                .all(|o| !o.hits_segment(link[0], link[1]))
        })
    }
}

fn orientation(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// Closed segment intersection (touching counts).
pub fn segments_intersect(p: [f64; 2], q: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    let d1 = orientation(a, b, p);
    let d2 = orientation(a, b, q);
    let d3 = orientation(p, q, a);
    let d4 = orientation(p, q, b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, b, p))
        || (d2 == 0.0 && on_segment(a, b, q))
        || (d3 == 0.0 && on_segment(p, q, a))
        || (d4 == 0.0 && on_segment(p, q, b))
}

/// Liang-Barsky clip of segment `p`-`q` against the closed box.
pub fn segment_hits_box(p: [f64; 2], q: [f64; 2], min: [f64; 2], max: [f64; 2]) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for axis in 0..2 {
        let d = q[axis] - p[axis];
        if d == 0.0 {
            if p[axis] < min[axis] || p[axis] > max[axis] {
                return false;
            }
        } else {
            let a = (min[axis] - p[axis]) / d;
            let b = (max[axis] - p[axis]) / d;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            t0 = t0.max(lo);
            t1 = t1.min(hi);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// The obstacle description; determines `X_invalid`.
#[derive(Debug, Clone, PartialEq)]
pub enum World {
    /// A point robot in 2-D or 3-D among boxes and spheres.
    Point {
        dimension: usize,
        obstacles: Vec<Obstacle>,
    },
    /// A point robot in an n-D hypercube among hyperspheres.
    Hypercube {
        dimension: usize,
        obstacles: Vec<Sphere>,
    },
    PlanarArm(PlanarArm),
}

impl World {
    pub fn point(dimension: usize, obstacles: Vec<Obstacle>) -> Result<Self, SpaceError> {
        if !(2..=3).contains(&dimension) {
            return Err(SpaceError::BadWorld(format!(
                "point worlds are 2-D or 3-D, got {dimension}"
            )));
        }
        if let Some(o) = obstacles.iter().find(|o| o.dimension() != dimension) {
            return Err(SpaceError::BadObstacle(format!(
                "{}-D obstacle in a {dimension}-D world",
                o.dimension()
            )));
        }
        Ok(World::Point {
            dimension,
            obstacles,
        })
    }

    pub fn hypercube(dimension: usize, obstacles: Vec<Sphere>) -> Result<Self, SpaceError> {
        if !(1..=MAX_HYPERCUBE_DIMENSION).contains(&dimension) {
            return Err(SpaceError::BadWorld(format!(
                "hypercube worlds support 1..={MAX_HYPERCUBE_DIMENSION} dimensions, got {dimension}"
            )));
        }
        if let Some(s) = obstacles.iter().find(|s| s.center.len() != dimension) {
            return Err(SpaceError::BadObstacle(format!(
                "{}-D sphere in a {dimension}-D world",
                s.center.len()
            )));
        }
        Ok(World::Hypercube {
            dimension,
            obstacles,
        })
    }

    pub fn planar_arm(
        base: [f64; 2],
        link_lengths: Vec<f64>,
        obstacles: Vec<PlanarObstacle>,
    ) -> Result<Self, SpaceError> {
        if link_lengths.is_empty() {
            return Err(SpaceError::BadWorld("arm without links".into()));
        }
        if link_lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(SpaceError::BadWorld(format!(
                "link lengths must be positive, got {link_lengths:?}"
            )));
        }
        if !base.iter().all(|v| v.is_finite()) || !obstacles.iter().all(|o| o.is_finite()) {
            return Err(SpaceError::BadObstacle("non-finite arm obstacle".into()));
        }
        Ok(World::PlanarArm(PlanarArm {
            base,
            link_lengths,
            obstacles,
        }))
    }

    pub fn dimension(&self) -> usize {
        match self {
            World::Point { dimension, .. } | World::Hypercube { dimension, .. } => *dimension,
            World::PlanarArm(arm) => arm.link_lengths.len(),
        }
    }

    pub fn is_arm(&self) -> bool {
        matches!(self, World::PlanarArm(_))
    }

    /// Membership in `X_valid`, rejecting configurations of the wrong size.
    pub fn is_valid(&self, x: &[f64]) -> Result<bool, SpaceError> {
        if x.len() != self.dimension() {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dimension(),
                actual: x.len(),
            });
        }
        Ok(self.is_free(x))
    }

    /// Unchecked variant of [`World::is_valid`] for the planner hot path.
    pub fn is_free(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dimension());
        match self {
            World::Point { obstacles, .. } => obstacles.iter().all(|o| !o.contains(x)),
            World::Hypercube { obstacles, .. } => obstacles.iter().all(|s| !s.contains(x)),
            World::PlanarArm(arm) => arm.is_free(x),
        }
    }

    /// Checks the straight edge `a`-`b` at interpolation spacing no larger
    /// than `resolution`, endpoints included. The far endpoint is checked
    /// first since that is where new edges usually fail.
    pub fn validate(&self, a: &[f64], b: &[f64], resolution: f64) -> bool {
        debug_assert!(resolution > 0.0);
        let length = cost(a, b);
        let steps = (length / resolution).ceil().max(1.0) as usize;
        let mut buf = vec![0.0; a.len()];
        for i in (0..=steps).rev() {
            let t = i as f64 / steps as f64;
            for (k, slot) in buf.iter_mut().enumerate() {
                *slot = a[k] + (b[k] - a[k]) * t;
            }
            if !self.is_free(&buf) {
                return false;
            }
        }
        true
    }
}

/// An ordered sequence of waypoints joined by straight edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    waypoints: Vec<Configuration>,
}

impl Path {
    pub fn new(waypoints: Vec<Configuration>) -> Self {
        Path { waypoints }
    }

    pub fn waypoints(&self) -> &[Configuration] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<Configuration> {
        self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> Option<&Configuration> {
        self.waypoints.first()
    }

    pub fn last(&self) -> Option<&Configuration> {
        self.waypoints.last()
    }

    /// Sum of edge costs; zero for fewer than two waypoints.
    pub fn cost(&self) -> f64 {
        self.waypoints.windows(2).map(|w| cost(&w[0], &w[1])).sum()
    }

    /// Re-validates every edge at the given resolution.
    pub fn is_valid_in(&self, world: &World, resolution: f64) -> bool {
        !self.waypoints.is_empty()
            && self.waypoints.iter().all(|w| w.len() == world.dimension())
            && self
                .waypoints
                .windows(2)
                .all(|w| world.validate(&w[0], &w[1], resolution))
            && (self.waypoints.len() > 1 || world.is_free(&self.waypoints[0]))
    }

    /// Drops consecutive duplicate waypoints.
    pub fn dedup(&mut self) {
        self.waypoints.dedup();
    }
}

/// `c(σ)` with the usage check for degenerate paths.
pub fn path_cost(path: &Path) -> Result<f64, SpaceError> {
    if path.len() < 2 {
        return Err(SpaceError::ShortPath(path.len()));
    }
    Ok(path.cost())
}
