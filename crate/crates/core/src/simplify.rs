//! Path simplification: randomized shortcutting and corner-cutting spline
//! smoothing. Every operation returns a collision-free path that is no longer
//! than its input and keeps the input's endpoints bit for bit.

use std::time::Instant;

use rand::Rng;

use crate::space::{cost, Configuration, Path, World};

#[derive(Debug, Clone, PartialEq)]
pub struct SimplifyConfig {
    pub shortcut_rounds: usize,
    pub spline_passes: usize,
    pub max_no_improve: usize,
    pub resolution: f64,
}

impl SimplifyConfig {
    pub fn with_resolution(resolution: f64) -> Self {
        SimplifyConfig {
            shortcut_rounds: 100,
            spline_passes: 2,
            max_no_improve: 20,
            resolution,
        }
    }
}

/// Degree of the uniform B-spline whose control-polygon refinement the
/// smoothing pass imitates.
pub const SPLINE_DEGREE: usize = 3;

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

/// Randomized shortcutting by arc length.
pub fn shortcut<R: Rng + ?Sized>(path: &Path, world: &World, cfg: &SimplifyConfig, rng: &mut R) -> Path {
    shortcut_until(path, world, cfg, rng, None)
}

fn shortcut_until<R: Rng + ?Sized>(
    path: &Path,
    world: &World,
    cfg: &SimplifyConfig,
    rng: &mut R,
    deadline: Option<Instant>,
) -> Path {
    let mut wps: Vec<Configuration> = path.waypoints().to_vec();
    if wps.len() <= 2 {
        return path.clone();
    }
    let (first, last) = (wps[0].clone(), wps[wps.len() - 1].clone());
    if world.validate(&first, &last, cfg.resolution) {
        return Path::new(vec![first, last]);
    }

    let mut misses = 0;
    for _ in 0..cfg.shortcut_rounds {
        if misses >= cfg.max_no_improve || wps.len() <= 2 || expired(deadline) {
            break;
        }
        let mut cumulative = Vec::with_capacity(wps.len());
        let mut total = 0.0;
        cumulative.push(0.0);
        for w in wps.windows(2) {
            total += cost(&w[0], &w[1]);
            cumulative.push(total);
        }
        if !(total > 0.0) {
            break;
        }
        let mut s1 = rng.random_range(0.0..total);
        let mut s2 = rng.random_range(0.0..total);
        if s1 > s2 {
            std::mem::swap(&mut s1, &mut s2);
        }
        let i = segment_index(&cumulative, s1);
        let j = segment_index(&cumulative, s2);
        if i == j {
            misses += 1;
            continue;
        }
        let p1 = point_on(&wps, &cumulative, i, s1);
        let p2 = point_on(&wps, &cumulative, j, s2);
        let gain = (s2 - s1) - cost(&p1, &p2);
        // the partial legs are re-checked too: discretization points differ
        // from those used when the original edges were validated
        if !(gain > 1e-12 * total)
            || !world.validate(&p1, &p2, cfg.resolution)
            || !world.validate(&wps[i], &p1, cfg.resolution)
            || !world.validate(&p2, &wps[j + 1], cfg.resolution)
        {
            misses += 1;
            continue;
        }
        let mut next: Vec<Configuration> = Vec::with_capacity(wps.len());
        next.extend_from_slice(&wps[..=i]);
        if p1 != wps[i] {
            next.push(p1);
        }
        if p2 != wps[j + 1] {
            next.push(p2);
        }
        next.extend_from_slice(&wps[j + 1..]);
        if Path::new(next.clone()).cost() < Path::new(wps.clone()).cost() {
            wps = next;
            misses = 0;
        } else {
            misses += 1;
        }
    }
    Path::new(wps)
}

fn segment_index(cumulative: &[f64], s: f64) -> usize {
    // last i with cumulative[i] <= s, capped to the final segment
    let i = cumulative.partition_point(|&c| c <= s);
    i.saturating_sub(1).min(cumulative.len() - 2)
}

fn point_on(wps: &[Configuration], cumulative: &[f64], i: usize, s: f64) -> Configuration {
    let len = cumulative[i + 1] - cumulative[i];
    if len <= 0.0 {
        return wps[i].clone();
    }
    let t = ((s - cumulative[i]) / len).clamp(0.0, 1.0);
    if t == 0.0 {
        wps[i].clone()
    } else {
        wps[i].lerp(&wps[i + 1], t)
    }
}

/// One corner-cutting pass. Each interior waypoint is replaced by the points a
/// quarter of the way toward each neighbour, unless the cut collides.
pub fn bspline_smooth(path: &Path, world: &World, cfg: &SimplifyConfig) -> Path {
    let wps = path.waypoints();
    if wps.len() <= 2 {
        return path.clone();
    }
    let mut out: Vec<Configuration> = Vec::with_capacity(2 * wps.len());
    out.push(wps[0].clone());
    for k in 1..wps.len() - 1 {
        let corner = &wps[k];
        let before = corner.lerp(&wps[k - 1], 0.25);
        let after = corner.lerp(&wps[k + 1], 0.25);
        let prev = out.last().expect("path has a first waypoint");
        if world.validate(prev, &before, cfg.resolution)
            && world.validate(&before, &after, cfg.resolution)
        {
            out.push(before);
            out.push(after);
        } else {
            out.push(corner.clone());
        }
    }
    out.push(wps[wps.len() - 1].clone());
    let mut smoothed = Path::new(out);
    smoothed.dedup();
    if smoothed.len() < 2
        || smoothed.cost() > path.cost() + 1e-9
        || !smoothed.is_valid_in(world, cfg.resolution)
    {
        return path.clone();
    }
    smoothed
}

/// Shortcut, spline passes, then a final shortcut, stopping early at the
/// deadline.
pub fn simplify<R: Rng + ?Sized>(
    path: &Path,
    world: &World,
    cfg: &SimplifyConfig,
    rng: &mut R,
    deadline: Option<Instant>,
) -> Path {
    let mut current = shortcut_until(path, world, cfg, rng, deadline);
    for _ in 0..cfg.spline_passes {
        if expired(deadline) {
            return current;
        }
        current = bspline_smooth(&current, world, cfg);
    }
    if expired(deadline) {
        return current;
    }
    let finished = shortcut_until(&current, world, cfg, rng, deadline);
    if finished.cost() <= current.cost() {
        finished
    } else {
        current
    }
}
