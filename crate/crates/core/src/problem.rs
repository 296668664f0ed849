//! Planning problems and their JSON file format.
//!
//! ```json
//! {
//!   "name": "centered-box",
//!   "space": { "dimension": 2, "lower": [0, 0], "upper": [1, 1] },
//!   "world": {
//!     "type": "point",
//!     "obstacles": [
//!       { "type": "box", "min": [0.25, 0.25], "max": [0.75, 0.75] },
//!       { "type": "sphere", "center": [0.1, 0.9], "radius": 0.05 }
//!     ]
//!   },
//!   "start": [0.05, 0.5],
//!   "goal": [0.95, 0.5]
//! }
//! ```
//!
//! World types are `point` (2-D/3-D, boxes and spheres), `hypercube` (n-D,
//! spheres only) and `planar_arm` (extra fields `base` and `links`; obstacles
//! are 2-D `segment` with `a`/`b` or `box` with `min`/`max`). Unknown fields
//! are rejected everywhere.

use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{
    AaBox, Configuration, ConfigurationSpace, Obstacle, PlanarObstacle, SpaceError, Sphere, World,
};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("{which} configuration {config} is outside the space bounds")]
    OutOfBounds {
        which: &'static str,
        config: Configuration,
    },
    #[error("{which} configuration {config} is in collision")]
    InCollision {
        which: &'static str,
        config: Configuration,
    },
    #[error("space dimension field says {declared} but bounds have {actual} entries")]
    DeclaredDimension { declared: usize, actual: usize },
    #[error("malformed problem file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A space, a world and two valid endpoint configurations.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    space: ConfigurationSpace,
    world: World,
    start: Configuration,
    goal: Configuration,
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        space: ConfigurationSpace,
        world: World,
        start: Configuration,
        goal: Configuration,
    ) -> Result<Self, ProblemError> {
        if world.dimension() != space.dimension() {
            return Err(SpaceError::DimensionMismatch {
                expected: space.dimension(),
                actual: world.dimension(),
            }
            .into());
        }
        for (which, config) in [("start", &start), ("goal", &goal)] {
            space.check_dimension(config)?;
            if !space.contains(config) {
                return Err(ProblemError::OutOfBounds {
                    which,
                    config: config.clone(),
                });
            }
            if !world.is_free(config) {
                return Err(ProblemError::InCollision {
                    which,
                    config: config.clone(),
                });
            }
        }
        Ok(Problem {
            name: name.into(),
            space,
            world,
            start,
            goal,
        })
    }

    pub fn space(&self) -> &ConfigurationSpace {
        &self.space
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn start(&self) -> &Configuration {
        &self.start
    }

    pub fn goal(&self) -> &Configuration {
        &self.goal
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    /// Straight-line distance between the endpoints: a lower bound on any
    /// solution cost.
    pub fn straight_line_cost(&self) -> f64 {
        crate::space::cost(&self.start, &self.goal)
    }

    pub fn from_json_str(text: &str) -> Result<Self, ProblemError> {
        let file: ProblemFile = serde_json::from_str(text)?;
        file.into_problem()
    }

    pub fn from_path(path: impl AsRef<FsPath>) -> Result<Self, ProblemError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut problem = Self::from_json_str(&text)?;
        if problem.name.is_empty() {
            if let Some(stem) = path.file_stem() {
                problem.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(problem)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile::from(self)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("problem serializes")
    }
}

/// Serialized form of a [`Problem`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub space: SpaceFile,
    pub world: WorldFile,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub dimension: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldFile {
    Point {
        #[serde(default)]
        obstacles: Vec<ObstacleFile>,
    },
    Hypercube {
        #[serde(default)]
        obstacles: Vec<SphereFile>,
    },
    PlanarArm {
        base: [f64; 2],
        links: Vec<f64>,
        #[serde(default)]
        obstacles: Vec<PlanarObstacleFile>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleFile {
    Box { min: Vec<f64>, max: Vec<f64> },
    Sphere { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SphereFile {
    Sphere { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlanarObstacleFile {
    Segment { a: [f64; 2], b: [f64; 2] },
    Box { min: [f64; 2], max: [f64; 2] },
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Problem, ProblemError> {
        if self.space.dimension != self.space.lower.len() {
            return Err(ProblemError::DeclaredDimension {
                declared: self.space.dimension,
                actual: self.space.lower.len(),
            });
        }
        let space = ConfigurationSpace::new(self.space.lower, self.space.upper)?;
        let n = space.dimension();
        let world = match self.world {
            WorldFile::Point { obstacles } => {
                let obstacles = obstacles
                    .into_iter()
                    .map(|o| match o {
                        ObstacleFile::Box { min, max } => AaBox::new(min, max).map(Obstacle::Box),
                        ObstacleFile::Sphere { center, radius } => {
                            Sphere::new(center, radius).map(Obstacle::Sphere)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                World::point(n, obstacles)?
            }
            WorldFile::Hypercube { obstacles } => {
                let obstacles = obstacles
                    .into_iter()
                    .map(|SphereFile::Sphere { center, radius }| Sphere::new(center, radius))
                    .collect::<Result<Vec<_>, _>>()?;
                World::hypercube(n, obstacles)?
            }
            WorldFile::PlanarArm {
                base,
                links,
                obstacles,
            } => {
                let obstacles = obstacles
                    .into_iter()
                    .map(|o| match o {
                        PlanarObstacleFile::Segment { a, b } => PlanarObstacle::Segment { a, b },
                        PlanarObstacleFile::Box { min, max } => PlanarObstacle::Box { min, max },
                    })
                    .collect();
                World::planar_arm(base, links, obstacles)?
            }
        };
        Problem::new(
            self.name,
            space,
            world,
            Configuration::new(self.start),
            Configuration::new(self.goal),
        )
    }
}

impl From<&Problem> for ProblemFile {
    fn from(p: &Problem) -> Self {
        let world = match p.world() {
            World::Point { obstacles, .. } => WorldFile::Point {
                obstacles: obstacles
                    .iter()
                    .map(|o| match o {
                        Obstacle::Box(b) => ObstacleFile::Box {
                            min: b.min.clone(),
                            max: b.max.clone(),
                        },
                        Obstacle::Sphere(s) => ObstacleFile::Sphere {
                            center: s.center.clone(),
                            radius: s.radius,
                        },
                    })
                    .collect(),
            },
            World::Hypercube { obstacles, .. } => WorldFile::Hypercube {
                obstacles: obstacles
                    .iter()
                    .map(|s| SphereFile::Sphere {
                        center: s.center.clone(),
                        radius: s.radius,
                    })
                    .collect(),
            },
            World::PlanarArm(arm) => WorldFile::PlanarArm {
                base: arm.base,
                links: arm.link_lengths.clone(),
                obstacles: arm
                    .obstacles
                    .iter()
                    .map(|o| match *o {
                        PlanarObstacle::Segment { a, b } => PlanarObstacleFile::Segment { a, b },
                        PlanarObstacle::Box { min, max } => PlanarObstacleFile::Box { min, max },
                    })
                    .collect(),
            },
        };
        ProblemFile {
            name: p.name.clone(),
            space: SpaceFile {
                dimension: p.dimension(),
                lower: p.space().lower().to_vec(),
                upper: p.space().upper().to_vec(),
            },
            world,
            start: p.start().to_vec(),
            goal: p.goal().to_vec(),
        }
    }
}
