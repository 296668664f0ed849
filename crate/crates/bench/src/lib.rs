//! Benchmark harness for the aorrtc planners: suite files, trial execution,
//! confidence-banded curves and a grid optimality oracle.

pub mod oracle;
pub mod stats;
pub mod report;
pub mod suite;
