//! Voice + pointing intent fusion, constrained task planning and a
//! quasi-static manipulator workcell.
//!
//! Data flows one way: [`grammar`] turns recognized words into command
//! tokens, [`geometry`] turns skeletons and detections into pointing rays and
//! scene objects, [`fusion`] binds both into an [`fusion::Intention`],
//! [`planner`] compiles that into a validated [`planner::ActionSequence`] and
//! [`workcell`] executes it.

pub mod config;
pub mod episode;
pub mod fusion;
pub mod geometry;
pub mod grammar;
pub mod planner;
pub mod presets;
pub mod session;
pub mod workcell;

pub use config::Config;
