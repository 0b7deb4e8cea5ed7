//! Automatic post-editing by predicting edit operations over a machine
//! translation hypothesis.

pub mod config;
pub mod datapipe;
pub mod editops;
pub mod infer;
pub mod metrics;
pub mod model;
pub mod numcore;
pub mod vocab;
pub mod trainer;
