pub mod architect;
pub mod builder;
pub mod error;
pub mod math;
pub mod metrics;
pub mod run;
pub mod seed;
pub mod toy;
pub mod world;

pub use error::{Error, Result};
