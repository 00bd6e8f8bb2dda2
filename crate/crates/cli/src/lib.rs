//! Model and evidence documents, packaged example networks and the `ctbn`
//! command-line driver.

pub mod app;
pub mod examples;
pub mod lotka_volterra;
pub mod model;
pub mod paths;
pub mod result;
pub mod simulate;

pub use app::{cli_main, execute, Args, Failure};
pub use lotka_volterra::{build_lotka_volterra, LvParams};
pub use model::{parse_model, serialize_model, ModelError, ModelFile};
pub use paths::PathsFile;
pub use result::ResultFile;
pub use simulate::{simulate_evidence, Simulated};
