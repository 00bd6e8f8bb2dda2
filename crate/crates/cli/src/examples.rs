//! Model documents shipped with the crate.

use crate::model::{ModelError, ModelFile};

pub const EXAMPLE1: &str = include_str!("../models/example1.json");
pub const EXAMPLE2: &str = include_str!("../models/example2.json");
pub const LOTKA_VOLTERRA: &str = include_str!("../models/lotka_volterra.json");

pub const NAMES: [&str; 3] = ["example1", "example2", "lotka_volterra"];

/// Text of the packaged model called `name`.
pub fn packaged(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(EXAMPLE1),
        "example2" => Some(EXAMPLE2),
        "lotka_volterra" => Some(LOTKA_VOLTERRA),
        _ => None,
    }
}

pub fn packaged_model(name: &str) -> Option<Result<ModelFile, ModelError>> {
    packaged(name).map(ModelFile::from_json)
}
