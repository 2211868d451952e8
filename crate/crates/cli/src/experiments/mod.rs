//! One module per subcommand. Each exposes a `Params` struct (every field
//! defaulted, unknown keys rejected), a `validate` step that runs before any
//! computation, and `run`, which returns the summary and CSV files.
//!
//! All randomness comes from the run seed. Experiments that need several
//! independent streams take `rng::derive_seed(seed, i)` for a fixed `i` per
//! stream, as listed in each module.

pub mod canonical;
pub mod cone;
pub mod entropy;
pub mod field;
pub mod measure;
pub mod spinecho;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::{parse_params, Command, RunConfig};
use crate::output::Outputs;
use crate::RunError;

fn resolve<P: DeserializeOwned + Serialize>(params: Value, validate: fn(&P) -> Result<(), RunError>) -> Result<Value, RunError> {
    let p: P = parse_params(params)?;
    validate(&p)?;
    Ok(serde_json::to_value(&p).expect("serializable params"))
}

/// Parses and validates raw parameters, returning them with defaults filled in.
pub fn resolve_params(command: Command, params: Value) -> Result<Value, RunError> {
    match command {
        Command::Entropy => resolve::<entropy::Params>(params, entropy::validate),
        Command::Field => resolve::<field::Params>(params, field::validate),
        Command::Canonical => resolve::<canonical::Params>(params, canonical::validate),
        Command::Measure => resolve::<measure::Params>(params, measure::validate),
        Command::Cone => resolve::<cone::Params>(params, cone::validate),
        Command::Spinecho => resolve::<spinecho::Params>(params, spinecho::validate),
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outputs, RunError> {
    let p = cfg.params.clone();
    match cfg.subcommand {
        Command::Entropy => entropy::run(&parse_params(p)?, cfg.seed),
        Command::Field => field::run(&parse_params(p)?, cfg.seed),
        Command::Canonical => canonical::run(&parse_params(p)?, cfg.seed),
        Command::Measure => measure::run(&parse_params(p)?, cfg.seed),
        Command::Cone => cone::run(&parse_params(p)?, cfg.seed),
        Command::Spinecho => spinecho::run(&parse_params(p)?, cfg.seed),
    }
}

fn positive(key: &str, x: f64) -> Result<(), RunError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(RunError::schema(key, format!("must be positive and finite, got {x}")))
    }
}

fn at_least(key: &str, x: u64, min: u64) -> Result<(), RunError> {
    if x >= min {
        Ok(())
    } else {
        Err(RunError::schema(key, format!("must be at least {min}, got {x}")))
    }
}
