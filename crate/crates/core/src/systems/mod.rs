//! Black-box system models.
//!
//! A model maps an input signal on `[0, T]` to an output signal on the same
//! grid and must be causal: the output up to time `T` does not depend on
//! inputs after `T`. The built-in surrogates stand in for the usual
//! automotive falsification benchmarks; they keep the channel names, input
//! ranges and horizons of those benchmarks but have deliberately simple
//! dynamics.

mod car;
mod fuel;
mod synthetic;
mod wrappers;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::signal::{Signal, SignalError};

pub use car::CarModel;
pub use fuel::FuelModel;
pub use synthetic::SyntheticModel;
pub use wrappers::{
    delta_channel_name, parse_delta_channel, prepare_for_formula, scale_formula, scale_output,
    with_derived_delta, DeltaModel, ScaledModel,
};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown model `{0}` (expected car, fuel or synthetic)")]
    UnknownModel(String),
    #[error("model `{model}` has no parameter `{param}`")]
    UnknownParam { model: String, param: String },
    #[error("invalid parameter `{param}`: {reason}")]
    BadParam { param: String, reason: String },
    #[error("input channels {got:?} do not match the model's {expected:?}")]
    InputChannels {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("input step {got} does not match the model step {expected}")]
    Step { expected: f64, got: f64 },
    #[error("input `{channel}` = {value} at t = {time} is outside [{lo}, {hi}]")]
    RangeViolation {
        channel: String,
        time: f64,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("model has no output channel `{0}`")]
    UnknownOutput(String),
    #[error("equality atom over scaled channel `{0}` cannot be rescaled")]
    ScaledEquality(String),
    #[error("product of channels in an atom over scaled channel `{0}` cannot be rescaled")]
    NonlinearScaling(String),
    #[error("delta horizon {tau} must be on the grid and within (0, {horizon}]")]
    BadDelta { tau: f64, horizon: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// One input channel with its admissible range.
#[derive(Debug, Clone, PartialEq)]
pub struct InputChannel {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl InputChannel {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self {
            name: name.to_string(),
            lo,
            hi,
        }
    }
}

pub trait SystemModel: Send + Sync {
    fn name(&self) -> &str;

    fn inputs(&self) -> &[InputChannel];

    fn outputs(&self) -> Vec<String>;

    /// Nominal horizon used when searching for inputs.
    fn horizon(&self) -> f64;

    fn step(&self) -> f64;

    /// Runs the dynamics on an already validated input of any horizon.
    fn respond(&self, u: &Signal) -> Signal;

    /// Validates `u` against the declared channels, step and ranges, then runs
    /// the model. Out-of-range samples are rejected, never clamped.
    fn simulate(&self, u: &Signal) -> Result<Signal, ModelError> {
        validate_input(self.inputs(), self.step(), u)?;
        Ok(self.respond(u))
    }

    fn input_names(&self) -> Vec<String> {
        self.inputs().iter().map(|c| c.name.clone()).collect()
    }
}

pub(crate) fn validate_input(
    inputs: &[InputChannel],
    step: f64,
    u: &Signal,
) -> Result<(), ModelError> {
    let names: Vec<String> = inputs.iter().map(|c| c.name.clone()).collect();
    if u.channels() != names.as_slice() {
        return Err(ModelError::InputChannels {
            expected: names,
            got: u.channels().to_vec(),
        });
    }
    if (u.step() - step).abs() > 1e-12 * step {
        return Err(ModelError::Step {
            expected: step,
            got: u.step(),
        });
    }
    for (j, row) in u.rows().enumerate() {
        for (c, &v) in inputs.iter().zip(row) {
            if !(v >= c.lo && v <= c.hi) {
                return Err(ModelError::RangeViolation {
                    channel: c.name.clone(),
                    time: u.time(j),
                    value: v,
                    lo: c.lo,
                    hi: c.hi,
                });
            }
        }
    }
    Ok(())
}

/// Checks the causality identity `M(u . u2)|[0,T] = M(u)` up to `tol` per sample.
pub fn check_causality(
    m: &dyn SystemModel,
    u: &Signal,
    u2: &Signal,
    tol: f64,
) -> Result<bool, ModelError> {
    let short = m.simulate(u)?;
    let long = m.simulate(&u.concat(u2)?)?;
    let dev = (0..short.len())
        .flat_map(|j| {
            short
                .row(j)
                .iter()
                .zip(long.row(j))
                .map(|(a, b)| (a - b).abs())
        })
        .fold(0.0f64, f64::max);
    Ok(dev <= tol)
}

pub type ModelParams = BTreeMap<String, f64>;

/// Instantiates a built-in model by registry name.
pub fn load_model(name: &str, params: &ModelParams) -> Result<Arc<dyn SystemModel>, ModelError> {
    match name {
        "car" => Ok(Arc::new(CarModel::from_params(params)?)),
        "fuel" => Ok(Arc::new(FuelModel::from_params(params)?)),
        "synthetic" => Ok(Arc::new(SyntheticModel::from_params(params)?)),
        other => Err(ModelError::UnknownModel(other.to_string())),
    }
}

/// Splits `key=value` into a parameter entry.
pub fn parse_param(text: &str) -> Result<(String, f64), ModelError> {
    let (k, v) = text.split_once('=').ok_or_else(|| ModelError::BadParam {
        param: text.to_string(),
        reason: "expected key=value".into(),
    })?;
    let v = v.trim().parse::<f64>().map_err(|e| ModelError::BadParam {
        param: k.to_string(),
        reason: e.to_string(),
    })?;
    Ok((k.trim().to_string(), v))
}

/// Reads known parameters out of `params`, rejecting anything else.
pub(crate) struct ParamReader<'a> {
    model: &'static str,
    params: &'a ModelParams,
    seen: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    pub(crate) fn new(model: &'static str, params: &'a ModelParams) -> Self {
        Self {
            model,
            params,
            seen: Vec::new(),
        }
    }

    pub(crate) fn get(&mut self, key: &'static str, default: f64) -> f64 {
        self.seen.push(key);
        self.params.get(key).copied().unwrap_or(default)
    }

    pub(crate) fn finish(self) -> Result<(), ModelError> {
        match self
            .params
            .keys()
            .find(|k| !self.seen.contains(&k.as_str()))
        {
            Some(k) => Err(ModelError::UnknownParam {
                model: self.model.to_string(),
                param: k.clone(),
            }),
            None => Ok(()),
        }
    }
}

pub(crate) fn positive(param: &str, v: f64) -> Result<f64, ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ModelError::BadParam {
            param: param.to_string(),
            reason: format!("must be positive, got {v}"),
        })
    }
}
