//! Air-fuel-ratio controller surrogate.
//!
//! The measured air-fuel ratio follows its reference through a first-order
//! lag. Every pedal step kicks the ratio away from the reference in
//! proportion to the step size and engine speed, which produces the transient
//! spikes in `mu` the controller specs care about. Pedal angles at or above
//! 70 degrees switch the controller into power mode (`mode = 1`) with a richer
//! reference; the switch itself is fed forward and causes no spike.

use super::{InputChannel, ModelError, ModelParams, ParamReader, SystemModel};
use crate::signal::Signal;

const AF_NORMAL: f64 = 14.7;
const AF_POWER: f64 = 12.5;
const POWER_PEDAL: f64 = 70.0;

#[derive(Debug, Clone)]
pub struct FuelModel {
    inputs: Vec<InputChannel>,
    horizon: f64,
    step: f64,
    /// Lag time constant of the air-fuel ratio (seconds).
    tau: f64,
    /// Relative kick per degree of pedal step at 1000 rpm.
    kick: f64,
}

impl FuelModel {
    pub fn from_params(params: &ModelParams) -> Result<Self, ModelError> {
        let mut r = ParamReader::new("fuel", params);
        let horizon = super::positive("horizon", r.get("horizon", 50.0))?;
        let step = super::positive("step", r.get("step", 0.05))?;
        let tau = super::positive("tau", r.get("tau", 0.3))?;
        let kick = super::positive("kick", r.get("kick", 0.0025))?;
        r.finish()?;
        Ok(Self {
            inputs: vec![
                InputChannel::new("pedal", 8.8, 90.0),
                InputChannel::new("engine", 900.0, 1100.0),
            ],
            horizon,
            step,
            tau,
            kick,
        })
    }
}

impl Default for FuelModel {
    fn default() -> Self {
        Self::from_params(&ModelParams::new()).expect("defaults are valid")
    }
}

impl SystemModel for FuelModel {
    fn name(&self) -> &str {
        "fuel"
    }

    fn inputs(&self) -> &[InputChannel] {
        &self.inputs
    }

    fn outputs(&self) -> Vec<String> {
        vec!["mu".into(), "mode".into()]
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn step(&self) -> f64 {
        self.step
    }

    fn respond(&self, u: &Signal) -> Signal {
        let dt = u.step();
        let alpha = dt / (self.tau + dt);
        let mut af = AF_NORMAL;
        let mut last_pedal: Option<f64> = None;
        let mut last_reference = AF_NORMAL;
        let mut rows = Vec::with_capacity(u.len());
        for row in u.rows() {
            let (pedal, engine) = (row[0], row[1]);
            let power = pedal >= POWER_PEDAL;
            let reference = if power { AF_POWER } else { AF_NORMAL };
            // Mode switches are fed forward: the relative error carries over.
            af *= reference / last_reference;
            last_reference = reference;
            if let Some(prev) = last_pedal {
                af += af * self.kick * (pedal - prev) * engine / 1000.0;
            }
            last_pedal = Some(pedal);
            let mu = (af - reference).abs() / reference;
            rows.push(vec![mu, if power { 1.0 } else { 0.0 }]);
            af += alpha * (reference - af);
        }
        Signal::from_rows(self.outputs(), dt, rows).expect("well-formed output")
    }
}
