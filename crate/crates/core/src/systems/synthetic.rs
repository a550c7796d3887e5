//! Direct robustness-landscape model for controlled scale experiments.
//!
//! Two outputs are memoryless functions of the current input point
//! `u = (u1, u2)`:
//!
//! * `y1 = m1 * (floor + |u - c1|)` is bounded below by `m1 * floor`, so
//!   `y1 > 0` cannot be falsified;
//! * `y2 = m2 * (|u - c2| - r)` is negative exactly inside the disc of radius
//!   `r` around `c2`.
//!
//! `c1` lies near one corner of the input box and `c2` on the opposite edge,
//! so the falsifying disc is cut in half by the box and random sampling
//! rarely lands in it. Under
//! `alw(y1 > 0 and y2 > 0)` with `m2 >> m1`, the min of the two conjuncts is
//! almost always `y1`, which leads a plain optimizer away from `c2`.

use super::{InputChannel, ModelError, ModelParams, ParamReader, SystemModel};
use crate::signal::Signal;

pub const CENTRE_1: [f64; 2] = [-0.8, -0.8];
pub const CENTRE_2: [f64; 2] = [1.0, 0.8];

#[derive(Debug, Clone)]
pub struct SyntheticModel {
    inputs: Vec<InputChannel>,
    horizon: f64,
    step: f64,
    m1: f64,
    m2: f64,
    radius: f64,
    floor: f64,
}

impl SyntheticModel {
    pub fn from_params(params: &ModelParams) -> Result<Self, ModelError> {
        let mut r = ParamReader::new("synthetic", params);
        let horizon = super::positive("horizon", r.get("horizon", 10.0))?;
        let step = super::positive("step", r.get("step", 1.0))?;
        let m1 = super::positive("m1", r.get("m1", 1.0))?;
        let m2 = super::positive("m2", r.get("m2", 1.0))?;
        let radius = super::positive("r", r.get("r", 0.1))?;
        let floor = super::positive("floor", r.get("floor", 2.0))?;
        r.finish()?;
        Ok(Self {
            inputs: vec![
                InputChannel::new("u1", -1.0, 1.0),
                InputChannel::new("u2", -1.0, 1.0),
            ],
            horizon,
            step,
            m1,
            m2,
            radius,
            floor,
        })
    }

    /// Outputs at one input point.
    pub fn outputs_at(&self, u1: f64, u2: f64) -> (f64, f64) {
        let d1 = (u1 - CENTRE_1[0]).hypot(u2 - CENTRE_1[1]);
        let d2 = (u1 - CENTRE_2[0]).hypot(u2 - CENTRE_2[1]);
        (self.m1 * (self.floor + d1), self.m2 * (d2 - self.radius))
    }
}

impl Default for SyntheticModel {
    fn default() -> Self {
        Self::from_params(&ModelParams::new()).expect("defaults are valid")
    }
}

impl SystemModel for SyntheticModel {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn inputs(&self) -> &[InputChannel] {
        &self.inputs
    }

    fn outputs(&self) -> Vec<String> {
        vec!["y1".into(), "y2".into()]
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn step(&self) -> f64 {
        self.step
    }

    fn respond(&self, u: &Signal) -> Signal {
        let rows = u
            .rows()
            .map(|r| {
                let (y1, y2) = self.outputs_at(r[0], r[1]);
                vec![y1, y2]
            })
            .collect();
        Signal::from_rows(self.outputs(), u.step(), rows).expect("well-formed output")
    }
}
