//! Automatic-transmission surrogate.
//!
//! Longitudinal point-mass dynamics integrated with explicit Euler. The gear
//! follows a throttle-dependent shift schedule with hysteresis (at most one
//! shift per step), and engine speed is a function of vehicle speed and gear.
//! Units are nominal (speed in mph, rpm in revolutions per minute).

use super::{InputChannel, ModelError, ModelParams, ParamReader, SystemModel};
use crate::signal::Signal;

/// Upshift threshold from gear `g` (index g-1): `base + slope * throttle`.
const UP_BASE: [f64; 3] = [10.0, 20.0, 42.0];
const UP_SLOPE: [f64; 3] = [0.15, 0.25, 0.30];
/// Downshift threshold from gear `g` (index g-2).
const DOWN_BASE: [f64; 3] = [5.0, 15.0, 30.0];
const DOWN_SLOPE: [f64; 3] = [0.10, 0.15, 0.20];

/// Relative tractive force per gear.
const TORQUE: [f64; 4] = [1.0, 0.75, 0.55, 0.42];
/// Engine revolutions per unit speed per gear.
const RPM_PER_SPEED: [f64; 4] = [140.0, 84.0, 52.0, 26.0];
const IDLE_RPM: f64 = 800.0;

const MAX_DRIVE: f64 = 12.0;
const MAX_BRAKE: f64 = 5.0;
const DRAG: f64 = 1.2e-4;
const ROLLING: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct CarModel {
    inputs: Vec<InputChannel>,
    horizon: f64,
    step: f64,
}

impl CarModel {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self {
            inputs: vec![
                InputChannel::new("throttle", 0.0, 100.0),
                InputChannel::new("brake", 0.0, 325.0),
            ],
            horizon,
            step,
        }
    }

    pub fn from_params(params: &ModelParams) -> Result<Self, ModelError> {
        let mut r = ParamReader::new("car", params);
        let horizon = super::positive("horizon", r.get("horizon", 30.0))?;
        let step = super::positive("step", r.get("step", 0.05))?;
        r.finish()?;
        Ok(Self::new(horizon, step))
    }
}

impl Default for CarModel {
    fn default() -> Self {
        Self::new(30.0, 0.05)
    }
}

fn shift(gear: usize, speed: f64, throttle: f64) -> usize {
    if gear < 4 && speed > UP_BASE[gear - 1] + UP_SLOPE[gear - 1] * throttle {
        gear + 1
    } else if gear > 1 && speed < DOWN_BASE[gear - 2] + DOWN_SLOPE[gear - 2] * throttle {
        gear - 1
    } else {
        gear
    }
}

impl SystemModel for CarModel {
    fn name(&self) -> &str {
        "car"
    }

    fn inputs(&self) -> &[InputChannel] {
        &self.inputs
    }

    fn outputs(&self) -> Vec<String> {
        vec!["speed".into(), "rpm".into(), "gear".into()]
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn step(&self) -> f64 {
        self.step
    }

    fn respond(&self, u: &Signal) -> Signal {
        let dt = u.step();
        let mut speed = 0.0f64;
        let mut gear = 1usize;
        let mut rows = Vec::with_capacity(u.len());
        for row in u.rows() {
            let (throttle, brake) = (row[0], row[1]);
            gear = shift(gear, speed, throttle);
            let rpm = IDLE_RPM + RPM_PER_SPEED[gear - 1] * speed;
            rows.push(vec![speed, rpm, gear as f64]);

            let rolling = if speed > 0.0 { ROLLING } else { 0.0 };
            let accel = MAX_DRIVE * TORQUE[gear - 1] * throttle / 100.0
                - MAX_BRAKE * brake / 325.0
                - DRAG * speed * speed
                - rolling;
            speed = (speed + dt * accel).max(0.0);
        }
        Signal::from_rows(self.outputs(), dt, rows).expect("well-formed output")
    }
}
