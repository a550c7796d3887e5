//! Model wrappers: output scaling and derived difference channels.

use std::sync::Arc;

use super::{InputChannel, ModelError, SystemModel};
use crate::signal::Signal;
use crate::stl::{Atom, Expr, Formula, Relation};

/// Multiplies one output channel by `10^k`.
pub struct ScaledModel {
    inner: Arc<dyn SystemModel>,
    channel: String,
    index: usize,
    k: i32,
    factor: f64,
}

impl ScaledModel {
    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn channel(&self) -> &str {
        &self.channel
    }
}

pub fn scale_output(
    m: Arc<dyn SystemModel>,
    channel: &str,
    k: i32,
) -> Result<Arc<dyn SystemModel>, ModelError> {
    let index = m
        .outputs()
        .iter()
        .position(|c| c == channel)
        .ok_or_else(|| ModelError::UnknownOutput(channel.to_string()))?;
    Ok(Arc::new(ScaledModel {
        inner: m,
        channel: channel.to_string(),
        index,
        k,
        factor: 10f64.powi(k),
    }))
}

impl SystemModel for ScaledModel {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn inputs(&self) -> &[InputChannel] {
        self.inner.inputs()
    }

    fn outputs(&self) -> Vec<String> {
        self.inner.outputs()
    }

    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn step(&self) -> f64 {
        self.inner.step()
    }

    fn respond(&self, u: &Signal) -> Signal {
        let y = self.inner.respond(u);
        let mut rows: Vec<Vec<f64>> = y.rows().map(<[f64]>::to_vec).collect();
        for r in &mut rows {
            r[self.index] *= self.factor;
        }
        Signal::from_rows(y.channels().to_vec(), y.step(), rows).expect("same shape")
    }
}

/// Rewrites `phi` so that it judges a model whose `channel` was multiplied by
/// `10^k` exactly as `phi` judged the original model.
///
/// In every atom that mentions `channel` (or a delta channel derived from
/// it), the bound and all additive constants are multiplied by `10^k`, as are
/// references to other channels; multiplicative coefficients stay put. The result is the original atom
/// multiplied through by `10^k`, so its margin scales by that positive factor
/// and keeps its sign. Equality atoms over the channel are rejected because
/// their fixed acceptance band does not scale.
pub fn scale_formula(phi: &Formula, channel: &str, k: i32) -> Result<Formula, ModelError> {
    let factor = 10f64.powi(k);
    phi.try_map_atoms(&mut |a: &Atom| {
        if !a
            .expr
            .channels()
            .into_iter()
            .any(|c| scales_with(c, channel))
        {
            return Ok(a.clone());
        }
        if a.rel == Relation::Eq {
            return Err(ModelError::ScaledEquality(channel.to_string()));
        }
        Ok(Atom::new(
            scale_expr(&a.expr, channel, factor)?,
            a.rel,
            a.bound * factor,
        ))
    })
}

/// True for `channel` itself and for delta channels derived from it, which
/// are differences of scaled values and so scale along.
fn scales_with(name: &str, channel: &str) -> bool {
    name == channel || parse_delta_channel(name).is_some_and(|(_, src)| src == channel)
}

fn scale_expr(e: &Expr, channel: &str, factor: f64) -> Result<Expr, ModelError> {
    let rec = |x: &Expr| scale_expr(x, channel, factor).map(Box::new);
    Ok(match e {
        Expr::Channel(c) if scales_with(c, channel) => e.clone(),
        Expr::Channel(_) => Expr::Mul(Box::new(Expr::Const(factor)), Box::new(e.clone())),
        Expr::Const(v) => Expr::Const(v * factor),
        Expr::Neg(a) => Expr::Neg(rec(a)?),
        Expr::Abs(a) => Expr::Abs(rec(a)?),
        Expr::Add(a, b) => Expr::Add(rec(a)?, rec(b)?),
        Expr::Sub(a, b) => Expr::Sub(rec(a)?, rec(b)?),
        Expr::Mul(a, b) => match (a.channels().is_empty(), b.channels().is_empty()) {
            (true, true) => Expr::Const(e.eval_row(&[], &|_| 0) * factor),
            (true, false) => Expr::Mul(a.clone(), rec(b)?),
            (false, true) => Expr::Mul(rec(a)?, b.clone()),
            (false, false) => return Err(ModelError::NonlinearScaling(channel.to_string())),
        },
    })
}

/// Name of the derived channel holding `x(t + tau) - x(t)`.
pub fn delta_channel_name(channel: &str, tau: f64) -> String {
    format!("delta_{}_{channel}", tau.to_string().replace('.', "p"))
}

/// Inverse of [`delta_channel_name`].
pub fn parse_delta_channel(name: &str) -> Option<(f64, String)> {
    let rest = name.strip_prefix("delta_")?;
    let (tau, channel) = rest.split_once('_')?;
    let tau: f64 = tau.replace('p', ".").parse().ok()?;
    (tau > 0.0 && !channel.is_empty()).then(|| (tau, channel.to_string()))
}

/// Adds a forward-difference output channel `delta_<tau>_<channel>`.
///
/// The derived channel looks ahead by `tau`, so the wrapped model is not
/// causal; it is a monitoring aid evaluated after the full trace exists.
/// Beyond `T - tau` the value is 0, which is why specs over it use
/// `alw_[0, T - tau]`.
pub struct DeltaModel {
    inner: Arc<dyn SystemModel>,
    source: usize,
    lag: usize,
    name: String,
}

pub fn with_derived_delta(
    m: Arc<dyn SystemModel>,
    channel: &str,
    tau: f64,
) -> Result<Arc<dyn SystemModel>, ModelError> {
    let source = m
        .outputs()
        .iter()
        .position(|c| c == channel)
        .ok_or_else(|| ModelError::UnknownOutput(channel.to_string()))?;
    let bad = || ModelError::BadDelta {
        tau,
        horizon: m.horizon(),
    };
    let lag = crate::signal::grid_index(tau, m.step()).ok_or_else(bad)?;
    if lag == 0 || tau > m.horizon() + 1e-9 * m.step() {
        return Err(bad());
    }
    Ok(Arc::new(DeltaModel {
        name: delta_channel_name(channel, tau),
        inner: m,
        source,
        lag,
    }))
}

impl SystemModel for DeltaModel {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn inputs(&self) -> &[InputChannel] {
        self.inner.inputs()
    }

    fn outputs(&self) -> Vec<String> {
        let mut out = self.inner.outputs();
        out.push(self.name.clone());
        out
    }

    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn step(&self) -> f64 {
        self.inner.step()
    }

    fn respond(&self, u: &Signal) -> Signal {
        let y = self.inner.respond(u);
        let x: Vec<f64> = y.rows().map(|r| r[self.source]).collect();
        let d = (0..x.len())
            .map(|j| x.get(j + self.lag).map_or(0.0, |ahead| ahead - x[j]))
            .collect();
        y.with_channels(vec![self.name.clone()], vec![d])
            .expect("fresh channel name")
    }
}

/// Wraps `m` with every derived delta channel that `phi` references but `m`
/// does not already provide.
pub fn prepare_for_formula(
    mut m: Arc<dyn SystemModel>,
    phi: &Formula,
) -> Result<Arc<dyn SystemModel>, ModelError> {
    for name in phi.channels() {
        if m.outputs().contains(&name) {
            continue;
        }
        match parse_delta_channel(&name) {
            Some((tau, channel)) => m = with_derived_delta(m, &channel, tau)?,
            None => return Err(ModelError::UnknownOutput(name)),
        }
    }
    Ok(m)
}
