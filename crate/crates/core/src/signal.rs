//! Time-bounded, uniformly sampled multi-channel signals.
//!
//! A [`Signal`] is a function `[0, T] -> R^M` realized on the grid
//! `t_j = j * step`. Between grid points the value is held from the left
//! (piecewise constant), so `value_at(t)` returns the row at the largest grid
//! index not exceeding `t`.

use std::io::{Read, Write};

use thiserror::Error;

/// Relative slack used when snapping a time onto the sample grid.
const GRID_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("signal needs at least one sample row")]
    Empty,
    #[error("sample step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("duplicate channel name `{0}`")]
    DuplicateChannel(String),
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },
    #[error("time {t} is not a multiple of the step {step}")]
    OffGrid { t: f64, step: f64 },
    #[error("restriction bounds [{lo}, {hi}] are invalid for horizon {horizon}")]
    BadBounds { lo: f64, hi: f64, horizon: f64 },
    #[error("signals are incompatible: {0}")]
    Shape(String),
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Uniformly sampled signal. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    channels: Vec<String>,
    step: f64,
    /// Row-major samples, `rows * channels.len()` entries.
    data: Vec<f64>,
    rows: usize,
}

impl Signal {
    /// Builds a signal from sample rows.
    pub fn from_rows(
        channels: Vec<String>,
        step: f64,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self, SignalError> {
        let width = channels.len();
        let mut data = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(SignalError::RaggedRow {
                    row: i,
                    got: row.len(),
                    expected: width,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(channels, step, rows.len(), data)
    }

    /// Builds a signal from one column per channel.
    pub fn from_columns(
        channels: Vec<String>,
        step: f64,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self, SignalError> {
        if columns.len() != channels.len() {
            return Err(SignalError::Shape(format!(
                "{} columns for {} channels",
                columns.len(),
                channels.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        if let Some((i, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != rows) {
            return Err(SignalError::Shape(format!(
                "column {i} has {} samples, expected {rows}",
                c.len()
            )));
        }
        let mut data = Vec::with_capacity(rows * channels.len());
        for j in 0..rows {
            data.extend(columns.iter().map(|c| c[j]));
        }
        Self::from_flat(channels, step, rows, data)
    }

    fn from_flat(
        channels: Vec<String>,
        step: f64,
        rows: usize,
        data: Vec<f64>,
    ) -> Result<Self, SignalError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(SignalError::BadStep(step));
        }
        if rows == 0 {
            return Err(SignalError::Empty);
        }
        for (i, c) in channels.iter().enumerate() {
            if channels[..i].contains(c) {
                return Err(SignalError::DuplicateChannel(c.clone()));
            }
        }
        debug_assert_eq!(data.len(), rows * channels.len());
        Ok(Self {
            channels,
            step,
            data,
            rows,
        })
    }

    /// Constant signal over `[0, horizon]`; the horizon is rounded to the grid.
    pub fn constant(
        channels: Vec<String>,
        step: f64,
        horizon: f64,
        values: &[f64],
    ) -> Result<Self, SignalError> {
        if values.len() != channels.len() {
            return Err(SignalError::Shape(format!(
                "{} values for {} channels",
                values.len(),
                channels.len()
            )));
        }
        let rows = grid_len(horizon, step);
        let data = values
            .iter()
            .copied()
            .cycle()
            .take(rows * values.len())
            .collect();
        Self::from_flat(channels, step, rows, data)
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.rows
    }

    /// Always false: a signal holds at least one row.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        (self.rows - 1) as f64 * self.step
    }

    /// Time of grid index `j`.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.channels.len();
        &self.data[j * w..(j + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |j| self.row(j))
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == name)
    }

    /// Copies out one channel as a column.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, SignalError> {
        let k = self
            .channel_index(name)
            .ok_or_else(|| SignalError::UnknownChannel(name.to_string()))?;
        Ok(self.rows().map(|r| r[k]).collect())
    }

    /// Sample held at time `t` (left-continuous hold).
    pub fn value_at(&self, t: f64) -> Result<&[f64], SignalError> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon + GRID_EPS * self.step.max(1.0)) {
            return Err(SignalError::OutOfDomain { t, horizon });
        }
        let j = ((t / self.step) + GRID_EPS).floor() as usize;
        Ok(self.row(j.min(self.rows - 1)))
    }

    /// Grid index of an on-grid time, or an error when `t` falls between points.
    pub fn grid_index(&self, t: f64) -> Result<usize, SignalError> {
        grid_index(t, self.step).ok_or(SignalError::OffGrid { t, step: self.step })
    }

    /// Concatenation `self . other`: `other`'s first row is dropped because the
    /// left operand owns the boundary instant.
    pub fn concat(&self, other: &Signal) -> Result<Signal, SignalError> {
        if self.channels != other.channels {
            return Err(SignalError::Shape(format!(
                "channels {:?} vs {:?}",
                self.channels, other.channels
            )));
        }
        if self.step != other.step {
            return Err(SignalError::Shape(format!(
                "step {} vs {}",
                self.step, other.step
            )));
        }
        let w = self.channels.len();
        let mut data = Vec::with_capacity(self.data.len() + other.data.len() - w);
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data[w..]);
        Ok(Signal {
            channels: self.channels.clone(),
            step: self.step,
            data,
            rows: self.rows + other.rows - 1,
        })
    }

    /// Restriction to `[lo, hi]`, re-based to start at time zero. Both bounds
    /// must lie on the grid.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Signal, SignalError> {
        let horizon = self.horizon();
        let bad = SignalError::BadBounds { lo, hi, horizon };
        let a = self.grid_index(lo)?;
        let b = self.grid_index(hi)?;
        if lo < 0.0 || a >= b || b >= self.rows {
            return Err(bad);
        }
        Ok(self.slice_rows(a, b))
    }

    /// The `t`-shift `w^t(t') = w(t + t')`, for on-grid `0 <= t < T`.
    pub fn shift(&self, t: f64) -> Result<Signal, SignalError> {
        let horizon = self.horizon();
        if t < 0.0 || t >= horizon {
            return Err(SignalError::OutOfDomain { t, horizon });
        }
        let a = self.grid_index(t)?;
        if a >= self.rows - 1 {
            return Err(SignalError::OutOfDomain { t, horizon });
        }
        Ok(self.slice_rows(a, self.rows - 1))
    }

    /// Rows `a..=b` as a new signal.
    pub(crate) fn slice_rows(&self, a: usize, b: usize) -> Signal {
        let w = self.channels.len();
        Signal {
            channels: self.channels.clone(),
            step: self.step,
            data: self.data[a * w..(b + 1) * w].to_vec(),
            rows: b - a + 1,
        }
    }

    /// Returns a copy with extra channels appended.
    pub fn with_channels(
        &self,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Signal, SignalError> {
        let mut all_names = self.channels.clone();
        let mut all_cols: Vec<Vec<f64>> = (0..self.channels.len())
            .map(|k| self.rows().map(|r| r[k]).collect())
            .collect();
        all_names.extend(names);
        all_cols.extend(columns);
        Signal::from_columns(all_names, self.step, all_cols)
    }

    /// Writes `time,<ch1>,<ch2>,...` CSV, one row per grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SignalError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let csv_err = |e: csv::Error| SignalError::Csv(e.to_string());
        let mut header = vec!["time".to_string()];
        header.extend(self.channels.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (j, row) in self.rows().enumerate() {
            let mut rec = vec![self.time(j).to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| SignalError::Csv(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Reads the format produced by [`Signal::write_csv`]. The step is taken
    /// from the first two time stamps and every later stamp must sit on that grid.
    pub fn read_csv<R: Read>(input: R) -> Result<Signal, SignalError> {
        let csv_err = |e: csv::Error| SignalError::Csv(e.to_string());
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = rdr.headers().map_err(csv_err)?.clone();
        if header.get(0) != Some("time") {
            return Err(SignalError::Csv("first column must be `time`".into()));
        }
        let channels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let parsed = parsed.map_err(|e| SignalError::Csv(format!("bad number: {e}")))?;
            times.push(parsed[0]);
            rows.push(parsed[1..].to_vec());
        }
        let step = match times.as_slice() {
            [] => return Err(SignalError::Empty),
            [_] => 1.0,
            [t0, t1, ..] => t1 - t0,
        };
        for (j, &t) in times.iter().enumerate() {
            if (t - j as f64 * step).abs() > 1e-6 * step.max(1.0) {
                return Err(SignalError::Csv(format!(
                    "row {j}: time {t} breaks the uniform step {step}"
                )));
            }
        }
        Signal::from_rows(channels, step, rows)
    }
}

/// Number of grid points covering `[0, horizon]` at `step`.
pub fn grid_len(horizon: f64, step: f64) -> usize {
    (horizon / step + GRID_EPS).floor() as usize + 1
}

/// Index `j` with `j * step == t` up to rounding, if `t` is on the grid.
pub fn grid_index(t: f64, step: f64) -> Option<usize> {
    if t < 0.0 {
        return None;
    }
    let q = t / step;
    let r = q.round();
    ((q - r).abs() <= GRID_EPS * r.max(1.0)).then_some(r as usize)
}

/// Membership flags over a signal's grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeSet {
    members: Vec<bool>,
}

impl TimeSet {
    pub fn empty(len: usize) -> Self {
        Self {
            members: vec![false; len],
        }
    }

    pub fn full(len: usize) -> Self {
        Self {
            members: vec![true; len],
        }
    }

    pub fn from_flags(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(len);
        for i in indices {
            s.members[i] = true;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.get(j).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, j: usize) {
        self.members[j] = true;
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| b.then_some(j))
    }

    pub fn count(&self) -> usize {
        self.indices().count()
    }
}
