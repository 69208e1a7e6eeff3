//! Continuous piecewise-linear paths on `[0, ∞)`.
//!
//! A path is a finite list of breakpoints `(t_i, v_i)` with `t_0 = 0` and
//! strictly increasing times. It interpolates linearly between breakpoints
//! and is constant after the last one, so every path is total on `[0, ∞)`.
//! All the operations here are exact up to floating-point rounding: level
//! crossings are solved in closed form and inserted as breakpoints.

use std::io::{Read, Write};

use crate::error::{domain, Error, Result};

/// Tolerance for comparing paths produced by different routes.
pub const PATH_TOL: f64 = 1e-9;

/// Interior breakpoints closer than this (relative) to the chord through
/// their neighbours are dropped by [`PlPath::canonical`].
const COLLINEAR_EPS: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct PlPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PlPath {
    /// Builds a path from breakpoints, validating them. The result is not
    /// canonicalized.
    pub fn new<I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let (times, values): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        Self::from_vecs(times, values)
    }

    pub fn from_vecs(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return domain("times and values differ in length");
        }
        if times.is_empty() {
            return domain("a path needs at least one breakpoint");
        }
        if times[0] != 0.0 {
            return domain(format!("first breakpoint time must be 0, got {}", times[0]));
        }
        for (i, (&t, &v)) in times.iter().zip(&values).enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return domain(format!("breakpoint {i} is not finite"));
            }
            if i > 0 && t <= times[i - 1] {
                return domain(format!(
                    "breakpoint times must be strictly increasing (index {i}: {} after {})",
                    t,
                    times[i - 1]
                ));
            }
        }
        Ok(Self { times, values })
    }

    /// Constant path.
    pub fn constant(value: f64) -> Self {
        Self {
            times: vec![0.0],
            values: vec![value],
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn start_value(&self) -> f64 {
        self.values[0]
    }

    /// Time of the last breakpoint; the path is constant afterwards.
    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn end_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return domain(format!("cannot evaluate at negative time {t}"));
        }
        Ok(self.value_at(t))
    }

    /// Evaluation without the sign check; negative times clamp to `t = 0`.
    pub(crate) fn value_at(&self, t: f64) -> f64 {
        // index of the first breakpoint strictly after t
        let j = self.times.partition_point(|&s| s <= t);
        if j == 0 {
            return self.values[0];
        }
        if j == self.times.len() {
            return self.end_value();
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        if t == t0 {
            return v0;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// The points needed to describe the path on `[a, b]`: `a`, every
    /// breakpoint strictly inside, and `b`.
    pub(crate) fn window(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut out = vec![(a, self.value_at(a))];
        let lo = self.times.partition_point(|&s| s <= a);
        let hi = self.times.partition_point(|&s| s < b);
        for i in lo..hi {
            out.push((self.times[i], self.values[i]));
        }
        if b > a {
            out.push((b, self.value_at(b)));
        }
        out
    }

    fn check_interval(a: f64, b: f64) -> Result<()> {
        if !(a >= 0.0) || !b.is_finite() {
            return domain(format!("invalid interval [{a}, {b}]"));
        }
        if a > b {
            return domain(format!("interval start {a} exceeds end {b}"));
        }
        Ok(())
    }

    /// Minimum on `[a, b]` together with the earliest time attaining it.
    pub fn inf_on(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        Self::check_interval(a, b)?;
        let mut best = (f64::INFINITY, a);
        for (t, v) in self.window(a, b) {
            if v < best.0 {
                best = (v, t);
            }
        }
        Ok(best)
    }

    /// Maximum on `[a, b]` together with the earliest time attaining it.
    pub fn sup_on(&self, a: f64, b: f64) -> Result<(f64, f64)> {
        Self::check_interval(a, b)?;
        let mut best = (f64::NEG_INFINITY, a);
        for (t, v) in self.window(a, b) {
            if v > best.0 {
                best = (v, t);
            }
        }
        Ok(best)
    }

    /// `sup - inf` on `[a, b]`.
    pub fn oscillation(&self, a: f64, b: f64) -> Result<f64> {
        Self::check_interval(a, b)?;
        let w = self.window(a, b);
        let (lo, hi) = w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| {
                (lo.min(v), hi.max(v))
            });
        Ok(hi - lo)
    }

    pub fn total_variation(&self, a: f64, b: f64) -> Result<f64> {
        Self::check_interval(a, b)?;
        let w = self.window(a, b);
        Ok(w.windows(2).map(|p| (p[1].1 - p[0].1).abs()).sum())
    }

    /// `R^T(f)(t) = 1_{t >= T} (f(t) - f(T))`.
    pub fn restart(&self, at: f64) -> Result<PlPath> {
        if !(at >= 0.0) || !at.is_finite() {
            return domain(format!("restart time must be finite and non-negative, got {at}"));
        }
        let base = self.value_at(at);
        let mut b = PathBuilder::new(0.0, 0.0);
        if at > 0.0 {
            b.push(at, 0.0);
        }
        let start = self.times.partition_point(|&s| s <= at);
        for i in start..self.len() {
            b.push(self.times[i], self.values[i] - base);
        }
        Ok(b.finish().canonical())
    }

    /// The path stopped at `at`, i.e. `f(· ∧ at)`.
    pub fn stopped_at(&self, at: f64) -> PlPath {
        let mut b = PathBuilder::new(0.0, self.values[0]);
        for (t, v) in self.points().skip(1) {
            if t >= at {
                break;
            }
            b.push(t, v);
        }
        if at > 0.0 {
            b.push(at, self.value_at(at));
        }
        b.finish()
    }

    /// Drops interior breakpoints inside exactly flat runs and exact
    /// duplicates. Unlike [`PlPath::canonical`] no tolerance is involved, so
    /// values at the surviving breakpoints are untouched.
    pub(crate) fn compact(&self) -> PlPath {
        let n = self.len();
        let mut b = PathBuilder::with_capacity(self.times[0], self.values[0], n);
        for i in 1..n {
            let (t, v) = (self.times[i], self.values[i]);
            let flat_inside = i + 1 < n && v == self.values[i - 1] && v == self.values[i + 1];
            if !flat_inside {
                b.push(t, v);
            }
        }
        b.finish()
    }

    /// Drops interior breakpoints lying on the chord of their neighbours,
    /// repeating until nothing changes. First and last breakpoints are kept.
    pub fn canonical(&self) -> PlPath {
        let mut cur = self.clone();
        loop {
            let next = cur.canonical_pass();
            if next.len() == cur.len() {
                return next;
            }
            cur = next;
        }
    }

    fn canonical_pass(&self) -> PlPath {
        let n = self.len();
        if n <= 2 {
            return self.clone();
        }
        let mut times = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        times.push(self.times[0]);
        values.push(self.values[0]);
        for i in 1..n - 1 {
            let (tp, vp) = (*times.last().unwrap(), *values.last().unwrap());
            let (t, v) = (self.times[i], self.values[i]);
            let (tn, vn) = (self.times[i + 1], self.values[i + 1]);
            let chord = vp + (vn - vp) * (t - tp) / (tn - tp);
            let scale = 1.0 + v.abs().max(vp.abs()).max(vn.abs());
            if (chord - v).abs() > COLLINEAR_EPS * scale {
                times.push(t);
                values.push(v);
            }
        }
        times.push(self.times[n - 1]);
        values.push(self.values[n - 1]);
        PlPath { times, values }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical().len() == self.len()
    }

    /// Sorted union of both breakpoint grids.
    pub fn merged_times(&self, other: &PlPath) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let next = match (self.times.get(i), other.times.get(j)) {
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(&a), Some(&b)) if b < a => {
                    j += 1;
                    b
                }
                (Some(&a), Some(_)) => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        out
    }

    /// Largest pointwise difference; exact since both paths are linear
    /// between merged breakpoints.
    pub fn max_abs_diff(&self, other: &PlPath) -> f64 {
        self.merged_times(other)
            .into_iter()
            .map(|t| (self.value_at(t) - other.value_at(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Same canonical breakpoint count and pointwise agreement within `tol`.
    pub fn approx_eq(&self, other: &PlPath, tol: f64) -> bool {
        self.canonical().len() == other.canonical().len() && self.max_abs_diff(other) <= tol
    }

    fn combine(&self, other: &PlPath, op: impl Fn(f64, f64) -> f64) -> PlPath {
        let times = self.merged_times(other);
        let values = times
            .iter()
            .map(|&t| op(self.value_at(t), other.value_at(t)))
            .collect();
        PlPath { times, values }.canonical()
    }

    pub fn add(&self, other: &PlPath) -> PlPath {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PlPath) -> PlPath {
        self.combine(other, |a, b| a - b)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> PlPath {
        PlPath {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn negate(&self) -> PlPath {
        self.map_values(|v| -v)
    }

    /// Pointwise standard reflection `λ_{0,h}(p(t))`: the zigzag of period
    /// `2h` composed with the path. Every crossing of a level `k·h` becomes
    /// a breakpoint, so the result is exactly piecewise linear.
    pub fn sawtooth_reflect(&self, h: f64) -> Result<PlPath> {
        if !(h > 0.0) || !h.is_finite() {
            return domain(format!("reflection width must be positive, got {h}"));
        }
        let mut b = PathBuilder::new(0.0, sawtooth(self.values[0], h));
        for i in 1..self.len() {
            let (t0, v0) = (self.times[i - 1], self.values[i - 1]);
            let (t1, v1) = (self.times[i], self.values[i]);
            if v1 != v0 {
                let (lo, hi) = (v0.min(v1), v0.max(v1));
                let k_lo = (lo / h).floor() as i64 + 1;
                let k_hi = (hi / h).ceil() as i64 - 1;
                let mut levels: Vec<i64> = (k_lo..=k_hi).collect();
                if v1 < v0 {
                    levels.reverse();
                }
                for k in levels {
                    let level = k as f64 * h;
                    if level <= lo || level >= hi {
                        continue;
                    }
                    let t = t0 + (t1 - t0) * (level - v0) / (v1 - v0);
                    let y = if k.rem_euclid(2) == 0 { 0.0 } else { h };
                    b.push(t, y);
                }
            }
            b.push(t1, sawtooth(v1, h));
        }
        Ok(b.finish().canonical())
    }

    /// Reads the `t,value` CSV format. Rows must be sorted by strictly
    /// increasing time, starting at `t = 0`.
    pub fn read_csv<R: Read>(reader: R) -> Result<PlPath> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header `t,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(e, 0))?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.len() != 2 {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 2 fields, found {}", rec.len()),
                });
            }
            let parse = |field: &str, name: &str| -> Result<f64> {
                let x: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("field `{name}`: `{field}` is not a number"),
                })?;
                if !x.is_finite() {
                    return Err(Error::Parse {
                        line,
                        msg: format!("field `{name}` is not finite"),
                    });
                }
                Ok(x)
            };
            let t = parse(&rec[0], "t")?;
            let v = parse(&rec[1], "value")?;
            if let Some(&prev) = times.last() {
                if t == prev {
                    return Err(Error::Parse {
                        line,
                        msg: format!("duplicate time {t}"),
                    });
                }
                if t < prev {
                    return Err(Error::Parse {
                        line,
                        msg: format!("time {t} is not after previous time {prev}"),
                    });
                }
            } else if t != 0.0 {
                return Err(Error::Parse {
                    line,
                    msg: format!("first time must be 0, found {t}"),
                });
            }
            times.push(t);
            values.push(v);
        }
        if times.is_empty() {
            return Err(Error::Parse {
                line: 2,
                msg: "no data rows after header".into(),
            });
        }
        PlPath::from_vecs(times, values)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.points() {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// `λ_{0,h}(x)`: the zigzag through `(2nh, 0)` and `((2n+1)h, h)`.
pub fn sawtooth(x: f64, h: f64) -> f64 {
    let y = x.rem_euclid(2.0 * h);
    if y <= h {
        y
    } else {
        2.0 * h - y
    }
}

/// Accumulates breakpoints, folding points whose time does not advance
/// (rounding in crossing-time solves) into the previous one.
#[derive(Debug)]
pub(crate) struct PathBuilder {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PathBuilder {
    pub(crate) fn new(t0: f64, v0: f64) -> Self {
        Self {
            times: vec![t0],
            values: vec![v0],
        }
    }

    pub(crate) fn with_capacity(t0: f64, v0: f64, cap: usize) -> Self {
        let mut times = Vec::with_capacity(cap);
        let mut values = Vec::with_capacity(cap);
        times.push(t0);
        values.push(v0);
        Self { times, values }
    }

    pub(crate) fn push(&mut self, t: f64, v: f64) {
        let last = *self.times.last().unwrap();
        if t <= last {
            *self.values.last_mut().unwrap() = v;
        } else {
            self.times.push(t);
            self.values.push(v);
        }
    }

    pub(crate) fn finish(self) -> PlPath {
        PlPath {
            times: self.times,
            values: self.values,
        }
    }
}

/// Values below zero by at most this much are clamped when a path is
/// accepted as an excursion.
pub const EXCURSION_TOL: f64 = 1e-9;

/// A non-negative path starting at 0 that returns to 0 and stays there:
/// an element of `C_0^+` with finitely many breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Excursion {
    path: PlPath,
    support_end: f64,
}

impl Excursion {
    /// Validates an excursion. Values within [`EXCURSION_TOL`] of zero on the
    /// negative side are clamped to zero.
    pub fn new(path: PlPath) -> Result<Self> {
        if path.start_value().abs() > EXCURSION_TOL {
            return domain(format!("excursion must start at 0, starts at {}", path.start_value()));
        }
        if path.end_value().abs() > EXCURSION_TOL {
            return domain(format!("excursion must end at 0, ends at {}", path.end_value()));
        }
        if let Some((i, v)) = path
            .values
            .iter()
            .enumerate()
            .find(|(_, &v)| v < -EXCURSION_TOL)
        {
            return domain(format!("excursion takes negative value {v} at breakpoint {i}"));
        }
        let mut path = path;
        let n = path.len();
        for (i, v) in path.values.iter_mut().enumerate() {
            if *v < 0.0 || ((i == 0 || i == n - 1) && v.abs() <= EXCURSION_TOL) {
                *v = 0.0;
            }
        }
        let support_end = match path.values.iter().rposition(|&v| v > 0.0) {
            Some(i) => path.times[i + 1],
            None => 0.0,
        };
        Ok(Self { path, support_end })
    }

    pub fn path(&self) -> &PlPath {
        &self.path
    }

    pub fn into_path(self) -> PlPath {
        self.path
    }

    /// `K(e) = sup{t > 0 : e(t) > 0}`, or 0 for the null excursion.
    pub fn support_end(&self) -> f64 {
        self.support_end
    }

    pub fn height(&self) -> f64 {
        self.path.values.iter().copied().fold(0.0, f64::max)
    }

    /// `e(t) + w((t - K(e)) ∨ 0)`: the path `w` glued at the end of the
    /// excursion.
    pub fn paste(&self, w: &PlPath) -> Result<PlPath> {
        if w.start_value() != 0.0 {
            return domain(format!("pasted path must start at 0, starts at {}", w.start_value()));
        }
        let k = self.support_end;
        let mut b = PathBuilder::with_capacity(0.0, 0.0, self.path.len() + w.len());
        for (t, v) in self.path.points().skip(1) {
            if t > k {
                break;
            }
            b.push(t, v);
        }
        if k > 0.0 {
            b.push(k, 0.0);
        }
        for (s, v) in w.points().skip(1) {
            b.push(k + s, v);
        }
        Ok(b.finish())
    }
}

impl AsRef<PlPath> for Excursion {
    fn as_ref(&self) -> &PlPath {
        &self.path
    }
}
