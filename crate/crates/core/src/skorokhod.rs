//! Two-sided Skorokhod reflection on `[0, h]`, the h-cut and its event
//! times, one-sided reflections and boundary local times.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::path::PlPath;

/// Relative tolerance (in units of `h`) within which a value is treated as
/// having reached a boundary. Lattice paths rescaled by non-dyadic factors
/// accumulate rounding of this order; without snapping a return to 0 could
/// be missed by 1e-16.
pub const SNAP_TOL: f64 = 1e-12;

/// `Λ_{0,h}(f)` with its compensators: `lambda = f + c0 + ch`, `c0`
/// non-decreasing and pushing only at 0, `ch` non-increasing and pushing
/// only at `h`.
#[derive(Clone, Debug)]
pub struct ReflectionResult {
    pub lambda: PlPath,
    pub c0: PlPath,
    pub ch: PlPath,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Low,
    High,
}

fn check_width(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return domain(format!("barrier width h must be positive and finite, got {h}"));
    }
    Ok(())
}

struct Grid {
    times: Vec<f64>,
    lambda: Vec<f64>,
    c0: Vec<f64>,
    ch: Vec<f64>,
}

impl Grid {
    fn push(&mut self, t: f64, x: f64, c0: f64, ch: f64) {
        if t <= *self.times.last().unwrap() {
            *self.lambda.last_mut().unwrap() = x;
            *self.c0.last_mut().unwrap() = c0;
            *self.ch.last_mut().unwrap() = ch;
        } else {
            self.times.push(t);
            self.lambda.push(x);
            self.c0.push(c0);
            self.ch.push(ch);
        }
    }
}

/// Solves the two-sided Skorokhod problem for `f` on `[0, h]`.
///
/// Each linear piece of `f` is monotone, so along it the reflected path
/// follows `f` until it meets the boundary in the direction of travel and
/// then sticks there while the corresponding compensator absorbs the rest
/// of the increment. Hitting times are solved in closed form.
pub fn reflect_two_sided(f: &PlPath, h: f64) -> Result<ReflectionResult> {
    check_width(h)?;
    let f0 = f.start_value();
    if !(0.0..=h).contains(&f0) {
        return domain(format!("reflection needs f(0) in [0, {h}], got {f0}"));
    }
    let snap = SNAP_TOL * h;
    let cap = f.len() * 2;
    let mut g = Grid {
        times: Vec::with_capacity(cap),
        lambda: Vec::with_capacity(cap),
        c0: Vec::with_capacity(cap),
        ch: Vec::with_capacity(cap),
    };
    g.times.push(0.0);
    g.lambda.push(f0);
    g.c0.push(0.0);
    g.ch.push(0.0);

    let (ts, vs) = (f.times(), f.values());
    let (mut x, mut c0, mut ch) = (f0, 0.0_f64, 0.0_f64);
    for i in 1..f.len() {
        let (ta, tb) = (ts[i - 1], ts[i]);
        let d = vs[i] - vs[i - 1];
        // anchored on f rather than accumulated, so that lambda = f exactly
        // until the first push
        let y = vs[i] + c0 + ch;
        if d > 0.0 && y >= h - snap {
            let room = h - x;
            if room > 0.0 {
                let th = ta + (tb - ta) * (room / d).min(1.0);
                g.push(th, h, c0, ch);
            }
            ch -= (y - h).max(0.0);
            x = h;
        } else if d < 0.0 && y <= snap {
            let room = x;
            if room > 0.0 {
                let th = ta + (tb - ta) * (room / -d).min(1.0);
                g.push(th, 0.0, c0, ch);
            }
            c0 += (-y).max(0.0);
            x = 0.0;
        } else if d != 0.0 {
            x = y.clamp(0.0, h);
        }
        g.push(tb, x, c0, ch);
    }

    let mk = |values: Vec<f64>| PlPath::from_vecs(g.times.clone(), values).map(|p| p.compact());
    Ok(ReflectionResult {
        lambda: mk(g.lambda)?,
        c0: mk(g.c0)?,
        ch: mk(g.ch)?,
        h,
    })
}

impl ReflectionResult {
    /// Checks the three conditions characterizing the solution of the
    /// Skorokhod problem for `f`; returns a description of the first one
    /// that fails.
    pub fn certificate_violation(&self, f: &PlPath, tol: f64) -> Option<String> {
        let mut times: Vec<f64> = [&self.lambda, &self.c0, &self.ch, f]
            .iter()
            .flat_map(|p| p.times().iter().copied())
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        if self.c0.start_value() != 0.0 || self.ch.start_value() != 0.0 {
            return Some("compensators must start at 0".into());
        }
        let val = |p: &PlPath, t: f64| p.evaluate(t).unwrap_or(f64::NAN);
        let mut prev: Option<(f64, f64, f64)> = None;
        for &t in &times {
            let (l, a, b) = (val(&self.lambda, t), val(&self.c0, t), val(&self.ch, t));
            let fv = val(f, t);
            if (l - (fv + a + b)).abs() > tol {
                return Some(format!("lambda != f + c0 + ch at t={t}: {l} vs {}", fv + a + b));
            }
            if l < -tol || l > self.h + tol {
                return Some(format!("lambda({t}) = {l} outside [0, {}]", self.h));
            }
            if let Some((pl, pa, pb)) = prev {
                if a < pa - tol {
                    return Some(format!("c0 decreases before t={t}"));
                }
                if b > pb + tol {
                    return Some(format!("ch increases before t={t}"));
                }
                if a - pa > tol && (pl > tol || l > tol) {
                    return Some(format!("c0 varies off the zero set before t={t}"));
                }
                if pb - b > tol && (pl < self.h - tol || l < self.h - tol) {
                    return Some(format!("ch varies off the level-h set before t={t}"));
                }
            }
            prev = Some((l, a, b));
        }
        None
    }
}

/// `Γ^0(f)(t) = f(t) - (inf_{[0,t]} f ∧ 0)`, from the running minimum.
pub fn reflect_one_sided_low(f: &PlPath) -> PlPath {
    let (ts, vs) = (f.times(), f.values());
    let mut m = vs[0].min(0.0);
    let mut out = crate::path::PathBuilder::with_capacity(0.0, vs[0] - m, f.len());
    for i in 1..f.len() {
        let (ta, tb, va, vb) = (ts[i - 1], ts[i], vs[i - 1], vs[i]);
        if vb < m {
            if va > m {
                out.push(ta + (tb - ta) * (m - va) / (vb - va), 0.0);
            }
            m = vb;
            out.push(tb, 0.0);
        } else {
            out.push(tb, vb - m);
        }
    }
    out.finish().canonical()
}

/// `Γ^h(f)(t) = f(t) - (sup_{[0,t]} f - h) ∨ 0`, from the running maximum.
pub fn reflect_one_sided_high(f: &PlPath, h: f64) -> Result<PlPath> {
    check_width(h)?;
    let (ts, vs) = (f.times(), f.values());
    if vs[0] > h {
        return domain(format!("one-sided reflection at {h} needs f(0) <= {h}, got {}", vs[0]));
    }
    let mut top = h;
    let mut out = crate::path::PathBuilder::with_capacity(0.0, vs[0], f.len());
    for i in 1..f.len() {
        let (ta, tb, va, vb) = (ts[i - 1], ts[i], vs[i - 1], vs[i]);
        if vb > top {
            if va < top {
                out.push(ta + (tb - ta) * (top - va) / (vb - va), h);
            }
            top = vb;
            out.push(tb, h);
        } else {
            out.push(tb, vb - (top - h));
        }
    }
    Ok(out.finish().canonical())
}

/// `c^0(f)` for [`Boundary::Low`], `-c^h(f)` for [`Boundary::High`]: the
/// local time of the reflected path at that boundary.
pub fn local_time_compensator(f: &PlPath, h: f64, level: Boundary) -> Result<PlPath> {
    let r = reflect_two_sided(f, h)?;
    Ok(match level {
        Boundary::Low => r.c0,
        Boundary::High => r.ch.negate(),
    })
}

/// `(1 / 2ε) · |{s ≤ t : Λ_{0,h}(f)(s) ∈ band}|` with band `[h-ε, h]` or
/// `[0, ε]`, integrated exactly over the linear pieces.
pub fn local_time_window_estimate(f: &PlPath, h: f64, level: Boundary, t: f64, eps: f64) -> Result<f64> {
    check_width(h)?;
    if !(eps > 0.0 && eps < h / 2.0) {
        return domain(format!("window half-width must lie in (0, h/2), got {eps}"));
    }
    if !(t >= 0.0) {
        return domain(format!("time horizon must be non-negative, got {t}"));
    }
    let lambda = reflect_two_sided(f, h)?.lambda;
    let (lo, hi) = match level {
        Boundary::Low => (0.0, eps),
        Boundary::High => (h - eps, h),
    };
    Ok(occupation_time(&lambda, t, lo, hi) / (2.0 * eps))
}

/// Lebesgue measure of `{s ∈ [0, t] : p(s) ∈ [lo, hi]}`.
pub fn occupation_time(p: &PlPath, t: f64, lo: f64, hi: f64) -> f64 {
    let inside = |v: f64| (lo..=hi).contains(&v);
    let (ts, vs) = (p.times(), p.values());
    let mut total = 0.0;
    for i in 1..p.len() {
        let (ta, va) = (ts[i - 1], vs[i - 1]);
        if ta >= t {
            break;
        }
        let (tb, vb) = if ts[i] > t {
            (t, p.evaluate(t).unwrap())
        } else {
            (ts[i], vs[i])
        };
        if va == vb {
            if inside(va) {
                total += tb - ta;
            }
        } else {
            let (a, b) = (va.min(vb), va.max(vb));
            let overlap = (b.min(hi) - a.max(lo)).max(0.0);
            total += (tb - ta) * overlap / (b - a);
        }
    }
    if t > p.end_time() && inside(p.end_value()) {
        total += t - p.end_time();
    }
    total
}

/// The h-cut `f_h = f - Λ_{0,h}(f)` together with the event times and
/// graft data read off the reflected path.
///
/// `t`, `hit` and `s` hold the returning times `t_n`, the hitting times
/// `T_n` and the exit times `s_n` of every completed cycle `n = 1..=N`.
#[derive(Clone, Debug)]
pub struct CutDecomposition {
    pub cut: PlPath,
    pub reflection: ReflectionResult,
    pub t: Vec<f64>,
    pub hit: Vec<f64>,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl CutDecomposition {
    /// `N_h(f)`, the number of returns of the reflected path to 0.
    pub fn n(&self) -> usize {
        self.t.len()
    }

    /// `-(c^h(t_i) - c^h(t_{i-1}))` for each cycle: the local time at `h`
    /// accumulated over `[t_{i-1}, t_i]`.
    pub fn high_local_time_increments(&self) -> Vec<f64> {
        let ch = &self.reflection.ch;
        let mut prev = 0.0;
        self.t
            .iter()
            .map(|&ti| {
                let v = ch.evaluate(ti).unwrap();
                let inc = prev - v;
                prev = v;
                inc
            })
            .collect()
    }

    /// `c^0(t_i) - c^0(t_{i-1})` for each cycle.
    pub fn low_local_time_increments(&self) -> Vec<f64> {
        let c0 = &self.reflection.c0;
        let mut prev = 0.0;
        self.t
            .iter()
            .map(|&ti| {
                let v = c0.evaluate(ti).unwrap();
                let inc = v - prev;
                prev = v;
                inc
            })
            .collect()
    }
}

/// Computes the h-cut of `f` (which must start at 0).
pub fn h_cut(f: &PlPath, h: f64) -> Result<CutDecomposition> {
    check_width(h)?;
    if f.start_value() != 0.0 {
        return domain(format!("h-cut needs f(0) = 0, got {}", f.start_value()));
    }
    let reflection = reflect_two_sided(f, h)?;
    // not canonicalized: merging near-collinear points would blur the kinks at T_n
    let cut = reflection.c0.add(&reflection.ch).negate();

    let mut t = Vec::new();
    let mut hit = Vec::new();
    let mut s = Vec::new();
    let mut last_zero = 0.0;
    let mut pending: Option<(f64, f64)> = None;
    for (u, v) in reflection.lambda.points() {
        match pending {
            None => {
                if v == 0.0 {
                    last_zero = u;
                } else if v == h {
                    pending = Some((u, last_zero));
                }
            }
            Some((tn, sn)) => {
                if v == 0.0 {
                    hit.push(tn);
                    s.push(sn);
                    t.push(u);
                    last_zero = u;
                    pending = None;
                }
            }
        }
    }

    let mut x = Vec::with_capacity(t.len());
    let mut y = Vec::with_capacity(t.len());
    let mut prev_t = 0.0;
    for (&tn, &sn) in t.iter().zip(&s) {
        let at_s = cut.evaluate(sn)?;
        // s_n is a minimum of the cut on [t_{n-1}, t_n]; clamp rounding noise
        x.push((cut.evaluate(tn)? - at_s).max(0.0));
        y.push((cut.evaluate(prev_t)? - at_s).max(0.0));
        prev_t = tn;
    }

    Ok(CutDecomposition {
        cut,
        reflection,
        t,
        hit,
        s,
        x,
        y,
    })
}

/// The `τ_n`, `θ_n`, `σ_n` sequences computed from running extrema of `f`
/// alone, without reflecting it.
///
/// `θ_{n+1}` is the first time after `τ_n` at which `f` sits `h` above its
/// running minimum since `τ_n`; `τ_{n+1}` is the first time after that at
/// which `f` sits `h` below its running maximum since `θ_{n+1}`; `σ_{n+1}`
/// is the last time in `[τ_n, τ_{n+1})` at which `f` equals its running
/// minimum since `τ_n`. Only completed cycles are reported.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DirectEventTimes {
    pub tau: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn event_times_direct(f: &PlPath, h: f64) -> Result<DirectEventTimes> {
    check_width(h)?;
    if f.start_value() != 0.0 {
        return domain(format!("event times need f(0) = 0, got {}", f.start_value()));
    }
    let snap = SNAP_TOL * h;
    let (ts, vs) = (f.times(), f.values());
    let mut out = DirectEventTimes::default();

    enum Phase {
        // running minimum since the last τ, and the last time it was attained
        SeekTheta { low: f64, sigma: f64 },
        // running maximum since θ
        SeekTau { high: f64, theta: f64, sigma: f64 },
    }
    let mut phase = Phase::SeekTheta { low: 0.0, sigma: 0.0 };

    for i in 1..f.len() {
        let (mut ta, mut va) = (ts[i - 1], vs[i - 1]);
        let (tb, vb) = (ts[i], vs[i]);
        loop {
            match phase {
                Phase::SeekTheta { low, sigma } => {
                    if vb > va {
                        let target = low + h;
                        if vb >= target - snap {
                            let tc = ta + (tb - ta) * ((target - va) / (vb - va)).clamp(0.0, 1.0);
                            phase = Phase::SeekTau {
                                high: target.max(vb.min(target)),
                                theta: tc,
                                sigma,
                            };
                            ta = tc;
                            va = target;
                            continue;
                        }
                    } else if vb <= low + snap {
                        phase = Phase::SeekTheta {
                            low: low.min(vb),
                            sigma: tb,
                        };
                    }
                }
                Phase::SeekTau { high, theta, sigma } => {
                    if vb > va {
                        phase = Phase::SeekTau {
                            high: high.max(vb),
                            theta,
                            sigma,
                        };
                    } else if vb < va {
                        let target = high - h;
                        if vb <= target + snap {
                            let tc = ta + (tb - ta) * ((va - target) / (va - vb)).clamp(0.0, 1.0);
                            out.tau.push(tc);
                            out.theta.push(theta);
                            out.sigma.push(sigma);
                            phase = Phase::SeekTheta {
                                low: target,
                                sigma: tc,
                            };
                            ta = tc;
                            va = target;
                            continue;
                        }
                    }
                }
            }
            break;
        }
    }
    Ok(out)
}
