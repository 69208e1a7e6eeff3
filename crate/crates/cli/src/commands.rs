use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use skotrim_core::grafts::{verify_main1, Main1Report, Main1Status};
use skotrim_core::stochastic::{
    pn_statistics, sample_binary_tree, sample_excursion_conditioned, sample_excursion_measure, sample_walk,
    stream_rng, verify_teo1, ExcursionLaw, PnConfig, RandomWalkConfig, Teo1Config, WalkMode,
};
use skotrim_core::{h_cut, reflect_two_sided, Excursion, PlaneTree};

use crate::output::{read_path, with_suffix, write_atomic, write_json, write_path, write_plot_data};
use crate::{CutArgs, Law, Outcome, Simulate, TrimArgs, Verify};

/// Length cap for draws under the excursion measure.
const MAX_EXCURSION_LEN: usize = 10_000_000;

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0) || !v.is_finite() {
        bail!("--{name} must be a positive number, got {v}");
    }
    Ok(v)
}

fn at_least_one(name: &str, v: usize) -> Result<usize> {
    if v == 0 {
        bail!("--{name} must be at least 1");
    }
    Ok(v)
}

fn law(l: Law) -> ExcursionLaw {
    match l {
        Law::FixedLength => ExcursionLaw::FixedLength,
        Law::ExcursionMeasure => ExcursionLaw::ExcursionMeasure,
    }
}

pub fn reflect(a: &CutArgs) -> Result<Outcome> {
    let h = positive("h", a.h)?;
    let f = read_path(&a.input)?;
    let r = reflect_two_sided(&f, h)?;
    let ext = a.format.extension();
    write_path(&with_suffix(&a.out_prefix, "lambda", ext), &r.lambda, a.format)?;
    write_path(&with_suffix(&a.out_prefix, "c0", ext), &r.c0, a.format)?;
    write_path(&with_suffix(&a.out_prefix, "ch", ext), &r.ch, a.format)?;
    if let Some(plot) = &a.emit_plot_data {
        write_plot_data(plot, &[("f", &f), ("lambda", &r.lambda), ("c0", &r.c0), ("ch", &r.ch)])?;
    }
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct Events<'a> {
    t: &'a [f64],
    #[serde(rename = "T")]
    hit: &'a [f64],
    s: &'a [f64],
    #[serde(rename = "X")]
    x: &'a [f64],
    #[serde(rename = "Y")]
    y: &'a [f64],
    #[serde(rename = "N")]
    n: usize,
}

pub fn cut(a: &CutArgs) -> Result<Outcome> {
    let h = positive("h", a.h)?;
    let f = read_path(&a.input)?;
    let d = h_cut(&f, h)?;
    let cut = d.cut.canonical();
    write_path(&with_suffix(&a.out_prefix, "cut", a.format.extension()), &cut, a.format)?;
    let events = Events {
        t: &d.t,
        hit: &d.hit,
        s: &d.s,
        x: &d.x,
        y: &d.y,
        n: d.n(),
    };
    write_json(&with_suffix(&a.out_prefix, "events", "json"), &events)?;
    if let Some(plot) = &a.emit_plot_data {
        write_plot_data(plot, &[("f", &f), ("lambda", &d.reflection.lambda), ("cut", &cut)])?;
    }
    Ok(Outcome::Done)
}

fn read_tree(path: &Path) -> Result<PlaneTree> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let tree = PlaneTree::from_json_str(&text).with_context(|| format!("in {}", path.display()))?;
            Ok(tree.canonical())
        }
        Some("csv") => {
            let e = Excursion::new(read_path(path)?).with_context(|| format!("in {}", path.display()))?;
            Ok(PlaneTree::from_contour(&e))
        }
        _ => bail!("cannot tell the input kind of {}: expected a .json tree or a .csv path", path.display()),
    }
}

pub fn trim(a: &TrimArgs) -> Result<Outcome> {
    let h = positive("h", a.h)?;
    let tree = read_tree(&a.input)?;
    let text = match tree.trim(h) {
        Some(t) => t.to_json_string(),
        None => {
            eprintln!("the tree has height {} < {h}: the trimming is empty", tree.height());
            "null".to_string()
        }
    };
    write_atomic(&a.out, format!("{text}\n").as_bytes())?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct GraftsJson {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "X")]
    x: Vec<f64>,
    #[serde(rename = "Y")]
    y: Vec<f64>,
    truncated: bool,
    alpha: f64,
}

pub fn simulate(s: Simulate) -> Result<Outcome> {
    match s {
        Simulate::Excursion {
            n,
            h,
            seed,
            out,
            law: l,
            lattice,
            format,
        } => {
            at_least_one("n", n)?;
            let mut cfg = RandomWalkConfig::new(n, seed, WalkMode::BridgeExcursion);
            if lattice {
                cfg = cfg.lattice();
            }
            let mut rng = stream_rng(seed, 0);
            let e = match law(l) {
                ExcursionLaw::FixedLength => sample_excursion_conditioned(&cfg, h, &mut rng)?,
                ExcursionLaw::ExcursionMeasure => sample_excursion_measure(&cfg, h, MAX_EXCURSION_LEN, &mut rng)?,
            };
            write_path(&out, e.path(), format)?;
        }
        Simulate::Walk {
            n,
            seed,
            out,
            lattice,
            format,
        } => {
            at_least_one("n", n)?;
            let mut cfg = RandomWalkConfig::new(n, seed, WalkMode::FreeWalk);
            if lattice {
                cfg = cfg.lattice();
            }
            let w = sample_walk(&cfg, &mut stream_rng(seed, 0))?;
            write_path(&out, &w, format)?;
        }
        Simulate::BinaryTree { h, seed, out, n, grafts } => {
            let alpha = positive("h", h)? / 2.0;
            at_least_one("n", n)?;
            let sample = sample_binary_tree(alpha, n, &mut stream_rng(seed, 0))?;
            if sample.truncated {
                eprintln!("stopping index exceeded the cap of {n} branches; the tree is truncated");
            }
            write_atomic(&out, format!("{}\n", sample.tree.to_json_string()).as_bytes())?;
            if let Some(path) = grafts {
                write_json(
                    &path,
                    &GraftsJson {
                        n: sample.grafts.len(),
                        x: sample.grafts.x(),
                        y: sample.grafts.y(),
                        truncated: sample.truncated,
                        alpha,
                    },
                )?;
            }
        }
    }
    Ok(Outcome::Done)
}

/// A main1 report with the common verification header.
#[derive(Serialize)]
struct Main1Json<'a> {
    test: &'static str,
    /// Largest disagreement between the three branch lengths.
    statistic: f64,
    expected: f64,
    tolerance: f64,
    pass: bool,
    #[serde(flatten)]
    report: &'a Main1Report,
}

fn emit<T: Serialize>(report: Option<&Path>, value: &T) -> Result<()> {
    match report {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn outcome(pass: bool) -> Outcome {
    if pass {
        Outcome::Done
    } else {
        Outcome::VerificationFailed
    }
}

pub fn verify(v: Verify) -> Result<Outcome> {
    match v {
        Verify::Main1 {
            h,
            input,
            report,
            tol,
            emit_plot_data,
        } => {
            let h = positive("h", h)?;
            let tol = positive("tol", tol)?;
            let f = read_path(&input)?;
            let e = Excursion::new(f.clone()).with_context(|| format!("in {}", input.display()))?;
            let r = verify_main1(&e, h, tol)?;
            let [a, b, c] = r.branch_lengths;
            let spread = a.max(b).max(c) - a.min(b).min(c);
            emit(
                report.as_deref(),
                &Main1Json {
                    test: "main1",
                    statistic: spread,
                    expected: 0.0,
                    tolerance: tol,
                    pass: r.passed(),
                    report: &r,
                },
            )?;
            if let Some(plot) = emit_plot_data {
                let d = h_cut(&f, h)?;
                write_plot_data(&plot, &[("f", &f), ("lambda", &d.reflection.lambda), ("cut", &d.cut.canonical())])?;
            }
            if report.is_some() {
                let status = match r.status {
                    Main1Status::Ok => "ok",
                    Main1Status::Empty => "empty",
                    Main1Status::Mismatch => "mismatch",
                };
                println!("main1: {status} (N = {}, branch length {a})", r.n);
            }
            Ok(outcome(r.passed()))
        }
        Verify::Pn {
            h,
            replicates,
            seed,
            report,
            n,
            law: l,
        } => {
            let mut cfg = PnConfig::new(positive("h", h)?, at_least_one("n", n)?, at_least_one("replicates", replicates)?, seed);
            cfg.law = law(l);
            let r = pn_statistics(&cfg)?;
            if r.undersampled {
                eprintln!("warning: {replicates} replicates is below the recommended 100");
            }
            emit(report.as_deref(), &r)?;
            if report.is_some() {
                println!("pn: {} of {} checks failed", r.summary.statistic, r.checks.len());
            }
            Ok(outcome(r.summary.pass))
        }
        Verify::Teo1 {
            theta,
            h,
            t,
            n,
            markings,
            seed,
            report,
            input,
        } => {
            let cfg = Teo1Config {
                t: positive("t", t)?,
                theta: positive("theta", theta)?,
                h: positive("h", h)?,
                replicates: at_least_one("markings", markings)?,
                seed,
            };
            let w = match input {
                Some(path) => read_path(&path)?,
                None => {
                    // the driving walk uses a stream no marking replicate touches
                    let walk = RandomWalkConfig::new(at_least_one("n", n)?, seed, WalkMode::FreeWalk);
                    sample_walk(&walk, &mut stream_rng(seed, u64::MAX))?
                }
            };
            let r = verify_teo1(&w, &cfg)?;
            emit(report.as_deref(), &r)?;
            if report.is_some() {
                println!(
                    "teo1: frequency {} vs expected {} ({})",
                    r.frequency,
                    r.expected_probability,
                    if r.summary.pass { "pass" } else { "fail" }
                );
            }
            Ok(outcome(r.summary.pass))
        }
    }
}
