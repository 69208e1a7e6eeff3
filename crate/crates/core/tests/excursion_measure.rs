//! Graft statistics for excursions drawn from the excursion measure
//! conditioned on height, rather than at fixed length. Under this law the
//! cycle count follows the binary-tree stopping index, and branch lengths
//! measured as compensator increments have mean `h`.

use skotrim_core::stochastic::{pn_statistics, ExcursionLaw, PnConfig};

#[test]
fn excursion_measure_matches_binary_tree_law() {
    let h = 1.0;
    let mut cfg = PnConfig::new(h, 900, 2000, 123);
    cfg.law = ExcursionLaw::ExcursionMeasure;
    cfg.max_len = 1_000_000;
    cfg.reference_samples = 20_000;
    let r = pn_statistics(&cfg).unwrap();
    println!(
        "x mean {:.4} (n = {}), y mean {:.4} (n = {}), mean N {:.4}",
        r.x_mean, r.x_count, r.y_mean, r.y_count, r.n_mean
    );
    let check = |name: &str| r.checks.iter().find(|c| c.test == name).unwrap();

    assert!(check("y1_zero").pass);
    assert!(check("x_equals_local_time_increment").pass);
    for k in 1..=cfg.bins {
        let c = check(&format!("n_law_bin_{k}"));
        assert!(c.pass, "{c:?}");
    }
    let se = (r.x_var / r.x_count as f64).sqrt();
    let tol = (3.0 * se).max(0.05 * h);
    assert!((r.x_mean - h).abs() <= tol, "x mean {} vs {h} (tolerance {tol})", r.x_mean);
    let se = (r.y_var / r.y_count as f64).sqrt();
    let tol = (3.0 * se).max(0.05 * h);
    assert!((r.y_mean - h).abs() <= tol, "y mean {} vs {h} (tolerance {tol})", r.y_mean);
}
