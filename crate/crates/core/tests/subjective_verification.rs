//! Solver checks on simulated panels with known ground truth.

mod common;

use bandaware_core::subjective::{
    plain_mos, reliability_compare, solve_mle, MosWithCi, ScoreMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Simulated panel at the study's shape: 84 items by 42 subjects with known
/// per-item quality, per-subject bias and inconsistency.
pub struct SimulatedPanel {
    pub matrix: ScoreMatrix,
    pub psi: Vec<f64>,
    pub delta: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn simulate_panel(seed: u64, ni: usize, ns: usize) -> SimulatedPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let psi: Vec<f64> = (0..ni).map(|_| rng.random_range(0.0..100.0)).collect();
    let delta: Vec<f64> = (0..ns).map(|_| rng.random_range(-10.0..10.0)).collect();
    let v: Vec<f64> = (0..ns).map(|_| rng.random_range(5.0..15.0)).collect();
    let scores: Vec<Vec<Option<f64>>> = (0..ni)
        .map(|e| {
            (0..ns)
                .map(|s| {
                    let u = psi[e] + delta[s] + v[s] * standard_normal(&mut rng);
                    Some(u.clamp(0.0, 100.0))
                })
                .collect()
        })
        .collect();
    SimulatedPanel {
        matrix: ScoreMatrix {
            scores,
            item_ids: (0..ni).map(|i| format!("item{i}")).collect(),
            subject_ids: (0..ns).map(|s| format!("subject{s}")).collect(),
        },
        psi,
        delta,
        v,
    }
}

#[test]
fn panel_recovery_tracks_the_information_bound() {
    // With inconsistencies drawn from [5, 15], the per-item uncertainty of
    // any unbiased estimate is 1/sqrt(sum 1/v_s^2), about 1.3 score points
    // for this panel. The solver should land close to that bound; the
    // frozen ceilings below were measured from the simulation oracle.
    let panel = simulate_panel(0xA11CE, 84, 42);
    let est = solve_mle(&panel.matrix, 1e-9, 10_000).unwrap();
    assert!(est.converged);
    assert!(est.iterations <= 10_000);

    let dmean = panel.delta.iter().sum::<f64>() / panel.delta.len() as f64;
    let rmse = (est
        .psi
        .iter()
        .zip(&panel.psi)
        .map(|(a, t)| (a - (t + dmean)).powi(2))
        .sum::<f64>()
        / panel.psi.len() as f64)
        .sqrt();
    let crlb = (1.0 / panel.v.iter().map(|v| 1.0 / (v * v)).sum::<f64>()).sqrt();
    assert!(rmse <= 1.6 * crlb, "rmse {rmse} vs bound {crlb}");
    assert!(rmse <= 1.9, "rmse {rmse}");

    let max_delta_err = est
        .delta
        .iter()
        .zip(&panel.delta)
        .map(|(a, t)| (a - (t - dmean)).abs())
        .fold(0.0f64, f64::max);
    assert!(max_delta_err <= 3.2, "max delta error {max_delta_err}");

    // Bias estimates should correlate almost perfectly with the truth.
    let centered: Vec<f64> = panel.delta.iter().map(|d| d - dmean).collect();
    let corr = bandaware_core::stats::plcc(&est.delta, &centered).unwrap();
    assert!(corr > 0.97, "delta correlation {corr}");
}

#[test]
fn log_likelihood_is_monotone_every_iteration() {
    for seed in [1u64, 2, 3] {
        let panel = simulate_panel(seed, 30, 12);
        let est = solve_mle(&panel.matrix, 1e-9, 10_000).unwrap();
        assert!(est.converged);
        for w in est.log_likelihood.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-9,
                "seed {seed}: log-likelihood decreased from {} to {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn incomplete_panel_still_converges() {
    let mut panel = simulate_panel(77, 40, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for row in &mut panel.matrix.scores {
        for cell in row.iter_mut() {
            if rng.random_range(0.0..1.0) < 0.15 {
                *cell = None;
            }
        }
    }
    panel.matrix.validate().unwrap();
    let est = solve_mle(&panel.matrix, 1e-9, 10_000).unwrap();
    assert!(est.converged);
    assert!(est.delta.iter().sum::<f64>().abs() < 1e-9);
    let plain = plain_mos(&panel.matrix).unwrap();
    let corr = bandaware_core::stats::plcc(&est.psi, &plain.mean).unwrap();
    assert!(corr > 0.99);
}

#[test]
fn repeated_experiment_regime_matches_the_reliability_pattern() {
    // Two 42-item experiments, the second a noisy repetition of the first:
    // correlations in the high-0.9s and no flipped significant pairs beyond
    // what chance noise allows.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let ids: Vec<String> = (0..42).map(|i| format!("v{i:02}")).collect();
    let mos_a: Vec<f64> = (0..42).map(|i| 5.0 + f64::from(i) * 2.2).collect();
    let ci_a = vec![3.5f64; 42];
    let mos_b: Vec<f64> = mos_a
        .iter()
        .map(|m| (m + 2.5 * standard_normal(&mut rng)).clamp(0.0, 100.0))
        .collect();
    let a = MosWithCi {
        item_ids: ids.clone(),
        mos: mos_a,
        ci95: ci_a.clone(),
    };
    let b = MosWithCi {
        item_ids: ids,
        mos: mos_b,
        ci95: ci_a,
    };
    let report = reliability_compare(&a, &b).unwrap();
    assert!(report.plcc > 0.97, "plcc {}", report.plcc);
    assert!(report.srocc > 0.97, "srocc {}", report.srocc);
    assert!(
        report.flipped_significant_pairs.is_empty(),
        "unexpected flips: {:?}",
        report.flipped_significant_pairs
    );
}
