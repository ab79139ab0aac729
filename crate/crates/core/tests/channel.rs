mod common;

use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ura_core::channel::{draw_fading, transmit_activity, transmit_subslot, FadingMatrix};
use ura_core::codebook::{assign_activity, generate_codebook, ActivityAssignment, ActivityVector};
use ura_core::detector::{empirical_covariance, Dictionary};
use ura_core::outer_code::{MessagePath, Payload};

fn path(i: u32) -> MessagePath {
    MessagePath {
        payload: Payload::new(vec![]),
        indices: vec![i],
    }
}

/// Mean and standard error of a sample.
fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// `E[Y Y^H / M] = P A Gamma A^H + N0 I`, and the spread of the sample
/// covariance around it is `E|S - Sigma|_F^2 = (tr Sigma)^2 / M`.
#[test]
fn second_moment_identity() {
    let (n0, j, power, noise, m) = (8, 4, 0.7, 1.3, 40);
    let cb = generate_codebook(n0, j, 5);
    let paths = [path(2), path(9), path(9), path(14)];
    let gains = [1.0, 0.5, 2.0, 0.8];
    let (asg, gamma) = assign_activity(&paths, 0, &gains, 16).unwrap();
    let scaled: Vec<f64> = gamma.0.iter().map(|g| g * power).collect();
    let sigma = model_cov(cb.matrix(), &scaled, noise);
    let tr = sigma.trace().re;
    let tr2 = (&sigma * &sigma).trace().re;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let reps = 2000;
    let mut traces = Vec::with_capacity(reps);
    let mut spreads = Vec::with_capacity(reps);
    let mut entry = Vec::with_capacity(reps);
    for _ in 0..reps {
        let h = draw_fading(4, m, &mut rng);
        let y = transmit_subslot(&cb, &asg, &gains, &h, noise, power, &mut rng).unwrap();
        let s = empirical_covariance(&y);
        traces.push(s.matrix().trace().re);
        spreads.push((s.matrix() - &sigma).norm_squared() / (tr * tr / m as f64));
        entry.push(s.matrix()[(1, 3)].re);
    }
    let (mt, se) = mean_se(&traces);
    assert!((mt - tr).abs() < 3.0 * se, "trace {mt} vs {tr} (se {se})");
    // the trace's variance is tr(Sigma^2) / M
    assert!((se * se * reps as f64 / (tr2 / m as f64) - 1.0).abs() < 0.15);
    let (ms, se) = mean_se(&spreads);
    assert!((ms - 1.0).abs() < 3.0 * se, "normalized spread {ms} (se {se})");
    let (me, se) = mean_se(&entry);
    assert!((me - sigma[(1, 3)].re).abs() < 3.0 * se);
}

/// The per-user form and the activity form draw the same covariance.
#[test]
fn model_forms_agree() {
    let (n0, j, power, m) = (10, 5, 0.5, 20_000);
    let cb = generate_codebook(n0, j, 3);
    let paths = [path(1), path(7), path(7), path(30)];
    let gains = [1.0, 1.0, 0.6, 1.4];
    let (asg, gamma) = assign_activity(&paths, 0, &gains, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = draw_fading(4, m, &mut rng);
    let per_user = empirical_covariance(&transmit_subslot(&cb, &asg, &gains, &h, 1.0, power, &mut rng).unwrap());
    let rows = draw_fading(32, m, &mut rng);
    let activity = empirical_covariance(&transmit_activity(&cb, &gamma, &rows, 1.0, power, &mut rng).unwrap());
    let scaled: Vec<f64> = gamma.0.iter().map(|g| g * power).collect();
    let sigma = model_cov(cb.matrix(), &scaled, 1.0);
    assert!(rel_frobenius(per_user.matrix(), activity.matrix()) < 0.05);
    assert!(rel_frobenius(per_user.matrix(), &sigma) < 0.05);
    assert!(rel_frobenius(activity.matrix(), &sigma) < 0.05);
}

/// With the detector dictionary scaled by `sqrt(P)`, the signal covariance
/// is the model covariance at the raw gains.
#[test]
fn dictionary_scaling_matches_signal() {
    let cb = generate_codebook(6, 3, 1);
    let power = 0.3f64;
    let dict = Dictionary::new(&cb, power.sqrt());
    let gamma = [0.0, 1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.5];
    let a = ura_core::detector::model_covariance(&gamma, &dict, 1.0);
    let scaled: Vec<f64> = gamma.iter().map(|g| g * power).collect();
    assert!(rel_frobenius(&a, &model_cov(cb.matrix(), &scaled, 1.0)) < 1e-14);
}

/// Fraction of codebook columns nobody uses at `J = 12`, `K_a = 300`.
#[test]
fn row_sparsity_matches_closed_form() {
    let want = (1.0 - 2f64.powi(-12)).powi(300);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fractions: Vec<f64> = (0..400)
        .map(|_| {
            let paths: Vec<MessagePath> = (0..300).map(|_| path(rng.random_range(0..4096))).collect();
            let (_, g) = assign_activity(&paths, 0, &vec![1.0; 300], 4096).unwrap();
            g.0.iter().filter(|&&x| x == 0.0).count() as f64 / 4096.0
        })
        .collect();
    let (m, se) = mean_se(&fractions);
    assert!((want - 0.929_367).abs() < 1e-6);
    assert!((m - want).abs() < 3.0 * se, "{m} vs {want} (se {se})");
}

#[test]
fn activity_form_rejects_bad_shapes() {
    let cb = generate_codebook(4, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rows = FadingMatrix(DMatrix::zeros(3, 2));
    assert!(transmit_activity(&cb, &ActivityVector(vec![0.0; 4]), &rows, 1.0, 1.0, &mut rng).is_err());
    let asg = ActivityAssignment {
        indices: vec![0],
        num_columns: 8,
    };
    let h = FadingMatrix(DMatrix::zeros(1, 2));
    assert!(transmit_subslot(&cb, &asg, &[1.0], &h, 1.0, 1.0, &mut rng).is_err());
}
