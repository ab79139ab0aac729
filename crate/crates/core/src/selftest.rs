//! A fast invariant suite for the `selftest` command.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::capacity;
use crate::channel::gaussian_matrix;
use crate::config::{allocate_power, SystemConfig};
use crate::detector::{model_covariance, neg_log_likelihood, DetectorState, Dictionary, SampleCovariance};
use crate::linalg::frobenius;
use crate::outer_code::{tree_decode, tree_encode, ParityMatrices, Payload, SubslotLists};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn run_all(seed: u64) -> Vec<Check> {
    vec![
        tree_round_trip(seed),
        rank_one_consistency(seed),
        monotone_descent(seed),
        power_allocation(),
        capacity_values(),
    ]
}

fn tree_round_trip(seed: u64) -> Check {
    let cfg = SystemConfig::reference(1, 1).validate().expect("reference config");
    let m = ParityMatrices::generate(cfg.parity_profile(), cfg.index_bits(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failures = (0..500)
        .filter(|_| {
            let p = Payload::random(cfg.payload_bits(), &mut rng);
            let path = tree_encode(&p, &m).expect("length");
            tree_decode(&SubslotLists::from_path(&path), &m, 10)
                .map(|d| d.payloads != vec![p])
                .unwrap_or(true)
        })
        .count();
    Check {
        name: "tree_round_trip",
        passed: failures == 0,
        detail: format!("{failures} failures in 500 payloads"),
    }
}

fn random_problem(seed: u64, n0: usize, cols: usize) -> (Dictionary, SampleCovariance) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dict = Dictionary::from_matrix(&gaussian_matrix(n0, cols, 1.0, &mut rng), 1.0);
    let m = 3 * n0;
    let y = gaussian_matrix(n0, m, 1.0, &mut rng);
    let truth: Vec<f64> = (0..cols).map(|r| if r % 7 == 0 { 2.0 } else { 0.0 }).collect();
    let sigma = model_covariance(&truth, &dict, 1.0);
    let chol = sigma.cholesky().expect("positive definite").l();
    let x = chol * y;
    let cov = SampleCovariance::from_matrix(&x * x.adjoint() / Complex64::new(m as f64, 0.0));
    (dict, cov)
}

fn rank_one_consistency(seed: u64) -> Check {
    let (dict, cov) = random_problem(seed, 12, 48);
    let mut st = DetectorState::new(48, 12, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    for _ in 0..200 {
        st.coordinate_step(rng.random_range(0..48), &dict, &cov);
    }
    let direct: DMatrix<Complex64> = model_covariance(st.gamma(), &dict, 1.0)
        .try_inverse()
        .expect("invertible");
    let rel = frobenius(&(st.sigma_inv() - &direct)) / frobenius(&direct);
    Check {
        name: "rank_one_inverse",
        passed: rel < 1e-8,
        detail: format!("relative Frobenius error {rel:.3e}"),
    }
}

fn monotone_descent(seed: u64) -> Check {
    let (dict, cov) = random_problem(seed ^ 2, 10, 40);
    let mut st = DetectorState::new(40, 10, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    let mut f = neg_log_likelihood(st.gamma(), &dict, &cov, 1.0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..400 {
        st.coordinate_step(rng.random_range(0..40), &dict, &cov);
        let g = neg_log_likelihood(st.gamma(), &dict, &cov, 1.0);
        worst = worst.max((g - f) / f.abs());
        f = g;
    }
    Check {
        name: "monotone_descent",
        passed: worst <= 1e-9,
        detail: format!("largest relative increase {worst:.3e}"),
    }
}

fn power_allocation() -> Check {
    let a = allocate_power(0.03, 32, 0.9).expect("valid");
    let rel = (a.total() - 0.96).abs() / 0.96;
    Check {
        name: "power_allocation",
        passed: rel < 1e-12,
        detail: format!("relative energy error {rel:.3e}"),
    }
}

fn capacity_values() -> Check {
    let s = capacity::sum_rate_feasible(12, 0.25, 300);
    let u = capacity::max_active_users(12, 0.25, 1 << 20, 32, 1.0);
    Check {
        name: "capacity",
        passed: s.lhs == 900.0 && s.feasible && u.cap == 1024,
        detail: format!("lhs {} rhs {:.2} cap {}", s.lhs, s.rhs, u.cap),
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all(17) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
