//! Closed-form design calculators: OR-MAC output entropy, the sum-rate
//! condition on the outer code, the active-user cap, the antenna-count order,
//! and the NNLS reconstruction error bound.
//!
//! All entropies are in bits. The constants `c` (inner decoder) and `kappa`
//! (NNLS bound) cannot be pinned down and default to 1; every figure that
//! depends on them is an order-of-magnitude indicator only.

use serde::Serialize;

/// Binary entropy in bits.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// Probability that a given codebook column is unused by all `K_a` users,
/// `(1 - 2^-J)^K_a`.
pub fn zero_row_probability(index_bits: u32, active_users: usize) -> f64 {
    (1.0 - 2f64.powi(-(index_bits as i32))).powf(active_users as f64)
}

/// `2^J H2((1 - 2^-J)^K_a)`.
pub fn or_mac_entropy_bound(index_bits: u32, active_users: usize) -> f64 {
    if active_users == 0 {
        return 0.0;
    }
    2f64.powi(index_bits as i32) * binary_entropy(zero_row_probability(index_bits, active_users))
}

/// Large-`2^J` approximation `K_a (1 + J - log2 K_a)`.
pub fn or_mac_entropy_approx(index_bits: u32, active_users: usize) -> f64 {
    if active_users == 0 {
        return 0.0;
    }
    let k = active_users as f64;
    k * (1.0 + index_bits as f64 - k.log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRateCheck {
    /// Information bits per subslot, `K_a J R_out`.
    pub lhs: f64,
    /// Exact OR-MAC entropy bound.
    pub rhs: f64,
    pub margin: f64,
    pub feasible: bool,
    /// Approximate entropy and the verdict it gives.
    pub rhs_approx: f64,
    pub feasible_approx: bool,
}

pub fn sum_rate_feasible(index_bits: u32, outer_rate: f64, active_users: usize) -> SumRateCheck {
    let lhs = active_users as f64 * index_bits as f64 * outer_rate;
    let rhs = or_mac_entropy_bound(index_bits, active_users);
    let rhs_approx = or_mac_entropy_approx(index_bits, active_users);
    SumRateCheck {
        lhs,
        rhs,
        margin: rhs - lhs,
        feasible: rhs - lhs >= 0.0,
        rhs_approx,
        feasible_approx: rhs_approx - lhs >= 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActiveUserCap {
    /// Inner-decoder limit `c n^2 / L^2`.
    pub inner: f64,
    /// Outer-code limit `2^(J (1 - R_out) + 1)`.
    pub outer: f64,
    /// `floor(min(inner, outer))`.
    pub cap: u64,
    /// Largest `K_a` satisfying the exact sum-rate condition.
    pub outer_exact: u64,
}

pub fn max_active_users(index_bits: u32, outer_rate: f64, blocklength: usize, subslots: usize, c: f64) -> ActiveUserCap {
    let ratio = blocklength as f64 / subslots as f64;
    let inner = c * ratio * ratio;
    let outer = 2f64.powf(index_bits as f64 * (1.0 - outer_rate) + 1.0);
    ActiveUserCap {
        inner,
        outer,
        cap: inner.min(outer).floor() as u64,
        outer_exact: exact_outer_cap(index_bits, outer_rate),
    }
}

/// Scans upward for the first `K_a` violating the exact sum-rate condition.
fn exact_outer_cap(index_bits: u32, outer_rate: f64) -> u64 {
    let limit = 1u64 << (index_bits + 3).min(30);
    (1..=limit)
        .find(|&k| !sum_rate_feasible(index_bits, outer_rate, k as usize).feasible)
        .map_or(limit, |k| k - 1)
}

/// Inputs of the antenna-order estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint {
    pub index_bits: u32,
    pub outer_rate: f64,
    pub subslots: usize,
    pub blocklength: usize,
    pub active_users: usize,
    /// Linear Eb/N0.
    pub ebn0: f64,
    pub c: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AntennaOrder {
    /// `phi = sqrt(c) J R_out / 2^(J (1 - R_out) / 2 + 1/2)`.
    pub phi: f64,
    /// `max((Eb/N0 phi)^-2, K_a)`, defined only up to a constant.
    pub order: f64,
}

pub fn phi(index_bits: u32, outer_rate: f64, c: f64) -> f64 {
    let j = index_bits as f64;
    c.sqrt() * j * outer_rate / 2f64.powf(j * (1.0 - outer_rate) / 2.0 + 0.5)
}

pub fn antenna_requirement(design: &DesignPoint) -> AntennaOrder {
    let phi = phi(design.index_bits, design.outer_rate, design.c);
    let snr_term = (design.ebn0 * phi).powi(-2);
    AntennaOrder {
        phi,
        order: snr_term.max(design.active_users as f64),
    }
}

/// `kappa ((P/N0)^-1 / sqrt(M) + sqrt(K_a / M) |gamma|)`.
pub fn nnls_error_bound(snr: f64, antennas: usize, active_users: usize, gamma_norm: f64, kappa: f64) -> f64 {
    let m = antennas as f64;
    kappa * (1.0 / (snr * m.sqrt()) + (active_users as f64 / m).sqrt() * gamma_norm)
}

/// Everything the `design` report prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub design: DesignPoint,
    pub sum_rate: SumRateCheck,
    pub users: ActiveUserCap,
    pub antennas: AntennaOrder,
    pub constants_note: &'static str,
}

pub fn design_report(design: DesignPoint) -> DesignReport {
    DesignReport {
        sum_rate: sum_rate_feasible(design.index_bits, design.outer_rate, design.active_users),
        users: max_active_users(
            design.index_bits,
            design.outer_rate,
            design.blocklength,
            design.subslots,
            design.c,
        ),
        antennas: antenna_requirement(&design),
        design,
        constants_note: "c and kappa are unnormalized constants; the antenna order and NNLS bound hold only up to them",
    }
}

impl DesignReport {
    pub fn to_text(&self) -> String {
        let d = &self.design;
        let s = &self.sum_rate;
        let u = &self.users;
        let a = &self.antennas;
        format!(
            "design point      J={} R_out={} L={} n={} K_a={} Eb/N0={:.4} (linear) c={} kappa={}\n\
             sum rate          lhs={:.3} bits  rhs={:.3} bits  margin={:.3}  feasible={}\n\
             sum rate (approx) rhs={:.3} bits  feasible={}\n\
             K_a cap           inner={:.1}  outer={:.1}  cap={}  outer(exact H2)={}\n\
             antennas          phi={:.6e}  M order={:.3e}\n\
             note              {}\n",
            d.index_bits,
            d.outer_rate,
            d.subslots,
            d.blocklength,
            d.active_users,
            d.ebn0,
            d.c,
            d.kappa,
            s.lhs,
            s.rhs,
            s.margin,
            s.feasible,
            s.rhs_approx,
            s.feasible_approx,
            u.inner,
            u.outer,
            u.cap,
            u.outer_exact,
            a.phi,
            a.order,
            self.constants_note
        )
    }
}
