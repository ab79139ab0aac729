//! End-to-end Monte-Carlo trials (encode, transmit, detect, stitch), PUPE
//! metrics and parameter sweeps.
//!
//! Randomness of trial `t` at sweep point `i` comes only from
//! `trial_seed(master, i, t)`; within a trial, payloads, fading, noise and
//! coordinate schedules each use their own stream (see [`crate::rng`]).
//! Results are therefore a pure function of configuration and master seed,
//! independent of thread count.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_fading, transmit_subslot, FadingMatrix};
use crate::codebook::{assign_activity, generate_codebook, Codebook};
use crate::config::{PowerAllocation, SystemConfig, ValidConfig};
use crate::detector::{
    detect_support, empirical_covariance, ml_coordinate_descent, nnls_estimate, Dictionary, Estimator,
};
use crate::error::ConfigError;
use crate::outer_code::{tree_decode, tree_encode, MessagePath, ParityMatrices, Payload, SubslotLists, TreeDecodeError};
use crate::rng;

/// Everything shared read-only by the trials of one configuration.
#[derive(Debug, Clone)]
pub struct SimContext {
    cfg: ValidConfig,
    codebook: Codebook,
    dictionary: Dictionary,
    matrices: ParityMatrices,
    powers: PowerAllocation,
}

impl SimContext {
    pub fn new(cfg: ValidConfig) -> Self {
        let seeds = cfg.seeds();
        let codebook = generate_codebook(cfg.subslot_len(), cfg.index_bits(), seeds.codebook);
        // Detection runs against the nominal-power codebook sqrt(P) A, so
        // estimated activities sit near g_k * P_l / P.
        let dictionary = Dictionary::new(&codebook, cfg.power().sqrt());
        let matrices = ParityMatrices::generate(cfg.parity_profile(), cfg.index_bits(), seeds.parity);
        let powers = cfg.power_allocation();
        SimContext {
            cfg,
            codebook,
            dictionary,
            matrices,
            powers,
        }
    }

    pub fn config(&self) -> &ValidConfig {
        &self.cfg
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn matrices(&self) -> &ParityMatrices {
        &self.matrices
    }

    pub fn powers(&self) -> &PowerAllocation {
        &self.powers
    }
}

/// Wall-clock timings of a trial. Timings never take part in equality, so
/// two runs of the same trial compare equal.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub detect_ms: f64,
    pub decode_ms: f64,
}

impl PartialEq for Timings {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_seed: u64,
    pub active_users: usize,
    pub sent: Vec<Payload>,
    /// Decoded list, ascending.
    pub decoded: Vec<Payload>,
    pub misdetections: usize,
    pub false_alarms: usize,
    pub list_sizes: Vec<usize>,
    pub surviving_paths: Vec<usize>,
    /// The tree decoder exceeded its path cap; every message counts as missed.
    pub overflow: bool,
    /// Payload draws repeated because two users picked the same message.
    pub payload_redraws: usize,
    pub timings: Timings,
}

impl TrialResult {
    /// Correctly decoded messages, `|L ∩ sent|`.
    pub fn hits(&self) -> usize {
        self.decoded.len() - self.false_alarms
    }
}

pub fn run_trial(ctx: &SimContext, trial_seed: u64) -> TrialResult {
    run_trial_with_gamma(ctx, trial_seed).0
}

/// Like [`run_trial`], also returning the estimated activity vector of every
/// subslot.
pub fn run_trial_with_gamma(ctx: &SimContext, trial_seed: u64) -> (TrialResult, Vec<Vec<f64>>) {
    let cfg = &ctx.cfg;
    let ka = cfg.active_users();
    let payload_bits = cfg.payload_bits();

    let mut prng = rng::stream(trial_seed, rng::PURPOSE_PAYLOAD, 0);
    let mut seen = BTreeSet::new();
    let mut sent = Vec::with_capacity(ka);
    let mut payload_redraws = 0;
    while sent.len() < ka {
        let p = Payload::random(payload_bits, &mut prng);
        if seen.insert(p.clone()) {
            sent.push(p);
        } else {
            payload_redraws += 1;
        }
    }
    let paths: Vec<MessagePath> = sent
        .iter()
        .map(|p| tree_encode(p, &ctx.matrices).expect("payload length matches config"))
        .collect();
    let gains = cfg.gains();

    let shared_fading = (!cfg.fresh_fading_per_subslot()).then(|| {
        let mut r = rng::stream(trial_seed, rng::PURPOSE_FADING, u32::MAX as u64);
        draw_fading(ka, cfg.antennas(), &mut r)
    });

    let start = Instant::now();
    let per_subslot: Vec<(Vec<u32>, Vec<f64>)> = (0..cfg.subslots())
        .into_par_iter()
        .map(|l| detect_subslot(ctx, &paths, &gains, l, trial_seed, shared_fading.as_ref()))
        .collect();
    let detect_ms = start.elapsed().as_secs_f64() * 1e3;

    let (lists, gammas): (Vec<Vec<u32>>, Vec<Vec<f64>>) = per_subslot.into_iter().unzip();
    let lists = SubslotLists::new(lists);
    let list_sizes = lists.sizes();

    let start = Instant::now();
    let decoded = tree_decode(&lists, &ctx.matrices, cfg.max_paths());
    let decode_ms = start.elapsed().as_secs_f64() * 1e3;

    let (decoded, surviving_paths, overflow) = match decoded {
        Ok(d) => (d.payloads, d.stats.surviving, false),
        Err(TreeDecodeError::PathOverflow { stats, .. }) => (Vec::new(), stats.surviving, true),
        Err(TreeDecodeError::Input(e)) => panic!("detector produced invalid lists: {e}"),
    };
    let decoded_set: BTreeSet<&Payload> = decoded.iter().collect();
    let misdetections = sent.iter().filter(|p| !decoded_set.contains(p)).count();
    let false_alarms = decoded.iter().filter(|p| !seen.contains(*p)).count();

    let result = TrialResult {
        trial_seed,
        active_users: ka,
        sent,
        decoded,
        misdetections,
        false_alarms,
        list_sizes,
        surviving_paths,
        overflow,
        payload_redraws,
        timings: Timings { detect_ms, decode_ms },
    };
    (result, gammas)
}

fn detect_subslot(
    ctx: &SimContext,
    paths: &[MessagePath],
    gains: &[f64],
    l: usize,
    trial_seed: u64,
    shared_fading: Option<&FadingMatrix>,
) -> (Vec<u32>, Vec<f64>) {
    let cfg = &ctx.cfg;
    let fresh;
    let fading = match shared_fading {
        Some(h) => h,
        None => {
            let mut r = rng::stream(trial_seed, rng::PURPOSE_FADING, l as u64);
            fresh = draw_fading(paths.len(), cfg.antennas(), &mut r);
            &fresh
        }
    };
    let (assignment, _) =
        assign_activity(paths, l, gains, ctx.codebook.num_columns()).expect("gains validated");
    let power = ctx.powers.powers[l];
    let mut noise_rng = rng::stream(trial_seed, rng::PURPOSE_NOISE, l as u64);
    let y = transmit_subslot(&ctx.codebook, &assignment, gains, fading, cfg.noise_psd(), power, &mut noise_rng)
        .expect("dimensions are consistent");
    let cov = empirical_covariance(&y);

    let ratio = power / cfg.power();
    let settings = cfg.detector();
    let gamma = match settings.estimator {
        Estimator::Ml => {
            let params = settings.cd_params(ratio, rng::mix(trial_seed, l as u64));
            ml_coordinate_descent(&ctx.dictionary, &cov, cfg.noise_psd(), &params).gamma
        }
        Estimator::Nnls => nnls_estimate(&ctx.dictionary, &cov, cfg.noise_psd(), &settings.nnls_params(ratio)).gamma,
    };
    let rule = settings
        .threshold
        .rule(l, ratio, cfg.min_gain(), Some(cfg.active_users()))
        .expect("active user count is known to the simulator");
    (detect_support(&gamma.0, rule), gamma.0)
}

/// Per-user error probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pupe {
    pub p_md: f64,
    pub p_fa: f64,
    pub p_e: f64,
}

/// `p_md` = missed / (trials K_a) (0 when nothing was sent); `p_fa` = mean
/// over trials of false alarms / |L| (empty lists contribute 0).
pub fn compute_pupe(results: &[TrialResult]) -> Pupe {
    let sent: usize = results.iter().map(|r| r.active_users).sum();
    let missed: usize = results.iter().map(|r| r.misdetections).sum();
    let p_md = if sent == 0 { 0.0 } else { missed as f64 / sent as f64 };
    let p_fa = if results.is_empty() {
        0.0
    } else {
        results.iter().map(fa_fraction).sum::<f64>() / results.len() as f64
    };
    Pupe {
        p_md,
        p_fa,
        p_e: p_md + p_fa,
    }
}

fn fa_fraction(r: &TrialResult) -> f64 {
    if r.decoded.is_empty() {
        0.0
    } else {
        r.false_alarms as f64 / r.decoded.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    ActiveUsers,
    Antennas,
    Ebn0Db,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ActiveUsers => "ka",
            SweepAxis::Antennas => "antennas",
            SweepAxis::Ebn0Db => "ebn0",
        }
    }

    /// Applies an axis value to a configuration.
    pub fn apply(self, cfg: &ValidConfig, value: f64) -> Result<ValidConfig, ConfigError> {
        let count = |v: f64| -> Result<usize, ConfigError> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(ConfigError::Parse(format!("axis value {v} is not a count")))
            }
        };
        match self {
            SweepAxis::ActiveUsers => {
                let k = count(value)?;
                cfg.modified(|raw| {
                    raw.active_users = k;
                    if let Some(g) = &mut raw.gains {
                        let fill = g.last().copied().unwrap_or(1.0);
                        g.resize(k, fill);
                    }
                })
            }
            SweepAxis::Antennas => {
                let m = count(value)?;
                cfg.modified(|raw| raw.antennas = m)
            }
            SweepAxis::Ebn0Db => cfg.modified(|raw| {
                raw.ebn0_db = Some(value);
                raw.power = None;
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub p_md: f64,
    pub p_fa: f64,
    pub p_e: f64,
    pub trials: usize,
    /// 95% normal-approximation half-width of `p_e`.
    pub ci95: f64,
    pub mean_decode_ms: f64,
    pub overflows: usize,
    pub payload_redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub master_seed: u64,
    pub points: Vec<SweepPoint>,
}

/// Aggregates the trials of one sweep point.
pub fn summarize(value: f64, results: &[TrialResult]) -> SweepPoint {
    let pupe = compute_pupe(results);
    let trials = results.len();
    let sent: usize = results.iter().map(|r| r.active_users).sum();
    let md_var = if sent == 0 {
        0.0
    } else {
        pupe.p_md * (1.0 - pupe.p_md) / sent as f64
    };
    let fa_var = if trials > 1 {
        let fr: Vec<f64> = results.iter().map(fa_fraction).collect();
        let ss: f64 = fr.iter().map(|x| (x - pupe.p_fa).powi(2)).sum();
        ss / (trials - 1) as f64 / trials as f64
    } else {
        0.0
    };
    SweepPoint {
        value,
        p_md: pupe.p_md,
        p_fa: pupe.p_fa,
        p_e: pupe.p_e,
        trials,
        ci95: 1.96 * (md_var + fa_var).sqrt(),
        mean_decode_ms: if trials == 0 {
            0.0
        } else {
            results.iter().map(|r| r.timings.decode_ms).sum::<f64>() / trials as f64
        },
        overflows: results.iter().filter(|r| r.overflow).count(),
        payload_redraws: results.iter().map(|r| r.payload_redraws).sum(),
    }
}

/// Runs the trials of sweep point `point` (in parallel, ordered reduction).
pub fn run_point(ctx: &SimContext, point: usize, trials: usize, master_seed: u64) -> Vec<TrialResult> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_trial(ctx, rng::trial_seed(master_seed, point as u64, t as u64)))
        .collect()
}

pub fn monte_carlo_sweep(
    cfg: &ValidConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<SweepResult, ConfigError> {
    monte_carlo_sweep_with(cfg, axis, values, trials, master_seed, |_| {})
}

/// [`monte_carlo_sweep`] with a callback after each completed point.
pub fn monte_carlo_sweep_with(
    cfg: &ValidConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    master_seed: u64,
    mut on_point: impl FnMut(&SweepPoint),
) -> Result<SweepResult, ConfigError> {
    assert!(trials >= 1, "a sweep needs at least one trial per point");
    let mut points = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let ctx = SimContext::new(axis.apply(cfg, v)?);
        let results = run_point(&ctx, i, trials, master_seed);
        let p = summarize(v, &results);
        on_point(&p);
        points.push(p);
    }
    Ok(SweepResult {
        axis,
        master_seed,
        points,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    axis: &'a str,
    value: f64,
    p_md: f64,
    p_fa: f64,
    p_e: f64,
    trials: usize,
    ci95: f64,
    mean_decode_ms: f64,
}

/// One row per axis value:
/// `axis,value,p_md,p_fa,p_e,trials,ci95,mean_decode_ms`.
pub fn write_sweep_csv<W: Write>(w: W, sweep: &SweepResult) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in &sweep.points {
        out.serialize(CsvRow {
            axis: sweep.axis.name(),
            value: p.value,
            p_md: p.p_md,
            p_fa: p.p_fa,
            p_e: p.p_e,
            trials: p.trials,
            ci95: p.ci95,
            mean_decode_ms: p.mean_decode_ms,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// JSON sidecar describing a sweep: full configuration plus all points.
pub fn sweep_sidecar(cfg: &SystemConfig, sweep: &SweepResult) -> serde_json::Value {
    serde_json::json!({
        "config": cfg,
        "axis": sweep.axis,
        "master_seed": sweep.master_seed,
        "points": sweep.points,
    })
}
