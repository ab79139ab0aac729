use std::io::Write;

use super::ThresholdMode;
use crate::error::SignalError;

/// A resolved per-subslot decision rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportRule {
    /// Every index with `gamma_r >= tau`.
    Threshold(f64),
    /// The `k` largest entries, ties broken towards the lower index.
    Largest(usize),
}

impl ThresholdMode {
    /// Resolves the rule for 0-based `subslot` with power ratio `P_l / P`.
    pub fn rule(
        &self,
        subslot: usize,
        power_ratio: f64,
        min_gain: f64,
        active_users: Option<usize>,
    ) -> Result<SupportRule, SignalError> {
        Ok(match self {
            ThresholdMode::Absolute { taus } => {
                SupportRule::Threshold(if taus.len() == 1 { taus[0] } else { taus[subslot] })
            }
            ThresholdMode::Relative { theta } => SupportRule::Threshold(theta * min_gain * power_ratio),
            ThresholdMode::TopK { delta } => {
                SupportRule::Largest(active_users.ok_or(SignalError::UnknownActiveCount)? + delta)
            }
        })
    }
}

/// Indices selected by `rule`, ascending.
pub fn detect_support(gamma: &[f64], rule: SupportRule) -> Vec<u32> {
    match rule {
        SupportRule::Threshold(tau) => gamma
            .iter()
            .enumerate()
            .filter(|(_, &g)| g >= tau)
            .map(|(r, _)| r as u32)
            .collect(),
        SupportRule::Largest(k) => {
            let mut order: Vec<u32> = (0..gamma.len() as u32).collect();
            order.sort_by(|&a, &b| gamma[b as usize].total_cmp(&gamma[a as usize]).then(a.cmp(&b)));
            order.truncate(k);
            order.sort_unstable();
            order
        }
    }
}

/// Writes `subslot,index,gamma` rows (1-based subslot) for every nonzero
/// entry.
pub fn write_gamma_csv<W: Write>(w: W, gammas: &[Vec<f64>]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["subslot", "index", "gamma"])?;
    for (l, g) in gammas.iter().enumerate() {
        for (r, &v) in g.iter().enumerate().filter(|(_, &v)| v != 0.0) {
            out.write_record(&[(l + 1).to_string(), r.to_string(), format!("{v:e}")])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_above_max_is_empty() {
        assert!(detect_support(&[0.1, 0.4, 0.2], SupportRule::Threshold(0.5)).is_empty());
    }

    #[test]
    fn single_entry() {
        let mut g = vec![0.0; 16];
        g[7] = 0.9;
        assert_eq!(detect_support(&g, SupportRule::Threshold(0.5)), vec![7]);
    }

    #[test]
    fn top_k_order_statistics() {
        let mode = ThresholdMode::TopK { delta: 1 };
        let rule = mode.rule(0, 1.0, 1.0, Some(2)).unwrap();
        let g = [0.9, 0.8, 0.1, 0.0, 0.0];
        assert_eq!(detect_support(&g, rule), vec![0, 1, 2]);
        // ties go to the lower index
        assert_eq!(detect_support(&[0.0, 0.5, 0.5, 0.5], SupportRule::Largest(2)), vec![1, 2]);
    }

    #[test]
    fn top_k_needs_active_count() {
        let mode = ThresholdMode::TopK { delta: 1 };
        assert_eq!(mode.rule(0, 1.0, 1.0, None), Err(SignalError::UnknownActiveCount));
    }

    #[test]
    fn relative_and_absolute_rules() {
        let rel = ThresholdMode::Relative { theta: 0.5 };
        assert_eq!(rel.rule(3, 0.8, 2.0, None).unwrap(), SupportRule::Threshold(0.8));
        let abs = ThresholdMode::Absolute { taus: vec![0.1, 0.2] };
        assert_eq!(abs.rule(1, 9.0, 9.0, None).unwrap(), SupportRule::Threshold(0.2));
    }

    #[test]
    fn gamma_csv() {
        let mut buf = Vec::new();
        write_gamma_csv(&mut buf, &[vec![0.0, 1.5], vec![0.25, 0.0]]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "subslot,index,gamma\n1,1,1.5e0\n2,0,2.5e-1\n");
    }
}
