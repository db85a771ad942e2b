use crate::error::{Error, Result};

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(what, format!("{p} is not a probability")))
    }
}

fn check_all(prior: f64, miss: f64, false_alarm: f64) -> Result<()> {
    check_probability("prior Q^L", prior)?;
    check_probability("miss probability Q^m", miss)?;
    check_probability("false-alarm probability Q^f", false_alarm)
}

/// `P¹ = Q^L(1−Q^m) / (Q^L(1−Q^m) + (1−Q^L)Q^f)`: probability that a
/// sub-channel the fusion center flags as busy really is busy.
pub fn posterior_occupied(prior: f64, miss: f64, false_alarm: f64) -> Result<f64> {
    check_all(prior, miss, false_alarm)?;
    let busy = prior * (1.0 - miss);
    let denom = busy + (1.0 - prior) * false_alarm;
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!(
            "P¹ denominator vanishes (Q^L={prior}, Q^m={miss}, Q^f={false_alarm})"
        )));
    }
    Ok(busy / denom)
}

/// Complement of [`posterior_occupied`]: probability the PU is absent given a
/// busy verdict, computed from the false-alarm branch.
pub fn posterior_idle_given_busy(prior: f64, miss: f64, false_alarm: f64) -> Result<f64> {
    check_all(prior, miss, false_alarm)?;
    let idle = (1.0 - prior) * false_alarm;
    let denom = prior * (1.0 - miss) + idle;
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!(
            "P(H0|S1) denominator vanishes (Q^L={prior}, Q^m={miss}, Q^f={false_alarm})"
        )));
    }
    Ok(idle / denom)
}

/// `P² = Q^L·Q^m / (Q^L·Q^m + (1−Q^L)(1−Q^f))`: probability that a
/// sub-channel declared available is in fact occupied.
pub fn posterior_missed(prior: f64, miss: f64, false_alarm: f64) -> Result<f64> {
    check_all(prior, miss, false_alarm)?;
    let missed = prior * miss;
    let denom = missed + (1.0 - prior) * (1.0 - false_alarm);
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!(
            "P² denominator vanishes (Q^L={prior}, Q^m={miss}, Q^f={false_alarm})"
        )));
    }
    Ok(missed / denom)
}

/// Probability that at least `k` of the independent events with the given
/// probabilities occur (Poisson-binomial tail).
fn at_least_k(probs: &[f64], k: usize) -> f64 {
    // dist[c] = P(exactly c events among those processed so far)
    let mut dist = vec![0.0; probs.len() + 1];
    dist[0] = 1.0;
    for (n, &p) in probs.iter().enumerate() {
        for c in (1..=n + 1).rev() {
            dist[c] = dist[c] * (1.0 - p) + dist[c - 1] * p;
        }
        dist[0] *= 1.0 - p;
    }
    dist[k..].iter().sum::<f64>().min(1.0)
}

/// Fuses independent local verdicts with a `k`-out-of-`n` rule.
///
/// Returns `(fused_miss, fused_false_alarm)`, where the fused detection
/// probability is `P(at least k detectors fire | PU present)` and the fused
/// false alarm is the same tail under `PU absent`.
pub fn fuse_k_out_of_n(detection: &[f64], false_alarm: &[f64], k: usize) -> Result<(f64, f64)> {
    let n = detection.len();
    if n == 0 {
        return Err(Error::domain("k-out-of-n fusion", "no local detectors"));
    }
    if false_alarm.len() != n {
        return Err(Error::domain(
            "k-out-of-n fusion",
            format!("{n} detection but {} false-alarm probabilities", false_alarm.len()),
        ));
    }
    if k == 0 || k > n {
        return Err(Error::domain("k-out-of-n fusion", format!("k = {k} not in 1..={n}")));
    }
    for &p in detection {
        check_probability("local detection probability", p)?;
    }
    for &p in false_alarm {
        check_probability("local false-alarm probability", p)?;
    }
    let fused_detection = at_least_k(detection, k);
    let fused_false_alarm = at_least_k(false_alarm, k);
    Ok((1.0 - fused_detection, fused_false_alarm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Sums the probability of every outcome vector with at least `k` hits.
    fn enumerate_tail(probs: &[f64], k: usize) -> f64 {
        let n = probs.len();
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() as usize >= k)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { probs[i] } else { 1.0 - probs[i] })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn posterior_occupied_examples() {
        assert_eq!(posterior_occupied(0.4, 0.02, 0.0).unwrap(), 1.0);
        assert_eq!(posterior_occupied(0.0, 0.02, 0.1).unwrap(), 0.0);
        // 0.3·0.95 / (0.285 + 0.7·0.1)
        assert_abs_diff_eq!(
            posterior_occupied(0.3, 0.05, 0.1).unwrap(),
            0.285 / 0.355,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(posterior_occupied(0.3, 0.05, 0.1).unwrap(), 0.80282, epsilon = 5e-6);
    }

    #[test]
    fn posterior_missed_examples() {
        assert_eq!(posterior_missed(0.3, 0.0, 0.1).unwrap(), 0.0);
        assert_eq!(posterior_missed(1.0, 0.03, 0.4).unwrap(), 1.0);
        assert_abs_diff_eq!(
            posterior_missed(0.3, 0.05, 0.1).unwrap(),
            0.015 / 0.645,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(posterior_missed(0.3, 0.05, 0.1).unwrap(), 0.023256, epsilon = 5e-7);
    }

    #[test]
    fn degenerate_denominators() {
        assert!(matches!(posterior_occupied(0.0, 0.1, 0.0), Err(Error::Degenerate(_))));
        assert!(matches!(posterior_missed(1.0, 0.0, 0.3), Err(Error::Degenerate(_))));
        assert!(matches!(posterior_occupied(1.2, 0.1, 0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn fusion_examples() {
        let (qm, _) = fuse_k_out_of_n(&[1.0; 3], &[0.1; 3], 2).unwrap();
        assert_eq!(qm, 0.0);

        // Enumeration over the 2³ outcomes: 3·0.9²·0.1 + 0.9³ = 0.972.
        let (qm, qf) = fuse_k_out_of_n(&[0.9; 3], &[0.1; 3], 2).unwrap();
        assert_abs_diff_eq!(1.0 - qm, 0.972, epsilon = 1e-12);
        assert_abs_diff_eq!(qm, 0.028, epsilon = 1e-12);
        assert_abs_diff_eq!(qf, 3.0 * 0.01 * 0.9 + 0.001, epsilon = 1e-12);

        let (qm, qf) = fuse_k_out_of_n(&[0.83], &[0.07], 1).unwrap();
        assert_abs_diff_eq!(qm, 0.17, epsilon = 1e-15);
        assert_abs_diff_eq!(qf, 0.07, epsilon = 1e-15);
    }

    #[test]
    fn fusion_rejects_bad_input() {
        assert!(fuse_k_out_of_n(&[], &[], 1).is_err());
        assert!(fuse_k_out_of_n(&[0.5, 0.5], &[0.1, 0.1], 3).is_err());
        assert!(fuse_k_out_of_n(&[0.5], &[0.1], 0).is_err());
        assert!(fuse_k_out_of_n(&[0.5], &[0.1, 0.2], 1).is_err());
    }

    proptest! {
        #[test]
        fn posteriors_complement(prior in 0.0f64..=1.0, miss in 0.0f64..=1.0, fa in 0.001f64..=1.0) {
            let busy = posterior_occupied(prior, miss, fa).unwrap();
            let idle = posterior_idle_given_busy(prior, miss, fa).unwrap();
            prop_assert!((busy + idle - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn fusion_matches_enumeration(
            probs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..9),
            k_frac in 0.0f64..1.0,
        ) {
            let pd: Vec<f64> = probs.iter().map(|p| p.0).collect();
            let pf: Vec<f64> = probs.iter().map(|p| p.1).collect();
            let k = 1 + ((pd.len() as f64) * k_frac) as usize;
            let k = k.min(pd.len());
            let (qm, qf) = fuse_k_out_of_n(&pd, &pf, k).unwrap();
            prop_assert!((1.0 - qm - enumerate_tail(&pd, k)).abs() <= 1e-12);
            prop_assert!((qf - enumerate_tail(&pf, k)).abs() <= 1e-12);
        }
    }
}
