use crate::dataset::PreferenceLabel;

use super::{ScorerError, ScoringModel};

/// Softmax over two scores, evaluated after subtracting the larger score.
pub fn pair_probs(s1: f64, s2: f64) -> [f64; 2] {
    let m = s1.max(s2);
    let e1 = (s1 - m).exp();
    let e2 = (s2 - m).exp();
    let z = e1 + e2;
    [e1 / z, e2 / z]
}

/// Scores both items for the prompt and returns their softmax probabilities.
pub fn model_pair_probs(
    model: &ScoringModel,
    prompt_vec: &[f64],
    item_1: &[f64],
    item_2: &[f64],
) -> Result<[f64; 2], ScorerError> {
    let s1 = model.score(prompt_vec, item_1)?;
    let s2 = model.score(prompt_vec, item_2)?;
    Ok(pair_probs(s1, s2))
}

/// `log(sum(exp(xs)))` without overflow.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `sum_i p_i log p_i` with `0 log 0 = 0`.
pub(crate) fn neg_entropy(p: [f64; 2]) -> f64 {
    p.iter().filter(|&&pi| pi > 0.0).map(|pi| pi * pi.ln()).sum()
}

/// KL divergence from the target preference distribution to the predicted one.
///
/// Predicted probabilities of exactly 0 or 1 are rejected: they only arise
/// from saturated scores and make the divergence meaningless.
pub fn pref_loss(p: PreferenceLabel, p_hat: [f64; 2]) -> Result<f64, ScorerError> {
    let valid = p_hat.iter().all(|&q| q > 0.0 && q < 1.0) && (p_hat[0] + p_hat[1] - 1.0).abs() <= 1e-9;
    if !valid {
        return Err(ScorerError::InvalidProbabilities(p_hat));
    }
    let p = p.probs();
    let cross: f64 = p.iter().zip(&p_hat).map(|(pi, qi)| pi * qi.ln()).sum();
    Ok((neg_entropy(p) - cross).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values computed with 50-digit arithmetic (mpmath):
    //   1 / (1 + e^-1)                          = 0.731058578630004879...
    //   0.5 ln(0.25 / (0.73106 * 0.26894))     = 0.120116177361920412...
    const SIGMOID_ONE: f64 = 0.731_058_578_630_004_9;
    const KL_TIE_VS_ROUNDED: f64 = 0.120_116_177_361_920_4;

    #[test]
    fn equal_scores_split_evenly() {
        assert_eq!(pair_probs(2.5, 2.5), [0.5, 0.5]);
    }

    #[test]
    fn unit_gap_matches_sigmoid() {
        let [a, b] = pair_probs(1.0, 0.0);
        assert!((a - SIGMOID_ONE).abs() < 1e-15);
        assert!((b - (1.0 - SIGMOID_ONE)).abs() < 1e-15);
        assert!((a - 0.73106).abs() < 1e-5 && (b - 0.26894).abs() < 1e-5);
    }

    #[test]
    fn huge_gap_does_not_overflow() {
        let [a, b] = pair_probs(1000.0, 0.0);
        assert!(a.is_finite() && b.is_finite());
        assert!((a - 1.0).abs() < 1e-300 + f64::EPSILON && b < 1e-300);
    }

    #[test]
    fn kl_of_identical_is_zero() {
        assert_eq!(pref_loss(PreferenceLabel::Tie, [0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn kl_hard_label_vs_uniform_is_ln2() {
        let l = pref_loss(PreferenceLabel::First, [0.5, 0.5]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_tie_vs_skewed() {
        let l = pref_loss(PreferenceLabel::Tie, [0.73106, 0.26894]).unwrap();
        assert!((l - KL_TIE_VS_ROUNDED).abs() < 1e-10);
        assert!((l - 0.12011).abs() < 1e-4);
    }

    #[test]
    fn saturated_prediction_is_error() {
        assert!(pref_loss(PreferenceLabel::First, [1.0, 0.0]).is_err());
        assert!(pref_loss(PreferenceLabel::Second, [0.0, 1.0]).is_err());
        assert!(pref_loss(PreferenceLabel::Tie, [0.6, 0.6]).is_err());
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert!((log_sum_exp(&[0.0, 0.0, 0.0]) - 3f64.ln()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn probabilities_normalized(s1 in -50.0f64..50.0, s2 in -50.0f64..50.0) {
            let [a, b] = pair_probs(s1, s2);
            prop_assert!((a + b - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn shift_invariant(s1 in -30.0f64..30.0, s2 in -30.0f64..30.0, c in -100.0f64..100.0) {
            let p = pair_probs(s1, s2);
            let q = pair_probs(s1 + c, s2 + c);
            prop_assert!((p[0] - q[0]).abs() <= 1e-9 && (p[1] - q[1]).abs() <= 1e-9);
        }

        #[test]
        fn kl_nonnegative_zero_iff_equal(q in 0.001f64..0.999, idx in 0usize..3) {
            let label = PreferenceLabel::ALL[idx];
            let l = pref_loss(label, [q, 1.0 - q]).unwrap();
            prop_assert!(l >= 0.0);
            let matches = (q - label.probs()[0]).abs() < 1e-12;
            prop_assert_eq!(l.abs() <= 1e-12, matches);
        }
    }
}
