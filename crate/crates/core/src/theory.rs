//! Closed-form laws of the superficiality model.
//!
//! Everything here is exact arithmetic on the model parameters; nothing
//! simulates. Products of the K_i constants are evaluated as sums of
//! logarithms because they overflow f64 for relationship counts in the
//! thousands.

use crate::error::{Error, Result};

/// Distribution of the number of distinct relationships attached to an
/// entity, for n relationships at superficiality sigma.
#[derive(Clone, Debug)]
pub struct RelationshipCountDistribution {
    pub n: u32,
    pub sigma: f64,
    k: Vec<f64>,
    p: Vec<f64>,
    log_p: Vec<f64>,
}

/// The closed form is defined for sigma = 1 (degenerate point mass) or
/// n*sigma > 1. The textbook constraint n > 1/sigma - 1 is necessary but
/// not sufficient for integer n: it admits cells where n*sigma <= 1 and
/// the constants K_i = (1-sigma)/(n*sigma-1)*(n-i) turn negative or
/// infinite, so the strict product form is enforced here.
pub fn distribution_defined(n: u32, sigma: f64) -> bool {
    n >= 1 && (sigma == 1.0 || (sigma > 0.0 && (n as f64) * sigma > 1.0))
}

pub(crate) fn constraint_error(n: u32, sigma: f64) -> Error {
    let bound = 1.0 / sigma - 1.0;
    if (n as f64) <= bound {
        Error::domain(format!(
            "n = {n} with sigma = {sigma} violates the validity constraint \
             n > 1/sigma - 1 (needs n > {bound})"
        ))
    } else {
        let ns = n as f64 * sigma;
        Error::domain(format!(
            "n = {n} with sigma = {sigma} leaves n*sigma = {ns} at or below 1, \
             the singular edge of the validity constraint n > 1/sigma - 1; \
             the closed form needs n*sigma > 1"
        ))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::domain(format!(
            "superficiality must lie in (0, 1], got {sigma}"
        )));
    }
    Ok(())
}

/// P(r) = (K_1 ... K_{r-1}) / ((1+K_1) ... (1+K_r)) for r = 1..n, with
/// K_i = (1-sigma)/(n*sigma-1) * (n-i).
pub fn relationship_count_distribution(n: u32, sigma: f64) -> Result<RelationshipCountDistribution> {
    check_sigma(sigma)?;
    if n < 1 {
        return Err(Error::domain("need at least one relationship".to_string()));
    }
    if !distribution_defined(n, sigma) {
        return Err(constraint_error(n, sigma));
    }

    let n_us = n as usize;
    let mut k = vec![0.0; n_us];
    if sigma < 1.0 {
        let c = (1.0 - sigma) / (n as f64 * sigma - 1.0);
        for (i, ki) in k.iter_mut().enumerate() {
            // K_i for i = 1..n; K_n = 0 ends the support exactly at n
            *ki = c * (n as f64 - (i as f64 + 1.0));
        }
    }

    let mut log_p = vec![0.0; n_us];
    let mut log_num = 0.0;
    let mut log_den = 0.0;
    for r in 0..n_us {
        log_den += k[r].ln_1p();
        log_p[r] = log_num - log_den;
        log_num += if k[r] > 0.0 { k[r].ln() } else { f64::NEG_INFINITY };
    }
    let p = log_p.iter().map(|&l| l.exp()).collect();
    Ok(RelationshipCountDistribution { n, sigma, k, p, log_p })
}

impl RelationshipCountDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// Log probabilities, usable even where the linear values underflow in
    /// the far tail of large n.
    pub fn log_probabilities(&self) -> &[f64] {
        &self.log_p
    }

    /// K_1..K_n (the last entry is always 0).
    pub fn constants(&self) -> &[f64] {
        &self.k
    }

    /// The mode as a relationship count r in 1..=n (first index on ties).
    pub fn argmax(&self) -> u32 {
        let mut best = 0;
        for (i, &l) in self.log_p.iter().enumerate() {
            if l > self.log_p[best] {
                best = i;
            }
        }
        best as u32 + 1
    }

    /// P(r <= r_max).
    pub fn cumulative(&self, r_max: u32) -> f64 {
        self.p.iter().take(r_max as usize).sum()
    }
}

/// Proportion of entities described by at most r_max relationships.
pub fn misdescribed_proportion(n: u32, sigma: f64, r_max: u32) -> Result<f64> {
    if r_max < 1 || r_max > n {
        return Err(Error::domain(format!(
            "r_max = {r_max} outside 1..={n}"
        )));
    }
    Ok(relationship_count_distribution(n, sigma)?.cumulative(r_max))
}

/// Limit of `misdescribed_proportion` as the relationship count grows:
/// 1 - (1-sigma)^r_max.
pub fn misdescribed_limit(sigma: f64, r_max: u32) -> f64 {
    1.0 - (1.0 - sigma).powi(r_max as i32)
}

/// Tail exponent of the degree distribution under linear preferential
/// attachment: gamma = 1 + 1/beta.
pub fn powerlaw_exponent(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!(
            "power-law exponent needs beta in (0, 1], got {beta}; \
             beta = 0 has no preferential growth"
        )));
    }
    Ok(1.0 + 1.0 / beta)
}

/// Expected maximum degree after t facts of one relationship:
/// (beta (1-beta)^(alpha-1) (1-alpha) ln t + 1)^(1/(1-alpha)), switching
/// to the analytic limit t^beta when 1-alpha vanishes (0/0 form).
pub fn mean_max_degree(alpha: f64, beta: f64, t: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    debug_assert!((0.0..1.0).contains(&beta) || beta == 0.0);
    debug_assert!(t >= 1.0);
    if 1.0 - alpha < 1e-9 {
        return t.powf(beta);
    }
    let base = beta * (1.0 - beta).powf(alpha - 1.0) * (1.0 - alpha) * t.ln() + 1.0;
    base.powf(1.0 / (1.0 - alpha))
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct HeatmapCell {
    pub n: u32,
    pub sigma: f64,
    /// None where the distribution is undefined for (n, sigma).
    pub value: Option<f64>,
}

/// Misdescribed proportions over an (n, sigma) grid, with undefined cells
/// flagged rather than erroring.
pub fn heatmap_grid(ns: &[u32], sigmas: &[f64], r_max: u32) -> Vec<HeatmapCell> {
    let mut cells = Vec::with_capacity(ns.len() * sigmas.len());
    for &sigma in sigmas {
        for &n in ns {
            let value = if distribution_defined(n, sigma) && r_max >= 1 && r_max <= n {
                misdescribed_proportion(n, sigma, r_max).ok()
            } else {
                None
            };
            cells.push(HeatmapCell { n, sigma, value });
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn degenerate_superficiality_is_a_point_mass() {
        let d = relationship_count_distribution(7, 1.0).unwrap();
        assert_eq!(d.probabilities()[0], 1.0);
        assert!(d.probabilities()[1..].iter().all(|&p| p == 0.0));
        assert!(d.constants().iter().all(|&k| k == 0.0));
        assert_eq!(d.argmax(), 1);
    }

    #[test]
    fn low_superficiality_head_rises() {
        // n=25, sigma=0.05: K_1 = 0.95/0.25*24 = 91.2, P(1) = 1/92.2,
        // and the distribution increases all the way to its mode at n.
        let d = relationship_count_distribution(25, 0.05).unwrap();
        assert!((d.constants()[0] - 91.2).abs() < 1e-12);
        assert!((d.probabilities()[0] - 0.010845986984815618).abs() < 1e-15);
        assert!((d.probabilities()[1] - 0.011189525034108428).abs() < 1e-15);
        assert!(d.probabilities()[1] > d.probabilities()[0]);
        assert_eq!(d.argmax(), 25);
        let sum: f64 = d.probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn high_superficiality_head_dominates() {
        let d = relationship_count_distribution(25, 0.95).unwrap();
        assert!((d.constants()[0] - 0.052747252747252796).abs() < 1e-15);
        assert!((d.probabilities()[0] - 0.9498956158663883).abs() < 1e-12);
        assert_eq!(d.argmax(), 1);
        for w in d.log_probabilities().windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn boundary_cell_with_unit_product_is_uniform() {
        // (1-sigma) = n*sigma - 1 makes every ratio P(r+1)/P(r) equal 1
        let d = relationship_count_distribution(3, 0.5).unwrap();
        for &p in d.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constraint_violations_cite_the_bound() {
        let err = relationship_count_distribution(10, 0.05).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n > 1/sigma - 1"), "{msg}");
        assert!(msg.contains("needs n > 19"), "{msg}");
        assert!(relationship_count_distribution(25, 0.05).is_ok());
    }

    #[test]
    fn singular_and_negative_cells_are_rejected() {
        // n = 20, sigma = 0.05 satisfies the loose constraint exactly at
        // the pole n*sigma = 1; n = 3, sigma = 0.3 passes it with
        // n*sigma < 1. Both must error, not return garbage.
        for (n, sigma) in [(20u32, 0.05), (3, 0.3)] {
            let err = relationship_count_distribution(n, sigma).unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains("n*sigma > 1"), "{msg}");
            assert!(msg.contains("n > 1/sigma - 1"), "{msg}");
        }
    }

    #[test]
    fn misdescribed_matches_its_limit_for_large_n() {
        for sigma in [0.3, 0.5, 0.7, 0.95] {
            let p = misdescribed_proportion(200, sigma, 3).unwrap();
            let lim = misdescribed_limit(sigma, 3);
            assert!((p - lim).abs() < 0.01, "sigma = {sigma}: {p} vs {lim}");
        }
    }

    #[test]
    fn limit_values_are_exact() {
        assert_eq!(misdescribed_limit(0.5, 3), 0.875);
        assert_eq!(misdescribed_limit(0.95, 3), 0.999875);
        assert_eq!(misdescribed_limit(1.0, 3), 1.0);
        assert_eq!(misdescribed_limit(1.0, 17), 1.0);
    }

    #[test]
    fn convergence_to_the_limit_is_monotone_in_n() {
        for sigma in [0.3, 0.5, 0.7, 0.95] {
            let lim = misdescribed_limit(sigma, 3);
            let mut last = f64::INFINITY;
            for n in [20, 50, 200, 1000] {
                let d = (misdescribed_proportion(n, sigma, 3).unwrap() - lim).abs();
                assert!(d <= last, "sigma = {sigma}, n = {n}");
                last = d;
            }
        }
    }

    #[test]
    fn powerlaw_exponent_values() {
        assert!((powerlaw_exponent(0.85).unwrap() - 2.1764705882352944).abs() < 1e-15);
        assert_eq!(powerlaw_exponent(0.5).unwrap(), 3.0);
        assert_eq!(powerlaw_exponent(1.0).unwrap(), 2.0);
        assert!(powerlaw_exponent(0.0).is_err());
    }

    #[test]
    fn mean_max_degree_known_points() {
        let e4 = (4.0f64).exp();
        assert!((mean_max_degree(0.5, 0.5, e4) - 5.82842712474619).abs() < 1e-9);
        assert!((mean_max_degree(1.0, 0.85, 1e6) - 125892.54117941669).abs() < 1e-6);
        assert!((mean_max_degree(0.0, 0.85, 1e6) - 79.28789316179754).abs() < 1e-9);
        for alpha in [0.0, 0.3, 0.7, 1.0] {
            for beta in [0.0, 0.5, 0.9] {
                assert_eq!(mean_max_degree(alpha, beta, 1.0), 1.0);
            }
        }
    }

    #[test]
    fn heatmap_flags_undefined_cells_and_agrees_pointwise() {
        let cells = heatmap_grid(&[10, 25], &[0.05, 0.95, 1.0], 3);
        let lookup = |n: u32, s: f64| {
            cells
                .iter()
                .find(|c| c.n == n && c.sigma == s)
                .unwrap()
                .value
        };
        assert_eq!(lookup(10, 0.05), None);
        let direct = misdescribed_proportion(25, 0.95, 3).unwrap();
        assert_eq!(lookup(25, 0.95), Some(direct));
        assert_eq!(lookup(10, 1.0), Some(1.0));
        assert_eq!(lookup(25, 1.0), Some(1.0));
    }

    /// Smallest n with n*sigma > 1 for the grid sweeps below.
    fn min_defined_n(sigma: f64) -> u32 {
        let mut n = (1.0 / sigma).ceil() as u32;
        while !distribution_defined(n, sigma) {
            n += 1;
        }
        n
    }

    proptest! {
        #[test]
        fn normalization_holds_across_the_grid(
            step in 1u32..=20,
            pick in 0usize..7,
        ) {
            let sigma = step as f64 * 0.05;
            let lo = min_defined_n(sigma);
            let candidates = [lo, lo + 1, lo + 7, 50, 200, 960, 2000];
            let n = candidates[pick].max(lo);
            let d = relationship_count_distribution(n, sigma).unwrap();
            let sum: f64 = d.probabilities().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9, "n = {}, sigma = {}: {}", n, sigma, sum);
        }

        /// The ratio P(r+1)/P(r) = K_r/(1+K_{r+1}) compares to 1 exactly as
        /// C = (1-sigma)/(n*sigma-1) does, so the whole distribution is
        /// strictly increasing (mode n), uniform, or strictly decreasing
        /// (mode 1). In particular K_1 < 1 forces the strictly decreasing
        /// shape, and any rise up to an interior mode never occurs.
        #[test]
        fn monotone_regimes_follow_the_head_constant(
            step in 1u32..20,
            pick in 0usize..5,
        ) {
            let sigma = step as f64 * 0.05;
            let lo = min_defined_n(sigma);
            let candidates = [lo, lo + 3, 25, 100, 1499];
            let n = candidates[pick].max(lo);
            let d = relationship_count_distribution(n, sigma).unwrap();
            let c = (1.0 - sigma) / (n as f64 * sigma - 1.0);
            let lp = d.log_probabilities();
            if c > 1.0 {
                for w in lp.windows(2) {
                    prop_assert!(w[1] > w[0]);
                }
                prop_assert_eq!(d.argmax(), n);
            } else if c < 1.0 {
                for w in lp.windows(2) {
                    prop_assert!(w[1] < w[0]);
                }
                prop_assert_eq!(d.argmax(), 1);
            }
            if d.constants()[0] < 1.0 {
                for w in lp.windows(2) {
                    prop_assert!(w[1] < w[0]);
                }
            }
        }
    }
}
