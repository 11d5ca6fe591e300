//! Wishart likelihood-ratio test between two averaged coherency matrices.

use crate::coherency::Coherency;

/// Scale correction `ρ = 1 − (2p² − 1)/(6p) · (1/n + 1/m − 1/(n+m))`.
pub fn rho(n: f64, m: f64, p: usize) -> f64 {
    let p = p as f64;
    1.0 - (2.0 * p * p - 1.0) / (6.0 * p) * (1.0 / n + 1.0 / m - 1.0 / (n + m))
}

/// Log of the Wishart equality-test statistic for regions with mean
/// coherencies `zi`, `zj` and look counts `n`, `m`:
///
/// `ln Q = p(n+m)ln(n+m) − pn ln n − pm ln m + n ln|Zi| + m ln|Zj| − (n+m) ln|Zi+Zj|`
///
/// For `n = m` this is `≤ 0` with equality iff `Zi = Zj`. Matrices whose
/// determinant falls below the floor are diagonally loaded first, so the
/// result is always finite. Evaluated as log-determinant differences against
/// `(Zi+Zj)/2` so that identical inputs cancel exactly.
pub fn wishart_log_ratio(zi: &Coherency, zj: &Coherency, n: f64, m: f64, p: usize) -> f64 {
    let zi = zi.regularized();
    let zj = zj.regularized();
    let ld_i = zi.ln_det().expect("regularized");
    let ld_j = zj.ln_det().expect("regularized");
    let ld_half = ((zi + zj) * 0.5).ln_det_regularized();
    let constant = if n == m {
        0.0
    } else {
        let nm = n + m;
        p as f64 * (nm * nm.ln() - n * n.ln() - m * m.ln() - nm * std::f64::consts::LN_2)
    };
    n * (ld_i - ld_half) + m * (ld_j - ld_half) + constant
}

/// CFAR edge strength `−2ρ ln Q`, clamped at zero.
pub fn cfar_statistic(zi: &Coherency, zj: &Coherency, n: f64, m: f64, p: usize) -> f64 {
    (-2.0 * rho(n, m, p) * wishart_log_ratio(zi, zj, n, m, p)).max(0.0)
}

/// `ln Q` for two regions given as means with possibly unequal sample sizes,
/// `n ln|Zi| + m ln|Zj| − (n+m) ln|Z̄|` with the pooled mean
/// `Z̄ = (n Zi + m Zj)/(n+m)`. Equal to [`wishart_log_ratio`] when `n = m`.
pub fn pooled_log_ratio(mean_i: &Coherency, n: f64, mean_j: &Coherency, m: f64) -> f64 {
    let zi = mean_i.regularized();
    let zj = mean_j.regularized();
    let ld_i = zi.ln_det().expect("regularized");
    let ld_j = zj.ln_det().expect("regularized");
    let ld_pool = ((zi * n + zj * m) * (1.0 / (n + m))).ln_det_regularized();
    n * (ld_i - ld_pool) + m * (ld_j - ld_pool)
}

/// `−2ρ ln Q` from [`pooled_log_ratio`], clamped at zero.
pub fn pooled_statistic(mean_i: &Coherency, n: f64, mean_j: &Coherency, m: f64, p: usize) -> f64 {
    (-2.0 * rho(n, m, p) * pooled_log_ratio(mean_i, n, mean_j, m)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::tests::random_psd;
    use crate::coherency::CHANNELS;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independent oracle: plain determinants through the full complex matrix
    // (Leibniz expansion), no LDL, no regularization.
    fn det_leibniz(t: &Coherency) -> f64 {
        let m = t.to_matrix();
        let d = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        d.re
    }

    fn ln_q_oracle(zi: &Coherency, zj: &Coherency, n: f64, m: f64) -> f64 {
        let p = 3.0;
        p * ((n + m) * (n + m).ln() - n * n.ln() - m * m.ln())
            + n * det_leibniz(zi).ln()
            + m * det_leibniz(zj).ln()
            - (n + m) * det_leibniz(&(*zi + *zj)).ln()
    }

    #[test]
    fn identical_regions_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = random_psd(&mut rng);
        assert!(wishart_log_ratio(&z, &z, 7.0, 7.0, CHANNELS).abs() < 1e-10);
    }

    #[test]
    fn identity_vs_four_identity() {
        let (a, b) = (Coherency::identity(), Coherency::identity() * 4.0);
        let got = wishart_log_ratio(&a, &b, 4.0, 4.0, 3);
        // 24 ln 8 − 24 ln 4 + 4·0 + 4·3 ln 4 − 8·3 ln 5
        let want = 24.0 * 8f64.ln() - 24.0 * 4f64.ln() + 12.0 * 4f64.ln() - 24.0 * 5f64.ln();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!((got - ln_q_oracle(&a, &b, 4.0, 4.0)).abs() < 1e-9);
    }

    #[test]
    fn symmetric_for_equal_looks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (a, b) = (random_psd(&mut rng), random_psd(&mut rng));
        let x = wishart_log_ratio(&a, &b, 5.0, 5.0, 3);
        let y = wishart_log_ratio(&b, &a, 5.0, 5.0, 3);
        assert!((x - y).abs() < 1e-10);
        assert!(x <= 0.0);
    }

    #[test]
    fn matches_oracle_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a = random_psd(&mut rng) * 0.5;
            let b = random_psd(&mut rng) * 0.5;
            let n = rng.random_range(1..6) as f64;
            let got = wishart_log_ratio(&a, &b, n, n, 3);
            let want = ln_q_oracle(&a, &b, n, n);
            assert!((got - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn congruence_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (a, b) = (random_psd(&mut rng), random_psd(&mut rng));
            let mut t = [[Complex64::new(0.0, 0.0); 3]; 3];
            for row in t.iter_mut() {
                for c in row.iter_mut() {
                    *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
            let x = wishart_log_ratio(&a, &b, 6.0, 6.0, 3);
            let y = wishart_log_ratio(&a.congruence(&t), &b.congruence(&t), 6.0, 6.0, 3);
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn singular_inputs_stay_finite() {
        let z = Coherency::ZERO;
        let r = wishart_log_ratio(&z, &z, 4.0, 4.0, 3);
        assert!(r.is_finite() && r.abs() < 1e-9);
        let a = Coherency::diag(1.0, 0.0, 0.0);
        let b = Coherency::diag(0.0, 1.0, 0.0);
        let r = wishart_log_ratio(&a, &b, 4.0, 4.0, 3);
        assert!(r.is_finite() && r < 0.0);
    }

    #[test]
    fn pooled_agrees_for_equal_counts_and_is_nonpositive() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (a, b) = (random_psd(&mut rng), random_psd(&mut rng));
            let x = pooled_log_ratio(&a, 9.0, &b, 9.0);
            let y = wishart_log_ratio(&a, &b, 9.0, 9.0, 3);
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
            // unequal counts: sums fed to the literal formula
            let (n, m) = (
                rng.random_range(2..40) as f64,
                rng.random_range(2..40) as f64,
            );
            let x = pooled_log_ratio(&a, n, &b, m);
            let y = ln_q_oracle(&(a * n), &(b * m), n, m);
            assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "{x} vs {y}");
            assert!(x <= 1e-9);
        }
        let z = Coherency::diag(1.0, 2.0, 3.0);
        assert_eq!(pooled_statistic(&z, 7.0, &z, 7.0, 3), 0.0);
    }

    #[test]
    fn rho_for_four_looks() {
        // 1 − 17/18 · 3/8
        assert!((rho(4.0, 4.0, 3) - (1.0 - 17.0 / 18.0 * 0.375)).abs() < 1e-15);
    }
}
