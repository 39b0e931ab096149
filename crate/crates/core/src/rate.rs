//! Closed-form entropies and rate predictions for the latent table model.
//!
//! All entropies are in bits. Rates are per-symbol fractions of the raw cost
//! `log2 |X|`; each `*_rate` function clamps to `[0, 1]` and a `raw` variant
//! returns the unclamped value.

use crate::error::{param, Result};
use crate::model::{Alphabet, ModelParams, SbmParams};

/// `h(eps)` in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return param(format!("{eps} is not a probability"));
    }
    Ok(h2(eps))
}

fn h2(eps: f64) -> f64 {
    if eps <= 0.0 || eps >= 1.0 {
        0.0
    } else {
        -eps * eps.log2() - (1.0 - eps) * (1.0 - eps).log2()
    }
}

/// Shannon entropy of a probability vector, in bits.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() || p.iter().any(|&x| !(x >= 0.0)) {
        return param("probability vector must be non-empty and non-negative");
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return param(format!("probability vector sums to {s}"));
    }
    Ok(entropy_unchecked(p))
}

pub(crate) fn entropy_unchecked(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `H(X | U = u, V)`.
pub fn cond_entropy_xuv_given_u(params: &ModelParams, u: usize) -> f64 {
    (0..params.latent_size_c())
        .map(|v| params.q_c()[v] * entropy_unchecked(params.cond(u, v)))
        .sum()
}

/// `H(X | U = u)`, using the column-mixed law `sum_v q_c(v) Q(. | u, v)`.
pub fn cond_entropy_xu_given_u(params: &ModelParams, u: usize) -> f64 {
    let a = params.alphabet().len();
    let mut mix = vec![0.0; a];
    for v in 0..params.latent_size_c() {
        let w = params.q_c()[v];
        for (acc, &p) in mix.iter_mut().zip(params.cond(u, v)) {
            *acc += w * p;
        }
    }
    entropy_unchecked(&mix)
}

/// `H(X | U, V)`.
pub fn cond_entropy_xuv(params: &ModelParams) -> f64 {
    (0..params.latent_size_r())
        .map(|u| params.q_r()[u] * cond_entropy_xuv_given_u(params, u))
        .sum()
}

/// `H(X | U)`.
pub fn cond_entropy_xu(params: &ModelParams) -> f64 {
    (0..params.latent_size_r())
        .map(|u| params.q_r()[u] * cond_entropy_xu_given_u(params, u))
        .sum()
}

fn normalizer(a: Alphabet) -> f64 {
    a.bits_per_symbol()
}

fn clamp_rate(r: f64) -> f64 {
    r.clamp(0.0, 1.0)
}

/// Unclamped ideal rate: `(H(X|U,V) + H(U)/n + H(V)/m + 1/(mn)) / log2|X|`.
pub fn ideal_rate_raw(params: &ModelParams, m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return param("m and n must be at least 1");
    }
    if params.alphabet().size() < 2 {
        return param("rates need an alphabet of at least two symbols");
    }
    let (mf, nf) = (m as f64, n as f64);
    let h_plus = cond_entropy_xuv(params)
        + entropy_unchecked(params.q_r()) / nf
        + entropy_unchecked(params.q_c()) / mf;
    Ok((h_plus + 1.0 / (mf * nf)) / normalizer(params.alphabet()))
}

pub fn ideal_rate(params: &ModelParams, m: usize, n: usize) -> Result<f64> {
    ideal_rate_raw(params, m, n).map(clamp_rate)
}

/// Finite-state lower bound, split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsBound {
    /// `max(0, leading - correction)`.
    pub bound: f64,
    /// `H(X|U) / log2|X|`.
    pub leading: f64,
    /// `10 sqrt(ln|S| / (n ln|X|)) ln(n ln|S|)`, natural logs throughout.
    pub correction: f64,
}

pub fn fs_lower_bound(params: &ModelParams, sigma_size: u64, n: usize) -> Result<FsBound> {
    let a = params.alphabet().size();
    if a < 2 {
        return param("rates need an alphabet of at least two symbols");
    }
    if sigma_size < a as u64 {
        return param(format!("state count {sigma_size} is below the alphabet size {a}"));
    }
    if n == 0 {
        return param("n must be at least 1");
    }
    let leading = cond_entropy_xu(params) / normalizer(params.alphabet());
    let ls = (sigma_size as f64).ln();
    let nf = n as f64;
    let inner = (nf * ls).ln();
    let correction = 10.0 * (ls / (nf * (a as f64).ln())).sqrt() * inner.max(0.0);
    Ok(FsBound { bound: (leading - correction).max(0.0), leading, correction })
}

/// Per-latent asymptotic LZ rate in bits:
/// `min(H(X|U=u), ((1+alpha)/alpha) H(X|U=u,V))`.
pub fn lz_asymptotic_rate_given_u(params: &ModelParams, u: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return param(format!("alpha must be positive, got {alpha}"));
    }
    let first = cond_entropy_xu_given_u(params, u);
    let second = (1.0 + alpha) / alpha * cond_entropy_xuv_given_u(params, u);
    Ok(first.min(second))
}

pub fn lz_asymptotic_rate_raw(params: &ModelParams, alpha: f64) -> Result<f64> {
    if params.alphabet().size() < 2 {
        return param("rates need an alphabet of at least two symbols");
    }
    let mut total = 0.0;
    for u in 0..params.latent_size_r() {
        total += params.q_r()[u] * lz_asymptotic_rate_given_u(params, u, alpha)?;
    }
    Ok(total / normalizer(params.alphabet()))
}

pub fn lz_asymptotic_rate(params: &ModelParams, alpha: f64) -> Result<f64> {
    lz_asymptotic_rate_raw(params, alpha).map(clamp_rate)
}

/// Aspect exponent `log m / log n`; 1 when `m = n` (including `m = n = 1`).
pub fn aspect_exponent(m: usize, n: usize) -> f64 {
    if m == n {
        return 1.0;
    }
    (m as f64).ln() / (n as f64).ln()
}

/// Threshold between the skinny- and fat-table LZ regimes for latent `u`.
pub fn alpha_star(params: &ModelParams, u: usize) -> f64 {
    let given_v = cond_entropy_xuv_given_u(params, u);
    let marginal = cond_entropy_xu_given_u(params, u);
    let gap = marginal - given_v;
    if gap <= 1e-15 {
        f64::INFINITY
    } else {
        given_v / gap
    }
}

/// Fano correction `h(eps) + eps log2(|L| - 1)`.
pub fn fano_delta(eps: f64, latent_size: usize) -> Result<f64> {
    if latent_size == 0 {
        return param("latent size must be at least 1");
    }
    if latent_size == 1 {
        return Ok(0.0);
    }
    Ok(binary_entropy(eps)? + eps * ((latent_size - 1) as f64).log2())
}

/// SBM rate predictions at aspect exponent `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    pub ideal: f64,
    pub fs_lower: f64,
    pub lz: f64,
    pub alpha: f64,
}

/// Asymptotic optimal, finite-state and LZ rates for the symmetric binary
/// model: `h_bar(p0,p1)`, `h(p_bar)` and `h(p_bar) ^ ((1+a)/a) h_bar`.
pub fn sbm_rate_triple(p0: f64, p1: f64, k: usize, alpha: f64) -> Result<RatePrediction> {
    let params = SbmParams::new(p0, p1, k)?.to_model();
    Ok(RatePrediction {
        ideal: clamp_rate(cond_entropy_xuv(&params)),
        fs_lower: clamp_rate(cond_entropy_xu(&params)),
        lz: lz_asymptotic_rate(&params, alpha)?,
        alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coder {
    Lz,
    Ac,
    Ans,
}

/// Additive constant used in the ANS redundancy envelope, in bits.
///
/// Covers the 32-bit final state, the 16-bit renormalization slack, the
/// length prefix of the count table, per-symbol varint rounding of the counts
/// (`8 + 8/7 log2 N` bits each, the log part being inside the
/// `2|X| log2 N` term), and an allowance for quantizing frequencies to a
/// `2^12` denominator. Measured over random sources this total is never
/// approached; see the codec tests.
pub fn ans_overhead_constant(alphabet: Alphabet) -> f64 {
    32.0 + 16.0 + 16.0 + 8.0 * alphabet.size() as f64 + 128.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RedundancyBound {
    /// Worst-case redundancy per symbol, as a fraction of `log2 |X|`.
    Value(f64),
    /// The bound does not apply at this `N`; `min_n` is where it starts to.
    NotApplicable { min_n: f64 },
}

/// Worst-case redundancy bounds of the base coders over i.i.d. sources
/// drawn from `dists`.
///
/// LZ: `40 c* (ln ln N / ln N)^(1/2)` for `N >= exp(sup (4 ln(2/H(q)))^2)`
/// with `H` in bits and `c* = sup_q sum_x (ln q(x))^2 / |X|`.
/// AC: `(2|X| / log2|X|) log2 N / N`.
/// ANS: `(2|X| log2 N + C) / N` with `C` from [`ans_overhead_constant`].
pub fn redundancy_bound(coder: Coder, n_symbols: u64, alphabet: Alphabet, dists: &[Vec<f64>]) -> Result<RedundancyBound> {
    if n_symbols < 2 {
        return param("N must be at least 2");
    }
    let a = alphabet.size() as f64;
    let nf = n_symbols as f64;
    match coder {
        Coder::Ac => {
            if alphabet.size() < 2 {
                return param("AC bound needs |X| >= 2");
            }
            Ok(RedundancyBound::Value(2.0 * a / a.log2() * nf.log2() / nf))
        }
        Coder::Ans => Ok(RedundancyBound::Value(
            (2.0 * a * nf.log2() + ans_overhead_constant(alphabet)) / nf,
        )),
        Coder::Lz => {
            if dists.is_empty() {
                return param("LZ bound needs at least one distribution");
            }
            let mut c_star: f64 = 0.0;
            let mut exponent: f64 = 0.0;
            for q in dists {
                if q.len() != alphabet.len() {
                    return param("distribution length differs from the alphabet");
                }
                let spread: f64 = q.iter().map(|&p| p.ln().powi(2)).sum::<f64>() / a;
                c_star = c_star.max(spread);
                let h = entropy(q)?;
                exponent = exponent.max((4.0 * (2.0 / h).ln()).powi(2));
            }
            let min_n = exponent.exp();
            if !c_star.is_finite() || !(nf >= min_n) {
                return Ok(RedundancyBound::NotApplicable { min_n });
            }
            let ln_n = nf.ln();
            Ok(RedundancyBound::Value(40.0 * c_star * (ln_n.ln() / ln_n).sqrt()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sbm_params;
    use approx::assert_abs_diff_eq;

    // Frozen by direct evaluation of the closed forms (Python/mpmath).
    const H_0_11: f64 = 0.499_915_958_164_528;
    const H_BAR_005_05_K3: f64 = 0.524_264_638_077_304_2;
    const H_0_2: f64 = 0.721_928_094_887_362_3;
    const H_0_01: f64 = 0.080_793_135_895_911_18;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(binary_entropy(0.11).unwrap(), H_0_11, epsilon = 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(entropy(&[0.125; 8]).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(entropy(&[0.25, 0.75]).unwrap(), binary_entropy(0.25).unwrap(), epsilon = 1e-15);
        assert!(entropy(&[0.5, 0.4]).is_err());
        assert!(entropy(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn conditional_entropies() {
        for k in 1..5 {
            let p = sbm_params(0.5, 0.5, k).unwrap();
            assert_abs_diff_eq!(cond_entropy_xuv(&p), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(cond_entropy_xu(&p), 1.0, epsilon = 1e-12);
            let p = sbm_params(0.3, 0.3, k).unwrap();
            let h = binary_entropy(0.3).unwrap();
            assert_abs_diff_eq!(cond_entropy_xuv(&p), h, epsilon = 1e-12);
            assert_abs_diff_eq!(cond_entropy_xu(&p), h, epsilon = 1e-12);
        }
        let p = sbm_params(0.05, 0.5, 3).unwrap();
        assert_abs_diff_eq!(cond_entropy_xuv(&p), H_BAR_005_05_K3, epsilon = 1e-12);
        assert_abs_diff_eq!(cond_entropy_xu(&p), H_0_2, epsilon = 1e-12);
        assert_abs_diff_eq!(cond_entropy_xuv_given_u(&p, 1), H_BAR_005_05_K3, epsilon = 1e-12);
    }

    #[test]
    fn ideal_rate_values() {
        let p = sbm_params(0.5, 0.5, 3).unwrap();
        assert!(ideal_rate_raw(&p, 1000, 1000).unwrap() > 1.0);
        assert_eq!(ideal_rate(&p, 1000, 1000).unwrap(), 1.0);

        let p = ModelParams::iid(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ideal_rate(&p, 10, 20).unwrap(), 1.0 / (200.0 * 2.0), epsilon = 1e-15);

        let p = sbm_params(0.05, 0.5, 3).unwrap();
        assert_abs_diff_eq!(ideal_rate(&p, 1 << 20, 1 << 20).unwrap(), H_BAR_005_05_K3, epsilon = 1e-5);
    }

    #[test]
    fn fs_bound_leading_term() {
        let p = sbm_params(0.5, 0.5, 2).unwrap();
        assert_abs_diff_eq!(fs_lower_bound(&p, 2, 100).unwrap().leading, 1.0, epsilon = 1e-12);
        let p = sbm_params(0.05, 0.5, 3).unwrap();
        let b = fs_lower_bound(&p, 1024, 1000).unwrap();
        assert_abs_diff_eq!(b.leading, H_0_2, epsilon = 1e-12);
        assert!(b.bound <= b.leading && b.bound >= 0.0);
        for (p0, p1, k) in [(0.1, 0.7, 2), (0.2, 0.9, 4), (0.6, 0.1, 5)] {
            let pbar = (k as f64 - 1.0) / k as f64 * p0 + p1 / k as f64;
            let lead = fs_lower_bound(&sbm_params(p0, p1, k).unwrap(), 4, 10).unwrap().leading;
            assert_abs_diff_eq!(lead, binary_entropy(pbar).unwrap(), epsilon = 1e-12);
        }
        assert!(fs_lower_bound(&p, 1, 10).is_err());
    }

    #[test]
    fn lz_rate_values() {
        for alpha in [0.2, 1.0, 5.0] {
            let p = sbm_params(0.2, 0.2, 3).unwrap();
            assert_abs_diff_eq!(lz_asymptotic_rate(&p, alpha).unwrap(), binary_entropy(0.2).unwrap(), epsilon = 1e-12);
        }
        let p = sbm_params(0.05, 0.5, 3).unwrap();
        assert_abs_diff_eq!(lz_asymptotic_rate(&p, 1.0).unwrap(), H_0_2, epsilon = 1e-12);
        let p = sbm_params(0.01, 0.99, 2).unwrap();
        assert_abs_diff_eq!(lz_asymptotic_rate(&p, 1.0).unwrap(), 2.0 * H_0_01, epsilon = 1e-12);
        assert!(lz_asymptotic_rate(&p, 0.0).is_err());
    }

    #[test]
    fn alpha_star_values() {
        assert_eq!(alpha_star(&sbm_params(0.3, 0.3, 3).unwrap(), 0), f64::INFINITY);
        let p = sbm_params(0.05, 0.5, 3).unwrap();
        for u in 0..3 {
            assert_abs_diff_eq!(alpha_star(&p, u), H_BAR_005_05_K3 / (H_0_2 - H_BAR_005_05_K3), epsilon = 1e-9);
        }
        // Deterministic given (u, v), random given u alone.
        let p = sbm_params(0.0, 1.0, 2).unwrap();
        assert_eq!(alpha_star(&p, 0), 0.0);
    }

    #[test]
    fn fano_values() {
        assert_eq!(fano_delta(0.0, 5).unwrap(), 0.0);
        assert_abs_diff_eq!(fano_delta(0.5, 2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fano_delta(0.1, 4).unwrap(), 0.627_491_843_661_396_9, epsilon = 1e-12);
        assert_eq!(fano_delta(0.3, 1).unwrap(), 0.0);
    }

    #[test]
    fn rate_triples() {
        let r = sbm_rate_triple(0.5, 0.5, 3, 1.0).unwrap();
        assert_eq!((r.ideal, r.fs_lower, r.lz), (1.0, 1.0, 1.0));
        let r = sbm_rate_triple(0.05, 0.5, 3, 1.0).unwrap();
        assert_abs_diff_eq!(r.ideal, H_BAR_005_05_K3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.fs_lower, H_0_2, epsilon = 1e-12);
        assert_abs_diff_eq!(r.lz, H_0_2, epsilon = 1e-12);
        let r = sbm_rate_triple(0.01, 0.99, 2, 1.0).unwrap();
        assert_abs_diff_eq!(r.ideal, H_0_01, epsilon = 1e-12);
        assert_abs_diff_eq!(r.fs_lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.lz, 2.0 * H_0_01, epsilon = 1e-12);
    }

    #[test]
    fn redundancy_bounds() {
        let a4 = Alphabet::new(4).unwrap();
        match redundancy_bound(Coder::Ans, 100_000, a4, &[]).unwrap() {
            RedundancyBound::Value(v) => {
                let expect = (8.0 * 1e5f64.log2() + ans_overhead_constant(a4)) / 1e5;
                assert_abs_diff_eq!(v, expect, epsilon = 1e-15);
            }
            other => panic!("{other:?}"),
        }
        match redundancy_bound(Coder::Ac, 1_000_000, Alphabet::new(2).unwrap(), &[]).unwrap() {
            RedundancyBound::Value(v) => assert_abs_diff_eq!(v, 7.972_627_427_729_669e-5, epsilon = 1e-15),
            other => panic!("{other:?}"),
        }
        let dists = vec![vec![0.5, 0.5]];
        let a2 = Alphabet::new(2).unwrap();
        // sup (4 ln 2)^2 = 7.69, so the bound starts at N = e^7.69 ~ 2180.
        assert!(matches!(
            redundancy_bound(Coder::Lz, 1000, a2, &dists).unwrap(),
            RedundancyBound::NotApplicable { .. }
        ));
        assert!(matches!(redundancy_bound(Coder::Lz, 10_000, a2, &dists).unwrap(), RedundancyBound::Value(_)));
    }
}
