//! Discrete distribution draws on a deterministic stream.
//!
//! Every routine consumes a fixed, documented pattern of words from the
//! supplied [`RandomStream`], so results are reproducible byte for byte from
//! a seed. Poisson draws are exact for any finite rate: sequential-search
//! inversion below rate 10 and Hörmann's transformed rejection with squeeze
//! (PTRS, 1993) above it, the same split used by the major numeric stacks.
//! No normal approximation anywhere.

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::special::ln_gamma;

/// Rate threshold between Poisson inversion and PTRS.
const POISSON_INVERSION_MAX: f64 = 10.0;

/// Tolerance for Bernoulli probabilities that exceed one by rounding alone.
const BERNOULLI_SLACK: f64 = 1e-12;

/// Draws a Poisson variate with the given rate.
///
/// Rate zero returns 0 without consuming stream words. Rates below
/// [`POISSON_INVERSION_MAX`] use sequential-search inversion (one uniform);
/// larger rates use PTRS, which is exact and O(1) expected time for rates
/// beyond 1e7 and more.
pub fn poisson_draw(rate: f64, rng: &mut RandomStream) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::ParamDomain {
            what: "poisson rate",
            value: rate,
        });
    }
    if rate == 0.0 {
        return Ok(0);
    }
    if rate < POISSON_INVERSION_MAX {
        Ok(poisson_inversion(rate, rng))
    } else {
        Ok(poisson_ptrs(rate, rng))
    }
}

fn poisson_inversion(rate: f64, rng: &mut RandomStream) -> u64 {
    let u = rng.next_f64();
    let mut pmf = (-rate).exp();
    let mut cdf = pmf;
    let mut k = 0u64;
    // At rate < 10 the cumulative mass beyond k = 400 is below 1e-300, so the
    // cap only guards against pathological rounding.
    while u >= cdf && k < 400 {
        k += 1;
        pmf *= rate / k as f64;
        cdf += pmf;
    }
    k
}

/// Hörmann's PTRS transformed-rejection sampler, valid for rate >= 10.
fn poisson_ptrs(rate: f64, rng: &mut RandomStream) -> u64 {
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.next_f64_open() - 0.5;
        let v = rng.next_f64_open();
        let us = 0.5 - u.abs();
        if us == 0.0 {
            continue;
        }
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if (v * inv_alpha / (a / (us * us) + b)).ln() <= k * loglam - rate - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// Draws from the geometric law on {0, 1, 2, ...} with success probability
/// `1 - z`, i.e. P(n) = z^n (1 - z), by CDF inversion: floor(ln U / ln z).
pub fn geometric_draw(z: f64, rng: &mut RandomStream) -> Result<u64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::ParamDomain {
            what: "geometric z",
            value: z,
        });
    }
    if z == 0.0 {
        return Ok(0);
    }
    let u = rng.next_f64_open();
    Ok((u.ln() / z.ln()).floor() as u64)
}

/// Draws from the size-biased geometric law on {1, 2, ...} with
/// P(n) = n z^(n-1) (1 - z)^2, as the convolution 1 + G1 + G2 of two
/// independent geometric draws (summing two geometrics weights mass n-1 by
/// the n ways to split it, which is exactly the size bias).
pub fn geom_dot_draw(z: f64, rng: &mut RandomStream) -> Result<u64> {
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::ParamDomain {
            what: "size-biased geometric z",
            value: z,
        });
    }
    let g1 = geometric_draw(z, rng)?;
    let g2 = geometric_draw(z, rng)?;
    Ok(1 + g1 + g2)
}

/// Draws a Bernoulli variate. Probabilities are clamped into [0, 1] but may
/// exceed one only by [`BERNOULLI_SLACK`] to absorb rounding in callers.
pub fn bernoulli_draw(p: f64, rng: &mut RandomStream) -> Result<bool> {
    if !(p >= 0.0) || p > 1.0 + BERNOULLI_SLACK || !p.is_finite() {
        return Err(Error::ParamDomain {
            what: "bernoulli probability",
            value: p,
        });
    }
    // next_f64 lies in [0, 1), so p = 0 can never accept and p >= 1 always does.
    Ok(rng.next_f64() < p)
}

/// Draws a uniform rank in `[0, k)` by masked rejection: the smallest power
/// of two covering `k` is sampled and out-of-range words are discarded, so
/// the result is exactly uniform with no modulo bias. `k = 1` returns 0
/// without consuming stream words.
pub fn uniform_rank_draw(k: u128, rng: &mut RandomStream) -> Result<u128> {
    if k == 0 {
        return Err(Error::ParamDomain {
            what: "rank count",
            value: 0.0,
        });
    }
    if k == 1 {
        return Ok(0);
    }
    let bits = 128 - (k - 1).leading_zeros();
    if bits <= 64 {
        let mask = if bits == 64 {
            u64::MAX
        } else {
            (1u64 << bits) - 1
        };
        loop {
            let v = rng.next_u64() & mask;
            if (v as u128) < k {
                return Ok(v as u128);
            }
        }
    } else {
        let mask = if bits == 128 {
            u128::MAX
        } else {
            (1u128 << bits) - 1
        };
        loop {
            let v = rng.next_u128() & mask;
            if v < k {
                return Ok(v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::chi_square_gof;

    fn stream(seed: u64) -> RandomStream {
        RandomStream::new(seed)
    }

    // ------------------------------------------------------------------
    // Poisson
    // ------------------------------------------------------------------

    #[test]
    fn poisson_rate_zero_is_constant_zero() {
        let mut rng = stream(3);
        for _ in 0..100 {
            assert_eq!(poisson_draw(0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn poisson_rejects_bad_rates() {
        let mut rng = stream(3);
        assert!(poisson_draw(-1.0, &mut rng).is_err());
        assert!(poisson_draw(f64::NAN, &mut rng).is_err());
        assert!(poisson_draw(f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn poisson_large_rate_moments() {
        // Rate in the PTRS regime; mean within 4 standard errors, variance
        // within 5% of the rate.
        let rate = 1050.4;
        let n = 100_000u64;
        let mut rng = stream(11);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = poisson_draw(rate, &mut rng).unwrap() as f64;
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (rate / n as f64).sqrt();
        assert!((mean - rate).abs() < 4.0 * se, "mean {mean} vs rate {rate}");
        assert!(
            var / rate > 0.95 && var / rate < 1.05,
            "variance ratio {}",
            var / rate
        );
    }

    #[test]
    fn poisson_huge_rate_moments() {
        // Deep PTRS regime: 1e4 draws at rate 1e7, sample mean within
        // 4 sqrt(rate/n) of the rate.
        let rate = 1.0e7;
        let n = 10_000u64;
        let mut rng = stream(13);
        let sum: f64 = (0..n)
            .map(|_| poisson_draw(rate, &mut rng).unwrap() as f64)
            .sum();
        let mean = sum / n as f64;
        let se = (rate / n as f64).sqrt();
        assert!((mean - rate).abs() < 4.0 * se, "mean {mean} vs rate {rate}");
    }

    /// Chi-square of the empirical pmf against exp(-l) l^k / k! at a rate
    /// served by inversion, with a seed battery: at least 2 of 3 seeds must
    /// clear the 1e-3 significance gate.
    #[test]
    fn poisson_small_rate_pmf_gof() {
        let rate = 3.0;
        assert!(pmf_gate_passes(
            |rng| poisson_draw(rate, rng).unwrap(),
            &poisson_pmf(rate, 20)
        ));
    }

    /// Same gate in the PTRS regime, support window around the mode.
    #[test]
    fn poisson_ptrs_pmf_gof() {
        let rate = 15.0;
        assert!(pmf_gate_passes(
            |rng| poisson_draw(rate, rng).unwrap(),
            &poisson_pmf(rate, 50)
        ));
    }

    fn poisson_pmf(rate: f64, support: usize) -> Vec<f64> {
        let mut pmf = Vec::with_capacity(support);
        let mut p = (-rate).exp();
        pmf.push(p);
        for k in 1..support {
            p *= rate / k as f64;
            pmf.push(p);
        }
        pmf
    }

    // ------------------------------------------------------------------
    // Geometric
    // ------------------------------------------------------------------

    #[test]
    fn geometric_z_zero_is_constant_zero() {
        let mut rng = stream(5);
        for _ in 0..100 {
            assert_eq!(geometric_draw(0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn geometric_rejects_bad_z() {
        let mut rng = stream(5);
        assert!(geometric_draw(1.0, &mut rng).is_err());
        assert!(geometric_draw(-0.1, &mut rng).is_err());
        assert!(geometric_draw(f64::NAN, &mut rng).is_err());
    }

    #[test]
    fn geometric_mass_at_zero() {
        // P(0) = 1 - z = 0.5 at z = 0.5, within 4 binomial SE over 1e6 draws.
        let n = 1_000_000u64;
        let mut rng = stream(17);
        let zeros = (0..n)
            .filter(|_| geometric_draw(0.5, &mut rng).unwrap() == 0)
            .count();
        let freq = zeros as f64 / n as f64;
        let se = (0.5 * 0.5 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * se, "freq {freq}");
    }

    #[test]
    fn geometric_near_one_mean() {
        // Mean z/(1-z) = 999 at z = 0.999, within 5% over 1e5 draws.
        let n = 100_000u64;
        let mut rng = stream(23);
        let sum: u64 = (0..n)
            .map(|_| geometric_draw(0.999, &mut rng).unwrap())
            .sum();
        let mean = sum as f64 / n as f64;
        assert!((mean - 999.0).abs() < 0.05 * 999.0, "mean {mean}");
    }

    #[test]
    fn geometric_pmf_gof() {
        let z: f64 = 0.5;
        let pmf: Vec<f64> = (0..20).map(|n| (1.0 - z) * z.powi(n)).collect();
        assert!(pmf_gate_passes(|rng| geometric_draw(z, rng).unwrap(), &pmf));
    }

    // ------------------------------------------------------------------
    // Size-biased geometric
    // ------------------------------------------------------------------

    #[test]
    fn geom_dot_never_zero() {
        let mut rng = stream(29);
        for _ in 0..10_000 {
            assert!(geom_dot_draw(0.5, &mut rng).unwrap() >= 1);
        }
    }

    #[test]
    fn geom_dot_rejects_boundary_z() {
        let mut rng = stream(29);
        assert!(geom_dot_draw(0.0, &mut rng).is_err());
        assert!(geom_dot_draw(1.0, &mut rng).is_err());
    }

    #[test]
    fn geom_dot_mass_at_one_and_mean() {
        // P(1) = (1-z)^2 = 0.25 at z = 0.5; mean (1+z)/(1-z) = 3.
        let n = 1_000_000u64;
        let mut rng = stream(31);
        let mut ones = 0u64;
        let mut sum = 0u64;
        for _ in 0..n {
            let x = geom_dot_draw(0.5, &mut rng).unwrap();
            if x == 1 {
                ones += 1;
            }
            sum += x;
        }
        let freq = ones as f64 / n as f64;
        let se = (0.25 * 0.75 / n as f64).sqrt();
        assert!((freq - 0.25).abs() < 4.0 * se, "P(1) freq {freq}");
        let mean = sum as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.01 * 3.0, "mean {mean}");
    }

    #[test]
    fn geom_dot_pmf_gof() {
        let z: f64 = 0.5;
        // P(n) = n z^(n-1) (1-z)^2 on {1, 2, ...}; draws are shifted down by
        // one so cell i carries the mass of n = i + 1.
        let pmf: Vec<f64> = (1..=20)
            .map(|n| n as f64 * z.powi(n - 1) * (1.0 - z) * (1.0 - z))
            .collect();
        assert!(pmf_gate_passes(
            |rng| geom_dot_draw(z, rng).unwrap() - 1,
            &pmf
        ));
    }

    // ------------------------------------------------------------------
    // Bernoulli
    // ------------------------------------------------------------------

    #[test]
    fn bernoulli_degenerate_probabilities() {
        let mut rng = stream(37);
        for _ in 0..100 {
            assert!(!bernoulli_draw(0.0, &mut rng).unwrap());
            assert!(bernoulli_draw(1.0, &mut rng).unwrap());
        }
        // Rounding slack just above one is accepted and always true.
        assert!(bernoulli_draw(1.0 + 0.5e-12, &mut rng).unwrap());
        assert!(bernoulli_draw(1.0 + 1e-9, &mut rng).is_err());
        assert!(bernoulli_draw(-0.1, &mut rng).is_err());
    }

    #[test]
    fn bernoulli_acceptance_rate() {
        let p = std::f64::consts::LN_2;
        let n = 1_000_000u64;
        let mut rng = stream(41);
        let hits = (0..n)
            .filter(|_| bernoulli_draw(p, &mut rng).unwrap())
            .count();
        let freq = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "freq {freq}");
    }

    // ------------------------------------------------------------------
    // Uniform ranks
    // ------------------------------------------------------------------

    #[test]
    fn uniform_rank_k_one_is_zero() {
        let mut rng = stream(43);
        let before = rng.clone().next_u64();
        assert_eq!(uniform_rank_draw(1, &mut rng).unwrap(), 0);
        // No stream words were consumed.
        assert_eq!(rng.next_u64(), before);
    }

    #[test]
    fn uniform_rank_rejects_zero() {
        let mut rng = stream(43);
        assert!(uniform_rank_draw(0, &mut rng).is_err());
    }

    #[test]
    fn uniform_rank_six_cells_balanced() {
        let n = 600_000u64;
        let mut rng = stream(47);
        let mut counts = [0u64; 6];
        for _ in 0..n {
            counts[uniform_rank_draw(6, &mut rng).unwrap() as usize] += 1;
        }
        let expect = n as f64 / 6.0;
        let se = (n as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!((c as f64 - expect).abs() < 4.0 * se, "cell {i}: {c}");
        }
    }

    #[test]
    fn uniform_rank_wide_range_unbiased_top_bit() {
        let k = 1u128 << 32;
        let n = 1_000_000u64;
        let mut rng = stream(53);
        let mut top = 0u64;
        for _ in 0..n {
            let v = uniform_rank_draw(k, &mut rng).unwrap();
            assert!(v < k);
            if v >= k / 2 {
                top += 1;
            }
        }
        let freq = top as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((freq - 0.5).abs() < 4.0 * se, "top-bit freq {freq}");
    }

    #[test]
    fn uniform_rank_beyond_u64() {
        let k = (1u128 << 80) + 7;
        let mut rng = stream(59);
        for _ in 0..1000 {
            assert!(uniform_rank_draw(k, &mut rng).unwrap() < k);
        }
    }

    // ------------------------------------------------------------------
    // Shared chi-square gate: 1e6 draws, significance 1e-3, pass if at
    // least 2 of the 3 fixed seeds clear it.
    // ------------------------------------------------------------------

    fn pmf_gate_passes<F: FnMut(&mut RandomStream) -> u64>(mut draw: F, pmf: &[f64]) -> bool {
        const DRAWS: u64 = 1_000_000;
        const SEEDS: [u64; 3] = [1, 2, 3];
        const SIGNIFICANCE: f64 = 1e-3;
        let tail = 1.0 - pmf.iter().sum::<f64>();
        assert!(tail > 0.0, "pmf window must leave positive tail mass");
        let mut probs = pmf.to_vec();
        probs.push(tail);
        let mut passes = 0;
        for &seed in &SEEDS {
            let mut rng = stream(seed);
            let mut observed = vec![0u64; probs.len()];
            for _ in 0..DRAWS {
                let x = draw(&mut rng) as usize;
                let cell = x.min(probs.len() - 1);
                observed[cell] += 1;
            }
            let report = chi_square_gof(&observed, &probs).unwrap();
            if report.p_value > SIGNIFICANCE {
                passes += 1;
            }
        }
        passes >= 2
    }
}
