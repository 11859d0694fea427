//! Quantile samplers for the three stochastic primitives: inverse-Gaussian
//! first hitting times of drifted Brownian motion, Erlang separation times,
//! and Erlang residuals conditioned on elapsed service.

use statrs::distribution::{ContinuousCDF, Gamma};

/// Density of the first hitting time of a unit-drift Brownian motion started
/// `gap` above the boundary, with diffusion parameter `sigma`. Mean `gap`,
/// variance `sigma^2 * gap`.
fn hitting_density(gap: f64, sigma: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let denom = sigma * (2.0 * std::f64::consts::PI * u * u * u).sqrt();
    let diff = gap - u;
    gap / denom * (-(diff * diff) / (2.0 * sigma * sigma * u)).exp()
}

const CDF_CELLS: usize = 1024;
const INVERT_TOL: f64 = 1e-6;

/// Exact constant-time draw from the first-hitting-time distribution (the
/// inverse Gaussian with mean `gap` and variance `sigma^2 * gap`), using the
/// Michael-Schucany-Haas transform: one standard normal plus one uniform.
/// Used on the hot path where draws need not be quantile-addressable.
pub fn sample_hitting_time_fast<R: rand::Rng>(target_gap: f64, sigma: f64, rng: &mut R) -> f64 {
    assert!(target_gap > 0.0, "hitting time needs a positive gap");
    if sigma == 0.0 {
        return target_gap;
    }
    let mu = target_gap;
    // Shape parameter of IG(mu, lambda): variance = mu^3 / lambda.
    let lambda = (target_gap * target_gap) / (sigma * sigma);
    let nu: f64 = rng.sample(rand_distr::StandardNormal);
    let y = nu * nu;
    let x = mu + mu * mu * y / (2.0 * lambda)
        - mu / (2.0 * lambda) * (4.0 * mu * lambda * y + mu * mu * y * y).sqrt();
    let u: f64 = rng.gen();
    if u <= mu / (mu + x) {
        x
    } else {
        mu * mu / x
    }
}

/// u-quantile of the first-hitting-time distribution, by numerically
/// integrating the density (composite Simpson per cell, upper limit at
/// mean + 12 std-devs) and inverting the cumulative table with bisection to
/// an absolute time tolerance of 1e-6 min.
pub fn sample_first_hitting_time(target_gap: f64, sigma: f64, u: f64) -> f64 {
    assert!(target_gap > 0.0, "hitting time needs a positive gap");
    assert!((0.0..1.0).contains(&u), "quantile {u} outside [0,1)");
    if sigma == 0.0 {
        return target_gap;
    }
    let sd = sigma * target_gap.sqrt();
    let lo = (target_gap - 12.0 * sd).max(1e-12);
    let hi = target_gap + 12.0 * sd;
    let width = (hi - lo) / CDF_CELLS as f64;

    // Cumulative mass at cell boundaries; mass below `lo` is negligible.
    let mut cum = [0.0f64; CDF_CELLS + 1];
    let mut prev_f = hitting_density(target_gap, sigma, lo);
    for i in 0..CDF_CELLS {
        let a = lo + i as f64 * width;
        let m = hitting_density(target_gap, sigma, a + 0.5 * width);
        let b = hitting_density(target_gap, sigma, a + width);
        cum[i + 1] = cum[i] + width / 6.0 * (prev_f + 4.0 * m + b);
        prev_f = b;
    }
    if u >= cum[CDF_CELLS] {
        return hi;
    }
    let cell = match cum.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
        Ok(i) => i.min(CDF_CELLS - 1),
        Err(i) => i.saturating_sub(1).min(CDF_CELLS - 1),
    };
    let base = cum[cell];
    let start = lo + cell as f64 * width;
    // Bisect F(start) + simpson(start, x) = u within the cell.
    let cell_cdf = |x: f64| {
        let w = x - start;
        if w <= 0.0 {
            return base;
        }
        let fa = hitting_density(target_gap, sigma, start);
        let fm = hitting_density(target_gap, sigma, start + 0.5 * w);
        let fb = hitting_density(target_gap, sigma, x);
        base + w / 6.0 * (fa + 4.0 * fm + fb)
    };
    let mut a = start;
    let mut b = start + width;
    while b - a > INVERT_TOL {
        let mid = 0.5 * (a + b);
        if cell_cdf(mid) < u {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// u-quantile of an Erlang distribution with the given mean and shape k
/// (rate k / mean), i.e. mean `mean` and variance `mean^2 / k`.
pub fn sample_erlang_quantile(mean: f64, k: u32, u: f64) -> f64 {
    assert!(mean > 0.0 && k >= 1, "invalid Erlang parameters");
    assert!((0.0..1.0).contains(&u), "quantile {u} outside [0,1)");
    if u == 0.0 {
        return 0.0;
    }
    let g = Gamma::new(k as f64, k as f64 / mean).expect("valid gamma");
    g.inverse_cdf(u)
}

/// u-quantile of the residual service time (M - elapsed | M > elapsed) for
/// M ~ Erlang(k, k / mean), via the conditional CDF
/// (F(elapsed + x) - F(elapsed)) / (1 - F(elapsed)).
pub fn sample_conditional_remaining_service(mean: f64, k: u32, elapsed: f64, u: f64) -> f64 {
    assert!(elapsed >= 0.0, "negative elapsed service {elapsed}");
    if elapsed == 0.0 {
        return sample_erlang_quantile(mean, k, u);
    }
    assert!((0.0..1.0).contains(&u), "quantile {u} outside [0,1)");
    let g = Gamma::new(k as f64, k as f64 / mean).expect("valid gamma");
    let f_e = g.cdf(elapsed);
    if f_e >= 1.0 {
        // Past all representable mass; residual is effectively zero.
        return 0.0;
    }
    let target = f_e + u * (1.0 - f_e);
    (g.inverse_cdf(target) - elapsed).max(0.0)
}

/// Conditional expectation E[M - elapsed | M > elapsed] for
/// M ~ Erlang(k, k / mean), using the identity
/// E[M; M > e] = mean * (1 - F_{k+1}(e)) where F_{k+1} is the CDF of the
/// Erlang with one extra phase and the same rate.
pub fn expected_conditional_remaining(mean: f64, k: u32, elapsed: f64) -> f64 {
    if elapsed <= 0.0 {
        return mean;
    }
    let rate = k as f64 / mean;
    let g = Gamma::new(k as f64, rate).expect("valid gamma");
    let tail = 1.0 - g.cdf(elapsed);
    if tail <= 0.0 {
        return 0.0;
    }
    let g_plus = Gamma::new(k as f64 + 1.0, rate).expect("valid gamma");
    let partial_mean = mean * (1.0 - g_plus.cdf(elapsed));
    (partial_mean / tail - elapsed).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn hitting_time_degenerates_without_noise() {
        for u in [0.05, 0.5, 0.95] {
            assert_eq!(sample_first_hitting_time(25.0, 0.0, u), 25.0);
            let near = sample_first_hitting_time(25.0, 1e-4, u);
            assert!((near - 25.0).abs() < 0.01, "u = {u}: {near}");
        }
    }

    #[test]
    fn hitting_time_moments() {
        let mut rng = StdRng::seed_from_u64(11);
        let (gap, sigma) = (30.0, 0.5);
        let n = 20_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let x = sample_first_hitting_time(gap, sigma, rng.gen::<f64>());
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!((mean - gap).abs() / gap < 0.02, "mean {mean}");
        let want_var = sigma * sigma * gap;
        assert!((var - want_var).abs() / want_var < 0.08, "var {var}");
    }

    #[test]
    fn hitting_time_median_below_mean() {
        let med = sample_first_hitting_time(30.0, 0.5, 0.5);
        assert!(med < 30.0, "median {med} should sit below the mean");
    }

    #[test]
    fn hitting_time_monotone_in_quantile() {
        let mut prev = 0.0;
        for i in 1..100 {
            let x = sample_first_hitting_time(12.0, 0.8, i as f64 / 100.0);
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn erlang_exponential_quantile_closed_form() {
        let u = 1.0 - (-1.0f64).exp();
        let q = sample_erlang_quantile(97.0, 1, u);
        assert!((q - 97.0).abs() < 1e-6, "q = {q}");
    }

    #[test]
    fn erlang_cv_matches_shape() {
        let mut rng = StdRng::seed_from_u64(3);
        for k in [16u32, 400] {
            let n = 20_000;
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..n {
                let x = sample_erlang_quantile(97.0, k, rng.gen::<f64>());
                sum += x;
                sq += x * x;
            }
            let mean = sum / n as f64;
            let var = sq / n as f64 - mean * mean;
            let cv = var.sqrt() / mean;
            let want = 1.0 / (k as f64).sqrt();
            assert!((cv - want).abs() / want < 0.05, "k = {k}: cv {cv}");
        }
    }

    #[test]
    fn conditional_with_zero_elapsed_is_unconditional() {
        for u in [0.0, 0.1, 0.5, 0.9, 0.999] {
            let a = sample_conditional_remaining_service(97.0, 25, 0.0, u);
            let b = sample_erlang_quantile(97.0, 25, u);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn exponential_case_is_memoryless() {
        for u in [0.1, 0.4, 0.8] {
            let fresh = sample_erlang_quantile(97.0, 1, u);
            let cond = sample_conditional_remaining_service(97.0, 1, 250.0, u);
            assert!((fresh - cond).abs() < 1e-6, "u = {u}: {fresh} vs {cond}");
        }
    }

    #[test]
    fn expected_remaining_matches_sampler_mean() {
        let (mean, k) = (97.0, 25u32);
        assert_eq!(expected_conditional_remaining(mean, k, 0.0), mean);
        // Memoryless exponential case: residual mean equals the full mean.
        let memless = expected_conditional_remaining(mean, 1, 300.0);
        assert!((memless - mean).abs() < 1e-6, "got {memless}");
        for elapsed in [50.0, 97.0, 150.0] {
            let want = expected_conditional_remaining(mean, k, elapsed);
            let mut rng = StdRng::seed_from_u64(17);
            let n = 200_000;
            let mut sum = 0.0;
            for _ in 0..n {
                sum += sample_conditional_remaining_service(mean, k, elapsed, rng.gen::<f64>());
            }
            let got = sum / n as f64;
            assert!((got - want).abs() / want < 0.01, "e = {elapsed}: {got} vs {want}");
        }
    }

    #[test]
    fn conditional_mean_matches_rejection_oracle() {
        let (mean, k, elapsed) = (97.0, 25u32, 97.0);
        let mut rng = StdRng::seed_from_u64(9);
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_conditional_remaining_service(mean, k, elapsed, rng.gen::<f64>());
        }
        let got = sum / n as f64;

        // Rejection-sampling oracle: draw Erlang variates as sums of
        // exponentials and keep those exceeding `elapsed`.
        let mut oracle_rng = StdRng::seed_from_u64(10);
        let rate = k as f64 / mean;
        let mut kept = 0usize;
        let mut osum = 0.0;
        while kept < n {
            let mut x = 0.0;
            for _ in 0..k {
                x += -(1.0 - oracle_rng.gen::<f64>()).ln() / rate;
            }
            if x > elapsed {
                osum += x - elapsed;
                kept += 1;
            }
        }
        let want = osum / n as f64;
        assert!((got - want).abs() / want < 0.02, "got {got}, oracle {want}");
    }
    #[test]
    fn fast_hitting_sampler_matches_quantile_sampler() {
        // Moments and several quantiles of the transform-based sampler must
        // agree with the numeric-inversion sampler.
        let (gap, sigma) = (40.0, 0.6);
        let mut rng = StdRng::seed_from_u64(21);
        let n = 200_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| sample_hitting_time_fast(gap, sigma, &mut rng))
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!((mean - gap).abs() / gap < 0.01, "mean {mean}");
        assert!((var - sigma * sigma * gap).abs() / (sigma * sigma * gap) < 0.03, "var {var}");
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let empirical = draws[(q * n as f64) as usize];
            let exact = sample_first_hitting_time(gap, sigma, q);
            assert!(
                (empirical - exact).abs() / exact < 0.01,
                "quantile {q}: empirical {empirical}, exact {exact}"
            );
        }
    }

    #[test]
    fn fast_hitting_sampler_zero_sigma_is_exact() {
        let mut rng = StdRng::seed_from_u64(3);
        assert_eq!(sample_hitting_time_fast(25.0, 0.0, &mut rng), 25.0);
    }
}
