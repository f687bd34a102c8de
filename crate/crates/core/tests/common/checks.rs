//! Property checks shared by the proptest suite and the acceptance runner.
//! Each returns `Err` with a description of the first violation.

use iwhc::censoring::{apply_scheme, HybridScheme};
use iwhc::gof::{kolmogorov_sf, ks_statistic};
use iwhc::lindley::GammaPriors;
use iwhc::posterior::{g2_log_density, PosteriorDraws, WeightedValues};
use iwhc::{rate_from_scale, scale_from_rate, IwParams};

use super::{integrate, TimeData};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Scheme invariants against a brute-force reading of the stopping rule.
pub fn censoring(lifetimes: &[f64], big_r: usize, time: f64) -> Check {
    let n = lifetimes.len();
    let s = apply_scheme(lifetimes, &HybridScheme::new(n, big_r, time).unwrap()).map_err(|e| e.to_string())?;
    let mut sorted = lifetimes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let t_r = sorted[big_r - 1];
    let u = t_r.min(time);
    // Stop at the R-th failure if it comes first, otherwise keep everything up to T.
    let expected: Vec<f64> =
        if t_r <= time { sorted[..big_r].to_vec() } else { sorted.iter().copied().filter(|&t| t <= time).collect() };
    ensure(s.u() == u, || format!("u = {} but min(t_R, T) = {u}", s.u()))?;
    ensure(s.times() == expected.as_slice(), || format!("observed {:?}, expected {expected:?}", s.times()))?;
    ensure(s.r() <= big_r, || "more failures than R".into())?;
    ensure(s.times().iter().all(|&t| t <= s.u()), || "a failure after u".into())?;
    ensure(s.r() == big_r || s.u() == time, || "stopped neither at R nor at T".into())?;
    ensure(s.times().windows(2).all(|w| w[0] <= w[1]), || "times not ordered".into())
}

pub fn round_trips(alpha: f64, theta: f64, prob: f64) -> Check {
    let lambda = rate_from_scale(alpha, theta).map_err(|e| e.to_string())?;
    let back = scale_from_rate(alpha, lambda).map_err(|e| e.to_string())?;
    ensure(((back - theta) / theta).abs() < 1e-12, || format!("theta {theta} -> {back}"))?;
    let law = IwParams::from_scale(alpha, theta).map_err(|e| e.to_string())?;
    let q = law.quantile(prob).map_err(|e| e.to_string())?;
    let p = law.cdf(q).map_err(|e| e.to_string())?;
    ensure((p - prob).abs() <= 1e-10 * prob.max(1e-3), || format!("cdf(quantile({prob})) = {p}"))
}

/// Second differences of `ln g2` on a grid never exceed roundoff.
pub fn log_concavity(d: &TimeData, priors: &GammaPriors) -> Check {
    let s = d.reciprocal();
    let f = |a: f64| g2_log_density(a, &s, priors).unwrap();
    let h = 1e-3;
    for i in 1..400 {
        let a = 0.02 * i as f64;
        let (l, m, r) = (f(a - h), f(a), f(a + h));
        let second = l - 2.0 * m + r;
        let slack = 1e-12 * (l.abs() + 2.0 * m.abs() + r.abs()).max(1.0);
        if second > slack {
            return Err(format!("second difference {second:e} at alpha={a}"));
        }
    }
    Ok(())
}

pub fn weight_normalization(log_weights: &[f64]) -> Check {
    let pairs = vec![(1.0, 1.0); log_weights.len()];
    let draws = PosteriorDraws::from_log_weights(pairs, log_weights).map_err(|e| e.to_string())?;
    let total: f64 = draws.weights().iter().sum();
    ensure((total - 1.0).abs() <= 1e-12, || format!("weights sum to {total}"))?;
    ensure(draws.weights().iter().all(|&w| w >= 0.0), || "negative weight".into())
}

pub fn quantile_monotone(values: &[f64], weights: &[f64], betas: &[f64]) -> Check {
    let e = WeightedValues::new(values.to_vec(), weights.to_vec()).map_err(|e| e.to_string())?.sorted();
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let qs: Vec<f64> = sorted.iter().map(|&b| e.quantile(b).unwrap()).collect();
    ensure(qs.windows(2).all(|w| w[0] <= w[1]), || format!("quantiles {qs:?} at {sorted:?}"))
}

/// Exhaustive search over every candidate window, written independently of
/// the library's two-pointer scan.
pub fn hpd_exhaustive(values: &[f64], weights: &[f64], level: f64) -> Check {
    let wv = WeightedValues::new(values.to_vec(), weights.to_vec()).map_err(|e| e.to_string())?;
    let ecdf = wv.sorted();
    let hpd = ecdf.hpd(level).map_err(|e| e.to_string())?;

    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let total: f64 = weights.iter().sum();
    let quantile = |beta: f64| {
        let mut acc = 0.0;
        for &i in &order {
            acc += weights[i] / total;
            if acc >= beta - 1e-12 {
                return values[i];
            }
        }
        values[order[m - 1]]
    };
    let k = (level * m as f64 + 1e-9).floor() as usize;
    let mut best = f64::INFINITY;
    for j in 1..=(m - k) {
        let len = quantile((j + k) as f64 / m as f64) - quantile(j as f64 / m as f64);
        best = best.min(len);
    }
    let len = hpd.length();
    ensure((len - best).abs() <= 1e-12 * best.abs().max(1.0), || format!("hpd length {len}, exhaustive {best}"))
}

/// pdf integrates to one; the integral is taken on the log scale.
pub fn pdf_normalization(alpha: f64, theta: f64) -> Check {
    let law = IwParams::from_scale(alpha, theta).unwrap();
    let lo = -4.0 / alpha - theta.ln();
    let hi = 40.0 / alpha - theta.ln();
    let total = integrate(|y| law.pdf(y.exp()).unwrap() * y.exp(), lo, hi, 1e-13);
    ensure((total - 1.0).abs() < 1e-8, || format!("pdf of ({alpha}, {theta}) integrates to {total}"))
}

/// K-S distance of `count` inverse-transform draws from the law.
pub fn sampler_ks(alpha: f64, theta: f64, count: usize, seed: u64) -> Check {
    let law = IwParams::from_scale(alpha, theta).unwrap();
    let draws = law.sample(count, seed).unwrap();
    let d = ks_statistic(&draws, |x| law.cdf(x)).unwrap();
    ensure(d < 0.01, || format!("K-S distance {d} for ({alpha}, {theta})"))
}

/// Empirical cdf of `g2` draws against its quadrature-normalized cdf.
pub fn g2_sampler(d: &TimeData, priors: &GammaPriors, count: usize, seed: u64) -> Check {
    let s = d.reciprocal();
    let draws = iwhc::posterior::sample_g2(count, &s, priors, seed).map_err(|e| e.to_string())?;
    let f = |a: f64| g2_log_density(a, &s, priors).unwrap();
    let peak = (1..20_000).map(|i| f(i as f64 * 0.002)).fold(f64::NEG_INFINITY, f64::max);
    let mut upper = 1.0;
    while f(upper) - peak > -60.0 {
        upper *= 1.5;
    }
    let dens = |a: f64| (f(a) - peak).exp();
    let z = integrate(dens, 1e-12, upper, 1e-12);
    let mut sorted = draws.alphas.clone();
    sorted.sort_by(f64::total_cmp);
    // cdf at each order statistic by accumulating panel integrals
    let n = sorted.len() as f64;
    let mut acc = 0.0;
    let mut prev = 1e-12;
    let mut dist: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        acc += integrate(dens, prev, x, 1e-14);
        prev = x;
        let cdf = acc / z;
        dist = dist.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    ensure(dist < 0.01, || format!("g2 sampler K-S distance {dist}"))?;
    ensure(draws.acceptance_ratio() > 0.0 && draws.acceptance_ratio() <= 1.0, || "acceptance ratio".into())
}

/// Brute-force `sup |F_n - F|` from both sides of every step.
pub fn ks_brute_force(data: &[f64], alpha: f64, theta: f64) -> Check {
    let law = IwParams::from_scale(alpha, theta).unwrap();
    let r = iwhc::ks_test(data, &law).map_err(|e| e.to_string())?;
    let n = data.len() as f64;
    let mut best: f64 = 0.0;
    for &t in data {
        let f = law.cdf(t).unwrap();
        let below = data.iter().filter(|&&x| x < t).count() as f64 / n;
        let at = data.iter().filter(|&&x| x <= t).count() as f64 / n;
        best = best.max((f - below).abs()).max((at - f).abs());
    }
    ensure((best - r.statistic).abs() < 1e-14, || format!("D = {}, brute force {best}", r.statistic))?;
    ensure((0.0..=1.0).contains(&r.p_value), || "p-value outside [0, 1]".into())?;
    // Probability-integral transform leaves D unchanged.
    let u: Vec<f64> = data.iter().map(|&t| law.cdf(t).unwrap()).collect();
    let du = ks_statistic(&u, |x| Ok(x.clamp(0.0, 1.0))).unwrap();
    ensure((du - r.statistic).abs() < 1e-12, || format!("PIT distance {du} vs {}", r.statistic))
}

pub fn p_value_decreasing(n: usize) -> Check {
    let mut prev = 1.0;
    for i in 1..=200 {
        let d = i as f64 / 200.0;
        let p = kolmogorov_sf((n as f64).sqrt() * d);
        if p > prev {
            return Err(format!("p-value rises at D={d}"));
        }
        prev = p;
    }
    Ok(())
}
