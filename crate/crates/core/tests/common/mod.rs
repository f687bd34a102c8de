//! Test-only oracles: adaptive quadrature, an independently written
//! log-posterior, finite differences and reproducible random instances.
#![allow(dead_code)]

use iwhc::censoring::{apply_scheme, HybridScheme, ReciprocalSample};
use iwhc::lindley::GammaPriors;
use iwhc::IwParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// One 15-point Kronrod panel: (estimate, error estimate).
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
    let (est, err) = whole;
    if err <= tol || depth == 0 {
        return est;
    }
    let m = 0.5 * (a + b);
    let left = gk15(f, a, m);
    let right = gk15(f, m, b);
    adapt(f, a, m, left, 0.5 * tol, depth - 1) + adapt(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let whole = gk15(&mut f, a, b);
    adapt(&mut f, a, b, whole, tol, 40)
}

/// Hybrid censored data kept on the time scale, for the oracle likelihood.
#[derive(Debug, Clone)]
pub struct TimeData {
    pub times: Vec<f64>,
    pub u: f64,
    pub n: usize,
}

impl TimeData {
    pub fn censor(lifetimes: &[f64], big_r: usize, time: f64) -> Self {
        let s = apply_scheme(lifetimes, &HybridScheme::new(lifetimes.len(), big_r, time).unwrap()).unwrap();
        TimeData { times: s.times().to_vec(), u: s.u(), n: s.n() }
    }

    pub fn reciprocal(&self) -> ReciprocalSample {
        let x = self.times.iter().map(|t| 1.0 / t).collect();
        ReciprocalSample::new(x, self.u, self.n).unwrap()
    }
}

/// `sum ln f(t_i) + (n - r) ln(1 - F(u))` written directly from the density.
pub fn oracle_loglik(alpha: f64, lambda: f64, d: &TimeData) -> f64 {
    let mut ll = 0.0;
    for &t in &d.times {
        ll += alpha.ln() + lambda.ln() - (alpha + 1.0) * t.ln() - lambda * t.powf(-alpha);
    }
    let k = (d.n - d.times.len()) as f64;
    if k > 0.0 {
        let f_u = (-lambda * d.u.powf(-alpha)).exp();
        ll += k * (1.0 - f_u).ln();
    }
    ll
}

pub fn oracle_log_posterior(alpha: f64, lambda: f64, d: &TimeData, p: &GammaPriors) -> f64 {
    oracle_loglik(alpha, lambda, d) + (p.a - 1.0) * alpha.ln() - p.b * alpha + (p.c - 1.0) * lambda.ln() - p.d * lambda
}

/// Posterior means of `alpha` and `lambda` by nested adaptive quadrature in
/// `(ln alpha, ln lambda)` over a box outside which the density is below
/// `e^-45` of its peak.
pub fn quadrature_posterior_means(d: &TimeData, p: &GammaPriors) -> (f64, f64) {
    let lp = |a: f64, l: f64| oracle_log_posterior(a.exp(), l.exp(), d, p) + a + l;
    // Coarse search for the peak.
    let (mut best, mut pa, mut pl) = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=400 {
        let a = -4.0 + 8.0 * i as f64 / 400.0;
        for j in 0..=400 {
            let l = -40.0 + 80.0 * j as f64 / 400.0;
            let v = lp(a, l);
            if v > best {
                (best, pa, pl) = (v, a, l);
            }
        }
    }
    // Refine by coordinate search.
    let mut step = 0.02;
    while step > 1e-9 {
        let mut moved = false;
        for (da, dl) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step), (step, step), (-step, -step)] {
            let v = lp(pa + da, pl + dl);
            if v > best {
                (best, pa, pl) = (v, pa + da, pl + dl);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let edge_max = |fixed_a: Option<f64>, fixed_l: Option<f64>, lo: f64, hi: f64| {
        (0..=2000)
            .map(|k| {
                let v = lo + (hi - lo) * k as f64 / 2000.0;
                match (fixed_a, fixed_l) {
                    (Some(a), _) => lp(a, v),
                    (_, Some(l)) => lp(v, l),
                    _ => unreachable!(),
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let (mut a0, mut a1, mut l0, mut l1) = (pa - 0.2, pa + 0.2, pl - 0.5, pl + 0.5);
    let floor = best - 45.0;
    loop {
        let mut grew = false;
        if edge_max(Some(a0), None, l0, l1) > floor {
            a0 -= 0.1;
            grew = true;
        }
        if edge_max(Some(a1), None, l0, l1) > floor {
            a1 += 0.1;
            grew = true;
        }
        if edge_max(None, Some(l0), a0, a1) > floor {
            l0 -= 0.5;
            grew = true;
        }
        if edge_max(None, Some(l1), a0, a1) > floor {
            l1 += 0.5;
            grew = true;
        }
        if !grew {
            break;
        }
    }

    let moment = |which: u8| {
        integrate(
            |a| {
                integrate(
                    |l| {
                        let w = (lp(a, l) - best).exp();
                        match which {
                            0 => w,
                            1 => w * a.exp(),
                            _ => w * l.exp(),
                        }
                    },
                    l0,
                    l1,
                    1e-13,
                )
            },
            a0,
            a1,
            1e-12,
        )
    };
    let z = moment(0);
    (moment(1) / z, moment(2) / z)
}

/// Reproducible generator for oracle instances.
pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// A random hybrid censored sample with at least `min_r` failures.
pub fn random_instance(rng: &mut ChaCha20Rng, min_r: usize) -> (TimeData, f64, f64) {
    loop {
        let alpha = rng.random_range(0.5..5.0);
        let lambda: f64 = (rng.random_range(-2.0..2.0f64)).exp();
        let law = IwParams::from_rate(alpha, lambda).unwrap();
        let n = rng.random_range(5..40);
        let lifetimes: Vec<f64> = (0..n).map(|_| law.quantile(rng.random_range(1e-6..1.0 - 1e-6)).unwrap()).collect();
        let big_r = rng.random_range(1..=n);
        let time = law.quantile(rng.random_range(0.3..0.99)).unwrap();
        let d = TimeData::censor(&lifetimes, big_r, time);
        if d.times.len() >= min_r {
            return (d, alpha, lambda);
        }
    }
}

/// Central difference with one Richardson step.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// `|approx - exact| / |exact|`, with the denominator floored at `floor`.
pub fn relative_error(approx: f64, exact: f64, floor: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(floor)
}

pub mod checks;
pub mod suites;
