//! Non-iterative baseline: one-shot gradient estimation of a smoothed
//! function built from higher-order central differences, followed by a
//! coordinate-wise median of `N_med` repetitions.
//!
//! With a common eigenstate of all `O_j`, the probed function reduces to
//! `f(x) = 1/2 + sin(2 x.g)/2` (from `Im e^(-2i t) = -sin 2t`), and
//!
//! ```text
//! h(x) = 2^(-s) sum_l a_l f(l r x),   s = ceil(log2(3 c r)),
//! ```
//!
//! whose gradient at the origin is `r g / 2^s`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::grid::{GridRegister, OutcomeDistribution, MAX_GRID_QUBITS};
use crate::seed::{g_set, stream_rng};

/// Oracle-conversion overhead applied to the raw query count.
pub const DEFAULT_OVERHEAD: u64 = 10;
/// Monte-Carlo sample count used for the marginal by default.
pub const DEFAULT_MC_SAMPLES: usize = 10_000;
/// Largest central-difference order supported.
pub const MAX_ORDER: u32 = 40;

const MC_CHUNK: usize = 64;

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Exact `a_l` for `l = -m..=m`:
/// `a_0 = 0`, `a_l = (-1)^(l-1)/l * C(m,|l|)/C(m+|l|,|l|)`.
pub fn central_diff_coeffs_exact(m: u32) -> Result<Vec<BigRational>> {
    if m == 0 || m > MAX_ORDER {
        return Err(invalid(format!("order m must lie in 1..={MAX_ORDER}, got {m}")));
    }
    let mi = m as i64;
    Ok((-mi..=mi)
        .map(|l| {
            if l == 0 {
                return BigRational::zero();
            }
            let a = l.unsigned_abs() as u32;
            let sign = if (l - 1).rem_euclid(2) == 0 { 1 } else { -1 };
            BigRational::new(
                BigInt::from(sign) * binomial(m, a),
                BigInt::from(l) * binomial(m + a, a),
            )
        })
        .collect())
}

/// [`central_diff_coeffs_exact`] rounded to `f64`.
///
/// ```
/// let a = hlgrad::baseline::central_diff_coeffs(1).unwrap();
/// assert_eq!(a, vec![-0.5, 0.0, 0.5]);
/// ```
pub fn central_diff_coeffs(m: u32) -> Result<Vec<f64>> {
    Ok(central_diff_coeffs_exact(m)?
        .iter()
        .map(|a| a.to_f64().unwrap_or(f64::NAN))
        .collect())
}

/// Parameters of the baseline at one `(M, eps_add, delta, c)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub m_obs: usize,
    pub eps_add: f64,
    pub c: f64,
    /// Central-difference order, `ceil(log2(c sqrt(M)/eps_add))`, at least 1.
    pub m: u32,
    pub r: f64,
    /// Qubits per register.
    pub n: u32,
    pub delta: f64,
    pub n_med: usize,
    /// `ceil(log2(3 c r))`.
    pub scale_exp: i32,
    /// `ceil(log2(4/(eps_add r)))`.
    pub precision_exp: i32,
    pub coeffs: Vec<f64>,
}

impl BaselineParams {
    /// `2^(-scale_exp)`.
    pub fn prefactor(&self) -> f64 {
        (-(self.scale_exp as f64)).exp2()
    }

    /// Factor mapping a gradient of `h` back to expectation values.
    pub fn rescale(&self) -> f64 {
        1.0 / (self.r * self.prefactor())
    }

    pub fn register(&self) -> GridRegister {
        GridRegister::new(self.n).expect("validated at construction")
    }

    /// Same parameters with a different `delta` (and hence `N_med`).
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Ok(Self {
            delta,
            n_med: n_med_for(delta)?,
            ..self.clone()
        })
    }
}

/// `2 ceil(log2(1/delta)) + 1`; `delta = 1` gives a single shot.
pub fn n_med_for(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(2 * (1.0 / delta).log2().ceil().max(0.0) as usize + 1)
}

/// Derives `m`, `r`, `n` and `N_med`.
///
/// `eps_add` may exceed 1; `m` is then clamped to 1.
pub fn baseline_params(m_obs: usize, eps_add: f64, delta: f64, c: f64) -> Result<BaselineParams> {
    if m_obs == 0 {
        return Err(invalid("M must be positive"));
    }
    if !(eps_add > 0.0 && eps_add.is_finite()) {
        return Err(invalid(format!("eps_add must be positive, got {eps_add}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid(format!("c must be positive, got {c}")));
    }
    let n_med = n_med_for(delta)?;
    let sm = (m_obs as f64).sqrt();
    let ratio = c * sm / eps_add;
    let m = ratio.log2().ceil().max(1.0) as u32;
    if m > MAX_ORDER {
        return Err(invalid(format!("eps_add too small: order {m} exceeds {MAX_ORDER}")));
    }
    let mf = m as f64;
    let inv_r = 9.0 * c * mf * sm * (81.0 * 8.0 * 42.0 * PI * mf * ratio).powf(1.0 / (2.0 * mf));
    let r = 1.0 / inv_r;
    let precision_exp = (4.0 / (eps_add * r)).log2().ceil() as i32;
    let scale_exp = (3.0 * c * r).log2().ceil() as i32;
    let n = precision_exp + scale_exp;
    if n < 1 || n as u32 > MAX_GRID_QUBITS {
        return Err(invalid(format!("register size n = {n} outside 1..={MAX_GRID_QUBITS}")));
    }
    Ok(BaselineParams {
        m_obs,
        eps_add,
        c,
        m,
        r,
        n: n as u32,
        delta,
        n_med,
        scale_exp,
        precision_exp,
        coeffs: central_diff_coeffs(m)?,
    })
}

/// `2^(-s) sum_{l>=1} a_l sin(2 l theta)` with the sine recurrence; this is
/// `h` as a function of `theta = r x.g`.
fn h_of_theta(params: &BaselineParams, theta: f64) -> f64 {
    let m = params.m as usize;
    let two_cos = 2.0 * (2.0 * theta).cos();
    let mut prev = 0.0;
    let mut cur = (2.0 * theta).sin();
    let mut acc = 0.0;
    for l in 1..=m {
        acc += params.coeffs[m + l] * cur;
        let next = two_cos * cur - prev;
        prev = cur;
        cur = next;
    }
    params.prefactor() * acc
}

/// `h(x)` for the commuting-eigenstate model.
pub fn h_function(x: &[f64], g_true: &[f64], params: &BaselineParams) -> Result<f64> {
    if x.len() != g_true.len() || x.len() != params.m_obs {
        return Err(invalid("x, g_true and M must agree in length"));
    }
    let s: f64 = x.iter().zip(g_true).map(|(a, b)| a * b).sum();
    Ok(h_of_theta(params, params.r * s))
}

/// Direct evaluation of `2^(-s) sum_l a_l f(l r x)` including the constant
/// term of `f`; slower, used to cross-check [`h_function`].
pub fn h_function_direct(x: &[f64], g_true: &[f64], params: &BaselineParams) -> f64 {
    let s: f64 = x.iter().zip(g_true).map(|(a, b)| a * b).sum();
    let m = params.m as i64;
    let total: f64 = (-m..=m)
        .zip(&params.coeffs)
        .map(|(l, a)| a * (0.5 + 0.5 * (2.0 * l as f64 * params.r * s).sin()))
        .sum();
    params.prefactor() * total
}

/// `r g / 2^s`.
pub fn h_gradient_at_zero(g_true: &[f64], params: &BaselineParams) -> Vec<f64> {
    let k = params.r * params.prefactor();
    g_true.iter().map(|g| k * g).collect()
}

/// Outcome statistics of the inverse grid transform applied to
/// `2^(-n/2) sum_x e^(2 pi i 2^n phi(x))|x>`, where `phi[mu]` is the phase
/// function at grid point `mu`.
pub fn phase_outcome_dist(n: u32, phi: &[f64]) -> Result<OutcomeDistribution> {
    let reg = GridRegister::new(n)?;
    if phi.len() != reg.len() {
        return Err(invalid("phase vector length must be 2^n"));
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(reg.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); reg.len()];
    let mut pmf = vec![0.0; reg.len()];
    accumulate_phase(&reg, phi, &*fft, &mut buf, &mut pmf, 1.0);
    OutcomeDistribution::new(reg, pmf)
}

/// Adds `weight * Pr[k]` for the phase vector `phi` into `pmf`.
///
/// With `x = mu/N - c0` and `k = nu/N - c0`, `Pr[nu] = |N^-1 FFT(b)[nu]|^2`
/// for `b_mu = e^(2 pi i (N phi_mu + c0 mu))`.
fn accumulate_phase(
    reg: &GridRegister,
    phi: &[f64],
    fft: &dyn rustfft::Fft<f64>,
    buf: &mut [Complex64],
    pmf: &mut [f64],
    weight: f64,
) {
    let nf = reg.len() as f64;
    let c0 = reg.offset();
    for (mu, (b, &ph)) in buf.iter_mut().zip(phi).enumerate() {
        let turns = (nf * ph).fract() + (c0 * mu as f64).fract();
        *b = Complex64::from_polar(1.0, 2.0 * PI * turns);
    }
    fft.process(buf);
    let scale = weight / (nf * nf);
    for (p, b) in pmf.iter_mut().zip(buf.iter()) {
        *p += scale * b.norm_sqr();
    }
}

/// Distribution of the first register's outcome. The other `M - 1`
/// registers are traced out by averaging over `n_mc` uniform grid points;
/// `M = 1` is exact.
pub fn marginal_distribution(
    g_true: &[f64],
    params: &BaselineParams,
    n_mc: usize,
    seed: u64,
) -> Result<OutcomeDistribution> {
    if g_true.len() != params.m_obs {
        return Err(invalid("g_true length must equal M"));
    }
    if !g_true.iter().all(|g| g.abs() <= 1.0) {
        return Err(invalid("expectation values must lie in [-1, 1]"));
    }
    let reg = params.register();
    let len = reg.len();
    let xs = reg.points();
    let g1 = g_true[0];
    let conditional = |rest: f64, fft: &dyn rustfft::Fft<f64>, buf: &mut [Complex64], phi: &mut [f64], pmf: &mut [f64], w: f64| {
        for (p, &x) in phi.iter_mut().zip(&xs) {
            *p = h_of_theta(params, params.r * (x * g1 + rest));
        }
        accumulate_phase(&reg, phi, fft, buf, pmf, w);
    };

    if params.m_obs == 1 {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut phi = vec![0.0; len];
        let mut pmf = vec![0.0; len];
        conditional(0.0, &*fft, &mut buf, &mut phi, &mut pmf, 1.0);
        return OutcomeDistribution::new(reg, pmf);
    }
    if n_mc == 0 {
        return Err(invalid("n_mc must be positive"));
    }

    let chunks = n_mc.div_ceil(MC_CHUNK);
    let w = 1.0 / n_mc as f64;
    let partial: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = stream_rng(seed, ci as u64);
            let mut planner = FftPlanner::new();
            let fft = planner.plan_fft_forward(len);
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            let mut phi = vec![0.0; len];
            let mut pmf = vec![0.0; len];
            let count = MC_CHUNK.min(n_mc - ci * MC_CHUNK);
            for _ in 0..count {
                let rest: f64 = g_true[1..]
                    .iter()
                    .map(|g| xs[rng.random_range(0..len)] * g)
                    .sum();
                conditional(rest, &*fft, &mut buf, &mut phi, &mut pmf, w);
            }
            pmf
        })
        .collect();
    let mut pmf = vec![0.0; len];
    for part in partial {
        for (a, b) in pmf.iter_mut().zip(part) {
            *a += b;
        }
    }
    OutcomeDistribution::new(reg, pmf)
}

/// Exact distribution of the median of `N_med` i.i.d. outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedianDistribution {
    pub register: GridRegister,
    pub pmf: Vec<f64>,
}

/// `Pr[Bin(n, p) >= (n+1)/2]`, the probability that the median of `n`
/// draws is at most a point with CDF `p`.
fn median_cdf(n: usize, p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let mut coeff = 1.0f64;
    let mut terms = vec![0.0; n + 1];
    for (l, t) in terms.iter_mut().enumerate() {
        if l > 0 {
            coeff = coeff * (n - l + 1) as f64 / l as f64;
        }
        *t = coeff * p.powi(l as i32) * (1.0 - p).powi((n - l) as i32);
    }
    terms[n.div_ceil(2)..].iter().sum()
}

/// Order-statistics transform of a single-shot distribution.
pub fn median_distribution(single: &OutcomeDistribution, n_med: usize) -> Result<MedianDistribution> {
    if n_med == 0 || n_med % 2 == 0 {
        return Err(invalid(format!("N_med must be odd and positive, got {n_med}")));
    }
    let total = single.total_mass();
    if !(total > 0.0) {
        return Err(invalid("single-shot distribution has no mass"));
    }
    let mut cum = 0.0;
    let mut prev = 0.0;
    let pmf = single
        .pmf()
        .iter()
        .map(|&w| {
            cum += w / total;
            let cur = median_cdf(n_med, cum);
            let out = (cur - prev).max(0.0);
            prev = cur;
            out
        })
        .collect();
    Ok(MedianDistribution {
        register: single.register(),
        pmf,
    })
}

/// Query counts of the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineQueries {
    pub t_non_iter: u64,
    /// `T_NonIter / (81 * 8)^(1/(2m))`.
    pub t_tilde: f64,
}

/// `overhead * N_med * sum_l ceil(2 pi 2^precision_exp |a_l|)`.
pub fn baseline_queries(params: &BaselineParams, overhead: u64) -> BaselineQueries {
    let scale = 2.0 * PI * (params.precision_exp as f64).exp2();
    let per: u64 = params
        .coeffs
        .iter()
        .map(|a| (scale * a.abs()).ceil() as u64)
        .sum();
    let t = overhead * params.n_med as u64 * per;
    BaselineQueries {
        t_non_iter: t,
        t_tilde: t as f64 / (648.0f64).powf(1.0 / (2.0 * params.m as f64)),
    }
}

/// MSE of the rescaled median against `g1`, given the single-shot marginal.
pub fn mse_from_marginal(marginal: &OutcomeDistribution, g1: f64, params: &BaselineParams) -> Result<f64> {
    let med = median_distribution(marginal, params.n_med)?;
    let k = params.rescale();
    Ok(med
        .pmf
        .iter()
        .enumerate()
        .map(|(mu, &w)| {
            let e = k * med.register.point(mu) - g1;
            w * e * e
        })
        .sum())
}

/// MSE of the baseline estimate of `<O_1>`.
pub fn baseline_mse(g_true: &[f64], params: &BaselineParams, n_mc: usize, seed: u64) -> Result<f64> {
    let marginal = marginal_distribution(g_true, params, n_mc, seed)?;
    mse_from_marginal(&marginal, g_true[0], params)
}

/// Sample count used when the caller does not fix one: fewer samples on
/// larger registers, keeping `n_mc * 2^n` near `2^22`.
pub fn auto_mc_samples(n: u32) -> usize {
    ((1usize << 22) >> n.min(22)).clamp(200, DEFAULT_MC_SAMPLES)
}

/// One point of the RMSE-versus-queries sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub eps_add: f64,
    pub delta: f64,
    pub n_med: usize,
    pub t_queries: u64,
    pub t_rescaled: f64,
    pub rmse_worst: f64,
    pub rmse_avg: f64,
}

/// Inputs of [`baseline_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub m_obs: usize,
    pub c: f64,
    pub eps_adds: Vec<f64>,
    pub deltas: Vec<f64>,
    pub g_sets: usize,
    /// `None` picks [`auto_mc_samples`].
    pub n_mc: Option<usize>,
    pub overhead: u64,
    pub seed: u64,
}

/// RMSE over `g_sets` random sets `g_set(seed, i, M)` for every
/// `(eps_add, delta)`; rows ordered by `eps_add` then `delta`.
pub fn baseline_sweep(cfg: &SweepConfig) -> Result<Vec<SweepPoint>> {
    if cfg.g_sets == 0 {
        return Err(invalid("need at least one g-set"));
    }
    let sets: Vec<Vec<f64>> = (0..cfg.g_sets as u64)
        .map(|i| g_set(cfg.seed, i, cfg.m_obs))
        .collect();
    let mut rows = Vec::new();
    for (ei, &eps_add) in cfg.eps_adds.iter().enumerate() {
        let base = baseline_params(cfg.m_obs, eps_add, 1.0, cfg.c)?;
        let n_mc = cfg.n_mc.unwrap_or_else(|| auto_mc_samples(base.n));
        let marginals: Vec<OutcomeDistribution> = sets
            .iter()
            .enumerate()
            .map(|(si, g)| {
                let s = crate::seed::stream_seed(cfg.seed, ((ei as u64) << 32) | si as u64);
                marginal_distribution(g, &base, n_mc, s)
            })
            .collect::<Result<_>>()?;
        for &delta in &cfg.deltas {
            let params = base.with_delta(delta)?;
            let mses: Vec<f64> = marginals
                .iter()
                .zip(&sets)
                .map(|(mg, g)| mse_from_marginal(mg, g[0], &params))
                .collect::<Result<_>>()?;
            let q = baseline_queries(&params, cfg.overhead);
            rows.push(SweepPoint {
                eps_add,
                delta,
                n_med: params.n_med,
                t_queries: q.t_non_iter,
                t_rescaled: q.t_tilde,
                rmse_worst: mses.iter().cloned().fold(0.0, f64::max).sqrt(),
                rmse_avg: (mses.iter().sum::<f64>() / mses.len() as f64).sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Checks `sum_l l a_l = 1` and `sum_l a_l = 0` exactly.
pub fn coefficient_identities_hold(m: u32) -> Result<bool> {
    let a = central_diff_coeffs_exact(m)?;
    let mi = m as i64;
    let mut first = BigRational::zero();
    let mut zeroth = BigRational::zero();
    for (l, al) in (-mi..=mi).zip(&a) {
        first += BigRational::from_integer(BigInt::from(l)) * al;
        zeroth += al;
    }
    let antisym = (0..a.len()).all(|i| a[i] == -a[a.len() - 1 - i].clone());
    Ok(first.is_one() && zeroth.is_zero() && antisym && a.iter().all(|x| x.abs() <= BigRational::one()))
}
