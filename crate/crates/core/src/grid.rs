//! Symmetric grids, the grid-indexed Fourier transform and the outcome
//! statistics of single-register gradient estimation.
//!
//! A `p`-qubit register holds the `2^p` points
//! `x_mu = mu/2^p - 1/2 + 1/2^(p+1)`, ordered by `mu` ascending. Every pmf and
//! matrix in the crate uses that ordering.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest register handled by the closed-form kernels.
pub const MAX_GRID_QUBITS: u32 = 20;
/// Largest register for which dense matrices are built.
pub const MAX_DENSE_QUBITS: u32 = 12;

/// A `p`-qubit grid register `G_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridRegister {
    p: u32,
}

impl GridRegister {
    pub fn new(p: u32) -> Result<Self> {
        if p == 0 || p > MAX_GRID_QUBITS {
            return Err(invalid(format!(
                "grid register needs 1 <= p <= {MAX_GRID_QUBITS}, got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn qubits(&self) -> u32 {
        self.p
    }

    /// Number of grid points, `2^p`.
    pub fn len(&self) -> usize {
        1usize << self.p
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// The offset `1/2 - 1/2^(p+1)` such that `x_mu = mu/2^p - offset`.
    pub fn offset(&self) -> f64 {
        0.5 - 0.5 / self.len() as f64
    }

    /// The bijection `phi(mu)`.
    pub fn point(&self, mu: usize) -> f64 {
        debug_assert!(mu < self.len());
        mu as f64 / self.len() as f64 - self.offset()
    }

    /// Inverse of [`point`](Self::point); `None` when `x` is not a grid point.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let mu = (x + self.offset()) * self.len() as f64;
        let r = mu.round();
        if (mu - r).abs() > 1e-9 || r < 0.0 || r >= self.len() as f64 {
            return None;
        }
        Some(r as usize)
    }

    /// Index of the grid point nearest to `x` (clamped to the register).
    pub fn nearest_index(&self, x: f64) -> usize {
        let mu = ((x + self.offset()) * self.len() as f64).round();
        mu.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|mu| self.point(mu)).collect()
    }

    /// Index of the grid point `-x_mu`.
    pub fn reflect(&self, mu: usize) -> usize {
        self.len() - 1 - mu
    }
}

/// The `2^p` points of `G_p` in index order.
pub fn grid_points(p: u32) -> Result<Vec<f64>> {
    Ok(GridRegister::new(p)?.points())
}

fn dense_register(p: u32) -> Result<GridRegister> {
    if p > MAX_DENSE_QUBITS {
        return Err(invalid(format!(
            "dense matrices are limited to p <= {MAX_DENSE_QUBITS}, got {p}"
        )));
    }
    GridRegister::new(p)
}

/// The grid Fourier transform, entry `(k, x) = 2^(-p/2) exp(2 pi i 2^p x k)`.
pub fn qft_grid(p: u32) -> Result<DMatrix<Complex64>> {
    let reg = dense_register(p)?;
    let n = reg.len();
    let nf = n as f64;
    let scale = 1.0 / nf.sqrt();
    let pts = reg.points();
    Ok(DMatrix::from_fn(n, n, |k, x| {
        Complex64::from_polar(scale, 2.0 * PI * nf * pts[x] * pts[k])
    }))
}

/// The standard QFT on `p` qubits, entry `(kappa, mu) = 2^(-p/2) exp(2 pi i kappa mu / 2^p)`.
pub fn standard_qft(p: u32) -> Result<DMatrix<Complex64>> {
    let reg = dense_register(p)?;
    let n = reg.len();
    let nf = n as f64;
    let scale = 1.0 / nf.sqrt();
    Ok(DMatrix::from_fn(n, n, |k, m| {
        let km = ((k * m) % n) as f64;
        Complex64::from_polar(scale, 2.0 * PI * km / nf)
    }))
}

/// Global phase and per-qubit diagonals `diag(1, e^(-2 pi i c 2^b))`, with
/// `c = 1/2 - 1/2^(p+1)`, such that `qft_grid = phase * D * QFT * D` and
/// `D` is the tensor product of the returned diagonals.
///
/// Entry `b` of the vector acts on the bit of weight `2^b`.
pub fn qft_conjugation(p: u32) -> Result<(Complex64, Vec<[Complex64; 2]>)> {
    let reg = GridRegister::new(p)?;
    let c = reg.offset();
    let nf = reg.len() as f64;
    let phase = Complex64::from_polar(1.0, 2.0 * PI * nf * c * c);
    let diags = (0..p)
        .map(|b| {
            let w = (1u64 << b) as f64;
            [Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, -2.0 * PI * c * w)]
        })
        .collect();
    Ok((phase, diags))
}

/// `|sin(pi n d) / (n sin(pi d))|^2`, the Fejer kernel normalised to 1 at integers.
pub fn fejer_kernel(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    let d = delta - delta.round();
    let nd = nf * d;
    if (nd - nd.round()).abs() < 1e-12 {
        return if d.abs() < 1e-12 { 1.0 } else { 0.0 };
    }
    if d.abs() < 1e-8 {
        let v = 1.0 - (nf * nf - 1.0) * PI * PI * d * d / 6.0;
        return v * v;
    }
    let v = (PI * nd).sin() / (nf * (PI * d).sin());
    v * v
}

/// Probability mass function over the outcomes of one register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    register: GridRegister,
    pmf: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(register: GridRegister, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != register.len() {
            return Err(Error::DimensionMismatch {
                expected: register.len(),
                found: pmf.len(),
            });
        }
        if pmf.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("pmf entries must be finite and nonnegative"));
        }
        Ok(Self { register, pmf })
    }

    pub fn register(&self) -> GridRegister {
        self.register
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn into_pmf(self) -> Vec<f64> {
        self.pmf
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    /// Mass on outcomes `k` with `|k - center| > threshold` (plain distance).
    pub fn tail(&self, center: f64, threshold: f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .filter(|&(mu, _)| (self.register.point(mu) - center).abs() > threshold)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Index of the most likely outcome (lowest index on ties).
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.pmf.iter().enumerate() {
            if w > self.pmf[best] {
                best = i;
            }
        }
        best
    }

    /// `E[f(k)]`.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(mu, &w)| w * f(self.register.point(mu)))
            .sum()
    }

    /// Total-variation distance to another pmf over the same register.
    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self
            .pmf
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Outcome statistics of measuring `2^(-p/2) sum_x e^(2 pi i 2^p g x)|x>` after
/// the inverse grid transform: `Pr[k] = |2^-p sum_x e^(2 pi i 2^p x (g - k))|^2`.
pub fn linear_phase_outcome_dist(p: u32, g: f64) -> Result<OutcomeDistribution> {
    let reg = GridRegister::new(p)?;
    if !g.is_finite() {
        return Err(invalid("g must be finite"));
    }
    let n = reg.len();
    let pmf = (0..n).map(|mu| fejer_kernel(n, g - reg.point(mu))).collect();
    Ok(OutcomeDistribution { register: reg, pmf })
}

/// `Pr[|k - g| > threshold]` for the linear-phase state.
pub fn tail_probability(p: u32, g: f64, threshold: f64) -> Result<f64> {
    Ok(linear_phase_outcome_dist(p, g)?.tail(g, threshold))
}

/// Largest tail over `g` in `lo, lo + step, ..., hi`, with the maximising `g`.
pub fn max_tail_over_scan(p: u32, lo: f64, hi: f64, step: f64, threshold: f64) -> Result<(f64, f64)> {
    if !(step > 0.0) || hi < lo {
        return Err(invalid("scan needs step > 0 and hi >= lo"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=count {
        let g = (lo + i as f64 * step).min(hi);
        let t = tail_probability(p, g, threshold)?;
        if t > best.0 {
            best = (t, g);
        }
    }
    Ok(best)
}

/// Outcome statistics when the input register holds real amplitudes `a_x`
/// instead of the uniform superposition:
/// `Pr[k] = |sum_x a_x 2^(-p/2) e^(2 pi i 2^p x (g - k))|^2`.
pub fn amplitude_outcome_dist(amplitudes: &[f64], g: f64) -> Result<OutcomeDistribution> {
    let n = amplitudes.len();
    if !n.is_power_of_two() || n < 2 {
        return Err(invalid("amplitude vector length must be a power of two >= 2"));
    }
    let reg = dense_register(n.trailing_zeros())?;
    let nf = n as f64;
    let scale = 1.0 / nf.sqrt();
    let pts = reg.points();
    let pmf = pts
        .iter()
        .map(|&k| {
            let amp: Complex64 = amplitudes
                .iter()
                .zip(&pts)
                .map(|(&a, &x)| Complex64::from_polar(a * scale, 2.0 * PI * nf * x * (g - k)))
                .sum();
            amp.norm_sqr()
        })
        .collect();
    Ok(OutcomeDistribution { register: reg, pmf })
}

/// Closed form of `E[cos 2 pi (k - g)]` for real input amplitudes:
/// `sum_{k>=1} a_{k-1} a_k + a_0 a_{N-1} cos(2 pi N (g + 1/2 - 1/(2N)))`.
pub fn expected_cosine(amplitudes: &[f64], g: f64) -> f64 {
    let n = amplitudes.len();
    let nf = n as f64;
    let chain: f64 = amplitudes.windows(2).map(|w| w[0] * w[1]).sum();
    let wrap = amplitudes[0] * amplitudes[n - 1];
    chain + wrap * (2.0 * PI * nf * (g + 0.5 - 0.5 / nf)).cos()
}

/// `min_g E[cos 2 pi (k - g)]`; the wrap-around cosine reaches -1.
pub fn min_expected_cosine(amplitudes: &[f64]) -> f64 {
    let n = amplitudes.len();
    let chain: f64 = amplitudes.windows(2).map(|w| w[0] * w[1]).sum();
    chain - (amplitudes[0] * amplitudes[n - 1]).abs()
}

/// Proxy for the squared error: `(1 - E[cos 2 pi (k - g)]) / (2 pi^2)`.
pub fn proxy_mse(expected_cos: f64) -> f64 {
    (1.0 - expected_cos) / (2.0 * PI * PI)
}

/// The phase-estimation-optimal input `a_k = sqrt(2/2^p) sin(k pi / 2^p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineState {
    register: GridRegister,
    amplitudes: Vec<f64>,
}

impl SineState {
    pub fn new(p: u32) -> Result<Self> {
        let register = GridRegister::new(p)?;
        let n = register.len() as f64;
        let scale = (2.0 / n).sqrt();
        let amplitudes = (0..register.len())
            .map(|k| scale * (k as f64 * PI / n).sin())
            .collect();
        Ok(Self { register, amplitudes })
    }

    pub fn register(&self) -> GridRegister {
        self.register
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Result of [`sine_state_mse_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineStateReport {
    /// Smallest eigenvalue of the tridiagonal form, by bisection.
    pub min_eigenvalue: f64,
    /// `2 sin^2(pi / 2^(p+1))`.
    pub eigenvalue_formula: f64,
    /// `max |(A a - lambda a)_k|` for the sine vector and the formula eigenvalue.
    pub eigenvector_residual: f64,
    /// Quadratic form at the sine vector divided by `2 pi^2`.
    pub proxy_mse_sine: f64,
    /// `(1 - min_g E[cos]) / (2 pi^2)` for the uniform input, i.e. `(2/2^p)/(2 pi^2)`.
    pub proxy_mse_uniform_worst: f64,
    /// `min_g E[cos]` for the uniform input.
    pub uniform_min_expected_cosine: f64,
}

/// Number of eigenvalues of the symmetric tridiagonal matrix (constant
/// `diag`, constant `off`, order `n`) strictly below `lambda` (Sturm count).
fn sturm_count(n: usize, diag: f64, off: f64, lambda: f64) -> usize {
    let mut count = 0;
    let mut q = diag - lambda;
    if q < 0.0 {
        count += 1;
    }
    for _ in 1..n {
        let qq = if q == 0.0 { f64::EPSILON * off.abs().max(1.0) } else { q };
        q = diag - lambda - off * off / qq;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue of the constant-coefficient symmetric tridiagonal
/// matrix by Sturm-sequence bisection.
pub fn tridiagonal_min_eigenvalue(n: usize, diag: f64, off: f64) -> f64 {
    let radius = 2.0 * off.abs();
    let (mut lo, mut hi) = (diag - radius - 1.0, diag + radius + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(n, diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Heisenberg-limit check of the sine-state protocol on `p` qubits.
pub fn sine_state_mse_check(p: u32) -> Result<SineStateReport> {
    if !(2..=MAX_DENSE_QUBITS).contains(&p) {
        return Err(invalid(format!("sine-state check needs 2 <= p <= 12, got {p}")));
    }
    let sine = SineState::new(p)?;
    let n = sine.register.len();
    let dim = n - 1;
    let min_eigenvalue = tridiagonal_min_eigenvalue(dim, 1.0, -0.5);
    let eigenvalue_formula = 2.0 * (PI / (2.0 * n as f64)).sin().powi(2);

    // Interior amplitudes a_1..a_{N-1}; a_0 = a_N = 0 close the chain.
    let a = &sine.amplitudes;
    let at = |k: usize| if k == 0 || k >= n { 0.0 } else { a[k] };
    let mut residual: f64 = 0.0;
    let mut quad = 0.0;
    for k in 1..n {
        let av = at(k) - 0.5 * (at(k - 1) + at(k + 1));
        residual = residual.max((av - eigenvalue_formula * at(k)).abs());
        quad += at(k) * av;
    }

    let uniform = vec![1.0 / (n as f64).sqrt(); n];
    let uniform_min = min_expected_cosine(&uniform);
    Ok(SineStateReport {
        min_eigenvalue,
        eigenvalue_formula,
        eigenvector_residual: residual,
        proxy_mse_sine: quad / (2.0 * PI * PI),
        proxy_mse_uniform_worst: proxy_mse(uniform_min),
        uniform_min_expected_cosine: uniform_min,
    })
}
