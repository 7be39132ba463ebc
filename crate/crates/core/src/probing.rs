//! Probing states and their preparation models.
//!
//! The probing state at iteration `q` is
//! `2^(-pM/2) sum_x exp(2 pi i 2^p sum_j x_j g_eff_j) |x>` with
//! `g_eff_j = 2^q (<O_j> - u_j) / pi`. Three oracle models are offered:
//! exact linear phases, Hamiltonian simulation (linear phases plus an error
//! budget, sampled through a worst-case corruption), and Grover-like
//! repetition, where the amplitudes are Chebyshev polynomials of a diagonal
//! Hamiltonian and a one-qubit ancilla carries the sign that must be undone.
//!
//! Dense amplitude vectors use register 0 as the most significant digit; the
//! Grover ancilla, when present, is the least significant qubit.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{linear_phase_outcome_dist, qft_grid, GridRegister};
use crate::micro::chebyshev_t;
use crate::seed::stream_rng;

/// Largest `pM + 1` for which dense amplitude vectors are built.
pub const MAX_DENSE_STATE_QUBITS: u32 = 24;
/// Failure probability `delta'` used with Hamiltonian simulation.
pub const HS_DELTA_PRIME: f64 = 1.0 / 1024.0;
/// Error `eps''` of the truncated Hamiltonian simulation.
pub const HS_EPS2: f64 = 1.0 / 16384.0;
/// Failure probability `delta'` used with Grover-like repetition.
pub const GROVER_DELTA_PRIME: f64 = 1.0 / 16384.0;
/// Guaranteed post-selection success probability of Grover-like repetition.
pub const GROVER_SUCCESS_PROB: f64 = 0.462;
/// Euclidean error tolerated in a prepared probing state.
pub const STATE_ERROR_BUDGET: f64 = 1.0 / 12.0;

/// Which oracle-fidelity model prepares the probing state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProbingModel {
    /// Exact linear phases.
    Ideal,
    /// Linear phases with the `eps'' + sqrt(2 eps'') + sqrt(5 delta')` budget.
    HamiltonianSim { eps2: f64, deltap: f64 },
    /// Chebyshev amplitudes with a sign-correction ancilla.
    GroverRepetition { deltap: f64, l: i64, sigmap: f64 },
}

impl ProbingModel {
    /// Hamiltonian simulation with the default constants.
    pub fn hamiltonian_sim() -> Self {
        ProbingModel::HamiltonianSim {
            eps2: HS_EPS2,
            deltap: HS_DELTA_PRIME,
        }
    }

    /// Grover-like repetition for `m` observables in dimension `d`, with the
    /// default `delta' = 2^-14`, `l = 0` and `sigma' = ceil(sqrt(2(M+1) ln(2d/delta')))`.
    pub fn grover(m: usize, d: f64) -> Self {
        let deltap = GROVER_DELTA_PRIME;
        ProbingModel::GroverRepetition {
            deltap,
            l: 0,
            sigmap: sigma_prime(m as f64, d, deltap),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProbingModel::Ideal => "ideal",
            ProbingModel::HamiltonianSim { .. } => "hs",
            ProbingModel::GroverRepetition { .. } => "grover",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, name: &str| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        match *self {
            ProbingModel::Ideal => Ok(()),
            ProbingModel::HamiltonianSim { eps2, deltap } => {
                unit(eps2, "eps''")?;
                unit(deltap, "delta'")
            }
            ProbingModel::GroverRepetition { deltap, sigmap, .. } => {
                unit(deltap, "delta'")?;
                if sigmap > 0.0 && sigmap.fract() == 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("sigma' must be a positive integer, got {sigmap}")))
                }
            }
        }
    }
}

/// `ceil(sqrt(2(M+1) ln(2d/delta')))`.
pub fn sigma_prime(m: f64, d: f64, deltap: f64) -> f64 {
    (2.0 * (m + 1.0) * (2.0 * d / deltap).ln()).sqrt().ceil()
}

/// Inputs that determine the probing state at one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbingSpec {
    pub p: u32,
    pub q: u32,
    pub u_tilde: Vec<f64>,
    pub g_true: Vec<f64>,
}

impl ProbingSpec {
    pub fn new(p: u32, q: u32, u_tilde: Vec<f64>, g_true: Vec<f64>) -> Result<Self> {
        let spec = Self { p, q, u_tilde, g_true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        GridRegister::new(self.p)?;
        if self.g_true.is_empty() {
            return Err(invalid("at least one observable is required"));
        }
        if self.u_tilde.len() != self.g_true.len() {
            return Err(Error::DimensionMismatch {
                expected: self.g_true.len(),
                found: self.u_tilde.len(),
            });
        }
        let ok = |v: &f64| v.is_finite() && v.abs() <= 1.0;
        if !self.u_tilde.iter().all(ok) || !self.g_true.iter().all(ok) {
            return Err(invalid("estimates and expectation values must lie in [-1, 1]"));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.g_true.len()
    }

    pub fn register(&self) -> GridRegister {
        GridRegister::new(self.p).expect("validated")
    }

    /// `<O~_j> = (<O_j> - u_j) / 2`.
    pub fn shifted_expectations(&self) -> Vec<f64> {
        self.g_true
            .iter()
            .zip(&self.u_tilde)
            .map(|(g, u)| 0.5 * (g - u))
            .collect()
    }
}

/// `g_eff_j = 2^q (<O_j> - u_j) / pi`.
pub fn effective_gradients(spec: &ProbingSpec) -> Vec<f64> {
    let zoom = (1u64 << spec.q) as f64;
    spec.g_true
        .iter()
        .zip(&spec.u_tilde)
        .map(|(g, u)| zoom * (g - u) / PI)
        .collect()
}

/// A dense state over a product of grid registers.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeState {
    p_per_register: Vec<u32>,
    amplitudes: Vec<Complex64>,
}

impl AmplitudeState {
    pub fn new(p_per_register: Vec<u32>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let qubits: u32 = p_per_register.iter().sum();
        if qubits > MAX_DENSE_STATE_QUBITS {
            return Err(invalid(format!(
                "dense states are limited to {MAX_DENSE_STATE_QUBITS} qubits, got {qubits}"
            )));
        }
        let expected = 1usize << qubits;
        if amplitudes.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: amplitudes.len(),
            });
        }
        Ok(Self {
            p_per_register,
            amplitudes,
        })
    }

    pub fn num_registers(&self) -> usize {
        self.p_per_register.len()
    }

    pub fn p_per_register(&self) -> &[u32] {
        &self.p_per_register
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Domain("cannot normalise the zero vector".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(self)
    }

    /// Applies a `2^p x 2^p` matrix to register `reg`.
    pub fn apply_register_op(&mut self, reg: usize, op: &DMatrix<Complex64>) -> Result<()> {
        let p = *self
            .p_per_register
            .get(reg)
            .ok_or_else(|| invalid(format!("register {reg} out of range")))?;
        let dim = 1usize << p;
        if op.nrows() != dim || op.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: op.nrows(),
            });
        }
        let inner: usize = self.p_per_register[reg + 1..]
            .iter()
            .map(|&b| 1usize << b)
            .product();
        let outer = self.amplitudes.len() / (dim * inner);
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * dim * inner + i;
                for (k, slot) in buf.iter_mut().enumerate() {
                    *slot = (0..dim)
                        .map(|x| op[(k, x)] * self.amplitudes[base + x * inner])
                        .sum();
                }
                for (k, v) in buf.iter().enumerate() {
                    self.amplitudes[base + k * inner] = *v;
                }
            }
        }
        Ok(())
    }

    /// Born probabilities of the computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Splits a flat basis index into per-register indices.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.p_per_register.len()];
        for (slot, &p) in out.iter_mut().zip(&self.p_per_register).rev() {
            *slot = index & ((1usize << p) - 1);
            index >>= p;
        }
        out
    }

    /// Marginal pmf of register `reg` in the computational basis.
    pub fn marginal(&self, reg: usize) -> Vec<f64> {
        let dim = 1usize << self.p_per_register[reg];
        let mut out = vec![0.0; dim];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            out[self.digits(idx)[reg]] += a.norm_sqr();
        }
        out
    }
}

/// `||a - b||_2`.
pub fn euclidean_distance(a: &AmplitudeState, b: &AmplitudeState) -> Result<f64> {
    if a.amplitudes.len() != b.amplitudes.len() {
        return Err(Error::DimensionMismatch {
            expected: a.amplitudes.len(),
            found: b.amplitudes.len(),
        });
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn check_dense(spec: &ProbingSpec, extra: u32) -> Result<()> {
    let qubits = spec.p as usize * spec.m() + extra as usize;
    if qubits > MAX_DENSE_STATE_QUBITS as usize {
        return Err(invalid(format!(
            "pM + {extra} = {qubits} exceeds the dense limit of {MAX_DENSE_STATE_QUBITS} qubits"
        )));
    }
    Ok(())
}

/// The exact probing state over `G_p^M`.
pub fn probing_state(spec: &ProbingSpec) -> Result<AmplitudeState> {
    spec.validate()?;
    check_dense(spec, 0)?;
    let reg = spec.register();
    let n = reg.len();
    let nf = n as f64;
    let m = spec.m();
    let geff = effective_gradients(spec);
    let scale = (nf.powi(m as i32)).sqrt().recip();
    let pts = reg.points();
    let amplitudes = (0..n.pow(m as u32))
        .map(|mut idx| {
            let mut phase = 0.0;
            for j in (0..m).rev() {
                phase += pts[idx % n] * geff[j];
                idx /= n;
            }
            Complex64::from_polar(scale, 2.0 * PI * nf * phase)
        })
        .collect();
    AmplitudeState::new(vec![spec.p; m], amplitudes)
}

/// Applies the inverse grid transform to every register of a probe state.
pub fn to_fourier_basis(state: &AmplitudeState) -> Result<AmplitudeState> {
    let mut out = state.clone();
    for (reg, &p) in state.p_per_register.iter().enumerate() {
        let op = qft_grid(p)?.adjoint();
        out.apply_register_op(reg, &op)?;
    }
    Ok(out)
}

/// Draws joint outcomes (grid values) from an exact probe state measured
/// after the inverse grid transform on every register.
pub fn sample_exact(state: &AmplitudeState, shots: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    let fourier = to_fourier_basis(state)?;
    let dist = WeightedIndex::new(fourier.probabilities())
        .map_err(|e| Error::Domain(format!("bad outcome distribution: {e}")))?;
    let regs: Vec<GridRegister> = state
        .p_per_register
        .iter()
        .map(|&p| GridRegister::new(p))
        .collect::<Result<_>>()?;
    Ok((0..shots)
        .map(|_| {
            let idx = dist.sample(rng);
            fourier
                .digits(idx)
                .iter()
                .zip(&regs)
                .map(|(&mu, reg)| reg.point(mu))
                .collect()
        })
        .collect())
}

/// Independent per-coordinate samples from the linear-phase statistics of
/// each effective gradient. Effective gradients outside `[-1/2, 1/2]` are
/// allowed; the statistics are 1-periodic.
pub fn ideal_sampler(spec: &ProbingSpec, shots: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream_rng(seed, 0);
    ideal_sampler_with(spec, shots, &mut rng)
}

fn coordinate_samplers(spec: &ProbingSpec) -> Result<Vec<WeightedIndex<f64>>> {
    effective_gradients(spec)
        .iter()
        .map(|&g| {
            let d = linear_phase_outcome_dist(spec.p, g)?;
            WeightedIndex::new(d.pmf()).map_err(|e| Error::Domain(format!("bad pmf: {e}")))
        })
        .collect()
}

pub(crate) fn ideal_sampler_with(
    spec: &ProbingSpec,
    shots: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let reg = spec.register();
    let samplers = coordinate_samplers(spec)?;
    Ok((0..shots)
        .map(|_| samplers.iter().map(|s| reg.point(s.sample(rng))).collect())
        .collect())
}

/// The grid point farthest from each effective gradient.
pub fn adversarial_outcome(spec: &ProbingSpec) -> Vec<f64> {
    let reg = spec.register();
    let edge = reg.point(reg.len() - 1);
    effective_gradients(spec)
        .iter()
        .map(|&g| if g >= 0.0 { -edge } else { edge })
        .collect()
}

/// Like [`ideal_sampler`], but each shot is replaced with probability
/// `corruption` by the adversarial outcome. The replacement decisions use a
/// separate stream, so `corruption = 0` reproduces the ideal stream.
pub fn corrupted_sampler(spec: &ProbingSpec, shots: usize, corruption: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut main = stream_rng(seed, 0);
    let mut side = stream_rng(seed, 1);
    corrupted_sampler_with(spec, shots, corruption, &mut main, &mut side)
}

pub(crate) fn corrupted_sampler_with(
    spec: &ProbingSpec,
    shots: usize,
    corruption: f64,
    main: &mut ChaCha8Rng,
    side: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    if !(0.0..=STATE_ERROR_BUDGET).contains(&corruption) {
        return Err(invalid(format!("corruption must lie in [0, 1/12], got {corruption}")));
    }
    let mut samples = ideal_sampler_with(spec, shots, main)?;
    if corruption > 0.0 {
        let bad = adversarial_outcome(spec);
        for s in samples.iter_mut() {
            if side.random::<f64>() < corruption {
                s.clone_from(&bad);
            }
        }
    }
    Ok(samples)
}

/// `eps'' + sqrt(2 eps'') + sqrt(5 delta')`.
pub fn hs_error_budget(eps2: f64, deltap: f64) -> f64 {
    eps2 + (2.0 * eps2).sqrt() + (5.0 * deltap).sqrt()
}

/// `|arccos x - pi/2 + x|`, defined for `|x| <= 1/4`.
pub fn arccos_linearity_gap(x: f64) -> Result<f64> {
    if !(x.abs() <= 0.25) {
        return Err(Error::Domain(format!("arccos gap needs |x| <= 1/4, got {x}")));
    }
    Ok((x.acos() - PI / 2.0 + x).abs())
}

/// Monte-Carlo fraction of uniform `(x, y)` in `G_p^M x G_1` with
/// `|sum_j w_j x_j| >= sqrt(ln(2/delta')/2 * sum_j w_j^2)`. The last weight
/// multiplies the one-qubit coordinate `y`.
pub fn hoeffding_subset_fraction(weights: &[f64], p: u32, deltap: f64, n_samples: usize, seed: u64) -> Result<f64> {
    if weights.len() < 2 {
        return Err(invalid("need M >= 1 probe weights plus the ancilla weight"));
    }
    if !(deltap > 0.0 && deltap < 1.0) {
        return Err(invalid("delta' must lie in (0, 1)"));
    }
    let reg = GridRegister::new(p)?;
    let anc = GridRegister::new(1)?;
    let (probe_w, y_w) = weights.split_at(weights.len() - 1);
    let threshold = ((2.0 / deltap).ln() / 2.0 * weights.iter().map(|w| w * w).sum::<f64>()).sqrt();
    let mut rng = stream_rng(seed, 0);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let mut s: f64 = probe_w
            .iter()
            .map(|w| w * reg.point(rng.random_range(0..reg.len())))
            .sum();
        s += y_w[0] * anc.point(rng.random_range(0..2));
        if s.abs() >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_samples as f64)
}

/// Output of [`grover_state`].
#[derive(Clone, Debug, PartialEq)]
pub struct GroverOutput {
    /// Normalised post-selected state over `G_p^M x G_1`.
    pub state: AmplitudeState,
    /// Norm of `2^(-pM/2) sum T_t(f~'(x, y)) |x, y>`.
    pub n_t: f64,
    /// `n_t^2 / 2`.
    pub success_prob: f64,
    /// Number of Chebyshev queries `t = 2^(p+q+2) sigma'`.
    pub t: u64,
    /// `l` actually used in `<O_(M+1)>` after enforcing `|2^(q+1) O_(M+1)| <= 1`.
    pub l: i64,
    /// Largest `|f~'|` over the grid.
    pub max_abs_f: f64,
    /// Fraction of grid points with `|f~'| > 1/4`, outside the arccos bound.
    pub outside_linear_fraction: f64,
}

/// `<O_(M+1)> = pi (1/4 + 4l) / 2^(p+q)`.
pub fn ancilla_expectation(p: u32, q: u32, l: i64) -> f64 {
    PI * (0.25 + 4.0 * l as f64) / (1u64 << (p + q)) as f64
}

fn admissible_l(p: u32, q: u32, mut l: i64) -> i64 {
    let ok = |l: i64| ((1u64 << (q + 1)) as f64 * ancilla_expectation(p, q, l)).abs() <= 1.0;
    while !ok(l) && l != 0 {
        l -= l.signum();
    }
    l
}

/// Chebyshev amplitudes of Grover-like repetition, post-selected and normalised.
pub fn grover_state(spec: &ProbingSpec, model: &ProbingModel) -> Result<GroverOutput> {
    let ProbingModel::GroverRepetition { l, sigmap, .. } = *model else {
        return Err(Error::Config("grover_state needs the GroverRepetition model".into()));
    };
    model.validate()?;
    spec.validate()?;
    check_dense(spec, 1)?;
    let reg = spec.register();
    let anc = GridRegister::new(1)?;
    let n = reg.len();
    let m = spec.m();
    let l = admissible_l(spec.p, spec.q, l);
    let o_anc = ancilla_expectation(spec.p, spec.q, l);
    let shifted = spec.shifted_expectations();
    let t = (1u64 << (spec.p + spec.q + 2)) * sigmap as u64;
    let pts = reg.points();
    let scale = (n as f64).powi(m as i32).sqrt().recip();

    let total = n.pow(m as u32) * 2;
    let mut amplitudes = Vec::with_capacity(total);
    let mut max_abs_f: f64 = 0.0;
    let mut outside = 0usize;
    for idx in 0..total {
        let y = anc.point(idx & 1);
        let mut probe = idx >> 1;
        let mut s = y * o_anc;
        for j in (0..m).rev() {
            s += pts[probe % n] * shifted[j];
            probe /= n;
        }
        let f = s / sigmap;
        max_abs_f = max_abs_f.max(f.abs());
        if f.abs() > 0.25 {
            outside += 1;
        }
        amplitudes.push(Complex64::new(scale * chebyshev_t(t, f), 0.0));
    }
    let raw = AmplitudeState::new(
        std::iter::repeat_n(spec.p, m).chain([1]).collect(),
        amplitudes,
    )?;
    let n_t = raw.norm();
    Ok(GroverOutput {
        state: raw.normalized()?,
        n_t,
        success_prob: n_t * n_t / 2.0,
        t,
        l,
        max_abs_f,
        outside_linear_fraction: outside as f64 / total as f64,
    })
}

/// The ideal target of Grover-like repetition before sign correction:
/// `2^(-pM/2) cos(t (pi/2 - sigma'^-1 sum_(j<=M+1) x_j <O~_j>))`.
pub fn grover_ideal_state(spec: &ProbingSpec, model: &ProbingModel) -> Result<AmplitudeState> {
    let ProbingModel::GroverRepetition { l, sigmap, .. } = *model else {
        return Err(Error::Config("grover_ideal_state needs the GroverRepetition model".into()));
    };
    spec.validate()?;
    check_dense(spec, 1)?;
    let reg = spec.register();
    let anc = GridRegister::new(1)?;
    let n = reg.len();
    let m = spec.m();
    let o_anc = ancilla_expectation(spec.p, spec.q, admissible_l(spec.p, spec.q, l));
    let shifted = spec.shifted_expectations();
    let t = ((1u64 << (spec.p + spec.q + 2)) as f64) * sigmap;
    let pts = reg.points();
    let scale = (n as f64).powi(m as i32).sqrt().recip();
    let amplitudes = (0..n.pow(m as u32) * 2)
        .map(|idx| {
            let y = anc.point(idx & 1);
            let mut probe = idx >> 1;
            let mut s = y * o_anc;
            for j in (0..m).rev() {
                s += pts[probe % n] * shifted[j];
                probe /= n;
            }
            // t pi/2 is a multiple of 2 pi, so only the linear part matters.
            Complex64::new(scale * (t * s / sigmap).cos(), 0.0)
        })
        .collect();
    AmplitudeState::new(std::iter::repeat_n(spec.p, m).chain([1]).collect(), amplitudes)
}

/// Unitary part of the sign correction: inverse grid transform on the
/// ancilla, then the reflection `x -> -x` of every probe register where the
/// ancilla reads `|-1/4>` (index 0).
pub fn sign_correction_full(state: &AmplitudeState) -> Result<AmplitudeState> {
    let last = state.num_registers().checked_sub(1).ok_or_else(|| invalid("empty state"))?;
    if state.p_per_register[last] != 1 {
        return Err(invalid("sign correction needs a one-qubit last register"));
    }
    let mut out = state.clone();
    out.apply_register_op(last, &qft_grid(1)?.adjoint())?;
    let probe_dim = out.amplitudes.len() / 2;
    // Complementing every digit of every register reverses the probe index.
    let mut flipped = out.amplitudes.clone();
    for probe in 0..probe_dim {
        flipped[2 * probe] = out.amplitudes[2 * (probe_dim - 1 - probe)];
    }
    out.amplitudes = flipped;
    Ok(out)
}

/// Sign correction followed by projecting the ancilla onto `|+>` and
/// renormalising; returns the probe-only state over `G_p^M`.
pub fn sign_correction(state: &AmplitudeState) -> Result<AmplitudeState> {
    let full = sign_correction_full(state)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let probe: Vec<Complex64> = full
        .amplitudes
        .chunks_exact(2)
        .map(|c| (c[0] + c[1]) * s)
        .collect();
    let regs = full.p_per_register[..full.num_registers() - 1].to_vec();
    AmplitudeState::new(regs, probe)?.normalized()
}

/// `|psi> (x) |+>` for a probe state `psi`.
pub fn with_plus_ancilla(state: &AmplitudeState) -> Result<AmplitudeState> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = state.amplitudes.iter().flat_map(|&a| [a * s, a * s]).collect();
    AmplitudeState::new(
        state.p_per_register.iter().copied().chain([1]).collect(),
        amps,
    )
}

/// Distances of a corrected Grover preparation to the probing state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroverCheck {
    /// `|| corrected full state - |Upsilon> (x) |+> ||`.
    pub full_distance: f64,
    /// `|| projected probe state - |Upsilon> ||`.
    pub probe_distance: f64,
    pub n_t: f64,
    pub success_prob: f64,
    pub max_abs_f: f64,
}

/// Builds the Grover state, corrects its sign and compares with `|Upsilon(q)>`.
pub fn grover_check(spec: &ProbingSpec, model: &ProbingModel) -> Result<GroverCheck> {
    let out = grover_state(spec, model)?;
    let target = probing_state(spec)?;
    let full = sign_correction_full(&out.state)?;
    let full_distance = euclidean_distance(&full, &with_plus_ancilla(&target)?)?;
    let probe_distance = euclidean_distance(&sign_correction(&out.state)?, &target)?;
    Ok(GroverCheck {
        full_distance,
        probe_distance,
        n_t: out.n_t,
        success_prob: out.success_prob,
        max_abs_f: out.max_abs_f,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn spec(q: u32, u: Vec<f64>, g: Vec<f64>) -> ProbingSpec {
        ProbingSpec::new(3, q, u, g).unwrap()
    }

    #[test]
    fn effective_gradient_examples() {
        assert_eq!(effective_gradients(&spec(0, vec![0.0; 3], vec![0.0; 3])), vec![0.0; 3]);
        let g = effective_gradients(&spec(2, vec![0.5], vec![0.75]));
        assert_abs_diff_eq!(g[0], 1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(ProbingSpec::new(3, 0, vec![0.0], vec![0.0, 0.1]).is_err());
        assert!(ProbingSpec::new(3, 0, vec![1.5], vec![0.0]).is_err());
        assert!(ProbingSpec::new(0, 0, vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn probing_state_marginals_factorise() {
        let s = spec(1, vec![0.1, -0.3], vec![0.2, 0.05]);
        let fourier = to_fourier_basis(&probing_state(&s).unwrap()).unwrap();
        for (j, g) in effective_gradients(&s).into_iter().enumerate() {
            let exact = linear_phase_outcome_dist(3, g).unwrap();
            for (a, b) in fourier.marginal(j).iter().zip(exact.pmf()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ideal_sampler_is_deterministic_and_constant_on_grid() {
        let reg = GridRegister::new(3).unwrap();
        // g_eff = reg.point(6) at q = 0 requires g - u = pi * point.
        let g = PI * reg.point(6) / 4.0;
        let s = ProbingSpec::new(3, 2, vec![0.0], vec![g]).unwrap();
        let a = ideal_sampler(&s, 50, 9).unwrap();
        assert!(a.iter().all(|v| (v[0] - reg.point(6)).abs() < 1e-12));
        let s2 = spec(0, vec![0.0, 0.2], vec![0.3, -0.1]);
        assert_eq!(ideal_sampler(&s2, 20, 3).unwrap(), ideal_sampler(&s2, 20, 3).unwrap());
        assert_eq!(
            corrupted_sampler(&s2, 20, 0.0, 3).unwrap(),
            ideal_sampler(&s2, 20, 3).unwrap()
        );
    }

    #[test]
    fn ideal_sampler_matches_pmf() {
        let s = spec(0, vec![0.0], vec![0.37]);
        let shots = 100_000;
        let samples = ideal_sampler(&s, shots, 11).unwrap();
        let reg = s.register();
        let mut counts = vec![0.0; reg.len()];
        for v in &samples {
            counts[reg.index_of(v[0]).unwrap()] += 1.0 / shots as f64;
        }
        let exact = linear_phase_outcome_dist(3, effective_gradients(&s)[0]).unwrap();
        assert!(exact.total_variation(&counts) <= 0.01);
    }

    #[test]
    fn exact_sampler_agrees_with_factorised_sampler() {
        let s = spec(1, vec![0.2], vec![-0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shots = 40_000;
        let samples = sample_exact(&probing_state(&s).unwrap(), shots, &mut rng).unwrap();
        let reg = s.register();
        let mut counts = vec![0.0; reg.len()];
        for v in &samples {
            counts[reg.index_of(v[0]).unwrap()] += 1.0 / shots as f64;
        }
        let exact = linear_phase_outcome_dist(3, effective_gradients(&s)[0]).unwrap();
        assert!(exact.total_variation(&counts) <= 0.015);
    }

    #[test]
    fn corruption_raises_failure_rate_within_budget() {
        let s = spec(0, vec![0.0; 4], vec![0.9, -0.8, 0.1, 0.5]);
        let shots = 50_000;
        let samples = corrupted_sampler(&s, shots, STATE_ERROR_BUDGET, 21).unwrap();
        let geff = effective_gradients(&s);
        for j in 0..4 {
            let fails = samples
                .iter()
                .filter(|v| (v[j] - geff[j]).abs() > 1.0 / (2.0 * PI))
                .count() as f64
                / shots as f64;
            assert!(fails < 0.18 + STATE_ERROR_BUDGET + 0.01, "j={j} rate={fails}");
        }
        assert!(corrupted_sampler(&s, 10, 0.2, 1).is_err());
    }

    #[test]
    fn error_budget_constants() {
        assert!(hs_error_budget(HS_EPS2, HS_DELTA_PRIME) < STATE_ERROR_BUDGET);
        assert_eq!(hs_error_budget(0.0, 0.0), 0.0);
        assert!(hs_error_budget(1e-3, 1e-3) < hs_error_budget(2e-3, 1e-3));
        assert!(hs_error_budget(1e-3, 1e-3) < hs_error_budget(1e-3, 2e-3));
    }

    #[test]
    fn arccos_gap_bound() {
        assert_eq!(arccos_linearity_gap(0.0).unwrap(), 0.0);
        assert!(arccos_linearity_gap(0.25).unwrap() <= 0.25f64.powi(3) / 5.0);
        assert!(arccos_linearity_gap(0.3).is_err());
    }

    #[test]
    fn distance_basics() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let a = AmplitudeState::new(vec![1], vec![one, zero]).unwrap();
        let b = AmplitudeState::new(vec![1], vec![zero, one]).unwrap();
        assert_eq!(euclidean_distance(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(euclidean_distance(&a, &b).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let c = AmplitudeState::new(vec![2], vec![one; 4]).unwrap();
        assert!(euclidean_distance(&a, &c).is_err());
    }

    #[test]
    fn sign_correction_of_ideal_target_is_exact() {
        for m in 1..=3 {
            let u: Vec<f64> = (0..m).map(|j| 0.1 * j as f64 - 0.1).collect();
            let g: Vec<f64> = (0..m).map(|j| 0.05 * j as f64 - 0.06).collect();
            let s = spec(2, u, g);
            let model = ProbingModel::grover(m, 2.0);
            let ideal = grover_ideal_state(&s, &model).unwrap();
            assert_abs_diff_eq!(ideal.norm(), 1.0, epsilon = 1e-12);
            let corrected = sign_correction_full(&ideal).unwrap();
            let target = with_plus_ancilla(&probing_state(&s).unwrap()).unwrap();
            assert!(euclidean_distance(&corrected, &target).unwrap() < 1e-10, "m={m}");
        }
    }

    #[test]
    fn reflection_is_index_complement() {
        let reg = GridRegister::new(3).unwrap();
        for m in 1..=3u32 {
            let dim = 1usize << (3 * m);
            for idx in 0..dim {
                let mut a = idx;
                let mut b = dim - 1 - idx;
                for _ in 0..m {
                    assert_eq!(reg.point(a % 8), -reg.point(b % 8));
                    a /= 8;
                    b /= 8;
                }
            }
        }
    }

    #[test]
    fn sign_correction_preserves_distance() {
        let s = spec(1, vec![0.1, 0.0], vec![0.3, -0.2]);
        let model = ProbingModel::grover(2, 2.0);
        let a = grover_state(&s, &model).unwrap().state;
        let b = grover_ideal_state(&s, &model).unwrap();
        let before = euclidean_distance(&a, &b).unwrap();
        let after = euclidean_distance(&sign_correction_full(&a).unwrap(), &sign_correction_full(&b).unwrap()).unwrap();
        assert_abs_diff_eq!(before, after, epsilon = 1e-12);
    }

    #[test]
    fn grover_chebyshev_matches_brute_force() {
        let s = spec(3, vec![0.0], vec![0.0]);
        let model = ProbingModel::grover(1, 2.0);
        let out = grover_state(&s, &model).unwrap();
        let ProbingModel::GroverRepetition { sigmap, .. } = model else { unreachable!() };
        let o_anc = ancilla_expectation(3, 3, 0);
        let scale = out.n_t * (8f64).sqrt();
        for (idx, a) in out.state.amplitudes().iter().enumerate() {
            let y = if idx & 1 == 0 { -0.25 } else { 0.25 };
            let f = y * o_anc / sigmap;
            let brute = (out.t as f64 * f.acos()).cos();
            assert_abs_diff_eq!(a.re * scale, brute, epsilon = 1e-10);
            // Three-term recurrence oracle.
            let (mut t0, mut t1) = (1.0, f);
            for _ in 1..out.t {
                let t2 = 2.0 * f * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
            assert_abs_diff_eq!(a.re * scale, t1, epsilon = 1e-8);
        }
    }

    #[test]
    fn grover_preparation_within_budget() {
        // q = 4 exceeds the applicability threshold for d = 2 and M <= 2.
        let q = 4;
        let bound = 1.0 / (1u64 << (q + 1)) as f64;
        for m in 1..=2 {
            let u: Vec<f64> = (0..m).map(|j| 0.3 - 0.2 * j as f64).collect();
            let g: Vec<f64> = u.iter().enumerate().map(|(j, x)| x + bound * if j % 2 == 0 { 1.5 } else { -1.2 }).collect();
            let s = spec(q, u, g);
            let c = grover_check(&s, &ProbingModel::grover(m, 2.0)).unwrap();
            assert!(c.full_distance <= STATE_ERROR_BUDGET, "{c:?}");
            assert!(c.success_prob >= GROVER_SUCCESS_PROB, "{c:?}");
            let slack = 2.0 * (6.0 * GROVER_DELTA_PRIME).sqrt();
            assert!((c.n_t - 1.0).abs() <= slack, "{c:?}");
        }
    }

    #[test]
    fn l_is_pulled_towards_zero() {
        assert_eq!(admissible_l(3, 2, 0), 0);
        assert_eq!(admissible_l(3, 2, 5), 0);
        assert_eq!(admissible_l(3, 2, -5), 0);
    }

    proptest! {
        #[test]
        fn hoeffding_fraction_is_small(seed in 0u64..1000) {
            let w: Vec<f64> = (0..6).map(|j| ((seed + j) % 7) as f64 / 7.0 - 0.4).collect();
            let frac = hoeffding_subset_fraction(&w, 3, 0.1, 4000, seed).unwrap();
            let sd = (0.1f64 * 0.9 / 4000.0).sqrt();
            prop_assert!(frac <= 0.1 + 3.0 * sd);
        }

        #[test]
        fn samples_lie_on_grid(g in -1.0f64..1.0, u in -1.0f64..1.0, q in 0u32..6) {
            let s = ProbingSpec::new(3, q, vec![u], vec![g]).unwrap();
            let reg = s.register();
            for v in ideal_sampler(&s, 16, 1).unwrap() {
                prop_assert!(reg.index_of(v[0]).is_some());
            }
        }
    }
}
