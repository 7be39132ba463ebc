//! Closed-form query and qubit accounting.
//!
//! Covers the Hamiltonian-simulation cost `Q(t)` per probing state, the total
//! `T_adapt` of the adaptive algorithm and its proof bound, qubit counts for
//! both preparation routes and for the baseline, the iteration threshold
//! above which Grover-like repetition applies, and the `B_M` variant.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::probing::{GROVER_DELTA_PRIME, GROVER_SUCCESS_PROB, HS_DELTA_PRIME};

/// Precision qubits per observable in the adaptive algorithm.
pub const P: u32 = 3;
/// Shot constant of the median trick.
pub const SHOT_CONSTANT: f64 = 9.0;
/// Target of the Hamiltonian-simulation truncation, `2^-17`.
pub const HS_TRUNCATION_LN: f64 = -17.0 * std::f64::consts::LN_2;

/// Largest admissible confidence parameter, `3 / (8 (1 + pi)^2)`.
pub fn default_c() -> f64 {
    3.0 / (8.0 * (1.0 + std::f64::consts::PI).powi(2))
}

/// `ceil(log2(1/eps))`.
pub fn q_max(eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok((-eps.log2()).ceil() as u32)
}

/// `delta^(q) = c / 8^(q_max - q)`.
pub fn delta_q(c: f64, q_max: u32, q: u32) -> f64 {
    c / 8f64.powi((q_max - q) as i32)
}

/// `ceil(k ln(M / delta))` with `k` the shot constant.
pub fn shot_count_with(m: usize, delta: f64, constant: f64) -> Result<u64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if m == 0 {
        return Err(invalid("M must be positive"));
    }
    Ok((constant * (m as f64 / delta).ln()).ceil() as u64)
}

/// `ceil(9 ln(M / delta))`.
pub fn shot_count(m: usize, delta: f64) -> Result<u64> {
    shot_count_with(m, delta, SHOT_CONSTANT)
}

fn ln_term(t: f64, q: u64) -> f64 {
    let qf = q as f64;
    4f64.ln() + qf * (t.ln() - std::f64::consts::LN_2) - ln_gamma(qf + 1.0)
}

/// Smallest integer `Q` with `4 t^Q / (2^Q Q!) <= 2^-17`.
pub fn hamiltonian_sim_q(t: f64) -> Result<u64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("t must be positive and finite, got {t}")));
    }
    let ok = |q: u64| ln_term(t, q) <= HS_TRUNCATION_LN;
    // The term grows while Q < t/2, so the answer lies beyond that point
    // where the term is decreasing.
    let mut lo = (t / 2.0).floor() as u64;
    if ok(lo) {
        // Only possible for tiny t; search from zero.
        return Ok((0..=lo).find(|&q| ok(q)).unwrap_or(lo));
    }
    let mut step = 1u64;
    let mut hi = lo + step;
    while !ok(hi) {
        lo = hi;
        step *= 2;
        hi = lo + step;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The explicit bound `1.5 t + 126` on `Q(t)`.
pub fn hamiltonian_sim_q_bound(t: f64) -> f64 {
    1.5 * t + 126.0
}

/// Evolution time `t = 2^(5+q) sqrt(2 M ln(2^11 d))` of the Hamiltonian simulation.
pub fn hs_evolution_time(m: usize, d: f64, q: u32) -> f64 {
    2f64.powi(5 + q as i32) * (2.0 * m as f64 * (2048.0 * d).ln()).sqrt()
}

/// Queries to the state preparation and its inverse per probing state
/// prepared by Hamiltonian simulation, `2 Q(q)`.
pub fn hs_queries_per_shot(m: usize, d: f64, q: u32) -> Result<u64> {
    Ok(2 * hamiltonian_sim_q(hs_evolution_time(m, d, q))?)
}

/// Chebyshev degree `t = 2^(p+q+2) sigma'` of Grover-like repetition.
pub fn grover_degree(q: u32, sigmap: f64) -> f64 {
    2f64.powi((P + q + 2) as i32) * sigmap
}

/// Expected queries per accepted probing state prepared by Grover-like
/// repetition: `2t` per attempt with `1/0.462` expected attempts.
pub fn grover_queries_per_shot(q: u32, sigmap: f64) -> u64 {
    (2.0 * grover_degree(q, sigmap) / GROVER_SUCCESS_PROB).ceil() as u64
}

/// `sigma = ceil(sqrt(2 M ln(2d/delta')))` and whether `sigma < M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sigma {
    pub sigma: f64,
    pub valid: bool,
}

pub fn sigma(m: f64, d: f64, deltap: f64) -> Result<Sigma> {
    if !(deltap > 0.0 && deltap < 1.0) {
        return Err(invalid("delta' must lie in (0, 1)"));
    }
    let sigma = (2.0 * m * (2.0 * d / deltap).ln()).sqrt().ceil();
    Ok(Sigma {
        sigma,
        valid: sigma < m,
    })
}

/// Preparation route.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    HamiltonianSim,
    Grover,
}

/// One iteration of the query ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRow {
    pub q: u32,
    pub route: Route,
    /// Evolution time (HS) or Chebyshev degree (Grover).
    pub t: f64,
    /// Truncation order `Q(q)`; zero for Grover rows.
    pub big_q: u64,
    pub shots: u64,
    pub queries_per_shot: u64,
    pub queries: u64,
}

/// Per-iteration and total query counts of the adaptive algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub method: Route,
    pub per_q: Vec<QueryRow>,
    pub total: u64,
    pub qubit_count: u64,
}

fn hs_row(m: usize, d: f64, q: u32, shots: u64) -> Result<QueryRow> {
    let t = hs_evolution_time(m, d, q);
    let big_q = hamiltonian_sim_q(t)?;
    Ok(QueryRow {
        q,
        route: Route::HamiltonianSim,
        t,
        big_q,
        shots,
        queries_per_shot: 2 * big_q,
        queries: 2 * big_q * shots,
    })
}

/// `T_adapt = sum_q 2 Q(q) ceil(9 ln(M/delta^(q)))` with Hamiltonian simulation.
pub fn adaptive_queries(m: usize, d: f64, eps: f64, c: f64) -> Result<QueryLedger> {
    check_c(c)?;
    let qm = q_max(eps)?;
    let per_q = (0..=qm)
        .map(|q| hs_row(m, d, q, shot_count(m, delta_q(c, qm, q))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryLedger {
        method: Route::HamiltonianSim,
        total: per_q.iter().map(|r| r.queries).sum(),
        per_q,
        qubit_count: qubit_counts(m, d, 1, Method::HamiltonianSim)?,
    })
}

/// Like [`adaptive_queries`], but iterations at or above the Grover threshold
/// use Grover-like repetition (with expected retries).
pub fn adaptive_queries_grover(m: usize, d: f64, eps: f64, c: f64) -> Result<QueryLedger> {
    check_c(c)?;
    let qm = q_max(eps)?;
    let report = grover_threshold(m as f64, d.log2(), P, GROVER_DELTA_PRIME)?;
    let first = report.q_star.ceil().max(0.0) as u32;
    let per_q = (0..=qm)
        .map(|q| {
            let shots = shot_count(m, delta_q(c, qm, q))?;
            if q >= first {
                let per = grover_queries_per_shot(q, report.sigma_p);
                Ok(QueryRow {
                    q,
                    route: Route::Grover,
                    t: grover_degree(q, report.sigma_p),
                    big_q: 0,
                    shots,
                    queries_per_shot: per,
                    queries: per * shots,
                })
            } else {
                hs_row(m, d, q, shots)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryLedger {
        method: Route::Grover,
        total: per_q.iter().map(|r| r.queries).sum(),
        per_q,
        qubit_count: qubit_counts(m, d, 1, Method::Grover)?,
    })
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= default_c() * (1.0 + 1e-12)) {
        return Err(invalid(format!("c must lie in (0, 3/(8(1+pi)^2)], got {c}")));
    }
    Ok(())
}

/// `sum_(q=0)^(q_max) 2^q ln(M / delta^(q))` by direct summation.
pub fn log_sum_direct(m: f64, c: f64, q_max: u32) -> f64 {
    (0..=q_max)
        .map(|q| 2f64.powi(q as i32) * (m / delta_q(c, q_max, q)).ln())
        .sum()
}

/// Closed form `2^(q_max+1) ln(8M/c) - (q_max+2) ln 8 - ln(M/c)` of [`log_sum_direct`].
pub fn log_sum_closed(m: f64, c: f64, q_max: u32) -> f64 {
    2f64.powi(q_max as i32 + 1) * (8.0 * m / c).ln()
        - (q_max as f64 + 2.0) * 8f64.ln()
        - (m / c).ln()
}

/// `9 2^(p+2) sigma sum_q 2^q ln(M/delta^(q))` with `sigma` at `delta' = 2^-10`.
pub fn closed_form_bound(m: usize, d: f64, eps: f64, c: f64) -> Result<f64> {
    let s = sigma(m as f64, d, HS_DELTA_PRIME)?.sigma;
    closed_form_bound_with_sigma(m, s, eps, c)
}

fn closed_form_bound_with_sigma(m: usize, s: f64, eps: f64, c: f64) -> Result<f64> {
    let qm = q_max(eps)?;
    Ok(SHOT_CONSTANT * 2f64.powi(P as i32 + 2) * s * log_sum_direct(m as f64, c, qm))
}

/// Qubit-count formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// `3M + ceil(log2 M) + log2 d + a + 9`.
    HamiltonianSim,
    /// `3M + ceil(log2(M+1)) + log2 d + a + 8`.
    Grover,
    /// `ceil(log2(24/eps_add)) M`.
    BaselineApprox { eps_add: f64 },
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn ceil_log2(n: u64) -> u64 {
    assert!(n >= 1);
    (64 - (n - 1).leading_zeros()) as u64
}

/// Total qubits for `M` observables on `log2 d` system qubits with `a`
/// block-encoding ancillas.
pub fn qubit_counts(m: usize, d: f64, a: u64, method: Method) -> Result<u64> {
    if m == 0 {
        return Err(invalid("M must be positive"));
    }
    let log_d = d.log2();
    if !(d >= 1.0) || log_d.fract() != 0.0 {
        return Err(invalid(format!("d must be a power of two, got {d}")));
    }
    let m64 = m as u64;
    let log_d = log_d as u64;
    Ok(match method {
        Method::HamiltonianSim => 3 * m64 + ceil_log2(m64) + log_d + a + 9,
        Method::Grover => 3 * m64 + ceil_log2(m64 + 1) + log_d + a + 8,
        Method::BaselineApprox { eps_add } => {
            if !(eps_add > 0.0) {
                return Err(invalid("eps_add must be positive"));
            }
            (24.0 / eps_add).log2().ceil().max(0.0) as u64 * m64
        }
    })
}

/// `C(p) = 2^p 33^3 / 625`.
pub fn threshold_constant(p: u32) -> f64 {
    2f64.powi(p as i32) * 33f64.powi(3) / 625.0
}

/// Where Grover-like repetition becomes applicable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub m: f64,
    /// `log2 d`.
    pub n_qubits: f64,
    pub delta_p: f64,
    pub sigma_p: f64,
    pub q_star: f64,
    pub eps_star: f64,
}

impl ThresholdReport {
    /// Iterations `[ceil(q*), q_max]` that may use Grover-like repetition
    /// for target precision `eps`; `None` when empty.
    pub fn grover_range(&self, eps: f64) -> Result<Option<(u32, u32)>> {
        let qm = q_max(eps)?;
        let first = self.q_star.ceil().max(0.0) as u32;
        Ok((first <= qm).then_some((first, qm)))
    }
}

/// `1/eps* = sqrt(C ln^(-3/2)(2d/delta') sigma')`, `q* = log2(1/eps*)`, with
/// `d = 2^n_qubits` (kept in log form so that huge systems stay finite).
pub fn grover_threshold(m: f64, n_qubits: f64, p: u32, deltap: f64) -> Result<ThresholdReport> {
    if !(m >= 1.0) {
        return Err(invalid("M must be at least 1"));
    }
    if !(deltap > 0.0 && deltap < 1.0) {
        return Err(invalid("delta' must lie in (0, 1)"));
    }
    let ln_ratio = (n_qubits + 1.0) * std::f64::consts::LN_2 - deltap.ln();
    let sigma_p = (2.0 * (m + 1.0) * ln_ratio).sqrt().ceil();
    let inv_eps_sq = threshold_constant(p) * ln_ratio.powf(-1.5) * sigma_p;
    let q_star = 0.5 * inv_eps_sq.log2();
    Ok(ThresholdReport {
        m,
        n_qubits,
        delta_p: deltap,
        sigma_p,
        q_star,
        eps_star: 2f64.powf(-q_star),
    })
}

/// Accounting of the variant that knows `B_M >= ||sum_j O_j^2||`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BmReport {
    /// `sqrt(2 B_M ln(2d/delta'))` at the Hamiltonian-simulation `delta'`.
    pub sigma_bar: f64,
    /// `ceil(sqrt(2(B_M + 4^(-q-1)) ln(2d/delta')) + 2^(-q-1) sqrt(2(M+1) ln(2/delta')))`
    /// at the Grover `delta'`.
    pub sigma_bar_p: f64,
    pub cond1: bool,
    pub cond2: bool,
    /// Closed-form bound with `ceil(sigma_bar)` in place of `sigma`.
    pub t_adapt_bm: f64,
}

pub fn bm_variant(m: usize, d: f64, b_m: f64, q: u32, eps: f64, c: f64) -> Result<BmReport> {
    let mf = m as f64;
    if !(b_m > 0.0 && b_m <= mf) {
        return Err(invalid(format!("B_M must lie in (0, M], got {b_m}")));
    }
    let ln_hs = (2.0 * d / HS_DELTA_PRIME).ln();
    let sigma_bar = (2.0 * b_m * ln_hs).sqrt();

    let dp = GROVER_DELTA_PRIME;
    let ln_g = (2.0 * d / dp).ln();
    let ln_2 = (2.0 / dp).ln();
    let quarter = 4f64.powi(-(q as i32) - 1);
    let half = 2f64.powi(-(q as i32) - 1);
    let lead = (2.0 * (b_m + quarter) * ln_g).sqrt();
    let tail = (2.0 * (mf + 1.0) * ln_2).sqrt();
    let sigma_bar_p = (lead + half * tail).ceil();
    let cond1 = 2f64.powi(q as i32 + 1) * lead > tail;
    let t = 2f64.powi((P + q + 2) as i32) * sigma_bar_p;
    let inner = (dp.sqrt() / 2f64.powi(P as i32) + tail) / (2f64.powi(q as i32 + 2) * sigma_bar_p);
    let cond2 = t / 5.0 * inner.powi(3) <= dp.sqrt();
    Ok(BmReport {
        sigma_bar,
        sigma_bar_p,
        cond1,
        cond2,
        t_adapt_bm: closed_form_bound_with_sigma(m, sigma_bar.ceil(), eps, c)?,
    })
}

/// Observable-count law used in threshold sweeps, with `N = log2 d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MLaw {
    NSquared,
    NCubed,
    NFourth,
    TwoToN,
}

impl MLaw {
    pub const ALL: [MLaw; 4] = [MLaw::NSquared, MLaw::NCubed, MLaw::NFourth, MLaw::TwoToN];

    pub fn value(&self, n: f64) -> f64 {
        match self {
            MLaw::NSquared => n.powi(2),
            MLaw::NCubed => n.powi(3),
            MLaw::NFourth => n.powi(4),
            MLaw::TwoToN => 2f64.powf(n),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            MLaw::NSquared => "N^2",
            MLaw::NCubed => "N^3",
            MLaw::NFourth => "N^4",
            MLaw::TwoToN => "2^N",
        }
    }
}
