//! The adaptive estimator.
//!
//! Starting from `u = 0`, iteration `q = 0..=q_max` prepares
//! `ceil(9 ln(M/delta^(q)))` probing states at the current estimates, reads
//! each out in the Fourier basis, takes coordinate-wise medians `g^(q)` and
//! moves `u_j <- clamp(u_j + pi 2^-q g_j^(q), -1, 1)`. The error is zoomed by
//! `2^q` every round, which is what gives the `1/eps` query scaling.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::probing::{
    corrupted_sampler_with, effective_gradients, grover_state, hs_error_budget, sample_exact,
    sign_correction, ProbingModel, ProbingSpec, MAX_DENSE_STATE_QUBITS, STATE_ERROR_BUDGET,
};
use crate::resources::{
    default_c, delta_q, grover_queries_per_shot, grover_threshold, hs_queries_per_shot, q_max,
    shot_count_with, Route, P, SHOT_CONSTANT,
};
use crate::seed::{stream_rng, stream_seed, DEFAULT_SEED};

/// Inputs of one adaptive run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub m: usize,
    /// System dimension (a power of two); enters only the query accounting
    /// and the Grover threshold.
    pub d: f64,
    /// Target root mean-squared error.
    pub eps: f64,
    pub c: f64,
    pub g_true: Vec<f64>,
    pub model: ProbingModel,
    pub seed: u64,
    /// Constant `k` in `ceil(k ln(M/delta))`; 9 unless overridden.
    pub shot_constant: f64,
}

impl AdaptiveConfig {
    /// Ideal model, `d = 2`, the largest admissible `c`, seed 42.
    pub fn new(g_true: Vec<f64>, eps: f64) -> Self {
        Self {
            m: g_true.len(),
            d: 2.0,
            eps,
            c: default_c(),
            g_true,
            model: ProbingModel::Ideal,
            seed: DEFAULT_SEED,
            shot_constant: SHOT_CONSTANT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.g_true.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: self.g_true.len(),
            });
        }
        if !self.g_true.iter().all(|g| g.abs() <= 1.0) {
            return Err(invalid("expectation values must lie in [-1, 1]"));
        }
        q_max(self.eps)?;
        if !(self.c > 0.0 && self.c <= default_c() * (1.0 + 1e-12)) {
            return Err(invalid(format!("c must lie in (0, 3/(8(1+pi)^2)], got {}", self.c)));
        }
        let log_d = self.d.log2();
        if !(self.d >= 1.0) || log_d.fract() != 0.0 {
            return Err(invalid(format!("d must be a power of two, got {}", self.d)));
        }
        if !(self.shot_constant > 0.0) {
            return Err(invalid("shot constant must be positive"));
        }
        self.model.validate()
    }
}

/// How samples of one round were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    /// Independent per-coordinate draws from the exact linear-phase statistics.
    Factorized,
    /// Factorized draws with worst-case corruption at the model's error budget.
    Corrupted,
    /// Joint draws from a dense prepared state.
    Exact,
}

/// Ledger entry of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub q: u32,
    pub delta_q: f64,
    pub shots: u64,
    pub medians: Vec<f64>,
    pub u_before: Vec<f64>,
    pub u_after: Vec<f64>,
    pub queries_this_round: u64,
    pub route: Route,
    pub sampler: Sampler,
    /// Simulation-only diagnostic: every median within `1/(2 pi)` of its
    /// effective gradient.
    pub succeeded: bool,
}

/// Output of [`run_adaptive`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub estimates: Vec<f64>,
    pub ledger: Vec<IterationRecord>,
    pub total_queries: u64,
    /// Simulation-only diagnostic derived from `g_true`.
    pub all_rounds_succeeded: bool,
    pub first_failed_round: Option<u32>,
}

/// Coordinate-wise median; even counts take the lower middle order statistic.
pub fn coordinate_median(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = samples.first().ok_or_else(|| invalid("no samples"))?;
    let m = first.len();
    if samples.iter().any(|s| s.len() != m) {
        return Err(invalid("samples have different lengths"));
    }
    let mid = (samples.len() - 1) / 2;
    let mut col = vec![0.0; samples.len()];
    Ok((0..m)
        .map(|j| {
            for (c, s) in col.iter_mut().zip(samples) {
                *c = s[j];
            }
            *col.select_nth_unstable_by(mid, f64::total_cmp).1
        })
        .collect())
}

/// `clamp(u + pi 2^-q g, -1, 1)`.
pub fn update_step(u: f64, median: f64, q: u32) -> f64 {
    (u + PI * median / (1u64 << q) as f64).clamp(-1.0, 1.0)
}

/// Precomputed per-round schedule shared by all runs of a configuration.
#[derive(Clone, Debug)]
struct RoundPlan {
    q: u32,
    delta: f64,
    shots: u64,
    route: Route,
    queries_per_shot: u64,
}

fn plan(config: &AdaptiveConfig) -> Result<Vec<RoundPlan>> {
    config.validate()?;
    let qm = q_max(config.eps)?;
    let grover_from = match config.model {
        ProbingModel::GroverRepetition { deltap, .. } => {
            let r = grover_threshold(config.m as f64, config.d.log2(), P, deltap)?;
            Some(r.q_star.ceil().max(0.0) as u32)
        }
        _ => None,
    };
    (0..=qm)
        .map(|q| {
            let delta = delta_q(config.c, qm, q);
            let shots = shot_count_with(config.m, delta, config.shot_constant)?;
            let (route, per) = match (config.model, grover_from) {
                (ProbingModel::GroverRepetition { sigmap, .. }, Some(from)) if q >= from => {
                    (Route::Grover, grover_queries_per_shot(q, sigmap))
                }
                _ => (Route::HamiltonianSim, hs_queries_per_shot(config.m, config.d, q)?),
            };
            Ok(RoundPlan {
                q,
                delta,
                shots,
                route,
                queries_per_shot: per,
            })
        })
        .collect()
}

fn run_with_plan(config: &AdaptiveConfig, plan: &[RoundPlan], seed: u64) -> Result<RunResult> {
    let mut main = stream_rng(seed, 0);
    let mut side = stream_rng(seed, 1);
    let m = config.m;
    let dense_ok = (P as usize) * m < MAX_DENSE_STATE_QUBITS as usize;
    let hs_corruption = match config.model {
        ProbingModel::HamiltonianSim { eps2, deltap } => hs_error_budget(eps2, deltap).min(STATE_ERROR_BUDGET),
        _ => STATE_ERROR_BUDGET,
    };

    let mut u = vec![0.0; m];
    let mut ledger = Vec::with_capacity(plan.len());
    for round in plan {
        let spec = ProbingSpec {
            p: P,
            q: round.q,
            u_tilde: u.clone(),
            g_true: config.g_true.clone(),
        };
        let shots = round.shots as usize;
        let (samples, sampler) = match (config.model, round.route) {
            (ProbingModel::Ideal, _) => (corrupted_sampler_with(&spec, shots, 0.0, &mut main, &mut side)?, Sampler::Factorized),
            (ProbingModel::GroverRepetition { .. }, Route::Grover) if dense_ok => {
                let prepared = grover_state(&spec, &config.model)?;
                let probe = sign_correction(&prepared.state)?;
                (sample_exact(&probe, shots, &mut main)?, Sampler::Exact)
            }
            _ => (
                corrupted_sampler_with(&spec, shots, hs_corruption, &mut main, &mut side)?,
                Sampler::Corrupted,
            ),
        };
        let medians = coordinate_median(&samples)?;
        let geff = effective_gradients(&spec);
        let succeeded = medians
            .iter()
            .zip(&geff)
            .all(|(k, g)| (k - g).abs() <= 1.0 / (2.0 * PI));
        let u_after: Vec<f64> = u
            .iter()
            .zip(&medians)
            .map(|(&uj, &k)| update_step(uj, k, round.q))
            .collect();
        ledger.push(IterationRecord {
            q: round.q,
            delta_q: round.delta,
            shots: round.shots,
            medians,
            u_before: std::mem::replace(&mut u, u_after.clone()),
            u_after,
            queries_this_round: round.shots * round.queries_per_shot,
            route: round.route,
            sampler,
            succeeded,
        });
    }
    let first_failed_round = ledger.iter().find(|r| !r.succeeded).map(|r| r.q);
    Ok(RunResult {
        estimates: u,
        total_queries: ledger.iter().map(|r| r.queries_this_round).sum(),
        all_rounds_succeeded: first_failed_round.is_none(),
        first_failed_round,
        ledger,
    })
}

/// Runs the adaptive algorithm once; deterministic in `config.seed`.
pub fn run_adaptive(config: &AdaptiveConfig) -> Result<RunResult> {
    let plan = plan(config)?;
    run_with_plan(config, &plan, config.seed)
}

/// Monte-Carlo estimate of the per-observable mean-squared error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub runs: usize,
    pub per_observable_mse: Vec<f64>,
    pub max_mse: f64,
    /// Normal-approximation 95% half-widths of `per_observable_mse`.
    pub ci95: Vec<f64>,
    pub mean_total_queries: f64,
    /// Fraction of runs in which every round succeeded.
    pub success_rate: f64,
    /// Largest `|u_j - <O_j>|` seen over all runs and observables.
    pub max_abs_error: f64,
}

impl MseReport {
    /// Half-width attached to the observable with the largest MSE.
    pub fn max_ci95(&self) -> f64 {
        let j = self
            .per_observable_mse
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j)
            .unwrap_or(0);
        self.ci95[j]
    }
}

/// Independent runs with seeds derived from `(config.seed, run_index)`.
pub fn mse_harness(config: &AdaptiveConfig, n_runs: usize) -> Result<MseReport> {
    if n_runs < 2 {
        return Err(invalid("the harness needs at least two runs"));
    }
    let plan = plan(config)?;
    let results: Vec<RunResult> = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| run_with_plan(config, &plan, stream_seed(config.seed, i)))
        .collect::<Result<_>>()?;

    let m = config.m;
    let n = n_runs as f64;
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    let mut max_abs_error: f64 = 0.0;
    for r in &results {
        for j in 0..m {
            let e = r.estimates[j] - config.g_true[j];
            let e2 = e * e;
            sum[j] += e2;
            sum_sq[j] += e2 * e2;
            max_abs_error = max_abs_error.max(e.abs());
        }
    }
    let per_observable_mse: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let ci95 = (0..m)
        .map(|j| {
            let mean = per_observable_mse[j];
            let var = ((sum_sq[j] / n - mean * mean) * n / (n - 1.0)).max(0.0);
            1.96 * (var / n).sqrt()
        })
        .collect();
    Ok(MseReport {
        runs: n_runs,
        max_mse: per_observable_mse.iter().cloned().fold(0.0, f64::max),
        per_observable_mse,
        ci95,
        mean_total_queries: results.iter().map(|r| r.total_queries as f64).sum::<f64>() / n,
        success_rate: results.iter().filter(|r| r.all_rounds_succeeded).count() as f64 / n,
        max_abs_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::g_set;
    use proptest::prelude::*;

    #[test]
    fn median_examples() {
        let a = -1.0 / 16.0;
        let b = 3.0 / 16.0;
        assert_eq!(coordinate_median(&[vec![0.1, 0.2]]).unwrap(), vec![0.1, 0.2]);
        assert_eq!(coordinate_median(&[vec![a], vec![a], vec![b]]).unwrap(), vec![a]);
        assert_eq!(coordinate_median(&[vec![b], vec![a]]).unwrap(), vec![a]);
        assert!(coordinate_median(&[]).is_err());
    }

    #[test]
    fn update_examples() {
        assert!((update_step(0.0, 0.25, 0) - PI / 4.0).abs() < 1e-15);
        assert_eq!(update_step(0.9, 0.5, 0), 1.0);
        assert_eq!(update_step(-0.9, -0.5, 0), -1.0);
    }

    #[test]
    fn update_halves_error_on_success() {
        for i in 0..200 {
            let q = i % 7;
            let o = -1.0 + 2.0 * (i as f64 * 0.618).fract();
            let w = 1.0 / (1u64 << q) as f64;
            let u = (o + w * (2.0 * (i as f64 * 0.377).fract() - 1.0)).clamp(-1.0, 1.0);
            let geff = (1u64 << q) as f64 * (o - u) / PI;
            let med = geff + (2.0 * (i as f64 * 0.291).fract() - 1.0) / (2.0 * PI);
            let next = update_step(u, med, q as u32);
            assert!((o - next).abs() <= w / 2.0 + 1e-12, "i={i}");
        }
    }

    #[test]
    fn round_schedule() {
        let cfg = AdaptiveConfig::new(vec![0.0; 3], 1.0 / 64.0);
        let r = run_adaptive(&cfg).unwrap();
        assert_eq!(r.ledger.len(), 7);
        assert_eq!(r.ledger.last().unwrap().q, 6);
        for rec in &r.ledger {
            let expected = (9.0 * (3.0 / rec.delta_q).ln()).ceil() as u64;
            assert_eq!(rec.shots, expected);
            assert!(rec.medians.iter().all(|k| k.abs() <= 0.5));
            assert!(rec.u_after.iter().all(|u| u.abs() <= 1.0));
        }
        assert_eq!(r.total_queries, r.ledger.iter().map(|x| x.queries_this_round).sum::<u64>());
    }

    #[test]
    fn run_is_deterministic() {
        let mut cfg = AdaptiveConfig::new(g_set(1, 0, 4), 1.0 / 16.0);
        cfg.seed = 99;
        assert_eq!(run_adaptive(&cfg).unwrap(), run_adaptive(&cfg).unwrap());
        let a = mse_harness(&cfg, 50).unwrap();
        let b = mse_harness(&cfg, 50).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_vector_success_frequency() {
        let cfg = AdaptiveConfig::new(vec![0.0; 4], 1.0 / 32.0);
        let plan = plan(&cfg).unwrap();
        let runs = 400;
        let ok = (0..runs)
            .filter(|&i| {
                let r = run_with_plan(&cfg, &plan, stream_seed(5, i)).unwrap();
                r.estimates.iter().all(|u| u.abs() <= cfg.eps)
            })
            .count() as f64
            / runs as f64;
        assert!(ok >= 1.0 - 8.0 * cfg.c / 7.0);
    }

    #[test]
    fn success_branch_and_failure_bound() {
        let cfg = AdaptiveConfig::new(g_set(3, 1, 5), 1.0 / 32.0);
        let plan = plan(&cfg).unwrap();
        let qm = q_max(cfg.eps).unwrap();
        for i in 0..300 {
            let r = run_with_plan(&cfg, &plan, stream_seed(7, i)).unwrap();
            for (u, g) in r.estimates.iter().zip(&cfg.g_true) {
                let err = (u - g).abs();
                match r.first_failed_round {
                    None => assert!(err <= 1.0 / (1u64 << (qm + 1)) as f64 + 1e-12),
                    Some(q) => assert!(err <= (1.0 + PI) / (1u64 << q) as f64 + 1e-12),
                }
            }
        }
    }

    #[test]
    fn hs_and_grover_models_run() {
        let mut cfg = AdaptiveConfig::new(g_set(4, 0, 2), 1.0 / 32.0);
        cfg.model = ProbingModel::hamiltonian_sim();
        let r = run_adaptive(&cfg).unwrap();
        assert!(r.ledger.iter().all(|x| x.sampler == Sampler::Corrupted));

        cfg.model = ProbingModel::grover(2, 2.0);
        let r = run_adaptive(&cfg).unwrap();
        assert!(r.ledger.iter().any(|x| x.route == Route::Grover && x.sampler == Sampler::Exact));
        assert!(r.ledger.iter().any(|x| x.route == Route::HamiltonianSim));
        for (u, g) in r.estimates.iter().zip(&cfg.g_true) {
            assert!((u - g).abs() < 0.2);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = AdaptiveConfig::new(vec![0.0], 0.1);
        cfg.c = 0.5;
        assert!(run_adaptive(&cfg).is_err());
        let cfg = AdaptiveConfig::new(vec![1.5], 0.1);
        assert!(run_adaptive(&cfg).is_err());
        let cfg = AdaptiveConfig::new(vec![0.0], 1.5);
        assert!(run_adaptive(&cfg).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn estimates_stay_in_range(seed in 0u64..10_000, m in 1usize..4) {
            let mut cfg = AdaptiveConfig::new(g_set(seed, 0, m), 1.0 / 16.0);
            cfg.seed = seed;
            let r = run_adaptive(&cfg).unwrap();
            for rec in &r.ledger {
                prop_assert!(rec.u_before.iter().chain(&rec.u_after).all(|u| u.abs() <= 1.0));
                for (a, b) in rec.u_before.iter().zip(&rec.u_after) {
                    prop_assert!((a - b).abs() <= PI / (1u64 << (rec.q + 1)) as f64 + 1e-12);
                }
            }
        }
    }
}
