//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use hlgrad::adaptive::{mse_harness, AdaptiveConfig};
use hlgrad::baseline::{
    baseline_params, baseline_sweep, central_diff_coeffs_exact, coefficient_identities_hold,
    h_function, h_gradient_at_zero, marginal_distribution, median_distribution, SweepConfig,
    DEFAULT_OVERHEAD,
};
use hlgrad::grid::{max_tail_over_scan, sine_state_mse_check, tail_probability};
use hlgrad::micro::{lcu_shift_encode, concentration_gamma, subset_fraction, DenseObservable};
use hlgrad::probing::{
    arccos_linearity_gap, grover_check, ProbingModel, ProbingSpec, GROVER_DELTA_PRIME,
    GROVER_SUCCESS_PROB, STATE_ERROR_BUDGET,
};
use hlgrad::resources::{
    adaptive_queries, default_c, grover_threshold, log_sum_closed, log_sum_direct, q_max,
    qubit_counts, sigma, closed_form_bound, MLaw, Method, P, SHOT_CONSTANT,
};
use hlgrad::seed::{g_set, stream_rng, stream_seed};
use num_traits::Zero;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn slope_and_r2(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

fn tail_bound_p3() -> Outcome {
    let (max, at) = max_tail_over_scan(3, -1.0 / PI, 1.0 / PI, 1e-3, 1.0 / (2.0 * PI)).unwrap();
    outcome(max < 0.18, format!("max tail {max:.5} at g = {at:.3} (limit < 0.18)"))
}

fn tail_bound_grid() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in 3..=8u32 {
        let thr = 3.0 / (1u64 << p) as f64;
        let steps = 2000;
        for i in 0..=steps {
            let g = -1.0 / 3.0 + 2.0 / 3.0 * i as f64 / steps as f64;
            worst = worst.max(tail_probability(p, g, thr).unwrap());
        }
    }
    outcome(worst <= 0.25, format!("max tail over p = 3..8: {worst:.5} (limit 1/4)"))
}

fn adaptive_mse() -> Outcome {
    let eps = 1.0 / 32.0;
    let mut worst: f64 = 0.0;
    let mut worst_upper: f64 = 0.0;
    for set in 0..5 {
        let mut cfg = AdaptiveConfig::new(g_set(7, set, 8), eps);
        cfg.seed = stream_seed(7, 100 + set);
        let r = mse_harness(&cfg, 2000).unwrap();
        worst = worst.max(r.max_mse);
        worst_upper = worst_upper.max(r.max_mse + r.max_ci95());
    }
    let e2 = eps * eps;
    outcome(
        worst <= e2 && worst_upper <= 1.2 * e2,
        format!(
            "max MSE / eps^2 = {:.3}, CI upper / eps^2 = {:.3} (limits 1, 1.2)",
            worst / e2,
            worst_upper / e2
        ),
    )
}

fn heisenberg_flatness() -> Outcome {
    let c = default_c();
    let vals: Vec<f64> = (2..=10)
        .map(|k| {
            let eps = 2f64.powi(-k);
            eps * adaptive_queries(30, 2.0, eps, c).unwrap().total as f64
        })
        .collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    let s = sigma(30.0, 2.0, hlgrad::probing::HS_DELTA_PRIME).unwrap().sigma;
    let mut worst_rel: f64 = 0.0;
    for k in 2..=10 {
        let eps = 2f64.powi(-k);
        let qm = q_max(eps).unwrap();
        let direct = closed_form_bound(30, 2.0, eps, c).unwrap();
        let closed = SHOT_CONSTANT * 2f64.powi(P as i32 + 2) * s * log_sum_closed(30.0, c, qm);
        worst_rel = worst_rel.max((direct - closed).abs() / closed);
        worst_rel = worst_rel.max((log_sum_direct(30.0, c, qm) / log_sum_closed(30.0, c, qm) - 1.0).abs());
    }
    outcome(
        hi / lo <= 2.0 && worst_rel <= 1e-9,
        format!("eps*T band ratio {:.3} (limit 2), closed-form rel. error {worst_rel:.1e} (limit 1e-9)", hi / lo),
    )
}

fn qubit_counts_fig4() -> Outcome {
    let adaptive = qubit_counts(30, 2.0, 1, Method::HamiltonianSim).unwrap();
    let mut ok = adaptive == 106;
    let mut rows = 0;
    for k in -3..=13 {
        let eps_add = 2f64.powi(-k);
        let got = qubit_counts(30, 2.0, 1, Method::BaselineApprox { eps_add }).unwrap();
        let want = ((24.0 / eps_add).log2().ceil() as u64) * 30;
        ok &= got == want && qubit_counts(30, 2.0, 1, Method::HamiltonianSim).unwrap() == adaptive;
        rows += 1;
    }
    outcome(ok, format!("adaptive = {adaptive} (want 106), {rows} baseline rows exact"))
}

fn grover_constants() -> Outcome {
    let mut worst_dist: f64 = 0.0;
    let mut worst_prob: f64 = 1.0;
    let mut qs = Vec::new();
    for m in 1..=4usize {
        let model = ProbingModel::grover(m, 2.0);
        let q = grover_threshold(m as f64, 1.0, P, GROVER_DELTA_PRIME).unwrap().q_star.ceil() as u32;
        qs.push(q);
        let bound = 1.0 / (1u64 << (q + 1)) as f64;
        let mut rng = stream_rng(13, m as u64);
        for _ in 0..20 {
            let u: Vec<f64> = (0..m).map(|_| rng.random_range(-0.9..0.9)).collect();
            let g: Vec<f64> = u.iter().map(|x| x + rng.random_range(-bound..=bound)).collect();
            let spec = ProbingSpec::new(P, q, u, g).unwrap();
            let c = grover_check(&spec, &model).unwrap();
            worst_dist = worst_dist.max(c.full_distance).max(c.probe_distance);
            worst_prob = worst_prob.min(c.success_prob);
        }
    }
    outcome(
        worst_dist <= STATE_ERROR_BUDGET && worst_prob >= GROVER_SUCCESS_PROB,
        format!("q = {qs:?}, max distance {worst_dist:.2e} (limit 1/12), min success {worst_prob:.4} (limit 0.462)"),
    )
}

fn threshold_fig6() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 6..=20 {
        let n = (1u64 << k) as f64;
        let r = grover_threshold(MLaw::NSquared.value(n), n, P, GROVER_DELTA_PRIME).unwrap();
        worst = worst.max((r.q_star - 5.0).abs());
    }
    let ns: Vec<f64> = (1..=60).map(|n| n as f64).collect();
    let qs: Vec<f64> = ns
        .iter()
        .map(|&n| grover_threshold(MLaw::TwoToN.value(n), n, P, GROVER_DELTA_PRIME).unwrap().q_star)
        .collect();
    let (slope, r2) = slope_and_r2(&ns, &qs);
    outcome(
        worst <= 1.0 && r2 >= 0.99,
        format!("max |q* - 5| = {worst:.3} (limit 1), 2^N fit slope {slope:.3}, R^2 = {r2:.4} (limit 0.99)"),
    )
}

fn median_machinery() -> Outcome {
    let instances = [(0.3, 0.37, 3usize), (0.2, -0.61, 5), (0.5, 0.05, 7), (0.25, 0.83, 9), (0.4, -0.2, 11)];
    let mut worst: f64 = 0.0;
    for (i, &(eps_add, g, n_med)) in instances.iter().enumerate() {
        let params = baseline_params(1, eps_add, 1.0, 2.0).unwrap();
        let single = marginal_distribution(&[g], &params, 1, 0).unwrap();
        let exact = median_distribution(&single, n_med).unwrap();
        let dist = WeightedIndex::new(single.pmf()).unwrap();
        let mut rng = stream_rng(21, i as u64);
        let trials = 100_000;
        let mut counts = vec![0.0; exact.pmf.len()];
        let mut draws = vec![0usize; n_med];
        for _ in 0..trials {
            for d in draws.iter_mut() {
                *d = dist.sample(&mut rng);
            }
            draws.sort_unstable();
            counts[draws[n_med / 2]] += 1.0 / trials as f64;
        }
        let tv = 0.5 * counts.iter().zip(&exact.pmf).map(|(a, b)| (a - b).abs()).sum::<f64>();
        worst = worst.max(tv);
    }
    outcome(worst <= 0.02, format!("max TV over 5 instances {worst:.4} (limit 0.02)"))
}

fn baseline_gradient() -> Outcome {
    let mut rng = stream_rng(31, 0);
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let m = 1 + (i % 6) as usize;
        let eps_add = 2f64.powf(-rng.random_range(1.0..8.0));
        let g = g_set(31, i + 1, m);
        let params = baseline_params(m, eps_add, 1.0, 2.0).unwrap();
        let grad = h_gradient_at_zero(&g, &params);
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
        let step = 1e-4;
        let mut err = 0.0;
        for j in 0..m {
            let mut xp = vec![0.0; m];
            let mut xm = vec![0.0; m];
            xp[j] = step;
            xm[j] = -step;
            let fd = (h_function(&xp, &g, &params).unwrap() - h_function(&xm, &g, &params).unwrap()) / (2.0 * step);
            err += (fd - grad[j]).powi(2);
        }
        worst = worst.max(err.sqrt() / norm);
    }
    let mut exact = true;
    for m in 1..=20 {
        exact &= coefficient_identities_hold(m).unwrap();
        let a = central_diff_coeffs_exact(m).unwrap();
        exact &= a[m as usize].is_zero();
    }
    outcome(
        worst <= 1e-6 && exact,
        format!("max relative gradient error {worst:.2e} (limit 1e-6), exact identities for m <= 20: {exact}"),
    )
}

fn heisenberg_sine_state() -> Outcome {
    let mut eig: f64 = 0.0;
    let mut res: f64 = 0.0;
    let mut uni: f64 = 0.0;
    for p in 2..=10 {
        let r = sine_state_mse_check(p).unwrap();
        eig = eig.max((r.min_eigenvalue - r.eigenvalue_formula).abs());
        res = res.max(r.eigenvector_residual);
        uni = uni.max((r.uniform_min_expected_cosine - (1.0 - 2.0 / (1u64 << p) as f64)).abs());
    }
    outcome(
        eig <= 1e-10 && res <= 1e-8 && uni <= 1e-12,
        format!("eigenvalue error {eig:.1e} (1e-10), residual {res:.1e} (1e-8), uniform worst-case error {uni:.1e}"),
    )
}

fn fig5_shape() -> Outcome {
    let cfg = SweepConfig {
        m_obs: 30,
        c: 2.0,
        eps_adds: (-3..=9).map(|k| 2f64.powi(-k)).collect(),
        deltas: (0..=6).map(|j| 2f64.powi(-j)).collect(),
        g_sets: 5,
        n_mc: None,
        overhead: DEFAULT_OVERHEAD,
        seed: 42,
    };
    let rows = baseline_sweep(&cfg).unwrap();
    let single: Vec<_> = rows.iter().filter(|r| r.n_med == 1).collect();
    let xs: Vec<f64> = single.iter().map(|r| (r.t_queries as f64).ln()).collect();
    let ys: Vec<f64> = single.iter().map(|r| r.rmse_worst.ln()).collect();
    let (slope, _) = slope_and_r2(&xs, &ys);
    let min_prod: Vec<f64> = cfg
        .eps_adds
        .iter()
        .map(|&e| {
            rows.iter()
                .filter(|r| r.eps_add == e)
                .map(|r| r.rmse_worst * r.t_rescaled)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    // one decade is about 3.3 halvings of eps_add
    let decades: Vec<f64> = min_prod.iter().step_by(3).cloned().collect();
    let increasing = decades.windows(2).all(|w| w[1] > w[0]);
    let c = default_c();
    let flat: Vec<f64> = (2..=10)
        .map(|k| 2f64.powi(-k) * adaptive_queries(30, 2.0, 2f64.powi(-k), c).unwrap().total as f64)
        .collect();
    let flat_ratio = flat.iter().cloned().fold(0.0, f64::max) / flat.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        (slope + 0.5).abs() <= 0.1 && increasing && flat_ratio <= 2.0,
        format!(
            "N_med = 1 slope {slope:.3} (want -0.5 +- 0.1), min eps*T~ per step {:?}, adaptive band {flat_ratio:.2}",
            decades.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn micro_checks() -> Outcome {
    let mut rng = stream_rng(41, 0);
    let mut lcu_err: f64 = 0.0;
    for i in 0..100 {
        let dim = 1 << (i % 4 + 1);
        let o = DenseObservable::random(dim, &mut rng).unwrap();
        let u = rng.random_range(-1.0..=1.0);
        let e = lcu_shift_encode(&o, u).unwrap();
        lcu_err = lcu_err.max(e.eps).max(e.unitarity_error());
    }
    let mut frac_ok = true;
    let mut fracs = Vec::new();
    for &dp in &[0.05, 0.1] {
        let m = 64;
        let obs: Vec<_> = (0..m).map(|_| DenseObservable::random(2, &mut rng).unwrap()).collect();
        let gamma = concentration_gamma(m, 2, dp);
        let n_mc = 4000;
        let f = subset_fraction(&obs, 3, gamma, n_mc, 5).unwrap();
        let sd = (dp * (1.0 - dp) / n_mc as f64).sqrt();
        frac_ok &= f <= dp + 3.0 * sd;
        fracs.push(f);
    }
    let mut arccos_ok = true;
    let n = 10_000;
    for i in 0..=n {
        let x = -0.25 + 0.5 * i as f64 / n as f64;
        arccos_ok &= arccos_linearity_gap(x).unwrap() <= x.abs().powi(3) / 5.0 + 1e-16;
    }
    outcome(
        lcu_err <= 1e-10 && frac_ok && arccos_ok,
        format!("LCU error {lcu_err:.1e} (1e-10), subset fractions {fracs:?}, arccos bound held: {arccos_ok}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("tail bound at p = 3", tail_bound_p3),
        ("outcome tail <= 1/4 for p = 3..8", tail_bound_grid),
        ("adaptive MSE at M = 8, eps = 2^-5", adaptive_mse),
        ("Heisenberg flatness and closed form", heisenberg_flatness),
        ("qubit counts", qubit_counts_fig4),
        ("Grover preparation constants", grover_constants),
        ("Grover threshold curves", threshold_fig6),
        ("median order statistics", median_machinery),
        ("baseline gradient and coefficients", baseline_gradient),
        ("sine-state Heisenberg limit", heisenberg_sine_state),
        ("RMSE versus queries shape", fig5_shape),
        ("block-encoding micro checks", micro_checks),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("[{tag}] {:>2}. {name}: {} [{:.2}s]", i + 1, o.detail, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
