//! One runner per command. Each produces CSV rows; [`run`] adds the
//! provenance comment lines and writes the result.

use std::io::Write;

use serde::Serialize;

use hlgrad::adaptive::{mse_harness, AdaptiveConfig};
use hlgrad::baseline::{baseline_sweep, SweepConfig, DEFAULT_OVERHEAD};
use hlgrad::micro::{eigenphase_oracle_check, lcu_shift_encode, concentration_gamma, subset_fraction, DenseObservable};
use hlgrad::probing::{arccos_linearity_gap, ProbingModel, GROVER_DELTA_PRIME};
use hlgrad::resources::{
    adaptive_queries, adaptive_queries_grover, default_c, grover_threshold, q_max, qubit_counts, MLaw, Method,
    QueryLedger, P,
};
use hlgrad::seed::{g_set, stream_rng};
use rand::Rng;

use crate::config::{Command, ModelName, Settings};

pub enum Failure {
    /// Bad settings; exit code 2.
    Invalid(String),
    /// I/O and other runtime failures; exit code 1.
    Runtime(String),
}

impl From<hlgrad::Error> for Failure {
    fn from(e: hlgrad::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Invalid(msg.into()))
}

/// Collects serialized rows.
struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new() -> Self {
        Self {
            writer: csv::Writer::from_writer(Vec::new()),
        }
    }

    fn row(&mut self, r: impl Serialize) -> Res<()> {
        self.writer.serialize(r).map_err(|e| Failure::Runtime(e.to_string()))
    }

    fn into_bytes(self) -> Res<Vec<u8>> {
        self.writer.into_inner().map_err(|e| Failure::Runtime(e.to_string()))
    }
}

fn pow2_grid(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

fn one(values: &Option<Vec<f64>>, name: &str, default: f64) -> Res<f64> {
    match values.as_deref() {
        None => Ok(default),
        Some([v]) => Ok(*v),
        Some(_) => invalid(format!("--{name} takes a single value for this command")),
    }
}

fn check_unit(values: &[f64], name: &str, closed_top: bool) -> Res<()> {
    for &v in values {
        let ok = v > 0.0 && (v < 1.0 || (closed_top && v == 1.0));
        if !ok {
            return invalid(format!("{name} values must lie in (0, 1{}, got {v}", if closed_top { "]" } else { ")" }));
        }
    }
    Ok(())
}

fn probing_model(name: ModelName, m: usize, d: f64) -> ProbingModel {
    match name {
        ModelName::Ideal => ProbingModel::Ideal,
        ModelName::Hs => ProbingModel::hamiltonian_sim(),
        ModelName::Grover => ProbingModel::grover(m, d),
    }
}

pub fn run(s: &Settings) -> Res<()> {
    let body = match s.command {
        Command::Adaptive => adaptive(s)?,
        Command::Baseline => baseline(s, false)?,
        Command::Resources => resources(s)?,
        Command::Threshold => threshold(s)?,
        Command::Micro => micro(s)?,
        Command::Fig4 => fig4(s)?,
        Command::Fig5 => baseline(s, true)?,
        Command::Fig6 => fig6(s)?,
    };
    let mut out = Vec::new();
    let config = serde_json::to_string(s).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(out, "# hlgrad {}", env!("CARGO_PKG_VERSION")).ok();
    writeln!(out, "# command: {}", serde_json::to_string(&s.command).unwrap_or_default().trim_matches('"')).ok();
    writeln!(out, "# config: {config}").ok();
    writeln!(out, "# seed: {}", s.seed).ok();
    out.extend(body);
    match &s.out {
        Some(path) => std::fs::write(path, out).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(&out).map_err(|e| Failure::Runtime(e.to_string())),
    }
}

#[derive(Serialize)]
struct AdaptiveRow {
    m: usize,
    d: f64,
    eps: f64,
    c: f64,
    model: &'static str,
    runs: usize,
    seed: u64,
    max_mse: f64,
    mean_queries: f64,
    ci95: f64,
}

fn adaptive(s: &Settings) -> Res<Vec<u8>> {
    let m = s.m.unwrap_or(8);
    let d = s.d.unwrap_or(2.0);
    let eps = one(&s.eps, "eps", 1.0 / 32.0)?;
    let runs = s.runs.unwrap_or(200);
    if m == 0 {
        return invalid("M must be positive");
    }
    if runs < 2 {
        return invalid("runs must be at least 2");
    }
    let model = probing_model(s.model.unwrap_or(ModelName::Ideal), m, d);
    let mut cfg = AdaptiveConfig::new(g_set(s.seed, 0, m), eps);
    cfg.d = d;
    cfg.c = s.c.unwrap_or_else(default_c);
    cfg.model = model;
    cfg.seed = s.seed;
    cfg.validate()?;
    let r = mse_harness(&cfg, runs)?;
    let mut t = Table::new();
    t.row(AdaptiveRow {
        m,
        d,
        eps,
        c: cfg.c,
        model: model.name(),
        runs,
        seed: s.seed,
        max_mse: r.max_mse,
        mean_queries: r.mean_total_queries,
        ci95: r.max_ci95(),
    })?;
    t.into_bytes()
}

#[derive(Serialize)]
struct Fig5Row {
    method: &'static str,
    eps_add: f64,
    delta: Option<f64>,
    n_med: Option<usize>,
    t_queries: u64,
    t_rescaled: f64,
    rmse_worst: f64,
    rmse_avg: f64,
}

/// Baseline sweep; `with_adaptive` appends the adaptive upper-bound line,
/// whose rows carry the target `eps` in the `eps_add` column and RMSE `eps`.
fn baseline(s: &Settings, with_adaptive: bool) -> Res<Vec<u8>> {
    let m = s.m.unwrap_or(30);
    let (eps_default, delta_default) = if with_adaptive {
        (pow2_grid(-3, 9), pow2_grid(0, 6))
    } else {
        (vec![0.125], pow2_grid(0, 3))
    };
    let eps_adds = s.eps_add.clone().unwrap_or(eps_default);
    let deltas = s.delta.clone().unwrap_or(delta_default);
    check_unit(&deltas, "delta", true)?;
    if eps_adds.iter().any(|e| !(*e > 0.0)) {
        return invalid("eps_add values must be positive");
    }
    let g_sets = s.g_sets.unwrap_or(26);
    if g_sets == 0 {
        return invalid("g_sets must be positive");
    }
    if s.n_mc == Some(0) {
        return invalid("n_mc must be positive");
    }
    let cfg = SweepConfig {
        m_obs: m,
        c: s.c.unwrap_or(2.0),
        eps_adds,
        deltas,
        g_sets,
        n_mc: s.n_mc,
        overhead: s.overhead.unwrap_or(DEFAULT_OVERHEAD),
        seed: s.seed,
    };
    let rows = baseline_sweep(&cfg)?;
    let mut t = Table::new();
    for r in rows {
        t.row(Fig5Row {
            method: "baseline",
            eps_add: r.eps_add,
            delta: Some(r.delta),
            n_med: Some(r.n_med),
            t_queries: r.t_queries,
            t_rescaled: r.t_rescaled,
            rmse_worst: r.rmse_worst,
            rmse_avg: r.rmse_avg,
        })?;
    }
    if with_adaptive {
        let eps_list = s.eps.clone().unwrap_or_else(|| pow2_grid(2, 10));
        check_unit(&eps_list, "eps", false)?;
        for eps in eps_list {
            let total = adaptive_queries(m, s.d.unwrap_or(2.0), eps, default_c())?.total;
            t.row(Fig5Row {
                method: "adaptive",
                eps_add: eps,
                delta: None,
                n_med: None,
                t_queries: total,
                t_rescaled: total as f64,
                rmse_worst: eps,
                rmse_avg: eps,
            })?;
        }
    }
    t.into_bytes()
}

#[derive(Serialize)]
struct LedgerRow {
    q: u32,
    route: &'static str,
    t: f64,
    big_q: u64,
    shots: u64,
    queries_per_shot: u64,
    queries: u64,
    total_queries: u64,
    qubits: u64,
}

fn resources(s: &Settings) -> Res<Vec<u8>> {
    let m = s.m.unwrap_or(30);
    let d = s.d.unwrap_or(2.0);
    let eps = one(&s.eps, "eps", 2f64.powi(-10))?;
    let c = s.c.unwrap_or_else(default_c);
    let ledger: QueryLedger = match s.model.unwrap_or(ModelName::Hs) {
        ModelName::Grover => adaptive_queries_grover(m, d, eps, c)?,
        _ => adaptive_queries(m, d, eps, c)?,
    };
    let mut t = Table::new();
    for r in &ledger.per_q {
        t.row(LedgerRow {
            q: r.q,
            route: match r.route {
                hlgrad::resources::Route::HamiltonianSim => "hs",
                hlgrad::resources::Route::Grover => "grover",
            },
            t: r.t,
            big_q: r.big_q,
            shots: r.shots,
            queries_per_shot: r.queries_per_shot,
            queries: r.queries,
            total_queries: ledger.total,
            qubits: ledger.qubit_count,
        })?;
    }
    t.into_bytes()
}

#[derive(Serialize)]
struct ThresholdRow {
    m: usize,
    n_qubits: f64,
    delta_p: f64,
    sigma_p: f64,
    q_star: f64,
    eps_star: f64,
    eps: f64,
    q_max: u32,
    grover_first: Option<u32>,
}

fn threshold(s: &Settings) -> Res<Vec<u8>> {
    let m = s.m.unwrap_or(30);
    let d = s.d.unwrap_or(2.0);
    let eps = one(&s.eps, "eps", 1e-4)?;
    if !(d >= 1.0) || d.log2().fract() != 0.0 {
        return invalid(format!("d must be a power of two, got {d}"));
    }
    let r = grover_threshold(m as f64, d.log2(), P, GROVER_DELTA_PRIME)?;
    let range = r.grover_range(eps)?;
    let mut t = Table::new();
    t.row(ThresholdRow {
        m,
        n_qubits: r.n_qubits,
        delta_p: r.delta_p,
        sigma_p: r.sigma_p,
        q_star: r.q_star,
        eps_star: r.eps_star,
        eps,
        q_max: q_max(eps)?,
        grover_first: range.map(|(a, _)| a),
    })?;
    t.into_bytes()
}

#[derive(Serialize)]
struct MicroRow {
    check: String,
    value: f64,
    limit: f64,
    pass: bool,
}

fn micro(s: &Settings) -> Res<Vec<u8>> {
    let mut rng = stream_rng(s.seed, 0);
    let mut t = Table::new();
    let mut lcu: f64 = 0.0;
    for i in 0..100 {
        let o = DenseObservable::random(1 << (i % 4 + 1), &mut rng)?;
        let e = lcu_shift_encode(&o, rng.random_range(-1.0..=1.0))?;
        lcu = lcu.max(e.eps).max(e.unitarity_error());
    }
    t.row(MicroRow { check: "lcu_shift_encode".into(), value: lcu, limit: 1e-10, pass: lcu <= 1e-10 })?;

    let m = s.m.unwrap_or(64);
    let n_mc = s.n_mc.unwrap_or(4000);
    for dp in [0.05, 0.1] {
        let obs = (0..m)
            .map(|_| DenseObservable::random(2, &mut rng))
            .collect::<Result<Vec<_>, _>>()?;
        let f = subset_fraction(&obs, P, concentration_gamma(m, 2, dp), n_mc, s.seed)?;
        let limit = dp + 3.0 * (dp * (1.0 - dp) / n_mc as f64).sqrt();
        t.row(MicroRow { check: format!("subset_fraction_delta_{dp}"), value: f, limit, pass: f <= limit })?;
    }

    let mut worst: f64 = 0.0;
    for i in 0..=10_000 {
        let x = -0.25 + 0.5 * i as f64 / 10_000.0;
        if x != 0.0 {
            worst = worst.max(arccos_linearity_gap(x)? / (x.abs().powi(3) / 5.0));
        }
    }
    t.row(MicroRow { check: "arccos_gap_over_bound".into(), value: worst, limit: 1.0, pass: worst <= 1.0 })?;

    let mut phase: f64 = 0.0;
    for i in 0..50 {
        let g = -1.0 + 2.0 * i as f64 / 49.0;
        let x = 0.3 - 0.01 * i as f64;
        let (sin, cos) = (-2.0 * x * g).sin_cos();
        let got = eigenphase_oracle_check(g, x)?;
        phase = phase.max((got.re - cos).hypot(got.im - sin));
    }
    t.row(MicroRow { check: "eigenphase_oracle".into(), value: phase, limit: 1e-10, pass: phase <= 1e-10 })?;
    t.into_bytes()
}

#[derive(Serialize)]
struct Fig4Row {
    eps_add: f64,
    adaptive_qubits: u64,
    baseline_qubits: u64,
}

fn fig4(s: &Settings) -> Res<Vec<u8>> {
    let m = s.m.unwrap_or(30);
    let d = s.d.unwrap_or(2.0);
    let eps_adds = s.eps_add.clone().unwrap_or_else(|| pow2_grid(-3, 13));
    let adaptive = qubit_counts(m, d, 1, Method::HamiltonianSim)?;
    let mut t = Table::new();
    for eps_add in eps_adds {
        t.row(Fig4Row {
            eps_add,
            adaptive_qubits: adaptive,
            baseline_qubits: qubit_counts(m, d, 1, Method::BaselineApprox { eps_add })?,
        })?;
    }
    t.into_bytes()
}

#[derive(Serialize)]
struct Fig6Row {
    n_qubits: Option<f64>,
    m_law: String,
    m_value: f64,
    q_star: f64,
}

const FIG6_N: [f64; 28] = [
    1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 25.0, 32.0, 40.0, 50.0, 64.0, 80.0, 100.0, 128.0,
    160.0, 200.0, 256.0, 320.0, 400.0, 512.0, 640.0, 800.0, 1000.0,
];

/// Threshold rows per law, then `q_max` marker rows (no `n_qubits`) with the
/// precision in `m_value`.
fn fig6(s: &Settings) -> Res<Vec<u8>> {
    let ns = s.n_grid.clone().unwrap_or_else(|| FIG6_N.to_vec());
    if ns.iter().any(|n| !(*n >= 0.0)) {
        return invalid("n_grid values must be nonnegative");
    }
    let mut t = Table::new();
    for law in MLaw::ALL {
        for &n in &ns {
            let m = law.value(n);
            if !m.is_finite() {
                continue;
            }
            let r = grover_threshold(m.max(1.0), n, P, GROVER_DELTA_PRIME)?;
            t.row(Fig6Row {
                n_qubits: Some(n),
                m_law: law.label().to_string(),
                m_value: m,
                q_star: r.q_star,
            })?;
        }
    }
    for eps in s.eps.clone().unwrap_or_else(|| vec![1e-2, 1e-4, 1e-6]) {
        t.row(Fig6Row {
            n_qubits: None,
            m_law: "q_max".into(),
            m_value: eps,
            q_star: q_max(eps)? as f64,
        })?;
    }
    t.into_bytes()
}
