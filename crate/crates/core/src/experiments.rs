//! Seeded reproduction runs and their on-disk artifacts.
//!
//! Each experiment is driven by an [`ExperimentConfig`] whose defaults
//! reproduce the standard setting: Erdős–Rényi networks with 20 nodes and 30
//! undirected edges for experiments 1–3, and a five-node star for 4.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agents::{random_agents, AgentProfile, AgentRanges, MarketInstance};
use crate::equilibria::{
    equal_price_check, solve_standard_swe, solve_swe, solve_swe_detailed, verify_ce,
    CeVerificationReport, EquilibriumSolution, StandardEquilibrium,
};
use crate::error::{Error, Result};
use crate::flownet::{generate_er, star_graph};
use crate::qpcore::{KktResiduals, SolveOptions};
use crate::rng::{self, stream};
use crate::shaping::{
    sstar_membership, validate_equal_prices, EqualPriceReport, ParamBox, SStarDiagnostics,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: u8,
    pub seed: u64,
    pub n: usize,
    pub edges: usize,
    /// Capacity draw range; experiment 3 scales draws from `[0, 1)` by γ instead.
    pub cap_range: [f64; 2],
    pub gammas: Vec<f64>,
    pub a_range: [f64; 2],
    pub theta1_range: [f64; 2],
    pub theta2_range: [f64; 2],
    /// Uniform capacity standing in for "no network limits" in experiment 2.
    pub large_capacity: f64,
    /// Solver restarts from random starting points in experiment 2.
    pub restarts: usize,
    pub star_capacity: f64,
    pub star_endowment: f64,
    pub param_box: ParamBox,
    pub trials: usize,
    /// Tolerance for equilibrium checks.
    pub tolerance: f64,
    /// Interior-point stopping tolerance.
    pub solver_tol: f64,
}

impl ExperimentConfig {
    pub fn defaults(experiment: u8) -> Result<Self> {
        let mut cfg = ExperimentConfig {
            experiment,
            seed: 0,
            n: 20,
            edges: 30,
            cap_range: [0.0, 2.0],
            gammas: vec![0.01, 0.1, 0.5, 1.0, 10.0],
            a_range: [0.0, 5.0],
            theta1_range: [0.5, 0.6],
            theta2_range: [18.0, 20.0],
            large_capacity: 1e6,
            restarts: 5,
            star_capacity: 15.0,
            star_endowment: 25.0,
            param_box: ParamBox::new(0.5, 0.6, 18.0, 20.0)?,
            trials: 100,
            tolerance: 1e-6,
            solver_tol: 1e-9,
        };
        if experiment == 4 {
            cfg.n = 5;
            cfg.edges = 4;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Built-in defaults for `experiment`, overridden field by field by the
    /// JSON object in `overrides`.
    pub fn with_overrides(experiment: u8, overrides: &Value) -> Result<Self> {
        let mut base =
            serde_json::to_value(Self::defaults(experiment)?).expect("config serializes");
        let Value::Object(fields) = overrides else {
            return Err(Error::Config("config file must hold a JSON object".into()));
        };
        if let Some(id) = fields.get("experiment") {
            if id.as_u64() != Some(experiment as u64) {
                return Err(Error::Config(format!(
                    "config is for experiment {id}, not {experiment}"
                )));
            }
        }
        let target = base.as_object_mut().expect("object");
        for (k, v) in fields {
            target.insert(k.clone(), v.clone());
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(experiment: u8, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let value: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::with_overrides(experiment, &value)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.experiment) {
            return Err(Error::Config(format!(
                "unknown experiment {}",
                self.experiment
            )));
        }
        for (name, [lo, hi]) in [
            ("cap_range", self.cap_range),
            ("a_range", self.a_range),
            ("theta1_range", self.theta1_range),
            ("theta2_range", self.theta2_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!(
                    "{name} [{lo}, {hi}] is not an interval"
                )));
            }
        }
        if self.theta1_range[0] <= 0.0 {
            return Err(Error::Config("theta1_range must be positive".into()));
        }
        if self.a_range[0] < 0.0 || self.theta2_range[0] < 0.0 {
            return Err(Error::Config(
                "a_range and theta2_range must be nonnegative".into(),
            ));
        }
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.experiment == 3
            && (self.gammas.is_empty() || self.gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())))
        {
            return Err(Error::Config(
                "gammas must be a nonempty list of positive values".into(),
            ));
        }
        if !(self.large_capacity > 0.0 && self.star_capacity > 0.0 && self.star_endowment >= 0.0) {
            return Err(Error::Config(
                "capacities must be positive and endowments nonnegative".into(),
            ));
        }
        if !(self.tolerance > 0.0 && self.solver_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    fn ranges(&self) -> AgentRanges {
        AgentRanges {
            a: self.a_range,
            theta1: self.theta1_range,
            theta2: self.theta2_range,
        }
    }

    fn solve_options(&self) -> SolveOptions {
        SolveOptions::with_tol(self.solver_tol)
    }

    fn require(&self, id: u8) -> Result<()> {
        if self.experiment != id {
            return Err(Error::Config(format!(
                "config targets experiment {}, not {id}",
                self.experiment
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub price_spread: f64,
    pub min_price: f64,
    pub q_inf_norm: f64,
    pub e_l1_norm: f64,
    pub max_xi: f64,
    pub kkt: KktResiduals,
    pub solve_ms: f64,
}

/// One welfare solve with everything needed to re-run and re-check it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub gamma: Option<f64>,
    pub instance: MarketInstance,
    pub solution: EquilibriumSolution,
    pub verification: CeVerificationReport,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseSummary {
    pub standard: StandardEquilibrium,
    pub e_gap: f64,
    pub x_gap: f64,
    pub lambda_gap: f64,
    /// Largest pairwise deviation of `e` across restarts.
    pub restart_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingSummary {
    pub membership: SStarDiagnostics,
    pub prices: EqualPriceReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<RunRecord>,
    pub collapse: Option<CollapseSummary>,
    pub shaping: Option<ShapingSummary>,
    pub elapsed_ms: f64,
}

impl ExperimentReport {
    /// All recorded solutions verify and the experiment-specific checks hold.
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.verification.passed)
            && self
                .shaping
                .as_ref()
                .is_none_or(|s| s.membership.in_sstar && s.prices.passed == s.prices.trials.len())
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn base_instance(cfg: &ExperimentConfig) -> Result<MarketInstance> {
    let [lo, hi] = cfg.cap_range;
    let net = generate_er(cfg.n, cfg.edges, lo, hi, cfg.seed)?;
    let agents = random_agents(cfg.n, &cfg.ranges(), cfg.seed)?;
    MarketInstance::new(net, agents)
}

pub fn solve_and_record(
    inst: MarketInstance,
    gamma: Option<f64>,
    cfg: &ExperimentConfig,
) -> Result<RunRecord> {
    let start = Instant::now();
    let (solution, report) = solve_swe_detailed(&inst, &cfg.solve_options())?;
    let solve_ms = elapsed_ms(start);
    let verification = verify_ce(&inst, &solution, cfg.tolerance)?;
    let spread = equal_price_check(&solution, cfg.tolerance);
    let metrics = RunMetrics {
        price_spread: spread.max_spread,
        min_price: spread.min_price,
        q_inf_norm: solution.q.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        e_l1_norm: solution.e.iter().map(|v| v.abs()).sum(),
        max_xi: solution.xi.iter().copied().fold(0.0, f64::max),
        kkt: report.kkt,
        solve_ms,
    };
    Ok(RunRecord {
        gamma,
        instance: inst,
        solution,
        verification,
        metrics,
    })
}

pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(1)?;
    let start = Instant::now();
    let record = solve_and_record(base_instance(cfg)?, None, cfg)?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        records: vec![record],
        collapse: None,
        shaping: None,
        elapsed_ms: elapsed_ms(start),
    })
}

fn inf_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn run_experiment2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(2)?;
    let start = Instant::now();
    let base = base_instance(cfg)?;
    let inst = base.with_network(base.network().with_uniform_capacity(cfg.large_capacity)?)?;
    let standard = solve_standard_swe(&inst, &cfg.solve_options())?;
    let record = solve_and_record(inst.clone(), None, cfg)?;

    let nv = 2 * inst.n() + inst.network().arc_count();
    let mut rng = rng::seeded(cfg.seed, stream::TRIALS);
    let mut trades = vec![record.solution.e.clone()];
    for _ in 1..cfg.restarts {
        let mut opts = cfg.solve_options();
        opts.start = Some((0..nv).map(|_| rng.gen_range(0.0..2.0)).collect());
        trades.push(solve_swe(&inst, &opts)?.e);
    }
    let mut restart_deviation: f64 = 0.0;
    for (i, a) in trades.iter().enumerate() {
        for b in &trades[i + 1..] {
            restart_deviation = restart_deviation.max(inf_gap(a, b));
        }
    }

    let sol = &record.solution;
    let collapse = CollapseSummary {
        e_gap: inf_gap(&sol.e, &standard.e),
        x_gap: inf_gap(&sol.x, &standard.x),
        lambda_gap: sol
            .lambda
            .iter()
            .map(|l| (l - standard.lambda0).abs())
            .fold(0.0, f64::max),
        restart_deviation,
        standard,
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        records: vec![record],
        collapse: Some(collapse),
        shaping: None,
        elapsed_ms: elapsed_ms(start),
    })
}

/// One solve per γ. All γ share the same capacity draws from `[0, 1)`, so
/// the feasible flow sets are nested as γ grows.
pub fn run_experiment3(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(3)?;
    let start = Instant::now();
    let net = generate_er(cfg.n, cfg.edges, 0.0, 1.0, cfg.seed)?;
    let base = MarketInstance::new(net, random_agents(cfg.n, &cfg.ranges(), cfg.seed)?)?;
    let records = cfg
        .gammas
        .par_iter()
        .map(|&gamma| {
            let caps = base
                .network()
                .capacities()
                .iter()
                .map(|u| gamma * u)
                .collect();
            let inst = base.with_network(base.network().with_capacities(caps)?)?;
            solve_and_record(inst, Some(gamma), cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        config: cfg.clone(),
        records,
        collapse: None,
        shaping: None,
        elapsed_ms: elapsed_ms(start),
    })
}

/// Star market with admissible utilities. The recorded solve uses the
/// first sampled profile; every trial's prices go to the shaping summary.
pub fn run_experiment4(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.require(4)?;
    let start = Instant::now();
    let n = cfg.n;
    if n < 2 {
        return Err(Error::Config("the star needs at least two nodes".into()));
    }
    let net = star_graph(n, vec![cfg.star_capacity; 2 * (n - 1)])?;
    let [t1, _] = cfg.param_box.theta1();
    let [t2, _] = cfg.param_box.theta2();
    let template =
        MarketInstance::new(net, vec![AgentProfile::new(cfg.star_endowment, t1, t2)?; n])?;

    let membership = sstar_membership(&cfg.param_box, &template)?;
    let prices = validate_equal_prices(
        &cfg.param_box,
        &template,
        cfg.trials,
        cfg.seed,
        cfg.tolerance,
        &cfg.solve_options(),
    );
    let mut records = Vec::new();
    if let Some(first) = prices.trials.first() {
        let agents = first
            .theta1
            .iter()
            .zip(&first.theta2)
            .map(|(&a1, &a2)| AgentProfile::new(cfg.star_endowment, a1, a2))
            .collect::<Result<Vec<_>>>()?;
        records.push(solve_and_record(template.with_agents(agents)?, None, cfg)?);
    }
    Ok(ExperimentReport {
        config: cfg.clone(),
        records,
        collapse: None,
        shaping: Some(ShapingSummary { membership, prices }),
        elapsed_ms: elapsed_ms(start),
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.experiment {
        1 => run_experiment1(cfg),
        2 => run_experiment2(cfg),
        3 => run_experiment3(cfg),
        4 => run_experiment4(cfg),
        id => Err(Error::Config(format!("unknown experiment {id}"))),
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub const METRICS_HEADER: [&str; 8] = [
    "agent_id", "a", "theta1", "theta2", "x_swe", "e_swe", "lambda", "q",
];
pub const SUMMARY_HEADER: [&str; 5] = ["gamma", "q_inf_norm", "e_l1_norm", "max_xi", "solve_ms"];

fn metrics_rows(record: Option<&RunRecord>) -> Vec<Vec<String>> {
    let Some(r) = record else {
        return Vec::new();
    };
    let s = &r.solution;
    r.instance
        .agents()
        .iter()
        .enumerate()
        .map(|(i, ag)| {
            vec![
                (i + 1).to_string(),
                fmt_f64(ag.a),
                fmt_f64(ag.utility.theta1()),
                fmt_f64(ag.utility.theta2()),
                fmt_f64(s.x[i]),
                fmt_f64(s.e[i]),
                fmt_f64(s.lambda[i]),
                fmt_f64(s.q[i]),
            ]
        })
        .collect()
}

fn write_run(dir: &Path, record: Option<&RunRecord>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if let Some(r) = record {
        for (name, value) in [
            ("instance.json", serde_json::to_value(&r.instance)),
            ("solution.json", serde_json::to_value(&r.solution)),
        ] {
            let path = dir.join(name);
            let value = value.map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?;
            write_json(&path, &value)?;
            written.push(path);
        }
    }
    let path = dir.join("metrics.csv");
    write_csv(&path, &METRICS_HEADER, metrics_rows(record))?;
    written.push(path);
    Ok(written)
}

fn gamma_dir(gamma: f64) -> String {
    format!("gamma_{gamma}")
}

/// Writes the report under `dir` and returns the paths written.
///
/// Single-solve experiments put `instance.json`, `solution.json` and
/// `metrics.csv` at the top level; the capacity sweep writes one
/// `gamma_<γ>/` directory per solve. Every run also gets `config.json`,
/// `summary.csv` and `record.json`, plus `standard.csv` (experiment 2) or
/// `trials.csv` (experiment 4).
pub fn emit(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let path = dir.join("config.json");
    write_json(&path, &report.config)?;
    written.push(path);

    let sweep = report.records.iter().any(|r| r.gamma.is_some());
    if sweep {
        for r in &report.records {
            written.extend(write_run(
                &dir.join(gamma_dir(r.gamma.unwrap_or(f64::NAN))),
                Some(r),
            )?);
        }
    } else {
        written.extend(write_run(dir, report.records.first())?);
    }

    let path = dir.join("summary.csv");
    write_csv(
        &path,
        &SUMMARY_HEADER,
        report.records.iter().map(|r| {
            vec![
                r.gamma.map(fmt_f64).unwrap_or_default(),
                fmt_f64(r.metrics.q_inf_norm),
                fmt_f64(r.metrics.e_l1_norm),
                fmt_f64(r.metrics.max_xi),
                format!("{:.3}", r.metrics.solve_ms),
            ]
        }),
    )?;
    written.push(path);

    if let Some(c) = &report.collapse {
        let path = dir.join("standard.csv");
        let rows = (0..c.standard.x.len()).map(|i| {
            vec![
                (i + 1).to_string(),
                fmt_f64(c.standard.x[i]),
                fmt_f64(c.standard.e[i]),
                fmt_f64(c.standard.lambda0),
            ]
        });
        write_csv(&path, &["agent_id", "x_sd", "e_sd", "lambda_sd"], rows)?;
        written.push(path);
    }

    if let Some(s) = &report.shaping {
        let path = dir.join("trials.csv");
        let rows = s.prices.trials.iter().flat_map(|t| {
            (0..t.theta1.len()).map(move |i| {
                vec![
                    t.trial.to_string(),
                    (i + 1).to_string(),
                    fmt_f64(t.theta1[i]),
                    fmt_f64(t.theta2[i]),
                    t.lambda.get(i).copied().map(fmt_f64).unwrap_or_default(),
                    t.passed.to_string(),
                ]
            })
        });
        write_csv(
            &path,
            &[
                "trial",
                "agent_id",
                "theta1",
                "theta2",
                "lambda",
                "equal_positive",
            ],
            rows,
        )?;
        written.push(path);
    }

    let path = dir.join("record.json");
    write_json(&path, report)?;
    written.push(path);
    Ok(written)
}

/// Human-readable digest printed by the command-line runner.
pub fn summarize(report: &ExperimentReport, out: &mut impl Write) -> std::io::Result<()> {
    let cfg = &report.config;
    writeln!(out, "experiment {} (seed {})", cfg.experiment, cfg.seed)?;
    for r in &report.records {
        let label = r.gamma.map(|g| format!("gamma {g}: ")).unwrap_or_default();
        writeln!(
            out,
            "  {label}verify {} (worst residual {:.2e}), price spread {:.2e}, |q|inf {:.3e}, |e|1 {:.3e}",
            if r.verification.passed { "pass" } else { "FAIL" },
            r.verification.worst_residual(),
            r.metrics.price_spread,
            r.metrics.q_inf_norm,
            r.metrics.e_l1_norm,
        )?;
    }
    if let Some(c) = &report.collapse {
        writeln!(
            out,
            "  standard market: |e - e_sd|inf {:.2e}, |x - x_sd|inf {:.2e}, lambda0 {:.6}, restart deviation {:.2e}",
            c.e_gap, c.x_gap, c.standard.lambda0, c.restart_deviation
        )?;
    }
    if let Some(s) = &report.shaping {
        writeln!(
            out,
            "  membership {} (cond1 {:.4} vs {:.4}), equal positive prices {}/{}",
            if s.membership.in_sstar { "in" } else { "out" },
            s.membership.cond1_lhs,
            s.membership.cond1_rhs,
            s.prices.passed,
            s.prices.trials.len(),
        )?;
    }
    writeln!(
        out,
        "  {}",
        if report.passed() {
            "all checks passed"
        } else {
            "some checks FAILED"
        }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_per_experiment() {
        let c1 = ExperimentConfig::defaults(1).unwrap();
        assert_eq!((c1.n, c1.edges), (20, 30));
        assert_eq!(c1.theta2_range, [18.0, 20.0]);
        let c4 = ExperimentConfig::defaults(4).unwrap();
        assert_eq!(c4.n, 5);
        assert!(ExperimentConfig::defaults(5).is_err());
    }

    #[test]
    fn overrides_merge_and_validate() {
        let c = ExperimentConfig::with_overrides(3, &json!({"gammas": [0.5], "seed": 9})).unwrap();
        assert_eq!(c.gammas, vec![0.5]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.n, 20);
        assert!(ExperimentConfig::with_overrides(3, &json!({"gammas": []})).is_err());
        assert!(ExperimentConfig::with_overrides(1, &json!({"a_range": [3.0, 1.0]})).is_err());
        assert!(ExperimentConfig::with_overrides(1, &json!({"experiment": 2})).is_err());
        assert!(ExperimentConfig::with_overrides(1, &json!({"bogus": 1})).is_err());
        assert!(ExperimentConfig::with_overrides(1, &json!([1, 2])).is_err());
        let boxed = ExperimentConfig::with_overrides(
            4,
            &json!({"param_box": {"theta1_min": 0.5, "theta1_max": 0.6, "theta2_min": 10.0, "theta2_max": 12.0}}),
        )
        .unwrap();
        assert_eq!(boxed.param_box.theta2(), [10.0, 12.0]);
    }

    #[test]
    fn wrong_experiment_rejected() {
        let cfg = ExperimentConfig::defaults(1).unwrap();
        assert!(matches!(run_experiment2(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn empty_report_writes_headers() {
        let dir = tempfile::tempdir().unwrap();
        let report = ExperimentReport {
            config: ExperimentConfig::defaults(1).unwrap(),
            records: Vec::new(),
            collapse: None,
            shaping: None,
            elapsed_ms: 0.0,
        };
        emit(&report, dir.path()).unwrap();
        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics.trim_end(), METRICS_HEADER.join(","));
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.trim_end(), SUMMARY_HEADER.join(","));
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-17, 123456789.12345679] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
