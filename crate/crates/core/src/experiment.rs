//! Monte Carlo driver: sweeps, per-trial rows and aggregate curves.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baseline::projection_design;
use crate::channel::{sample_channels, SystemConfig};
use crate::design::{robust_design, BcdOptions, BcdStatus};
use crate::error::{Error, Result};
use crate::secrecy::{worst_case_rate, SecrecyReport};

pub const DEFAULT_TRIALS: usize = 200;
pub const QUICK_TRIALS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    PTotDbm,
    Epsilon,
    NE,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PTotDbm => "p_tot_dbm",
            SweepParam::Epsilon => "epsilon",
            SweepParam::NE => "n_e",
        }
    }

    /// The system configuration at one sweep value.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut c = base.clone();
        match self {
            SweepParam::PTotDbm => c.p_tot_dbm = value,
            SweepParam::Epsilon => c = c.with_epsilon(value),
            SweepParam::NE => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("n_e sweep values must be positive integers, got {value}")));
                }
                c.n_e = value as usize;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p_tot_dbm" => Ok(SweepParam::PTotDbm),
            "epsilon" => Ok(SweepParam::Epsilon),
            "n_e" => Ok(SweepParam::NE),
            _ => Err(Error::Config(format!("unknown sweep parameter '{s}' (p_tot_dbm, epsilon or n_e)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Robust,
    Projection,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Robust => "robust",
            Method::Projection => "projection",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "robust" => Ok(Method::Robust),
            "projection" => Ok(Method::Projection),
            _ => Err(Error::Config(format!("unknown method '{s}' (robust or projection)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub id: String,
    pub system: SystemConfig,
    pub sweep: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    /// Output directory.
    pub output_path: PathBuf,
    pub bcd: BcdOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            id: "experiment".into(),
            system: SystemConfig::default(),
            sweep: SweepParam::PTotDbm,
            values: (0..8).map(|i| 2.0 * i as f64).collect(),
            trials: DEFAULT_TRIALS,
            base_seed: 1,
            methods: vec![Method::Robust, Method::Projection],
            output_path: PathBuf::from("results"),
            bcd: BcdOptions::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("line {line}: cannot parse '{v}' for '{key}'")))
}

impl ExperimentConfig {
    /// Parses flat `key=value` lines; `#` starts a comment and
    /// `sweep_value` may repeat.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut values = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key=value, got '{body}'")))?;
            let (key, v) = (key.trim(), v.trim());
            match key {
                "experiment_id" => c.id = v.to_string(),
                "n_t" => c.system.n_t = parse_value(key, v, line)?,
                "n_r" => c.system.n_r = parse_value(key, v, line)?,
                "n_e" => c.system.n_e = parse_value(key, v, line)?,
                "p_tot_dbm" => c.system.p_tot_dbm = parse_value(key, v, line)?,
                "p_t_dbm" => c.system.p_t_dbm = parse_value(key, v, line)?,
                "noise_dbm" => c.system.noise_dbm = parse_value(key, v, line)?,
                "epsilon" => c.system = c.system.clone().with_epsilon(parse_value(key, v, line)?),
                "delta_hl" => c.system.delta_hl = parse_value(key, v, line)?,
                "delta_he" => c.system.delta_he = parse_value(key, v, line)?,
                "delta_ge" => c.system.delta_ge = parse_value(key, v, line)?,
                "sweep" => c.sweep = v.parse()?,
                "sweep_value" => values.push(parse_value(key, v, line)?),
                "trials" => c.trials = parse_value(key, v, line)?,
                "base_seed" => c.base_seed = parse_value(key, v, line)?,
                "methods" => {
                    c.methods = v
                        .split(',')
                        .map(|m| m.trim())
                        .filter(|m| !m.is_empty())
                        .map(Method::from_str)
                        .collect::<Result<_>>()?
                }
                "output_path" => c.output_path = PathBuf::from(v),
                "phi" => c.bcd.phi = parse_value(key, v, line)?,
                "max_iters" => c.bcd.max_iters = parse_value(key, v, line)?,
                _ => return Err(Error::Config(format!("line {line}: unknown key '{key}'"))),
            }
        }
        if !values.is_empty() {
            c.values = values;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("at least one sweep_value is required".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) || self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep values must be finite and strictly increasing".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.id.is_empty() || self.id.contains(['/', '\\', ',']) {
            return Err(Error::Config(format!("invalid experiment_id '{}'", self.id)));
        }
        if !(self.bcd.phi > 0.0) || self.bcd.max_iters == 0 {
            return Err(Error::Config("phi must be > 0 and max_iters >= 1".into()));
        }
        for &v in &self.values {
            self.sweep.apply(&self.system, v)?;
        }
        Ok(())
    }

    pub fn trials_path(&self) -> PathBuf {
        self.output_path.join(format!("{}_trials.csv", self.id))
    }

    pub fn aggregate_path(&self) -> PathBuf {
        self.output_path.join(format!("{}_aggregate.csv", self.id))
    }

    pub fn trace_path(&self) -> PathBuf {
        self.output_path.join(format!("{}_trace.csv", self.id))
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads; 0 means all available cores.
    pub jobs: usize,
    /// Record wall-clock time per trial (breaks byte-identical output).
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 0, timing: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrialStatus {
    Ok,
    /// Design usable but BCD hit the iteration cap.
    IterationLimit,
    Failed(String),
}

impl TrialStatus {
    pub fn is_ok(&self) -> bool {
        !matches!(self, TrialStatus::Failed(_))
    }
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrialStatus::Ok => f.write_str("ok"),
            TrialStatus::IterationLimit => f.write_str("iteration_limit"),
            TrialStatus::Failed(m) => {
                let clean: String = m
                    .chars()
                    .map(|c| if c == ',' || c == '\n' || c == '\r' || c == '"' { ';' } else { c })
                    .collect();
                write!(f, "failed: {clean}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub r_w: f64,
    pub r_w_raw: f64,
    pub eta1: f64,
    pub eta2_min: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub bcd_iters: usize,
    pub status: TrialStatus,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub sweep_value: f64,
    pub method: Method,
    pub mean_r_w: f64,
    pub std_r_w: f64,
    pub n_ok: usize,
    pub n_fail: usize,
    /// Zero for methods without BCD.
    pub mean_bcd_iters: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn aggregate(&self, method: Method) -> Vec<&AggregateRow> {
        self.aggregates.iter().filter(|a| a.method == method).collect()
    }
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn run_trial(config: &SystemConfig, bcd: &BcdOptions, method: Method, seed: u64) -> Result<(SecrecyReport, usize, TrialStatus)> {
    let channels = sample_channels(config, seed)?;
    let (design, iters, status) = match method {
        Method::Robust => {
            let r = robust_design(&channels, config, bcd)?;
            let status = match &r.bcd.status {
                BcdStatus::Converged => TrialStatus::Ok,
                BcdStatus::IterationLimit => TrialStatus::IterationLimit,
                BcdStatus::SolverFailure(m) => TrialStatus::Failed(m.clone()),
            };
            (r.design, r.bcd.trace.iterations(), status)
        }
        Method::Projection => (projection_design(&channels, config)?.design, 0, TrialStatus::Ok),
    };
    Ok((worst_case_rate(&design, &channels, config)?, iters, status))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every sweep value × trial × method and writes both CSV files.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentResult> {
    config.validate()?;
    fs::create_dir_all(&config.output_path)?;
    let mut tasks = Vec::new();
    for idx in 0..config.values.len() {
        for trial in 0..config.trials {
            for &method in &config.methods {
                tasks.push((idx, trial, method));
            }
        }
    }
    let systems: Vec<SystemConfig> = config
        .values
        .iter()
        .map(|&v| config.sweep.apply(&config.system, v))
        .collect::<Result<_>>()?;
    let rows: Vec<TrialRow> = pool(opts.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(idx, trial, method)| {
                let value = config.values[idx];
                let seed = config.base_seed.wrapping_add(trial as u64);
                let start = Instant::now();
                let outcome = run_trial(&systems[idx], &config.bcd, method, seed);
                let wall_ms = if opts.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
                let (rep, iters, status) = match outcome {
                    Ok(x) => x,
                    Err(e) => {
                        log::warn!("{} {} trial {trial}: {e}", config.sweep.name(), value);
                        let nan = f64::NAN;
                        let rep = SecrecyReport {
                            eta1: nan,
                            eta2_min: nan,
                            theta1_star: nan,
                            theta2_star: nan,
                            r_w_raw: nan,
                            r_w: nan,
                        };
                        (rep, 0, TrialStatus::Failed(e.to_string()))
                    }
                };
                log::info!("{}={value} trial {trial} {}: r_w {:.4} ({status})", config.sweep.name(), method.name(), rep.r_w);
                TrialRow {
                    sweep_value: value,
                    trial,
                    seed,
                    method,
                    r_w: rep.r_w,
                    r_w_raw: rep.r_w_raw,
                    eta1: rep.eta1,
                    eta2_min: rep.eta2_min,
                    theta1: rep.theta1_star,
                    theta2: rep.theta2_star,
                    bcd_iters: iters,
                    status,
                    wall_ms,
                }
            })
            .collect()
    });
    let aggregates = aggregate(&rows, &config.values, &config.methods);
    let result = ExperimentResult { rows, aggregates };
    fs::write(config.trials_path(), trials_csv(config, &result.rows))?;
    fs::write(config.aggregate_path(), aggregate_csv(&result.aggregates))?;
    Ok(result)
}

/// Means over successful trials, in sweep then method order.
pub fn aggregate(rows: &[TrialRow], values: &[f64], methods: &[Method]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for &value in values {
        for &method in methods {
            let group: Vec<&TrialRow> = rows.iter().filter(|r| r.sweep_value == value && r.method == method).collect();
            let ok: Vec<&&TrialRow> = group.iter().filter(|r| r.status.is_ok()).collect();
            let n = ok.len();
            let mut sum = CompensatedSum::default();
            let mut iters = CompensatedSum::default();
            for r in &ok {
                sum.add(r.r_w);
                iters.add(r.bcd_iters as f64);
            }
            let mean = if n > 0 { sum.value() / n as f64 } else { f64::NAN };
            let mut sq = CompensatedSum::default();
            for r in &ok {
                sq.add((r.r_w - mean).powi(2));
            }
            let std = if n > 1 { (sq.value() / (n - 1) as f64).sqrt() } else { 0.0 };
            out.push(AggregateRow {
                sweep_value: value,
                method,
                mean_r_w: mean,
                std_r_w: std,
                n_ok: n,
                n_fail: group.len() - n,
                mean_bcd_iters: if n > 0 { iters.value() / n as f64 } else { f64::NAN },
            });
        }
    }
    out
}

pub fn trials_csv(config: &ExperimentConfig, rows: &[TrialRow]) -> String {
    let mut s = String::from(
        "experiment_id,sweep_name,sweep_value,trial,seed,method,r_w,r_w_raw,eta1,eta2_min,theta1,theta2,bcd_iters,status,wall_ms\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            config.id,
            config.sweep.name(),
            r.sweep_value,
            r.trial,
            r.seed,
            r.method.name(),
            r.r_w,
            r.r_w_raw,
            r.eta1,
            r.eta2_min,
            r.theta1,
            r.theta2,
            r.bcd_iters,
            r.status,
            r.wall_ms
        );
    }
    s
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from("sweep_value,method,mean_r_w,std_r_w,n_ok,n_fail,mean_bcd_iters\n");
    for a in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            a.sweep_value,
            a.method.name(),
            a.mean_r_w,
            a.std_r_w,
            a.n_ok,
            a.n_fail,
            a.mean_bcd_iters
        );
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub iteration: usize,
    pub f: f64,
    pub status: String,
}

/// Per-iteration objective values of the robust design for every sweep
/// value and trial.
pub fn emit_convergence_trace(config: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<TraceRow>> {
    config.validate()?;
    if !config.methods.contains(&Method::Robust) {
        return Err(Error::Config("convergence traces need the robust method".into()));
    }
    fs::create_dir_all(&config.output_path)?;
    let tasks: Vec<(usize, usize)> = (0..config.values.len())
        .flat_map(|i| (0..config.trials).map(move |t| (i, t)))
        .collect();
    let per_trial: Vec<Vec<TraceRow>> = pool(opts.jobs)?.install(|| {
        tasks
            .par_iter()
            .map(|&(idx, trial)| {
                let value = config.values[idx];
                let seed = config.base_seed.wrapping_add(trial as u64);
                let outcome = config
                    .sweep
                    .apply(&config.system, value)
                    .and_then(|sys| Ok((sample_channels(&sys, seed)?, sys)))
                    .and_then(|(ch, sys)| robust_design(&ch, &sys, &config.bcd));
                match outcome {
                    Ok(r) => {
                        let status = match &r.bcd.status {
                            BcdStatus::Converged => TrialStatus::Ok,
                            BcdStatus::IterationLimit => TrialStatus::IterationLimit,
                            BcdStatus::SolverFailure(m) => TrialStatus::Failed(m.clone()),
                        }
                        .to_string();
                        r.bcd
                            .trace
                            .values()
                            .into_iter()
                            .enumerate()
                            .map(|(iteration, f)| TraceRow {
                                sweep_value: value,
                                trial,
                                seed,
                                iteration,
                                f,
                                status: status.clone(),
                            })
                            .collect()
                    }
                    Err(e) => vec![TraceRow {
                        sweep_value: value,
                        trial,
                        seed,
                        iteration: 0,
                        f: f64::NAN,
                        status: TrialStatus::Failed(e.to_string()).to_string(),
                    }],
                }
            })
            .collect()
    });
    let rows: Vec<TraceRow> = per_trial.into_iter().flatten().collect();
    let mut s = String::from("experiment_id,sweep_name,sweep_value,trial,seed,iteration,f,status\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            config.id,
            config.sweep.name(),
            r.sweep_value,
            r.trial,
            r.seed,
            r.iteration,
            r.f,
            r.status
        );
    }
    fs::write(config.trace_path(), s)?;
    Ok(rows)
}

#[cfg(test)]
mod tests;
