//! Run-configuration parsing, orchestration, and output writing.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qng_core::cmaes::CmaesConfig;
use qng_core::loss::min_transmission;
use qng_core::targets::TargetSpec;
use qng_core::threshold::{
    gaussian_threshold, passive_threshold, EscalationConfig, GridConfig, ThresholdResult,
};
use qng_core::verify::{run_suite, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Threshold,
    LossTolerance,
    Sweep,
}

impl CommandKind {
    fn name(self) -> &'static str {
        match self {
            CommandKind::Threshold => "threshold",
            CommandKind::LossTolerance => "loss-tolerance",
            CommandKind::Sweep => "sweep",
        }
    }
}

pub struct Overrides {
    pub config_path: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Passive,
    Gaussian,
    Both,
}

impl Kind {
    fn wants_passive(self) -> bool {
        matches!(self, Kind::Passive | Kind::Both)
    }
    fn wants_gaussian(self) -> bool {
        matches!(self, Kind::Gaussian | Kind::Both)
    }
}

/// Optimizer overrides; unset fields keep the engine defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_evals: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol_fun: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stagnation_gens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stagnation_tol: Option<f64>,
}

impl OptimizerOverrides {
    fn apply(&self, seed: u64) -> CmaesConfig {
        let mut cfg = CmaesConfig::new(6, seed);
        cfg.restarts = self.restarts.unwrap_or(8);
        cfg.max_evals = self.max_evals.unwrap_or(4_000);
        if let Some(p) = self.population {
            cfg.population = Some(p);
        }
        if let Some(s) = self.sigma0 {
            cfg.sigma0 = s;
        }
        if let Some(t) = self.tol_fun {
            cfg.tol_fun = t;
        }
        if let Some(t) = self.tol_x {
            cfg.tol_x = t;
        }
        if let Some(g) = self.stagnation_gens {
            cfg.stagnation_gens = g;
        }
        if let Some(t) = self.stagnation_tol {
            cfg.stagnation_tol = t;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EscalationOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stop: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xi_cap: Option<f64>,
}

impl EscalationOverrides {
    fn apply(&self) -> EscalationConfig {
        let mut esc = EscalationConfig::default();
        if self.start.is_some() {
            esc.start = self.start;
        }
        if let Some(s) = self.step {
            esc.step = s;
        }
        if let Some(s) = self.stop {
            esc.stop = s;
        }
        if let Some(t) = self.tol {
            esc.tol = t;
        }
        if let Some(x) = self.xi_cap {
            esc.xi_cap = x;
        }
        esc
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    parameter: String,
    start: f64,
    stop: f64,
    steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    command: Option<String>,
    target: TargetSpec,
    #[serde(default = "default_kind")]
    kind: Kind,
    #[serde(default)]
    optimizer: OptimizerOverrides,
    #[serde(default)]
    escalation: EscalationOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepConfig>,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
    #[serde(default = "default_format")]
    format: String,
    /// Bisection tolerance in η for loss-tolerance runs.
    #[serde(default = "default_loss_tol")]
    loss_tol: f64,
}

fn default_kind() -> Kind {
    Kind::Both
}
fn default_format() -> String {
    "csv".into()
}
fn default_loss_tol() -> f64 {
    1e-4
}

/// One output row. Timing is provenance, not payload: it goes to the
/// sidecar so that identical (config, seed) runs stay byte-identical.
#[derive(Debug, Clone, Serialize)]
struct ResultRow {
    sweep_value: Option<f64>,
    threshold_passive: Option<f64>,
    threshold_gaussian: Option<f64>,
    eta_min: Option<f64>,
    converged_passive: Option<bool>,
    converged_gaussian: Option<bool>,
    #[serde(skip)]
    wall_time_ms: u128,
    #[serde(skip)]
    passive: Option<ThresholdResult>,
    #[serde(skip)]
    gaussian: Option<ThresholdResult>,
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    out.push_str(
        "sweep_value,threshold_passive,threshold_gaussian,eta_min,converged_passive,converged_gaussian\r\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\r\n",
            fmt_opt_f64(r.sweep_value),
            fmt_opt_f64(r.threshold_passive),
            fmt_opt_f64(r.threshold_gaussian),
            fmt_opt_f64(r.eta_min),
            fmt_opt_bool(r.converged_passive),
            fmt_opt_bool(r.converged_gaussian),
        ));
    }
    out
}

fn apply_sweep_value(spec: &TargetSpec, parameter: &str, value: f64) -> Result<TargetSpec, String> {
    let mut s = spec.clone();
    match parameter {
        "theta" => s.theta = Some(value),
        "alpha" => s.alpha = Some(value),
        "r" => s.r = Some(value),
        "phi1" | "phi2" => {
            let idx = if parameter == "phi1" { 0 } else { 1 };
            let phis = s
                .phis
                .as_mut()
                .ok_or_else(|| format!("sweep parameter \"{parameter}\" needs a phis list"))?;
            if idx >= phis.len() {
                return Err(format!(
                    "sweep parameter \"{parameter}\" is outside the phis list"
                ));
            }
            phis[idx] = value;
        }
        other => {
            return Err(format!(
                "unknown sweep parameter \"{other}\" (expected theta, alpha, r, phi1 or phi2)"
            ))
        }
    }
    Ok(s)
}

fn compute_row(
    cfg: &RunConfig,
    spec: &TargetSpec,
    sweep_value: Option<f64>,
    with_loss: bool,
    seed: u64,
) -> Result<ResultRow, String> {
    let t0 = Instant::now();
    let target = spec.build().map_err(|e| e.to_string())?;
    let mut row = ResultRow {
        sweep_value,
        threshold_passive: None,
        threshold_gaussian: None,
        eta_min: None,
        converged_passive: None,
        converged_gaussian: None,
        wall_time_ms: 0,
        passive: None,
        gaussian: None,
    };
    if cfg.kind.wants_passive() {
        let res = passive_threshold(&target, &GridConfig::default()).map_err(|e| e.to_string())?;
        row.threshold_passive = Some(res.value);
        row.converged_passive = Some(res.converged);
        row.passive = Some(res);
    }
    if cfg.kind.wants_gaussian() {
        let opt = cfg.optimizer.apply(seed);
        let esc = cfg.escalation.apply();
        let res = gaussian_threshold(&target, &opt, &esc).map_err(|e| e.to_string())?;
        row.threshold_gaussian = Some(res.value);
        row.converged_gaussian = Some(res.converged);
        row.gaussian = Some(res);
    }
    if with_loss {
        // Loss tolerance is judged against the Gaussian threshold when
        // available, otherwise the passive one.
        let thr = row
            .gaussian
            .as_ref()
            .or(row.passive.as_ref())
            .expect("at least one kind requested");
        let loss = min_transmission(&target, thr, cfg.loss_tol).map_err(|e| e.to_string())?;
        row.eta_min = Some(loss.eta_min);
    }
    row.wall_time_ms = t0.elapsed().as_millis();
    Ok(row)
}

fn provenance(
    cfg: &RunConfig,
    command: CommandKind,
    seed: u64,
    rows: &[ResultRow],
) -> serde_json::Value {
    let row_meta: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            serde_json::json!({
                "sweep_value": r.sweep_value,
                "wall_time_ms": r.wall_time_ms,
                "passive": r.passive,
                "gaussian": r.gaussian,
            })
        })
        .collect();
    serde_json::json!({
        "command": command.name(),
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "rows": row_meta,
    })
}

pub fn run(command: CommandKind, overrides: Overrides) -> ExitCode {
    let raw = match std::fs::read_to_string(&overrides.config_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!(
                "invalid config: cannot read {}: {e}",
                overrides.config_path.display()
            );
            return ExitCode::from(1);
        }
    };
    let mut cfg: RunConfig = match serde_json::from_str(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid config: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(cmd) = &cfg.command {
        if cmd != command.name() {
            eprintln!(
                "invalid config: key \"command\" says {cmd:?} but the CLI command is {:?}",
                command.name()
            );
            return ExitCode::from(1);
        }
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = overrides.out {
        cfg.output = Some(out);
    }
    if let Some(format) = overrides.format {
        cfg.format = format;
    }
    if cfg.format != "csv" && cfg.format != "json" {
        eprintln!(
            "invalid config: key \"format\" must be csv or json, got {:?}",
            cfg.format
        );
        return ExitCode::from(1);
    }
    if let Err(e) = cfg.target.validate() {
        eprintln!("invalid config: {e}");
        return ExitCode::from(1);
    }

    let rows: Result<Vec<ResultRow>, String> = match command {
        CommandKind::Threshold | CommandKind::LossTolerance => {
            if cfg.sweep.is_some() && command == CommandKind::Threshold {
                Err("key \"sweep\" only applies to the sweep command".into())
            } else if let Some(sweep) = cfg.sweep.clone() {
                sweep_rows(&cfg, &sweep, command == CommandKind::LossTolerance)
            } else {
                compute_row(
                    &cfg,
                    &cfg.target,
                    None,
                    command == CommandKind::LossTolerance,
                    cfg.seed,
                )
                .map(|r| vec![r])
            }
        }
        CommandKind::Sweep => {
            let Some(sweep) = cfg.sweep.clone() else {
                return {
                    eprintln!("invalid config: sweep command needs the \"sweep\" key");
                    ExitCode::from(1)
                };
            };
            sweep_rows(&cfg, &sweep, false)
        }
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invalid config: {e}");
            return ExitCode::from(1);
        }
    };

    let payload = if cfg.format == "csv" {
        write_csv(&rows)
    } else {
        let mut s = serde_json::to_string_pretty(&rows).expect("serializable rows");
        s.push('\n');
        s
    };
    let out_path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("qng-{}.{}", command.name(), cfg.format)));
    if let Err(e) = std::fs::write(&out_path, payload) {
        eprintln!("cannot write {}: {e}", out_path.display());
        return ExitCode::from(1);
    }
    let sidecar = provenance(&cfg, command, cfg.seed, &rows);
    let sidecar_path = out_path.with_extension(format!(
        "{}provenance.json",
        out_path
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    if let Err(e) = std::fs::write(
        &sidecar_path,
        serde_json::to_string_pretty(&sidecar).expect("serializable sidecar") + "\n",
    ) {
        eprintln!("cannot write {}: {e}", sidecar_path.display());
        return ExitCode::from(1);
    }
    println!(
        "wrote {} and {}",
        out_path.display(),
        sidecar_path.display()
    );

    let unconverged = rows
        .iter()
        .any(|r| r.converged_passive == Some(false) || r.converged_gaussian == Some(false));
    if unconverged {
        eprintln!("warning: at least one threshold did not converge (results written)");
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn sweep_rows(
    cfg: &RunConfig,
    sweep: &SweepConfig,
    with_loss: bool,
) -> Result<Vec<ResultRow>, String> {
    if sweep.steps < 2 {
        return Err("sweep needs steps >= 2".into());
    }
    let values: Vec<f64> = (0..sweep.steps)
        .map(|i| sweep.start + (sweep.stop - sweep.start) * i as f64 / (sweep.steps - 1) as f64)
        .collect();
    // Validate the parameter once before burning compute.
    apply_sweep_value(&cfg.target, &sweep.parameter, values[0])?;
    values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let spec = apply_sweep_value(&cfg.target, &sweep.parameter, v)?;
            compute_row(
                cfg,
                &spec,
                Some(v),
                with_loss,
                cfg.seed.wrapping_add(i as u64),
            )
        })
        .collect()
}

pub fn verify(suite: &str, seed: u64) -> ExitCode {
    let Some(suite) = Suite::parse(suite) else {
        eprintln!("unknown suite {suite:?} (expected oracles, figures-fast or figures-full)");
        return ExitCode::from(1);
    };
    let checks = run_suite(suite, seed);
    let mut all_ok = true;
    println!("{:-<78}", "");
    for c in &checks {
        all_ok &= c.passed;
        println!(
            "{:<4} {:<52} {:>8} ms",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.millis
        );
        println!("     {}", c.detail);
    }
    println!("{:-<78}", "");
    println!(
        "{} of {} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    );
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
