//! One function per subcommand. Each returns the artifacts it would write;
//! [`execute`] writes them only after the command has succeeded.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde_json::{json, Map, Value};

use ebqi_core::couplings::{
    self, decay_rates, effective_phi_multipass, g_quantum, phi_cavity, phi_free_space, validate_dispersive_regime,
    PhysicalConstants, RegimeReport, DEFAULT_REGIME_THRESHOLD,
};
use ebqi_core::distributions::{NumberDistribution, DEFAULT_TRUNCATION_CAP};
use ebqi_core::protocols::{
    binary_schedule, characteristic_function, discrimination_readout, monte_carlo_readout, recover_exact,
    recover_limited, recovery_kl, run_projection, sample_characteristic_mc, uniform_schedule, BranchMode, PhiGrid,
    ProjectionOptions, TrajectoryOutcome, BINARY_SCHEDULE_NOTE,
};
use ebqi_core::quantum::ElectronDensityMatrix;

use crate::config::{
    family_distribution, BranchPolicy, ExperimentConfig, GridKind, InitialState, ScheduleKind,
};
use crate::output::{timestamp, write_run, Artifact, Cell, RunOutput, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Coupling,
    Discriminate,
    Recover,
    Project,
    ValidateConfig,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coupling => "coupling",
            Command::Discriminate => "discriminate",
            Command::Recover => "recover",
            Command::Project => "project",
            Command::ValidateConfig => "validate-config",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    /// Dispersive-regime check failed in strict mode.
    Regime(String),
    Io(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Regime(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e:#}"),
            CliError::Regime(m) => write!(f, "regime check failed: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// The limited-grid solver stopped at its iteration cap; outputs hold
    /// the best iterate.
    NotConverged,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::NotConverged => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: RunStatus,
    pub manifest: Option<PathBuf>,
    pub notes: Vec<String>,
}

/// Validates the config, runs `command`, and writes its outputs to `out`.
pub fn execute(command: Command, config: &ExperimentConfig, out: &Path) -> Result<RunReport, CliError> {
    let started = timestamp();
    let (output, status) = compute(command, config)?;
    if command == Command::ValidateConfig {
        return Ok(RunReport { status, manifest: None, notes: output.notes });
    }
    let manifest = write_run(out, command.name(), config, &output, &started).map_err(CliError::Io)?;
    Ok(RunReport { status, manifest: Some(manifest), notes: output.notes })
}

/// Runs `command` without writing anything.
pub fn compute(command: Command, config: &ExperimentConfig) -> Result<(RunOutput, RunStatus), CliError> {
    let mut output = RunOutput::default();
    let coupling = coupling_summary(config).map_err(CliError::Config)?;
    if let Some(c) = &coupling {
        if let Some(r) = &c.regime {
            if !r.valid {
                let msg = violation_message(r);
                if config.strict() {
                    return Err(CliError::Regime(msg));
                }
                output.notes.push(format!("warning: {msg}"));
            }
        }
        output.derived.insert("coupling".into(), c.json.clone());
    }
    let status = match command {
        Command::Coupling => cmd_coupling(config, coupling.as_ref(), &mut output),
        Command::Discriminate => cmd_discriminate(config, coupling.as_ref(), &mut output),
        Command::Recover => cmd_recover(config, &mut output),
        Command::Project => cmd_project(config, &mut output),
        Command::ValidateConfig => validate_sections(config, coupling.as_ref()),
    }
    .map_err(CliError::Config)?;
    Ok((output, status))
}

fn violation_message(r: &RegimeReport<f64>) -> String {
    let parts: Vec<String> = r.violations().iter().map(|(k, v)| format!("{k} = {v:.3e}")).collect();
    format!("dispersive regime violated (threshold {}): {}", r.threshold, parts.join(", "))
}

/// Interaction strengths and regime report derived from `[coupling]`.
pub struct CouplingSummary {
    pub phi_free_space: Option<f64>,
    pub phi_cavity: Option<f64>,
    pub regime: Option<RegimeReport<f64>>,
    pub json: Value,
}

impl CouplingSummary {
    /// The single interaction strength this section defines.
    pub fn phi(&self) -> anyhow::Result<f64> {
        match (self.phi_free_space, self.phi_cavity) {
            (Some(p), None) | (None, Some(p)) => Ok(p),
            (Some(_), Some(_)) => bail!("[coupling] defines both free_space and cavity; set phi explicitly"),
            (None, None) => bail!("[coupling] defines neither free_space nor cavity"),
        }
    }
}

pub fn coupling_summary(config: &ExperimentConfig) -> anyhow::Result<Option<CouplingSummary>> {
    let Some(c) = &config.coupling else { return Ok(None) };
    let passes = c.passes.unwrap_or(1);
    let threshold = c.threshold.unwrap_or(DEFAULT_REGIME_THRESHOLD);
    let mut json = Map::new();
    json.insert("passes".into(), json!(passes));

    let phi_free_space = match &c.free_space {
        Some(fs) => {
            let geom = fs.geometry();
            let single = phi_free_space(&geom, &PhysicalConstants::default())?;
            let phi = effective_phi_multipass(single, passes)?;
            json.insert(
                "free_space".into(),
                json!({
                    "x": geom.omega_0 * geom.r_perp / geom.v,
                    "omega_0_rad_per_s": geom.omega_0,
                    "phi_single_pass": single,
                    "phi": phi,
                    "alpha": geom.alpha,
                }),
            );
            Some(phi)
        }
        None => None,
    };

    let (phi_cavity_value, regime) = match &c.cavity {
        Some(cc) => {
            let cav = cc.params();
            let single = phi_cavity(&cav)?;
            let phi = effective_phi_multipass(single, passes)?;
            let g_q = g_quantum(&cav);
            let rates = decay_rates(&cav)?;
            let report = validate_dispersive_regime(&cav, threshold)?;
            json.insert(
                "cavity".into(),
                json!({
                    "phi_single_pass": single,
                    "phi": phi,
                    "g_q_abs": g_q.norm(),
                    "g_q_arg": g_q.arg(),
                    "alpha": couplings::coupling_phase(&cav),
                    "gamma_qu": rates.gamma_qu,
                    "gamma_el": rates.gamma_el,
                    "regime": {
                        "threshold": report.threshold,
                        "valid": report.valid,
                        "margins": report.margins,
                    },
                }),
            );
            (Some(phi), Some(report))
        }
        None => (None, None),
    };
    Ok(Some(CouplingSummary { phi_free_space, phi_cavity: phi_cavity_value, regime, json: Value::Object(json) }))
}

fn cmd_coupling(
    config: &ExperimentConfig,
    coupling: Option<&CouplingSummary>,
    output: &mut RunOutput,
) -> anyhow::Result<RunStatus> {
    let c = coupling.context("missing [coupling] section")?;
    ensure!(c.phi_free_space.is_some() || c.phi_cavity.is_some(), "[coupling] defines neither free_space nor cavity");
    output.artifacts.push(Artifact::json("coupling.json", "interaction strengths, decay rates, regime margins", &c.json)?);
    if let Some(r) = &c.regime {
        let mut t = Table::new(vec!["margin", "value", "threshold", "satisfied"]);
        for (k, v) in &r.margins {
            let ok = r.violations().iter().all(|(name, _)| name != k);
            t.push(vec![Cell::Text(k.to_string()), (*v).into(), r.threshold.into(), Cell::Text(ok.to_string())]);
        }
        output.artifacts.push(Artifact::table("regime", "dispersive-regime margins", &t, config.format())?);
    }
    Ok(RunStatus::Ok)
}

fn discrimination_phis(config: &ExperimentConfig, coupling: Option<&CouplingSummary>) -> anyhow::Result<Vec<f64>> {
    let d = config.discriminate.as_ref().context("missing [discriminate] section")?;
    match &d.phi {
        Some(v) => v.expand(),
        None => Ok(vec![coupling.context("[discriminate] needs phi or a [coupling] section")?.phi()?]),
    }
}

/// Distributions to sweep, labelled by their nominal mean.
fn discrimination_inputs(config: &ExperimentConfig) -> anyhow::Result<Vec<NumberDistribution<f64>>> {
    let d = config.discriminate.as_ref().context("missing [discriminate] section")?;
    match d.family {
        Some(family) => {
            let means = d.means.as_ref().context("[discriminate] family sweep needs 'means'")?.expand()?;
            let n_max = d.n_max.context("[discriminate] family sweep needs 'n_max'")?;
            let cap = d.truncation_cap.unwrap_or(DEFAULT_TRUNCATION_CAP);
            means
                .iter()
                .map(|&m| family_distribution(family, m, n_max, cap).with_context(|| format!("{} mean {m}", family.name())))
                .collect()
        }
        None => {
            ensure!(d.means.is_none() && d.n_max.is_none(), "'means' and 'n_max' only apply with 'family'");
            Ok(vec![config.distribution()?])
        }
    }
}

fn cmd_discriminate(
    config: &ExperimentConfig,
    coupling: Option<&CouplingSummary>,
    output: &mut RunOutput,
) -> anyhow::Result<RunStatus> {
    let phis = discrimination_phis(config, coupling)?;
    let dists = discrimination_inputs(config)?;
    let shots = config.shots();
    let mut columns = vec!["mu", "fano", "phi", "z", "y"];
    if shots > 0 {
        columns.extend(["z_mc", "z_stderr", "y_mc", "y_stderr", "shots"]);
    }
    let mut t = Table::new(columns);
    for p in &dists {
        let fano = p.fano().unwrap_or(f64::NAN);
        for &phi in &phis {
            let r = discrimination_readout(p, phi);
            let mut row: Vec<Cell> = vec![p.mean().into(), fano.into(), phi.into(), r.z.into(), r.y.into()];
            if shots > 0 {
                let seed = config.seed().wrapping_add(t.rows.len() as u64);
                let mc = monte_carlo_readout(p, phi, shots, seed)?;
                row.extend([mc.z.into(), mc.z_stderr.into(), mc.y.into(), mc.y_stderr.into(), shots.into()]);
            }
            t.push(row);
        }
    }
    output.derived.insert("rows".into(), json!(t.rows.len()));
    output.artifacts.push(Artifact::table("discriminate", "qubit readout per distribution and phi", &t, config.format())?);
    Ok(RunStatus::Ok)
}

fn cmd_recover(config: &ExperimentConfig, output: &mut RunOutput) -> anyhow::Result<RunStatus> {
    let r = config.recover.as_ref().context("missing [recover] section")?;
    let p = config.distribution()?;
    let n_max = p.n_max();
    let grid = match r.grid {
        GridKind::Exact => {
            ensure!(r.phi_max.is_none() && r.samples.is_none(), "exact grid takes neither phi_max nor samples");
            PhiGrid::exact(n_max)
        }
        GridKind::Limited => {
            let phi_max = r.phi_max.context("limited grid needs phi_max")?;
            PhiGrid::limited(phi_max, r.samples.unwrap_or(n_max + 1))?
        }
    };
    let shots = config.shots();
    let samples = if shots > 0 { sample_characteristic_mc(&p, &grid, shots, config.seed())? } else { grid.sample(&p) };

    let mut report = Map::new();
    report.insert("grid".into(), json!(r.grid));
    report.insert("grid_points".into(), json!(grid.len()));
    report.insert("phi_max".into(), json!(grid.max()));
    report.insert("shots".into(), json!(shots));
    let (p_hat, status) = match r.grid {
        GridKind::Exact => {
            let rec = recover_exact(&grid, &samples)?;
            report.insert("max_imag_residue".into(), json!(rec.max_imag_residue));
            report.insert("clipped_mass".into(), json!(rec.clipped_mass));
            (rec.distribution, RunStatus::Ok)
        }
        GridKind::Limited => {
            let rec = recover_limited(&grid, &samples, n_max)?;
            report.insert("residual".into(), json!(rec.residual));
            report.insert("converged".into(), json!(rec.converged));
            report.insert("iterations".into(), json!(rec.iterations));
            let status = if rec.converged {
                RunStatus::Ok
            } else {
                output.notes.push(format!("solver stopped after {} iterations; writing best iterate", rec.iterations));
                RunStatus::NotConverged
            };
            (rec.distribution, status)
        }
    };
    let kl = recovery_kl(&p, &p_hat)?;
    report.insert("kl".into(), json!(kl));
    report.insert("kl_floor".into(), json!(ebqi_core::protocols::RECOVERY_KL_FLOOR));

    let mut dist = Table::new(vec!["n", "p_true", "p_hat"]);
    for (n, w) in p.iter() {
        dist.push(vec![n.into(), w.into(), p_hat.weight(n).into()]);
    }
    let mut smp = Table::new(vec!["k", "phi", "re", "im", "re_fit", "im_fit"]);
    for (k, (&phi, s)) in grid.values().iter().zip(&samples).enumerate() {
        let fit = characteristic_function(&p_hat, phi);
        smp.push(vec![k.into(), phi.into(), s.re.into(), s.im.into(), fit.re.into(), fit.im.into()]);
    }
    output.derived.insert("recovery".into(), Value::Object(report.clone()));
    output.artifacts.push(Artifact::table("recovered", "true and recovered p(n)", &dist, config.format())?);
    output.artifacts.push(Artifact::table("samples", "characteristic-function samples and fit", &smp, config.format())?);
    output.artifacts.push(Artifact::json("recovery.json", "KL divergence and solver diagnostics", &Value::Object(report))?);
    Ok(status)
}

fn cmd_project(config: &ExperimentConfig, output: &mut RunOutput) -> anyhow::Result<RunStatus> {
    let pc = config.project.as_ref().context("missing [project] section")?;
    let p = config.distribution()?;
    ensure!(pc.target <= p.n_max(), "target {} exceeds n_max = {}", pc.target, p.n_max());
    let schedule = match pc.schedule {
        ScheduleKind::Binary => {
            ensure!(pc.phi.is_none() && pc.steps.is_none(), "binary schedule takes neither phi nor steps");
            output.derived.insert("schedule_note".into(), json!(BINARY_SCHEDULE_NOTE));
            binary_schedule(pc.target, p.n_max())?
        }
        ScheduleKind::Uniform => {
            let phi = pc.phi.context("uniform schedule needs phi")?;
            let steps = pc.steps.context("uniform schedule needs steps")?;
            uniform_schedule(phi, pc.target, steps)?
        }
    };
    let mode = match pc.mode {
        BranchPolicy::PostSelect => {
            ensure!(!pc.retry && pc.max_attempts.is_none(), "retry settings need mode = \"sampled\"");
            BranchMode::PostSelect
        }
        BranchPolicy::Sampled => BranchMode::Sampled {
            seed: config.seed(),
            retry: pc.retry,
            max_attempts: pc.max_attempts.unwrap_or(if pc.retry { 100 } else { 1 }),
        },
    };
    if let Some(f) = pc.stop_at_fidelity {
        ensure!(f > 0.0 && f <= 1.0, "stop_at_fidelity = {f} outside (0, 1]");
    }
    let rho = match pc.initial_state {
        InitialState::Mixed => ElectronDensityMatrix::diagonal(&p),
        InitialState::Coherent => ElectronDensityMatrix::coherent(&p),
    };
    let opts = ProjectionOptions { mode, stop_at_fidelity: pc.stop_at_fidelity, keep_snapshots: false };
    let traj = run_projection(&rho, &schedule, &opts)?;

    let outcome = match traj.outcome {
        TrajectoryOutcome::Completed => json!({"kind": "completed"}),
        TrajectoryOutcome::DegenerateBranch { step } => {
            output.notes.push(format!("down branch has vanishing probability at step {step}; trajectory aborted"));
            json!({"kind": "degenerate_branch", "step": step})
        }
        TrajectoryOutcome::Failed { step } => {
            output.notes.push(format!("up outcome at step {step} ended the last attempt"));
            json!({"kind": "failed", "step": step})
        }
    };
    output.derived.insert(
        "projection".into(),
        json!({
            "target": traj.target,
            "scheduled_steps": schedule.len(),
            "applied_steps": traj.records.len(),
            "initial_fidelity": traj.initial_fidelity,
            "final_fidelity": traj.final_fidelity(),
            "cumulative_success": traj.cumulative_success,
            "attempts": traj.attempts,
            "outcome": outcome,
        }),
    );

    let mut t = Table::new(vec!["step", "phi", "theta", "p_down", "fidelity", "cumulative_success"]);
    for r in &traj.records {
        t.push(vec![r.step.into(), r.phi.into(), r.theta.into(), r.p_down.into(), r.fidelity.into(), r.cumulative_success.into()]);
    }
    let mut fin = Table::new(vec!["n", "p_initial", "p_final"]);
    for (n, p_final) in traj.final_state.populations().into_iter().enumerate() {
        fin.push(vec![n.into(), p.weight(n).into(), p_final.into()]);
    }
    output.artifacts.push(Artifact::table("trajectory", "per-step projection record", &t, config.format())?);
    output.artifacts.push(Artifact::table("final_distribution", "number statistics before and after", &fin, config.format())?);
    Ok(RunStatus::Ok)
}

/// Builds every section that is present without running anything heavy.
fn validate_sections(config: &ExperimentConfig, coupling: Option<&CouplingSummary>) -> anyhow::Result<RunStatus> {
    if config.distribution.is_some() {
        config.distribution()?;
    }
    if config.discriminate.is_some() {
        discrimination_phis(config, coupling)?;
        discrimination_inputs(config)?;
    }
    if let Some(r) = &config.recover {
        if r.grid == GridKind::Limited {
            let phi_max = r.phi_max.context("limited grid needs phi_max")?;
            PhiGrid::<f64>::limited(phi_max, r.samples.unwrap_or(1))?;
        }
        config.distribution()?;
    }
    if let Some(pc) = &config.project {
        let n_max = config.distribution()?.n_max();
        ensure!(pc.target <= n_max, "target {} exceeds n_max = {n_max}", pc.target);
        if pc.schedule == ScheduleKind::Uniform {
            uniform_schedule(pc.phi.context("uniform schedule needs phi")?, pc.target, pc.steps.context("uniform schedule needs steps")?)?;
        }
    }
    Ok(RunStatus::Ok)
}
