//! Configuration, initial data, the outer time loop, and run artifacts.
//!
//! A step advances the species, then the director, then the flow, all with
//! the potential of the previous state held fixed, and finally re-solves the
//! potential for the new densities and director. The state therefore always
//! carries a potential consistent with its other fields.

mod checkpoint;
mod config;
mod presets;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use checkpoint::Checkpoint;
pub use config::SimConfig;
pub use presets::{init_state, verify_hypotheses, PRESETS};

use crate::diagnostics::csv::{read_table, write_header, write_row};
use crate::diagnostics::{budget_from, diagnose, DiagnosticsRow, InvariantContract};
use crate::director::step_director;
use crate::electrostatics::{solve_potential_from, PoissonSettings, PoissonSolveReport};
use crate::error::{Error, Result};
use crate::fields::snapshot::write_record;
use crate::flow::{cfl_number, step_flow, validate_leslie, LeslieVerdict};
use crate::model::{ModelParams, State};
use crate::transport::step_species;

/// A rejected step halves dt at most this many times over a whole run.
pub const MAX_HALVINGS: usize = 5;

/// Version tag of the checkpoint layout written by [`Checkpoint`].
pub const CHECKPOINT_FORMAT: u32 = 1;

/// One automatic reduction of the time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtChange {
    /// Step counter at which the rejected step was attempted.
    pub step: u64,
    pub time: f64,
    /// The new, halved time step.
    pub dt: f64,
    pub reason: String,
}

/// A run in progress.
pub struct Simulation {
    config: SimConfig,
    params: ModelParams,
    state: State,
    step: u64,
    dt: f64,
    dt_history: Vec<DtChange>,
    rng_word_pos: u128,
    row: DiagnosticsRow,
}

impl Simulation {
    /// Validates the configuration, builds and checks the initial state, and
    /// checks the configured dt against it.
    pub fn new(config: SimConfig) -> Result<Self> {
        let params = config.validate()?;
        let (state, report, rng_word_pos) = presets::init_state_with_report(&config)?;
        check_initial_dt(&state, &params, config.dt)?;
        let row = diagnose(0, &state, &params, config.grad_phi_p, &report);
        Ok(Simulation {
            dt: config.dt,
            config,
            params,
            state,
            step: 0,
            dt_history: Vec::new(),
            rng_word_pos,
            row,
        })
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        let params = ck.config.validate()?;
        // Only the energy of this row feeds later budgets; the solver report
        // of the original step is not needed for that.
        let report = PoissonSolveReport {
            iterations: 0,
            final_residual: 0.0,
            converged: true,
        };
        let row = diagnose(ck.step, &ck.state, &params, ck.config.grad_phi_p, &report);
        Ok(Simulation {
            config: ck.config,
            params,
            state: ck.state,
            step: ck.step,
            dt: ck.dt,
            dt_history: ck.dt_history,
            rng_word_pos: ck.rng_word_pos,
            row,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dt_history(&self) -> &[DtChange] {
        &self.dt_history
    }

    /// Diagnostics of the current state, including the budget of the step
    /// that produced it.
    pub fn diagnostics(&self) -> &DiagnosticsRow {
        &self.row
    }

    pub fn is_finished(&self) -> bool {
        self.state.time >= self.config.t_end - 0.5 * self.dt
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            state: self.state.clone(),
            step: self.step,
            dt: self.dt,
            dt_history: self.dt_history.clone(),
            rng_word_pos: self.rng_word_pos,
        }
    }

    /// Advances one step, halving dt on rejection while the halving budget
    /// lasts.
    pub fn advance(&mut self) -> Result<&DiagnosticsRow> {
        let (next, report) = loop {
            match self.attempt(self.dt) {
                Ok(done) => break done,
                Err(Error::StepRejected(reason)) if self.dt_history.len() < MAX_HALVINGS => {
                    self.dt *= 0.5;
                    self.dt_history.push(DtChange {
                        step: self.step,
                        time: self.state.time,
                        dt: self.dt,
                        reason: reason.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        };
        let step = self.step + 1;
        let mut row = diagnose(step, &next, &self.params, self.config.grad_phi_p, &report);
        let budget = budget_from(
            self.row.energy.total,
            row.energy.total,
            &self.state,
            &next,
            self.dt,
            &self.params,
        );
        row.energy.dissipation_rate = budget.dissipation_rate;
        row.energy.budget_residual = budget.residual;
        self.state = next;
        self.step = step;
        self.row = row;
        Ok(&self.row)
    }

    fn attempt(&self, dt: f64) -> Result<(State, PoissonSolveReport)> {
        let s = &self.state;
        let p = &self.params;
        let (c_p, c_m) = step_species(s, p, dt)?;
        let n = step_director(s, p, dt)?;
        let partial = State {
            time: s.time,
            c_p,
            c_m,
            phi: s.phi.clone(),
            v: s.v.clone(),
            n,
        };
        let v = step_flow(&partial, p, dt)?;
        let settings = PoissonSettings {
            tol: p.tol.poisson_tol,
            max_iter: p.tol.poisson_max_iter,
        };
        let (phi, report) = solve_potential_from(
            &partial.n,
            &partial.c_p,
            &partial.c_m,
            p.epsilon,
            settings,
            Some(&partial.phi),
        )?;
        Ok((
            State {
                time: s.time + dt,
                c_p: partial.c_p,
                c_m: partial.c_m,
                phi,
                v,
                n: partial.n,
            },
            report,
        ))
    }

    /// Steps to the end time, handing every new row to `on_row`.
    pub fn run_with(&mut self, mut on_row: impl FnMut(&Simulation) -> Result<()>) -> Result<()> {
        while !self.is_finished() {
            self.advance()?;
            on_row(self)?;
        }
        Ok(())
    }
}

/// The configured dt must respect the CFL limit and keep the explicit
/// barrier term stable on the initial director.
fn check_initial_dt(state: &State, params: &ModelParams, dt: f64) -> Result<()> {
    let cfl = cfl_number(&state.v, dt);
    if cfl > params.tol.cfl_limit {
        return Err(Error::InvalidConfig(format!(
            "dt = {dt} gives CFL number {cfl} above {} on the initial velocity",
            params.tol.cfl_limit
        )));
    }
    let stiffness = (0..state.grid().len())
        .map(|idx| params.potential.stiffness(&state.n.at(idx)))
        .fold(0.0, f64::max);
    if dt * stiffness > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "dt = {dt} is too large for the barrier stiffness {stiffness} of the initial director"
        )));
    }
    Ok(())
}

/// Resolved configuration and provenance of a finished or aborted run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub checkpoint_format: u32,
    pub config: SimConfig,
    pub leslie: LeslieVerdict,
    /// `λ / (2(−ln λ))`, the dt that keeps the barrier term stable for any
    /// director in the unit ball. Steps are instead checked against the
    /// stiffness of the actual director.
    pub barrier_dt_bound: f64,
    pub steps: u64,
    pub final_time: f64,
    pub final_dt: f64,
    pub dt_history: Vec<DtChange>,
    pub rng_word_pos: String,
    pub resumed_from_step: Option<u64>,
    /// `completed`, or `failed: <reason>`.
    pub status: String,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Outcome of [`run`] or [`resume`].
#[derive(Debug)]
pub struct RunSummary {
    pub final_state: State,
    /// Rows written to `diagnostics.csv` by this invocation.
    pub rows: Vec<DiagnosticsRow>,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
}

impl RunSummary {
    pub fn violations(&self) -> &[String] {
        &self.manifest.violations
    }
}

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub fn checkpoint_file_name(step: u64) -> String {
    format!("checkpoint_{step:08}.bin")
}

pub fn snapshot_file_name(step: u64) -> String {
    format!("step_{step:08}.bin")
}

/// Runs `config` to its end time, writing `diagnostics.csv`, snapshots,
/// checkpoints and `manifest.json` into `out_dir`.
pub fn run(config: &SimConfig, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    let mut sim = Simulation::new(config.clone())?;
    let mut csv = BufWriter::new(File::create(out_dir.join(DIAGNOSTICS_FILE))?);
    write_header(&mut csv)?;
    let mut tracker = Tracker::new(out_dir, None, Vec::new());
    tracker.record(&sim, &mut csv, true)?;
    finish(sim_loop(&mut sim, &mut tracker, &mut csv), sim, tracker, csv)
}

/// Continues a run from a checkpoint. Rows of an existing `diagnostics.csv`
/// up to the checkpoint step are kept and later rows are replaced, so the
/// file ends up identical to that of an uninterrupted run.
pub fn resume(checkpoint: &Path, out_dir: Option<&Path>) -> Result<RunSummary> {
    let out_dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => checkpoint.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    fs::create_dir_all(&out_dir)?;
    let ck = Checkpoint::load(checkpoint)?;
    let start = ck.step;
    let mut sim = Simulation::from_checkpoint(ck)?;
    let csv_path = out_dir.join(DIAGNOSTICS_FILE);
    let kept: Vec<DiagnosticsRow> = if csv_path.exists() {
        read_table(BufReader::new(File::open(&csv_path)?))?
            .into_iter()
            .filter(|r| r.monitor.step <= start)
            .collect()
    } else {
        Vec::new()
    };
    let mut csv = BufWriter::new(File::create(&csv_path)?);
    write_header(&mut csv)?;
    for row in &kept {
        write_row(&mut csv, row)?;
    }
    let fresh = kept.is_empty();
    let mut tracker = Tracker::new(&out_dir, Some(start), kept);
    if fresh {
        tracker.record(&sim, &mut csv, true)?;
    }
    finish(sim_loop(&mut sim, &mut tracker, &mut csv), sim, tracker, csv)
}

fn sim_loop(sim: &mut Simulation, tracker: &mut Tracker, csv: &mut impl Write) -> Result<()> {
    sim.run_with(|s| tracker.record(s, csv, false))
}

fn finish(outcome: Result<()>, sim: Simulation, tracker: Tracker, mut csv: BufWriter<File>) -> Result<RunSummary> {
    csv.flush()?;
    let status = match &outcome {
        Ok(()) => "completed".to_string(),
        Err(e) => format!("failed: {e}"),
    };
    let manifest = tracker.manifest(&sim, status);
    let file = File::create(tracker.out_dir.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest).map_err(|e| Error::Format(e.to_string()))?;
    outcome?;
    Ok(RunSummary {
        final_state: sim.state,
        rows: tracker.rows,
        manifest,
        out_dir: tracker.out_dir,
    })
}

/// Output cadence, invariant checks and monitor warnings of one invocation.
struct Tracker {
    out_dir: PathBuf,
    resumed_from: Option<u64>,
    first: Option<DiagnosticsRow>,
    rows: Vec<DiagnosticsRow>,
    violations: Vec<String>,
    warnings: Vec<String>,
}

impl Tracker {
    fn new(out_dir: &Path, resumed_from: Option<u64>, kept: Vec<DiagnosticsRow>) -> Self {
        Tracker {
            out_dir: out_dir.to_path_buf(),
            resumed_from,
            first: kept.first().copied(),
            rows: Vec::new(),
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn record(&mut self, sim: &Simulation, csv: &mut impl Write, initial: bool) -> Result<()> {
        let cfg = sim.config();
        let step = sim.step();
        let row = *sim.diagnostics();
        if initial || step.is_multiple_of(cfg.diagnostics_every) || sim.is_finished() {
            write_row(csv, &row)?;
            self.check(sim, &row);
            self.rows.push(row);
        }
        if cfg.snapshot_every > 0 && (initial || step.is_multiple_of(cfg.snapshot_every)) {
            let dir = self.out_dir.join(SNAPSHOT_DIR);
            fs::create_dir_all(&dir)?;
            let mut w = BufWriter::new(File::create(dir.join(snapshot_file_name(step)))?);
            let state = sim.state();
            for (name, field) in state.named_components() {
                write_record(&mut w, &name, state.time, field)?;
            }
            w.flush()?;
        }
        if cfg.checkpoint_every > 0 && !initial && (step.is_multiple_of(cfg.checkpoint_every) || sim.is_finished()) {
            sim.checkpoint().save(&self.out_dir.join(checkpoint_file_name(step)))?;
        }
        Ok(())
    }

    fn check(&mut self, sim: &Simulation, row: &DiagnosticsRow) {
        let first = *self.first.get_or_insert(*row);
        let cfg = sim.config();
        let contract = InvariantContract::new(cfg.c_bar, cfg.lambda, cfg.poisson_tol);
        self.violations.extend(contract.violations(&first, row));
        let mut watched = vec![
            ("phi_inf", first.monitor.phi_inf, row.monitor.phi_inf),
            ("grad_phi_p", first.monitor.grad_phi_p, row.monitor.grad_phi_p),
        ];
        if cfg.h2_monitor_mode {
            watched.push(("lap_n_2", first.monitor.lap_n_2, row.monitor.lap_n_2));
        }
        for (name, start, now) in watched {
            if now > 100.0 * start.max(1e-12) {
                self.warnings.push(format!(
                    "step {}: {name} = {now:e} exceeds 100 times its initial value {start:e}",
                    row.monitor.step
                ));
            }
        }
    }

    fn manifest(&self, sim: &Simulation, status: String) -> Manifest {
        let cfg = sim.config();
        let mut warnings = self.warnings.clone();
        if !sim.params().leslie.is_energy_identity() {
            warnings.push(
                "alpha2 != 0 or alpha3 != 1: the energy budget is not an identity and budget_residual need not vanish"
                    .to_string(),
            );
        }
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            checkpoint_format: CHECKPOINT_FORMAT,
            config: cfg.clone(),
            leslie: validate_leslie(cfg.alpha),
            barrier_dt_bound: sim.params().potential.worst_case_dt(),
            steps: sim.step(),
            final_time: sim.state().time,
            final_dt: sim.dt(),
            dt_history: sim.dt_history().to_vec(),
            rng_word_pos: sim.rng_word_pos.to_string(),
            resumed_from_step: self.resumed_from,
            status,
            violations: self.violations.clone(),
            warnings,
        }
    }
}
