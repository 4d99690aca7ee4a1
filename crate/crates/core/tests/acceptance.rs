//! Acceptance suite. Every test prints exactly one `PASS` or `FAIL` line for
//! its criterion and then asserts it.
//!
//! ```text
//! cargo test -p nemelec --test acceptance -- --nocapture
//! ```
//!
//! The long simulations are shared between criteria through `OnceLock`, so
//! each one runs once per invocation regardless of how many tests read it.

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nemelec::diagnostics::weak::{TestBank, TimeProfile, WeakFormAccumulator, WeakResiduals};
use nemelec::diagnostics::DiagnosticsRow;
use nemelec::director::{potential_gradient, potential_value, SingularPotential, MINIMIZER_NORM_SQ};
use nemelec::driver::{SimConfig, Simulation};
use nemelec::electrostatics::{apply_operator, solve_potential, PoissonSettings};
use nemelec::fields::{gradient, integrate_points, l2_norm, l2_norm_vector, Grid, ScalarField, VectorField};
use nemelec::flow::{
    dissipation_density_point, sample_dissipation_inputs, step_flow, validate_leslie, LeslieCoefficients,
};
use nemelec::model::{ModelParams, State, Tolerances};
use nemelec::point::{mat_vec, norm_sq};

const REFERENCE_ALPHA: [f64; 6] = [0.0, 0.0, 1.0, 3.0, 0.0, 0.5];
const C_BAR: f64 = 2.0;
const LAMBDA: f64 = 1e-3;

fn verdict(criterion: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {criterion:>2} ({title}): {detail}");
    assert!(pass, "criterion {criterion} ({title}) failed: {detail}");
}

/// Rows, optional weak residuals and wall time of one simulation.
struct Record {
    config: SimConfig,
    rows: Vec<DiagnosticsRow>,
    weak: Option<WeakResiduals>,
    halvings: usize,
    elapsed: Duration,
    /// `None` when the run reached its end time.
    error: Option<String>,
}

impl Record {
    fn completed(&self) -> bool {
        self.error.is_none()
    }

    fn status(&self) -> String {
        match &self.error {
            None => format!("{} steps, {} dt halvings, {:.1?}", self.rows.len() - 1, self.halvings, self.elapsed),
            Some(e) => format!("aborted after {} steps: {e}", self.rows.len() - 1),
        }
    }

    fn max_of(&self, f: impl Fn(&DiagnosticsRow) -> f64) -> f64 {
        self.rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn simulate(config: SimConfig, weak: bool) -> Record {
    let start = Instant::now();
    let mut sim = Simulation::new(config.clone()).expect("acceptance configurations are valid");
    let mut acc = weak.then(|| WeakFormAccumulator::new(sim.state().grid(), &TestBank::standard(), sim.params()));
    let mut rows = vec![*sim.diagnostics()];
    if let Some(acc) = acc.as_mut() {
        acc.push(sim.state());
    }
    let mut error = None;
    while !sim.is_finished() {
        match sim.advance() {
            Ok(row) => rows.push(*row),
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
        if let Some(acc) = acc.as_mut() {
            acc.push(sim.state());
        }
    }
    Record {
        config,
        rows,
        weak: acc.map(|a| a.finish().expect("trajectory has many states")),
        halvings: sim.dt_history().len(),
        elapsed: start.elapsed(),
        error,
    }
}

/// 2D, N = 64, dt = 1e-3, 2000 steps, ε = 0.1, λ = 1e-3, charged blob.
fn reference_config() -> SimConfig {
    let c = SimConfig::default();
    assert_eq!((c.dim, c.n, c.dt, c.t_end, c.epsilon, c.lambda), (2, 64, 1e-3, 2.0, 0.1, LAMBDA));
    assert_eq!((c.alpha, c.c_bar, c.preset.as_str()), (REFERENCE_ALPHA, C_BAR, "charged-blob"));
    c
}

fn reference() -> &'static Record {
    static RUN: OnceLock<Record> = OnceLock::new();
    RUN.get_or_init(|| simulate(reference_config(), true))
}

fn reference_half_dt() -> &'static Record {
    static RUN: OnceLock<Record> = OnceLock::new();
    RUN.get_or_init(|| simulate(SimConfig { dt: 5e-4, ..reference_config() }, false))
}

fn reference_refined() -> &'static Record {
    static RUN: OnceLock<Record> = OnceLock::new();
    RUN.get_or_init(|| simulate(SimConfig { n: 128, dt: 5e-4, ..reference_config() }, true))
}

fn strong_anisotropy() -> &'static Record {
    static RUN: OnceLock<Record> = OnceLock::new();
    RUN.get_or_init(|| simulate(SimConfig { epsilon: 0.5, ..reference_config() }, false))
}

fn weak_anisotropy() -> &'static Record {
    static RUN: OnceLock<Record> = OnceLock::new();
    RUN.get_or_init(|| {
        simulate(
            SimConfig {
                epsilon: 0.02,
                h2_monitor_mode: true,
                ..reference_config()
            },
            false,
        )
    })
}

fn max_budget_residual(r: &Record) -> f64 {
    r.rows[1..].iter().map(|row| row.energy.budget_residual.abs()).fold(0.0, f64::max)
}

#[test]
fn criterion_01_energy_law() {
    let (coarse, fine) = (reference(), reference_half_dt());
    let dt = coarse.config.dt;
    let (rc, rf) = (max_budget_residual(coarse), max_budget_residual(fine));
    let ratio = rc / rf;
    // The smallest C with |residual| <= C dt² on both runs.
    let c = (rc / (dt * dt)).max(rf / (0.25 * dt * dt));
    let slack = 10.0 * c * dt * dt;
    let worst_rise = coarse
        .rows
        .windows(2)
        .map(|w| w[1].energy.total - w[0].energy.total)
        .fold(f64::NEG_INFINITY, f64::max);
    let runtime = coarse.elapsed + fine.elapsed;
    let pass = coarse.completed()
        && fine.completed()
        && coarse.halvings == 0
        && fine.halvings == 0
        && ratio >= 3.0
        && worst_rise <= slack
        && runtime <= Duration::from_secs(300);
    verdict(
        1,
        "energy law",
        pass,
        format!(
            "max residual {rc:.3e} at dt, {rf:.3e} at dt/2, ratio {ratio:.2} (need >= 3), C = {c:.3e}; \
             largest step change of E {worst_rise:.3e} vs 10 C dt^2 = {slack:.3e}; runtime {runtime:.1?} (limit 5 min); \
             runs: [{}] [{}]",
            coarse.status(),
            fine.status()
        ),
    );
}

#[test]
fn criterion_02_dissipation_certificate() {
    let start = Instant::now();
    let verdict_ref = validate_leslie(REFERENCE_ALPHA);
    let cert = verdict_ref.delta_prime;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    let samples = 1_000_000;
    for i in 0..samples {
        let dim = if i % 2 == 0 { 2 } else { 3 };
        let (n, ndot, d) = sample_dissipation_inputs(&mut rng, dim);
        let dn = mat_vec(&d, &n);
        let q = dissipation_density_point(&n, &ndot, &d, &REFERENCE_ALPHA);
        worst = worst.min(q - cert * (norm_sq(&dn) + norm_sq(&ndot)));
    }
    let admissible = validate_leslie([0.0, 0.0, 1.0, 3.0, 0.0, 0.0]);
    let inadmissible = validate_leslie([1.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    let no_viscosity = validate_leslie([0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let elapsed = start.elapsed();
    let pass = verdict_ref.admissible
        && cert > 0.0
        && worst >= -1e-12
        && admissible.admissible
        && !inadmissible.admissible
        && !no_viscosity.admissible
        && elapsed <= Duration::from_secs(30);
    verdict(
        2,
        "dissipation certificate",
        pass,
        format!(
            "delta' = {cert:.4e}; min of Q - delta'(|Dn|^2 + |ndot|^2) over {samples} samples = {worst:.3e} (need >= -1e-12); \
             (0,0,1,3,0,0) admissible = {}, (1,0,1,1,0,0) admissible = {}, alpha4 = 0 admissible = {}; {elapsed:.1?} (limit 30 s)",
            admissible.admissible, inadmissible.admissible, no_viscosity.admissible
        ),
    );
}

#[test]
fn criterion_03_maximum_principle() {
    let r = reference();
    let lo = r.rows.iter().map(|x| x.monitor.min_cp.min(x.monitor.min_cm)).fold(f64::INFINITY, f64::min);
    let hi = r.max_of(|x| x.monitor.max_cp.max(x.monitor.max_cm));
    let bound = C_BAR * (1.0 + 1e-6);
    let pass = r.completed() && lo >= -1e-8 && hi <= bound;
    verdict(
        3,
        "maximum principle",
        pass,
        format!("min c = {lo:.6e} (need >= -1e-8), max c = {hi:.6e} (need <= {bound}); {}", r.status()),
    );
}

#[test]
fn criterion_04_charge_conservation() {
    let r = reference();
    let first = r.rows[0].monitor;
    let drift = |f: fn(&DiagnosticsRow) -> f64, m0: f64| r.max_of(|x| (f(x) - m0).abs() / m0);
    let dp = drift(|x| x.monitor.mass_p, first.mass_p);
    let dm = drift(|x| x.monitor.mass_m, first.mass_m);
    let pass = r.completed() && dp <= 1e-12 && dm <= 1e-12;
    verdict(
        4,
        "charge conservation",
        pass,
        format!("relative drift of mass_p {dp:.3e}, mass_m {dm:.3e} (need <= 1e-12); {}", r.status()),
    );
}

#[test]
fn criterion_05_barrier_confinement() {
    let bound = 1.0 + 10.0 * LAMBDA;
    let (r, s) = (reference(), strong_anisotropy());
    let sup_r = r.max_of(|x| x.monitor.sup_n);
    let sup_s = s.max_of(|x| x.monitor.sup_n);
    let pass = r.completed() && s.completed() && sup_r <= bound && sup_s <= bound;
    verdict(
        5,
        "barrier confinement",
        pass,
        format!(
            "sup|n| = {sup_r:.6} (reference), {sup_s:.6} (epsilon = 0.5), bound {bound}; [{}] [{}]",
            r.status(),
            s.status()
        ),
    );
}

fn unit_director(grid: &Grid) -> VectorField {
    VectorField::from_fn(grid, |x| {
        let theta = x[0].sin() + (2.0 * x[1]).cos();
        [theta.cos(), theta.sin(), 0.0]
    })
}

#[test]
fn criterion_06_electrostatics() {
    let settings = PoissonSettings {
        tol: 1e-10,
        max_iter: 500,
    };
    let grid = Grid::new(2, 64).unwrap();

    let c_p = ScalarField::from_fn(&grid, |x| 1.0 + x[0].cos());
    let c_m = ScalarField::constant(&grid, 1.0);
    let (phi, _) = solve_potential(&VectorField::zeros(&grid), &c_p, &c_m, 0.0, settings).unwrap();
    let iso_err = phi
        .values()
        .iter()
        .enumerate()
        .map(|(i, p)| (p - grid.coords(i)[0].cos()).abs())
        .fold(0.0, f64::max);

    let eps = 0.3;
    let blob = nemelec::driver::init_state(&SimConfig { epsilon: eps, ..reference_config() }).unwrap();
    let n = unit_director(&grid);
    let (phi, report) = solve_potential(&n, &blob.c_p, &blob.c_m, eps, settings).unwrap();
    let rho = blob.c_p.zip_map(&blob.c_m, |a, b| a - b);
    let mean_rho = rho.mean();
    let mut residual = apply_operator(&phi, &n, eps);
    residual.add_scaled(-1.0, &rho.map(|r| r - mean_rho));
    let pcg_residual = l2_norm(&residual);

    let lhs = integrate_points(&grid, |i| rho.values()[i] * phi.values()[i]);
    let grad = gradient(&phi);
    let rhs = integrate_points(&grid, |i| {
        let (g, m) = (grad.at(i), n.at(i));
        let mut s = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let k = if a == b { 1.0 } else { 0.0 } + eps * m[a] * m[b];
                s += k * g[a] * g[b];
            }
        }
        s
    });
    let identity_gap = (lhs - rhs).abs();

    let pass = iso_err <= 1e-12 && pcg_residual <= 1e-10 && report.iterations <= 50 && identity_gap <= 1e-9;
    verdict(
        6,
        "electrostatics exactness",
        pass,
        format!(
            "isotropic error {iso_err:.2e} (need <= 1e-12); anisotropic residual {pcg_residual:.2e} in {} iterations \
             (need <= 1e-10 in <= 50); test-by-potential gap {identity_gap:.2e} (need <= 1e-9)",
            report.iterations
        ),
    );
}

#[test]
fn criterion_07_taylor_green_reduction() {
    let grid = Grid::new(2, 64).unwrap();
    let alpha = [0.0, 0.0, 0.0, 3.0, 0.0, 0.0];
    let params = ModelParams {
        epsilon: 0.0,
        potential: SingularPotential::new(LAMBDA).unwrap(),
        c_bar: C_BAR,
        leslie: LeslieCoefficients::new(alpha).unwrap(),
        tol: Tolerances::default(),
    };
    let r0 = MINIMIZER_NORM_SQ.sqrt();
    let mut state = State {
        time: 0.0,
        c_p: ScalarField::constant(&grid, 1.0),
        c_m: ScalarField::constant(&grid, 1.0),
        phi: ScalarField::zeros(&grid),
        v: VectorField::from_fn(&grid, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]),
        n: VectorField::from_fn(&grid, |_| [r0, 0.0, 0.0]),
    };
    let kinetic = |v: &VectorField| 0.5 * l2_norm_vector(v).powi(2);
    let e0 = kinetic(&state.v);
    // |k|² = 2 and viscosity α₄/2, so E(t) = E(0) exp(−2 (α₄/2) 2 t).
    let rate = 2.0 * (alpha[3] / 2.0) * 2.0;
    let dt = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        state.v = step_flow(&state, &params, dt).unwrap();
        state.time += dt;
        let exact = e0 * (-rate * state.time).exp();
        worst = worst.max((kinetic(&state.v) - exact).abs() / exact);
    }
    verdict(
        7,
        "Taylor-Green reduction",
        worst <= 0.01 && (e0 - PI * PI).abs() < 1e-12,
        format!("max relative deviation of kinetic energy from E(0) exp(-{rate} t) over 100 steps: {worst:.3e} (need <= 1e-2)"),
    );
}

#[test]
fn criterion_08_gradient_and_monotonicity() {
    let potential = SingularPotential::new(LAMBDA).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = Grid::new(2, 32).unwrap();
    let max_radius = 1.0 + 10.0 * LAMBDA;
    let points: Vec<[f64; 3]> = (0..grid.len())
        .map(|_| {
            let radius = rng.gen_range(0.0..max_radius);
            let angle: f64 = rng.gen_range(0.0..TAU);
            [radius * angle.cos(), radius * angle.sin(), 0.0]
        })
        .collect();
    let n = VectorField::from_points(&grid, |i| points[i]);
    let grad = potential_gradient(&n, &potential);
    let h = 1e-7;
    let mut worst_gradient = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for a in 0..2 {
            let (mut up, mut down) = (*p, *p);
            up[a] += h;
            down[a] -= h;
            let fd = (potential_value(&up, &potential) - potential_value(&down, &potential)) / (2.0 * h);
            worst_gradient = worst_gradient.max((fd - grad.at(i)[a]).abs());
        }
    }
    let pairs = 100_000;
    let mut violations = 0usize;
    for _ in 0..pairs {
        let a = rng.gen_range(-0.5..max_radius * max_radius + 0.2);
        let b = rng.gen_range(-0.5..max_radius * max_radius + 0.2);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if potential.df(lo) > potential.df(hi) {
            violations += 1;
        }
    }
    verdict(
        8,
        "gradient and monotonicity",
        worst_gradient <= 1e-6 && violations == 0,
        format!(
            "max central-difference gap {worst_gradient:.2e} at {} points (need <= 1e-6); {violations} monotonicity violations in {pairs} pairs",
            points.len()
        ),
    );
}

/// Bound on a potential-equation weak residual implied by solving each
/// recorded state to `tol` in L²: `|R| ≤ tol ‖ψ‖ ∫|τ|`.
fn potential_floor(tol: f64, t_end: f64) -> f64 {
    let psi_l2 = (TAU * TAU / 2.0).sqrt();
    let tau_max = TimeProfile::ALL
        .iter()
        .map(|p| (0..=1000).map(|i| p.value(t_end * i as f64 / 1000.0).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    tol * psi_l2 * tau_max * t_end
}

#[test]
fn criterion_09_weak_residual_refinement() {
    let (coarse, fine) = (reference(), reference_refined());
    let (wc, wf) = (coarse.weak.as_ref().unwrap(), fine.weak.as_ref().unwrap());
    let floor = potential_floor(coarse.config.poisson_tol, coarse.config.t_end);
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for ((name, rc), (_, rf)) in wc.equations().iter().zip(wf.equations()) {
        let mut min_ratio = f64::INFINITY;
        for (i, (a, b)) in rc.iter().zip(rf.iter()).enumerate() {
            let decreased = b.abs() < a.abs();
            let at_floor = *name == "potential" && a.abs() <= floor && b.abs() <= floor;
            if !(decreased || at_floor) {
                failures.push(format!("{name}[{i}]: {a:.3e} -> {b:.3e}"));
            }
            min_ratio = min_ratio.min(a.abs() / b.abs());
        }
        let largest = rf.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        summary.push(format!("{name} min ratio {min_ratio:.2}, max fine {largest:.2e}"));
    }
    let pass = coarse.completed() && fine.completed() && failures.is_empty();
    verdict(
        9,
        "weak residual refinement",
        pass,
        format!(
            "(64, 1e-3) -> (128, 5e-4): {}; potential solver floor {floor:.2e}; not decreasing: {:?}; [{}] [{}]",
            summary.join("; "),
            failures,
            coarse.status(),
            fine.status()
        ),
    );
}

#[test]
fn criterion_10_boundedness_monitors() {
    let (r, w) = (reference(), weak_anisotropy());
    let growth = |rec: &Record, f: fn(&DiagnosticsRow) -> f64| rec.max_of(f) / f(&rec.rows[0]);
    let g_phi = growth(r, |x| x.monitor.phi_inf);
    let g_grad = growth(r, |x| x.monitor.grad_phi_p);
    let g_lap = growth(w, |x| x.monitor.lap_n_2);
    assert_eq!(r.config.grad_phi_p, 4.0);
    let pass = r.completed() && w.completed() && g_phi < 100.0 && g_grad < 100.0 && g_lap < 100.0;
    verdict(
        10,
        "boundedness monitors",
        pass,
        format!(
            "max/initial: |phi|_inf {g_phi:.3}, |grad phi|_4 {g_grad:.3} (reference), |lap n|_2 {g_lap:.3} (epsilon = 0.02); \
             need < 100; [{}] [{}]",
            r.status(),
            w.status()
        ),
    );
}
