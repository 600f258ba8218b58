use std::fmt;
use std::sync::Arc;

use holonomy::adiabatic::{adiabaticity_report, convergence_study, AdiabaticScenario};
use holonomy::curve::{Curve, OperatorFamily, OperatorFn, TransportOptions};
use holonomy::exec::{self, Execution};
use holonomy::linalg::{default_degeneracy_tol, eig_hermitian, max_abs, C64};
use holonomy::propagate::Method;
use holonomy::quadrupole::{self, PrecessionScenario};
use holonomy::study::{
    closed_form_holonomy, gauge_trials, precession_adiabatic, quadrupole_profiles, ConnectionModel, LevelProfile, LevelRun,
};
use holonomy::Error;
use log::{info, warn};
use serde_json::{json, Value};

use crate::config::{ConfigError, Quadrupole, ScenarioConfig, System};
use crate::custom;
use crate::report::{self, num, opt, IoFailure};

pub const GAUGE_TOL: f64 = 1e-9;
pub const ODE_TOL: f64 = 1e-8;
pub const OVERLAP_TOL: f64 = 1e-10;
pub const PRINTED_FORM_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const COEFF_TOL: f64 = 1e-12;
pub const ROTATING_TOL: f64 = 1e-10;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Tolerance(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Tolerance(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance breach: {m}"),
            CliError::Io(m) => write!(f, "output failure: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<IoFailure> for CliError {
    fn from(e: IoFailure) -> Self {
        CliError::Io(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::AxisSingularity(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, CliError>;

pub struct Context {
    pub cfg: ScenarioConfig,
    pub json: bool,
}

impl Context {
    fn exec(&self) -> Execution {
        Execution::from_workers(self.cfg.workers)
    }

    /// Prints a closing diagnostic on stderr, as JSON under `--json`.
    fn finish(&self, command: &str, summary: Value, elapsed: f64) {
        if self.json {
            eprintln!("{}", json!({ "command": command, "wall_time_s": elapsed, "summary": summary }));
        } else {
            eprintln!("{command}: done in {elapsed:.3} s");
        }
    }

    fn select<T>(&self, items: Vec<T>, level: impl Fn(&T) -> usize) -> Outcome<Vec<T>> {
        let Some(wanted) = &self.cfg.levels else { return Ok(items) };
        let count = items.len();
        if let Some(bad) = wanted.iter().find(|&&n| n >= count) {
            return Err(CliError::Config(format!("level {} requested but the spectrum has {count} levels", bad + 1)));
        }
        Ok(items.into_iter().filter(|x| wanted.contains(&level(x))).collect())
    }
}

enum Model {
    Quadrupole(Quadrupole, PrecessionScenario),
    Custom(OperatorFamily, Curve),
}

impl Model {
    fn load(cfg: &ScenarioConfig) -> Outcome<Self> {
        match &cfg.system {
            System::Quadrupole(q) => Ok(Model::Quadrupole(*q, q.scenario()?)),
            System::Custom(c) => {
                let (family, curve) = custom::load(c)?;
                Ok(Model::Custom(family, curve))
            }
        }
    }

    fn level_count(family: &OperatorFamily, curve: &Curve, tol: Option<f64>) -> Outcome<usize> {
        let h = family.eval(&curve.points()[0])?;
        Ok(eig_hermitian(&h, tol.unwrap_or_else(|| default_degeneracy_tol(&h)))?.len())
    }

    fn runs(family: &OperatorFamily, curve: &Curve, h: &OperatorFn, cfg: &ScenarioConfig, exec: Execution) -> Outcome<Vec<LevelRun>> {
        let opts = TransportOptions { degeneracy_tol: cfg.degeneracy_tol, execution: exec, ..Default::default() };
        (0..Self::level_count(family, curve, cfg.degeneracy_tol)?)
            .map(|n| LevelRun::new(family, curve, h, n, cfg.method, &opts).map_err(CliError::from))
            .collect()
    }

    fn profiles(&self, cfg: &ScenarioConfig, exec: Execution) -> Outcome<Vec<LevelProfile>> {
        match self {
            Model::Quadrupole(_, s) => Ok(quadrupole_profiles(s, cfg.grid, cfg.connection, cfg.method, exec)?),
            Model::Custom(family, curve) => Self::runs(family, curve, &family.along(curve), cfg, exec)?
                .into_iter()
                .enumerate()
                .map(|(level, run)| {
                    Ok(LevelProfile { level, multiplicity: run.frames.multiplicity(), samples: run.profile()?, report: run.report()? })
                })
                .collect(),
        }
    }

    fn adiabatic(&self, cfg: &ScenarioConfig) -> Outcome<Option<AdiabaticScenario>> {
        let mut scenario = match self {
            Model::Quadrupole(_, s) if s.duration() == 0.0 => return Ok(None),
            Model::Quadrupole(_, s) => precession_adiabatic(s, cfg.grid)?,
            Model::Custom(family, curve) => {
                let (t0, t1) = (curve.start(), curve.end());
                let c = curve.clone();
                let path = Arc::new(move |s: f64| c.point_at(t0 + s * (t1 - t0)));
                AdiabaticScenario::new(family.clone(), path, t1 - t0, cfg.grid)?
            }
        };
        scenario.degeneracy_tol = cfg.degeneracy_tol;
        Ok(Some(scenario))
    }
}

fn quadrupole_echo(q: &Quadrupole, s: &PrecessionScenario) -> Vec<(&'static str, f64)> {
    vec![
        ("lambda", q.lambda),
        ("rho", q.rho),
        ("theta", q.theta),
        ("phi0", q.phi0),
        ("omega", q.omega),
        ("phi_final", q.phi_final),
        ("duration", s.duration()),
    ]
}

/// One row of scenario parameters and terminal per-level results, shared by
/// `phase` and `sweep`.
fn summary_row(model: &Model, profiles: &[LevelProfile]) -> Outcome<(Vec<String>, Vec<String>)> {
    let mut header = Vec::new();
    let mut row = Vec::new();
    match model {
        Model::Quadrupole(q, s) => {
            for (k, v) in quadrupole_echo(q, s) {
                header.push(k.to_string());
                row.push(num(v));
            }
        }
        Model::Custom(_, curve) => {
            header.extend(["t_start".to_string(), "t_end".to_string()]);
            row.extend([num(curve.start()), num(curve.end())]);
        }
    }
    for p in profiles {
        let n = p.level + 1;
        let r = &p.report;
        let defect = p.samples.iter().map(|s| s.unitarity_defect).fold(0.0, f64::max);
        for (k, v) in [
            ("re_pi", num(r.trace.re)),
            ("im_pi", num(r.trace.im)),
            ("abs_pi", num(r.trace.norm())),
            ("phase", opt(r.abelian.map(|a| a.total))),
            ("visibility", num(p.samples.last().map(|s| s.visibility).unwrap_or(f64::NAN))),
            ("unitarity_defect", num(defect)),
        ] {
            header.push(format!("{k}_{n}"));
            row.push(v);
        }
    }
    if let Model::Quadrupole(q, _) = model {
        let closed = quadrupole::pi2_closed(q.theta, q.phi0, q.phi_final)?;
        let frame = quadrupole::pi2_frame(q.theta, q.phi0, q.phi_final)?;
        header.extend(["re_pi2_closed", "im_pi2_closed", "re_pi2_frame", "im_pi2_frame"].map(String::from));
        row.extend([num(closed.re), num(closed.im), num(frame.re), num(frame.im)]);
    }
    Ok((header, row))
}

fn gap(a: C64, b: C64) -> f64 {
    (a - b).norm()
}

pub fn phase(ctx: &Context) -> Outcome<()> {
    let start = std::time::Instant::now();
    let cfg = &ctx.cfg;
    let model = Model::load(cfg)?;
    let profiles = ctx.select(model.profiles(cfg, ctx.exec())?, |p| p.level)?;

    let header = ["level", "t", "phi", "re_pi", "im_pi", "abs_pi", "phase", "visibility", "unitarity_defect"]
        .map(String::from)
        .to_vec();
    let mut rows = Vec::new();
    for p in &profiles {
        for s in &p.samples {
            let phi = match &model {
                Model::Quadrupole(_, sc) => num(sc.azimuth(s.t)),
                Model::Custom(..) => String::new(),
            };
            rows.push(vec![
                (p.level + 1).to_string(),
                num(s.t),
                phi,
                num(s.trace.re),
                num(s.trace.im),
                num(s.trace.norm()),
                opt(s.abelian.map(|a| a.total)),
                num(s.visibility),
                num(s.unitarity_defect),
            ]);
        }
    }
    let csv_path = report::write_csv(&cfg.out, "phase.csv", &header, &rows)?;
    let (sh, sr) = summary_row(&model, &profiles)?;
    report::write_csv(&cfg.out, "summary.csv", &sh, &[sr])?;

    let adiabaticity = match model.adiabatic(cfg)? {
        Some(sc) => {
            let r = adiabaticity_report(&sc)?;
            if r.max_ratio >= cfg.warning {
                warn!("adiabaticity ratio {:.3e} exceeds the warning level {}", r.max_ratio, cfg.warning);
            }
            Some(r.max_ratio)
        }
        None => None,
    };
    let max_defect = profiles.iter().flat_map(|p| p.samples.iter().map(|s| s.unitarity_defect)).fold(0.0, f64::max);
    let mut diagnostics = json!({
        "max_unitarity_defect": max_defect,
        "adiabaticity_ratio": adiabaticity,
        "adiabaticity_warning": cfg.warning,
    });
    let mut scenario = json!({ "method": cfg.method.name(), "grid": cfg.grid });
    match &model {
        Model::Quadrupole(q, s) => {
            scenario["system"] = json!("quadrupole");
            scenario["connection"] = json!(cfg.connection.name());
            for (k, v) in quadrupole_echo(q, s) {
                scenario[k] = json!(v);
            }
            let closed = quadrupole::pi2_closed(q.theta, q.phi0, q.phi_final)?;
            let frame = quadrupole::pi2_frame(q.theta, q.phi0, q.phi_final)?;
            let k = quadrupole::connection_coeffs(q.theta)?;
            let cyclic = C64::from_polar(-2.0, std::f64::consts::PI * (k.mu + k.sigma)) * (std::f64::consts::PI * k.delta).cos();
            let mut oracle = json!({
                "pi2_closed": report::complex_json(closed),
                "pi2_frame": report::complex_json(frame),
                "pi2_cyclic_closed": report::complex_json(cyclic),
            });
            if let Some(p) = profiles.iter().find(|p| p.level == 1) {
                oracle["pi2_closed_gap"] = json!(gap(p.report.trace, closed));
                oracle["pi2_frame_gap"] = json!(gap(p.report.trace, frame));
                if s.is_cyclic() {
                    oracle["pi2_cyclic_gap"] = json!(gap(p.report.trace, cyclic));
                }
            }
            diagnostics["oracle"] = oracle;
        }
        Model::Custom(family, curve) => {
            scenario["system"] = json!("custom-family");
            scenario["dimension"] = json!(family.dim());
            scenario["samples"] = json!(curve.len());
            scenario["cyclic"] = json!(curve.is_cyclic());
        }
    }
    let summary = json!({
        "scenario": scenario,
        "levels": profiles.iter().map(|p| report::level_json(&p.report)).collect::<Vec<_>>(),
        "diagnostics": diagnostics,
    });
    report::write_json(&cfg.out, "summary.json", &summary)?;
    info!("wrote {}", csv_path.display());
    ctx.finish("phase", summary, start.elapsed().as_secs_f64());
    Ok(())
}

pub fn sweep(ctx: &Context) -> Outcome<()> {
    let start = std::time::Instant::now();
    let cfg = &ctx.cfg;
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs sweep_parameter and sweep_start".into()))?;
    let System::Quadrupole(base) = &cfg.system else {
        return Err(CliError::Config("sweeps are defined for the quadrupole system".into()));
    };
    let points = sweep
        .values()
        .iter()
        .map(|&v| base.with(sweep.parameter, v).map_err(CliError::from))
        .collect::<Outcome<Vec<Quadrupole>>>()?;
    let rows = exec::try_map(ctx.exec(), &points, |q| -> Outcome<(Vec<String>, Vec<String>)> {
        let model = Model::Quadrupole(*q, q.scenario()?);
        let profiles = ctx.select(model.profiles(cfg, Execution::Sequential)?, |p| p.level)?;
        summary_row(&model, &profiles)
    })?;
    let header = rows[0].0.clone();
    let body: Vec<Vec<String>> = rows.into_iter().map(|(_, r)| r).collect();
    report::write_csv(&cfg.out, "sweep.csv", &header, &body)?;
    ctx.finish(
        "sweep",
        json!({ "parameter": sweep.parameter.name(), "points": body.len() }),
        start.elapsed().as_secs_f64(),
    );
    Ok(())
}

pub fn adiabatic(ctx: &Context) -> Outcome<()> {
    let start = std::time::Instant::now();
    let cfg = &ctx.cfg;
    let model = Model::load(cfg)?;
    let scenario = model.adiabatic(cfg)?.ok_or_else(|| CliError::Config("the scenario has zero duration".into()))?;
    let taus = cfg.taus.clone().unwrap_or_else(|| (0..5).map(|k| scenario.tau * f64::from(1u32 << k)).collect());
    let study = convergence_study(&scenario, &taus, cfg.method, ctx.exec())?;
    let header = ["tau", "steps", "defect", "adiabaticity_ratio", "adiabatic"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = study
        .iter()
        .map(|p| vec![num(p.tau), p.steps.to_string(), num(p.defect), num(p.ratio), (p.ratio < cfg.warning).to_string()])
        .collect();
    for p in study.iter().filter(|p| p.ratio >= cfg.warning) {
        warn!("τ = {}: adiabaticity ratio {:.3e} exceeds {}", p.tau, p.ratio, cfg.warning);
    }
    report::write_csv(&cfg.out, "adiabatic.csv", &header, &rows)?;
    let summary = json!({
        "taus": study.iter().map(|p| p.tau).collect::<Vec<_>>(),
        "defects": study.iter().map(|p| p.defect).collect::<Vec<_>>(),
        "ratios": study.iter().map(|p| p.ratio).collect::<Vec<_>>(),
    });
    ctx.finish("adiabatic", summary, start.elapsed().as_secs_f64());
    Ok(())
}

pub fn gauge_test(ctx: &Context) -> Outcome<()> {
    let start = std::time::Instant::now();
    let cfg = &ctx.cfg;
    let model = Model::load(cfg)?;
    let (family, curve, h) = match &model {
        Model::Quadrupole(_, s) => {
            if s.duration() == 0.0 {
                return Err(CliError::Config("the scenario has zero duration".into()));
            }
            if cfg.connection == ConnectionModel::ClosedForm {
                info!("gauge-test transforms transported frames; the closed-form model is not used");
            }
            (s.family(), s.curve(cfg.grid)?, s.hamiltonian_fn())
        }
        Model::Custom(family, curve) => (family.clone(), curve.clone(), family.along(curve)),
    };
    let runs = ctx.select(Model::runs(&family, &curve, &h, cfg, ctx.exec())?, |r| r.frames.level())?;
    let mut rows = Vec::new();
    let mut worst = (0.0_f64, 0.0_f64);
    let mut breaches = 0usize;
    for run in &runs {
        let trials = gauge_trials(run, &h, cfg.seed, cfg.gauge_count, cfg.method, ctx.exec())?;
        for t in trials {
            worst = (worst.0.max(t.pi_gap), worst.1.max(t.covariance_gap));
            let ok = t.pi_gap <= GAUGE_TOL && t.covariance_gap <= GAUGE_TOL;
            breaches += usize::from(!ok);
            rows.push(vec![
                (run.frames.level() + 1).to_string(),
                t.trial.to_string(),
                num(t.pi_gap),
                num(t.covariance_gap),
                ok.to_string(),
            ]);
        }
    }
    let header = ["level", "trial", "pi_gap", "covariance_gap", "pass"].map(String::from).to_vec();
    report::write_csv(&cfg.out, "gauge.csv", &header, &rows)?;
    let summary = json!({
        "trials": rows.len(),
        "max_pi_gap": worst.0,
        "max_covariance_gap": worst.1,
        "tolerance": GAUGE_TOL,
        "breaches": breaches,
    });
    eprintln!("gauge-test: {} trials, max |ΔΠ| = {:.3e}, max covariance gap = {:.3e}", rows.len(), worst.0, worst.1);
    ctx.finish("gauge-test", summary, start.elapsed().as_secs_f64());
    if breaches > 0 {
        return Err(CliError::Tolerance(format!("{breaches} gauge trials exceed {GAUGE_TOL:e}")));
    }
    Ok(())
}

struct Check {
    name: &'static str,
    deviation: f64,
    tolerance: f64,
    note: Option<String>,
}

impl Check {
    fn pass(&self) -> bool {
        self.deviation <= self.tolerance
    }
}

fn ode_check(q: &Quadrupole, grid: usize, method: Method) -> Check {
    let name = "ode_vs_closed_form";
    if q.phi_final == q.phi0 {
        return Check { name, deviation: 0.0, tolerance: ODE_TOL, note: None };
    }
    match closed_form_holonomy(q.theta, q.phi0, q.phi_final, grid, method) {
        Ok(trace) => {
            let deviation = trace
                .times
                .iter()
                .zip(&trace.matrices)
                .map(|(&phi, g)| quadrupole::gamma2_closed(q.theta, q.phi0, phi).map(|c| max_abs(&(g - c))).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            let note = (deviation > ODE_TOL).then(|| {
                let order = f64::from(method.order());
                let needed = (grid as f64 * (deviation / ODE_TOL).powf(1.0 / order)).ceil();
                format!(
                    "under-resolved: step {:.3e} rad with {method} gives error ~h^{order}; grid ≥ {needed} should reach {ODE_TOL:e}",
                    (q.phi_final - q.phi0).abs() / grid as f64
                )
            });
            Check { name, deviation, tolerance: ODE_TOL, note }
        }
        Err(e) => Check { name, deviation: f64::INFINITY, tolerance: ODE_TOL, note: Some(format!("integration failed: {e}")) },
    }
}

fn sample_angles(q: &Quadrupole, grid: usize) -> Vec<f64> {
    (0..=grid).map(|k| q.phi0 + (q.phi_final - q.phi0) * k as f64 / grid as f64).collect()
}

fn closed_form_checks(q: &Quadrupole, grid: usize) -> Outcome<Vec<Check>> {
    let zeta = 1.0 / q.theta.tan();
    let k = quadrupole::connection_coeffs(q.theta)?;
    let rot = quadrupole::rotating_frame(q.theta)?;
    let f0 = quadrupole::level2_frame(zeta, q.phi0);
    let v0 = quadrupole::level1_vector(zeta, q.phi0);
    let (mut overlap, mut printed, mut trace, mut rotating) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for phi in sample_angles(q, grid) {
        let w2 = quadrupole::w2_closed(q.theta, q.phi0, phi)?;
        let brute2 = f0.adjoint() * quadrupole::level2_frame(zeta, phi);
        let brute1 = (v0.adjoint() * quadrupole::level1_vector(zeta, phi))[(0, 0)];
        overlap = overlap.max(max_abs(&(&w2 - brute2))).max((brute1 - quadrupole::w1_closed(zeta, q.phi0, phi)).norm());
        printed = printed.max((w2[(1, 1)] - quadrupole::w22_alternate(q.theta, q.phi0, phi)?).norm());
        let g2 = quadrupole::gamma2_closed(q.theta, q.phi0, phi)?;
        trace = trace.max((quadrupole::pi2_closed(q.theta, q.phi0, phi)? - (&w2 * &g2).trace()).norm());
        rotating = rotating.max(max_abs(&(rot.reconstruct(q.phi0, phi) - g2)));
    }
    let c2 = k.c * k.c;
    let coeff = [
        (k.sigma + 0.75 * k.mu + 0.5 + (1.0 + c2 * c2) / (1.0 + c2)).abs(),
        (k.delta - k.delta_polynomial()).abs(),
        (k.mu - quadrupole::mu_zeta(zeta)).abs(),
        (k.nu - quadrupole::nu_zeta(zeta)).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let trace_note = (trace > TRACE_TOL && q.phi0 != 0.0)
        .then(|| "the printed trace formula agrees with tr(w²Γ²) only when φ₀ = 0".to_string());
    Ok(vec![
        Check { name: "w_bruteforce", deviation: overlap, tolerance: OVERLAP_TOL, note: None },
        Check { name: "w22_printed_forms", deviation: printed, tolerance: PRINTED_FORM_TOL, note: None },
        Check { name: "trace_consistency", deviation: trace, tolerance: TRACE_TOL, note: trace_note },
        Check { name: "coefficient_identity", deviation: coeff, tolerance: COEFF_TOL, note: None },
        Check { name: "rotating_frame", deviation: rotating, tolerance: ROTATING_TOL, note: None },
    ])
}

pub fn oracle_verify(ctx: &Context) -> Outcome<()> {
    let start = std::time::Instant::now();
    let cfg = &ctx.cfg;
    let System::Quadrupole(q) = &cfg.system else {
        return Err(CliError::Config("oracle-verify runs on the quadrupole system".into()));
    };
    q.scenario()?;
    let mut checks = vec![ode_check(q, cfg.grid, cfg.method)];
    checks.extend(closed_form_checks(q, cfg.grid)?);
    let mut rows = Vec::new();
    for c in &checks {
        let verdict = if c.pass() { "ok" } else { "FAIL" };
        eprintln!("{verdict:>4}  {:<22} max deviation {:.3e} (tolerance {:.0e})", c.name, c.deviation, c.tolerance);
        if let Some(n) = &c.note {
            eprintln!("      {n}");
        }
        rows.push(vec![c.name.to_string(), num(c.deviation), num(c.tolerance), c.pass().to_string(), c.note.clone().unwrap_or_default()]);
    }
    let header = ["check", "max_deviation", "tolerance", "pass", "note"].map(String::from).to_vec();
    report::write_csv(&cfg.out, "oracle.csv", &header, &rows)?;
    let failing: Vec<&str> = checks.iter().filter(|c| !c.pass()).map(|c| c.name).collect();
    let summary = json!({
        "checks": checks.iter().map(|c| json!({
            "name": c.name,
            "max_deviation": if c.deviation.is_finite() { json!(c.deviation) } else { Value::Null },
            "tolerance": c.tolerance,
            "pass": c.pass(),
        })).collect::<Vec<_>>(),
    });
    ctx.finish("oracle-verify", summary, start.elapsed().as_secs_f64());
    if !failing.is_empty() {
        return Err(CliError::Tolerance(format!("failing checks: {}", failing.join(", "))));
    }
    Ok(())
}
