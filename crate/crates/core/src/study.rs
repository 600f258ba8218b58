//! Phase profiles along a run, random-gauge trials and the quadrupole
//! drivers used by the command-line front end.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::adiabatic::{dynamical_phases, AdiabaticScenario};
use crate::curve::{
    apply_gauge, connection_matrices, transport_frame_with, ConnectionSamples, Curve, FrameField, Gauge,
    GaugeField, OperatorFamily, OperatorFn, TransportOptions,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::gauge::SmoothGauge;
use crate::linalg::{c64, identity, max_abs, unitarity_defect, CMatrix, C64};
use crate::phase::{noncyclic_phase, overlap_matrix, AbelianPhase, OverlapMatrix, PhaseReport};
use crate::propagate::{holonomy, propagate, FnGenerator, MatrixOdeProblem, Method, PropagatorTrace};
use crate::quadrupole::{self, PrecessionScenario};

/// One level transported along a curve together with its holonomy.
#[derive(Debug, Clone)]
pub struct LevelRun {
    pub frames: FrameField,
    pub connection: ConnectionSamples,
    pub holonomy: PropagatorTrace,
    pub dynamical: Vec<f64>,
}

/// Gauge-invariant data of a run at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub t: f64,
    /// `Πⁿ(t) = tr Γ̌ⁿ(t)`.
    pub trace: C64,
    /// `|w|` for a nondegenerate level, otherwise `|Π|/l`.
    pub visibility: f64,
    pub abelian: Option<AbelianPhase>,
    pub unitarity_defect: f64,
}

impl PhaseSample {
    fn from_report(t: f64, report: &PhaseReport) -> Result<Self> {
        let l = report.w.dim() as f64;
        let visibility = if report.w.dim() == 1 { report.w.matrix[(0, 0)].norm() } else { report.trace.norm() / l };
        Ok(Self {
            t,
            trace: report.trace,
            visibility,
            abelian: report.abelian,
            unitarity_defect: unitarity_defect(&report.gamma)?,
        })
    }
}

impl LevelRun {
    pub fn new(
        family: &OperatorFamily,
        curve: &Curve,
        hamiltonian: &OperatorFn,
        level: usize,
        method: Method,
        opts: &TransportOptions,
    ) -> Result<Self> {
        let frames = transport_frame_with(family, curve, level, Gauge::Aligned, opts)?;
        Self::from_frames(frames, hamiltonian, method)
    }

    pub fn from_frames(frames: FrameField, hamiltonian: &OperatorFn, method: Method) -> Result<Self> {
        let connection = connection_matrices(&frames, hamiltonian)?;
        let holonomy = holonomy(&connection, method)?;
        let dynamical = dynamical_phases(&connection)?;
        Ok(Self { frames, connection, holonomy, dynamical })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        self.frames.times()
    }

    /// `Γ̌(t_k) = F(0)†F(t_k) Γ(t_k)`.
    pub fn report_at(&self, k: usize) -> Result<PhaseReport> {
        let w = overlap_matrix(self.frames.level(), self.frames.first(), self.frames.frame(k))?;
        let mut report = noncyclic_phase(&w, &self.holonomy.matrices[k])?;
        report.dynamical_phase = Some(self.dynamical[k]);
        Ok(report)
    }

    pub fn report(&self) -> Result<PhaseReport> {
        self.report_at(self.len() - 1)
    }

    /// The same level in the frames `F v(t)`.
    pub fn gauged(&self, v: Arc<dyn GaugeField>, hamiltonian: &OperatorFn, method: Method) -> Result<Self> {
        Self::from_frames(apply_gauge(&self.frames, v)?, hamiltonian, method)
    }

    pub fn profile(&self) -> Result<Vec<PhaseSample>> {
        (0..self.len()).map(|k| PhaseSample::from_report(self.times()[k], &self.report_at(k)?)).collect()
    }
}

/// Effect of one random gauge on the terminal phase data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeTrial {
    pub trial: u64,
    /// `|Π̃ − Π|`.
    pub pi_gap: f64,
    /// `‖Γ̌̃ − v(0)†Γ̌v(0)‖_max`.
    pub covariance_gap: f64,
}

/// Applies `count` seeded [`SmoothGauge`]s to `run` and measures how the
/// terminal report changes. Trials are independent and run through `exec`.
pub fn gauge_trials(
    run: &LevelRun,
    hamiltonian: &OperatorFn,
    seed: u64,
    count: u64,
    method: Method,
    exec: Execution,
) -> Result<Vec<GaugeTrial>> {
    let base = run.report()?;
    let times = run.times();
    let (t0, t1) = (times[0], times[times.len() - 1]);
    let l = run.frames.multiplicity();
    let trials: Vec<u64> = (0..count).collect();
    exec::try_map(exec, &trials, |&trial| {
        let v = SmoothGauge::seeded(l, t0, t1, seed, trial);
        let v0 = v.value(t0);
        let report = run.gauged(Arc::new(v), hamiltonian, method)?.report()?;
        let expected = v0.adjoint() * &base.noncyclic * &v0;
        Ok(GaugeTrial {
            trial,
            pi_gap: (report.trace - base.trace).norm(),
            covariance_gap: max_abs(&(report.noncyclic - expected)),
        })
    })
}

/// Source of the quadrupole level-2 connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConnectionModel {
    /// Eigenframes of the Hamiltonian transported numerically along the curve.
    #[default]
    Transported,
    /// The printed closed forms for `Γ` and `w`.
    ClosedForm,
}

impl ConnectionModel {
    pub fn name(self) -> &'static str {
        match self {
            ConnectionModel::Transported => "transported",
            ConnectionModel::ClosedForm => "closed-form",
        }
    }
}

impl fmt::Display for ConnectionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConnectionModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transported" => Ok(ConnectionModel::Transported),
            "closed-form" | "closed_form" | "closed" => Ok(ConnectionModel::ClosedForm),
            other => Err(Error::Domain(format!("unknown connection model '{other}'"))),
        }
    }
}

/// Phase profile and terminal report of one level.
#[derive(Debug, Clone)]
pub struct LevelProfile {
    pub level: usize,
    pub multiplicity: usize,
    pub samples: Vec<PhaseSample>,
    pub report: PhaseReport,
}

fn trivial_profile(level: usize, l: usize, t: f64) -> Result<LevelProfile> {
    let w = OverlapMatrix { level, matrix: identity(l) };
    let report = noncyclic_phase(&w, &identity(l))?;
    Ok(LevelProfile { level, multiplicity: l, samples: vec![PhaseSample::from_report(t, &report)?], report })
}

fn closed_form_report(s: &PrecessionScenario, level: usize, phi: f64) -> Result<PhaseReport> {
    let (w, gamma) = if level == 0 {
        let w = CMatrix::from_element(1, 1, c64(quadrupole::w1_closed(s.zeta(), s.phi0, phi), 0.0));
        let d = phi - s.phi0;
        (w, CMatrix::from_element(1, 1, c64(d.cos(), d.sin())))
    } else {
        (quadrupole::w2_closed(s.theta, s.phi0, phi)?, quadrupole::gamma2_closed(s.theta, s.phi0, phi)?)
    };
    noncyclic_phase(&OverlapMatrix { level, matrix: w }, &gamma)
}

/// Both quadrupole levels on `steps + 1` samples of the precession.
pub fn quadrupole_profiles(
    scenario: &PrecessionScenario,
    steps: usize,
    model: ConnectionModel,
    method: Method,
    exec: Execution,
) -> Result<Vec<LevelProfile>> {
    if scenario.duration() == 0.0 {
        return Ok(vec![trivial_profile(0, 1, 0.0)?, trivial_profile(1, 2, 0.0)?]);
    }
    let curve = scenario.curve(steps)?;
    match model {
        ConnectionModel::Transported => {
            let family = scenario.family();
            let hamiltonian = scenario.hamiltonian_fn();
            let opts = TransportOptions { execution: exec, ..Default::default() };
            (0..2)
                .map(|level| {
                    let run = LevelRun::new(&family, &curve, &hamiltonian, level, method, &opts)?;
                    Ok(LevelProfile {
                        level,
                        multiplicity: run.frames.multiplicity(),
                        samples: run.profile()?,
                        report: run.report()?,
                    })
                })
                .collect()
        }
        ConnectionModel::ClosedForm => (0..2)
            .map(|level| {
                let samples = curve
                    .times()
                    .iter()
                    .map(|&t| PhaseSample::from_report(t, &closed_form_report(scenario, level, scenario.azimuth(t))?))
                    .collect::<Result<Vec<_>>>()?;
                let report = closed_form_report(scenario, level, scenario.phi_final)?;
                Ok(LevelProfile { level, multiplicity: level + 1, samples, report })
            })
            .collect(),
    }
}

/// `i dΓ/dφ = h(φ) Γ` for the closed-form level-2 generator on `steps`
/// uniform steps of `[φ₀, φ₁]`.
pub fn closed_form_holonomy(theta: f64, phi0: f64, phi1: f64, steps: usize, method: Method) -> Result<PropagatorTrace> {
    let k = quadrupole::connection_coeffs(theta)?;
    if steps == 0 {
        return Err(Error::Resolution("at least one step is required".into()));
    }
    let times: Vec<f64> = (0..=steps).map(|j| phi0 + (phi1 - phi0) * j as f64 / steps as f64).collect();
    let generator = FnGenerator::new(2, Arc::new(move |phi| quadrupole::closed_form_generator(&k, phi)));
    propagate(&MatrixOdeProblem { generator: &generator, initial: identity(2), times }, method)
}

/// The precession as an adiabatic scenario over its own duration.
pub fn precession_adiabatic(scenario: &PrecessionScenario, steps: usize) -> Result<AdiabaticScenario> {
    let tau = scenario.duration();
    if tau <= 0.0 {
        return Err(Error::Domain("scenario has zero duration".into()));
    }
    let path = scenario.path();
    AdiabaticScenario::new(scenario.family(), Arc::new(move |s: f64| path(s * tau)), tau, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_holonomy_matches_gamma2() {
        let theta = quadrupole::tycko_theta();
        let trace = closed_form_holonomy(theta, 0.0, 4.0 * PI, 800, Method::Magnus4).unwrap();
        for (phi, g) in trace.times.iter().zip(&trace.matrices).step_by(40) {
            let closed = quadrupole::gamma2_closed(theta, 0.0, *phi).unwrap();
            assert!(max_abs(&(g - closed)) < 1e-8);
        }
    }

    #[test]
    fn models_agree_on_pure_gauge_visibility() {
        let s = PrecessionScenario::new(1.0, 1.0, PI / 4.0, 0.0, 1.0, PI / 2.0).unwrap();
        for model in [ConnectionModel::Transported, ConnectionModel::ClosedForm] {
            let p = quadrupole_profiles(&s, 200, model, Method::Magnus4, Execution::Sequential).unwrap();
            let a = p[0].report.abelian.unwrap();
            assert!((a.visibility - 0.5).abs() < 1e-10, "{model}");
        }
    }

    #[test]
    fn transported_cyclic_trace() {
        let s = PrecessionScenario::tycko();
        let p = quadrupole_profiles(&s, 400, ConnectionModel::Transported, Method::Magnus4, Execution::Parallel).unwrap();
        let c = quadrupole::tycko_theta().cos();
        assert!((p[1].report.trace - c64(2.0 * (2.0 * PI * c).cos(), 0.0)).norm() < 1e-8);
        assert!((p[0].report.trace - c64(1.0, 0.0)).norm() < 1e-10);
        assert!(p[1].samples.iter().all(|x| x.unitarity_defect < 1e-10));
    }

    #[test]
    fn zero_duration_is_trivial() {
        let s = PrecessionScenario::new(1.0, 1.0, 1.0, 0.3, 1.0, 0.3).unwrap();
        let p = quadrupole_profiles(&s, 64, ConnectionModel::Transported, Method::Magnus4, Execution::Sequential).unwrap();
        assert_eq!(p[1].samples.len(), 1);
        assert!((p[1].report.trace - c64(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gauge_trials_leave_trace_invariant() {
        let s = PrecessionScenario::new(1.0, 1.0, 1.0, 0.0, 1.0, 3.0).unwrap();
        let curve = s.curve(600).unwrap();
        let h = s.hamiltonian_fn();
        let run = LevelRun::new(&s.family(), &curve, &h, 1, Method::Magnus4, &TransportOptions::default()).unwrap();
        let trials = gauge_trials(&run, &h, 42, 6, Method::Magnus4, Execution::Parallel).unwrap();
        for t in trials {
            assert!(t.pi_gap < 1e-9 && t.covariance_gap < 1e-9, "{t:?}");
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in [ConnectionModel::Transported, ConnectionModel::ClosedForm] {
            assert_eq!(m.name().parse::<ConnectionModel>().unwrap(), m);
        }
        assert!("bogus".parse::<ConnectionModel>().is_err());
    }
}
