//! Adiabatic limit: Hamiltonian eigenframes stand in for the invariant's,
//! the Berry connection generates the holonomy, and the exact propagator is
//! compared against `U⁽⁰⁾` as the duration grows.

use std::fmt;
use std::sync::Arc;

use crate::curve::{
    central_difference, connection_matrices, transport_frame_with, ConnectionSamples, Curve,
    FrameField, OperatorFamily, OperatorFn, PathFn, TransportOptions, Gauge,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{c64, default_degeneracy_tol, eig_hermitian, identity, max_abs, CMatrix, HermitianMatrix};
use crate::phase::{overlap_matrix, noncyclic_phase, PhaseReport};
use crate::propagate::{assemble_evolution, evolve, holonomy, lewis_riesenfeld_u, Method, PropagatorTrace};

/// Coupling-to-gap ratio above which a run is flagged as non-adiabatic.
pub const ADIABATIC_WARNING: f64 = 0.1;

/// `H[R(s)]` along a curve on normalized time `s = t/τ ∈ [0, 1]`.
#[derive(Clone)]
pub struct AdiabaticScenario {
    pub family: OperatorFamily,
    pub path: PathFn,
    pub tau: f64,
    pub steps: usize,
    pub degeneracy_tol: Option<f64>,
}

impl fmt::Debug for AdiabaticScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdiabaticScenario")
            .field("dim", &self.family.dim())
            .field("tau", &self.tau)
            .field("steps", &self.steps)
            .finish()
    }
}

impl AdiabaticScenario {
    pub fn new(family: OperatorFamily, path: PathFn, tau: f64, steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("duration τ = {tau} must be positive")));
        }
        if steps < 2 {
            return Err(Error::Resolution("an adiabatic scenario needs at least 2 steps".into()));
        }
        Ok(Self { family, path, tau, steps, degeneracy_tol: None })
    }

    /// Same path traversed in time `tau`, keeping the step length.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let steps = ((self.steps as f64) * tau / self.tau).ceil().max(2.0) as usize;
        let mut out = Self::new(self.family.clone(), Arc::clone(&self.path), tau, steps)?;
        out.degeneracy_tol = self.degeneracy_tol;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// `θ(t) = R(t/τ)` for `t ∈ [0, t_end]`, with steps in proportion to `t_end/τ`.
    pub fn curve_until(&self, t_end: f64) -> Result<Curve> {
        if !(t_end > 0.0 && t_end <= self.tau * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("t = {t_end} lies outside (0, τ]")));
        }
        let path = Arc::clone(&self.path);
        let tau = self.tau;
        let steps = ((self.steps as f64) * t_end / tau).ceil().max(2.0) as usize;
        let start = path(0.0);
        let end = path(t_end / tau);
        let cyclic = start.iter().zip(&end).all(|(a, b)| (a - b).abs() <= 1e-12);
        Curve::uniform(0.0, t_end, steps, Arc::new(move |t: f64| path(t / tau)), cyclic)
    }

    pub fn curve(&self) -> Result<Curve> {
        self.curve_until(self.tau)
    }

    pub fn hamiltonian(&self) -> Result<OperatorFn> {
        Ok(self.family.along(&self.curve()?))
    }

    fn options(&self) -> TransportOptions {
        TransportOptions { degeneracy_tol: self.degeneracy_tol, execution: Execution::Sequential, ..Default::default() }
    }

    fn level_count(&self) -> Result<usize> {
        let h = self.family.eval(&(self.path)(0.0))?;
        let tol = self.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(&h));
        Ok(eig_hermitian(&h, tol)?.len())
    }
}

/// Per-level pieces of the adiabatic propagator.
#[derive(Debug, Clone)]
pub struct AdiabaticLevel {
    pub frames: FrameField,
    pub connection: ConnectionSamples,
    /// `u∘ⁿ = e^{iδ∘ₙ} Γ∘ⁿ`.
    pub u: PropagatorTrace,
}

fn level_parts(scenario: &AdiabaticScenario, curve: &Curve, hamiltonian: &OperatorFn, level: usize, method: Method) -> Result<AdiabaticLevel> {
    let frames = transport_frame_with(&scenario.family, curve, level, Gauge::Aligned, &scenario.options())?;
    let connection = connection_matrices(&frames, hamiltonian)?;
    // ℰ∘ⁿ = Eₙ·1 commutes with A∘ⁿ, so e^{iδ}Γ solves i du/dt = (ℰ − A) u
    let u = lewis_riesenfeld_u(&connection, &identity(frames.multiplicity()), method)?;
    Ok(AdiabaticLevel { frames, connection, u })
}

pub fn adiabatic_levels(scenario: &AdiabaticScenario, method: Method, exec: Execution) -> Result<Vec<AdiabaticLevel>> {
    let curve = scenario.curve()?;
    let hamiltonian = scenario.family.along(&curve);
    let levels: Vec<usize> = (0..scenario.level_count()?).collect();
    exec::try_map(exec, &levels, |&n| level_parts(scenario, &curve, &hamiltonian, n, method))
}

/// `U⁽⁰⁾(t) = Σₙ Fₙ(t) u∘ⁿ(t) Fₙ(0)†` on the scenario grid.
pub fn adiabatic_propagator(scenario: &AdiabaticScenario, method: Method) -> Result<PropagatorTrace> {
    let levels = adiabatic_levels(scenario, method, Execution::Sequential)?;
    let frames: Vec<&FrameField> = levels.iter().map(|l| &l.frames).collect();
    let traces: Vec<&PropagatorTrace> = levels.iter().map(|l| &l.u).collect();
    assemble_evolution(&frames, &traces)
}

/// Exact `U(t)` from the full Schrödinger equation on the scenario grid.
pub fn exact_propagator(scenario: &AdiabaticScenario, method: Method) -> Result<PropagatorTrace> {
    let curve = scenario.curve()?;
    evolve(&scenario.family.along(&curve), scenario.dim(), curve.times().to_vec(), method)
}

/// Off-diagonal Berry couplings between two levels at one sample.
#[derive(Debug, Clone)]
pub struct CouplingBlock {
    pub m: usize,
    pub n: usize,
    /// `𝒜^{mn}_{ba} = i⟨m,b|dH/dt|n,a⟩/(Eₙ − E_m)`.
    pub matrix: CMatrix,
}

#[derive(Debug, Clone)]
pub struct AdiabaticityReport {
    pub times: Vec<f64>,
    pub couplings: Vec<Vec<CouplingBlock>>,
    pub min_gaps: Vec<f64>,
    /// Per sample, the largest `‖𝒜^{mn}‖_F / |Eₙ − E_m|` over level pairs.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

impl AdiabaticityReport {
    pub fn is_adiabatic(&self, warning: f64) -> bool {
        self.max_ratio < warning
    }
}

pub fn adiabaticity_report(scenario: &AdiabaticScenario) -> Result<AdiabaticityReport> {
    let curve = scenario.curve()?;
    if curve.len() < 3 {
        return Err(Error::Resolution("adiabaticity report needs at least 3 samples".into()));
    }
    let hamiltonian = scenario.family.along(&curve);
    let fd_step = 5e-4 * scenario.tau;
    let i = c64(0.0, 1.0);
    let mut couplings = Vec::with_capacity(curve.len());
    let mut min_gaps = Vec::with_capacity(curve.len());
    let mut ratios = Vec::with_capacity(curve.len());
    let mut reference: Option<Vec<usize>> = None;
    for &t in curve.times() {
        let h = HermitianMatrix::new(hamiltonian(t))?;
        let tol = scenario.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(&h));
        let spectrum = eig_hermitian(&h, tol)?;
        let mult = spectrum.multiplicities();
        match &reference {
            None => reference = Some(mult),
            Some(r) if *r != mult => {
                return Err(Error::LevelCrossing(format!("level multiplicities change to {mult:?} at t = {t}")));
            }
            _ => {}
        }
        let dh = central_difference(|s| Ok(hamiltonian(s)), t, fd_step)?;
        let levels = spectrum.levels();
        let mut blocks = Vec::new();
        let mut gap = f64::INFINITY;
        let mut ratio = 0.0_f64;
        for (m, lm) in levels.iter().enumerate() {
            for (n, ln) in levels.iter().enumerate() {
                if m == n {
                    continue;
                }
                let de = ln.eigenvalue - lm.eigenvalue;
                if !(de.abs() > tol) {
                    return Err(Error::LevelCrossing(format!("levels {m} and {n} meet at t = {t}")));
                }
                gap = gap.min(de.abs());
                let block = (lm.frame.adjoint() * &dh * &ln.frame) * (i / de);
                ratio = ratio.max(block.norm() / de.abs());
                blocks.push(CouplingBlock { m, n, matrix: block });
            }
        }
        couplings.push(blocks);
        min_gaps.push(gap);
        ratios.push(ratio);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(AdiabaticityReport { times: curve.times().to_vec(), couplings, min_gaps, ratios, max_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub tau: f64,
    pub steps: usize,
    /// `‖U(τ) − U⁽⁰⁾(τ)‖_max`.
    pub defect: f64,
    pub ratio: f64,
}

/// Defect of the adiabatic propagator at the end of the curve for each τ.
/// Distinct τ values are independent and are evaluated through `exec`.
pub fn convergence_study(scenario: &AdiabaticScenario, taus: &[f64], method: Method, exec: Execution) -> Result<Vec<ConvergencePoint>> {
    if taus.is_empty() {
        return Err(Error::Domain("empty τ list".into()));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("τ values must increase".into()));
    }
    exec::try_map(exec, taus, |&tau| {
        let sc = scenario.with_tau(tau)?;
        let u0 = adiabatic_propagator(&sc, method)?;
        let exact = exact_propagator(&sc, method)?;
        let ratio = adiabaticity_report(&sc)?.max_ratio;
        Ok(ConvergencePoint { tau, steps: sc.steps, defect: max_abs(&(exact.last() - u0.last())), ratio })
    })
}

/// `δ(t_k) = −∫₀^{t_k} tr ℰ / l dt` at every sample, by two-point Gauss
/// quadrature on each segment.
pub fn dynamical_phases(connection: &ConnectionSamples) -> Result<Vec<f64>> {
    let times = connection.times();
    let l = connection.dim() as f64;
    let offset = 3f64.sqrt() / 6.0;
    let mut out = Vec::with_capacity(times.len());
    let mut total = 0.0;
    out.push(0.0);
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let a = connection.energy_at(w[0] + (0.5 - offset) * h)?.trace().re;
        let b = connection.energy_at(w[0] + (0.5 + offset) * h)?.trace().re;
        total -= 0.5 * h * (a + b) / l;
        out.push(total);
    }
    Ok(out)
}

pub fn dynamical_phase(connection: &ConnectionSamples) -> Result<f64> {
    Ok(*dynamical_phases(connection)?.last().expect("non-empty grid"))
}

/// `Γ̌∘ⁿ(t) = w∘ⁿ(t) Γ∘ⁿ(t)` from Hamiltonian eigenframes; `t = None` means τ.
pub fn adiabatic_noncyclic_phase(scenario: &AdiabaticScenario, level: usize, t: Option<f64>, method: Method) -> Result<PhaseReport> {
    let curve = scenario.curve_until(t.unwrap_or(scenario.tau))?;
    let hamiltonian = scenario.family.along(&curve);
    let frames = transport_frame_with(&scenario.family, &curve, level, Gauge::Aligned, &scenario.options())?;
    let connection = connection_matrices(&frames, &hamiltonian)?;
    let gamma = holonomy(&connection, method)?;
    let w = overlap_matrix(level, frames.first(), frames.last())?;
    let mut report = noncyclic_phase(&w, gamma.last())?;
    report.dynamical_phase = Some(dynamical_phase(&connection)?);
    Ok(report)
}
