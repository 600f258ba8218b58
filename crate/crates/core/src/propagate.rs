//! Unitary steppers for `i dM/dt = K(t) M`, and the per-level propagators
//! built on them.
//!
//! Time ordering is the left-multiplication order of the step factors.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::curve::{ConnectionSamples, FrameField, OperatorFn};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, expm_skew_raw, hermiticity_defect, hermitize, identity, max_abs, singular_values,
    unitarity_defect, CMatrix, HERMITICITY_TOL, UNITARITY_TOL,
};

/// The `K(t)` of `i dM/dt = K(t) M`.
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64) -> Result<CMatrix>;
}

/// Generator backed by a closure.
#[derive(Clone)]
pub struct FnGenerator {
    dim: usize,
    f: OperatorFn,
}

impl FnGenerator {
    pub fn new(dim: usize, f: OperatorFn) -> Self {
        Self { dim, f }
    }

    pub fn constant(k: CMatrix) -> Self {
        let dim = k.nrows();
        Self::new(dim, Arc::new(move |_| k.clone()))
    }
}

impl Generator for FnGenerator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64) -> Result<CMatrix> {
        Ok((self.f)(t))
    }
}

/// Which combination of a level's connection drives the propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectionPart {
    /// `−𝒜ⁿ`, giving the holonomy `Γⁿ`.
    Holonomy,
    /// `Δⁿ = ℰⁿ − 𝒜ⁿ`, giving the coefficient matrices `uⁿ`.
    Dynamical,
}

pub struct ConnectionGenerator<'a> {
    pub connection: &'a ConnectionSamples,
    pub part: ConnectionPart,
}

impl Generator for ConnectionGenerator<'_> {
    fn dim(&self) -> usize {
        self.connection.dim()
    }
    fn eval(&self, t: f64) -> Result<CMatrix> {
        match self.part {
            ConnectionPart::Holonomy => Ok(-self.connection.berry_at(t)?),
            ConnectionPart::Dynamical => self.connection.delta_at(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// `M_{k+1} = exp(−iΔt K(t_mid)) M_k`, second order.
    MidpointExp,
    /// Two-node Gauss–Legendre Magnus step, fourth order.
    #[default]
    Magnus4,
}

impl Method {
    pub fn order(self) -> u32 {
        match self {
            Method::MidpointExp => 2,
            Method::Magnus4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::MidpointExp => "midpoint",
            Method::Magnus4 => "magnus4",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "midpoint" | "midpoint_exp" | "midpoint-exp" => Ok(Method::MidpointExp),
            "magnus4" | "magnus" => Ok(Method::Magnus4),
            other => Err(Error::Domain(format!("unknown method {other:?} (expected midpoint or magnus4)"))),
        }
    }
}

pub struct MatrixOdeProblem<'a> {
    pub generator: &'a dyn Generator,
    pub initial: CMatrix,
    pub times: Vec<f64>,
}

/// `M(t_k)` on the grid, plus the per-step `‖K‖Δt` diagnostics.
#[derive(Debug, Clone)]
pub struct PropagatorTrace {
    pub times: Vec<f64>,
    pub matrices: Vec<CMatrix>,
    pub step_norms: Vec<f64>,
}

impl PropagatorTrace {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn last(&self) -> &CMatrix {
        self.matrices.last().expect("traces are never empty")
    }

    pub fn max_step_norm(&self) -> f64 {
        self.step_norms.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.matrices
            .iter()
            .map(|m| unitarity_defect(m).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

fn checked_generator(g: &dyn Generator, t: f64) -> Result<CMatrix> {
    let k = g.eval(t)?;
    if k.nrows() != g.dim() || k.ncols() != g.dim() {
        return Err(Error::Structural(format!(
            "generator returned {}x{} at t = {t}, expected {d}x{d}",
            k.nrows(),
            k.ncols(),
            d = g.dim()
        )));
    }
    let defect = hermiticity_defect(&k);
    if !(defect <= HERMITICITY_TOL) {
        return Err(Error::Structural(format!(
            "generator is not Hermitian at t = {t} (relative defect {defect:e})"
        )));
    }
    Ok(hermitize(&k))
}

fn spectral_norm(k: &CMatrix) -> f64 {
    singular_values(k).first().copied().unwrap_or(0.0)
}

/// Integrates `i dM/dt = K(t) M` over the problem's grid.
pub fn propagate(problem: &MatrixOdeProblem<'_>, method: Method) -> Result<PropagatorTrace> {
    let times = &problem.times;
    if times.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(format!("time grid not increasing at index {k}")));
    }
    let dim = problem.generator.dim();
    let m0 = &problem.initial;
    if m0.nrows() != dim || m0.ncols() != dim {
        return Err(Error::Domain(format!("initial matrix must be {dim}x{dim}")));
    }
    if unitarity_defect(m0)? > UNITARITY_TOL {
        return Err(Error::Structural("initial matrix is not unitary".into()));
    }

    let g = problem.generator;
    let offset = 3f64.sqrt() / 6.0;
    let mut matrices = Vec::with_capacity(times.len());
    let mut step_norms = Vec::with_capacity(times.len().saturating_sub(1));
    matrices.push(m0.clone());
    for w in times.windows(2) {
        let (t0, h) = (w[0], w[1] - w[0]);
        let k = match method {
            Method::MidpointExp => checked_generator(g, t0 + 0.5 * h)?,
            Method::Magnus4 => {
                let k1 = checked_generator(g, t0 + (0.5 - offset) * h)?;
                let k2 = checked_generator(g, t0 + (0.5 + offset) * h)?;
                let comm = &k2 * &k1 - &k1 * &k2;
                let correction = comm * c64(0.0, -(3f64.sqrt() / 12.0) * h);
                hermitize(&((k1 + k2).scale(0.5) + correction))
            }
        };
        let norm = spectral_norm(&k) * h;
        if norm >= 1.0 {
            return Err(Error::Resolution(format!(
                "step [{t0}, {}] has ‖K‖Δt = {norm:.3} ≥ 1; refine the grid",
                w[1]
            )));
        }
        step_norms.push(norm);
        let next = expm_skew_raw(&k, h) * matrices.last().unwrap();
        matrices.push(next);
    }
    Ok(PropagatorTrace { times: times.clone(), matrices, step_norms })
}

/// `Γⁿ(t)`: solves `i dΓ/dt = −𝒜ⁿ Γ`, `Γ(0) = 1`.
pub fn holonomy(connection: &ConnectionSamples, method: Method) -> Result<PropagatorTrace> {
    let generator = ConnectionGenerator { connection, part: ConnectionPart::Holonomy };
    let problem = MatrixOdeProblem {
        generator: &generator,
        initial: identity(connection.dim()),
        times: connection.times().to_vec(),
    };
    propagate(&problem, method)
}

/// `uⁿ(t)`: solves `i du/dt = Δⁿ u`, `u(0) = u0`.
pub fn lewis_riesenfeld_u(connection: &ConnectionSamples, u0: &CMatrix, method: Method) -> Result<PropagatorTrace> {
    let generator = ConnectionGenerator { connection, part: ConnectionPart::Dynamical };
    let problem = MatrixOdeProblem { generator: &generator, initial: u0.clone(), times: connection.times().to_vec() };
    propagate(&problem, method)
}

/// Solves the Schrödinger equation `i dU/dt = H(t) U` directly.
pub fn evolve(hamiltonian: &OperatorFn, dim: usize, times: Vec<f64>, method: Method) -> Result<PropagatorTrace> {
    let generator = FnGenerator::new(dim, Arc::clone(hamiltonian));
    let problem = MatrixOdeProblem { generator: &generator, initial: identity(dim), times };
    propagate(&problem, method)
}

fn check_blocks(frames: &[&FrameField], traces: &[&PropagatorTrace]) -> Result<(usize, usize)> {
    if frames.is_empty() || frames.len() != traces.len() {
        return Err(Error::Domain("one propagator trace per frame field is required".into()));
    }
    let dim = frames[0].dim();
    let len = frames[0].len();
    for (f, tr) in frames.iter().zip(traces) {
        if f.dim() != dim || f.len() != len || tr.len() != len {
            return Err(Error::Domain("frames and traces must share dimension and time grid".into()));
        }
        if tr.matrices[0].nrows() != f.multiplicity() {
            return Err(Error::Domain(format!(
                "trace acts on {} states but level {} has multiplicity {}",
                tr.matrices[0].nrows(),
                f.level(),
                f.multiplicity()
            )));
        }
        let gap = f.times().iter().zip(&tr.times).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 0.0 {
            return Err(Error::Domain("frames and traces use different time grids".into()));
        }
    }
    Ok((dim, len))
}

/// `Vⁿ(t_k) = F(t_k) M(t_k) F(0)†` for one level.
pub fn level_operator(frames: &FrameField, trace: &PropagatorTrace) -> Result<PropagatorTrace> {
    check_blocks(&[frames], &[trace])?;
    let f0 = frames.first().adjoint();
    let matrices = frames.frames().iter().zip(&trace.matrices).map(|(f, m)| f * m * &f0).collect();
    Ok(PropagatorTrace { times: trace.times.clone(), matrices, step_norms: trace.step_norms.clone() })
}

fn assemble(frames: &[&FrameField], traces: &[&PropagatorTrace]) -> Result<PropagatorTrace> {
    let (dim, len) = check_blocks(frames, traces)?;
    let cover: usize = frames.iter().map(|f| f.multiplicity()).sum();
    if cover != dim {
        return Err(Error::Domain(format!("levels cover {cover} of {dim} dimensions")));
    }
    let mut levels: Vec<usize> = frames.iter().map(|f| f.level()).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() != frames.len() {
        return Err(Error::Domain("a level appears more than once".into()));
    }
    let mut matrices = vec![CMatrix::zeros(dim, dim); len];
    for (f, tr) in frames.iter().zip(traces) {
        let part = level_operator(f, tr)?;
        for (acc, m) in matrices.iter_mut().zip(&part.matrices) {
            *acc += m;
        }
    }
    let step_norms = (0..len.saturating_sub(1))
        .map(|k| traces.iter().map(|t| t.step_norms.get(k).copied().unwrap_or(0.0)).fold(0.0, f64::max))
        .collect();
    Ok(PropagatorTrace { times: frames[0].times().to_vec(), matrices, step_norms })
}

/// `U(t) = Σₙ Fₙ(t) uⁿ(t) Fₙ(0)†` over a complete set of levels.
pub fn assemble_evolution(frames: &[&FrameField], u_traces: &[&PropagatorTrace]) -> Result<PropagatorTrace> {
    assemble(frames, u_traces)
}

/// `V(t) = Σₙ Vⁿ(t)` with `Vⁿ(t) = Fₙ(t) Γⁿ(t) Fₙ(0)†`.
pub fn assemble_v(frames: &[&FrameField], gamma_traces: &[&PropagatorTrace]) -> Result<PropagatorTrace> {
    assemble(frames, gamma_traces)
}

/// Largest entrywise gap between the terminal matrices of two traces.
pub fn terminal_gap(a: &PropagatorTrace, b: &PropagatorTrace) -> f64 {
    max_abs(&(a.last() - b.last()))
}
