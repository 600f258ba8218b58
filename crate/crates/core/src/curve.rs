//! Parameter curves, operator families along them, and smoothly transported
//! eigenframes with their connection matrices.
//!
//! A [`FrameField`] stores one orthonormal `dim × l` frame per curve sample,
//! and can also be evaluated between samples. Off-grid evaluation is what the
//! 4th-order Magnus steps need; it is done against the sample at the start of
//! the enclosing segment, so the field is continuous at every sample and
//! smooth inside every segment.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{
    c64, eig_hermitian, default_degeneracy_tol, expm_skew_raw, hermitize, max_abs,
    orthonormality_defect, polar_unitary, projector_distance, singular_values, unitarity_defect,
    unitary_log, CMatrix, HermitianMatrix,
};

pub type PathFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
pub type FamilyFn = Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;
/// Time-dependent operator, e.g. a Hamiltonian `t ↦ H(t)`.
pub type OperatorFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Minimum singular value of successive frame overlaps before a curve counts
/// as under-resolved.
pub const MIN_OVERLAP: f64 = 0.5;

/// Linear weights `(index, weight)` of a piecewise cubic Hermite interpolant
/// with three-point tangents, evaluated at `t`.
fn hermite_stencil(times: &[f64], t: f64) -> Vec<(usize, f64)> {
    let n = times.len();
    if n == 1 {
        return vec![(0, 1.0)];
    }
    let k = segment_index(times, t);
    let h = times[k + 1] - times[k];
    let u = (t - times[k]) / h;
    let h00 = 2.0 * u * u * u - 3.0 * u * u + 1.0;
    let h10 = u * u * u - 2.0 * u * u + u;
    let h01 = -2.0 * u * u * u + 3.0 * u * u;
    let h11 = u * u * u - u * u;
    let mut out = vec![(k, h00), (k + 1, h01)];
    for (j, w) in [(k, h10 * h), (k + 1, h11 * h)] {
        for (i, c) in derivative_stencil(times, j) {
            out.push((i, w * c));
        }
    }
    out
}

/// Three-point (second-order) derivative weights at sample `j`; one-sided at the ends.
fn derivative_stencil(times: &[f64], j: usize) -> Vec<(usize, f64)> {
    let n = times.len();
    if n == 2 {
        let h = times[1] - times[0];
        return vec![(0, -1.0 / h), (1, 1.0 / h)];
    }
    if j == 0 {
        let (h1, h2) = (times[1] - times[0], times[2] - times[1]);
        vec![
            (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
            (1, (h1 + h2) / (h1 * h2)),
            (2, -h1 / (h2 * (h1 + h2))),
        ]
    } else if j == n - 1 {
        let (h2, h1) = (times[n - 2] - times[n - 3], times[n - 1] - times[n - 2]);
        vec![
            (n - 3, h1 / (h2 * (h1 + h2))),
            (n - 2, -(h1 + h2) / (h1 * h2)),
            (n - 1, (2.0 * h1 + h2) / (h1 * (h1 + h2))),
        ]
    } else {
        let (hl, hr) = (times[j] - times[j - 1], times[j + 1] - times[j]);
        vec![
            (j - 1, -hr / (hl * (hl + hr))),
            (j, (hr - hl) / (hl * hr)),
            (j + 1, hl / (hr * (hl + hr))),
        ]
    }
}

/// Index `k` of the segment `[t_k, t_{k+1})` containing `t`, clamped to the grid.
fn segment_index(times: &[f64], t: f64) -> usize {
    let n = times.len();
    if n < 2 {
        return 0;
    }
    match times.binary_search_by(|probe| probe.total_cmp(&t)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

/// Fourth-order central difference of a matrix-valued function.
pub(crate) fn central_difference<F>(f: F, t: f64, h: f64) -> Result<CMatrix>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    let m2 = f(t - 2.0 * h)?;
    let m1 = f(t - h)?;
    let p1 = f(t + h)?;
    let p2 = f(t + 2.0 * h)?;
    Ok((m2 - p2 + (p1 - m1).scale(8.0)).scale(1.0 / (12.0 * h)))
}

pub(crate) fn interpolate_matrices(times: &[f64], values: &[CMatrix], t: f64) -> CMatrix {
    let mut out = CMatrix::zeros(values[0].nrows(), values[0].ncols());
    for (i, w) in hermite_stencil(times, t) {
        out += values[i].scale(w);
    }
    out
}

fn check_time_grid(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::Domain("a curve needs at least two samples".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("non-finite sample time".into()));
    }
    if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!(
            "sample times must increase strictly (t[{}] = {} >= t[{}] = {})",
            k,
            times[k],
            k + 1,
            times[k + 1]
        )));
    }
    Ok(())
}

/// Time-stamped path `θ(t)` through a parameter space.
#[derive(Clone)]
pub struct Curve {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    cyclic: bool,
    analytic: Option<PathFn>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("samples", &self.times.len())
            .field("span", &(self.start(), self.end()))
            .field("param_dim", &self.param_dim())
            .field("cyclic", &self.cyclic)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl Curve {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>, cyclic: bool) -> Result<Self> {
        check_time_grid(&times)?;
        if points.len() != times.len() {
            return Err(Error::Domain(format!(
                "{} sample times but {} parameter points",
                times.len(),
                points.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(Error::Domain("all parameter points must share a nonzero length".into()));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite parameter value".into()));
        }
        if cyclic {
            let gap = points[0]
                .iter()
                .zip(points.last().unwrap())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if gap > 1e-12 {
                return Err(Error::Domain(format!(
                    "cyclic curve does not close: endpoint gap {gap:e}"
                )));
            }
        }
        Ok(Self { times, points, cyclic, analytic: None })
    }

    /// Samples an analytic path on the given grid and keeps it for off-grid evaluation.
    pub fn from_fn(times: Vec<f64>, path: PathFn, cyclic: bool) -> Result<Self> {
        let points = times.iter().map(|&t| path(t)).collect();
        let mut curve = Self::new(times, points, cyclic)?;
        curve.analytic = Some(path);
        Ok(curve)
    }

    /// Analytic path on `steps + 1` evenly spaced samples of `[t0, t1]`.
    pub fn uniform(t0: f64, t1: f64, steps: usize, path: PathFn, cyclic: bool) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("a uniform grid needs at least one step".into()));
        }
        let times = (0..=steps)
            .map(|k| if k == steps { t1 } else { t0 + (t1 - t0) * k as f64 / steps as f64 })
            .collect();
        Self::from_fn(times, path, cyclic)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn is_cyclic(&self) -> bool {
        self.cyclic
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn has_analytic_path(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn segment_of(&self, t: f64) -> usize {
        segment_index(&self.times, t)
    }

    /// `θ(t)`; cubic Hermite interpolation of the samples when no analytic path is attached.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        if let Some(path) = &self.analytic {
            return path(t);
        }
        let mut out = vec![0.0; self.param_dim()];
        for (i, w) in hermite_stencil(&self.times, t) {
            for (o, x) in out.iter_mut().zip(&self.points[i]) {
                *o += w * x;
            }
        }
        out
    }

    /// Same geometric samples traversed with every time multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::Domain(format!("time rescaling factor must be positive, got {factor}")));
        }
        let times = self.times.iter().map(|t| t * factor).collect();
        let mut curve = Self::new(times, self.points.clone(), self.cyclic)?;
        curve.analytic = self.analytic.as_ref().map(|p| {
            let p = Arc::clone(p);
            Arc::new(move |t: f64| p(t / factor)) as PathFn
        });
        Ok(curve)
    }
}

/// A Hermitian operator family `θ ↦ I[θ]` (or `R ↦ H[R]`).
#[derive(Clone)]
pub struct OperatorFamily {
    dim: usize,
    evaluator: FamilyFn,
    generators: Option<Vec<HermitianMatrix>>,
}

impl fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("dim", &self.dim)
            .field("generators", &self.generators.as_ref().map(Vec::len))
            .finish()
    }
}

impl OperatorFamily {
    pub fn new(dim: usize, evaluator: FamilyFn) -> Self {
        Self { dim, evaluator, generators: None }
    }

    /// `I[θ] = Σ θⁱ Xᵢ` for constant Hermitian generators.
    pub fn linear(generators: Vec<HermitianMatrix>) -> Result<Self> {
        let dim = generators
            .first()
            .map(HermitianMatrix::dim)
            .ok_or_else(|| Error::Domain("a linear family needs at least one generator".into()))?;
        if generators.iter().any(|g| g.dim() != dim) {
            return Err(Error::Domain("generators must share one dimension".into()));
        }
        let gens: Vec<CMatrix> = generators.iter().map(|g| g.as_matrix().clone()).collect();
        let evaluator: FamilyFn = Arc::new(move |theta: &[f64]| {
            gens.iter()
                .zip(theta)
                .fold(CMatrix::zeros(dim, dim), |acc, (g, &x)| acc + g.scale(x))
        });
        Ok(Self { dim, evaluator, generators: Some(generators) })
    }

    /// Constant family, handy for static Hamiltonians.
    pub fn constant(m: HermitianMatrix) -> Self {
        let dim = m.dim();
        let inner = m.into_matrix();
        Self::new(dim, Arc::new(move |_: &[f64]| inner.clone()))
    }

    /// Attaches generators after checking `evaluator(θ) = Σ θⁱ Xᵢ` (≤ 1e-12) at `probes`.
    pub fn with_generators(mut self, generators: Vec<HermitianMatrix>, probes: &[Vec<f64>]) -> Result<Self> {
        for theta in probes {
            if theta.len() != generators.len() {
                return Err(Error::Domain("probe length differs from generator count".into()));
            }
            let direct = (self.evaluator)(theta);
            let combo = generators
                .iter()
                .zip(theta)
                .fold(CMatrix::zeros(self.dim, self.dim), |acc, (g, &x)| acc + g.as_matrix().scale(x));
            let gap = max_abs(&(direct - combo));
            if gap > 1e-12 {
                return Err(Error::Structural(format!(
                    "family disagrees with its generators by {gap:e}"
                )));
            }
        }
        self.generators = Some(generators);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> Option<&[HermitianMatrix]> {
        self.generators.as_deref()
    }

    pub fn eval(&self, theta: &[f64]) -> Result<HermitianMatrix> {
        if let Some(g) = &self.generators {
            if g.len() != theta.len() {
                return Err(Error::Domain(format!(
                    "parameter vector has length {}, family has {} generators",
                    theta.len(),
                    g.len()
                )));
            }
        }
        let m = (self.evaluator)(theta);
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::Domain(format!(
                "family evaluator returned {}x{}, expected {d}x{d}",
                m.nrows(),
                m.ncols(),
                d = self.dim
            )));
        }
        HermitianMatrix::new(m)
    }

    /// `t ↦ I[θ(t)]` along a curve.
    pub fn along(&self, curve: &Curve) -> OperatorFn {
        let family = self.clone();
        let curve = curve.clone();
        Arc::new(move |t: f64| (family.evaluator)(&curve.point_at(t)))
    }
}

/// How the in-level basis is chosen along a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    /// Frames exactly as the eigensolver emits them.
    Raw,
    /// Discrete parallel transport: each frame is rotated by the unitary polar
    /// factor of its overlap with the previous one.
    #[default]
    Aligned,
}

/// A smooth field of `l × l` unitaries `t ↦ v(t)`.
pub trait GaugeField: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> CMatrix;
    fn derivative(&self, t: f64) -> CMatrix;
}

/// Time-independent gauge.
#[derive(Debug, Clone)]
pub struct ConstantGauge(pub CMatrix);

impl GaugeField for ConstantGauge {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn value(&self, _t: f64) -> CMatrix {
        self.0.clone()
    }
    fn derivative(&self, _t: f64) -> CMatrix {
        CMatrix::zeros(self.0.nrows(), self.0.ncols())
    }
}

/// Gauge from a closure, differentiated numerically with step `fd_step`.
#[derive(Clone)]
pub struct FnGauge {
    pub dim: usize,
    pub value: OperatorFn,
    pub fd_step: f64,
}

impl GaugeField for FnGauge {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, t: f64) -> CMatrix {
        (self.value)(t)
    }
    fn derivative(&self, t: f64) -> CMatrix {
        central_difference(|s| Ok((self.value)(s)), t, self.fd_step).expect("infallible")
    }
}

/// `exp(−i s(t) K)` with `s` running linearly from 0 at `t0` to 1 at `t1`: spreads
/// a cyclic closure mismatch `exp(iK)` evenly along a curve.
#[derive(Debug, Clone)]
struct ClosureGauge {
    generator: CMatrix,
    t0: f64,
    t1: f64,
}

impl GaugeField for ClosureGauge {
    fn dim(&self) -> usize {
        self.generator.nrows()
    }
    fn value(&self, t: f64) -> CMatrix {
        let s = (t - self.t0) / (self.t1 - self.t0);
        expm_skew_raw(&self.generator, s)
    }
    fn derivative(&self, t: f64) -> CMatrix {
        let rate = c64(0.0, -1.0 / (self.t1 - self.t0));
        (&self.generator * self.value(t)) * rate
    }
}

/// What was done to make a transported frame periodic on a cyclic curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureReport {
    /// Distance between the eigenspace projectors at the two ends.
    pub subspace_mismatch: f64,
    /// `‖F₀†F_N − 1‖_max` of the parallel-transported frame before closing.
    pub transport_mismatch: f64,
    /// Leftover `‖F_N·v(T) − F₀‖_max` discarded when the last frame was set to the first.
    pub residual: f64,
}

struct Transport {
    family: OperatorFamily,
    curve: Curve,
    level: usize,
    multiplicities: Vec<usize>,
    gauge: Gauge,
    degeneracy_tol: Option<f64>,
    /// Parallel-transported frames before any closure correction.
    chain: Vec<CMatrix>,
    jets: Mutex<HashMap<u64, (CMatrix, CMatrix)>>,
}

impl Transport {
    fn eigenframe(&self, theta: &[f64]) -> Result<CMatrix> {
        let h = self.family.eval(theta)?;
        let tol = self.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(&h));
        let spectrum = eig_hermitian(&h, tol)?;
        if spectrum.multiplicities() != self.multiplicities {
            return Err(Error::LevelCrossing(format!(
                "level multiplicities {:?} differ from {:?} at θ = {:?}",
                spectrum.multiplicities(),
                self.multiplicities,
                theta
            )));
        }
        Ok(spectrum.levels()[self.level].frame.clone())
    }

    fn frame_with_reference(&self, t: f64, reference: usize) -> Result<CMatrix> {
        let e = self.eigenframe(&self.curve.point_at(t))?;
        Ok(match self.gauge {
            Gauge::Raw => e,
            Gauge::Aligned => {
                let (u, _) = polar_unitary(&(e.adjoint() * &self.chain[reference]));
                e * u
            }
        })
    }

    fn jet(&self, t: f64, fd_step: f64) -> Result<(CMatrix, CMatrix)> {
        if let Some(hit) = self.jets.lock().unwrap().get(&t.to_bits()) {
            return Ok(hit.clone());
        }
        let reference = self.curve.segment_of(t);
        let f = self.frame_with_reference(t, reference)?;
        let df = central_difference(|s| self.frame_with_reference(s, reference), t, fd_step)?;
        self.jets.lock().unwrap().insert(t.to_bits(), (f.clone(), df.clone()));
        Ok((f, df))
    }
}

#[derive(Clone)]
enum FrameSource {
    Samples,
    Transported(Arc<Transport>),
    Analytic { value: OperatorFn, derivative: Option<OperatorFn> },
    Gauged { base: Box<FrameField>, gauge: Arc<dyn GaugeField> },
}

/// Orthonormal frames of one level along a curve.
#[derive(Clone)]
pub struct FrameField {
    level: usize,
    multiplicity: usize,
    times: Vec<f64>,
    frames: Vec<CMatrix>,
    fd_step: f64,
    source: FrameSource,
    closure: Option<ClosureReport>,
}

impl fmt::Debug for FrameField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let source = match &self.source {
            FrameSource::Samples => "samples",
            FrameSource::Transported(_) => "transported",
            FrameSource::Analytic { .. } => "analytic",
            FrameSource::Gauged { .. } => "gauged",
        };
        f.debug_struct("FrameField")
            .field("level", &self.level)
            .field("multiplicity", &self.multiplicity)
            .field("samples", &self.times.len())
            .field("source", &source)
            .field("closure", &self.closure)
            .finish()
    }
}

fn default_fd_step(times: &[f64]) -> f64 {
    5e-4 * (times[times.len() - 1] - times[0])
}

impl FrameField {
    /// Frames known only at the samples; derivatives come from the sample grid.
    pub fn from_samples(level: usize, times: Vec<f64>, frames: Vec<CMatrix>) -> Result<Self> {
        check_time_grid(&times)?;
        if frames.len() != times.len() {
            return Err(Error::Domain("one frame per sample time is required".into()));
        }
        let (dim, l) = (frames[0].nrows(), frames[0].ncols());
        if l == 0 || frames.iter().any(|f| f.nrows() != dim || f.ncols() != l) {
            return Err(Error::Domain("frames must share a nonempty shape".into()));
        }
        if let Some(k) = frames.iter().position(|f| orthonormality_defect(f) > 1e-10) {
            return Err(Error::Structural(format!("frame {k} is not orthonormal")));
        }
        let fd_step = default_fd_step(&times);
        Ok(Self { level, multiplicity: l, times, frames, fd_step, source: FrameSource::Samples, closure: None })
    }

    /// Frames given in closed form. Without a `derivative` the derivative is
    /// taken by fourth-order central differences of `value`.
    pub fn analytic(
        level: usize,
        times: Vec<f64>,
        value: OperatorFn,
        derivative: Option<OperatorFn>,
    ) -> Result<Self> {
        let frames = times.iter().map(|&t| value(t)).collect();
        let mut field = Self::from_samples(level, times, frames)?;
        field.source = FrameSource::Analytic { value, derivative };
        Ok(field)
    }

    /// Overrides the finite-difference step used for off-grid derivatives.
    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    pub fn dim(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[CMatrix] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &CMatrix {
        &self.frames[k]
    }

    pub fn first(&self) -> &CMatrix {
        &self.frames[0]
    }

    pub fn last(&self) -> &CMatrix {
        self.frames.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn closure(&self) -> Option<&ClosureReport> {
        self.closure.as_ref()
    }

    /// Whether frames can be evaluated between samples.
    pub fn is_continuous(&self) -> bool {
        !matches!(self.source, FrameSource::Samples)
    }

    pub fn max_orthonormality_defect(&self) -> f64 {
        self.frames.iter().map(orthonormality_defect).fold(0.0, f64::max)
    }

    /// Smallest singular value over all successive overlaps `F_{k+1}†F_k`.
    pub fn min_overlap(&self) -> f64 {
        self.frames
            .windows(2)
            .flat_map(|w| singular_values(&(w[1].adjoint() * &w[0])))
            .fold(f64::INFINITY, f64::min)
    }

    /// Frame and its time derivative at `t`.
    pub fn jet_at(&self, t: f64) -> Result<(CMatrix, CMatrix)> {
        match &self.source {
            FrameSource::Samples => {
                // Hermite interpolation, differentiated with the same step
                let f = interpolate_matrices(&self.times, &self.frames, t);
                let df = central_difference(
                    |s| Ok(interpolate_matrices(&self.times, &self.frames, s)),
                    t,
                    self.fd_step,
                )?;
                Ok((f, df))
            }
            FrameSource::Transported(tr) => tr.jet(t, self.fd_step),
            FrameSource::Analytic { value, derivative } => {
                let f = value(t);
                let df = match derivative {
                    Some(d) => d(t),
                    None => central_difference(|s| Ok(value(s)), t, self.fd_step)?,
                };
                Ok((f, df))
            }
            FrameSource::Gauged { base, gauge } => {
                let (f, df) = base.jet_at(t)?;
                let v = gauge.value(t);
                let dv = gauge.derivative(t);
                Ok((&f * &v, df * &v + f * dv))
            }
        }
    }

    pub fn frame_at(&self, t: f64) -> Result<CMatrix> {
        match &self.source {
            FrameSource::Samples => Ok(interpolate_matrices(&self.times, &self.frames, t)),
            FrameSource::Transported(tr) => tr.frame_with_reference(t, tr.curve.segment_of(t)),
            FrameSource::Analytic { value, .. } => Ok(value(t)),
            FrameSource::Gauged { base, gauge } => Ok(base.frame_at(t)? * gauge.value(t)),
        }
    }
}

/// Knobs for [`transport_frame_with`].
#[derive(Debug, Clone)]
pub struct TransportOptions {
    /// Eigenvalue clustering threshold; `None` uses [`default_degeneracy_tol`] per sample.
    pub degeneracy_tol: Option<f64>,
    /// `l × l` unitary applied to the first frame before transport.
    pub seed: Option<CMatrix>,
    /// For cyclic curves in the aligned gauge, make the frame field periodic.
    pub close_cycle: bool,
    pub fd_step: Option<f64>,
    pub execution: Execution,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { degeneracy_tol: None, seed: None, close_cycle: true, fd_step: None, execution: Execution::Parallel }
    }
}

pub fn transport_frame(
    family: &OperatorFamily,
    curve: &Curve,
    level: usize,
    gauge: Gauge,
) -> Result<FrameField> {
    transport_frame_with(family, curve, level, gauge, &TransportOptions::default())
}

/// Eigenframes of one level of `family` along `curve`.
///
/// The per-sample eigendecompositions are independent and may run
/// concurrently; the alignment is a sequential scan.
pub fn transport_frame_with(
    family: &OperatorFamily,
    curve: &Curve,
    level: usize,
    gauge: Gauge,
    opts: &TransportOptions,
) -> Result<FrameField> {
    let spectra = exec::try_map(opts.execution, curve.points(), |theta| {
        let h = family.eval(theta)?;
        let tol = opts.degeneracy_tol.unwrap_or_else(|| default_degeneracy_tol(&h));
        eig_hermitian(&h, tol)
    })?;
    let multiplicities = spectra[0].multiplicities();
    if level >= multiplicities.len() {
        return Err(Error::Domain(format!(
            "level {level} requested but the spectrum has {} levels",
            multiplicities.len()
        )));
    }
    let times = curve.times();
    for (k, s) in spectra.iter().enumerate().skip(1) {
        if s.multiplicities() != multiplicities {
            return Err(Error::LevelCrossing(format!(
                "level multiplicities change from {:?} to {:?} between t = {} and t = {}",
                multiplicities,
                s.multiplicities(),
                times[k - 1],
                times[k]
            )));
        }
    }
    let l = multiplicities[level];
    let raw: Vec<CMatrix> = spectra.iter().map(|s| s.levels()[level].frame.clone()).collect();

    let mut first = raw[0].clone();
    if let Some(seed) = &opts.seed {
        if seed.nrows() != l || seed.ncols() != l || unitarity_defect(seed)? > 1e-10 {
            return Err(Error::Structural("transport seed must be an l×l unitary".into()));
        }
        first = first * seed;
    }

    let mut chain = Vec::with_capacity(raw.len());
    chain.push(first);
    for k in 1..raw.len() {
        let previous = chain.last().unwrap();
        let overlap = raw[k].adjoint() * previous;
        let (u, smin) = polar_unitary(&overlap);
        if smin < MIN_OVERLAP {
            return Err(Error::Resolution(format!(
                "successive frames overlap with singular value {smin:.3} < {MIN_OVERLAP} on [{}, {}]",
                times[k - 1],
                times[k]
            )));
        }
        chain.push(match gauge {
            Gauge::Raw => raw[k].clone(),
            Gauge::Aligned => &raw[k] * u,
        });
    }
    if gauge == Gauge::Raw && curve.is_cyclic() {
        let n = chain.len();
        chain[n - 1] = chain[0].clone();
    }

    let fd_step = opts.fd_step.unwrap_or_else(|| default_fd_step(times));
    let transport = Arc::new(Transport {
        family: family.clone(),
        curve: curve.clone(),
        level,
        multiplicities,
        gauge,
        degeneracy_tol: opts.degeneracy_tol,
        chain: chain.clone(),
        jets: Mutex::new(HashMap::new()),
    });
    let base = FrameField {
        level,
        multiplicity: l,
        times: times.to_vec(),
        frames: chain,
        fd_step,
        source: FrameSource::Transported(transport),
        closure: None,
    };

    if !(gauge == Gauge::Aligned && curve.is_cyclic() && opts.close_cycle) {
        return Ok(base);
    }
    let mismatch = base.first().adjoint() * base.last();
    let (closure_unitary, _) = polar_unitary(&mismatch);
    let closure = ClosureGauge {
        generator: unitary_log(&closure_unitary),
        t0: curve.start(),
        t1: curve.end(),
    };
    let n = base.len();
    let mut frames: Vec<CMatrix> =
        base.frames.iter().zip(times).map(|(f, &t)| f * closure.value(t)).collect();
    let report = ClosureReport {
        subspace_mismatch: projector_distance(base.first(), base.last()),
        transport_mismatch: max_abs(&(mismatch - crate::linalg::identity(l))),
        residual: max_abs(&(&frames[n - 1] - &frames[0])),
    };
    frames[n - 1] = frames[0].clone();
    Ok(FrameField {
        level,
        multiplicity: l,
        times: times.to_vec(),
        frames,
        fd_step,
        source: FrameSource::Gauged { base: Box::new(base), gauge: Arc::new(closure) },
        closure: Some(report),
    })
}

/// `F_k → F_k v(t_k)` for a unitary gauge field `v`.
pub fn apply_gauge(frames: &FrameField, v: Arc<dyn GaugeField>) -> Result<FrameField> {
    if v.dim() != frames.multiplicity() {
        return Err(Error::Domain(format!(
            "gauge acts on dimension {}, level has multiplicity {}",
            v.dim(),
            frames.multiplicity()
        )));
    }
    let mut out = Vec::with_capacity(frames.len());
    for (f, &t) in frames.frames().iter().zip(frames.times()) {
        let vt = v.value(t);
        let defect = unitarity_defect(&vt)?;
        if defect > 1e-10 {
            return Err(Error::Structural(format!(
                "gauge is not unitary at t = {t}: defect {defect:e}"
            )));
        }
        out.push(f * vt);
    }
    Ok(FrameField {
        level: frames.level,
        multiplicity: frames.multiplicity,
        times: frames.times.clone(),
        frames: out,
        fd_step: frames.fd_step,
        source: FrameSource::Gauged { base: Box::new(frames.clone()), gauge: v },
        closure: None,
    })
}

/// Connection data of one level: `𝒜(t)`, `ℰ(t)` and `Δ = ℰ − 𝒜` at the
/// samples, plus (when the frames are continuous) the means to evaluate them
/// anywhere.
#[derive(Clone)]
pub struct ConnectionSamples {
    level: usize,
    times: Vec<f64>,
    pub berry: Vec<CMatrix>,
    pub energy: Vec<CMatrix>,
    pub delta: Vec<CMatrix>,
    source: Option<(FrameField, OperatorFn)>,
}

impl fmt::Debug for ConnectionSamples {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionSamples")
            .field("level", &self.level)
            .field("samples", &self.times.len())
            .field("continuous", &self.source.is_some())
            .finish()
    }
}

impl ConnectionSamples {
    /// Connection given only at samples; off-grid values are interpolated.
    pub fn from_samples(level: usize, times: Vec<f64>, berry: Vec<CMatrix>, energy: Vec<CMatrix>) -> Result<Self> {
        check_time_grid(&times)?;
        if berry.len() != times.len() || energy.len() != times.len() {
            return Err(Error::Domain("one connection sample per time is required".into()));
        }
        let berry: Vec<CMatrix> = berry.iter().map(hermitize).collect();
        let energy: Vec<CMatrix> = energy.iter().map(hermitize).collect();
        let delta = energy.iter().zip(&berry).map(|(e, a)| e - a).collect();
        Ok(Self { level, times, berry, energy, delta, source: None })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dim(&self) -> usize {
        self.berry[0].nrows()
    }

    pub fn frames(&self) -> Option<&FrameField> {
        self.source.as_ref().map(|(f, _)| f)
    }

    /// `𝒜(t) = i F†(t) dF/dt`, Hermitized.
    pub fn berry_at(&self, t: f64) -> Result<CMatrix> {
        match &self.source {
            Some((frames, _)) => {
                let (f, df) = frames.jet_at(t)?;
                Ok(hermitize(&((f.adjoint() * df) * c64(0.0, 1.0))))
            }
            None => Ok(hermitize(&interpolate_matrices(&self.times, &self.berry, t))),
        }
    }

    /// `ℰ(t) = F†(t) H(t) F(t)`.
    pub fn energy_at(&self, t: f64) -> Result<CMatrix> {
        match &self.source {
            Some((frames, hamiltonian)) => {
                let f = frames.frame_at(t)?;
                Ok(hermitize(&(f.adjoint() * hamiltonian(t) * f)))
            }
            None => Ok(hermitize(&interpolate_matrices(&self.times, &self.energy, t))),
        }
    }

    pub fn delta_at(&self, t: f64) -> Result<CMatrix> {
        match &self.source {
            Some((frames, hamiltonian)) => {
                let (f, df) = frames.jet_at(t)?;
                let e = f.adjoint() * hamiltonian(t) * &f;
                let a = (f.adjoint() * df) * c64(0.0, 1.0);
                Ok(hermitize(&(e - a)))
            }
            None => Ok(hermitize(&interpolate_matrices(&self.times, &self.delta, t))),
        }
    }
}

/// `𝒜ⁿ, ℰⁿ, Δⁿ` at every sample of `frames`.
///
/// Continuous frame fields are differentiated analytically or with a fine
/// fourth-order stencil; sample-only fields fall back to three-point
/// differences on the grid (one-sided at the ends).
pub fn connection_matrices(frames: &FrameField, hamiltonian: &OperatorFn) -> Result<ConnectionSamples> {
    if frames.len() < 3 {
        return Err(Error::Resolution(format!(
            "connection needs at least 3 samples, got {}",
            frames.len()
        )));
    }
    let dim = frames.dim();
    let h0 = hamiltonian(frames.times()[0]);
    if h0.nrows() != dim || h0.ncols() != dim {
        return Err(Error::Domain(format!(
            "Hamiltonian is {}x{} but frames live in dimension {dim}",
            h0.nrows(),
            h0.ncols()
        )));
    }
    let i = c64(0.0, 1.0);
    let times = frames.times().to_vec();
    let mut berry = Vec::with_capacity(times.len());
    let mut energy = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let f = frames.frame(k);
        let df = if frames.is_continuous() {
            frames.jet_at(t)?.1
        } else {
            derivative_stencil(&times, k)
                .into_iter()
                .fold(CMatrix::zeros(dim, frames.multiplicity()), |acc, (j, w)| {
                    acc + frames.frame(j).scale(w)
                })
        };
        berry.push(hermitize(&((f.adjoint() * df) * i)));
        energy.push(hermitize(&(f.adjoint() * hamiltonian(t) * f)));
    }
    let delta = energy.iter().zip(&berry).map(|(e, a)| e - a).collect();
    let source = frames.is_continuous().then(|| (frames.clone(), Arc::clone(hamiltonian)));
    Ok(ConnectionSamples { level: frames.level(), times, berry, energy, delta, source })
}

/// Largest interior residual `‖dI/dt − i[I, H]‖_max` of the invariant
/// condition, with `dI/dt` from central differences on the curve grid.
pub fn verify_invariant(family: &OperatorFamily, curve: &Curve, hamiltonian: &OperatorFn) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::Resolution("invariant check needs at least 3 samples".into()));
    }
    let invariants: Vec<CMatrix> = curve
        .points()
        .iter()
        .map(|theta| family.eval(theta).map(HermitianMatrix::into_matrix))
        .collect::<Result<_>>()?;
    let times = curve.times();
    let i = c64(0.0, 1.0);
    let mut worst = 0.0_f64;
    for k in 1..times.len() - 1 {
        let h = hamiltonian(times[k]);
        if h.nrows() != family.dim() || h.ncols() != family.dim() {
            return Err(Error::Domain(format!(
                "Hamiltonian is {}x{} but the family has dimension {}",
                h.nrows(),
                h.ncols(),
                family.dim()
            )));
        }
        let di = derivative_stencil(times, k)
            .into_iter()
            .fold(CMatrix::zeros(family.dim(), family.dim()), |acc, (j, w)| {
                acc + invariants[j].scale(w)
            });
        let rhs = (&invariants[k] * &h - &h * &invariants[k]) * i;
        worst = worst.max(max_abs(&(di - rhs)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, tests::random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circle(steps: usize, cyclic: bool) -> Curve {
        let tf = if cyclic { std::f64::consts::TAU } else { 2.0 };
        Curve::uniform(0.0, tf, steps, Arc::new(|t: f64| vec![t.cos(), t.sin(), 0.3]), cyclic).unwrap()
    }

    fn random_linear_family(seed: u64) -> OperatorFamily {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        OperatorFamily::linear((0..3).map(|_| random_hermitian(4, &mut rng)).collect()).unwrap()
    }

    #[test]
    fn curve_validation() {
        assert!(Curve::new(vec![0.0, 0.0], vec![vec![1.0], vec![1.0]], false).is_err());
        assert!(Curve::new(vec![0.0, 1.0], vec![vec![1.0], vec![1.0, 2.0]], false).is_err());
        assert!(Curve::new(vec![0.0, 1.0], vec![vec![1.0], vec![2.0]], true).is_err());
        assert!(Curve::new(vec![0.0, 1.0], vec![vec![1.0], vec![1.0]], true).is_ok());
    }

    #[test]
    fn interpolated_points_are_third_order_accurate() {
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let points = times.iter().map(|&t: &f64| vec![t.sin()]).collect();
        let curve = Curve::new(times, points, false).unwrap();
        for t in [0.013, 0.51, 1.337, 1.99] {
            assert!((curve.point_at(t)[0] - f64::sin(t)).abs() < 1e-5, "{t}");
        }
    }

    #[test]
    fn constant_family_aligned_frames_are_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let family = OperatorFamily::constant(random_hermitian(3, &mut rng));
        let frames = transport_frame(&family, &circle(30, false), 1, Gauge::Aligned).unwrap();
        for f in frames.frames() {
            assert!(max_abs(&(f - frames.first())) < 1e-13);
        }
        let h = family.along(&circle(30, false));
        let conn = connection_matrices(&frames, &h).unwrap();
        for (a, e) in conn.berry.iter().zip(&conn.energy) {
            assert!(max_abs(a) < 1e-12);
            assert!((e[(0, 0)].re - family.eval(&[]).unwrap()[(0, 0)].re).abs() < 10.0);
        }
        assert!(conn.berry.iter().zip(&conn.delta).zip(&conn.energy).all(|((a, d), e)| max_abs(&(e - a - d)) == 0.0));
    }

    #[test]
    fn aligned_overlaps_have_positive_hermitian_part() {
        let family = random_linear_family(21);
        let frames = transport_frame(&family, &circle(200, false), 1, Gauge::Aligned).unwrap();
        for w in frames.frames().windows(2) {
            let overlap = w[1].adjoint() * &w[0];
            let s = eig_hermitian(&HermitianMatrix::hermitized(&overlap).unwrap(), 1e-12).unwrap();
            assert!(s.levels().iter().all(|l| l.eigenvalue > 0.0));
        }
        assert!(frames.max_orthonormality_defect() < 1e-12);
    }

    #[test]
    fn constant_seed_commutes_with_transport() {
        let family = random_linear_family(4);
        let crv = circle(120, false);
        let base = transport_frame(&family, &crv, 0, Gauge::Aligned).unwrap();
        let l = base.multiplicity();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let h = random_hermitian(l, &mut rng);
        let v = expm_skew_raw(&h, 1.0);
        let opts = TransportOptions { seed: Some(v.clone()), ..Default::default() };
        let seeded = transport_frame_with(&family, &crv, 0, Gauge::Aligned, &opts).unwrap();
        for (a, b) in base.frames().iter().zip(seeded.frames()) {
            assert!(max_abs(&(a * &v - b)) < 1e-12);
        }
    }

    #[test]
    fn level_crossing_is_rejected() {
        let family = OperatorFamily::new(
            2,
            Arc::new(|theta: &[f64]| {
                CMatrix::from_row_slice(2, 2, &[c64(theta[0], 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(-theta[0], 0.0)])
            }),
        );
        let curve = Curve::uniform(-1.0, 1.0, 20, Arc::new(|t: f64| vec![t]), false).unwrap();
        assert!(matches!(
            transport_frame(&family, &curve, 0, Gauge::Aligned),
            Err(Error::LevelCrossing(_))
        ));
    }

    #[test]
    fn under_resolved_curve_is_rejected() {
        let family = random_linear_family(8);
        let curve = Curve::uniform(0.0, 60.0, 6, Arc::new(|t: f64| vec![(3.0 * t).cos(), (5.0 * t).sin(), t.cos()]), false).unwrap();
        let err = transport_frame(&family, &curve, 0, Gauge::Aligned);
        assert!(matches!(err, Err(Error::Resolution(_)) | Err(Error::LevelCrossing(_))), "{err:?}");
    }

    #[test]
    fn cyclic_raw_frames_close_exactly() {
        let family = random_linear_family(5);
        let frames = transport_frame(&family, &circle(100, true), 0, Gauge::Raw).unwrap();
        assert_eq!(frames.first(), frames.last());
    }

    #[test]
    fn cyclic_aligned_frames_are_made_periodic() {
        let family = random_linear_family(6);
        let frames = transport_frame(&family, &circle(300, true), 1, Gauge::Aligned).unwrap();
        let report = frames.closure().copied().unwrap();
        assert!(report.subspace_mismatch < 1e-10);
        assert!(report.residual < 1e-10);
        assert_eq!(frames.first(), frames.last());
        assert!(frames.min_overlap() > 0.9);
    }

    #[test]
    fn constant_gauge_conjugates_connection() {
        let family = random_linear_family(12);
        let crv = circle(200, false);
        let frames = transport_frame(&family, &crv, 1, Gauge::Aligned).unwrap();
        let l = frames.multiplicity();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let v = expm_skew_raw(&random_hermitian(l, &mut rng), 1.0);
        let gauged = apply_gauge(&frames, Arc::new(ConstantGauge(v.clone()))).unwrap();
        let h = family.along(&crv);
        let a = connection_matrices(&frames, &h).unwrap();
        let b = connection_matrices(&gauged, &h).unwrap();
        for (x, y) in a.berry.iter().zip(&b.berry) {
            assert!(max_abs(&(v.adjoint() * x * &v - y)) < 1e-10);
        }
    }

    #[test]
    fn smooth_gauge_transforms_connection_inhomogeneously() {
        let family = random_linear_family(17);
        let crv = circle(200, false);
        let frames = transport_frame(&family, &crv, 1, Gauge::Aligned).unwrap();
        let l = frames.multiplicity();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let k1 = random_hermitian(l, &mut rng).into_matrix();
        let k2 = random_hermitian(l, &mut rng).into_matrix();
        let v: OperatorFn = Arc::new(move |t: f64| expm_skew_raw(&(&k1 * c64(t.sin(), 0.0) + &k2 * c64(0.5 * t * t, 0.0)), -1.0));
        let gauge = FnGauge { dim: l, value: Arc::clone(&v), fd_step: 1e-3 };
        let gauged = apply_gauge(&frames, Arc::new(gauge.clone())).unwrap();
        let h = family.along(&crv);
        let a = connection_matrices(&frames, &h).unwrap();
        let b = connection_matrices(&gauged, &h).unwrap();
        let i = c64(0.0, 1.0);
        for (k, &t) in crv.times().iter().enumerate() {
            let vt = v(t);
            let expected = vt.adjoint() * &a.berry[k] * &vt + (vt.adjoint() * gauge.derivative(t)) * i;
            assert!(max_abs(&(expected - &b.berry[k])) < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn non_unitary_gauge_is_rejected() {
        let family = random_linear_family(2);
        let frames = transport_frame(&family, &circle(50, false), 0, Gauge::Aligned).unwrap();
        let l = frames.multiplicity();
        let err = apply_gauge(&frames, Arc::new(ConstantGauge(identity(l).scale(2.0))));
        assert!(matches!(err, Err(Error::Structural(_))));
    }

    #[test]
    fn sampled_frames_match_continuous_connection() {
        let family = random_linear_family(30);
        let crv = circle(800, false);
        let frames = transport_frame(&family, &crv, 0, Gauge::Aligned).unwrap();
        let sampled = FrameField::from_samples(0, frames.times().to_vec(), frames.frames().to_vec()).unwrap();
        let h = family.along(&crv);
        let a = connection_matrices(&frames, &h).unwrap();
        let b = connection_matrices(&sampled, &h).unwrap();
        // aligned frames carry no connection at the knots, on either route
        for (x, y) in a.berry.iter().zip(&b.berry).skip(1).take(798) {
            assert!(max_abs(x) < 1e-9 && max_abs(y) < 1e-3);
        }
    }

    #[test]
    fn invariant_residual_of_static_hamiltonian_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_hermitian(3, &mut rng);
        let family = OperatorFamily::constant(h.clone());
        let crv = circle(10, false);
        let inner = h.into_matrix();
        let ham: OperatorFn = Arc::new(move |_| inner.clone());
        assert!(verify_invariant(&family, &crv, &ham).unwrap() < 1e-14);
        let wrong: OperatorFn = Arc::new(|_| identity(2));
        assert!(matches!(verify_invariant(&family, &crv, &wrong), Err(Error::Domain(_))));
    }

    #[test]
    fn too_few_samples_for_connection() {
        let family = random_linear_family(1);
        let short = Curve::uniform(0.0, 0.01, 1, Arc::new(|t: f64| vec![t.cos(), t.sin(), 0.3]), false).unwrap();
        let frames = transport_frame(&family, &short, 0, Gauge::Aligned).unwrap();
        let h = family.along(&short);
        assert!(matches!(connection_matrices(&frames, &h), Err(Error::Resolution(_))));
    }

    #[test]
    fn generators_must_agree_with_evaluator() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gens: Vec<HermitianMatrix> = (0..2).map(|_| random_hermitian(2, &mut rng)).collect();
        let linear = OperatorFamily::linear(gens.clone()).unwrap();
        let probes = vec![vec![0.3, -1.2], vec![2.0, 0.1]];
        let f = OperatorFamily::new(2, Arc::new(move |th: &[f64]| linear.eval(th).unwrap().into_matrix()));
        assert!(f.clone().with_generators(gens.clone(), &probes).is_ok());
        let swapped = vec![gens[1].clone(), gens[0].clone()];
        assert!(f.with_generators(swapped, &probes).is_err());
    }
}
