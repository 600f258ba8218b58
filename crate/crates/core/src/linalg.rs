//! Dense complex linear algebra at small sizes.
//!
//! Everything here works on `DMatrix<Complex64>`. The newtypes
//! [`HermitianMatrix`] and [`UnitaryMatrix`] only exist to carry a checked
//! structural invariant across API boundaries; they deref to the raw matrix.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default relative tolerance for `‖M − M†‖_max / ‖M‖_max`.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Default tolerance for `‖U†U − 1‖_max`.
pub const UNITARITY_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `(M + M†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Relative Hermiticity defect `‖M − M†‖_max / ‖M‖_max` (zero for the zero matrix).
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    max_abs(&(m - m.adjoint())) / scale
}

/// `‖U†U − 1‖_max`; zero iff `U` is exactly unitary.
pub fn unitarity_defect(u: &CMatrix) -> Result<f64> {
    if !u.is_square() {
        return Err(Error::Domain(format!(
            "unitarity defect needs a square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    Ok(max_abs(&(u.adjoint() * u - identity(u.nrows()))))
}

/// Orthonormality defect of the columns of a frame, `‖F†F − 1‖_max`.
pub fn orthonormality_defect(frame: &CMatrix) -> f64 {
    max_abs(&(frame.adjoint() * frame - identity(frame.ncols())))
}

pub fn projector(frame: &CMatrix) -> CMatrix {
    frame * frame.adjoint()
}

/// Distance between the column spaces of two frames, measured on projectors.
pub fn projector_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(projector(a) - projector(b)))
}

fn check_entries(m: &CMatrix) -> Result<()> {
    if m.nrows() * m.ncols() == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// A square complex matrix that was Hermitian within tolerance when built.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITICITY_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        check_entries(&m)?;
        if !m.is_square() {
            return Err(Error::Structural(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = hermiticity_defect(&m);
        if defect > tol {
            return Err(Error::Structural(format!(
                "matrix is not Hermitian: relative defect {defect:e} exceeds {tol:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Projects onto the Hermitian part; for matrices that are Hermitian up to
    /// finite-difference or rounding noise.
    pub fn hermitized(m: &CMatrix) -> Result<Self> {
        check_entries(m)?;
        if !m.is_square() {
            return Err(Error::Structural(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(hermitize(m)))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(identity(n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(CMatrix::from_fn(n, n, |i, j| if i == j { c64(d[i], 0.0) } else { C64::default() }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl Deref for HermitianMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// A square complex matrix that was unitary within tolerance when built.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, UNITARITY_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        check_entries(&m)?;
        let defect = unitarity_defect(&m).map_err(|e| match e {
            Error::Domain(msg) => Error::Structural(msg),
            other => other,
        })?;
        if defect > tol {
            return Err(Error::Structural(format!(
                "matrix is not unitary: defect {defect:e} exceeds {tol:e}"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(n: usize) -> Self {
        Self(identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl Deref for UnitaryMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// One eigenvalue cluster: the eigenvalue and an orthonormal frame of its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub eigenvalue: f64,
    /// `dim × multiplicity`, orthonormal columns.
    pub frame: CMatrix,
}

impl Level {
    pub fn multiplicity(&self) -> usize {
        self.frame.ncols()
    }
}

/// Eigenvalues clustered into levels, in strictly increasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    dim: usize,
    levels: Vec<Level>,
}

impl Spectrum {
    /// Assembles a spectrum from explicit levels, checking dimensions and orthonormality.
    pub fn from_levels(levels: Vec<Level>) -> Result<Self> {
        let dim = levels
            .first()
            .map(|l| l.frame.nrows())
            .ok_or_else(|| Error::Domain("spectrum needs at least one level".into()))?;
        let total: usize = levels.iter().map(Level::multiplicity).sum();
        if total != dim || levels.iter().any(|l| l.frame.nrows() != dim) {
            return Err(Error::Domain(format!(
                "levels cover {total} of {dim} dimensions"
            )));
        }
        if levels.windows(2).any(|w| w[1].eigenvalue <= w[0].eigenvalue) {
            return Err(Error::Domain("level eigenvalues must increase strictly".into()));
        }
        let spectrum = Self { dim, levels };
        let defect = orthonormality_defect(&spectrum.full_frame());
        if defect > 1e-10 {
            return Err(Error::Structural(format!(
                "level frames are not mutually orthonormal (defect {defect:e})"
            )));
        }
        Ok(spectrum)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> Option<&Level> {
        self.levels.get(n)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.levels.iter().map(Level::multiplicity).collect()
    }

    /// All level frames side by side, `dim × dim`.
    pub fn full_frame(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let mut col = 0;
        for level in &self.levels {
            let l = level.multiplicity();
            out.columns_mut(col, l).copy_from(&level.frame);
            col += l;
        }
        out
    }

    /// `Σ λₙ Fₙ Fₙ†`.
    pub fn reconstruct(&self) -> CMatrix {
        self.levels.iter().fold(CMatrix::zeros(self.dim, self.dim), |acc, l| {
            acc + projector(&l.frame).scale(l.eigenvalue)
        })
    }

    /// `‖Σ Fₙ Fₙ† − 1‖_max`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self
            .levels
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, l| acc + projector(&l.frame));
        max_abs(&(sum - identity(self.dim)))
    }
}

/// Clustering threshold used when callers do not supply one: `1e-8·max|λ|`,
/// floored so the zero matrix still clusters.
pub fn default_degeneracy_tol(m: &HermitianMatrix) -> f64 {
    (1e-8 * max_abs(m)).max(1e-14)
}

/// Rotates a column so its largest entry is real and positive.
fn fix_column_phase(frame: &mut CMatrix, col: usize) {
    let column = frame.column(col);
    let max = column.iter().fold(0.0_f64, |a, z| a.max(z.norm()));
    if max == 0.0 {
        return;
    }
    // first entry within a hair of the max, so ties resolve by index
    let pivot = column
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let z = column[pivot];
    let phase = z.conj() / z.norm();
    for v in frame.column_mut(col).iter_mut() {
        *v *= phase;
    }
}

/// Hermitian eigendecomposition with eigenvalues closer than `degeneracy_tol`
/// merged into a single level.
///
/// The basis inside a degenerate level is whatever the solver produced; only
/// its span is meaningful. Nondegenerate eigenvectors get a canonical phase
/// (largest entry real positive) so repeated calls are reproducible.
pub fn eig_hermitian(m: &HermitianMatrix, degeneracy_tol: f64) -> Result<Spectrum> {
    if !(degeneracy_tol > 0.0) {
        return Err(Error::Domain(format!(
            "degeneracy tolerance must be positive, got {degeneracy_tol}"
        )));
    }
    let n = m.dim();
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        let value = eig.eigenvalues[idx];
        match clusters.last_mut() {
            Some(cluster)
                if value - eig.eigenvalues[*cluster.last().unwrap()] <= degeneracy_tol =>
            {
                cluster.push(idx)
            }
            _ => clusters.push(vec![idx]),
        }
    }

    let levels = clusters
        .into_iter()
        .map(|cluster| {
            let eigenvalue =
                cluster.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / cluster.len() as f64;
            let mut frame = CMatrix::zeros(n, cluster.len());
            for (col, &i) in cluster.iter().enumerate() {
                frame.set_column(col, &eig.eigenvectors.column(i));
            }
            if cluster.len() == 1 {
                fix_column_phase(&mut frame, 0);
            }
            Level { eigenvalue, frame }
        })
        .collect();
    Ok(Spectrum { dim: n, levels })
}

/// `exp(−i·s·H)`.
pub fn expm_skew(h: &HermitianMatrix, s: f64) -> UnitaryMatrix {
    UnitaryMatrix(expm_skew_raw(h, s))
}

/// `exp(−i·s·H)` on a matrix the caller already knows to be Hermitian.
pub(crate) fn expm_skew_raw(h: &CMatrix, s: f64) -> CMatrix {
    match h.nrows() {
        1 => CMatrix::from_element(1, 1, C64::from_polar(1.0, -s * h[(0, 0)].re)),
        2 => expm_skew_2x2(h, s),
        n => {
            let eig = hermitize(h).symmetric_eigen();
            let v = &eig.eigenvectors;
            let phases = CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    C64::from_polar(1.0, -s * eig.eigenvalues[i])
                } else {
                    C64::default()
                }
            });
            v * phases * v.adjoint()
        }
    }
}

/// Closed form for `H = a₀ + a·σ`: `e^{−isa₀}(cos(s|a|) − i sin(s|a|) â·σ)`.
fn expm_skew_2x2(h: &CMatrix, s: f64) -> CMatrix {
    let a0 = 0.5 * (h[(0, 0)].re + h[(1, 1)].re);
    let a3 = 0.5 * (h[(0, 0)].re - h[(1, 1)].re);
    let off = 0.5 * (h[(0, 1)] + h[(1, 0)].conj());
    let (a1, a2) = (off.re, -off.im);
    let norm = (a1 * a1 + a2 * a2 + a3 * a3).sqrt();
    let angle = s * norm;
    let (sin, cos) = angle.sin_cos();
    // sin(s|a|)/|a| written to stay finite as |a| → 0
    let k = if norm > 1e-300 { sin / norm } else { s };
    let global = C64::from_polar(1.0, -s * a0);
    let i = c64(0.0, 1.0);
    let m00 = c64(cos, 0.0) - i * k * a3;
    let m11 = c64(cos, 0.0) + i * k * a3;
    let m01 = -i * k * c64(a1, -a2);
    let m10 = -i * k * c64(a1, a2);
    CMatrix::from_row_slice(2, 2, &[m00 * global, m01 * global, m10 * global, m11 * global])
}

/// Singular values of a square matrix, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Unitary factor `W V†` of the polar decomposition of `M = W Σ V†`, together
/// with the smallest singular value.
pub fn polar_unitary(m: &CMatrix) -> (CMatrix, f64) {
    if m.nrows() == 1 && m.ncols() == 1 {
        let z = m[(0, 0)];
        let r = z.norm();
        let u = if r > 0.0 { z / r } else { c64(1.0, 0.0) };
        return (CMatrix::from_element(1, 1, u), r);
    }
    let svd = m.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let u = svd.u.expect("svd computed with u");
    let v_t = svd.v_t.expect("svd computed with v_t");
    (u * v_t, smin)
}

/// Orders complex eigenvalues by descending modulus, then ascending argument.
pub fn sort_eigenvalues(values: &mut [C64]) {
    values.sort_by(|a, b| {
        let ka = (a.norm() * 1e10).round();
        let kb = (b.norm() * 1e10).round();
        kb.total_cmp(&ka).then(a.arg().total_cmp(&b.arg()))
    });
}

/// Eigenvalues of a general (not necessarily normal) complex square matrix.
pub fn general_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Domain("eigenvalues need a nonempty square matrix".into()));
    }
    let mut values = match m.nrows() {
        1 => vec![m[(0, 0)]],
        2 => {
            let half_tr = (m[(0, 0)] + m[(1, 1)]) * 0.5;
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (half_tr * half_tr - det).sqrt();
            // larger root first avoids cancellation, the other one from the determinant
            let big = if (half_tr + disc).norm() >= (half_tr - disc).norm() {
                half_tr + disc
            } else {
                half_tr - disc
            };
            let small = if big.norm() > 0.0 { det / big } else { C64::default() };
            vec![big, small]
        }
        _ => m
            .clone()
            .schur()
            .eigenvalues()
            .ok_or_else(|| Error::Structural("Schur form did not triangularize".into()))?
            .iter()
            .copied()
            .collect(),
    };
    sort_eigenvalues(&mut values);
    Ok(values)
}

/// Eigen-decomposition `U = Q diag(λ) Q†` of a unitary matrix, Q unitary.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<C64>, CMatrix) {
    let n = u.nrows();
    if n == 1 {
        return (vec![u[(0, 0)]], identity(1));
    }
    let (q, t) = u.clone().schur().unpack();
    let values = (0..n).map(|i| t[(i, i)]).collect();
    (values, q)
}

/// Hermitian `K` with `U = exp(iK)`, eigenphases of `U` taken in `(−π, π]`.
pub fn unitary_log(u: &CMatrix) -> CMatrix {
    let (values, q) = unitary_eigen(u);
    let n = values.len();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c64(crate::phase::wrap_angle(values[i].arg()), 0.0)
        } else {
            C64::default()
        }
    });
    hermitize(&(&q * d * q.adjoint()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(n: usize, rng: &mut impl Rng) -> HermitianMatrix {
        let m = CMatrix::from_fn(n, n, |_, _| {
            c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianMatrix::hermitized(&m).unwrap()
    }

    /// Scaling-and-squaring Taylor series, used only as an independent oracle.
    fn taylor_expm(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let norm = max_abs(a) * n as f64;
        let squarings = if norm > 0.1 { (norm / 0.1).log2().ceil() as u32 } else { 0 };
        let scaled = a.scale(1.0 / 2f64.powi(squarings as i32));
        let mut term = identity(n);
        let mut sum = identity(n);
        for k in 1..30 {
            term = &term * &scaled / c64(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn identity_is_single_triple_level() {
        let spectrum = eig_hermitian(&HermitianMatrix::identity(3), 1e-8).unwrap();
        assert_eq!(spectrum.len(), 1);
        assert_eq!(spectrum.levels()[0].multiplicity(), 3);
        assert!((spectrum.levels()[0].eigenvalue - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_hermitian(4, &mut rng);
            let s = eig_hermitian(&m, default_degeneracy_tol(&m)).unwrap();
            let residual = max_abs(&(s.reconstruct() - m.as_matrix()));
            assert!(residual <= 1e-10 * max_abs(&m), "{residual}");
            assert!(s.completeness_defect() < 1e-10);
            assert_eq!(s.multiplicities().iter().sum::<usize>(), 4);
        }
    }

    #[test]
    fn degenerate_eigenvalues_are_merged() {
        let d = HermitianMatrix::from_real_diagonal(&[2.0, -1.0, 2.0 + 1e-12, 5.0]);
        let s = eig_hermitian(&d, 1e-8).unwrap();
        assert_eq!(s.multiplicities(), vec![1, 2, 1]);
        assert!((s.levels()[1].eigenvalue - 2.0).abs() < 1e-11);
    }

    #[test]
    fn eig_is_bitwise_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_hermitian(5, &mut rng);
        let a = eig_hermitian(&m, 1e-8).unwrap();
        let b = eig_hermitian(&m, 1e-8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_hermitian_and_empty_inputs_are_rejected() {
        let m = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::Structural(_))));
        assert!(matches!(HermitianMatrix::new(CMatrix::zeros(0, 0)), Err(Error::Domain(_))));
        assert!(matches!(
            eig_hermitian(&HermitianMatrix::identity(2), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_skew(&HermitianMatrix::zeros(3), 1.7);
        assert!(max_abs(&(u.as_matrix() - identity(3))) == 0.0);
    }

    #[test]
    fn expm_of_sigma_z() {
        let h = HermitianMatrix::from_real_diagonal(&[1.0, -1.0]);
        let u = expm_skew(&h, std::f64::consts::FRAC_PI_2);
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[c64(0.0, -1.0), C64::default(), C64::default(), c64(0.0, 1.0)],
        );
        assert!(max_abs(&(u.as_matrix() - expected)) < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 4] {
            let h = random_hermitian(n, &mut rng);
            let u = expm_skew(&h, 0.3);
            let oracle = taylor_expm(&(h.as_matrix() * c64(0.0, -0.3)));
            assert!(max_abs(&(u.as_matrix() - oracle)) < 1e-12, "n = {n}");
            assert!(unitarity_defect(&u).unwrap() < 1e-13);
        }
    }

    #[test]
    fn expm_group_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 3] {
            let h = random_hermitian(n, &mut rng);
            let lhs = expm_skew(&h, 0.4).into_matrix() * expm_skew(&h, -1.1).into_matrix();
            let rhs = expm_skew(&h, -0.7).into_matrix();
            assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }
    }

    #[test]
    fn unitarity_defect_values() {
        assert_eq!(unitarity_defect(&identity(3)).unwrap(), 0.0);
        assert!((unitarity_defect(&identity(3).scale(2.0)).unwrap() - 3.0).abs() < 1e-15);
        assert!(matches!(unitarity_defect(&CMatrix::zeros(2, 3)), Err(Error::Domain(_))));
    }

    #[test]
    fn polar_factor_is_unitary_and_hermitian_positive_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = CMatrix::from_fn(3, 3, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let (u, smin) = polar_unitary(&m);
        assert!(smin > 0.0);
        assert!(unitarity_defect(&u).unwrap() < 1e-13);
        let p = u.adjoint() * &m;
        assert!(hermiticity_defect(&p) < 1e-12);
        let s = eig_hermitian(&HermitianMatrix::hermitized(&p).unwrap(), 1e-12).unwrap();
        assert!(s.levels().iter().all(|l| l.eigenvalue > 0.0));
    }

    #[test]
    fn general_eigenvalues_of_triangular_matrix() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c64(0.5, 0.5), c64(3.0, 0.0), c64(1.0, 1.0),
                C64::default(), c64(-2.0, 0.0), c64(0.0, 4.0),
                C64::default(), C64::default(), c64(0.0, 1.0),
            ],
        );
        let values = general_eigenvalues(&m).unwrap();
        assert!((values[0] - c64(-2.0, 0.0)).norm() < 1e-12);
        assert!((values[1] - c64(0.0, 1.0)).norm() < 1e-12);
        assert!((values[2] - c64(0.5, 0.5)).norm() < 1e-12);
        let two = m.view((0, 0), (2, 2)).into_owned();
        let v2 = general_eigenvalues(&two).unwrap();
        assert!((v2[0] - c64(-2.0, 0.0)).norm() < 1e-12 && (v2[1] - c64(0.5, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn unitary_log_inverts_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = random_hermitian(3, &mut rng);
        let u = expm_skew(&h, -0.5);
        let k = unitary_log(&u);
        let back = expm_skew_raw(&k, -1.0);
        assert!(max_abs(&(back - u.as_matrix())) < 1e-12);
    }
}
