//! Noncyclic geometric phase factors `Γ̌ = wΓ`, their traces, and the
//! Abelian phase angle with its visibility.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, general_eigenvalues, max_abs, orthonormality_defect, singular_values, unitarity_defect,
    unitary_eigen, CMatrix, C64, UNITARITY_TOL,
};

/// Visibility below which the noncyclic phase angle is reported as undefined.
pub const VISIBILITY_FLOOR: f64 = 1e-12;

/// Maps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Nearest-branch continuation of a sequence of wrapped angles.
pub fn unwrap_phases(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut prev: Option<f64> = None;
    for &a in angles {
        let next = match prev {
            None => a,
            Some(p) => p + wrap_angle(a - p),
        };
        out.push(next);
        prev = Some(next);
    }
    out
}

/// `w_{ba} = ⟨λ_b; θ(0) | λ_a; θ(t)⟩`, i.e. `w = F(0)† F(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapMatrix {
    pub level: usize,
    pub matrix: CMatrix,
}

impl OverlapMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest singular value; at most one for orthonormal frames.
    pub fn norm(&self) -> f64 {
        singular_values(&self.matrix).first().copied().unwrap_or(0.0)
    }
}

pub fn overlap_matrix(level: usize, frame_start: &CMatrix, frame_end: &CMatrix) -> Result<OverlapMatrix> {
    if frame_start.shape() != frame_end.shape() {
        return Err(Error::Domain(format!(
            "frames have shapes {:?} and {:?}",
            frame_start.shape(),
            frame_end.shape()
        )));
    }
    for f in [frame_start, frame_end] {
        if orthonormality_defect(f) > 1e-10 {
            return Err(Error::Structural("overlap frames must have orthonormal columns".into()));
        }
    }
    Ok(OverlapMatrix { level, matrix: frame_start.adjoint() * frame_end })
}

/// Abelian specialization of a [`PhaseReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbelianPhase {
    /// `|w|`, equal to `|Γ̌|`.
    pub visibility: f64,
    /// `γ̌ = arg(wΓ)` in `(−π, π]`.
    pub total: f64,
    /// `η = arg w`.
    pub eta: f64,
    /// `γ = arg Γ`.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub level: usize,
    pub gamma: CMatrix,
    pub w: OverlapMatrix,
    /// `Γ̌ = wΓ`.
    pub noncyclic: CMatrix,
    /// `Π = tr Γ̌`.
    pub trace: C64,
    /// Eigenvalues of `Γ̌`, by descending modulus then ascending argument.
    pub eigenvalues: Vec<C64>,
    /// Present for nondegenerate levels whose visibility exceeds the floor.
    pub abelian: Option<AbelianPhase>,
    /// `δ = −∫ tr ℰ / l dt`, when the caller knows the level energies.
    pub dynamical_phase: Option<f64>,
}

impl PhaseReport {
    pub fn eigenphases(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.arg()).collect()
    }
}

pub fn noncyclic_phase(w: &OverlapMatrix, gamma: &CMatrix) -> Result<PhaseReport> {
    if gamma.nrows() != w.dim() || gamma.ncols() != w.dim() {
        return Err(Error::Domain(format!(
            "w is {n}x{n} but Γ is {}x{}",
            gamma.nrows(),
            gamma.ncols(),
            n = w.dim()
        )));
    }
    if unitarity_defect(gamma)? > UNITARITY_TOL {
        return Err(Error::Structural("holonomy is not unitary".into()));
    }
    let noncyclic = &w.matrix * gamma;
    let trace = noncyclic.trace();
    let eigenvalues = general_eigenvalues(&noncyclic)?;
    let abelian = if w.dim() == 1 { abelian_phase(w.matrix[(0, 0)], gamma[(0, 0)]).ok() } else { None };
    Ok(PhaseReport {
        level: w.level,
        gamma: gamma.clone(),
        w: w.clone(),
        noncyclic,
        trace,
        eigenvalues,
        abelian,
        dynamical_phase: None,
    })
}

/// `γ̌ = arg(wΓ)` and the visibility `|w|` for a nondegenerate level.
pub fn abelian_phase(w: C64, gamma: C64) -> Result<AbelianPhase> {
    abelian_phase_with_floor(w, gamma, VISIBILITY_FLOOR)
}

pub fn abelian_phase_with_floor(w: C64, gamma: C64, floor: f64) -> Result<AbelianPhase> {
    if (gamma.norm() - 1.0).abs() > UNITARITY_TOL {
        return Err(Error::Structural(format!("|Γ| = {} is not unimodular", gamma.norm())));
    }
    let visibility = w.norm();
    if !(visibility > floor) {
        return Err(Error::UndefinedPhase { visibility, floor });
    }
    Ok(AbelianPhase {
        visibility,
        total: wrap_angle((w * gamma).arg()),
        eta: wrap_angle(w.arg()),
        gamma: wrap_angle(gamma.arg()),
    })
}

/// One term of `Π = Σₐ e^{iγᵃ} weightₐ` in the basis that diagonalizes Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalTerm {
    pub eigenphase: f64,
    /// `⟨λ_a; θ(t) | λ_a; θ(0)⟩⋆` in the diagonalizing basis.
    pub weight: C64,
}

/// Splits `Π` over the eigenbasis of `Γ`. Returns the terms and the
/// reconstruction residual `|Σₐ e^{iγᵃ} weightₐ − Π|`.
pub fn diagonal_decomposition(report: &PhaseReport) -> Result<(Vec<DiagonalTerm>, f64)> {
    let (values, q) = unitary_eigen(&report.gamma);
    let rotated = q.adjoint() * &report.w.matrix * &q;
    let terms: Vec<DiagonalTerm> = values
        .iter()
        .enumerate()
        .map(|(a, z)| DiagonalTerm { eigenphase: wrap_angle(z.arg()), weight: rotated[(a, a)] })
        .collect();
    let sum: C64 = terms.iter().map(|t| C64::from_polar(1.0, t.eigenphase) * t.weight).sum();
    Ok((terms, (sum - report.trace).norm()))
}

/// `Γ̌` expressed from raw frames and a holonomy matrix.
pub fn phase_from_frames(level: usize, frame_start: &CMatrix, frame_end: &CMatrix, gamma: &CMatrix) -> Result<PhaseReport> {
    noncyclic_phase(&overlap_matrix(level, frame_start, frame_end)?, gamma)
}

/// `max |A − B|` helper for comparing reports.
pub fn report_gap(a: &PhaseReport, b: &PhaseReport) -> f64 {
    max_abs(&(&a.noncyclic - &b.noncyclic))
}

/// `e^{iφ}` as a 1×1 matrix.
pub fn phase_matrix(phi: f64) -> CMatrix {
    CMatrix::from_element(1, 1, c64(phi.cos(), phi.sin()))
}
