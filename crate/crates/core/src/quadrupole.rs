//! Spin-1 quadrupole `H = λ(J·R)²` in a precessing field: closed-form
//! spectrum, eigenframes, connection coefficients and phase factors.
//!
//! Two connections appear here. [`frame_connection`] is the connection of the
//! level-2 frame returned by [`eigenframe`], and is what the numerical
//! pipeline reproduces. [`closed_form_generator`], [`gamma2_closed`] and
//! [`pi2_closed`] are the classical closed forms built on the `μ, ν, σ`
//! coefficients; they are kept as an independent oracle for the propagators.
//! Both are functions of `c = cos θ` only.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use crate::curve::{Curve, FamilyFn, OperatorFamily, OperatorFn, PathFn};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, expm_skew_raw, max_abs, CMatrix, HermitianMatrix, Level, Spectrum, C64,
};

/// Polar angle of the field in Tycko's experiment, `cos θ = 1/√3`.
pub fn tycko_theta() -> f64 {
    (1.0 / 3f64.sqrt()).acos()
}

fn cis(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

/// Field point in cylindrical coordinates with `ζ = z/ρ`, plus the coupling λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPoint {
    pub lambda: f64,
    pub rho: f64,
    pub phi: f64,
    pub zeta: f64,
}

impl FieldPoint {
    pub fn new(lambda: f64, rho: f64, phi: f64, zeta: f64) -> Result<Self> {
        let p = Self { lambda, rho, phi, zeta };
        p.check()?;
        Ok(p)
    }

    /// From spherical `(r, θ, φ)`.
    pub fn spherical(lambda: f64, r: f64, theta: f64, phi: f64) -> Result<Self> {
        check_theta(theta)?;
        Self::new(lambda, r * theta.sin(), phi, 1.0 / theta.tan())
    }

    fn check(&self) -> Result<()> {
        if ![self.lambda, self.rho, self.phi, self.zeta].iter().all(|x| x.is_finite()) {
            return Err(Error::Domain(format!("non-finite field point {self:?}")));
        }
        if !(self.rho > 0.0) {
            return Err(Error::AxisSingularity(format!(
                "ρ = {} puts the field on the symmetry axis",
                self.rho
            )));
        }
        Ok(())
    }

    /// `c = ζ/√(1+ζ²) = cos θ`.
    pub fn c(&self) -> f64 {
        self.zeta / (1.0 + self.zeta * self.zeta).sqrt()
    }

    pub fn theta(&self) -> f64 {
        self.c().acos()
    }

    pub fn r(&self) -> f64 {
        self.rho * (1.0 + self.zeta * self.zeta).sqrt()
    }

    pub fn cartesian(&self) -> [f64; 3] {
        [self.rho * self.phi.cos(), self.rho * self.phi.sin(), self.rho * self.zeta]
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::AxisSingularity(format!("θ = {theta} must lie strictly inside (0, π)")));
    }
    Ok(())
}

/// `H` at a Cartesian field vector; smooth everywhere, including the axis.
///
/// Entries are written with `ρe^{±iφ} = R¹ ± iR²` and `z = R³`, in the
/// convention whose eigenvectors are the ones of [`eigenframe`].
pub fn hamiltonian_cartesian(lambda: f64, r: [f64; 3]) -> CMatrix {
    let minus = c64(r[0], -r[1]);
    let plus = minus.conj();
    let z = r[2];
    let rho2 = r[0] * r[0] + r[1] * r[1];
    let s = 1.0 / SQRT_2;
    let diag = c64(0.5 * (rho2 + 2.0 * z * z), 0.0);
    let m = CMatrix::from_row_slice(
        3,
        3,
        &[
            diag,
            -minus * (s * z),
            minus * minus * 0.5,
            -plus * (s * z),
            c64(rho2, 0.0),
            minus * (s * z),
            plus * plus * 0.5,
            plus * (s * z),
            diag,
        ],
    );
    m * c64(lambda, 0.0)
}

/// `H[R]` at a field point off the axis.
pub fn hamiltonian(p: &FieldPoint) -> Result<HermitianMatrix> {
    p.check()?;
    HermitianMatrix::new(hamiltonian_cartesian(p.lambda, p.cartesian()))
}

/// `(E₁, E₂) = (0, λρ²(1+ζ²))`; `E₂` is doubly degenerate.
pub fn eigenvalues(p: &FieldPoint) -> (f64, f64) {
    (0.0, p.lambda * p.rho * p.rho * (1.0 + p.zeta * p.zeta))
}

/// `|1;R⟩` as a 3×1 frame.
pub fn level1_vector(zeta: f64, phi: f64) -> CMatrix {
    let n1 = (2.0 * (1.0 + zeta * zeta)).sqrt();
    CMatrix::from_column_slice(3, 1, &[cis(-phi) / n1, c64(SQRT_2 * zeta / n1, 0.0), -cis(phi) / n1])
}

/// `(|2,1;R⟩, |2,2;R⟩)` as a 3×2 frame.
pub fn level2_frame(zeta: f64, phi: f64) -> CMatrix {
    let n1 = (2.0 * (1.0 + zeta * zeta)).sqrt();
    let n2 = (1.0 + 2.0 * zeta * zeta).sqrt();
    let n12 = n1 * n2;
    CMatrix::from_row_slice(
        3,
        2,
        &[
            cis(-phi) * (-SQRT_2 * zeta / n2),
            cis(-phi) / n12,
            c64(1.0 / n2, 0.0),
            c64(SQRT_2 * zeta / n12, 0.0),
            c64(0.0, 0.0),
            cis(phi) * ((1.0 + 2.0 * zeta * zeta) / n12),
        ],
    )
}

/// Closed-form spectrum with the frames above, levels ordered by energy.
pub fn eigenframe(p: &FieldPoint) -> Result<Spectrum> {
    p.check()?;
    if p.lambda == 0.0 {
        return Err(Error::Domain("λ = 0 makes the spectrum fully degenerate".into()));
    }
    let (e1, e2) = eigenvalues(p);
    let one = Level { eigenvalue: e1, frame: level1_vector(p.zeta, p.phi) };
    let two = Level { eigenvalue: e2, frame: level2_frame(p.zeta, p.phi) };
    Spectrum::from_levels(if p.lambda > 0.0 { vec![one, two] } else { vec![two, one] })
}

/// `μ, ν, σ` and `Δ` at fixed polar angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionCoeffs {
    pub c: f64,
    pub mu: f64,
    pub nu: f64,
    pub sigma: f64,
    pub delta: f64,
}

impl ConnectionCoeffs {
    pub fn from_c(c: f64) -> Result<Self> {
        if !(c > -1.0 && c < 1.0) {
            return Err(Error::AxisSingularity(format!("c = {c} must lie strictly inside (−1, 1)")));
        }
        let c2 = c * c;
        let mu = 2.0 * c2 / (1.0 + c2);
        let nu = -c * (1.0 - c2) / (1.0 + c2);
        let sigma = -(1.0 + 2.0 * (1.0 + c2).powi(2)) / (2.0 * (1.0 + c2));
        let delta = ((1.0 + sigma - mu).powi(2) + nu * nu).sqrt();
        Ok(Self { c, mu, nu, sigma, delta })
    }

    /// `Δ = √(1 + 4c²(4 + 8c² + 7c⁴ + c⁶)) / (2(1+c²))`.
    pub fn delta_polynomial(&self) -> f64 {
        let c2 = self.c * self.c;
        (1.0 + 4.0 * c2 * (4.0 + 8.0 * c2 + 7.0 * c2 * c2 + c2 * c2 * c2)).sqrt() / (2.0 * (1.0 + c2))
    }

    /// `σ + 3μ/4 + 1/2`, which equals `−(1+c⁴)/(1+c²)`.
    pub fn w22_coefficient(&self) -> f64 {
        self.sigma + 0.75 * self.mu + 0.5
    }
}

pub fn connection_coeffs(theta: f64) -> Result<ConnectionCoeffs> {
    check_theta(theta)?;
    ConnectionCoeffs::from_c(theta.cos())
}

/// `μ` written in `ζ`: `2ζ²/(1+2ζ²)`.
pub fn mu_zeta(zeta: f64) -> f64 {
    2.0 * zeta * zeta / (1.0 + 2.0 * zeta * zeta)
}

/// `ν` written in `ζ`: `−ζ/((1+2ζ²)√(1+ζ²))`.
pub fn nu_zeta(zeta: f64) -> f64 {
    -zeta / ((1.0 + 2.0 * zeta * zeta) * (1.0 + zeta * zeta).sqrt())
}

/// The ζ-form `−(1+2(1+2ζ²)²)/(2(1+2ζ²)(1+ζ²))` sometimes quoted for σ.
/// It agrees with the c-form only at ζ = 0.
pub fn sigma_zeta(zeta: f64) -> f64 {
    let a = 1.0 + 2.0 * zeta * zeta;
    -(1.0 + 2.0 * a * a) / (2.0 * a * (1.0 + zeta * zeta))
}

pub fn pauli(l: usize) -> CMatrix {
    let (o, z, i) = (c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 1.0));
    match l {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("Pauli index {l} out of range"),
    }
}

/// `ε_{ijk}` for indices in `1..=3`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1.0,
        _ => 0.0,
    }
}

/// `‖e^{−iφσᵢ/2} σⱼ e^{iφσᵢ/2} − (cos φ σⱼ + sin φ Σₖ εᵢⱼₖ σₖ)‖_max`.
pub fn conjugation_identity_defect(i: usize, j: usize, phi: f64) -> f64 {
    let u = expm_skew_raw(&pauli(i), phi / 2.0);
    let lhs = &u * pauli(j) * u.adjoint();
    let rhs = (1..=3).fold(pauli(j).scale(phi.cos()), |acc, k| acc + pauli(k).scale(phi.sin() * levi_civita(i, j, k)));
    max_abs(&(lhs - rhs))
}

/// `h(φ) = −A²(φ)` of the closed-form oracle: `½ Σ rˡ σ_ℓ` with
/// `r⁰ = −(μ+σ)`, `r¹ = −ν cos φ`, `r² = ν sin φ`, `r³ = σ − μ`.
pub fn closed_form_generator(k: &ConnectionCoeffs, phi: f64) -> CMatrix {
    let r = [-(k.mu + k.sigma), -k.nu * phi.cos(), k.nu * phi.sin(), k.sigma - k.mu];
    (0..4).fold(CMatrix::zeros(2, 2), |acc, l| acc + pauli(l).scale(0.5 * r[l]))
}

/// `Γ²(φ)` entrywise from the closed form.
pub fn gamma2_closed(theta: f64, phi0: f64, phi: f64) -> Result<CMatrix> {
    let k = connection_coeffs(theta)?;
    Ok(gamma2_from(&k, phi0, phi))
}

pub fn gamma2_from(k: &ConnectionCoeffs, phi0: f64, phi: f64) -> CMatrix {
    let d = phi - phi0;
    let (s, c) = (d * k.delta / 2.0).sin_cos();
    let ratio = (k.mu - k.sigma - 1.0) / k.delta;
    let i = c64(0.0, 1.0);
    let g11 = cis((k.mu + k.sigma + 1.0) * d / 2.0) * (c + i * ratio * s);
    let off = i * (k.nu / k.delta) * cis((k.mu + k.sigma) * d / 2.0) * s;
    let g12 = off * cis((phi + phi0) / 2.0);
    let g21 = off * cis(-(phi + phi0) / 2.0);
    let g22 = cis((k.mu + k.sigma - 1.0) * d / 2.0) * (c - i * ratio * s);
    CMatrix::from_row_slice(2, 2, &[g11, g12, g21, g22])
}

/// The constant generator after the rotation `𝒰(φ) = e^{−iφσ₃/2}`.
#[derive(Debug, Clone)]
pub struct RotatingFrame {
    pub coeffs: ConnectionCoeffs,
    /// `h′ = ½[−(μ+σ)σ₀ − νσ₁ + (1−μ+σ)σ₃]`.
    pub h_prime: CMatrix,
}

impl RotatingFrame {
    /// `e^{iφσ₃/2} e^{−ih′(φ−φ₀)} e^{−iφ₀σ₃/2}`.
    pub fn reconstruct(&self, phi0: f64, phi: f64) -> CMatrix {
        let s3 = pauli(3);
        expm_skew_raw(&s3, -phi / 2.0) * expm_skew_raw(&self.h_prime, phi - phi0) * expm_skew_raw(&s3, phi0 / 2.0)
    }
}

pub fn rotating_frame(theta: f64) -> Result<RotatingFrame> {
    let k = connection_coeffs(theta)?;
    let h_prime = (pauli(0).scale(-(k.mu + k.sigma)) - pauli(1).scale(k.nu) + pauli(3).scale(1.0 - k.mu + k.sigma)).scale(0.5);
    Ok(RotatingFrame { coeffs: k, h_prime })
}

/// `w²(φ₀, φ)` entrywise, first printed form of `w²₂₂`.
pub fn w2_closed(theta: f64, phi0: f64, phi: f64) -> Result<CMatrix> {
    let k = connection_coeffs(theta)?;
    let d = phi - phi0;
    let e = c64(1.0, 0.0) - cis(-d);
    let c2 = k.c * k.c;
    let w11 = c64(1.0, 0.0) - e * k.mu;
    let w12 = -e * k.nu;
    let w22 = c64(1.0 - (1.0 + c2 * c2) / (1.0 + c2) * (1.0 - d.cos()), k.mu * d.sin());
    Ok(CMatrix::from_row_slice(2, 2, &[w11, w12, w12, w22]))
}

/// Second printed form `1 + (σ + 3μ/4 + ½)(1 − cos Δφ) + iμ sin Δφ` of `w²₂₂`.
pub fn w22_alternate(theta: f64, phi0: f64, phi: f64) -> Result<C64> {
    let k = connection_coeffs(theta)?;
    let d = phi - phi0;
    Ok(c64(1.0 + k.w22_coefficient() * (1.0 - d.cos()), k.mu * d.sin()))
}

/// `w¹ = (ζ² + cos Δφ)/(1 + ζ²)`.
pub fn w1_closed(zeta: f64, phi0: f64, phi: f64) -> f64 {
    (zeta * zeta + (phi - phi0).cos()) / (1.0 + zeta * zeta)
}

/// `Π²` from the `𝒳, 𝒴` trace formula.
pub fn pi2_closed(theta: f64, phi0: f64, phi: f64) -> Result<C64> {
    let k = connection_coeffs(theta)?;
    let (mu, nu, sg, dl) = (k.mu, k.nu, k.sigma, k.delta);
    let d = phi - phi0;
    let i = c64(0.0, 1.0);
    let x = cis(-d / 2.0) * (c64(6.0 + 7.0 * mu + 4.0 * sg + (2.0 - 7.0 * mu - 4.0 * sg) * d.cos(), 4.0 * d.sin())) * 0.25;
    let bracket = (c64(1.0, 0.0) + cis(phi + phi0)) * (8.0 * nu * nu)
        + cis(phi0) * (mu * (7.0 * mu - 5.0) - 3.0 * (2.0 + mu) * sg - 4.0 * sg * sg - 2.0)
        + cis(phi) * (mu * (9.0 * mu - 19.0) + (14.0 - 13.0 * mu) * sg + 4.0 * sg * sg + 10.0);
    let y = i / (8.0 * dl) * cis(-(3.0 * phi - phi0) / 2.0) * (cis(phi0) - cis(phi)) * bracket;
    let (s, c) = (dl * d / 2.0).sin_cos();
    Ok(cis((mu + sg) * d / 2.0) * (x * c + y * s))
}

/// `−2 e^{iπ(μ+σ)} cos(πΔ)`, the closed-form cyclic trace.
pub fn pi2_cyclic(theta: f64) -> Result<C64> {
    let k = connection_coeffs(theta)?;
    Ok(cis(PI * (k.mu + k.sigma)) * (-2.0 * (PI * k.delta).cos()))
}

/// The rounded Tycko-point profile
/// `⅓ e^{0.10iφ}{(2 + 4cos φ + 3i sin φ) cos(0.62φ) + 0.81[cos(φ/2) + 2.42i sin(φ/2)] sin(φ/2) sin(0.62φ)}`.
///
/// This rounded form does not track [`pi2_closed`] away from φ = 0; it is
/// provided for comparison only.
pub fn tycko_display(phi: f64) -> C64 {
    let i = c64(0.0, 1.0);
    let first = c64(2.0 + 4.0 * phi.cos(), 3.0 * phi.sin()) * (0.62 * phi).cos();
    let second = (c64((phi / 2.0).cos(), 0.0) + i * (2.42 * (phi / 2.0).sin())) * (0.81 * (phi / 2.0).sin() * (0.62 * phi).sin());
    cis(0.10 * phi) * (first + second) / 3.0
}

/// Connection `i F†dF/dφ` of [`level2_frame`]: `[[μ, ν], [ν, −μ]]`, constant along a precession.
pub fn frame_connection(k: &ConnectionCoeffs) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c64(k.mu, 0.0), c64(k.nu, 0.0), c64(k.nu, 0.0), c64(-k.mu, 0.0)])
}

/// Holonomy `exp(i(φ−φ₀)A)` of [`level2_frame`] along a precession.
pub fn frame_holonomy(theta: f64, phi0: f64, phi: f64) -> Result<CMatrix> {
    let k = connection_coeffs(theta)?;
    Ok(expm_skew_raw(&frame_connection(&k), -(phi - phi0)))
}

/// Gauge-invariant `tr(w² Γ²)` of [`level2_frame`]; cyclic value `2cos(2πc)`.
pub fn pi2_frame(theta: f64, phi0: f64, phi: f64) -> Result<C64> {
    Ok((w2_closed(theta, phi0, phi)? * frame_holonomy(theta, phi0, phi)?).trace())
}

/// `R(φ) = e^{−iφJ₃} = diag(e^{−iφ}, 1, e^{iφ})`.
pub fn rotation(phi: f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![cis(-phi), c64(1.0, 0.0), cis(phi)]))
}

pub fn jz() -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)]))
}

/// Field at constant polar angle precessing as `φ(t) = φ₀ + ωt` until `φ_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecessionScenario {
    pub lambda: f64,
    pub rho: f64,
    pub theta: f64,
    pub phi0: f64,
    pub omega: f64,
    pub phi_final: f64,
}

impl PrecessionScenario {
    pub fn new(lambda: f64, rho: f64, theta: f64, phi0: f64, omega: f64, phi_final: f64) -> Result<Self> {
        check_theta(theta)?;
        if ![lambda, rho, phi0, omega, phi_final].iter().all(|x| x.is_finite()) {
            return Err(Error::Domain("non-finite scenario parameter".into()));
        }
        if !(rho > 0.0) {
            return Err(Error::AxisSingularity(format!("ρ = {rho} must be positive")));
        }
        if lambda == 0.0 {
            return Err(Error::Domain("λ must be nonzero".into()));
        }
        if phi_final != phi0 {
            if omega == 0.0 {
                return Err(Error::Domain("ω = 0 never reaches φ_f".into()));
            }
            if (phi_final - phi0) / omega < 0.0 {
                return Err(Error::Domain("φ_f lies behind φ₀ for this sense of rotation".into()));
            }
        }
        Ok(Self { lambda, rho, theta, phi0, omega, phi_final })
    }

    /// `λ = ρ = ω = 1`, `θ = arccos(1/√3)`, `φ₀ = 0`, one full precession.
    pub fn tycko() -> Self {
        Self::new(1.0, 1.0, tycko_theta(), 0.0, 1.0, 2.0 * PI).expect("valid constants")
    }

    pub fn zeta(&self) -> f64 {
        1.0 / self.theta.tan()
    }

    pub fn coeffs(&self) -> ConnectionCoeffs {
        connection_coeffs(self.theta).expect("θ validated")
    }

    pub fn duration(&self) -> f64 {
        if self.phi_final == self.phi0 {
            0.0
        } else {
            (self.phi_final - self.phi0) / self.omega
        }
    }

    pub fn azimuth(&self, t: f64) -> f64 {
        self.phi0 + self.omega * t
    }

    /// Whether the azimuth sweeps a nonzero whole number of turns.
    pub fn is_cyclic(&self) -> bool {
        let turns = (self.phi_final - self.phi0) / (2.0 * PI);
        turns.abs() > 0.5 && (turns - turns.round()).abs() < 1e-12
    }

    pub fn field_point(&self, t: f64) -> FieldPoint {
        FieldPoint { lambda: self.lambda, rho: self.rho, phi: self.azimuth(t), zeta: self.zeta() }
    }

    /// `R ↦ H[R]` over Cartesian field vectors.
    pub fn family(&self) -> OperatorFamily {
        let lambda = self.lambda;
        let f: FamilyFn = Arc::new(move |r: &[f64]| hamiltonian_cartesian(lambda, [r[0], r[1], r[2]]));
        OperatorFamily::new(3, f)
    }

    pub fn path(&self) -> PathFn {
        let s = *self;
        Arc::new(move |t: f64| s.field_point(t).cartesian().to_vec())
    }

    /// `steps + 1` samples of `[0, duration]`.
    pub fn curve(&self, steps: usize) -> Result<Curve> {
        let tf = self.duration();
        if tf <= 0.0 {
            return Err(Error::Domain("scenario has zero duration".into()));
        }
        Curve::uniform(0.0, tf, steps, self.path(), self.is_cyclic())
    }

    pub fn hamiltonian_fn(&self) -> OperatorFn {
        let s = *self;
        Arc::new(move |t: f64| hamiltonian_cartesian(s.lambda, s.field_point(t).cartesian()))
    }

    /// `H(t) = R(φ(t)) H₀ R(φ(t))†` with `H₀` the Hamiltonian at φ = 0.
    pub fn static_hamiltonian(&self) -> CMatrix {
        let mut p = self.field_point(0.0);
        p.phi = 0.0;
        hamiltonian_cartesian(self.lambda, p.cartesian())
    }

    /// Constant Hamiltonian `H₀ − ωJ₃` of the co-rotating frame.
    pub fn rotating_hamiltonian(&self) -> CMatrix {
        self.static_hamiltonian() - jz().scale(self.omega)
    }

    /// Exact propagator `U(t) = R(φ(t)) e^{−i(H₀−ωJ₃)t} R(φ₀)†`.
    pub fn exact_propagator(&self, t: f64) -> CMatrix {
        rotation(self.azimuth(t)) * expm_skew_raw(&self.rotating_hamiltonian(), t) * rotation(self.phi0).adjoint()
    }

    /// An exact dynamical invariant `I(t) = R(φ(t)) Q R(φ(t))†` with a doubly
    /// degenerate eigenvalue: `Q` projects onto the two lowest eigenvectors of
    /// `H₀ − ωJ₃`. Returned as a one-parameter family in `φ` with its
    /// curve `φ(t)` of `steps + 1` samples.
    pub fn degenerate_invariant(&self, steps: usize) -> Result<(OperatorFamily, Curve)> {
        let k = HermitianMatrix::hermitized(&self.rotating_hamiltonian())?;
        let frame = crate::linalg::eig_hermitian(&k, 1e-12)?.full_frame();
        let low = frame.columns(0, 2).into_owned();
        let q = &low * low.adjoint();
        let family = OperatorFamily::new(
            3,
            Arc::new(move |th: &[f64]| {
                let r = rotation(th[0]);
                &r * &q * r.adjoint()
            }),
        );
        let s = *self;
        let curve = Curve::uniform(0.0, self.duration(), steps, Arc::new(move |t: f64| vec![s.azimuth(t)]), false)?;
        Ok((family, curve))
    }
}
