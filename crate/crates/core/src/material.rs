//! Constitutive data and pointwise constitutive operations.
//!
//! Elastic moduli are affine in the damage variable `ζ ∈ [0, 1]`
//! (`ζ = 1` intact, `ζ = 0` fully damaged). Plastic strain is deviatoric
//! with linear kinematic hardening `h π` and a von Mises elastic domain
//! `{ξ deviatoric : |ξ| ≤ σ_Y}`. All deviators are taken in the 2×2 sense.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Sym2;

/// Young's modulus of the reference material, Pa.
pub const REFERENCE_YOUNG: f64 = 27e9;
/// Poisson ratio of the reference material.
pub const REFERENCE_POISSON: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    /// Intact Lamé parameters, Pa.
    pub lambda1: f64,
    pub mu1: f64,
    /// Fully damaged Lamé parameters, Pa.
    pub lambda0: f64,
    pub mu0: f64,
    /// Kinematic hardening modulus, Pa.
    pub hardening: f64,
    /// Yield stress, Pa.
    pub sigma_y: f64,
    /// Energy per volume dissipated by damaging from 1 to 0, Pa.
    pub a: f64,
    /// Energy per volume charged for healing from 0 to 1, Pa.
    pub b: f64,
    /// Damage gradient coefficient, J/m.
    pub kappa2: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams::reference()
    }
}

impl MaterialParams {
    /// Concrete-like reference data: E = 27 GPa, ν = 0.2, damaged moduli
    /// λ₀ = 750 Pa and μ₀ = 112.5 Pa, σ_Y = 2 MPa, h = E/20, a = 1.2 kPa,
    /// b = 10⁶ a (healing effectively off), κ₂ = 1e-3 J/m.
    pub fn reference() -> Self {
        let (lambda1, mu1) = lame_from_young_poisson(REFERENCE_YOUNG, REFERENCE_POISSON)
            .expect("reference data is admissible");
        let a = 1.2e3;
        MaterialParams {
            lambda1,
            mu1,
            lambda0: 750.0,
            mu0: 112.5,
            hardening: REFERENCE_YOUNG / 20.0,
            sigma_y: 2e6,
            a,
            b: 1e6 * a,
            kappa2: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda1,
            self.mu1,
            self.lambda0,
            self.mu0,
            self.hardening,
            self.sigma_y,
            self.a,
            self.b,
            self.kappa2,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Material("all parameters must be finite".into()));
        }
        let checks = [
            (self.lambda1 >= self.lambda0, "lambda1 >= lambda0"),
            (self.lambda0 >= 0.0, "lambda0 >= 0"),
            (self.mu1 >= self.mu0, "mu1 >= mu0"),
            (self.mu0 > 0.0, "mu0 > 0"),
            (self.sigma_y > 0.0, "sigma_y > 0"),
            (self.hardening > 0.0, "hardening > 0"),
            (self.a > 0.0, "a > 0"),
            (self.b >= self.a, "b >= a"),
            (self.kappa2 > 0.0, "kappa2 > 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, what)) => Err(Error::Material(format!("violated: {what}"))),
            None => Ok(()),
        }
    }

    pub fn lambda(&self, zeta: f64) -> f64 {
        self.lambda0 + zeta * (self.lambda1 - self.lambda0)
    }

    pub fn mu(&self, zeta: f64) -> f64 {
        self.mu0 + zeta * (self.mu1 - self.mu0)
    }

    pub(crate) fn stress_unchecked(&self, e_el: &Sym2, zeta: f64) -> Sym2 {
        elastic_stress(e_el, self.lambda(zeta), self.mu(zeta))
    }

    /// `½ ℂ(ζ) e : e`.
    pub(crate) fn elastic_energy_density(&self, e_el: &Sym2, zeta: f64) -> f64 {
        let tr = e_el.trace();
        0.5 * self.lambda(zeta) * tr * tr + self.mu(zeta) * e_el.norm_sq()
    }

    /// `½ ℂ'(ζ) e : e = ½ (ℂ₁ - ℂ₀) e : e`, the (nonnegative) rate at
    /// which stored energy grows with ζ.
    pub fn damage_driving_density(&self, e_el: &Sym2) -> f64 {
        let tr = e_el.trace();
        0.5 * (self.lambda1 - self.lambda0) * tr * tr + (self.mu1 - self.mu0) * e_el.norm_sq()
    }
}

/// Lamé parameters `(λ, μ)` from Young's modulus and Poisson's ratio.
pub fn lame_from_young_poisson(young: f64, nu: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) {
        return Err(Error::Material(format!("Young's modulus must be positive, got {young}")));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(Error::Material(format!(
            "Poisson's ratio must lie in (-1, 0.5), got {nu}"
        )));
    }
    let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = young / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

fn elastic_stress(e_el: &Sym2, lambda: f64, mu: f64) -> Sym2 {
    (lambda * e_el.trace()) * Sym2::IDENTITY + (2.0 * mu) * *e_el
}

fn check_damage(zeta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&zeta) {
        Ok(())
    } else {
        Err(Error::DamageOutOfRange(zeta))
    }
}

/// `σ = ℂ(ζ) e_el`.
pub fn stress(e_el: &Sym2, zeta: f64, p: &MaterialParams) -> Result<Sym2> {
    check_damage(zeta)?;
    Ok(p.stress_unchecked(e_el, zeta))
}

/// Result of the elementwise plastic minimization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnMap {
    pub pi: Sym2,
    /// `σ_Y |π - π_prev|`, Pa.
    pub dissipated: f64,
    /// Trial driving stress `2μ(dev e - π_prev) - h π_prev`.
    pub trial: Sym2,
    /// Plastic multiplier `|π - π_prev|`; zero on the elastic branch.
    pub multiplier: f64,
    mu: f64,
    hardening: f64,
}

impl ReturnMap {
    pub fn is_plastic(&self) -> bool {
        self.multiplier > 0.0
    }

    /// Derivative of `π(e)` applied to a strain increment (3×3 matrix in
    /// Mandel coordinates): `β n⊗n + θ (P_dev - n⊗n)` on the plastic
    /// branch, zero on the elastic one.
    pub fn plastic_strain_derivative(&self) -> [[f64; 3]; 3] {
        let mut d = [[0.0; 3]; 3];
        if !self.is_plastic() {
            return d;
        }
        let s_norm = self.trial.norm();
        let n = self.trial.scale(1.0 / s_norm).to_mandel();
        let two_mu = 2.0 * self.mu;
        let beta = two_mu / (two_mu + self.hardening);
        let theta = two_mu * self.multiplier / s_norm;
        const P_DEV: [[f64; 3]; 3] = [[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                let nn = n[i] * n[j];
                d[i][j] = beta * nn + theta * (P_DEV[i][j] - nn);
            }
        }
        d
    }
}

/// Closed-form minimizer over deviatoric `π` of
/// `½ ℂ(ζ)(e - π):(e - π) + ½ h π:π + σ_Y |π - π_prev|`.
///
/// The tie `|s_trial| = σ_Y` takes the elastic branch.
pub fn return_map(e_total: &Sym2, pi_prev: &Sym2, zeta: f64, p: &MaterialParams) -> ReturnMap {
    debug_assert!(pi_prev.trace().abs() <= 1e-10, "pi_prev must be deviatoric");
    let mu = p.mu(zeta);
    let h = p.hardening;
    let trial = (2.0 * mu) * (e_total.dev() - *pi_prev) - h * *pi_prev;
    let s_norm = trial.norm();
    let (pi, multiplier) = if s_norm <= p.sigma_y {
        (*pi_prev, 0.0)
    } else {
        let gamma = (s_norm - p.sigma_y) / (2.0 * mu + h);
        let mut pi = *pi_prev + (gamma / s_norm) * trial;
        // keep the trace exactly zero
        let m = 0.5 * (pi.xx - pi.yy);
        pi.xx = m;
        pi.yy = -m;
        (pi, gamma)
    };
    ReturnMap {
        pi,
        dissipated: p.sigma_y * multiplier,
        trial,
        multiplier,
        mu,
        hardening: h,
    }
}

/// Elementwise plastic objective minimized by [`return_map`].
pub fn plastic_local_objective(
    e_total: &Sym2,
    pi: &Sym2,
    pi_prev: &Sym2,
    zeta: f64,
    p: &MaterialParams,
) -> f64 {
    p.elastic_energy_density(&(*e_total - *pi), zeta)
        + 0.5 * p.hardening * pi.norm_sq()
        + dissipation_density_plastic(&(*pi - *pi_prev), p)
}

/// `σ_Y |Δπ|`.
pub fn dissipation_density_plastic(delta_pi: &Sym2, p: &MaterialParams) -> f64 {
    p.sigma_y * delta_pi.norm()
}

/// `a (Δζ)⁻ + b (Δζ)⁺`.
pub fn dissipation_density_damage(delta_zeta: f64, p: &MaterialParams) -> f64 {
    if delta_zeta < 0.0 {
        -p.a * delta_zeta
    } else {
        p.b * delta_zeta
    }
}

/// `½ ℂ(ζ)(e - π):(e - π) + ½ h π:π + ½ κ₂ |∇ζ|²`.
pub fn stored_energy_density(
    e_total: &Sym2,
    pi: &Sym2,
    zeta: f64,
    grad_zeta: [f64; 2],
    p: &MaterialParams,
) -> Result<f64> {
    check_damage(zeta)?;
    if pi.trace().abs() > 1e-10 {
        return Err(Error::NotDeviatoric(pi.trace()));
    }
    Ok(p.elastic_energy_density(&(*e_total - *pi), zeta)
        + 0.5 * p.hardening * pi.norm_sq()
        + 0.5 * p.kappa2 * (grad_zeta[0] * grad_zeta[0] + grad_zeta[1] * grad_zeta[1]))
}

/// Consistent tangent `dσ/de` of the condensed elementwise energy, in
/// Mandel coordinates.
pub fn consistent_tangent(rm: &ReturnMap, zeta: f64, p: &MaterialParams) -> [[f64; 3]; 3] {
    let lambda = p.lambda(zeta);
    let two_mu = 2.0 * p.mu(zeta);
    let mut c = [[0.0; 3]; 3];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i < 2 && j < 2 {
                *v += lambda;
            }
            if i == j {
                *v += two_mu;
            }
        }
    }
    if rm.is_plastic() {
        let d = rm.plastic_strain_derivative();
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] -= two_mu * d[i][j];
            }
        }
    }
    c
}
