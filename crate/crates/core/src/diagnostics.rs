//! A-posteriori checks of a computed step: the maximum-dissipation
//! residuum, the displacement stationarity residual, the per-step energy
//! balance and the step functionals used for sampled semistability.
//!
//! Driving forces are the negative partial derivatives of the stored energy
//! at the previous step; the residuum density is dissipation minus the work
//! of those forces along the current increments, so it vanishes for a
//! step without plastic or damage evolution.

use serde::{Deserialize, Serialize};

use crate::damage::{damage_dissipation, driving_coefficients};
use crate::error::{Error, Result};
use crate::fields::{check_len, Model, State};
use crate::linalg::spmv;
use crate::material::dissipation_density_plastic;
use crate::plastic::relative_residual;
use crate::tensor::Sym2;

/// Residuum of one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmdpRecord {
    pub step: usize,
    /// Elementwise residuum density, Pa. The nodal damage part is spread
    /// over the adjacent elements in proportion to their area.
    pub field: Vec<f64>,
    /// `∫ R dx` of the plastic part, J.
    pub plastic_part: f64,
    /// `∫ R dx` of the damage part, J.
    pub damage_part: f64,
    pub integral: f64,
    pub cumulative: f64,
}

/// History needed for the residuum of step `k`.
#[derive(Clone, Copy, Debug)]
pub struct AmdpHistory<'a> {
    /// Damage two steps back, `ζ^{k-2}`; the initial damage for `k = 1`.
    pub zeta_before_prev: &'a [f64],
    /// `q^{k-1}`.
    pub prev: &'a State,
    /// Box multiplier stored by the damage step `k - 1`; `None` for `k = 1`.
    pub prev_xi_const: Option<&'a [f64]>,
}

/// Per-element plastic driving stress `ℂ(ζ̄)(e(u) - π) - h π`.
pub fn plastic_driving_force(model: &Model, u: &[[f64; 2]], pi: &[Sym2], zeta: &[f64]) -> Vec<Sym2> {
    let mesh = &model.mesh;
    let p = &model.params;
    (0..mesh.n_elements())
        .map(|e| {
            let z = mesh.element_mean(e, zeta);
            p.stress_unchecked(&(mesh.element_strain(e, u) - pi[e]), z) - p.hardening * pi[e]
        })
        .collect()
}

pub fn amdp_step_residuum(
    model: &Model,
    step: usize,
    history: AmdpHistory<'_>,
    current: &State,
    cumulative_before: f64,
) -> Result<AmdpRecord> {
    let mesh = &model.mesh;
    let p = &model.params;
    let n = mesh.n_nodes();
    let prev = history.prev;
    prev.validate(mesh)?;
    current.validate(mesh)?;
    check_len("damage two steps back", n, history.zeta_before_prev.len())?;
    let zero = vec![0.0; n];
    let xi_const = match (step, history.prev_xi_const) {
        (0, _) => return Err(Error::MissingHistory("steps are numbered from 1")),
        (1, None) => zero.as_slice(),
        (_, None) => return Err(Error::MissingHistory("box multiplier of the previous damage step")),
        (_, Some(x)) => {
            check_len("box multiplier", n, x.len())?;
            x
        }
    };

    let xi_plast = plastic_driving_force(model, &prev.u, &prev.pi, history.zeta_before_prev);
    let mut field: Vec<f64> = (0..mesh.n_elements())
        .map(|e| {
            let d = current.pi[e] - prev.pi[e];
            dissipation_density_plastic(&d, p) - xi_plast[e].ddot(&d)
        })
        .collect();
    let plastic_part: f64 = field.iter().zip(&mesh.element_area).map(|(r, a)| r * a).sum();

    let driving = driving_coefficients(model, &prev.u, &prev.pi);
    let kz = spmv(model.gradient_stiffness(), &prev.zeta);
    let w = &mesh.lumped_weight;
    let nodal: Vec<f64> = (0..n)
        .map(|i| {
            let dz = current.zeta[i] - prev.zeta[i];
            if dz == 0.0 {
                return 0.0;
            }
            let diss = w[i] * crate::material::dissipation_density_damage(dz, p);
            diss + (driving[i] + kz[i] + xi_const[i]) * dz
        })
        .collect();
    let damage_part: f64 = nodal.iter().sum();
    for (e, tri) in mesh.elements.iter().enumerate() {
        for &v in tri {
            if nodal[v] != 0.0 {
                field[e] += nodal[v] / (3.0 * w[v]);
            }
        }
    }
    let integral = plastic_part + damage_part;
    Ok(AmdpRecord {
        step,
        field,
        plastic_part,
        damage_part,
        integral,
        cumulative: cumulative_before + integral,
    })
}

/// `∫ |dev σ_el| dx`, N per unit thickness.
pub fn average_von_mises(model: &Model, state: &State) -> f64 {
    let mesh = &model.mesh;
    (0..mesh.n_elements())
        .map(|e| mesh.element_area[e] * deviatoric_stress(model, state, e).norm())
        .sum()
}

/// `dev σ_el` on element `e`.
pub fn deviatoric_stress(model: &Model, state: &State, e: usize) -> Sym2 {
    let mesh = &model.mesh;
    let z = mesh.element_mean(e, &state.zeta);
    model
        .params
        .stress_unchecked(&(mesh.element_strain(e, &state.u) - state.pi[e]), z)
        .dev()
}

/// Relative residual of the displacement equilibrium for the fields in
/// `state`, measured as in the plastic step. Within the scheme the damage
/// in `state` must be the one frozen during the plastic step.
pub fn euler_lagrange_residual(model: &Model, state: &State) -> f64 {
    let mesh = &model.mesh;
    let stresses: Vec<Sym2> = (0..mesh.n_elements())
        .map(|e| {
            let z = mesh.element_mean(e, &state.zeta);
            model
                .params
                .stress_unchecked(&(mesh.element_strain(e, &state.u) - state.pi[e]), z)
        })
        .collect();
    relative_residual(model, &stresses)
}

/// `σ_Y Σ_e |T_e| |π_e - π_prev,e|`, J.
pub fn plastic_dissipation(model: &Model, pi_prev: &[Sym2], pi: &[Sym2]) -> f64 {
    pi_prev
        .iter()
        .zip(pi)
        .zip(&model.mesh.element_area)
        .map(|((a, b), area)| area * dissipation_density_plastic(&(*b - *a), &model.params))
        .sum()
}

/// `E(u, π, ζ) + R₁(π - π_prev)`, the functional minimized by the plastic
/// step.
pub fn plastic_step_functional(
    model: &Model,
    u: &[[f64; 2]],
    pi: &[Sym2],
    pi_prev: &[Sym2],
    zeta: &[f64],
) -> Result<f64> {
    let state = State {
        u: u.to_vec(),
        pi: pi.to_vec(),
        zeta: zeta.to_vec(),
    };
    Ok(model.total_energy(&state)? + plastic_dissipation(model, pi_prev, pi))
}

/// Both sides of the per-step decrease inequality
/// `E(q^k) + R₁(Δπ) + R₂(Δζ) ≤ E(q^{k-1} shifted to the data at t_k)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBalance {
    pub lhs: f64,
    pub rhs: f64,
}

impl StepBalance {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs + rel_tol * self.rhs.abs()
    }
}

pub fn step_balance(
    model: &Model,
    prev: &State,
    t_prev: f64,
    current: &State,
    t: f64,
) -> Result<StepBalance> {
    let shifted = State {
        u: model.shift_dirichlet(&prev.u, t_prev, t),
        pi: prev.pi.clone(),
        zeta: prev.zeta.clone(),
    };
    let rhs = model.total_energy(&shifted)?;
    let lhs = model.total_energy(current)?
        + plastic_dissipation(model, &prev.pi, &current.pi)
        + damage_dissipation(model, &prev.zeta, &current.zeta);
    Ok(StepBalance { lhs, rhs })
}
