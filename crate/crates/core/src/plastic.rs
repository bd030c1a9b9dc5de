//! First fractional step: minimize over `(u, π)` with damage frozen.
//!
//! Eliminating `π` elementwise through the return map leaves a convex,
//! continuously differentiable functional of `u` alone,
//! `Φ(u) = Σ_e |T_e| min_π [ψ(e(u), π, ζ̄_e) + σ_Y |π - π_prev|] - ⟨f, u⟩`,
//! whose gradient is the internal force of the returned stresses. It is
//! minimized by Newton's method with the consistent tangent and an Armijo
//! line search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{check_len, Model, State};
use crate::linalg::{dot, norm2, SpdFactor};
use crate::material::{consistent_tangent, plastic_local_objective, return_map, ReturnMap};
use crate::tensor::Sym2;

/// Newton stops once the predicted decrease `-∇Φ·δ` is below this
/// fraction of `|Φ|`.
const DECREMENT_FLOOR: f64 = 1e-20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlasticOptions {
    /// Bound on the relative stationarity residual, see
    /// [`relative_residual`]. Iteration also ends when the Newton
    /// decrement shows Φ is minimized to rounding.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PlasticOptions {
    fn default() -> Self {
        PlasticOptions {
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlasticStepReport {
    pub iterations: usize,
    /// Stored energy at the new `(u, π)` and the frozen damage, J.
    pub energy_final: f64,
    /// `‖δu‖ / ‖u‖` of the last Newton update.
    pub increment_norm: f64,
    /// `σ_Y Σ |T_e| |Δπ_e|`, J.
    pub dissipated_plastic: f64,
    /// Final relative stationarity residual.
    pub residual: f64,
}

/// `‖r_free‖₂ / (‖f_int‖₂ + ‖f‖₂)` with `r = f_int - f`, where `f_int` is
/// the internal force of `stresses` on all degrees of freedom (reactions
/// included) and `f` the body load. Zero when the residual vanishes.
pub fn relative_residual(model: &Model, stresses: &[Sym2]) -> f64 {
    residual_of_forces(model, &model.internal_force(stresses), &model.body_load())
}

fn residual_of_forces(model: &Model, f_int: &[f64], f: &[f64]) -> f64 {
    let r: Vec<f64> = model
        .dofs()
        .free_dofs()
        .iter()
        .map(|&d| f_int[d] - f[d])
        .collect();
    let num = norm2(&r);
    if num == 0.0 {
        return 0.0;
    }
    num / (norm2(f_int) + norm2(f))
}

struct Evaluation {
    phi: f64,
    maps: Vec<ReturnMap>,
    /// `∇Φ` on the free degrees of freedom.
    gradient: Vec<f64>,
    residual: f64,
}

fn evaluate(model: &Model, u: &[[f64; 2]], pi_prev: &[Sym2], zeta_bar: &[f64]) -> Evaluation {
    let p = &model.params;
    let mesh = &model.mesh;
    let mut phi = 0.0;
    let mut maps = Vec::with_capacity(mesh.n_elements());
    let mut stresses = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let strain = mesh.element_strain(e, u);
        let rm = return_map(&strain, &pi_prev[e], zeta_bar[e], p);
        phi += mesh.element_area[e]
            * plastic_local_objective(&strain, &rm.pi, &pi_prev[e], zeta_bar[e], p);
        stresses.push(p.stress_unchecked(&(strain - rm.pi), zeta_bar[e]));
        maps.push(rm);
    }
    let f = model.body_load();
    phi -= u
        .iter()
        .enumerate()
        .map(|(v, ui)| f[2 * v] * ui[0] + f[2 * v + 1] * ui[1])
        .sum::<f64>();
    let f_int = model.internal_force(&stresses);
    let gradient = model
        .dofs()
        .free_dofs()
        .iter()
        .map(|&d| f_int[d] - f[d])
        .collect();
    let residual = residual_of_forces(model, &f_int, &f);
    Evaluation {
        phi,
        maps,
        gradient,
        residual,
    }
}

fn add_free(model: &Model, u: &[[f64; 2]], delta: &[f64], alpha: f64) -> Vec<[f64; 2]> {
    let mut out = u.to_vec();
    for (k, &d) in model.dofs().free_dofs().iter().enumerate() {
        out[d / 2][d % 2] += alpha * delta[k];
    }
    out
}

/// Minimizes the plastic step functional at time `t` with damage frozen
/// at `zeta`, starting from `prev` (which satisfies the boundary data at
/// `t_prev`). Returns the new displacement and plastic strain.
pub fn solve_plastic(
    model: &Model,
    prev: &State,
    zeta: &[f64],
    t_prev: f64,
    t: f64,
    opts: &PlasticOptions,
) -> Result<(Vec<[f64; 2]>, Vec<Sym2>, PlasticStepReport)> {
    prev.validate(&model.mesh)?;
    check_len("frozen damage", model.mesh.n_nodes(), zeta.len())?;
    if let Some(&z) = zeta.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return Err(Error::DamageOutOfRange(z));
    }
    let mesh = &model.mesh;
    let zeta_bar: Vec<f64> = (0..mesh.n_elements())
        .map(|e| mesh.element_mean(e, zeta))
        .collect();

    let mut u = model.shift_dirichlet(&prev.u, t_prev, t);
    let mut ev = evaluate(model, &u, &prev.pi, &zeta_bar);
    let mut increment_norm = 0.0;
    let mut iterations = 0;
    while ev.residual > opts.tol && model.dofs().n_free() > 0 {
        if iterations == opts.max_iter {
            return Err(Error::PlasticNotConverged {
                iterations,
                residual: ev.residual,
            });
        }
        iterations += 1;
        let tangents: Vec<_> = ev
            .maps
            .iter()
            .zip(&zeta_bar)
            .map(|(rm, &z)| consistent_tangent(rm, z, &model.params))
            .collect();
        let k = model.assemble_free_stiffness(&tangents);
        let rhs: Vec<f64> = ev.gradient.iter().map(|g| -g).collect();
        let delta = SpdFactor::new(&k)?.solve(&rhs);
        let slope = dot(&ev.gradient, &delta);
        if -slope <= DECREMENT_FLOOR * ev.phi.abs() {
            // Φ is minimized to rounding; the residual is at its floor,
            // which after rupture can sit above `tol`
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial_u = add_free(model, &u, &delta, alpha);
            let trial = evaluate(model, &trial_u, &prev.pi, &zeta_bar);
            let armijo = trial.phi <= ev.phi + 1e-4 * alpha * slope;
            // near the minimizer Φ differences drown in rounding; then the
            // residual decides
            let flat = (trial.phi - ev.phi).abs() <= 1e-13 * ev.phi.abs().max(f64::MIN_POSITIVE)
                && trial.residual < ev.residual;
            if armijo || flat {
                accepted = Some((trial_u, trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((new_u, new_ev)) = accepted else {
            return Err(Error::PlasticNotConverged {
                iterations,
                residual: ev.residual,
            });
        };
        let u_norm = new_u.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>().sqrt();
        increment_norm = alpha * norm2(&delta) / u_norm.max(f64::MIN_POSITIVE);
        u = new_u;
        ev = new_ev;
    }

    let pi: Vec<Sym2> = ev.maps.iter().map(|rm| rm.pi).collect();
    let dissipated_plastic = ev
        .maps
        .iter()
        .zip(&mesh.element_area)
        .map(|(rm, a)| a * rm.dissipated)
        .sum();
    let state = State {
        u: u.clone(),
        pi: pi.clone(),
        zeta: zeta.to_vec(),
    };
    let report = PlasticStepReport {
        iterations,
        energy_final: model.total_energy(&state)?,
        increment_norm,
        dissipated_plastic,
        residual: ev.residual,
    };
    Ok((u, pi, report))
}
