//! Second fractional step: minimize over `ζ` with `(u, π)` frozen.
//!
//! The stored energy is affine in `ζ` apart from the gradient term, so the
//! step is a quadratic program. Writing `ζ = ζ_prev + ζ△ - ζ▽` with
//! `ζ△, ζ▽ ≥ 0` turns the nonsmooth dissipation `a (Δζ)⁻ + b (Δζ)⁺` into a
//! linear term and leaves only box constraints.

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::fields::{check_len, Model, State};
use crate::linalg::spmv;
use crate::material::dissipation_density_damage;
use crate::qp::{solve_box_qp, BoxQp, QpOptions};
use crate::tensor::Sym2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamageOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DamageOptions {
    fn default() -> Self {
        // the healing coefficient inflates ‖c‖_∞ by a factor 10⁶ over the
        // damage side, so the relative QP tolerance is tightened to match
        DamageOptions {
            tol: 1e-13,
            max_iter: 10_000,
        }
    }
}

/// Damage QP in the stacked variables `(ζ△, ζ▽)`.
#[derive(Clone, Debug)]
pub struct DamageQp {
    pub qp: BoxQp,
    /// Nodal damage driving coefficients `∫ ½(ℂ₁-ℂ₀)e_el:e_el φ_i dx`, J.
    pub driving: Vec<f64>,
    pub zeta_prev: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DamageQpSolution {
    pub zeta: Vec<f64>,
    /// Healing increment `ζ△ = (Δζ)⁺`.
    pub zeta_up: Vec<f64>,
    /// Damage increment `ζ▽ = (Δζ)⁻`.
    pub zeta_down: Vec<f64>,
    /// Nodal multiplier of the box `[0, 1]`, J.
    pub xi_const: Vec<f64>,
    /// Nodal gradient of the smooth part of the energy at the new `ζ`,
    /// `driving + K ζ`, J.
    pub smooth_gradient: Vec<f64>,
    pub driving: Vec<f64>,
    /// Lumped dissipation `Σ_i w_i (a ζ▽_i + b ζ△_i)`, J.
    pub dissipated: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Nodal driving coefficients for the elastic strains `e(u) - π`.
pub fn driving_coefficients(model: &Model, u: &[[f64; 2]], pi: &[Sym2]) -> Vec<f64> {
    let mesh = &model.mesh;
    let mut g = vec![0.0; mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        let e_el = mesh.element_strain(e, u) - pi[e];
        let share = mesh.element_area[e] / 3.0 * model.params.damage_driving_density(&e_el);
        for &v in &mesh.elements[e] {
            g[v] += share;
        }
    }
    g
}

fn stacked_hessian(k: &CsMat<f64>) -> CsMat<f64> {
    let n = k.rows();
    let mut t = TriMat::with_capacity((2 * n, 2 * n), 4 * k.nnz());
    for (v, (i, j)) in k.iter() {
        t.add_triplet(i, j, *v);
        t.add_triplet(i + n, j + n, *v);
        t.add_triplet(i, j + n, -*v);
        t.add_triplet(i + n, j, -*v);
    }
    t.to_csr()
}

pub fn assemble_damage_qp(
    model: &Model,
    u: &[[f64; 2]],
    pi: &[Sym2],
    zeta_prev: &[f64],
) -> Result<DamageQp> {
    let n = model.mesh.n_nodes();
    check_len("displacement", n, u.len())?;
    check_len("plastic strain", model.mesh.n_elements(), pi.len())?;
    check_len("previous damage", n, zeta_prev.len())?;
    if let Some(&z) = zeta_prev.iter().find(|z| !(0.0..=1.0).contains(*z)) {
        return Err(Error::DamageOutOfRange(z));
    }
    let p = &model.params;
    let w = &model.mesh.lumped_weight;
    let driving = driving_coefficients(model, u, pi);
    let kz = spmv(model.gradient_stiffness(), zeta_prev);
    let mut linear = vec![0.0; 2 * n];
    let mut lower = vec![0.0; 2 * n];
    let mut upper = vec![0.0; 2 * n];
    for i in 0..n {
        let smooth = kz[i] + driving[i];
        linear[i] = smooth + p.b * w[i];
        linear[n + i] = -smooth + p.a * w[i];
        lower[i] = 0.0;
        upper[i] = 1.0 - zeta_prev[i];
        lower[n + i] = 0.0;
        upper[n + i] = zeta_prev[i];
    }
    let qp = BoxQp::new(stacked_hessian(model.gradient_stiffness()), linear, lower, upper)?;
    Ok(DamageQp {
        qp,
        driving,
        zeta_prev: zeta_prev.to_vec(),
    })
}

/// Lumped damage dissipation `Σ_i w_i (a (Δζ_i)⁻ + b (Δζ_i)⁺)`, J.
pub fn damage_dissipation(model: &Model, zeta_prev: &[f64], zeta: &[f64]) -> f64 {
    zeta_prev
        .iter()
        .zip(zeta)
        .zip(&model.mesh.lumped_weight)
        .map(|((zp, z), w)| w * dissipation_density_damage(z - zp, &model.params))
        .sum()
}

/// `E(u, π, ζ) + R₂(ζ - ζ_prev)`, the functional minimized by the damage step.
pub fn damage_step_functional(
    model: &Model,
    u: &[[f64; 2]],
    pi: &[Sym2],
    zeta_prev: &[f64],
    zeta: &[f64],
) -> Result<f64> {
    let state = State {
        u: u.to_vec(),
        pi: pi.to_vec(),
        zeta: zeta.to_vec(),
    };
    Ok(model.total_energy(&state)? + damage_dissipation(model, zeta_prev, zeta))
}

pub fn solve_damage(
    model: &Model,
    u: &[[f64; 2]],
    pi: &[Sym2],
    zeta_prev: &[f64],
    opts: &DamageOptions,
) -> Result<DamageQpSolution> {
    let n = model.mesh.n_nodes();
    let dq = assemble_damage_qp(model, u, pi, zeta_prev)?;
    let qp_opts = QpOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
    };
    let sol = solve_box_qp(&dq.qp, &vec![0.0; 2 * n], qp_opts)?;

    let p = &model.params;
    let w = &model.mesh.lumped_weight;
    let mut up = sol.x[..n].to_vec();
    let mut down = sol.x[n..].to_vec();
    for i in 0..n {
        // removing a common part only lowers the objective by (a + b) w_i m
        let m = up[i].min(down[i]);
        up[i] -= m;
        down[i] -= m;
    }
    let zeta: Vec<f64> = (0..n)
        .map(|i| ((zeta_prev[i] + up[i]) - down[i]).clamp(0.0, 1.0))
        .collect();
    let kz = spmv(model.gradient_stiffness(), &zeta);
    let smooth_gradient: Vec<f64> = (0..n).map(|i| dq.driving[i] + kz[i]).collect();
    let xi_const = (0..n)
        .map(|i| {
            let g = smooth_gradient[i];
            let (lo, hi) = (-p.a * w[i], p.b * w[i]);
            let delta = zeta[i] - zeta_prev[i];
            let slope = if delta < 0.0 {
                lo
            } else if delta > 0.0 {
                hi
            } else {
                (-g).clamp(lo, hi)
            };
            let xi = -g - slope;
            if zeta[i] == 1.0 {
                xi.max(0.0)
            } else if zeta[i] == 0.0 {
                xi.min(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let dissipated = (0..n)
        .map(|i| w[i] * (p.a * down[i] + p.b * up[i]))
        .sum();
    Ok(DamageQpSolution {
        zeta,
        zeta_up: up,
        zeta_down: down,
        xi_const,
        smooth_gradient,
        driving: dq.driving,
        dissipated,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
    })
}
