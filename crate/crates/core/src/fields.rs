//! Discrete state, load program and the global finite-element operators.
//!
//! Displacements are P1 (nodal), plastic strains P0 (elementwise) and
//! damage P1. Every elementwise integrand is evaluated with one-point
//! quadrature at the centroid, which is exact here: strains are constant
//! per element and the stored energy is affine in ζ.

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::material::MaterialParams;
use crate::mesh::{BoundaryTags, Mesh, Reflection, Variant};
use crate::tensor::Sym2;

/// Evolving state `(u, π, ζ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Nodal displacement, m.
    pub u: Vec<[f64; 2]>,
    /// Elementwise deviatoric plastic strain.
    pub pi: Vec<Sym2>,
    /// Nodal damage, 1 intact and 0 fully damaged.
    pub zeta: Vec<f64>,
}

impl State {
    /// Undeformed, plastically virgin, intact material.
    pub fn virgin(mesh: &Mesh) -> State {
        State {
            u: vec![[0.0; 2]; mesh.n_nodes()],
            pi: vec![Sym2::ZERO; mesh.n_elements()],
            zeta: vec![1.0; mesh.n_nodes()],
        }
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        check_len("displacement", mesh.n_nodes(), self.u.len())?;
        check_len("plastic strain", mesh.n_elements(), self.pi.len())?;
        check_len("damage", mesh.n_nodes(), self.zeta.len())?;
        if let Some(&z) = self.zeta.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return Err(Error::DamageOutOfRange(z));
        }
        if let Some(p) = self.pi.iter().find(|p| p.trace().abs() > 1e-10) {
            return Err(Error::NotDeviatoric(p.trace()));
        }
        Ok(())
    }

    /// Image of the state under a mirror symmetry `y ↦ 1 - y`.
    pub fn reflected(&self, r: &Reflection) -> State {
        let mut out = self.clone();
        for (i, &j) in r.nodes.iter().enumerate() {
            out.u[j] = [self.u[i][0], -self.u[i][1]];
            out.zeta[j] = self.zeta[i];
        }
        for (e, &f) in r.elements.iter().enumerate() {
            out.pi[f] = self.pi[e].reflect_y();
        }
        out
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}

/// Hard-device horizontal loading: the right edge is pulled by
/// `w(t) = ramp_rate · t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    /// Final process time (dimensionless).
    pub t_end: f64,
    /// Time step.
    pub tau: f64,
    /// Prescribed horizontal shift per unit process time, m.
    pub ramp_rate: f64,
    pub variant: Variant,
    /// Body force per volume, N/m³.
    pub body_force: [f64; 2],
}

impl LoadProgram {
    /// 80 units of process time, 1 mm per unit, τ = 1, no body force.
    pub fn reference(variant: Variant) -> Self {
        LoadProgram {
            t_end: 80.0,
            tau: 1.0,
            ramp_rate: 1e-3,
            variant,
            body_force: [0.0; 2],
        }
    }

    /// Number of steps `t_end / τ`; fails unless that ratio is an integer.
    pub fn n_steps(&self) -> Result<usize> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Load(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Load(format!("t_end must be positive, got {}", self.t_end)));
        }
        let ratio = self.t_end / self.tau;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Load(format!(
                "t_end / tau = {} / {} = {ratio} is not an integer",
                self.t_end, self.tau
            )));
        }
        Ok(n as usize)
    }

    /// `t_k`, computed so that the last step lands exactly on `t_end`.
    pub fn time(&self, k: usize, n_steps: usize) -> f64 {
        self.t_end * k as f64 / n_steps as f64
    }

    pub fn ramp(&self, t: f64) -> f64 {
        self.ramp_rate * t
    }

    /// Affine extension `u_D(t)(x, y) = (w(t) x, 0)` of the boundary data.
    pub fn dirichlet_extension(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        [self.ramp(t) * x[0], 0.0]
    }

    pub fn validate(&self) -> Result<()> {
        self.n_steps()?;
        if !self.ramp_rate.is_finite() {
            return Err(Error::Load("ramp_rate must be finite".into()));
        }
        if self.ramp_rate < 0.0 {
            return Err(Error::Load("ramp_rate must be nonnegative".into()));
        }
        if !self.body_force.iter().all(|g| g.is_finite()) {
            return Err(Error::Load("body force must be finite".into()));
        }
        Ok(())
    }
}

const FIXED: usize = usize::MAX;

/// Split of the displacement degrees of freedom `2 * node + component`
/// into prescribed and free ones.
#[derive(Clone, Debug)]
pub struct DofMap {
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
}

impl DofMap {
    fn new(n_nodes: usize, tags: &BoundaryTags) -> DofMap {
        let mut free_index = vec![0; 2 * n_nodes];
        for &v in &tags.dirichlet_xy {
            free_index[2 * v] = FIXED;
            free_index[2 * v + 1] = FIXED;
        }
        for &v in &tags.dirichlet_x {
            free_index[2 * v] = FIXED;
        }
        let mut free_dofs = Vec::new();
        for (d, slot) in free_index.iter_mut().enumerate() {
            if *slot != FIXED {
                *slot = free_dofs.len();
                free_dofs.push(d);
            }
        }
        DofMap {
            free_index,
            free_dofs,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        match self.free_index[dof] {
            FIXED => None,
            i => Some(i),
        }
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }
}

/// Stored-energy contributions, J per unit thickness.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyParts {
    pub elastic: f64,
    pub hardening: f64,
    pub gradient: f64,
    pub body_work: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.elastic + self.hardening + self.gradient - self.body_work
    }
}

/// Mesh, boundary layout, material and loading of one simulation,
/// together with the assembled ζ-gradient stiffness.
#[derive(Clone, Debug)]
pub struct Model {
    pub mesh: Mesh,
    pub tags: BoundaryTags,
    pub params: MaterialParams,
    pub load: LoadProgram,
    dofs: DofMap,
    gradient_stiffness: CsMat<f64>,
}

impl Model {
    pub fn new(
        mesh: Mesh,
        tags: BoundaryTags,
        params: MaterialParams,
        load: LoadProgram,
    ) -> Result<Model> {
        params.validate()?;
        load.validate()?;
        for list in [&tags.dirichlet_xy, &tags.dirichlet_x, &tags.free] {
            if let Some(&v) = list.iter().find(|&&v| v >= mesh.n_nodes()) {
                return Err(Error::Mesh(format!("boundary tag references node {v}")));
            }
        }
        if tags.dirichlet_x.iter().any(|v| tags.dirichlet_xy.contains(v)) {
            return Err(Error::Mesh("dirichlet_xy and dirichlet_x overlap".into()));
        }
        let dofs = DofMap::new(mesh.n_nodes(), &tags);
        let gradient_stiffness = assemble_gradient_stiffness(&mesh, params.kappa2);
        Ok(Model {
            mesh,
            tags,
            params,
            load,
            dofs,
            gradient_stiffness,
        })
    }

    /// Crossed mesh with the tension boundary layout of `load.variant`.
    pub fn tension(n_sub: usize, params: MaterialParams, load: LoadProgram) -> Result<Model> {
        let mesh = Mesh::crossed(n_sub)?;
        let tags = BoundaryTags::tension(&mesh, load.variant)?;
        Model::new(mesh, tags, params, load)
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// `κ₂ ∫ ∇φ_i · ∇φ_j dx`, symmetric positive semidefinite with the
    /// constants as kernel.
    pub fn gradient_stiffness(&self) -> &CsMat<f64> {
        &self.gradient_stiffness
    }

    /// Sets the prescribed displacement components to their values at `t`.
    pub fn impose_dirichlet(&self, u: &mut [[f64; 2]], t: f64) {
        for &v in &self.tags.dirichlet_xy {
            u[v] = self.load.dirichlet_extension(t, self.mesh.nodes[v]);
        }
        for &v in &self.tags.dirichlet_x {
            u[v][0] = self.load.dirichlet_extension(t, self.mesh.nodes[v])[0];
        }
    }

    pub fn satisfies_dirichlet(&self, u: &[[f64; 2]], t: f64, tol: f64) -> bool {
        let mut imposed = u.to_vec();
        self.impose_dirichlet(&mut imposed, t);
        imposed
            .iter()
            .zip(u)
            .all(|(a, b)| (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol)
    }

    /// `u + u_D(t_to) - u_D(t_from)`: moves a displacement that satisfies
    /// the boundary data at `t_from` onto the data at `t_to`.
    pub fn shift_dirichlet(&self, u: &[[f64; 2]], t_from: f64, t_to: f64) -> Vec<[f64; 2]> {
        let mut out: Vec<[f64; 2]> = u
            .iter()
            .zip(&self.mesh.nodes)
            .map(|(ui, &x)| {
                let a = self.load.dirichlet_extension(t_to, x);
                let b = self.load.dirichlet_extension(t_from, x);
                [ui[0] + (a[0] - b[0]), ui[1] + (a[1] - b[1])]
            })
            .collect();
        self.impose_dirichlet(&mut out, t_to);
        out
    }

    /// Nodal body load `∫ g φ_i dx`, flattened by degree of freedom.
    pub fn body_load(&self) -> Vec<f64> {
        let g = self.load.body_force;
        let mut f = vec![0.0; 2 * self.mesh.n_nodes()];
        for (v, w) in self.mesh.lumped_weight.iter().enumerate() {
            f[2 * v] = g[0] * w;
            f[2 * v + 1] = g[1] * w;
        }
        f
    }

    pub fn energy_parts(&self, state: &State) -> Result<EnergyParts> {
        state.validate(&self.mesh)?;
        let p = &self.params;
        let mut parts = EnergyParts::default();
        for e in 0..self.mesh.n_elements() {
            let area = self.mesh.element_area[e];
            let zeta = self.mesh.element_mean(e, &state.zeta);
            let strain = self.mesh.element_strain(e, &state.u);
            let pi = state.pi[e];
            parts.elastic += area * p.elastic_energy_density(&(strain - pi), zeta);
            parts.hardening += area * 0.5 * p.hardening * pi.norm_sq();
            let [gx, gy] = self.mesh.p1_gradient(e, &state.zeta);
            parts.gradient += area * 0.5 * p.kappa2 * (gx * gx + gy * gy);
        }
        let f = self.body_load();
        parts.body_work = state
            .u
            .iter()
            .enumerate()
            .map(|(v, u)| f[2 * v] * u[0] + f[2 * v + 1] * u[1])
            .sum();
        Ok(parts)
    }

    /// Stored energy `E(u, π, ζ)`, J per unit thickness. The boundary data
    /// is carried by `state.u` itself.
    pub fn total_energy(&self, state: &State) -> Result<f64> {
        Ok(self.energy_parts(state)?.total())
    }

    /// Mandel strain-displacement matrix of element `e`; column `2a + c` is
    /// component `c` of local node `a`.
    pub(crate) fn element_b(&self, e: usize) -> [[f64; 6]; 3] {
        let g = &self.mesh.grad_phi[e];
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut b = [[0.0; 6]; 3];
        for a in 0..3 {
            let [bx, by] = g[a];
            b[0][2 * a] = bx;
            b[1][2 * a + 1] = by;
            b[2][2 * a] = r * by;
            b[2][2 * a + 1] = r * bx;
        }
        b
    }

    /// `∫ Bᵀ σ dx` on all degrees of freedom.
    pub fn internal_force(&self, stresses: &[Sym2]) -> Vec<f64> {
        let mut f = vec![0.0; 2 * self.mesh.n_nodes()];
        for (e, s) in stresses.iter().enumerate() {
            let b = self.element_b(e);
            let sm = s.to_mandel();
            let area = self.mesh.element_area[e];
            let tri = self.mesh.elements[e];
            for col in 0..6 {
                let v: f64 = (0..3).map(|r| b[r][col] * sm[r]).sum();
                f[2 * tri[col / 2] + col % 2] += area * v;
            }
        }
        f
    }

    /// Stiffness `∫ Bᵀ C_e B dx` restricted to the free degrees of freedom,
    /// with one Mandel 3×3 tangent per element.
    pub fn assemble_free_stiffness(&self, tangents: &[[[f64; 3]; 3]]) -> CsMat<f64> {
        let n = self.dofs.n_free();
        let mut tri = TriMat::with_capacity((n, n), 36 * self.mesh.n_elements());
        for (e, c) in tangents.iter().enumerate() {
            let b = self.element_b(e);
            let area = self.mesh.element_area[e];
            let nodes = self.mesh.elements[e];
            // C B
            let mut cb = [[0.0; 6]; 3];
            for r in 0..3 {
                for col in 0..6 {
                    cb[r][col] = (0..3).map(|k| c[r][k] * b[k][col]).sum();
                }
            }
            for i in 0..6 {
                let Some(fi) = self.dofs.free_index(2 * nodes[i / 2] + i % 2) else {
                    continue;
                };
                for j in 0..6 {
                    let Some(fj) = self.dofs.free_index(2 * nodes[j / 2] + j % 2) else {
                        continue;
                    };
                    let kij: f64 = (0..3).map(|r| b[r][i] * cb[r][j]).sum();
                    tri.add_triplet(fi, fj, area * kij);
                }
            }
        }
        tri.to_csr()
    }

    /// Linear-elastic stiffness with moduli `ℂ(ζ̄)` on each element.
    pub fn elastic_stiffness(&self, zeta: &[f64]) -> CsMat<f64> {
        let tangents: Vec<_> = (0..self.mesh.n_elements())
            .map(|e| {
                let z = self.mesh.element_mean(e, zeta);
                let (l, m) = (self.params.lambda(z), self.params.mu(z));
                [
                    [l + 2.0 * m, l, 0.0],
                    [l, l + 2.0 * m, 0.0],
                    [0.0, 0.0, 2.0 * m],
                ]
            })
            .collect();
        self.assemble_free_stiffness(&tangents)
    }
}

fn assemble_gradient_stiffness(mesh: &Mesh, kappa2: f64) -> CsMat<f64> {
    let n = mesh.n_nodes();
    let mut tri = TriMat::with_capacity((n, n), 9 * mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let g = &mesh.grad_phi[e];
        let area = mesh.element_area[e];
        let nodes = mesh.elements[e];
        for a in 0..3 {
            for b in 0..3 {
                let v = kappa2 * area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                tri.add_triplet(nodes[a], nodes[b], v);
            }
        }
    }
    tri.to_csr()
}
