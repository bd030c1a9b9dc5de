//! Crossed triangulation of the unit square, boundary tagging and P1/P0
//! element geometry.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Sym2;

const COORD_TOL: f64 = 1e-12;

/// Triangulated domain with precomputed P1 geometry.
///
/// Element `e` has nodes `elements[e]` in counter-clockwise order, area
/// `element_area[e]` and constant basis gradients `grad_phi[e][a]` for
/// its local nodes `a = 0, 1, 2`.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 3]>,
    pub element_area: Vec<f64>,
    pub grad_phi: Vec<[[f64; 2]; 3]>,
    /// One third of the total area of the triangles around each node, i.e.
    /// `∫ φ_i dx`. Used for lumped nodal integration.
    pub lumped_weight: Vec<f64>,
    n_sub: Option<usize>,
}

impl Mesh {
    /// Structured mesh of `n_sub × n_sub` squares, each split into four
    /// triangles through its centre.
    ///
    /// Nodes are numbered row-major over the square vertices first
    /// (`j * (n_sub + 1) + i`), then row-major over the cell centres.
    /// Each cell contributes its bottom, right, top and left triangle, in
    /// that order.
    pub fn crossed(n_sub: usize) -> Result<Mesh> {
        if n_sub == 0 {
            return Err(Error::Mesh("n_sub must be at least 1".into()));
        }
        let n = n_sub;
        let h = 1.0 / n as f64;
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1) + n * n);
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        for j in 0..n {
            for i in 0..n {
                nodes.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            }
        }
        let vertex = |i: usize, j: usize| j * (n + 1) + i;
        let centre = |i: usize, j: usize| (n + 1) * (n + 1) + j * n + i;
        let mut elements = Vec::with_capacity(4 * n * n);
        for j in 0..n {
            for i in 0..n {
                let c = centre(i, j);
                let (v00, v10) = (vertex(i, j), vertex(i + 1, j));
                let (v11, v01) = (vertex(i + 1, j + 1), vertex(i, j + 1));
                elements.push([v00, v10, c]);
                elements.push([v10, v11, c]);
                elements.push([v11, v01, c]);
                elements.push([v01, v00, c]);
            }
        }
        let mut mesh = Mesh::from_parts(nodes, elements)?;
        mesh.n_sub = Some(n_sub);
        Ok(mesh)
    }

    /// Mesh from explicit nodes and counter-clockwise triangles.
    pub fn from_parts(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 3]>) -> Result<Mesh> {
        let mut element_area = Vec::with_capacity(elements.len());
        let mut grad_phi = Vec::with_capacity(elements.len());
        let mut lumped_weight = vec![0.0; nodes.len()];
        for (e, tri) in elements.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= nodes.len()) {
                return Err(Error::Mesh(format!(
                    "element {e} references node {bad} of {}",
                    nodes.len()
                )));
            }
            let [p1, p2, p3] = tri.map(|v| nodes[v]);
            let det = (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p3[0] - p1[0]) * (p2[1] - p1[1]);
            if det <= 0.0 {
                return Err(Error::Mesh(format!(
                    "element {e} is degenerate or clockwise"
                )));
            }
            let area = 0.5 * det;
            element_area.push(area);
            grad_phi.push([
                [(p2[1] - p3[1]) / det, (p3[0] - p2[0]) / det],
                [(p3[1] - p1[1]) / det, (p1[0] - p3[0]) / det],
                [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            ]);
            for &v in tri {
                lumped_weight[v] += area / 3.0;
            }
        }
        Ok(Mesh {
            nodes,
            elements,
            element_area,
            grad_phi,
            lumped_weight,
            n_sub: None,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Subdivisions per side, for meshes built by [`Mesh::crossed`].
    pub fn n_sub(&self) -> Option<usize> {
        self.n_sub
    }

    pub fn total_area(&self) -> f64 {
        self.element_area.iter().sum()
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let [a, b, c] = self.elements[e].map(|v| self.nodes[v]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Element-constant small strain `sym ∇u` of a nodal P1 displacement.
    pub fn p1_strain(&self, u: &[[f64; 2]]) -> Result<Vec<Sym2>> {
        if u.len() != self.n_nodes() {
            return Err(Error::Dimension {
                what: "nodal displacement",
                expected: self.n_nodes(),
                got: u.len(),
            });
        }
        Ok((0..self.n_elements())
            .map(|e| self.element_strain(e, u))
            .collect())
    }

    pub(crate) fn element_strain(&self, e: usize, u: &[[f64; 2]]) -> Sym2 {
        let tri = &self.elements[e];
        let g = &self.grad_phi[e];
        let mut s = Sym2::ZERO;
        for a in 0..3 {
            let ua = u[tri[a]];
            s.xx += ua[0] * g[a][0];
            s.yy += ua[1] * g[a][1];
            s.xy += 0.5 * (ua[0] * g[a][1] + ua[1] * g[a][0]);
        }
        s
    }

    /// Constant gradient of a nodal P1 scalar on element `e`.
    pub fn p1_gradient(&self, e: usize, f: &[f64]) -> [f64; 2] {
        let tri = &self.elements[e];
        let g = &self.grad_phi[e];
        // differences against the first node make constants map to exactly 0
        let f0 = f[tri[0]];
        let mut out = [0.0; 2];
        for a in 1..3 {
            out[0] += (f[tri[a]] - f0) * g[a][0];
            out[1] += (f[tri[a]] - f0) * g[a][1];
        }
        out
    }

    /// Mean of a nodal field over the three nodes of element `e` (its value
    /// at the centroid).
    pub fn element_mean(&self, e: usize, f: &[f64]) -> f64 {
        let [a, b, c] = self.elements[e];
        (f[a] + f[b] + f[c]) / 3.0
    }

    pub fn is_on_boundary(&self, v: usize) -> bool {
        let [x, y] = self.nodes[v];
        x.abs() < COORD_TOL
            || (x - 1.0).abs() < COORD_TOL
            || y.abs() < COORD_TOL
            || (y - 1.0).abs() < COORD_TOL
    }

    /// Node and element permutations induced by the reflection
    /// `y ↦ 1 - y`. Fails if the mesh is not mirror symmetric.
    pub fn reflect_y(&self) -> Result<Reflection> {
        let key = |p: [f64; 2]| {
            (
                (p[0] / COORD_TOL * 1e-3).round() as i64,
                (p[1] / COORD_TOL * 1e-3).round() as i64,
            )
        };
        let lookup: HashMap<_, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &p)| (key(p), i))
            .collect();
        let nodes = self
            .nodes
            .iter()
            .map(|p| {
                lookup
                    .get(&key([p[0], 1.0 - p[1]]))
                    .copied()
                    .ok_or_else(|| Error::Mesh("mesh is not symmetric about y = 1/2".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        let sorted = |t: [usize; 3]| {
            let mut t = t;
            t.sort_unstable();
            t
        };
        let by_nodes: HashMap<[usize; 3], usize> = self
            .elements
            .iter()
            .enumerate()
            .map(|(e, &t)| (sorted(t), e))
            .collect();
        let elements = self
            .elements
            .iter()
            .map(|t| {
                by_nodes
                    .get(&sorted(t.map(|v| nodes[v])))
                    .copied()
                    .ok_or_else(|| Error::Mesh("element set is not symmetric about y = 1/2".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Reflection { nodes, elements })
    }
}

/// Permutations induced by a mirror symmetry: node `i` maps to
/// `nodes[i]`, element `e` to `elements[e]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reflection {
    pub nodes: Vec<usize>,
    pub elements: Vec<usize>,
}

/// Boundary condition layout of the tension experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Right edge loaded only above `y = 1/6`; the bottom part stays free.
    Asymmetric,
    /// Whole right edge loaded.
    Symmetric,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Asymmetric => "asymmetric",
            Variant::Symmetric => "symmetric",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "asymmetric" => Ok(Variant::Asymmetric),
            "symmetric" => Ok(Variant::Symmetric),
            other => Err(format!("unknown variant `{other}` (asymmetric|symmetric)")),
        }
    }
}

/// Node sets of the boundary parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryTags {
    /// Both displacement components prescribed (left edge).
    pub dirichlet_xy: Vec<usize>,
    /// Horizontal component prescribed, vertical traction free (right edge).
    pub dirichlet_x: Vec<usize>,
    /// Remaining boundary nodes, traction free.
    pub free: Vec<usize>,
}

impl BoundaryTags {
    /// The left edge fully clamped, the right edge horizontally driven
    /// (only for `y >= 1/6` in the asymmetric variant).
    pub fn tension(mesh: &Mesh, variant: Variant) -> Result<BoundaryTags> {
        if variant == Variant::Asymmetric {
            let aligned = match mesh.n_sub() {
                Some(n) => n % 6 == 0,
                None => mesh.nodes.iter().any(|p| {
                    (p[0] - 1.0).abs() < COORD_TOL && (p[1] - 1.0 / 6.0).abs() < COORD_TOL
                }),
            };
            if !aligned {
                return Err(Error::AsymmetricSplit(mesh.n_sub().unwrap_or(0)));
            }
        }
        let mut tags = BoundaryTags {
            dirichlet_xy: Vec::new(),
            dirichlet_x: Vec::new(),
            free: Vec::new(),
        };
        for (v, p) in mesh.nodes.iter().enumerate() {
            if !mesh.is_on_boundary(v) {
                continue;
            }
            if p[0].abs() < COORD_TOL {
                tags.dirichlet_xy.push(v);
            } else if (p[0] - 1.0).abs() < COORD_TOL
                && (variant == Variant::Symmetric || p[1] >= 1.0 / 6.0 - COORD_TOL)
            {
                tags.dirichlet_x.push(v);
            } else {
                tags.free.push(v);
            }
        }
        Ok(tags)
    }
}

/// Shorthand for [`BoundaryTags::tension`].
pub fn tag_boundaries(mesh: &Mesh, variant: Variant) -> Result<BoundaryTags> {
    BoundaryTags::tension(mesh, variant)
}
