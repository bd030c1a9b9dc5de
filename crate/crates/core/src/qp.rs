//! Box-constrained convex quadratic programs
//! `min ½ xᵀHx + cᵀx  s.t.  l ≤ x ≤ u` with `H` symmetric positive
//! semidefinite.
//!
//! Each outer iteration takes one projected-gradient step with a
//! Barzilai-Borwein length and then a conjugate-gradient Newton step on the
//! face of the variables that are not held by a bound, both followed by a
//! projected Armijo search. Every iterate is feasible by construction.

use sprs::CsMat;
use thiserror::Error;

use crate::linalg::{dot, inf_norm_bound, norm_inf, spmv};

#[derive(Debug, Error)]
pub enum QpError {
    #[error("invalid problem: {0}")]
    Invalid(String),

    #[error("starting point violates bound {index}")]
    Infeasible { index: usize },

    #[error("Hessian is not positive semidefinite (curvature {curvature:e} along a search direction)")]
    NotPsd { curvature: f64 },

    #[error("objective is unbounded below")]
    Unbounded,

    #[error("no convergence after {iterations} iterations (KKT residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<QpSolution>,
    },
}

#[derive(Clone, Debug)]
pub struct BoxQp {
    pub hessian: CsMat<f64>,
    pub linear: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxQp {
    pub fn new(
        hessian: CsMat<f64>,
        linear: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<BoxQp, QpError> {
        let n = linear.len();
        if hessian.rows() != n || hessian.cols() != n {
            return Err(QpError::Invalid(format!(
                "Hessian is {}x{}, linear term has length {n}",
                hessian.rows(),
                hessian.cols()
            )));
        }
        if lower.len() != n || upper.len() != n {
            return Err(QpError::Invalid("bound vectors have the wrong length".into()));
        }
        if !linear.iter().all(|v| v.is_finite()) || hessian.data().iter().any(|v| !v.is_finite())
        {
            return Err(QpError::Invalid("non-finite data".into()));
        }
        if let Some(i) = (0..n).find(|&i| !(lower[i] <= upper[i])) {
            return Err(QpError::Invalid(format!(
                "bounds cross at {i}: {} > {}",
                lower[i], upper[i]
            )));
        }
        let hessian = if hessian.is_csr() { hessian } else { hessian.to_csr() };
        let transposed = hessian.transpose_view().to_csr();
        let diff = &hessian - &transposed;
        let scale = hessian.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let asym = diff.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(QpError::Invalid(format!("Hessian is not symmetric (defect {asym:e})")));
        }
        Ok(BoxQp {
            hessian,
            linear,
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = spmv(&self.hessian, x);
        for (gi, ci) in g.iter_mut().zip(&self.linear) {
            *gi += ci;
        }
        g
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let g = self.gradient(x);
        self.objective_from_gradient(x, &g)
    }

    fn objective_from_gradient(&self, x: &[f64], g: &[f64]) -> f64 {
        // ½ xᵀHx + cᵀx = ½ xᵀ(g + c)
        x.iter()
            .zip(g.iter().zip(&self.linear))
            .map(|(xi, (gi, ci))| 0.5 * xi * (gi + ci))
            .sum()
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((xi, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *xi = xi.clamp(*l, *u);
        }
    }

    /// `‖x − clamp(x − ∇q(x))‖_∞`.
    pub fn kkt_residual(&self, x: &[f64]) -> f64 {
        pg_residual(self, x, &self.gradient(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpOptions {
    /// Relative tolerance on the projected-gradient residual, scaled by
    /// `max(1, ‖c‖_∞)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub multiplier_lower: Vec<f64>,
    pub multiplier_upper: Vec<f64>,
    pub kkt_residual: f64,
    pub objective: f64,
    pub iterations: usize,
}

fn pg_residual(qp: &BoxQp, x: &[f64], g: &[f64]) -> f64 {
    (0..x.len())
        .map(|i| (x[i] - (x[i] - g[i]).clamp(qp.lower[i], qp.upper[i])).abs())
        .fold(0.0, f64::max)
}

/// A variable is held when it sits on a bound and the gradient pushes it
/// outward. A zero partial derivative at a bound does not hold it.
fn held(qp: &BoxQp, x: &[f64], g: &[f64], i: usize) -> bool {
    (x[i] <= qp.lower[i] && g[i] > 0.0) || (x[i] >= qp.upper[i] && g[i] < 0.0)
}

struct Iterate {
    x: Vec<f64>,
    g: Vec<f64>,
    f: f64,
}

enum FaceStep {
    Newton(Vec<f64>),
    Ray(Vec<f64>),
}

/// Largest step along `d` after which every moving coordinate is clamped.
fn last_breakpoint(qp: &BoxQp, x: &[f64], d: &[f64]) -> f64 {
    let mut t = 0.0f64;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            t = t.max((qp.upper[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            t = t.max((qp.lower[i] - x[i]) / d[i]);
        }
    }
    t
}

/// Projected Armijo backtracking along `d` starting from step `alpha`.
/// Returns `None` when no decrease is found.
fn projected_search(qp: &BoxQp, it: &Iterate, d: &[f64], mut alpha: f64) -> Option<Iterate> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return None;
    }
    for _ in 0..80 {
        let mut x: Vec<f64> = it.x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
        qp.project(&mut x);
        let slope: f64 = (0..x.len()).map(|i| it.g[i] * (x[i] - it.x[i])).sum();
        if slope >= 0.0 {
            if x == it.x {
                return None;
            }
            alpha *= 0.5;
            continue;
        }
        let g = qp.gradient(&x);
        let f = qp.objective_from_gradient(&x, &g);
        if f <= it.f + 1e-4 * slope {
            return Some(Iterate { x, g, f });
        }
        alpha *= 0.5;
    }
    None
}

/// Conjugate gradients for `H_FF δ = −g_F` on the free face, started at 0.
fn face_cg(
    qp: &BoxQp,
    it: &Iterate,
    free: &[bool],
    hnorm: f64,
    target: f64,
) -> Result<FaceStep, QpError> {
    let n = it.x.len();
    let n_free = free.iter().filter(|&&f| f).count();
    let mut delta = vec![0.0; n];
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { -it.g[i] } else { 0.0 }).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let cap = (2 * n_free).max(20);
    for k in 0..cap {
        if norm_inf(&r) <= 0.1 * target {
            break;
        }
        let mut hp = spmv(&qp.hessian, &p);
        for i in 0..n {
            if !free[i] {
                hp[i] = 0.0;
            }
        }
        let curvature = dot(&p, &hp);
        let pp = dot(&p, &p);
        if curvature < -1e-12 * hnorm * pp {
            return Err(QpError::NotPsd {
                curvature: curvature / pp,
            });
        }
        if curvature <= 1e-14 * hnorm * pp {
            return Ok(if k == 0 {
                FaceStep::Ray(p)
            } else {
                FaceStep::Newton(delta)
            });
        }
        let alpha = rr / curvature;
        for i in 0..n {
            delta[i] += alpha * p[i];
            r[i] -= alpha * hp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Ok(FaceStep::Newton(delta))
}

fn finish(qp: &BoxQp, it: Iterate, iterations: usize) -> QpSolution {
    let n = it.x.len();
    let mut ml = vec![0.0; n];
    let mut mu = vec![0.0; n];
    for i in 0..n {
        let (x, g) = (it.x[i], it.g[i]);
        let at_lower = x <= qp.lower[i];
        let at_upper = x >= qp.upper[i];
        if at_lower && g > 0.0 {
            ml[i] = g;
        } else if at_upper && g < 0.0 {
            mu[i] = -g;
        }
    }
    let kkt_residual = pg_residual(qp, &it.x, &it.g);
    QpSolution {
        x: it.x,
        multiplier_lower: ml,
        multiplier_upper: mu,
        kkt_residual,
        objective: it.f,
        iterations,
    }
}

pub fn solve_box_qp(qp: &BoxQp, x0: &[f64], opts: QpOptions) -> Result<QpSolution, QpError> {
    let n = qp.dim();
    if x0.len() != n {
        return Err(QpError::Invalid(format!(
            "starting point has length {}, expected {n}",
            x0.len()
        )));
    }
    if let Some(index) = (0..n).find(|&i| !(qp.lower[i] <= x0[i] && x0[i] <= qp.upper[i])) {
        return Err(QpError::Infeasible { index });
    }
    let hnorm = inf_norm_bound(&qp.hessian);
    if let Some(d) = qp.hessian.diag().iter().find(|(_, &v)| v < -1e-12 * hnorm) {
        return Err(QpError::NotPsd { curvature: *d.1 });
    }
    let target = opts.tol * norm_inf(&qp.linear).max(1.0);

    let g = qp.gradient(x0);
    let f = qp.objective_from_gradient(x0, &g);
    let mut it = Iterate {
        x: x0.to_vec(),
        g,
        f,
    };
    let mut bb: Option<f64> = None;
    for iteration in 0..opts.max_iter {
        if pg_residual(qp, &it.x, &it.g) <= target {
            return Ok(finish(qp, it, iteration));
        }
        let mut progressed = false;

        // projected gradient step
        let d: Vec<f64> = (0..n)
            .map(|i| if held(qp, &it.x, &it.g, i) { 0.0 } else { -it.g[i] })
            .collect();
        let alpha = match bb {
            Some(a) => a,
            None => {
                let mut hd = spmv(&qp.hessian, &d);
                for i in 0..n {
                    if d[i] == 0.0 {
                        hd[i] = 0.0;
                    }
                }
                let curv = dot(&d, &hd);
                let dd = dot(&d, &d);
                if curv > 1e-14 * hnorm * dd {
                    dd / curv
                } else {
                    let t = last_breakpoint(qp, &it.x, &d);
                    if !t.is_finite() {
                        return Err(QpError::Unbounded);
                    }
                    t
                }
            }
        };
        if let Some(next) = projected_search(qp, &it, &d, alpha) {
            let s: Vec<f64> = next.x.iter().zip(&it.x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.g.iter().zip(&it.g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            bb = (sy > 0.0).then(|| dot(&s, &s) / sy);
            it = next;
            progressed = true;
        } else {
            bb = None;
        }
        if pg_residual(qp, &it.x, &it.g) <= target {
            return Ok(finish(qp, it, iteration + 1));
        }

        // Newton step on the free face
        let free: Vec<bool> = (0..n)
            .map(|i| qp.lower[i] < qp.upper[i] && !held(qp, &it.x, &it.g, i))
            .collect();
        let next = match face_cg(qp, &it, &free, hnorm, target)? {
            FaceStep::Newton(d) => projected_search(qp, &it, &d, 1.0),
            FaceStep::Ray(d) => {
                let t = last_breakpoint(qp, &it.x, &d);
                if !t.is_finite() {
                    return Err(QpError::Unbounded);
                }
                projected_search(qp, &it, &d, t)
            }
        };
        if let Some(next) = next {
            it = next;
            progressed = true;
        }
        if !progressed {
            // no representable decrease remains
            let residual = pg_residual(qp, &it.x, &it.g);
            return Err(QpError::NotConverged {
                iterations: iteration + 1,
                residual,
                best: Box::new(finish(qp, it, iteration + 1)),
            });
        }
    }
    let residual = pg_residual(qp, &it.x, &it.g);
    Err(QpError::NotConverged {
        iterations: opts.max_iter,
        residual,
        best: Box::new(finish(qp, it, opts.max_iter)),
    })
}
