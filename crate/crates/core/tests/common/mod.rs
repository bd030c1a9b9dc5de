//! Independent reference solvers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use plastdam::material::MaterialParams;
use plastdam::qp::BoxQp;
use plastdam::tensor::Sym2;
use rand::Rng;
use sprs::TriMat;

/// Dense copy of a box QP.
pub struct DenseQp {
    pub h: DMatrix<f64>,
    pub c: DVector<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DenseQp {
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.c.dot(x)
    }

    pub fn to_sparse(&self) -> BoxQp {
        let n = self.c.len();
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            for j in 0..n {
                if self.h[(i, j)] != 0.0 {
                    t.add_triplet(i, j, self.h[(i, j)]);
                }
            }
        }
        BoxQp::new(t.to_csr(), self.c.iter().copied().collect(), self.lo.clone(), self.hi.clone()).unwrap()
    }

    fn clamp(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }

    fn pg_residual(&self, x: &DVector<f64>) -> f64 {
        let g = &self.h * x + &self.c;
        (0..x.len())
            .map(|i| (x[i] - (x[i] - g[i]).clamp(self.lo[i], self.hi[i])).abs())
            .fold(0.0, f64::max)
    }
}

/// Random PSD instance of dimension `n`: `H = GᵀG` of random rank, some
/// fixed variables, some wide boxes.
pub fn random_qp(rng: &mut impl Rng, n: usize) -> DenseQp {
    let rank = rng.gen_range(0..=n);
    let g = DMatrix::from_fn(rank, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut h = g.transpose() * g;
    if rng.gen_bool(0.3) {
        for i in 0..n {
            h[(i, i)] += rng.gen_range(0.0..0.1);
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    let c = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
    let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..0.5)).collect();
    let hi: Vec<f64> = lo
        .iter()
        .map(|&l| if rng.gen_bool(0.05) { l } else { l + rng.gen_range(0.0..2.0) })
        .collect();
    DenseQp { h, c, lo, hi }
}

/// Exact minimum by enumerating every assignment of the variables to
/// lower bound, upper bound or free. Singular free blocks are skipped,
/// which loses nothing: some minimizer always has a nonsingular free block.
pub fn enumerate_min(qp: &DenseQp) -> (f64, DVector<f64>) {
    let n = qp.c.len();
    let mut best = (f64::INFINITY, DVector::zeros(n));
    let mut state = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut x = DVector::from_fn(n, |i, _| match state[i] {
            0 => qp.lo[i],
            1 => qp.hi[i],
            _ => 0.0,
        });
        let ok = if free.is_empty() {
            true
        } else {
            let m = free.len();
            let hff = DMatrix::from_fn(m, m, |a, b| qp.h[(free[a], free[b])]);
            let mut rhs = DVector::from_fn(m, |a, _| -qp.c[free[a]]);
            for j in (0..n).filter(|&j| state[j] != 2) {
                for a in 0..m {
                    rhs[a] -= qp.h[(free[a], j)] * x[j];
                }
            }
            match hff.cholesky() {
                Some(ch) => {
                    let xf = ch.solve(&rhs);
                    let inside = (0..m).all(|a| {
                        let i = free[a];
                        xf[a] >= qp.lo[i] - 1e-12 && xf[a] <= qp.hi[i] + 1e-12
                    });
                    for a in 0..m {
                        x[free[a]] = xf[a];
                    }
                    inside
                }
                None => false,
            }
        };
        if ok {
            qp.clamp(&mut x);
            let f = qp.objective(&x);
            if f < best.0 {
                best = (f, x);
            }
        }
        // next assignment in base 3
        let mut i = 0;
        while i < n && state[i] == 2 {
            state[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        state[i] += 1;
    }
    best
}

/// Accelerated projected gradient with step `1/‖H‖₂`, followed by exact
/// solves on the identified face. Returns the best objective found and
/// the projected-gradient residual of that point.
pub fn long_run_min(qp: &DenseQp, iterations: usize) -> (f64, DVector<f64>, f64) {
    let n = qp.c.len();
    let lip = qp.h.clone().symmetric_eigenvalues().amax().max(1e-12);
    let mut x = DVector::from_fn(n, |i, _| 0.5 * (qp.lo[i] + qp.hi[i]));
    let mut y = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let g = &qp.h * &y + &qp.c;
        let mut xn = &y - g / lip;
        qp.clamp(&mut xn);
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &xn + (&xn - &x) * ((t - 1.0) / tn);
        qp.clamp(&mut y);
        x = xn;
        t = tn;
    }
    let mut best = (qp.objective(&x), x.clone());
    for _ in 0..20 {
        // polish: Newton on the face of variables not pushed against a bound
        let g = &qp.h * &x + &qp.c;
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lo = x[i] <= qp.lo[i] + 1e-10 && g[i] >= 0.0;
                let at_hi = x[i] >= qp.hi[i] - 1e-10 && g[i] <= 0.0;
                !(at_lo || at_hi) && qp.lo[i] < qp.hi[i]
            })
            .collect();
        if free.is_empty() {
            break;
        }
        let m = free.len();
        let hff = DMatrix::from_fn(m, m, |a, b| qp.h[(free[a], free[b])]);
        let gf = DVector::from_fn(m, |a, _| -g[free[a]]);
        let step = match hff.svd(true, true).solve(&gf, 1e-12) {
            Ok(s) => s,
            Err(_) => break,
        };
        let mut trial = x.clone();
        for a in 0..m {
            trial[free[a]] += step[a];
        }
        qp.clamp(&mut trial);
        let f = qp.objective(&trial);
        if f < best.0 {
            best = (f, trial.clone());
        }
        x = trial;
    }
    let res = qp.pg_residual(&best.1);
    (best.0, best.1, res)
}

/// Elementwise plastic objective written out from its definition.
pub fn local_objective(e: &Sym2, pi: &Sym2, pi_prev: &Sym2, zeta: f64, p: &MaterialParams) -> f64 {
    let lambda = p.lambda0 + zeta * (p.lambda1 - p.lambda0);
    let mu = p.mu0 + zeta * (p.mu1 - p.mu0);
    let (a, b, c) = (e.xx - pi.xx, e.yy - pi.yy, e.xy - pi.xy);
    let tr = a + b;
    let elastic = 0.5 * lambda * tr * tr + mu * (a * a + b * b + 2.0 * c * c);
    let hard = 0.5 * p.hardening * (pi.xx * pi.xx + pi.yy * pi.yy + 2.0 * pi.xy * pi.xy);
    let (dx, dy, dxy) = (pi.xx - pi_prev.xx, pi.yy - pi_prev.yy, pi.xy - pi_prev.xy);
    elastic + hard + p.sigma_y * (dx * dx + dy * dy + 2.0 * dxy * dxy).sqrt()
}

fn golden<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Brute-force minimizer over deviatoric `π = [[p, q], [q, -p]]`: nested
/// golden-section searches on a box that contains every minimizer, then
/// the better of that point and `π_prev` (where the objective has a kink).
pub fn brute_force_return_map(e: &Sym2, pi_prev: &Sym2, zeta: f64, p: &MaterialParams) -> (Sym2, f64) {
    let dev_norm = (0.5 * (e.xx - e.yy).powi(2) + 2.0 * e.xy * e.xy).sqrt();
    let prev_norm = (pi_prev.xx * pi_prev.xx + pi_prev.yy * pi_prev.yy + 2.0 * pi_prev.xy * pi_prev.xy).sqrt();
    let r = dev_norm.max(prev_norm) + 1e-12;
    let pi_of = |a: f64, b: f64| Sym2::new(a, -a, b);
    let obj = |a: f64, b: f64| local_objective(e, &pi_of(a, b), pi_prev, zeta, p);
    let inner = |a: f64| golden(|b| obj(a, b), -r, r, 160);
    let (a, _) = golden(|a| inner(a).1, -r, r, 160);
    let (b, f) = inner(a);
    let f_prev = obj(pi_prev.xx, pi_prev.xy);
    if f_prev <= f {
        (*pi_prev, f_prev)
    } else {
        (pi_of(a, b), f)
    }
}
