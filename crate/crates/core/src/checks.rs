//! Quick self-checks on tiny meshes, run by `plastdam check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sprs::TriMat;

use crate::damage::damage_step_functional;
use crate::diagnostics::plastic_step_functional;
use crate::error::Result;
use crate::evolution::{Simulation, SolverOptions};
use crate::fields::{LoadProgram, Model, State};
use crate::material::{plastic_local_objective, return_map, MaterialParams};
use crate::mesh::{Mesh, Variant};
use crate::qp::{solve_box_qp, BoxQp, QpOptions};
use crate::tensor::Sym2;

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, failures: Vec<String>, total: usize) -> CheckOutcome {
        let passed = failures.is_empty();
        let detail = if passed {
            format!("{total} cases")
        } else {
            format!("{} of {total} failed; first: {}", failures.len(), failures[0])
        };
        CheckOutcome { name, passed, detail }
    }
}

/// Runs every suite with the given seed.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![mesh_counts(), return_map_optimality(&mut rng), qp_kkt(&mut rng)];
    out.extend(short_run(&mut rng).unwrap_or_else(|e| {
        vec![CheckOutcome {
            name: "short run",
            passed: false,
            detail: e.to_string(),
        }]
    }));
    out.push(symmetry().unwrap_or_else(|e| CheckOutcome {
        name: "symmetry",
        passed: false,
        detail: e.to_string(),
    }));
    out
}

fn mesh_counts() -> CheckOutcome {
    let mut failures = Vec::new();
    for n in 1..=8 {
        let m = match Mesh::crossed(n) {
            Ok(m) => m,
            Err(e) => {
                failures.push(format!("n_sub={n}: {e}"));
                continue;
            }
        };
        let nodes = (n + 1) * (n + 1) + n * n;
        let area: f64 = m.element_area.iter().sum();
        let weight: f64 = m.lumped_weight.iter().sum();
        if m.n_elements() != 4 * n * n || m.n_nodes() != nodes {
            failures.push(format!("n_sub={n}: {} nodes, {} elements", m.n_nodes(), m.n_elements()));
        }
        if (area - 1.0).abs() > 1e-12 || (weight - 1.0).abs() > 1e-12 {
            failures.push(format!("n_sub={n}: area {area}, weights {weight}"));
        }
    }
    CheckOutcome::new("mesh counts", failures, 8)
}

fn random_dev(rng: &mut impl Rng, scale: f64) -> Sym2 {
    Sym2::deviatoric(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn return_map_optimality(rng: &mut impl Rng) -> CheckOutcome {
    let p = MaterialParams::reference();
    let n = 500;
    let mut failures = Vec::new();
    for i in 0..n {
        let e = Sym2::new(
            rng.gen_range(-4e-4..4e-4),
            rng.gen_range(-4e-4..4e-4),
            rng.gen_range(-4e-4..4e-4),
        );
        let pi_prev = random_dev(rng, 2e-4);
        let zeta = rng.gen_range(0.0..=1.0);
        let rm = return_map(&e, &pi_prev, zeta, &p);
        let best = plastic_local_objective(&e, &rm.pi, &pi_prev, zeta, &p);
        let driving = 2.0 * p.mu(zeta) * (e.dev() - rm.pi) - p.hardening * rm.pi;
        if rm.pi.trace() != 0.0 {
            failures.push(format!("case {i}: trace {:e}", rm.pi.trace()));
        }
        if driving.norm() > p.sigma_y * (1.0 + 1e-8) {
            failures.push(format!("case {i}: driving stress {:e}", driving.norm()));
        }
        for _ in 0..10 {
            let q = rm.pi + random_dev(rng, 1e-5);
            let f = plastic_local_objective(&e, &q, &pi_prev, zeta, &p);
            if f < best - 1e-10 * best.abs() {
                failures.push(format!("case {i}: competitor lower by {:e}", best - f));
                break;
            }
        }
    }
    CheckOutcome::new("return map optimality", failures, n)
}

fn qp_kkt(rng: &mut impl Rng) -> CheckOutcome {
    let cases = 50;
    let mut failures = Vec::new();
    for i in 0..cases {
        let n = rng.gen_range(1..=20);
        let rank = rng.gen_range(0..=n);
        let g: Vec<Vec<f64>> = (0..rank)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut tri = TriMat::new((n, n));
        for r in 0..n {
            for c in 0..n {
                let v: f64 = g.iter().map(|row| row[r] * row[c]).sum();
                if v != 0.0 {
                    tri.add_triplet(r, c, v);
                }
            }
        }
        let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..0.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.0..2.0)).collect();
        let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let qp = match BoxQp::new(tri.to_csr(), linear, lower.clone(), upper.clone()) {
            Ok(q) => q,
            Err(e) => {
                failures.push(format!("case {i}: {e}"));
                continue;
            }
        };
        let x0: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect();
        match solve_box_qp(&qp, &x0, QpOptions::default()) {
            Ok(s) => {
                let feasible = (0..n).all(|j| lower[j] <= s.x[j] && s.x[j] <= upper[j]);
                let compl = (0..n)
                    .map(|j| {
                        (s.multiplier_lower[j] * (s.x[j] - lower[j])).abs()
                            + (s.multiplier_upper[j] * (upper[j] - s.x[j])).abs()
                    })
                    .fold(0.0, f64::max);
                if !feasible || s.kkt_residual > 1e-8 || compl > 1e-8 {
                    failures.push(format!(
                        "case {i}: feasible {feasible}, residual {:e}, complementarity {compl:e}",
                        s.kkt_residual
                    ));
                }
            }
            Err(e) => failures.push(format!("case {i}: {e}")),
        }
    }
    CheckOutcome::new("box QP optimality", failures, cases)
}

fn short_run(rng: &mut impl Rng) -> Result<Vec<CheckOutcome>> {
    let mut load = LoadProgram::reference(Variant::Asymmetric);
    load.t_end = 3.0;
    load.tau = 0.5;
    let model = Model::tension(6, MaterialParams::reference(), load)?;
    let mut sim = Simulation::new(model, SolverOptions::default())?;
    let (mut balance, mut amdp, mut monotone, mut semi) = (vec![], vec![], vec![], vec![]);
    while !sim.finished() {
        let prev = sim.state().clone();
        let out = sim.step()?;
        let r = &out.record;
        let k = r.step;
        if !r.balance.holds(1e-8) {
            balance.push(format!("step {k}: {:?}", r.balance));
        }
        let diss = r.diss_plast_step + r.diss_dam_step;
        if r.amdp_step < -1e-8 * (diss + 1.0) {
            amdp.push(format!("step {k}: {:e}", r.amdp_step));
        }
        let cur = sim.state();
        if cur.zeta.iter().zip(&prev.zeta).any(|(z, zp)| z > zp || *z < 0.0) {
            monotone.push(format!("step {k}"));
        }
        if let Some(msg) = semistability_violation(sim.model(), &prev, cur, 20, rng)? {
            semi.push(format!("step {k}: {msg}"));
        }
    }
    let n = sim.steps_done();
    Ok(vec![
        CheckOutcome::new("per-step energy decrease", balance, n),
        CheckOutcome::new("residuum nonnegative", amdp, n),
        CheckOutcome::new("damage unidirectional", monotone, n),
        CheckOutcome::new("sampled semistability", semi, n),
    ])
}

/// Tries `samples` random competitors for each of the two step functionals
/// of the step `prev -> cur`; returns a description of the first that
/// improves by more than `1e-8` relative.
pub fn semistability_violation(
    model: &Model,
    prev: &State,
    cur: &State,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<Option<String>> {
    let f_pi = plastic_step_functional(model, &cur.u, &cur.pi, &prev.pi, &prev.zeta)?;
    let f_zeta = damage_step_functional(model, &cur.u, &cur.pi, &prev.zeta, &cur.zeta)?;
    for s in 0..samples {
        let mut pi = cur.pi.clone();
        for p in pi.iter_mut() {
            if rng.gen_bool(0.2) {
                *p = *p + random_dev(rng, 1e-4);
            }
        }
        let f = plastic_step_functional(model, &cur.u, &pi, &prev.pi, &prev.zeta)?;
        if f < f_pi - 1e-8 * f_pi.abs() {
            return Ok(Some(format!("plastic competitor {s} lower by {:e}", f_pi - f)));
        }
        let mut zeta = cur.zeta.clone();
        for z in zeta.iter_mut() {
            if rng.gen_bool(0.2) {
                *z = (*z + rng.gen_range(-0.5..0.5)).clamp(0.0, 1.0);
            }
        }
        let f = damage_step_functional(model, &cur.u, &cur.pi, &prev.zeta, &zeta)?;
        if f < f_zeta - 1e-8 * f_zeta.abs() {
            return Ok(Some(format!("damage competitor {s} lower by {:e}", f_zeta - f)));
        }
    }
    Ok(None)
}

fn symmetry() -> Result<CheckOutcome> {
    let mut load = LoadProgram::reference(Variant::Symmetric);
    load.t_end = 0.2;
    load.tau = 0.02;
    let model = Model::tension(6, MaterialParams::reference(), load)?;
    let reflection = model.mesh.reflect_y()?;
    let mut sim = Simulation::new(model, SolverOptions::default())?;
    let mut failures = Vec::new();
    while !sim.finished() {
        sim.step()?;
        let s = sim.state();
        if s.zeta.iter().any(|&z| z != 1.0) {
            break;
        }
        let r = s.reflected(&reflection);
        let scale = s.u.iter().map(|u| u[0].abs().max(u[1].abs())).fold(0.0, f64::max);
        let du = s
            .u
            .iter()
            .zip(&r.u)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        if du > 1e-9 * scale.max(1e-300) {
            failures.push(format!("step {}: displacement mismatch {du:e}", sim.steps_done()));
        }
    }
    Ok(CheckOutcome::new("reflection symmetry", failures, sim.steps_done()))
}
