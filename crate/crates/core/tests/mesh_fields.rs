use nalgebra::{DMatrix, DVector, Matrix3};
use plastdam::fields::{LoadProgram, Model, State};
use plastdam::material::MaterialParams;
use plastdam::mesh::{tag_boundaries, Mesh, Variant};
use plastdam::plastic::{solve_plastic, PlasticOptions};
use plastdam::tensor::Sym2;
use plastdam::Error;
use proptest::prelude::*;

#[test]
fn reference_mesh_size() {
    let m = Mesh::crossed(24).unwrap();
    assert_eq!((m.n_elements(), m.n_nodes()), (2304, 1201));
    let m = Mesh::crossed(1).unwrap();
    assert_eq!((m.n_elements(), m.n_nodes()), (4, 5));
}

#[test]
fn boundary_tags_of_both_variants() {
    let m = Mesh::crossed(24).unwrap();
    let sym = tag_boundaries(&m, Variant::Symmetric).unwrap();
    assert_eq!((sym.dirichlet_xy.len(), sym.dirichlet_x.len()), (25, 25));
    let asym = tag_boundaries(&m, Variant::Asymmetric).unwrap();
    // right-edge vertices j/24 with j/24 >= 1/6
    let expected = (0..=24).filter(|j| 6 * j >= 24).count();
    assert_eq!(expected, 21);
    assert_eq!((asym.dirichlet_xy.len(), asym.dirichlet_x.len()), (25, expected));
    for v in asym.dirichlet_x.iter().chain(&asym.dirichlet_xy).chain(&asym.free) {
        let [x, y] = m.nodes[*v];
        assert!(x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0);
    }
    assert!(asym.dirichlet_x.iter().all(|v| !asym.dirichlet_xy.contains(v)));
    let m25 = Mesh::crossed(25).unwrap();
    assert!(matches!(tag_boundaries(&m25, Variant::Asymmetric), Err(Error::AsymmetricSplit(25))));
}

#[test]
fn reflection_is_a_mesh_permutation() {
    for n in [1, 2, 5, 12] {
        let m = Mesh::crossed(n).unwrap();
        let r = m.reflect_y().unwrap();
        for (i, &j) in r.nodes.iter().enumerate() {
            assert!((m.nodes[j][0] - m.nodes[i][0]).abs() < 1e-14);
            assert!((m.nodes[j][1] - (1.0 - m.nodes[i][1])).abs() < 1e-14);
        }
        for (e, &f) in r.elements.iter().enumerate() {
            let mut image: Vec<usize> = m.elements[e].iter().map(|&v| r.nodes[v]).collect();
            let mut target = m.elements[f].to_vec();
            image.sort_unstable();
            target.sort_unstable();
            assert_eq!(image, target);
        }
        let mut seen = r.elements.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..m.n_elements()).collect::<Vec<_>>());
    }
}

#[test]
fn dirichlet_ramp_values() {
    let load = LoadProgram::reference(Variant::Symmetric);
    assert_eq!(load.n_steps().unwrap(), 80);
    let w80 = load.dirichlet_extension(80.0, [1.0, 0.3]);
    assert!((w80[0] - 0.080).abs() < 1e-15 && w80[1] == 0.0);
    let mid = load.dirichlet_extension(40.0, [0.5, 0.7]);
    assert!((mid[0] - 0.020).abs() < 1e-15 && mid[1] == 0.0);
    assert_eq!(load.dirichlet_extension(0.0, [1.0, 1.0]), [0.0, 0.0]);
}

#[test]
fn uniaxial_energy_by_hand() {
    let p = MaterialParams::reference();
    let m = Model::tension(5, p, LoadProgram::reference(Variant::Symmetric)).unwrap();
    let delta = 3e-4;
    let mut s = State::virgin(&m.mesh);
    for (u, x) in s.u.iter_mut().zip(&m.mesh.nodes) {
        *u = [delta * x[0], 0.0];
    }
    // ½ (λ + 2μ) δ² on the unit square
    let hand = 0.5 * (7.5e9 + 2.0 * 11.25e9) * delta * delta;
    let e = m.total_energy(&s).unwrap();
    assert!((e - hand).abs() <= 1e-12 * hand, "{e} vs {hand}");
    assert_eq!(m.total_energy(&State::virgin(&m.mesh)).unwrap(), 0.0);
}

/// Plane-strain linear elasticity assembled and solved densely.
fn linear_fem(model: &Model, t: f64) -> Vec<[f64; 2]> {
    let mesh = &model.mesh;
    let p = &model.params;
    let n = 2 * mesh.n_nodes();
    let (l, mu) = (p.lambda1, p.mu1);
    let d = Matrix3::new(l + 2.0 * mu, l, 0.0, l, l + 2.0 * mu, 0.0, 0.0, 0.0, mu);
    let mut k = DMatrix::<f64>::zeros(n, n);
    let mut f = DVector::<f64>::zeros(n);
    for tri in &mesh.elements {
        let [a, b, c] = tri.map(|v| mesh.nodes[v]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let area = 0.5 * det;
        let dx = [(b[1] - c[1]) / det, (c[1] - a[1]) / det, (a[1] - b[1]) / det];
        let dy = [(c[0] - b[0]) / det, (a[0] - c[0]) / det, (b[0] - a[0]) / det];
        let mut bm = DMatrix::<f64>::zeros(3, 6);
        for i in 0..3 {
            bm[(0, 2 * i)] = dx[i];
            bm[(1, 2 * i + 1)] = dy[i];
            bm[(2, 2 * i)] = dy[i];
            bm[(2, 2 * i + 1)] = dx[i];
        }
        let d_dyn = DMatrix::from_fn(3, 3, |r, c| d[(r, c)]);
        let ke = bm.transpose() * d_dyn * &bm * area;
        for i in 0..6 {
            for j in 0..6 {
                k[(2 * tri[i / 2] + i % 2, 2 * tri[j / 2] + j % 2)] += ke[(i, j)];
            }
            f[2 * tri[i / 2] + i % 2] += model.load.body_force[i % 2] * area / 3.0;
        }
    }
    let w = model.load.ramp_rate * t;
    let mut fixed = vec![None; n];
    for &v in &model.tags.dirichlet_xy {
        fixed[2 * v] = Some(w * mesh.nodes[v][0]);
        fixed[2 * v + 1] = Some(0.0);
    }
    for &v in &model.tags.dirichlet_x {
        fixed[2 * v] = Some(w * mesh.nodes[v][0]);
    }
    let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
    let ud = DVector::from_fn(n, |i, _| fixed[i].unwrap_or(0.0));
    let rhs_all = &f - &k * &ud;
    let kff = DMatrix::from_fn(free.len(), free.len(), |a, b| k[(free[a], free[b])]);
    let rhs = DVector::from_fn(free.len(), |a, _| rhs_all[free[a]]);
    let uf = kff.cholesky().expect("SPD on the constrained space").solve(&rhs);
    let mut u = ud;
    for (a, &i) in free.iter().enumerate() {
        u[i] = uf[a];
    }
    (0..mesh.n_nodes()).map(|v| [u[2 * v], u[2 * v + 1]]).collect()
}

#[test]
fn elastic_step_matches_linear_fem() {
    for (variant, n_sub, body) in [
        (Variant::Symmetric, 4, [0.0, 0.0]),
        (Variant::Symmetric, 3, [2e4, -3e4]),
        (Variant::Asymmetric, 6, [0.0, 0.0]),
    ] {
        let mut load = LoadProgram::reference(variant);
        load.body_force = body;
        let m = Model::tension(n_sub, MaterialParams::reference(), load).unwrap();
        let t = 0.02;
        let prev = State::virgin(&m.mesh);
        let (u, pi, _) = solve_plastic(&m, &prev, &prev.zeta, 0.0, t, &PlasticOptions::default()).unwrap();
        assert!(pi.iter().all(|p| *p == Sym2::ZERO), "{variant:?}: load must stay elastic");
        let oracle = linear_fem(&m, t);
        let scale = oracle.iter().map(|u| u[0].abs().max(u[1].abs())).fold(0.0, f64::max);
        for (a, b) in u.iter().zip(&oracle) {
            let d = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
            assert!(d <= 1e-10 * scale, "{variant:?} n_sub={n_sub}: {d:e} of {scale:e}");
        }
    }
}

proptest! {
    #[test]
    fn p1_strain_is_exact_for_affine_fields(
        n in 1usize..9,
        a in prop::array::uniform4(-1.0..1.0f64),
        b in prop::array::uniform2(-1.0..1.0f64),
    ) {
        let m = Mesh::crossed(n).unwrap();
        let u: Vec<[f64; 2]> = m
            .nodes
            .iter()
            .map(|x| [a[0] * x[0] + a[1] * x[1] + b[0], a[2] * x[0] + a[3] * x[1] + b[1]])
            .collect();
        let exact = Sym2::new(a[0], a[3], 0.5 * (a[1] + a[2]));
        for e in m.p1_strain(&u).unwrap() {
            prop_assert!((e - exact).max_abs() <= 1e-12);
        }
    }

    #[test]
    fn element_areas_partition_the_square(n in 1usize..49) {
        let m = Mesh::crossed(n).unwrap();
        prop_assert_eq!(m.n_elements(), 4 * n * n);
        prop_assert_eq!(m.n_nodes(), (n + 1) * (n + 1) + n * n);
        let total: f64 = m.element_area.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn energy_is_reflection_invariant(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = Model::tension(4, MaterialParams::reference(), LoadProgram::reference(Variant::Symmetric)).unwrap();
        let r = m.mesh.reflect_y().unwrap();
        let mut s = State::virgin(&m.mesh);
        for u in s.u.iter_mut() {
            *u = [rng.gen_range(-1e-4..1e-4), rng.gen_range(-1e-4..1e-4)];
        }
        for p in s.pi.iter_mut() {
            *p = Sym2::deviatoric(rng.gen_range(-1e-5..1e-5), rng.gen_range(-1e-5..1e-5));
        }
        for z in s.zeta.iter_mut() {
            *z = rng.gen_range(0.0..=1.0);
        }
        let e1 = m.total_energy(&s).unwrap();
        let e2 = m.total_energy(&s.reflected(&r)).unwrap();
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs());
    }
}
