//! Property checkers shared by the proptest suite and the acceptance runner.
//! Each takes plain inputs and reports the measured error or a failure message.

#![allow(dead_code)]

use faer::Mat;
use num_complex::Complex64;
use qgraph::continuation::{continue_branch, continue_from_eig, load_branch, save_branch, BifType};
use qgraph::continuation::{ContinuationOptions, ContinuationSystem, Seed};
use qgraph::evolution::{crank_nicolson_heat, imex_euler, leapfrog_klein_gordon, sdirk443, EvolutionProblem, TimeGrid};
use qgraph::functionals::{energy_nls, inner_product, integral, mass, norm_lp};
use qgraph::linalg::{DenseLu, SparseMatrix};
use qgraph::scalar::{max_abs, Scalar};
use qgraph::stationary::{eigs, NlsProblem};
use qgraph::{build_graph, discretize, from_template, GraphOptions, MetricGraph, Nx, OperatorBundle, Result, Scheme};

/// Raw ingredients of a random connected graph.
#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub vertices: usize,
    /// Extra edges beyond the spanning path, as 0-based pairs reduced mod `vertices`.
    pub extra: Vec<(usize, usize)>,
    pub lengths: Vec<f64>,
    pub weights: Vec<f64>,
    /// Per vertex: 0 Neumann–Kirchhoff, 1 Robin, 2 Dirichlet.
    pub kinds: Vec<u8>,
    pub alpha: f64,
}

impl GraphSpec {
    pub fn graph(&self, nx: f64) -> MetricGraph {
        let nv = self.vertices.max(1);
        let mut pairs: Vec<(usize, usize)> = (1..nv).map(|i| (i, i + 1)).collect();
        pairs.extend(self.extra.iter().map(|&(s, t)| (s % nv + 1, t % nv + 1)));
        if pairs.is_empty() {
            pairs.push((1, 1));
        }
        pairs.sort();
        let pick = |v: &[f64], i: usize, d: f64| if v.is_empty() { d } else { v[i % v.len()] };
        let lengths: Vec<f64> = (0..pairs.len()).map(|i| pick(&self.lengths, i, 1.0)).collect();
        let weights: Vec<f64> = (0..pairs.len()).map(|i| pick(&self.weights, i, 1.0)).collect();
        let robin: Vec<f64> = (0..nv)
            .map(|n| match self.kinds.get(n).copied().unwrap_or(0) % 3 {
                0 => 0.0,
                1 => self.alpha,
                _ => f64::NAN,
            })
            .collect();
        let (s, t): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        build_graph(
            &s,
            &t,
            &lengths,
            GraphOptions {
                weights: Some(weights),
                robin: Some(robin),
                nx: Some(Nx::Scalar(nx)),
                ..Default::default()
            },
        )
        .unwrap()
    }
}

/// Smooth edgewise data `a sin(k x + m) + c` with per-edge phase.
pub fn smooth(b: &OperatorBundle, a: f64, k: f64, c: f64) -> Vec<f64> {
    b.sample(|m, x| a * (k * x + m as f64).sin() + c)
}

pub fn degree_sum(g: &MetricGraph) -> std::result::Result<(), String> {
    let deg: usize = (0..g.num_vertices()).map(|n| g.degree(n).unwrap()).sum();
    let ends: usize = (0..g.num_vertices()).map(|n| g.incident_ends(n).unwrap().len()).sum();
    if deg == 2 * g.num_edges() && ends == deg {
        Ok(())
    } else {
        Err(format!("degree sum {deg}, incident ends {ends}, edges {}", g.num_edges()))
    }
}

pub fn shape_identities(b: &OperatorBundle) -> std::result::Result<(), String> {
    let (ni, ne, nedges) = (b.n_int(), b.n_ext(), b.graph().num_edges());
    let checks = [
        ("N_ext = N_int + 2|E|", ne == ni + 2 * nedges),
        ("L_int", b.l_int.shape() == (ni, ne)),
        ("P_int", b.p_int.shape() == (ni, ne)),
        ("M_VC", b.m_vc.shape() == (2 * nedges, ne)),
        ("M_NH", b.m_nh.shape() == (ne, b.graph().num_vertices())),
        ("L_VC", b.l_vc.shape() == (ne, ne)),
        ("P_VC", b.p_vc.shape() == (ne, ne)),
        ("L_0", b.l_0.shape() == (ne, ne)),
        ("P_0", b.p_0.shape() == (ne, ne)),
        ("D", b.d.shape() == (ne, ne)),
    ];
    match checks.iter().find(|c| !c.1) {
        Some((name, _)) => Err(format!("{name} has the wrong shape")),
        None => Ok(()),
    }
}

/// Relative size of `L_int u` for edgewise affine `u`.
pub fn affine_residual(b: &OperatorBundle, slopes: &[f64], offsets: &[f64]) -> f64 {
    let pick = |v: &[f64], m: usize| v[m % v.len()];
    let u = b.sample(|m, x| pick(slopes, m) * x + pick(offsets, m));
    let r = max_abs(&b.l_int.mul_vec(&u));
    r / (b.l_int.max_abs() * max_abs(&u)).max(f64::MIN_POSITIVE)
}

/// Relative quadrature error on edgewise polynomials of degree `N_m + 1`.
pub fn chebyshev_quadrature_error(b: &OperatorBundle, coeffs: &[f64]) -> f64 {
    let g = b.graph();
    let mut exact = 0.0;
    let mut scale = 0.0;
    let u = b.sample(|m, x| {
        let deg = b.grid().edges[m].x_int.len() + 1;
        let l = g.edge(m).length;
        (0..=deg).map(|k| coeffs[(k + m) % coeffs.len()] * (x / l).powi(k as i32)).sum::<f64>()
    });
    for (m, e) in g.edges().iter().enumerate() {
        let deg = b.grid().edges[m].x_int.len() + 1;
        for k in 0..=deg {
            let c = coeffs[(k + m) % coeffs.len()];
            exact += e.weight * e.length * c / (k as f64 + 1.0);
            scale += e.weight * e.length * c.abs();
        }
    }
    (integral(b, &u).unwrap() - exact).abs() / scale.max(1.0)
}

/// Largest entrywise gap between the NLS Jacobian and central differences
/// with step `1e-6`, relative to `1 + |J_ij|`.
pub fn jacobian_fd_error(b: &OperatorBundle, psi: &[f64], lambda: f64) -> f64 {
    let p = NlsProblem::new(b);
    let j = p.jacobian(psi, lambda).unwrap().to_dense();
    let h = 1e-6;
    let mut worst = 0.0_f64;
    for c in 0..b.n_ext() {
        let mut up = psi.to_vec();
        let mut dn = psi.to_vec();
        up[c] += h;
        dn[c] -= h;
        let ru = p.residual(&up, lambda).unwrap();
        let rd = p.residual(&dn, lambda).unwrap();
        for r in 0..b.n_ext() {
            let fd = (ru[r] - rd[r]) / (2.0 * h);
            worst = worst.max((fd - j[(r, c)]).abs() / (1.0 + j[(r, c)].abs()));
        }
    }
    worst
}

fn cofactor_det(a: &[[i64; 4]; 4]) -> i64 {
    fn det(m: &[Vec<i64>]) -> i64 {
        if m.len() == 1 {
            return m[0][0];
        }
        (0..m.len())
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * det(&minor)
            })
            .sum()
    }
    det(&a.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

/// `(det_sign from LU, sign of the cofactor determinant)`.
pub fn det_signs(a: &[[i64; 4]; 4]) -> (i8, i8) {
    let m = Mat::<f64>::from_fn(4, 4, |i, j| a[i][j] as f64);
    (DenseLu::new(&m).det_sign(), cofactor_det(a).signum() as i8)
}

/// `F(u, Λ) = u² + Λ² − 1`.
pub struct Circle;

impl ContinuationSystem for Circle {
    fn dim(&self) -> usize {
        1
    }
    fn residual(&self, u: &[f64], l: f64) -> Result<Vec<f64>> {
        Ok(vec![u[0] * u[0] + l * l - 1.0])
    }
    fn jacobian(&self, u: &[f64], _l: f64) -> Result<SparseMatrix> {
        Ok(SparseMatrix::from_diagonal(&[2.0 * u[0]]))
    }
    fn lambda_derivative(&self, _u: &[f64], l: f64) -> Result<Vec<f64>> {
        Ok(vec![2.0 * l])
    }
    fn metric_weights(&self) -> Vec<f64> {
        vec![1.0]
    }
}

/// `F(u, Λ) = Λu − u³`.
pub struct Pitchfork;

impl ContinuationSystem for Pitchfork {
    fn dim(&self) -> usize {
        1
    }
    fn residual(&self, u: &[f64], l: f64) -> Result<Vec<f64>> {
        Ok(vec![l * u[0] - u[0].powi(3)])
    }
    fn jacobian(&self, u: &[f64], l: f64) -> Result<SparseMatrix> {
        Ok(SparseMatrix::from_diagonal(&[l - 3.0 * u[0] * u[0]]))
    }
    fn lambda_derivative(&self, u: &[f64], _l: f64) -> Result<Vec<f64>> {
        Ok(vec![u[0]])
    }
    fn metric_weights(&self) -> Vec<f64> {
        vec![1.0]
    }
}

fn open_thresholds(max_points: usize, ds: f64) -> ContinuationOptions {
    ContinuationOptions {
        n_thresh: 1e6,
        lambda_thresh: -1e6,
        max_points,
        ds,
        ..Default::default()
    }
}

/// Circle branch from angle `theta`: `(max |u² + Λ² − 1|, folds)`.
pub fn circle_oracle(theta: f64, ds: f64) -> (f64, usize) {
    let seed = Seed {
        u: vec![theta.cos()],
        lambda: theta.sin(),
        direction: vec![-theta.sin()],
        direction_lambda: theta.cos(),
    };
    let b = continue_branch(&Circle, &seed, &open_thresholds(300, ds)).unwrap();
    let worst = b
        .points
        .iter()
        .map(|p| (p.psi[0].powi(2) + p.lambda.powi(2) - 1.0).abs())
        .fold(0.0, f64::max);
    (worst, b.count(BifType::Fold))
}

/// Located pitchfork on the trivial branch started at `Λ0 < 0`.
pub fn pitchfork_oracle(lambda0: f64, ds: f64) -> Option<f64> {
    let seed = Seed {
        u: vec![0.0],
        lambda: lambda0,
        direction: vec![0.0],
        direction_lambda: 1.0,
    };
    let b = continue_branch(&Pitchfork, &seed, &open_thresholds(60, ds)).unwrap();
    b.bifurcations.first().map(|x| x.lambda)
}

/// Largest `|M_VC ψ_n|` over every state produced by each stepper.
pub fn constraint_drift(b: &OperatorBundle, u0: &[f64], tau: f64, steps: usize) -> f64 {
    let grid = TimeGrid::new(tau, tau * steps as f64, 1).unwrap();
    let worst = |states: &[Vec<Complex64>]| states[1..].iter().map(|u| max_abs(&b.m_vc.mul_vec(u))).fold(0.0, f64::max);
    let cn = crank_nicolson_heat(b, 1.0, u0, grid).unwrap();
    let v0 = vec![0.0; u0.len()];
    let lf = leapfrog_klein_gordon(b, f64::sin, u0, &v0, grid).unwrap();
    let real = [&cn.states, &lf.states]
        .iter()
        .flat_map(|s| s[1..].iter())
        .map(|u| max_abs(&b.m_vc.mul_vec(u)))
        .fold(0.0, f64::max);
    let z0: Vec<Complex64> = u0.iter().map(|&x| Complex64::new(x, 0.1 * x)).collect();
    let p = EvolutionProblem::cubic_nls(b);
    let ie = imex_euler(&p, &z0, grid).unwrap();
    let ars = sdirk443(&p, &z0, grid).unwrap();
    real.max(worst(&ie.states)).max(worst(&ars.states))
}

pub fn cauchy_schwarz_gap(b: &OperatorBundle, u: &[Complex64], v: &[Complex64]) -> f64 {
    let ip = inner_product(b, u, v).unwrap().modulus();
    let bound = mass(b, u).unwrap().sqrt() * mass(b, v).unwrap().sqrt();
    ip - bound * (1.0 + 1e-12)
}

/// Gap between `energy_nls` and the sum of its terms assembled from the
/// primitive functionals (no potential).
pub fn energy_consistency(b: &OperatorBundle, u: &[f64]) -> f64 {
    let e = energy_nls(b, u, 1.0).unwrap();
    let du = b.derivative(u);
    let vertices = b.column_to_graph(u).unwrap().vertices;
    let robin: f64 = b
        .graph()
        .vertices()
        .iter()
        .zip(&vertices)
        .filter(|(c, _)| !c.is_dirichlet())
        .map(|(c, v)| c.alpha() * v * v)
        .sum();
    let brute = mass(b, &du).unwrap() - norm_lp(b, u, 4.0).unwrap().powi(4) + robin;
    (e - brute).abs() / (1.0 + e.abs())
}

pub fn column_round_trip(b: &OperatorBundle, u: &[Complex64]) -> bool {
    let s = b.column_to_graph(u).unwrap();
    b.graph_to_column(&s.edges).unwrap() == u
}

/// Continues the dumbbell constant branch for `points` points, saves and
/// reloads it.
pub fn branch_round_trip(points: usize, ds: f64) -> std::result::Result<(), String> {
    let g = from_template("dumbbell", &Default::default()).unwrap();
    let b = discretize(&g, Scheme::Uniform).unwrap();
    let p = NlsProblem::new(&b);
    let mode = &eigs(&b, 1, None).unwrap()[0];
    let opts = ContinuationOptions {
        max_points: points,
        ds,
        ..Default::default()
    };
    let branch = continue_from_eig(&p, mode.lambda.re, &mode.real_vector(), 1, 1e-2, &opts).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_branch(dir.path(), &b, &branch).map_err(|e| e.to_string())?;
    let back = load_branch(dir.path(), &b).map_err(|e| e.to_string())?;
    if back == branch {
        Ok(())
    } else {
        Err(format!("{}-point branch changed on reload", branch.points.len()))
    }
}
