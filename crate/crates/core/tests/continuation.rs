use qgraph::continuation::{
    bifurcation_diagram, continue_branch, continue_from_branch_point, continue_from_eig, continue_from_end,
    continue_from_branch_point_dir, continue_from_eig_dir, load_branch, save_branch, save_eigenfunctions, Axis,
    BifType, ContinuationOptions, ContinuationSystem, Continuer, DiagramRun, Seed, Termination,
};
use qgraph::linalg::SparseMatrix;
use qgraph::stationary::{eigs, NlsProblem};
use qgraph::{discretize, from_template, OperatorBundle, Result, Scheme};

/// `F(u, Λ) = u² + Λ² − 1`.
struct Circle;

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
struct Pitchfork;

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

fn wide_thresholds(max_points: usize) -> ContinuationOptions {
    ContinuationOptions {
        n_thresh: 1e6,
        lambda_thresh: -1e6,
        max_points,
        ..Default::default()
    }
}

#[test]
fn circle_passes_both_folds() {
    let seed = Seed {
        u: vec![1.05],
        lambda: 0.0,
        direction: vec![0.0],
        direction_lambda: 1.0,
    };
    let opts = wide_thresholds(400);
    let b = continue_branch(&Circle, &seed, &opts).unwrap();
    let worst = b
        .points
        .iter()
        .map(|p| (p.psi[0].powi(2) + p.lambda.powi(2) - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst}");
    let mut turned = 0.0;
    for w in b.points.windows(2) {
        let a0 = w[0].lambda.atan2(w[0].psi[0]);
        let a1 = w[1].lambda.atan2(w[1].psi[0]);
        let mut d = a1 - a0;
        if d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        turned += d;
    }
    assert!(turned > 1.5 * std::f64::consts::PI, "turned {turned}");
    assert!(b.count(BifType::Fold) >= 2, "{:?}", b.log);
    assert_eq!(b.count(BifType::BranchPoint), 0);
    for p in b.points.iter().filter(|p| p.bif_type == BifType::Fold) {
        assert!(p.psi[0].abs() < 0.2, "fold tagged at u = {}", p.psi[0]);
    }
}

#[test]
fn pitchfork_branch_point_is_located() {
    let seed = Seed {
        u: vec![0.0],
        lambda: -0.5,
        direction: vec![0.0],
        direction_lambda: 1.0,
    };
    let opts = wide_thresholds(40);
    let b = continue_branch(&Pitchfork, &seed, &opts).unwrap();
    assert_eq!(b.bifurcations.len(), 1, "{:?}", b.log);
    let bp = &b.bifurcations[0];
    assert!(bp.lambda.abs() <= 1e-8, "{}", bp.lambda);
    assert_eq!(b.points[bp.index].bif_type, BifType::BranchPoint);
    assert!((bp.null_vector[0].abs() - 1.0).abs() < 1e-12);
    for w in bp.brackets.windows(2) {
        assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1);
    }
    for sign in [1i8, -1] {
        let leg = continue_from_branch_point(&Pitchfork, &b, "trivial", bp.index, sign, &wide_thresholds(20)).unwrap();
        for p in &leg.points {
            assert!((p.psi[0].powi(2) - p.lambda).abs() < 1e-9);
            assert_eq!(p.psi[0].signum(), sign as f64);
        }
        assert!(leg.points.last().unwrap().lambda > 0.1);
    }
}

#[test]
fn monotone_segment_has_no_detection() {
    let seed = Seed {
        u: vec![0.0],
        lambda: 0.5,
        direction: vec![0.0],
        direction_lambda: 1.0,
    };
    let b = continue_branch(&Pitchfork, &seed, &wide_thresholds(15)).unwrap();
    assert!(b.bifurcations.is_empty());
    assert!(b.points.iter().all(|p| p.bif_type == BifType::Regular));
}

#[test]
fn max_points_is_exact() {
    let seed = Seed {
        u: vec![0.0],
        lambda: 0.5,
        direction: vec![0.0],
        direction_lambda: 1.0,
    };
    let b = continue_branch(&Pitchfork, &seed, &wide_thresholds(5)).unwrap();
    assert_eq!(b.points.len(), 5);
    assert_eq!(b.termination, Termination::MaxPoints);
    assert!(b.points.iter().all(|p| p.bif_type == BifType::Regular));
}

#[test]
fn tangents_are_unit_and_turn_slowly() {
    let seed = Seed {
        u: vec![1.0],
        lambda: 0.0,
        direction: vec![0.0],
        direction_lambda: 1.0,
    };
    let opts = wide_thresholds(60);
    let b = continue_branch(&Circle, &seed, &opts).unwrap();
    let c = Continuer::new(&Circle, opts.clone()).unwrap();
    for w in b.points.windows(2) {
        let (a, z) = (&w[0], &w[1]);
        assert!((c.norm(&z.tangent, z.tangent_lambda) - 1.0).abs() < 1e-10);
        let cos = c.dot(&a.tangent, a.tangent_lambda, &z.tangent, z.tangent_lambda).clamp(-1.0, 1.0);
        assert!(cos.acos().to_degrees() <= opts.max_theta + 1e-9);
    }
}

#[test]
fn invalid_options_rejected() {
    for o in [
        ContinuationOptions { max_theta: 90.0, ..Default::default() },
        ContinuationOptions { beta: 0.0, ..Default::default() },
        ContinuationOptions { min_norm_delta: -1.0, ..Default::default() },
        ContinuationOptions { max_points: 1, ..Default::default() },
    ] {
        assert!(Continuer::new(&Circle, o).is_err());
    }
}

fn dumbbell() -> OperatorBundle {
    let g = from_template("dumbbell", &Default::default()).unwrap();
    discretize(&g, Scheme::Uniform).unwrap()
}

fn first_nonzero(b: &OperatorBundle) -> f64 {
    let modes = eigs(b, 4, None).unwrap();
    let mut v: Vec<f64> = modes.iter().map(|m| m.lambda.re).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v[1]
}

#[test]
fn dumbbell_constant_branch_and_pitchfork() {
    let b = dumbbell();
    let p = NlsProblem::new(&b);
    let modes = eigs(&b, 1, None).unwrap();
    let v = modes[0].real_vector();
    let v: Vec<f64> = if v[0] < 0.0 { v.iter().map(|x| -x).collect() } else { v };
    let opts = ContinuationOptions::default();
    let branch = continue_from_eig(&p, modes[0].lambda.re, &v, 1, 1e-2, &opts).unwrap();
    let total = b.graph().weighted_length();
    for pt in &branch.points {
        let c = (-pt.lambda / 2.0).sqrt();
        let dev = pt.psi.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-8, "Lambda {} deviation {dev}", pt.lambda);
        assert!((pt.mass - (-pt.lambda / 2.0) * total).abs() < 1e-7);
    }
    assert_eq!(branch.termination, Termination::MassThreshold);
    let mu2 = first_nonzero(&b);
    let bp = &branch.bifurcations[0];
    assert!((bp.lambda - mu2 / 2.0).abs() < 1e-3, "{} vs {}", bp.lambda, mu2 / 2.0);

    let legs: Vec<_> = [1i8, -1]
        .iter()
        .map(|&s| {
            let o = ContinuationOptions { max_points: 30, ..Default::default() };
            continue_from_branch_point(&p, &branch, "branch001", bp.index, s, &o).unwrap()
        })
        .collect();
    assert_eq!(legs[0].points.len(), legs[1].points.len());
    for (a, z) in legs[0].points.iter().zip(&legs[1].points) {
        assert!((a.mass - z.mass).abs() <= 1e-6, "{} vs {}", a.mass, z.mass);
        let c = (-a.lambda / 2.0).sqrt();
        let _ = c;
    }
    let last = legs[0].points.last().unwrap();
    let c = (-last.lambda / 2.0).sqrt();
    let spread = last.psi.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
    assert!(spread > 1e-2, "leg stayed constant");
}

#[test]
fn from_end_appends_forward() {
    let b = dumbbell();
    let p = NlsProblem::new(&b);
    let modes = eigs(&b, 1, None).unwrap();
    let v = modes[0].real_vector();
    let short = ContinuationOptions { max_points: 5, ..Default::default() };
    let branch = continue_from_eig(&p, modes[0].lambda.re, &v, 1, 1e-2, &short).unwrap();
    assert_eq!(branch.points.len(), 5);
    let longer = ContinuationOptions { max_points: 9, ..Default::default() };
    let ext = continue_from_end(&p, &branch, "branch001", &longer).unwrap();
    assert_eq!(ext.points.len(), 9);
    assert_eq!(&ext.points[..5], &branch.points[..]);
    let c = Continuer::new(&p, longer).unwrap();
    for w in ext.points.windows(2) {
        let du: Vec<f64> = w[1].psi.iter().zip(&w[0].psi).map(|(a, b)| a - b).collect();
        assert!(c.dot(&du, w[1].lambda - w[0].lambda, &w[0].tangent, w[0].tangent_lambda) > 0.0);
    }
}

#[test]
fn diagram_directory_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let b = dumbbell();
    let p = NlsProblem::new(&b);
    let run = DiagramRun::create(tmp.path(), "dumbbell", &b, &p.nonlinearity).unwrap();
    assert!(run.dir.ends_with("dumbbell/001"));
    save_eigenfunctions(&run, 3).unwrap();
    let opts = ContinuationOptions { max_points: 12, ..Default::default() };
    let (n, branch) = continue_from_eig_dir(&run, 1, 1e-2, &opts).unwrap();
    assert_eq!(n, 1);
    let loaded = run.load(1).unwrap();
    for (a, z) in loaded.points.iter().zip(&branch.points) {
        assert_eq!(a.psi, z.psi);
        assert_eq!(a.tangent, z.tangent);
        assert_eq!((a.lambda, a.mass, a.energy, a.tangent_lambda, a.bif_type), (z.lambda, z.mass, z.energy, z.tangent_lambda, z.bif_type));
    }
    assert_eq!(loaded.bifurcations, branch.bifurcations);
    assert_eq!(loaded.provenance, branch.provenance);
    assert_eq!(loaded.options, branch.options);
    assert_eq!(loaded, branch);

    let full = ContinuationOptions::default();
    let (n2, b1) = continue_from_eig_dir(&run, 1, 1e-2, &full).unwrap();
    assert!(!b1.bifurcations.is_empty());
    let idx = b1.bifurcations[0].index + 1;
    let (n3, _) = continue_from_branch_point_dir(&run, n2, idx, 1, &opts).unwrap();
    assert_eq!(n3, 3);

    let reopened = DiagramRun::open(&run.dir).unwrap();
    assert_eq!(reopened.branches().unwrap(), vec![1, 2, 3]);
    let rows = bifurcation_diagram(&run.dir, Axis::Lambda, Axis::Mass).unwrap();
    let total = b.graph().weighted_length();
    for r in rows.iter().filter(|r| r[0] == 1.0) {
        assert!((r[3] - (-r[2] / 2.0) * total).abs() < 1e-7);
    }
    let erows = bifurcation_diagram(&run.dir, Axis::Lambda, Axis::Energy).unwrap();
    let b3 = run.load(3).unwrap();
    for (r, pt) in erows.iter().filter(|r| r[0] == 3.0).zip(&b3.points) {
        assert!((r[3] - p.energy(&pt.psi).unwrap()).abs() <= 1e-12 * (1.0 + r[3].abs()));
    }
    let log = std::fs::read_to_string(run.dir.join("logfile.txt")).unwrap();
    assert!(log.lines().count() >= 6);
    assert!(run.dir.join("branch001/psi_0001.csv").exists());
    let last = format!("branch001/tangent_{:04}.csv", branch.points.len());
    assert!(run.dir.join(last).exists());

    let other = discretize(&from_template("dumbbell", &Default::default()).unwrap(), Scheme::Chebyshev).unwrap();
    assert!(load_branch(&run.branch_dir(1), &other).is_err());
    let copy = tmp.path().join("copy");
    save_branch(&copy, &b, &loaded).unwrap();
    assert_eq!(load_branch(&copy, &b).unwrap(), loaded);
}
