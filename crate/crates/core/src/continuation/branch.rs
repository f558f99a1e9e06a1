use faer::Mat;

use super::{
    BifType, Bifurcation, Branch, BranchPoint, ContinuationOptions, ContinuationSystem, Provenance, Seed, Termination,
};
use crate::error::{Error, Result};
use crate::linalg::{DenseLu, SparseLu, SparseMatrix, Triplets};
use crate::scalar::max_abs;
use crate::stationary::NlsProblem;

/// Bisection stops once the pseudo-arclength bracket is this narrow.
const BRACKET_TOL: f64 = 1e-9;
const BISECTION_BUDGET: usize = 200;
/// Relative size of the second-smallest singular value below which a
/// branch point is treated as codimension two.
const CODIM2_TOL: f64 = 1e-6;

/// Predictor-corrector driver bound to one system and option set.
pub struct Continuer<'a, S: ContinuationSystem + ?Sized> {
    pub system: &'a S,
    pub options: ContinuationOptions,
    weights: Vec<f64>,
}

impl<'a, S: ContinuationSystem + ?Sized> Continuer<'a, S> {
    pub fn new(system: &'a S, options: ContinuationOptions) -> Result<Self> {
        options.validate()?;
        let weights = system.metric_weights();
        if weights.len() != system.dim() {
            return Err(Error::Dimension {
                context: "continuation metric",
                expected: system.dim(),
                got: weights.len(),
            });
        }
        Ok(Self {
            system,
            options,
            weights,
        })
    }

    /// `⟨u, v⟩ + β l m`.
    pub fn dot(&self, u: &[f64], l: f64, v: &[f64], m: f64) -> f64 {
        let s: f64 = u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| w * a * b).sum();
        s + self.options.beta * l * m
    }

    pub fn norm(&self, u: &[f64], l: f64) -> f64 {
        self.dot(u, l, u, l).sqrt()
    }

    fn normalized(&self, u: &[f64], l: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.norm(u, l);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument("continuation direction has zero length".into()));
        }
        Ok((u.iter().map(|x| x / n).collect(), l / n))
    }

    /// `[J, ∂F/∂Λ; (W∘d)ᵀ, β d_Λ]`.
    fn bordered(&self, u: &[f64], lambda: f64, dir: &[f64], dir_l: f64) -> Result<SparseMatrix> {
        let n = self.system.dim();
        let j = self.system.jacobian(u, lambda)?;
        let fl = self.system.lambda_derivative(u, lambda)?;
        let mut t = Triplets::new(n + 1, n + 1);
        for (r, c, v) in j.iter() {
            t.push(r, c, v);
        }
        for (r, v) in fl.iter().enumerate() {
            if *v != 0.0 {
                t.push(r, n, *v);
            }
        }
        for (c, (d, w)) in dir.iter().zip(&self.weights).enumerate() {
            if d * w != 0.0 {
                t.push(n, c, w * d);
            }
        }
        t.push(n, n, self.options.beta * dir_l);
        Ok(t.build())
    }

    /// Newton on `F = 0` restricted to the hyperplane through the prediction
    /// orthogonal to `dir`. Returns the corrected point and the iteration count.
    pub fn correct(&self, u_p: &[f64], l_p: f64, dir: &[f64], dir_l: f64) -> Result<(Vec<f64>, f64, usize)> {
        let n = self.system.dim();
        let tol = self.options.newton_tol;
        let mut u = u_p.to_vec();
        let mut l = l_p;
        let mut last = f64::INFINITY;
        for it in 0..=self.options.newton_max_iter {
            let mut g = self.system.residual(&u, l)?;
            let du: Vec<f64> = u.iter().zip(u_p).map(|(a, b)| a - b).collect();
            let c = self.dot(&du, l - l_p, dir, dir_l);
            let rn = max_abs(&g).max(c.abs());
            if !rn.is_finite() {
                break;
            }
            last = rn;
            if max_abs(&g) <= tol && c.abs() <= tol {
                return Ok((u, l, it));
            }
            if it == self.options.newton_max_iter {
                break;
            }
            g.push(c);
            let a = self.bordered(&u, l, dir, dir_l)?;
            let delta = SparseLu::new(&[(1.0, &a)])?.solve(&g)?;
            for (x, d) in u.iter_mut().zip(&delta) {
                *x -= d;
            }
            l -= delta[n];
        }
        Err(Error::NoConvergence {
            what: "continuation corrector",
            iterations: self.options.newton_max_iter,
            residual: last,
        })
    }

    /// Unit tangent at a solution, oriented to agree with `prev`.
    pub fn tangent(&self, u: &[f64], lambda: f64, prev: &[f64], prev_l: f64) -> Result<(Vec<f64>, f64)> {
        let n = self.system.dim();
        let a = self.bordered(u, lambda, prev, prev_l)?;
        let mut rhs = vec![0.0; n + 1];
        rhs[n] = 1.0;
        let z = SparseLu::new(&[(1.0, &a)])?.solve(&rhs)?;
        self.normalized(&z[..n], z[n])
    }

    /// Sign of the bordered determinant with border `dir`; it changes only at
    /// branch points.
    pub fn bordered_det_sign(&self, u: &[f64], lambda: f64, dir: &[f64], dir_l: f64) -> Result<i8> {
        Ok(DenseLu::new(&self.bordered(u, lambda, dir, dir_l)?.to_dense()).det_sign())
    }

    /// Sign of `det ∂F/∂u`; it changes at folds and at branch points.
    pub fn jacobian_det_sign(&self, u: &[f64], lambda: f64) -> Result<i8> {
        Ok(DenseLu::new(&self.system.jacobian(u, lambda)?.to_dense()).det_sign())
    }

    fn point(&self, psi: Vec<f64>, lambda: f64, tangent: Vec<f64>, tangent_lambda: f64) -> BranchPoint {
        BranchPoint {
            mass: self.system.mass(&psi),
            energy: self.system.energy(&psi),
            psi,
            lambda,
            bif_type: BifType::Regular,
            tangent,
            tangent_lambda,
        }
    }

    /// Corrects the seed and traces a new branch from it.
    pub fn run(&self, seed: &Seed, provenance: Provenance) -> Result<Branch> {
        let (d, dl) = self.normalized(&seed.direction, seed.direction_lambda)?;
        let (u0, l0, _) = self
            .correct(&seed.u, seed.lambda, &d, dl)
            .map_err(|e| Error::InvalidArgument(format!("corrector failed at the seed: {e}")))?;
        let (t0, tl0) = self.tangent(&u0, l0, &d, dl)?;
        let first = self.point(u0, l0, t0, tl0);
        let mut branch = Branch {
            log: vec![format!(
                "start {} at Lambda = {:.10}, N = {:.10}",
                describe(&provenance),
                first.lambda,
                first.mass
            )],
            points: vec![first],
            provenance,
            options: self.options.clone(),
            bifurcations: Vec::new(),
            termination: Termination::MaxPoints,
        };
        self.trace(&mut branch)?;
        Ok(branch)
    }

    /// Appends points to `branch` until a termination condition holds.
    pub fn trace(&self, branch: &mut Branch) -> Result<()> {
        let o = &self.options;
        let ds0 = o.ds;
        let mut ds = ds0;
        let mut sign = {
            let p = branch.points.last().ok_or_else(|| Error::InvalidArgument("empty branch".into()))?;
            self.bordered_det_sign(&p.psi, p.lambda, &p.tangent, p.tangent_lambda)?
        };
        branch.termination = Termination::MaxPoints;
        while branch.points.len() < o.max_points {
            if ds < o.min_norm_delta {
                branch.termination = Termination::StepTooSmall;
                branch.log.push(format!("step {ds:.3e} below minNormDelta, stopping"));
                break;
            }
            let k = branch.points.len() - 1;
            let last = &branch.points[k];
            let (pd, pdl) = if k >= 1 {
                let prev = &branch.points[k - 1];
                let du: Vec<f64> = last.psi.iter().zip(&prev.psi).map(|(a, b)| a - b).collect();
                self.normalized(&du, last.lambda - prev.lambda)?
            } else {
                (last.tangent.clone(), last.tangent_lambda)
            };
            let up: Vec<f64> = last.psi.iter().zip(&pd).map(|(x, d)| x + ds * d).collect();
            let lp = last.lambda + ds * pdl;
            let (u, l) = match self.correct(&up, lp, &pd, pdl) {
                Ok((u, l, _)) => (u, l),
                Err(_) => {
                    ds *= 0.5;
                    continue;
                }
            };
            let (t, tl) = match self.tangent(&u, l, &last.tangent, last.tangent_lambda) {
                Ok(t) => t,
                Err(_) => {
                    ds *= 0.5;
                    continue;
                }
            };
            let cos = self.dot(&last.tangent, last.tangent_lambda, &t, tl).clamp(-1.0, 1.0);
            let angle = cos.acos().to_degrees();
            if angle > o.max_theta {
                ds *= 0.5;
                continue;
            }
            let p = self.point(u, l, t, tl);
            if crossed(last.mass, p.mass, o.n_thresh) {
                branch.termination = Termination::MassThreshold;
                branch.log.push(format!("N crossed {} near Lambda = {:.6}, stopping", o.n_thresh, p.lambda));
                break;
            }
            if crossed(last.lambda, p.lambda, o.lambda_thresh) {
                branch.termination = Termination::LambdaThreshold;
                branch.log.push(format!("Lambda crossed {}, stopping", o.lambda_thresh));
                break;
            }
            let new_sign = self.bordered_det_sign(&p.psi, p.lambda, &p.tangent, p.tangent_lambda)?;
            let fold = p.tangent_lambda.signum() != last.tangent_lambda.signum();
            let nearer_fold = if p.tangent_lambda.abs() < last.tangent_lambda.abs() { k + 1 } else { k };
            branch.points.push(p);
            if new_sign != 0 && sign != 0 && new_sign != sign {
                match self.locate(&branch.points[k], &branch.points[k + 1]) {
                    Ok(Located::Simple(mut b)) => {
                        let idx = if b.index == 0 { k } else { k + 1 };
                        b.index = idx;
                        branch.points[idx].bif_type = BifType::BranchPoint;
                        branch.log.push(format!(
                            "branch point between points {} and {} at Lambda = {:.12}, tagged point {}",
                            k + 1,
                            k + 2,
                            b.lambda,
                            idx + 1
                        ));
                        branch.bifurcations.push(b);
                    }
                    Ok(Located::Codim2 { lambda }) => {
                        branch.points[k + 1].bif_type = BifType::BranchPoint;
                        branch.termination = Termination::Codimension2;
                        branch
                            .log
                            .push(format!("codimension-two branch point at Lambda = {lambda:.12}, stopping"));
                        break;
                    }
                    Err(e) => {
                        branch.points[k + 1].bif_type = BifType::BranchPoint;
                        branch.log.push(format!("branch point near point {} could not be located: {e}", k + 2));
                    }
                }
            } else if fold {
                if branch.points[nearer_fold].bif_type == BifType::Regular {
                    branch.points[nearer_fold].bif_type = BifType::Fold;
                }
                branch.log.push(format!(
                    "fold near Lambda = {:.10}, tagged point {}",
                    branch.points[nearer_fold].lambda,
                    nearer_fold + 1
                ));
            }
            if new_sign != 0 {
                sign = new_sign;
            }
            if angle < 0.5 * o.max_theta {
                ds = (ds * o.grow).min(ds0 * o.max_step_factor);
            }
        }
        if branch.termination == Termination::MaxPoints {
            branch.log.push(format!("reached maxPoints = {}", o.max_points));
        }
        Ok(())
    }

    /// Bisects the bordered determinant sign between two accepted points.
    /// The returned index is 0 or 1 for the nearer endpoint.
    fn locate(&self, a: &BranchPoint, b: &BranchPoint) -> Result<Located> {
        let du: Vec<f64> = b.psi.iter().zip(&a.psi).map(|(x, y)| x - y).collect();
        let d = self.norm(&du, b.lambda - a.lambda);
        let (s, sl) = self.normalized(&du, b.lambda - a.lambda)?;
        let at = |sigma: f64| -> Result<(Vec<f64>, f64)> {
            let up: Vec<f64> = a.psi.iter().zip(&s).map(|(x, d)| x + sigma * d).collect();
            let (u, l, _) = self.correct(&up, a.lambda + sigma * sl, &s, sl)?;
            Ok((u, l))
        };
        let sa = self.bordered_det_sign(&a.psi, a.lambda, &s, sl)?;
        let sb = self.bordered_det_sign(&b.psi, b.lambda, &s, sl)?;
        if sa == 0 || sb == 0 || sa == sb {
            return Err(Error::Singular("no determinant sign change along the secant".into()));
        }
        let (mut lo, mut hi) = (0.0, d);
        let mut brackets = vec![(lo, hi)];
        for _ in 0..BISECTION_BUDGET {
            if hi - lo <= BRACKET_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (u, l) = at(mid)?;
            match self.bordered_det_sign(&u, l, &s, sl)? {
                0 => {
                    lo = mid;
                    hi = mid;
                }
                x if x == sa => lo = mid,
                _ => hi = mid,
            }
            brackets.push((lo, hi));
        }
        if hi - lo > BRACKET_TOL {
            return Err(Error::NoConvergence {
                what: "branch point bisection",
                iterations: BISECTION_BUDGET,
                residual: hi - lo,
            });
        }
        let sigma = 0.5 * (lo + hi);
        let (psi, lambda) = at(sigma)?;
        let j = self.system.jacobian(&psi, lambda)?.to_dense();
        if j.nrows() >= 2 {
            let sv = j
                .singular_values()
                .map_err(|e| Error::Singular(format!("singular values: {e:?}")))?;
            let max = sv.iter().cloned().fold(0.0, f64::max);
            let mut sorted = sv.clone();
            sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
            if sorted[1] <= CODIM2_TOL * max {
                return Ok(Located::Codim2 { lambda });
            }
        }
        let phi = self.null_vector(&j)?;
        let norm = self.norm(&psi, 0.0);
        let epsilon = 1e-2 * norm + 1e-3;
        let plus = psi.iter().zip(&phi).map(|(x, p)| x + epsilon * p).collect();
        let minus = psi.iter().zip(&phi).map(|(x, p)| x - epsilon * p).collect();
        Ok(Located::Simple(Bifurcation {
            index: usize::from(sigma > 0.5 * d),
            lambda,
            psi,
            null_vector: phi,
            perturbations: [plus, minus],
            epsilon,
            brackets,
        }))
    }

    /// Inverse iteration for the kernel of a nearly singular matrix,
    /// normalized in the metric with its largest entry positive.
    fn null_vector(&self, j: &Mat<f64>) -> Result<Vec<f64>> {
        let n = j.nrows();
        let lu = DenseLu::new(j);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).sin()).collect();
        let mut v = if lu.is_singular() {
            let svd = j.svd().map_err(|e| Error::Singular(format!("svd: {e:?}")))?;
            (0..n).map(|i| svd.V()[(i, n - 1)]).collect()
        } else {
            for _ in 0..4 {
                let y = lu.solve(&x)?;
                let s = max_abs(&y);
                x = y.iter().map(|v| v / s).collect();
            }
            x
        };
        let nv = self.norm(&v, 0.0);
        let scale = if nv > 0.0 { nv } else { max_abs(&v) };
        let big = v.iter().cloned().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
        let s = big.signum() / scale;
        for x in &mut v {
            *x *= s;
        }
        Ok(v)
    }
}

enum Located {
    Simple(Bifurcation),
    Codim2 { lambda: f64 },
}

fn crossed(a: f64, b: f64, t: f64) -> bool {
    (a < t) != (b < t)
}

fn describe(p: &Provenance) -> String {
    match p {
        Provenance::Eigenfunction { index, amplitude } => {
            format!("branch from eigenfunction {index} with amplitude {amplitude}")
        }
        Provenance::Saved { path } => format!("branch from saved solution {path}"),
        Provenance::BranchPoint { parent, index, sign } => {
            format!("branch from branch point {} of {parent} with sign {sign:+}", index + 1)
        }
        Provenance::End { parent } => format!("extension of {parent}"),
        Provenance::Seed => "branch from a seed".into(),
    }
}

/// One corrector solve: Newton for `F = 0` on the hyperplane through
/// `(u_p, Λ_p)` orthogonal to the direction.
pub fn corrector<S: ContinuationSystem + ?Sized>(
    system: &S,
    predicted: (&[f64], f64),
    direction: (&[f64], f64),
    options: &ContinuationOptions,
) -> Result<(Vec<f64>, f64)> {
    let c = Continuer::new(system, options.clone())?;
    let (u, l, _) = c.correct(predicted.0, predicted.1, direction.0, direction.1)?;
    Ok((u, l))
}

/// Unit tangent at a solution, oriented along `orientation`.
pub fn tangent_at<S: ContinuationSystem + ?Sized>(
    system: &S,
    point: (&[f64], f64),
    orientation: (&[f64], f64),
    options: &ContinuationOptions,
) -> Result<(Vec<f64>, f64)> {
    Continuer::new(system, options.clone())?.tangent(point.0, point.1, orientation.0, orientation.1)
}

pub fn continue_branch<S: ContinuationSystem + ?Sized>(
    system: &S,
    seed: &Seed,
    options: &ContinuationOptions,
) -> Result<Branch> {
    Continuer::new(system, options.clone())?.run(seed, Provenance::Seed)
}

/// Branch bifurcating from zero along eigenpair `(μ, v)` of the Laplacian,
/// started at amplitude `a` with the projected frequency
/// `Λ = −μ − ⟨v, f(a v)⟩ / a`.
pub fn continue_from_eig(
    problem: &NlsProblem,
    mu: f64,
    v: &[f64],
    index: usize,
    amplitude: f64,
    options: &ContinuationOptions,
) -> Result<Branch> {
    let c = Continuer::new(problem, options.clone())?;
    let n = c.norm(v, 0.0);
    if !(n > 0.0) {
        return Err(Error::InvalidArgument("eigenfunction has zero mass".into()));
    }
    let v: Vec<f64> = v.iter().map(|x| x / n).collect();
    let u: Vec<f64> = v.iter().map(|x| amplitude * x).collect();
    let fu: Vec<f64> = u.iter().map(|&z| problem.nonlinearity.f(z)).collect();
    let lambda = -mu - c.dot(&v, 0.0, &fu, 0.0) / amplitude;
    let seed = Seed {
        u,
        lambda,
        direction: v,
        direction_lambda: 0.0,
    };
    c.run(&seed, Provenance::Eigenfunction { index, amplitude })
}

/// Continues from a solution at fixed `Λ`, initially moving `Λ` in the
/// direction of `sign`.
pub fn continue_from_solution<S: ContinuationSystem + ?Sized>(
    system: &S,
    psi: &[f64],
    lambda: f64,
    sign: f64,
    provenance: Provenance,
    options: &ContinuationOptions,
) -> Result<Branch> {
    let seed = Seed {
        u: psi.to_vec(),
        lambda,
        direction: vec![0.0; psi.len()],
        direction_lambda: if sign < 0.0 { -1.0 } else { 1.0 },
    };
    Continuer::new(system, options.clone())?.run(&seed, provenance)
}

/// Starts a new branch at `Ψ* + sign·εφ` of the bifurcation stored at
/// point `index` (0-based) of `parent`.
pub fn continue_from_branch_point<S: ContinuationSystem + ?Sized>(
    system: &S,
    parent: &Branch,
    parent_name: &str,
    index: usize,
    sign: i8,
    options: &ContinuationOptions,
) -> Result<Branch> {
    let b = parent.bifurcations.iter().find(|b| b.index == index).ok_or_else(|| {
        Error::InvalidArgument(format!("point {} of {parent_name} is not a located branch point", index + 1))
    })?;
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("branch sign must be +1 or -1, got {sign}")));
    }
    let seed = Seed {
        u: b.perturbations[usize::from(sign < 0)].clone(),
        lambda: b.lambda,
        direction: b.null_vector.iter().map(|x| sign as f64 * x).collect(),
        direction_lambda: 0.0,
    };
    Continuer::new(system, options.clone())?.run(
        &seed,
        Provenance::BranchPoint {
            parent: parent_name.to_string(),
            index,
            sign,
        },
    )
}

/// Extends a copy of `parent` from its last point.
pub fn continue_from_end<S: ContinuationSystem + ?Sized>(
    system: &S,
    parent: &Branch,
    parent_name: &str,
    options: &ContinuationOptions,
) -> Result<Branch> {
    let c = Continuer::new(system, options.clone())?;
    let mut branch = Branch {
        points: parent.points.clone(),
        provenance: Provenance::End {
            parent: parent_name.to_string(),
        },
        options: options.clone(),
        bifurcations: parent.bifurcations.clone(),
        termination: parent.termination,
        log: vec![format!("extend {parent_name} from point {}", parent.points.len())],
    };
    c.trace(&mut branch)?;
    Ok(branch)
}
