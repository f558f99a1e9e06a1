//! On-disk bifurcation diagrams: `<base>/<tag>/<NNN>/` holds a template,
//! a log, saved eigenfunctions and one `branchNNN/` directory per branch.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::branch::{continue_from_branch_point, continue_from_eig, continue_from_end, continue_from_solution};
use super::{BifType, Bifurcation, Branch, BranchPoint, ContinuationOptions, Provenance, Termination};
use crate::discretization::{discretize, read_state_csv, write_state_csv, OperatorBundle, Scheme};
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::io;
use crate::stationary::{eigs, NlsProblem, Nonlinearity};

fn storage(path: &Path, reason: impl ToString) -> Error {
    Error::Storage {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Digest of the grid a state vector lives on.
pub fn layout_hash(bundle: &OperatorBundle) -> String {
    let mut h = Sha256::new();
    h.update(format!("{:?}", bundle.scheme()).as_bytes());
    h.update((bundle.n_ext() as u64).to_le_bytes());
    for (m, e) in bundle.grid().edges.iter().enumerate() {
        h.update((m as u64).to_le_bytes());
        for x in &e.x_ext {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    for e in bundle.graph().edges() {
        h.update((e.source as u64).to_le_bytes());
        h.update((e.target as u64).to_le_bytes());
        h.update(e.length.to_bits().to_le_bytes());
        h.update(e.weight.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Template {
    tag: String,
    graph: MetricGraph,
    scheme: Scheme,
    nonlinearity: Nonlinearity,
    layout_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BranchMeta {
    provenance: Provenance,
    termination: Termination,
    points: usize,
    layout_hash: String,
    log: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredBifurcation {
    index: usize,
    lambda: f64,
    epsilon: f64,
    psi: Vec<f64>,
    null_vector: Vec<f64>,
    brackets: Vec<(f64, f64)>,
}

fn numbered(dir: &Path, stem: &str, i: usize) -> PathBuf {
    dir.join(format!("{stem}_{:04}.csv", i + 1))
}

fn real(v: Vec<num_complex::Complex64>) -> Vec<f64> {
    v.into_iter().map(|z| z.re).collect()
}

/// Writes every field of `branch` into `dir`.
pub fn save_branch(dir: &Path, bundle: &OperatorBundle, branch: &Branch) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, p) in branch.points.iter().enumerate() {
        write_state_csv(bundle, &p.psi, &numbered(dir, "psi", i))?;
        write_state_csv(bundle, &p.tangent, &numbered(dir, "tangent", i))?;
    }
    let col = |f: fn(&BranchPoint) -> f64| branch.points.iter().map(f).collect::<Vec<_>>();
    io::write_column(&dir.join("lambda.csv"), &col(|p| p.lambda))?;
    io::write_column(&dir.join("mass.csv"), &col(|p| p.mass))?;
    io::write_column(&dir.join("energy.csv"), &col(|p| p.energy))?;
    io::write_column(&dir.join("biftype.csv"), &col(|p| p.bif_type.code() as f64))?;
    io::write_column(&dir.join("tangent_lambda.csv"), &col(|p| p.tangent_lambda))?;
    io::write_json(&dir.join("options.json"), &branch.options)?;
    let stored: Vec<StoredBifurcation> = branch
        .bifurcations
        .iter()
        .map(|b| StoredBifurcation {
            index: b.index,
            lambda: b.lambda,
            epsilon: b.epsilon,
            psi: b.psi.clone(),
            null_vector: b.null_vector.clone(),
            brackets: b.brackets.clone(),
        })
        .collect();
    io::write_json(&dir.join("branchpoints.json"), &stored)?;
    // Written last so a partially written directory never loads.
    io::write_json(
        &dir.join("provenance.json"),
        &BranchMeta {
            provenance: branch.provenance.clone(),
            termination: branch.termination,
            points: branch.points.len(),
            layout_hash: layout_hash(bundle),
            log: branch.log.clone(),
        },
    )
}

/// Reads a branch written by [`save_branch`], rejecting it if it was
/// computed on a different grid.
pub fn load_branch(dir: &Path, bundle: &OperatorBundle) -> Result<Branch> {
    let meta: BranchMeta = io::read_json(&dir.join("provenance.json"))?;
    if meta.layout_hash != layout_hash(bundle) {
        return Err(storage(dir, "branch was computed on a different graph or grid"));
    }
    let options: ContinuationOptions = io::read_json(&dir.join("options.json"))?;
    let read = |name: &str| -> Result<Vec<f64>> {
        let v = io::read_column(&dir.join(name))?;
        if v.len() != meta.points {
            return Err(storage(&dir.join(name), format!("expected {} values, found {}", meta.points, v.len())));
        }
        Ok(v)
    };
    let lambda = read("lambda.csv")?;
    let mass = read("mass.csv")?;
    let energy = read("energy.csv")?;
    let bif = read("biftype.csv")?;
    let tl = read("tangent_lambda.csv")?;
    let mut points = Vec::with_capacity(meta.points);
    for i in 0..meta.points {
        let bif_type = BifType::from_code(bif[i] as i8)
            .filter(|_| bif[i].fract() == 0.0)
            .ok_or_else(|| storage(&dir.join("biftype.csv"), format!("invalid tag {}", bif[i])))?;
        points.push(BranchPoint {
            psi: real(read_state_csv(bundle, &numbered(dir, "psi", i))?),
            lambda: lambda[i],
            mass: mass[i],
            energy: energy[i],
            bif_type,
            tangent: real(read_state_csv(bundle, &numbered(dir, "tangent", i))?),
            tangent_lambda: tl[i],
        });
    }
    let stored: Vec<StoredBifurcation> = io::read_json(&dir.join("branchpoints.json"))?;
    let bifurcations = stored
        .into_iter()
        .map(|s| {
            if s.psi.len() != bundle.n_ext() || s.null_vector.len() != bundle.n_ext() || s.index >= meta.points {
                return Err(storage(&dir.join("branchpoints.json"), "branch point does not match the branch"));
            }
            let plus = s.psi.iter().zip(&s.null_vector).map(|(x, p)| x + s.epsilon * p).collect();
            let minus = s.psi.iter().zip(&s.null_vector).map(|(x, p)| x - s.epsilon * p).collect();
            Ok(Bifurcation {
                index: s.index,
                lambda: s.lambda,
                psi: s.psi,
                null_vector: s.null_vector,
                perturbations: [plus, minus],
                epsilon: s.epsilon,
                brackets: s.brackets,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Branch {
        points,
        provenance: meta.provenance,
        options,
        bifurcations,
        termination: meta.termination,
        log: meta.log,
    })
}

/// A bifurcation-diagram directory.
#[derive(Debug, Clone)]
pub struct DiagramRun {
    pub dir: PathBuf,
    template: Template,
    bundle: OperatorBundle,
}

impl DiagramRun {
    /// Creates the next numbered directory `<base>/<tag>/NNN`.
    pub fn create(base: &Path, tag: &str, bundle: &OperatorBundle, nonlinearity: &Nonlinearity) -> Result<Self> {
        let root = base.join(tag);
        fs::create_dir_all(&root)?;
        let mut n = 1;
        let dir = loop {
            let d = root.join(format!("{n:03}"));
            match fs::create_dir(&d) {
                Ok(()) => break d,
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => n += 1,
                Err(e) => return Err(e.into()),
            }
        };
        let template = Template {
            tag: tag.to_string(),
            graph: bundle.graph().clone(),
            scheme: bundle.scheme(),
            nonlinearity: nonlinearity.clone(),
            layout_hash: layout_hash(bundle),
        };
        io::write_json(&dir.join("template.json"), &template)?;
        let run = Self {
            dir,
            template,
            bundle: bundle.clone(),
        };
        run.log(&format!("created diagram for {tag} ({:?}, {} unknowns)", bundle.scheme(), bundle.n_ext()))?;
        Ok(run)
    }

    /// Opens an existing diagram and rebuilds its discretization.
    pub fn open(dir: &Path) -> Result<Self> {
        let mut template: Template = io::read_json(&dir.join("template.json"))?;
        template.graph = template.graph.revalidate()?;
        let bundle = discretize(&template.graph, template.scheme)?;
        if layout_hash(&bundle) != template.layout_hash {
            return Err(storage(dir, "stale layout hash in template.json"));
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            template,
            bundle,
        })
    }

    pub fn tag(&self) -> &str {
        &self.template.tag
    }

    pub fn bundle(&self) -> &OperatorBundle {
        &self.bundle
    }

    pub fn problem(&self) -> NlsProblem<'_> {
        NlsProblem::with_nonlinearity(&self.bundle, self.template.nonlinearity.clone())
    }

    pub fn log(&self, line: &str) -> Result<()> {
        io::append_line(&self.dir.join("logfile.txt"), line)
    }

    pub fn branch_dir(&self, n: usize) -> PathBuf {
        self.dir.join(format!("branch{n:03}"))
    }

    /// Existing branch numbers in increasing order.
    pub fn branches(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for e in fs::read_dir(&self.dir)? {
            let name = e?.file_name().to_string_lossy().to_string();
            if let Some(n) = name.strip_prefix("branch").and_then(|s| s.parse().ok()) {
                out.push(n);
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn load(&self, n: usize) -> Result<Branch> {
        load_branch(&self.branch_dir(n), &self.bundle)
    }

    /// Saves `branch` as the next numbered branch and logs its events.
    pub fn save(&self, branch: &Branch) -> Result<usize> {
        let n = self.branches()?.last().map_or(1, |n| n + 1);
        save_branch(&self.branch_dir(n), &self.bundle, branch)?;
        for line in &branch.log {
            self.log(&format!("branch{n:03}: {line}"))?;
        }
        self.log(&format!("branch{n:03}: saved {} points, ended by {:?}", branch.points.len(), branch.termination))?;
        Ok(n)
    }
}

/// Saves the `m` eigenpairs of smallest magnitude under `eigenfunctions/`.
pub fn save_eigenfunctions(run: &DiagramRun, m: usize) -> Result<Vec<f64>> {
    let b = run.bundle();
    let modes = eigs(b, m, None)?;
    let dir = run.dir.join("eigenfunctions");
    let mut values = Vec::with_capacity(modes.len());
    for (j, md) in modes.iter().enumerate() {
        if !md.is_real() {
            return Err(Error::Unsupported(format!("eigenvalue {} is not real", md.lambda)));
        }
        values.push(md.lambda.re);
        write_state_csv(b, &real_mode(&md.vector), &dir.join(format!("eigenfunction_{:03}.csv", j + 1)))?;
    }
    io::write_column(&dir.join("lambda.csv"), &values)?;
    run.log(&format!("saved {} eigenfunctions", values.len()))?;
    Ok(values)
}

/// Removes the global phase of a real eigenvector and fixes its sign so the
/// largest entry is positive.
fn real_mode(v: &[num_complex::Complex64]) -> Vec<f64> {
    let big = v.iter().cloned().fold(num_complex::Complex64::new(0.0, 0.0), |m, z| if z.norm() > m.norm() { z } else { m });
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { 1.0.into() };
    v.iter().map(|z| (z * phase).re).collect()
}

fn branch_name(n: usize) -> String {
    format!("branch{n:03}")
}

/// Continues eigenfunction `index` (1-based) saved in the diagram.
pub fn continue_from_eig_dir(
    run: &DiagramRun,
    index: usize,
    amplitude: f64,
    options: &ContinuationOptions,
) -> Result<(usize, Branch)> {
    let dir = run.dir.join("eigenfunctions");
    let values = io::read_column(&dir.join("lambda.csv"))?;
    let mu = *values
        .get(index.wrapping_sub(1))
        .ok_or_else(|| storage(&dir, format!("no eigenfunction {index}")))?;
    let v = real(read_state_csv(run.bundle(), &dir.join(format!("eigenfunction_{index:03}.csv")))?);
    let branch = continue_from_eig(&run.problem(), mu, &v, index, amplitude, options)?;
    let n = run.save(&branch)?;
    Ok((n, branch))
}

/// Continues a solution stored as a state CSV at frequency `lambda`.
pub fn continue_from_saved(
    run: &DiagramRun,
    path: &Path,
    lambda: f64,
    sign: f64,
    options: &ContinuationOptions,
) -> Result<(usize, Branch)> {
    let psi = real(read_state_csv(run.bundle(), path)?);
    let prov = Provenance::Saved {
        path: path.display().to_string(),
    };
    let branch = continue_from_solution(&run.problem(), &psi, lambda, sign, prov, options)?;
    let n = run.save(&branch)?;
    Ok((n, branch))
}

/// Extends branch `parent` into a new branch directory.
pub fn continue_from_end_dir(run: &DiagramRun, parent: usize, options: &ContinuationOptions) -> Result<(usize, Branch)> {
    let old = run.load(parent)?;
    let branch = continue_from_end(&run.problem(), &old, &branch_name(parent), options)?;
    let n = run.save(&branch)?;
    Ok((n, branch))
}

/// Branch switching at point `point` (1-based) of branch `parent`.
pub fn continue_from_branch_point_dir(
    run: &DiagramRun,
    parent: usize,
    point: usize,
    sign: i8,
    options: &ContinuationOptions,
) -> Result<(usize, Branch)> {
    let old = run.load(parent)?;
    let branch = continue_from_branch_point(
        &run.problem(),
        &old,
        &branch_name(parent),
        point.wrapping_sub(1),
        sign,
        options,
    )?;
    let n = run.save(&branch)?;
    Ok((n, branch))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "Lambda")]
    Lambda,
    #[serde(rename = "N")]
    Mass,
    #[serde(rename = "E")]
    Energy,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Lambda" | "lambda" | "L" => Ok(Self::Lambda),
            "N" | "mass" => Ok(Self::Mass),
            "E" | "energy" => Ok(Self::Energy),
            _ => Err(Error::InvalidArgument(format!("unknown diagram axis `{s}` (use Lambda, N or E)"))),
        }
    }
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Self::Lambda => "Lambda",
            Self::Mass => "N",
            Self::Energy => "E",
        }
    }

    fn value(self, p: &BranchPoint) -> f64 {
        match self {
            Self::Lambda => p.lambda,
            Self::Mass => p.mass,
            Self::Energy => p.energy,
        }
    }
}

/// Polyline table `branch, point, x, y, biftype` over all branches of a
/// diagram, and writes it to `diagram.csv` in the diagram directory.
pub fn bifurcation_diagram(dir: &Path, x: Axis, y: Axis) -> Result<Vec<Vec<f64>>> {
    let run = DiagramRun::open(dir)?;
    let mut rows = Vec::new();
    for n in run.branches()? {
        let b = run.load(n)?;
        for (i, p) in b.points.iter().enumerate() {
            rows.push(vec![n as f64, (i + 1) as f64, x.value(p), y.value(p), p.bif_type.code() as f64]);
        }
    }
    io::write_table(&dir.join("diagram.csv"), &["branch", "point", x.name(), y.name(), "biftype"], &rows)?;
    Ok(rows)
}
