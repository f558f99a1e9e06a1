//! One function per subcommand. Each reads its keys from the config, runs the
//! solver and writes its artifacts into `dir`.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qgraph::continuation::{
    bifurcation_diagram, continue_from_branch_point_dir, continue_from_eig_dir, continue_from_end_dir,
    continue_from_saved, layout_hash, save_eigenfunctions, Axis, Branch, ContinuationOptions, DiagramRun,
};
use qgraph::discretization::write_state_csv;
use qgraph::evolution::{
    conservation_trace, crank_nicolson_heat, imex_euler, leapfrog_klein_gordon, sdirk443, write_run, EvolutionProblem,
    Quantity, RunMeta, TimeGrid, Trajectory,
};
use qgraph::graph::{template_info, TEMPLATE_TAGS};
use qgraph::stationary::{eigs, find_spectrum_secular, poisson_residual, secular_det, solve_poisson, Nonlinearity};
use qgraph::{Expr, OperatorBundle, Scalar, Scheme};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::config::{sample, RunConfig};
use crate::output::{run_record, write_json, Staged};
use crate::{CliError, Globals};

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Uniform => "uniform",
        Scheme::Chebyshev => "chebyshev",
    }
}

/// Stages the output directory, runs `body` in it and commits on success.
fn staged<T>(out: &Path, body: impl FnOnce(&Path) -> Result<T, CliError>) -> Result<(T, PathBuf), CliError> {
    let stage = Staged::new(out)?;
    match body(&stage.dir) {
        Ok(v) => Ok((v, stage.commit()?)),
        Err(e) => {
            stage.discard();
            Err(e)
        }
    }
}

fn record(command: &str, cfg: &RunConfig, g: &Globals, b: &OperatorBundle) -> Result<Map<String, Value>, CliError> {
    let mut m = run_record(command, cfg.seed(g.seed)?, &cfg.raw);
    m.insert("scheme".into(), json!(scheme_name(b.scheme())));
    m.insert("graph_hash".into(), json!(layout_hash(b)));
    Ok(m)
}

pub fn poisson(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    cfg.check_keys("poisson", &["f", "phi", "exact"])?;
    let b = cfg.bundle(g.scheme.as_deref())?;
    let out = cfg.out(g.out.as_deref())?;
    let graph = b.graph();
    let edges = graph.num_edges();
    let f_expr = cfg.edge_exprs("f", "x", edges)?.ok_or_else(|| CliError::Config("missing key 'f'".into()))?;
    let exact = cfg.edge_exprs("exact", "x", edges)?;
    let phi: Vec<f64> = cfg.get("phi")?.unwrap_or_else(|| vec![0.0; graph.num_vertices()]);
    if phi.len() != graph.num_vertices() {
        return Err(CliError::Config(format!(
            "key 'phi': {} entries for {} vertices",
            phi.len(),
            graph.num_vertices()
        )));
    }
    let f: Vec<f64> = b.sample(|m, x| f_expr[m].eval_real(&[x]));
    let psi = solve_poisson(&b, &f, &phi)?;
    let residual = poisson_residual(&b, &psi, &f, &phi).iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut rec = record("poisson", cfg, g, &b)?;
    rec.insert("residual".into(), json!(residual));
    let (report, dir) = staged(&out, |dir| {
        write_state_csv(&b, &psi, &dir.join("solution.csv"))?;
        let vertices = b.column_to_graph(&psi)?.vertices;
        qgraph::io::write_column(&dir.join("vertices.csv"), &vertices)?;
        let report = exact.as_ref().map(|ex| error_report(&b, &psi, &vertices, ex));
        if let Some(r) = &report {
            write_json(&dir.join("error.json"), r)?;
        }
        write_json(&dir.join("run.json"), &rec)?;
        Ok(report)
    })?;
    match report {
        Some(r) => println!("wrote {} (max error {:.3e})", dir.display(), r["max_error"].as_f64().unwrap_or(f64::NAN)),
        None => println!("wrote {}", dir.display()),
    }
    Ok(())
}

/// Maximum error over samples inside each edge and over the vertex values.
fn error_report(b: &OperatorBundle, psi: &[f64], vertices: &[f64], exact: &[Expr]) -> Value {
    let graph = b.graph();
    let mut per_edge = Vec::new();
    for (m, e) in b.grid().edges.iter().enumerate() {
        let len = graph.edge(m).length;
        let err = e
            .x_ext
            .iter()
            .enumerate()
            .filter(|(_, &x)| (0.0..=len).contains(&x))
            .map(|(k, &x)| (psi[e.ext.start + k] - exact[m].eval_real(&[x])).abs())
            .fold(0.0, f64::max);
        per_edge.push(err);
    }
    let per_vertex: Vec<f64> = (0..graph.num_vertices())
        .map(|n| {
            let end = graph.edges().iter().enumerate().find_map(|(m, e)| {
                if e.source == n {
                    Some((m, 0.0))
                } else if e.target == n {
                    Some((m, e.length))
                } else {
                    None
                }
            });
            end.map_or(0.0, |(m, x)| (vertices[n] - exact[m].eval_real(&[x])).abs())
        })
        .collect();
    let max = per_edge.iter().chain(&per_vertex).fold(0.0f64, |a, &b| a.max(b));
    json!({"max_error": max, "per_edge": per_edge, "per_vertex": per_vertex})
}

pub fn eigs_cmd(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    cfg.check_keys("eigs", &["m", "shift"])?;
    let b = cfg.bundle(g.scheme.as_deref())?;
    let out = cfg.out(g.out.as_deref())?;
    let m: usize = cfg.get("m")?.unwrap_or(6);
    if m == 0 {
        return Err(CliError::Config("key 'm' must be at least 1".into()));
    }
    let shift: Option<f64> = cfg.get("shift")?;
    let modes = eigs(&b, m, shift)?;
    let rec = record("eigs", cfg, g, &b)?;
    let (_, dir) = staged(&out, |dir| {
        let mut spectrum = Vec::new();
        for (j, md) in modes.iter().enumerate() {
            let file = format!("eigenvector_{:03}.csv", j + 1);
            write_state_csv(&b, &md.vector, &dir.join(&file))?;
            spectrum.push(json!({
                "index": j + 1,
                "lambda": md.lambda.re,
                "lambda_im": md.lambda.im,
                "residual": md.residual,
                "vector": file,
            }));
        }
        write_json(&dir.join("spectrum.json"), &spectrum)?;
        write_json(&dir.join("run.json"), &rec)?;
        Ok(())
    })?;
    for md in &modes {
        println!("{:.12e} {:+.3e}i", md.lambda.re, md.lambda.im);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

pub fn secdet(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    cfg.check_keys("secdet", &["k_max", "samples"])?;
    let graph = cfg.graph()?;
    let out = cfg.out(g.out.as_deref())?;
    let k_max: f64 = cfg.require("k_max")?;
    let samples: usize = cfg.get("samples")?.unwrap_or(2000);
    if !(k_max > 0.0) || samples == 0 {
        return Err(CliError::Config("keys 'k_max' and 'samples' must be positive".into()));
    }
    let rows = (1..=samples)
        .map(|j| {
            let k = k_max * j as f64 / samples as f64;
            secular_det(&graph, k).map(|s| vec![k, s])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let zeros = find_spectrum_secular(&graph, k_max)?;
    let mut rec = run_record("secdet", cfg.seed(g.seed)?, &cfg.raw);
    rec.insert("graph".into(), serde_json::to_value(&graph).unwrap_or(Value::Null));
    let (_, dir) = staged(&out, |dir| {
        qgraph::io::write_table(&dir.join("secdet.csv"), &["k", "sigma"], &rows)?;
        let list: Vec<Value> = zeros
            .iter()
            .map(|z| json!({"k": z.k, "lambda": z.lambda(), "multiplicity": z.multiplicity, "residual": z.residual}))
            .collect();
        write_json(&dir.join("zeros.json"), &list)?;
        write_json(&dir.join("run.json"), &rec)?;
        Ok(())
    })?;
    for z in &zeros {
        println!("{:.12} x{}", z.k, z.multiplicity);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    CrankNicolson,
    Leapfrog,
    ImexEuler,
    Sdirk443,
}

fn quantity(name: &str, sigma: f64, signs: &Option<Vec<f64>>) -> Result<Quantity, CliError> {
    match name {
        "mass" => Ok(Quantity::Mass),
        "energy" => Ok(Quantity::Energy { sigma }),
        "momentum" => Ok(Quantity::Momentum { signs: signs.clone() }),
        "total_heat" => Ok(Quantity::TotalHeat),
        _ => Err(CliError::Config(format!(
            "key 'quantities': unknown quantity '{name}' (use mass, energy, momentum, total_heat)"
        ))),
    }
}

fn real_part(u: &[Complex64]) -> Vec<f64> {
    u.iter().map(|z| z.re).collect()
}

pub fn evolve(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    cfg.check_keys(
        "evolve",
        &[
            "method",
            "mu",
            "f",
            "g",
            "tau",
            "t_final",
            "n_skip",
            "u0",
            "v0",
            "quantities",
            "sigma",
            "momentum_signs",
            "noise",
        ],
    )?;
    let b = cfg.bundle(g.scheme.as_deref())?;
    let out = cfg.out(g.out.as_deref())?;
    let edges = b.graph().num_edges();
    let method: Method = cfg.require("method")?;
    let mu = cfg.complex("mu")?.unwrap_or(Complex64::new(1.0, 0.0));
    let grid = TimeGrid::new(cfg.require("tau")?, cfg.require("t_final")?, cfg.get("n_skip")?.unwrap_or(1))
        .map_err(|e| CliError::Config(format!("keys 'tau', 't_final', 'n_skip': {e}")))?;
    let u0_expr = cfg.edge_exprs("u0", "x", edges)?.ok_or_else(|| CliError::Config("missing key 'u0'".into()))?;
    let mut u0 = sample(&b, &u0_expr);
    let seed = cfg.seed(g.seed)?;
    let noise: f64 = cfg.get("noise")?.unwrap_or(0.0);
    if noise != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
        let complex = matches!(method, Method::ImexEuler | Method::Sdirk443);
        for z in &mut u0 {
            z.re += noise * rng.gen_range(-1.0..1.0);
            if complex {
                z.im += noise * rng.gen_range(-1.0..1.0);
            }
        }
    }
    let sigma: f64 = cfg.get("sigma")?.unwrap_or(1.0);
    let signs: Option<Vec<f64>> = cfg.get("momentum_signs")?;
    let names: Vec<String> = match cfg.get("quantities")? {
        Some(q) => q,
        None => match method {
            Method::CrankNicolson | Method::Leapfrog => vec!["total_heat".into()],
            Method::ImexEuler | Method::Sdirk443 => vec!["mass".into()],
        },
    };
    let quantities = names.iter().map(|n| quantity(n, sigma, &signs)).collect::<Result<Vec<_>, _>>()?;
    let meta = |steps: usize, factorizations: usize, warnings: Vec<String>| RunMeta {
        scheme: scheme_name(b.scheme()).into(),
        mu,
        tau: grid.tau,
        t_final: grid.t_final,
        n_skip: grid.n_skip,
        graph_hash: String::new(),
        seed,
        steps,
        factorizations,
        warnings,
    };
    let rec = record("evolve", cfg, g, &b)?;
    let finish = |dir: &Path| -> Result<(), CliError> {
        let path = dir.join("run.json");
        let mut run: Map<String, Value> = qgraph::io::read_json(&path)?;
        run.extend(rec.clone());
        write_json(&path, &run)
    };
    let (warnings, dir) = match method {
        Method::CrankNicolson | Method::Leapfrog => {
            if mu.im != 0.0 {
                return Err(CliError::Config("key 'mu' must be real for this method".into()));
            }
            let u0 = real_part(&u0);
            let traj: Trajectory<f64> = if let Method::CrankNicolson = method {
                crank_nicolson_heat(&b, mu.re, &u0, grid)?
            } else {
                let v0 = match cfg.edge_exprs("v0", "x", edges)? {
                    Some(v) => real_part(&sample(&b, &v)),
                    None => vec![0.0; u0.len()],
                };
                let gx = match cfg.get::<Value>("g")? {
                    None => Expr::parse("0", &["u"])?,
                    Some(Value::String(s)) => {
                        Expr::parse(&s, &["u"]).map_err(|e| CliError::Config(format!("key 'g': {e}")))?
                    }
                    Some(_) => return Err(CliError::Config("key 'g' must be an expression in u".into())),
                };
                leapfrog_klein_gordon(&b, |u| gx.eval_real(&[u]), &u0, &v0, grid)?
            };
            run_dir(&out, &b, &traj, &quantities, meta, finish)?
        }
        Method::ImexEuler | Method::Sdirk443 => {
            let p = match cfg.get::<Value>("f")? {
                None => EvolutionProblem::linear(&b, mu),
                Some(Value::String(s)) => {
                    let f = Expr::parse(&s, &["z"]).map_err(|e| CliError::Config(format!("key 'f': {e}")))?;
                    EvolutionProblem::from_expr(&b, mu, &f)?
                }
                Some(_) => return Err(CliError::Config("key 'f' must be an expression in z".into())),
            };
            let traj = match method {
                Method::ImexEuler => imex_euler(&p, &u0, grid)?,
                _ => sdirk443(&p, &u0, grid)?,
            };
            run_dir(&out, &b, &traj, &quantities, meta, finish)?
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn run_dir<S: Scalar>(
    out: &Path,
    b: &OperatorBundle,
    traj: &Trajectory<S>,
    quantities: &[Quantity],
    meta: impl Fn(usize, usize, Vec<String>) -> RunMeta,
    finish: impl Fn(&Path) -> Result<(), CliError>,
) -> Result<(Vec<String>, PathBuf), CliError> {
    let table = conservation_trace(b, traj, quantities)?;
    staged(out, |dir| {
        write_run(dir, b, traj, &table, meta(traj.steps, traj.factorizations, traj.warnings.clone()))?;
        finish(dir)?;
        Ok(traj.warnings.clone())
    })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum From {
    Eig {
        eig: usize,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        eigenfunctions: Option<usize>,
    },
    Saved {
        saved: String,
        lambda: f64,
        #[serde(default = "one")]
        sign: f64,
    },
    End {
        end: usize,
    },
    Branch {
        branch: usize,
        point: usize,
        sign: i8,
    },
}

fn default_amplitude() -> f64 {
    1e-2
}

fn one() -> f64 {
    1.0
}

fn nonlinearity(v: Option<Value>) -> Result<Nonlinearity, CliError> {
    let bad = |e: String| CliError::Config(format!("key 'nonlinearity': {e}"));
    match v {
        None => Ok(Nonlinearity::default()),
        Some(Value::Number(n)) => Ok(Nonlinearity::power(n.as_f64().unwrap_or(1.0))),
        Some(Value::Array(a)) => {
            let c = a.iter().map(Value::as_f64).collect::<Option<Vec<_>>>();
            Nonlinearity::polynomial(c.ok_or_else(|| bad("coefficients must be numbers".into()))?)
                .map_err(|e| bad(e.to_string()))
        }
        Some(Value::String(s)) => {
            let f = Expr::parse(&s, &["z"]).map_err(|e| bad(e.to_string()))?;
            Nonlinearity::expression(f).map_err(|e| bad(e.to_string()))
        }
        Some(_) => Err(bad("use a power σ, coefficients or an expression in z".into())),
    }
}

fn summary(n: usize, b: &Branch) -> String {
    format!(
        "branch{n:03}: {} points, {} branch points, ended by {:?}",
        b.points.len(),
        b.bifurcations.len(),
        b.termination
    )
}

/// Runs one continuation in `run` and, with `switch`, both legs at each
/// branch point it located.
fn continue_in(
    run: &DiagramRun,
    from: &From,
    options: &ContinuationOptions,
    switch: bool,
    cfg: &RunConfig,
) -> Result<Vec<String>, CliError> {
    let (n, branch) = match from {
        From::Eig {
            eig,
            amplitude,
            eigenfunctions,
        } => {
            let have = qgraph::io::read_column(&run.dir.join("eigenfunctions").join("lambda.csv")).map_or(0, |v| v.len());
            if have < *eig {
                save_eigenfunctions(run, eigenfunctions.unwrap_or(6).max(*eig))?;
            }
            continue_from_eig_dir(run, *eig, *amplitude, options)?
        }
        From::Saved { saved, lambda, sign } => continue_from_saved(run, &cfg.resolve(saved), *lambda, *sign, options)?,
        From::End { end } => continue_from_end_dir(run, *end, options)?,
        From::Branch { branch, point, sign } => continue_from_branch_point_dir(run, *branch, *point, *sign, options)?,
    };
    let mut lines = vec![summary(n, &branch)];
    if switch {
        for bp in &branch.bifurcations {
            for sign in [1i8, -1] {
                let (k, leg) = continue_from_branch_point_dir(run, n, bp.index + 1, sign, options)?;
                lines.push(summary(k, &leg));
            }
        }
    }
    Ok(lines)
}

pub fn continue_cmd(cfg: &RunConfig, g: &Globals) -> Result<(), CliError> {
    cfg.check_keys("continue", &["tag", "from", "run", "options", "nonlinearity", "switch", "axes"])?;
    let from: From = cfg.require("from")?;
    let options: ContinuationOptions = cfg.get("options")?.unwrap_or_default();
    options.validate().map_err(|e| CliError::Config(format!("key 'options': {e}")))?;
    let switch: bool = cfg.get("switch")?.unwrap_or(false);
    let axes: [String; 2] = cfg.get("axes")?.unwrap_or_else(|| ["Lambda".into(), "N".into()]);
    let x: Axis = axes[0].parse().map_err(|e| CliError::Config(format!("key 'axes': {e}")))?;
    let y: Axis = axes[1].parse().map_err(|e| CliError::Config(format!("key 'axes': {e}")))?;
    let invoke = |run: &DiagramRun| -> Result<Vec<String>, CliError> {
        let lines = continue_in(run, &from, &options, switch, cfg)?;
        bifurcation_diagram(&run.dir, x, y)?;
        let path = run.dir.join("run.json");
        let mut rec: Map<String, Value> = if path.exists() {
            qgraph::io::read_json(&path)?
        } else {
            let mut m = Map::new();
            m.insert("command".into(), json!("continue"));
            m.insert("tag".into(), json!(run.tag()));
            m.insert("scheme".into(), json!(scheme_name(run.bundle().scheme())));
            m.insert("graph_hash".into(), json!(layout_hash(run.bundle())));
            m
        };
        let mut entry = run_record("continue", cfg.seed(g.seed)?, &cfg.raw);
        entry.insert("branches".into(), json!(lines));
        match rec.entry("invocations").or_insert_with(|| json!([])) {
            Value::Array(a) => a.push(Value::Object(entry)),
            _ => return Err(CliError::Io(format!("{}: 'invocations' is not a list", path.display()))),
        }
        write_json(&path, &rec)?;
        Ok(lines)
    };
    let (lines, dir) = match cfg.get::<String>("run")? {
        Some(existing) => {
            if cfg.raw.contains_key("graph") {
                return Err(CliError::Config("keys 'graph' and 'run' are exclusive".into()));
            }
            let dir = cfg.resolve(&existing);
            let run = DiagramRun::open(&dir).map_err(|e| CliError::Config(format!("key 'run': {e}")))?;
            (invoke(&run)?, dir)
        }
        None => {
            let b = cfg.bundle(g.scheme.as_deref())?;
            let out = cfg.out(g.out.as_deref())?;
            let tag: String = cfg.get("tag")?.unwrap_or_else(|| "diagram".into());
            let nl = nonlinearity(cfg.get("nonlinearity")?)?;
            let ((lines, rel), base) = staged(&out, |stage| {
                let run = DiagramRun::create(stage, &tag, &b, &nl)?;
                let rel = run.dir.strip_prefix(stage).map(Path::to_path_buf).unwrap_or_default();
                Ok((invoke(&run)?, rel))
            })?;
            (lines, base.join(rel))
        }
    };
    for l in &lines {
        println!("{l}");
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

pub fn template_list() {
    for tag in TEMPLATE_TAGS {
        if let Ok(info) = template_info(tag) {
            println!("{:<12} {}", info.tag, info.description);
        }
    }
}

pub fn template_show(tag: &str) -> Result<(), CliError> {
    let info = template_info(tag).map_err(|e| CliError::Config(e.to_string()))?;
    let params: Map<String, Value> = info.parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    let doc = json!({
        "tag": info.tag,
        "description": info.description,
        "parameters": params,
        "common": ["LVec", "weight", "robinCoeff", "nx"],
    });
    println!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
    Ok(())
}
