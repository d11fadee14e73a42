use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use sqbif_core::continuation::{epsilon_sweep, fit_asymptote, n_sweep, trace_branch};
use sqbif_core::eigen::first_eigenpair;
use sqbif_core::export::{read_branch_csv, write_branch_csv, Bounds, BranchManifest, Diagram};
use sqbif_core::problem::{lambda_star_upper_bound, nonexistence_threshold};
use sqbif_core::solvers::{
    monotone_iteration_minimal, newton_solve_report, solve_singular_base, torsion_solution,
    write_jsonl,
};
use sqbif_core::{Branch, Error, Grading, GridFunction, MeshParams, RunConfig, Truncation};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "sqbif", version, about = "Solution branches of -Δp u = λ(u^-δ + u^q) on an interval")]
struct Cli {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding the config file.
    #[arg(short, long, global = true, env = "SQBIF_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Truncation level, or "inf".
    #[arg(long, global = true)]
    n_trunc: Option<String>,
    /// Interior mesh nodes.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true)]
    uniform: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First eigenpair of the p-Laplacian.
    Eigen,
    /// Torsion function `-Δp e = 1`.
    Torsion,
    /// Newton solve at fixed λ, started from the purely singular solution.
    Solve {
        #[arg(long)]
        lambda: f64,
    },
    /// Minimal solution by monotone iteration from zero.
    Minimal {
        #[arg(long)]
        lambda: f64,
    },
    /// Trace the solution branch; writes CSV, JSON manifest and SVG.
    Branch,
    /// Fold values over a list of ε or truncation levels.
    Sweep {
        #[arg(value_enum)]
        over: SweepOver,
        /// Comma-separated values; defaults to the verify section lists.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Run the verification battery.
    Verify {
        /// Overrides `verify.tolerance_scale`.
        #[arg(long)]
        tolerance_scale: Option<f64>,
    },
    /// Draw a bifurcation diagram from branch CSV files.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short = 'O', long)]
        out: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepOver {
    Eps,
    N,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidMesh(_) | Error::InvalidOptions(_) => {
            EXIT_CONFIG
        }
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        _ => EXIT_NUMERICAL,
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    let s = &mut cfg.spec;
    s.p = o.p.unwrap_or(s.p);
    s.q = o.q.unwrap_or(s.q);
    s.delta = o.delta.unwrap_or(s.delta);
    s.eps = o.eps.unwrap_or(s.eps);
    if let Some(n) = &o.n_trunc {
        s.n_trunc = match n.as_str() {
            "inf" | "infinity" | "none" => Truncation::Infinite,
            _ => Truncation::Finite(n.parse().map_err(|_| {
                Error::Config(format!("--n-trunc: expected a positive integer or \"inf\", got {n:?}"))
            })?),
        };
    }
    if o.nodes.is_some() || o.uniform {
        let mut m = cfg.mesh_params();
        m.num_interior = o.nodes.unwrap_or(m.num_interior);
        if o.uniform {
            m.grading = Grading::Uniform;
        }
        cfg.mesh = Some(MeshParams { length: cfg.spec.domain_length, ..m });
    }
    cfg.seed = o.seed.unwrap_or(cfg.seed);
    if let Some(dir) = &cli.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Command::Verify { tolerance_scale: Some(t) } = &cli.command {
        cfg.verify.tolerance_scale = *t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Error> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_solution(dir: &Path, name: &str, u: &GridFunction) -> Result<PathBuf, Error> {
    let mut w = create(dir, name)?;
    u.write_csv(&mut w)?;
    w.flush()?;
    Ok(dir.join(name))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if let Command::Plot { inputs, out, title } = &cli.command {
        return plot(inputs, out.as_deref(), title.as_deref());
    }
    let cfg = load_config(&cli)?;
    let mesh = cfg.build_mesh()?;
    let spec = cfg.spec;
    let dir = cfg.output_dir.clone();
    match cli.command {
        Command::Eigen => {
            let e = first_eigenpair(&mesh, spec.p)?;
            print_json(&json!({
                "p": spec.p,
                "lambda1": e.lambda1,
                "residual": e.residual,
                "iterations": e.iterations,
                "num_interior": mesh.num_interior(),
            }))?;
        }
        Command::Torsion => {
            let e = torsion_solution(&mesh, spec.p)?;
            let path = write_solution(&dir, "torsion.csv", &e)?;
            print_json(&json!({ "p": spec.p, "sup_norm": e.sup_norm(), "file": path }))?;
        }
        Command::Solve { lambda } => {
            let start = solve_singular_base(&mesh, lambda, spec.eps, &spec, &cfg.solve)?;
            let (u, rep) = newton_solve_report(&start, lambda, &spec, &cfg.solve)?;
            let path = write_solution(&dir, "solution.csv", &u)?;
            print_json(&json!({
                "lambda": lambda,
                "sup_norm": u.sup_norm(),
                "iterations": rep.iterations,
                "residual": rep.residual,
                "file": path,
            }))?;
        }
        Command::Minimal { lambda } => {
            let rep = monotone_iteration_minimal(&mesh, lambda, &spec, &cfg.solve)?;
            let path = write_solution(&dir, "minimal.csv", &rep.solution)?;
            let mut w = create(&dir, "minimal_iterates.jsonl")?;
            write_jsonl(&rep.steps, &mut w)?;
            w.flush()?;
            print_json(&json!({
                "lambda": lambda,
                "sup_norm": rep.solution.sup_norm(),
                "iterations": rep.iterations,
                "file": path,
            }))?;
        }
        Command::Branch => return branch(&cfg, &mesh),
        Command::Sweep { over, values } => return sweep(&cfg, &mesh, over, values),
        Command::Verify { .. } => {
            let report = sqbif_core::verify::run_battery(&cfg)?;
            let mut w = create(&dir, "verification.json")?;
            w.write_all(report.to_json()?.as_bytes())?;
            w.flush()?;
            for c in &report.checks {
                let status = match (&c.skipped, c.pass) {
                    (Some(_), _) => "SKIP",
                    (None, true) => "PASS",
                    (None, false) => "FAIL",
                };
                println!("{status} {:<36} {:?}", c.name, c.measured);
            }
            println!("report: {}", dir.join("verification.json").display());
            if !report.passed() {
                return Ok(ExitCode::from(EXIT_VERIFY));
            }
        }
        Command::Plot { .. } => unreachable!("handled above"),
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds(cfg: &RunConfig, mesh: &Arc<sqbif_core::Mesh1D>) -> Result<Bounds, Error> {
    let l1 = first_eigenpair(mesh, cfg.spec.p)?.lambda1;
    Ok(Bounds {
        lambda1: l1,
        sharp: nonexistence_threshold(&cfg.spec, l1)?,
        upper: lambda_star_upper_bound(&cfg.spec, l1),
    })
}

fn write_branch(cfg: &RunConfig, branch: &Branch, bounds: Bounds) -> Result<(), Error> {
    let dir = &cfg.output_dir;
    let mut w = create(dir, "branch.csv")?;
    write_branch_csv(branch, &mut w)?;
    w.flush()?;

    let mut manifest = BranchManifest::new(branch, cfg.continuation)?;
    manifest.bounds = Some(bounds);
    if let Truncation::Finite(n) = cfg.spec.n_trunc {
        manifest.asymptote = fit_asymptote(branch, f64::from(n), cfg.continuation.norm_cap).ok();
    }
    let mut w = create(dir, "branch.json")?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.flush()?;

    let s = &cfg.spec;
    let mut d = Diagram::from_branch(
        format!("p = {}, q = {}, δ = {}, ε = {}, n = {}", s.p, s.q, s.delta, s.eps, s.n_trunc),
        branch,
    );
    d.bound = Some(bounds.upper);
    fs::write(dir.join("branch.svg"), d.to_svg())?;
    Ok(())
}

fn branch(cfg: &RunConfig, mesh: &Arc<sqbif_core::Mesh1D>) -> Result<ExitCode, Error> {
    let b = bounds(cfg, mesh)?;
    let (branch, code) = match trace_branch(&cfg.spec, mesh, &cfg.continuation, &cfg.solve) {
        Ok(br) => (br, ExitCode::SUCCESS),
        Err(Error::StepFailure { lambda, partial }) => {
            eprintln!("error: continuation step size underflow at λ = {lambda}; partial branch written");
            (*partial, ExitCode::from(EXIT_NUMERICAL))
        }
        Err(e) => return Err(e),
    };
    write_branch(cfg, &branch, b)?;
    print_json(&json!({
        "points": branch.len(),
        "fold": branch.fold.map(|f| f.lambda),
        "sign_changes": branch.sign_changes,
        "termination": branch.termination,
        "output_dir": cfg.output_dir,
    }))?;
    Ok(code)
}

fn sweep(
    cfg: &RunConfig,
    mesh: &Arc<sqbif_core::Mesh1D>,
    over: SweepOver,
    values: Vec<f64>,
) -> Result<ExitCode, Error> {
    let dir = &cfg.output_dir;
    let (summary, curves, failed, name) = match over {
        SweepOver::Eps => {
            let eps = if values.is_empty() { cfg.verify.eps_list.clone() } else { values };
            let sw = epsilon_sweep(&cfg.spec, mesh, &eps, &cfg.continuation, &cfg.solve)?;
            let failed = sw.entries.iter().any(|e| e.error.is_some());
            let curves: Vec<Branch> = sw.branches.iter().flatten().cloned().collect();
            (serde_json::to_value(&sw)?, curves, failed, "sweep_eps")
        }
        SweepOver::N => {
            let ns = if values.is_empty() {
                cfg.verify.n_list.clone()
            } else {
                values
                    .iter()
                    .map(|&v| {
                        if v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                            Ok(v as u32)
                        } else {
                            Err(Error::Config(format!("--values: truncation level {v} is not a positive integer")))
                        }
                    })
                    .collect::<Result<_, _>>()?
            };
            let top = ns.iter().copied().max().unwrap_or(1);
            let cont = sqbif_core::ContinuationConfig {
                norm_cap: cfg.continuation.norm_cap.max(50.0 * f64::from(top)),
                ..cfg.continuation
            };
            let entries = n_sweep(&cfg.spec, mesh, &ns, &cont, &cfg.solve);
            let failed = entries.iter().any(|e| e.error.is_some());
            (serde_json::to_value(&entries)?, Vec::new(), failed, "sweep_n")
        }
    };
    let mut w = create(dir, &format!("{name}.json"))?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.flush()?;
    if !curves.is_empty() {
        let mut d = Diagram {
            title: format!("{name}: p = {}, q = {}, δ = {}", cfg.spec.p, cfg.spec.q, cfg.spec.delta),
            ..Diagram::default()
        };
        for b in &curves {
            d.curves.push(b.points.iter().map(|p| (p.lambda, p.sup_norm)).collect());
        }
        fs::write(dir.join(format!("{name}.svg")), d.to_svg())?;
    }
    print_json(&summary)?;
    Ok(if failed { ExitCode::from(EXIT_NUMERICAL) } else { ExitCode::SUCCESS })
}

fn plot(inputs: &[PathBuf], out: Option<&Path>, title: Option<&str>) -> Result<ExitCode, Error> {
    let mut d = Diagram {
        title: title.unwrap_or("bifurcation diagram").to_string(),
        ..Diagram::default()
    };
    for path in inputs {
        let rows = read_branch_csv(File::open(path)?)?;
        d.curves.push(rows.iter().map(|r| (r.lambda, r.sup_norm)).collect());
    }
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| inputs[0].with_extension("svg"));
    fs::write(&out, d.to_svg())?;
    println!("{}", out.display());
    Ok(ExitCode::SUCCESS)
}
