use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clg::orchestrator::output::write_json;
use clg::orchestrator::schema::{validate_dir, SCHEMAS};
use clg::orchestrator::stationary::write_exact_csv;
use clg::orchestrator::sweep::{self, SweepReport};
use clg::orchestrator::{run, ExperimentConfig, Recipe, Report};
use clg::ClgError;

/// Constrained lattice gas simulator and analysis toolkit.
#[derive(Parser)]
#[command(name = "clg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any recipe described by a config file.
    Run(RunArgs),
    /// Run a density sweep and fit the exponents.
    Sweep(RunArgs),
    /// Run the spreading experiment and the quasi-stationary ratio check.
    Soc(RunArgs),
    /// Run a boundary-driven profile and current measurement.
    Boundary(RunArgs),
    /// Write the one-dimensional closed forms on a density grid.
    Exact(ExactArgs),
    /// Refit the exponents of a finished sweep.
    Analyze(AnalyzeArgs),
    /// Check the CSV outputs of a run against their schemas.
    PlotData(PlotDataArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = "out")]
    out: PathBuf,
    /// Override a config key, e.g. `--set run.snapshots=100`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the worker count.
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse finished tasks cached in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long, default_value_t = 0.505)]
    rho_min: f64,
    #[arg(long, default_value_t = 0.995)]
    rho_max: f64,
    #[arg(long, default_value_t = 99)]
    points: usize,
    #[arg(short, long, default_value = "exact.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory of a finished sweep.
    dir: PathBuf,
    /// Fit window in `u = rho - rho_c`, as `lo,hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<(f64, f64)>,
    #[arg(long)]
    rho_c: Option<f64>,
    /// Where to write the refitted exponents; defaults to the sweep directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotDataArgs {
    /// Run directory to check.
    dir: Option<PathBuf>,
    /// Print the schemas as JSON instead.
    #[arg(long)]
    schemas: bool,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo > 0.0 && hi > lo) {
        return Err("need 0 < lo < hi".into());
    }
    Ok((lo, hi))
}

fn run_recipe(args: RunArgs, allowed: &[Recipe]) -> Result<(), ClgError> {
    let mut overrides = args.overrides;
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(t) = args.threads {
        overrides.push(format!("threads={t}"));
    }
    let cfg = ExperimentConfig::load(&args.config, &overrides)?;
    if !allowed.is_empty() && !allowed.contains(&cfg.recipe) {
        let names: Vec<&str> = allowed.iter().map(|r| r.name()).collect();
        return Err(ClgError::usage(format!(
            "recipe `{}` does not belong to this subcommand (expected {})",
            cfg.recipe.name(),
            names.join(" or ")
        )));
    }
    let out = run(&cfg, Some(&args.out), args.resume)?;
    summarize(&out.report);
    eprintln!(
        "wrote {} files to {} in {:.1}s",
        out.manifest.outputs.len(),
        args.out.display(),
        out.manifest.wall_time_seconds
    );
    Ok(())
}

fn summarize(report: &Report) {
    match report {
        Report::Stationary(r) => {
            let s = &r.analysis.summary;
            println!("rho_a = {}  a = {}  sigma = {}", s.rho_a, s.activity, s.sigma_hat);
            for c in &r.exact_checks {
                println!("{:<16} {} vs {:.6}  {}", c.name, c.measured, c.exact, if c.pass { "ok" } else { "OUT" });
            }
        }
        Report::Einstein(r) => println!("slope = {}", r.result.slope),
        Report::Boundary(r) => {
            println!("plane max |z| = {:.2}", r.plane_max_z);
            if let Some(j) = r.current_left {
                println!("left-face current = {j} (predicted {:.6})", r.predicted_left);
            }
        }
        Report::Sweep(r) => print_exponents(r),
        Report::Soc(r) => {
            match r.spread.pooled {
                Some(p) => println!("pooled inner density = {p} over {} accepted runs", r.accepted),
                None => println!("no accepted spreading runs"),
            }
            for q in &r.quasi {
                println!("rho = {:.4}: a/rho_a = {}", q.rho, q.ratio);
            }
        }
        Report::Crossover(r) => println!("crossover size: {:?}", r.estimate),
    }
}

fn print_exponents(r: &SweepReport) {
    let e = &r.exponents;
    for (name, v) in [
        ("beta", e.beta),
        ("b", e.b),
        ("alpha", e.alpha),
        ("gamma", e.gamma),
        ("nu_cross", e.nu_cross),
        ("nu_perp", e.nu_perp),
        ("zeta", e.zeta),
    ] {
        match v {
            Some(v) => println!("{name:<9} {v}"),
            None => println!("{name:<9} -  ({})", r.fit_errors.get(name).map_or("not measured", String::as_str)),
        }
    }
    for res in &r.relations.residuals {
        if let Some(v) = res.value {
            println!("{:<3} {v}", res.name);
        }
    }
}

fn exact(args: ExactArgs) -> Result<(), ClgError> {
    if args.points == 0 || !(args.rho_min <= args.rho_max) {
        return Err(ClgError::usage("need points >= 1 and rho_min <= rho_max"));
    }
    let rhos: Vec<f64> = (0..args.points)
        .map(|k| {
            if args.points == 1 {
                args.rho_min
            } else {
                args.rho_min + (args.rho_max - args.rho_min) * k as f64 / (args.points - 1) as f64
            }
        })
        .collect();
    write_exact_csv(&args.out, &rhos)?;
    eprintln!("wrote {} rows to {}", rhos.len(), args.out.display());
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), ClgError> {
    let text = std::fs::read_to_string(args.dir.join("exponents.json"))?;
    let mut report: SweepReport = serde_json::from_str(&text)?;
    let window = args.window.unwrap_or(report.fit_window);
    let rho_c = args.rho_c.unwrap_or(report.rho_c);
    report.refit(rho_c, window);
    print_exponents(&report);
    let out = args.out.unwrap_or(args.dir);
    std::fs::create_dir_all(&out)?;
    sweep::write(&report, &out)?;
    Ok(())
}

fn plot_data(args: PlotDataArgs) -> Result<(), ClgError> {
    if args.schemas {
        println!("{}", serde_json::to_string_pretty(SCHEMAS)?);
        return Ok(());
    }
    let dir = args.dir.ok_or_else(|| ClgError::usage("plot-data needs a run directory or --schemas"))?;
    let index = validate_dir(&dir)?;
    for d in &index {
        println!("{:<18} {:>7} rows  {}", d.file, d.rows, d.columns.join(","));
    }
    write_json(&dir.join("datasets.json"), &index)?;
    Ok(())
}

fn exit_code(e: &ClgError) -> u8 {
    match e {
        ClgError::Usage(_) | ClgError::Config(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run_recipe(a, &[]),
        Command::Sweep(a) => run_recipe(a, &[Recipe::Sweep]),
        Command::Soc(a) => run_recipe(a, &[Recipe::Soc]),
        Command::Boundary(a) => run_recipe(a, &[Recipe::Boundary, Recipe::CylinderCurrent]),
        Command::Exact(a) => exact(a),
        Command::Analyze(a) => analyze(a),
        Command::PlotData(a) => plot_data(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clg: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
