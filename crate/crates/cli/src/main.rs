//! Command line front end: runs the Monte-Carlo design experiments, folds
//! record files into summary tables, and prints architecture masks.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use bdris_core::channels::Seed;
use bdris_core::experiment::{
    emit_plot_script, emit_records_csv, emit_summary_csv, read_records_csv, run_experiment,
    summarize, ExperimentConfig, Preset, Scheme,
};
use bdris_core::topology::{build_mask, ArchitectureSpec};
use bdris_core::SystemDims;

#[derive(Parser)]
#[command(name = "bdris", version, about = "Scattering matrix design experiments for beyond-diagonal RIS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset or a custom grid and write CSV results.
    Run(RunArgs),
    /// Aggregate a records CSV into a summary CSV.
    Summarize(SummarizeArgs),
    /// Print the 0/1 connectivity grid of an architecture.
    Mask(MaskArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment preset: fig3, fig4, fig5 or custom.
    #[arg(long, default_value = "fig3")]
    preset: String,
    /// TOML config file mirroring the experiment configuration; explicit
    /// flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RIS element count; repeatable, combined with --k/--l as a grid.
    #[arg(long = "n")]
    n: Vec<usize>,
    /// User count; repeatable.
    #[arg(long = "k")]
    k: Vec<usize>,
    /// BS antenna count; repeatable.
    #[arg(long = "l")]
    l: Vec<usize>,
    /// Stem size; repeatable.
    #[arg(long = "q")]
    q: Vec<usize>,
    /// Comma-separated scheme list (ls, newton-ls, newton-random,
    /// newton-ls-fully, upper-bound).
    #[arg(long)]
    schemes: Option<String>,
    /// Channel realizations per grid point.
    #[arg(long)]
    realizations: Option<usize>,
    /// Base seed of the run.
    #[arg(long)]
    seed: Option<u64>,
    /// Reference impedance in ohms.
    #[arg(long)]
    z0: Option<f64>,
    /// Use the full-size grids (64 elements, 100 realizations) instead of
    /// the desk scale.
    #[arg(long)]
    full_scale: bool,
    /// Record wall-clock per scheme evaluation (makes output
    /// non-reproducible).
    #[arg(long)]
    timings: bool,
    /// Output directory for records.csv, summary.csv and plot.gp.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Records CSV produced by `bdris run`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Summary CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MaskArgs {
    /// Architecture: single, tree, group:G, qstem:Q or fully.
    #[arg(long)]
    arch: String,
    /// Element count.
    #[arg(long = "n")]
    n: usize,
    /// Write the grid to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Summarize(args) => summarize_file(args),
        Command::Mask(args) => mask(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed stdout pipe (e.g. piping into head) is not a failure.
        Err(e) => match e.downcast_ref::<std::io::Error>() {
            Some(io_err) if io_err.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
            _ => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn base_config(args: &RunArgs) -> anyhow::Result<ExperimentConfig> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        return toml::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    Ok(match Preset::parse(&args.preset)? {
        Preset::Fig3 => ExperimentConfig::fig3(),
        Preset::Fig4 => ExperimentConfig::fig4(),
        Preset::Fig5 => ExperimentConfig::fig5(),
        Preset::Custom => ExperimentConfig::default(),
    })
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let mut cfg = base_config(&args)?;
    if args.full_scale {
        cfg = cfg.full_scale();
    }
    if !args.n.is_empty() || !args.k.is_empty() || !args.l.is_empty() {
        let unique = |given: &[usize], fallback: Vec<usize>| -> Vec<usize> {
            if given.is_empty() {
                fallback
            } else {
                let mut seen = BTreeSet::new();
                given.iter().copied().filter(|v| seen.insert(*v)).collect()
            }
        };
        let ns = unique(&args.n, cfg.dims_grid.iter().map(|d| d.n).collect());
        let ks = unique(&args.k, vec![cfg.dims_grid[0].k]);
        let ls = unique(&args.l, vec![cfg.dims_grid[0].l]);
        let mut grid = Vec::new();
        for &n in &ns {
            for &l in &ls {
                for &k in &ks {
                    grid.push(SystemDims::new(n, l, k));
                }
            }
        }
        cfg.dims_grid = grid;
    }
    if !args.q.is_empty() {
        cfg.q_grid = args.q.clone();
    }
    if let Some(schemes) = &args.schemes {
        cfg.schemes = schemes
            .split(',')
            .map(|s| Scheme::parse(s.trim()))
            .collect::<Result<_, _>>()?;
    }
    if let Some(realizations) = args.realizations {
        cfg.realizations = realizations;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = Seed(seed);
    }
    if let Some(z0) = args.z0 {
        cfg.z0 = z0;
    }
    cfg.measure_time = args.timings;
    cfg.validate()?;

    let records = run_experiment(&cfg)?;
    let summary = summarize(&records)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let records_path = args.out.join("records.csv");
    let summary_path = args.out.join("summary.csv");
    let plot_path = args.out.join("plot.gp");
    emit_records_csv(&records, &records_path)?;
    emit_summary_csv(&summary, &summary_path)?;
    emit_plot_script(&cfg, "summary.csv", &plot_path)?;

    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "wrote {} records to {} ({} summary rows, plot script {})",
        records.len(),
        records_path.display(),
        summary.len(),
        plot_path.display()
    )?;
    writeln!(out, "{:>4} {:>4} {:>3} {:>3} {:>16} {:>13} {:>9}", "n", "k", "l", "q", "scheme", "mean gain", "gain/ub")?;
    for row in &summary {
        writeln!(
            out,
            "{:>4} {:>4} {:>3} {:>3} {:>16} {:>13.6e} {:>9}",
            row.n,
            row.k,
            row.l,
            row.q,
            row.scheme.name(),
            row.mean_gain,
            row.ub_ratio.map(|r| format!("{r:.6}")).unwrap_or_default(),
        )?;
    }
    Ok(())
}

fn summarize_file(args: SummarizeArgs) -> anyhow::Result<()> {
    let records = read_records_csv(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    if records.is_empty() {
        bail!("{} holds no records", args.input.display());
    }
    let summary = summarize(&records)?;
    emit_summary_csv(&summary, &args.out)?;
    writeln!(
        std::io::stdout().lock(),
        "wrote {} summary rows to {}",
        summary.len(),
        args.out.display()
    )?;
    Ok(())
}

fn mask(args: MaskArgs) -> anyhow::Result<()> {
    let spec = ArchitectureSpec::parse(&args.arch, args.n)?;
    let grid = build_mask(&spec).to_grid_string();
    match &args.out {
        Some(path) => std::fs::write(path, grid)
            .with_context(|| format!("writing {}", path.display()))?,
        None => write!(std::io::stdout().lock(), "{grid}")?,
    }
    Ok(())
}
