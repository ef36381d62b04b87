//! `photint`: command line front end for the heralded-photon integrator
//! simulation.
//!
//! Subcommands: `integrate` (one mask, one readout row), `sweep` (random
//! masks over proportion and size in both heralding arms), `visibility`
//! (D2 scan against a stripe mask), `dqc1` (trace estimate of a mask),
//! `mask gen` / `mask show` (P2 mask files). Exit codes: 0 success, 2
//! configuration error, 3 physics-domain error (herald miss, grid coverage).

mod config;
mod manifest;
mod output;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::Config;
use photint_core::{
    c_plus_percent, coincidence_probabilities, dqc1_sigma_x, make_binary_mask,
    run_proportion_sweep, run_visibility_scan, sample_counts, sweep_cell_pixels, visibility,
    BinaryMaskSpec, ExperimentConfig, HeraldingConfig, PhaseMask,
};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "photint", version, about = "Simulates an optical integrator built from heralded single photons")]
struct Cli {
    /// Configuration file (TOML); also accepts a manifest.toml from a
    /// previous run.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory for CSV files and the run manifest.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Expected total coincidences per readout; enables Poisson noise.
    #[arg(long, global = true, value_name = "N")]
    shots: Option<f64>,

    /// Noiseless expectation values (the default unless the config sets
    /// shots).
    #[arg(long, global = true, conflicts_with = "shots")]
    analytic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reads one mask through the full bench and prints T, C+(%) and the
    /// trace estimate.
    Integrate(MaskArgs),
    /// Runs random masks over proportions and sizes in both heralding arms.
    Sweep,
    /// Scans D2 across a stripe mask and records the port visibility.
    Visibility,
    /// Prints the trace estimate of a mask without any optics.
    Dqc1(MaskArgs),
    /// Phase-mask file utilities.
    #[command(subcommand)]
    Mask(MaskCommand),
}

#[derive(Subcommand)]
enum MaskCommand {
    /// Generates a mask and writes it as a P2 file.
    Gen(GenArgs),
    /// Prints the contents of a P2 mask file.
    Show {
        /// P2 mask file.
        file: PathBuf,
    },
}

/// Where a subcommand takes its mask from: a P2 file, or generation flags.
#[derive(Args)]
struct MaskArgs {
    /// P2 mask file to read.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["mask_size", "mask_stripes"])]
    mask: Option<PathBuf>,

    /// Generates a random N x N mask instead of reading a file.
    #[arg(long, value_name = "N")]
    mask_size: Option<usize>,

    /// White fraction of the generated mask.
    #[arg(long, default_value_t = 0.5)]
    mask_fraction: f64,

    /// Seed of the generated mask; defaults to the global seed.
    #[arg(long)]
    mask_seed: Option<u64>,

    /// Horizontal stripes with this period in cells instead of random cells.
    #[arg(long, value_name = "PERIOD")]
    mask_stripes: Option<usize>,

    /// SLM pixels per mask cell; defaults to the sweep ladder for the size.
    #[arg(long)]
    cell_pixels: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    /// Output P2 file.
    file: PathBuf,

    #[arg(long, default_value_t = 8)]
    rows: usize,

    #[arg(long, default_value_t = 8)]
    cols: usize,

    /// White fraction of the random layout.
    #[arg(long, default_value_t = 0.5, conflicts_with = "stripes")]
    fraction: f64,

    /// Mask seed; defaults to the global seed.
    #[arg(long)]
    mask_seed: Option<u64>,

    /// Horizontal stripes with this period in cells instead of random cells.
    #[arg(long, value_name = "PERIOD")]
    stripes: Option<usize>,

    #[arg(long, default_value_t = 8)]
    cell_pixels: usize,

    #[arg(long, default_value_t = 8.0)]
    pixel_pitch_um: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// A closed stdout (`photint ... | head`) is not an error worth reporting.
fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause
            .downcast_ref::<io::Error>()
            .is_some_and(|io_err| io_err.kind() == io::ErrorKind::BrokenPipe)
    })
}

/// 3 for errors arising from the physics of the configured bench, 2 for
/// everything else (configuration, files).
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<photint_core::Error>() {
            return match core {
                photint_core::Error::HeraldMiss { .. }
                | photint_core::Error::Coverage { .. }
                | photint_core::Error::Domain(_)
                | photint_core::Error::UndefinedReadout => 3,
                photint_core::Error::Io(_) | photint_core::Error::Format(_) => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(shots) = cli.shots {
        config.run.shots = shots;
    }
    if cli.analytic {
        config.run.shots = 0.0;
    }

    match &cli.command {
        Command::Integrate(mask_args) => cmd_integrate(&cli, &config, mask_args),
        Command::Sweep => cmd_sweep(&cli, &config),
        Command::Visibility => cmd_visibility(&cli, &config),
        Command::Dqc1(mask_args) => cmd_dqc1(&config, mask_args),
        Command::Mask(MaskCommand::Gen(gen)) => cmd_mask_gen(&config, gen),
        Command::Mask(MaskCommand::Show { file }) => cmd_mask_show(file),
    }
}

fn resolve_mask(args: &MaskArgs, config: &Config) -> anyhow::Result<PhaseMask> {
    if let Some(path) = &args.mask {
        return photint_core::mask::load_p2(path)
            .with_context(|| format!("cannot read mask file {}", path.display()));
    }
    let size = args
        .mask_size
        .context("no mask given: pass --mask FILE or --mask-size N")?;
    let spec = match args.mask_stripes {
        Some(period) => BinaryMaskSpec::stripes(size, size, period)?,
        None => BinaryMaskSpec::random(
            size,
            size,
            args.mask_fraction,
            args.mask_seed.unwrap_or(config.run.seed),
        )?,
    };
    let cell_pixels = args.cell_pixels.unwrap_or_else(|| sweep_cell_pixels(size));
    Ok(make_binary_mask(&spec, cell_pixels, photint_core::mask::DEFAULT_PIXEL_PITCH)?)
}

fn ensure_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn cmd_integrate(cli: &Cli, config: &Config, mask_args: &MaskArgs) -> anyhow::Result<()> {
    let exp = config.experiment()?;
    let mask = resolve_mask(mask_args, config)?;
    let (p_plus, p_minus) = coincidence_probabilities(&exp, &mask)?;

    let (pct, t) = if exp.shots > 0.0 {
        let rec = sample_counts(p_plus, p_minus, exp.shots, exp.seed)?;
        (c_plus_percent(&rec)?, visibility(&rec)?)
    } else {
        let total = p_plus + p_minus;
        if total == 0.0 {
            return Err(photint_core::Error::UndefinedReadout.into());
        }
        (100.0 * (p_plus / total), (p_plus - p_minus) / total)
    };
    let sigma_x = dqc1_sigma_x(&mask).sigma_x;

    writeln!(io::stdout(), "T = {t:.6}  C+ = {pct:.4} %  sigma_x = {sigma_x:.6}")?;

    ensure_out(&cli.out)?;
    let path = output::write_integrate_csv(&cli.out, t, pct, sigma_x)?;
    manifest::write_manifest(&cli.out, "integrate", cli.config.as_deref(), config)?;
    writeln!(io::stdout(), "wrote {}", path.display())?;
    Ok(())
}

fn cmd_sweep(cli: &Cli, config: &Config) -> anyhow::Result<()> {
    let exp = config.experiment()?;
    let rows = run_proportion_sweep(
        &exp,
        &config.sweep.fractions,
        &config.sweep.sizes,
        config.sweep.masks_per_point,
    )?;

    ensure_out(&cli.out)?;
    let path = output::write_sweep_csv(&cli.out, &rows)?;
    manifest::write_manifest(&cli.out, "sweep", cli.config.as_deref(), config)?;
    writeln!(io::stdout(), "wrote {} rows to {}", rows.len(), path.display())?;
    Ok(())
}

fn cmd_visibility(cli: &Cli, config: &Config) -> anyhow::Result<()> {
    let exp = config.experiment()?;
    let (stripe_mask, d1, positions) = config.visibility_geometry()?;
    let base = ExperimentConfig { d1, ..exp };

    let mut rows = Vec::new();
    for arm in [HeraldingConfig::Unc, HeraldingConfig::Cor] {
        rows.extend(run_visibility_scan(&base.with_arm(arm), &stripe_mask, &positions)?);
    }

    ensure_out(&cli.out)?;
    let path = output::write_visibility_csv(&cli.out, &rows)?;
    manifest::write_manifest(&cli.out, "visibility", cli.config.as_deref(), config)?;
    writeln!(io::stdout(), "wrote {} rows to {}", rows.len(), path.display())?;
    Ok(())
}

fn cmd_dqc1(config: &Config, mask_args: &MaskArgs) -> anyhow::Result<()> {
    let mask = resolve_mask(mask_args, config)?;
    writeln!(io::stdout(), "{:.9}", dqc1_sigma_x(&mask).sigma_x)?;
    Ok(())
}

fn cmd_mask_gen(config: &Config, gen: &GenArgs) -> anyhow::Result<()> {
    let spec = match gen.stripes {
        Some(period) => BinaryMaskSpec::stripes(gen.rows, gen.cols, period)?,
        None => BinaryMaskSpec::random(
            gen.rows,
            gen.cols,
            gen.fraction,
            gen.mask_seed.unwrap_or(config.run.seed),
        )?,
    };
    let mask = make_binary_mask(&spec, gen.cell_pixels, gen.pixel_pitch_um * 1e-6)?;
    photint_core::mask::save_p2(&gen.file, &mask)
        .with_context(|| format!("cannot write {}", gen.file.display()))?;
    writeln!(
        io::stdout(),
        "wrote {} x {} mask (fraction white {:.4}) to {}",
        mask.rows(),
        mask.cols(),
        mask.fraction_white(),
        gen.file.display()
    )?;
    Ok(())
}

fn cmd_mask_show(file: &Path) -> anyhow::Result<()> {
    let mask = photint_core::mask::load_p2(file)
        .with_context(|| format!("cannot read mask file {}", file.display()))?;
    let mut out = io::BufWriter::new(io::stdout().lock());
    writeln!(
        out,
        "{} x {} cells, {} px/cell, pitch {} um, fraction white {:.4}",
        mask.rows(),
        mask.cols(),
        mask.cell_pixels(),
        mask.pixel_pitch() * 1e6,
        mask.fraction_white()
    )?;
    for r in 0..mask.rows() {
        let row: Vec<String> = (0..mask.cols())
            .map(|c| format!("{:6.4}", mask.phase(r, c) / std::f64::consts::PI))
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    writeln!(out, "(phases in units of pi, row 0 = most negative y)")?;
    out.flush()?;
    Ok(())
}
