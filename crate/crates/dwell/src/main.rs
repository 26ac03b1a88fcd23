//! `dwell` — double-well lattice simulation CLI.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dwell::config::{parse_config, RunConfig};
use dwell::ensemble::run_ensemble;
use dwell::output;
use dwell::presets::{expand_preset, PresetId, PresetRun};

#[derive(Parser)]
#[command(
    name = "dwell",
    version,
    about = "Tunnelling and phase-kick decoherence in a 1D optical double-well lattice",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the q = 0 spectrum and write the eigenvalue table
    Spectrum(CommonArgs),
    /// Write the (x, V(x)) table over the grid
    Potential(CommonArgs),
    /// Single-trajectory evolution without kicks
    Evolve(CommonArgs),
    /// Full Monte Carlo trajectory ensemble
    Ensemble(CommonArgs),
    /// Expand a preset and run whatever it describes
    Preset(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (structured key = value text)
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Figure preset id (fig1, fig2, fig3a, ..., fig9b)
    #[arg(long, value_name = "ID")]
    preset: Option<String>,
    /// Override the ensemble base seed
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Assert how the kick rate is specified in the effective config
    #[arg(long, value_enum, value_name = "UNIT")]
    rate_unit: Option<RateUnit>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateUnit {
    Hz,
    Dimensionless,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Spectrum(a) => cmd_spectrum(a),
        Cmd::Potential(a) => cmd_potential(a),
        Cmd::Evolve(a) => cmd_evolve(a),
        Cmd::Ensemble(a) => cmd_ensemble(a),
        Cmd::Preset(a) => cmd_preset(a),
    }
}

/// Resolves --config / --preset into labeled runs.
fn resolve_runs(args: &CommonArgs) -> anyhow::Result<(Option<PresetId>, Vec<PresetRun>)> {
    match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            let mut config = parse_config(&text)?;
            apply_overrides(&mut config, args)?;
            Ok((
                None,
                vec![PresetRun {
                    label: "run".into(),
                    config,
                }],
            ))
        }
        (None, Some(name)) => {
            let id = PresetId::from_str(name)?;
            let mut runs = expand_preset(id);
            for run in runs.iter_mut() {
                apply_overrides(&mut run.config, args)?;
            }
            Ok((Some(id), runs))
        }
        (None, None) => bail!("one of --config or --preset is required"),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

fn apply_overrides(config: &mut RunConfig, args: &CommonArgs) -> anyhow::Result<()> {
    if let Some(seed) = args.seed {
        config.ensemble.base_seed = seed;
    }
    if let Some(unit) = args.rate_unit {
        match unit {
            RateUnit::Hz => {
                if config.kick.enabled && config.kick.rate_hz.is_none() {
                    bail!("--rate-unit hz, but the effective config does not specify rate_hz");
                }
            }
            RateUnit::Dimensionless => {
                if config.kick.enabled && config.kick.rate_dimensionless.is_none() {
                    bail!(
                        "--rate-unit dimensionless, but the effective config does not specify rate_dimensionless"
                    );
                }
            }
        }
    }
    Ok(())
}

fn out_path(dir: &Path, preset: Option<PresetId>, label: &str, kind: &str) -> PathBuf {
    let stem = match preset {
        Some(id) => format!("{}_{}_{}", id.name(), label, kind),
        None => kind.to_string(),
    };
    dir.join(format!("{stem}.csv"))
}

fn ensure_out(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn cmd_spectrum(args: CommonArgs) -> anyhow::Result<()> {
    let (preset, runs) = resolve_runs(&args)?;
    ensure_out(&args.out)?;
    for run in &runs {
        let ctx = run.config.build()?;
        let path = out_path(&args.out, preset, &run.label, "spectrum");
        output::write_file(&path, |w| output::write_spectrum(&ctx.spectrum, w))?;
        println!(
            "spectrum [{}]: {} levels, delta = {} E_R -> {}",
            run.label,
            ctx.spectrum.states.len(),
            output::fmt12(ctx.spectrum.splitting()),
            path.display()
        );
    }
    Ok(())
}

fn cmd_potential(args: CommonArgs) -> anyhow::Result<()> {
    let (preset, runs) = resolve_runs(&args)?;
    ensure_out(&args.out)?;
    for run in &runs {
        run.config.validate()?;
        let params = run.config.lattice_params();
        let grid = dwell::dynamics::Grid::new(
            run.config.grid.x_min,
            run.config.grid.x_max,
            run.config.grid.n_points,
        )?;
        let path = out_path(&args.out, preset, &run.label, "potential");
        output::write_file(&path, |w| output::write_potential(&params, &grid, w))?;
        println!("potential [{}]: {} rows -> {}", run.label, grid.n_points, path.display());
    }
    Ok(())
}

fn cmd_evolve(args: CommonArgs) -> anyhow::Result<()> {
    let (preset, mut runs) = resolve_runs(&args)?;
    ensure_out(&args.out)?;
    for run in runs.iter_mut() {
        // single trajectory, no kicks
        run.config.kick.enabled = false;
        run.config.ensemble.n_trajectories = 1;
        execute_series(&args, preset, run, "evolve")?;
    }
    Ok(())
}

fn cmd_ensemble(args: CommonArgs) -> anyhow::Result<()> {
    let (preset, runs) = resolve_runs(&args)?;
    ensure_out(&args.out)?;
    for run in &runs {
        execute_series(&args, preset, run, "series")?;
    }
    Ok(())
}

fn cmd_preset(args: CommonArgs) -> anyhow::Result<()> {
    if args.preset.is_none() {
        bail!("preset requires --preset ID");
    }
    let (preset, runs) = resolve_runs(&args)?;
    let id = preset.expect("resolved preset");
    if id.is_potential() {
        return cmd_potential(args);
    }
    ensure_out(&args.out)?;
    for run in &runs {
        execute_series(&args, preset, run, "series")?;
    }
    Ok(())
}

fn execute_series(
    args: &CommonArgs,
    preset: Option<PresetId>,
    run: &PresetRun,
    kind: &str,
) -> anyhow::Result<()> {
    let ctx = run.config.build()?;
    let series = run_ensemble(&ctx.ensemble, &ctx.plan, &ctx.spectrum, &ctx.partition)?;
    let path = out_path(&args.out, preset, &run.label, kind);
    let echo = run.config.to_text();
    output::write_file(&path, |w| {
        output::write_series(&series, &echo, &ctx.rate_note, w)
    })?;
    if let Some(logs) = &series.kick_logs {
        for (k, log) in logs.iter().enumerate() {
            let lp = args.out.join(match preset {
                Some(id) => format!("{}_{}_kicks_traj{k:03}.csv", id.name(), run.label),
                None => format!("kicks_traj{k:03}.csv"),
            });
            output::write_file(&lp, |w| output::write_kick_log(log, w))?;
        }
    }
    let last = series.times.len() - 1;
    println!(
        "{kind} [{}]: t_final = {}, P_L = {}, F = {}, M = {} -> {}",
        run.label,
        series.times[last],
        output::fmt12(series.p_left_total[last]),
        output::fmt12(series.survival[last]),
        output::fmt12(series.purity[last]),
        path.display()
    );
    Ok(())
}
