use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use aklt_core::chain::{build_aklt, build_chain, ChainState};
use aklt_core::io::{ChainStateJson, GateOutcomeJson, MatrixJson, SCHEMA};
use aklt_core::mbqc::{
    bloch_scan, run_rotation_gate_on, Axis, Forced, LogicalInput, Sampled, ANGLE_GRID,
};
use aklt_core::optics::NoiseModel;
use aklt_core::quantum::DensityOperator;
use aklt_core::tomography::{
    ml_reconstruct, monte_carlo_fidelity, simulate_all_counts, CountTable, Likelihood,
    MonteCarloOptions, MonteCarloReport, ReconstructionOptions, ScalingMode,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::{reproduce, Command, Layout, LikelihoodArg, NoiseArgs, OutputArgs, ScalingArg};

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Build { n, noise, out } => build(n as usize, &noise, &out, cfg),
        Command::Rotate {
            input,
            axis,
            theta,
            outcome,
            seed,
            chain,
            noise,
            out,
        } => {
            let chain = match chain {
                Some(path) => {
                    if resolve_noise(&noise, cfg)?.is_some() {
                        return Err(CliError::Usage(
                            "noise flags do not apply to a wire read with --chain".into(),
                        ));
                    }
                    read_chain(&path)?
                }
                None => build_chain(1, resolve_noise(&noise, cfg)?.as_ref())?,
            };
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let gate = match outcome.forced() {
                Some(o) => run_rotation_gate_on(
                    &chain,
                    &input.ket(),
                    axis,
                    theta.0,
                    &mut Forced::always(o),
                )?,
                None => run_rotation_gate_on(
                    &chain,
                    &input.ket(),
                    axis,
                    theta.0,
                    &mut Sampled(ChaCha8Rng::seed_from_u64(seed)),
                )?,
            };
            let json = RotateJson {
                schema: SCHEMA,
                input,
                axis,
                theta: theta.0,
                gate: GateOutcomeJson::from(&gate),
            };
            emit(&out, cfg, &to_json(&json)?)
        }
        Command::Scan {
            input,
            outcome,
            angles,
            noise,
            out,
        } => {
            let thetas: Vec<f64> = if angles.is_empty() {
                ANGLE_GRID.to_vec()
            } else {
                angles.iter().map(|a| a.0).collect()
            };
            let rows = bloch_scan(
                &input.ket(),
                outcome,
                &thetas,
                resolve_noise(&noise, cfg)?.as_ref(),
            )?;
            let mut csv = String::from("axis,theta,x,y,z\n");
            for (axis, theta, b) in rows {
                csv.push_str(&format!("{axis},{theta},{},{},{}\n", b.x, b.y, b.z));
            }
            emit(&out, cfg, &csv)
        }
        Command::TomoSimulate {
            state,
            n0,
            seed,
            layout,
            out,
        } => tomo_simulate(&state, n0, seed, layout, &out, cfg),
        Command::TomoFit {
            counts,
            target,
            trials,
            seed,
            likelihood,
            scaling,
            out,
        } => {
            let options = ReconstructionOptions {
                likelihood: match likelihood {
                    LikelihoodArg::Poisson => Likelihood::Poisson,
                    LikelihoodArg::Multinomial => Likelihood::Multinomial,
                },
                scaling: match scaling {
                    ScalingArg::FoldIn => ScalingMode::FoldIn,
                    ScalingArg::DivideCounts => ScalingMode::DivideCounts,
                },
                ..Default::default()
            };
            let table = read_counts(&counts)?;
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let json = tomo_fit(&table, target.as_deref(), trials, seed, options)?;
            for w in &json.warnings {
                eprintln!("warning: {w}");
            }
            emit(&out, cfg, &to_json(&json)?)
        }
        Command::Reproduce {
            which,
            data,
            trials,
            seed,
            n0,
            noise,
            format,
            csv,
            out,
        } => {
            let args = reproduce::Args {
                data,
                trials,
                seed: seed.or(cfg.seed).unwrap_or(0),
                n0: n0.or(cfg.n0),
                noise: resolve_noise(&noise, cfg)?,
            };
            let (report, table) = reproduce::run(which, &args)?;
            if let (Some(path), Some(table)) = (&csv, &table) {
                write_file(path, table)?;
            }
            let text = match format.or(cfg.format) {
                Some(crate::config::Format::Csv) => report.to_csv(),
                _ => to_json(&report)?,
            };
            emit(&out, cfg, &text)?;
            eprintln!(
                "{}: {} of {} checks pass",
                report.report,
                report.checked - report.failed,
                report.checked
            );
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            if report.pass {
                Ok(())
            } else {
                Err(CliError::Comparison(report.failed, report.checked))
            }
        }
    }
}

#[derive(Serialize)]
struct RotateJson {
    schema: &'static str,
    input: LogicalInput,
    axis: Axis,
    theta: f64,
    #[serde(flatten)]
    gate: GateOutcomeJson,
}

#[derive(Serialize)]
pub struct FitJson {
    schema: &'static str,
    likelihood: Likelihood,
    scaling: ScalingMode,
    total_counts: u64,
    missing_settings: usize,
    rank_deficient: bool,
    warnings: Vec<String>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    n0: f64,
    rho: MatrixJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monte_carlo: Option<MonteCarloJson>,
}

#[derive(Serialize)]
struct MonteCarloJson {
    seed: u64,
    #[serde(flatten)]
    report: MonteCarloReport,
}

fn build(n: usize, noise: &NoiseArgs, out: &OutputArgs, cfg: &RunConfig) -> Result<()> {
    let chain = build_chain(n, resolve_noise(noise, cfg)?.as_ref())?;
    emit(out, cfg, &to_json(&ChainStateJson::from_chain(&chain))?)
}

fn tomo_simulate(
    state: &Path,
    n0: Option<f64>,
    seed: Option<u64>,
    layout: Layout,
    out: &OutputArgs,
    cfg: &RunConfig,
) -> Result<()> {
    let n0 = n0
        .or(cfg.n0)
        .ok_or_else(|| CliError::Usage("--n0 is required (or `n0` in the config)".into()))?;
    let rho = read_target(state)?;
    if n0 == 0.0 {
        eprintln!("warning: n0 = 0, every simulated count is zero");
    }
    let table = simulate_all_counts(&rho, n0, seed.or(cfg.seed).unwrap_or(0))?;
    let csv = match layout {
        Layout::Wide => table.to_wide_csv(),
        Layout::Long => table.to_long_csv(),
    };
    emit(out, cfg, &csv)
}

pub fn tomo_fit(
    table: &CountTable,
    target: Option<&str>,
    trials: Option<usize>,
    seed: u64,
    options: ReconstructionOptions,
) -> Result<FitJson> {
    let target_rho = target.map(resolve_target).transpose()?;
    let fit = ml_reconstruct(table, &options)?;
    let fidelity = target_rho
        .as_ref()
        .map(|t| fit.rho.fidelity(t))
        .transpose()?;
    let monte_carlo = match (trials, &target_rho) {
        (Some(trials), Some(t)) => {
            let mc = MonteCarloOptions {
                trials,
                seed,
                reconstruction: options.clone(),
                ..Default::default()
            };
            Some(MonteCarloJson {
                seed,
                report: monte_carlo_fidelity(table, t, &mc)?,
            })
        }
        _ => None,
    };
    Ok(FitJson {
        schema: SCHEMA,
        likelihood: options.likelihood,
        scaling: options.scaling,
        total_counts: table.total(),
        missing_settings: table.missing().len(),
        rank_deficient: fit.rank_deficient,
        warnings: fit.warnings,
        log_likelihood: fit.log_likelihood,
        iterations: fit.iterations,
        converged: fit.converged,
        n0: fit.n0,
        rho: MatrixJson::from_density(&fit.rho),
        target: target.map(str::to_owned),
        fidelity,
        monte_carlo,
    })
}

fn resolve_target(target: &str) -> Result<DensityOperator> {
    if target == "ideal" {
        return Ok(build_aklt(1)?.density());
    }
    read_target(Path::new(target))
}

/// A qubit-qutrit-qubit state from a chain JSON file.
fn read_target(path: &Path) -> Result<DensityOperator> {
    let chain = read_chain(path)?;
    if chain.n_qutrits != 1 {
        return Err(CliError::Data(format!(
            "{}: tomography needs a single-qutrit wire, file has {} qutrits",
            path.display(),
            chain.n_qutrits
        )));
    }
    Ok(chain.density())
}

fn read_chain(path: &Path) -> Result<ChainState> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let json: ChainStateJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    json.to_chain()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_counts(path: &Path) -> Result<CountTable> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    CountTable::from_csv_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn resolve_noise(args: &NoiseArgs, cfg: &RunConfig) -> Result<Option<NoiseModel>> {
    let werner_p = args.werner_p.or(cfg.noise.werner_p);
    let mode_overlap = args.mode_overlap.or(cfg.noise.mode_overlap);
    if werner_p.is_none() && mode_overlap.is_none() {
        return Ok(None);
    }
    let model = NoiseModel::new(werner_p.unwrap_or(1.0), mode_overlap.unwrap_or(1.0))?;
    Ok((!model.is_ideal()).then_some(model))
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(aklt_core::Error::from)?;
    text.push('\n');
    Ok(text)
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn emit(out: &OutputArgs, cfg: &RunConfig, text: &str) -> Result<()> {
    match out.output.as_ref().or(cfg.output.as_ref()) {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
