//! Command-line entry point: `convert`, `analytic`, `classical`,
//! `quantum`, and `experiment` subcommands with shared parameter parsing
//! and output conventions.
//!
//! Exit codes: 0 success, 1 parameter/validation error, 2 runtime error.
//! Every engine flag can also come from a JSON config file (`--config`);
//! explicit flags override config values, which override built-in
//! defaults. Dimensionless parameters and lab parameters are mutually
//! exclusive ways to specify a run; lab inputs route through the units
//! module.

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::classical::{evolve_ensemble, sample_initial, Parity};
use crate::error::{Error, Result};
use crate::experiments::{self, manifest::RunManifest, ScenarioConfig};
use crate::quantum::{run_quantum, GridSpec, QuantumRunSpec};
use crate::stats::MomentumStats;
use crate::table::Table;
use crate::units::{self, DimensionlessParams};
use crate::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(
    name = "kicked-ratchet",
    version,
    about = "Classical, quantum, and analytic simulations of the two-period \
             delta-kicked rotor with a rocking potential"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args, Serialize, Deserialize)]
struct GlobalArgs {
    /// Output directory for data files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; the default is fixed so default runs are reproducible.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rayon worker threads (default: all cores). Results are identical
    /// for any worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Increase log verbosity on stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(default)]
    verbose: u8,
}

/// Dimensionless or lab-file parameter group, shared by the engines.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize, PartialEq)]
struct ParamArgs {
    /// Kick strength K (> 0).
    #[arg(long = "K", conflicts_with = "lab", allow_negative_numbers = true)]
    k: Option<f64>,
    /// Period asymmetry b (0 <= b < 1).
    #[arg(long, conflicts_with = "lab", allow_negative_numbers = true)]
    b: Option<f64>,
    /// Rocking amplitude A (signed).
    #[arg(long = "A", conflicts_with = "lab", allow_negative_numbers = true)]
    a: Option<f64>,
    /// Effective Planck constant hbar_eff (> 0).
    #[arg(long = "hbar", conflicts_with = "lab", allow_negative_numbers = true)]
    hbar: Option<f64>,
    /// Initial mean momentum in the lattice frame.
    #[arg(long = "rho-L", allow_negative_numbers = true)]
    rho_l: Option<f64>,
    /// Lab-parameters file (key = value schema); derives K, b, A,
    /// hbar_eff, rho_L through the units module.
    #[arg(long)]
    lab: Option<PathBuf>,
    /// JSON config file carrying these same fields; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ParamArgs {
    /// defaults < config file < explicit flags.
    fn merged(&self) -> Result<ParamArgs> {
        let mut base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str::<ParamArgs>(&text)
                    .map_err(|e| Error::Format(format!("config {path:?}: {e}")))?
            }
            None => ParamArgs::default(),
        };
        if self.k.is_some() {
            base.k = self.k;
        }
        if self.b.is_some() {
            base.b = self.b;
        }
        if self.a.is_some() {
            base.a = self.a;
        }
        if self.hbar.is_some() {
            base.hbar = self.hbar;
        }
        if self.rho_l.is_some() {
            base.rho_l = self.rho_l;
        }
        if self.lab.is_some() {
            base.lab = self.lab.clone();
        }
        Ok(base)
    }

    /// Resolve to validated dimensionless parameters plus rho_L.
    fn resolve(&self) -> Result<(DimensionlessParams, f64)> {
        let merged = self.merged()?;
        if let Some(lab_path) = &merged.lab {
            if merged.k.is_some()
                || merged.b.is_some()
                || merged.a.is_some()
                || merged.hbar.is_some()
            {
                return Err(Error::invalid(
                    "--lab is mutually exclusive with --K/--b/--A/--hbar",
                ));
            }
            let lab = units::parse_lab_file(&std::fs::read_to_string(lab_path)?)?;
            let (params, rho_l, check) = units::dimensionless_from_lab(&lab)?;
            if !check.consistent {
                eprintln!(
                    "warning: recoil-consistency: given omega_R {:.6e} differs from \
                     hbar k_L^2/(2M) = {:.6e} by {:.2}% (tolerance 1%)",
                    check.given,
                    check.derived,
                    100.0 * check.rel_err
                );
            }
            return Ok((params, merged.rho_l.unwrap_or(rho_l)));
        }
        let params = DimensionlessParams::new(
            merged.k.ok_or_else(|| Error::invalid("missing --K (or --lab)"))?,
            merged.b.ok_or_else(|| Error::invalid("missing --b (or --lab)"))?,
            merged.a.unwrap_or(0.0),
            merged.hbar.unwrap_or(1.0),
        )?;
        Ok((params, merged.rho_l.unwrap_or(0.0)))
    }
}

fn parse_parity(s: &str) -> Result<Parity> {
    match s {
        "odd-long" => Ok(Parity::OddLong),
        "even-long" => Ok(Parity::EvenLong),
        other => Err(Error::invalid(format!(
            "parity must be odd-long or even-long (got {other})"
        ))),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a lab-parameters file to dimensionless parameters.
    Convert {
        /// Lab-parameters file (key = value schema).
        #[arg(long)]
        lab: PathBuf,
    },
    /// Evaluate the closed-form current and timescales; CSV on stdout.
    Analytic {
        #[command(flatten)]
        params: ParamArgs,
        /// Number of kicks to tabulate.
        #[arg(long = "t")]
        t_max: Option<u32>,
        /// Initial momentum spread entering the damping factor.
        #[arg(long = "sigma-p", allow_negative_numbers = true)]
        sigma_p: Option<f64>,
    },
    /// Evolve a classical ensemble; emits per-kick stats and histogram CSVs.
    Classical {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "sigma-p", allow_negative_numbers = true)]
        sigma_p: Option<f64>,
        /// Number of trajectories.
        #[arg(long = "n-traj")]
        n_trajectories: Option<usize>,
        #[arg(long)]
        kicks: Option<u32>,
        /// Which kick parity takes the long period: odd-long | even-long.
        #[arg(long)]
        parity: Option<String>,
    },
    /// Propagate the quantum ladder; same CSV schemas as `classical`,
    /// plus a JSON run manifest.
    Quantum {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long = "sigma-p", allow_negative_numbers = true)]
        sigma_p: Option<f64>,
        /// Number of independent initial plane waves.
        #[arg(long = "beta-samples")]
        n_beta_samples: Option<usize>,
        #[arg(long)]
        kicks: Option<u32>,
        /// Ladder monitor radius (defaults scale with 1/hbar_eff).
        #[arg(long = "m-max")]
        m_max: Option<usize>,
        /// Angle grid size (power of two >= 2 m_max + 1).
        #[arg(long = "n-phi")]
        n_phi: Option<usize>,
        #[arg(long)]
        parity: Option<String>,
    },
    /// Run a packaged scenario (fig2 | fig3 | fig4 | fig5 | custom).
    Experiment {
        /// Scenario id.
        scenario: String,
        /// JSON scenario config (required for `custom`).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        kicks: Option<u32>,
        #[arg(long = "sigma-p", allow_negative_numbers = true)]
        sigma_p: Option<f64>,
        #[arg(long = "n-traj")]
        n_trajectories: Option<usize>,
        #[arg(long = "beta-samples")]
        n_beta_samples: Option<usize>,
        #[arg(long)]
        parity: Option<String>,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("error: invalid-arguments: {}", first_line(&e.to_string()));
            return 1;
        }
    };
    if let Some(w) = cli.global.workers {
        // best effort; the pool may already exist in-process (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global();
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").to_string()
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out_dir = cli
        .global
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    let seed = cli.global.seed.unwrap_or(DEFAULT_SEED);
    match &cli.cmd {
        Command::Convert { lab } => cmd_convert(lab),
        Command::Analytic {
            params,
            t_max,
            sigma_p,
        } => cmd_analytic(params, t_max.unwrap_or(120), sigma_p.unwrap_or(0.0)),
        Command::Classical {
            params,
            sigma_p,
            n_trajectories,
            kicks,
            parity,
        } => cmd_classical(
            params,
            sigma_p.unwrap_or(1.0),
            n_trajectories.unwrap_or(100_000),
            kicks.unwrap_or(120),
            parity.as_deref().map(parse_parity).transpose()?.unwrap_or_default(),
            &out_dir,
            seed,
            cli.global.verbose,
        ),
        Command::Quantum {
            params,
            sigma_p,
            n_beta_samples,
            kicks,
            m_max,
            n_phi,
            parity,
        } => cmd_quantum(
            params,
            sigma_p.unwrap_or(1.0),
            n_beta_samples.unwrap_or(128),
            kicks.unwrap_or(120),
            *m_max,
            *n_phi,
            parity.as_deref().map(parse_parity).transpose()?.unwrap_or_default(),
            &out_dir,
            seed,
            cli.global.verbose,
        ),
        Command::Experiment {
            scenario,
            config,
            kicks,
            sigma_p,
            n_trajectories,
            n_beta_samples,
            parity,
        } => {
            let mut cfg = ScenarioConfig::new(out_dir, seed);
            cfg.kicks = *kicks;
            cfg.sigma_p = *sigma_p;
            cfg.n_trajectories = *n_trajectories;
            cfg.n_beta_samples = *n_beta_samples;
            if let Some(p) = parity {
                cfg.parity = parse_parity(p)?;
            }
            let result = match scenario.as_str() {
                "fig2" => experiments::run_fig2(&cfg)?,
                "fig3" => experiments::run_fig3(&cfg)?,
                "fig4" => experiments::run_fig4(&cfg)?,
                "fig5" => experiments::run_fig5(&cfg)?,
                "custom" => {
                    let path = config.as_ref().ok_or_else(|| {
                        Error::invalid("custom scenario requires --config FILE")
                    })?;
                    let custom: experiments::CustomScenario =
                        serde_json::from_str(&std::fs::read_to_string(path)?)
                            .map_err(|e| Error::Format(format!("config {path:?}: {e}")))?;
                    experiments::run_custom(&custom, &cfg)?
                }
                other => {
                    return Err(Error::invalid(format!(
                        "unknown scenario {other}: expected fig2|fig3|fig4|fig5|custom"
                    )))
                }
            };
            if cli.global.verbose > 0 {
                for f in &result.files {
                    eprintln!("wrote {}", f.display());
                }
                eprintln!("wrote {}", result.manifest_path.display());
            }
            Ok(())
        }
    }
}

fn cmd_convert(lab_path: &Path) -> Result<()> {
    let lab = units::parse_lab_file(&std::fs::read_to_string(lab_path)?)?;
    let hbar_eff = units::hbar_eff_from_lab(&lab);
    let rho_l = units::rho_l_from_lab(&lab, hbar_eff);
    let rocking = units::rocking_from_lab(&lab);
    let kick = units::kick_strength_from_lab(&lab);
    let check = units::recoil_consistency(&lab);
    let momentum_scale = units::momentum_lab_to_scaled(1.0, &lab);

    println!("derived dimensionless parameters");
    println!("  hbar_eff            = {hbar_eff:.12}   (8 omega_R T)");
    println!("  kick_strength K     = {kick:.12}   (hbar_eff V0 t_p / hbar)");
    println!("  rocking_amplitude A = {rocking:.12}   (2 pi t_p delta_f)");
    println!("  rho_L               = {rho_l:.12}   (M lambda^2 Delta_f hbar_eff / 4 pi hbar)");
    println!("  momentum scale      = {momentum_scale:.6e}   (rho per kg m/s)");
    println!(
        "  ladder unit         = {:.6e} kg m/s   (momentum of one hbar_eff)",
        units::momentum_scaled_to_lab(hbar_eff, &lab)
    );
    if !check.consistent {
        eprintln!(
            "warning: recoil-consistency: given omega_R {:.6e} differs from \
             hbar k_L^2/(2M) = {:.6e} by {:.2}% (tolerance 1%)",
            check.given,
            check.derived,
            100.0 * check.rel_err
        );
    }
    Ok(())
}

fn cmd_analytic(params: &ParamArgs, t_max: u32, sigma_p: f64) -> Result<()> {
    if t_max < 1 {
        return Err(Error::invalid("t must be >= 1"));
    }
    if !(sigma_p.is_finite() && sigma_p >= 0.0) {
        return Err(Error::invalid("sigma-p must satisfy sigma_p >= 0"));
    }
    let (p, rho_l) = params.resolve()?;
    let pred = analytic::AnalyticPrediction::evaluate(&p, rho_l, sigma_p);
    let mut t = Table::new(&["t", "time_factor", "current"]);
    t.comment(format!(
        "K={} b={} A={} hbar_eff={} rho_l={rho_l} sigma_p={sigma_p}",
        p.kick_strength, p.period_asymmetry, p.rocking_amplitude, p.hbar_eff
    ));
    t.comment(format!(
        "I0={} ratchet_time={} localization_time={} diffusion={} phase={} damping={}",
        pred.max_current,
        pred.ratchet_time,
        pred.localization_time,
        pred.uncorrelated_diffusion,
        pred.phase,
        pred.damping
    ));
    if pred.degenerate_symmetry {
        t.comment("degenerate symmetry: b = 0 restores time symmetry, current is 0");
    }
    for tick in 1..=t_max {
        t.push(vec![
            tick as f64,
            analytic::time_factor(&p, tick),
            analytic::current(&p, rho_l, tick) * pred.damping,
        ]);
    }
    print!("{}", t.to_csv_string());
    Ok(())
}

fn stats_tables(stats: &MomentumStats) -> (Table, Table) {
    let mut series = Table::new(&["kick", "mean_shift", "variance", "sem"]);
    for t in 0..stats.mean_shift.len() {
        series.push(vec![
            t as f64,
            stats.mean_shift[t],
            stats.variance[t],
            stats.sem[t],
        ]);
    }
    let mut hist = Table::new(&["bin_left", "bin_right", "bin_center", "mass"]);
    for (i, &m) in stats.histogram.mass.iter().enumerate() {
        hist.push(vec![
            stats.histogram.left_edge(i),
            stats.histogram.right_edge(i),
            stats.histogram.center(i),
            m,
        ]);
    }
    (series, hist)
}

#[allow(clippy::too_many_arguments)]
fn cmd_classical(
    params: &ParamArgs,
    sigma_p: f64,
    n_trajectories: usize,
    kicks: u32,
    parity: Parity,
    out_dir: &Path,
    seed: u64,
    verbose: u8,
) -> Result<()> {
    if !(sigma_p.is_finite() && sigma_p >= 0.0) {
        return Err(Error::invalid("sigma-p must satisfy sigma_p >= 0"));
    }
    if n_trajectories < 1 {
        return Err(Error::invalid("n-traj must be >= 1"));
    }
    if kicks < 1 {
        return Err(Error::invalid("kicks must be >= 1"));
    }
    let (p, rho_l) = params.resolve()?;
    std::fs::create_dir_all(out_dir)?;
    let mut ens = sample_initial(&p, n_trajectories, rho_l, sigma_p, seed, parity);
    let stats = evolve_ensemble(&mut ens, kicks, p.hbar_eff);
    let (mut series, mut hist) = stats_tables(&stats);
    for t in [&mut series, &mut hist] {
        t.comments.insert(
            0,
            format!(
                "classical: K={} b={} A={} hbar_eff={} rho_l={rho_l} sigma_p={sigma_p} \
                 n_trajectories={n_trajectories} kicks={kicks} seed={seed}",
                p.kick_strength, p.period_asymmetry, p.rocking_amplitude, p.hbar_eff
            ),
        );
    }
    let series_path = out_dir.join("classical_series.csv");
    let hist_path = out_dir.join("classical_histogram.csv");
    series.write_csv(&series_path)?;
    hist.write_csv(&hist_path)?;
    if verbose > 0 {
        eprintln!("wrote {}", series_path.display());
        eprintln!("wrote {}", hist_path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_quantum(
    params: &ParamArgs,
    sigma_p: f64,
    n_beta_samples: usize,
    kicks: u32,
    m_max: Option<usize>,
    n_phi: Option<usize>,
    parity: Parity,
    out_dir: &Path,
    seed: u64,
    verbose: u8,
) -> Result<()> {
    let (p, rho_l) = params.resolve()?;
    let grid = match (m_max, n_phi) {
        (None, None) => GridSpec::for_hbar(p.hbar_eff),
        (m, n) => {
            let default = GridSpec::for_hbar(p.hbar_eff);
            let g = GridSpec {
                m_max: m.unwrap_or(default.m_max),
                n_phi: n.unwrap_or_else(|| {
                    (4 * m.unwrap_or(default.m_max)).next_power_of_two()
                }),
            };
            g.validate()?;
            g
        }
    };
    let start = std::time::Instant::now();
    let spec = QuantumRunSpec {
        params: p,
        rho_l,
        sigma_p,
        n_beta_samples,
        n_kicks: kicks,
        grid,
        seed,
        parity,
    };
    spec.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let out = run_quantum(&spec);
    let (mut series, mut hist) = stats_tables(&out.stats);
    for t in [&mut series, &mut hist] {
        t.comments.insert(
            0,
            format!(
                "quantum: K={} b={} A={} hbar_eff={} rho_l={rho_l} sigma_p={sigma_p} \
                 n_beta_samples={n_beta_samples} kicks={kicks} seed={seed} \
                 m_max={} n_phi={}",
                p.kick_strength,
                p.period_asymmetry,
                p.rocking_amplitude,
                p.hbar_eff,
                grid.m_max,
                grid.n_phi
            ),
        );
    }
    let series_path = out_dir.join("quantum_series.csv");
    let hist_path = out_dir.join("quantum_histogram.csv");
    series.write_csv(&series_path)?;
    hist.write_csv(&hist_path)?;

    let mut man = RunManifest::new(
        "quantum-run",
        seed,
        serde_json::json!({
            "k": p.kick_strength,
            "b": p.period_asymmetry,
            "a": p.rocking_amplitude,
            "hbar_eff": p.hbar_eff,
            "rho_l": rho_l,
            "sigma_p": sigma_p,
            "n_beta_samples": n_beta_samples,
            "kicks": kicks,
            "grid": grid,
            "antithetic": out.antithetic,
        }),
    );
    man.per_run_seeds = vec![seed];
    man.grid_events = out.grid_events;
    man.wall_ms = start.elapsed().as_millis();
    man.record_file(&series_path)?;
    man.record_file(&hist_path)?;
    let manifest_path = man.write_atomic(out_dir)?;
    if verbose > 0 {
        eprintln!("wrote {}", series_path.display());
        eprintln!("wrote {}", hist_path.display());
        eprintln!("wrote {}", manifest_path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_args_roundtrip_through_json() {
        let args = ParamArgs {
            k: Some(2.6),
            b: Some(0.0625),
            a: Some(-std::f64::consts::FRAC_PI_2),
            hbar: Some(1.0),
            rho_l: Some(25.132741228718345),
            lab: None,
            config: None,
        };
        let json = serde_json::to_string(&args).unwrap();
        let back: ParamArgs = serde_json::from_str(&json).unwrap();
        assert_eq!(args, back);
    }

    #[test]
    fn resolve_requires_k_or_lab() {
        let args = ParamArgs::default();
        assert!(matches!(args.resolve(), Err(Error::Invalid(_))));
    }

    #[test]
    fn invalid_b_names_invariant() {
        let args = ParamArgs {
            k: Some(2.6),
            b: Some(1.5),
            ..Default::default()
        };
        let err = args.resolve().unwrap_err();
        assert!(err.to_string().contains("0 <= b < 1"), "{err}");
    }

    #[test]
    fn help_lists_every_subcommand() {
        use clap::CommandFactory;
        let mut cmd = Cli::command();
        let help = cmd.render_long_help().to_string();
        for name in ["convert", "analytic", "classical", "quantum", "experiment"] {
            assert!(help.contains(name), "help missing {name}");
        }
    }

    #[test]
    fn exit_codes() {
        // validation error -> 1
        let code = run(["kicked-ratchet", "analytic", "--K", "2.6", "--b", "1.5"]);
        assert_eq!(code, 1);
        // unknown flag -> 1
        let code = run(["kicked-ratchet", "analytic", "--nope"]);
        assert_eq!(code, 1);
        // help -> 0
        let code = run(["kicked-ratchet", "--help"]);
        assert_eq!(code, 0);
    }
}
