use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::bell::{self, BellScheme};
use crate::control::phase_schedule;
use crate::efficiency::{generation_rate, total_efficiency};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_eta, RNG_ALGORITHM};

use super::config::Config;
use super::fig3::{emit_fig3, write_file};
use super::sweep::{find_crossing, optimize, scheme_label, sweep};

#[derive(Debug, Parser)]
#[command(name = "muxphoton", version, about = "Time-multiplexed heralded single-photon source model")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Binary-delay loss as 10^(-α(N-r)) instead of the decibel form.
    #[arg(long, global = true)]
    pub strict_eq6: bool,
    /// Print machine-readable results.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Efficiency breakdown at one configuration.
    Eval,
    /// Efficiency over the configured sweep.
    Sweep,
    /// Frame size with the highest efficiency.
    Optimize,
    /// Switch transmission where both detection protocols tie.
    Crossing,
    /// Monte Carlo estimate next to the closed form.
    Mc,
    /// Bell-state success probabilities.
    Bell,
    /// Data for the efficiency figures.
    Fig3,
    /// Switch phase schedule for the configured frame.
    Schedule,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        cfg.trials = trials;
    }
    if cli.strict_eq6 {
        cfg.params.conventions.strict_eq6 = true;
    }
    Ok(cfg)
}

fn emit_json(out: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("results serialize");
    writeln!(out, "{text}").map_err(stdout_error)
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn write_or_print(out: &mut dyn Write, dir: Option<&Path>, name: &str, csv: &str) -> Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(name);
            write_file(&path, csv)?;
            writeln!(out, "wrote {}", path.display()).map_err(stdout_error)
        }
        None => out.write_all(csv.as_bytes()).map_err(stdout_error),
    }
}

/// Runs one command, writing human or JSON output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli)?;
    let (params, scheme) = (&cfg.params, &cfg.scheme);
    match cli.command {
        Command::Eval => {
            let b = total_efficiency(params, scheme)?;
            let rate = generation_rate(params, scheme);
            if cli.json {
                return emit_json(
                    out,
                    &json!({ "scheme": scheme, "params": params, "generation_rate_hz": rate, "breakdown": b }),
                );
            }
            let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(stdout_error);
            w(out, format!("scheme          {}", scheme_label(scheme)))?;
            w(out, format!("n_bins          {}", scheme.n_bins))?;
            w(out, format!("eta             {:.6}", b.eta_total))?;
            w(out, format!("eta_d           {:.6}", b.eta_d))?;
            w(out, format!("d0              {:.6}", b.d0))?;
            w(out, format!("rate_hz         {rate:.6e}"))?;
            w(out, "bin,pic,b_r".to_string())?;
            for (i, (pic, br)) in b.pic_transmission.iter().zip(&b.per_bin_success).enumerate() {
                w(out, format!("{},{pic:.9},{br:.9}", i + 1))?;
            }
            Ok(())
        }
        Command::Sweep => {
            let curve = sweep(&cfg.sweep_spec())?;
            if cli.json {
                return emit_json(out, &curve);
            }
            write_or_print(out, cli.out.as_deref(), "sweep.csv", &curve.to_csv())
        }
        Command::Optimize => {
            let best = optimize(params, scheme, cfg.n_min, cfg.n_max)?;
            if cli.json {
                return emit_json(out, &json!({ "scheme": scheme_label(scheme), "optimum": best }));
            }
            writeln!(out, "{} N* = {} eta_max = {:.6}", scheme_label(scheme), best.n_bins, best.eta_max)
                .map_err(stdout_error)
        }
        Command::Crossing => {
            let x = find_crossing(params, scheme, cfg.crossing_lo, cfg.crossing_hi, cfg.crossing_tol)?;
            if cli.json {
                return emit_json(out, &json!({ "eta_sw_crossing": x, "lo": cfg.crossing_lo, "hi": cfg.crossing_hi }));
            }
            writeln!(out, "eta_sw crossing = {x:.6}").map_err(stdout_error)
        }
        Command::Mc => {
            let analytic = total_efficiency(params, scheme)?;
            let est = estimate_eta(params, scheme, cfg.trials, cfg.seed)?;
            let z = if est.std_err > 0.0 {
                (est.eta_hat - analytic.eta_total) / est.std_err
            } else {
                0.0
            };
            let mut csv = String::from("bin,single_count,fraction,analytic\n");
            for (i, (&c, a)) in est.per_bin_hist.iter().zip(&analytic.per_bin_success).enumerate() {
                csv.push_str(&format!("{},{c},{:.9},{a:.9}\n", i + 1, c as f64 / est.n_trials as f64));
            }
            if cli.json {
                return emit_json(out, &json!({ "analytic": analytic.eta_total, "estimate": est, "z": z }));
            }
            writeln!(
                out,
                "eta_hat = {:.6} ± {:.6} (analytic {:.6}, z = {z:.2}, {} trials, {} seed {})",
                est.eta_hat, est.std_err, analytic.eta_total, est.n_trials, RNG_ALGORITHM, est.seed
            )
            .map_err(stdout_error)?;
            if let Some(dir) = cli.out.as_deref() {
                write_or_print(out, Some(dir), "mc.csv", &csv)?;
            }
            Ok(())
        }
        Command::Bell => {
            let hbs = bell::hbs_herald_probability()?;
            let two = bell::two_source_probability()?;
            let eta = total_efficiency(params, scheme)?.eta_total;
            let hbs4 = bell::composed_success(eta, BellScheme::Hbs4)?;
            let ps2 = bell::composed_success(eta, BellScheme::PostSelected2)?;
            if cli.json {
                return emit_json(
                    out,
                    &json!({
                        "four_source": hbs,
                        "two_source": two,
                        "eta": eta,
                        "composed": { "hbs4": hbs4, "post_selected2": ps2 },
                    }),
                );
            }
            let frac = bell::to_rational(hbs.success_probability, 1 << 20)?;
            let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(stdout_error);
            w(out, format!("four-source herald probability {:.12} ({frac})", hbs.success_probability))?;
            for o in &hbs.outcomes {
                w(out, format!("  pattern {:?} p = {:.12} state {} fidelity {:.12}", o.pattern, o.probability, o.bell_state, o.fidelity))?;
            }
            w(out, format!("two-source coincidence {:.12} singlet fidelity {:.12}", two.coincidence, two.singlet_fidelity))?;
            w(out, format!("eta = {eta:.6}: hbs4 {hbs4:.6}, post-selected {ps2:.6}"))
        }
        Command::Fig3 => {
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let paths = emit_fig3(params, cfg.seed, &dir)?;
            if cli.json {
                return emit_json(out, &json!({ "files": paths }));
            }
            for p in paths {
                writeln!(out, "wrote {}", p.display()).map_err(stdout_error)?;
            }
            Ok(())
        }
        Command::Schedule => {
            let s = phase_schedule(scheme.n_bins)?;
            if cli.json {
                return emit_json(out, &json!({ "n_bins": s.n_bins(), "phases": s.rows().collect::<Vec<_>>() }));
            }
            write_or_print(out, cli.out.as_deref(), "schedule.csv", &s.to_csv())
        }
    }
}
