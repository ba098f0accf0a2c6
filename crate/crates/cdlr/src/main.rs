use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use cdlr::config::{parse_algo, AlgoSpec, ExperimentConfig, OpponentSpec, DEFAULT_ITERATIONS};
use cdlr::demo::{coin_demo, gadget_sweep_demo};
use cdlr::harness::{check_rows, read_results, run_experiment, RunReport, GV_ITERATIONS};
use cdlr::opponents::make_opponent;
use cdlr::strategy_io;
use cdlr_core::games::GameId;
use cdlr_core::resolving::Scheme;
use cdlr_core::valuefn::VfKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cdlr", version, about = "Depth-limited continual resolving against opponent models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute one strategy against one opponent and measure it.
    Solve {
        #[arg(long)]
        game: GameId,
        /// br, lbr, cdbr, cdrnr, rnr or cdrnr_vf, either bare (completed from
        /// --p, --depth and --vf) or as a full spec such as cdrnr:0.5:by_round.
        #[arg(long)]
        algo: String,
        /// cfr:<iterations>, random:<seed> or file:<path>.
        #[arg(long)]
        opponent: OpponentSpec,
        #[arg(long)]
        p: Option<f64>,
        /// Lookahead in own public states; without it the game is cut by rounds.
        #[arg(long)]
        depth: Option<u32>,
        /// Value function for query-mode resolving: optimal, limited:<n> or
        /// noisy:<eps>:<seed>.
        #[arg(long)]
        vf: Option<VfKind>,
        /// CFR+ iterations per resolve step.
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iters: u32,
        /// Iteration cap of the game-value solve.
        #[arg(long, default_value_t = GV_ITERATIONS)]
        gv_iters: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every opponent and algorithm of a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Show how the resolving gadgets mis-value subgames under an opponent model.
    GadgetDemo {
        /// ce_coin or ce_gadget.
        #[arg(long)]
        game: GameId,
        /// Grid size of the ce_gadget sweep.
        #[arg(long, default_value_t = 1001)]
        points: usize,
        /// Directory for the sweep tables.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check the guarantees on the results of a run directory.
    CheckBounds {
        #[arg(long)]
        run: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { game, algo, opponent, p, depth, vf, iters, gv_iters, out } => {
            let algo = complete_algo(&algo, p, depth, vf)?;
            let config = ExperimentConfig {
                game,
                opponents: vec![opponent.clone()],
                algorithms: vec![algo],
                iterations: iters,
                gv_iterations: gv_iters,
                out: out.clone(),
            };
            let report = run_experiment(&config)?;
            let tree = game.build()?;
            if let Some(Some(s)) = report.strategies.first() {
                strategy_io::write(&out.join("strategy.txt"), &tree, s)?;
            }
            strategy_io::write(&out.join("opponent.txt"), &tree, &make_opponent(&tree, &opponent)?)?;
            Ok(summarize(&report))
        }
        Command::Sweep { config } => {
            let config = ExperimentConfig::load(&config)?;
            let report = run_experiment(&config)?;
            Ok(summarize(&report))
        }
        Command::GadgetDemo { game, points, out } => {
            let report = match game {
                GameId::CeCoin => coin_demo()?,
                GameId::CeGadget => {
                    if let Some(dir) = &out {
                        std::fs::create_dir_all(dir)?;
                    }
                    gadget_sweep_demo(points, out.as_deref())?
                }
                other => bail!("no gadget demo for {other}; use ce_coin or ce_gadget"),
            };
            print!("{}", report.text);
            Ok(report.ok)
        }
        Command::CheckBounds { run } => check_bounds(&run),
    }
}

/// Fills a bare algorithm name from the command-line options.
fn complete_algo(name: &str, p: Option<f64>, depth: Option<u32>, vf: Option<VfKind>) -> Result<AlgoSpec> {
    let scheme = depth.map_or(Scheme::ByRound, Scheme::ByOwnActions);
    let p = p.unwrap_or(0.5);
    let spec = match (name, vf) {
        ("cdbr", _) => format!("cdbr:{}", depth.map_or("by_round".to_string(), |d| d.to_string())),
        ("cdrnr", None) => format!("cdrnr:{p}:{scheme}"),
        ("cdrnr" | "cdrnr_vf", Some(kind)) => format!("cdrnr_vf:{kind}"),
        ("cdrnr_vf", None) => "cdrnr_vf:optimal".to_string(),
        ("rnr", _) => format!("rnr:{p}"),
        _ => name.to_string(),
    };
    let algo = parse_algo(&spec, p, scheme)?;
    if algo.p().is_some_and(|p| p >= 1.0) {
        bail!("{algo}: p must be below 1");
    }
    Ok(algo)
}

fn summarize(report: &RunReport) -> bool {
    println!("game value {:.9} (± {:.2e}, {} iterations)", report.game_value.value, report.game_value.error, report.game_value.iterations);
    for r in report.rows.iter().filter(|r| r.status != "avg") {
        match (r.gain, r.exploitability) {
            (Some(g), Some(e)) => println!("{:<12} {:<28} gain {g:>10.6}  exploitability {e:>10.6}", r.opponent, r.algorithm),
            _ => println!("{:<12} {:<28} {}", r.opponent, r.algorithm, r.status),
        }
    }
    for v in &report.violations {
        println!("violation: {v}");
    }
    report.violations.is_empty()
}

fn check_bounds(dir: &Path) -> Result<bool> {
    let rows = read_results(&dir.join("results.csv"))?;
    let violations = check_rows(&rows);
    let checked = rows.iter().filter(|r| r.status != "avg").count();
    for v in &violations {
        println!("violation: {v}");
    }
    println!("{checked} rows checked, {} violations", violations.len());
    Ok(violations.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_names_are_completed() {
        let id = |name, p, depth, vf| complete_algo(name, p, depth, vf).unwrap().to_string();
        assert_eq!(id("cdrnr", Some(0.25), Some(2), None), "cdrnr:0.25:2");
        assert_eq!(id("cdrnr", None, None, None), "cdrnr:0.5:by_round");
        assert_eq!(id("cdbr", None, Some(3), None), "cdbr:3");
        assert_eq!(id("rnr", Some(0.1), None, None), "rnr:0.1");
        assert_eq!(id("cdrnr", None, None, Some(VfKind::Limited(10))), "cdrnr_vf:limited:10");
        assert_eq!(id("cdrnr:0.9:whole_game", None, None, None), "cdrnr:0.9:whole_game");
        assert!(complete_algo("rnr", Some(1.0), None, None).is_err());
    }
}
