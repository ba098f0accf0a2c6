//! Experiment driver: game values, per-cell measurements, invariant checks and the
//! run directory layout.
//!
//! A run directory holds `results.csv` (one row per opponent and algorithm plus an
//! average row per algorithm), `diagnostics.csv` (one row per resolve step),
//! `timings.csv` (wall time per cell), `iterations.csv` (the game-value solve),
//! `results.dat` (gnuplot blocks, one per algorithm) and `manifest.json`. Only
//! the two timing columns depend on the machine; every other file is identical
//! across reruns of the same config.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cdlr_core::cfr::{scope_nash_conv, solve, CfrConfig, LogRow, Problem};
use cdlr_core::efg::best_response;
use cdlr_core::games::GameId;
use cdlr_core::lbr::lbr_strategy;
use cdlr_core::resolving::{
    cdbr, cdrnr, make_rnr, monotone_gain_slack, theorem2_bound, Evaluation, LeaveTerm, ResolveConfig, ResolveMode,
    StepDiagnostics, StepSolver, Theorem2Form, TheoremBounds,
};
use cdlr_core::valuefn::SolvingValueFunction;
use cdlr_core::{BehavioralStrategy, GameTree, Player};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AlgoSpec, ExperimentConfig, OpponentSpec};
use crate::opponents::make_opponent;

/// Exploitability the game value is solved to.
pub const GV_TOLERANCE: f64 = 1e-6;

/// Iteration cap of the game-value solve.
pub const GV_ITERATIONS: u32 = 200_000;

/// Target of each CFR+ resolve step, relative to the utility range.
pub const STEP_TARGET: f64 = 1e-5;

/// Float slack of the invariant checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// Seconds since the first call, for step timings.
pub fn clock() -> f64 {
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

/// Equilibrium value of a game, bracketed by a CFR+ solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameValue {
    /// Midpoint of the bracket.
    pub value: f64,
    /// Half-width of the bracket; the true value is within this distance.
    pub error: f64,
    pub iterations: u32,
}

/// Solves `tree` with CFR+ until the average profile's exploitability is at most
/// `tolerance` or `max_iterations` run out.
///
/// The average `Max` strategy guarantees the lower end of the bracket and the
/// average `Min` strategy the upper end.
pub fn game_value(tree: &GameTree, tolerance: f64, max_iterations: u32) -> Result<(GameValue, Vec<LogRow>)> {
    let config = CfrConfig::iterations(max_iterations).with_target(tolerance, 100).with_log(1000);
    let r = solve(&Problem::full(tree), None, &config)?;
    let (_, hi) = best_response(tree, &r.average.min, Player::Max);
    let (_, min_value) = best_response(tree, &r.average.max, Player::Min);
    let lo = -min_value;
    let gv = GameValue { value: 0.5 * (lo + hi), error: 0.5 * (hi - lo).max(0.0), iterations: r.iterations };
    Ok((gv, r.log))
}

/// Everything measured for one algorithm against one model.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub strategy: BehavioralStrategy,
    pub evaluation: Evaluation,
    pub gain: f64,
    pub exploitability: f64,
    /// Allowed shortfall of the gain below zero, including the game-value error.
    /// `None` where no guarantee applies.
    pub error_budget: Option<f64>,
    /// Upper bound on the exploitability; infinite without a fixed-model mix.
    pub theorem2_bound: f64,
    pub steps: Vec<StepDiagnostics>,
    pub wall_time_s: f64,
}

/// Computes the strategy of `algo` against `model` and measures it exactly.
///
/// `iterations` caps the CFR+ iterations of each resolve step and of whole-game
/// restricted Nash response solves.
pub fn measure(
    tree: &GameTree,
    gv: &GameValue,
    model: &BehavioralStrategy,
    algo: &AlgoSpec,
    iterations: u32,
) -> Result<Measurement> {
    let t0 = Instant::now();
    let solver = StepSolver::Cfr { iterations, target: Some(STEP_TARGET) };
    let resolve = |scheme| ResolveConfig::new(scheme).with_solver(solver).with_clock(clock);
    // Budgets come without the game-value error, which is added below.
    let (strategy, budget, bound, steps): (BehavioralStrategy, Option<f64>, Option<(TheoremBounds, f64)>, Vec<StepDiagnostics>) =
        match algo {
            AlgoSpec::Br => (best_response(tree, model, Player::Max).0, Some(0.0), None, Vec::new()),
            AlgoSpec::Lbr => (lbr_strategy(tree, model)?, None, None, Vec::new()),
            AlgoSpec::Cdbr(scheme) => {
                let run = cdbr(tree, model, &resolve(*scheme), None)?;
                let b = TheoremBounds::from_run(&run, 1.0);
                (run.strategy, Some(b.error_budget(LeaveTerm::Scaled)), None, run.steps)
            }
            AlgoSpec::Cdrnr { p, scheme } => {
                let run = cdrnr(tree, model, *p, &resolve(*scheme), None)?;
                let b = TheoremBounds::from_run(&run, *p);
                (run.strategy, Some(b.error_budget(LeaveTerm::Scaled)), Some((b, *p)), run.steps)
            }
            AlgoSpec::CdrnrVf { kind, p, scheme } => {
                let mut vf = SolvingValueFunction::new(*kind);
                let config = resolve(*scheme).with_mode(ResolveMode::Query);
                let run = cdrnr(tree, model, *p, &config, Some(&mut vf))?;
                let b = TheoremBounds::from_run(&run, *p);
                (run.strategy, Some(b.error_budget(LeaveTerm::Scaled)), Some((b, *p)), run.steps)
            }
            AlgoSpec::Rnr(p) => {
                let rnr = make_rnr(tree, model, *p)?;
                let problem = rnr.problem();
                let (lo, hi) = rnr.tree.utility_range();
                let config = CfrConfig::iterations(iterations).with_target(STEP_TARGET * (hi - lo), 100);
                let r = solve(&problem, None, &config)?;
                let delta = scope_nash_conv(&problem, &r.average, None);
                // A whole-game solve is a single resolve step with regret `delta`.
                let b = TheoremBounds { eps_r: delta, steps: 1, p: *p, ..TheoremBounds::default() };
                (rnr.max_to_base(&r.average.max, tree), Some(delta), Some((b, *p)), Vec::new())
            }
        };
    let evaluation = Evaluation::of(tree, &strategy, model);
    let gain = evaluation.gain(gv.value);
    let exploitability = evaluation.exploitability(gv.value);
    let error_budget = budget.map(|b| b + gv.error);
    let theorem2 = match bound {
        Some((b, p)) if p < 1.0 => {
            theorem2_bound(&b, Theorem2Form::Derived, LeaveTerm::Scaled, gain)? + gv.error / (1.0 - p)
        }
        _ => f64::INFINITY,
    };
    Ok(Measurement {
        strategy,
        evaluation,
        gain,
        exploitability,
        error_budget,
        theorem2_bound: theorem2,
        steps,
        wall_time_s: t0.elapsed().as_secs_f64(),
    })
}

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub game: String,
    /// Opponent spec, or `avg` for the per-algorithm average.
    pub opponent: String,
    pub algorithm: String,
    pub p: Option<f64>,
    pub depth: Option<u32>,
    pub gain: Option<f64>,
    pub exploitability: Option<f64>,
    pub theorem2_bound: Option<f64>,
    pub error_budget: Option<f64>,
    pub seed: Option<u64>,
    /// `ok`, `avg`, or `error: <message>`.
    pub status: String,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Clone, Debug, Serialize)]
struct DiagnosticsRow<'a> {
    game: &'a str,
    opponent: &'a str,
    algorithm: &'a str,
    step: usize,
    piece: usize,
    start: &'a str,
    solved_nodes: usize,
    border_infosets: usize,
    leave_infosets: usize,
    eps_r: f64,
    iterations: u32,
    wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
struct TimingRow<'a> {
    game: &'a str,
    opponent: &'a str,
    algorithm: &'a str,
    wall_time_s: f64,
}

/// Contents of `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub game: String,
    pub gv_tolerance: f64,
    pub gv_max_iterations: u32,
    pub game_value: GameValue,
    pub opponents: Vec<String>,
    pub algorithms: Vec<String>,
    pub iterations: u32,
}

/// Outcome of one experiment.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub game_value: GameValue,
    /// Per-algorithm rows, then one average row per algorithm.
    pub rows: Vec<ResultRow>,
    /// The computed strategy of each cell, in the order of the leading rows.
    pub strategies: Vec<Option<BehavioralStrategy>>,
    pub violations: Vec<String>,
}

/// Game value for a run directory: reused from an existing manifest of the same
/// game and solve settings, otherwise solved and its iteration log written.
pub fn cached_game_value(dir: &Path, game: GameId, tree: &GameTree, max_iterations: u32) -> Result<GameValue> {
    let path = dir.join("manifest.json");
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(m) = serde_json::from_str::<Manifest>(&text) {
            if m.game == game.to_string() && m.gv_tolerance == GV_TOLERANCE && m.gv_max_iterations == max_iterations {
                return Ok(m.game_value);
            }
        }
    }
    let (gv, log) = game_value(tree, GV_TOLERANCE, max_iterations)?;
    let mut w = csv::Writer::from_path(dir.join("iterations.csv"))?;
    w.write_record(["iter", "expl_estimate", "best_iterate_utility"])?;
    for row in log {
        w.write_record([row.iter.to_string(), row.expl_estimate.to_string(), row.best_iterate_utility.to_string()])?;
    }
    w.flush()?;
    Ok(gv)
}

/// Runs every (opponent, algorithm) cell of `config` and writes the run directory.
///
/// Cells run in parallel; rows come out in config order. Failing cells become
/// error rows and the run goes on.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let gv_iterations = config.gv_iterations;
    fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
    let tree = config.game.build()?;
    let game = config.game.to_string();
    let gv = cached_game_value(&config.out, config.game, &tree, gv_iterations)?;
    let models: Vec<Result<BehavioralStrategy>> =
        config.opponents.par_iter().map(|o| make_opponent(&tree, o)).collect();
    let cells: Vec<(usize, usize)> =
        (0..config.opponents.len()).flat_map(|o| (0..config.algorithms.len()).map(move |a| (o, a))).collect();
    let results: Vec<Result<Measurement>> = cells
        .par_iter()
        .map(|&(o, a)| match &models[o] {
            Ok(model) => measure(&tree, &gv, model, &config.algorithms[a], config.iterations),
            Err(e) => bail!("opponent: {e:#}"),
        })
        .collect();

    let mut rows = Vec::new();
    let mut diagnostics = csv::Writer::from_path(config.out.join("diagnostics.csv"))?;
    let mut timings = csv::Writer::from_path(config.out.join("timings.csv"))?;
    for (&(o, a), result) in cells.iter().zip(&results) {
        let opponent = config.opponents[o].to_string();
        let algo = &config.algorithms[a];
        let algorithm = algo.to_string();
        rows.push(result_row(&game, &config.opponents[o], algo, result));
        if let Ok(m) = result {
            for s in &m.steps {
                diagnostics.serialize(DiagnosticsRow {
                    game: &game,
                    opponent: &opponent,
                    algorithm: &algorithm,
                    step: s.step,
                    piece: s.piece,
                    start: &s.start,
                    solved_nodes: s.solved_nodes,
                    border_infosets: s.border_infosets,
                    leave_infosets: s.leave_infosets,
                    eps_r: s.eps_r,
                    iterations: s.iterations,
                    wall_time_s: s.wall_time_s,
                })?;
            }
            timings.serialize(TimingRow { game: &game, opponent: &opponent, algorithm: &algorithm, wall_time_s: m.wall_time_s })?;
        }
    }
    diagnostics.flush()?;
    timings.flush()?;
    for algo in &config.algorithms {
        rows.push(average_row(&game, algo, &rows));
    }
    write_results(&config.out.join("results.csv"), &rows)?;
    fs::write(config.out.join("results.dat"), plot_data(&rows))?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        game,
        gv_tolerance: GV_TOLERANCE,
        gv_max_iterations: gv_iterations,
        game_value: gv.clone(),
        opponents: config.opponents.iter().map(|o| o.to_string()).collect(),
        algorithms: config.algorithms.iter().map(|a| a.to_string()).collect(),
        iterations: config.iterations,
    };
    fs::write(config.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let violations = check_rows(&rows);
    let strategies = results.into_iter().map(|r| r.ok().map(|m| m.strategy)).collect();
    Ok(RunReport { game_value: gv, rows, strategies, violations })
}

fn result_row(game: &str, opponent: &OpponentSpec, algo: &AlgoSpec, result: &Result<Measurement>) -> ResultRow {
    let mut row = ResultRow {
        game: game.to_string(),
        opponent: opponent.to_string(),
        algorithm: algo.to_string(),
        p: algo.p(),
        depth: algo.depth(),
        gain: None,
        exploitability: None,
        theorem2_bound: None,
        error_budget: None,
        seed: Some(opponent.seed()),
        status: "ok".to_string(),
    };
    match result {
        Ok(m) => {
            row.gain = Some(m.gain);
            row.exploitability = Some(m.exploitability);
            row.theorem2_bound = Some(m.theorem2_bound);
            row.error_budget = m.error_budget;
        }
        Err(e) => row.status = format!("error: {e:#}"),
    }
    row
}

fn average_row(game: &str, algo: &AlgoSpec, rows: &[ResultRow]) -> ResultRow {
    let id = algo.to_string();
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.algorithm == id && r.is_ok()).collect();
    let mean = |f: fn(&ResultRow) -> Option<f64>| {
        (!ok.is_empty()).then(|| ok.iter().filter_map(|r| f(r)).sum::<f64>() / ok.len() as f64)
    };
    ResultRow {
        game: game.to_string(),
        opponent: "avg".to_string(),
        algorithm: id,
        p: algo.p(),
        depth: algo.depth(),
        gain: mean(|r| r.gain),
        exploitability: mean(|r| r.exploitability),
        theorem2_bound: None,
        error_budget: None,
        seed: None,
        status: "avg".to_string(),
    }
}

pub fn write_results(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(r.deserialize().collect::<csv::Result<Vec<ResultRow>>>()?)
}

/// Gnuplot data: one block per algorithm holding `index opponent gain
/// exploitability` lines, blocks separated by two blank lines so that `index n`
/// selects algorithm `n`.
pub fn plot_data(rows: &[ResultRow]) -> String {
    let mut algos: Vec<&str> = Vec::new();
    for r in rows {
        if !algos.contains(&r.algorithm.as_str()) {
            algos.push(&r.algorithm);
        }
    }
    let mut out = String::new();
    for (k, algo) in algos.iter().enumerate() {
        if k > 0 {
            out.push_str("\n\n");
        }
        writeln!(out, "# {algo}").unwrap();
        writeln!(out, "# index opponent gain exploitability").unwrap();
        let ok = rows.iter().filter(|r| r.algorithm == *algo && r.is_ok());
        for (i, r) in ok.enumerate() {
            writeln!(out, "{i} {} {} {}", r.opponent, r.gain.unwrap_or(f64::NAN), r.exploitability.unwrap_or(f64::NAN))
                .unwrap();
        }
    }
    out
}

/// Checks the guarantees on every row and returns one message per violation.
///
/// Error rows fail. Rows with a budget must have gain at least minus the budget,
/// and exploitability at most the Theorem 2 bound. For each opponent, whole-game
/// restricted Nash response gains must not decrease in `p` beyond the slack of the
/// two solves.
pub fn check_rows(rows: &[ResultRow]) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows.iter().filter(|r| r.status != "avg") {
        let cell = format!("{} vs {}", r.algorithm, r.opponent);
        if !r.is_ok() {
            out.push(format!("{cell}: {}", r.status));
            continue;
        }
        let (Some(gain), Some(expl)) = (r.gain, r.exploitability) else {
            out.push(format!("{cell}: missing measurements"));
            continue;
        };
        if !gain.is_finite() || !expl.is_finite() {
            out.push(format!("{cell}: non-finite gain {gain} or exploitability {expl}"));
            continue;
        }
        if let Some(budget) = r.error_budget {
            if gain < -budget - CHECK_TOLERANCE {
                out.push(format!("{cell}: gain {gain:.3e} below the guaranteed {:.3e}", -budget));
            }
        }
        if let Some(bound) = r.theorem2_bound {
            if expl > bound + CHECK_TOLERANCE {
                out.push(format!("{cell}: exploitability {expl:.3e} above the bound {bound:.3e}"));
            }
        }
    }
    let rnr: Vec<&ResultRow> =
        rows.iter().filter(|r| r.is_ok() && r.algorithm.starts_with("rnr:")).collect();
    let mut opponents: Vec<&str> = rnr.iter().map(|r| r.opponent.as_str()).collect();
    opponents.dedup();
    for opp in opponents {
        let mut series: Vec<(f64, f64, f64)> = rnr
            .iter()
            .filter(|r| r.opponent == opp)
            .filter_map(|r| Some((r.p?, r.gain?, r.error_budget?)))
            .collect();
        series.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in series.windows(2) {
            let ((p1, g1, d1), (p2, g2, d2)) = (w[0], w[1]);
            if g2 < g1 - monotone_gain_slack(p1, d1, p2, d2) {
                out.push(format!("rnr vs {opp}: gain drops from {g1:.6} at p={p1} to {g2:.6} at p={p2}"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opponents::gen_opponent_cfr;
    use cdlr_core::games::build_kuhn;
    use cdlr_core::resolving::Scheme;

    fn kuhn_value() -> (GameTree, GameValue) {
        let t = build_kuhn();
        let (gv, _) = game_value(&t, GV_TOLERANCE, 1_000_000).unwrap();
        (t, gv)
    }

    #[test]
    fn kuhn_game_value_brackets_minus_one_eighteenth() {
        let (_, gv) = kuhn_value();
        assert!(2.0 * gv.error <= GV_TOLERANCE, "{gv:?}");
        assert!((gv.value + 1.0 / 18.0).abs() <= gv.error + 1e-12, "{gv:?}");
    }

    #[test]
    fn measurements_satisfy_their_bounds() {
        let (t, gv) = kuhn_value();
        let model = gen_opponent_cfr(&t, 5).unwrap();
        let algos = [
            AlgoSpec::Br,
            AlgoSpec::Lbr,
            AlgoSpec::Cdbr(Scheme::ByRound),
            AlgoSpec::Cdrnr { p: 0.5, scheme: Scheme::ByRound },
            AlgoSpec::Rnr(0.5),
        ];
        let mut rows = Vec::new();
        for algo in &algos {
            let m = measure(&t, &gv, &model, algo, 2000);
            rows.push(result_row("kuhn", &OpponentSpec::Cfr(5), algo, &m));
        }
        assert!(check_rows(&rows).is_empty(), "{:?}", check_rows(&rows));
        let br = rows[0].exploitability.unwrap();
        assert!(rows.iter().all(|r| r.exploitability.unwrap() <= br + 1e-9));
        let g = |i: usize| rows[i].gain.unwrap();
        assert!(g(0) >= g(1) - 1e-12 && g(0) >= g(2) - 1e-6);
    }

    #[test]
    fn violations_are_reported() {
        let row = ResultRow {
            game: "kuhn".into(),
            opponent: "cfr:5".into(),
            algorithm: "cdrnr:0.5:by_round".into(),
            p: Some(0.5),
            depth: None,
            gain: Some(-0.1),
            exploitability: Some(0.3),
            theorem2_bound: Some(0.2),
            error_budget: Some(0.01),
            seed: Some(0),
            status: "ok".into(),
        };
        assert_eq!(check_rows(std::slice::from_ref(&row)).len(), 2);
        let err = ResultRow { status: "error: boom".into(), ..row.clone() };
        assert_eq!(check_rows(&[err]).len(), 1);
        let lo = ResultRow { algorithm: "rnr:0.1".into(), p: Some(0.1), gain: Some(0.5), exploitability: Some(0.0), theorem2_bound: None, error_budget: Some(0.0), ..row.clone() };
        let hi = ResultRow { algorithm: "rnr:0.9".into(), p: Some(0.9), gain: Some(0.4), ..lo.clone() };
        assert_eq!(check_rows(&[lo, hi]).len(), 1);
    }

    #[test]
    fn plot_blocks_are_separated() {
        let row = |algo: &str| ResultRow {
            game: "kuhn".into(),
            opponent: "cfr:5".into(),
            algorithm: algo.into(),
            p: None,
            depth: None,
            gain: Some(0.5),
            exploitability: Some(0.25),
            theorem2_bound: None,
            error_budget: None,
            seed: Some(0),
            status: "ok".into(),
        };
        let text = plot_data(&[row("br"), row("lbr")]);
        assert_eq!(text.split("\n\n\n").count(), 2);
        assert!(text.contains("0 cfr:5 0.5 0.25"));
    }
}
