//! End-to-end acceptance run: one line per criterion.
//!
//! This target has its own `main`, so every criterion runs even when an earlier
//! one fails. Criteria whose outcome is known to disagree with the claim they
//! check are marked as expected failures; they print `FAIL (expected)` with the
//! measured numbers and do not fail the run. Anything else failing does.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use cdlr::config::{AlgoSpec, ExperimentConfig, OpponentSpec, CFR_LADDER, DEFAULT_ITERATIONS, P_GRID};
use cdlr::demo::{gadget_sweep_demo, SWITCH_PROBES};
use cdlr::harness::{check_rows, measure, run_experiment, ResultRow, RunReport};
use cdlr::opponents::make_opponent;
use cdlr_core::cfr::{best_iterate_trunk_br, lemma1_bound, solve_game, trunk_br_oracle, CfrConfig, Problem};
use cdlr_core::efg::{best_response, expected_utility, nash_conv, rationalize};
use cdlr_core::gadgets::{coin_setup, GadgetKind};
use cdlr_core::games::{self, round_letter, GameId};
use cdlr_core::resolving::{
    balance_grid_search, cdbr, cdrnr, make_rnr, reach_balance_check, rnr_full, Evaluation, ResolveConfig, Scheme,
    StepSolver,
};
use cdlr_core::{BehavioralStrategy, GameTree, Player, StrategyProfile};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Experiment runs shared by the Theorem 1 and Theorem 2 criteria and the LBR
/// comparison.
struct Sweeps {
    leduc: RunReport,
    liars_dice: RunReport,
    goofspiel: RunReport,
}

impl Sweeps {
    fn rows(&self) -> impl Iterator<Item = &ResultRow> {
        [&self.leduc, &self.liars_dice, &self.goofspiel]
            .into_iter()
            .flat_map(|r| r.rows.iter())
            .filter(|r| r.status != "avg")
    }
}

fn opponents(random_seeds: &[u64]) -> Vec<OpponentSpec> {
    let mut out: Vec<OpponentSpec> = CFR_LADDER.iter().map(|&n| OpponentSpec::Cfr(n)).collect();
    out.extend(random_seeds.iter().map(|&s| OpponentSpec::Random(s)));
    out
}

fn cdrnr_grid(scheme: Scheme) -> Vec<AlgoSpec> {
    P_GRID.iter().map(|&p| AlgoSpec::Cdrnr { p, scheme }).collect()
}

fn run_sweeps(dir: &Path) -> Result<Sweeps> {
    let mut leduc_algos = cdrnr_grid(Scheme::ByRound);
    leduc_algos.extend([AlgoSpec::Cdbr(Scheme::ByRound), AlgoSpec::Lbr]);
    let leduc = run_experiment(&ExperimentConfig {
        game: GameId::Leduc,
        opponents: opponents(&[1, 2]),
        algorithms: leduc_algos,
        iterations: DEFAULT_ITERATIONS,
        gv_iterations: 200_000,
        out: dir.join("leduc"),
    })?;
    let liars_dice = run_experiment(&ExperimentConfig {
        game: GameId::LiarsDice,
        opponents: opponents(&[1, 2]),
        algorithms: cdrnr_grid(Scheme::ByRound),
        iterations: DEFAULT_ITERATIONS,
        gv_iterations: 200_000,
        out: dir.join("liars_dice"),
    })?;
    // Goofspiel is solved whole and with fewer iterations to stay within the
    // time budget; the looser game value and step regret go into the budgets.
    let goofspiel = run_experiment(&ExperimentConfig {
        game: GameId::Goofspiel5,
        opponents: vec![OpponentSpec::Cfr(10), OpponentSpec::Random(1)],
        algorithms: cdrnr_grid(Scheme::WholeGame),
        iterations: 1000,
        gv_iterations: 20_000,
        out: dir.join("goofspiel5"),
    })?;
    Ok(Sweeps { leduc, liars_dice, goofspiel })
}

fn criterion1() -> Result<Outcome> {
    let t0 = Instant::now();
    let c = coin_setup()?;
    let want = [
        (GadgetKind::Resolving, false, -3.5),
        (GadgetKind::MaxMargin, false, -2.0),
        (GadgetKind::Resolving, true, -1.75),
        (GadgetKind::MaxMargin, true, -4.0),
    ];
    let mut pass = true;
    let mut got = Vec::new();
    for (kind, normalized, v) in want {
        let x = c.deviation_value(kind, normalized)?;
        pass &= x == rationalize(v);
        got.push(x.to_string());
    }
    let kept = c.definition1(None)?;
    pass &= kept.reference == rationalize(-3.0) && kept.estimate == kept.reference;
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < 1.0;
    Ok(Outcome::new(
        pass,
        format!("resolving {}, max_margin {}, normalized {} and {}, trunk kept {} ({secs:.2} s)", got[0], got[1], got[2], got[3], kept.reference),
    ))
}

fn criterion2() -> Result<Outcome> {
    let t0 = Instant::now();
    let r = gadget_sweep_demo(1001, None)?;
    let secs = t0.elapsed().as_secs_f64();
    let probes: Vec<String> = SWITCH_PROBES.iter().map(|(p, a)| format!("{p}:{a}")).collect();
    Ok(Outcome::new(
        r.ok && secs < 60.0,
        format!("trunk kept {} and no pure c from either gadget over 1001 points ({secs:.1} s)", probes.join(" ")),
    ))
}

fn criterion3() -> Result<Outcome> {
    let t = games::build_ce_mp();
    let model = games::ce_mp_model(&t);
    let exact = |scheme| ResolveConfig::new(scheme).with_solver(StepSolver::Exact);
    let root = t.infoset_by_key(Player::Max, "root").context("root infoset")?;
    let cut = cdbr(&t, &model, &exact(Scheme::ByOwnActions(1)), None)?;
    let cut_value = cut.evaluate(&t, &model).model_utility;
    let whole = cdbr(&t, &model, &exact(Scheme::WholeGame), None)?;
    let whole_value = whole.evaluate(&t, &model).model_utility;
    let (ne, _) = solve_game(&t, 1e-9, 1_000_000)?;
    let ne_value = expected_utility(&t, &StrategyProfile::new(ne.max, model.clone()));
    let pass = cut.strategy.prob(root, 0) == 1.0
        && (cut_value - 2.0 / 3.0).abs() <= 1e-9
        && whole.strategy.prob(root, 1) == 1.0
        && (whole_value - 10.0 / 3.0).abs() <= 1e-9
        && (ne_value - 2.0).abs() <= 1e-3;
    Ok(Outcome::new(
        pass,
        format!(
            "cut: H {:.3} value {cut_value:.12}; whole game: T {:.3} value {whole_value:.12}; NE vs model {ne_value:.6}",
            cut.strategy.prob(root, 0),
            whole.strategy.prob(root, 1)
        ),
    ))
}

fn criterion4(s: &Sweeps, secs: f64) -> Outcome {
    let rows: Vec<&ResultRow> = s.rows().filter(|r| r.algorithm.starts_with("cdrnr")).collect();
    let mut violations = Vec::new();
    for r in &rows {
        match (r.exploitability, r.theorem2_bound) {
            (Some(e), Some(b)) if e <= b + 1e-9 => {}
            _ => violations.push(format!("{} {} {}", r.game, r.opponent, r.algorithm)),
        }
    }
    let half: Vec<&ResultRow> =
        s.leduc.rows.iter().filter(|r| r.status == "ok" && r.algorithm.starts_with("cdrnr") && r.p == Some(0.5)).collect();
    let mut ratios: Vec<f64> =
        half.iter().filter_map(|r| Some(r.exploitability? / r.gain?)).filter(|x| x.is_finite()).collect();
    ratios.sort_by(f64::total_cmp);
    let median = if ratios.is_empty() { f64::NAN } else { ratios[ratios.len() / 2] };
    let below_gain = half.iter().filter(|r| r.exploitability <= r.gain).count();
    let below_tenth = half.iter().filter(|r| r.exploitability.zip(r.gain).is_some_and(|(e, g)| e < g / 10.0)).count();
    let pass = rows.len() >= 100 && violations.is_empty() && median < 0.5 && secs < 1800.0;
    Outcome::new(
        pass,
        format!(
            "{} runs, {} over the bound{}; leduc p=0.5: {below_gain}/{} with exploitability <= gain, {below_tenth} below a tenth, median ratio {median:.3} ({secs:.0} s)",
            rows.len(),
            violations.len(),
            if violations.is_empty() { String::new() } else { format!(" ({})", violations.join(", ")) },
            half.len()
        ),
    )
}

fn criterion5(s: &Sweeps) -> Outcome {
    let mut over_budget = Vec::new();
    let mut worst_converged = f64::INFINITY;
    for r in s.rows().filter(|r| r.algorithm.starts_with("cdrnr") || r.algorithm.starts_with("cdbr")) {
        let (Some(g), Some(b)) = (r.gain, r.error_budget) else {
            over_budget.push(format!("{} {} {}: {}", r.game, r.opponent, r.algorithm, r.status));
            continue;
        };
        if g < -b - 1e-9 {
            over_budget.push(format!("{} {} {}", r.game, r.opponent, r.algorithm));
        }
        if r.game != "goofspiel5" {
            worst_converged = worst_converged.min(g);
        }
    }
    Outcome::new(
        over_budget.is_empty() && worst_converged >= -1e-3,
        format!(
            "{} runs below -budget; smallest gain of the converged leduc and liars_dice runs {worst_converged:.3e}",
            over_budget.len()
        ),
    )
}

fn eval_gain_expl(tree: &GameTree, s: &BehavioralStrategy, model: &BehavioralStrategy, gv: f64) -> (f64, f64) {
    let e = Evaluation::of(tree, s, model);
    (e.gain(gv), e.exploitability(gv))
}

fn criterion6(s: &Sweeps) -> Result<Outcome> {
    let t = games::build_liars_dice();
    let gv = s.liars_dice.game_value.value;
    let iterations = 2000;
    let config = ResolveConfig::new(Scheme::WholeGame).with_solver(StepSolver::Cfr { iterations, target: None });
    let mut worst: f64 = 0.0;
    for spec in [OpponentSpec::Cfr(10), OpponentSpec::Random(1)] {
        let model = make_opponent(&t, &spec)?;
        for p in P_GRID {
            let a = cdrnr(&t, &model, p, &config, None)?;
            let b = rnr_full(&t, &model, p, &CfrConfig::iterations(iterations))?;
            let (ga, ea) = eval_gain_expl(&t, &a.strategy, &model, gv);
            let (gb, eb) = eval_gain_expl(&t, &b.strategy, &model, gv);
            worst = worst.max((ga - gb).abs()).max((ea - eb).abs());
        }
    }
    Ok(Outcome::new(worst <= 1e-4, format!("largest gain or exploitability difference {worst:.3e} over 2 opponents x 5 p")))
}

fn criterion7(s: &Sweeps) -> Result<Outcome> {
    let t = games::build_leduc();
    let gv = &s.leduc.game_value;
    let model = make_opponent(&t, &OpponentSpec::Cfr(34))?;
    let zero = measure(&t, gv, &model, &AlgoSpec::Cdrnr { p: 0.0, scheme: Scheme::ByRound }, DEFAULT_ITERATIONS)?;
    // The default step target leaves both gains a few 1e-4 from converged, so
    // this comparison uses a tighter one.
    let tight = ResolveConfig::new(Scheme::ByRound).with_solver(StepSolver::Cfr { iterations: 20_000, target: Some(1e-6) });
    let one = cdrnr(&t, &model, 1.0 - 1e-9, &tight, None)?;
    let br = cdbr(&t, &model, &tight, None)?;
    let (one_gain, _) = eval_gain_expl(&t, &one.strategy, &model, gv.value);
    let (br_gain, _) = eval_gain_expl(&t, &br.strategy, &model, gv.value);
    let diff = (one_gain - br_gain).abs();
    Ok(Outcome::new(
        zero.exploitability <= 1e-2 && diff <= 1e-4,
        format!(
            "p=0 exploitability {:.3e}; p=1-1e-9 gain {:.6} vs cdbr {:.6} (difference {diff:.2e})",
            zero.exploitability, one_gain, br_gain
        ),
    ))
}

fn criterion8() -> Result<Outcome> {
    let kuhn = games::build_kuhn();
    let mut cases: Vec<(String, GameTree, BehavioralStrategy)> = Vec::new();
    cases.push(("kuhn uniform".into(), kuhn.clone(), BehavioralStrategy::uniform(&kuhn, Player::Min)));
    let cfr5 = make_opponent(&kuhn, &OpponentSpec::Cfr(5))?;
    cases.push(("kuhn cfr:5".into(), kuhn, cfr5));
    let mp = games::build_ce_mp();
    let m = games::ce_mp_model(&mp);
    cases.push(("ce_mp".into(), mp, m));
    let gadget = games::build_ce_gadget();
    let m = games::ce_gadget_model(&gadget);
    cases.push(("ce_gadget".into(), gadget, m));
    let coin = games::build_ce_coin();
    let m = BehavioralStrategy::uniform(&coin, Player::Min);
    cases.push(("ce_coin".into(), coin, m));
    let rounds = games::build_ce_rounds(3)?;
    let m = BehavioralStrategy::uniform(&rounds, Player::Min);
    cases.push(("ce_rounds:3".into(), rounds, m));

    let mut pass = true;
    let mut worst_slack = f64::INFINITY;
    for (name, tree, model) in &cases {
        let problem = Problem::full(tree).freeze_all(Player::Min, model);
        let (_, oracle) = trunk_br_oracle(&problem, None, 1 << 16)?;
        let (lo, hi) = tree.utility_range();
        let trunk_infosets = problem.free_infosets(Player::Max).count() as f64;
        for t in [100u32, 1000, 10_000] {
            let r = best_iterate_trunk_br(&problem, None, t)?;
            let bound = lemma1_bound(hi - lo, tree.max_actions() as f64, trunk_infosets, t as u64, 0.0, 0.0)?;
            let gap = oracle - r.utility;
            worst_slack = worst_slack.min(bound - gap);
            if gap > bound + 1e-12 {
                pass = false;
                eprintln!("lemma 1 fails on {name} at T = {t}: gap {gap} > bound {bound}");
            }
        }
    }
    Ok(Outcome::new(pass, format!("{} games x 3 iteration counts, smallest bound minus gap {worst_slack:.3e}", cases.len())))
}

fn criterion9(s: &Sweeps) -> Outcome {
    let gain = |opponent: &str, algorithm: &str| {
        s.leduc.rows.iter().find(|r| r.opponent == opponent && r.algorithm == algorithm).and_then(|r| r.gain)
    };
    let lbr34 = gain("cfr:34", "lbr").unwrap_or(f64::NAN);
    let cdbr34 = gain("cfr:34", "cdbr:by_round").unwrap_or(f64::NAN);
    let mut lbr_sum = 0.0;
    let mut cdbr_sum = 0.0;
    for n in CFR_LADDER {
        let o = format!("cfr:{n}");
        lbr_sum += gain(&o, "lbr").unwrap_or(f64::NAN);
        cdbr_sum += gain(&o, "cdbr:by_round").unwrap_or(f64::NAN);
    }
    let k = CFR_LADDER.len() as f64;
    let (lbr_avg, cdbr_avg) = (lbr_sum / k, cdbr_sum / k);
    Outcome::new(
        lbr34 <= 0.0 && cdbr34 >= -1e-3 && cdbr_avg >= lbr_avg,
        format!("vs cfr:34 lbr gain {lbr34:.4} (claim <= 0), cdbr gain {cdbr34:.4}; ladder average cdbr {cdbr_avg:.4} vs lbr {lbr_avg:.4}"),
    )
}

fn criterion10() -> Result<Outcome> {
    let t = games::build_ce_rounds(3)?;
    let mut model = BehavioralStrategy::uniform(&t, Player::Min);
    let mut sigma = BehavioralStrategy::uniform(&t, Player::Min);
    for (k, c) in [(0u32, 0.4), (1, 0.35), (2, 57.0 / 70.0)] {
        let l = round_letter(k);
        let info = t.infoset_by_key(Player::Min, &l.to_string()).context("round infoset")?;
        let ci = t.infoset(Player::Min, info).actions.iter().position(|a| *a == format!("c{l}")).context("continue")?;
        let mut v = [0.0; 2];
        v[ci] = 0.6;
        v[1 - ci] = 0.4;
        model.set(info, &v)?;
        v[ci] = c;
        v[1 - ci] = 1.0 - c;
        sigma.set(info, &v)?;
    }
    let rnr = make_rnr(&t, &model, 0.5)?;
    let a = reach_balance_check(&rnr, &sigma, 1)?;
    let b = reach_balance_check(&rnr, &sigma, 2)?;
    let frozen = balance_grid_search(&rnr, &sigma, 3, None, 1e-4)?;
    let freed: Vec<bool> =
        (1..=2).map(|r| balance_grid_search(&rnr, &sigma, 3, Some(r), 1e-4).map(|s| s.found)).collect::<Result<_, _>>()?;
    let pass = (a.0 - 1.0).abs() < 1e-12
        && a.1 == 1.0
        && (b.0 - 0.5).abs() < 1e-12
        && b.1 == 0.5
        && !frozen.found
        && freed.iter().all(|&f| f);
    Ok(Outcome::new(
        pass,
        format!(
            "round a {a:?}, round b {b:?}; all frozen residual {:.3e}; freeing round a or b finds a solution: {freed:?}",
            frozen.residual
        ),
    ))
}

fn criterion11(dir: &Path) -> Result<Outcome> {
    let t = games::build_kuhn();
    let (ne, _) = solve_game(&t, 1e-7, 1_000_000)?;
    let conv = nash_conv(&t, &ne);
    ensure!(conv.is_finite());

    // Zero sum: Min's best-response value is the negated Max utility.
    let max = ne.max.clone();
    let (br_min, v_min) = best_response(&t, &max, Player::Min);
    let u = expected_utility(&t, &StrategyProfile::new(max, br_min));
    let zero_sum = (v_min + u).abs() < 1e-12;

    // Best response against brute force over pure strategies.
    let mut brute_ok = true;
    for (tree, model) in [
        (games::build_kuhn(), make_opponent(&games::build_kuhn(), &OpponentSpec::Random(7))?),
        (games::build_ce_mp(), games::ce_mp_model(&games::build_ce_mp())),
    ] {
        ensure!(tree.num_terminals() <= 200);
        let (_, v) = best_response(&tree, &model, Player::Max);
        let (_, oracle) = trunk_br_oracle(&Problem::full(&tree).freeze_all(Player::Min, &model), None, 1 << 16)?;
        brute_ok &= (v - oracle).abs() < 1e-12;
    }

    // Identical results files from two runs of the same config.
    let mut files = Vec::new();
    for k in 0..2 {
        let out = dir.join(format!("rerun{k}"));
        run_experiment(&ExperimentConfig {
            game: GameId::Kuhn,
            opponents: vec![OpponentSpec::Cfr(5), OpponentSpec::Random(3)],
            algorithms: vec![AlgoSpec::Br, AlgoSpec::Cdbr(Scheme::ByRound), AlgoSpec::Cdrnr { p: 0.5, scheme: Scheme::ByRound }],
            iterations: 500,
            gv_iterations: 1_000_000,
            out: out.clone(),
        })?;
        files.push(std::fs::read(out.join("results.csv"))?);
    }
    let identical = files[0] == files[1];
    Ok(Outcome::new(
        conv <= 1e-6 && zero_sum && brute_ok && identical,
        format!("kuhn NashConv {conv:.2e}, zero sum {zero_sum}, brute-force BR {brute_ok}, identical reruns {identical}"),
    ))
}

/// Criteria whose claim does not hold on the games as built here.
fn expected_failure(n: u32) -> bool {
    n == 9
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut results: BTreeMap<u32, Result<Outcome>> = BTreeMap::new();
    let mut report = |n: u32, r: Result<Outcome>| {
        let line = match &r {
            Ok(o) if o.pass && expected_failure(n) => format!("PASS (unexpected) {}", o.detail),
            Ok(o) if o.pass => format!("PASS {}", o.detail),
            Ok(o) if expected_failure(n) => format!("FAIL (expected) {}", o.detail),
            Ok(o) => format!("FAIL {}", o.detail),
            Err(e) => format!("FAIL error: {e:#}"),
        };
        println!("criterion {n}: {line}");
        results.insert(n, r);
    };

    report(1, criterion1());
    report(2, criterion2());
    report(3, criterion3());
    let t0 = Instant::now();
    match run_sweeps(dir.path()) {
        Ok(s) => {
            let secs = t0.elapsed().as_secs_f64();
            let bad = check_rows(&s.rows().cloned().collect::<Vec<_>>());
            for v in &bad {
                eprintln!("sweep check: {v}");
            }
            report(4, Ok(criterion4(&s, secs)));
            report(5, Ok(criterion5(&s)));
            report(6, criterion6(&s));
            report(7, criterion7(&s));
            report(8, criterion8());
            report(9, Ok(criterion9(&s)));
        }
        Err(e) => {
            for n in [4, 5, 6, 7, 9] {
                report(n, Err(anyhow::anyhow!("sweeps failed: {e:#}")));
            }
            report(8, criterion8());
        }
    }
    report(10, criterion10());
    report(11, criterion11(dir.path()));

    let unexpected: Vec<u32> = results
        .iter()
        .filter(|(n, r)| !expected_failure(**n) && !r.as_ref().is_ok_and(|o| o.pass))
        .map(|(n, _)| *n)
        .collect();
    if !unexpected.is_empty() {
        eprintln!("failed criteria: {unexpected:?}");
        std::process::exit(1);
    }
}

