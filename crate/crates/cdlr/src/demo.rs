//! The gadget counterexamples as printable reports with pass/fail expectations.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use cdlr_core::efg::rationalize;
use cdlr_core::gadgets::{
    coin_setup, gadget_action_sweep, trunk_kept_action_sweep, unit_grid, GadgetKind, SweepRow,
};

/// Points at which the trunk-kept resolve switches actions, with the pure action
/// expected at each.
pub const SWITCH_PROBES: [(f64, char); 3] = [(0.499999, 'b'), (0.5, 'c'), (0.500001, 'a')];

/// A rendered demo and whether every expectation held.
#[derive(Clone, Debug)]
pub struct Report {
    pub text: String,
    pub ok: bool,
}

impl Report {
    fn new() -> Self {
        Report { text: String::new(), ok: true }
    }

    fn line(&mut self, pass: bool, msg: String) {
        self.ok &= pass;
        writeln!(self.text, "{} {msg}", if pass { "ok  " } else { "FAIL" }).unwrap();
    }
}

/// Deviation values of every gadget on the coin game and the Definition 1
/// comparison of each construction, all in exact arithmetic.
pub fn coin_demo() -> Result<Report> {
    let c = coin_setup()?;
    let mut r = Report::new();
    let expected = [
        (GadgetKind::Resolving, false, -3.5),
        (GadgetKind::MaxMargin, false, -2.0),
        (GadgetKind::ReachMaxMargin, false, -2.0),
        (GadgetKind::Resolving, true, -1.75),
        (GadgetKind::MaxMargin, true, -4.0),
    ];
    for (kind, normalized, want) in expected {
        let got = c.deviation_value(kind, normalized)?;
        let name = if normalized { format!("{kind} (normalized)") } else { kind.to_string() };
        r.line(got == rationalize(want), format!("{name:<26} deviation value {got:>5}, expected {want}"));
    }
    let kept = c.definition1(None)?;
    r.line(
        kept.reference == rationalize(-3.0) && kept.estimate == kept.reference,
        format!("{:<26} estimate {:>5}, reference {}", "trunk kept", kept.estimate, kept.reference),
    );
    let res = c.definition1(Some(GadgetKind::Resolving))?;
    r.line(
        res.overestimates_exploitability(),
        format!("{:<26} estimate {:>5}, reference {} (overestimates exploitability)", "resolving", res.estimate, res.reference),
    );
    let mm = c.definition1(Some(GadgetKind::MaxMargin))?;
    r.line(
        mm.underestimates_exploitability(),
        format!("{:<26} estimate {:>5}, reference {} (underestimates exploitability)", "max_margin", mm.estimate, mm.reference),
    );
    Ok(r)
}

/// Resolved action probabilities at `act` of the gadget game over a `points`-point
/// grid for both gadget kinds, and for the trunk-kept resolve at the switch
/// probes. With `out`, each table goes to `sweep_<kind>.csv` there.
pub fn gadget_sweep_demo(points: usize, out: Option<&Path>) -> Result<Report> {
    let grid = unit_grid(points);
    let mut r = Report::new();
    for kind in [GadgetKind::Resolving, GadgetKind::MaxMargin] {
        let rows = gadget_action_sweep(kind, &grid, false)?;
        if let Some(dir) = out {
            write_sweep(&dir.join(format!("sweep_{kind}.csv")), &rows)?;
        }
        let pure_c: Vec<f64> = rows.iter().filter(|x| x.pure() == Some('c')).map(|x| x.p).collect();
        let summary = summarize(&rows);
        r.line(pure_c.is_empty(), format!("{kind:<11} never resolves pure c over {points} points: {summary}"));
    }
    let probes: Vec<f64> = SWITCH_PROBES.iter().map(|x| x.0).collect();
    let rows = trunk_kept_action_sweep(&probes)?;
    if let Some(dir) = out {
        write_sweep(&dir.join("sweep_trunk_kept.csv"), &rows)?;
    }
    for (row, &(p, want)) in rows.iter().zip(&SWITCH_PROBES) {
        r.line(row.pure() == Some(want), format!("trunk kept  p = {p}: {} (expected {want})", row.describe()));
    }
    Ok(r)
}

/// Runs of equal resolved actions, as `action [from, to]`.
fn summarize(rows: &[SweepRow]) -> String {
    let mut parts: Vec<(String, f64, f64)> = Vec::new();
    for row in rows {
        let d = row.describe();
        match parts.last_mut() {
            Some(last) if last.0 == d => last.2 = row.p,
            _ => parts.push((d, row.p, row.p)),
        }
    }
    parts.iter().map(|(d, a, b)| format!("{d} [{a}, {b}]")).collect::<Vec<_>>().join(", ")
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["p", "action_a", "action_b", "action_c"])?;
    for row in rows {
        w.write_record([row.p, row.a, row.b, row.c].map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_demo_passes() {
        let r = coin_demo().unwrap();
        assert!(r.ok, "{}", r.text);
        assert_eq!(r.text.lines().count(), 8);
    }

    #[test]
    fn small_sweep_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let r = gadget_sweep_demo(11, Some(dir.path())).unwrap();
        assert!(r.ok, "{}", r.text);
        let text = std::fs::read_to_string(dir.path().join("sweep_max_margin.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("p,action_a,action_b,action_c"));
        assert_eq!(text.lines().count(), 12);
        assert!(dir.path().join("sweep_trunk_kept.csv").exists());
    }
}
