//! Text format for behavioral strategies.
//!
//! One line per infoset, sorted by key: `<tag>:<infoset-key>\t<p1> <p2> ...`, where
//! the tag is `max` or `min`. Probabilities are written with 17 significant digits
//! so that reading a file back gives the same floats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cdlr_core::{BehavioralStrategy, GameTree, InfosetId};

/// Serializes `strategy` with lines in lexicographic key order.
pub fn to_text(tree: &GameTree, strategy: &BehavioralStrategy) -> String {
    let owner = strategy.owner;
    let mut lines: Vec<(String, String)> = tree
        .infosets(owner)
        .iter()
        .enumerate()
        .map(|(i, info)| {
            let mut probs = String::new();
            for (k, p) in strategy.get(InfosetId(i as u32)).iter().enumerate() {
                if k > 0 {
                    probs.push(' ');
                }
                write!(probs, "{p:.16e}").expect("writing to a string");
            }
            (format!("{}:{}", owner.tag(), info.key), probs)
        })
        .collect();
    lines.sort();
    let mut out = String::new();
    for (key, probs) in lines {
        out.push_str(&key);
        out.push('\t');
        out.push_str(&probs);
        out.push('\n');
    }
    out
}

/// Parses a strategy of `owner`. Every infoset of `owner` must appear exactly once.
pub fn from_text(tree: &GameTree, owner: cdlr_core::Player, text: &str) -> Result<BehavioralStrategy> {
    let prefix = format!("{}:", owner.tag());
    let mut rows: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, probs) = line.split_once('\t').ok_or_else(|| anyhow!("line {}: missing tab", n + 1))?;
        let key = key.strip_prefix(&prefix).ok_or_else(|| anyhow!("line {}: key {key:?} is not a {} infoset", n + 1, owner.tag()))?;
        let probs = probs
            .split_whitespace()
            .map(|x| x.parse::<f64>().with_context(|| format!("line {}: bad probability {x:?}", n + 1)))
            .collect::<Result<Vec<f64>>>()?;
        if rows.insert(key, probs).is_some() {
            bail!("line {}: infoset {key:?} appears twice", n + 1);
        }
    }
    let mut strategy = BehavioralStrategy::uniform(tree, owner);
    let mut missing = Vec::new();
    for (i, info) in tree.infosets(owner).iter().enumerate() {
        match rows.remove(info.key.as_str()) {
            Some(p) => strategy.set(InfosetId(i as u32), &p).with_context(|| format!("infoset {:?}", info.key))?,
            None => missing.push(info.key.clone()),
        }
    }
    if !missing.is_empty() {
        bail!("{} infosets missing, first {:?}", missing.len(), missing[0]);
    }
    if let Some(extra) = rows.keys().next() {
        bail!("unknown infoset {extra:?}");
    }
    Ok(strategy)
}

pub fn write(path: &Path, tree: &GameTree, strategy: &BehavioralStrategy) -> Result<()> {
    std::fs::write(path, to_text(tree, strategy)).with_context(|| format!("writing {}", path.display()))
}

pub fn read(path: &Path, tree: &GameTree, owner: cdlr_core::Player) -> Result<BehavioralStrategy> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_text(tree, owner, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdlr_core::games::build_kuhn;
    use cdlr_core::Player;

    #[test]
    fn round_trip_is_exact() {
        let t = build_kuhn();
        let mut s = BehavioralStrategy::uniform(&t, Player::Max);
        s.set(InfosetId(0), &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let text = to_text(&t, &s);
        assert_eq!(from_text(&t, Player::Max, &text).unwrap(), s);
    }

    #[test]
    fn lines_are_sorted_with_enough_digits() {
        let t = build_kuhn();
        let s = BehavioralStrategy::uniform(&t, Player::Min);
        let text = to_text(&t, &s);
        let keys: Vec<&str> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(keys.iter().all(|k| k.starts_with("min:")));
        let first = text.lines().next().unwrap().split('\t').nth(1).unwrap();
        let digits = first.split(' ').next().unwrap().split('e').next().unwrap().replace('.', "");
        assert!(digits.len() >= 12);
    }

    #[test]
    fn rejects_bad_files() {
        let t = build_kuhn();
        let text = to_text(&t, &BehavioralStrategy::uniform(&t, Player::Max));
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        assert!(from_text(&t, Player::Max, &lines.join("\n")).is_err());
        assert!(from_text(&t, Player::Min, &text).is_err());
        let dup = format!("{text}{}", text.lines().next().unwrap());
        assert!(from_text(&t, Player::Max, &dup).is_err());
        let bad = text.replacen("5.0000000000000000e-1 5", "9.0000000000000000e-1 5", 1);
        assert!(from_text(&t, Player::Max, &bad).is_err());
    }
}
