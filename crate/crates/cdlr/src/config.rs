//! Experiment configuration: opponent and algorithm specs and the flat `key=value`
//! config file read by `cdlr sweep`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use cdlr_core::games::GameId;
use cdlr_core::resolving::Scheme;
use cdlr_core::valuefn::VfKind;

use crate::harness::GV_ITERATIONS;

/// The default opponent ladder of CFR+ iteration counts.
pub const CFR_LADDER: [u32; 8] = [2, 5, 10, 20, 34, 50, 100, 200];

/// The default grid of fixed-model probabilities.
pub const P_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Step solver iterations when the config does not say.
pub const DEFAULT_ITERATIONS: u32 = 5000;

#[derive(Clone, Debug, PartialEq)]
pub enum OpponentSpec {
    /// Average strategy of CFR+ stopped after this many iterations.
    Cfr(u32),
    /// Independent uniform simplex draws per infoset.
    Random(u64),
    /// A strategy file of the minimizing player.
    File(PathBuf),
}

impl OpponentSpec {
    /// The seed column of the result row.
    pub fn seed(&self) -> u64 {
        match self {
            OpponentSpec::Random(s) => *s,
            _ => 0,
        }
    }
}

impl fmt::Display for OpponentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpponentSpec::Cfr(n) => write!(f, "cfr:{n}"),
            OpponentSpec::Random(s) => write!(f, "random:{s}"),
            OpponentSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for OpponentSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| anyhow!("opponent spec {s:?} needs a kind and an argument"))?;
        match kind {
            "cfr" => {
                let n: u32 = arg.parse().with_context(|| format!("bad iteration count in {s:?}"))?;
                if n == 0 {
                    bail!("cfr opponent needs at least one iteration");
                }
                Ok(OpponentSpec::Cfr(n))
            }
            "random" => Ok(OpponentSpec::Random(arg.parse().with_context(|| format!("bad seed in {s:?}"))?)),
            "file" => Ok(OpponentSpec::File(PathBuf::from(arg))),
            _ => bail!("unknown opponent kind {kind:?}"),
        }
    }
}

/// One algorithm column of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum AlgoSpec {
    /// Full best response to the model.
    Br,
    /// Local best response (poker only).
    Lbr,
    /// Continual depth-limited best response.
    Cdbr(Scheme),
    /// Continual depth-limited restricted Nash response, exact continuation values.
    Cdrnr { p: f64, scheme: Scheme },
    /// Restricted Nash response solved on the whole game.
    Rnr(f64),
    /// CDRNR with pieces solved alone and an explicit value function at the borders.
    CdrnrVf { kind: VfKind, p: f64, scheme: Scheme },
}

impl AlgoSpec {
    /// Probability of the fixed model, where the algorithm has one.
    pub fn p(&self) -> Option<f64> {
        match self {
            AlgoSpec::Cdrnr { p, .. } | AlgoSpec::CdrnrVf { p, .. } | AlgoSpec::Rnr(p) => Some(*p),
            _ => None,
        }
    }

    /// Lookahead depth in own public states, for depth-based partitionings.
    pub fn depth(&self) -> Option<u32> {
        match self {
            AlgoSpec::Cdbr(s) | AlgoSpec::Cdrnr { scheme: s, .. } | AlgoSpec::CdrnrVf { scheme: s, .. } => match s {
                Scheme::ByOwnActions(k) => Some(*k),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoSpec::Br => f.write_str("br"),
            AlgoSpec::Lbr => f.write_str("lbr"),
            AlgoSpec::Cdbr(s) => write!(f, "cdbr:{}", scheme_id(s)),
            AlgoSpec::Cdrnr { p, scheme } => write!(f, "cdrnr:{p}:{}", scheme_id(scheme)),
            AlgoSpec::Rnr(p) => write!(f, "rnr:{p}"),
            AlgoSpec::CdrnrVf { kind, .. } => write!(f, "cdrnr_vf:{kind}"),
        }
    }
}

/// Depth-based schemes print as their bare depth.
fn scheme_id(s: &Scheme) -> String {
    match s {
        Scheme::ByOwnActions(k) => k.to_string(),
        other => other.to_string(),
    }
}

/// Parses a partitioning given either as a bare depth or as a scheme name.
pub fn parse_scheme(s: &str) -> Result<Scheme> {
    if let Ok(k) = s.parse::<u32>() {
        return Ok(Scheme::ByOwnActions(k));
    }
    s.parse::<Scheme>().map_err(|e| anyhow!("{e}"))
}

pub fn parse_p(s: &str) -> Result<f64> {
    let p: f64 = s.parse().with_context(|| format!("bad probability {s:?}"))?;
    if !(0.0..=1.0).contains(&p) {
        bail!("p = {p} is outside [0, 1]");
    }
    Ok(p)
}

/// Parses one algorithm spec. `cdrnr_vf` takes its `p` and scheme from the
/// arguments; everything else carries its own.
pub fn parse_algo(s: &str, vf_p: f64, vf_scheme: Scheme) -> Result<AlgoSpec> {
    Ok(match s {
        "br" => AlgoSpec::Br,
        "lbr" => AlgoSpec::Lbr,
        _ => {
            let (kind, rest) = s.split_once(':').ok_or_else(|| anyhow!("unknown algorithm {s:?}"))?;
            match kind {
                "cdbr" => AlgoSpec::Cdbr(parse_scheme(rest)?),
                "cdrnr" => {
                    let (p, scheme) = rest.split_once(':').ok_or_else(|| anyhow!("cdrnr needs p and a scheme: {s:?}"))?;
                    AlgoSpec::Cdrnr { p: parse_p(p)?, scheme: parse_scheme(scheme)? }
                }
                "rnr" => AlgoSpec::Rnr(parse_p(rest)?),
                "cdrnr_vf" => AlgoSpec::CdrnrVf {
                    kind: rest.parse().map_err(|e| anyhow!("{e}"))?,
                    p: vf_p,
                    scheme: vf_scheme,
                },
                _ => bail!("unknown algorithm {s:?}"),
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub game: GameId,
    pub opponents: Vec<OpponentSpec>,
    pub algorithms: Vec<AlgoSpec>,
    /// CFR+ iterations per resolve step and for whole-game RNR solves.
    pub iterations: u32,
    /// Iteration cap of the game-value solve.
    pub gv_iterations: u32,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Parses the flat config format.
    ///
    /// Keys: `game`, `cfr_iters`, `random_seeds`, `algorithms`, `p_grid`,
    /// `iterations`, `gv_iterations`, `out`, `vf_p` and `vf_scheme`. Lists are
    /// comma separated.
    /// A `*` in place of `p` in `cdrnr:*:<scheme>` or `rnr:*` expands over the grid.
    /// Relative `out` paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut game = None;
        let mut cfr_iters: Option<Vec<u32>> = None;
        let mut seeds: Vec<u64> = Vec::new();
        let mut algorithms: Option<Vec<String>> = None;
        let mut grid: Vec<f64> = P_GRID.to_vec();
        let mut iterations = DEFAULT_ITERATIONS;
        let mut gv_iterations = GV_ITERATIONS;
        let mut out = None;
        let mut vf_p = 0.5;
        let mut vf_scheme = Scheme::ByRound;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = || format!("line {}: key {key}", n + 1);
            match key {
                "game" => game = Some(value.parse::<GameId>().map_err(|e| anyhow!("{e}")).with_context(ctx)?),
                "cfr_iters" => cfr_iters = Some(list(value).with_context(ctx)?),
                "random_seeds" => seeds = list(value).with_context(ctx)?,
                "algorithms" => algorithms = Some(value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()),
                "p_grid" => grid = value.split(',').map(|s| parse_p(s.trim())).collect::<Result<_>>().with_context(ctx)?,
                "iterations" => iterations = value.parse().with_context(ctx)?,
                "gv_iterations" => gv_iterations = value.parse().with_context(ctx)?,
                "out" => out = Some(base.join(value)),
                "vf_p" => vf_p = parse_p(value).with_context(ctx)?,
                "vf_scheme" => vf_scheme = parse_scheme(value).with_context(ctx)?,
                _ => bail!("line {}: unknown key {key:?}", n + 1),
            }
        }
        let game = game.ok_or_else(|| anyhow!("config needs a game"))?;
        let mut opponents: Vec<OpponentSpec> =
            cfr_iters.unwrap_or_else(|| CFR_LADDER.to_vec()).into_iter().map(OpponentSpec::Cfr).collect();
        opponents.extend(seeds.into_iter().map(OpponentSpec::Random));
        if opponents.iter().any(|o| *o == OpponentSpec::Cfr(0)) {
            bail!("cfr opponents need at least one iteration");
        }
        let names = algorithms.unwrap_or_else(|| vec!["br".into(), "cdbr:by_round".into(), "cdrnr:*:by_round".into()]);
        let mut algos = Vec::new();
        for name in names {
            if let Some(rest) = name.strip_prefix("cdrnr:*:") {
                for &p in &grid {
                    algos.push(AlgoSpec::Cdrnr { p, scheme: parse_scheme(rest)? });
                }
            } else if name == "rnr:*" {
                algos.extend(grid.iter().map(|&p| AlgoSpec::Rnr(p)));
            } else {
                algos.push(parse_algo(&name, vf_p, vf_scheme)?);
            }
        }
        for a in &algos {
            if a.p().is_some_and(|p| p >= 1.0) {
                bail!("{a}: p must be below 1");
            }
        }
        let out = out.ok_or_else(|| anyhow!("config needs an out directory"))?;
        Ok(ExperimentConfig { game, opponents, algorithms: algos, iterations, gv_iterations, out })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(|s| Ok(s.parse::<T>()?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_ids_round_trip() {
        for s in ["br", "lbr", "cdbr:2", "cdbr:by_round", "cdrnr:0.5:by_round", "cdrnr:0.25:3", "rnr:0.75", "cdrnr_vf:noisy:0.01:7"] {
            let a = parse_algo(s, 0.5, Scheme::ByRound).unwrap();
            assert_eq!(a.to_string(), s);
        }
        assert_eq!(parse_algo("cdbr:by_own_actions:2", 0.5, Scheme::ByRound).unwrap(), AlgoSpec::Cdbr(Scheme::ByOwnActions(2)));
        for bad in ["bogus", "cdrnr:0.5", "cdrnr:1.5:by_round", "cdbr:deep", "cdrnr_vf:magic"] {
            assert!(parse_algo(bad, 0.5, Scheme::ByRound).is_err(), "{bad}");
        }
    }

    #[test]
    fn opponents_parse() {
        assert_eq!("cfr:34".parse::<OpponentSpec>().unwrap(), OpponentSpec::Cfr(34));
        assert_eq!("random:9".parse::<OpponentSpec>().unwrap().seed(), 9);
        assert!("cfr:0".parse::<OpponentSpec>().is_err());
        assert!("nash".parse::<OpponentSpec>().is_err());
    }

    #[test]
    fn config_expands_the_grid() {
        let text = "# ladder run\ngame = leduc\ncfr_iters = 2, 34\nrandom_seeds = 1\nalgorithms = br, cdrnr:*:1, rnr:0.5\np_grid = 0.1,0.5\nout = run\n";
        let c = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(c.game, GameId::Leduc);
        assert_eq!(c.opponents, vec![OpponentSpec::Cfr(2), OpponentSpec::Cfr(34), OpponentSpec::Random(1)]);
        let ids: Vec<String> = c.algorithms.iter().map(|a| a.to_string()).collect();
        assert_eq!(ids, ["br", "cdrnr:0.1:1", "cdrnr:0.5:1", "rnr:0.5"]);
        assert_eq!(c.out, Path::new("/tmp/run"));
        assert_eq!(c.iterations, DEFAULT_ITERATIONS);
    }

    #[test]
    fn config_defaults_and_errors() {
        let c = ExperimentConfig::parse("game=kuhn\nout=x", Path::new(".")).unwrap();
        assert_eq!(c.opponents.len(), CFR_LADDER.len());
        assert_eq!(c.algorithms.len(), 2 + P_GRID.len());
        assert!(ExperimentConfig::parse("out=x", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("game=chess\nout=x", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("game=kuhn\nout=x\ncolour=red", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("game=kuhn\nout=x\nalgorithms=rnr:1", Path::new(".")).is_err());
        assert!(ExperimentConfig::parse("game=kuhn\nout=x\np_grid=0.5,2", Path::new(".")).is_err());
    }
}
