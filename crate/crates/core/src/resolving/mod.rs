//! Subgame partitioning, the restricted Nash response game, the continual
//! resolving drivers, and evaluators for their guarantees.

use crate::efg::{best_response, expected_utility, BehavioralStrategy, GameTree, Player, StrategyProfile};

mod balance;
mod bounds;
mod continual;
mod exact;
mod partition;
mod rnr;

pub use balance::{balance_grid_search, reach_balance_check, BalanceSearch};
pub use bounds::{monotone_gain_slack, theorem1_slack, theorem2_bound, theorem2_slack, LeaveTerm, TheoremBounds, Theorem2Form};
pub use continual::{
    cdbr, cdrnr, cdrnr_on, ResolveConfig, ResolveMode, ResolveOutput, StepDiagnostics, StepSolver,
};
pub use exact::{maximin, solve_exact, ExactStep, MAX_PURE_STRATEGIES};
pub use partition::{make_partitioning, Piece, Scheme, StepSets, SubgamePartitioning};
pub use rnr::{make_rnr, rnr_full, RnrGame, Side, RnrSolution, FIXED_PREFIX, FREE_PREFIX, ROOT_PUBLIC};

/// Utility of a `Max` strategy against a model and against a best-responding
/// opponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub model_utility: f64,
    pub worst_case_utility: f64,
}

impl Evaluation {
    pub fn of(tree: &GameTree, strategy: &BehavioralStrategy, model: &BehavioralStrategy) -> Self {
        let model_utility = expected_utility(tree, &StrategyProfile::new(strategy.clone(), model.clone()));
        let (_, v) = best_response(tree, strategy, Player::Min);
        Evaluation { model_utility, worst_case_utility: -v }
    }

    pub fn gain(&self, game_value: f64) -> f64 {
        self.model_utility - game_value
    }

    pub fn exploitability(&self, game_value: f64) -> f64 {
        game_value - self.worst_case_utility
    }
}
