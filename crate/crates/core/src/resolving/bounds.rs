//! Evaluators for the guarantees of continual resolving against a model.
//!
//! Theorem 1 lower-bounds the utility against the model:
//! `u(σ, σ_F) + Σ|I_SO|(1-p)ε_V + |S|ε_R + Σ|I_SB|ε_V ≥ u(σ_NE)`.
//! Theorem 2 upper-bounds the exploitability by the gain:
//! `E(σ) ≤ G(σ, σ_F) p/(1-p) + error`.

use alloc::format;
use alloc::vec::Vec;

use super::continual::ResolveOutput;
use crate::error::{Error, Result};

/// How the value-function error is charged at public states where play leaves the
/// trunk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LeaveTerm {
    /// `|I_SO| (1-p) ε_V`: leave errors only count in the free copy.
    #[default]
    Scaled,
    /// `|I_SO| ε_V`: leave errors count in full.
    Unscaled,
}

/// How the error terms enter the exploitability bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Theorem2Form {
    /// `G p/(1-p) + error/(1-p)`: the per-step inequality
    /// `G_i p - E_i (1-p) + error_i ≥ 0` divided by `1-p`.
    #[default]
    Derived,
    /// `G p/(1-p) + error`, with the error term left unscaled.
    Printed,
}

/// Every quantity the bounds are stated in.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TheoremBounds {
    /// Range of leaf utilities.
    pub delta: f64,
    /// Largest action count.
    pub actions: f64,
    /// `Max` infosets in the trunk.
    pub trunk_infosets: f64,
    /// Number of subgames and their value error, for the trunk lemma.
    pub n_s: f64,
    pub eps_s: f64,
    /// Value-function error per infoset.
    pub eps_v: f64,
    /// Largest per-step regret.
    pub eps_r: f64,
    /// Number of resolve steps.
    pub steps: usize,
    /// Per step, `Max` infosets at borders inside the subgame.
    pub border_infosets: Vec<usize>,
    /// Per step, `Max` infosets where play leaves the trunk.
    pub leave_infosets: Vec<usize>,
    pub p: f64,
}

impl TheoremBounds {
    /// Collects the step quantities of a continual-resolving run.
    pub fn from_run(run: &ResolveOutput, p: f64) -> Self {
        TheoremBounds {
            eps_v: run.eps_v,
            eps_r: run.max_eps_r(),
            steps: run.steps.len(),
            border_infosets: run.steps.iter().map(|s| s.border_infosets).collect(),
            leave_infosets: run.steps.iter().map(|s| s.leave_infosets).collect(),
            p,
            ..TheoremBounds::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [self.delta, self.actions, self.trunk_infosets, self.n_s, self.eps_s, self.eps_v, self.eps_r];
        if scalars.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Parameter("bound quantities must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Parameter(format!("p = {} is outside [0, 1]", self.p)));
        }
        Ok(())
    }

    /// `Σ|I_SO| (1-p) ε_V + |S| ε_R + Σ|I_SB| ε_V`.
    pub fn error_budget(&self, leave: LeaveTerm) -> f64 {
        let scale = match leave {
            LeaveTerm::Scaled => 1.0 - self.p,
            LeaveTerm::Unscaled => 1.0,
        };
        let leave_sum: usize = self.leave_infosets.iter().sum();
        let border_sum: usize = self.border_infosets.iter().sum();
        leave_sum as f64 * scale * self.eps_v + self.steps as f64 * self.eps_r + border_sum as f64 * self.eps_v
    }
}

/// Theorem 1 slack: `u(σ, σ_F) + error - u(σ_NE)`. Nonnegative for valid runs.
pub fn theorem1_slack(bounds: &TheoremBounds, leave: LeaveTerm, model_utility: f64, game_value: f64) -> Result<f64> {
    bounds.validate()?;
    Ok(model_utility + bounds.error_budget(leave) - game_value)
}

/// Right-hand side of Theorem 2; infinite at `p = 1`.
pub fn theorem2_bound(bounds: &TheoremBounds, form: Theorem2Form, leave: LeaveTerm, gain: f64) -> Result<f64> {
    bounds.validate()?;
    let p = bounds.p;
    if p >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let err = bounds.error_budget(leave);
    Ok(match form {
        Theorem2Form::Derived => (gain * p + err) / (1.0 - p),
        Theorem2Form::Printed => gain * p / (1.0 - p) + err,
    })
}

/// Theorem 2 slack: bound minus measured exploitability.
pub fn theorem2_slack(
    bounds: &TheoremBounds,
    form: Theorem2Form,
    leave: LeaveTerm,
    gain: f64,
    exploitability: f64,
) -> Result<f64> {
    Ok(theorem2_bound(bounds, form, leave, gain)? - exploitability)
}

/// Allowed decrease of the restricted Nash response gain from `p1` to `p2 > p1`
/// when the two solutions are `delta1`- and `delta2`-optimal for their objectives
/// `p G - (1-p) E`. Exact solutions have nondecreasing gain; never below `1e-6`.
pub fn monotone_gain_slack(p1: f64, delta1: f64, p2: f64, delta2: f64) -> f64 {
    if p2 <= p1 {
        return f64::INFINITY;
    }
    ((delta1 * (1.0 - p2) + delta2 * (1.0 - p1)) / (p2 - p1)).max(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample(p: f64) -> TheoremBounds {
        TheoremBounds {
            eps_v: 0.01,
            eps_r: 0.001,
            steps: 3,
            border_infosets: vec![2, 0, 0],
            leave_infosets: vec![0, 1, 1],
            p,
            ..TheoremBounds::default()
        }
    }

    #[test]
    fn budget_terms() {
        let b = sample(0.5);
        assert!((b.error_budget(LeaveTerm::Scaled) - (2.0 * 0.5 * 0.01 + 0.003 + 0.02)).abs() < 1e-15);
        assert!((b.error_budget(LeaveTerm::Unscaled) - (0.02 + 0.003 + 0.02)).abs() < 1e-15);
    }

    #[test]
    fn zero_errors_reduce_to_gain() {
        let b = TheoremBounds { p: 0.5, ..TheoremBounds::default() };
        assert_eq!(theorem1_slack(&b, LeaveTerm::Scaled, 1.25, 1.0).unwrap(), 0.25);
        // At p = 0.5 the exploitability bound is the gain itself.
        assert_eq!(theorem2_bound(&b, Theorem2Form::Derived, LeaveTerm::Scaled, 0.3).unwrap(), 0.3);
        assert_eq!(theorem2_bound(&b, Theorem2Form::Printed, LeaveTerm::Scaled, 0.3).unwrap(), 0.3);
    }

    #[test]
    fn forms_differ_by_the_error_scaling() {
        let b = sample(0.75);
        let err = b.error_budget(LeaveTerm::Scaled);
        let d = theorem2_bound(&b, Theorem2Form::Derived, LeaveTerm::Scaled, 1.0).unwrap();
        let p = theorem2_bound(&b, Theorem2Form::Printed, LeaveTerm::Scaled, 1.0).unwrap();
        assert!((d - p - 3.0 * err).abs() < 1e-12);
    }

    #[test]
    fn p_one_is_unbounded() {
        let b = sample(1.0);
        assert!(theorem2_bound(&b, Theorem2Form::Derived, LeaveTerm::Scaled, 0.0).unwrap().is_infinite());
        assert!(theorem1_slack(&sample(1.5), LeaveTerm::Scaled, 0.0, 0.0).is_err());
    }

    #[test]
    fn monotone_slack() {
        assert_eq!(monotone_gain_slack(0.1, 0.0, 0.2, 0.0), 1e-6);
        assert!((monotone_gain_slack(0.25, 0.01, 0.5, 0.01) - (0.005 + 0.0075) / 0.25).abs() < 1e-15);
        assert!(monotone_gain_slack(0.5, 0.0, 0.5, 0.0).is_infinite());
    }
}
