use rand::seq::IndexedRandom;
use rand::Rng;

use super::action::{Action, ActionError};
use super::grammar::AsdlGrammar;
use super::state::ParserState;

/// Identifier pool for primitive fields during random rollouts.
const GEN_POOL: &[&str] = &["x", "y", "n", "foo", "bar", "value", "1", "2"];

/// Depth above which the policy stops exploring and picks cheap productions.
const SOFT_DEPTH: usize = 6;

/// Steps reserved at the end of the budget for a guaranteed wind-down.
/// Must exceed the worst-case completion cost from any reachable state.
const WIND_DOWN_MARGIN: usize = 120;

/// Samples a random derivation of `root_type`, biased toward small trees.
///
/// The policy keeps every prefix grammar-valid by construction: it only
/// ever picks from `valid_actions`. Termination within `max_actions` is
/// guaranteed by switching to minimum-completion-cost choices near the
/// depth limit and unconditionally once the budget margin is reached.
pub fn random_rollout<R: Rng>(
    grammar: &AsdlGrammar,
    root_type: &str,
    max_actions: usize,
    rng: &mut R,
) -> Result<Vec<Action>, ActionError> {
    assert!(max_actions > WIND_DOWN_MARGIN, "budget too small to wind down");
    let mut state = ParserState::new(root_type);
    let mut actions = Vec::new();
    while !state.is_complete() {
        if actions.len() >= max_actions {
            return Err(ActionError::IncompletePrefix);
        }
        let winding_down = actions.len() + WIND_DOWN_MARGIN >= max_actions;
        let action = choose(&state, grammar, winding_down, rng)?;
        state = state.step(&action, grammar)?;
        actions.push(action);
    }
    Ok(actions)
}

fn choose<R: Rng>(
    state: &ParserState,
    grammar: &AsdlGrammar,
    winding_down: bool,
    rng: &mut R,
) -> Result<Action, ActionError> {
    let valid = state.valid_actions(grammar)?;
    let frontier = state
        .frontier(grammar)
        .ok_or(ActionError::CompleteState)?;

    let cheap = winding_down || state.depth() >= SOFT_DEPTH;
    if cheap {
        // Close everything closable, then take the cheapest expansion.
        if valid.reduce {
            return Ok(Action::Reduce);
        }
        if valid.gen_token {
            let text = GEN_POOL.choose(rng).expect("non-empty pool");
            return Ok(Action::GenToken(text.to_string()));
        }
        let best = valid
            .rules
            .iter()
            .copied()
            .min_by_key(|&p| grammar.min_completion_cost(p))
            .ok_or(ActionError::CompleteState)?;
        return Ok(Action::ApplyRule(best));
    }

    if valid.reduce {
        let p_reduce = if frontier.children > 0 { 0.7 } else { 0.5 };
        let must_reduce = valid.rules.is_empty() && !valid.gen_token;
        if must_reduce || rng.random::<f64>() < p_reduce {
            return Ok(Action::Reduce);
        }
    }
    if valid.gen_token {
        let text = GEN_POOL.choose(rng).expect("non-empty pool");
        return Ok(Action::GenToken(text.to_string()));
    }
    let rule = valid.rules.choose(rng).ok_or(ActionError::CompleteState)?;
    Ok(Action::ApplyRule(*rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asdl::load_grammar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rollouts_terminate_within_budget() {
        let g = load_grammar(crate::PYSUBSET_GRAMMAR).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let actions = random_rollout(&g, "stmt", 200, &mut rng).unwrap();
            assert!(!actions.is_empty());
            assert!(actions.len() <= 200);
        }
    }

    #[test]
    fn rollouts_are_seed_deterministic() {
        let g = load_grammar(crate::PYSUBSET_GRAMMAR).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(11);
        let mut b = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let x = random_rollout(&g, "stmt", 200, &mut a).unwrap();
            let y = random_rollout(&g, "stmt", 200, &mut b).unwrap();
            assert_eq!(x, y);
        }
    }
}
