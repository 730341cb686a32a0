//! Finite-state strategy representations. Public automata share one state
//! machine driven by the public signal; private automata keep per-player
//! state driven by own action and own signal.

use crate::error::{Error, Result};
use crate::game::{validate_mixed_action, MixedAction, MixedProfile, StageGame};
use crate::signal::SignalStructure;

/// A shared-state public strategy profile: every player conditions only on
/// the public signal history, summarized by the automaton state.
#[derive(Debug, Clone)]
pub struct PublicStrategyAutomaton {
    initial: usize,
    /// `decisions[state]` is the mixed profile prescribed there.
    decisions: Vec<MixedProfile>,
    /// `transitions[state][signal] -> state`
    transitions: Vec<Vec<usize>>,
}

impl PublicStrategyAutomaton {
    pub fn new(
        initial: usize,
        decisions: Vec<MixedProfile>,
        transitions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let states = decisions.len();
        if states == 0 {
            return Err(Error::DimensionMismatch("automaton needs states".into()));
        }
        if initial >= states {
            return Err(Error::DimensionMismatch("initial state out of range".into()));
        }
        if transitions.len() != states {
            return Err(Error::DimensionMismatch(
                "transition table must cover every state".into(),
            ));
        }
        let signals = transitions[0].len();
        for row in &transitions {
            if row.len() != signals {
                return Err(Error::DimensionMismatch(
                    "transition rows must share a signal alphabet".into(),
                ));
            }
            if row.iter().any(|&t| t >= states) {
                return Err(Error::DimensionMismatch("transition target out of range".into()));
            }
        }
        Ok(Self {
            initial,
            decisions,
            transitions,
        })
    }

    pub fn num_states(&self) -> usize {
        self.decisions.len()
    }

    pub fn num_signals(&self) -> usize {
        self.transitions[0].len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn decision(&self, state: usize) -> &MixedProfile {
        &self.decisions[state]
    }

    pub fn transition(&self, state: usize, signal: usize) -> usize {
        self.transitions[state][signal]
    }

    pub fn check_against(&self, game: &StageGame, sig: &SignalStructure) -> Result<()> {
        if sig.action_sizes() != game.action_sizes().as_slice() {
            return Err(Error::DimensionMismatch(
                "signal structure shape differs from game".into(),
            ));
        }
        if self.num_signals() != sig.num_signals() {
            return Err(Error::DimensionMismatch(format!(
                "automaton reads {} signals, structure emits {}",
                self.num_signals(),
                sig.num_signals()
            )));
        }
        for d in &self.decisions {
            if d.num_players() != game.num_players() {
                return Err(Error::DimensionMismatch(
                    "decision profile player count differs from game".into(),
                ));
            }
            for (i, m) in d.mixes().iter().enumerate() {
                if m.len() != game.num_actions(i) {
                    return Err(Error::DimensionMismatch(format!(
                        "decision for player {i} has wrong action count"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One player's private strategy automaton. The state advances on the pair
/// (own action, observed signal); under public monitoring the signal is the
/// public one, under private monitoring the player's own component.
#[derive(Debug, Clone)]
pub struct PrivateStrategyAutomaton {
    initial: usize,
    /// `decisions[state]` is this player's mixed action.
    decisions: Vec<MixedAction>,
    /// `transitions[state][own_action][signal] -> state`
    transitions: Vec<Vec<Vec<usize>>>,
}

impl PrivateStrategyAutomaton {
    pub fn new(
        initial: usize,
        decisions: Vec<MixedAction>,
        transitions: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let states = decisions.len();
        if states == 0 {
            return Err(Error::DimensionMismatch("automaton needs states".into()));
        }
        if initial >= states {
            return Err(Error::DimensionMismatch("initial state out of range".into()));
        }
        if transitions.len() != states {
            return Err(Error::DimensionMismatch(
                "transition table must cover every state".into(),
            ));
        }
        let actions = decisions[0].len();
        let signals = transitions[0]
            .first()
            .map(|per_action| per_action.len())
            .unwrap_or(0);
        for (w, d) in decisions.iter().enumerate() {
            if d.len() != actions {
                return Err(Error::DimensionMismatch(
                    "decision rows must share an action set".into(),
                ));
            }
            validate_mixed_action(d)
                .map_err(|e| Error::InvalidDistribution(format!("state {w}: {e}")))?;
        }
        for per_state in &transitions {
            if per_state.len() != actions {
                return Err(Error::DimensionMismatch(
                    "transitions must cover every own action".into(),
                ));
            }
            for per_action in per_state {
                if per_action.len() != signals {
                    return Err(Error::DimensionMismatch(
                        "transitions must cover every signal".into(),
                    ));
                }
                if per_action.iter().any(|&t| t >= states) {
                    return Err(Error::DimensionMismatch(
                        "transition target out of range".into(),
                    ));
                }
            }
        }
        Ok(Self {
            initial,
            decisions,
            transitions,
        })
    }

    /// Embeds one player's slice of a public automaton: same states, decision
    /// taken from the shared profile, transitions ignoring the own action.
    pub fn from_public(auto: &PublicStrategyAutomaton, player: usize) -> Self {
        let num_actions = auto.decisions[0].mix(player).len();
        let decisions = auto
            .decisions
            .iter()
            .map(|d| d.mix(player).to_vec())
            .collect();
        let transitions = auto
            .transitions
            .iter()
            .map(|row| vec![row.clone(); num_actions])
            .collect();
        Self {
            initial: auto.initial,
            decisions,
            transitions,
        }
    }

    pub fn num_states(&self) -> usize {
        self.decisions.len()
    }

    pub fn num_actions(&self) -> usize {
        self.decisions[0].len()
    }

    pub fn num_signals(&self) -> usize {
        self.transitions[0][0].len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn decision(&self, state: usize) -> &MixedAction {
        &self.decisions[state]
    }

    pub fn transition(&self, state: usize, own_action: usize, signal: usize) -> usize {
        self.transitions[state][own_action][signal]
    }

    pub fn check_against(
        &self,
        game: &StageGame,
        sig: &SignalStructure,
        player: usize,
    ) -> Result<()> {
        if self.num_actions() != game.num_actions(player) {
            return Err(Error::DimensionMismatch(format!(
                "player {player} automaton has wrong action count"
            )));
        }
        if self.num_signals() != sig.num_signals() {
            return Err(Error::DimensionMismatch(format!(
                "player {player} automaton reads {} signals, structure emits {}",
                self.num_signals(),
                sig.num_signals()
            )));
        }
        Ok(())
    }
}
