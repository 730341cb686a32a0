//! Exact belief tracking under private monitoring, and the per-history
//! correlated-deviation check. Private histories act as the correlating
//! signal: each player best-responds to the posterior over the opponents'
//! automaton states given everything the player has seen.

use std::collections::BTreeMap;

use num_rational::BigRational;

use crate::automaton::PrivateStrategyAutomaton;
use crate::error::{Error, Result};
use crate::game::{
    all_profiles, best_deviation_value, num_profiles, profile_rank, profile_unrank, MixedAction,
    StageGame,
};
use crate::joint::JointAutomata;
use crate::numeric::{rational_from_f64, Scalar};
use crate::privacy::PrivacyCurve;
use crate::repeated::{eta_from_curve, BoundCheck, RegretReport, StateVerdict, XiMode, PASS_TOL};
use crate::signal::{MonitoringKind, SignalStructure};

/// Horizon cap for exhaustive private-history enumeration.
pub const PRIVATE_HORIZON_GUARD: usize = 6;

/// Cap on enumerated joint (action, signal) paths.
pub const PATH_GUARD: usize = 10_000_000;

/// One period of a private history: (own action, own signal).
pub type PrivateHistory = Vec<(usize, usize)>;

/// Posterior attached to one positive-probability private history.
#[derive(Debug, Clone)]
pub struct BeliefEntry<S> {
    /// The player's automaton state after the history.
    pub own_state: usize,
    /// Unnormalized history probability.
    pub mass: S,
    /// Unnormalized weights over the opponents' joint automaton states,
    /// ranked over the state sizes with this player removed.
    pub posterior: Vec<S>,
}

impl<S: Scalar> BeliefEntry<S> {
    pub fn normalized(&self) -> Vec<S> {
        self.posterior
            .iter()
            .map(|w| w.clone() / self.mass.clone())
            .collect()
    }
}

/// Beliefs of every player at every positive-probability private history up
/// to the enumeration horizon.
pub struct BeliefTable<S> {
    pub state_sizes: Vec<usize>,
    pub per_player: Vec<BTreeMap<PrivateHistory, BeliefEntry<S>>>,
}

impl<S> BeliefTable<S> {
    /// State sizes with `player` removed; ranks the posterior vectors.
    pub fn opponent_sizes(&self, player: usize) -> Vec<usize> {
        self.state_sizes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != player)
            .map(|(_, &s)| s)
            .collect()
    }
}

/// Probability-side inputs of the private enumeration, scalar-generic so the
/// float and exact paths share one implementation.
pub struct PrivateKernel<S> {
    action_sizes: Vec<usize>,
    state_sizes: Vec<usize>,
    num_signals: usize,
    /// `dist[profile_rank][joint_signal_rank]`
    dist: Vec<Vec<S>>,
    /// `decisions[player][state][action]`
    decisions: Vec<Vec<Vec<S>>>,
    /// `transitions[player][state][action][signal] -> state`
    transitions: Vec<Vec<Vec<Vec<usize>>>>,
    initial: Vec<usize>,
}

impl PrivateKernel<f64> {
    pub fn new(sig: &SignalStructure, autos: &[PrivateStrategyAutomaton]) -> Result<Self> {
        if sig.kind() != MonitoringKind::Private {
            return Err(Error::IncompatibleMonitoring(
                "belief tracking requires private monitoring".into(),
            ));
        }
        let action_sizes = sig.action_sizes().to_vec();
        if autos.len() != action_sizes.len() {
            return Err(Error::DimensionMismatch(
                "one automaton per player required".into(),
            ));
        }
        for (i, auto) in autos.iter().enumerate() {
            if auto.num_actions() != action_sizes[i] || auto.num_signals() != sig.num_signals() {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} automaton shape differs from structure"
                )));
            }
        }
        let dist: Vec<Vec<f64>> = all_profiles(&action_sizes)
            .map(|p| sig.row_for_profile(&p).to_vec())
            .collect();
        Ok(Self {
            action_sizes,
            state_sizes: autos.iter().map(|a| a.num_states()).collect(),
            num_signals: sig.num_signals(),
            dist,
            decisions: autos
                .iter()
                .map(|a| (0..a.num_states()).map(|w| a.decision(w).clone()).collect())
                .collect(),
            transitions: autos
                .iter()
                .map(|a| {
                    (0..a.num_states())
                        .map(|w| {
                            (0..a.num_actions())
                                .map(|act| {
                                    (0..a.num_signals())
                                        .map(|s| a.transition(w, act, s))
                                        .collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            initial: autos.iter().map(|a| a.initial()).collect(),
        })
    }

    pub fn to_exact(&self) -> PrivateKernel<BigRational> {
        PrivateKernel {
            action_sizes: self.action_sizes.clone(),
            state_sizes: self.state_sizes.clone(),
            num_signals: self.num_signals,
            dist: self
                .dist
                .iter()
                .map(|row| row.iter().map(|&p| rational_from_f64(p)).collect())
                .collect(),
            decisions: self
                .decisions
                .iter()
                .map(|per_state| {
                    per_state
                        .iter()
                        .map(|row| row.iter().map(|&p| rational_from_f64(p)).collect())
                        .collect()
                })
                .collect(),
            transitions: self.transitions.clone(),
            initial: self.initial.clone(),
        }
    }
}

impl<S: Scalar> PrivateKernel<S> {
    fn num_players(&self) -> usize {
        self.action_sizes.len()
    }

    fn check_paths(&self, horizon: usize) -> Result<()> {
        if horizon > PRIVATE_HORIZON_GUARD {
            return Err(Error::GuardViolation(format!(
                "horizon {horizon} exceeds guard {PRIVATE_HORIZON_GUARD}"
            )));
        }
        let n = self.num_players();
        let branch = num_profiles(&self.action_sizes)
            .saturating_mul(self.num_signals.saturating_pow(n as u32));
        let mut total = 1usize;
        let mut level = 1usize;
        for _ in 0..horizon {
            level = level.saturating_mul(branch);
            total = total.saturating_add(level);
        }
        if total > PATH_GUARD {
            return Err(Error::GuardViolation(format!(
                "{total} joint paths exceed guard {PATH_GUARD}"
            )));
        }
        Ok(())
    }

    /// Exhaustive joint-path enumeration; posteriors are accumulated for
    /// every player at every intermediate depth.
    pub fn track(&self, horizon: usize) -> Result<BeliefTable<S>> {
        self.check_paths(horizon)?;
        let n = self.num_players();
        let mut table = BeliefTable {
            state_sizes: self.state_sizes.clone(),
            per_player: vec![BTreeMap::new(); n],
        };
        let opp_sizes: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                self.state_sizes
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, &s)| s)
                    .collect()
            })
            .collect();
        let histories = vec![PrivateHistory::new(); n];
        self.recurse(
            horizon,
            &self.initial.clone(),
            &histories,
            S::one(),
            &opp_sizes,
            &mut table,
        );
        Ok(table)
    }

    fn record(
        &self,
        states: &[usize],
        histories: &[PrivateHistory],
        weight: &S,
        opp_sizes: &[Vec<usize>],
        table: &mut BeliefTable<S>,
    ) {
        for i in 0..self.num_players() {
            let opp_vec: Vec<usize> = states
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &w)| w)
                .collect();
            let opp_rank = profile_rank(&opp_sizes[i], &opp_vec);
            let entry = table.per_player[i]
                .entry(histories[i].clone())
                .or_insert_with(|| BeliefEntry {
                    own_state: states[i],
                    mass: S::zero(),
                    posterior: vec![S::zero(); num_profiles(&opp_sizes[i])],
                });
            debug_assert_eq!(entry.own_state, states[i]);
            entry.mass = entry.mass.clone() + weight.clone();
            entry.posterior[opp_rank] = entry.posterior[opp_rank].clone() + weight.clone();
        }
    }

    fn recurse(
        &self,
        remaining: usize,
        states: &[usize],
        histories: &[PrivateHistory],
        weight: S,
        opp_sizes: &[Vec<usize>],
        table: &mut BeliefTable<S>,
    ) {
        self.record(states, histories, &weight, opp_sizes, table);
        if remaining == 0 {
            return;
        }
        let n = self.num_players();
        let signal_sizes = vec![self.num_signals; n];
        for actions in all_profiles(&self.action_sizes) {
            let mut w = weight.clone();
            for (j, &a) in actions.iter().enumerate() {
                w = w * self.decisions[j][states[j]][a].clone();
            }
            if w.is_zero() {
                continue;
            }
            let row = &self.dist[profile_rank(&self.action_sizes, &actions)];
            for (joint_rank, p) in row.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let tuple = profile_unrank(&signal_sizes, joint_rank);
                let next_states: Vec<usize> = (0..n)
                    .map(|j| self.transitions[j][states[j]][actions[j]][tuple[j]])
                    .collect();
                let mut next_histories = histories.to_vec();
                for (j, h) in next_histories.iter_mut().enumerate() {
                    h.push((actions[j], tuple[j]));
                }
                self.recurse(
                    remaining - 1,
                    &next_states,
                    &next_histories,
                    w.clone() * p.clone(),
                    opp_sizes,
                    table,
                );
            }
        }
    }
}

/// Exact posteriors over opponents' automaton states for every player and
/// every positive-probability private history up to the horizon.
pub fn track_beliefs(
    game: &StageGame,
    sig: &SignalStructure,
    autos: &[PrivateStrategyAutomaton],
    horizon: usize,
) -> Result<BeliefTable<f64>> {
    if sig.action_sizes() != game.action_sizes().as_slice() {
        return Err(Error::DimensionMismatch(
            "signal structure shape differs from game".into(),
        ));
    }
    let support = sig.check_full_support();
    if !support.ok {
        return Err(Error::ZeroProbability(format!(
            "structure admits observable deviations (witness {:?}); Bayesian \
             updating is not defined after every signal",
            support.witness
        )));
    }
    PrivateKernel::new(sig, autos)?.track(horizon)
}

/// Exact-rational variant of [`track_beliefs`].
pub fn track_beliefs_exact(
    game: &StageGame,
    sig: &SignalStructure,
    autos: &[PrivateStrategyAutomaton],
    horizon: usize,
) -> Result<BeliefTable<BigRational>> {
    if sig.action_sizes() != game.action_sizes().as_slice() {
        return Err(Error::DimensionMismatch(
            "signal structure shape differs from game".into(),
        ));
    }
    PrivateKernel::new(sig, autos)?.to_exact().track(horizon)
}

/// Per-history correlated-deviation check under private monitoring. For every
/// player and positive-probability private history, the expected gain of the
/// best pure deviation against the belief over opponents' states must stay
/// within `eta + xi_+ / (1 - delta)`. The check is truncated at the horizon:
/// it is a necessary condition, not a certification.
#[allow(clippy::too_many_arguments)]
pub fn verify_private_histories(
    instance: impl Into<String>,
    game: &StageGame,
    sig: &SignalStructure,
    autos: &[PrivateStrategyAutomaton],
    delta: f64,
    curve: &PrivacyCurve,
    horizon: usize,
    xi_mode: XiMode,
) -> Result<RegretReport> {
    if sig.kind() != MonitoringKind::Private {
        return Err(Error::IncompatibleMonitoring(
            "private-history check requires private monitoring".into(),
        ));
    }
    let beliefs = track_beliefs(game, sig, autos, horizon)?;
    let engine = JointAutomata::new(game, sig, autos)?;
    let measured = engine.one_shot_gain(delta)?;
    let xi = match xi_mode {
        XiMode::Measured => measured.xi,
        XiMode::Claimed(x) => x,
    };
    let (eta, eps_star, gamma_star) = eta_from_curve(delta, curve)?;
    let bound = eta + xi.max(0.0) / (1.0 - delta);

    let mut per_state = Vec::new();
    let mut verdict = true;
    for (player, per_history) in beliefs.per_player.iter().enumerate() {
        let opp_sizes = beliefs.opponent_sizes(player);
        for (history, entry) in per_history {
            let own: MixedAction = autos[player].decision(entry.own_state).clone();
            let normalized = entry.normalized();
            let mut weighted: Vec<(f64, Vec<MixedAction>)> = Vec::new();
            for (rank, &w) in normalized.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let opp_states = profile_unrank(&opp_sizes, rank);
                let mut opp_iter = opp_states.iter();
                let mixes: Vec<MixedAction> = (0..game.num_players())
                    .filter(|&j| j != player)
                    .map(|j| {
                        let w_j = *opp_iter.next().expect("opponent state");
                        autos[j].decision(w_j).clone()
                    })
                    .collect();
                weighted.push((w, mixes));
            }
            let (value, _best) = best_deviation_value(game, player, &own, &weighted)?;
            let value = value.max(0.0);
            let pass = value <= bound + PASS_TOL;
            verdict &= pass;
            per_state.push(StateVerdict {
                state: format!(
                    "p{player}:[{}]",
                    history
                        .iter()
                        .map(|(a, s)| format!("{a}/{s}"))
                        .collect::<Vec<_>>()
                        .join(",")
                ),
                regret: value,
                bound,
                pass,
                deviation: None,
            });
        }
    }
    Ok(RegretReport {
        instance: instance.into(),
        check: BoundCheck::PrivateHistories,
        delta,
        eta,
        eps_star,
        gamma_star,
        xi,
        xi_measured: Some(measured.xi),
        bound_informative: bound < 1.0,
        payoff_rescale: game.rescale(),
        horizon: Some(horizon),
        per_state,
        verdict,
    })
}
