//! Joint-state analysis of per-player strategy automata: continuation values
//! over the product state space and one-shot deviation gains where the
//! deviator keeps bookkeeping with a drawn prescribed action.

use crate::automaton::PrivateStrategyAutomaton;
use crate::error::{Error, Result};
use crate::game::{all_profiles, num_profiles, profile_rank, profile_unrank, StageGame};
use crate::repeated::{solve_dense, OneShotGain, REACH_TOL, VALUE_RESIDUAL_TOL};
use crate::signal::{MonitoringKind, SignalStructure};

/// Guard on the product automaton state space.
pub const JOINT_STATE_GUARD: usize = 4_096;

/// Guard on per-state branching (action profiles times signal outcomes).
pub const JOINT_BRANCH_GUARD: usize = 1_000_000;

pub(crate) struct JointAutomata<'a> {
    pub game: &'a StageGame,
    pub sig: &'a SignalStructure,
    pub autos: &'a [PrivateStrategyAutomaton],
    state_sizes: Vec<usize>,
}

impl<'a> JointAutomata<'a> {
    pub fn new(
        game: &'a StageGame,
        sig: &'a SignalStructure,
        autos: &'a [PrivateStrategyAutomaton],
    ) -> Result<Self> {
        if autos.len() != game.num_players() {
            return Err(Error::DimensionMismatch(
                "one automaton per player required".into(),
            ));
        }
        if sig.action_sizes() != game.action_sizes().as_slice() {
            return Err(Error::DimensionMismatch(
                "signal structure shape differs from game".into(),
            ));
        }
        for (i, auto) in autos.iter().enumerate() {
            auto.check_against(game, sig, i)?;
        }
        let state_sizes: Vec<usize> = autos.iter().map(|a| a.num_states()).collect();
        let joint = num_profiles(&state_sizes);
        if joint > JOINT_STATE_GUARD {
            return Err(Error::GuardViolation(format!(
                "joint state space {joint} exceeds guard {JOINT_STATE_GUARD}"
            )));
        }
        let branching = num_profiles(&game.action_sizes()) * sig.num_outcomes();
        if branching > JOINT_BRANCH_GUARD {
            return Err(Error::GuardViolation(format!(
                "per-state branching {branching} exceeds guard {JOINT_BRANCH_GUARD}"
            )));
        }
        Ok(Self {
            game,
            sig,
            autos,
            state_sizes,
        })
    }

    pub fn num_joint_states(&self) -> usize {
        num_profiles(&self.state_sizes)
    }

    pub fn initial_rank(&self) -> usize {
        let initial: Vec<usize> = self.autos.iter().map(|a| a.initial()).collect();
        profile_rank(&self.state_sizes, &initial)
    }

    pub fn unrank(&self, rank: usize) -> Vec<usize> {
        profile_unrank(&self.state_sizes, rank)
    }

    pub fn rank(&self, joint: &[usize]) -> usize {
        profile_rank(&self.state_sizes, joint)
    }

    /// Successor joint state when `bookkeeping` actions are recorded and the
    /// monitoring outcome is `outcome` (a public signal index or a joint
    /// signal rank, per the structure's kind).
    pub fn next_state(&self, joint: &[usize], bookkeeping: &[usize], outcome: usize) -> Vec<usize> {
        match self.sig.kind() {
            MonitoringKind::Public => joint
                .iter()
                .zip(self.autos)
                .zip(bookkeeping)
                .map(|((&w, auto), &a)| auto.transition(w, a, outcome))
                .collect(),
            MonitoringKind::Private => {
                let tuple = self.sig.joint_unrank(outcome);
                joint
                    .iter()
                    .zip(self.autos)
                    .zip(bookkeeping)
                    .zip(&tuple)
                    .map(|(((&w, auto), &a), &s)| auto.transition(w, a, s))
                    .collect()
            }
        }
    }

    fn action_weight(&self, joint: &[usize], actions: &[usize]) -> f64 {
        joint
            .iter()
            .zip(self.autos)
            .zip(actions)
            .map(|((&w, auto), &a)| auto.decision(w)[a])
            .product()
    }

    /// Direct solve of the joint-state value recursion.
    pub fn solve_values(&self, delta: f64) -> Result<Vec<Vec<f64>>> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "delta {delta} must lie in [0, 1)"
            )));
        }
        let states = self.num_joint_states();
        let n = self.game.num_players();
        let action_sizes = self.game.action_sizes();
        let mut a_mat = vec![vec![0.0; states]; states];
        let mut rhs = vec![vec![0.0; states]; n];
        for w_rank in 0..states {
            let joint = self.unrank(w_rank);
            a_mat[w_rank][w_rank] += 1.0;
            for actions in all_profiles(&action_sizes) {
                let weight = self.action_weight(&joint, &actions);
                if weight == 0.0 {
                    continue;
                }
                for (i, r) in rhs.iter_mut().enumerate() {
                    r[w_rank] += (1.0 - delta) * weight * self.game.payoff(&actions, i);
                }
                let row = self.sig.row_for_profile(&actions);
                for (outcome, &p) in row.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let next = self.next_state(&joint, &actions, outcome);
                    a_mat[w_rank][self.rank(&next)] -= delta * weight * p;
                }
            }
        }
        let solved = solve_dense(&a_mat, &rhs)?;
        let mut values = vec![vec![0.0; n]; states];
        for (i, per_state) in solved.iter().enumerate() {
            for (w, &v) in per_state.iter().enumerate() {
                values[w][i] = v;
            }
        }
        self.check_residual(delta, &values)?;
        Ok(values)
    }

    fn check_residual(&self, delta: f64, values: &[Vec<f64>]) -> Result<()> {
        let action_sizes = self.game.action_sizes();
        let mut residual: f64 = 0.0;
        for (w_rank, per_player) in values.iter().enumerate() {
            let joint = self.unrank(w_rank);
            let mut expect = vec![0.0; per_player.len()];
            for actions in all_profiles(&action_sizes) {
                let weight = self.action_weight(&joint, &actions);
                if weight == 0.0 {
                    continue;
                }
                let row = self.sig.row_for_profile(&actions);
                let mut cont = vec![0.0; per_player.len()];
                for (outcome, &p) in row.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let next_rank = self.rank(&self.next_state(&joint, &actions, outcome));
                    for (i, c) in cont.iter_mut().enumerate() {
                        *c += p * values[next_rank][i];
                    }
                }
                for (i, e) in expect.iter_mut().enumerate() {
                    *e += weight
                        * ((1.0 - delta) * self.game.payoff(&actions, i) + delta * cont[i]);
                }
            }
            for (i, &v) in per_player.iter().enumerate() {
                residual = residual.max((v - expect[i]).abs());
            }
        }
        if residual > VALUE_RESIDUAL_TOL {
            return Err(Error::Numerical(format!(
                "joint value residual {residual} exceeds {VALUE_RESIDUAL_TOL}"
            )));
        }
        Ok(())
    }

    /// Joint states reachable under prescribed play.
    pub fn reachable(&self) -> Vec<usize> {
        let states = self.num_joint_states();
        let action_sizes = self.game.action_sizes();
        let mut seen = vec![false; states];
        let start = self.initial_rank();
        seen[start] = true;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(w_rank) = queue.pop_front() {
            let joint = self.unrank(w_rank);
            for actions in all_profiles(&action_sizes) {
                let weight = self.action_weight(&joint, &actions);
                if weight <= REACH_TOL {
                    continue;
                }
                let row = self.sig.row_for_profile(&actions);
                for (outcome, &p) in row.iter().enumerate() {
                    if p <= REACH_TOL {
                        continue;
                    }
                    let next = self.rank(&self.next_state(&joint, &actions, outcome));
                    if !seen[next] {
                        seen[next] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
        (0..states).filter(|&w| seen[w]).collect()
    }

    /// One-shot deviation gain of `player` at a reachable joint state: play
    /// `action` once while recording a drawn prescribed action, then follow
    /// the automaton.
    pub fn deviation_gain_at(
        &self,
        delta: f64,
        values: &[Vec<f64>],
        joint: &[usize],
        player: usize,
        action: usize,
    ) -> f64 {
        let action_sizes = self.game.action_sizes();
        let mut gain = 0.0;
        for book in all_profiles(&action_sizes) {
            let weight = self.action_weight(joint, &book);
            if weight == 0.0 {
                continue;
            }
            let mut dev_profile = book.clone();
            dev_profile[player] = action;
            let stage_diff =
                self.game.payoff(&dev_profile, player) - self.game.payoff(&book, player);
            let base_row = self.sig.row_for_profile(&book);
            let dev_row = self.sig.row_for_profile(&dev_profile);
            let mut cont_diff = 0.0;
            for outcome in 0..base_row.len() {
                let dp = dev_row[outcome] - base_row[outcome];
                if dp == 0.0 {
                    continue;
                }
                let next = self.rank(&self.next_state(joint, &book, outcome));
                cont_diff += dp * values[next][player];
            }
            gain += weight * ((1.0 - delta) * stage_diff + delta * cont_diff);
        }
        gain
    }

    /// Maximum one-shot deviation gain over players, reachable joint states,
    /// and pure actions.
    pub fn one_shot_gain(&self, delta: f64) -> Result<OneShotGain> {
        let values = self.solve_values(delta)?;
        let mut xi = 0.0;
        let mut witness = None;
        for w_rank in self.reachable() {
            let joint = self.unrank(w_rank);
            for player in 0..self.game.num_players() {
                for action in 0..self.game.num_actions(player) {
                    let g = self.deviation_gain_at(delta, &values, &joint, player, action);
                    if g > xi {
                        xi = g;
                        witness = Some((player, w_rank, action));
                    }
                }
            }
        }
        Ok(OneShotGain { xi, witness })
    }
}
