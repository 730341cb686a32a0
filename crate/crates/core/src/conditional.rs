//! Conditional play distributions over public signal histories, and the
//! per-history stage-equilibrium check for private strategies under public
//! monitoring.
//!
//! A player's day-t action may depend on past own actions the others never
//! saw. Conditioned on the public history alone, the induced action
//! distribution is the history-weighted mixture of the player's decision
//! rule; the filter below computes it exactly by propagating the joint
//! automaton-state posterior.

use num_rational::BigRational;

use crate::automaton::PrivateStrategyAutomaton;
use crate::error::{Error, Result};
use crate::game::{
    all_profiles, nash_regret, num_profiles, profile_rank, profile_unrank, MixedAction,
    MixedProfile, StageGame,
};
use crate::joint::JointAutomata;
use crate::numeric::{rational_from_f64, Scalar};
use crate::privacy::PrivacyCurve;
use crate::repeated::{eta_from_curve, BoundCheck, RegretReport, StateVerdict, XiMode, PASS_TOL};
use crate::signal::SignalStructure;

/// Horizon cap for exhaustive public-history enumeration.
pub const PUBLIC_HORIZON_GUARD: usize = 8;

/// Cap on the number of enumerated histories.
pub const HISTORY_GUARD: usize = 10_000_000;

/// Everything the conditional-play filter needs, with probabilities in a
/// caller-chosen scalar type (`f64` or exact rationals).
pub struct PublicFilter<S> {
    action_sizes: Vec<usize>,
    state_sizes: Vec<usize>,
    num_signals: usize,
    /// `dist[profile_rank][signal]`
    dist: Vec<Vec<S>>,
    /// `decisions[player][state][action]`
    decisions: Vec<Vec<Vec<S>>>,
    /// `transitions[player][state][action][signal] -> state`
    transitions: Vec<Vec<Vec<Vec<usize>>>>,
    initial: Vec<usize>,
}

impl PublicFilter<f64> {
    pub fn new(sig: &SignalStructure, autos: &[PrivateStrategyAutomaton]) -> Result<Self> {
        if !sig.is_public() {
            return Err(Error::IncompatibleMonitoring(
                "conditional play requires public monitoring".into(),
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

    /// Exact-rational view of the same filter: stored doubles are read as
    /// exact dyadic rationals.
    pub fn to_exact(&self) -> PublicFilter<BigRational> {
        PublicFilter {
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

impl<S: Scalar> PublicFilter<S> {
    pub fn num_players(&self) -> usize {
        self.action_sizes.len()
    }

    fn num_joint_states(&self) -> usize {
        num_profiles(&self.state_sizes)
    }

    /// Point mass on the initial joint state.
    pub fn initial_dist(&self) -> Vec<S> {
        let mut rho = vec![S::zero(); self.num_joint_states()];
        rho[profile_rank(&self.state_sizes, &self.initial)] = S::one();
        rho
    }

    /// One filter step: weight by the likelihood of the observed public
    /// signal and advance every player's automaton state. The result stays
    /// unnormalized (its sum is the running history probability).
    pub fn advance(&self, rho: &[S], signal: usize) -> Vec<S> {
        let mut next = vec![S::zero(); self.num_joint_states()];
        for (w_rank, weight) in rho.iter().enumerate() {
            if weight.is_zero() {
                continue;
            }
            let joint = profile_unrank(&self.state_sizes, w_rank);
            for actions in all_profiles(&self.action_sizes) {
                let mut w = weight.clone();
                for (j, &a) in actions.iter().enumerate() {
                    w = w * self.decisions[j][joint[j]][a].clone();
                }
                if w.is_zero() {
                    continue;
                }
                let p = self.dist[profile_rank(&self.action_sizes, &actions)][signal].clone();
                if p.is_zero() {
                    continue;
                }
                let advanced: Vec<usize> = joint
                    .iter()
                    .enumerate()
                    .map(|(j, &wj)| self.transitions[j][wj][actions[j]][signal])
                    .collect();
                let rank = profile_rank(&self.state_sizes, &advanced);
                next[rank] = next[rank].clone() + w * p;
            }
        }
        next
    }

    pub fn mass(&self, rho: &[S]) -> S {
        rho.iter().fold(S::zero(), |acc, v| acc + v.clone())
    }

    /// The conditional play distribution of `player` given the filter state:
    /// the posterior-weighted mixture of the decision rule. `None` when the
    /// conditioning history has zero probability.
    pub fn sigma_hat(&self, rho: &[S], player: usize) -> Option<Vec<S>> {
        let total = self.mass(rho);
        if total.is_zero() {
            return None;
        }
        let mut out = vec![S::zero(); self.action_sizes[player]];
        for (w_rank, weight) in rho.iter().enumerate() {
            if weight.is_zero() {
                continue;
            }
            let joint = profile_unrank(&self.state_sizes, w_rank);
            for (a, o) in out.iter_mut().enumerate() {
                *o = o.clone() + weight.clone() * self.decisions[player][joint[player]][a].clone();
            }
        }
        Some(out.into_iter().map(|v| v / total.clone()).collect())
    }

    /// Filter state after a fixed public signal history.
    pub fn run(&self, history: &[usize]) -> Result<Vec<S>> {
        if history.len() > PUBLIC_HORIZON_GUARD {
            return Err(Error::GuardViolation(format!(
                "history length {} exceeds horizon guard {PUBLIC_HORIZON_GUARD}",
                history.len()
            )));
        }
        let mut rho = self.initial_dist();
        for &s in history {
            if s >= self.num_signals {
                return Err(Error::DimensionMismatch(format!("signal {s} out of range")));
            }
            rho = self.advance(&rho, s);
        }
        Ok(rho)
    }

    /// Independent recomputation of the conditional play distribution by
    /// brute-force enumeration of every player's action path against the
    /// observed public history, marginalized per player exactly as the
    /// product decomposition of the history posterior prescribes.
    pub fn sigma_hat_by_path_enumeration(
        &self,
        history: &[usize],
        player: usize,
    ) -> Option<Vec<S>> {
        let t = history.len();
        let path_counts: Vec<usize> = self
            .action_sizes
            .iter()
            .map(|&k| k.pow(t as u32))
            .collect();
        let mut out = vec![S::zero(); self.action_sizes[player]];
        let mut total = S::zero();
        for joint_paths in all_profiles(&path_counts) {
            let paths: Vec<Vec<usize>> = joint_paths
                .iter()
                .enumerate()
                .map(|(j, &rank)| {
                    let sizes = vec![self.action_sizes[j]; t];
                    profile_unrank(&sizes, rank)
                })
                .collect();
            let mut weight = S::one();
            let mut states = self.initial.clone();
            for period in 0..t {
                let actions: Vec<usize> = paths.iter().map(|p| p[period]).collect();
                for (j, &a) in actions.iter().enumerate() {
                    weight = weight * self.decisions[j][states[j]][a].clone();
                }
                weight = weight
                    * self.dist[profile_rank(&self.action_sizes, &actions)][history[period]]
                        .clone();
                if weight.is_zero() {
                    break;
                }
                for (j, s) in states.iter_mut().enumerate() {
                    *s = self.transitions[j][*s][actions[j]][history[period]];
                }
            }
            if weight.is_zero() {
                continue;
            }
            total = total + weight.clone();
            for (a, o) in out.iter_mut().enumerate() {
                *o = o.clone() + weight.clone() * self.decisions[player][states[player]][a].clone();
            }
        }
        if total.is_zero() {
            return None;
        }
        Some(out.into_iter().map(|v| v / total.clone()).collect())
    }
}

/// The per-player conditional play distributions after a public signal
/// history (day `history.len()`).
pub fn conditional_play_distribution(
    sig: &SignalStructure,
    autos: &[PrivateStrategyAutomaton],
    history: &[usize],
) -> Result<Vec<MixedAction>> {
    let filter = PublicFilter::new(sig, autos)?;
    let rho = filter.run(history)?;
    (0..filter.num_players())
        .map(|i| {
            filter.sigma_hat(&rho, i).ok_or_else(|| {
                Error::ZeroProbability(format!(
                    "public history {history:?} has probability zero"
                ))
            })
        })
        .collect()
}

/// Per-history stage-equilibrium check of private strategies under public
/// monitoring: at every positive-probability public history up to the
/// horizon, the profile of conditional play distributions must be an
/// approximate stage Nash equilibrium within `eta + xi_+ / (1 - delta)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_conditional_play(
    instance: impl Into<String>,
    game: &StageGame,
    sig: &SignalStructure,
    autos: &[PrivateStrategyAutomaton],
    delta: f64,
    curve: &PrivacyCurve,
    horizon: usize,
    xi_mode: XiMode,
) -> Result<RegretReport> {
    if !sig.is_public() {
        return Err(Error::IncompatibleMonitoring(
            "conditional-play check requires public monitoring".into(),
        ));
    }
    if sig.action_sizes() != game.action_sizes().as_slice() {
        return Err(Error::DimensionMismatch(
            "signal structure shape differs from game".into(),
        ));
    }
    if horizon > PUBLIC_HORIZON_GUARD {
        return Err(Error::GuardViolation(format!(
            "horizon {horizon} exceeds guard {PUBLIC_HORIZON_GUARD}"
        )));
    }
    let support = sig.check_full_support();
    if !support.ok {
        return Err(Error::ZeroProbability(format!(
            "structure admits observable deviations (witness {:?}); conditioning \
             on every public history is undefined",
            support.witness
        )));
    }
    let m = sig.num_signals();
    let mut histories: usize = 0;
    let mut pow = 1usize;
    for _ in 0..=horizon {
        histories = histories.saturating_add(pow);
        pow = pow.saturating_mul(m);
    }
    if histories > HISTORY_GUARD {
        return Err(Error::GuardViolation(format!(
            "{histories} public histories exceed guard {HISTORY_GUARD}"
        )));
    }

    let filter = PublicFilter::new(sig, autos)?;
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
    // Depth-first enumeration of positive-probability public histories.
    let mut stack: Vec<(Vec<usize>, Vec<f64>)> = vec![(Vec::new(), filter.initial_dist())];
    while let Some((history, rho)) = stack.pop() {
        let mixes: Vec<MixedAction> = (0..filter.num_players())
            .map(|i| filter.sigma_hat(&rho, i).expect("positive-probability history"))
            .collect();
        let profile = MixedProfile::new(mixes)?;
        let regret = nash_regret(game, &profile)?;
        let pass = regret.max_regret <= bound + PASS_TOL;
        verdict &= pass;
        per_state.push(StateVerdict {
            state: format!(
                "[{}]",
                history
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ),
            regret: regret.max_regret,
            bound,
            pass,
            deviation: None,
        });
        if history.len() < horizon {
            // Push signals in reverse so the stack pops them in order.
            for s in (0..m).rev() {
                let next = filter.advance(&rho, s);
                if filter.mass(&next) > 0.0 {
                    let mut h = history.clone();
                    h.push(s);
                    stack.push((h, next));
                }
            }
        }
    }
    Ok(RegretReport {
        instance: instance.into(),
        check: BoundCheck::ConditionalPlay,
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::{default_eps_grid, PrivacyCurve};
    use crate::signal::{MonitoringKind, SignalDist};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_pd_signals() -> SignalStructure {
        // Full-support two-signal structure reacting to cooperation counts.
        let rows = vec![
            vec![0.8, 0.2],
            vec![0.5, 0.5],
            vec![0.5, 0.5],
            vec![0.2, 0.8],
        ];
        SignalStructure::new(
            MonitoringKind::Public,
            vec![2, 2],
            vec!["calm".into(), "spike".into()],
            SignalDist::PerProfile(rows),
            None,
        )
        .unwrap()
    }

    pub(crate) fn random_private_autos(
        rng: &mut ChaCha8Rng,
        action_sizes: &[usize],
        num_signals: usize,
        states: usize,
    ) -> Vec<PrivateStrategyAutomaton> {
        action_sizes
            .iter()
            .map(|&k| {
                let decisions: Vec<Vec<f64>> = (0..states)
                    .map(|_| {
                        let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.05).collect();
                        let s: f64 = raw.iter().sum();
                        raw.iter().map(|v| v / s).collect()
                    })
                    .collect();
                let transitions = (0..states)
                    .map(|_| {
                        (0..k)
                            .map(|_| {
                                (0..num_signals).map(|_| rng.gen_range(0..states)).collect()
                            })
                            .collect()
                    })
                    .collect();
                PrivateStrategyAutomaton::new(0, decisions, transitions).unwrap()
            })
            .collect()
    }

    #[test]
    fn public_strategies_collapse_to_automaton_decision() {
        let game = crate::game::tests::prisoners_dilemma();
        let sig = noisy_pd_signals();
        let coop = MixedProfile::pure(&game, &[0, 0]).unwrap();
        let punish = MixedProfile::pure(&game, &[1, 1]).unwrap();
        let public = crate::automaton::PublicStrategyAutomaton::new(
            0,
            vec![coop, punish],
            vec![vec![0, 1], vec![1, 1]],
        )
        .unwrap();
        let autos: Vec<PrivateStrategyAutomaton> = (0..2)
            .map(|i| PrivateStrategyAutomaton::from_public(&public, i))
            .collect();
        for history in [vec![], vec![0], vec![1, 0], vec![0, 1, 1]] {
            let got = conditional_play_distribution(&sig, &autos, &history).unwrap();
            // Oracle: replay the public automaton on the history.
            let mut w = public.initial();
            for &s in &history {
                w = public.transition(w, s);
            }
            for i in 0..2 {
                for a in 0..2 {
                    assert!((got[i][a] - public.decision(w).mix(i)[a]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn empty_history_returns_initial_decision() {
        let sig = noisy_pd_signals();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let autos = random_private_autos(&mut rng, &[2, 2], 2, 3);
        let got = conditional_play_distribution(&sig, &autos, &[]).unwrap();
        for (i, auto) in autos.iter().enumerate() {
            for a in 0..2 {
                assert!((got[i][a] - auto.decision(auto.initial())[a]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn filter_matches_monte_carlo_oracle() {
        let sig = noisy_pd_signals();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let autos = random_private_autos(&mut rng, &[2, 2], 2, 2);
        let history = vec![0, 1, 0];
        let got = conditional_play_distribution(&sig, &autos, &history).unwrap();

        // Monte Carlo oracle: roll out day by day, keep runs whose public
        // signals match, and tally day-3 action draws.
        let mut counts = vec![vec![0u64; 2]; 2];
        let mut kept = 0u64;
        let rows: Vec<Vec<f64>> = all_profiles(&[2, 2])
            .map(|p| sig.row_for_profile(&p).to_vec())
            .collect();
        for _ in 0..1_000_000 {
            let mut states = [0usize; 2];
            let mut ok = true;
            for &s_obs in &history {
                let actions: Vec<usize> = (0..2)
                    .map(|j| {
                        let d = autos[j].decision(states[j]);
                        usize::from(rng.gen::<f64>() >= d[0])
                    })
                    .collect();
                let row = &rows[profile_rank(&[2, 2], &actions)];
                let s = usize::from(rng.gen::<f64>() >= row[0]);
                if s != s_obs {
                    ok = false;
                    break;
                }
                for j in 0..2 {
                    states[j] = autos[j].transition(states[j], actions[j], s);
                }
            }
            if !ok {
                continue;
            }
            kept += 1;
            for j in 0..2 {
                let d = autos[j].decision(states[j]);
                let a = usize::from(rng.gen::<f64>() >= d[0]);
                counts[j][a] += 1;
            }
        }
        assert!(kept > 10_000);
        for j in 0..2 {
            let tv: f64 = (0..2)
                .map(|a| (counts[j][a] as f64 / kept as f64 - got[j][a]).abs())
                .sum::<f64>()
                / 2.0;
            assert!(tv <= 3e-3, "player {j} total variation {tv}");
        }
    }

    #[test]
    fn path_enumeration_recomputation_agrees_exactly() {
        let sig = noisy_pd_signals();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..5 {
            let autos = random_private_autos(&mut rng, &[2, 2], 2, 2);
            let filter = PublicFilter::new(&sig, &autos).unwrap().to_exact();
            for history in [vec![0], vec![0, 1], vec![1, 1, 0]] {
                let rho = filter.run(&history).unwrap();
                for player in 0..2 {
                    let a = filter.sigma_hat(&rho, player).unwrap();
                    let b = filter
                        .sigma_hat_by_path_enumeration(&history, player)
                        .unwrap();
                    assert_eq!(a, b, "exact disagreement at {history:?}");
                }
            }
        }
    }

    #[test]
    fn stage_nash_with_private_bookkeeping_passes() {
        // Matching pennies where each player tracks a private parity of own
        // actions; play is the stage Nash everywhere, so regrets vanish.
        let game = crate::game::tests::two_player(
            2,
            2,
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 1.0, 1.0, 0.0],
        );
        let sig = noisy_pd_signals();
        let autos: Vec<PrivateStrategyAutomaton> = (0..2)
            .map(|_| {
                PrivateStrategyAutomaton::new(
                    0,
                    vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                    // Parity flips on own action 1, regardless of signal.
                    vec![
                        vec![vec![0, 0], vec![1, 1]],
                        vec![vec![1, 1], vec![0, 0]],
                    ],
                )
                .unwrap()
            })
            .collect();
        let curve = PrivacyCurve::exact("noisy", &sig, &default_eps_grid()).unwrap();
        let report = verify_conditional_play(
            "pennies-bookkeeping",
            &game,
            &sig,
            &autos,
            0.6,
            &curve,
            4,
            XiMode::Measured,
        )
        .unwrap();
        assert!(report.verdict);
        for s in &report.per_state {
            assert!(s.regret < 1e-12);
        }
        assert!(report.xi_measured.unwrap() < 1e-12);
    }

    #[test]
    fn support_violation_is_rejected() {
        let game = crate::game::tests::prisoners_dilemma();
        let sig = SignalStructure::perfect_monitoring(vec![2, 2]).unwrap();
        let autos: Vec<PrivateStrategyAutomaton> = {
            let coop = MixedProfile::pure(&game, &[0, 0]).unwrap();
            let public = crate::automaton::PublicStrategyAutomaton::new(
                0,
                vec![coop],
                vec![vec![0; 4]],
            )
            .unwrap();
            (0..2)
                .map(|i| PrivateStrategyAutomaton::from_public(&public, i))
                .collect()
        };
        let curve = PrivacyCurve::exact("pm", &sig, &default_eps_grid()).unwrap();
        let err = verify_conditional_play(
            "pm", &game, &sig, &autos, 0.5, &curve, 2, XiMode::Measured,
        );
        assert!(matches!(err, Err(Error::ZeroProbability(_))));
    }
}
