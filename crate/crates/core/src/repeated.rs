//! Continuation values, reachability, one-shot deviation analysis, and the
//! per-period regret bound checks for public-monitoring strategy automata.

use serde::Serialize;

use crate::automaton::PublicStrategyAutomaton;
use crate::error::{Error, Result};
use crate::game::{nash_regret, AffineRescale, MixedProfile, StageGame};
use crate::privacy::{PrivacyCurve, PrivacyParams};
use crate::signal::SignalStructure;

/// Verdict tolerance: a state passes iff `regret <= bound + PASS_TOL`.
pub const PASS_TOL: f64 = 1e-9;

/// Residual contract of the value solver.
pub const VALUE_RESIDUAL_TOL: f64 = 1e-10;

/// Reachability threshold on signal probabilities.
pub const REACH_TOL: f64 = 1e-12;

/// The per-period stage-regret bound implied by a privacy guarantee:
/// `eta = delta / (1 - delta) * (eps + gamma)`.
pub fn anti_folk_bound(delta: f64, params: &PrivacyParams) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in [0, 1)"
        )));
    }
    Ok(delta / (1.0 - delta) * (params.eps + params.gamma))
}

// ---------------------------------------------------------------------------
// Linear solve
// ---------------------------------------------------------------------------

/// Solves `A x = b` for several right-hand sides by Gaussian elimination with
/// partial pivoting. Sizes here are automaton state counts, so a dense direct
/// solve is exact enough and dependency-free.
pub(crate) fn solve_dense(a: &[Vec<f64>], rhs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let m = rhs.len();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row = a[r].clone();
            row.extend(rhs.iter().map(|b| b[r]));
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        if aug[pivot][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular value system".into()));
        }
        aug.swap(col, pivot);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[r][col] / aug[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n + m {
                let v = aug[col][c];
                aug[r][c] -= f * v;
            }
        }
    }
    Ok((0..m)
        .map(|b| (0..n).map(|r| aug[r][n + b] / aug[r][r]).collect())
        .collect())
}

// ---------------------------------------------------------------------------
// Continuation values
// ---------------------------------------------------------------------------

/// Normalized continuation values of a public automaton, one per player and
/// state: `V_i(w) = (1-delta) u_i(d(w)) + delta sum_s P_{d(w)}(s) V_i(tau(w,s))`.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub delta: f64,
    /// `values[state][player]`
    pub values: Vec<Vec<f64>>,
    /// Worst recursion residual across states and players.
    pub residual: f64,
}

impl ValueTable {
    pub fn value(&self, state: usize, player: usize) -> f64 {
        self.values[state][player]
    }
}

/// Per-state data shared by the value solver and the deviation analysis.
pub(crate) struct StagePlan {
    /// Expected stage payoffs of the prescribed profile.
    pub stage_payoffs: Vec<Vec<f64>>,
    /// Signal distribution of the prescribed profile.
    pub signal_dists: Vec<Vec<f64>>,
}

pub(crate) fn stage_plan(
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
) -> Result<StagePlan> {
    let mut stage_payoffs = Vec::with_capacity(auto.num_states());
    let mut signal_dists = Vec::with_capacity(auto.num_states());
    for w in 0..auto.num_states() {
        stage_payoffs.push(crate::game::expected_payoff(game, auto.decision(w))?);
        signal_dists.push(sig.dist_under_mixed(auto.decision(w))?);
    }
    Ok(StagePlan {
        stage_payoffs,
        signal_dists,
    })
}

/// Direct linear solve of the public-strategy value recursion.
pub fn solve_values_public(
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    delta: f64,
) -> Result<ValueTable> {
    require_public(sig)?;
    auto.check_against(game, sig)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in [0, 1)"
        )));
    }
    let plan = stage_plan(game, sig, auto)?;
    solve_values_with_plan(game, auto, delta, &plan)
}

pub(crate) fn solve_values_with_plan(
    game: &StageGame,
    auto: &PublicStrategyAutomaton,
    delta: f64,
    plan: &StagePlan,
) -> Result<ValueTable> {
    let states = auto.num_states();
    let n = game.num_players();
    // (I - delta M) V_i = (1 - delta) u_i with one shared matrix.
    let mut a = vec![vec![0.0; states]; states];
    for (w, row) in a.iter_mut().enumerate() {
        row[w] += 1.0;
        for (s, &p) in plan.signal_dists[w].iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            row[auto.transition(w, s)] -= delta * p;
        }
    }
    let rhs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..states)
                .map(|w| (1.0 - delta) * plan.stage_payoffs[w][i])
                .collect()
        })
        .collect();
    let solved = solve_dense(&a, &rhs)?;
    let mut values = vec![vec![0.0; n]; states];
    for (i, per_state) in solved.iter().enumerate() {
        for (w, &v) in per_state.iter().enumerate() {
            values[w][i] = v;
        }
    }
    // Residual of the defining recursion.
    let mut residual: f64 = 0.0;
    for w in 0..states {
        for i in 0..n {
            let mut cont = 0.0;
            for (s, &p) in plan.signal_dists[w].iter().enumerate() {
                cont += p * values[auto.transition(w, s)][i];
            }
            let rhs = (1.0 - delta) * plan.stage_payoffs[w][i] + delta * cont;
            residual = residual.max((values[w][i] - rhs).abs());
        }
    }
    if residual > VALUE_RESIDUAL_TOL {
        return Err(Error::Numerical(format!(
            "value recursion residual {residual} exceeds {VALUE_RESIDUAL_TOL}"
        )));
    }
    Ok(ValueTable {
        delta,
        values,
        residual,
    })
}

fn require_public(sig: &SignalStructure) -> Result<()> {
    if !sig.is_public() {
        return Err(Error::IncompatibleMonitoring(
            "operation requires public monitoring".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Reachability
// ---------------------------------------------------------------------------

/// One automaton state reachable under prescribed play.
#[derive(Debug, Clone, Serialize)]
pub struct ReachableState {
    pub state: usize,
    /// Periods elapsed along the breadth-first witness path.
    pub depth: usize,
    /// Probability of the witness signal path.
    pub path_prob: f64,
    /// Signals realizing the witness path.
    pub path_signals: Vec<usize>,
    /// Whether the state is occupied in the long run (lies in a terminal
    /// communicating class of the induced chain).
    pub recurrent: bool,
}

/// Breadth-first closure from the initial state through signals of
/// probability above [`REACH_TOL`] under the prescribed play.
pub fn reachable_states(
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
) -> Result<Vec<ReachableState>> {
    require_public(sig)?;
    auto.check_against(game, sig)?;
    let plan = stage_plan(game, sig, auto)?;
    Ok(reachable_with_plan(auto, &plan))
}

pub(crate) fn reachable_with_plan(
    auto: &PublicStrategyAutomaton,
    plan: &StagePlan,
) -> Vec<ReachableState> {
    let states = auto.num_states();
    let mut seen = vec![false; states];
    let mut info: Vec<Option<(usize, f64, Vec<usize>)>> = vec![None; states];
    let mut queue = std::collections::VecDeque::new();
    seen[auto.initial()] = true;
    info[auto.initial()] = Some((0, 1.0, Vec::new()));
    queue.push_back(auto.initial());
    while let Some(w) = queue.pop_front() {
        let (depth, prob, path) = info[w].clone().unwrap();
        for (s, &p) in plan.signal_dists[w].iter().enumerate() {
            if p <= REACH_TOL {
                continue;
            }
            let next = auto.transition(w, s);
            if !seen[next] {
                seen[next] = true;
                let mut next_path = path.clone();
                next_path.push(s);
                info[next] = Some((depth + 1, prob * p, next_path));
                queue.push_back(next);
            }
        }
    }
    // Terminal communicating classes: states from which every reachable
    // successor can reach back.
    let mut adj = vec![Vec::new(); states];
    for w in 0..states {
        if !seen[w] {
            continue;
        }
        for (s, &p) in plan.signal_dists[w].iter().enumerate() {
            if p > REACH_TOL {
                adj[w].push(auto.transition(w, s));
            }
        }
    }
    let reach_from = |start: usize| -> Vec<bool> {
        let mut r = vec![false; states];
        let mut stack = vec![start];
        r[start] = true;
        while let Some(w) = stack.pop() {
            for &next in &adj[w] {
                if !r[next] {
                    r[next] = true;
                    stack.push(next);
                }
            }
        }
        r
    };
    let closures: Vec<Option<Vec<bool>>> = (0..states)
        .map(|w| if seen[w] { Some(reach_from(w)) } else { None })
        .collect();
    let mut out = Vec::new();
    for w in 0..states {
        if !seen[w] {
            continue;
        }
        let fwd = closures[w].as_ref().unwrap();
        let recurrent = (0..states)
            .filter(|&v| fwd[v])
            .all(|v| closures[v].as_ref().map(|c| c[w]).unwrap_or(false));
        let (depth, path_prob, path_signals) = info[w].clone().unwrap();
        out.push(ReachableState {
            state: w,
            depth,
            path_prob,
            path_signals,
            recurrent,
        });
    }
    out.sort_by_key(|r| r.state);
    out
}

// ---------------------------------------------------------------------------
// One-shot deviations
// ---------------------------------------------------------------------------

/// Maximum one-period deviation gain and where it is attained.
#[derive(Debug, Clone, Serialize)]
pub struct OneShotGain {
    /// `max(0, best gain)`; the prescribed action always achieves 0.
    pub xi: f64,
    /// `(player, state, action)` attaining the maximum, if positive.
    pub witness: Option<(usize, usize, usize)>,
}

/// Gain of player `i` from deviating to pure `action` at state `w` for one
/// period and then reverting to the automaton.
pub(crate) fn deviation_gain_at(
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    values: &ValueTable,
    plan: &StagePlan,
    player: usize,
    state: usize,
    action: usize,
) -> Result<f64> {
    let delta = values.delta;
    let prescribed = auto.decision(state);
    let on_payoff = plan.stage_payoffs[state][player];
    let mut on_cont = 0.0;
    for (s, &p) in plan.signal_dists[state].iter().enumerate() {
        on_cont += p * values.value(auto.transition(state, s), player);
    }
    let dev_payoff = crate::game::unilateral_payoff(game, prescribed, player, action)?;
    let mut mixes = prescribed.mixes().to_vec();
    let mut pure = vec![0.0; game.num_actions(player)];
    pure[action] = 1.0;
    mixes[player] = pure;
    let dev_profile = MixedProfile::new(mixes)?;
    let dev_dist = sig.dist_under_mixed(&dev_profile)?;
    let mut dev_cont = 0.0;
    for (s, &p) in dev_dist.iter().enumerate() {
        dev_cont += p * values.value(auto.transition(state, s), player);
    }
    Ok((1.0 - delta) * (dev_payoff - on_payoff) + delta * (dev_cont - on_cont))
}

/// Maximum one-shot deviation gain over players, reachable states, and pure
/// actions. Zero within tolerance certifies the automaton as an equilibrium
/// of the repeated game (one-shot deviation principle).
pub fn one_shot_deviation_gain(
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    delta: f64,
) -> Result<OneShotGain> {
    require_public(sig)?;
    auto.check_against(game, sig)?;
    let plan = stage_plan(game, sig, auto)?;
    let values = solve_values_with_plan(game, auto, delta, &plan)?;
    let reach = reachable_with_plan(auto, &plan);
    one_shot_gain_with(game, sig, auto, &values, &plan, &reach)
}

pub(crate) fn one_shot_gain_with(
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    values: &ValueTable,
    plan: &StagePlan,
    reach: &[ReachableState],
) -> Result<OneShotGain> {
    let mut xi = 0.0;
    let mut witness = None;
    for r in reach {
        for player in 0..game.num_players() {
            for action in 0..game.num_actions(player) {
                let gain =
                    deviation_gain_at(game, sig, auto, values, plan, player, r.state, action)?;
                if gain > xi {
                    xi = gain;
                    witness = Some((player, r.state, action));
                }
            }
        }
    }
    Ok(OneShotGain { xi, witness })
}

// ---------------------------------------------------------------------------
// Regret reports
// ---------------------------------------------------------------------------

/// Which bound check produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundCheck {
    /// Every reachable automaton state of a public-strategy profile.
    PublicAutomaton,
    /// Positive-probability states only, with explicit deviations on failure.
    PublicPath,
    /// Conditional play distributions over public histories.
    ConditionalPlay,
    /// Belief-weighted correlated-deviation values over private histories.
    PrivateHistories,
}

/// How the equilibrium-certification slack enters the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiMode {
    /// Measure the one-shot deviation gain of the supplied strategies.
    Measured,
    /// Trust the caller's certification (0 claims an exact equilibrium).
    Claimed(f64),
}

/// An explicitly constructed profitable deviation at a violating state: play
/// the best stage response once at the witness history, then revert.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationConstruction {
    pub player: usize,
    pub state: usize,
    pub action: usize,
    /// Period of the witness history.
    pub depth: usize,
    /// Probability of the witness history under prescribed play.
    pub reach_prob: f64,
    pub one_shot_gain: f64,
    /// Normalized repeated-game value gain:
    /// `reach_prob * delta^depth * one_shot_gain`.
    pub repeated_gain: f64,
}

/// One row of a regret report.
#[derive(Debug, Clone, Serialize)]
pub struct StateVerdict {
    pub state: String,
    pub regret: f64,
    pub bound: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationConstruction>,
}

/// Outcome of one bound check over an instance.
#[derive(Debug, Clone, Serialize)]
pub struct RegretReport {
    pub instance: String,
    pub check: BoundCheck,
    pub delta: f64,
    /// `delta/(1-delta) * (eps + gamma)` minimized over the curve.
    pub eta: f64,
    pub eps_star: f64,
    pub gamma_star: f64,
    /// Certification slack entering the bound.
    pub xi: f64,
    /// Measured one-shot deviation gain, when computed.
    pub xi_measured: Option<f64>,
    /// False when the bound exceeds the trivial regret range `[0, 1]`.
    pub bound_informative: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_rescale: Option<AffineRescale>,
    /// Horizon for the truncated (necessary-condition) checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub per_state: Vec<StateVerdict>,
    pub verdict: bool,
}

impl RegretReport {
    pub fn bound(&self) -> f64 {
        self.eta + self.xi.max(0.0) / (1.0 - self.delta)
    }
}

pub(crate) fn eta_from_curve(delta: f64, curve: &PrivacyCurve) -> Result<(f64, f64, f64)> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in [0, 1)"
        )));
    }
    let eta = delta / (1.0 - delta) * curve.sum_star;
    Ok((eta, curve.eps_star, curve.gamma_star))
}

/// Checks that a public automaton plays an approximate stage equilibrium at
/// every reachable state: `nash_regret(d(w)) <= eta + xi_+ / (1 - delta)`.
pub fn verify_public_automaton(
    instance: impl Into<String>,
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    delta: f64,
    curve: &PrivacyCurve,
    xi_mode: XiMode,
) -> Result<RegretReport> {
    verify_public(
        instance,
        game,
        sig,
        auto,
        delta,
        curve,
        xi_mode,
        BoundCheck::PublicAutomaton,
    )
}

/// Positive-probability variant: the same bound restricted to states reached
/// under prescribed play, and on failure an explicitly constructed profitable
/// single-history deviation of the repeated game.
pub fn verify_public_path(
    instance: impl Into<String>,
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    delta: f64,
    curve: &PrivacyCurve,
    xi_mode: XiMode,
) -> Result<RegretReport> {
    verify_public(
        instance,
        game,
        sig,
        auto,
        delta,
        curve,
        xi_mode,
        BoundCheck::PublicPath,
    )
}

#[allow(clippy::too_many_arguments)]
fn verify_public(
    instance: impl Into<String>,
    game: &StageGame,
    sig: &SignalStructure,
    auto: &PublicStrategyAutomaton,
    delta: f64,
    curve: &PrivacyCurve,
    xi_mode: XiMode,
    check: BoundCheck,
) -> Result<RegretReport> {
    require_public(sig)?;
    auto.check_against(game, sig)?;
    let plan = stage_plan(game, sig, auto)?;
    let values = solve_values_with_plan(game, auto, delta, &plan)?;
    let reach = reachable_with_plan(auto, &plan);
    let measured = one_shot_gain_with(game, sig, auto, &values, &plan, &reach)?;
    let xi = match xi_mode {
        XiMode::Measured => measured.xi,
        XiMode::Claimed(x) => x,
    };
    let (eta, eps_star, gamma_star) = eta_from_curve(delta, curve)?;
    let bound = eta + xi.max(0.0) / (1.0 - delta);
    let mut per_state = Vec::with_capacity(reach.len());
    let mut verdict = true;
    for r in &reach {
        let regret = nash_regret(game, auto.decision(r.state))?;
        let pass = regret.max_regret <= bound + PASS_TOL;
        verdict &= pass;
        let deviation = if !pass && check == BoundCheck::PublicPath {
            // The single-history deviation of the violating state: best stage
            // response once, then revert to the automaton.
            let mut best: Option<DeviationConstruction> = None;
            for (player, pr) in regret.per_player.iter().enumerate() {
                let gain = deviation_gain_at(
                    game,
                    sig,
                    auto,
                    &values,
                    &plan,
                    player,
                    r.state,
                    pr.best_action,
                )?;
                let repeated = r.path_prob * delta.powi(r.depth as i32) * gain;
                if best.as_ref().map(|b| repeated > b.repeated_gain).unwrap_or(true) {
                    best = Some(DeviationConstruction {
                        player,
                        state: r.state,
                        action: pr.best_action,
                        depth: r.depth,
                        reach_prob: r.path_prob,
                        one_shot_gain: gain,
                        repeated_gain: repeated,
                    });
                }
            }
            best
        } else {
            None
        };
        per_state.push(StateVerdict {
            state: format!("w{}", r.state),
            regret: regret.max_regret,
            bound,
            pass,
            deviation,
        });
    }
    Ok(RegretReport {
        instance: instance.into(),
        check,
        delta,
        eta,
        eps_star,
        gamma_star,
        xi,
        xi_measured: Some(measured.xi),
        bound_informative: bound < 1.0,
        payoff_rescale: game.rescale(),
        horizon: None,
        per_state,
        verdict,
    })
}
