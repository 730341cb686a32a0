//! Stage games, mixed profiles, correlated devices, and the regret
//! computations that decide approximate-equilibrium membership.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::kahan_sum;

/// Normalization tolerance for probability vectors.
pub const PROB_TOL: f64 = 1e-12;

/// Enumeration guard for explicit pure-profile iteration.
pub const PROFILE_GUARD: usize = 1_000_000;

// ---------------------------------------------------------------------------
// Pure-profile indexing
// ---------------------------------------------------------------------------

/// Mixed-radix rank of a pure action profile. Player 0 is the most
/// significant digit, matching the comma-joined JSON profile keys.
pub fn profile_rank(sizes: &[usize], profile: &[usize]) -> usize {
    debug_assert_eq!(sizes.len(), profile.len());
    let mut rank = 0;
    for (s, a) in sizes.iter().zip(profile) {
        debug_assert!(a < s);
        rank = rank * s + a;
    }
    rank
}

/// Inverse of [`profile_rank`].
pub fn profile_unrank(sizes: &[usize], mut rank: usize) -> Vec<usize> {
    let mut profile = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        profile[i] = rank % sizes[i];
        rank /= sizes[i];
    }
    profile
}

/// Iterator over all pure profiles of the given shape, in rank order.
pub fn all_profiles(sizes: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = sizes.iter().product();
    (0..total).map(move |r| profile_unrank(sizes, r))
}

pub fn num_profiles(sizes: &[usize]) -> usize {
    sizes.iter().product()
}

// ---------------------------------------------------------------------------
// Histograms (anonymous games)
// ---------------------------------------------------------------------------

/// Enumerates count vectors of a fixed length summing to a fixed total, with
/// rank lookup in both directions. Counts are exact multiset sizes, never
/// normalized fractions.
#[derive(Debug, Clone)]
pub struct HistogramIndex {
    num_bins: usize,
    total: usize,
    list: Vec<Vec<usize>>,
    rank: BTreeMap<Vec<usize>, usize>,
}

impl HistogramIndex {
    pub fn new(num_bins: usize, total: usize) -> Self {
        let mut list = Vec::new();
        let mut current = vec![0usize; num_bins];
        fill_histograms(num_bins, total, 0, &mut current, &mut list);
        let rank = list
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        Self {
            num_bins,
            total,
            list,
            rank,
        }
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn get(&self, rank: usize) -> &[usize] {
        &self.list[rank]
    }

    pub fn rank_of(&self, hist: &[usize]) -> Option<usize> {
        self.rank.get(hist).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.list.iter().enumerate().map(|(i, h)| (i, h.as_slice()))
    }

    /// Histogram of a full action profile.
    pub fn of_profile(&self, profile: &[usize]) -> Vec<usize> {
        let mut h = vec![0usize; self.num_bins];
        for &a in profile {
            h[a] += 1;
        }
        h
    }
}

fn fill_histograms(
    bins: usize,
    remaining: usize,
    bin: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if bin + 1 == bins {
        current[bin] = remaining;
        out.push(current.clone());
        current[bin] = 0;
        return;
    }
    for c in 0..=remaining {
        current[bin] = c;
        fill_histograms(bins, remaining - c, bin + 1, current, out);
    }
    current[bin] = 0;
}

/// Distribution over histograms when `mixes.len()` players independently draw
/// actions from the given mixtures. Output indexed by the returned
/// [`HistogramIndex`] built over `num_bins` bins and `mixes.len()` draws.
pub fn histogram_distribution(num_bins: usize, mixes: &[&[f64]]) -> (HistogramIndex, Vec<f64>) {
    let index = HistogramIndex::new(num_bins, mixes.len());
    let mut dist = vec![0.0; index.len()];
    let empty = HistogramIndex::new(num_bins, 0);
    let mut current = vec![0.0; empty.len()];
    current[0] = 1.0;
    let mut prev_index = empty;
    for (step, mix) in mixes.iter().enumerate() {
        let next_index = HistogramIndex::new(num_bins, step + 1);
        let mut next = vec![0.0; next_index.len()];
        for (r, h) in prev_index.iter() {
            let w = current[r];
            if w == 0.0 {
                continue;
            }
            let mut grown = h.to_vec();
            for (a, &p) in mix.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                grown[a] += 1;
                let nr = next_index.rank_of(&grown).expect("histogram in range");
                next[nr] += w * p;
                grown[a] -= 1;
            }
        }
        current = next;
        prev_index = next_index;
    }
    dist.copy_from_slice(&current);
    (prev_index, dist)
}

// ---------------------------------------------------------------------------
// Stage games
// ---------------------------------------------------------------------------

/// Global affine map applied to raw payoffs at load time so every stored
/// payoff lies in `[0, 1]`. `stored = raw * scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineRescale {
    pub scale: f64,
    pub offset: f64,
}

/// Payoff rule shared by all players of an anonymous game: own action plus
/// the exact count histogram of the other players' actions.
#[derive(Debug, Clone)]
pub struct AnonymousRule {
    num_actions: usize,
    others: HistogramIndex,
    /// `values[own_action][histogram_rank]`
    values: Vec<Vec<f64>>,
}

impl AnonymousRule {
    pub fn from_fn(
        num_players: usize,
        num_actions: usize,
        f: impl Fn(usize, &[usize]) -> f64,
    ) -> Self {
        let others = HistogramIndex::new(num_actions, num_players - 1);
        let values = (0..num_actions)
            .map(|own| others.iter().map(|(_, h)| f(own, h)).collect())
            .collect();
        Self {
            num_actions,
            others,
            values,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn others_index(&self) -> &HistogramIndex {
        &self.others
    }

    pub fn value(&self, own: usize, hist_rank: usize) -> f64 {
        self.values[own][hist_rank]
    }

    pub fn value_for(&self, own: usize, hist: &[usize]) -> Option<f64> {
        self.others.rank_of(hist).map(|r| self.values[own][r])
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &[usize], f64)> {
        self.values.iter().enumerate().flat_map(move |(own, row)| {
            self.others
                .iter()
                .map(move |(r, h)| (own, h, row[r]))
        })
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            num_actions: self.num_actions,
            others: self.others.clone(),
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|&v| f(v)).collect())
                .collect(),
        }
    }
}

/// Payoff representation: explicit tensor for small games, anonymous rule for
/// symmetric population games.
#[derive(Debug, Clone)]
pub enum Payoffs {
    /// `tensor[profile_rank][player]`
    Tensor(Vec<Vec<f64>>),
    Anonymous(AnonymousRule),
}

/// A finite n-player normal-form stage game with payoffs in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct StageGame {
    actions: Vec<Vec<String>>,
    payoffs: Payoffs,
    rescale: Option<AffineRescale>,
}

impl StageGame {
    /// Build from an explicit payoff tensor indexed `[profile_rank][player]`.
    /// Raw payoffs outside `[0, 1]` are affinely rescaled with one global map,
    /// recorded on the game.
    pub fn from_tensor(actions: Vec<Vec<String>>, tensor: Vec<Vec<f64>>) -> Result<Self> {
        let n = actions.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("game needs at least one player".into()));
        }
        let sizes: Vec<usize> = actions.iter().map(|a| a.len()).collect();
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::DimensionMismatch("empty action set".into()));
        }
        let expected = num_profiles(&sizes);
        if expected > PROFILE_GUARD {
            return Err(Error::GuardViolation(format!(
                "tensor game with {expected} profiles exceeds guard {PROFILE_GUARD}"
            )));
        }
        if tensor.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "payoff tensor has {} rows, expected {expected}",
                tensor.len()
            )));
        }
        for row in &tensor {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "payoff row has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite payoff".into()));
            }
        }
        let (payoffs, rescale) = rescale_tensor(tensor);
        Ok(Self {
            actions,
            payoffs: Payoffs::Tensor(payoffs),
            rescale,
        })
    }

    /// Build an anonymous game: `num_players` identical action sets and a
    /// shared payoff rule over (own action, histogram of the others).
    pub fn anonymous(
        num_players: usize,
        action_labels: Vec<String>,
        rule: AnonymousRule,
    ) -> Result<Self> {
        if num_players < 2 {
            return Err(Error::InvalidParameter(
                "anonymous game needs at least two players".into(),
            ));
        }
        if rule.num_actions != action_labels.len() {
            return Err(Error::DimensionMismatch(
                "rule action count differs from label count".into(),
            ));
        }
        if rule.others.total() != num_players - 1 {
            return Err(Error::DimensionMismatch(
                "rule histogram total differs from player count minus one".into(),
            ));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &rule.values {
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidParameter("non-finite payoff".into()));
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let (rule, rescale) = if lo >= 0.0 && hi <= 1.0 {
            (rule, None)
        } else {
            let map = affine_to_unit(lo, hi);
            (rule.map_values(|v| map.scale * v + map.offset), Some(map))
        };
        let actions = vec![action_labels; num_players];
        Ok(Self {
            actions,
            payoffs: Payoffs::Anonymous(rule),
            rescale,
        })
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[Vec<String>] {
        &self.actions
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.actions[player].len()
    }

    pub fn action_sizes(&self) -> Vec<usize> {
        self.actions.iter().map(|a| a.len()).collect()
    }

    pub fn payoffs(&self) -> &Payoffs {
        &self.payoffs
    }

    /// Affine map recorded if raw payoffs required rescaling into `[0, 1]`.
    pub fn rescale(&self) -> Option<AffineRescale> {
        self.rescale
    }

    /// Payoff of `player` at a pure profile.
    pub fn payoff(&self, profile: &[usize], player: usize) -> f64 {
        match &self.payoffs {
            Payoffs::Tensor(t) => {
                let rank = profile_rank(&self.action_sizes(), profile);
                t[rank][player]
            }
            Payoffs::Anonymous(rule) => {
                let mut hist = vec![0usize; rule.num_actions];
                for (j, &a) in profile.iter().enumerate() {
                    if j != player {
                        hist[a] += 1;
                    }
                }
                rule.value_for(profile[player], &hist)
                    .expect("histogram within range")
            }
        }
    }

    /// Expand an anonymous game into an explicit tensor (guarded).
    pub fn to_tensor(&self) -> Result<Vec<Vec<f64>>> {
        let sizes = self.action_sizes();
        let total = num_profiles(&sizes);
        if total > PROFILE_GUARD {
            return Err(Error::GuardViolation(format!(
                "expanding {total} profiles exceeds guard {PROFILE_GUARD}"
            )));
        }
        match &self.payoffs {
            Payoffs::Tensor(t) => Ok(t.clone()),
            Payoffs::Anonymous(_) => Ok(all_profiles(&sizes)
                .map(|p| (0..self.num_players()).map(|i| self.payoff(&p, i)).collect())
                .collect()),
        }
    }
}

fn rescale_tensor(tensor: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Option<AffineRescale>) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &tensor {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo >= 0.0 && hi <= 1.0 {
        return (tensor, None);
    }
    let map = affine_to_unit(lo, hi);
    let rescaled = tensor
        .into_iter()
        .map(|row| row.into_iter().map(|v| map.scale * v + map.offset).collect())
        .collect();
    (rescaled, Some(map))
}

fn affine_to_unit(lo: f64, hi: f64) -> AffineRescale {
    if hi - lo < 1e-300 {
        // Constant payoffs: pin to 1/2.
        AffineRescale {
            scale: 0.0,
            offset: 0.5,
        }
    } else {
        AffineRescale {
            scale: 1.0 / (hi - lo),
            offset: -lo / (hi - lo),
        }
    }
}

// ---------------------------------------------------------------------------
// Mixed profiles
// ---------------------------------------------------------------------------

/// One probability vector over actions for a single player.
pub type MixedAction = Vec<f64>;

/// A vector of independent mixed actions, one per player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    mixes: Vec<MixedAction>,
}

impl MixedProfile {
    pub fn new(mixes: Vec<MixedAction>) -> Result<Self> {
        for (i, m) in mixes.iter().enumerate() {
            validate_mixed_action(m)
                .map_err(|e| Error::InvalidDistribution(format!("player {i}: {e}")))?;
        }
        Ok(Self { mixes })
    }

    pub fn pure(game: &StageGame, profile: &[usize]) -> Result<Self> {
        if profile.len() != game.num_players() {
            return Err(Error::DimensionMismatch(
                "pure profile length differs from player count".into(),
            ));
        }
        let mixes = profile
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let mut v = vec![0.0; game.num_actions(i)];
                v[a] = 1.0;
                v
            })
            .collect();
        Ok(Self { mixes })
    }

    pub fn uniform(game: &StageGame) -> Self {
        let mixes = (0..game.num_players())
            .map(|i| {
                let k = game.num_actions(i);
                vec![1.0 / k as f64; k]
            })
            .collect();
        Self { mixes }
    }

    pub fn mixes(&self) -> &[MixedAction] {
        &self.mixes
    }

    pub fn mix(&self, player: usize) -> &[f64] {
        &self.mixes[player]
    }

    pub fn num_players(&self) -> usize {
        self.mixes.len()
    }

    fn check_against(&self, game: &StageGame) -> Result<()> {
        if self.mixes.len() != game.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "profile has {} players, game has {}",
                self.mixes.len(),
                game.num_players()
            )));
        }
        for (i, m) in self.mixes.iter().enumerate() {
            if m.len() != game.num_actions(i) {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} mixes over {} actions, game has {}",
                    m.len(),
                    game.num_actions(i)
                )));
            }
        }
        Ok(())
    }
}

/// If every mixture is degenerate, the pure action indices; `None` otherwise.
pub fn pure_actions(mixes: &[&[f64]]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(mixes.len());
    for m in mixes {
        let mut hit = None;
        for (a, &p) in m.iter().enumerate() {
            if p == 1.0 && hit.is_none() {
                hit = Some(a);
            } else if p != 0.0 {
                return None;
            }
        }
        out.push(hit?);
    }
    Some(out)
}

pub fn validate_mixed_action(m: &[f64]) -> std::result::Result<(), String> {
    if m.is_empty() {
        return Err("empty probability vector".into());
    }
    for &p in m {
        if !p.is_finite() || p < 0.0 {
            return Err(format!("negative or non-finite probability {p}"));
        }
    }
    let sum = kahan_sum(m.iter().copied());
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("probabilities sum to {sum}, not 1"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Expected payoffs
// ---------------------------------------------------------------------------

/// Expected payoff vector under independent mixing:
/// `u_i = sum_a u_i(a) * prod_j alpha_j(a_j)`.
pub fn expected_payoff(game: &StageGame, profile: &MixedProfile) -> Result<Vec<f64>> {
    profile.check_against(game)?;
    (0..game.num_players())
        .map(|i| {
            let devs = deviation_payoffs(game, profile, i)?;
            Ok(devs
                .iter()
                .zip(profile.mix(i))
                .map(|(u, p)| u * p)
                .sum())
        })
        .collect()
}

/// Expected payoff to `player` from playing pure `action` while everyone else
/// follows the profile.
pub fn unilateral_payoff(
    game: &StageGame,
    profile: &MixedProfile,
    player: usize,
    action: usize,
) -> Result<f64> {
    profile.check_against(game)?;
    if action >= game.num_actions(player) {
        return Err(Error::DimensionMismatch(format!(
            "action {action} out of range for player {player}"
        )));
    }
    Ok(deviation_payoffs(game, profile, player)?[action])
}

/// All unilateral payoffs `u_i(a, alpha_{-i})` for `player`, one per action.
pub fn deviation_payoffs(
    game: &StageGame,
    profile: &MixedProfile,
    player: usize,
) -> Result<Vec<f64>> {
    profile.check_against(game)?;
    match &game.payoffs {
        Payoffs::Tensor(tensor) => {
            let sizes = game.action_sizes();
            let k = sizes[player];
            let mut out = vec![0.0; k];
            let mut others_sizes = sizes.clone();
            others_sizes[player] = 1;
            for mut p in all_profiles(&others_sizes) {
                let mut w = 1.0;
                for (j, &a) in p.iter().enumerate() {
                    if j != player {
                        w *= profile.mix(j)[a];
                    }
                }
                if w == 0.0 {
                    continue;
                }
                for (a, slot) in out.iter_mut().enumerate() {
                    p[player] = a;
                    let rank = profile_rank(&sizes, &p);
                    *slot += w * tensor[rank][player];
                }
            }
            Ok(out)
        }
        Payoffs::Anonymous(rule) => {
            let k = rule.num_actions;
            let others: Vec<&[f64]> = (0..game.num_players())
                .filter(|&j| j != player)
                .map(|j| profile.mix(j))
                .collect();
            // Degenerate mixtures: a single histogram carries all the mass.
            if let Some(pure) = pure_actions(&others) {
                let mut hist = vec![0usize; k];
                for a in pure {
                    hist[a] += 1;
                }
                let rank = rule.others.rank_of(&hist).expect("histogram in range");
                return Ok((0..k).map(|a| rule.value(a, rank)).collect());
            }
            let (index, dist) = histogram_distribution(k, &others);
            debug_assert_eq!(index.len(), rule.others.len());
            let mut out = vec![0.0; k];
            for (r, _) in index.iter() {
                let w = dist[r];
                if w == 0.0 {
                    continue;
                }
                for (a, slot) in out.iter_mut().enumerate() {
                    *slot += w * rule.value(a, r);
                }
            }
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Nash regret
// ---------------------------------------------------------------------------

/// Per-player regret against the best pure deviation.
#[derive(Debug, Clone, Serialize)]
pub struct PlayerRegret {
    pub regret: f64,
    /// Best deviating action; ties broken toward the lowest index.
    pub best_action: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NashRegret {
    pub per_player: Vec<PlayerRegret>,
    pub max_regret: f64,
}

impl NashRegret {
    /// The profile is an eta-approximate Nash equilibrium iff
    /// `max_regret <= eta`.
    pub fn is_approximate_nash(&self, eta: f64) -> bool {
        self.max_regret <= eta
    }
}

/// Regret of each player: `max_a u_i(a, alpha_{-i}) - u_i(alpha)`.
pub fn nash_regret(game: &StageGame, profile: &MixedProfile) -> Result<NashRegret> {
    profile.check_against(game)?;
    let mut per_player = Vec::with_capacity(game.num_players());
    let mut max_regret: f64 = 0.0;
    for i in 0..game.num_players() {
        let devs = deviation_payoffs(game, profile, i)?;
        let own: f64 = devs.iter().zip(profile.mix(i)).map(|(u, p)| u * p).sum();
        let mut best = 0usize;
        for (a, &u) in devs.iter().enumerate() {
            if u > devs[best] {
                best = a;
            }
        }
        let regret = (devs[best] - own).max(0.0);
        max_regret = max_regret.max(regret);
        per_player.push(PlayerRegret {
            regret,
            best_action: best,
        });
    }
    Ok(NashRegret {
        per_player,
        max_regret,
    })
}

// ---------------------------------------------------------------------------
// Correlated devices
// ---------------------------------------------------------------------------

/// A correlation device: a joint distribution over signal n-tuples together
/// with per-player maps from own signal to a mixed action.
#[derive(Debug, Clone)]
pub struct CorrelatedDevice {
    labels: Vec<String>,
    /// Joint distribution over signal tuples, mixed-radix ranked with player 0
    /// most significant.
    joint: Vec<f64>,
    /// `maps[player][signal]` is a mixed action.
    maps: Vec<Vec<MixedAction>>,
}

impl CorrelatedDevice {
    pub fn new(labels: Vec<String>, joint: Vec<f64>, maps: Vec<Vec<MixedAction>>) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::DimensionMismatch("device needs at least one signal".into()));
        }
        let n = maps.len();
        if joint.len() != m.pow(n as u32) {
            return Err(Error::DimensionMismatch(format!(
                "joint distribution has {} entries, expected {}",
                joint.len(),
                m.pow(n as u32)
            )));
        }
        if joint.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(Error::InvalidDistribution("negative joint probability".into()));
        }
        let total = kahan_sum(joint.iter().copied());
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidDistribution(format!(
                "device joint sums to {total}"
            )));
        }
        for (i, per_signal) in maps.iter().enumerate() {
            if per_signal.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} map covers {} signals, expected {m}",
                    per_signal.len()
                )));
            }
            for mix in per_signal {
                validate_mixed_action(mix)
                    .map_err(|e| Error::InvalidDistribution(format!("player {i} map: {e}")))?;
            }
        }
        Ok(Self {
            labels,
            joint,
            maps,
        })
    }

    pub fn num_signals(&self) -> usize {
        self.labels.len()
    }

    pub fn num_players(&self) -> usize {
        self.maps.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn map(&self, player: usize, signal: usize) -> &MixedAction {
        &self.maps[player][signal]
    }

    /// Marginal probability that `player` receives `signal`.
    pub fn marginal(&self, player: usize, signal: usize) -> f64 {
        let n = self.num_players();
        let m = self.num_signals();
        let sizes = vec![m; n];
        let mut total = 0.0;
        for (rank, &p) in self.joint.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let tuple = profile_unrank(&sizes, rank);
            if tuple[player] == signal {
                total += p;
            }
        }
        total
    }
}

/// Deviation value of `player` holding mixed action `own` against a weighted
/// set of opponent mixed-action vectors, maximized over pure deviations.
/// Weights need not be normalized; the caller controls conditioning.
pub fn best_deviation_value(
    game: &StageGame,
    player: usize,
    own: &MixedAction,
    weighted_opponents: &[(f64, Vec<MixedAction>)],
) -> Result<(f64, usize)> {
    let k = game.num_actions(player);
    let mut gains = vec![0.0; k];
    for (w, opp) in weighted_opponents {
        if *w == 0.0 {
            continue;
        }
        let mut mixes = opp.clone();
        mixes.insert(player, own.clone());
        let profile = MixedProfile::new(mixes)?;
        let devs = deviation_payoffs(game, &profile, player)?;
        let own_value: f64 = devs.iter().zip(own.iter()).map(|(u, p)| u * p).sum();
        for (a, g) in gains.iter_mut().enumerate() {
            *g += w * (devs[a] - own_value);
        }
    }
    let mut best = 0usize;
    for (a, &g) in gains.iter().enumerate() {
        if g > gains[best] {
            best = a;
        }
    }
    Ok((gains[best], best))
}

/// Per-player, per-signal deviation incentives of a correlated device.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelatedRegret {
    /// `(player, signal, deviation value, best action)` for every signal with
    /// positive marginal probability.
    pub entries: Vec<(usize, usize, f64, usize)>,
    pub max_regret: f64,
}

impl CorrelatedRegret {
    pub fn is_approximate_ce(&self, eta: f64) -> bool {
        self.max_regret <= eta
    }
}

/// Checks the obedience incentives of a correlated device against the stage
/// game: for every player and own-signal with positive marginal, the expected
/// gain from the best pure deviation, conditioned on the own signal.
pub fn correlated_regret(game: &StageGame, device: &CorrelatedDevice) -> Result<CorrelatedRegret> {
    if device.num_players() != game.num_players() {
        return Err(Error::DimensionMismatch(
            "device player count differs from game".into(),
        ));
    }
    for (i, per_signal) in device.maps.iter().enumerate() {
        for mix in per_signal {
            if mix.len() != game.num_actions(i) {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} device map has wrong action count"
                )));
            }
        }
    }
    let n = game.num_players();
    let m = device.num_signals();
    let sizes = vec![m; n];
    let mut entries = Vec::new();
    let mut max_regret: f64 = 0.0;
    for player in 0..n {
        for signal in 0..m {
            // Conditional weights over opponents' signal tuples.
            let mut weighted: Vec<(f64, Vec<MixedAction>)> = Vec::new();
            let mut marginal = 0.0;
            for (rank, &p) in device.joint.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let tuple = profile_unrank(&sizes, rank);
                if tuple[player] != signal {
                    continue;
                }
                marginal += p;
                let opp: Vec<MixedAction> = tuple
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != player)
                    .map(|(j, &s)| device.maps[j][s].clone())
                    .collect();
                weighted.push((p, opp));
            }
            if marginal == 0.0 {
                continue;
            }
            for w in &mut weighted {
                w.0 /= marginal;
            }
            let own = device.maps[player][signal].clone();
            let (value, best) = best_deviation_value(game, player, &own, &weighted)?;
            let value = value.max(0.0);
            max_regret = max_regret.max(value);
            entries.push((player, signal, value, best));
        }
    }
    Ok(CorrelatedRegret {
        entries,
        max_regret,
    })
}
