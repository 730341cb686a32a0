//! Finite monitoring structures: per-profile signal distributions, support
//! checks, and the sufficient-statistic consistency test linking ex-post
//! payoffs to stage payoffs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{
    all_profiles, histogram_distribution, num_profiles, profile_rank, profile_unrank,
    HistogramIndex, MixedProfile, Payoffs, StageGame, PROB_TOL, PROFILE_GUARD,
};
use crate::numeric::kahan_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MonitoringKind {
    /// Everyone observes one common signal drawn from `P_a` over `S`.
    Public,
    /// Each player privately observes one component of a tuple drawn from
    /// `P_a` over `S^n`.
    Private,
}

/// How signal distributions are keyed.
#[derive(Debug, Clone)]
pub enum SignalDist {
    /// One row per pure action profile, ranked like the payoff tensor.
    PerProfile(Vec<Vec<f64>>),
    /// One row per full action-count histogram; only valid for public
    /// monitoring of anonymous games, where the distribution depends on the
    /// profile only through its histogram.
    PerHistogram {
        index: HistogramIndex,
        rows: Vec<Vec<f64>>,
    },
}

/// Ex-post payoffs `U_i(a_i, s)` indexed `[player][own_action][signal]`.
pub type ExPostPayoffs = Vec<Vec<Vec<f64>>>;

/// A finite signal structure for a stage game shape.
#[derive(Debug, Clone)]
pub struct SignalStructure {
    kind: MonitoringKind,
    action_sizes: Vec<usize>,
    labels: Vec<String>,
    dist: SignalDist,
    expost: Option<ExPostPayoffs>,
}

impl SignalStructure {
    pub fn new(
        kind: MonitoringKind,
        action_sizes: Vec<usize>,
        labels: Vec<String>,
        dist: SignalDist,
        expost: Option<ExPostPayoffs>,
    ) -> Result<Self> {
        let n = action_sizes.len();
        let m = labels.len();
        if n == 0 || m == 0 {
            return Err(Error::DimensionMismatch(
                "signal structure needs players and signals".into(),
            ));
        }
        let row_len = match kind {
            MonitoringKind::Public => m,
            MonitoringKind::Private => m
                .checked_pow(n as u32)
                .ok_or_else(|| Error::GuardViolation("joint signal space overflows".into()))?,
        };
        match &dist {
            SignalDist::PerProfile(rows) => {
                let expected = num_profiles(&action_sizes);
                if rows.len() != expected {
                    return Err(Error::DimensionMismatch(format!(
                        "{} distribution rows, expected {expected}",
                        rows.len()
                    )));
                }
                for row in rows {
                    validate_distribution(row, row_len)?;
                }
            }
            SignalDist::PerHistogram { index, rows } => {
                if kind == MonitoringKind::Private {
                    return Err(Error::IncompatibleMonitoring(
                        "histogram-keyed distributions are public only".into(),
                    ));
                }
                let k = action_sizes[0];
                if action_sizes.iter().any(|&s| s != k) {
                    return Err(Error::DimensionMismatch(
                        "histogram-keyed structures need identical action sets".into(),
                    ));
                }
                if index.num_bins() != k || index.total() != n {
                    return Err(Error::DimensionMismatch(
                        "histogram index shape differs from game shape".into(),
                    ));
                }
                if rows.len() != index.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} histogram rows, expected {}",
                        rows.len(),
                        index.len()
                    )));
                }
                for row in rows {
                    validate_distribution(row, row_len)?;
                }
            }
        }
        if let Some(ex) = &expost {
            if ex.len() != n {
                return Err(Error::DimensionMismatch(
                    "ex-post payoffs must cover every player".into(),
                ));
            }
            for (i, per_action) in ex.iter().enumerate() {
                if per_action.len() != action_sizes[i] {
                    return Err(Error::DimensionMismatch(format!(
                        "ex-post payoffs of player {i} must cover every own action"
                    )));
                }
                for row in per_action {
                    if row.len() != m {
                        return Err(Error::DimensionMismatch(
                            "ex-post payoff row must cover every signal".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self {
            kind,
            action_sizes,
            labels,
            dist,
            expost,
        })
    }

    /// Public perfect monitoring: the signal set is the profile set and the
    /// realized profile is announced exactly.
    pub fn perfect_monitoring(action_sizes: Vec<usize>) -> Result<Self> {
        let total = num_profiles(&action_sizes);
        if total > PROFILE_GUARD {
            return Err(Error::GuardViolation("profile space too large".into()));
        }
        let labels = all_profiles(&action_sizes)
            .map(|p| {
                p.iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        let rows = (0..total)
            .map(|r| {
                let mut row = vec![0.0; total];
                row[r] = 1.0;
                row
            })
            .collect();
        Self::new(
            MonitoringKind::Public,
            action_sizes,
            labels,
            SignalDist::PerProfile(rows),
            None,
        )
    }

    pub fn kind(&self) -> MonitoringKind {
        self.kind
    }

    pub fn is_public(&self) -> bool {
        self.kind == MonitoringKind::Public
    }

    pub fn action_sizes(&self) -> &[usize] {
        &self.action_sizes
    }

    pub fn num_players(&self) -> usize {
        self.action_sizes.len()
    }

    /// Size of the per-player signal set `S`.
    pub fn num_signals(&self) -> usize {
        self.labels.len()
    }

    /// Number of outcomes a distribution row ranges over: `|S|` for public,
    /// `|S|^n` for private structures.
    pub fn num_outcomes(&self) -> usize {
        match self.kind {
            MonitoringKind::Public => self.labels.len(),
            MonitoringKind::Private => self.labels.len().pow(self.num_players() as u32),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self) -> &SignalDist {
        &self.dist
    }

    pub fn expost(&self) -> Option<&ExPostPayoffs> {
        self.expost.as_ref()
    }

    pub fn set_expost(&mut self, expost: Option<ExPostPayoffs>) {
        self.expost = expost;
    }

    /// Mixed-radix rank of a joint signal tuple (player 0 most significant).
    pub fn joint_rank(&self, tuple: &[usize]) -> usize {
        let m = self.num_signals();
        tuple.iter().fold(0, |acc, &s| acc * m + s)
    }

    pub fn joint_unrank(&self, rank: usize) -> Vec<usize> {
        let m = self.num_signals();
        let sizes = vec![m; self.num_players()];
        profile_unrank(&sizes, rank)
    }

    /// The distribution row for a pure action profile.
    pub fn row_for_profile(&self, profile: &[usize]) -> &[f64] {
        match &self.dist {
            SignalDist::PerProfile(rows) => {
                let rank = profile_rank(&self.action_sizes, profile);
                &rows[rank]
            }
            SignalDist::PerHistogram { index, rows } => {
                let hist = index.of_profile(profile);
                let rank = index.rank_of(&hist).expect("histogram within range");
                &rows[rank]
            }
        }
    }

    /// Signal distribution induced by independent mixing:
    /// `P_alpha(s) = sum_a prod_j alpha_j(a_j) P_a(s)`.
    pub fn dist_under_mixed(&self, profile: &MixedProfile) -> Result<Vec<f64>> {
        if profile.num_players() != self.num_players() {
            return Err(Error::DimensionMismatch(
                "profile length differs from structure".into(),
            ));
        }
        for (i, m) in profile.mixes().iter().enumerate() {
            if m.len() != self.action_sizes[i] {
                return Err(Error::DimensionMismatch(format!(
                    "player {i} mix length differs from structure"
                )));
            }
        }
        let mixes: Vec<&[f64]> = profile.mixes().iter().map(|m| m.as_slice()).collect();
        if let Some(pure) = crate::game::pure_actions(&mixes) {
            return Ok(self.row_for_profile(&pure).to_vec());
        }
        let mut out = vec![0.0; self.num_outcomes()];
        match &self.dist {
            SignalDist::PerProfile(rows) => {
                for (rank, a) in all_profiles(&self.action_sizes).enumerate() {
                    let mut w = 1.0;
                    for (j, &aj) in a.iter().enumerate() {
                        w *= profile.mix(j)[aj];
                    }
                    if w == 0.0 {
                        continue;
                    }
                    for (s, o) in out.iter_mut().enumerate() {
                        *o += w * rows[rank][s];
                    }
                }
            }
            SignalDist::PerHistogram { index, rows } => {
                let (hist_index, hist_dist) = histogram_distribution(index.num_bins(), &mixes);
                for (r, _) in hist_index.iter() {
                    let w = hist_dist[r];
                    if w == 0.0 {
                        continue;
                    }
                    for (s, o) in out.iter_mut().enumerate() {
                        *o += w * rows[r][s];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Marginal distribution of `player`'s private signal from a joint row.
    pub fn private_marginal(&self, row: &[f64], player: usize) -> Vec<f64> {
        let m = self.num_signals();
        let n = self.num_players();
        let mut out = vec![0.0; m];
        let sizes = vec![m; n];
        for (rank, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let tuple = profile_unrank(&sizes, rank);
            out[tuple[player]] += p;
        }
        out
    }

    /// Ordered neighbor pairs `(row_a, row_b)` over unilateral deviations,
    /// with a witness naming the deviating player and actions.
    pub fn neighbor_pairs(&self) -> Vec<NeighborPair<'_>> {
        let mut out = Vec::new();
        match &self.dist {
            SignalDist::PerProfile(rows) => {
                for (rank, a) in all_profiles(&self.action_sizes).enumerate() {
                    for (i, &ai) in a.iter().enumerate() {
                        for dev in 0..self.action_sizes[i] {
                            if dev == ai {
                                continue;
                            }
                            let mut b = a.clone();
                            b[i] = dev;
                            let rank_b = profile_rank(&self.action_sizes, &b);
                            out.push(NeighborPair {
                                base: &rows[rank],
                                deviated: &rows[rank_b],
                                witness: DpWitness {
                                    player: i,
                                    profile: a.clone(),
                                    deviation: dev,
                                },
                            });
                        }
                    }
                }
            }
            SignalDist::PerHistogram { index, rows } => {
                let k = index.num_bins();
                for (rank, hist) in index.iter() {
                    for from in 0..k {
                        if hist[from] == 0 {
                            continue;
                        }
                        for to in 0..k {
                            if to == from {
                                continue;
                            }
                            let mut moved = hist.to_vec();
                            moved[from] -= 1;
                            moved[to] += 1;
                            let rank_b = index.rank_of(&moved).expect("moved histogram in range");
                            let profile = representative_profile(hist);
                            let player = profile
                                .iter()
                                .position(|&a| a == from)
                                .expect("player in source bin");
                            out.push(NeighborPair {
                                base: &rows[rank],
                                deviated: &rows[rank_b],
                                witness: DpWitness {
                                    player,
                                    profile,
                                    deviation: to,
                                },
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Whether the structure has no observable deviations: public rows fully
    /// supported, or every private per-player marginal fully supported.
    pub fn check_full_support(&self) -> FullSupport {
        match &self.dist {
            SignalDist::PerProfile(rows) => {
                for (rank, row) in rows.iter().enumerate() {
                    let profile = profile_unrank(&self.action_sizes, rank);
                    if let Some(w) = support_witness(self, row, &profile) {
                        return w;
                    }
                }
            }
            SignalDist::PerHistogram { index, rows } => {
                for (rank, hist) in index.iter() {
                    let profile = representative_profile(hist);
                    if let Some(w) = support_witness(self, &rows[rank], &profile) {
                        return w;
                    }
                }
            }
        }
        FullSupport {
            ok: true,
            witness: None,
        }
    }
}

fn support_witness(
    sig: &SignalStructure,
    row: &[f64],
    profile: &[usize],
) -> Option<FullSupport> {
    match sig.kind {
        MonitoringKind::Public => {
            for (s, &p) in row.iter().enumerate() {
                if p <= 0.0 {
                    return Some(FullSupport {
                        ok: false,
                        witness: Some(SupportWitness {
                            profile: profile.to_vec(),
                            player: None,
                            signal: s,
                        }),
                    });
                }
            }
            None
        }
        MonitoringKind::Private => {
            for i in 0..sig.num_players() {
                let marg = sig.private_marginal(row, i);
                for (s, &p) in marg.iter().enumerate() {
                    if p <= 0.0 {
                        return Some(FullSupport {
                            ok: false,
                            witness: Some(SupportWitness {
                                profile: profile.to_vec(),
                                player: Some(i),
                                signal: s,
                            }),
                        });
                    }
                }
            }
            None
        }
    }
}

/// Builds one concrete profile realizing a full-action histogram: players are
/// assigned bins in increasing order.
pub fn representative_profile(hist: &[usize]) -> Vec<usize> {
    let mut profile = Vec::new();
    for (action, &count) in hist.iter().enumerate() {
        profile.extend(std::iter::repeat(action).take(count));
    }
    profile
}

fn validate_distribution(row: &[f64], expected_len: usize) -> Result<()> {
    if row.len() != expected_len {
        return Err(Error::DimensionMismatch(format!(
            "distribution row of length {}, expected {expected_len}",
            row.len()
        )));
    }
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite probability {p}"
            )));
        }
    }
    let sum = kahan_sum(row.iter().copied());
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "distribution sums to {sum}, not 1"
        )));
    }
    Ok(())
}

/// One ordered unilateral-deviation pair of distribution rows.
pub struct NeighborPair<'a> {
    pub base: &'a [f64],
    pub deviated: &'a [f64],
    pub witness: DpWitness,
}

/// Who deviates, from which profile, to which action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DpWitness {
    pub player: usize,
    pub profile: Vec<usize>,
    pub deviation: usize,
}

/// Outcome of the no-observable-deviations check.
#[derive(Debug, Clone, Serialize)]
pub struct FullSupport {
    pub ok: bool,
    pub witness: Option<SupportWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportWitness {
    pub profile: Vec<usize>,
    /// `None` for public structures; the player whose marginal dies otherwise.
    pub player: Option<usize>,
    pub signal: usize,
}

/// Maximum absolute discrepancy between stage payoffs and the expectation of
/// the ex-post payoffs under the signal distribution:
/// `max_{i,a} |u_i(a) - sum_s U_i(a_i, s) P_a(s)|` (private structures use the
/// player's own marginal).
pub fn check_payoff_consistency(game: &StageGame, sig: &SignalStructure) -> Result<f64> {
    let expost = sig
        .expost()
        .ok_or_else(|| Error::MissingData("signal structure carries no ex-post payoffs".into()))?;
    if sig.action_sizes() != game.action_sizes().as_slice() {
        return Err(Error::DimensionMismatch(
            "signal structure shape differs from game".into(),
        ));
    }
    let mut worst: f64 = 0.0;
    let mut consider = |player: usize, own: usize, u: f64, row: &[f64]| {
        let marg;
        let per_signal: &[f64] = match sig.kind() {
            MonitoringKind::Public => row,
            MonitoringKind::Private => {
                marg = sig.private_marginal(row, player);
                &marg
            }
        };
        let expected: f64 = per_signal
            .iter()
            .zip(&expost[player][own])
            .map(|(p, v)| p * v)
            .sum();
        worst = worst.max((u - expected).abs());
    };
    match (&game.payoffs(), &sig.dist) {
        (Payoffs::Anonymous(rule), SignalDist::PerHistogram { index, rows }) => {
            // Anonymous payoffs and histogram-keyed signals: one check per
            // (own action, full histogram) class covers every profile.
            for (rank, hist) in index.iter() {
                for own in 0..rule.num_actions() {
                    if hist[own] == 0 {
                        continue;
                    }
                    let mut others = hist.to_vec();
                    others[own] -= 1;
                    let u = rule.value_for(own, &others).expect("histogram in range");
                    consider(0, own, u, &rows[rank]);
                }
            }
        }
        _ => {
            let sizes = game.action_sizes();
            if num_profiles(&sizes) > PROFILE_GUARD {
                return Err(Error::GuardViolation(
                    "profile enumeration exceeds guard".into(),
                ));
            }
            for a in all_profiles(&sizes) {
                let row = sig.row_for_profile(&a);
                for i in 0..game.num_players() {
                    consider(i, a[i], game.payoff(&a, i), row);
                }
            }
        }
    }
    Ok(worst)
}

/// Consistency threshold: the structure is payoff-consistent iff the maximum
/// discrepancy does not exceed this.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::AnonymousRule;

    fn uniform_public(sizes: Vec<usize>, m: usize) -> SignalStructure {
        let rows = (0..num_profiles(&sizes))
            .map(|_| vec![1.0 / m as f64; m])
            .collect();
        SignalStructure::new(
            MonitoringKind::Public,
            sizes,
            (0..m).map(|s| format!("s{s}")).collect(),
            SignalDist::PerProfile(rows),
            None,
        )
        .unwrap()
    }

    #[test]
    fn uniform_structure_has_full_support() {
        let sig = uniform_public(vec![2, 2], 3);
        assert!(sig.check_full_support().ok);
    }

    #[test]
    fn zero_entry_yields_witness() {
        let mut rows: Vec<Vec<f64>> = (0..4).map(|_| vec![0.5, 0.5]).collect();
        rows[2] = vec![1.0, 0.0];
        let sig = SignalStructure::new(
            MonitoringKind::Public,
            vec![2, 2],
            vec!["g".into(), "b".into()],
            SignalDist::PerProfile(rows),
            None,
        )
        .unwrap();
        let fs = sig.check_full_support();
        assert!(!fs.ok);
        let w = fs.witness.unwrap();
        assert_eq!(w.profile, vec![1, 0]);
        assert_eq!(w.signal, 1);
    }

    #[test]
    fn private_zeros_in_joint_but_positive_marginals() {
        // Two players, two signals, perfectly correlated: joint mass only on
        // (0,0) and (1,1), yet both marginals are (1/2, 1/2).
        let row = vec![0.5, 0.0, 0.0, 0.5];
        let rows = vec![row; 4];
        let sig = SignalStructure::new(
            MonitoringKind::Private,
            vec![2, 2],
            vec!["lo".into(), "hi".into()],
            SignalDist::PerProfile(rows),
            None,
        )
        .unwrap();
        let fs = sig.check_full_support();
        assert!(fs.ok, "marginals are positive even though the joint has zeros");
    }

    #[test]
    fn constant_expost_discrepancy_is_distance_to_constant() {
        let g = crate::game::tests::prisoners_dilemma();
        let c = 0.5;
        let mut sig = uniform_public(vec![2, 2], 2);
        sig.set_expost(Some(vec![vec![vec![c; 2]; 2]; 2]));
        let d = check_payoff_consistency(&g, &sig).unwrap();
        // Farthest payoff from 1/2 in the dilemma is 0 (or 1).
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn perfect_monitoring_with_true_payoffs_is_consistent() {
        let g = crate::game::tests::prisoners_dilemma();
        let mut sig = SignalStructure::perfect_monitoring(vec![2, 2]).unwrap();
        // U_i(a_i, s) = u_i(profile named by s).
        let expost = (0..2)
            .map(|i| {
                (0..2)
                    .map(|_own| {
                        all_profiles(&[2, 2])
                            .map(|p| g.payoff(&p, i))
                            .collect::<Vec<_>>()
                    })
                    .collect()
            })
            .collect();
        sig.set_expost(Some(expost));
        let d = check_payoff_consistency(&g, &sig).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn missing_expost_is_an_error() {
        let g = crate::game::tests::prisoners_dilemma();
        let sig = uniform_public(vec![2, 2], 2);
        assert!(matches!(
            check_payoff_consistency(&g, &sig),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn least_squares_expost_matches_residual_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        // Random 2-player game and random signal rows; fit U by least squares
        // per (player, own action) and compare the reported discrepancy with
        // an independently computed residual.
        let g = crate::game::tests::prisoners_dilemma();
        let m = 2usize;
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let x = rng.gen_range(0.05..0.95);
                vec![x, 1.0 - x]
            })
            .collect();
        let mut sig = SignalStructure::new(
            MonitoringKind::Public,
            vec![2, 2],
            vec!["s0".into(), "s1".into()],
            SignalDist::PerProfile(rows.clone()),
            None,
        )
        .unwrap();

        // Normal equations for each (player, own action): design matrix has a
        // row per profile with that own action.
        let mut expost = vec![vec![vec![0.0; m]; 2]; 2];
        let mut residual_oracle: f64 = 0.0;
        for player in 0..2 {
            for own in 0..2 {
                let profiles: Vec<Vec<usize>> = all_profiles(&[2, 2])
                    .filter(|p| p[player] == own)
                    .collect();
                let design: Vec<&[f64]> = profiles
                    .iter()
                    .map(|p| sig.row_for_profile(p))
                    .collect();
                let target: Vec<f64> = profiles.iter().map(|p| g.payoff(p, player)).collect();
                // 2x2 normal equations solved in closed form.
                let mut ata = [[0.0; 2]; 2];
                let mut atb = [0.0; 2];
                for (row, &t) in design.iter().zip(&target) {
                    for c in 0..2 {
                        atb[c] += row[c] * t;
                        for c2 in 0..2 {
                            ata[c][c2] += row[c] * row[c2];
                        }
                    }
                }
                let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
                assert!(det.abs() > 1e-12);
                let u0 = (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det;
                let u1 = (atb[1] * ata[0][0] - atb[0] * ata[1][0]) / det;
                expost[player][own] = vec![u0, u1];
                for (row, &t) in design.iter().zip(&target) {
                    let fit = row[0] * u0 + row[1] * u1;
                    residual_oracle = residual_oracle.max((t - fit).abs());
                }
            }
        }
        sig.set_expost(Some(expost));
        let d = check_payoff_consistency(&g, &sig).unwrap();
        assert!((d - residual_oracle).abs() < 1e-12);
    }

    #[test]
    fn histogram_structure_round_trips_profiles() {
        let index = HistogramIndex::new(2, 3);
        let rows: Vec<Vec<f64>> = (0..index.len())
            .map(|r| {
                let x = 0.2 + 0.15 * r as f64;
                vec![x, 1.0 - x]
            })
            .collect();
        let sig = SignalStructure::new(
            MonitoringKind::Public,
            vec![2, 2, 2],
            vec!["lo".into(), "hi".into()],
            SignalDist::PerHistogram {
                index,
                rows: rows.clone(),
            },
            None,
        )
        .unwrap();
        // Profiles with equal histograms share a row.
        assert_eq!(sig.row_for_profile(&[0, 1, 0]), sig.row_for_profile(&[1, 0, 0]));
        // A mixed profile's induced distribution matches direct enumeration.
        let rule = AnonymousRule::from_fn(3, 2, |own, h| 0.3 * own as f64 + 0.1 * h[0] as f64);
        let g = StageGame::anonymous(3, vec!["c".into(), "d".into()], rule).unwrap();
        let p = MixedProfile::new(vec![
            vec![0.3, 0.7],
            vec![0.5, 0.5],
            vec![0.9, 0.1],
        ])
        .unwrap();
        let got = sig.dist_under_mixed(&p).unwrap();
        let mut want = vec![0.0; 2];
        for a in all_profiles(&g.action_sizes()) {
            let mut w = 1.0;
            for (j, &aj) in a.iter().enumerate() {
                w *= p.mix(j)[aj];
            }
            let row = sig.row_for_profile(&a);
            for s in 0..2 {
                want[s] += w * row[s];
            }
        }
        for s in 0..2 {
            assert!((got[s] - want[s]).abs() < 1e-12);
        }
    }
}
