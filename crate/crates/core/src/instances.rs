//! Seeded random instance generators for certification sweeps. Everything is
//! deterministic given a master seed; batch runs derive one stream per
//! instance as `master_seed + index`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automaton::{PrivateStrategyAutomaton, PublicStrategyAutomaton};
use crate::error::Result;
use crate::game::{num_profiles, CorrelatedDevice, MixedAction, MixedProfile, StageGame};
use crate::privacy::{default_eps_grid, PrivacyCurve};
use crate::signal::{MonitoringKind, SignalDist, SignalStructure};
use crate::suite::discretize_gaussian_signal;

pub fn rng_for(master_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed.wrapping_add(index))
}

fn random_simplex(rng: &mut ChaCha8Rng, len: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>() + floor).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn random_stage_game(rng: &mut ChaCha8Rng, sizes: &[usize]) -> StageGame {
    let actions = sizes
        .iter()
        .map(|&k| (0..k).map(|a| format!("a{a}")).collect())
        .collect();
    let tensor = (0..num_profiles(sizes))
        .map(|_| (0..sizes.len()).map(|_| rng.gen::<f64>()).collect())
        .collect();
    StageGame::from_tensor(actions, tensor).expect("random tensor in range")
}

pub fn random_mixed_profile(rng: &mut ChaCha8Rng, game: &StageGame) -> MixedProfile {
    let mixes = (0..game.num_players())
        .map(|i| random_simplex(rng, game.num_actions(i), 1e-3))
        .collect();
    MixedProfile::new(mixes).expect("normalized by construction")
}

/// Random public structure; `full_support` keeps every probability away from
/// zero, otherwise occasional hard zeros are planted.
pub fn random_public_signals(
    rng: &mut ChaCha8Rng,
    sizes: &[usize],
    num_signals: usize,
    full_support: bool,
) -> SignalStructure {
    let rows = (0..num_profiles(sizes))
        .map(|_| {
            let mut row = random_simplex(rng, num_signals, if full_support { 0.02 } else { 0.0 });
            if !full_support && num_signals > 1 && rng.gen_bool(0.3) {
                let kill = rng.gen_range(0..num_signals);
                let freed = row[kill];
                row[kill] = 0.0;
                let keep = 1.0 - freed;
                for p in &mut row {
                    *p /= keep;
                }
            }
            row
        })
        .collect();
    SignalStructure::new(
        MonitoringKind::Public,
        sizes.to_vec(),
        (0..num_signals).map(|s| format!("s{s}")).collect(),
        SignalDist::PerProfile(rows),
        None,
    )
    .expect("normalized rows")
}

/// Random private structure with correlated joint rows over `S^n`.
pub fn random_private_signals(
    rng: &mut ChaCha8Rng,
    sizes: &[usize],
    num_signals: usize,
) -> SignalStructure {
    let joint = num_signals.pow(sizes.len() as u32);
    let rows = (0..num_profiles(sizes))
        .map(|_| random_simplex(rng, joint, 0.01))
        .collect();
    SignalStructure::new(
        MonitoringKind::Private,
        sizes.to_vec(),
        (0..num_signals).map(|s| format!("s{s}")).collect(),
        SignalDist::PerProfile(rows),
        None,
    )
    .expect("normalized rows")
}

pub fn random_public_automaton(
    rng: &mut ChaCha8Rng,
    game: &StageGame,
    num_signals: usize,
    num_states: usize,
) -> PublicStrategyAutomaton {
    let decisions = (0..num_states)
        .map(|_| random_mixed_profile(rng, game))
        .collect();
    let transitions = (0..num_states)
        .map(|_| (0..num_signals).map(|_| rng.gen_range(0..num_states)).collect())
        .collect();
    PublicStrategyAutomaton::new(0, decisions, transitions).expect("valid tables")
}

pub fn random_private_automaton(
    rng: &mut ChaCha8Rng,
    num_actions: usize,
    num_signals: usize,
    num_states: usize,
) -> PrivateStrategyAutomaton {
    let decisions = (0..num_states)
        .map(|_| random_simplex(rng, num_actions, 0.05))
        .collect();
    let transitions = (0..num_states)
        .map(|_| {
            (0..num_actions)
                .map(|_| (0..num_signals).map(|_| rng.gen_range(0..num_states)).collect())
                .collect()
        })
        .collect();
    PrivateStrategyAutomaton::new(0, decisions, transitions).expect("valid tables")
}

pub fn random_device(
    rng: &mut ChaCha8Rng,
    game: &StageGame,
    num_signals: usize,
) -> CorrelatedDevice {
    let n = game.num_players();
    let joint = random_simplex(rng, num_signals.pow(n as u32), 1e-3);
    let maps: Vec<Vec<MixedAction>> = (0..n)
        .map(|i| {
            (0..num_signals)
                .map(|_| random_simplex(rng, game.num_actions(i), 1e-3))
                .collect()
        })
        .collect();
    CorrelatedDevice::new(
        (0..num_signals).map(|s| format!("t{s}")).collect(),
        joint,
        maps,
    )
    .expect("normalized device")
}

/// One randomized certification instance: a small game, a public automaton,
/// and discretized-Gaussian signals of a low-sensitivity per-profile
/// statistic, together with the exact privacy curve.
pub struct SweepInstance {
    pub game: StageGame,
    pub sig: SignalStructure,
    pub auto: PublicStrategyAutomaton,
    pub curve: PrivacyCurve,
}

pub fn random_certification_instance(rng: &mut ChaCha8Rng) -> Result<SweepInstance> {
    let n = rng.gen_range(2..=3usize);
    let sizes: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=3usize)).collect();
    let game = random_stage_game(rng, &sizes);

    // Low-sensitivity statistic of the profile, Gaussian-noised and
    // discretized to at most six cells.
    let noise_std = 1.0;
    let spread = noise_std * rng.gen_range(0.05..0.5);
    let centers: Vec<Vec<f64>> = (0..num_profiles(&sizes))
        .map(|_| vec![rng.gen_range(0.0..=spread)])
        .collect();
    let truncation = 4.0;
    let target_cells = rng.gen_range(4..=6usize) as f64;
    let span = spread + 2.0 * truncation * noise_std;
    let grid_width = span / target_cells + 1e-9;
    let disc = discretize_gaussian_signal(&centers, noise_std, grid_width, truncation)?;
    let sig = SignalStructure::new(
        MonitoringKind::Public,
        sizes,
        disc.labels,
        SignalDist::PerProfile(disc.rows),
        None,
    )?;
    let num_states = rng.gen_range(1..=5usize);
    let auto = random_public_automaton(rng, &game, sig.num_signals(), num_states);
    let curve = PrivacyCurve::exact("sweep", &sig, &default_eps_grid())?;
    Ok(SweepInstance {
        game,
        sig,
        auto,
        curve,
    })
}

/// An instance built to violate the per-period bound when claimed as an
/// exact equilibrium: nearly uninformative signals (tiny privacy cost) and a
/// single-state automaton repeating a profile with substantial stage regret.
pub fn random_violating_instance(rng: &mut ChaCha8Rng) -> Result<SweepInstance> {
    // Keep drawing games until some pure profile has regret above 0.2.
    loop {
        let sizes = vec![2usize, rng.gen_range(2..=3usize)];
        let game = random_stage_game(rng, &sizes);
        let mut worst: Option<(Vec<usize>, f64)> = None;
        for p in crate::game::all_profiles(&sizes) {
            let profile = MixedProfile::pure(&game, &p)?;
            let r = crate::game::nash_regret(&game, &profile)?.max_regret;
            if worst.as_ref().map(|(_, w)| r > *w).unwrap_or(true) {
                worst = Some((p, r));
            }
        }
        let (profile, regret) = worst.expect("nonempty profile set");
        if regret < 0.2 {
            continue;
        }
        // Nearly identical rows: the exact curve sits close to zero.
        let m = rng.gen_range(2..=4usize);
        let base = random_simplex(rng, m, 0.05);
        let rows: Vec<Vec<f64>> = (0..num_profiles(&sizes))
            .map(|_| {
                let mut row = base.clone();
                let i = rng.gen_range(0..m);
                let j = rng.gen_range(0..m);
                let eps: f64 = rng.gen_range(0.0..5e-4);
                let shift = eps.min(row[i] * 0.5);
                row[i] -= shift;
                row[j] += shift;
                row
            })
            .collect();
        let sig = SignalStructure::new(
            MonitoringKind::Public,
            sizes,
            (0..m).map(|s| format!("s{s}")).collect(),
            SignalDist::PerProfile(rows),
            None,
        )?;
        let decisions = vec![MixedProfile::pure(&game, &profile)?];
        let transitions = vec![vec![0; m]];
        let auto = PublicStrategyAutomaton::new(0, decisions, transitions)?;
        let curve = PrivacyCurve::exact("violator", &sig, &default_eps_grid())?;
        return Ok(SweepInstance {
            game,
            sig,
            auto,
            curve,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = random_stage_game(&mut rng_for(7, 3), &[2, 3]);
        let b = random_stage_game(&mut rng_for(7, 3), &[2, 3]);
        for p in crate::game::all_profiles(&[2, 3]) {
            for i in 0..2 {
                assert_eq!(a.payoff(&p, i).to_bits(), b.payoff(&p, i).to_bits());
            }
        }
    }

    #[test]
    fn certification_instance_is_well_formed() {
        let inst = random_certification_instance(&mut rng_for(11, 0)).unwrap();
        assert!(inst.sig.num_signals() <= 6);
        assert!(inst.sig.check_full_support().ok);
        assert!(inst.curve.sum_star > 0.0);
    }

    #[test]
    fn violating_instance_has_large_regret_and_tiny_curve() {
        let inst = random_violating_instance(&mut rng_for(13, 0)).unwrap();
        let d = inst.auto.decision(0);
        let regret = crate::game::nash_regret(&inst.game, d).unwrap().max_regret;
        assert!(regret >= 0.2);
        assert!(inst.curve.sum_star < 0.01, "curve {}", inst.curve.sum_star);
    }
}
