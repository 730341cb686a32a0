//! Instance families with naturally private signals: noisy action
//! histograms in anonymous population games, noisy prices in quantity
//! competition, and noisy counterfactual payoff vectors. Each family carries
//! its sensitivity calculator and a finite discretization of the continuous
//! noise so the exact verifier can run on it.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::automaton::PublicStrategyAutomaton;
use crate::error::{Error, Result};
use crate::game::{
    all_profiles, nash_regret, num_profiles, AnonymousRule, HistogramIndex, MixedProfile,
    StageGame,
};
use crate::numeric::{kahan_sum, laplace_cell_mass, normal_cell_mass};
use crate::privacy::{
    gaussian_gamma, gaussian_privacy_curve, PrivacyCurve, Provenance, SensitivitySpec,
};
use crate::repeated::one_shot_deviation_gain;
use crate::signal::{ExPostPayoffs, MonitoringKind, SignalDist, SignalStructure};

/// Discretized signal sets stay at or below this many outcomes.
pub const SIGNAL_GUARD: usize = 10_000;

/// Guard on materialized histogram tables.
pub const HISTOGRAM_GUARD: usize = 100_000;

// ---------------------------------------------------------------------------
// Sensitivities
// ---------------------------------------------------------------------------

/// L2 sensitivity of the normalized action histogram: one player switching
/// moves mass 1/n between exactly two bins.
pub fn histogram_sensitivity(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "histogram sensitivity needs at least two players".into(),
        ));
    }
    Ok(std::f64::consts::SQRT_2 / n as f64)
}

/// Largest cross-player payoff swing: how much one opponent's action change
/// can move any player's payoff, over all profiles. Exhaustive enumeration on
/// the explicit tensor (anonymous games are expanded under the guard).
pub fn mu_sensitivity(game: &StageGame) -> Result<f64> {
    let sizes = game.action_sizes();
    let tensor = game.to_tensor()?;
    let n = game.num_players();
    let mut mu: f64 = 0.0;
    for (rank, a) in all_profiles(&sizes).enumerate() {
        for j in 0..n {
            for dev in 0..sizes[j] {
                if dev == a[j] {
                    continue;
                }
                let mut b = a.clone();
                b[j] = dev;
                let rank_b = crate::game::profile_rank(&sizes, &b);
                for i in 0..n {
                    if i == j {
                        continue;
                    }
                    mu = mu.max((tensor[rank][i] - tensor[rank_b][i]).abs());
                }
            }
        }
    }
    Ok(mu)
}

/// L2 sensitivity of the stacked counterfactual payoff vector: a unilateral
/// change moves only the other players' entries, `k` per player, each by at
/// most `mu`.
pub fn counterfactual_sensitivity(game: &StageGame, mu: f64) -> Result<f64> {
    let k = game.num_actions(0);
    if (1..game.num_players()).any(|i| game.num_actions(i) != k) {
        return Err(Error::DimensionMismatch(
            "counterfactual vectors need identical action counts".into(),
        ));
    }
    let n = game.num_players();
    Ok(mu * (k as f64 * (n as f64 - 1.0)).sqrt())
}

// ---------------------------------------------------------------------------
// Demand curves and quantity competition
// ---------------------------------------------------------------------------

/// A tabulated decreasing demand function on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct DemandCurve {
    mesh: Vec<f64>,
    values: Vec<f64>,
    /// Closed-form `sup |P'/P|` when known analytically.
    pub closed_form_sup: Option<f64>,
}

impl DemandCurve {
    pub fn from_fn(
        resolution: usize,
        f: impl Fn(f64) -> f64,
        closed_form_sup: Option<f64>,
    ) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::InvalidParameter("demand mesh too coarse".into()));
        }
        let mesh: Vec<f64> = (0..resolution)
            .map(|i| i as f64 / (resolution - 1) as f64)
            .collect();
        let values: Vec<f64> = mesh.iter().map(|&x| f(x)).collect();
        if values.iter().any(|&p| !p.is_finite() || p <= 0.0) {
            return Err(Error::InvalidParameter(
                "demand must be positive on [0, 1]".into(),
            ));
        }
        for w in values.windows(2) {
            if w[1] > w[0] + 1e-12 {
                return Err(Error::InvalidParameter("demand must be decreasing".into()));
            }
        }
        Ok(Self {
            mesh,
            values,
            closed_form_sup,
        })
    }

    /// `P(x) = e^{-x}`; the log-derivative is constant.
    pub fn exponential(resolution: usize) -> Self {
        Self::from_fn(resolution, |x| (-x).exp(), Some(1.0)).expect("valid demand")
    }

    /// `P(x) = 1 - x/2`; `sup |P'/P| = 1` attained at `x = 1`.
    pub fn linear_half(resolution: usize) -> Self {
        Self::from_fn(resolution, |x| 1.0 - 0.5 * x, Some(1.0)).expect("valid demand")
    }

    /// Linear interpolation, clamped to the tabulated range.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let step = self.mesh[1] - self.mesh[0];
        let idx = ((x / step).floor() as usize).min(self.mesh.len() - 2);
        let t = (x - self.mesh[idx]) / step;
        self.values[idx] * (1.0 - t) + self.values[idx + 1] * t
    }

    /// Grid supremum of `|P'/P|` via log differences on mesh segments (the
    /// centered difference of `log P` at segment midpoints).
    pub fn sup_log_derivative(&self) -> f64 {
        let step = self.mesh[1] - self.mesh[0];
        let mut sup: f64 = 0.0;
        for w in self.values.windows(2) {
            sup = sup.max(((w[1].ln() - w[0].ln()) / step).abs());
        }
        sup
    }
}

/// Quantity competition: firms pick grid quantities, price is a common
/// log-normal shock times demand at the mean quantity, and only the price is
/// observed.
#[derive(Debug, Clone)]
pub struct CournotSpec {
    pub num_firms: usize,
    pub quantity_grid: Vec<f64>,
    pub demand: DemandCurve,
    /// Standard deviation of the log price shock; `E[theta] = 1`.
    pub log_shock_std: f64,
    pub grid_width: f64,
    pub truncation: f64,
    pub exact_curve: bool,
}

impl CournotSpec {
    pub fn standard(num_firms: usize, demand: DemandCurve) -> Self {
        Self {
            num_firms,
            quantity_grid: (0..21).map(|i| i as f64 / 20.0).collect(),
            demand,
            log_shock_std: 0.25,
            grid_width: 0.05,
            truncation: 6.0,
            exact_curve: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CournotSensitivity {
    /// `(1/n) sup |P'/P|`, the large-n linearization.
    pub first_order: f64,
    /// Exact maximum log-price displacement over all unilateral grid moves,
    /// when small enough to enumerate.
    pub exact_displacement: Option<f64>,
}

/// Sensitivity of the log price to one firm's quantity change.
pub fn cournot_sensitivity(spec: &CournotSpec) -> Result<CournotSensitivity> {
    if spec.num_firms < 2 {
        return Err(Error::InvalidParameter("need at least two firms".into()));
    }
    let n = spec.num_firms as f64;
    let first_order = spec.demand.sup_log_derivative() / n;
    if let Some(closed) = spec.demand.closed_form_sup {
        let grid_sup = spec.demand.sup_log_derivative();
        if (grid_sup - closed).abs() > 0.02 * closed.max(1e-12) {
            return Err(Error::Numerical(format!(
                "grid log-derivative {grid_sup} far from closed form {closed}"
            )));
        }
    }
    let g = spec.quantity_grid.len();
    let sum_levels = (spec.num_firms - 1) * (g - 1) + 1;
    let exact_displacement = if sum_levels <= 100_000 {
        // Quantities live on a uniform grid, so the others' total ranges over
        // multiples of the grid step.
        let step = spec.quantity_grid[1] - spec.quantity_grid[0];
        let mut worst: f64 = 0.0;
        for others in 0..sum_levels {
            let others_total = others as f64 * step;
            for (qi, &q) in spec.quantity_grid.iter().enumerate() {
                let base = (others_total + q) / n;
                for &q_dev in &spec.quantity_grid[qi + 1..] {
                    let moved = (others_total + q_dev) / n;
                    let d = (spec.demand.value(moved).ln() - spec.demand.value(base).ln()).abs();
                    worst = worst.max(d);
                }
            }
        }
        Some(worst)
    } else {
        None
    };
    Ok(CournotSensitivity {
        first_order,
        exact_displacement,
    })
}

// ---------------------------------------------------------------------------
// Gaussian and Laplace discretization
// ---------------------------------------------------------------------------

/// A finite signal set over a product grid, with one distribution row per
/// center vector. The discretized structure is the ground-truth object the
/// exact verifier studies; no analytic slack enters.
#[derive(Debug, Clone)]
pub struct DiscretizedSignal {
    pub labels: Vec<String>,
    /// Grid cell centers, one coordinate vector per signal.
    pub points: Vec<Vec<f64>>,
    /// One probability row per input center vector.
    pub rows: Vec<Vec<f64>>,
}

/// Discretizes independent per-coordinate Gaussian noise around each center
/// vector: per-dimension cell masses are renormalized and multiplied.
pub fn discretize_gaussian_signal(
    centers: &[Vec<f64>],
    noise_std: f64,
    grid_width: f64,
    truncation: f64,
) -> Result<DiscretizedSignal> {
    discretize_additive(centers, noise_std, grid_width, truncation, normal_cell_mass)
}

/// Laplace variant used for `(eps, 0)`-style mechanisms; `noise_scale` is the
/// distribution's scale parameter.
pub fn discretize_laplace_signal(
    centers: &[Vec<f64>],
    noise_scale: f64,
    grid_width: f64,
    truncation: f64,
) -> Result<DiscretizedSignal> {
    discretize_additive(centers, noise_scale, grid_width, truncation, laplace_cell_mass)
}

fn discretize_additive(
    centers: &[Vec<f64>],
    noise_scale: f64,
    grid_width: f64,
    truncation: f64,
    cell_mass: impl Fn(f64, f64, f64) -> f64,
) -> Result<DiscretizedSignal> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter("no centers".into()));
    }
    let dims = centers[0].len();
    if dims == 0 || centers.iter().any(|c| c.len() != dims) {
        return Err(Error::DimensionMismatch("ragged center vectors".into()));
    }
    if noise_scale < 0.0 || !noise_scale.is_finite() {
        return Err(Error::InvalidParameter("negative noise scale".into()));
    }
    if noise_scale == 0.0 {
        return discretize_pointmass(centers, dims);
    }
    if grid_width <= 0.0 {
        return Err(Error::InvalidParameter("grid width must be positive".into()));
    }
    if truncation < 4.0 {
        return Err(Error::InvalidParameter(
            "truncation below four noise scales".into(),
        ));
    }
    // Per-dimension uniform cell grids covering every center.
    let mut dim_edges: Vec<Vec<f64>> = Vec::with_capacity(dims);
    for d in 0..dims {
        let lo = centers
            .iter()
            .map(|c| c[d])
            .fold(f64::INFINITY, f64::min)
            - truncation * noise_scale;
        let hi = centers
            .iter()
            .map(|c| c[d])
            .fold(f64::NEG_INFINITY, f64::max)
            + truncation * noise_scale;
        let cells = ((hi - lo) / grid_width).ceil().max(1.0) as usize;
        dim_edges.push((0..=cells).map(|i| lo + i as f64 * grid_width).collect());
    }
    let dim_sizes: Vec<usize> = dim_edges.iter().map(|e| e.len() - 1).collect();
    let total = dim_sizes.iter().try_fold(1usize, |acc, &s| {
        acc.checked_mul(s).filter(|&t| t <= SIGNAL_GUARD)
    });
    let total = total.ok_or_else(|| {
        Error::GuardViolation(format!(
            "discretized signal set exceeds guard {SIGNAL_GUARD} (dims {dim_sizes:?})"
        ))
    })?;

    // Per-center, per-dimension cell masses, renormalized per dimension.
    let mut rows = Vec::with_capacity(centers.len());
    for c in centers {
        let per_dim: Vec<Vec<f64>> = (0..dims)
            .map(|d| {
                let edges = &dim_edges[d];
                let mut masses: Vec<f64> = (0..edges.len() - 1)
                    .map(|i| cell_mass(edges[i] - c[d], edges[i + 1] - c[d], noise_scale))
                    .collect();
                let z = kahan_sum(masses.iter().copied());
                for m in &mut masses {
                    *m /= z;
                }
                masses
            })
            .collect();
        let mut row = Vec::with_capacity(total);
        for rank in 0..total {
            let cell = crate::game::profile_unrank(&dim_sizes, rank);
            row.push(
                cell.iter()
                    .enumerate()
                    .map(|(d, &i)| per_dim[d][i])
                    .product(),
            );
        }
        rows.push(row);
    }
    let mut labels = Vec::with_capacity(total);
    let mut points = Vec::with_capacity(total);
    for rank in 0..total {
        let cell = crate::game::profile_unrank(&dim_sizes, rank);
        let point: Vec<f64> = cell
            .iter()
            .enumerate()
            .map(|(d, &i)| 0.5 * (dim_edges[d][i] + dim_edges[d][i + 1]))
            .collect();
        labels.push(
            point
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join("|"),
        );
        points.push(point);
    }
    Ok(DiscretizedSignal {
        labels,
        points,
        rows,
    })
}

/// Zero-noise limit: signals are the distinct center values themselves.
fn discretize_pointmass(centers: &[Vec<f64>], dims: usize) -> Result<DiscretizedSignal> {
    let mut dim_values: Vec<Vec<f64>> = vec![Vec::new(); dims];
    for c in centers {
        for (d, &v) in c.iter().enumerate() {
            dim_values[d].push(v);
        }
    }
    for vals in &mut dim_values {
        vals.sort_by(|a, b| a.total_cmp(b));
        vals.dedup();
    }
    let dim_sizes: Vec<usize> = dim_values.iter().map(|v| v.len()).collect();
    let total: usize = dim_sizes.iter().product();
    if total > SIGNAL_GUARD {
        return Err(Error::GuardViolation(
            "point-mass signal set exceeds guard".into(),
        ));
    }
    let mut labels = Vec::with_capacity(total);
    let mut points = Vec::with_capacity(total);
    for rank in 0..total {
        let cell = crate::game::profile_unrank(&dim_sizes, rank);
        let point: Vec<f64> = cell
            .iter()
            .enumerate()
            .map(|(d, &i)| dim_values[d][i])
            .collect();
        labels.push(
            point
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join("|"),
        );
        points.push(point);
    }
    let rows = centers
        .iter()
        .map(|c| {
            let cell: Vec<usize> = c
                .iter()
                .enumerate()
                .map(|(d, v)| {
                    dim_values[d]
                        .iter()
                        .position(|x| x == v)
                        .expect("center in grid")
                })
                .collect();
            let rank = crate::game::profile_rank(&dim_sizes, &cell);
            let mut row = vec![0.0; total];
            row[rank] = 1.0;
            row
        })
        .collect();
    Ok(DiscretizedSignal {
        labels,
        points,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Built instances
// ---------------------------------------------------------------------------

/// A constructed (game, signal structure, privacy curve) triple.
#[derive(Debug, Clone)]
pub struct BuiltInstance {
    pub name: String,
    pub game: StageGame,
    pub signals: SignalStructure,
    pub sensitivity: f64,
    pub analytic_curve: PrivacyCurve,
    pub exact_curve: Option<PrivacyCurve>,
    /// Signal cell centers, when the signals discretize a statistic.
    pub signal_points: Vec<Vec<f64>>,
    pub metadata: BTreeMap<String, String>,
}

/// Anonymous population game whose public signal is a noisy histogram of all
/// players' actions.
#[derive(Debug, Clone)]
pub struct AnonymousGameSpec {
    pub num_players: usize,
    pub action_labels: Vec<String>,
    pub payoff: AnonymousRule,
    pub noise_std: f64,
    /// Noise the raw counts instead of the normalized fractions. The
    /// sensitivity picks up a factor of n.
    pub count_space: bool,
    pub grid_width: f64,
    pub truncation: f64,
    pub exact_curve: bool,
}

impl AnonymousGameSpec {
    /// Contribution game: everyone benefits from cooperators, defection pays
    /// a private bonus. Defection dominates by 0.3 at every histogram.
    pub fn public_goods(num_players: usize, noise_std: f64) -> Self {
        let payoff = AnonymousRule::from_fn(num_players, 2, |own, hist| {
            let others = (num_players - 1) as f64;
            let frac_coop = if others > 0.0 { hist[0] as f64 / others } else { 0.0 };
            0.6 * frac_coop + if own == 1 { 0.35 } else { 0.05 }
        });
        let span = 1.0 + 12.0 * noise_std;
        Self {
            num_players,
            action_labels: vec!["C".into(), "D".into()],
            payoff,
            noise_std,
            count_space: false,
            grid_width: (span / 96.0).max(0.05),
            truncation: 6.0,
            exact_curve: num_players <= 64,
        }
    }
}

/// Binomial count of histograms over `bins` bins and `total` draws, checked
/// against the materialization guard before any table is built.
fn check_histogram_guard(bins: usize, total: usize) -> Result<()> {
    let mut count: u128 = 1;
    for i in 0..(bins - 1) as u128 {
        count = count
            .checked_mul(total as u128 + i + 1)
            .ok_or_else(|| Error::GuardViolation("histogram count overflows".into()))?
            / (i + 1);
        if count > HISTOGRAM_GUARD as u128 {
            return Err(Error::GuardViolation(format!(
                "histogram table for {bins} bins and {total} draws exceeds \
                 guard {HISTOGRAM_GUARD}"
            )));
        }
    }
    Ok(())
}

pub fn build_anonymous_instance(spec: &AnonymousGameSpec) -> Result<BuiltInstance> {
    let n = spec.num_players;
    let k = spec.action_labels.len();
    check_histogram_guard(k, n)?;
    let game = StageGame::anonymous(n, spec.action_labels.clone(), spec.payoff.clone())?;
    let index = HistogramIndex::new(k, n);
    let centers: Vec<Vec<f64>> = index
        .iter()
        .map(|(_, h)| {
            h.iter()
                .map(|&c| {
                    if spec.count_space {
                        c as f64
                    } else {
                        c as f64 / n as f64
                    }
                })
                .collect()
        })
        .collect();
    let disc = discretize_gaussian_signal(&centers, spec.noise_std, spec.grid_width, spec.truncation)?;
    let sig = SignalStructure::new(
        MonitoringKind::Public,
        vec![k; n],
        disc.labels,
        SignalDist::PerHistogram {
            index,
            rows: disc.rows,
        },
        None,
    )?;
    let sensitivity = if spec.count_space {
        std::f64::consts::SQRT_2
    } else {
        histogram_sensitivity(n)?
    };
    let name = format!("anonymous(n={n},k={k},sigma={})", spec.noise_std);
    let analytic_curve = analytic_or_degenerate(&name, sensitivity, spec.noise_std)?;
    let exact_curve = if spec.exact_curve {
        Some(PrivacyCurve::exact(
            format!("{name}/exact"),
            &sig,
            &crate::privacy::default_eps_grid(),
        )?)
    } else {
        None
    };
    let mut metadata = BTreeMap::new();
    metadata.insert(
        "payoff_consistency".into(),
        "signal is payoff-irrelevant; stage payoffs depend on realized actions only".into(),
    );
    Ok(BuiltInstance {
        name,
        game,
        signals: sig,
        sensitivity,
        analytic_curve,
        exact_curve,
        signal_points: disc.points,
        metadata,
    })
}

/// Analytic Gaussian curve; zero noise degenerates to no privacy at all.
fn analytic_or_degenerate(name: &str, sensitivity: f64, noise_std: f64) -> Result<PrivacyCurve> {
    let grid = crate::privacy::default_eps_grid();
    if noise_std > 0.0 {
        gaussian_privacy_curve(&SensitivitySpec::new(1, sensitivity)?, noise_std, &grid)
    } else {
        PrivacyCurve::from_evaluator(
            format!("{name}/noiseless"),
            Provenance::AnalyticGaussian,
            &grid,
            move |eps| gaussian_gamma(sensitivity, 0.0, eps),
        )
    }
}

pub fn build_cournot_instance(spec: &CournotSpec) -> Result<BuiltInstance> {
    let n = spec.num_firms;
    let g = spec.quantity_grid.len();
    if g < 2 {
        return Err(Error::InvalidParameter("quantity grid too small".into()));
    }
    if spec.log_shock_std <= 0.0 {
        return Err(Error::InvalidParameter(
            "log shock deviation must be positive".into(),
        ));
    }
    check_histogram_guard(g, n)?;
    let quantities = spec.quantity_grid.clone();
    let demand = spec.demand.clone();
    let qref = quantities.clone();
    let rule = AnonymousRule::from_fn(n, g, move |own, hist| {
        let mut total = qref[own];
        for (idx, &count) in hist.iter().enumerate() {
            total += qref[idx] * count as f64;
        }
        let mean = total / n as f64;
        // Expected profit: E[theta] = 1 and cost c(q) = q.
        demand.value(mean) * qref[own] - qref[own]
    });
    let labels: Vec<String> = quantities.iter().map(|q| format!("q={q}")).collect();
    let game = StageGame::anonymous(n, labels, rule)?;
    let index = HistogramIndex::new(g, n);
    // Log-price centers: E[log theta] = -std^2/2 keeps E[theta] = 1.
    let shock_mean = -0.5 * spec.log_shock_std * spec.log_shock_std;
    let centers: Vec<Vec<f64>> = index
        .iter()
        .map(|(_, h)| {
            let total: f64 = h
                .iter()
                .enumerate()
                .map(|(idx, &c)| quantities[idx] * c as f64)
                .sum();
            vec![spec.demand.value(total / n as f64).ln() + shock_mean]
        })
        .collect();
    let disc = discretize_gaussian_signal(
        &centers,
        spec.log_shock_std,
        spec.grid_width,
        spec.truncation,
    )?;
    let sig = SignalStructure::new(
        MonitoringKind::Public,
        vec![g; n],
        disc.labels,
        SignalDist::PerHistogram {
            index,
            rows: disc.rows,
        },
        None,
    )?;
    let sens = cournot_sensitivity(spec)?;
    let sensitivity = sens.exact_displacement.unwrap_or(sens.first_order);
    let name = format!("cournot(n={n},g={g},sigma={})", spec.log_shock_std);
    let analytic_curve = analytic_or_degenerate(&name, sensitivity, spec.log_shock_std)?;
    let exact_curve = if spec.exact_curve {
        Some(PrivacyCurve::exact(
            format!("{name}/exact"),
            &sig,
            &crate::privacy::default_eps_grid(),
        )?)
    } else {
        None
    };
    let mut metadata = BTreeMap::new();
    metadata.insert(
        "sensitivity_first_order".into(),
        format!("{}", sens.first_order),
    );
    if let Some(e) = sens.exact_displacement {
        metadata.insert("sensitivity_exact".into(), format!("{e}"));
    }
    if let Some(r) = game.rescale() {
        metadata.insert(
            "payoff_rescale".into(),
            format!("scale={} offset={}", r.scale, r.offset),
        );
    }
    metadata.insert(
        "payoff_consistency".into(),
        "signal is payoff-irrelevant; expected profit depends on realized quantities only".into(),
    );
    Ok(BuiltInstance {
        name,
        game,
        signals: sig,
        sensitivity,
        analytic_curve,
        exact_curve,
        signal_points: disc.points,
        metadata,
    })
}

/// Private monitoring by noisy counterfactual payoff vectors: each player
/// sees an independent noisy estimate of the payoff every own action would
/// have earned against the realized play of the others.
#[derive(Debug, Clone)]
pub struct CounterfactualSpec {
    pub game: StageGame,
    pub noise_std: f64,
    pub grid_width: f64,
    pub truncation: f64,
    pub exact_curve: bool,
}

pub fn build_counterfactual_instance(spec: &CounterfactualSpec) -> Result<BuiltInstance> {
    let game = spec.game.clone();
    let n = game.num_players();
    let k = game.num_actions(0);
    if (1..n).any(|i| game.num_actions(i) != k) {
        return Err(Error::DimensionMismatch(
            "counterfactual family needs identical action counts".into(),
        ));
    }
    if spec.noise_std <= 0.0 {
        return Err(Error::InvalidParameter("noise_std must be positive".into()));
    }
    let mu = mu_sensitivity(&game)?;
    let sensitivity = counterfactual_sensitivity(&game, mu)?;
    let name = format!("counterfactual(n={n},k={k},sigma={})", spec.noise_std);
    let analytic_curve = analytic_or_degenerate(&name, sensitivity, spec.noise_std)?;

    // Per-player signal set: a shared product grid over the k own-action
    // payoff estimates. One global span keeps the signal set common.
    let sizes = game.action_sizes();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for a in all_profiles(&sizes) {
        for i in 0..n {
            let v = game.payoff(&a, i);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    lo -= spec.truncation * spec.noise_std;
    hi += spec.truncation * spec.noise_std;
    let cells = ((hi - lo) / spec.grid_width).ceil().max(1.0) as usize;
    let per_player = cells.checked_pow(k as u32).ok_or_else(|| {
        Error::GuardViolation("per-player signal grid overflows".into())
    })?;
    let joint = per_player.checked_pow(n as u32).filter(|&t| t <= SIGNAL_GUARD);
    let joint = joint.ok_or_else(|| {
        Error::GuardViolation(format!(
            "joint counterfactual signal space exceeds guard {SIGNAL_GUARD} \
             ({cells} cells, {k} actions, {n} players); widen grid_width"
        ))
    })?;
    let edges: Vec<f64> = (0..=cells).map(|i| lo + i as f64 * spec.grid_width).collect();
    let cell_mass = |center: f64, i: usize| -> f64 {
        normal_cell_mass(edges[i] - center, edges[i + 1] - center, spec.noise_std)
    };

    // Rows: product over all k*n coordinates of renormalized cell masses.
    let mut rows = Vec::with_capacity(num_profiles(&sizes));
    for a in all_profiles(&sizes) {
        // Center of coordinate (player i, action c): payoff i would get from
        // playing c against the realized others.
        let mut per_coord = Vec::with_capacity(n * k);
        for i in 0..n {
            for c in 0..k {
                let mut counter = a.clone();
                counter[i] = c;
                let center = game.payoff(&counter, i);
                let mut masses: Vec<f64> = (0..cells).map(|idx| cell_mass(center, idx)).collect();
                let z = kahan_sum(masses.iter().copied());
                for m in &mut masses {
                    *m /= z;
                }
                per_coord.push(masses);
            }
        }
        let mut row = Vec::with_capacity(joint);
        let coord_sizes = vec![cells; n * k];
        for rank in 0..joint {
            let cells_idx = crate::game::profile_unrank(&coord_sizes, rank);
            row.push(
                cells_idx
                    .iter()
                    .enumerate()
                    .map(|(coord, &idx)| per_coord[coord][idx])
                    .product(),
            );
        }
        rows.push(row);
    }

    // Per-player signal labels and points over the k-dim product grid.
    let per_sizes = vec![cells; k];
    let mut labels = Vec::with_capacity(per_player);
    let mut points = Vec::with_capacity(per_player);
    for rank in 0..per_player {
        let cell = crate::game::profile_unrank(&per_sizes, rank);
        let point: Vec<f64> = cell
            .iter()
            .map(|&i| 0.5 * (edges[i] + edges[i + 1]))
            .collect();
        labels.push(
            point
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join("|"),
        );
        points.push(point);
    }
    // Ex-post payoffs: the signal component for the played action estimates
    // the realized payoff.
    let expost: ExPostPayoffs = (0..n)
        .map(|_| {
            (0..k)
                .map(|a| points.iter().map(|p| p[a]).collect())
                .collect()
        })
        .collect();
    let sig = SignalStructure::new(
        MonitoringKind::Private,
        sizes.clone(),
        labels,
        SignalDist::PerProfile(rows),
        Some(expost),
    )?;
    let exact_curve = if spec.exact_curve {
        Some(PrivacyCurve::exact(
            format!("{name}/exact"),
            &sig,
            &crate::privacy::default_eps_grid(),
        )?)
    } else {
        None
    };
    let mut metadata = BTreeMap::new();
    metadata.insert("mu".into(), format!("{mu}"));
    let consistency = crate::signal::check_payoff_consistency(&game, &sig)?;
    metadata.insert("payoff_consistency".into(), format!("{consistency}"));
    Ok(BuiltInstance {
        name,
        game,
        signals: sig,
        sensitivity,
        analytic_curve,
        exact_curve,
        signal_points: points,
        metadata,
    })
}

// ---------------------------------------------------------------------------
// Family sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Anonymous,
    Cournot,
    Counterfactual,
}

impl Family {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "anonymous" => Ok(Family::Anonymous),
            "cournot" => Ok(Family::Cournot),
            "counterfactual" => Ok(Family::Counterfactual),
            other => Err(Error::Parse(format!("unknown family {other}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub n: usize,
    pub sensitivity: f64,
    pub eps_star: f64,
    pub gamma_star: f64,
    pub eps_plus_gamma: f64,
    pub eta_at_delta: f64,
}

/// Sensitivity-and-curve sweep over population sizes at fixed noise. Works at
/// any `n`; sensitivities come from the closed forms, curves from the
/// analytic Gaussian inversion.
pub fn scan_family(
    family: Family,
    n_values: &[usize],
    noise_std: f64,
    delta: f64,
    counterfactual_mu: Option<f64>,
    counterfactual_actions: usize,
) -> Result<Vec<ScanRow>> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in [0, 1)"
        )));
    }
    if noise_std <= 0.0 {
        return Err(Error::InvalidParameter("noise_std must be positive".into()));
    }
    let demand = DemandCurve::exponential(2001);
    let rows: Result<Vec<ScanRow>> = n_values
        .par_iter()
        .map(|&n| {
            let sensitivity = match family {
                Family::Anonymous => histogram_sensitivity(n)?,
                Family::Cournot => {
                    let spec = CournotSpec {
                        num_firms: n,
                        quantity_grid: (0..21).map(|i| i as f64 / 20.0).collect(),
                        demand: demand.clone(),
                        log_shock_std: noise_std,
                        grid_width: 0.05,
                        truncation: 6.0,
                        exact_curve: false,
                    };
                    cournot_sensitivity(&spec)?.first_order
                }
                Family::Counterfactual => {
                    let mu = counterfactual_mu.unwrap_or(1.0 / n as f64);
                    mu * (counterfactual_actions as f64 * (n as f64 - 1.0)).sqrt()
                }
            };
            let curve = analytic_or_degenerate("scan", sensitivity, noise_std)?;
            Ok(ScanRow {
                n,
                sensitivity,
                eps_star: curve.eps_star,
                gamma_star: curve.gamma_star,
                eps_plus_gamma: curve.sum_star,
                eta_at_delta: delta / (1.0 - delta) * curve.sum_star,
            })
        })
        .collect();
    rows
}

// ---------------------------------------------------------------------------
// Collapse demonstration
// ---------------------------------------------------------------------------

/// Grim trigger for a two-action anonymous instance: everyone plays action 0
/// until the observed share of action 0 (the first signal coordinate) drops
/// below `threshold`, then plays action 1 forever.
pub fn grim_trigger_anonymous(
    instance: &BuiltInstance,
    threshold: f64,
) -> Result<PublicStrategyAutomaton> {
    let game = &instance.game;
    let n = game.num_players();
    if game.num_actions(0) != 2 {
        return Err(Error::InvalidParameter(
            "grim trigger construction needs two actions".into(),
        ));
    }
    if instance.signal_points.len() != instance.signals.num_signals() {
        return Err(Error::MissingData(
            "instance signals carry no grid coordinates".into(),
        ));
    }
    let coop = MixedProfile::pure(game, &vec![0; n])?;
    let punish = MixedProfile::pure(game, &vec![1; n])?;
    let transitions: Vec<Vec<usize>> = vec![
        instance
            .signal_points
            .iter()
            .map(|p| usize::from(p[0] < threshold))
            .collect(),
        vec![1; instance.signal_points.len()],
    ];
    PublicStrategyAutomaton::new(0, vec![coop, punish], transitions)
}

/// Detection boundary for full cooperation in an n-player two-action game:
/// halfway between all-cooperate and one defector in fraction space.
pub fn grim_threshold(n: usize) -> f64 {
    1.0 - 1.0 / (2.0 * n as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseRow {
    pub n: usize,
    /// Measured one-shot deviation gain of grim trigger under the noised
    /// signals.
    pub one_shot_gain: f64,
    /// Cooperation is unsupportable once the gain turns positive.
    pub collapsed: bool,
    /// Stage-regret bound from the analytic curve.
    pub eta: f64,
    /// Whether the bound already rules out full cooperation.
    pub eta_below_gap: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub delta: f64,
    pub noise_std: f64,
    /// Stage deviation gain at full cooperation.
    pub stage_gap: f64,
    pub rows: Vec<CollapseRow>,
    /// Smallest n where grim-trigger cooperation breaks down.
    pub collapse_n: Option<usize>,
    /// Smallest n where the privacy bound drops below the stage gap.
    pub eta_below_gap_n: Option<usize>,
    /// One-shot gain of the same automaton under exact monitoring.
    pub perfect_monitoring_gain: f64,
    /// Grim trigger is an exact equilibrium under exact monitoring.
    pub perfect_monitoring_certified: bool,
    /// The discount factor cannot sustain cooperation even with exact
    /// monitoring.
    pub delta_too_small: bool,
}

/// Sweeps population sizes at fixed noise and reports where grim-trigger
/// cooperation stops being self-enforcing, alongside the population size
/// where the privacy bound alone rules it out.
pub fn collapse_demo(delta: f64, noise_std: f64, n_values: &[usize]) -> Result<CollapseReport> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in [0, 1)"
        )));
    }
    if n_values.is_empty() || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "population grid must be increasing".into(),
        ));
    }
    let rows: Result<Vec<CollapseRow>> = n_values
        .par_iter()
        .map(|&n| {
            let mut spec = AnonymousGameSpec::public_goods(n, noise_std);
            spec.exact_curve = false;
            let instance = build_anonymous_instance(&spec)?;
            let auto = grim_trigger_anonymous(&instance, grim_threshold(n))?;
            let gain =
                one_shot_deviation_gain(&instance.game, &instance.signals, &auto, delta)?;
            let coop = MixedProfile::pure(&instance.game, &vec![0; n])?;
            let gap = nash_regret(&instance.game, &coop)?.max_regret;
            let eta = delta / (1.0 - delta) * instance.analytic_curve.sum_star;
            Ok(CollapseRow {
                n,
                one_shot_gain: gain.xi,
                collapsed: gain.xi > 1e-9,
                eta,
                eta_below_gap: eta < gap,
            })
        })
        .collect();
    let rows = rows?;
    let stage_gap = {
        let n0 = n_values[0];
        let spec = AnonymousGameSpec::public_goods(n0, noise_std);
        let game = StageGame::anonymous(n0, spec.action_labels.clone(), spec.payoff.clone())?;
        let coop = MixedProfile::pure(&game, &vec![0; n0])?;
        nash_regret(&game, &coop)?.max_regret
    };
    // Exact-monitoring contrast at the smallest population.
    let pm_gain = {
        let mut spec = AnonymousGameSpec::public_goods(n_values[0], 0.0);
        spec.exact_curve = false;
        let instance = build_anonymous_instance(&spec)?;
        let auto = grim_trigger_anonymous(&instance, grim_threshold(n_values[0]))?;
        one_shot_deviation_gain(&instance.game, &instance.signals, &auto, delta)?.xi
    };
    let collapse_n = rows.iter().find(|r| r.collapsed).map(|r| r.n);
    let eta_below_gap_n = rows.iter().find(|r| r.eta_below_gap).map(|r| r.n);
    Ok(CollapseReport {
        delta,
        noise_std,
        stage_gap,
        rows,
        collapse_n,
        eta_below_gap_n,
        perfect_monitoring_gain: pm_gain,
        perfect_monitoring_certified: pm_gain <= 1e-9,
        delta_too_small: pm_gain > 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::finite_dp_gamma;

    #[test]
    fn histogram_sensitivity_closed_form() {
        assert!((histogram_sensitivity(2).unwrap() - 0.70710678).abs() < 1e-7);
        assert!((histogram_sensitivity(50).unwrap() - 0.028284271).abs() < 1e-8);
        assert!(histogram_sensitivity(1).is_err());
    }

    #[test]
    fn histogram_displacement_attains_bound() {
        // Exhaustive neighbor enumeration on a 3-player 3-action profile
        // space: the normalized histogram moves by exactly sqrt(2)/3.
        let n = 3usize;
        let k = 3usize;
        let sizes = vec![k; n];
        let mut worst: f64 = 0.0;
        for a in all_profiles(&sizes) {
            for j in 0..n {
                for dev in 0..k {
                    if dev == a[j] {
                        continue;
                    }
                    let mut b = a.clone();
                    b[j] = dev;
                    let hist = |p: &[usize]| {
                        let mut h = vec![0.0; k];
                        for &x in p {
                            h[x] += 1.0 / n as f64;
                        }
                        h
                    };
                    let ha = hist(&a);
                    let hb = hist(&b);
                    let d: f64 = ha
                        .iter()
                        .zip(&hb)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt();
                    worst = worst.max(d);
                }
            }
        }
        assert!((worst - histogram_sensitivity(n).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn mu_sensitivity_examples() {
        // Own-action-only payoffs have no cross influence.
        let own_only = StageGame::from_tensor(
            vec![vec!["a".into(), "b".into()], vec!["a".into(), "b".into()]],
            vec![
                vec![0.2, 0.8],
                vec![0.2, 0.3],
                vec![0.7, 0.8],
                vec![0.7, 0.3],
            ],
        )
        .unwrap();
        assert_eq!(mu_sensitivity(&own_only).unwrap(), 0.0);

        let pd = crate::game::tests::prisoners_dilemma();
        assert!((mu_sensitivity(&pd).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mu_sensitivity_matches_double_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for _ in 0..5 {
            let sizes = [2usize, 2, 2];
            let actions = sizes
                .iter()
                .map(|&k| (0..k).map(|a| format!("a{a}")).collect())
                .collect();
            let tensor: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
            let g = StageGame::from_tensor(actions, tensor.clone()).unwrap();
            let got = mu_sensitivity(&g).unwrap();
            // Oracle: loop over (victim, deviator) pairs in the other order.
            let mut want: f64 = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    if i == j {
                        continue;
                    }
                    for (rank, a) in all_profiles(&sizes).enumerate() {
                        for dev in 0..2 {
                            if dev == a[j] {
                                continue;
                            }
                            let mut b = a.clone();
                            b[j] = dev;
                            let rank_b = crate::game::profile_rank(&sizes, &b);
                            want = want.max((tensor[rank][i] - tensor[rank_b][i]).abs());
                        }
                    }
                }
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn counterfactual_sensitivity_coordinates() {
        let pd = crate::game::tests::prisoners_dilemma();
        assert_eq!(counterfactual_sensitivity(&pd, 0.0).unwrap(), 0.0);
        let got = counterfactual_sensitivity(&pd, 0.05).unwrap();
        assert!((got - 0.05 * 2.0f64.sqrt()).abs() < 1e-12);
        // n=10, k=2, mu=0.05 -> 0.05 * sqrt(18).
        let rule = AnonymousRule::from_fn(10, 2, |own, _| 0.1 * own as f64);
        let g10 = StageGame::anonymous(10, vec!["x".into(), "y".into()], rule).unwrap();
        let got = counterfactual_sensitivity(&g10, 0.05).unwrap();
        assert!((got - 0.21213203).abs() < 1e-7);
    }

    #[test]
    fn counterfactual_displacement_bounded_and_tight() {
        // Brute force on a random 3-player 2-action game, then a worst-case
        // game attaining the bound exactly.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(67);
        let sizes = [2usize, 2, 2];
        let displacement = |g: &StageGame| -> f64 {
            // Stacked counterfactual vector at a profile: entry (i, c) is
            // u_i(c, a_{-i}).
            let vector = |a: &[usize]| -> Vec<f64> {
                let mut v = Vec::new();
                for i in 0..3 {
                    for c in 0..2 {
                        let mut p = a.to_vec();
                        p[i] = c;
                        v.push(g.payoff(&p, i));
                    }
                }
                v
            };
            let mut worst: f64 = 0.0;
            for a in all_profiles(&sizes) {
                for j in 0..3 {
                    for dev in 0..2 {
                        if dev == a[j] {
                            continue;
                        }
                        let mut b = a.clone();
                        b[j] = dev;
                        let va = vector(&a);
                        let vb = vector(&b);
                        // The deviator's own entries are counterfactuals over
                        // own actions; exclude them as insensitive.
                        let d: f64 = va
                            .iter()
                            .zip(&vb)
                            .enumerate()
                            .filter(|(idx, _)| idx / 2 != j)
                            .map(|(_, (x, y))| (x - y) * (x - y))
                            .sum::<f64>()
                            .sqrt();
                        worst = worst.max(d);
                    }
                }
            }
            worst
        };
        for _ in 0..5 {
            let actions = sizes
                .iter()
                .map(|&k| (0..k).map(|a| format!("a{a}")).collect())
                .collect();
            let tensor: Vec<Vec<f64>> =
                (0..8).map(|_| (0..3).map(|_| rng.gen()).collect()).collect();
            let g = StageGame::from_tensor(actions, tensor).unwrap();
            let mu = mu_sensitivity(&g).unwrap();
            let bound = counterfactual_sensitivity(&g, mu).unwrap();
            assert!(displacement(&g) <= bound + 1e-12);
        }
        // Worst case: every other player's payoff is mu * [player 0 plays 1].
        let mu = 0.25;
        let actions: Vec<Vec<String>> = sizes
            .iter()
            .map(|&k| (0..k).map(|a| format!("a{a}")).collect())
            .collect();
        let tensor: Vec<Vec<f64>> = all_profiles(&sizes)
            .map(|a| {
                (0..3)
                    .map(|i| if i == 0 { 0.5 } else { mu * a[0] as f64 })
                    .collect()
            })
            .collect();
        let g = StageGame::from_tensor(actions, tensor).unwrap();
        assert!((mu_sensitivity(&g).unwrap() - mu).abs() < 1e-15);
        let bound = counterfactual_sensitivity(&g, mu).unwrap();
        assert!((displacement(&g) - bound).abs() < 1e-12, "bound is attained");
    }

    #[test]
    fn cournot_sensitivity_examples() {
        let spec = CournotSpec::standard(20, DemandCurve::exponential(2001));
        let s = cournot_sensitivity(&spec).unwrap();
        assert!((s.first_order - 1.0 / 20.0).abs() < 1e-6);
        let exact = s.exact_displacement.unwrap();
        // First order plus an O(1/n^2) correction envelope.
        assert!(exact <= s.first_order + 2.0 / (20.0 * 20.0));
        assert!(exact > 0.0);

        let linear = CournotSpec::standard(8, DemandCurve::linear_half(2001));
        let s = cournot_sensitivity(&linear).unwrap();
        assert!((s.first_order - 1.0 / 8.0).abs() < 1e-3);
    }

    #[test]
    fn gaussian_discretization_masses_and_support() {
        let disc = discretize_gaussian_signal(
            &[vec![0.0], vec![1.0]],
            1.0,
            0.05,
            6.0,
        )
        .unwrap();
        for row in &disc.rows {
            let total = kahan_sum(row.iter().copied());
            assert!((total - 1.0).abs() < 1e-15);
            assert!(row.iter().all(|&p| p > 0.0));
        }
        // Exact gamma at eps = 1 stays within the analytic value plus slack.
        let sig = SignalStructure::new(
            MonitoringKind::Public,
            vec![2],
            disc.labels.clone(),
            SignalDist::PerProfile(disc.rows.clone()),
            None,
        )
        .unwrap();
        let (g, _) = finite_dp_gamma(&sig, 1.0).unwrap();
        let analytic = gaussian_gamma(1.0, 1.0, 1.0);
        assert!(g <= analytic + 1e-3, "exact {g} vs analytic {analytic}");
        assert!(sig.check_full_support().ok);
    }

    #[test]
    fn identical_centers_are_private() {
        let disc =
            discretize_gaussian_signal(&[vec![0.3], vec![0.3]], 0.5, 0.05, 6.0).unwrap();
        let sig = SignalStructure::new(
            MonitoringKind::Public,
            vec![2],
            disc.labels,
            SignalDist::PerProfile(disc.rows),
            None,
        )
        .unwrap();
        for eps in [0.0, 0.5] {
            let (g, _) = finite_dp_gamma(&sig, eps).unwrap();
            assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn laplace_counter_is_pure_dp() {
        // Unit-scale Laplace on a sensitivity-1 counter: gamma at eps = 1
        // vanishes up to discretization slack.
        let disc = discretize_laplace_signal(
            &[vec![0.0], vec![1.0]],
            1.0,
            0.01,
            8.0,
        )
        .unwrap();
        let sig = SignalStructure::new(
            MonitoringKind::Public,
            vec![2],
            disc.labels,
            SignalDist::PerProfile(disc.rows),
            None,
        )
        .unwrap();
        let (g, _) = finite_dp_gamma(&sig, 1.0).unwrap();
        assert!(g <= 1e-3, "got {g}");
    }

    #[test]
    fn anonymous_instance_curves_agree() {
        let spec = AnonymousGameSpec::public_goods(2, 1.0);
        let built = build_anonymous_instance(&spec).unwrap();
        let exact = built.exact_curve.as_ref().unwrap();
        // Conservative analytic curve: exact gamma never exceeds analytic
        // plus discretization slack, at every grid eps.
        for p in &exact.points {
            let analytic = gaussian_gamma(built.sensitivity, 1.0, p.eps);
            assert!(
                p.gamma <= analytic + 1e-3,
                "eps {}: exact {} analytic {analytic}",
                p.eps,
                p.gamma
            );
        }
        assert!(built.signals.check_full_support().ok);
    }

    #[test]
    fn cournot_instance_builds_and_rescales() {
        let mut spec = CournotSpec::standard(3, DemandCurve::exponential(2001));
        spec.quantity_grid = (0..5).map(|i| i as f64 / 4.0).collect();
        spec.exact_curve = true;
        let built = build_cournot_instance(&spec).unwrap();
        assert!(built.game.rescale().is_some(), "profits start negative");
        assert!(built.exact_curve.is_some());
        assert!(built.signals.check_full_support().ok);
        // Doubling n at fixed demand halves-ish the minimized eps + gamma
        // (the sqrt-log factor keeps the ratio just under 2).
        let rows = scan_family(Family::Cournot, &[10, 20], 1.0, 0.9, None, 2).unwrap();
        let ratio = rows[0].eps_plus_gamma / rows[1].eps_plus_gamma;
        assert!((1.8..2.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn counterfactual_instance_consistency() {
        let spec = CounterfactualSpec {
            game: crate::game::tests::prisoners_dilemma(),
            noise_std: 0.5,
            grid_width: 0.6,
            truncation: 4.0,
            exact_curve: true,
        };
        let built = build_counterfactual_instance(&spec).unwrap();
        assert_eq!(built.signals.kind(), MonitoringKind::Private);
        // Ex-post payoffs estimate stage payoffs up to discretization bias.
        let consistency: f64 = built.metadata["payoff_consistency"].parse().unwrap();
        assert!(consistency < 0.2, "coarse grid bias {consistency}");
        assert!(built.exact_curve.is_some());
        // mu = 2/3 for the dilemma.
        let mu: f64 = built.metadata["mu"].parse().unwrap();
        assert!((mu - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mu_counterfactual_is_perfectly_private() {
        // Payoffs depend only on own action: mu = 0, signals identical.
        let own_only = StageGame::from_tensor(
            vec![vec!["a".into(), "b".into()], vec!["a".into(), "b".into()]],
            vec![
                vec![0.2, 0.8],
                vec![0.2, 0.3],
                vec![0.7, 0.8],
                vec![0.7, 0.3],
            ],
        )
        .unwrap();
        let spec = CounterfactualSpec {
            game: own_only,
            noise_std: 0.5,
            grid_width: 0.6,
            truncation: 4.0,
            exact_curve: false,
        };
        let built = build_counterfactual_instance(&spec).unwrap();
        assert_eq!(built.sensitivity, 0.0);
        assert_eq!(built.analytic_curve.sum_star, 0.0);
        // eta = 0 at any delta.
        assert_eq!(
            crate::repeated::anti_folk_bound(
                0.9,
                &crate::privacy::PrivacyParams { eps: 0.0, gamma: 0.0 }
            )
            .unwrap(),
            0.0
        );
    }

    #[test]
    fn scan_rows_decay_monotonically() {
        let ns = [16usize, 32, 64, 128];
        for family in [Family::Anonymous, Family::Cournot, Family::Counterfactual] {
            let rows = scan_family(family, &ns, 1.0, 0.9, None, 2).unwrap();
            for w in rows.windows(2) {
                assert!(
                    w[1].eta_at_delta <= w[0].eta_at_delta + 1e-15,
                    "{family:?}: eta should decay"
                );
            }
        }
    }

    #[test]
    fn collapse_demo_finds_threshold() {
        let ns = [2usize, 4, 8, 16, 32, 64];
        let report = collapse_demo(0.9, 0.1, &ns).unwrap();
        assert!(report.perfect_monitoring_certified);
        assert!(!report.delta_too_small);
        let n_star = report.collapse_n.expect("collapse threshold exists");
        assert!(n_star > ns[0], "small populations sustain cooperation");
        // Deterministic across reruns.
        let again = collapse_demo(0.9, 0.1, &ns).unwrap();
        assert_eq!(report.collapse_n, again.collapse_n);
        for (a, b) in report.rows.iter().zip(&again.rows) {
            assert_eq!(a.one_shot_gain.to_bits(), b.one_shot_gain.to_bits());
        }
        // Myopic players defect at the smallest population.
        let myopic = collapse_demo(0.0, 0.1, &[2, 4]).unwrap();
        assert_eq!(myopic.collapse_n, Some(2));
        assert!(myopic.delta_too_small);
        // Zero noise: no collapse anywhere at delta = 0.9.
        let exact = collapse_demo(0.9, 0.0, &[2, 4, 8, 16]).unwrap();
        assert_eq!(exact.collapse_n, None);
    }
}
