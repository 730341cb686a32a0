//! (eps, gamma) differential-privacy analysis of finite signal structures:
//! the exact worst-event verifier, Gaussian calibration and its inverse,
//! composition rules, subsampling, and signal post-processing.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{golden_section_min, rational_from_f64, Scalar};
use crate::signal::{DpWitness, MonitoringKind, SignalDist, SignalStructure};

/// A privacy guarantee: for every unilateral deviation and every event `E`,
/// `exp(-eps) P'(E) - gamma <= P(E) <= exp(eps) P'(E) + gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub eps: f64,
    pub gamma: f64,
}

impl PrivacyParams {
    pub fn new(eps: f64, gamma: f64) -> Result<Self> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(Error::InvalidParameter(format!("eps {eps} must be >= 0")));
        }
        if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma {gamma} must lie in [0, 1]"
            )));
        }
        Ok(Self { eps, gamma })
    }

    pub fn sum(&self) -> f64 {
        self.eps + self.gamma
    }
}

/// L2 (and optionally L1) sensitivity of a statistic released to players.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub dimension: usize,
    pub l2: f64,
    pub l1: Option<f64>,
}

impl SensitivitySpec {
    pub fn new(dimension: usize, l2: f64) -> Result<Self> {
        if !l2.is_finite() || l2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "l2 sensitivity {l2} must be >= 0"
            )));
        }
        Ok(Self {
            dimension,
            l2,
            l1: None,
        })
    }
}

// ---------------------------------------------------------------------------
// Exact finite verification
// ---------------------------------------------------------------------------

/// Worst-event mass excess of one ordered pair at multiplier `lambda`:
/// `sum_s max(0, p(s) - lambda * q(s))`. The maximizing event is exactly the
/// set where the pointwise ratio exceeds `lambda`, so this equals the maximum
/// over all events of `P(E) - lambda * Q(E)`.
pub fn dp_gamma_pair<S: Scalar>(base: &[S], deviated: &[S], lambda: &S) -> S {
    let mut total = S::zero();
    for (p, q) in base.iter().zip(deviated) {
        let scaled = lambda.clone() * q.clone();
        if *p > scaled {
            total = total + (p.clone() - scaled);
        }
    }
    total
}

/// Smallest `gamma` making the structure `(eps, gamma)`-differentially
/// private, together with an attaining deviation witness. Private structures
/// are verified over their joint signal space.
pub fn finite_dp_gamma(
    sig: &SignalStructure,
    eps: f64,
) -> Result<(f64, Option<DpWitness>)> {
    if !eps.is_finite() || eps < 0.0 {
        return Err(Error::InvalidParameter(format!("eps {eps} must be >= 0")));
    }
    let lambda = eps.exp();
    let mut worst = 0.0;
    let mut witness = None;
    for pair in sig.neighbor_pairs() {
        let g = dp_gamma_pair(pair.base, pair.deviated, &lambda);
        if g > worst {
            worst = g;
            witness = Some(pair.witness);
        }
    }
    Ok((worst, witness))
}

/// Exact-rational variant of [`finite_dp_gamma`]. The stored doubles are read
/// as exact dyadic rationals and the multiplier is supplied by the caller, so
/// independent recomputations agree exactly.
pub fn finite_dp_gamma_exact(
    sig: &SignalStructure,
    lambda: &BigRational,
) -> (BigRational, Option<DpWitness>) {
    let mut worst = BigRational::from_integer(0.into());
    let mut witness = None;
    for pair in sig.neighbor_pairs() {
        let base: Vec<BigRational> = pair.base.iter().map(|&p| rational_from_f64(p)).collect();
        let dev: Vec<BigRational> = pair.deviated.iter().map(|&p| rational_from_f64(p)).collect();
        let g = dp_gamma_pair(&base, &dev, lambda);
        if g > worst {
            worst = g;
            witness = Some(pair.witness);
        }
    }
    (worst, witness)
}

// ---------------------------------------------------------------------------
// Privacy curves
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    ExactFinite,
    AnalyticGaussian,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::ExactFinite => "exact-finite",
            Provenance::AnalyticGaussian => "analytic-gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub eps: f64,
    pub gamma: f64,
}

/// The map `eps -> gamma*(eps)` for one structure, tabulated on a grid, plus
/// the refined minimizer of `eps + gamma(eps)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivacyCurve {
    pub id: String,
    pub provenance: Provenance,
    pub points: Vec<CurvePoint>,
    pub eps_star: f64,
    pub gamma_star: f64,
    pub sum_star: f64,
}

/// Grid refinement tolerance for the `eps + gamma` minimizer.
pub const MIN_REFINE_TOL: f64 = 1e-9;

/// Default evaluation grid: zero plus 64 log-spaced points in `[1e-4, 10]`.
pub fn default_eps_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(65);
    grid.push(0.0);
    let lo: f64 = 1e-4;
    let hi: f64 = 10.0;
    let n = 64;
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        grid.push((lo.ln() + t * (hi.ln() - lo.ln())).exp());
    }
    grid
}

impl PrivacyCurve {
    /// Tabulates `gamma(eps)` on the grid and minimizes `eps + gamma(eps)`,
    /// refining the best bracket by golden section.
    pub fn from_evaluator(
        id: impl Into<String>,
        provenance: Provenance,
        grid: &[f64],
        eval: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidParameter("empty eps grid".into()));
        }
        let mut eps_values: Vec<f64> = grid.to_vec();
        eps_values.sort_by(|a, b| a.total_cmp(b));
        eps_values.dedup();
        if eps_values.iter().any(|&e| !e.is_finite() || e < 0.0) {
            return Err(Error::InvalidParameter("eps grid must be nonnegative".into()));
        }
        let points: Vec<CurvePoint> = eps_values
            .iter()
            .map(|&eps| CurvePoint {
                eps,
                gamma: eval(eps),
            })
            .collect();
        let mut best = 0usize;
        for (i, p) in points.iter().enumerate() {
            if p.eps + p.gamma < points[best].eps + points[best].gamma {
                best = i;
            }
        }
        let lo = if best == 0 { points[0].eps } else { points[best - 1].eps };
        let hi = if best + 1 == points.len() {
            points[best].eps
        } else {
            points[best + 1].eps
        };
        let objective = |eps: f64| eps + eval(eps);
        let mut eps_star = points[best].eps;
        let sum_star = eps_star + points[best].gamma;
        if hi > lo {
            let refined = golden_section_min(lo, hi, MIN_REFINE_TOL, objective);
            if objective(refined) < sum_star {
                eps_star = refined;
            }
        }
        let gamma_star = eval(eps_star);
        Ok(Self {
            id: id.into(),
            provenance,
            points,
            eps_star,
            gamma_star,
            sum_star: eps_star + gamma_star,
        })
    }

    /// Exact curve of a finite structure.
    pub fn exact(id: impl Into<String>, sig: &SignalStructure, grid: &[f64]) -> Result<Self> {
        Self::from_evaluator(id, Provenance::ExactFinite, grid, |eps| {
            finite_dp_gamma(sig, eps).map(|(g, _)| g).unwrap_or(1.0)
        })
    }

    /// Minimum of `eps + gamma(eps)` located on the curve.
    pub fn min_sum(&self) -> f64 {
        self.sum_star
    }
}

// ---------------------------------------------------------------------------
// Gaussian calibration
// ---------------------------------------------------------------------------

/// Noise scale making a statistic of the given L2 sensitivity
/// `(eps, gamma)`-private: `sigma = (s / eps) * sqrt(log(1.25 / gamma))`.
pub fn gaussian_sigma(sens: &SensitivitySpec, eps: f64, gamma: f64) -> Result<f64> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps {eps} must lie in (0, 1)"
        )));
    }
    if !(0.0 < gamma && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} must lie in (0, 1)"
        )));
    }
    Ok(sens.l2 / eps * (1.25 / gamma).ln().sqrt())
}

/// Inverse of the calibration at fixed noise:
/// `gamma(eps) = min(1, 1.25 * exp(-(noise_std * eps / s)^2))`;
/// zero sensitivity is perfectly private at every eps.
pub fn gaussian_gamma(l2_sensitivity: f64, noise_std: f64, eps: f64) -> f64 {
    if l2_sensitivity == 0.0 {
        return 0.0;
    }
    let u = noise_std * eps / l2_sensitivity;
    (1.25 * (-u * u).exp()).min(1.0)
}

/// Analytic privacy curve of the Gaussian mechanism at a fixed noise level.
pub fn gaussian_privacy_curve(
    sens: &SensitivitySpec,
    noise_std: f64,
    grid: &[f64],
) -> Result<PrivacyCurve> {
    if !noise_std.is_finite() || noise_std <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise_std {noise_std} must be positive"
        )));
    }
    let s = sens.l2;
    PrivacyCurve::from_evaluator(
        format!("gaussian(s={s},sigma={noise_std})"),
        Provenance::AnalyticGaussian,
        grid,
        move |eps| gaussian_gamma(s, noise_std, eps),
    )
}

// ---------------------------------------------------------------------------
// Composition, subsampling, Laplace
// ---------------------------------------------------------------------------

/// Coordinatewise sums; `gamma` clipped at 1.
pub fn compose_basic(params: &[PrivacyParams]) -> Result<PrivacyParams> {
    if params.is_empty() {
        return Err(Error::InvalidParameter("empty composition".into()));
    }
    let eps = params.iter().map(|p| p.eps).sum();
    let gamma = params.iter().map(|p| p.gamma).sum::<f64>().min(1.0);
    Ok(PrivacyParams { eps, gamma })
}

/// Advanced composition of `k` mechanisms with a uniform per-mechanism
/// epsilon: `eps = sqrt(2 log(1/slack) k) eps' + k eps' (e^{eps'} - 1)`,
/// `gamma = slack + k gamma_each`.
pub fn compose_advanced(
    k: usize,
    eps_each: f64,
    gamma_each: f64,
    gamma_slack: f64,
) -> Result<PrivacyParams> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !eps_each.is_finite() || eps_each < 0.0 {
        return Err(Error::InvalidParameter("eps_each must be >= 0".into()));
    }
    if !gamma_each.is_finite() || !(0.0..=1.0).contains(&gamma_each) {
        return Err(Error::InvalidParameter("gamma_each must lie in [0, 1]".into()));
    }
    if !gamma_slack.is_finite() || !(0.0 < gamma_slack && gamma_slack <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma_slack {gamma_slack} must lie in (0, 1]"
        )));
    }
    let kf = k as f64;
    let eps = (2.0 * (1.0 / gamma_slack).ln() * kf).sqrt() * eps_each
        + kf * eps_each * (eps_each.exp() - 1.0);
    let gamma = (gamma_slack + kf * gamma_each).min(1.0);
    Ok(PrivacyParams { eps, gamma })
}

/// Observing `k` uniformly subsampled actions out of `n` is `(0, k/n)`-private.
pub fn subsample_privacy(k: usize, n: usize) -> Result<PrivacyParams> {
    if n < 1 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k {k} exceeds n {n}")));
    }
    Ok(PrivacyParams {
        eps: 0.0,
        gamma: k as f64 / n as f64,
    })
}

/// Laplace noise at scale `l1_sensitivity / eps` gives an `(eps, 0)` guarantee.
/// Returns the scale and the claimed parameters.
pub fn laplace_privacy(l1_sensitivity: f64, eps: f64) -> Result<(f64, PrivacyParams)> {
    if !l1_sensitivity.is_finite() || l1_sensitivity < 0.0 {
        return Err(Error::InvalidParameter("l1 sensitivity must be >= 0".into()));
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("eps {eps} must be > 0")));
    }
    Ok((l1_sensitivity / eps, PrivacyParams { eps, gamma: 0.0 }))
}

// ---------------------------------------------------------------------------
// Post-processing and products
// ---------------------------------------------------------------------------

/// Pushes every distribution forward through a total merge map on the signal
/// set. Private structures merge each player's component. Ex-post payoffs do
/// not survive merging and are dropped.
pub fn coarsen_signals(
    sig: &SignalStructure,
    merge_map: &[usize],
    coarse_labels: Vec<String>,
) -> Result<SignalStructure> {
    let m = sig.num_signals();
    if merge_map.len() != m {
        return Err(Error::InvalidParameter(format!(
            "merge map covers {} signals, structure has {m}",
            merge_map.len()
        )));
    }
    let mc = coarse_labels.len();
    if merge_map.iter().any(|&c| c >= mc) {
        return Err(Error::InvalidParameter(
            "merge map target out of range".into(),
        ));
    }
    let n = sig.num_players();
    let push_row = |row: &[f64]| -> Vec<f64> {
        match sig.kind() {
            MonitoringKind::Public => {
                let mut out = vec![0.0; mc];
                for (s, &p) in row.iter().enumerate() {
                    out[merge_map[s]] += p;
                }
                out
            }
            MonitoringKind::Private => {
                let mut out = vec![0.0; mc.pow(n as u32)];
                for (rank, &p) in row.iter().enumerate() {
                    if p == 0.0 {
                        continue;
                    }
                    let tuple = sig.joint_unrank(rank);
                    let coarse = tuple.iter().fold(0, |acc, &s| acc * mc + merge_map[s]);
                    out[coarse] += p;
                }
                out
            }
        }
    };
    let dist = match sig.dist() {
        SignalDist::PerProfile(rows) => {
            SignalDist::PerProfile(rows.iter().map(|r| push_row(r)).collect())
        }
        SignalDist::PerHistogram { index, rows } => SignalDist::PerHistogram {
            index: index.clone(),
            rows: rows.iter().map(|r| push_row(r)).collect(),
        },
    };
    SignalStructure::new(
        sig.kind(),
        sig.action_sizes().to_vec(),
        coarse_labels,
        dist,
        None,
    )
}

/// Independent product of two public structures over the same game shape:
/// signals `S1 x S2`, `P_a(s1, s2) = P1_a(s1) * P2_a(s2)`.
pub fn product_structure(
    first: &SignalStructure,
    second: &SignalStructure,
) -> Result<SignalStructure> {
    if !first.is_public() || !second.is_public() {
        return Err(Error::IncompatibleMonitoring(
            "product helper supports public structures".into(),
        ));
    }
    if first.action_sizes() != second.action_sizes() {
        return Err(Error::DimensionMismatch(
            "product factors must share a game shape".into(),
        ));
    }
    let (rows1, rows2) = match (first.dist(), second.dist()) {
        (SignalDist::PerProfile(a), SignalDist::PerProfile(b)) => (a, b),
        _ => {
            return Err(Error::IncompatibleMonitoring(
                "product helper needs profile-keyed factors".into(),
            ))
        }
    };
    let mut labels = Vec::with_capacity(first.num_signals() * second.num_signals());
    for l1 in first.labels() {
        for l2 in second.labels() {
            labels.push(format!("{l1}|{l2}"));
        }
    }
    let rows = rows1
        .iter()
        .zip(rows2)
        .map(|(r1, r2)| {
            let mut row = Vec::with_capacity(r1.len() * r2.len());
            for &p1 in r1 {
                for &p2 in r2 {
                    row.push(p1 * p2);
                }
            }
            row
        })
        .collect();
    SignalStructure::new(
        MonitoringKind::Public,
        first.action_sizes().to_vec(),
        labels,
        SignalDist::PerProfile(rows),
        None,
    )
}

/// Largest absolute log-likelihood ratio across neighbor pairs and signals;
/// `gamma*(eps) = 0` for every `eps` at or above it when the structure has
/// full support.
pub fn max_log_likelihood_ratio(sig: &SignalStructure) -> f64 {
    let mut worst: f64 = 0.0;
    for pair in sig.neighbor_pairs() {
        for (p, q) in pair.base.iter().zip(pair.deviated) {
            if *p > 0.0 && *q > 0.0 {
                worst = worst.max((p / q).ln().abs());
            } else if *p > 0.0 && *q == 0.0 {
                return f64::INFINITY;
            }
        }
    }
    worst
}
