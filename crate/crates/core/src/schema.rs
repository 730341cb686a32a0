//! JSON documents for games, signal structures, strategies, and reports,
//! plus the CSV emitters. Floats serialize as shortest round-trip decimals
//! (serde_json's default), and map keys are sorted, so equal inputs produce
//! byte-identical documents.
//!
//! Game/signal document:
//! ```json
//! {
//!   "n": 2,
//!   "actions": [["C", "D"], ["C", "D"]],
//!   "payoffs": [[[0.66, 0.66], [0.0, 1.0]], [[1.0, 0.0], [0.33, 0.33]]],
//!   "signals": {
//!     "kind": "public",
//!     "labels": ["g", "b"],
//!     "dist": { "0,0": [0.9, 0.1], "0,1": [0.5, 0.5] }
//!   },
//!   "expost": [[[0.5, 0.1], [0.2, 0.0]], ...]
//! }
//! ```
//! `payoffs` nests one array level per player with the per-player utility
//! vector innermost, or `{"anonymous": {...}}` for population games. Profile
//! keys are comma-joined action indices; histogram-keyed rows (anonymous
//! instances) use `h:` plus comma-joined action counts. Private `dist` rows
//! range over joint signal tuples, ranked with player 1 most significant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::automaton::{PrivateStrategyAutomaton, PublicStrategyAutomaton};
use crate::error::{Error, Result};
use crate::game::{
    all_profiles, num_profiles, AnonymousRule, HistogramIndex, MixedProfile, Payoffs, StageGame,
};
use crate::privacy::PrivacyCurve;
use crate::repeated::RegretReport;
use crate::signal::{ExPostPayoffs, MonitoringKind, SignalDist, SignalStructure};
use crate::suite::ScanRow;

// ---------------------------------------------------------------------------
// Game + signals document
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
pub struct GameDoc {
    pub n: usize,
    pub actions: Vec<Vec<String>>,
    pub payoffs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signals: Option<SignalsDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expost: Option<ExPostPayoffs>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SignalsDoc {
    pub kind: String,
    pub labels: Vec<String>,
    pub dist: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnonymousDoc {
    anonymous: AnonymousTable,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnonymousTable {
    num_actions: usize,
    /// `[own_action, histogram_of_others, payoff]`
    entries: Vec<(usize, Vec<usize>, f64)>,
}

pub fn parse_game_doc(text: &str) -> Result<(StageGame, Option<SignalStructure>)> {
    let doc: GameDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("game document: {e}")))?;
    let game = doc_to_game(&doc)?;
    let sig = match &doc.signals {
        Some(s) => Some(signals_from_doc(s, &game, doc.expost.clone())?),
        None => None,
    };
    Ok((game, sig))
}

/// Accepts either a full game document or a bare signals object.
pub fn parse_signals_doc(text: &str, game: &StageGame) -> Result<SignalStructure> {
    if let Ok(doc) = serde_json::from_str::<GameDoc>(text) {
        if let Some(s) = &doc.signals {
            return signals_from_doc(s, game, doc.expost);
        }
    }
    let s: SignalsDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("signals document: {e}")))?;
    signals_from_doc(&s, game, None)
}

fn doc_to_game(doc: &GameDoc) -> Result<StageGame> {
    if doc.actions.len() != doc.n {
        return Err(Error::Parse(format!(
            "document claims {} players but lists {} action sets",
            doc.n,
            doc.actions.len()
        )));
    }
    if let Ok(anon) = serde_json::from_value::<AnonymousDoc>(doc.payoffs.clone()) {
        let k = anon.anonymous.num_actions;
        if doc.actions.iter().any(|a| a.len() != k) {
            return Err(Error::Parse(
                "anonymous payoffs need identical action sets".into(),
            ));
        }
        let others = HistogramIndex::new(k, doc.n - 1);
        let mut table = vec![vec![None; others.len()]; k];
        for (own, hist, value) in &anon.anonymous.entries {
            let rank = others.rank_of(hist).ok_or_else(|| {
                Error::Parse(format!("histogram {hist:?} does not fit {} others", doc.n - 1))
            })?;
            if *own >= k {
                return Err(Error::Parse(format!("own action {own} out of range")));
            }
            table[*own][rank] = Some(*value);
        }
        let rule = AnonymousRule::from_fn(doc.n, k, |own, hist| {
            let rank = others.rank_of(hist).expect("aligned index");
            table[own][rank].unwrap_or(f64::NAN)
        });
        if rule.entries().any(|(_, _, v)| v.is_nan()) {
            return Err(Error::Parse("anonymous table misses entries".into()));
        }
        return StageGame::anonymous(doc.n, doc.actions[0].clone(), rule);
    }
    // Explicit nested tensor.
    let sizes: Vec<usize> = doc.actions.iter().map(|a| a.len()).collect();
    let mut tensor = vec![Vec::new(); num_profiles(&sizes)];
    fill_tensor(&doc.payoffs, &sizes, doc.n, 0, 0, &mut tensor)?;
    StageGame::from_tensor(doc.actions.clone(), tensor)
}

fn fill_tensor(
    value: &Value,
    sizes: &[usize],
    n: usize,
    depth: usize,
    rank: usize,
    out: &mut [Vec<f64>],
) -> Result<()> {
    let arr = value
        .as_array()
        .ok_or_else(|| Error::Parse("payoff tensor: expected array".into()))?;
    if depth == sizes.len() {
        return Err(Error::Parse("payoff tensor nests too deep".into()));
    }
    if arr.len() != sizes[depth] {
        return Err(Error::Parse(format!(
            "payoff tensor level {depth} has {} entries, expected {}",
            arr.len(),
            sizes[depth]
        )));
    }
    for (a, v) in arr.iter().enumerate() {
        let next_rank = rank * sizes[depth] + a;
        if depth + 1 == sizes.len() {
            let leaf = v
                .as_array()
                .ok_or_else(|| Error::Parse("payoff leaf: expected utility vector".into()))?;
            if leaf.len() != n {
                return Err(Error::Parse(format!(
                    "payoff leaf has {} utilities, expected {n}",
                    leaf.len()
                )));
            }
            out[next_rank] = leaf
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Parse("payoff: expected number".into()))
                })
                .collect::<Result<Vec<f64>>>()?;
        } else {
            fill_tensor(v, sizes, n, depth + 1, next_rank, out)?;
        }
    }
    Ok(())
}

fn signals_from_doc(
    doc: &SignalsDoc,
    game: &StageGame,
    expost: Option<ExPostPayoffs>,
) -> Result<SignalStructure> {
    let kind = match doc.kind.as_str() {
        "public" => MonitoringKind::Public,
        "private" => MonitoringKind::Private,
        other => return Err(Error::Parse(format!("unknown monitoring kind {other}"))),
    };
    let sizes = game.action_sizes();
    let histogram_keyed = doc.dist.keys().next().map(|k| k.starts_with("h:")).unwrap_or(false);
    let dist = if histogram_keyed {
        let k = sizes[0];
        let index = HistogramIndex::new(k, game.num_players());
        let mut rows = vec![None; index.len()];
        for (key, row) in &doc.dist {
            let counts: Vec<usize> = key
                .strip_prefix("h:")
                .ok_or_else(|| Error::Parse(format!("mixed key styles at {key}")))?
                .split(',')
                .map(|t| t.parse().map_err(|e| Error::Parse(format!("key {key}: {e}"))))
                .collect::<Result<_>>()?;
            let rank = index
                .rank_of(&counts)
                .ok_or_else(|| Error::Parse(format!("histogram {counts:?} out of range")))?;
            rows[rank] = Some(row.clone());
        }
        let rows: Option<Vec<Vec<f64>>> = rows.into_iter().collect();
        SignalDist::PerHistogram {
            index,
            rows: rows.ok_or_else(|| Error::Parse("histogram rows missing".into()))?,
        }
    } else {
        let mut rows = vec![None; num_profiles(&sizes)];
        for (key, row) in &doc.dist {
            let profile: Vec<usize> = key
                .split(',')
                .map(|t| t.parse().map_err(|e| Error::Parse(format!("key {key}: {e}"))))
                .collect::<Result<_>>()?;
            if profile.len() != sizes.len() || profile.iter().zip(&sizes).any(|(a, s)| a >= s) {
                return Err(Error::Parse(format!("profile key {key} out of range")));
            }
            rows[crate::game::profile_rank(&sizes, &profile)] = Some(row.clone());
        }
        let rows: Option<Vec<Vec<f64>>> = rows.into_iter().collect();
        SignalDist::PerProfile(
            rows.ok_or_else(|| Error::Parse("distribution rows missing".into()))?,
        )
    };
    SignalStructure::new(kind, sizes, doc.labels.clone(), dist, expost)
}

pub fn game_to_doc(game: &StageGame, sig: Option<&SignalStructure>) -> Result<GameDoc> {
    let sizes = game.action_sizes();
    let payoffs = match game.payoffs() {
        Payoffs::Tensor(tensor) => nested_tensor(tensor, &sizes, 0, 0),
        Payoffs::Anonymous(rule) => {
            let entries: Vec<(usize, Vec<usize>, f64)> = rule
                .entries()
                .map(|(own, hist, v)| (own, hist.to_vec(), v))
                .collect();
            serde_json::to_value(AnonymousDoc {
                anonymous: AnonymousTable {
                    num_actions: rule.num_actions(),
                    entries,
                },
            })
            .expect("serializable")
        }
    };
    let signals = sig.map(signals_to_doc).transpose()?;
    Ok(GameDoc {
        n: game.num_players(),
        actions: game.actions().to_vec(),
        payoffs,
        signals,
        expost: sig.and_then(|s| s.expost().cloned()),
    })
}

fn nested_tensor(tensor: &[Vec<f64>], sizes: &[usize], depth: usize, rank: usize) -> Value {
    if depth == sizes.len() {
        return Value::Array(
            tensor[rank]
                .iter()
                .map(|&u| serde_json::json!(u))
                .collect(),
        );
    }
    Value::Array(
        (0..sizes[depth])
            .map(|a| nested_tensor(tensor, sizes, depth + 1, rank * sizes[depth] + a))
            .collect(),
    )
}

pub fn signals_to_doc(sig: &SignalStructure) -> Result<SignalsDoc> {
    let mut dist = BTreeMap::new();
    match sig.dist() {
        SignalDist::PerProfile(rows) => {
            for (rank, a) in all_profiles(sig.action_sizes()).enumerate() {
                let key = a
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",");
                dist.insert(key, rows[rank].clone());
            }
        }
        SignalDist::PerHistogram { index, rows } => {
            for (rank, hist) in index.iter() {
                let key = format!(
                    "h:{}",
                    hist.iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                );
                dist.insert(key, rows[rank].clone());
            }
        }
    }
    Ok(SignalsDoc {
        kind: match sig.kind() {
            MonitoringKind::Public => "public".into(),
            MonitoringKind::Private => "private".into(),
        },
        labels: sig.labels().to_vec(),
        dist,
    })
}

// ---------------------------------------------------------------------------
// Strategy document
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StrategyDoc {
    Public {
        initial: usize,
        /// `decisions[state][player][action]`
        decisions: Vec<Vec<Vec<f64>>>,
        /// `transitions[state][signal]`
        transitions: Vec<Vec<usize>>,
    },
    Private {
        players: Vec<PrivateAutomatonDoc>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PrivateAutomatonDoc {
    pub initial: usize,
    /// `decisions[state][action]`
    pub decisions: Vec<Vec<f64>>,
    /// `transitions[state][action][signal]`
    pub transitions: Vec<Vec<Vec<usize>>>,
}

/// A parsed strategy profile.
pub enum Strategy {
    Public(PublicStrategyAutomaton),
    Private(Vec<PrivateStrategyAutomaton>),
}

pub fn parse_strategy_doc(text: &str) -> Result<Strategy> {
    let doc: StrategyDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("strategy document: {e}")))?;
    match doc {
        StrategyDoc::Public {
            initial,
            decisions,
            transitions,
        } => {
            let decisions = decisions
                .into_iter()
                .map(MixedProfile::new)
                .collect::<Result<Vec<_>>>()?;
            Ok(Strategy::Public(PublicStrategyAutomaton::new(
                initial,
                decisions,
                transitions,
            )?))
        }
        StrategyDoc::Private { players } => {
            let autos = players
                .into_iter()
                .map(|p| PrivateStrategyAutomaton::new(p.initial, p.decisions, p.transitions))
                .collect::<Result<Vec<_>>>()?;
            Ok(Strategy::Private(autos))
        }
    }
}

pub fn strategy_to_doc(strategy: &Strategy) -> StrategyDoc {
    match strategy {
        Strategy::Public(auto) => StrategyDoc::Public {
            initial: auto.initial(),
            decisions: (0..auto.num_states())
                .map(|w| auto.decision(w).mixes().to_vec())
                .collect(),
            transitions: (0..auto.num_states())
                .map(|w| {
                    (0..auto.num_signals())
                        .map(|s| auto.transition(w, s))
                        .collect()
                })
                .collect(),
        },
        Strategy::Private(autos) => StrategyDoc::Private {
            players: autos
                .iter()
                .map(|a| PrivateAutomatonDoc {
                    initial: a.initial(),
                    decisions: (0..a.num_states()).map(|w| a.decision(w).clone()).collect(),
                    transitions: (0..a.num_states())
                        .map(|w| {
                            (0..a.num_actions())
                                .map(|act| {
                                    (0..a.num_signals())
                                        .map(|s| a.transition(w, act, s))
                                        .collect()
                                })
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        },
    }
}

// ---------------------------------------------------------------------------
// Reports and CSV emitters
// ---------------------------------------------------------------------------

/// Report JSON: `{"instance", "delta", "eta", "xi", "per_state", "verdict"}`
/// plus the recorded payoff rescale and the truncation horizon when present.
pub fn report_to_json(report: &RegretReport) -> Value {
    let mut per_state: Vec<Value> = Vec::with_capacity(report.per_state.len());
    for s in &report.per_state {
        let mut obj = serde_json::json!({
            "state": s.state,
            "regret": s.regret,
            "bound": s.bound,
            "pass": s.pass,
        });
        if let Some(dev) = &s.deviation {
            obj["deviation"] = serde_json::to_value(dev).expect("serializable");
        }
        per_state.push(obj);
    }
    let mut out = serde_json::json!({
        "instance": report.instance,
        "delta": report.delta,
        "eta": report.eta,
        "xi": report.xi,
        "per_state": per_state,
        "verdict": if report.verdict { "pass" } else { "fail" },
    });
    if let Some(r) = report.payoff_rescale {
        out["payoff_rescale"] = serde_json::json!({ "scale": r.scale, "offset": r.offset });
    }
    if let Some(h) = report.horizon {
        out["horizon"] = serde_json::json!(h);
        out["note"] = Value::String(
            "necessary-condition check truncated at the stated horizon".into(),
        );
    }
    out
}

/// Flat CSV: one row per state.
pub fn report_to_csv(report: &RegretReport) -> String {
    let mut out = String::from("instance,delta,eta,xi,state,regret,bound,pass\n");
    for s in &report.per_state {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            report.instance,
            report.delta,
            report.eta,
            report.xi,
            s.state,
            s.regret,
            s.bound,
            s.pass
        ));
    }
    out
}

pub fn curve_to_csv(curve: &PrivacyCurve) -> String {
    let mut out = String::from("eps,gamma,provenance\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{}\n", p.eps, p.gamma, curve.provenance.as_str()));
    }
    out
}

pub fn scan_to_csv(rows: &[ScanRow], monotone: &[bool]) -> String {
    let mut out =
        String::from("n,sensitivity,eps_star,gamma_star,eps_plus_gamma,eta_at_delta,eta_monotone\n");
    for (row, mono) in rows.iter().zip(monotone) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.n,
            row.sensitivity,
            row.eps_star,
            row.gamma_star,
            row.eps_plus_gamma,
            row.eta_at_delta,
            mono
        ));
    }
    out
}
