use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Agent, FactorAgent, FactorState, QuoteUpdater, ZeroIntelligence};
use crate::error::{Error, Result};
use crate::exchange::PortfolioState;
use crate::rng::{self, SimRng};
use crate::types::{Lots, NANOS_PER_MILLI};

/// A parameter given either as a fixed value or as a `[lo, hi]` range drawn per agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Fixed(f64),
    Range([f64; 2]),
}

impl ParamValue {
    fn draw(&self, rng: &mut SimRng) -> f64 {
        match *self {
            ParamValue::Fixed(v) => v,
            ParamValue::Range([lo, hi]) if lo < hi => rng.random_range(lo..hi),
            ParamValue::Range([lo, _]) => lo,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentGroup {
    #[serde(rename = "type")]
    pub kind: String,
    pub count: usize,
    /// Overrides the run seed for this group's parameter draws.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Starting cash in hundredths of a currency unit.
    #[serde(default = "default_cash")]
    pub cash: i64,
    /// Starting sellable lots in every asset.
    #[serde(default = "default_holdings")]
    pub holdings: Lots,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

fn default_cash() -> i64 {
    10_000_000_000
}

fn default_holdings() -> Lots {
    10_000
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    #[serde(default)]
    pub agents: Vec<AgentGroup>,
}

pub struct Spawned {
    pub agents: Vec<Box<dyn Agent>>,
    pub portfolios: Vec<PortfolioState>,
}

const QUOTE_KEYS: &[&str] = &["asset", "period_ms", "offset", "size"];
const ZI_KEYS: &[&str] = &["asset", "rate", "offset_p", "aggression", "market_prob", "size_mu", "size_sigma", "max_open"];
const FACTOR_KEYS: &[&str] = &["period_ms", "threshold", "size"];

struct Draw<'a> {
    params: &'a BTreeMap<String, ParamValue>,
    rng: SimRng,
}

impl Draw<'_> {
    fn get(&mut self, key: &str, default: f64) -> f64 {
        match self.params.get(key) {
            Some(p) => p.draw(&mut self.rng),
            None => default,
        }
    }
}

/// Builds a deterministic population. Agent `i`'s parameters come from a
/// stream keyed by `(seed, i)`.
pub fn spawn_population(spec: &PopulationSpec, assets: usize, seed: u64, factor: &FactorState) -> Result<Spawned> {
    let mut agents: Vec<Box<dyn Agent>> = Vec::new();
    let mut portfolios = Vec::new();
    for g in &spec.agents {
        let keys = match g.kind.as_str() {
            "quote_updater" => QUOTE_KEYS,
            "zero_intelligence" | "zi" => ZI_KEYS,
            "factor" => FACTOR_KEYS,
            other => return Err(Error::UnknownAgentType(other.to_string())),
        };
        if let Some(k) = g.params.keys().find(|k| !keys.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown parameter `{k}` for agent type `{}`", g.kind)));
        }
        for local in 0..g.count {
            let index = agents.len();
            let mut d = Draw { params: &g.params, rng: rng::stream(g.seed.unwrap_or(seed), &[rng::tag::POPULATION, index as u64]) };
            let asset = (d.get("asset", (local % assets.max(1)) as f64) as usize).min(assets.saturating_sub(1));
            let agent: Box<dyn Agent> = match g.kind.as_str() {
                "quote_updater" => Box::new(QuoteUpdater {
                    asset,
                    period: (d.get("period_ms", 3000.0) as u64).max(1) * NANOS_PER_MILLI,
                    offset: d.get("offset", 2.0).round() as i64,
                    size: d.get("size", 1.0).round().max(1.0) as u64,
                }),
                "factor" => Box::new(FactorAgent {
                    assets: (0..assets).collect(),
                    loadings: (0..assets).map(|j| factor.loading(j)).collect(),
                    period: (d.get("period_ms", 1000.0) as u64).max(1) * NANOS_PER_MILLI,
                    threshold: d.get("threshold", 0.5),
                    size: d.get("size", 5.0).round().max(1.0) as u64,
                }),
                _ => {
                    let z = ZeroIntelligence::default();
                    Box::new(ZeroIntelligence {
                        asset,
                        rate: d.get("rate", z.rate),
                        offset_p: d.get("offset_p", z.offset_p).clamp(1e-6, 1.0),
                        aggression: d.get("aggression", z.aggression).clamp(0.0, 1.0),
                        market_prob: d.get("market_prob", z.market_prob).clamp(0.0, 1.0),
                        size_mu: d.get("size_mu", z.size_mu),
                        size_sigma: d.get("size_sigma", z.size_sigma).max(0.0),
                        max_open: d.get("max_open", z.max_open as f64).max(1.0) as usize,
                    })
                }
            };
            agents.push(agent);
            portfolios.push(PortfolioState::new(assets, g.cash, g.holdings));
        }
    }
    Ok(Spawned { agents, portfolios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::FactorSpec;

    fn spec(text: &str) -> PopulationSpec {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn counts_and_types() {
        let f = FactorState::new(&FactorSpec::default(), 2, 1);
        let s = spec("[[agents]]\ntype='zi'\ncount=100\n[[agents]]\ntype='quote_updater'\ncount=100\n");
        let p = spawn_population(&s, 2, 1, &f).unwrap();
        let zi = p.agents.iter().filter(|a| a.kind() == "zero_intelligence").count();
        assert_eq!((p.agents.len(), zi), (200, 100));
        let empty = spec("[[agents]]\ntype='zi'\ncount=0\n");
        assert!(spawn_population(&empty, 2, 1, &f).unwrap().agents.is_empty());
    }

    #[test]
    fn unknown_type_and_param() {
        let f = FactorState::new(&FactorSpec::default(), 1, 1);
        assert!(matches!(spawn_population(&spec("[[agents]]\ntype='hft'\ncount=1\n"), 1, 1, &f), Err(Error::UnknownAgentType(_))));
        assert!(spawn_population(&spec("[[agents]]\ntype='zi'\ncount=1\nparams={speed=1}\n"), 1, 1, &f).is_err());
    }
}
