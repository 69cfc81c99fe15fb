use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::TimeNs;

/// Message endpoints that can carry distinct propagation delays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Agent,
    Exchange,
    Replay,
    Oracle,
}

/// Propagation delay, `t_recv = t_send + delay(from, to)`.
///
/// A single global constant unless overridden for a (sender, receiver) pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub default_ns: TimeNs,
    #[serde(default)]
    pub pairs: BTreeMap<String, TimeNs>,
    #[serde(skip)]
    resolved: BTreeMap<(Endpoint, Endpoint), TimeNs>,
}

impl LatencyModel {
    pub fn constant(default_ns: TimeNs) -> Self {
        LatencyModel { default_ns, pairs: BTreeMap::new(), resolved: BTreeMap::new() }
    }

    pub fn with_pair(mut self, from: Endpoint, to: Endpoint, ns: TimeNs) -> Self {
        self.pairs.insert(pair_key(from, to), ns);
        self.resolved.insert((from, to), ns);
        self
    }

    /// Rebuilds the pair table after deserialization. Keys look like `agent->exchange`.
    pub fn resolve(&mut self) -> Result<(), String> {
        self.resolved.clear();
        for (k, &ns) in &self.pairs {
            let (a, b) = k.split_once("->").ok_or_else(|| format!("bad latency pair `{k}`"))?;
            self.resolved.insert((parse_endpoint(a)?, parse_endpoint(b)?), ns);
        }
        Ok(())
    }

    pub fn delay(&self, from: Endpoint, to: Endpoint) -> TimeNs {
        self.resolved.get(&(from, to)).copied().unwrap_or(self.default_ns)
    }
}

fn pair_key(from: Endpoint, to: Endpoint) -> String {
    format!("{}->{}", endpoint_name(from), endpoint_name(to))
}

fn endpoint_name(e: Endpoint) -> &'static str {
    match e {
        Endpoint::Agent => "agent",
        Endpoint::Exchange => "exchange",
        Endpoint::Replay => "replay",
        Endpoint::Oracle => "oracle",
    }
}

fn parse_endpoint(s: &str) -> Result<Endpoint, String> {
    match s.trim() {
        "agent" => Ok(Endpoint::Agent),
        "exchange" => Ok(Endpoint::Exchange),
        "replay" => Ok(Endpoint::Replay),
        "oracle" => Ok(Endpoint::Oracle),
        other => Err(format!("unknown endpoint `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_overrides_default() {
        let m = LatencyModel::constant(500).with_pair(Endpoint::Exchange, Endpoint::Agent, 40);
        assert_eq!(m.delay(Endpoint::Agent, Endpoint::Exchange), 500);
        assert_eq!(m.delay(Endpoint::Exchange, Endpoint::Agent), 40);
    }

    #[test]
    fn resolves_from_strings() {
        let mut m = LatencyModel::constant(1);
        m.pairs.insert("agent->exchange".into(), 9);
        m.resolve().unwrap();
        assert_eq!(m.delay(Endpoint::Agent, Endpoint::Exchange), 9);
        m.pairs.insert("agent->mars".into(), 9);
        assert!(m.resolve().is_err());
    }
}
