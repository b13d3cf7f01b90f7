//! Upward-closed sets of configurations, kept as antichains of minimal
//! elements bucketed by location.

use std::collections::BTreeMap;

use crate::model::{is_subword, Config, Lcs, LocId, LocSet, Op, Rule, Word};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpSet {
    buckets: BTreeMap<LocId, Vec<Vec<Word>>>,
}

fn chans_leq(u: &[Word], v: &[Word]) -> bool {
    u.iter().zip(v).all(|(a, b)| is_subword(a, b))
}

impl UpSet {
    pub fn new() -> UpSet {
        UpSet::default()
    }

    /// The upward closure of `{(l, ε...) : l ∈ set}`, i.e. every
    /// configuration whose location is in `set`.
    pub fn from_locations(lcs: &Lcs, set: &LocSet) -> UpSet {
        let mut u = UpSet::new();
        for l in set {
            u.insert(Config::empty(lcs, *l));
        }
        u
    }

    pub fn contains(&self, s: &Config) -> bool {
        self.buckets
            .get(&s.loc)
            .is_some_and(|b| b.iter().any(|g| chans_leq(g, &s.channels)))
    }

    /// Adds a generator. Returns false when it was already covered.
    pub fn insert(&mut self, s: Config) -> bool {
        let bucket = self.buckets.entry(s.loc).or_default();
        if bucket.iter().any(|g| chans_leq(g, &s.channels)) {
            return false;
        }
        bucket.retain(|g| !chans_leq(&s.channels, g));
        let pos = bucket.binary_search(&s.channels).unwrap_or_else(|p| p);
        bucket.insert(pos, s.channels);
        true
    }

    pub fn union(&self, other: &UpSet) -> UpSet {
        let mut u = self.clone();
        for g in other.generators() {
            u.insert(g);
        }
        u
    }

    pub fn is_subset(&self, other: &UpSet) -> bool {
        self.generators().all(|g| other.contains(&g))
    }

    pub fn generators(&self) -> impl Iterator<Item = Config> + '_ {
        self.buckets
            .iter()
            .flat_map(|(l, b)| b.iter().map(move |c| Config { loc: *l, channels: c.clone() }))
    }

    pub fn len(&self) -> usize {
        self.buckets.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Locations whose empty configuration belongs to the set.
    pub fn empty_locations(&self) -> LocSet {
        self.buckets
            .iter()
            .filter(|(_, b)| b.iter().any(|c| c.iter().all(Vec::is_empty)))
            .map(|(l, _)| *l)
            .collect()
    }

    /// Keeps only generators located in `set`.
    pub fn restrict(&self, set: &LocSet) -> UpSet {
        UpSet {
            buckets: self
                .buckets
                .iter()
                .filter(|(l, _)| set.contains(l))
                .map(|(l, b)| (*l, b.clone()))
                .collect(),
        }
    }

    /// Minimal predecessors under one rule: the upward closure of every
    /// configuration from which firing `rule` (then losing) can land in
    /// the set.
    pub fn pre_rule(&self, rule: &Rule) -> UpSet {
        let mut out = UpSet::new();
        if let Some(b) = self.buckets.get(&rule.target) {
            for c in b {
                let g = Config { loc: rule.target, channels: c.clone() };
                out.insert(pre_generator(&g, rule));
            }
        }
        out
    }

    pub fn to_text(&self, lcs: &Lcs) -> String {
        let mut lines: Vec<String> = self.generators().map(|g| lcs.config_to_string(&g)).collect();
        lines.sort();
        lines.join("\n")
    }
}

/// The unique minimal configuration from which `rule` leads to a
/// configuration above `g`. The rule's target must be `g.loc`.
pub fn pre_generator(g: &Config, rule: &Rule) -> Config {
    debug_assert_eq!(g.loc, rule.target);
    let mut channels = g.channels.clone();
    match rule.op {
        Op::Send(c, m) => {
            if channels[c.0].last() == Some(&m) {
                channels[c.0].pop();
            }
        }
        Op::Recv(c, m) => channels[c.0].insert(0, m),
        Op::Nop => {}
    }
    Config { loc: rule.source, channels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn insert_keeps_antichain() {
        let lcs = fixtures::run6().lcs;
        let one = lcs.loc("1").unwrap();
        let mut u = UpSet::new();
        let cfg = |w: &str| Config { loc: one, channels: vec![lcs.parse_word(w).unwrap()] };
        assert!(u.insert(cfg("ab")));
        assert!(u.insert(cfg("ba")));
        assert!(!u.insert(cfg("abc")));
        assert!(u.insert(cfg("b")));
        assert_eq!(u.len(), 1);
        assert!(u.contains(&cfg("cbc")));
        assert!(!u.contains(&cfg("ac")));
    }

    #[test]
    fn pre_of_send_and_receive() {
        let lcs = fixtures::run6().lcs;
        let l = |n: &str| lcs.loc(n).unwrap();
        let target = Config { loc: l("2"), channels: vec![lcs.parse_word("c").unwrap()] };
        let mut u = UpSet::new();
        u.insert(target);
        // r2: 1 -> 2 : c ? b
        let p = u.pre_rule(&lcs.rules[1]);
        assert_eq!(p.to_text(&lcs), "1 : c=\"bc\"");
        // r4: 2 -> 1 : c ! c applied to (1, "c")
        let mut v = UpSet::new();
        v.insert(Config { loc: l("1"), channels: vec![lcs.parse_word("c").unwrap()] });
        assert_eq!(v.pre_rule(&lcs.rules[3]).to_text(&lcs), "2 : c=\"\"");
    }
}
