//! Backward reachability by saturation of upward-closed sets.

use std::collections::{BTreeMap, VecDeque};

use log::{debug, trace};

use crate::error::{Error, Result};
use crate::model::{is_subword, Config, Lcs, LocId, LocSet, RuleId};
use crate::upsets::{pre_generator, UpSet};

/// Default cap on the number of generators a saturation may create.
pub const DEFAULT_CAP: usize = 200_000;

/// How intermediate configurations of a path are constrained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    /// Every configuration of the path, end points included, lies in X.
    Closed(LocSet),
    /// Every configuration except the last lies in X.
    HalfOpen(LocSet),
    Free,
}

#[derive(Debug, Clone)]
struct Node {
    config: Config,
    /// Rule fired from `config` and the node it lands on after losses.
    parent: Option<(RuleId, usize)>,
}

/// The result of a backward saturation, with parent pointers that give a
/// witness path from every generator to the target.
#[derive(Debug, Clone)]
pub struct Saturation {
    nodes: Vec<Node>,
    live: BTreeMap<LocId, Vec<usize>>,
}

impl Saturation {
    /// Least fixed point of `U ↦ target ∪ ⋃ pre_δ(U)` where δ ranges over
    /// rules whose source lies in `allowed`.
    pub fn run(lcs: &Lcs, target: &UpSet, allowed: &LocSet, cap: usize) -> Result<Saturation> {
        let mut sat = Saturation { nodes: Vec::new(), live: BTreeMap::new() };
        let mut queue = VecDeque::new();
        for g in target.generators() {
            if let Some(i) = sat.insert(g, None) {
                queue.push_back(i);
            }
        }
        let mut by_target: BTreeMap<LocId, Vec<RuleId>> = BTreeMap::new();
        for (i, r) in lcs.rules.iter().enumerate() {
            if allowed.contains(&r.source) {
                by_target.entry(r.target).or_default().push(i);
            }
        }
        let mut processed = 0usize;
        while let Some(i) = queue.pop_front() {
            if !sat.is_live(i) {
                // a smaller generator replaced it and will be expanded instead
                continue;
            }
            processed += 1;
            let g = sat.nodes[i].config.clone();
            for &r in by_target.get(&g.loc).map(Vec::as_slice).unwrap_or(&[]) {
                let p = pre_generator(&g, &lcs.rules[r]);
                if let Some(j) = sat.insert(p, Some((r, i))) {
                    trace!("saturation: {} via rule {}", lcs.config_to_string(&sat.nodes[j].config), r);
                    queue.push_back(j);
                    if sat.nodes.len() > cap {
                        return Err(Error::SaturationLimit(cap));
                    }
                }
            }
        }
        debug!("saturation done: {} nodes, {} expanded, {} live", sat.nodes.len(), processed, sat.live_count());
        Ok(sat)
    }

    fn is_live(&self, i: usize) -> bool {
        let loc = self.nodes[i].config.loc;
        self.live.get(&loc).is_some_and(|v| v.contains(&i))
    }

    fn insert(&mut self, c: Config, parent: Option<(RuleId, usize)>) -> Option<usize> {
        let bucket = self.live.entry(c.loc).or_default();
        let nodes = &self.nodes;
        let leq = |a: &Config, b: &Config| a.channels.iter().zip(&b.channels).all(|(u, v)| is_subword(u, v));
        if bucket.iter().any(|&j| leq(&nodes[j].config, &c)) {
            return None;
        }
        bucket.retain(|&j| !leq(&c, &nodes[j].config));
        let idx = self.nodes.len();
        bucket.push(idx);
        self.nodes.push(Node { config: c, parent });
        Some(idx)
    }

    pub fn live_count(&self) -> usize {
        self.live.values().map(Vec::len).sum()
    }

    pub fn contains(&self, s: &Config) -> bool {
        self.generator_below(s).is_some()
    }

    /// Index of some live generator below `s`.
    pub fn generator_below(&self, s: &Config) -> Option<usize> {
        self.live.get(&s.loc).and_then(|b| {
            b.iter().copied().find(|&j| {
                self.nodes[j].config.channels.iter().zip(&s.channels).all(|(u, v)| is_subword(u, v))
            })
        })
    }

    pub fn upset(&self) -> UpSet {
        let mut u = UpSet::new();
        for b in self.live.values() {
            for &j in b {
                u.insert(self.nodes[j].config.clone());
            }
        }
        u
    }

    /// Locations `x` with `(x, ε)` in the saturated set.
    pub fn empty_locations(&self) -> LocSet {
        self.live
            .iter()
            .filter(|(_, b)| b.iter().any(|&j| self.nodes[j].config.is_empty()))
            .map(|(l, _)| *l)
            .collect()
    }

    pub fn config(&self, node: usize) -> &Config {
        &self.nodes[node].config
    }

    pub fn parent(&self, node: usize) -> Option<(RuleId, usize)> {
        self.nodes[node].parent
    }

    /// The witness path from a node to a target generator: each step is
    /// the configuration and the rule fired there.
    pub fn path(&self, mut node: usize) -> Vec<(Config, RuleId)> {
        let mut out = Vec::new();
        while let Some((r, next)) = self.nodes[node].parent {
            out.push((self.nodes[node].config.clone(), r));
            node = next;
        }
        out
    }

    /// The target generator at the end of the path from `node`.
    pub fn path_end(&self, mut node: usize) -> usize {
        while let Some((_, next)) = self.nodes[node].parent {
            node = next;
        }
        node
    }
}

/// Upward-closed set of configurations that reach `target` through rules
/// fired only from `allowed` locations.
pub fn backward_reach(lcs: &Lcs, target: &UpSet, allowed: &LocSet) -> Result<UpSet> {
    Ok(Saturation::run(lcs, target, allowed, DEFAULT_CAP)?.upset())
}

/// Saturation matching a constraint, for the target given as locations.
pub fn saturate(lcs: &Lcs, target: &LocSet, constraint: &Constraint) -> Result<Saturation> {
    let up = UpSet::from_locations(lcs, target);
    saturate_upset(lcs, &up, constraint)
}

pub fn saturate_upset(lcs: &Lcs, target: &UpSet, constraint: &Constraint) -> Result<Saturation> {
    match constraint {
        Constraint::Closed(x) => Saturation::run(lcs, &target.restrict(x), x, DEFAULT_CAP),
        Constraint::HalfOpen(x) => Saturation::run(lcs, target, x, DEFAULT_CAP),
        Constraint::Free => Saturation::run(lcs, target, &lcs.all_locations(), DEFAULT_CAP),
    }
}

/// Does `s` reach some configuration of `target` (losses happening only
/// after steps) under the given constraint?
pub fn reaches(lcs: &Lcs, s: &Config, target: &UpSet, constraint: &Constraint) -> Result<bool> {
    let sat = saturate_upset(lcs, target, constraint)?;
    let (zero_steps, start_in) = match constraint {
        Constraint::Closed(x) => (x.contains(&s.loc) && target.contains(s), x.contains(&s.loc)),
        Constraint::HalfOpen(x) => (target.contains(s), x.contains(&s.loc)),
        Constraint::Free => (target.contains(s), true),
    };
    if zero_steps {
        return Ok(true);
    }
    if !start_in {
        return Ok(false);
    }
    // The saturated set is closed under losses before the first step,
    // which `s` does not get: test each perfect successor instead.
    for r in lcs.enabled_rules(s) {
        if sat.contains(&lcs.perfect_step(s, r)?) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Can `(q, ε)` reach some location of `a`?
pub fn control_reach(lcs: &Lcs, q: LocId, a: &LocSet) -> Result<bool> {
    if a.contains(&q) {
        return Ok(true);
    }
    let sat = saturate(lcs, a, &Constraint::Free)?;
    Ok(sat.empty_locations().contains(&q))
}

/// Locations `q` such that `(q, ε)` reaches `a`.
pub fn control_reach_set(lcs: &Lcs, a: &LocSet) -> Result<LocSet> {
    let sat = saturate(lcs, a, &Constraint::Free)?;
    let mut out = sat.empty_locations();
    out.extend(a.iter().copied());
    Ok(out)
}

/// Reaching `a` with any contents is the same as reaching it with empty
/// channels, since everything can be lost on the last step.
pub fn reach_with_empty(lcs: &Lcs, q: LocId, a: &LocSet) -> Result<bool> {
    control_reach(lcs, q, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cfg(lcs: &Lcs, l: &str, w: &str) -> Config {
        Config { loc: lcs.loc(l).unwrap(), channels: vec![lcs.parse_word(w).unwrap()] }
    }

    #[test]
    fn run6_into_three_through_one_two() {
        let lcs = fixtures::run6().lcs;
        let target = UpSet::from_locations(&lcs, &lcs.locset(&["3"]).unwrap());
        let r = backward_reach(&lcs, &target, &lcs.locset(&["1", "2"]).unwrap()).unwrap();
        for (l, w) in [("2", "c"), ("1", "bc"), ("2", ""), ("1", "")] {
            assert!(r.contains(&cfg(&lcs, l, w)), "{l} {w}");
        }
        assert!(!r.contains(&cfg(&lcs, "4", "")));
    }

    #[test]
    fn closed_mode_needs_start_inside() {
        let lcs = fixtures::run6().lcs;
        let a = lcs.locset(&["3"]).unwrap();
        let up = UpSet::from_locations(&lcs, &a);
        let x = lcs.locset(&["1", "2"]).unwrap();
        // 3 is outside X so a closed path can never end there
        assert!(!reaches(&lcs, &cfg(&lcs, "1", ""), &up, &Constraint::Closed(x.clone())).unwrap());
        assert!(reaches(&lcs, &cfg(&lcs, "1", ""), &up, &Constraint::HalfOpen(x)).unwrap());
    }

    #[test]
    fn receive_first_step_is_exact() {
        use crate::model::{RawOp, RawRule};
        // (p, "ba") cannot fire ?a: losses only follow a step, and the only
        // other step leaves p for good
        let rules = vec![
            RawRule { source: "p".into(), target: "t".into(), op: RawOp::Recv("c".into(), "a".into()) },
            RawRule { source: "p".into(), target: "z".into(), op: RawOp::Send("c".into(), "b".into()) },
            RawRule { source: "t".into(), target: "t".into(), op: RawOp::Nop },
            RawRule { source: "z".into(), target: "z".into(), op: RawOp::Nop },
        ];
        let lcs = Lcs::build(&["p", "t", "z"], &["c"], &["a", "b"], &rules).unwrap();
        let t = UpSet::from_locations(&lcs, &lcs.locset(&["t"]).unwrap());
        assert!(!reaches(&lcs, &cfg(&lcs, "p", "ba"), &t, &Constraint::Free).unwrap());
        assert!(reaches(&lcs, &cfg(&lcs, "p", "ab"), &t, &Constraint::Free).unwrap());
        // the saturated set itself is closed under losses before the step
        assert!(backward_reach(&lcs, &t, &lcs.all_locations()).unwrap().contains(&cfg(&lcs, "p", "ba")));
    }

    #[test]
    fn four_reaches_six_but_not_three() {
        let lcs = fixtures::run6().lcs;
        let l = |n| lcs.loc(n).unwrap();
        assert!(control_reach(&lcs, l("4"), &lcs.locset(&["6"]).unwrap()).unwrap());
        assert!(!control_reach(&lcs, l("4"), &lcs.locset(&["3"]).unwrap()).unwrap());
    }
}
