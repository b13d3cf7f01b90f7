//! Witness schedulers: finite tables mapping a memory mode and the current
//! configuration to the rule to fire.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fixpoints::{as_core, chain_target, eventuality_table, prom_saturation, safe, Mask};
use crate::model::{Config, Lcs, LocId, LocSet, RuleId};
use crate::reach::{saturate, Constraint, Saturation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedulerKind {
    SafeBlind,
    Stubborn,
    RoundRobin,
    EventualityChain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessScheduler {
    pub kind: SchedulerKind,
    pub modes: Vec<String>,
    pub initial_mode: usize,
    /// Entries for configurations lying on a witness path.
    pub on_path: BTreeMap<(usize, Config), (RuleId, usize)>,
    /// Fallback per location, used off the paths.
    pub recovery: BTreeMap<(usize, LocId), (RuleId, usize)>,
    /// Mode switches applied when a location is entered.
    pub advance: BTreeMap<(usize, LocId), usize>,
}

impl WitnessScheduler {
    fn new(kind: SchedulerKind, modes: Vec<String>, initial_mode: usize) -> Self {
        WitnessScheduler {
            kind,
            modes,
            initial_mode,
            on_path: BTreeMap::new(),
            recovery: BTreeMap::new(),
            advance: BTreeMap::new(),
        }
    }

    /// Mode after the switches triggered by standing in `loc`.
    pub fn settle(&self, mut mode: usize, loc: LocId) -> usize {
        for _ in 0..self.modes.len() {
            match self.advance.get(&(mode, loc)) {
                Some(&m) => mode = m,
                None => break,
            }
        }
        mode
    }

    /// The rule to fire at `s` in `mode` and the mode afterwards.
    pub fn decide(&self, mode: usize, s: &Config) -> Result<(RuleId, usize)> {
        let m = self.settle(mode, s.loc);
        if let Some(&d) = self.on_path.get(&(m, s.clone())) {
            return Ok(d);
        }
        if let Some(&d) = self.recovery.get(&(m, s.loc)) {
            return Ok(d);
        }
        Err(Error::Undefined { mode: m, config: format!("{:?}", s) })
    }

    pub fn to_json(&self, lcs: &Lcs) -> String {
        serde_json::to_string_pretty(&self.to_file(lcs)).expect("scheduler serializes")
    }

    pub fn from_json(lcs: &Lcs, text: &str) -> Result<WitnessScheduler> {
        let f: SchedulerFile =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })?;
        let loc = |n: &str| lcs.loc(n).ok_or_else(|| Error::UnknownLocation(n.to_string()));
        let mut s = WitnessScheduler::new(f.kind, f.modes, f.initial_mode);
        for e in f.on_path {
            s.on_path.insert((e.mode, lcs.parse_config(&e.config)?), (e.rule, e.next_mode));
        }
        for e in f.recovery {
            s.recovery.insert((e.mode, loc(&e.location)?), (e.rule, e.next_mode));
        }
        for e in f.advance {
            s.advance.insert((e.mode, loc(&e.location)?), e.next_mode);
        }
        Ok(s)
    }

    fn to_file(&self, lcs: &Lcs) -> SchedulerFile {
        SchedulerFile {
            kind: self.kind,
            modes: self.modes.clone(),
            initial_mode: self.initial_mode,
            on_path: self
                .on_path
                .iter()
                .map(|((mode, c), (rule, next))| PathEntry {
                    mode: *mode,
                    config: lcs.config_to_string(c),
                    rule: *rule,
                    next_mode: *next,
                })
                .collect(),
            recovery: self
                .recovery
                .iter()
                .map(|((mode, l), (rule, next))| RecoveryEntry {
                    mode: *mode,
                    location: lcs.loc_name(*l).to_string(),
                    rule: *rule,
                    next_mode: *next,
                })
                .collect(),
            advance: self
                .advance
                .iter()
                .map(|((mode, l), next)| AdvanceEntry { mode: *mode, location: lcs.loc_name(*l).to_string(), next_mode: *next })
                .collect(),
        }
    }

    /// Short content hash of the serialized table.
    pub fn id(&self, lcs: &Lcs) -> String {
        let digest = Sha256::digest(self.to_json(lcs).as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", kind_tag(self.kind))
    }
}

fn kind_tag(k: SchedulerKind) -> &'static str {
    match k {
        SchedulerKind::SafeBlind => "safe",
        SchedulerKind::Stubborn => "stubborn",
        SchedulerKind::RoundRobin => "roundrobin",
        SchedulerKind::EventualityChain => "chain",
    }
}

#[derive(Serialize, Deserialize)]
struct SchedulerFile {
    kind: SchedulerKind,
    modes: Vec<String>,
    initial_mode: usize,
    on_path: Vec<PathEntry>,
    recovery: Vec<RecoveryEntry>,
    advance: Vec<AdvanceEntry>,
}

#[derive(Serialize, Deserialize)]
struct PathEntry {
    mode: usize,
    config: String,
    rule: RuleId,
    next_mode: usize,
}

#[derive(Serialize, Deserialize)]
struct RecoveryEntry {
    mode: usize,
    location: String,
    rule: RuleId,
    next_mode: usize,
}

#[derive(Serialize, Deserialize)]
struct AdvanceEntry {
    mode: usize,
    location: String,
    next_mode: usize,
}

/// Lowest-index send or internal rule from `x` into `into`.
fn rule_into(lcs: &Lcs, x: LocId, into: &LocSet) -> Option<RuleId> {
    lcs.rules_from(x).find(|(_, r)| !r.op.is_recv() && into.contains(&r.target)).map(|(i, _)| i)
}

fn first_non_recv(lcs: &Lcs, x: LocId) -> RuleId {
    lcs.rules_from(x).find(|(_, r)| !r.op.is_recv()).map(|(i, _)| i).expect("validated system")
}

/// Records the witness path of `(x, ε)` for every `x` in `from`, sharing
/// suffixes with paths already present, and sets the recovery rule of `x`
/// to the first rule of its path.
fn add_paths(lcs: &Lcs, s: &mut WitnessScheduler, mode: usize, sat: &Saturation, from: &LocSet) {
    for &x in from {
        let start = Config::empty(lcs, x);
        let Some(node) = sat.generator_below(&start) else { continue };
        let path = sat.path(node);
        if let Some((_, r)) = path.first() {
            s.recovery.insert((mode, x), (*r, mode));
        }
        for (c, r) in path {
            if s.on_path.contains_key(&(mode, c.clone())) {
                break;
            }
            s.on_path.insert((mode, c), (r, mode));
        }
    }
}

fn fill_recovery(lcs: &Lcs, s: &mut WitnessScheduler, mode: usize) {
    for x in lcs.all_locations() {
        s.recovery.entry((mode, x)).or_insert((first_non_recv(lcs, x), mode));
    }
}

/// Memoryless scheduler that stays inside `Safe(a)`.
pub fn synth_safe(lcs: &Lcs, a: &LocSet) -> Result<WitnessScheduler> {
    let sa = safe(lcs, a);
    if sa.is_empty() {
        return Err(Error::EmptySafe);
    }
    let mut s = WitnessScheduler::new(SchedulerKind::SafeBlind, vec!["blind".into()], 0);
    for &x in &sa {
        let r = rule_into(lcs, x, &sa).expect("safe location has a rule inside");
        s.recovery.insert((0, x), (r, 0));
    }
    Ok(s)
}

/// Follows the witness path to `a` from every location of `Prom(a)`,
/// restarting the path of the current location whenever losses push the
/// configuration off the table.
pub fn synth_stubborn(lcs: &Lcs, a: &LocSet) -> Result<WitnessScheduler> {
    let (p, sat) = prom_saturation(lcs, a)?;
    if p.is_empty() {
        return Err(Error::EmptyProm);
    }
    let mut s = WitnessScheduler::new(SchedulerKind::Stubborn, vec!["stubborn".into()], 0);
    let from: LocSet = p.difference(a).copied().collect();
    add_paths(lcs, &mut s, 0, &sat, &from);
    fill_recovery(lcs, &mut s, 0);
    Ok(s)
}

/// Cycles through the targets inside the almost-sure core, running a
/// stubborn scheduler towards the current target.
pub fn synth_round_robin(lcs: &Lcs, targets: &[LocSet]) -> Result<WitnessScheduler> {
    if targets.is_empty() {
        return Err(Error::NoTargets);
    }
    let y = as_core(lcs, targets, &lcs.all_locations())?;
    if y.is_empty() {
        return Err(Error::EmptyCore);
    }
    let n = targets.len();
    let modes = (1..=n).map(|i| format!("target{i}")).collect();
    let mut s = WitnessScheduler::new(SchedulerKind::RoundRobin, modes, 0);
    for (i, a) in targets.iter().enumerate() {
        let goal: LocSet = a.intersection(&y).copied().collect();
        let sat = saturate(lcs, &goal, &Constraint::Closed(y.clone()))?;
        let from: LocSet = y.difference(a).copied().collect();
        add_paths(lcs, &mut s, i, &sat, &from);
        for &x in &goal {
            let r = rule_into(lcs, x, &y).expect("core is safe");
            s.recovery.insert((i, x), (r, i));
        }
        fill_recovery(lcs, &mut s, i);
        for &x in a {
            s.advance.insert((i, x), (i + 1) % n);
        }
    }
    Ok(s)
}

fn mask_name(mask: Mask, n: usize) -> String {
    let items: Vec<String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

/// Visits every target with probability one. Mode `I` holds the targets
/// still to visit and runs a stubborn scheduler towards the locations of
/// `A_i ∩ X_{I∖i}`.
pub fn synth_eventuality_chain(lcs: &Lcs, targets: &[LocSet]) -> Result<WitnessScheduler> {
    if targets.is_empty() {
        return Err(Error::NoTargets);
    }
    let n = targets.len();
    let table = eventuality_table(lcs, targets)?;
    let full: Mask = (1 << n) - 1;
    if table[&full].is_empty() {
        return Err(Error::EmptyProm);
    }
    let modes = (0..=full).map(|m| mask_name(m, n)).collect();
    let mut s = WitnessScheduler::new(SchedulerKind::EventualityChain, modes, full as usize);
    for mask in 0..=full {
        let mode = mask as usize;
        if mask != 0 {
            let goal = chain_target(targets, &table, mask);
            let (p, sat) = prom_saturation(lcs, &goal)?;
            debug_assert_eq!(p, table[&mask]);
            let from: LocSet = p.difference(&goal).copied().collect();
            add_paths(lcs, &mut s, mode, &sat, &from);
        }
        fill_recovery(lcs, &mut s, mode);
        for x in lcs.all_locations() {
            let hit: Mask = (0..n).filter(|&i| targets[i].contains(&x)).map(|i| 1 << i).sum();
            let next = mask & !hit;
            if next != mask {
                s.advance.insert((mode, x), next as usize);
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::is_subword;

    fn cfg(lcs: &Lcs, l: &str, w: &str) -> Config {
        Config { loc: lcs.loc(l).unwrap(), channels: vec![lcs.parse_word(w).unwrap()] }
    }

    #[test]
    fn safe_blind_run6() {
        let lcs = fixtures::run6().lcs;
        let s = synth_safe(&lcs, &lcs.locset(&["1", "2", "3"]).unwrap()).unwrap();
        let rules: Vec<RuleId> = ["1", "2", "3"].iter().map(|l| s.decide(0, &cfg(&lcs, l, "ab")).unwrap().0).collect();
        assert_eq!(rules, vec![0, 2, 6]);
        let s = synth_safe(&lcs, &lcs.locset(&["4", "5"]).unwrap()).unwrap();
        assert_eq!(s.decide(0, &cfg(&lcs, "4", "")).unwrap().0, 7);
        assert_eq!(s.decide(0, &cfg(&lcs, "5", "")).unwrap().0, 9);
        assert!(matches!(synth_safe(&lcs, &lcs.locset(&["1", "5"]).unwrap()), Err(Error::EmptySafe)));
    }

    #[test]
    fn stubborn_run6_six_contains_paper_paths() {
        let lcs = fixtures::run6().lcs;
        let s = synth_stubborn(&lcs, &lcs.locset(&["6"]).unwrap()).unwrap();
        // 4 -> 4 -> 4 -> 5 -> 6 through (4,b), (4,bb), (5,b)
        let chain = [("4", "", 7), ("4", "b", 7), ("4", "bb", 8), ("5", "b", 10), ("5", "", 9), ("1", "", 0), ("2", "a", 4)];
        for (l, w, r) in chain {
            assert_eq!(s.decide(0, &cfg(&lcs, l, w)).unwrap().0, r, "{l} {w}");
        }
    }

    #[test]
    fn stubborn_paths_are_lossy_steps() {
        let lcs = fixtures::run6().lcs;
        for target in [vec!["3"], vec!["6"], vec!["3", "6"]] {
            let a = lcs.locset(&target).unwrap();
            let (p, sat) = prom_saturation(&lcs, &a).unwrap();
            let s = synth_stubborn(&lcs, &a).unwrap();
            for &x in p.difference(&a) {
                let node = sat.generator_below(&Config::empty(&lcs, x)).unwrap();
                let path = sat.path(node);
                let mut configs: Vec<Config> = path.iter().map(|(c, _)| c.clone()).collect();
                configs.push(sat.config(sat.path_end(node)).clone());
                assert!(a.contains(&configs.last().unwrap().loc));
                for (i, (c, r)) in path.iter().enumerate() {
                    assert_eq!(s.decide(0, c).unwrap().0, *r);
                    let t = lcs.perfect_step(c, *r).unwrap();
                    assert_eq!(t.loc, configs[i + 1].loc);
                    assert!(is_subword(&configs[i + 1].channels[0], &t.channels[0]));
                }
            }
        }
    }

    #[test]
    fn stubborn_off_table_uses_recovery() {
        let lcs = fixtures::run6().lcs;
        let s = synth_stubborn(&lcs, &lcs.locset(&["3"]).unwrap()).unwrap();
        assert_eq!(s.decide(0, &cfg(&lcs, "1", "ccc")).unwrap().0, 0);
    }

    #[test]
    fn json_round_trip() {
        let lcs = fixtures::run6().lcs;
        let targets = [lcs.locset(&["1"]).unwrap(), lcs.locset(&["2"]).unwrap()];
        for s in [
            synth_stubborn(&lcs, &lcs.locset(&["6"]).unwrap()).unwrap(),
            synth_round_robin(&lcs, &targets).unwrap(),
            synth_eventuality_chain(&lcs, &targets).unwrap(),
        ] {
            let text = s.to_json(&lcs);
            assert_eq!(WitnessScheduler::from_json(&lcs, &text).unwrap(), s);
        }
    }

    #[test]
    fn round_robin_empty_core() {
        let lcs = fixtures::run6().lcs;
        let t = [lcs.locset(&["2"]).unwrap(), lcs.locset(&["6"]).unwrap()];
        assert!(matches!(synth_round_robin(&lcs, &t), Err(Error::EmptyCore)));
    }
}
