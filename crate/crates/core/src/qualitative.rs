//! Qualitative queries: eventualities, Büchi and Streett conditions under
//! the four probability thresholds.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fixpoints::{as_core, eventuality_table, prom, safe, Mask, MAX_TARGETS};
use crate::model::{Lcs, LocId, LocSet, Rule};
use crate::reach::control_reach;
use crate::sched::{synth_eventuality_chain, synth_round_robin, synth_safe, synth_stubborn, WitnessScheduler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Threshold {
    #[serde(rename = "=1")]
    One,
    #[serde(rename = "=0")]
    Zero,
    #[serde(rename = "<1")]
    BelowOne,
    #[serde(rename = ">0")]
    Positive,
}

impl Threshold {
    pub const ALL: [Threshold; 4] = [Threshold::One, Threshold::Zero, Threshold::BelowOne, Threshold::Positive];
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Threshold::One => "=1",
            Threshold::Zero => "=0",
            Threshold::BelowOne => "<1",
            Threshold::Positive => ">0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchedulerClass {
    #[serde(rename = "all")]
    All,
    #[serde(rename = "fm")]
    FiniteMemory,
}

impl fmt::Display for SchedulerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchedulerClass::All => "all",
            SchedulerClass::FiniteMemory => "fm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    Yes,
    No,
    Undecidable,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub sets: BTreeMap<String, Vec<String>>,
    pub notes: Vec<String>,
}

impl Certificate {
    fn set(&mut self, lcs: &Lcs, name: impl Into<String>, s: &LocSet) {
        self.sets.insert(name.into(), lcs.set_names(s));
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub answer: Answer,
    pub threshold: Threshold,
    pub scheduler_class: SchedulerClass,
    pub certificate: Certificate,
    pub witness: Option<WitnessScheduler>,
    pub witness_id: Option<String>,
    pub citation: String,
}

impl Verdict {
    fn new(answer: bool, threshold: Threshold, class: SchedulerClass, citation: &str) -> Verdict {
        Verdict {
            answer: if answer { Answer::Yes } else { Answer::No },
            threshold,
            scheduler_class: class,
            certificate: Certificate::default(),
            witness: None,
            witness_id: None,
            citation: citation.to_string(),
        }
    }

    fn undecidable(threshold: Threshold, class: SchedulerClass, citation: &str) -> Verdict {
        Verdict { answer: Answer::Undecidable, ..Verdict::new(false, threshold, class, citation) }
    }

    fn with_witness(mut self, lcs: &Lcs, w: WitnessScheduler) -> Verdict {
        self.witness_id = Some(w.id(lcs));
        self.witness = Some(w);
        self
    }

    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({
            "answer": self.answer,
            "threshold": self.threshold,
            "scheduler_class": self.scheduler_class,
            "certificate": self.certificate,
            "citation": self.citation,
        });
        if let Some(id) = &self.witness_id {
            v["witness_id"] = json!(id);
        }
        v
    }
}

pub const CITE_BUCHI_POSITIVE: &str =
    "undecidable: positive-probability repeated reachability over arbitrary schedulers";
pub const CITE_STREETT_ALL: &str =
    "undecidable: Streett properties over arbitrary schedulers subsume positive repeated reachability";
pub const CITE_OMEGA_ALL: &str =
    "undecidable: omega-regular properties over arbitrary schedulers subsume positive repeated reachability";

fn check_targets(targets: &[LocSet]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::NoTargets);
    }
    if targets.len() > MAX_TARGETS {
        return Err(Error::TooManyTargets { count: targets.len(), limit: MAX_TARGETS });
    }
    Ok(())
}

fn mask_of(targets: &[LocSet], l: LocId) -> Mask {
    targets.iter().enumerate().filter(|(_, a)| a.contains(&l)).map(|(i, _)| 1 << i).sum()
}

/// Product of the control graph with the set of targets visited so far,
/// restricted to pairs reachable from `(q, visited(q))`. Returns the
/// product, the start location and the locations where every target has
/// been visited.
pub fn visited_product(lcs: &Lcs, q: LocId, targets: &[LocSet]) -> (Lcs, LocId, LocSet) {
    let full: Mask = (1 << targets.len()) - 1;
    let start = (q, mask_of(targets, q));
    let mut seen = BTreeMap::new();
    seen.insert(start, ());
    let mut queue = VecDeque::from([start]);
    let mut edges = Vec::new();
    while let Some((p, m)) = queue.pop_front() {
        for (_, r) in lcs.rules_from(p) {
            let next = (r.target, m | mask_of(targets, r.target));
            edges.push(((p, m), next, r.op));
            if seen.insert(next, ()).is_none() {
                queue.push_back(next);
            }
        }
    }
    let name = |(p, m): (LocId, Mask)| format!("{}|{}", lcs.loc_name(p), m);
    let mut locations: Vec<String> = seen.keys().map(|&k| name(k)).collect();
    locations.sort();
    let id = |k| LocId(locations.binary_search(&name(k)).unwrap());
    let rules = edges.iter().map(|&(s, t, op)| Rule { source: id(s), target: id(t), op }).collect();
    let product = Lcs { locations: locations.clone(), channels: lcs.channels.clone(), messages: lcs.messages.clone(), rules };
    let done = seen.keys().filter(|k| k.1 == full).map(|&k| id(k)).collect();
    (product, id(start), done)
}

/// Pr(visit every target) > 0 for some scheduler.
pub fn eventually_pos(lcs: &Lcs, q: LocId, targets: &[LocSet]) -> Result<Verdict> {
    check_targets(targets)?;
    let (product, start, done) = visited_product(lcs, q, targets);
    let yes = control_reach(&product, start, &done)?;
    let mut v = Verdict::new(yes, Threshold::Positive, SchedulerClass::All, "eventuality >0: control reachability in the visited-set product");
    v.certificate.notes.push(format!("product locations: {}", product.locations.len()));
    v.certificate.notes.push("finite-memory schedulers suffice".into());
    Ok(v)
}

/// Pr(visit every target) = 0 for some scheduler: stay in `Safe(¬A_i)`.
pub fn eventually_zero(lcs: &Lcs, q: LocId, targets: &[LocSet]) -> Result<Verdict> {
    check_targets(targets)?;
    let all = lcs.all_locations();
    let mut v = Verdict::new(false, Threshold::Zero, SchedulerClass::All, "eventuality =0: q in the union of Safe(not A_i)");
    let mut witness = None;
    for (i, a) in targets.iter().enumerate() {
        let avoid: LocSet = all.difference(a).copied().collect();
        let s = safe(lcs, &avoid);
        v.certificate.set(lcs, format!("safe(not A{})", i + 1), &s);
        if witness.is_none() && s.contains(&q) {
            witness = Some(synth_safe(lcs, &avoid)?);
        }
    }
    v.certificate.notes.push("memoryless schedulers suffice".into());
    match witness {
        Some(w) => {
            v.answer = Answer::Yes;
            Ok(v.with_witness(lcs, w))
        }
        None => Ok(v),
    }
}

/// Pr(visit every target) < 1 for some scheduler: reach `Safe(¬A_i)`
/// while avoiding `A_i`.
pub fn eventually_lt1(lcs: &Lcs, q: LocId, targets: &[LocSet]) -> Result<Verdict> {
    check_targets(targets)?;
    let all = lcs.all_locations();
    let mut v = Verdict::new(false, Threshold::BelowOne, SchedulerClass::All, "eventuality <1: (q,e) reaches Safe(not A_i) inside not A_i");
    for (i, a) in targets.iter().enumerate() {
        let avoid: LocSet = all.difference(a).copied().collect();
        let s = safe(lcs, &avoid);
        v.certificate.set(lcs, format!("safe(not A{})", i + 1), &s);
        if avoid.contains(&q) && crate::fixpoints::closed_reach_set(lcs, &s, &avoid)?.contains(&q) {
            v.answer = Answer::Yes;
        }
    }
    v.certificate.notes.push("finite-memory schedulers suffice".into());
    Ok(v)
}

/// Pr(visit every target) = 1 for some scheduler.
pub fn eventually_as(lcs: &Lcs, q: LocId, targets: &[LocSet]) -> Result<Verdict> {
    check_targets(targets)?;
    let table = eventuality_table(lcs, targets)?;
    let full: Mask = (1 << targets.len()) - 1;
    let x = &table[&full];
    let mut v = Verdict::new(x.contains(&q), Threshold::One, SchedulerClass::All, "eventuality =1: q in X_{1..n}");
    v.certificate.set(lcs, "X_{1..n}", x);
    v.certificate.notes.push("finite-memory schedulers suffice".into());
    if !v.is_yes() {
        return Ok(v);
    }
    let w = if targets.len() == 1 { synth_stubborn(lcs, &targets[0])? } else { synth_eventuality_chain(lcs, targets)? };
    Ok(v.with_witness(lcs, w))
}

/// Pr(visit every target infinitely often) = 1.
pub fn buchi_as(lcs: &Lcs, q: LocId, targets: &[LocSet], class: SchedulerClass) -> Result<Verdict> {
    check_targets(targets)?;
    let core = as_core(lcs, targets, &lcs.all_locations())?;
    let mut v = Verdict::new(core.contains(&q), Threshold::One, class, "repeated reachability =1: q in the almost-sure core");
    v.certificate.set(lcs, "core", &core);
    for (i, a) in targets.iter().enumerate() {
        v.certificate.set(lcs, format!("safe(prom(A{}))", i + 1), &safe(lcs, &prom(lcs, a)?));
    }
    v.certificate.notes.push("finite-memory schedulers suffice".into());
    if !v.is_yes() {
        return Ok(v);
    }
    let w = synth_round_robin(lcs, targets)?;
    Ok(v.with_witness(lcs, w))
}

/// Pr(visit every target infinitely often) = 0.
pub fn buchi_zero(lcs: &Lcs, q: LocId, targets: &[LocSet], class: SchedulerClass) -> Result<Verdict> {
    check_targets(targets)?;
    let all = lcs.all_locations();
    let mut u = LocSet::new();
    let mut v = Verdict::new(false, Threshold::Zero, class, "repeated reachability =0: q in Prom(union of Safe(not A_i))");
    for (i, a) in targets.iter().enumerate() {
        let s = safe(lcs, &all.difference(a).copied().collect());
        v.certificate.set(lcs, format!("safe(not A{})", i + 1), &s);
        u.extend(s);
    }
    let p = prom(lcs, &u)?;
    v.certificate.set(lcs, "prom(union)", &p);
    v.certificate.notes.push("finite-memory schedulers suffice".into());
    if p.contains(&q) {
        v.answer = Answer::Yes;
    }
    Ok(v)
}

/// Pr(visit every target infinitely often) < 1.
pub fn buchi_lt1(lcs: &Lcs, q: LocId, targets: &[LocSet], class: SchedulerClass) -> Result<Verdict> {
    check_targets(targets)?;
    let all = lcs.all_locations();
    let mut v = Verdict::new(false, Threshold::BelowOne, class, "repeated reachability <1: (q,e) reaches some Safe(not A_i)");
    for (i, a) in targets.iter().enumerate() {
        let s = safe(lcs, &all.difference(a).copied().collect());
        v.certificate.set(lcs, format!("safe(not A{})", i + 1), &s);
        if !s.is_empty() && control_reach(lcs, q, &s)? {
            v.answer = Answer::Yes;
        }
    }
    v.certificate.notes.push("finite-memory schedulers suffice".into());
    Ok(v)
}

/// Pr(visit every target infinitely often) > 0. Decidable only for
/// finite-memory schedulers.
pub fn buchi_pos(lcs: &Lcs, q: LocId, targets: &[LocSet], class: SchedulerClass) -> Result<Verdict> {
    check_targets(targets)?;
    if class == SchedulerClass::All {
        return Ok(Verdict::undecidable(Threshold::Positive, class, CITE_BUCHI_POSITIVE));
    }
    let core = as_core(lcs, targets, &lcs.all_locations())?;
    let yes = !core.is_empty() && control_reach(lcs, q, &core)?;
    let mut v = Verdict::new(yes, Threshold::Positive, class, "repeated reachability >0 (finite memory): (q,e) reaches the almost-sure core");
    v.certificate.set(lcs, "core", &core);
    Ok(v)
}

/// A Streett pair `(A, B)`: if `A` is visited infinitely often then so is `B`.
pub type StreettPair = (LocSet, LocSet);

/// Almost-sure core of `targets` in the system where `remove` is replaced
/// by an absorbing failure location, mapped back to `lcs`.
fn core_avoiding(lcs: &Lcs, remove: &LocSet, targets: &[LocSet]) -> Result<LocSet> {
    if lcs.all_locations().is_subset(remove) {
        return Ok(LocSet::new());
    }
    let (n, fail) = lcs.restrict_with_fail(remove)?;
    let mut universe = n.all_locations();
    universe.remove(&fail);
    let t: Vec<LocSet> = targets.iter().map(|a| lcs.translate(a, &n)).collect();
    let core = as_core(&n, &t, &universe)?;
    Ok(n.translate(&core, lcs))
}

/// `C = ⋃_I C_I`: locations from which some finite-memory scheduler
/// satisfies every pair almost surely by never visiting `A_i` for `i ∉ I`
/// and visiting every `B_i`, `i ∈ I`, infinitely often.
pub fn streett_core(lcs: &Lcs, pairs: &[StreettPair]) -> Result<(LocSet, BTreeMap<Mask, LocSet>)> {
    let n = pairs.len();
    let mut table = BTreeMap::new();
    let mut c = LocSet::new();
    for mask in 0..(1u32 << n) {
        let mut remove = LocSet::new();
        let mut targets = Vec::new();
        for (i, (a, b)) in pairs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                targets.push(b.clone());
            } else {
                remove.extend(a.iter().copied());
            }
        }
        let ci = core_avoiding(lcs, &remove, &targets)?;
        c.extend(ci.iter().copied());
        table.insert(mask, ci);
    }
    Ok((c, table))
}

/// `D_i`: locations from which `A_i` is visited infinitely often almost
/// surely while `B_i` is never visited.
pub fn streett_violation_cores(lcs: &Lcs, pairs: &[StreettPair]) -> Result<Vec<LocSet>> {
    pairs.iter().map(|(a, b)| core_avoiding(lcs, b, std::slice::from_ref(a))).collect()
}

pub fn streett(lcs: &Lcs, q: LocId, pairs: &[StreettPair], threshold: Threshold, class: SchedulerClass) -> Result<Verdict> {
    if pairs.is_empty() {
        return Err(Error::NoTargets);
    }
    if pairs.len() > MAX_TARGETS {
        return Err(Error::TooManyTargets { count: pairs.len(), limit: MAX_TARGETS });
    }
    if class == SchedulerClass::All {
        return Ok(Verdict::undecidable(threshold, class, CITE_STREETT_ALL));
    }
    let mut v = match threshold {
        Threshold::One | Threshold::Positive => {
            let (c, table) = streett_core(lcs, pairs)?;
            let (yes, cite) = if threshold == Threshold::One {
                let p = prom(lcs, &c)?;
                (p.contains(&q), "Streett =1 (finite memory): q in Prom(C)")
            } else {
                (!c.is_empty() && control_reach(lcs, q, &c)?, "Streett >0 (finite memory): (q,e) reaches C")
            };
            let mut v = Verdict::new(yes, threshold, class, cite);
            for (mask, ci) in &table {
                v.certificate.set(lcs, format!("C_{}", mask_label(*mask, pairs.len())), ci);
            }
            v.certificate.set(lcs, "C", &c);
            v
        }
        Threshold::Zero | Threshold::BelowOne => {
            let d = streett_violation_cores(lcs, pairs)?;
            let mut u = LocSet::new();
            for di in &d {
                u.extend(di.iter().copied());
            }
            let (yes, cite) = if threshold == Threshold::Zero {
                (prom(lcs, &u)?.contains(&q), "Streett =0 (finite memory): q in Prom(union of D_i)")
            } else {
                (!u.is_empty() && control_reach(lcs, q, &u)?, "Streett <1 (finite memory): (q,e) reaches some D_i")
            };
            let mut v = Verdict::new(yes, threshold, class, cite);
            for (i, di) in d.iter().enumerate() {
                v.certificate.set(lcs, format!("D_{}", i + 1), di);
            }
            v
        }
    };
    v.certificate.notes.push("answer holds for finite-memory schedulers".into());
    Ok(v)
}

fn mask_label(mask: Mask, n: usize) -> String {
    let items: Vec<String> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", items.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKind {
    Eventually(Vec<LocSet>),
    Buchi(Vec<LocSet>),
    Streett(Vec<StreettPair>),
    Omega(Box<crate::omega::Dsa>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub kind: QueryKind,
    pub threshold: Threshold,
    pub class: SchedulerClass,
    pub start: LocId,
}

pub fn check(lcs: &Lcs, query: &Query) -> Result<Verdict> {
    let q = query.start;
    let class = query.class;
    match &query.kind {
        QueryKind::Eventually(t) => {
            let mut v = match query.threshold {
                Threshold::One => eventually_as(lcs, q, t),
                Threshold::Zero => eventually_zero(lcs, q, t),
                Threshold::BelowOne => eventually_lt1(lcs, q, t),
                Threshold::Positive => eventually_pos(lcs, q, t),
            }?;
            v.scheduler_class = class;
            Ok(v)
        }
        QueryKind::Buchi(t) => match query.threshold {
            Threshold::One => buchi_as(lcs, q, t, class),
            Threshold::Zero => buchi_zero(lcs, q, t, class),
            Threshold::BelowOne => buchi_lt1(lcs, q, t, class),
            Threshold::Positive => buchi_pos(lcs, q, t, class),
        },
        QueryKind::Streett(p) => streett(lcs, q, p, query.threshold, class),
        QueryKind::Omega(d) => crate::omega::omega_check(lcs, q, d, query.threshold, class),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn sets(lcs: &Lcs, v: &[&[&str]]) -> Vec<LocSet> {
        v.iter().map(|s| lcs.locset(s).unwrap()).collect()
    }

    #[test]
    fn run6_buchi_examples() {
        let lcs = fixtures::run6().lcs;
        let l = |n| lcs.loc(n).unwrap();
        let fm = SchedulerClass::FiniteMemory;
        assert!(buchi_as(&lcs, l("1"), &sets(&lcs, &[&["6"]]), fm).unwrap().is_yes());
        let v = buchi_as(&lcs, l("1"), &sets(&lcs, &[&["2"], &["6"]]), fm).unwrap();
        assert_eq!(v.answer, Answer::No);
        assert!(v.certificate.sets["core"].is_empty());
        let v = buchi_pos(&lcs, l("1"), &sets(&lcs, &[&["6"]]), SchedulerClass::All).unwrap();
        assert_eq!(v.answer, Answer::Undecidable);
        assert_eq!(v.citation, CITE_BUCHI_POSITIVE);
    }

    #[test]
    fn run6_eventualities() {
        let lcs = fixtures::run6().lcs;
        let l = |n| lcs.loc(n).unwrap();
        let t = sets(&lcs, &[&["3"]]);
        assert!(eventually_as(&lcs, l("1"), &t).unwrap().witness.is_some());
        assert!(!eventually_as(&lcs, l("4"), &t).unwrap().is_yes());
        assert!(!eventually_pos(&lcs, l("4"), &t).unwrap().is_yes());
        assert!(eventually_zero(&lcs, l("1"), &t).unwrap().is_yes());
        assert!(eventually_lt1(&lcs, l("1"), &t).unwrap().is_yes());
        assert!(!eventually_lt1(&lcs, l("3"), &t).unwrap().is_yes());
        let both = sets(&lcs, &[&["3"], &["6"]]);
        assert!(!eventually_pos(&lcs, l("1"), &both).unwrap().is_yes());
        let seq = sets(&lcs, &[&["1"], &["3"]]);
        assert!(eventually_as(&lcs, l("2"), &seq).unwrap().is_yes());
    }

    #[test]
    fn run6_streett_pair_six_empty() {
        let lcs = fixtures::run6().lcs;
        let pairs = vec![(lcs.locset(&["6"]).unwrap(), LocSet::new())];
        let (c, table) = streett_core(&lcs, &pairs).unwrap();
        assert_eq!(lcs.set_names(&table[&0]), vec!["1", "2", "3", "4", "5"]);
        assert!(table[&1].is_empty());
        assert_eq!(c, table[&0]);
        let v = streett(&lcs, lcs.loc("1").unwrap(), &pairs, Threshold::One, SchedulerClass::FiniteMemory).unwrap();
        assert!(v.is_yes());
    }
}
