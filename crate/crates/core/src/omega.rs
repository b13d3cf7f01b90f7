//! Deterministic Streett automata over locations and the product with a
//! channel system.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::model::{Lcs, LocId, LocSet, Rule};
use crate::qualitative::{streett, SchedulerClass, StreettPair, Threshold, Verdict, CITE_OMEGA_ALL};

/// Reads locations; `delta[(z, loc)]` is the next state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dsa {
    pub states: Vec<String>,
    pub initial: usize,
    pub delta: BTreeMap<(usize, String), usize>,
    pub pairs: Vec<(BTreeSet<usize>, BTreeSet<usize>)>,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

impl Dsa {
    /// Text format:
    ///
    /// ```text
    /// dsa
    /// states z0 z1
    /// initial z0
    /// trans z0 --6--> z1
    /// pair A={z0,z1} B={z1}
    /// ```
    pub fn parse(text: &str) -> Result<Dsa> {
        let mut states: Vec<String> = Vec::new();
        let mut initial = None;
        let mut delta = BTreeMap::new();
        let mut pairs = Vec::new();
        let mut header = false;
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let state = |name: &str, states: &[String]| {
                states.iter().position(|s| s == name).ok_or_else(|| perr(n, format!("unknown state `{name}`")))
            };
            match key {
                "dsa" => header = true,
                "states" => states = rest.split_whitespace().map(str::to_string).collect(),
                "initial" => initial = Some(state(rest, &states)?),
                "trans" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let [from, label, to] = parts.as_slice() else {
                        return Err(perr(n, "expected `trans Z --LOC--> Z'`"));
                    };
                    let loc = label
                        .strip_prefix("--")
                        .and_then(|l| l.strip_suffix("-->"))
                        .ok_or_else(|| perr(n, "expected `--LOC-->`"))?;
                    delta.insert((state(from, &states)?, loc.to_string()), state(to, &states)?);
                }
                "pair" => {
                    let a = rest.find("A=").ok_or_else(|| perr(n, "expected `A={...}`"))?;
                    let b = rest.find("B=").ok_or_else(|| perr(n, "expected `B={...}`"))?;
                    let set = |s: &str| -> Result<BTreeSet<usize>> {
                        let s = s.trim();
                        let inner = s
                            .strip_prefix('{')
                            .and_then(|x| x.split('}').next())
                            .ok_or_else(|| perr(n, "expected a braced set"))?;
                        inner.split(',').map(str::trim).filter(|x| !x.is_empty()).map(|x| state(x, &states)).collect()
                    };
                    let (sa, sb) = if a < b { (&rest[a + 2..b], &rest[b + 2..]) } else { (&rest[a + 2..], &rest[b + 2..a]) };
                    pairs.push((set(sa)?, set(sb)?));
                }
                other => return Err(perr(n, format!("unknown keyword `{other}`"))),
            }
        }
        if !header {
            return Err(perr(1, "missing `dsa` header"));
        }
        let initial = initial.ok_or_else(|| perr(0, "missing `initial`"))?;
        Ok(Dsa { states, initial, delta, pairs })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dsa\nstates {}\ninitial {}\n", self.states.join(" "), self.states[self.initial]);
        for ((z, l), t) in &self.delta {
            out.push_str(&format!("trans {} --{}--> {}\n", self.states[*z], l, self.states[*t]));
        }
        let set = |s: &BTreeSet<usize>| s.iter().map(|&z| self.states[z].clone()).collect::<Vec<_>>().join(",");
        for (a, b) in &self.pairs {
            out.push_str(&format!("pair A={{{}}} B={{{}}}\n", set(a), set(b)));
        }
        out
    }

    pub fn step(&self, z: usize, loc: &str) -> Option<usize> {
        self.delta.get(&(z, loc.to_string())).copied()
    }

    /// Fails with `PartialDelta` unless every state has a move on every
    /// location of `lcs`.
    pub fn check_total(&self, lcs: &Lcs) -> Result<()> {
        for (z, name) in self.states.iter().enumerate() {
            for l in &lcs.locations {
                if self.step(z, l).is_none() {
                    return Err(Error::PartialDelta { state: name.clone(), loc: l.clone() });
                }
            }
        }
        Ok(())
    }
}

/// Product system over pairs `(p, z)` reachable from `(q, z₀)` in the
/// control graph, with the Streett pairs lifted to it.
#[derive(Debug, Clone)]
pub struct Product {
    pub lcs: Lcs,
    pub start: LocId,
    pub pairs: Vec<StreettPair>,
    /// `(p, z)` for every product location.
    pub origin: Vec<(LocId, usize)>,
}

/// A rule `p --op--> r` becomes `(p, z) --op--> (r, σ(z, p))`: the
/// automaton reads the location being left.
pub fn product(lcs: &Lcs, dsa: &Dsa, q: LocId) -> Result<Product> {
    dsa.check_total(lcs)?;
    let start = (q, dsa.initial);
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut edges = Vec::new();
    while let Some((p, z)) = queue.pop_front() {
        let z2 = dsa.step(z, lcs.loc_name(p)).expect("total");
        for (_, r) in lcs.rules_from(p) {
            let next = (r.target, z2);
            edges.push(((p, z), next, r.op));
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    let name = |(p, z): (LocId, usize)| format!("{}|{}", lcs.loc_name(p), dsa.states[z]);
    let mut locations: Vec<String> = seen.iter().map(|&k| name(k)).collect();
    locations.sort();
    let ids: BTreeMap<(LocId, usize), LocId> =
        seen.iter().map(|&k| (k, LocId(locations.binary_search(&name(k)).unwrap()))).collect();
    let id = |k| ids[&k];
    let mut origin = vec![(LocId(0), 0); locations.len()];
    for &k in &seen {
        origin[id(k).0] = k;
    }
    let rules = edges.iter().map(|&(s, t, op)| Rule { source: id(s), target: id(t), op }).collect();
    let plcs = Lcs { locations, channels: lcs.channels.clone(), messages: lcs.messages.clone(), rules };
    let lift = |set: &BTreeSet<usize>| -> LocSet {
        seen.iter().filter(|(_, z)| set.contains(z)).map(|&k| id(k)).collect()
    };
    let pairs = dsa.pairs.iter().map(|(a, b)| (lift(a), lift(b))).collect();
    Ok(Product { start: id(start), lcs: plcs, pairs, origin })
}

/// Does some scheduler make the run accepted by `dsa` with the given
/// threshold? Decided for finite-memory schedulers through the product.
pub fn omega_check(lcs: &Lcs, q: LocId, dsa: &Dsa, threshold: Threshold, class: SchedulerClass) -> Result<Verdict> {
    dsa.check_total(lcs)?;
    if class == SchedulerClass::All {
        return Ok(Verdict {
            answer: crate::qualitative::Answer::Undecidable,
            threshold,
            scheduler_class: class,
            certificate: Default::default(),
            witness: None,
            witness_id: None,
            citation: CITE_OMEGA_ALL.into(),
        });
    }
    let p = product(lcs, dsa, q)?;
    let mut v = streett(&p.lcs, p.start, &p.pairs, threshold, class)?;
    v.citation = format!("omega-regular via product: {}", v.citation);
    v.certificate.notes.push(format!("product locations: {}, rules: {}", p.lcs.locations.len(), p.lcs.rules.len()));
    Ok(v)
}

/// Automaton for "visit `target` infinitely often": state `hit` is entered
/// right after leaving a location of `target`.
pub fn infinitely_often(lcs: &Lcs, target: &LocSet) -> Dsa {
    let mut delta = BTreeMap::new();
    for z in 0..2 {
        for (i, l) in lcs.locations.iter().enumerate() {
            delta.insert((z, l.clone()), usize::from(target.contains(&LocId(i))));
        }
    }
    Dsa {
        states: vec!["miss".into(), "hit".into()],
        initial: 0,
        delta,
        pairs: vec![(BTreeSet::from([0, 1]), BTreeSet::from([1]))],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parse_round_trip() {
        let lcs = fixtures::run6().lcs;
        let d = infinitely_often(&lcs, &lcs.locset(&["6"]).unwrap());
        assert_eq!(Dsa::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn partial_delta_rejected() {
        let lcs = fixtures::run6().lcs;
        let mut d = infinitely_often(&lcs, &lcs.locset(&["6"]).unwrap());
        d.delta.remove(&(1, "3".to_string()));
        assert!(matches!(product(&lcs, &d, LocId(0)), Err(Error::PartialDelta { .. })));
    }

    #[test]
    fn sigma_reads_the_source() {
        // a two-location cycle 1 -> 2 -> 1 and an automaton that records the
        // location it read last
        use crate::model::{RawOp, RawRule};
        let rules = vec![
            RawRule { source: "1".into(), target: "2".into(), op: RawOp::Nop },
            RawRule { source: "2".into(), target: "1".into(), op: RawOp::Nop },
        ];
        let lcs = Lcs::build(&["1", "2"], &["c"], &["m"], &rules).unwrap();
        let text = "dsa\nstates s r1 r2\ninitial s\n\
                    trans s --1--> r1\ntrans s --2--> r2\ntrans r1 --1--> r1\ntrans r1 --2--> r2\n\
                    trans r2 --1--> r1\ntrans r2 --2--> r2\npair A={} B={}\n";
        let d = Dsa::parse(text).unwrap();
        let p = product(&lcs, &d, lcs.loc("1").unwrap()).unwrap();
        assert_eq!(p.lcs.locations, vec!["1|r2", "1|s", "2|r1"]);
        let r = &p.lcs.rules[0];
        assert_eq!((p.lcs.loc_name(r.source), p.lcs.loc_name(r.target)), ("1|s", "2|r1"));
    }

    #[test]
    fn run6_infinitely_often_six() {
        let lcs = fixtures::run6().lcs;
        let six = lcs.locset(&["6"]).unwrap();
        let d = infinitely_often(&lcs, &six);
        for q in lcs.all_locations() {
            let a = omega_check(&lcs, q, &d, Threshold::One, SchedulerClass::FiniteMemory).unwrap();
            let b = crate::qualitative::buchi_as(&lcs, q, &[six.clone()], SchedulerClass::FiniteMemory).unwrap();
            assert_eq!(a.answer, b.answer, "{}", lcs.loc_name(q));
        }
    }
}
