//! Lossy channel systems, configurations and the loss model.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChanId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MsgId(pub usize);

pub type RuleId = usize;
pub type Word = Vec<MsgId>;
pub type LocSet = BTreeSet<LocId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Send(ChanId, MsgId),
    Recv(ChanId, MsgId),
    Nop,
}

impl Op {
    pub fn is_recv(&self) -> bool {
        matches!(self, Op::Recv(..))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rule {
    pub source: LocId,
    pub target: LocId,
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub loc: LocId,
    pub channels: Vec<Word>,
}

impl Config {
    pub fn empty(lcs: &Lcs, loc: LocId) -> Config {
        Config { loc, channels: vec![Vec::new(); lcs.channels.len()] }
    }

    pub fn is_empty(&self) -> bool {
        self.channels.iter().all(|w| w.is_empty())
    }

    pub fn total_len(&self) -> usize {
        self.channels.iter().map(Vec::len).sum()
    }
}

/// Rule-level description using names, before validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRule {
    pub source: String,
    pub target: String,
    pub op: RawOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawOp {
    Send(String, String),
    Recv(String, String),
    Nop,
}

/// A lossy channel system. Locations are kept sorted by name, channels and
/// messages keep declaration order, rules keep declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lcs {
    pub locations: Vec<String>,
    pub channels: Vec<String>,
    pub messages: Vec<String>,
    pub rules: Vec<Rule>,
}

impl Lcs {
    /// Builds and validates a system from named parts.
    pub fn build(
        locations: &[&str],
        channels: &[&str],
        messages: &[&str],
        rules: &[RawRule],
    ) -> Result<Lcs, Error> {
        let mut locs: Vec<String> = locations.iter().map(|s| s.to_string()).collect();
        locs.sort();
        locs.dedup();
        let chans: Vec<String> = channels.iter().map(|s| s.to_string()).collect();
        let msgs: Vec<String> = messages.iter().map(|s| s.to_string()).collect();
        let mut errors = Vec::new();
        let mut out = Vec::new();
        for (i, r) in rules.iter().enumerate() {
            let lookup = |kind: &'static str, names: &[String], name: &str, errors: &mut Vec<_>| {
                let idx = names.iter().position(|n| n == name);
                if idx.is_none() {
                    errors.push(ValidationError::UndeclaredSymbol {
                        rule: i,
                        kind,
                        name: name.to_string(),
                    });
                }
                idx
            };
            let s = lookup("location", &locs, &r.source, &mut errors);
            let t = lookup("location", &locs, &r.target, &mut errors);
            let op = match &r.op {
                RawOp::Nop => Some(Op::Nop),
                RawOp::Send(c, m) | RawOp::Recv(c, m) => {
                    let c = lookup("channel", &chans, c, &mut errors);
                    let m = lookup("message", &msgs, m, &mut errors);
                    match (c, m) {
                        (Some(c), Some(m)) if matches!(r.op, RawOp::Send(..)) => {
                            Some(Op::Send(ChanId(c), MsgId(m)))
                        }
                        (Some(c), Some(m)) => Some(Op::Recv(ChanId(c), MsgId(m))),
                        _ => None,
                    }
                }
            };
            if let (Some(s), Some(t), Some(op)) = (s, t, op) {
                out.push(Rule { source: LocId(s), target: LocId(t), op });
            }
        }
        let lcs = Lcs { locations: locs, channels: chans, messages: msgs, rules: out };
        if errors.is_empty() {
            if let Err(mut e) = lcs.validate() {
                errors.append(&mut e);
            }
        }
        if errors.is_empty() {
            Ok(lcs)
        } else {
            Err(Error::Invalid(errors))
        }
    }

    /// Checks that every location has a rule that is not a receive.
    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        let mut errors = Vec::new();
        for (i, name) in self.locations.iter().enumerate() {
            if !self.rules.iter().any(|r| r.source == LocId(i) && !r.op.is_recv()) {
                errors.push(ValidationError::TerminalLocation(name.clone()));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    pub fn loc(&self, name: &str) -> Option<LocId> {
        self.locations.binary_search_by(|n| n.as_str().cmp(name)).ok().map(LocId)
    }

    pub fn loc_name(&self, l: LocId) -> &str {
        &self.locations[l.0]
    }

    pub fn all_locations(&self) -> LocSet {
        (0..self.locations.len()).map(LocId).collect()
    }

    pub fn locset(&self, names: &[&str]) -> Result<LocSet, Error> {
        names
            .iter()
            .map(|n| self.loc(n).ok_or_else(|| Error::UnknownLocation(n.to_string())))
            .collect()
    }

    pub fn set_names(&self, set: &LocSet) -> Vec<String> {
        set.iter().map(|l| self.locations[l.0].clone()).collect()
    }

    /// Maps a set of this system into `other` by location name, dropping
    /// names that do not exist there.
    pub fn translate(&self, set: &LocSet, other: &Lcs) -> LocSet {
        set.iter().filter_map(|l| other.loc(self.loc_name(*l))).collect()
    }

    pub fn rules_from(&self, l: LocId) -> impl Iterator<Item = (RuleId, &Rule)> {
        self.rules.iter().enumerate().filter(move |(_, r)| r.source == l)
    }

    pub fn is_enabled(&self, s: &Config, rule: RuleId) -> bool {
        let r = &self.rules[rule];
        r.source == s.loc
            && match r.op {
                Op::Recv(c, m) => s.channels[c.0].first() == Some(&m),
                _ => true,
            }
    }

    pub fn enabled_rules(&self, s: &Config) -> Vec<RuleId> {
        (0..self.rules.len()).filter(|&i| self.is_enabled(s, i)).collect()
    }

    pub fn perfect_step(&self, s: &Config, rule: RuleId) -> Result<Config, Error> {
        if !self.is_enabled(s, rule) {
            return Err(Error::NotEnabled(rule));
        }
        let r = &self.rules[rule];
        let mut channels = s.channels.clone();
        match r.op {
            Op::Send(c, m) => channels[c.0].push(m),
            Op::Recv(c, _) => {
                channels[c.0].remove(0);
            }
            Op::Nop => {}
        }
        Ok(Config { loc: r.target, channels })
    }

    /// All configurations reachable by firing `rule` and then losing
    /// messages, in canonical order.
    pub fn lossy_successors(&self, s: &Config, rule: RuleId, bound: usize) -> Result<Vec<Config>, Error> {
        let t = self.perfect_step(s, rule)?;
        let per_chan: Vec<Vec<Word>> = t
            .channels
            .iter()
            .map(|w| distinct_subwords(w, bound))
            .collect::<Result<_, _>>()?;
        let total = per_chan.iter().try_fold(1usize, |acc, v| acc.checked_mul(v.len()));
        match total {
            Some(n) if n <= bound => {}
            _ => return Err(Error::TooLarge { bound }),
        }
        let mut out = vec![Vec::new()];
        for options in &per_chan {
            let mut next = Vec::with_capacity(out.len() * options.len());
            for prefix in &out {
                for w in options {
                    let mut p: Vec<Word> = prefix.clone();
                    p.push(w.clone());
                    next.push(p);
                }
            }
            out = next;
        }
        let mut configs: Vec<Config> = out.into_iter().map(|channels| Config { loc: t.loc, channels }).collect();
        configs.sort();
        Ok(configs)
    }

    /// Replaces every removed location by a single absorbing `fail`
    /// location. Returns the new system and the id of `fail` in it.
    pub fn restrict_with_fail(&self, remove: &LocSet) -> Result<(Lcs, LocId), Error> {
        if remove.len() >= self.locations.len() && self.all_locations().is_subset(remove) {
            return Err(Error::EmptyRemainder);
        }
        let mut fail = "fail".to_string();
        while self.loc(&fail).is_some() {
            fail.push('\'');
        }
        let kept: Vec<&str> = self
            .locations
            .iter()
            .enumerate()
            .filter(|(i, _)| !remove.contains(&LocId(*i)))
            .map(|(_, n)| n.as_str())
            .collect();
        let mut locations: Vec<String> = kept.iter().map(|s| s.to_string()).collect();
        locations.push(fail.clone());
        locations.sort();
        let pos = |n: &str| LocId(locations.binary_search_by(|x| x.as_str().cmp(n)).unwrap());
        let fail_id = pos(&fail);
        let mut rules = Vec::new();
        for r in &self.rules {
            if remove.contains(&r.source) {
                continue;
            }
            let target = if remove.contains(&r.target) { fail_id } else { pos(self.loc_name(r.target)) };
            rules.push(Rule { source: pos(self.loc_name(r.source)), target, op: r.op });
        }
        rules.push(Rule { source: fail_id, target: fail_id, op: Op::Nop });
        let lcs = Lcs { locations, channels: self.channels.clone(), messages: self.messages.clone(), rules };
        Ok((lcs, fail_id))
    }

    pub fn word_to_string(&self, w: &[MsgId]) -> String {
        let sep = if self.messages.iter().all(|m| m.chars().count() == 1) { "" } else { "." };
        w.iter().map(|m| self.messages[m.0].as_str()).collect::<Vec<_>>().join(sep)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word, Error> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        let single = self.messages.iter().all(|m| m.chars().count() == 1);
        let parts: Vec<String> = if single {
            text.chars().map(|c| c.to_string()).collect()
        } else {
            text.split('.').map(str::to_string).collect()
        };
        parts
            .iter()
            .map(|p| {
                self.messages
                    .iter()
                    .position(|m| m == p)
                    .map(MsgId)
                    .ok_or_else(|| Error::UnknownMessage(p.clone()))
            })
            .collect()
    }

    pub fn config_to_string(&self, s: &Config) -> String {
        let mut out = self.loc_name(s.loc).to_string();
        out.push_str(" :");
        for (c, w) in s.channels.iter().enumerate() {
            out.push_str(&format!(" {}=\"{}\"", self.channels[c], self.word_to_string(w)));
        }
        out
    }

    /// Parses `LOC`, `LOC : "w"` (single channel) or `LOC : c="w" d="v"`.
    /// Channels left out are empty.
    pub fn parse_config(&self, text: &str) -> Result<Config, Error> {
        let bad = |msg: String| Error::Parse { line: 0, msg };
        let (loc, rest) = match text.find(':') {
            Some(i) => (text[..i].trim(), text[i + 1..].trim()),
            None => (text.trim(), ""),
        };
        let loc = self.loc(loc).ok_or_else(|| Error::UnknownLocation(loc.to_string()))?;
        let mut s = Config::empty(self, loc);
        let mut rest = rest;
        while !rest.is_empty() {
            let q = rest.find('"').ok_or_else(|| bad(format!("expected a quoted word in `{text}`")))?;
            let name = rest[..q].trim().trim_end_matches('=').trim();
            let after = &rest[q + 1..];
            let end = after.find('"').ok_or_else(|| bad(format!("unterminated word in `{text}`")))?;
            let chan = if name.is_empty() {
                if self.channels.len() != 1 {
                    return Err(bad("channel name required with several channels".into()));
                }
                0
            } else {
                self.channels
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| bad(format!("unknown channel `{name}`")))?
            };
            s.channels[chan] = self.parse_word(&after[..end])?;
            rest = after[end + 1..].trim_start_matches([',', ' ']);
        }
        Ok(s)
    }

    pub fn rule_to_string(&self, rule: RuleId) -> String {
        let r = &self.rules[rule];
        let op = match r.op {
            Op::Send(c, m) => format!("{} ! {}", self.channels[c.0], self.messages[m.0]),
            Op::Recv(c, m) => format!("{} ? {}", self.channels[c.0], self.messages[m.0]),
            Op::Nop => "nop".to_string(),
        };
        format!("{} -> {} : {}", self.loc_name(r.source), self.loc_name(r.target), op)
    }
}

/// A lossy channel system together with its per-message fault rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nplcs {
    pub lcs: Lcs,
    pub fault_rate: BigRational,
}

impl Nplcs {
    pub fn new(lcs: Lcs, fault_rate: BigRational) -> Result<Nplcs, Error> {
        if fault_rate <= BigRational::zero() || fault_rate >= BigRational::one() {
            return Err(Error::FaultRate(fault_rate.to_string()));
        }
        Ok(Nplcs { lcs, fault_rate })
    }

    pub fn fault_rate_f64(&self) -> f64 {
        ratio_to_f64(&self.fault_rate)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_subword(u: &[MsgId], v: &[MsgId]) -> bool {
    let mut it = v.iter();
    u.iter().all(|a| it.any(|b| b == a))
}

pub fn config_leq(s: &Config, t: &Config) -> bool {
    s.loc == t.loc && s.channels.iter().zip(&t.channels).all(|(u, v)| is_subword(u, v))
}

/// Number of ways to embed `sub` into `w` as a scattered subword.
pub fn count_embeddings(w: &[MsgId], sub: &[MsgId]) -> BigUint {
    let mut dp = vec![BigUint::zero(); sub.len() + 1];
    dp[0] = BigUint::one();
    for a in w {
        for j in (0..sub.len()).rev() {
            if sub[j] == *a {
                let prev = dp[j].clone();
                dp[j + 1] += prev;
            }
        }
    }
    dp[sub.len()].clone()
}

/// Probability that `w` becomes exactly `sub` when each message is lost
/// independently with probability `tau`.
pub fn p_lost(tau: &BigRational, w: &[MsgId], sub: &[MsgId]) -> BigRational {
    if sub.len() > w.len() {
        return BigRational::zero();
    }
    let count = count_embeddings(w, sub);
    if count.is_zero() {
        return BigRational::zero();
    }
    let keep = BigRational::one() - tau;
    let lost = (w.len() - sub.len()) as i32;
    let kept = sub.len() as i32;
    num_traits::pow(tau.clone(), lost as usize)
        * num_traits::pow(keep, kept as usize)
        * BigRational::from_integer(count.into())
}

/// Product of per-channel loss probabilities.
pub fn p_lost_config(tau: &BigRational, from: &Config, to: &Config) -> BigRational {
    if from.loc != to.loc {
        return BigRational::zero();
    }
    from.channels
        .iter()
        .zip(&to.channels)
        .map(|(w, v)| p_lost(tau, w, v))
        .fold(BigRational::one(), |a, b| a * b)
}

/// Distinct subwords of `w` in canonical (length, then lexicographic) order.
pub fn distinct_subwords(w: &[MsgId], bound: usize) -> Result<Vec<Word>, Error> {
    let mut set: HashSet<Word> = HashSet::new();
    set.insert(Vec::new());
    for a in w {
        let extended: Vec<Word> = set
            .iter()
            .map(|u| {
                let mut u = u.clone();
                u.push(*a);
                u
            })
            .collect();
        set.extend(extended);
        if set.len() > bound {
            return Err(Error::TooLarge { bound });
        }
    }
    let mut out: Vec<Word> = set.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(out)
}

/// Exact distribution of the word left after losses. Every probability is
/// a multiple of `1 / denominator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossDistribution {
    pub entries: BTreeMap<Word, BigRational>,
    pub denominator: BigInt,
}

impl LossDistribution {
    pub fn total(&self) -> BigRational {
        let d = &self.denominator;
        let scaled: BigInt = self.entries.values().map(|p| p.numer() * (d / p.denom())).sum();
        BigRational::new(scaled, d.clone())
    }

    pub fn get(&self, w: &[MsgId]) -> BigRational {
        self.entries.get(w).cloned().unwrap_or_else(BigRational::zero)
    }
}

/// One pass over `w` counts the embeddings of every subword at once.
pub fn loss_distribution(tau: &BigRational, w: &[MsgId], bound: usize) -> Result<LossDistribution, Error> {
    let mut counts: BTreeMap<Word, BigUint> = BTreeMap::from([(Vec::new(), BigUint::one())]);
    for a in w {
        let mut next = counts.clone();
        for (u, c) in counts {
            let mut v = u;
            v.push(*a);
            *next.entry(v).or_default() += c;
        }
        if next.len() > bound {
            return Err(Error::TooLarge { bound });
        }
        counts = next;
    }
    let (n, d) = (tau.numer(), tau.denom());
    let keep = d - n;
    let denominator = num_traits::pow(d.clone(), w.len());
    let entries = counts
        .into_iter()
        .map(|(u, c)| {
            let num = num_traits::pow(n.clone(), w.len() - u.len()) * num_traits::pow(keep.clone(), u.len()) * BigInt::from(c);
            (u, BigRational::new(num, denominator.clone()))
        })
        .collect();
    Ok(LossDistribution { entries, denominator })
}

impl fmt::Display for Lcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lcs")?;
        writeln!(f, "channels {}", self.channels.join(" "))?;
        writeln!(f, "messages {}", self.messages.join(" "))?;
        writeln!(f, "locations {}", self.locations.join(" "))?;
        for i in 0..self.rules.len() {
            writeln!(f, "rule {}", self.rule_to_string(i))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn w(s: &str) -> Word {
        s.bytes().map(|b| MsgId((b - b'a') as usize)).collect()
    }

    #[test]
    fn embeddings_of_aaba() {
        let cases = [("a", 3u32), ("aa", 3), ("aba", 2), ("ab", 2), ("", 1), ("b", 1), ("aaa", 1), ("ba", 1), ("bb", 0)];
        for (sub, n) in cases {
            assert_eq!(count_embeddings(&w("aaba"), &w(sub)), BigUint::from(n), "{sub}");
        }
    }

    #[test]
    fn loss_distribution_of_ab() {
        let half = BigRational::new(1.into(), 2.into());
        let d = loss_distribution(&half, &w("ab"), 100).unwrap();
        assert_eq!(d.entries.len(), 4);
        for v in d.entries.values() {
            assert_eq!(*v, BigRational::new(1.into(), 4.into()));
        }
        assert_eq!(d.total(), BigRational::one());
    }

    #[test]
    fn too_large_is_reported() {
        let half = BigRational::new(1.into(), 2.into());
        assert!(matches!(loss_distribution(&half, &w("abcabc"), 4), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn run6_basics() {
        let lcs = fixtures::run6().lcs;
        assert_eq!(lcs.locations.len(), 6);
        assert_eq!(lcs.rules.len(), 12);
        let one = lcs.loc("1").unwrap();
        let s = Config::empty(&lcs, one);
        assert_eq!(lcs.enabled_rules(&s), vec![0]);
        assert!(matches!(lcs.perfect_step(&s, 1), Err(Error::NotEnabled(1))));
    }

    #[test]
    fn terminal_location_rejected() {
        let rules = vec![
            RawRule { source: "p".into(), target: "q".into(), op: RawOp::Recv("c".into(), "a".into()) },
            RawRule { source: "q".into(), target: "q".into(), op: RawOp::Nop },
        ];
        match Lcs::build(&["p", "q"], &["c"], &["a"], &rules) {
            Err(Error::Invalid(e)) => assert_eq!(e, vec![ValidationError::TerminalLocation("p".into())]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undeclared_symbols_listed() {
        let rules = vec![RawRule { source: "p".into(), target: "z".into(), op: RawOp::Send("d".into(), "a".into()) }];
        match Lcs::build(&["p"], &["c"], &["a"], &rules) {
            Err(Error::Invalid(e)) => assert_eq!(e.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn restrict_run6() {
        let lcs = fixtures::run6().lcs;
        let remove = lcs.locset(&["6"]).unwrap();
        let (r, fail) = lcs.restrict_with_fail(&remove).unwrap();
        assert_eq!(r.loc_name(fail), "fail");
        assert_eq!(r.locations.len(), 6);
        // 2 -?a-> 6 and 5 -?b-> 6 now go to fail, plus the fail loop
        let into_fail = r.rules.iter().filter(|x| x.target == fail).count();
        assert_eq!(into_fail, 3);
        assert!(matches!(lcs.restrict_with_fail(&lcs.all_locations()), Err(Error::EmptyRemainder)));
    }
}
