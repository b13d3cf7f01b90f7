//! Text formats: model files, location sets, queries and simulation events.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::model::{Lcs, LocSet, Nplcs, RawOp, RawRule};
use crate::omega::Dsa;
use crate::qualitative::{Query, QueryKind, SchedulerClass, StreettPair, Threshold};
use crate::sched::{synth_eventuality_chain, synth_round_robin, synth_safe, synth_stubborn, WitnessScheduler};
use crate::sim::SimEvent;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn parse_fraction(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let (n, d) = t.split_once('/').unwrap_or((t, "1"));
    let n: BigInt = n.trim().parse().map_err(|_| perr(0, format!("bad fraction `{t}`")))?;
    let d: BigInt = d.trim().parse().map_err(|_| perr(0, format!("bad fraction `{t}`")))?;
    if d == BigInt::from(0) {
        return Err(perr(0, "zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

/// ```text
/// lcs
/// channels c
/// messages a b c
/// locations 1 2 3
/// rule 1 -> 2 : c ! a
/// rule 2 -> 3 : c ? b
/// rule 3 -> 3 : nop
/// fault_rate 1/2
/// ```
///
/// `#` starts a comment. Without `fault_rate` the rate is 1/2.
pub fn parse_model(text: &str) -> Result<Nplcs> {
    let mut header = false;
    let mut channels = Vec::new();
    let mut messages = Vec::new();
    let mut locations = Vec::new();
    let mut rules = Vec::new();
    let mut tau = BigRational::new(1.into(), 2.into());
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let words = || rest.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        match key {
            "lcs" => header = true,
            "channels" => channels = words(),
            "messages" => messages = words(),
            "locations" => locations = words(),
            "fault_rate" => tau = parse_fraction(rest).map_err(|_| perr(n, format!("bad fault rate `{rest}`")))?,
            "rule" => rules.push(parse_rule(rest).map_err(|m| perr(n, m))?),
            other => return Err(perr(n, format!("unknown keyword `{other}`"))),
        }
    }
    if !header {
        return Err(perr(1, "missing `lcs` header"));
    }
    fn as_refs(v: &[String]) -> Vec<&str> {
        v.iter().map(|s| s.as_str()).collect()
    }
    let l = as_refs(&locations);
    let c = as_refs(&channels);
    let m = as_refs(&messages);
    let lcs = Lcs::build(&l, &c, &m, &rules)?;
    Nplcs::new(lcs, tau)
}

fn parse_rule(text: &str) -> std::result::Result<RawRule, String> {
    let spaced = text.replace("->", " -> ").replace(':', " : ").replace('!', " ! ").replace('?', " ? ");
    let t: Vec<&str> = spaced.split_whitespace().collect();
    let shape = "expected `SRC -> DST : CH ! MSG`, `SRC -> DST : CH ? MSG` or `SRC -> DST : nop`";
    match t.as_slice() {
        [s, "->", d, ":", "nop"] => Ok(RawRule { source: s.to_string(), target: d.to_string(), op: RawOp::Nop }),
        [s, "->", d, ":", c, op @ ("!" | "?"), m] => {
            let (c, m) = (c.to_string(), m.to_string());
            let op = if *op == "!" { RawOp::Send(c, m) } else { RawOp::Recv(c, m) };
            Ok(RawRule { source: s.to_string(), target: d.to_string(), op })
        }
        _ => Err(shape.to_string()),
    }
}

pub fn emit_model(n: &Nplcs) -> String {
    format!("{}fault_rate {}\n", n.lcs, n.fault_rate)
}

/// `{l1,l2}`; the empty set is `{}`.
pub fn parse_set(lcs: &Lcs, text: &str) -> Result<LocSet> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| perr(0, format!("expected a set like {{1,2}}, got `{t}`")))?;
    inner
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| lcs.loc(x).ok_or_else(|| Error::UnknownLocation(x.to_string())))
        .collect()
}

pub fn parse_sets(lcs: &Lcs, text: &str) -> Result<Vec<LocSet>> {
    text.split(';').filter(|s| !s.trim().is_empty()).map(|s| parse_set(lcs, s)).collect()
}

fn parse_pairs(lcs: &Lcs, text: &str) -> Result<Vec<StreettPair>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| {
            let p = p.trim();
            let inner = p
                .strip_prefix('(')
                .and_then(|x| x.strip_suffix(')'))
                .ok_or_else(|| perr(0, format!("expected a pair like ({{A}},{{B}}), got `{p}`")))?;
            let split = inner.find("},").ok_or_else(|| perr(0, format!("expected two sets in `{p}`")))?;
            Ok((parse_set(lcs, &inner[..=split])?, parse_set(lcs, &inner[split + 2..])?))
        })
        .collect()
}

/// `KIND{TH}[CLASS] from LOC TARGETS` where KIND is `EV`, `BUCHI`,
/// `STREETT[-FM]` or `OMEGA[-FM]`, TH is one of `=1 =0 <1 >0` and CLASS is
/// `all` or `fm`. TARGETS is `{..};{..}`, `({A},{B});..` for Streett, or
/// `dsa=PATH` for omega, in which case `load` reads the automaton file.
pub fn parse_query(lcs: &Lcs, text: &str, load: &dyn Fn(&str) -> Result<String>) -> Result<Query> {
    let t = text.trim();
    let open = t.find('{').ok_or_else(|| perr(0, "expected KIND{THRESHOLD}"))?;
    let kind = &t[..open];
    let close = t[open..].find('}').ok_or_else(|| perr(0, "unclosed threshold"))? + open;
    let threshold = match &t[open + 1..close] {
        "=1" => Threshold::One,
        "=0" => Threshold::Zero,
        "<1" => Threshold::BelowOne,
        ">0" => Threshold::Positive,
        other => return Err(perr(0, format!("unknown threshold `{other}`"))),
    };
    let rest = t[close + 1..].trim_start();
    let (class, rest) = if let Some(r) = rest.strip_prefix('[') {
        let end = r.find(']').ok_or_else(|| perr(0, "unclosed scheduler class"))?;
        let c = match &r[..end] {
            "all" => SchedulerClass::All,
            "fm" => SchedulerClass::FiniteMemory,
            other => return Err(perr(0, format!("unknown scheduler class `{other}`"))),
        };
        (c, r[end + 1..].trim_start())
    } else {
        (SchedulerClass::All, rest)
    };
    let rest = rest.strip_prefix("from").ok_or_else(|| perr(0, "expected `from LOC`"))?.trim_start();
    let (loc, targets) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let start = lcs.loc(loc).ok_or_else(|| Error::UnknownLocation(loc.to_string()))?;
    let targets = targets.trim();
    let kind = match kind {
        "EV" => QueryKind::Eventually(parse_sets(lcs, targets)?),
        "BUCHI" => QueryKind::Buchi(parse_sets(lcs, targets)?),
        "STREETT" | "STREETT-FM" => QueryKind::Streett(parse_pairs(lcs, targets)?),
        "OMEGA" | "OMEGA-FM" => {
            let path = targets.strip_prefix("dsa=").ok_or_else(|| perr(0, "expected `dsa=PATH`"))?;
            QueryKind::Omega(Box::new(Dsa::parse(&load(path.trim())?)?))
        }
        other => return Err(perr(0, format!("unknown query kind `{other}`"))),
    };
    Ok(Query { kind, threshold, class, start })
}

/// `reach {A}`, `reach-all {A};{B}`, `seq {A};{B}`, `stay {A}`,
/// `visits {A} K` or `reach-nonempty {A}`.
pub fn parse_event(lcs: &Lcs, text: &str) -> Result<SimEvent> {
    let t = text.trim();
    let (key, rest) = t.split_once(char::is_whitespace).unwrap_or((t, ""));
    let rest = rest.trim();
    Ok(match key {
        "reach" => SimEvent::Reach(parse_set(lcs, rest)?),
        "reach-all" => SimEvent::ReachAll(parse_sets(lcs, rest)?),
        "seq" => SimEvent::ReachSeq(parse_sets(lcs, rest)?),
        "stay" => SimEvent::StayIn(parse_set(lcs, rest)?),
        "reach-nonempty" => SimEvent::ReachNonEmpty(parse_set(lcs, rest)?),
        "visits" => {
            let (set, k) = rest.rsplit_once(char::is_whitespace).ok_or_else(|| perr(0, "expected `visits {A} K`"))?;
            let k = k.parse().map_err(|_| perr(0, format!("bad count `{k}`")))?;
            SimEvent::VisitCount(parse_set(lcs, set)?, k)
        }
        other => return Err(perr(0, format!("unknown event `{other}`"))),
    })
}

/// Builtin schedulers: `safe:{A}`, `stubborn:{A}`, `roundrobin:{A};{B}` or
/// `chain:{A};{B}`. Anything else yields `None`, so the caller can treat it
/// as a file path.
pub fn parse_builtin_scheduler(lcs: &Lcs, text: &str) -> Option<Result<WitnessScheduler>> {
    let (kind, rest) = text.trim().split_once(':')?;
    let r = match kind {
        "safe" => parse_set(lcs, rest).and_then(|a| synth_safe(lcs, &a)),
        "stubborn" => parse_set(lcs, rest).and_then(|a| synth_stubborn(lcs, &a)),
        "roundrobin" => parse_sets(lcs, rest).and_then(|t| synth_round_robin(lcs, &t)),
        "chain" => parse_sets(lcs, rest).and_then(|t| synth_eventuality_chain(lcs, &t)),
        _ => return None,
    };
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn model_round_trip() {
        for n in [fixtures::run6(), fixtures::gadget(&["a", "b"]).unwrap()] {
            let text = emit_model(&n);
            assert_eq!(parse_model(&text).unwrap(), n);
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "lcs\nchannels c\nmessages a\nlocations p\nrule p => p : nop\n";
        assert!(matches!(parse_model(text), Err(Error::Parse { line: 5, .. })));
        let text = "lcs\nchannels c\nmessages a\nlocations p\nrule p -> p : c ? a\n";
        assert!(matches!(parse_model(text), Err(Error::Invalid(_))));
    }

    #[test]
    fn queries() {
        let lcs = fixtures::run6().lcs;
        let none = |_: &str| -> Result<String> { unreachable!() };
        let q = parse_query(&lcs, "EV{=1}[all] from 1 {3};{6}", &none).unwrap();
        assert_eq!(q.threshold, Threshold::One);
        assert!(matches!(q.kind, QueryKind::Eventually(ref v) if v.len() == 2));
        let q = parse_query(&lcs, "STREETT-FM{>0}[fm] from 2 ({6},{});({1,2},{3})", &none).unwrap();
        match q.kind {
            QueryKind::Streett(p) => {
                assert_eq!(p.len(), 2);
                assert!(p[0].1.is_empty());
                assert_eq!(p[1].0.len(), 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(parse_query(&lcs, "EV{=2}[all] from 1 {3}", &none).is_err());
        assert!(parse_query(&lcs, "EV{=1}[all] from 9 {3}", &none).is_err());
    }

    #[test]
    fn events() {
        let lcs = fixtures::run6().lcs;
        assert_eq!(parse_event(&lcs, "visits {6} 3").unwrap(), SimEvent::VisitCount(lcs.locset(&["6"]).unwrap(), 3));
        assert!(parse_event(&lcs, "jump {6}").is_err());
    }

    #[test]
    fn builtin_schedulers() {
        let lcs = fixtures::run6().lcs;
        let s = parse_builtin_scheduler(&lcs, "safe:{1,2,3}").unwrap().unwrap();
        assert_eq!(s.recovery.len(), 3);
        assert!(parse_builtin_scheduler(&lcs, "witness.sched.json").is_none());
        assert!(matches!(parse_builtin_scheduler(&lcs, "roundrobin:{2};{6}"), Some(Err(Error::EmptyCore))));
    }
}
