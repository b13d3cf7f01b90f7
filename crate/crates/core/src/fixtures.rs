//! Built-in example systems.

use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::model::{Lcs, Nplcs, RawOp, RawRule};

fn rule(s: &str, t: &str, op: RawOp) -> RawRule {
    RawRule { source: s.into(), target: t.into(), op }
}

fn send(c: &str, m: &str) -> RawOp {
    RawOp::Send(c.into(), m.into())
}

fn recv(c: &str, m: &str) -> RawOp {
    RawOp::Recv(c.into(), m.into())
}

fn half() -> BigRational {
    BigRational::new(1.into(), 2.into())
}

/// Six locations, one channel, messages a, b, c.
pub fn run6() -> Nplcs {
    let rules = vec![
        rule("1", "2", send("c", "a")),
        rule("1", "2", recv("c", "b")),
        rule("2", "2", send("c", "b")),
        rule("2", "1", send("c", "c")),
        rule("2", "6", recv("c", "a")),
        rule("2", "3", recv("c", "c")),
        rule("3", "3", RawOp::Nop),
        rule("4", "4", send("c", "b")),
        rule("4", "5", recv("c", "b")),
        rule("5", "4", send("c", "b")),
        rule("5", "6", recv("c", "b")),
        rule("6", "6", RawOp::Nop),
    ];
    let lcs = Lcs::build(&["1", "2", "3", "4", "5", "6"], &["c"], &["a", "b", "c"], &rules)
        .expect("fixture is valid");
    Nplcs::new(lcs, half()).expect("fixture is valid")
}

/// The gadget over alphabet `alphabet`: from `in` the location `out` is
/// reached almost surely, but never with a non-empty channel. The first
/// letter plays the role of the marker written back in location 3.
pub fn gadget(alphabet: &[&str]) -> Result<Nplcs> {
    let first = *alphabet.first().ok_or(Error::Parse { line: 0, msg: "gadget needs a non-empty alphabet".into() })?;
    if alphabet.contains(&"$") {
        return Err(Error::Parse { line: 0, msg: "`$` is reserved in the gadget".into() });
    }
    let mut rules = vec![
        rule("in", "1", send("c", "$")),
        rule("1", "out", recv("c", "$")),
        rule("1", "2", RawOp::Nop),
    ];
    for m in alphabet {
        rules.push(rule("2", "2", recv("c", m)));
    }
    rules.extend([
        rule("2", "2", send("c", "$")),
        rule("2", "3", recv("c", "$")),
        rule("3", "3", recv("c", "$")),
        rule("3", "3", send("c", first)),
        rule("3", "in", recv("c", first)),
        rule("out", "out", RawOp::Nop),
    ]);
    let mut messages = vec!["$"];
    messages.extend_from_slice(alphabet);
    let lcs = Lcs::build(&["in", "1", "2", "3", "out"], &["c"], &messages, &rules)?;
    Nplcs::new(lcs, half())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gadget_shape() {
        let g = gadget(&["a", "b"]).unwrap();
        assert_eq!(g.lcs.locations, vec!["1", "2", "3", "in", "out"]);
        assert_eq!(g.lcs.rules.len(), 11);
        assert!(gadget(&[]).is_err());
    }
}
