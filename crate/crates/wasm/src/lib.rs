//! Browser bindings. Every entry point takes text and returns JSON text.

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::json;
use wasm_bindgen::prelude::*;

use nplcs::format::{parse_builtin_scheduler, parse_event, parse_fraction, parse_model, parse_query};
use nplcs::model::{loss_distribution, ratio_to_f64, MsgId};
use nplcs::qualitative::check;
use nplcs::{fixtures, sim, Error};

const MAX_WORD: usize = 12;
const MAX_TRIALS: usize = 100_000;

pub fn check_json(model: &str, query: &str) -> Result<String, String> {
    let n = parse_model(model).map_err(|e| e.to_string())?;
    let no_files = |_: &str| Err(Error::Parse { line: 0, msg: "automaton files are not available here".into() });
    let q = parse_query(&n.lcs, query, &no_files).map_err(|e| e.to_string())?;
    let v = check(&n.lcs, &q).map_err(|e| e.to_string())?;
    let mut out = v.to_json();
    if let Some(w) = &v.witness {
        out["witness"] = serde_json::from_str(&w.to_json(&n.lcs)).expect("scheduler json");
    }
    Ok(out.to_string())
}

pub fn simulate_json(model: &str, scheduler: &str, start: &str, event: &str, trials: usize, seed: u64) -> Result<String, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be between 1 and {MAX_TRIALS}"));
    }
    let n = parse_model(model).map_err(|e| e.to_string())?;
    let lcs = &n.lcs;
    let sched = parse_builtin_scheduler(lcs, scheduler)
        .ok_or_else(|| "expected safe:{..}, stubborn:{..}, roundrobin:{..};{..} or chain:{..};{..}".to_string())?
        .map_err(|e| e.to_string())?;
    let start = lcs.parse_config(start).map_err(|e| e.to_string())?;
    let event = parse_event(lcs, event).map_err(|e| e.to_string())?;
    let e = sim::estimate(&n, &sched, &start, &event, trials, seed, None).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&e).expect("estimate json"))
}

/// Letters of `word` are the messages; each one is lost with probability
/// `fault_rate`.
pub fn loss_distribution_json(word: &str, fault_rate: &str) -> Result<String, String> {
    let letters: Vec<char> = word.chars().filter(|c| !c.is_whitespace()).collect();
    if letters.len() > MAX_WORD {
        return Err(format!("words are limited to {MAX_WORD} letters"));
    }
    let tau = parse_fraction(fault_rate).map_err(|e| e.to_string())?;
    if tau <= BigRational::zero() || tau >= BigRational::one() {
        return Err(Error::FaultRate(tau.to_string()).to_string());
    }
    let mut alphabet = letters.clone();
    alphabet.sort();
    alphabet.dedup();
    let w: Vec<MsgId> = letters.iter().map(|c| MsgId(alphabet.binary_search(c).unwrap())).collect();
    let d = loss_distribution(&tau, &w, 1 << MAX_WORD).map_err(|e| e.to_string())?;
    let rows: Vec<_> = d
        .entries
        .iter()
        .map(|(sub, p)| {
            let s: String = sub.iter().map(|m| alphabet[m.0]).collect();
            json!({ "word": s, "probability": p.to_string(), "approx": ratio_to_f64(p) })
        })
        .collect();
    Ok(json!({ "word": word, "fault_rate": tau.to_string(), "total": d.total().to_string(), "outcomes": rows }).to_string())
}

pub fn fixture_text(name: &str) -> Result<String, String> {
    let n = match name {
        "run6" => fixtures::run6(),
        "gadget" => fixtures::gadget(&["a", "b"]).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown fixture `{other}`")),
    };
    Ok(nplcs::format::emit_model(&n))
}

#[wasm_bindgen]
pub fn check_query(model: &str, query: &str) -> Result<String, JsError> {
    check_json(model, query).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(model: &str, scheduler: &str, start: &str, event: &str, trials: usize, seed: u32) -> Result<String, JsError> {
    simulate_json(model, scheduler, start, event, trials, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn loss_distribution_of(word: &str, fault_rate: &str) -> Result<String, JsError> {
    loss_distribution_json(word, fault_rate).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fixture(name: &str) -> Result<String, JsError> {
    fixture_text(name).map_err(|e| JsError::new(&e))
}
