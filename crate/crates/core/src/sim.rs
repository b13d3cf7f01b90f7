//! Monte-Carlo simulation of a system under a witness scheduler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::model::{Config, Lcs, LocSet, MsgId, Nplcs, RuleId, Word};
use crate::sched::WitnessScheduler;

pub const MIN_HORIZON: usize = 64;
pub const MAX_HORIZON: usize = 1 << 14;
/// The adaptive horizon stops doubling once the estimate moves by less.
pub const HORIZON_TOLERANCE: f64 = 0.005;
const Z95: f64 = 1.959_963_984_540_054;

/// Drops every letter independently with probability `tau`.
pub fn sample_losses<R: Rng + ?Sized>(tau: f64, w: &[MsgId], rng: &mut R) -> Word {
    w.iter().copied().filter(|_| !rng.gen_bool(tau)).collect()
}

/// One probabilistic step: fire `rule`, then lose messages.
pub fn step<R: Rng + ?Sized>(lcs: &Lcs, tau: f64, s: &Config, rule: RuleId, rng: &mut R) -> Result<Config> {
    let mut t = lcs.perfect_step(s, rule)?;
    for w in t.channels.iter_mut() {
        *w = sample_losses(tau, w, rng);
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimEvent {
    /// Some location of the set is visited.
    Reach(LocSet),
    /// Every set is visited, in any order.
    ReachAll(Vec<LocSet>),
    /// The sets are visited in order.
    ReachSeq(Vec<LocSet>),
    /// Only locations of the set are visited.
    StayIn(LocSet),
    /// The set is visited at least `k` times.
    VisitCount(LocSet, usize),
    /// A location of the set is visited with some channel non-empty.
    ReachNonEmpty(LocSet),
}

impl SimEvent {
    pub fn describe(&self, lcs: &Lcs) -> String {
        let set = |s: &LocSet| format!("{{{}}}", lcs.set_names(s).join(","));
        let list = |v: &[LocSet]| v.iter().map(set).collect::<Vec<_>>().join(";");
        match self {
            SimEvent::Reach(a) => format!("reach {}", set(a)),
            SimEvent::ReachAll(v) => format!("reach-all {}", list(v)),
            SimEvent::ReachSeq(v) => format!("seq {}", list(v)),
            SimEvent::StayIn(a) => format!("stay {}", set(a)),
            SimEvent::VisitCount(a, k) => format!("visits {} {k}", set(a)),
            SimEvent::ReachNonEmpty(a) => format!("reach-nonempty {}", set(a)),
        }
    }
}

/// Incremental evaluation over the visited configurations.
struct Monitor<'a> {
    event: &'a SimEvent,
    progress: usize,
    seen: Vec<bool>,
}

enum Status {
    Won,
    Lost,
    Open,
}

impl<'a> Monitor<'a> {
    fn new(event: &'a SimEvent) -> Self {
        let n = match event {
            SimEvent::ReachAll(v) => v.len(),
            _ => 0,
        };
        Monitor { event, progress: 0, seen: vec![false; n] }
    }

    fn observe(&mut self, s: &Config) -> Status {
        match self.event {
            SimEvent::Reach(a) => {
                if a.contains(&s.loc) {
                    return Status::Won;
                }
            }
            SimEvent::ReachAll(v) => {
                for (i, a) in v.iter().enumerate() {
                    self.seen[i] |= a.contains(&s.loc);
                }
                if self.seen.iter().all(|&b| b) {
                    return Status::Won;
                }
            }
            SimEvent::ReachSeq(v) => {
                // one visit counts for one element of the sequence
                if self.progress < v.len() && v[self.progress].contains(&s.loc) {
                    self.progress += 1;
                }
                if self.progress == v.len() {
                    return Status::Won;
                }
            }
            SimEvent::StayIn(a) => {
                if !a.contains(&s.loc) {
                    return Status::Lost;
                }
            }
            SimEvent::VisitCount(a, k) => {
                if a.contains(&s.loc) {
                    self.progress += 1;
                }
                if self.progress >= *k {
                    return Status::Won;
                }
            }
            SimEvent::ReachNonEmpty(a) => {
                if a.contains(&s.loc) && !s.is_empty() {
                    return Status::Won;
                }
            }
        }
        Status::Open
    }

    fn at_horizon(&self) -> bool {
        matches!(self.event, SimEvent::StayIn(_))
    }
}

/// Runs one trial of `horizon` steps and evaluates the event on the
/// configurations visited, the start included.
pub fn run_trial<R: Rng + ?Sized>(
    lcs: &Lcs,
    tau: f64,
    sched: &WitnessScheduler,
    start: &Config,
    event: &SimEvent,
    horizon: usize,
    rng: &mut R,
) -> Result<bool> {
    let mut monitor = Monitor::new(event);
    let mut s = start.clone();
    let mut mode = sched.initial_mode;
    for i in 0..=horizon {
        match monitor.observe(&s) {
            Status::Won => return Ok(true),
            Status::Lost => return Ok(false),
            Status::Open => {}
        }
        if i == horizon {
            break;
        }
        let (rule, next) = sched.decide(mode, &s)?;
        s = step(lcs, tau, &s, rule, rng)?;
        mode = next;
    }
    Ok(monitor.at_horizon())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub event: String,
    pub trials: usize,
    pub horizon: usize,
    pub successes: usize,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

/// Wilson score interval at 95%.
pub fn wilson(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn count_successes(
    system: &Nplcs,
    sched: &WitnessScheduler,
    start: &Config,
    event: &SimEvent,
    trials: usize,
    seed: u64,
    horizon: usize,
) -> Result<usize> {
    let tau = system.fault_rate_f64();
    let one = |t: usize| run_trial(&system.lcs, tau, sched, start, event, horizon, &mut trial_rng(seed, t));
    #[cfg(feature = "parallel")]
    let results: Vec<Result<bool>> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<bool>> = (0..trials).map(one).collect();
    let mut n = 0;
    for r in results {
        n += usize::from(r?);
    }
    Ok(n)
}

/// Estimates the probability of `event`. With `horizon = None` the horizon
/// starts at 64 and doubles until the estimate is stable.
pub fn estimate(
    system: &Nplcs,
    sched: &WitnessScheduler,
    start: &Config,
    event: &SimEvent,
    trials: usize,
    seed: u64,
    horizon: Option<usize>,
) -> Result<Estimate> {
    let make = |h: usize, k: usize| {
        let (lo, hi) = wilson(k, trials);
        Estimate {
            event: event.describe(&system.lcs),
            trials,
            horizon: h,
            successes: k,
            point: if trials == 0 { 0.0 } else { k as f64 / trials as f64 },
            ci_low: lo,
            ci_high: hi,
            seed,
        }
    };
    if let Some(h) = horizon {
        let k = count_successes(system, sched, start, event, trials, seed, h)?;
        return Ok(make(h, k));
    }
    let mut h = MIN_HORIZON;
    let mut prev = make(h, count_successes(system, sched, start, event, trials, seed, h)?);
    while h < MAX_HORIZON {
        h *= 2;
        let cur = make(h, count_successes(system, sched, start, event, trials, seed, h)?);
        if (cur.point - prev.point).abs() < HORIZON_TOLERANCE {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sched::{synth_safe, synth_stubborn};

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, hi) = wilson(100, 100);
        assert!(lo > 0.96 && hi == 1.0);
    }

    #[test]
    fn gadget_never_reaches_out_with_contents() {
        let g = fixtures::gadget(&["a", "b"]).unwrap();
        let out = g.lcs.locset(&["out"]).unwrap();
        let s = synth_stubborn(&g.lcs, &out).unwrap();
        let start = g.lcs.parse_config("in : \"ab\"").unwrap();
        let e = estimate(&g, &s, &start, &SimEvent::ReachNonEmpty(out), 2000, 1, Some(300)).unwrap();
        assert_eq!(e.successes, 0);
    }

    #[test]
    fn deterministic_under_seed() {
        let n = fixtures::run6();
        let a = n.lcs.locset(&["6"]).unwrap();
        let s = synth_stubborn(&n.lcs, &a).unwrap();
        let start = Config::empty(&n.lcs, n.lcs.loc("4").unwrap());
        let e1 = estimate(&n, &s, &start, &SimEvent::Reach(a.clone()), 500, 9, Some(8)).unwrap();
        let e2 = estimate(&n, &s, &start, &SimEvent::Reach(a), 500, 9, Some(8)).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.point > 0.0 && e1.point < 1.0);
    }

    #[test]
    fn safe_scheduler_stays() {
        let n = fixtures::run6();
        let a = n.lcs.locset(&["4", "5"]).unwrap();
        let s = synth_safe(&n.lcs, &a).unwrap();
        let start = Config::empty(&n.lcs, n.lcs.loc("5").unwrap());
        let e = estimate(&n, &s, &start, &SimEvent::StayIn(a), 200, 3, Some(1000)).unwrap();
        assert_eq!(e.successes, 200);
    }
}
