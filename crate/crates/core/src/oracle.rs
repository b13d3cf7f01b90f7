//! Explicit-state reference checker for systems whose reachable state space
//! is finite, and a generator of random test systems.
//!
//! Nothing here is used to produce verdicts; it exists to cross-check the
//! symbolic procedures.

use std::collections::{HashMap, VecDeque};

use num_rational::BigRational;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{p_lost_config, Config, Lcs, LocId, LocSet, RawOp, RawRule, RuleId};
use crate::qualitative::{StreettPair, Threshold};

/// Bound handed to `lossy_successors` when exploring.
const SUCC_BOUND: usize = 1 << 16;

/// Reachable part of the Markov decision process. Only the support of each
/// distribution is kept; [`transition`] gives exact probabilities.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    pub states: Vec<Config>,
    pub index: HashMap<Config, usize>,
    pub actions: Vec<Vec<(RuleId, Vec<usize>)>>,
}

pub fn explore(lcs: &Lcs, start: &Config, cap: usize) -> Result<FiniteMdp> {
    let mut mdp = FiniteMdp { states: vec![start.clone()], index: HashMap::new(), actions: Vec::new() };
    mdp.index.insert(start.clone(), 0);
    let mut i = 0;
    while i < mdp.states.len() {
        let s = mdp.states[i].clone();
        let mut acts = Vec::new();
        for r in lcs.enabled_rules(&s) {
            let mut succ = Vec::new();
            for t in lcs.lossy_successors(&s, r, SUCC_BOUND)? {
                let next = mdp.states.len();
                let j = *mdp.index.entry(t.clone()).or_insert(next);
                if j == next {
                    if next >= cap {
                        return Err(Error::StateSpace(cap));
                    }
                    mdp.states.push(t);
                }
                succ.push(j);
            }
            acts.push((r, succ));
        }
        mdp.actions.push(acts);
        i += 1;
    }
    Ok(mdp)
}

/// Exact distribution of one step.
pub fn transition(lcs: &Lcs, tau: &BigRational, s: &Config, rule: RuleId) -> Result<Vec<(Config, BigRational)>> {
    let t = lcs.perfect_step(s, rule)?;
    Ok(lcs
        .lossy_successors(s, rule, SUCC_BOUND)?
        .into_iter()
        .map(|u| {
            let p = p_lost_config(tau, &t, &u);
            (u, p)
        })
        .collect())
}

/// Support graph: state -> actions -> successors.
struct Game {
    acts: Vec<Vec<Vec<usize>>>,
}

impl Game {
    fn len(&self) -> usize {
        self.acts.len()
    }

    fn preds(&self) -> Vec<Vec<usize>> {
        let mut p = vec![Vec::new(); self.len()];
        for (s, acts) in self.acts.iter().enumerate() {
            for a in acts {
                for &t in a {
                    p[t].push(s);
                }
            }
        }
        p
    }

    /// States that reach `target` with positive probability while staying
    /// in `within` before reaching it.
    fn pos_reach(&self, target: &[bool], within: &[bool]) -> Vec<bool> {
        let preds = self.preds();
        let mut r = target.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&s| r[s]).collect();
        while let Some(t) = queue.pop_front() {
            for &s in &preds[t] {
                if !r[s] && within[s] {
                    r[s] = true;
                    queue.push_back(s);
                }
            }
        }
        r
    }

    fn as_reach(&self, target: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut r = vec![true; n];
        loop {
            let mut z: Vec<bool> = target.to_vec();
            loop {
                let mut changed = false;
                for s in 0..n {
                    if z[s] || !r[s] {
                        continue;
                    }
                    let ok = self.acts[s]
                        .iter()
                        .any(|a| a.iter().all(|&t| r[t]) && a.iter().any(|&t| z[t]));
                    if ok {
                        z[s] = true;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            if z == r {
                return r;
            }
            r = z;
        }
    }

    /// Largest subset of `safe` that some scheduler never leaves.
    fn safety(&self, safe: &[bool]) -> Vec<bool> {
        let mut s = safe.to_vec();
        loop {
            let mut changed = false;
            for x in 0..self.len() {
                if s[x] && !self.acts[x].iter().any(|a| a.iter().all(|&t| s[t])) {
                    s[x] = false;
                    changed = true;
                }
            }
            if !changed {
                return s;
            }
        }
    }

    /// Maximal end components of the sub-MDP on `allowed`.
    fn mecs(&self, allowed: &[bool]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![(0..self.len()).filter(|&s| allowed[s]).collect::<Vec<_>>()];
        while let Some(cand) = stack.pop() {
            let mut inside = vec![false; self.len()];
            for &s in &cand {
                inside[s] = true;
            }
            loop {
                let mut changed = false;
                for &s in &cand {
                    if inside[s] && !self.acts[s].iter().any(|a| a.iter().all(|&t| inside[t])) {
                        inside[s] = false;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            let states: Vec<usize> = cand.into_iter().filter(|&s| inside[s]).collect();
            if states.is_empty() {
                continue;
            }
            let mut g = DiGraph::<usize, ()>::new();
            let mut node = HashMap::new();
            for &s in &states {
                node.insert(s, g.add_node(s));
            }
            for &s in &states {
                for a in &self.acts[s] {
                    if a.iter().all(|&t| inside[t]) {
                        for &t in a {
                            g.add_edge(node[&s], node[&t], ());
                        }
                    }
                }
            }
            let sccs = tarjan_scc(&g);
            if sccs.len() == 1 {
                out.push(states);
            } else {
                for c in sccs {
                    stack.push(c.into_iter().map(|n| g[n]).collect());
                }
            }
        }
        out
    }

    /// States lying in some end component that satisfies every pair.
    fn streett_good(&self, pairs: &[(Vec<bool>, Vec<bool>)]) -> Vec<bool> {
        let mut good = vec![false; self.len()];
        let mut stack = self.mecs(&vec![true; self.len()]);
        while let Some(m) = stack.pop() {
            let bad = pairs.iter().find(|(a, b)| m.iter().any(|&s| a[s]) && !m.iter().any(|&s| b[s]));
            match bad {
                None => m.iter().for_each(|&s| good[s] = true),
                Some((a, _)) => {
                    let mut sub = vec![false; self.len()];
                    m.iter().filter(|&&s| !a[s]).for_each(|&s| sub[s] = true);
                    stack.extend(self.mecs(&sub));
                }
            }
        }
        good
    }

    fn union_of(&self, comps: &[Vec<usize>]) -> Vec<bool> {
        let mut u = vec![false; self.len()];
        comps.iter().flatten().for_each(|&s| u[s] = true);
        u
    }
}

fn game_of(mdp: &FiniteMdp) -> Game {
    Game { acts: mdp.actions.iter().map(|a| a.iter().map(|(_, s)| s.clone()).collect()).collect() }
}

fn label(mdp: &FiniteMdp, a: &LocSet) -> Vec<bool> {
    mdp.states.iter().map(|s| a.contains(&s.loc)).collect()
}

fn negate(v: &[bool]) -> Vec<bool> {
    v.iter().map(|b| !b).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Eventually(Vec<LocSet>),
    Buchi(Vec<LocSet>),
    Streett(Vec<StreettPair>),
}

/// Does some scheduler meet `threshold` for `shape` from `(q, ε)`?
pub fn oracle_qualitative(lcs: &Lcs, q: LocId, shape: &Shape, threshold: Threshold, cap: usize) -> Result<bool> {
    let mdp = explore(lcs, &Config::empty(lcs, q), cap)?;
    let g = game_of(&mdp);
    let all = vec![true; g.len()];
    Ok(match shape {
        Shape::Eventually(targets) => {
            let n = targets.len();
            let full = (1usize << n) - 1;
            let bits: Vec<usize> = mdp
                .states
                .iter()
                .map(|s| (0..n).filter(|&i| targets[i].contains(&s.loc)).map(|i| 1 << i).sum())
                .collect();
            let k = 1usize << n;
            let acts = (0..g.len() * k)
                .map(|x| {
                    let (s, m) = (x / k, x % k);
                    g.acts[s].iter().map(|a| a.iter().map(|&t| t * k + (m | bits[t])).collect()).collect()
                })
                .collect();
            let p = Game { acts };
            let start = bits[0];
            let done: Vec<bool> = (0..p.len()).map(|x| x % k == full).collect();
            let not_done = negate(&done);
            match threshold {
                Threshold::Positive => p.pos_reach(&done, &vec![true; p.len()])[start],
                Threshold::One => p.as_reach(&done)[start],
                Threshold::Zero => p.safety(&not_done)[start],
                Threshold::BelowOne => p.pos_reach(&p.safety(&not_done), &not_done)[start],
            }
        }
        Shape::Buchi(targets) => {
            let labels: Vec<Vec<bool>> = targets.iter().map(|a| label(&mdp, a)).collect();
            match threshold {
                Threshold::One | Threshold::Positive => {
                    let good: Vec<Vec<usize>> = g
                        .mecs(&all)
                        .into_iter()
                        .filter(|m| labels.iter().all(|l| m.iter().any(|&s| l[s])))
                        .collect();
                    let u = g.union_of(&good);
                    if threshold == Threshold::One { g.as_reach(&u)[0] } else { g.pos_reach(&u, &all)[0] }
                }
                Threshold::Zero | Threshold::BelowOne => {
                    let mut comps = Vec::new();
                    for l in &labels {
                        comps.extend(g.mecs(&negate(l)));
                    }
                    let u = g.union_of(&comps);
                    if threshold == Threshold::Zero { g.as_reach(&u)[0] } else { g.pos_reach(&u, &all)[0] }
                }
            }
        }
        Shape::Streett(pairs) => {
            let labels: Vec<(Vec<bool>, Vec<bool>)> = pairs.iter().map(|(a, b)| (label(&mdp, a), label(&mdp, b))).collect();
            match threshold {
                Threshold::One | Threshold::Positive => {
                    let good = g.streett_good(&labels);
                    if threshold == Threshold::One { g.as_reach(&good)[0] } else { g.pos_reach(&good, &all)[0] }
                }
                Threshold::Zero | Threshold::BelowOne => {
                    let mut comps = Vec::new();
                    for (a, b) in &labels {
                        comps.extend(g.mecs(&negate(b)).into_iter().filter(|m| m.iter().any(|&s| a[s])));
                    }
                    let u = g.union_of(&comps);
                    if threshold == Threshold::Zero { g.as_reach(&u)[0] } else { g.pos_reach(&u, &all)[0] }
                }
            }
        }
    })
}

/// Forward search where a send is blocked when it would make its channel
/// longer than `bound`. Sound for positive reachability.
pub fn bounded_positive_reach(lcs: &Lcs, start: &Config, a: &LocSet, bound: usize) -> Result<bool> {
    let mut seen = std::collections::HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(s) = queue.pop_front() {
        if a.contains(&s.loc) {
            return Ok(true);
        }
        for r in lcs.enabled_rules(&s) {
            if let crate::model::Op::Send(c, _) = lcs.rules[r].op {
                if s.channels[c.0].len() >= bound {
                    continue;
                }
            }
            for t in lcs.lossy_successors(&s, r, SUCC_BOUND)? {
                if seen.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Locations sit in ordered blocks, control never moves to an earlier
    /// block and sends only occur on edges into a later block, so channel
    /// contents stay bounded.
    FiniteOnly,
    Unrestricted,
}

/// A random single-channel system with 2..=`max_locs` locations and
/// 1..=`max_msgs` messages. Every location gets a send or internal rule.
pub fn random_model<R: Rng>(rng: &mut R, profile: Profile, max_locs: usize, max_msgs: usize) -> Lcs {
    let n = rng.gen_range(2..=max_locs.max(2));
    let k = rng.gen_range(1..=max_msgs.max(1));
    let locs: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let msgs: Vec<String> = (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut block = vec![0usize; n];
    for i in 1..n {
        block[i] = block[i - 1] + usize::from(rng.gen_bool(0.7));
    }
    let mut rules = Vec::new();
    for s in 0..n {
        let targets: Vec<usize> = match profile {
            Profile::FiniteOnly => (0..n).filter(|&t| block[t] >= block[s]).collect(),
            Profile::Unrestricted => (0..n).collect(),
        };
        let count = rng.gen_range(2..=4);
        let mut has_move = false;
        for _ in 0..count {
            let t = targets[rng.gen_range(0..targets.len())];
            let may_send = profile == Profile::Unrestricted || block[t] > block[s];
            let m = msgs[rng.gen_range(0..k)].clone();
            let op = match rng.gen_range(0..4) {
                0 | 1 if may_send => RawOp::Send("c".into(), m),
                0..=2 => RawOp::Recv("c".into(), m),
                _ => RawOp::Nop,
            };
            has_move |= !matches!(op, RawOp::Recv(..));
            rules.push(RawRule { source: locs[s].clone(), target: locs[t].clone(), op });
        }
        if !has_move {
            let t = targets[rng.gen_range(0..targets.len())];
            rules.push(RawRule { source: locs[s].clone(), target: locs[t].clone(), op: RawOp::Nop });
        }
    }
    let l: Vec<&str> = locs.iter().map(String::as_str).collect();
    let m: Vec<&str> = msgs.iter().map(String::as_str).collect();
    Lcs::build(&l, &["c"], &m, &rules).expect("generated system is valid")
}

/// A random subset of the locations, non-empty when `nonempty` is set.
pub fn random_locset<R: Rng>(rng: &mut R, lcs: &Lcs, nonempty: bool) -> LocSet {
    loop {
        let s: LocSet = lcs.all_locations().into_iter().filter(|_| rng.gen_bool(0.35)).collect();
        if !nonempty || !s.is_empty() {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use num_traits::One;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transition_sums_to_one() {
        let n = fixtures::run6();
        let lcs = &n.lcs;
        let s = lcs.parse_config("2 : c=\"ab\"").unwrap();
        for r in lcs.enabled_rules(&s) {
            let d = transition(lcs, &n.fault_rate, &s, r).unwrap();
            let total = d.iter().fold(BigRational::from_integer(0.into()), |a, (_, p)| a + p);
            assert!(total.is_one());
        }
    }

    #[test]
    fn finite_only_models_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let lcs = random_model(&mut rng, Profile::FiniteOnly, 6, 3);
            for q in lcs.all_locations() {
                explore(&lcs, &Config::empty(&lcs, q), 100_000).unwrap();
            }
        }
    }

    #[test]
    fn mecs_of_small_game() {
        // 0 -> {1}, 1 -> {0} | {2}, 2 -> {2}, 3 -> {0, 3}
        let g = Game { acts: vec![vec![vec![1]], vec![vec![0], vec![2]], vec![vec![2]], vec![vec![0, 3]]] };
        let mut m = g.mecs(&[true; 4]);
        m.iter_mut().for_each(|c| c.sort());
        m.sort();
        assert_eq!(m, vec![vec![0, 1], vec![2]]);
        assert_eq!(g.as_reach(&[false, false, true, false]), vec![true, true, true, true]);
        assert_eq!(g.safety(&[true, true, false, true]), vec![true, true, false, true]);
    }

    #[test]
    fn run6_is_infinite() {
        let lcs = fixtures::run6().lcs;
        let s = Config::empty(&lcs, lcs.loc("4").unwrap());
        assert!(matches!(explore(&lcs, &s, 500), Err(Error::StateSpace(500))));
        assert!(bounded_positive_reach(&lcs, &s, &lcs.locset(&["6"]).unwrap(), 2).unwrap());
    }
}
