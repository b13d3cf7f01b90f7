//! Location-level fixpoints: safe sets, promising sets, the almost-sure
//! Büchi core and the eventuality table.

use std::collections::BTreeMap;

use log::debug;

use crate::error::{Error, Result};
use crate::model::{Lcs, LocSet};
use crate::reach::{saturate, Constraint, Saturation};

/// Largest `S ⊆ a` in which every location has a send or internal rule
/// staying in `S`. From there the channels can be ignored forever.
pub fn safe(lcs: &Lcs, a: &LocSet) -> LocSet {
    let mut s = a.clone();
    loop {
        let next: LocSet = s
            .iter()
            .copied()
            .filter(|&x| lcs.rules_from(x).any(|(_, r)| !r.op.is_recv() && s.contains(&r.target)))
            .collect();
        if next == s {
            return s;
        }
        s = next;
    }
}

/// Locations from which `a` can be reached with probability one.
pub fn prom(lcs: &Lcs, a: &LocSet) -> Result<LocSet> {
    Ok(prom_saturation(lcs, a)?.0)
}

/// The promising set together with the final saturation, whose parent
/// pointers give the paths used by the stubborn scheduler.
pub fn prom_saturation(lcs: &Lcs, a: &LocSet) -> Result<(LocSet, Saturation)> {
    let mut x = lcs.all_locations();
    let mut round = 0;
    loop {
        let sat = saturate(lcs, a, &Constraint::HalfOpen(x.clone()))?;
        let next: LocSet = x.iter().copied().filter(|l| a.contains(l) || sat.empty_locations().contains(l)).collect();
        round += 1;
        if next == x {
            debug!("prom: fixed point after {round} rounds, {} locations", x.len());
            return Ok((x, sat));
        }
        x = next;
    }
}

/// Locations `z ∈ region` such that `(z, ε)` reaches `target ∩ region`
/// without leaving `region`.
pub fn closed_reach_set(lcs: &Lcs, target: &LocSet, region: &LocSet) -> Result<LocSet> {
    let t: LocSet = target.intersection(region).copied().collect();
    let sat = saturate(lcs, &t, &Constraint::Closed(region.clone()))?;
    Ok(sat.empty_locations())
}

/// Greatest `Z ⊆ universe` that is safe and from which, for every
/// target, `(z, ε)` can reach `target ∩ Z` without leaving `Z`. These are
/// exactly the locations from which a scheduler visits every target
/// infinitely often with probability one.
pub fn as_core(lcs: &Lcs, targets: &[LocSet], universe: &LocSet) -> Result<LocSet> {
    let mut z = universe.clone();
    loop {
        let mut next = safe(lcs, &z);
        for a in targets {
            if next.is_empty() {
                break;
            }
            let r = closed_reach_set(lcs, a, &z)?;
            next = next.intersection(&r).copied().collect();
        }
        if next == z {
            return Ok(z);
        }
        z = next;
    }
}

/// Bit mask over target indices.
pub type Mask = u32;

/// Maximum number of targets in an eventuality query.
pub const MAX_TARGETS: usize = 10;

/// `X_I` for every subset `I` of the targets: `X_∅` is every location and
/// `X_I = ⋃_{i∈I} Prom(A_i ∩ X_{I∖i})`. `(q, ε)` visits every `A_i`,
/// `i ∈ I`, almost surely iff `q ∈ X_I`.
pub fn eventuality_table(lcs: &Lcs, targets: &[LocSet]) -> Result<BTreeMap<Mask, LocSet>> {
    if targets.len() > MAX_TARGETS {
        return Err(Error::TooManyTargets { count: targets.len(), limit: MAX_TARGETS });
    }
    let n = targets.len();
    let mut table = BTreeMap::new();
    table.insert(0, lcs.all_locations());
    let mut masks: Vec<Mask> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    for mask in masks {
        let mut x = LocSet::new();
        for i in 0..n {
            if mask & (1 << i) != 0 {
                let rest = &table[&(mask & !(1 << i))];
                let t: LocSet = targets[i].intersection(rest).copied().collect();
                x.extend(prom(lcs, &t)?);
            }
        }
        table.insert(mask, x);
    }
    Ok(table)
}

/// The target of mode `I` in the eventuality chain: `⋃_{i∈I} A_i ∩ X_{I∖i}`.
pub fn chain_target(targets: &[LocSet], table: &BTreeMap<Mask, LocSet>, mask: Mask) -> LocSet {
    let mut t = LocSet::new();
    for (i, a) in targets.iter().enumerate() {
        if mask & (1 << i) != 0 {
            t.extend(a.intersection(&table[&(mask & !(1 << i))]).copied());
        }
    }
    t
}
