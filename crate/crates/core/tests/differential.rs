use nplcs::model::{Lcs, LocSet};
use nplcs::oracle::{oracle_qualitative, random_locset, random_model, Profile, Shape};
use nplcs::qualitative::{check, Query, QueryKind, SchedulerClass, Threshold};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn queries(rng: &mut ChaCha8Rng, lcs: &Lcs) -> Vec<(QueryKind, Shape)> {
    let mut out = Vec::new();
    for n in 1..=2 {
        let t: Vec<LocSet> = (0..n).map(|_| random_locset(rng, lcs, true)).collect();
        out.push((QueryKind::Eventually(t.clone()), Shape::Eventually(t.clone())));
        out.push((QueryKind::Buchi(t.clone()), Shape::Buchi(t)));
        let p: Vec<(LocSet, LocSet)> = (0..n).map(|_| (random_locset(rng, lcs, true), random_locset(rng, lcs, false))).collect();
        out.push((QueryKind::Streett(p.clone()), Shape::Streett(p)));
    }
    out
}

#[test]
fn symbolic_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut failures = Vec::new();
    for m in 0..150 {
        let lcs = random_model(&mut rng, Profile::FiniteOnly, 8, 3);
        let q = nplcs::model::LocId(rng.gen_range(0..=lcs.locations.len() / 3));
        for (kind, shape) in queries(&mut rng, &lcs) {
            for th in Threshold::ALL {
                let query = Query { kind: kind.clone(), threshold: th, class: SchedulerClass::FiniteMemory, start: q };
                let v = check(&lcs, &query).unwrap();
                let o = oracle_qualitative(&lcs, q, &shape, th, 200_000).unwrap();
                checked += 1;
                if v.is_yes() != o {
                    failures.push(format!("model {m} q={} {:?} {th}: symbolic {:?} oracle {o}\n{lcs}", lcs.loc_name(q), kind, v.answer));
                }
            }
        }
    }
    for f in failures.iter().take(5) {
        eprintln!("{f}");
    }
    assert!(failures.is_empty(), "{} of {checked} disagree", failures.len());
}

