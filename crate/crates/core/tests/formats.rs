//! File formats: plan-log and reach-dump round trips, bundled scenarios and
//! fuzz corpus seeds.

use std::path::PathBuf;

use proptest::prelude::*;

use waiterplan::dump::{decode, encode, NamedSet};
use waiterplan::planlog::{IterationEntry, IterationStatus, Outcome, PlanLog};
use waiterplan::scenario::{Scenario, ScenarioFile};
use waiterplan::setops::{IndeterminateId, Monomial, PolyZonotope, Tag};
use waiterplan::traj::InitialCondition;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, Just(0.0), Just(-0.0), Just(1e-300), Just(f64::MAX)]
}

type Entry = (bool, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64, usize);

fn entry(n: usize) -> impl Strategy<Value = Entry> {
    (
        any::<bool>(),
        prop::collection::vec(finite(), n),
        prop::collection::vec(finite(), n),
        prop::collection::vec(finite(), n),
        prop::collection::vec(finite(), n),
        prop::collection::vec(-1.0..=1.0f64, n),
        finite(),
        0usize..1000,
    )
}

fn plan_log() -> impl Strategy<Value = PlanLog> {
    (1usize..5).prop_flat_map(|n| {
        (any::<u64>(), "[a-z -]{0,12}", prop::collection::vec(entry(n), 0..5), 0..3u8).prop_map(move |(seed, name, es, o)| {
            let entries = es
                .into_iter()
                .enumerate()
                .map(|(i, (feasible, q0, v0, a0, waypoint, k, max, nc))| IterationEntry {
                    iteration: i,
                    status: if feasible { IterationStatus::Feasible } else { IterationStatus::Braking },
                    ic: InitialCondition { q0, v0, a0 },
                    waypoint,
                    k: feasible.then_some(k),
                    max_constraint: max,
                    n_constraints: nc,
                })
                .collect();
            let outcome = [Outcome::GoalReached, Outcome::SafeStop, Outcome::IterationCap][o as usize];
            PlanLog { scenario: name.trim().to_string(), seed, n_q: n, entries, outcome }
        })
    })
}

fn named_sets() -> impl Strategy<Value = Vec<NamedSet>> {
    let term = (prop::collection::vec((0u8..6, 0u64..4, 1u16..4), 0..3), prop::collection::vec(-5.0..5.0f64, 2));
    prop::collection::vec(("[a-z0-9]{1,6}", prop::collection::vec(term, 0..8)), 0..4).prop_map(|sets| {
        let fresh: Vec<IndeterminateId> = (0..4).map(|_| IndeterminateId::fresh()).collect();
        sets.into_iter()
            .map(|(name, terms)| {
                let terms = terms
                    .into_iter()
                    .map(|(factors, coef)| {
                        let mono: Monomial = factors
                            .into_iter()
                            .map(|(tag, idx, e)| {
                                let tag = Tag::from_u8(tag).unwrap();
                                let id = if tag == Tag::Remainder { fresh[idx as usize] } else { IndeterminateId::new(tag, idx) };
                                (id, e)
                            })
                            .collect();
                        (mono, coef)
                    })
                    .collect();
                NamedSet::new(name, PolyZonotope::from_terms(2, 1, terms).unwrap())
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn plan_logs_round_trip(log in plan_log()) {
        let text = log.to_text();
        prop_assert_eq!(&PlanLog::parse(&text).unwrap(), &log);
    }

    #[test]
    fn dumps_round_trip(sets in named_sets()) {
        let bytes = encode(&sets).unwrap();
        let back = decode(&bytes).unwrap();
        prop_assert_eq!(encode(&back).unwrap(), bytes);
        for (a, b) in sets.iter().zip(&back) {
            prop_assert_eq!(a.set.bounds(), b.set.bounds());
        }
    }

    #[test]
    fn corrupted_dumps_never_panic(sets in named_sets(), pos in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let mut bytes = encode(&sets).unwrap();
        let i = pos.index(bytes.len());
        bytes[i] = byte;
        let _ = decode(&bytes);
        let _ = decode(&bytes[..i]);
    }
}

#[test]
fn bundled_scenarios_load() {
    for name in ["desk_tray", "slippery_tray", "scripted_obstacle", "bound_constants"] {
        let s = Scenario::load(root().join("scenarios").join(format!("{name}.json"))).unwrap();
        assert_eq!(s.n_q(), 3, "{name}");
    }
}

#[test]
fn fuzz_seeds_parse() {
    let dir = root().join("fuzz/corpus");
    for entry in std::fs::read_dir(dir.join("scenario")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        ScenarioFile::from_json_str(&text).unwrap();
    }
    for entry in std::fs::read_dir(dir.join("plan_log")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let log = PlanLog::parse(&text).unwrap();
        assert_eq!(log.to_text(), text);
    }
    for entry in std::fs::read_dir(dir.join("reach_dump")).unwrap() {
        let bytes = std::fs::read(entry.unwrap().path()).unwrap();
        assert_eq!(encode(&decode(&bytes).unwrap()).unwrap(), bytes);
    }
}
