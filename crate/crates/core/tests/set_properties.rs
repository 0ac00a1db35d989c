//! Property tests: every set operation must contain the pointwise result.

use std::collections::HashMap;

use proptest::prelude::*;

use waiterplan::kinematics::zonotopes_intersect;
use waiterplan::setops::{
    interval_op, pz_cos, pz_sin, IndeterminateId, Interval, IntervalArray, IntervalOp, PolyZonotope, Zonotope,
};

const SLACK: f64 = 1e-9;
const N_IDS: usize = 3;

fn ids() -> Vec<IndeterminateId> {
    (0..N_IDS).map(IndeterminateId::parameter).collect()
}

/// Random scalar polynomial over three parameter ids, up to cubic terms.
fn scalar_pz() -> impl Strategy<Value = PolyZonotope> {
    (-2.0..2.0f64, prop::collection::vec((0..N_IDS, 1..3u16, -1.0..1.0f64), 0..6)).prop_map(|(c, terms)| {
        let ids = ids();
        let mut p = PolyZonotope::scalar(c);
        for (i, e, coef) in terms {
            let mut t = PolyZonotope::generator(ids[i], coef);
            for _ in 1..e {
                t = t.mul(&PolyZonotope::generator(ids[i], 1.0)).unwrap();
            }
            p = p.add(&t).unwrap();
        }
        p
    })
}

fn point() -> impl Strategy<Value = HashMap<IndeterminateId, f64>> {
    prop::collection::vec(-1.0..=1.0f64, N_IDS).prop_map(|v| ids().into_iter().zip(v).collect())
}

fn value(p: &PolyZonotope, x: &HashMap<IndeterminateId, f64>) -> f64 {
    p.evaluate(x).unwrap()[0]
}

fn contains(p: &PolyZonotope, v: f64) -> bool {
    p.bounds().data[0].contains_with_slack(v, SLACK)
}

proptest! {
    #[test]
    fn arithmetic_is_pointwise(a in scalar_pz(), b in scalar_pz(), x in point()) {
        let (va, vb) = (value(&a, &x), value(&b, &x));
        prop_assert!((value(&a.add(&b).unwrap(), &x) - (va + vb)).abs() < 1e-12);
        prop_assert!((value(&a.sub(&b).unwrap(), &x) - (va - vb)).abs() < 1e-12);
        prop_assert!((value(&a.mul(&b).unwrap(), &x) - va * vb).abs() < 1e-10);
        prop_assert!(contains(&a.mul(&b).unwrap(), va * vb));
    }

    #[test]
    fn slicing_refines_bounds(a in scalar_pz(), x in point()) {
        let v = value(&a, &x);
        let full = a.bounds().data[0];
        let sliced = a.slice(ids()[0], x[&ids()[0]]).unwrap().pz;
        let part = sliced.bounds().data[0];
        prop_assert!(part.lo >= full.lo - SLACK && part.hi <= full.hi + SLACK);
        prop_assert!(part.contains_with_slack(v, SLACK));
        prop_assert!((value(&sliced, &x) - v).abs() < 1e-10);
    }

    #[test]
    fn reduction_keeps_every_point(a in scalar_pz(), b in scalar_pz(), x in point(), keep in 1usize..6) {
        let p = a.mul(&b).unwrap();
        let v = value(&p, &x);
        let r = p.reduce(keep);
        // constant + kept terms + one box generator
        prop_assert!(r.n_terms() <= keep + 2);
        // remainder ids stay free; slicing the named ids must still cover v
        let sliced = r.slice_many(&x).unwrap();
        prop_assert!(contains(&sliced, v), "{v} not in {:?}", sliced.bounds());
    }

    #[test]
    fn trig_enclosures_hold(c in -3.0..3.0f64, g in 0.0..0.3f64, x in -1.0..=1.0f64) {
        let id = IndeterminateId::parameter(0);
        let p = PolyZonotope::generator(id, g).add_constant(&[c]).unwrap();
        let arg = c + g * x;
        let at: HashMap<_, _> = [(id, x)].into_iter().collect();
        let s = pz_sin(&p, 6).unwrap().slice_many(&at).unwrap();
        let co = pz_cos(&p, 6).unwrap().slice_many(&at).unwrap();
        prop_assert!(contains(&s, arg.sin()));
        prop_assert!(contains(&co, arg.cos()));
    }

    #[test]
    fn interval_ops_contain_products(
        a in prop::collection::vec((-3.0..3.0f64, 0.0..1.0f64), 3),
        b in prop::collection::vec((-3.0..3.0f64, 0.0..1.0f64), 3),
        s in prop::collection::vec(0.0..=1.0f64, 6),
    ) {
        let iv = |v: &[(f64, f64)]| IntervalArray::vector(v.iter().map(|(m, r)| Interval::new(m - r, m + r).unwrap()).collect());
        let (ia, ib) = (iv(&a), iv(&b));
        let pa: Vec<f64> = a.iter().zip(&s[..3]).map(|((m, r), t)| m - r + 2.0 * r * t).collect();
        let pb: Vec<f64> = b.iter().zip(&s[3..]).map(|((m, r), t)| m - r + 2.0 * r * t).collect();
        let sum: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x + y).collect();
        let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
        let cross = vec![pa[1] * pb[2] - pa[2] * pb[1], pa[2] * pb[0] - pa[0] * pb[2], pa[0] * pb[1] - pa[1] * pb[0]];
        prop_assert!(interval_op(&ia, &ib, IntervalOp::Add).unwrap().contains_point(&sum, SLACK));
        prop_assert!(interval_op(&ia, &ib, IntervalOp::Mul).unwrap().contains_point(&prod, SLACK));
        prop_assert!(interval_op(&ia, &ib, IntervalOp::Cross).unwrap().contains_point(&cross, SLACK));
    }

    #[test]
    fn box_intersection_matches_interval_overlap(
        ca in prop::collection::vec(-1.0..1.0f64, 3), ha in prop::collection::vec(0.05..0.5f64, 3),
        cb in prop::collection::vec(-1.0..1.0f64, 3), hb in prop::collection::vec(0.05..0.5f64, 3),
    ) {
        let a = Zonotope::from_box(ca.clone(), &ha);
        let b = Zonotope::from_box(cb.clone(), &hb);
        let overlap = (0..3).all(|i| (ca[i] - cb[i]).abs() <= ha[i] + hb[i]);
        prop_assert_eq!(zonotopes_intersect(&a, &b).unwrap(), overlap);
        prop_assert_eq!(zonotopes_intersect(&b, &a).unwrap(), overlap);
    }
}
