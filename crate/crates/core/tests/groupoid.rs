mod common;

use common::*;
use gerbecalc::cohomology::{cech_groupoid, CoverNerve};
use gerbecalc::groupoid::{
    action_groupoid, delooping, discrete_groupoid, hom_group, is_weak_equivalence_functor, opposite, pi0, product, WeakEquivalenceWitness,
};
use gerbecalc::spec::twogroup_by_name;
use gerbecalc::{Error, FiniteGroup, FiniteGroupoid, GroupoidFunctor, NatTransformation};
use proptest::prelude::*;

fn terminal() -> FiniteGroupoid {
    discrete_groupoid(1)
}

fn to_point(x: &FiniteGroupoid) -> GroupoidFunctor {
    GroupoidFunctor::new(x, &terminal(), vec![0; x.n_obj()], vec![0; x.n_mor()]).unwrap()
}

/// Hom-set sizes counted straight from the structure arrays.
fn hom_sizes(g: &FiniteGroupoid) -> Vec<Vec<usize>> {
    let mut h = vec![vec![0; g.n_obj()]; g.n_obj()];
    for m in 0..g.n_mor() {
        h[g.src(m)][g.tgt(m)] += 1;
    }
    h
}

#[test]
fn discrete_groupoids() {
    let d = discrete_groupoid(3);
    assert_eq!((d.n_obj(), d.n_mor()), (3, 3));
    assert!((0..3).all(|x| d.id(x) == x));
    let e = discrete_groupoid(0);
    assert_eq!((e.n_obj(), e.n_mor()), (0, 0));
    // essentially surjective onto a point, but hom-sets do not match
    let d2 = discrete_groupoid(2);
    assert!(matches!(is_weak_equivalence_functor(&d2, &terminal(), &to_point(&d2)), Some(WeakEquivalenceWitness::NotFull { .. })));
    assert_eq!(pi0(&d), vec![0, 1, 2]);
    assert_eq!(opposite(&d), d);
}

#[test]
fn deloopings() {
    let z2 = delooping(&FiniteGroup::cyclic(2));
    assert_eq!((z2.n_obj(), z2.n_mor()), (1, 2));
    assert_eq!(delooping(&FiniteGroup::trivial()), terminal());
    let s3 = FiniteGroup::symmetric(3);
    let (aut, _) = hom_group(&delooping(&s3), 0);
    assert!(isomorphic(&aut.table(), &s3.table()));
    assert_eq!(pi0(&delooping(&s3)), vec![0]);
    // Z2 -> point is not a weak equivalence: 2 morphisms against 1
    assert!(is_weak_equivalence_functor(&z2, &terminal(), &to_point(&z2)).is_some());
}

#[test]
fn delooping_opposite_via_inversion() {
    let z3 = FiniteGroup::cyclic(3);
    let b = delooping(&z3);
    let op = opposite(&b);
    let inv = GroupoidFunctor::new(&b, &op, vec![0], (0..3).map(|g| z3.inv(g)).collect()).unwrap();
    assert!(is_weak_equivalence_functor(&b, &op, &inv).is_none());
    assert_eq!(opposite(&op), b);
}

#[test]
fn action_groupoids() {
    let z2 = FiniteGroup::cyclic(2);
    let trivial = action_groupoid(&z2, 3, |_, x| x).unwrap();
    assert_eq!(hom_sizes(&trivial), vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
    let translation = action_groupoid(&z2, 2, |k, x| (k + x) % 2).unwrap();
    assert_eq!(hom_sizes(&translation), vec![vec![1, 1], vec![1, 1]]);
    assert!(is_weak_equivalence_functor(&translation, &terminal(), &to_point(&translation)).is_none());
    assert!(matches!(action_groupoid(&z2, 2, |_, _| 0), Err(Error::InvalidAction(_))));
}

#[test]
fn action_groupoid_of_t_is_the_2group_groupoid() {
    // ρ(h, g) = t(h) g defines H ⋉ G, the groupoid of the crossed module
    let tg = twogroup_by_name("Z2_in_Z4").unwrap();
    let (h, g) = (FiniteGroup::cyclic(2), FiniteGroup::cyclic(4));
    let t = [0, 2];
    let a = action_groupoid(&h, 4, |k, x| g.mul(t[k], x)).unwrap();
    assert_eq!(a.srcs(), tg.gpd.srcs());
    assert_eq!(a.tgts(), tg.gpd.tgts());
    assert_eq!(hom_sizes(&a), hom_sizes(&tg.gpd));
}

#[test]
fn cech_groupoids() {
    let (pt, _) = cech_groupoid(&CoverNerve::point()).unwrap();
    assert_eq!(pt, terminal());
    let path = CoverNerve::new(3, vec![[0, 1], [1, 2]], vec![], vec![]).unwrap();
    assert!(matches!(cech_groupoid(&path), Err(Error::CompositionNotClosed(_))));
    let tri = CoverNerve::new(3, vec![[0, 1], [0, 2], [1, 2]], vec![[0, 1, 2]], vec![]).unwrap();
    let (pair, _) = cech_groupoid(&tri).unwrap();
    assert_eq!(hom_sizes(&pair), vec![vec![1; 3]; 3]);
    assert_eq!(pi0(&pair), vec![0, 0, 0]);
}

#[test]
fn identity_is_a_weak_equivalence() {
    for g in
        [discrete_groupoid(2), delooping(&FiniteGroup::symmetric(3)), product(&delooping(&FiniteGroup::cyclic(2)), &discrete_groupoid(2))]
    {
        assert!(is_weak_equivalence_functor(&g, &g, &GroupoidFunctor::identity(&g)).is_none());
    }
}

#[test]
fn functor_validation_catches_broken_maps() {
    let b = delooping(&FiniteGroup::cyclic(4));
    let c = delooping(&FiniteGroup::cyclic(2));
    assert!(GroupoidFunctor::new(&b, &c, vec![0], vec![0, 1, 0, 1]).is_ok());
    assert!(GroupoidFunctor::new(&b, &c, vec![0], vec![0, 1, 1, 1]).is_err());
    assert!(GroupoidFunctor::new(&b, &c, vec![0], vec![1, 1, 0, 0]).is_err());
}

#[test]
fn transformations_into_discrete_groupoids_are_identities() {
    let x = delooping(&FiniteGroup::cyclic(2));
    let d = discrete_groupoid(2);
    let f0 = GroupoidFunctor::new(&x, &d, vec![0], vec![0, 0]).unwrap();
    let f1 = GroupoidFunctor::new(&x, &d, vec![1], vec![1, 1]).unwrap();
    // the only candidate components are identities, so F0 => F1 is impossible
    for c in 0..d.n_mor() {
        assert!(NatTransformation::new(&x, &d, &f0, &f1, vec![c]).is_err());
    }
    assert!(NatTransformation::new(&x, &d, &f0, &f0, vec![0]).is_ok());
}

#[test]
fn naturality_is_checked() {
    let s3 = FiniteGroup::symmetric(3);
    let b = delooping(&s3);
    let id = GroupoidFunctor::identity(&b);
    // a component η works for id => id exactly when η is central
    let central: Vec<usize> = (0..6).filter(|&c| NatTransformation::new(&b, &b, &id, &id, vec![c]).is_ok()).collect();
    assert_eq!(central.len(), center_size(&s3.table()));
}

fn any_groupoid() -> impl Strategy<Value = FiniteGroupoid> {
    let g = prop_oneof![(1usize..=6).prop_map(FiniteGroup::cyclic), (1usize..=3).prop_map(FiniteGroup::symmetric)];
    (g, 0usize..=3, 1usize..=3).prop_map(|(g, n, k)| {
        let b = delooping(&g);
        match n {
            0 => b,
            1 => product(&b, &discrete_groupoid(k)),
            2 => action_groupoid(&g, g.order(), |a, x| g.mul(a, x)).unwrap(),
            _ => product(&discrete_groupoid(k), &action_groupoid(&g, g.order(), |a, x| g.mul(a, x)).unwrap()),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, ..ProptestConfig::default() })]

    #[test]
    fn structure_maps_satisfy_the_axioms(g in any_groupoid()) {
        for x in 0..g.n_obj() {
            prop_assert_eq!((g.src(g.id(x)), g.tgt(g.id(x))), (x, x));
        }
        for m in 0..g.n_mor() {
            prop_assert_eq!(g.compose(g.id(g.tgt(m)), m), m);
            prop_assert_eq!(g.compose(m, g.id(g.src(m))), m);
            prop_assert_eq!(g.compose(g.inv(m), m), g.id(g.src(m)));
            for &m2 in g.out_of(g.tgt(m)) {
                for &m3 in g.out_of(g.tgt(m2)) {
                    prop_assert_eq!(g.compose(m3, g.compose(m2, m)), g.compose(g.compose(m3, m2), m));
                }
            }
        }
        prop_assert_eq!(opposite(&opposite(&g)), g);
    }

    #[test]
    fn weak_equivalences_preserve_components_and_automorphisms(g in any_groupoid(), k in 1usize..=3) {
        // the projection G × {pair groupoid on k objects} -> G is a weak equivalence
        let pair = action_groupoid(&FiniteGroup::cyclic(k), k, |a, x| (a + x) % k).unwrap();
        let x = product(&g, &pair);
        let (pm, po) = (pair.n_mor(), pair.n_obj());
        let f = GroupoidFunctor::new(&x, &g, (0..x.n_obj()).map(|o| o / po).collect(), (0..x.n_mor()).map(|m| m / pm).collect()).unwrap();
        prop_assert!(is_weak_equivalence_functor(&x, &g, &f).is_none());
        let (cx, cg) = (pi0(&x), pi0(&g));
        let nx = cx.iter().max().map_or(0, |m| m + 1);
        let ng = cg.iter().max().map_or(0, |m| m + 1);
        prop_assert_eq!(nx, ng);
        for o in 0..x.n_obj() {
            let (a, _) = hom_group(&x, o);
            let (b, _) = hom_group(&g, f.obj_map[o]);
            prop_assert!(isomorphic(&a.table(), &b.table()));
        }
    }
}
