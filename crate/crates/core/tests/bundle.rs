mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::*;
use gerbecalc::anafunctor::{compose, extend_bundle, find_transformation, Anafunctor};
use gerbecalc::bundle::{
    check_morphism, death_map, dual_bundle, find_isomorphism, from_h_bundle, h_tensor, hom_trivials, tensor_product, to_h_bundle,
    trivial_bundle, trivial_tensor_map, trivialize, TensorTwist,
};
use gerbecalc::groupoid::{delooping, discrete_groupoid, is_weak_equivalence_functor, product};
use gerbecalc::spec::{twogroup_by_name, TWOGROUP_FIXTURES};
use gerbecalc::{Error, FiniteGroup, FiniteGroupoid, GroupoidFunctor, PrincipalBundle};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bz(n: usize) -> Arc<FiniteGroupoid> {
    Arc::new(delooping(&FiniteGroup::cyclic(n)))
}

/// `Z/4 -> Z/2` as a principal `Z/2`-bundle, `Z/2` acting by adding 2.
fn exact_sequence_bundle() -> PrincipalBundle {
    PrincipalBundle::new(bz(2), 2, vec![0, 1, 0, 1], vec![0; 4], |p, k| (p + 2 * k) % 4).unwrap()
}

#[test]
fn trivial_bundles() {
    let t = trivial_bundle(bz(2), &[0, 0]).unwrap();
    assert_eq!(t.bundle.total(), 4);
    assert!(bundle_is_principal(&t.bundle.gamma, &RawBundle::of(&t.bundle)));
    let empty = trivial_bundle(bz(2), &[]).unwrap();
    assert_eq!(empty.bundle.total(), 0);
    assert!(bundle_is_principal(&empty.bundle.gamma, &RawBundle::of(&empty.bundle)));
}

#[test]
fn trivial_bundle_over_discrete_groupoid_is_a_graph() {
    // one element over each m, anchored at f(m)
    let d = Arc::new(discrete_groupoid(3));
    let f = [2, 0, 2, 1];
    let t = trivial_bundle(d.clone(), &f).unwrap();
    assert_eq!(t.bundle.total(), 4);
    assert_eq!((0..4).map(|i| (t.bundle.proj(i), t.bundle.anchor(i))).collect::<Vec<_>>(), vec![(0, 2), (1, 0), (2, 2), (3, 1)]);
    let graph = PrincipalBundle::new(d, 4, vec![0, 1, 2, 3], f.to_vec(), |p, _| p).unwrap();
    assert_eq!(find_isomorphism(&graph, &t.bundle), Some(vec![0, 1, 2, 3]));
}

#[test]
fn broken_action_is_rejected_with_witness() {
    let t = trivial_bundle(bz(3), &[0]).unwrap();
    let mut raw = RawBundle::of(&t.bundle);
    *raw.act.get_mut(&(0, 1)).unwrap() = 2;
    assert!(!bundle_is_principal(&t.bundle.gamma, &raw));
    let r = PrincipalBundle::from_triples(bz(3), 1, raw.proj.clone(), raw.anchor.clone(), &raw.triples());
    assert!(matches!(r, Err(Error::BundleAxiom(_)) | Err(Error::NotPrincipal(_))));
    // a non-free action: Z/2 acting trivially on one point
    let r = PrincipalBundle::new(bz(2), 1, vec![0], vec![0], |p, _| p);
    assert!(matches!(r, Err(Error::NotPrincipal(_))));
}

#[test]
fn exact_sequence_bundle_trivializes() {
    let p = exact_sequence_bundle();
    assert!(bundle_is_principal(&p.gamma, &RawBundle::of(&p)));
    let (triv, map) = trivialize(&p).unwrap();
    assert_eq!(triv.f, vec![0, 0]);
    check_morphism(&triv.bundle, &p, &map).unwrap();
    // the least section picks 0 over 0 and 1 over 1
    assert_eq!(triv.section(0), 0);
    assert_eq!(map[triv.section(1)], 1);
}

#[test]
fn hom_sets_between_trivial_bundles() {
    let a = delooping(&FiniteGroup::cyclic(3));
    assert_eq!(hom_trivials(&a, &[0, 0, 0], &[0, 0, 0]).len(), 27);
    let d = discrete_groupoid(2);
    assert!(hom_trivials(&d, &[0, 1], &[0, 0]).is_empty());
    assert_eq!(hom_trivials(&d, &[0, 1], &[0, 1]), vec![vec![d.id(0), d.id(1)]]);
    let tg = twogroup_by_name("AUT:Z3").unwrap();
    // t is trivial for AUT(Z3), so every hom-set is empty or a copy of Z3
    let f1 = [0, 1];
    let f2 = [0, 1];
    let (t1, t2) = (trivial_bundle(tg.gpd.clone(), &f1).unwrap(), trivial_bundle(tg.gpd.clone(), &f2).unwrap());
    let homs = hom_trivials(&tg.gpd, &f1, &f2);
    assert_eq!(homs.len(), 9);
    assert!(hom_trivials(&tg.gpd, &[0, 1], &[1, 1]).is_empty());
    for g in &homs {
        check_morphism(&t1.bundle, &t2.bundle, &gerbecalc::bundle::trivial_morphism(&t1, &t2, g)).unwrap();
    }
}

#[test]
fn anafunctors_from_functors() {
    let (z2, z4) = (bz(2), bz(4));
    let phi = GroupoidFunctor::new(&z2, &z4, vec![0], vec![0, 2]).unwrap();
    let f = Anafunctor::from_functor(z2.clone(), z4.clone(), &phi).unwrap();
    assert_eq!(f.total(), 4);
    let id = Anafunctor::identity(z4.clone()).unwrap();
    assert_eq!(id.total(), z4.n_mor());
    assert!(id.is_weak_equivalence());
    let d = Arc::new(discrete_groupoid(1));
    let to_pt = Anafunctor::from_functor(z2.clone(), d.clone(), &GroupoidFunctor::new(&z2, &d, vec![0], vec![0, 0]).unwrap()).unwrap();
    assert_eq!(to_pt.total(), 1);
    assert!(!to_pt.is_weak_equivalence());
}

#[test]
fn anafunctor_weak_equivalence_agrees_with_functor_test() {
    // projection B(Z2) x pair(2) -> B(Z2) is a weak equivalence, B(Z4) -> B(Z2) is not
    let pair = gerbecalc::groupoid::action_groupoid(&FiniteGroup::cyclic(2), 2, |a, x| (a + x) % 2).unwrap();
    let x = Arc::new(product(&bz(2), &pair));
    let pm = pair.n_mor();
    let proj = GroupoidFunctor::new(&x, &bz(2), vec![0; 2], (0..x.n_mor()).map(|m| m / pm).collect()).unwrap();
    let cases = [
        (x.clone(), bz(2), proj),
        (bz(4), bz(2), GroupoidFunctor::new(&bz(4), &bz(2), vec![0], vec![0, 1, 0, 1]).unwrap()),
        (bz(2), bz(2), GroupoidFunctor::identity(&bz(2))),
    ];
    for (a, b, f) in cases {
        let ana = Anafunctor::from_functor(a.clone(), b.clone(), &f).unwrap();
        assert_eq!(ana.is_weak_equivalence(), is_weak_equivalence_functor(&a, &b, &f).is_none());
    }
}

#[test]
fn composition_of_functor_anafunctors() {
    let (z2, z4, z8) = (bz(2), bz(4), bz(8));
    let f = GroupoidFunctor::new(&z2, &z4, vec![0], vec![0, 2]).unwrap();
    let g = GroupoidFunctor::new(&z4, &z8, vec![0], vec![0, 2, 4, 6]).unwrap();
    let af = Anafunctor::from_functor(z2.clone(), z4.clone(), &f).unwrap();
    let ag = Anafunctor::from_functor(z4.clone(), z8.clone(), &g).unwrap();
    let composite = compose(&af, &ag).unwrap();
    let direct = Anafunctor::from_functor(z2.clone(), z8.clone(), &g.compose(&f)).unwrap();
    assert!(find_transformation(&composite.ana, &direct).is_some());
    // F ∘ id ≅ F and id ∘ F ≅ F
    let left = compose(&Anafunctor::identity(z2.clone()).unwrap(), &af).unwrap();
    let right = compose(&af, &Anafunctor::identity(z4.clone()).unwrap()).unwrap();
    assert!(find_transformation(&left.ana, &af).is_some());
    assert!(find_transformation(&right.ana, &af).is_some());
    // associativity up to transformation
    let h = Anafunctor::identity(z8.clone()).unwrap();
    let a1 = compose(&compose(&af, &ag).unwrap().ana, &h).unwrap();
    let a2 = compose(&af, &compose(&ag, &h).unwrap().ana).unwrap();
    assert!(find_transformation(&a1.ana, &a2.ana).is_some());
}

#[test]
fn bundles_are_anafunctors_from_discrete_groupoids() {
    let p = exact_sequence_bundle();
    let a = Anafunctor::from_bundle(&p).unwrap();
    let back = a.to_bundle().unwrap();
    assert_eq!(back, p);
    // composing with a functor anafunctor is extension along it
    let phi = GroupoidFunctor::new(&bz(2), &bz(4), vec![0], vec![0, 2]).unwrap();
    let lam = Anafunctor::from_functor(bz(2), bz(4), &phi).unwrap();
    let comp = compose(&a, &lam).unwrap();
    let (ext, _) = extend_bundle(&p, &lam).unwrap();
    assert!(find_isomorphism(&comp.ana.to_bundle().unwrap(), &ext).is_some());
}

#[test]
fn extension_along_identity_and_equivalences() {
    let p = exact_sequence_bundle();
    let (ext, _) = extend_bundle(&p, &Anafunctor::identity(bz(2)).unwrap()).unwrap();
    assert!(find_isomorphism(&ext, &p).is_some());
    // extension along a weak equivalence of a trivial bundle is trivial
    let tg = twogroup_by_name("Z2_in_Z4").unwrap();
    let dz2 = Arc::new(discrete_groupoid(2));
    let pi0 = GroupoidFunctor::new(&tg.gpd, &dz2, (0..4).map(|g| g % 2).collect(), (0..tg.n1()).map(|m| tg.t(m) % 2).collect()).unwrap();
    let lam = Anafunctor::from_functor(tg.gpd.clone(), dz2.clone(), &pi0).unwrap();
    assert!(lam.is_weak_equivalence());
    let t = trivial_bundle(tg.gpd.clone(), &[1, 2, 3]).unwrap();
    let (ext, _) = extend_bundle(&t.bundle, &lam).unwrap();
    let (triv, _) = trivialize(&ext).unwrap();
    assert_eq!(triv.f, vec![1, 0, 1]);
}

#[test]
fn extension_along_theta_is_the_h_bundle() {
    // Θ: H ⋉ G -> B(H), (h, g) -> h
    for name in ["Z2_in_Z4", "AUT:Z3", "B:Z3"] {
        let tg = twogroup_by_name(name).unwrap();
        let nh = tg.cm.h.order();
        let bh = Arc::new(delooping(&tg.cm.h));
        let theta = GroupoidFunctor::new(&tg.gpd, &bh, vec![0; tg.n0()], (0..tg.n1()).map(|m| tg.split(m).0).collect()).unwrap();
        let lam = Anafunctor::from_functor(tg.gpd.clone(), bh.clone(), &theta).unwrap();
        let t = trivial_bundle(tg.gpd.clone(), &(0..3).map(|i| i % tg.n0()).collect::<Vec<_>>()).unwrap();
        let (ext, class) = extend_bundle(&t.bundle, &lam).unwrap();
        let hb = to_h_bundle(&tg, &t.bundle).unwrap();
        assert_eq!(ext.total(), hb.proj.len());
        // λ_p = (α(p), id) in X0 ×_{Θ,t} B(H)1
        let lam_of = |p: usize| (0..lam.total()).find(|&l| lam.al(l) == t.bundle.anchor(p) && lam.ar(l) == 0 && l % nh == 0).unwrap();
        let cls = |p: usize| class[&(p, lam_of(p))];
        for p in 0..t.bundle.total() {
            for h in 0..nh {
                assert_eq!(ext.act(cls(p), h), cls(hb.star(p, h)), "{name}");
            }
        }
    }
}

#[test]
fn h_bundle_round_trip() {
    for name in TWOGROUP_FIXTURES {
        let tg = twogroup_by_name(name).unwrap();
        let p = exact_or_trivial(&tg);
        let hb = to_h_bundle(&tg, &p).unwrap();
        assert_eq!(hb.f, p.anchors());
        assert_eq!(from_h_bundle(&tg, &hb).unwrap(), p, "{name}");
    }
    // discrete G: H trivial, f is the classifying function
    let tg = twogroup_by_name("discrete:S3").unwrap();
    let t = trivial_bundle(tg.gpd.clone(), &[4, 1]).unwrap();
    let hb = to_h_bundle(&tg, &t.bundle).unwrap();
    assert_eq!((hb.h_order, hb.f.clone()), (1, vec![4, 1]));
}

fn exact_or_trivial(tg: &Arc<gerbecalc::TwoGroup>) -> PrincipalBundle {
    let f: Vec<usize> = (0..3).map(|i| (i * 5 + 1) % tg.n0()).collect();
    trivial_bundle(tg.gpd.clone(), &f).unwrap().bundle
}

#[test]
fn anti_equivariance_is_checked() {
    let tg = twogroup_by_name("Z2_in_Z4").unwrap();
    let t = trivial_bundle(tg.gpd.clone(), &[0]).unwrap();
    let mut hb = to_h_bundle(&tg, &t.bundle).unwrap();
    hb.f[0] = (hb.f[0] + 1) % 4;
    assert!(matches!(from_h_bundle(&tg, &hb), Err(Error::AntiEquivarianceFails(..))));
}

#[test]
fn tensor_of_trivial_bundles() {
    for name in TWOGROUP_FIXTURES {
        let tg = twogroup_by_name(name).unwrap();
        let n0 = tg.n0();
        let f: Vec<usize> = (0..3).map(|i| (i + 1) % n0).collect();
        let g: Vec<usize> = (0..3).map(|i| (2 * i) % n0).collect();
        let fg: Vec<usize> = f.iter().zip(&g).map(|(&a, &b)| tg.mul0(a, b)).collect();
        let (a, b, ab) = (
            trivial_bundle(tg.gpd.clone(), &f).unwrap(),
            trivial_bundle(tg.gpd.clone(), &g).unwrap(),
            trivial_bundle(tg.gpd.clone(), &fg).unwrap(),
        );
        let t = tensor_product(&tg, &a.bundle, &b.bundle).unwrap();
        assert!(bundle_is_principal(&t.bundle.gamma, &RawBundle::of(&t.bundle)));
        let map = trivial_tensor_map(&tg, &a, &b, &ab, &t).unwrap();
        check_morphism(&t.bundle, &ab.bundle, &map).unwrap();
        // unit law
        let unit = trivial_bundle(tg.gpd.clone(), &[0; 3]).unwrap();
        let pu = tensor_product(&tg, &a.bundle, &unit.bundle).unwrap();
        assert!(find_isomorphism(&pu.bundle, &a.bundle).is_some(), "{name}");
    }
}

#[test]
fn h_tensor_matches_the_quotient_of_triples() {
    for name in TWOGROUP_FIXTURES {
        let tg = twogroup_by_name(name).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (p, q) = (random_bundle(&tg.gpd, 2, &mut rng), random_bundle(&tg.gpd, 2, &mut rng));
        let t = tensor_product(&tg, &p, &q).unwrap();
        let th = to_h_bundle(&tg, &t.bundle).unwrap();
        let (hp, hq) = (to_h_bundle(&tg, &p).unwrap(), to_h_bundle(&tg, &q).unwrap());
        let (ht, classes) = h_tensor(&tg, &hp, &hq, TensorTwist::InverseAnchor).unwrap();
        // [(p, q)] -> [(p, q, id)] is a bijection of H-bundles
        let mut map = BTreeMap::new();
        for (&(a, b), &c) in &classes {
            let v = t.class(a, b, tg.id(tg.mul0(p.anchor(a), q.anchor(b))));
            assert_eq!(*map.entry(c).or_insert(v), v, "{name}: not constant on a class");
        }
        assert_eq!(map.len(), ht.proj.len());
        assert_eq!(map.values().collect::<std::collections::BTreeSet<_>>().len(), t.bundle.total(), "{name}");
        for (&c, &v) in &map {
            assert_eq!(ht.f[c], th.f[v]);
            assert_eq!(ht.proj[c], th.proj[v]);
            for h in 0..ht.h_order {
                assert_eq!(map[&ht.star(c, h)], th.star(v, h), "{name}");
            }
        }
    }
}

#[test]
fn dual_and_death_map() {
    for name in TWOGROUP_FIXTURES {
        let tg = twogroup_by_name(name).unwrap();
        let f: Vec<usize> = (0..2).map(|i| (i + 1) % tg.n0()).collect();
        let t = trivial_bundle(tg.gpd.clone(), &f).unwrap();
        let d = dual_bundle(&tg, &t.bundle).unwrap();
        let finv: Vec<usize> = f.iter().map(|&x| tg.inv0(x)).collect();
        let (triv, _) = trivialize(&d).unwrap();
        assert_eq!(triv.f, finv);
        assert!(find_isomorphism(&dual_bundle(&tg, &d).unwrap(), &t.bundle).is_some());
        let tensor = tensor_product(&tg, &t.bundle, &d).unwrap();
        let unit = trivial_bundle(tg.gpd.clone(), &[0; 2]).unwrap();
        let dm = death_map(&tg, &t.bundle, &d, &tensor, &unit).unwrap();
        let mut sorted = dm.clone();
        sorted.sort();
        assert_eq!(sorted, (0..unit.bundle.total()).collect::<Vec<_>>(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn random_bundles_are_principal_and_trivialize(fix in 0usize..7, base in 0usize..=3, seed in any::<u64>()) {
        let tg = twogroup_by_name(TWOGROUP_FIXTURES[fix]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_bundle(&tg.gpd, base, &mut rng);
        prop_assert!(bundle_is_principal(&p.gamma, &RawBundle::of(&p)));
        let (triv, map) = trivialize(&p).unwrap();
        prop_assert!(check_morphism(&triv.bundle, &p, &map).is_ok());
        let hb = to_h_bundle(&tg, &p).unwrap();
        prop_assert_eq!(from_h_bundle(&tg, &hb).unwrap(), p);
    }

    #[test]
    fn tensor_classes_are_independent_of_labels(fix in 0usize..7, seed in any::<u64>()) {
        let tg = twogroup_by_name(TWOGROUP_FIXTURES[fix]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (random_bundle(&tg.gpd, 2, &mut rng), random_bundle(&tg.gpd, 2, &mut rng));
        let t = tensor_product(&tg, &p, &q).unwrap();
        let (tp, _) = trivialize(&p).unwrap();
        let (tq, _) = trivialize(&q).unwrap();
        let t2 = tensor_product(&tg, &tp.bundle, &tq.bundle).unwrap();
        prop_assert!(find_isomorphism(&t.bundle, &t2.bundle).is_some());
    }
}
