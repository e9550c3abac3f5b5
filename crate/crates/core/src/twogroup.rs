//! Crossed modules and strict 2-groups.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{automorphism_group, semidirect_product, FiniteGroup, GroupAction, GroupHom};
use crate::error::{Error, Result};
use crate::groupoid::{is_weak_equivalence_functor, FiniteGroupoid, GroupoidFunctor, WeakEquivalenceWitness};

/// `t: H -> G` with a left action of `G` on `H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossedModule {
    pub h: FiniteGroup,
    pub g: FiniteGroup,
    pub t: GroupHom,
    pub act: GroupAction,
}

impl CrossedModule {
    /// Checks equivariance `t(^g h) = g t(h) g^-1` and Peiffer `^{t(h)} x = h x h^-1`.
    pub fn new(h: FiniteGroup, g: FiniteGroup, t: GroupHom, act: GroupAction) -> Result<Self> {
        GroupHom::new(&h, &g, t.map.clone())?;
        GroupAction::from_flat(&g, &h, act.table().concat())?;
        for gi in 0..g.order() {
            for hi in 0..h.order() {
                if t.apply(act.apply(gi, hi)) != g.conj(gi, t.apply(hi)) {
                    return Err(Error::EquivarianceFails(gi, hi));
                }
            }
        }
        for hi in 0..h.order() {
            for x in 0..h.order() {
                if act.apply(t.apply(hi), x) != h.conj(hi, x) {
                    return Err(Error::PeifferFails(hi, x));
                }
            }
        }
        Ok(CrossedModule { h, g, t, act })
    }

    /// `1 -> G`.
    pub fn discrete(g: &FiniteGroup) -> Self {
        let h = FiniteGroup::trivial();
        let t = GroupHom::trivial(&h);
        let act = GroupAction::trivial(g, &h);
        CrossedModule::new(h, g.clone(), t, act).expect("discrete crossed module")
    }

    /// `A -> 1`; fails with a Peiffer witness unless `A` is abelian.
    pub fn delooping(a: &FiniteGroup) -> Result<Self> {
        let g = FiniteGroup::trivial();
        let t = GroupHom::trivial(a);
        let act = GroupAction::trivial(&g, a);
        CrossedModule::new(a.clone(), g, t, act)
    }

    /// `H -> Aut(H)` by inner automorphisms, with evaluation action.
    pub fn automorphism(h: &FiniteGroup, cap: usize) -> Result<Self> {
        let aut = automorphism_group(h, cap)?;
        let n = h.order();
        let act: Vec<usize> = aut.perms.iter().flat_map(|p| p.iter().copied()).collect();
        let act = GroupAction::from_flat(&aut.group, h, act)?;
        debug_assert_eq!(act.table().len() * n, aut.group.order() * n);
        CrossedModule::new(h.clone(), aut.group, aut.inner, act)
    }

    /// `G/im t` and `ker t`, with the kernel asserted abelian.
    pub fn pi0_pi1(&self) -> (FiniteGroup, FiniteGroup) {
        let image = self.t.image(self.g.order());
        let (pi0, _) = self.g.quotient(&image);
        let pi1 = self.h.subgroup(&self.t.kernel());
        assert!(pi1.is_abelian(), "kernel of a crossed module is abelian");
        (pi0, pi1)
    }
}

/// A strict 2-group: a groupoid whose object and morphism sets are groups
/// with all structure maps homomorphisms.
#[derive(Debug, Clone)]
pub struct TwoGroup {
    pub gpd: Arc<FiniteGroupoid>,
    pub g0: FiniteGroup,
    pub g1: FiniteGroup,
    /// Crossed-module presentation (extracted when built from raw parts).
    pub cm: CrossedModule,
    /// `split[γ] = (h, g)` with `h` indexing `cm.h` and `g = s(γ)`.
    split: Vec<(usize, usize)>,
    /// Inverse of `split`.
    join: Vec<usize>,
    /// For each `x` in `G`, the morphisms `(h, 1)` with `t(h) = x`.
    t_fibres: Vec<Vec<usize>>,
}

impl TwoGroup {
    /// Validates a 2-group given by its groupoid and the two groups.
    pub fn from_parts(gpd: FiniteGroupoid, g0: FiniteGroup, g1: FiniteGroup) -> Result<Self> {
        gpd.validate()?;
        if gpd.n_obj() != g0.order() || gpd.n_mor() != g1.order() {
            return Err(Error::Shape("2-group groups do not match groupoid sizes".into()));
        }
        GroupHom::new(&g1, &g0, gpd.srcs().to_vec())?;
        GroupHom::new(&g1, &g0, gpd.tgts().to_vec())?;
        GroupHom::new(&g0, &g1, gpd.ids().to_vec())?;
        // multiplication is a functor: interchange law
        for a1 in 0..gpd.n_mor() {
            for &a2 in gpd.out_of(gpd.tgt(a1)) {
                let a = gpd.compose(a2, a1);
                for b1 in 0..gpd.n_mor() {
                    for &b2 in gpd.out_of(gpd.tgt(b1)) {
                        let lhs = g1.mul(a, gpd.compose(b2, b1));
                        let rhs = gpd.compose(g1.mul(a2, b2), g1.mul(a1, b1));
                        if lhs != rhs {
                            return Err(Error::GroupoidAxiom(format!("interchange law fails at ({a2},{a1},{b2},{b1})")));
                        }
                    }
                }
            }
        }
        let cm = extract_crossed_module(&gpd, &g0, &g1)?;
        Ok(Self::assemble(gpd, g0, g1, cm))
    }

    fn assemble(gpd: FiniteGroupoid, g0: FiniteGroup, g1: FiniteGroup, cm: CrossedModule) -> Self {
        let kernel: Vec<usize> = (0..gpd.n_mor()).filter(|&m| gpd.src(m) == 0).collect();
        let pos: HashMap<usize, usize> = kernel.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let ng = g0.order();
        let mut split = vec![(0, 0); gpd.n_mor()];
        let mut join = vec![0; gpd.n_mor()];
        for m in 0..gpd.n_mor() {
            let s = gpd.src(m);
            let k = g1.mul(m, gpd.id(g0.inv(s)));
            split[m] = (pos[&k], s);
            join[pos[&k] * ng + s] = m;
        }
        let mut t_fibres = vec![Vec::new(); ng];
        for &k in &kernel {
            t_fibres[gpd.tgt(k)].push(k);
        }
        TwoGroup { gpd: Arc::new(gpd), g0, g1, cm, split, join, t_fibres }
    }

    /// Number of objects `|Γ0|`.
    #[inline]
    pub fn n0(&self) -> usize {
        self.g0.order()
    }
    /// Number of morphisms `|Γ1|`.
    #[inline]
    pub fn n1(&self) -> usize {
        self.g1.order()
    }
    #[inline]
    pub fn s(&self, m: usize) -> usize {
        self.gpd.src(m)
    }
    #[inline]
    pub fn t(&self, m: usize) -> usize {
        self.gpd.tgt(m)
    }
    #[inline]
    pub fn id(&self, g: usize) -> usize {
        self.gpd.id(g)
    }
    /// Vertical composition `m2 ∘ m1`.
    #[inline]
    pub fn comp(&self, m2: usize, m1: usize) -> usize {
        self.gpd.compose(m2, m1)
    }
    /// Groupoid inverse.
    #[inline]
    pub fn vinv(&self, m: usize) -> usize {
        self.gpd.inv(m)
    }
    #[inline]
    pub fn mul0(&self, a: usize, b: usize) -> usize {
        self.g0.mul(a, b)
    }
    /// Horizontal product of morphisms.
    #[inline]
    pub fn mul1(&self, a: usize, b: usize) -> usize {
        self.g1.mul(a, b)
    }
    #[inline]
    pub fn inv0(&self, a: usize) -> usize {
        self.g0.inv(a)
    }
    /// Group inverse `i(γ)` in Γ1.
    #[inline]
    pub fn inv1(&self, m: usize) -> usize {
        self.g1.inv(m)
    }
    /// Product of three morphisms.
    #[inline]
    pub fn mul1_3(&self, a: usize, b: usize, c: usize) -> usize {
        self.g1.mul(self.g1.mul(a, b), c)
    }
    /// `(h, g)` with `γ = (h,1)·id_g`.
    #[inline]
    pub fn split(&self, m: usize) -> (usize, usize) {
        self.split[m]
    }
    #[inline]
    pub fn join(&self, h: usize, g: usize) -> usize {
        self.join[h * self.n0() + g]
    }
    /// Morphisms `x -> y`.
    pub fn homs(&self, x: usize, y: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.mul0(y, self.inv0(x));
        self.t_fibres[d].iter().map(move |&k| self.mul1(k, self.id(x)))
    }
    /// Least morphism `x -> y`, if any.
    pub fn first_hom(&self, x: usize, y: usize) -> Option<usize> {
        self.homs(x, y).min()
    }
    /// Size of each nonempty hom-set, `|ker t|`.
    pub fn hom_size(&self) -> usize {
        self.t_fibres[0].len()
    }
}

/// Builds the 2-group of a crossed module: objects `G`, morphism `(h, g)`
/// is `h * |G| + g` with `s = g`, `t = t(h) g`.
pub fn crossed_to_twogroup(cm: &CrossedModule) -> TwoGroup {
    let ng = cm.g.order();
    let n1 = cm.h.order() * ng;
    let src: Vec<usize> = (0..n1).map(|m| m % ng).collect();
    let tgt: Vec<usize> = (0..n1).map(|m| cm.g.mul(cm.t.apply(m / ng), m % ng)).collect();
    let id: Vec<usize> = (0..ng).collect();
    let gpd =
        FiniteGroupoid::from_fn(ng, src, tgt, id, |m2, m1| cm.h.mul(m2 / ng, m1 / ng) * ng + m1 % ng).expect("crossed module groupoid");
    let g1 = semidirect_product(&cm.h, &cm.g, &cm.act);
    TwoGroup::assemble(gpd, cm.g.clone(), g1, cm.clone())
}

/// `H = ker s` (relabeled by increasing morphism index), `t` restricted,
/// `^g γ = id_g · γ · id_{g^-1}`.
pub fn twogroup_to_crossed(tg: &TwoGroup) -> CrossedModule {
    extract_crossed_module(&tg.gpd, &tg.g0, &tg.g1).expect("valid 2-group")
}

fn extract_crossed_module(gpd: &FiniteGroupoid, g0: &FiniteGroup, g1: &FiniteGroup) -> Result<CrossedModule> {
    let kernel: Vec<usize> = (0..gpd.n_mor()).filter(|&m| gpd.src(m) == 0).collect();
    let pos: HashMap<usize, usize> = kernel.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let h = g1.subgroup(&kernel);
    let t = GroupHom::new(&h, g0, kernel.iter().map(|&m| gpd.tgt(m)).collect())?;
    let mut act = Vec::with_capacity(g0.order() * kernel.len());
    for g in 0..g0.order() {
        for &m in &kernel {
            act.push(pos[&g1.mul(g1.mul(gpd.id(g), m), gpd.id(g0.inv(g)))]);
        }
    }
    let act = GroupAction::from_flat(g0, &h, act)?;
    CrossedModule::new(h, g0.clone(), t, act)
}

/// The explicit comparison map `γ -> (γ · id_{s(γ)}^-1, s(γ))` from a 2-group
/// to the 2-group of its extracted crossed module.
pub fn roundtrip_map(tg: &TwoGroup) -> Vec<usize> {
    let kernel: Vec<usize> = (0..tg.n1()).filter(|&m| tg.s(m) == 0).collect();
    let pos: HashMap<usize, usize> = kernel.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let ng = tg.n0();
    (0..tg.n1())
        .map(|m| {
            let s = tg.s(m);
            pos[&tg.mul1(m, tg.inv1(tg.id(s)))] * ng + s
        })
        .collect()
}

/// A strict homomorphism of 2-groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoGroupHom {
    pub phi: GroupHom,
    pub psi: GroupHom,
}

impl TwoGroupHom {
    pub fn new(a: &TwoGroup, b: &TwoGroup, phi: Vec<usize>, psi: Vec<usize>) -> Result<Self> {
        let phi = GroupHom::new(&a.g0, &b.g0, phi)?;
        let psi = GroupHom::new(&a.g1, &b.g1, psi)?;
        GroupoidFunctor::new(&a.gpd, &b.gpd, phi.map.clone(), psi.map.clone())?;
        Ok(TwoGroupHom { phi, psi })
    }

    /// Induced by a crossed-module map `(f_H, f_G)`.
    pub fn from_crossed(a: &TwoGroup, b: &TwoGroup, f_h: &[usize], f_g: &[usize]) -> Result<Self> {
        let psi = (0..a.n1())
            .map(|m| {
                let (h, g) = a.split(m);
                b.join(f_h[h], f_g[g])
            })
            .collect();
        Self::new(a, b, f_g.to_vec(), psi)
    }

    pub fn identity(a: &TwoGroup) -> Self {
        TwoGroupHom { phi: GroupHom::identity(&a.g0), psi: GroupHom::identity(&a.g1) }
    }

    pub fn functor(&self) -> GroupoidFunctor {
        GroupoidFunctor { obj_map: self.phi.map.clone(), mor_map: self.psi.map.clone() }
    }
}

/// Tests the underlying functor with the two weak-equivalence conditions.
pub fn is_weak_equivalence_2group(a: &TwoGroup, b: &TwoGroup, f: &TwoGroupHom) -> Option<WeakEquivalenceWitness> {
    is_weak_equivalence_functor(&a.gpd, &b.gpd, &f.functor())
}

/// Summary of π0 and π1 orders for reports.
#[derive(Debug, Clone, Serialize)]
pub struct HomotopyGroups {
    pub pi0_order: usize,
    pub pi1_order: usize,
}
