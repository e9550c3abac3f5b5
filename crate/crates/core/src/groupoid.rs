//! Finite groupoids, functors, natural transformations and the
//! weak-equivalence test for functors.

use std::collections::HashMap;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::algebra::FiniteGroup;
use crate::error::{check_index, Error, Result};

/// A finite groupoid. Composition `comp(g2, g1)` means "g2 after g1" and is
/// defined iff `src(g2) == tgt(g1)`.
///
/// Composition is stored sparsely: for each `g1` a block indexed by the
/// position of `g2` among the morphisms leaving `tgt(g1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroupoid {
    n_obj: usize,
    src: Vec<usize>,
    tgt: Vec<usize>,
    id: Vec<usize>,
    inv: Vec<usize>,
    out: Vec<Vec<usize>>,
    out_pos: Vec<usize>,
    inc: Vec<Vec<usize>>,
    in_pos: Vec<usize>,
    comp_base: Vec<usize>,
    comp: Vec<usize>,
}

impl FiniteGroupoid {
    /// Builds and validates a groupoid from structure maps and a composition
    /// function, which is only called on composable pairs.
    pub fn from_fn(
        n_obj: usize,
        src: Vec<usize>,
        tgt: Vec<usize>,
        id: Vec<usize>,
        mut comp_fn: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        let g = Self::assemble(n_obj, src, tgt, id, |g2, g1| Some(comp_fn(g2, g1)))?;
        g.validate()?;
        Ok(g)
    }

    /// Like [`from_fn`](Self::from_fn) but skips the axiom checks; for
    /// constructions whose laws are verified elsewhere.
    pub(crate) fn from_fn_unchecked(
        n_obj: usize,
        src: Vec<usize>,
        tgt: Vec<usize>,
        id: Vec<usize>,
        mut comp_fn: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        Self::assemble(n_obj, src, tgt, id, |g2, g1| Some(comp_fn(g2, g1)))
    }

    /// Builds from a partial composition table `comp[g2][g1]`.
    pub fn from_table(n_obj: usize, src: Vec<usize>, tgt: Vec<usize>, id: Vec<usize>, comp: &[Vec<Option<usize>>]) -> Result<Self> {
        let n = src.len();
        if comp.len() != n || comp.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("composition table must be {n}x{n}")));
        }
        let g = Self::assemble(n_obj, src, tgt, id, |g2, g1| comp[g2][g1])?;
        for (g2, row) in comp.iter().enumerate() {
            for (g1, c) in row.iter().enumerate() {
                if c.is_some() && g.src[g2] != g.tgt[g1] {
                    return Err(Error::GroupoidAxiom(format!("comp({g2},{g1}) given for non-composable pair")));
                }
            }
        }
        g.validate()?;
        Ok(g)
    }

    fn assemble(
        n_obj: usize,
        src: Vec<usize>,
        tgt: Vec<usize>,
        id: Vec<usize>,
        mut comp_fn: impl FnMut(usize, usize) -> Option<usize>,
    ) -> Result<Self> {
        let n = src.len();
        if tgt.len() != n || id.len() != n_obj {
            return Err(Error::Shape("groupoid arrays have inconsistent lengths".into()));
        }
        for &x in src.iter().chain(&tgt) {
            check_index(x, n_obj)?;
        }
        for &m in &id {
            check_index(m, n)?;
        }
        let mut out = vec![Vec::new(); n_obj];
        let mut out_pos = vec![0; n];
        for m in 0..n {
            out_pos[m] = out[src[m]].len();
            out[src[m]].push(m);
        }
        let mut inc = vec![Vec::new(); n_obj];
        let mut in_pos = vec![0; n];
        for m in 0..n {
            in_pos[m] = inc[tgt[m]].len();
            inc[tgt[m]].push(m);
        }
        let mut comp_base = vec![0; n];
        let mut comp = Vec::new();
        for g1 in 0..n {
            comp_base[g1] = comp.len();
            for &g2 in &out[tgt[g1]] {
                let c = comp_fn(g2, g1).ok_or_else(|| Error::GroupoidAxiom(format!("composable pair ({g2},{g1}) has no composite")))?;
                check_index(c, n)?;
                comp.push(c);
            }
        }
        let mut g = FiniteGroupoid { n_obj, src, tgt, id, inv: vec![usize::MAX; n], out, out_pos, inc, in_pos, comp_base, comp };
        for m in 0..n {
            let back = g.tgt[m];
            let want = g.id[g.src[m]];
            if let Some(&h) = g.out[back].iter().find(|&&h| g.tgt[h] == g.src[m] && g.compose(h, m) == want) {
                g.inv[m] = h;
            }
        }
        Ok(g)
    }

    /// Checks identities, associativity and inverses.
    pub fn validate(&self) -> Result<()> {
        let ax = |s: String| Err(Error::GroupoidAxiom(s));
        for x in 0..self.n_obj {
            let e = self.id[x];
            if self.src[e] != x || self.tgt[e] != x {
                return ax(format!("id({x}) has wrong endpoints"));
            }
        }
        for g1 in 0..self.n_mor() {
            for &g2 in &self.out[self.tgt[g1]] {
                let c = self.compose(g2, g1);
                if self.src[c] != self.src[g1] || self.tgt[c] != self.tgt[g2] {
                    return ax(format!("comp({g2},{g1}) has wrong endpoints"));
                }
            }
            if self.compose(g1, self.id[self.src[g1]]) != g1 || self.compose(self.id[self.tgt[g1]], g1) != g1 {
                return ax(format!("identity law fails at {g1}"));
            }
            if self.inv[g1] == usize::MAX {
                return ax(format!("morphism {g1} has no inverse"));
            }
            if self.compose(g1, self.inv[g1]) != self.id[self.tgt[g1]] {
                return ax(format!("inverse law fails at {g1}"));
            }
        }
        for g1 in 0..self.n_mor() {
            for &g2 in &self.out[self.tgt[g1]] {
                let c21 = self.compose(g2, g1);
                for &g3 in &self.out[self.tgt[g2]] {
                    if self.compose(g3, c21) != self.compose(self.compose(g3, g2), g1) {
                        return ax(format!("associativity fails at ({g3},{g2},{g1})"));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn n_obj(&self) -> usize {
        self.n_obj
    }
    #[inline]
    pub fn n_mor(&self) -> usize {
        self.src.len()
    }
    #[inline]
    pub fn src(&self, m: usize) -> usize {
        self.src[m]
    }
    #[inline]
    pub fn tgt(&self, m: usize) -> usize {
        self.tgt[m]
    }
    #[inline]
    pub fn id(&self, x: usize) -> usize {
        self.id[x]
    }
    #[inline]
    pub fn inv(&self, m: usize) -> usize {
        self.inv[m]
    }

    /// `g2 ∘ g1`; panics in debug builds if not composable.
    #[inline]
    pub fn compose(&self, g2: usize, g1: usize) -> usize {
        debug_assert_eq!(self.src[g2], self.tgt[g1], "compose({g2},{g1}) not composable");
        self.comp[self.comp_base[g1] + self.out_pos[g2]]
    }

    #[inline]
    pub fn try_compose(&self, g2: usize, g1: usize) -> Option<usize> {
        (self.src[g2] == self.tgt[g1]).then(|| self.compose(g2, g1))
    }

    /// Morphisms with source `x`.
    pub fn out_of(&self, x: usize) -> &[usize] {
        &self.out[x]
    }

    /// Morphisms with target `x`, in increasing order.
    pub fn incoming(&self, x: usize) -> &[usize] {
        &self.inc[x]
    }

    /// Position of `m` in `incoming(tgt(m))`.
    #[inline]
    pub fn in_pos(&self, m: usize) -> usize {
        self.in_pos[m]
    }

    /// Morphisms `x -> y`.
    pub fn hom(&self, x: usize, y: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[x].iter().copied().filter(move |&m| self.tgt[m] == y)
    }

    pub fn srcs(&self) -> &[usize] {
        &self.src
    }
    pub fn tgts(&self) -> &[usize] {
        &self.tgt
    }
    pub fn ids(&self) -> &[usize] {
        &self.id
    }

    /// Dense partial composition table, `table[g2][g1]`.
    pub fn comp_table(&self) -> Vec<Vec<Option<usize>>> {
        (0..self.n_mor()).map(|g2| (0..self.n_mor()).map(|g1| self.try_compose(g2, g1)).collect()).collect()
    }
}

/// Only identity morphisms; morphism `x` is `id(x)`.
pub fn discrete_groupoid(n: usize) -> FiniteGroupoid {
    let v: Vec<usize> = (0..n).collect();
    FiniteGroupoid::from_fn_unchecked(n, v.clone(), v.clone(), v, |a, _| a).unwrap()
}

/// One object, morphisms the elements of `g`.
pub fn delooping(g: &FiniteGroup) -> FiniteGroupoid {
    let n = g.order();
    FiniteGroupoid::from_fn_unchecked(1, vec![0; n], vec![0; n], vec![0], |a, b| g.mul(a, b)).unwrap()
}

/// Action groupoid of a left action of `h` on `0..n_points`.
/// Morphism `(k, x)` is `k * n_points + x` with `s = x`, `t = k.x`.
pub fn action_groupoid(h: &FiniteGroup, n_points: usize, act: impl Fn(usize, usize) -> usize) -> Result<FiniteGroupoid> {
    for x in 0..n_points {
        check_index(act(0, x), n_points)?;
        if act(0, x) != x {
            return Err(Error::InvalidAction(format!("identity moves {x}")));
        }
        for a in 0..h.order() {
            for b in 0..h.order() {
                if act(h.mul(a, b), x) != act(a, act(b, x)) {
                    return Err(Error::InvalidAction(format!("not compatible at ({a},{b},{x})")));
                }
            }
        }
    }
    let n = h.order() * n_points;
    let src: Vec<usize> = (0..n).map(|m| m % n_points).collect();
    let tgt: Vec<usize> = (0..n).map(|m| act(m / n_points, m % n_points)).collect();
    let id: Vec<usize> = (0..n_points).collect();
    FiniteGroupoid::from_fn(n_points, src, tgt, id, |g2, g1| h.mul(g2 / n_points, g1 / n_points) * n_points + g1 % n_points)
}

/// Source and target exchanged, composition reversed.
pub fn opposite(g: &FiniteGroupoid) -> FiniteGroupoid {
    FiniteGroupoid::from_fn_unchecked(g.n_obj, g.tgt.clone(), g.src.clone(), g.id.clone(), |a, b| g.compose(b, a)).unwrap()
}

/// Product groupoid; object `(a, b)` is `a * |B0| + b`, morphism likewise.
pub fn product(a: &FiniteGroupoid, b: &FiniteGroupoid) -> FiniteGroupoid {
    let (b0, b1) = (b.n_obj(), b.n_mor());
    let n = a.n_mor() * b1;
    let src = (0..n).map(|m| a.src(m / b1) * b0 + b.src(m % b1)).collect();
    let tgt = (0..n).map(|m| a.tgt(m / b1) * b0 + b.tgt(m % b1)).collect();
    let id = (0..a.n_obj() * b0).map(|x| a.id(x / b0) * b1 + b.id(x % b0)).collect();
    FiniteGroupoid::from_fn_unchecked(a.n_obj() * b0, src, tgt, id, |g2, g1| a.compose(g2 / b1, g1 / b1) * b1 + b.compose(g2 % b1, g1 % b1))
        .unwrap()
}

/// Full subgroupoid of `G × G` on objects `(x, y)` with `proj(x) == proj(y)`.
/// Returns the groupoid and the object and morphism pair lists.
pub fn fibre_square(g: &FiniteGroupoid, proj_obj: &[usize]) -> (FiniteGroupoid, Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let objs: Vec<(usize, usize)> =
        (0..g.n_obj()).flat_map(|x| (0..g.n_obj()).filter(move |&y| proj_obj[x] == proj_obj[y]).map(move |y| (x, y))).collect();
    let obj_index: HashMap<(usize, usize), usize> = objs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mors: Vec<(usize, usize)> = (0..g.n_mor())
        .flat_map(|a| (0..g.n_mor()).filter(move |&b| proj_obj[g.src(a)] == proj_obj[g.src(b)]).map(move |b| (a, b)))
        .collect();
    let mor_index: HashMap<(usize, usize), usize> = mors.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let src = mors.iter().map(|&(a, b)| obj_index[&(g.src(a), g.src(b))]).collect();
    let tgt = mors.iter().map(|&(a, b)| obj_index[&(g.tgt(a), g.tgt(b))]).collect();
    let id = objs.iter().map(|&(x, y)| mor_index[&(g.id(x), g.id(y))]).collect();
    let gr = FiniteGroupoid::from_fn_unchecked(objs.len(), src, tgt, id, |m2, m1| {
        let (a2, b2) = mors[m2];
        let (a1, b1) = mors[m1];
        mor_index[&(g.compose(a2, a1), g.compose(b2, b1))]
    })
    .unwrap();
    (gr, objs, mors)
}

/// A functor given by object and morphism maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupoidFunctor {
    pub obj_map: Vec<usize>,
    pub mor_map: Vec<usize>,
}

impl GroupoidFunctor {
    pub fn new(x: &FiniteGroupoid, y: &FiniteGroupoid, obj_map: Vec<usize>, mor_map: Vec<usize>) -> Result<Self> {
        let f = GroupoidFunctor { obj_map, mor_map };
        f.validate(x, y)?;
        Ok(f)
    }

    pub fn identity(x: &FiniteGroupoid) -> Self {
        GroupoidFunctor { obj_map: (0..x.n_obj()).collect(), mor_map: (0..x.n_mor()).collect() }
    }

    /// Checks that the maps respect src, tgt, id and composition.
    pub fn validate(&self, x: &FiniteGroupoid, y: &FiniteGroupoid) -> Result<()> {
        let bad = |s: String| Err(Error::FunctorAxiom(s));
        if self.obj_map.len() != x.n_obj() || self.mor_map.len() != x.n_mor() {
            return Err(Error::Shape("functor maps have wrong length".into()));
        }
        for &o in &self.obj_map {
            check_index(o, y.n_obj())?;
        }
        for &m in &self.mor_map {
            check_index(m, y.n_mor())?;
        }
        for m in 0..x.n_mor() {
            let fm = self.mor_map[m];
            if y.src(fm) != self.obj_map[x.src(m)] || y.tgt(fm) != self.obj_map[x.tgt(m)] {
                return bad(format!("morphism {m} endpoints not preserved"));
            }
        }
        for o in 0..x.n_obj() {
            if self.mor_map[x.id(o)] != y.id(self.obj_map[o]) {
                return bad(format!("identity of {o} not preserved"));
            }
        }
        for g1 in 0..x.n_mor() {
            for &g2 in x.out_of(x.tgt(g1)) {
                if self.mor_map[x.compose(g2, g1)] != y.compose(self.mor_map[g2], self.mor_map[g1]) {
                    return bad(format!("composition ({g2},{g1}) not preserved"));
                }
            }
        }
        Ok(())
    }

    pub fn compose(&self, first: &GroupoidFunctor) -> GroupoidFunctor {
        GroupoidFunctor {
            obj_map: first.obj_map.iter().map(|&o| self.obj_map[o]).collect(),
            mor_map: first.mor_map.iter().map(|&m| self.mor_map[m]).collect(),
        }
    }
}

/// Components `eta(x): F(x) -> F'(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NatTransformation {
    pub components: Vec<usize>,
}

impl NatTransformation {
    pub fn new(x: &FiniteGroupoid, y: &FiniteGroupoid, f: &GroupoidFunctor, f2: &GroupoidFunctor, components: Vec<usize>) -> Result<Self> {
        if components.len() != x.n_obj() {
            return Err(Error::Shape("transformation has wrong length".into()));
        }
        for o in 0..x.n_obj() {
            let e = components[o];
            check_index(e, y.n_mor())?;
            if y.src(e) != f.obj_map[o] || y.tgt(e) != f2.obj_map[o] {
                return Err(Error::FunctorAxiom(format!("component at {o} has wrong endpoints")));
            }
        }
        for m in 0..x.n_mor() {
            let lhs = y.compose(components[x.tgt(m)], f.mor_map[m]);
            let rhs = y.compose(f2.mor_map[m], components[x.src(m)]);
            if lhs != rhs {
                return Err(Error::FunctorAxiom(format!("naturality fails at {m}")));
            }
        }
        Ok(NatTransformation { components })
    }
}

/// Connected components; `labels[x]` is the least object in `x`'s class,
/// relabeled to 0..k in order of first appearance.
pub fn pi0(g: &FiniteGroupoid) -> Vec<usize> {
    let mut uf = UnionFind::<usize>::new(g.n_obj());
    for m in 0..g.n_mor() {
        uf.union(g.src(m), g.tgt(m));
    }
    let mut label = HashMap::new();
    (0..g.n_obj())
        .map(|x| {
            let r = uf.find(x);
            let k = label.len();
            *label.entry(r).or_insert(k)
        })
        .collect()
}

/// Automorphism group of `x`, identity first, in morphism index order.
pub fn hom_group(g: &FiniteGroupoid, x: usize) -> (FiniteGroup, Vec<usize>) {
    let mut elems: Vec<usize> = g.hom(x, x).collect();
    elems.sort_unstable();
    let e = g.id(x);
    elems.retain(|&m| m != e);
    elems.insert(0, e);
    let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let n = elems.len();
    let mul = (0..n * n).map(|i| pos[&g.compose(elems[i / n], elems[i % n])]).collect();
    (FiniteGroup::from_flat(n, mul).expect("automorphism group"), elems)
}

/// Why a functor is not a weak equivalence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum WeakEquivalenceWitness {
    /// Target object not isomorphic to any image object.
    NotEssentiallySurjective { object: usize },
    /// Two source morphisms with the same endpoints map to the same target morphism.
    NotFaithful { m1: usize, m2: usize },
    /// Hom-set sizes differ over this pair of source objects.
    NotFull { x: usize, y: usize, source_homs: usize, target_homs: usize },
}

/// Weak-equivalence test on raw structure maps, so it can run on groupoids
/// that are never materialized with their composition.
///
/// (a) every target object is isomorphic to an image object;
/// (b) `m -> (src m, tgt m, F m)` is a bijection onto `(X0 x X0) x_{Y0 x Y0} Y1`.
pub fn weak_equivalence_check(
    x_n_obj: usize,
    x_src: &[usize],
    x_tgt: &[usize],
    y_n_obj: usize,
    y_src: &[usize],
    y_tgt: &[usize],
    obj_map: &[usize],
    mor_map: &[usize],
) -> Option<WeakEquivalenceWitness> {
    let mut uf = UnionFind::<usize>::new(y_n_obj);
    for m in 0..y_src.len() {
        uf.union(y_src[m], y_tgt[m]);
    }
    let mut hit = vec![false; y_n_obj];
    for &o in obj_map {
        hit[uf.find(o)] = true;
    }
    if let Some(object) = (0..y_n_obj).find(|&o| !hit[uf.find(o)]) {
        return Some(WeakEquivalenceWitness::NotEssentiallySurjective { object });
    }
    // y-hom counts by endpoint pair
    let mut y_homs: HashMap<(usize, usize), usize> = HashMap::new();
    for m in 0..y_src.len() {
        *y_homs.entry((y_src[m], y_tgt[m])).or_default() += 1;
    }
    let mut x_homs: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for m in 0..x_src.len() {
        x_homs.entry((x_src[m], x_tgt[m])).or_default().push(m);
    }
    let mut pairs: Vec<_> = x_homs.iter().collect();
    pairs.sort_unstable_by_key(|(k, _)| **k);
    for (&(a, b), ms) in pairs {
        let mut seen: HashMap<usize, usize> = HashMap::new();
        for &m in ms {
            if let Some(&m1) = seen.get(&mor_map[m]) {
                return Some(WeakEquivalenceWitness::NotFaithful { m1, m2: m });
            }
            seen.insert(mor_map[m], m);
        }
        let target = y_homs.get(&(obj_map[a], obj_map[b])).copied().unwrap_or(0);
        if target != ms.len() {
            return Some(WeakEquivalenceWitness::NotFull { x: a, y: b, source_homs: ms.len(), target_homs: target });
        }
    }
    // pairs of source objects with no morphisms at all
    let mut preimages = vec![0usize; y_n_obj];
    for &o in obj_map {
        preimages[o] += 1;
    }
    let expected: usize = (0..y_src.len()).map(|m| preimages[y_src[m]] * preimages[y_tgt[m]]).sum();
    if expected != x_src.len() {
        for a in 0..x_n_obj {
            for b in 0..x_n_obj {
                if !x_homs.contains_key(&(a, b)) {
                    if let Some(&t) = y_homs.get(&(obj_map[a], obj_map[b])) {
                        return Some(WeakEquivalenceWitness::NotFull { x: a, y: b, source_homs: 0, target_homs: t });
                    }
                }
            }
        }
    }
    None
}

pub fn is_weak_equivalence_functor(x: &FiniteGroupoid, y: &FiniteGroupoid, f: &GroupoidFunctor) -> Option<WeakEquivalenceWitness> {
    weak_equivalence_check(x.n_obj(), x.srcs(), x.tgts(), y.n_obj(), y.srcs(), y.tgts(), &f.obj_map, &f.mor_map)
}
