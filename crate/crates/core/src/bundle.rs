//! Principal groupoid bundles over finite bases, their morphisms, trivial
//! bundles, tensor products, duals and the H-bundle picture.

use std::collections::HashMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::error::{check_index, Error, Result};
use crate::groupoid::FiniteGroupoid;
use crate::twogroup::TwoGroup;

const UNDEF: usize = usize::MAX;

/// A principal Γ-bundle: projection to `0..base`, anchor to Γ0, and a right
/// Γ1-action `p ∘ γ` defined iff `anchor(p) == t(γ)`.
#[derive(Debug, Clone)]
pub struct PrincipalBundle {
    pub gamma: Arc<FiniteGroupoid>,
    base: usize,
    proj: Vec<usize>,
    anchor: Vec<usize>,
    action: Vec<usize>,
    fibres: Vec<Vec<usize>>,
}

impl PartialEq for PrincipalBundle {
    fn eq(&self, o: &Self) -> bool {
        self.base == o.base && self.proj == o.proj && self.anchor == o.anchor && self.action == o.action
    }
}

impl PrincipalBundle {
    /// Builds from an action function (called only where defined) and validates.
    pub fn new(
        gamma: Arc<FiniteGroupoid>,
        base: usize,
        proj: Vec<usize>,
        anchor: Vec<usize>,
        act: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        let b = Self::new_unchecked(gamma, base, proj, anchor, act)?;
        b.validate()?;
        Ok(b)
    }

    /// Builds without checking the bundle axioms; shapes are still checked.
    pub fn new_unchecked(
        gamma: Arc<FiniteGroupoid>,
        base: usize,
        proj: Vec<usize>,
        anchor: Vec<usize>,
        mut act: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        let n = proj.len();
        if anchor.len() != n {
            return Err(Error::Shape("projection and anchor lengths differ".into()));
        }
        for &m in &proj {
            check_index(m, base)?;
        }
        for &a in &anchor {
            check_index(a, gamma.n_obj())?;
        }
        let n1 = gamma.n_mor();
        let mut action = vec![UNDEF; n * n1];
        for p in 0..n {
            for &g in gamma.incoming(anchor[p]) {
                let q = act(p, g);
                check_index(q, n)?;
                action[p * n1 + g] = q;
            }
        }
        let mut fibres = vec![Vec::new(); base];
        for p in 0..n {
            fibres[proj[p]].push(p);
        }
        Ok(PrincipalBundle { gamma, base, proj, anchor, action, fibres })
    }

    /// Builds from `(p, γ, p')` triples.
    pub fn from_triples(
        gamma: Arc<FiniteGroupoid>,
        base: usize,
        proj: Vec<usize>,
        anchor: Vec<usize>,
        triples: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let n1 = gamma.n_mor();
        let mut table = HashMap::new();
        for &(p, g, q) in triples {
            check_index(p, proj.len())?;
            check_index(g, n1)?;
            if table.insert((p, g), q).is_some() {
                return Err(Error::BundleAxiom(format!("action given twice at ({p},{g})")));
            }
        }
        let mut missing = None;
        let b = Self::new_unchecked(gamma, base, proj, anchor, |p, g| match table.get(&(p, g)) {
            Some(&q) => q,
            None => {
                missing.get_or_insert((p, g));
                0
            }
        })?;
        if let Some((p, g)) = missing {
            return Err(Error::BundleAxiom(format!("action undefined at ({p},{g}) though anchor matches")));
        }
        if table.keys().any(|&(p, g)| b.anchor[p] != b.gamma.tgt(g)) {
            return Err(Error::BundleAxiom("action given where anchor and target differ".into()));
        }
        b.validate()?;
        Ok(b)
    }

    /// Checks the action axioms and principality of the shear map.
    pub fn validate(&self) -> Result<()> {
        let g = &*self.gamma;
        let ax = |s: String| Err(Error::BundleAxiom(s));
        if let Some(m) = (0..self.base).find(|&m| self.fibres[m].is_empty()) {
            return ax(format!("projection misses base point {m}"));
        }
        for p in 0..self.total() {
            let a = self.anchor[p];
            if self.act(p, g.id(a)) != p {
                return ax(format!("identity acts nontrivially on {p}"));
            }
            for &x in g.incoming(a) {
                let q = self.act(p, x);
                if self.proj[q] != self.proj[p] {
                    return ax(format!("action moves {p} off its fibre via {x}"));
                }
                if self.anchor[q] != g.src(x) {
                    return ax(format!("anchor of {p}∘{x} is not s({x})"));
                }
                for &y in g.incoming(g.src(x)) {
                    if self.act(q, y) != self.act(p, g.compose(x, y)) {
                        return ax(format!("action not compatible at ({p},{x},{y})"));
                    }
                }
            }
        }
        // shear map: injective on each orbit map, then count
        let mut domain = 0usize;
        for p in 0..self.total() {
            let mut seen = HashMap::new();
            for &x in g.incoming(self.anchor[p]) {
                if let Some(y) = seen.insert(self.act(p, x), x) {
                    return Err(Error::NotPrincipal(format!("p={p}: {y} and {x} give the same point")));
                }
            }
            domain += g.incoming(self.anchor[p]).len();
        }
        let codomain: usize = self.fibres.iter().map(|f| f.len() * f.len()).sum();
        if domain != codomain {
            for m in 0..self.base {
                for &p in &self.fibres[m] {
                    for &q in &self.fibres[m] {
                        if self.divide(p, q).is_none() {
                            return Err(Error::NotPrincipal(format!("no γ with {p}∘γ = {q}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn total(&self) -> usize {
        self.proj.len()
    }
    #[inline]
    pub fn base(&self) -> usize {
        self.base
    }
    #[inline]
    pub fn proj(&self, p: usize) -> usize {
        self.proj[p]
    }
    #[inline]
    pub fn anchor(&self, p: usize) -> usize {
        self.anchor[p]
    }
    pub fn projs(&self) -> &[usize] {
        &self.proj
    }
    pub fn anchors(&self) -> &[usize] {
        &self.anchor
    }

    /// `p ∘ γ`; requires `anchor(p) == t(γ)`.
    #[inline]
    pub fn act(&self, p: usize, g: usize) -> usize {
        let q = self.action[p * self.gamma.n_mor() + g];
        debug_assert!(q != UNDEF, "action undefined at ({p},{g})");
        q
    }

    #[inline]
    pub fn try_act(&self, p: usize, g: usize) -> Option<usize> {
        let q = self.action[p * self.gamma.n_mor() + g];
        (q != UNDEF).then_some(q)
    }

    pub fn fibre(&self, m: usize) -> &[usize] {
        &self.fibres[m]
    }

    /// The unique `γ` with `p ∘ γ = q`.
    pub fn divide(&self, p: usize, q: usize) -> Option<usize> {
        self.gamma.incoming(self.anchor[p]).iter().copied().find(|&x| self.act(p, x) == q)
    }

    /// All `(p, γ, p')` triples.
    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.total() {
            for &x in self.gamma.incoming(self.anchor[p]) {
                out.push((p, x, self.act(p, x)));
            }
        }
        out
    }

    /// Pullback along `f: N -> base`; element `(n, p)` is listed in order of
    /// `n`, then of `p` within its fibre. Returns the bundle and the pairs.
    pub fn pullback(&self, n_base: usize, f: &[usize]) -> (PrincipalBundle, Vec<(usize, usize)>) {
        let mut pairs = Vec::new();
        let mut index = HashMap::new();
        for (n, &m) in f.iter().enumerate().take(n_base) {
            for &p in &self.fibres[m] {
                index.insert((n, p), pairs.len());
                pairs.push((n, p));
            }
        }
        let proj = pairs.iter().map(|&(n, _)| n).collect();
        let anchor = pairs.iter().map(|&(_, p)| self.anchor[p]).collect();
        let b = PrincipalBundle::new_unchecked(self.gamma.clone(), n_base, proj, anchor, |i, g| {
            let (n, p) = pairs[i];
            index[&(n, self.act(p, g))]
        })
        .expect("pullback shapes");
        (b, pairs)
    }
}

/// Checks that `map: P -> Q` is a bundle morphism (fibre-, anchor- and
/// action-preserving); bundle morphisms are automatically bijective, which is
/// checked too.
pub fn check_morphism(p: &PrincipalBundle, q: &PrincipalBundle, map: &[usize]) -> Result<()> {
    let bad = |s: String| Err(Error::NotBundleMorphism(s));
    if map.len() != p.total() || p.base() != q.base() {
        return bad("shape mismatch".into());
    }
    let mut hit = vec![false; q.total()];
    for x in 0..p.total() {
        let y = map[x];
        check_index(y, q.total())?;
        if q.proj(y) != p.proj(x) {
            return bad(format!("{x} leaves its fibre"));
        }
        if q.anchor(y) != p.anchor(x) {
            return bad(format!("anchor not preserved at {x}"));
        }
        for &g in p.gamma.incoming(p.anchor(x)) {
            if map[p.act(x, g)] != q.act(y, g) {
                return bad(format!("not equivariant at ({x},{g})"));
            }
        }
        if hit[y] {
            return bad(format!("not injective at {x}"));
        }
        hit[y] = true;
    }
    if hit.iter().any(|h| !h) {
        return bad("not surjective".into());
    }
    Ok(())
}

/// Searches for an isomorphism `P -> Q`. Equivariance determines the map
/// from one point per fibre, so each fibre tries the candidates over that
/// point in order.
pub fn find_isomorphism(p: &PrincipalBundle, q: &PrincipalBundle) -> Option<Vec<usize>> {
    if p.base() != q.base() || p.total() != q.total() {
        return None;
    }
    let mut map = vec![UNDEF; p.total()];
    for m in 0..p.base() {
        let p0 = *p.fibre(m).first()?;
        let mut done = false;
        for &c in q.fibre(m) {
            if q.anchor(c) != p.anchor(p0) {
                continue;
            }
            let mut ok = true;
            for &g in p.gamma.incoming(p.anchor(p0)) {
                let x = p.act(p0, g);
                let y = q.act(c, g);
                if map[x] != UNDEF && map[x] != y {
                    ok = false;
                    break;
                }
                map[x] = y;
            }
            if ok && p.fibre(m).iter().all(|&x| map[x] != UNDEF) {
                done = true;
                break;
            }
            for &x in p.fibre(m) {
                map[x] = UNDEF;
            }
        }
        if !done {
            return None;
        }
    }
    check_morphism(p, q, &map).ok().map(|_| map)
}

/// Trivial bundle for `f: M -> Γ0`: elements `(m, γ)` with `t(γ) = f(m)`,
/// listed by `m` then by position of `γ` in `incoming(f(m))`.
pub struct TrivialBundle {
    pub bundle: PrincipalBundle,
    pub f: Vec<usize>,
    offsets: Vec<usize>,
}

impl TrivialBundle {
    pub fn new(gamma: Arc<FiniteGroupoid>, f: &[usize]) -> Result<Self> {
        for &x in f {
            check_index(x, gamma.n_obj())?;
        }
        let mut offsets = Vec::with_capacity(f.len());
        let mut elems = Vec::new();
        for (m, &x) in f.iter().enumerate() {
            offsets.push(elems.len());
            for &g in gamma.incoming(x) {
                elems.push((m, g));
            }
        }
        let proj = elems.iter().map(|&(m, _)| m).collect();
        let anchor = elems.iter().map(|&(_, g)| gamma.src(g)).collect();
        let gm = gamma.clone();
        let bundle = PrincipalBundle::new_unchecked(gamma, f.len(), proj, anchor, |i, h| {
            let (m, g) = elems[i];
            let c = gm.compose(g, h);
            offsets[m] + gm.in_pos(c)
        })?;
        Ok(TrivialBundle { bundle, f: f.to_vec(), offsets })
    }

    /// Index of `(m, γ)`; requires `t(γ) = f(m)`.
    #[inline]
    pub fn elem(&self, m: usize, g: usize) -> usize {
        debug_assert_eq!(self.bundle.gamma.tgt(g), self.f[m]);
        self.offsets[m] + self.bundle.gamma.in_pos(g)
    }

    /// `(m, γ)` of an element index.
    pub fn split(&self, i: usize) -> (usize, usize) {
        let m = self.bundle.proj(i);
        (m, self.bundle.gamma.incoming(self.f[m])[i - self.offsets[m]])
    }

    /// Canonical section `m -> (m, id_{f(m)})`.
    pub fn section(&self, m: usize) -> usize {
        self.elem(m, self.bundle.gamma.id(self.f[m]))
    }
}

/// Trivial bundle for `f`.
pub fn trivial_bundle(gamma: Arc<FiniteGroupoid>, f: &[usize]) -> Result<TrivialBundle> {
    TrivialBundle::new(gamma, f)
}

/// Trivialization by the least section: `f = α ∘ s` and the isomorphism
/// `triv_f -> P`, `(m, γ) -> s(m) ∘ γ`.
pub fn trivialize(p: &PrincipalBundle) -> Option<(TrivialBundle, Vec<usize>)> {
    let section: Vec<usize> = (0..p.base()).map(|m| p.fibre(m).first().copied()).collect::<Option<_>>()?;
    trivialize_with(p, &section).ok()
}

/// Trivialization along a given section.
pub fn trivialize_with(p: &PrincipalBundle, section: &[usize]) -> Result<(TrivialBundle, Vec<usize>)> {
    let f: Vec<usize> = section.iter().map(|&s| p.anchor(s)).collect();
    let triv = TrivialBundle::new(p.gamma.clone(), &f)?;
    let map: Vec<usize> = (0..triv.bundle.total())
        .map(|i| {
            let (m, g) = triv.split(i);
            p.act(section[m], g)
        })
        .collect();
    check_morphism(&triv.bundle, p, &map)?;
    Ok((triv, map))
}

/// All `g: M -> Γ1` with `s ∘ g = f1` and `t ∘ g = f2`, in lexicographic order.
pub fn hom_trivials(gamma: &FiniteGroupoid, f1: &[usize], f2: &[usize]) -> Vec<Vec<usize>> {
    let choices: Vec<Vec<usize>> = f1.iter().zip(f2).map(|(&a, &b)| gamma.hom(a, b).collect()).collect();
    let mut out = vec![Vec::new()];
    for c in choices {
        let mut next = Vec::with_capacity(out.len() * c.len());
        for partial in &out {
            for &g in &c {
                let mut v: Vec<usize> = partial.clone();
                v.push(g);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// The bundle morphism `triv_{f1} -> triv_{f2}`, `(m, γ) -> (m, g(m) ∘ γ)`.
pub fn trivial_morphism(a: &TrivialBundle, b: &TrivialBundle, g: &[usize]) -> Vec<usize> {
    let gm = &a.bundle.gamma;
    (0..a.bundle.total())
        .map(|i| {
            let (m, x) = a.split(i);
            b.elem(m, gm.compose(g[m], x))
        })
        .collect()
}

/// Tensor product of bundles over a 2-group: triples `(p1, p2, γ)` with
/// `t(γ) = α1(p1) α2(p2)` modulo the relation
/// `(p1 ∘ γ1, p2 ∘ γ2, γ) ~ (p1, p2, (γ1 · γ2) ∘ γ)`, computed by union-find.
pub struct TensorProduct {
    pub bundle: PrincipalBundle,
    pub triples: Vec<(usize, usize, usize)>,
    class: Vec<usize>,
    pair_base: HashMap<(usize, usize), usize>,
    gamma: Arc<FiniteGroupoid>,
}

impl TensorProduct {
    /// Class of `(p1, p2, γ)`.
    pub fn class(&self, p1: usize, p2: usize, g: usize) -> usize {
        self.class[self.pair_base[&(p1, p2)] + self.gamma.in_pos(g)]
    }

    /// Least triple in each class.
    pub fn representative(&self, c: usize) -> (usize, usize, usize) {
        let i = self.class.iter().position(|&k| k == c).expect("class exists");
        self.triples[i]
    }
}

pub fn tensor_product(tg: &TwoGroup, p1: &PrincipalBundle, p2: &PrincipalBundle) -> Result<TensorProduct> {
    if p1.base() != p2.base() {
        return Err(Error::Shape("tensor factors live over different bases".into()));
    }
    let gamma = tg.gpd.clone();
    let mut triples = Vec::new();
    let mut pair_base = HashMap::new();
    for m in 0..p1.base() {
        for &a in p1.fibre(m) {
            for &b in p2.fibre(m) {
                pair_base.insert((a, b), triples.len());
                for &g in gamma.incoming(tg.mul0(p1.anchor(a), p2.anchor(b))) {
                    triples.push((a, b, g));
                }
            }
        }
    }
    let idx = |a: usize, b: usize, g: usize| pair_base[&(a, b)] + gamma.in_pos(g);
    let mut uf = UnionFind::<usize>::new(triples.len());
    for &(a, b) in pair_base.keys() {
        let (aa, ab) = (p1.anchor(a), p2.anchor(b));
        // move on the first factor
        for &g1 in gamma.incoming(aa) {
            let w = tg.mul1(g1, tg.id(ab));
            for &g in gamma.incoming(tg.mul0(tg.s(g1), ab)) {
                uf.union(idx(p1.act(a, g1), b, g), idx(a, b, tg.comp(w, g)));
            }
        }
        // move on the second factor
        for &g2 in gamma.incoming(ab) {
            let w = tg.mul1(tg.id(aa), g2);
            for &g in gamma.incoming(tg.mul0(aa, tg.s(g2))) {
                uf.union(idx(a, p2.act(b, g2), g), idx(a, b, tg.comp(w, g)));
            }
        }
    }
    let (class, n) = label_classes(&mut uf, triples.len());
    let mut rep = vec![UNDEF; n];
    for (i, &c) in class.iter().enumerate() {
        if rep[c] == UNDEF {
            rep[c] = i;
        }
    }
    let proj: Vec<usize> = rep.iter().map(|&i| p1.proj(triples[i].0)).collect();
    let anchor: Vec<usize> = rep.iter().map(|&i| tg.s(triples[i].2)).collect();
    for (i, &(a, _, g)) in triples.iter().enumerate() {
        if proj[class[i]] != p1.proj(a) || anchor[class[i]] != tg.s(g) {
            return Err(Error::QuotientActionIllDefined(format!("projection or anchor differs on triple {i}")));
        }
    }
    let bundle = PrincipalBundle::new_unchecked(gamma.clone(), p1.base(), proj, anchor, |c, h| {
        let (a, b, g) = triples[rep[c]];
        class[idx(a, b, tg.comp(g, h))]
    })?;
    for (i, &(a, b, g)) in triples.iter().enumerate() {
        for &h in gamma.incoming(tg.s(g)) {
            if class[idx(a, b, tg.comp(g, h))] != bundle.act(class[i], h) {
                return Err(Error::QuotientActionIllDefined(format!("action differs on triple {i}")));
            }
        }
    }
    bundle.validate()?;
    Ok(TensorProduct { bundle, triples, class, pair_base, gamma })
}

/// Numbers union-find classes by first appearance, so each class label
/// belongs to its least element.
pub(crate) fn label_classes(uf: &mut UnionFind<usize>, n: usize) -> (Vec<usize>, usize) {
    let mut label = HashMap::new();
    let class = (0..n)
        .map(|i| {
            let r = uf.find_mut(i);
            let k = label.len();
            *label.entry(r).or_insert(k)
        })
        .collect();
    (class, label.len())
}

/// The canonical isomorphism `triv_f ⊗ triv_g -> triv_{fg}`,
/// `((m,γ1), (m,γ2), γ) -> (m, (γ1 · γ2) ∘ γ)`.
pub fn trivial_tensor_map(
    tg: &TwoGroup,
    a: &TrivialBundle,
    b: &TrivialBundle,
    ab: &TrivialBundle,
    t: &TensorProduct,
) -> Result<Vec<usize>> {
    let mut map = vec![UNDEF; t.bundle.total()];
    for &(x, y, g) in &t.triples {
        let (m, g1) = a.split(x);
        let (_, g2) = b.split(y);
        let v = ab.elem(m, tg.comp(tg.mul1(g1, g2), g));
        let c = t.class(x, y, g);
        if map[c] != UNDEF && map[c] != v {
            return Err(Error::QuotientActionIllDefined(format!("canonical map not constant on class {c}")));
        }
        map[c] = v;
    }
    check_morphism(&t.bundle, &ab.bundle, &map)?;
    Ok(map)
}

/// Dual bundle: same total space with anchor `α^-1` and action
/// `p ∘' γ = p ∘ i(γ)`. This is the extension along inversion, in the
/// form produced by [`crate::anafunctor::extend_bundle`] after relabeling.
pub fn dual_bundle(tg: &TwoGroup, p: &PrincipalBundle) -> Result<PrincipalBundle> {
    let anchor = p.anchors().iter().map(|&a| tg.inv0(a)).collect();
    PrincipalBundle::new(p.gamma.clone(), p.base(), p.projs().to_vec(), anchor, |x, g| p.act(x, tg.inv1(g)))
}

/// Death map `P ⊗ P^∨ -> triv_1` for the dual of [`dual_bundle`]:
/// `(p, q, γ) -> (m, (id_{α(p)} · i(δ)) ∘ γ)` where `q = p ∘ δ` in `P`.
pub fn death_map(
    tg: &TwoGroup,
    p: &PrincipalBundle,
    dual: &PrincipalBundle,
    t: &TensorProduct,
    unit: &TrivialBundle,
) -> Result<Vec<usize>> {
    let mut map = vec![UNDEF; t.bundle.total()];
    for &(x, y, g) in &t.triples {
        let d = p.divide(x, y).ok_or_else(|| Error::NotPrincipal("dual fibre mismatch".into()))?;
        let w = tg.mul1(tg.id(p.anchor(x)), tg.inv1(d));
        let v = unit.elem(p.proj(x), tg.comp(w, g));
        let c = t.class(x, y, g);
        if map[c] != UNDEF && map[c] != v {
            return Err(Error::QuotientActionIllDefined(format!("death map not constant on class {c}")));
        }
        map[c] = v;
    }
    check_morphism(&t.bundle, &unit.bundle, &map)?;
    let _ = dual;
    Ok(map)
}

/// A bundle in the crossed-module picture: a free, fibrewise transitive
/// right H-action and an anti-equivariant map `f` to `G`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HBundle {
    pub base: usize,
    pub proj: Vec<usize>,
    pub f: Vec<usize>,
    /// `star[p * |H| + h] = p ⋆ h`.
    pub star: Vec<usize>,
    pub h_order: usize,
}

impl HBundle {
    #[inline]
    pub fn star(&self, p: usize, h: usize) -> usize {
        self.star[p * self.h_order + h]
    }

    /// Right action, free and transitive on fibres, and `f(p ⋆ h) = t(h)^-1 f(p)`.
    pub fn validate(&self, tg: &TwoGroup) -> Result<()> {
        let cm = &tg.cm;
        let n = self.proj.len();
        for p in 0..n {
            if self.star(p, 0) != p {
                return Err(Error::InvalidAction(format!("unit moves {p}")));
            }
            let mut seen = vec![false; n];
            for h in 0..self.h_order {
                let q = self.star(p, h);
                if self.proj[q] != self.proj[p] {
                    return Err(Error::InvalidAction(format!("{p}⋆{h} leaves the fibre")));
                }
                if self.f[q] != cm.g.mul(cm.g.inv(cm.t.apply(h)), self.f[p]) {
                    return Err(Error::AntiEquivarianceFails(p, h));
                }
                if seen[q] {
                    return Err(Error::NotPrincipal(format!("H-action not free at {p}")));
                }
                seen[q] = true;
                for k in 0..self.h_order {
                    if self.star(q, k) != self.star(p, cm.h.mul(h, k)) {
                        return Err(Error::InvalidAction(format!("not a right action at ({p},{h},{k})")));
                    }
                }
            }
            let fibre = self.proj.iter().filter(|&&m| m == self.proj[p]).count();
            if fibre != self.h_order {
                return Err(Error::NotPrincipal(format!("H-action not transitive on fibre of {p}")));
            }
        }
        Ok(())
    }
}

/// `p ⋆ h := p ∘ (h, t(h)^-1 α(p))`, `f = α`.
pub fn to_h_bundle(tg: &TwoGroup, p: &PrincipalBundle) -> Result<HBundle> {
    let cm = &tg.cm;
    let nh = cm.h.order();
    let mut star = Vec::with_capacity(p.total() * nh);
    for x in 0..p.total() {
        for h in 0..nh {
            let g = cm.g.mul(cm.g.inv(cm.t.apply(h)), p.anchor(x));
            star.push(p.act(x, tg.join(h, g)));
        }
    }
    let hb = HBundle { base: p.base(), proj: p.projs().to_vec(), f: p.anchors().to_vec(), star, h_order: nh };
    hb.validate(tg)?;
    Ok(hb)
}

/// Inverse of [`to_h_bundle`]: `p ∘ (h, g) := p ⋆ h` when `t(h) g = f(p)`.
pub fn from_h_bundle(tg: &TwoGroup, hb: &HBundle) -> Result<PrincipalBundle> {
    hb.validate(tg)?;
    PrincipalBundle::new(tg.gpd.clone(), hb.base, hb.proj.clone(), hb.f.clone(), |x, g| hb.star(x, tg.split(g).0))
}

/// Which conjugation to use in the H-bundle tensor relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorTwist {
    /// `(p ⋆ h, q) ~ (p, q ⋆ ^{f(p)^-1} h)`.
    InverseAnchor,
    /// `(p ⋆ h, q) ~ (p, q ⋆ ^{f(p)} h)`.
    Anchor,
}

/// H-bundle tensor product: `P ×_M Q` modulo the twisted relation, with
/// anchor `f(p) g(q)` and action `[(p, q)] ⋆ h = [(p ⋆ h, q)]`.
/// Returns the quotient and the class of each pair.
pub fn h_tensor(tg: &TwoGroup, a: &HBundle, b: &HBundle, twist: TensorTwist) -> Result<(HBundle, HashMap<(usize, usize), usize>)> {
    let cm = &tg.cm;
    let mut pairs = Vec::new();
    let mut index = HashMap::new();
    for m in 0..a.base {
        for p in (0..a.proj.len()).filter(|&p| a.proj[p] == m) {
            for q in (0..b.proj.len()).filter(|&q| b.proj[q] == m) {
                index.insert((p, q), pairs.len());
                pairs.push((p, q));
            }
        }
    }
    let mut uf = UnionFind::<usize>::new(pairs.len());
    for &(p, q) in &pairs {
        for h in 0..a.h_order {
            let g = match twist {
                TensorTwist::InverseAnchor => cm.g.inv(a.f[p]),
                TensorTwist::Anchor => a.f[p],
            };
            let hh = cm.act.apply(g, h);
            uf.union(index[&(a.star(p, h), q)], index[&(p, b.star(q, hh))]);
        }
    }
    let (class, n) = label_classes(&mut uf, pairs.len());
    let mut rep = vec![UNDEF; n];
    for (i, &c) in class.iter().enumerate() {
        if rep[c] == UNDEF {
            rep[c] = i;
        }
    }
    let mut f = vec![UNDEF; n];
    let mut proj = vec![UNDEF; n];
    for (i, &(p, q)) in pairs.iter().enumerate() {
        let v = cm.g.mul(a.f[p], b.f[q]);
        let c = class[i];
        if f[c] != UNDEF && f[c] != v {
            return Err(Error::QuotientActionIllDefined(format!("anchor differs on class {c}")));
        }
        f[c] = v;
        proj[c] = a.proj[p];
    }
    let mut star = vec![UNDEF; n * a.h_order];
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for h in 0..a.h_order {
            let v = class[index[&(a.star(p, h), q)]];
            let slot = &mut star[class[i] * a.h_order + h];
            if *slot != UNDEF && *slot != v {
                return Err(Error::QuotientActionIllDefined(format!("H-action differs on class {}", class[i])));
            }
            *slot = v;
        }
    }
    let out = HBundle { base: a.base, proj, f, star, h_order: a.h_order };
    out.validate(tg)?;
    let classes = pairs.iter().enumerate().map(|(i, &pq)| (pq, class[i])).collect();
    Ok((out, classes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteGroup;
    use crate::groupoid::delooping;
    use crate::twogroup::{crossed_to_twogroup, CrossedModule};

    #[test]
    fn trivial_bundle_over_delooping() {
        let g = Arc::new(delooping(&FiniteGroup::cyclic(2)));
        let t = trivial_bundle(g, &[0, 0]).unwrap();
        assert_eq!(t.bundle.total(), 4);
        t.bundle.validate().unwrap();
        let empty = trivial_bundle(Arc::new(delooping(&FiniteGroup::cyclic(2))), &[]).unwrap();
        empty.bundle.validate().unwrap();
    }

    #[test]
    fn trivialize_round_trip() {
        let tg = crossed_to_twogroup(&CrossedModule::automorphism(&FiniteGroup::cyclic(3), 24).unwrap());
        let t = trivial_bundle(tg.gpd.clone(), &[1, 0, 1]).unwrap();
        let (t2, map) = trivialize(&t.bundle).unwrap();
        check_morphism(&t2.bundle, &t.bundle, &map).unwrap();
        assert_eq!(t2.f, vec![1, 0, 1]);
    }

    #[test]
    fn hom_trivials_count() {
        let a = FiniteGroup::cyclic(3);
        let g = delooping(&a);
        assert_eq!(hom_trivials(&g, &[0, 0], &[0, 0]).len(), 9);
    }

    #[test]
    fn mutated_action_is_rejected() {
        let tg = crossed_to_twogroup(&CrossedModule::delooping(&FiniteGroup::cyclic(2)).unwrap());
        let t = trivial_bundle(tg.gpd.clone(), &[0]).unwrap();
        let mut triples = t.bundle.triples();
        // swap one image
        let k = triples.iter().position(|&(p, g, _)| p == 0 && g == 1).unwrap();
        triples[k].2 = 0;
        let r = PrincipalBundle::from_triples(tg.gpd.clone(), 1, vec![0, 0], vec![0, 0], &triples);
        assert!(r.is_err());
    }
}
