//! Anafunctors between finite groupoids, their composition, extension of
//! bundles, weak-equivalence testing and 2-group actions on anafunctors.

use std::collections::HashMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::bundle::{label_classes, PrincipalBundle};
use crate::error::{check_index, Error, Result};
use crate::groupoid::{discrete_groupoid, FiniteGroupoid, GroupoidFunctor};
use crate::twogroup::TwoGroup;

const UNDEF: usize = usize::MAX;

/// An anafunctor `X -> Y`: total space with anchors `αl: F -> X0`,
/// `αr: F -> Y0`, a left X-action and a right Y-action.
#[derive(Debug, Clone)]
pub struct Anafunctor {
    pub x: Arc<FiniteGroupoid>,
    pub y: Arc<FiniteGroupoid>,
    al: Vec<usize>,
    ar: Vec<usize>,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Anafunctor {
    /// Builds from action functions, called only where the actions are
    /// defined, and validates.
    pub fn new(
        x: Arc<FiniteGroupoid>,
        y: Arc<FiniteGroupoid>,
        al: Vec<usize>,
        ar: Vec<usize>,
        left: impl FnMut(usize, usize) -> usize,
        right: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        let a = Self::new_unchecked(x, y, al, ar, left, right)?;
        a.validate()?;
        Ok(a)
    }

    pub fn new_unchecked(
        x: Arc<FiniteGroupoid>,
        y: Arc<FiniteGroupoid>,
        al: Vec<usize>,
        ar: Vec<usize>,
        mut left: impl FnMut(usize, usize) -> usize,
        mut right: impl FnMut(usize, usize) -> usize,
    ) -> Result<Self> {
        let n = al.len();
        if ar.len() != n {
            return Err(Error::Shape("anchor lengths differ".into()));
        }
        for i in 0..n {
            check_index(al[i], x.n_obj())?;
            check_index(ar[i], y.n_obj())?;
        }
        let (nx, ny) = (x.n_mor(), y.n_mor());
        let mut l = vec![UNDEF; n * nx];
        let mut r = vec![UNDEF; n * ny];
        for f in 0..n {
            for &c in x.out_of(al[f]) {
                let v = left(f, c);
                check_index(v, n)?;
                l[f * nx + c] = v;
            }
            for &e in y.incoming(ar[f]) {
                let v = right(f, e);
                check_index(v, n)?;
                r[f * ny + e] = v;
            }
        }
        Ok(Anafunctor { x, y, al, ar, left: l, right: r })
    }

    #[inline]
    pub fn total(&self) -> usize {
        self.al.len()
    }
    #[inline]
    pub fn al(&self, f: usize) -> usize {
        self.al[f]
    }
    #[inline]
    pub fn ar(&self, f: usize) -> usize {
        self.ar[f]
    }
    /// `χ ∘ f`; requires `s(χ) = αl(f)`.
    #[inline]
    pub fn left(&self, chi: usize, f: usize) -> usize {
        let v = self.left[f * self.x.n_mor() + chi];
        debug_assert!(v != UNDEF);
        v
    }
    /// `f ∘ η`; requires `t(η) = αr(f)`.
    #[inline]
    pub fn right(&self, f: usize, eta: usize) -> usize {
        let v = self.right[f * self.y.n_mor() + eta];
        debug_assert!(v != UNDEF);
        v
    }

    /// Both actions are actions, they commute and respect the other anchor,
    /// and `αl` with the right action is a principal Y-bundle over X0.
    pub fn validate(&self) -> Result<()> {
        let (x, y) = (&*self.x, &*self.y);
        let bad = |s: String| Err(Error::AnafunctorAxiom(s));
        for f in 0..self.total() {
            if self.left(x.id(self.al[f]), f) != f || self.right(f, y.id(self.ar[f])) != f {
                return bad(format!("identity acts nontrivially on {f}"));
            }
            for &c in x.out_of(self.al[f]) {
                let g = self.left(c, f);
                if self.al[g] != x.tgt(c) || self.ar[g] != self.ar[f] {
                    return bad(format!("left action breaks anchors at ({c},{f})"));
                }
                for &c2 in x.out_of(x.tgt(c)) {
                    if self.left(c2, g) != self.left(x.compose(c2, c), f) {
                        return bad(format!("left action not compatible at ({c2},{c},{f})"));
                    }
                }
                for &e in y.incoming(self.ar[f]) {
                    if self.right(g, e) != self.left(c, self.right(f, e)) {
                        return bad(format!("actions do not commute at ({c},{f},{e})"));
                    }
                }
            }
            for &e in y.incoming(self.ar[f]) {
                let g = self.right(f, e);
                if self.ar[g] != y.src(e) || self.al[g] != self.al[f] {
                    return bad(format!("right action breaks anchors at ({f},{e})"));
                }
                for &e2 in y.incoming(y.src(e)) {
                    if self.right(g, e2) != self.right(f, y.compose(e, e2)) {
                        return bad(format!("right action not compatible at ({f},{e},{e2})"));
                    }
                }
            }
        }
        self.to_bundle()?.validate()
    }

    /// The right leg as a principal Y-bundle over X0.
    pub fn to_bundle(&self) -> Result<PrincipalBundle> {
        PrincipalBundle::new_unchecked(self.y.clone(), self.x.n_obj(), self.al.clone(), self.ar.clone(), |f, e| self.right(f, e))
    }

    /// A bundle over M as an anafunctor from the discrete groupoid on M.
    pub fn from_bundle(p: &PrincipalBundle) -> Result<Self> {
        let m = Arc::new(discrete_groupoid(p.base()));
        Self::new(m, p.gamma.clone(), p.projs().to_vec(), p.anchors().to_vec(), |f, _| f, |f, e| p.act(f, e))
    }

    /// `F = X0 ×_{φ,t} Y1`, element `(x, η)` at `offset[x] + in_pos(η)`.
    pub fn from_functor(x: Arc<FiniteGroupoid>, y: Arc<FiniteGroupoid>, phi: &GroupoidFunctor) -> Result<Self> {
        phi.validate(&x, &y)?;
        let mut offset = Vec::with_capacity(x.n_obj());
        let mut elems = Vec::new();
        for o in 0..x.n_obj() {
            offset.push(elems.len());
            for &e in y.incoming(phi.obj_map[o]) {
                elems.push((o, e));
            }
        }
        let al = elems.iter().map(|&(o, _)| o).collect();
        let ar = elems.iter().map(|&(_, e)| y.src(e)).collect();
        let (xl, yl) = (x.clone(), y.clone());
        let idx = |o: usize, e: usize| offset[o] + yl.in_pos(e);
        Self::new(
            x,
            y,
            al,
            ar,
            |f, c| {
                let (_, e) = elems[f];
                idx(xl.tgt(c), yl.compose(phi.mor_map[c], e))
            },
            |f, e2| {
                let (o, e) = elems[f];
                idx(o, yl.compose(e, e2))
            },
        )
    }

    /// Identity anafunctor, total space `X1` in the form of
    /// [`from_functor`](Self::from_functor) of the identity.
    pub fn identity(x: Arc<FiniteGroupoid>) -> Result<Self> {
        let id = GroupoidFunctor::identity(&x);
        Self::from_functor(x.clone(), x, &id)
    }

    /// Left leg is principal along `αr` and `αr` is surjective.
    pub fn is_weak_equivalence(&self) -> bool {
        let (x, y) = (&*self.x, &*self.y);
        let mut by_ar: Vec<Vec<usize>> = vec![Vec::new(); y.n_obj()];
        for f in 0..self.total() {
            by_ar[self.ar[f]].push(f);
        }
        if by_ar.iter().any(|v| v.is_empty()) {
            return false;
        }
        for f in 0..self.total() {
            let mut seen = vec![false; self.total()];
            for &c in x.out_of(self.al[f]) {
                let g = self.left(c, f);
                if seen[g] {
                    return false;
                }
                seen[g] = true;
            }
            if by_ar[self.ar[f]].iter().any(|&g| !seen[g]) {
                return false;
            }
        }
        true
    }
}

/// `G ∘ F` with its pair data: `(f, g)` pairs, their classes, and an index.
pub struct Composite {
    pub ana: Anafunctor,
    pub pairs: Vec<(usize, usize)>,
    pub class: Vec<usize>,
    index: HashMap<(usize, usize), usize>,
}

impl Composite {
    pub fn class_of(&self, f: usize, g: usize) -> usize {
        self.class[self.index[&(f, g)]]
    }
}

/// `(F ×_{Y0} G) / ~` with `(f ∘ η, g) ~ (f, η ∘ g)`.
pub fn compose(f: &Anafunctor, g: &Anafunctor) -> Result<Composite> {
    if f.y.as_ref() != g.x.as_ref() {
        return Err(Error::Shape("middle groupoids differ".into()));
    }
    let y = &*f.y;
    let mut by_al: Vec<Vec<usize>> = vec![Vec::new(); y.n_obj()];
    for b in 0..g.total() {
        by_al[g.al(b)].push(b);
    }
    let mut pairs = Vec::new();
    let mut index = HashMap::new();
    for a in 0..f.total() {
        for &b in &by_al[f.ar(a)] {
            index.insert((a, b), pairs.len());
            pairs.push((a, b));
        }
    }
    let mut uf = UnionFind::<usize>::new(pairs.len());
    for a in 0..f.total() {
        for &e in y.incoming(f.ar(a)) {
            // (a ∘ e, b) ~ (a, e ∘ b) for b with αl(b) = s(e)
            let a_e = f.right(a, e);
            for &b in &by_al[y.src(e)] {
                uf.union(index[&(a_e, b)], index[&(a, g.left(e, b))]);
            }
        }
    }
    let (class, n) = label_classes(&mut uf, pairs.len());
    let mut rep = vec![UNDEF; n];
    for (i, &c) in class.iter().enumerate() {
        if rep[c] == UNDEF {
            rep[c] = i;
        }
    }
    let mut al = vec![UNDEF; n];
    let mut ar = vec![UNDEF; n];
    for (i, &(a, b)) in pairs.iter().enumerate() {
        let c = class[i];
        if (al[c] != UNDEF && al[c] != f.al(a)) || (ar[c] != UNDEF && ar[c] != g.ar(b)) {
            return Err(Error::QuotientActionIllDefined(format!("anchors differ on class {c}")));
        }
        al[c] = f.al(a);
        ar[c] = g.ar(b);
    }
    let ana = Anafunctor::new_unchecked(
        f.x.clone(),
        g.y.clone(),
        al,
        ar,
        |c, chi| {
            let (a, b) = pairs[rep[c]];
            class[index[&(f.left(chi, a), b)]]
        },
        |c, z| {
            let (a, b) = pairs[rep[c]];
            class[index[&(a, g.right(b, z))]]
        },
    )?;
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for &chi in f.x.out_of(f.al(a)) {
            if class[index[&(f.left(chi, a), b)]] != ana.left(chi, class[i]) {
                return Err(Error::QuotientActionIllDefined(format!("left action differs on pair {i}")));
            }
        }
        for &z in g.y.incoming(g.ar(b)) {
            if class[index[&(a, g.right(b, z))]] != ana.right(class[i], z) {
                return Err(Error::QuotientActionIllDefined(format!("right action differs on pair {i}")));
            }
        }
    }
    ana.validate()?;
    Ok(Composite { ana, pairs, class, index })
}

/// Extension of a Γ-bundle along `Λ: Γ -> Ω`:
/// `(P ×_{α,αl} Λ) / ~` with `(p, γ ∘ λ) ~ (p ∘ γ, λ)`.
/// Returns the bundle and the class of each `(p, λ)` pair.
pub fn extend_bundle(p: &PrincipalBundle, lam: &Anafunctor) -> Result<(PrincipalBundle, HashMap<(usize, usize), usize>)> {
    if p.gamma.as_ref() != lam.x.as_ref() {
        return Err(Error::Shape("bundle groupoid differs from anafunctor source".into()));
    }
    let gam = &*lam.x;
    let mut by_al: Vec<Vec<usize>> = vec![Vec::new(); gam.n_obj()];
    for l in 0..lam.total() {
        by_al[lam.al(l)].push(l);
    }
    let mut pairs = Vec::new();
    let mut index = HashMap::new();
    for x in 0..p.total() {
        for &l in &by_al[p.anchor(x)] {
            index.insert((x, l), pairs.len());
            pairs.push((x, l));
        }
    }
    let mut uf = UnionFind::<usize>::new(pairs.len());
    for x in 0..p.total() {
        for &g in gam.incoming(p.anchor(x)) {
            let xg = p.act(x, g);
            for &l in &by_al[gam.src(g)] {
                uf.union(index[&(x, lam.left(g, l))], index[&(xg, l)]);
            }
        }
    }
    let (class, n) = label_classes(&mut uf, pairs.len());
    let mut rep = vec![UNDEF; n];
    for (i, &c) in class.iter().enumerate() {
        if rep[c] == UNDEF {
            rep[c] = i;
        }
    }
    let mut proj = vec![UNDEF; n];
    let mut anchor = vec![UNDEF; n];
    for (i, &(x, l)) in pairs.iter().enumerate() {
        let c = class[i];
        if (proj[c] != UNDEF && proj[c] != p.proj(x)) || (anchor[c] != UNDEF && anchor[c] != lam.ar(l)) {
            return Err(Error::QuotientActionIllDefined(format!("projection or anchor differs on class {c}")));
        }
        proj[c] = p.proj(x);
        anchor[c] = lam.ar(l);
    }
    let out = PrincipalBundle::new_unchecked(lam.y.clone(), p.base(), proj, anchor, |c, w| {
        let (x, l) = pairs[rep[c]];
        class[index[&(x, lam.right(l, w))]]
    })?;
    for (i, &(x, l)) in pairs.iter().enumerate() {
        for &w in lam.y.incoming(lam.ar(l)) {
            if class[index[&(x, lam.right(l, w))]] != out.act(class[i], w) {
                return Err(Error::QuotientActionIllDefined(format!("action differs on pair {i}")));
            }
        }
    }
    out.validate()?;
    let map = pairs.iter().enumerate().map(|(i, &pl)| (pl, class[i])).collect();
    Ok((out, map))
}

/// Checks that `map: F -> G` is a transformation: anchor-preserving and
/// equivariant for both actions.
pub fn check_transformation(f: &Anafunctor, g: &Anafunctor, map: &[usize]) -> Result<()> {
    let bad = |s: String| Err(Error::MorphismIncompatible(s));
    if map.len() != f.total() {
        return bad("wrong length".into());
    }
    for a in 0..f.total() {
        let b = map[a];
        check_index(b, g.total())?;
        if g.al(b) != f.al(a) || g.ar(b) != f.ar(a) {
            return bad(format!("anchors differ at {a}"));
        }
        for &c in f.x.out_of(f.al(a)) {
            if map[f.left(c, a)] != g.left(c, b) {
                return bad(format!("left action not preserved at ({c},{a})"));
            }
        }
        for &e in f.y.incoming(f.ar(a)) {
            if map[f.right(a, e)] != g.right(b, e) {
                return bad(format!("right action not preserved at ({a},{e})"));
            }
        }
    }
    Ok(())
}

/// Searches for a transformation `F => G`. Orbits of the combined action
/// are handled one at a time; within an orbit the image of one point
/// determines everything.
pub fn find_transformation(f: &Anafunctor, g: &Anafunctor) -> Option<Vec<usize>> {
    if f.x != g.x || f.y != g.y {
        return None;
    }
    let mut map = vec![UNDEF; f.total()];
    for seed in 0..f.total() {
        if map[seed] != UNDEF {
            continue;
        }
        let mut found = false;
        for cand in 0..g.total() {
            if g.al(cand) != f.al(seed) || g.ar(cand) != f.ar(seed) {
                continue;
            }
            let mut assigned = Vec::new();
            if propagate(f, g, &mut map, seed, cand, &mut assigned) {
                found = true;
                break;
            }
            for a in assigned {
                map[a] = UNDEF;
            }
        }
        if !found {
            return None;
        }
    }
    check_transformation(f, g, &map).ok().map(|_| map)
}

fn propagate(f: &Anafunctor, g: &Anafunctor, map: &mut [usize], seed: usize, cand: usize, assigned: &mut Vec<usize>) -> bool {
    map[seed] = cand;
    assigned.push(seed);
    let mut stack = vec![seed];
    while let Some(a) = stack.pop() {
        let b = map[a];
        let mut moves: Vec<(usize, usize)> = Vec::new();
        for &c in f.x.out_of(f.al(a)) {
            moves.push((f.left(c, a), g.left(c, b)));
        }
        for &e in f.y.incoming(f.ar(a)) {
            moves.push((f.right(a, e), g.right(b, e)));
        }
        for (a2, b2) in moves {
            if map[a2] == UNDEF {
                map[a2] = b2;
                assigned.push(a2);
                stack.push(a2);
            } else if map[a2] != b2 {
                return false;
            }
        }
    }
    true
}

/// A groupoid with a strict right action of a 2-group, stored as tables
/// `r0[x * |Γ0| + g]` and `r1[χ * |Γ1| + γ]`.
#[derive(Debug, Clone)]
pub struct GammaGroupoid {
    pub gpd: Arc<FiniteGroupoid>,
    pub r0: Vec<usize>,
    pub r1: Vec<usize>,
    n0: usize,
    n1: usize,
}

impl GammaGroupoid {
    pub fn new(tg: &TwoGroup, gpd: Arc<FiniteGroupoid>, r0: Vec<usize>, r1: Vec<usize>) -> Result<Self> {
        let g = Self::new_unchecked(tg, gpd, r0, r1)?;
        g.validate(tg)?;
        Ok(g)
    }

    pub fn new_unchecked(tg: &TwoGroup, gpd: Arc<FiniteGroupoid>, r0: Vec<usize>, r1: Vec<usize>) -> Result<Self> {
        let (n0, n1) = (tg.n0(), tg.n1());
        if r0.len() != gpd.n_obj() * n0 || r1.len() != gpd.n_mor() * n1 {
            return Err(Error::Shape("action table has wrong size".into()));
        }
        for &v in &r0 {
            check_index(v, gpd.n_obj())?;
        }
        for &v in &r1 {
            check_index(v, gpd.n_mor())?;
        }
        Ok(GammaGroupoid { gpd, r0, r1, n0, n1 })
    }

    /// The 2-group acting on itself by right multiplication.
    pub fn regular(tg: &TwoGroup) -> Self {
        let (n0, n1) = (tg.n0(), tg.n1());
        let r0 = (0..n0 * n0).map(|i| tg.mul0(i / n0, i % n0)).collect();
        let r1 = (0..n1 * n1).map(|i| tg.mul1(i / n1, i % n1)).collect();
        GammaGroupoid { gpd: tg.gpd.clone(), r0, r1, n0, n1 }
    }

    #[inline]
    pub fn act0(&self, x: usize, g: usize) -> usize {
        self.r0[x * self.n0 + g]
    }
    #[inline]
    pub fn act1(&self, c: usize, g: usize) -> usize {
        self.r1[c * self.n1 + g]
    }

    /// `R` is a functor `X × Γ -> X` and a strict right action.
    pub fn validate(&self, tg: &TwoGroup) -> Result<()> {
        let x = &*self.gpd;
        let gm = &*tg.gpd;
        let bad = |s: String| Err(Error::ActionNotStrict(s));
        for c in 0..x.n_mor() {
            for g in 0..self.n1 {
                let r = self.act1(c, g);
                if x.src(r) != self.act0(x.src(c), tg.s(g)) || x.tgt(r) != self.act0(x.tgt(c), tg.t(g)) {
                    return bad(format!("R({c},{g}) has wrong endpoints"));
                }
            }
            if self.act1(c, 0) != c {
                return bad(format!("R({c}, id_1) != {c}"));
            }
        }
        for o in 0..x.n_obj() {
            if self.act0(o, 0) != o {
                return bad(format!("R({o}, 1) != {o}"));
            }
            for g in 0..self.n0 {
                if self.act1(x.id(o), tg.id(g)) != x.id(self.act0(o, g)) {
                    return bad(format!("R does not preserve identities at ({o},{g})"));
                }
                for h in 0..self.n0 {
                    if self.act0(self.act0(o, g), h) != self.act0(o, tg.mul0(g, h)) {
                        return bad(format!("R0 not an action at ({o},{g},{h})"));
                    }
                }
            }
        }
        for c in 0..x.n_mor() {
            for g in 0..self.n1 {
                for h in 0..self.n1 {
                    if self.act1(self.act1(c, g), h) != self.act1(c, tg.mul1(g, h)) {
                        return bad(format!("R1 not an action at ({c},{g},{h})"));
                    }
                }
            }
        }
        for c1 in 0..x.n_mor() {
            for &c2 in x.out_of(x.tgt(c1)) {
                let c = x.compose(c2, c1);
                for g1 in 0..self.n1 {
                    for &g2 in gm.out_of(tg.t(g1)) {
                        let lhs = self.act1(c, tg.comp(g2, g1));
                        let rhs = x.compose(self.act1(c2, g2), self.act1(c1, g1));
                        if lhs != rhs {
                            return bad(format!("R not functorial at ({c2},{c1},{g2},{g1})"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A Γ1-action `ρ[f * |Γ1| + γ]` on the total space of an anafunctor
/// between Γ-groupoids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaAction {
    pub rho: Vec<usize>,
}

impl GammaAction {
    #[inline]
    pub fn act(&self, n1: usize, f: usize, g: usize) -> usize {
        self.rho[f * n1 + g]
    }

    /// Group action, anchor conditions, and compatibility with both
    /// groupoid actions. Compatibility is checked as its left and right
    /// halves, which together with the group action give the full identity.
    pub fn validate(&self, tg: &TwoGroup, ana: &Anafunctor, rx: &GammaGroupoid, ry: &GammaGroupoid) -> Result<()> {
        let n1 = tg.n1();
        let gm = &*tg.gpd;
        let bad = |s: String| Err(Error::ActionAxiomFails(s));
        if self.rho.len() != ana.total() * n1 {
            return Err(Error::Shape("action table has wrong size".into()));
        }
        for &v in &self.rho {
            check_index(v, ana.total())?;
        }
        for f in 0..ana.total() {
            if self.act(n1, f, 0) != f {
                return bad(format!("unit moves {f}"));
            }
            for g in 0..n1 {
                let fg = self.act(n1, f, g);
                for h in 0..n1 {
                    if self.act(n1, fg, h) != self.act(n1, f, tg.mul1(g, h)) {
                        return bad(format!("not an action at ({f},{g},{h})"));
                    }
                }
                if ana.al(fg) != rx.act0(ana.al(f), tg.t(g)) {
                    return bad(format!("left anchor not preserved at ({f},{g})"));
                }
                if ana.ar(fg) != ry.act0(ana.ar(f), tg.s(g)) {
                    return bad(format!("right anchor not preserved at ({f},{g})"));
                }
                for &c in ana.x.out_of(ana.al(f)) {
                    let cf = ana.left(c, f);
                    for &gl in gm.out_of(tg.t(g)) {
                        let lhs = self.act(n1, cf, tg.comp(gl, g));
                        let rhs = ana.left(rx.act1(c, gl), fg);
                        if lhs != rhs {
                            return bad(format!("left compatibility fails at ({c},{f},{gl},{g})"));
                        }
                    }
                }
                for &e in ana.y.incoming(ana.ar(f)) {
                    let fe = ana.right(f, e);
                    for &gr in gm.incoming(tg.s(g)) {
                        let lhs = self.act(n1, fe, tg.comp(g, gr));
                        let rhs = ana.right(fg, ry.act1(e, gr));
                        if lhs != rhs {
                            return bad(format!("right compatibility fails at ({f},{e},{g},{gr})"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `R1` on the identity anafunctor, whose total space is `X1` as
    /// `(x, η)` with `t(η) = x`.
    pub fn identity(tg: &TwoGroup, rx: &GammaGroupoid, id: &Anafunctor) -> Self {
        let n1 = tg.n1();
        let x = &*rx.gpd;
        // element of the identity anafunctor with left anchor t(η) and morphism η
        let mut of_mor = vec![UNDEF; x.n_mor()];
        let mut k = 0;
        for o in 0..x.n_obj() {
            for &e in x.incoming(o) {
                of_mor[e] = k;
                k += 1;
            }
        }
        let mut mor_of = vec![UNDEF; k];
        for (e, &i) in of_mor.iter().enumerate() {
            mor_of[i] = e;
        }
        debug_assert_eq!(k, id.total());
        let rho = (0..k * n1).map(|i| of_mor[rx.act1(mor_of[i / n1], i % n1)]).collect();
        GammaAction { rho }
    }

    /// Action on a composite, `((f, g), γ) -> (ρ(f, γ), τ(g, id_{s(γ)}))`,
    /// checked to be constant on classes.
    pub fn compose(tg: &TwoGroup, comp: &Composite, rho: &GammaAction, tau: &GammaAction) -> Result<GammaAction> {
        let n1 = tg.n1();
        let n = comp.ana.total();
        let mut out = vec![UNDEF; n * n1];
        for (i, &(a, b)) in comp.pairs.iter().enumerate() {
            for g in 0..n1 {
                let v = comp.class_of(rho.act(n1, a, g), tau.act(n1, b, tg.id(tg.s(g))));
                let slot = &mut out[comp.class[i] * n1 + g];
                if *slot != UNDEF && *slot != v {
                    return Err(Error::QuotientActionIllDefined(format!("composite action differs on pair {i}")));
                }
                *slot = v;
            }
        }
        Ok(GammaAction { rho: out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteGroup;
    use crate::groupoid::delooping;

    #[test]
    fn identity_anafunctor_is_weak_equivalence() {
        let g = Arc::new(delooping(&FiniteGroup::symmetric(3)));
        let id = Anafunctor::identity(g).unwrap();
        assert_eq!(id.total(), 6);
        assert!(id.is_weak_equivalence());
    }

    #[test]
    fn delooping_to_terminal_is_not_weak_equivalence() {
        let x = Arc::new(delooping(&FiniteGroup::cyclic(2)));
        let y = Arc::new(discrete_groupoid(1));
        let phi = GroupoidFunctor { obj_map: vec![0], mor_map: vec![0, 0] };
        let a = Anafunctor::from_functor(x, y, &phi).unwrap();
        assert!(!a.is_weak_equivalence());
    }

    #[test]
    fn compose_with_identity() {
        let x = Arc::new(delooping(&FiniteGroup::cyclic(2)));
        let y = Arc::new(delooping(&FiniteGroup::cyclic(4)));
        let phi = GroupoidFunctor { obj_map: vec![0], mor_map: vec![0, 2] };
        let a = Anafunctor::from_functor(x.clone(), y.clone(), &phi).unwrap();
        assert_eq!(a.total(), 4);
        let c = compose(&a, &Anafunctor::identity(y).unwrap()).unwrap();
        assert!(find_transformation(&c.ana, &a).is_some());
        let c2 = compose(&Anafunctor::identity(x).unwrap(), &a).unwrap();
        assert!(find_transformation(&c2.ana, &a).is_some());
    }
}
