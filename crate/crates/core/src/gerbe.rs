//! Bundle gerbes over finite bases and their morphisms in fibre-product
//! form.
//!
//! A gerbe has a surjection `π: Y -> M`, a principal Γ-bundle `P` over the
//! pairs `Y^[2]`, and a product `μ(a, b)` for `a` over `(y2, y3)` and `b`
//! over `(y1, y2)`, landing over `(y1, y3)`. The product is stored on pairs
//! of elements; on a tensor triple `[a, b, γ]` it is `μ(a, b) ∘ γ`.

use std::collections::HashMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::bundle::{check_morphism, tensor_product, PrincipalBundle, TrivialBundle};
use crate::cohomology::{validate_h1, ConcreteCover, H1Cocycle};
use crate::error::{check_index, Error, Result};
use crate::groupoid::FiniteGroupoid;
use crate::twogroup::TwoGroup;

const UNDEF: usize = usize::MAX;

/// `x ∘ (γ · id_{r⁻¹})`: folds a tensor coefficient `γ` with
/// `t(γ) = α(x) r` into the first factor.
pub(crate) fn absorb(tg: &TwoGroup, a: &PrincipalBundle, x: usize, r: usize, g: usize) -> usize {
    a.act(x, tg.mul1(g, tg.id(tg.inv0(r))))
}

/// New coefficient after a factor `y = y0 ∘ d` is rewritten as `y0`; `l` and
/// `r` are the anchor products to its left and right.
pub(crate) fn shift(tg: &TwoGroup, l: usize, d: usize, r: usize, g: usize) -> usize {
    tg.comp(tg.mul1_3(tg.id(l), d, tg.id(r)), g)
}

/// Normal form of `[x, y, γ]` in `A ⊗ B` with second factor `y0`.
pub(crate) fn move_second(tg: &TwoGroup, a: &PrincipalBundle, x: usize, b: &PrincipalBundle, y: usize, y0: usize, g: usize) -> usize {
    let d = b.divide(y0, y).expect("second factors share a fibre");
    let g2 = shift(tg, a.anchor(x), d, 0, g);
    absorb(tg, a, x, b.anchor(y0), g2)
}

/// Pairs `(y, y')` with `π(y) == π(y')`, in lexicographic order.
pub fn fibre_pairs(pi: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (y, &m) in pi.iter().enumerate() {
        for (y2, &m2) in pi.iter().enumerate() {
            if m == m2 {
                out.push((y, y2));
            }
        }
    }
    out
}

fn over(base: usize, pi: &[usize]) -> Vec<Vec<usize>> {
    let mut v = vec![Vec::new(); base];
    for (y, &m) in pi.iter().enumerate() {
        v[m].push(y);
    }
    v
}

/// A bundle gerbe with finite `Y` and `M`.
#[derive(Debug, Clone)]
pub struct DiscreteBundleGerbe {
    pub tg: Arc<TwoGroup>,
    base: usize,
    pi: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    /// Index of `(y1, y2)` in `pairs` at `y1 · |Y| + y2`, or `UNDEF`.
    pair_index: Vec<usize>,
    ys_over: Vec<Vec<usize>>,
    p: PrincipalBundle,
    /// Elements of `P` whose second endpoint is `y`.
    ending_at: Vec<Vec<usize>>,
    /// Elements of `P` whose first endpoint is `y`.
    starting_at: Vec<Vec<usize>>,
    /// Position of each element in its `starting_at` list.
    start_pos: Vec<usize>,
    /// `μ(a, b)` sits at `mu_off[b] + start_pos[a]`.
    mu_off: Vec<usize>,
    mu: Vec<usize>,
    unit: Vec<usize>,
    inv: Vec<usize>,
}

impl PartialEq for DiscreteBundleGerbe {
    fn eq(&self, o: &Self) -> bool {
        self.tg.gpd == o.tg.gpd && self.base == o.base && self.pi == o.pi && self.p == o.p && self.mu == o.mu
    }
}

impl DiscreteBundleGerbe {
    /// Builds from a product function, called on every composable pair, and
    /// validates. `p` must live over [`fibre_pairs`]`(pi)`.
    pub fn new(
        tg: Arc<TwoGroup>,
        base: usize,
        pi: Vec<usize>,
        p: PrincipalBundle,
        mut mu: impl FnMut(usize, usize) -> Result<usize>,
    ) -> Result<Self> {
        let mut g = Self::shell(tg, base, pi, p)?;
        for a in 0..g.p.total() {
            let y2 = g.ends(a).0;
            for i in 0..g.ending_at[y2].len() {
                let b = g.ending_at[y2][i];
                let c = mu(a, b)?;
                check_index(c, g.p.total())?;
                let k = g.mu_slot(a, b);
                g.mu[k] = c;
            }
        }
        g.finish()
    }

    /// Builds from an explicit table of `((a, b), μ(a, b))`.
    pub fn from_table(
        tg: Arc<TwoGroup>,
        base: usize,
        pi: Vec<usize>,
        p: PrincipalBundle,
        table: &[((usize, usize), usize)],
    ) -> Result<Self> {
        let mut g = Self::shell(tg, base, pi, p)?;
        for &((a, b), c) in table {
            check_index(a, g.p.total())?;
            check_index(b, g.p.total())?;
            check_index(c, g.p.total())?;
            if g.ends(a).0 != g.ends(b).1 {
                return Err(Error::ProductIllDefined(format!("μ({a},{b}) given on a non-composable pair")));
            }
            let k = g.mu_slot(a, b);
            if g.mu[k] != UNDEF && g.mu[k] != c {
                return Err(Error::ProductIllDefined(format!("μ({a},{b}) given twice")));
            }
            g.mu[k] = c;
        }
        g.finish()
    }

    fn shell(tg: Arc<TwoGroup>, base: usize, pi: Vec<usize>, p: PrincipalBundle) -> Result<Self> {
        for &m in &pi {
            check_index(m, base)?;
        }
        let ys_over = over(base, &pi);
        if let Some(m) = ys_over.iter().position(|v| v.is_empty()) {
            return Err(Error::NotACover(m));
        }
        let pairs = fibre_pairs(&pi);
        if p.base() != pairs.len() {
            return Err(Error::Shape(format!("bundle base {} but Y^[2] has {} points", p.base(), pairs.len())));
        }
        if p.gamma.as_ref() != tg.gpd.as_ref() {
            return Err(Error::Shape("bundle is not over the 2-group's groupoid".into()));
        }
        let ny = pi.len();
        let mut pair_index = vec![UNDEF; ny * ny];
        for (i, &(a, b)) in pairs.iter().enumerate() {
            pair_index[a * ny + b] = i;
        }
        let mut ending_at = vec![Vec::new(); pi.len()];
        let mut starting_at = vec![Vec::new(); pi.len()];
        let mut start_pos = Vec::with_capacity(p.total());
        for e in 0..p.total() {
            let (y1, y2) = pairs[p.proj(e)];
            ending_at[y2].push(e);
            start_pos.push(starting_at[y1].len());
            starting_at[y1].push(e);
        }
        let mut mu_off = Vec::with_capacity(p.total());
        let mut n = 0;
        for e in 0..p.total() {
            mu_off.push(n);
            n += starting_at[pairs[p.proj(e)].1].len();
        }
        Ok(DiscreteBundleGerbe {
            tg,
            base,
            pi,
            pairs,
            pair_index,
            ys_over,
            p,
            ending_at,
            starting_at,
            start_pos,
            mu_off,
            mu: vec![UNDEF; n],
            unit: Vec::new(),
            inv: Vec::new(),
        })
    }

    fn finish(mut self) -> Result<Self> {
        let (unit, inv) = self.validate()?;
        self.unit = unit;
        self.inv = inv;
        Ok(self)
    }

    pub fn base(&self) -> usize {
        self.base
    }
    pub fn y_count(&self) -> usize {
        self.pi.len()
    }
    pub fn pi(&self) -> &[usize] {
        &self.pi
    }
    pub fn ys_over(&self, m: usize) -> &[usize] {
        &self.ys_over[m]
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn pair(&self, y1: usize, y2: usize) -> Option<usize> {
        let ny = self.pi.len();
        (y1 < ny && y2 < ny).then(|| self.pair_index[y1 * ny + y2]).filter(|&i| i != UNDEF)
    }
    pub fn bundle(&self) -> &PrincipalBundle {
        &self.p
    }
    /// Endpoints `(y1, y2)` of an element of `P`.
    #[inline]
    pub fn ends(&self, e: usize) -> (usize, usize) {
        self.pairs[self.p.proj(e)]
    }
    /// Elements over `(y1, y2)`.
    pub fn fibre_at(&self, y1: usize, y2: usize) -> &[usize] {
        self.p.fibre(self.pair(y1, y2).expect("points in one fibre"))
    }
    #[inline]
    fn mu_slot(&self, a: usize, b: usize) -> usize {
        self.mu_off[b] + self.start_pos[a]
    }
    /// `μ(a, b)`; panics unless `a` starts where `b` ends.
    #[inline]
    pub fn mu(&self, a: usize, b: usize) -> usize {
        self.try_mu(a, b).expect("μ on a composable pair")
    }
    pub fn try_mu(&self, a: usize, b: usize) -> Option<usize> {
        if a >= self.p.total() || b >= self.p.total() || self.ends(a).0 != self.ends(b).1 {
            return None;
        }
        Some(self.mu[self.mu_slot(a, b)]).filter(|&c| c != UNDEF)
    }
    fn mu_entries(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        (0..self.p.total()).flat_map(move |b| self.starting_at[self.ends(b).1].iter().map(move |&a| ((a, b), self.mu[self.mu_slot(a, b)])))
    }
    /// The unit `t(y)` over `(y, y)`.
    pub fn unit(&self, y: usize) -> usize {
        self.unit[y]
    }
    pub fn inverse(&self, e: usize) -> usize {
        self.inv[e]
    }
    /// The product table sorted by key.
    pub fn mu_table(&self) -> Vec<((usize, usize), usize)> {
        let mut v: Vec<_> = self.mu_entries().filter(|&(_, c)| c != UNDEF).collect();
        v.sort_unstable();
        v
    }

    /// Checks the bundle, the product on pairs (endpoints, anchors, both
    /// relations), descent to the tensor product, associativity over every
    /// `Y^[4]` point, unique units and inverses, and the groupoid they form.
    /// Returns the units and inverses.
    pub fn validate(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let tg = &*self.tg;
        let p = &self.p;
        p.validate()?;
        let ill = |s: String| Err(Error::ProductIllDefined(s));
        for a in 0..p.total() {
            let (y2, y3) = self.ends(a);
            for &b in &self.ending_at[y2] {
                let Some(c) = self.try_mu(a, b) else {
                    return ill(format!("μ({a},{b}) missing"));
                };
                if self.ends(c) != (self.ends(b).0, y3) {
                    return ill(format!("μ({a},{b}) lies over the wrong pair"));
                }
                if p.anchor(c) != tg.mul0(p.anchor(a), p.anchor(b)) {
                    return ill(format!("μ({a},{b}) has the wrong anchor"));
                }
                for &g in tg.gpd.incoming(p.anchor(a)) {
                    if self.mu(p.act(a, g), b) != p.act(c, tg.mul1(g, tg.id(p.anchor(b)))) {
                        return ill(format!("μ not balanced in the first factor at ({a},{b},{g})"));
                    }
                }
                for &g in tg.gpd.incoming(p.anchor(b)) {
                    if self.mu(a, p.act(b, g)) != p.act(c, tg.mul1(tg.id(p.anchor(a)), g)) {
                        return ill(format!("μ not balanced in the second factor at ({a},{b},{g})"));
                    }
                }
            }
        }
        self.check_tensor_descent()?;
        for ys in &self.ys_over {
            for &y1 in ys {
                for &y2 in ys {
                    for &y3 in ys {
                        // μ is balanced in both factors and fibres are
                        // torsors, so one element per fibre suffices
                        let (b, c) = (self.fibre_at(y2, y3)[0], self.fibre_at(y1, y2)[0]);
                        let bc = self.mu(b, c);
                        for &y4 in ys {
                            let a = self.fibre_at(y3, y4)[0];
                            if self.mu(self.mu(a, b), c) != self.mu(a, bc) {
                                return Err(Error::GerbeNotAssociative(vec![y1, y2, y3, y4]));
                            }
                        }
                    }
                }
            }
        }
        let mut unit = vec![UNDEF; self.y_count()];
        for (y, u) in unit.iter_mut().enumerate() {
            let cands: Vec<usize> = self
                .fibre_at(y, y)
                .iter()
                .copied()
                .filter(|&t| {
                    p.anchor(t) == 0
                        && self.ending_at[y].iter().all(|&b| self.mu(t, b) == b)
                        && (0..p.total()).filter(|&a| self.ends(a).0 == y).all(|a| self.mu(a, t) == a)
                })
                .collect();
            if cands.len() != 1 {
                return Err(Error::UnitNotUnique(y));
            }
            *u = cands[0];
        }
        let mut inv = vec![UNDEF; p.total()];
        for (e, slot) in inv.iter_mut().enumerate() {
            let (y1, y2) = self.ends(e);
            let cands: Vec<usize> =
                self.fibre_at(y2, y1).iter().copied().filter(|&i| self.mu(i, e) == unit[y1] && self.mu(e, i) == unit[y2]).collect();
            if cands.len() != 1 || p.anchor(cands[0]) != tg.inv0(p.anchor(e)) {
                return Err(Error::InverseMissing(e));
            }
            *slot = cands[0];
        }
        self.groupoid_with(&unit)?;
        Ok((unit, inv))
    }

    /// `μ` as a map `π23*P ⊗ π12*P -> π13*P` over `Y^[3]`, checked to be a
    /// well-defined bundle morphism on the materialized tensor product.
    fn check_tensor_descent(&self) -> Result<()> {
        let mut triples = Vec::new();
        for ys in &self.ys_over {
            for &a in ys {
                for &b in ys {
                    for &c in ys {
                        triples.push((a, b, c));
                    }
                }
            }
        }
        let n3 = triples.len();
        let f23: Vec<usize> = triples.iter().map(|&(_, b, c)| self.pair(b, c).expect("fibre pair")).collect();
        let f12: Vec<usize> = triples.iter().map(|&(a, b, _)| self.pair(a, b).expect("fibre pair")).collect();
        let f13: Vec<usize> = triples.iter().map(|&(a, _, c)| self.pair(a, c).expect("fibre pair")).collect();
        let (b23, e23) = self.p.pullback(n3, &f23);
        let (b12, e12) = self.p.pullback(n3, &f12);
        let (b13, e13) = self.p.pullback(n3, &f13);
        let idx13: HashMap<(usize, usize), usize> = e13.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let t = tensor_product(&self.tg, &b23, &b12)?;
        let mut map = vec![UNDEF; t.bundle.total()];
        for &(x, y, g) in &t.triples {
            let (k, a) = e23[x];
            let b = e12[y].1;
            let v = idx13[&(k, self.p.act(self.mu(a, b), g))];
            let cls = t.class(x, y, g);
            if map[cls] != UNDEF && map[cls] != v {
                return Err(Error::ProductIllDefined(format!("μ not constant on tensor class {cls}")));
            }
            map[cls] = v;
        }
        check_morphism(&t.bundle, &b13, &map).map_err(|e| Error::ProductIllDefined(format!("μ on tensors: {e}")))
    }

    fn groupoid_with(&self, unit: &[usize]) -> Result<FiniteGroupoid> {
        let n = self.p.total();
        let src = (0..n).map(|e| self.ends(e).0).collect();
        let tgt = (0..n).map(|e| self.ends(e).1).collect();
        FiniteGroupoid::from_fn(self.y_count(), src, tgt, unit.to_vec(), |g2, g1| self.mu(g2, g1))
    }

    /// The groupoid on `Y` with morphisms `P` and composition `μ`.
    pub fn groupoid(&self) -> Result<FiniteGroupoid> {
        self.groupoid_with(&self.unit)
    }

    /// Pullback along `f: W -> Y` with `π(f(w)) = w_pi(w)`.
    pub fn pullback(&self, w_pi: &[usize], f: &[usize]) -> Result<DiscreteBundleGerbe> {
        if w_pi.len() != f.len() {
            return Err(Error::Shape("map and projection lengths differ".into()));
        }
        for (w, (&m, &y)) in w_pi.iter().zip(f).enumerate() {
            check_index(y, self.y_count())?;
            if self.pi[y] != m {
                return Err(Error::NotARefinement(w));
            }
        }
        let wpairs = fibre_pairs(w_pi);
        let map: Vec<usize> = wpairs.iter().map(|&(a, b)| self.pair(f[a], f[b]).expect("fibre pair")).collect();
        let (pb, elems) = self.p.pullback(wpairs.len(), &map);
        let index: HashMap<(usize, usize), usize> = elems.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let wpi: HashMap<(usize, usize), usize> = wpairs.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        DiscreteBundleGerbe::new(self.tg.clone(), self.base, w_pi.to_vec(), pb, |x, y| {
            let (k23, a) = elems[x];
            let (k12, b) = elems[y];
            let k13 = wpi[&(wpairs[k12].0, wpairs[k23].1)];
            Ok(index[&(k13, self.mu(a, b))])
        })
    }
}

/// The trivial gerbe: `Y = M`, `P = triv_1`, `μ` the group product.
pub fn trivial_gerbe(tg: Arc<TwoGroup>, base: usize) -> Result<DiscreteBundleGerbe> {
    let pi: Vec<usize> = (0..base).collect();
    let n_pairs = fibre_pairs(&pi).len();
    let tb = TrivialBundle::new(tg.gpd.clone(), &vec![0; n_pairs])?;
    let t2 = tg.clone();
    DiscreteBundleGerbe::new(tg, base, pi, tb.bundle.clone(), move |a, b| {
        let (m, ga) = tb.split(a);
        let (_, gb) = tb.split(b);
        Ok(tb.elem(m, t2.mul1(ga, gb)))
    })
}

/// `F(a, b)` extended from the sorted edges: `f_ab`, `1`, or `f_ba⁻¹`.
fn edge_value(nerve: &crate::cohomology::CoverNerve, tg: &TwoGroup, c: &H1Cocycle, a: usize, b: usize) -> usize {
    use std::cmp::Ordering::*;
    match a.cmp(&b) {
        Less => c.f[nerve.edge_index(a, b).expect("edge in nerve")],
        Equal => 0,
        Greater => tg.inv0(c.f[nerve.edge_index(b, a).expect("edge in nerve")]),
    }
}

/// `G(a, b, c): F(b,c) F(a,b) => F(a,c)` extended from sorted triangles to
/// every ordered triple of chart indices.
fn triangle_value(nerve: &crate::cohomology::CoverNerve, tg: &TwoGroup, c: &H1Cocycle, a: usize, b: usize, d: usize) -> usize {
    if a == b || b == d || a == d {
        return tg.id(edge_value(nerve, tg, c, a, d));
    }
    let mut s = [a, b, d];
    s.sort_unstable();
    let [p, q, r] = s;
    let g = c.g[nerve.triangle_index(s).expect("triangle in nerve")];
    let f = |x, y| c.f[nerve.edge_index(x, y).expect("edge in nerve")];
    let idi = |x| tg.id(tg.inv0(x));
    match (a, b, d) {
        _ if (a, b, d) == (p, q, r) => g,
        _ if (a, b, d) == (r, q, p) => tg.inv1(g),
        _ if (a, b, d) == (q, p, r) => tg.mul1(tg.vinv(g), idi(f(p, q))),
        _ if (a, b, d) == (p, r, q) => tg.mul1(idi(f(q, r)), tg.vinv(g)),
        _ if (a, b, d) == (q, r, p) => tg.mul1_3(idi(f(p, r)), g, idi(f(p, q))),
        _ => tg.mul1_3(idi(f(q, r)), g, idi(f(p, r))),
    }
}

/// The gerbe glued from an `H¹` cocycle on the nerve of a concrete cover:
/// `Y = ⊔ U_i` as `(i, x)` ordered by `i` then `x`, `P` the trivial bundle
/// of the extended `f`, and `μ(γ, δ) = G ∘ (γ · δ)`. Also returns the chart
/// sections `σ_i(x) = (i, x)`.
pub fn glued_gerbe(tg: Arc<TwoGroup>, cover: &ConcreteCover, c: &H1Cocycle) -> Result<(DiscreteBundleGerbe, Vec<Vec<usize>>)> {
    let nerve = cover.nerve();
    validate_h1(&nerve, &tg, c)?;
    let mut ys = Vec::new();
    let mut sections = Vec::new();
    for (i, u) in cover.sets.iter().enumerate() {
        let mut s = vec![UNDEF; cover.points];
        for &x in u {
            s[x] = ys.len();
            ys.push((i, x));
        }
        sections.push(s);
    }
    let pi: Vec<usize> = ys.iter().map(|&(_, x)| x).collect();
    let pairs = fibre_pairs(&pi);
    let fv: Vec<usize> = pairs.iter().map(|&(a, b)| edge_value(&nerve, &tg, c, ys[a].0, ys[b].0)).collect();
    let tb = TrivialBundle::new(tg.gpd.clone(), &fv)?;
    let pair_index: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let t2 = tg.clone();
    let g = DiscreteBundleGerbe::new(tg, cover.points, pi, tb.bundle.clone(), |x, y| {
        let (k23, g23) = tb.split(x);
        let (k12, g12) = tb.split(y);
        let (y1, y2, y3) = (pairs[k12].0, pairs[k12].1, pairs[k23].1);
        let gg = triangle_value(&nerve, &t2, c, ys[y1].0, ys[y2].0, ys[y3].0);
        Ok(tb.elem(pair_index[&(y1, y3)], t2.comp(gg, t2.mul1(g23, g12))))
    })?;
    Ok((g, sections))
}

/// Sections `σ_i(x)` given by the least preimage of `x`.
pub fn least_preimage_sections(g: &DiscreteBundleGerbe, cover: &ConcreteCover) -> Result<Vec<Vec<usize>>> {
    if cover.points != g.base() {
        return Err(Error::Shape(format!("cover of {} points for a base of {}", cover.points, g.base())));
    }
    let least: Vec<usize> = (0..g.base()).map(|m| g.ys_over(m)[0]).collect();
    let sections = cover
        .sets
        .iter()
        .map(|u| {
            let mut s = vec![UNDEF; cover.points];
            for &x in u {
                s[x] = least[x];
            }
            s
        })
        .collect();
    Ok(sections)
}

struct Extraction<'a> {
    g: &'a DiscreteBundleGerbe,
    nerve: crate::cohomology::CoverNerve,
    /// `(edge, x, first endpoint, second endpoint)` in assignment order.
    vars: Vec<(usize, usize, usize, usize)>,
    /// Triangles closed by each variable, with the slots of the other edges.
    closes: Vec<Vec<(usize, usize, usize)>>,
    /// Whether a variable is the first point of its edge.
    first: Vec<bool>,
    val: Vec<usize>,
    f: Vec<usize>,
    tri: Vec<usize>,
    tri_owner: Vec<usize>,
    found: Vec<H1Cocycle>,
    limit: usize,
}

impl Extraction<'_> {
    fn run(&mut self, v: usize) {
        if self.found.len() >= self.limit {
            return;
        }
        if v == self.vars.len() {
            self.found.push(H1Cocycle { f: self.f.clone(), g: self.tri.clone() });
            return;
        }
        let (e, _, y1, y2) = self.vars[v];
        let fibre = self.g.fibre_at(y1, y2).to_vec();
        for q in fibre {
            let a = self.g.bundle().anchor(q);
            if !self.first[v] && a != self.f[e] {
                continue;
            }
            self.val[v] = q;
            if self.first[v] {
                self.f[e] = a;
            }
            let mut ok = true;
            let mut set = Vec::new();
            for &(t, s_ij, s_ik) in &self.closes[v] {
                let p = self.g.bundle();
                let m = self.g.mu(q, self.val[s_ij]);
                let gv = p.divide(self.val[s_ik], m).expect("same fibre");
                if self.tri_owner[t] == UNDEF {
                    self.tri_owner[t] = v;
                    self.tri[t] = gv;
                    set.push(t);
                } else if self.tri[t] != gv {
                    ok = false;
                    break;
                }
            }
            if ok {
                self.run(v + 1);
            }
            for t in set {
                self.tri_owner[t] = UNDEF;
            }
            if self.found.len() >= self.limit {
                return;
            }
        }
    }
}

/// All cocycles (up to `limit`) obtained from choices of trivializations
/// `ε_ij(x) ∈ P_(σ_i x, σ_j x)` with constant anchor and constant triangle
/// defect `g_ijk = divide(ε_ik, μ(ε_jk, ε_ij))`.
pub fn extraction_choices(g: &DiscreteBundleGerbe, cover: &ConcreteCover, sections: &[Vec<usize>], limit: usize) -> Result<Vec<H1Cocycle>> {
    if cover.points != g.base() || sections.len() != cover.sets.len() {
        return Err(Error::Shape("cover does not match the gerbe".into()));
    }
    for (i, u) in cover.sets.iter().enumerate() {
        for &x in u {
            let y = sections[i][x];
            check_index(y, g.y_count())?;
            if g.pi()[y] != x {
                return Err(Error::Shape(format!("section {i} misses point {x}")));
            }
        }
    }
    let nerve = cover.nerve();
    let mut vars = Vec::new();
    let mut slot = HashMap::new();
    let mut first = Vec::new();
    for (e, &[i, j]) in nerve.edges().iter().enumerate() {
        for (n, x) in cover.intersection(&[i, j]).into_iter().enumerate() {
            slot.insert((e, x), vars.len());
            first.push(n == 0);
            vars.push((e, x, sections[i][x], sections[j][x]));
        }
    }
    let mut closes = vec![Vec::new(); vars.len()];
    for (t, &[i, j, k]) in nerve.triangles().iter().enumerate() {
        let [ij, jk, ik] = nerve.triangle_edges(t);
        for x in cover.intersection(&[i, j, k]) {
            // edge jk is assigned after ij and ik
            closes[slot[&(jk, x)]].push((t, slot[&(ij, x)], slot[&(ik, x)]));
        }
    }
    let (ne, nt) = (nerve.edges().len(), nerve.triangles().len());
    let nv = vars.len();
    let mut ex = Extraction {
        g,
        nerve,
        vars,
        closes,
        first,
        val: vec![UNDEF; nv],
        f: vec![0; ne],
        tri: vec![0; nt],
        tri_owner: vec![UNDEF; nt],
        found: Vec::new(),
        limit,
    };
    ex.run(0);
    for c in &ex.found {
        validate_h1(&ex.nerve, &g.tg, c)?;
    }
    Ok(ex.found)
}

/// A cocycle classifying `g` relative to the cover and sections.
pub fn extract_cocycle(g: &DiscreteBundleGerbe, cover: &ConcreteCover, sections: &[Vec<usize>]) -> Result<H1Cocycle> {
    extraction_choices(g, cover, sections, 1)?
        .pop()
        .ok_or_else(|| Error::NotConstantOnIntersection("no trivializations with constant data".into()))
}

/// A 1-morphism in fibre-product form: a bundle `Q` over
/// `Z = Y1 ×_M Y2` and `β: P2 ⊗ Q_z -> Q_z' ⊗ P1` over `Z^[2]`.
///
/// `β(a, q)` is stored at `(a, q, z')` as the `q'` with
/// `β(a, q) = [q', b, id]`, where `b` is the least element of `P1` over
/// `(y1(z), y1(z'))`.
#[derive(Debug, Clone)]
pub struct GerbeMorphismFP {
    pub source: Arc<DiscreteBundleGerbe>,
    pub target: Arc<DiscreteBundleGerbe>,
    z: Vec<(usize, usize)>,
    z_index: HashMap<(usize, usize), usize>,
    zs_over: Vec<Vec<usize>>,
    q: PrincipalBundle,
    /// Position of each `z` in its `zs_over` list.
    z_pos: Vec<usize>,
    /// Position of each element of `P2` in its fibre.
    p2_pos: Vec<usize>,
    /// Largest fibre of `P2`.
    stride: usize,
    /// `β(a, q, z')` sits at `beta_off[q] + z_pos[z'] · stride + p2_pos[a]`.
    beta_off: Vec<usize>,
    beta: Vec<usize>,
}

fn z_points(src: &DiscreteBundleGerbe, tgt: &DiscreteBundleGerbe) -> Vec<(usize, usize)> {
    let mut z = Vec::new();
    for y1 in 0..src.y_count() {
        for &y2 in tgt.ys_over(src.pi()[y1]) {
            z.push((y1, y2));
        }
    }
    z
}

fn same_gerbe(a: &Arc<DiscreteBundleGerbe>, b: &Arc<DiscreteBundleGerbe>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl GerbeMorphismFP {
    /// Points of `Z` for a source and target gerbe, ordered by `y1` then `y2`.
    pub fn z_for(source: &DiscreteBundleGerbe, target: &DiscreteBundleGerbe) -> Vec<(usize, usize)> {
        z_points(source, target)
    }

    /// Builds from `Q` and a `β` function called at every `(a, q, z')`, and
    /// validates.
    pub fn new(
        source: Arc<DiscreteBundleGerbe>,
        target: Arc<DiscreteBundleGerbe>,
        q: PrincipalBundle,
        mut beta: impl FnMut(usize, usize, usize) -> Result<usize>,
    ) -> Result<Self> {
        if source.base() != target.base() {
            return Err(Error::MorphismIncompatible("gerbes live over different bases".into()));
        }
        if source.tg.gpd != target.tg.gpd {
            return Err(Error::MorphismIncompatible("gerbes use different 2-groups".into()));
        }
        let z = z_points(&source, &target);
        if q.base() != z.len() {
            return Err(Error::Shape(format!("Q has base {} but Z has {} points", q.base(), z.len())));
        }
        let z_index = z.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut zs_over = vec![Vec::new(); source.base()];
        for (i, &(y1, _)) in z.iter().enumerate() {
            zs_over[source.pi()[y1]].push(i);
        }
        let mut z_pos = vec![0; z.len()];
        for zs in &zs_over {
            for (i, &zi) in zs.iter().enumerate() {
                z_pos[zi] = i;
            }
        }
        let p2 = target.bundle();
        let mut p2_pos = vec![0; p2.total()];
        let mut stride = 0;
        for m in 0..p2.base() {
            stride = stride.max(p2.fibre(m).len());
            for (i, &e) in p2.fibre(m).iter().enumerate() {
                p2_pos[e] = i;
            }
        }
        let mut beta_off = Vec::with_capacity(q.total());
        let mut n = 0;
        for qe in 0..q.total() {
            beta_off.push(n);
            n += zs_over[source.pi()[z[q.proj(qe)].0]].len() * stride;
        }
        let mut m = GerbeMorphismFP { source, target, z, z_index, zs_over, q, z_pos, p2_pos, stride, beta_off, beta: vec![UNDEF; n] };
        let mut table = std::mem::take(&mut m.beta);
        for qe in 0..m.q.total() {
            let zi = m.q.proj(qe);
            let (y1, y2) = m.z[zi];
            for &zp in &m.zs_over[m.source.pi()[y1]] {
                for &a in m.target.fibre_at(y2, m.z[zp].1) {
                    let v = beta(a, qe, zp)?;
                    check_index(v, m.q.total())?;
                    table[m.beta_slot(a, qe, zp)] = v;
                }
            }
        }
        m.beta = table;
        m.validate()?;
        Ok(m)
    }

    pub fn z(&self) -> &[(usize, usize)] {
        &self.z
    }
    pub fn z_index(&self, y1: usize, y2: usize) -> Option<usize> {
        self.z_index.get(&(y1, y2)).copied()
    }
    pub fn zs_over(&self, m: usize) -> &[usize] {
        &self.zs_over[m]
    }
    pub fn q(&self) -> &PrincipalBundle {
        &self.q
    }
    #[inline]
    fn beta_slot(&self, a: usize, q: usize, zp: usize) -> usize {
        self.beta_off[q] + self.z_pos[zp] * self.stride + self.p2_pos[a]
    }
    /// `β(a, q)` moved to `z'`; `a` must lie over `(y2(z), y2(z'))`.
    #[inline]
    pub fn beta(&self, a: usize, q: usize, zp: usize) -> usize {
        self.beta[self.beta_slot(a, q, zp)]
    }
    /// Every stored `((a, q, z'), β)`.
    fn beta_entries(&self) -> impl Iterator<Item = ((usize, usize, usize), usize)> + '_ {
        (0..self.q.total()).flat_map(move |qe| {
            let (y1, y2) = self.z[self.q.proj(qe)];
            self.zs_over[self.source.pi()[y1]]
                .iter()
                .flat_map(move |&zp| self.target.fibre_at(y2, self.z[zp].1).iter().map(move |&a| ((a, qe, zp), self.beta(a, qe, zp))))
        })
    }
    /// Least element of `P1` over `(y1(z), y1(z'))`.
    #[inline]
    pub fn base1(&self, z: usize, zp: usize) -> usize {
        self.source.fibre_at(self.z[z].0, self.z[zp].0)[0]
    }

    /// `[q', b, γ]` in `Q ⊗ P1` in stored normal form.
    fn normal(&self, q: usize, b: usize, b0: usize, g: usize) -> usize {
        move_second(&self.source.tg, &self.q, q, self.source.bundle(), b, b0, g)
    }

    /// Bundle axioms of `Q`, anchors and both relations for `β`, and
    /// compatibility with both products over `Z^[3]`.
    pub fn validate(&self) -> Result<()> {
        let tg = &*self.source.tg;
        let (q, p1, p2) = (&self.q, self.source.bundle(), self.target.bundle());
        q.validate()?;
        let bad = |s: String| Err(Error::MorphismIncompatible(s));
        for qe in 0..q.total() {
            let zi = q.proj(qe);
            let (y1, y2) = self.z[zi];
            for &zp in &self.zs_over[self.source.pi()[y1]] {
                let b = self.base1(zi, zp);
                for &a in self.target.fibre_at(y2, self.z[zp].1) {
                    let v = self.beta(a, qe, zp);
                    if v == UNDEF {
                        return bad(format!("β missing at ({a},{qe},{zp})"));
                    }
                    if q.proj(v) != zp {
                        return bad(format!("β({a},{qe}) lands off z'={zp}"));
                    }
                    if tg.mul0(q.anchor(v), p1.anchor(b)) != tg.mul0(p2.anchor(a), q.anchor(qe)) {
                        return bad(format!("β({a},{qe}) has the wrong anchor"));
                    }
                    for &g in tg.gpd.incoming(p2.anchor(a)) {
                        let lhs = self.beta(p2.act(a, g), qe, zp);
                        let rhs = self.normal(v, b, b, tg.mul1(g, tg.id(q.anchor(qe))));
                        if lhs != rhs {
                            return bad(format!("β not balanced in P2 at ({a},{qe},{g})"));
                        }
                    }
                    for &g in tg.gpd.incoming(q.anchor(qe)) {
                        let lhs = self.beta(a, q.act(qe, g), zp);
                        let rhs = self.normal(v, b, b, tg.mul1(tg.id(p2.anchor(a)), g));
                        if lhs != rhs {
                            return bad(format!("β not balanced in Q at ({a},{qe},{g})"));
                        }
                    }
                }
            }
        }
        // Both sides are bundle morphisms on a torsor, so one element per
        // fibre suffices once the relations hold.
        for zs in &self.zs_over {
            for &z1 in zs {
                let Some(&qe) = q.fibre(z1).first() else {
                    return bad(format!("Q has an empty fibre at {z1}"));
                };
                for &z2 in zs {
                    let b = self.target.fibre_at(self.z[z1].1, self.z[z2].1)[0];
                    let q2 = self.beta(b, qe, z2);
                    let c12 = self.base1(z1, z2);
                    for &z3 in zs {
                        let a = self.target.fibre_at(self.z[z2].1, self.z[z3].1)[0];
                        let q3 = self.beta(a, q2, z3);
                        let r = self.source.mu(self.base1(z2, z3), c12);
                        let lhs = self.normal(q3, r, self.base1(z1, z3), tg.id(tg.mul0(q.anchor(q3), p1.anchor(r))));
                        let rhs = self.beta(self.target.mu(a, b), qe, z3);
                        if lhs != rhs {
                            return bad(format!("β incompatible with μ over z=({z1},{z2},{z3})"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// The morphism induced by a refinement `f: Y1 -> Y2` over `M` and a
    /// bundle map `ψ: P1 -> P2` over `f`: `Q_(y1,y2) = P2_(f y1, y2)` and
    /// `β(a, q)` the unique `q'` with `μ2(q', ψ(b)) = μ2(a, q)`.
    pub fn from_refinement(source: Arc<DiscreteBundleGerbe>, target: Arc<DiscreteBundleGerbe>, f: &[usize], psi: &[usize]) -> Result<Self> {
        let tg = source.tg.clone();
        if f.len() != source.y_count() || psi.len() != source.bundle().total() {
            return Err(Error::Shape("refinement data has the wrong length".into()));
        }
        for (y, &fy) in f.iter().enumerate() {
            check_index(fy, target.y_count())?;
            if target.pi()[fy] != source.pi()[y] {
                return Err(Error::NotARefinement(y));
            }
        }
        let (p1, p2) = (source.bundle(), target.bundle());
        let fmap: Vec<usize> = source.pairs().iter().map(|&(a, b)| target.pair(f[a], f[b]).expect("fibre pair")).collect();
        let (pb, elems) = p2.pullback(p1.base(), &fmap);
        let idx: HashMap<(usize, usize), usize> = elems.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut as_pb = Vec::with_capacity(psi.len());
        for (e, &v) in psi.iter().enumerate() {
            check_index(v, p2.total())?;
            match idx.get(&(p1.proj(e), v)) {
                Some(&i) => as_pb.push(i),
                None => return Err(Error::NotBundleMorphism(format!("ψ({e}) lies over the wrong pair"))),
            }
        }
        check_morphism(p1, &pb, &as_pb)?;
        for ((a, b), c) in source.mu_entries() {
            if psi[c] != target.mu(psi[a], psi[b]) {
                return Err(Error::MorphismIncompatible(format!("ψ does not preserve μ at ({a},{b})")));
            }
        }
        let z = z_points(&source, &target);
        let zmap: Vec<usize> = z.iter().map(|&(y1, y2)| target.pair(f[y1], y2).expect("fibre pair")).collect();
        let (q, qel) = p2.pullback(z.len(), &zmap);
        let qidx: HashMap<(usize, usize), usize> = qel.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let (s2, t2) = (source.clone(), target.clone());
        let p2 = t2.bundle();
        GerbeMorphismFP::new(source.clone(), target.clone(), q, |a, qe, zp| {
            let (zi, q0) = qel[qe];
            let (y1, _) = z[zi];
            let (y1p, y2p) = z[zp];
            let r = t2.mu(a, q0);
            let pb = psi[s2.fibre_at(y1, y1p)[0]];
            let start = t2.fibre_at(f[y1p], y2p)[0];
            let s = t2.mu(start, pb);
            let d = p2.divide(s, r).ok_or_else(|| Error::MorphismIncompatible("β target not reachable".into()))?;
            let v = p2.act(start, tg.mul1(d, tg.id(tg.inv0(p2.anchor(pb)))));
            Ok(qidx[&(zp, v)])
        })
    }

    pub fn identity(g: Arc<DiscreteBundleGerbe>) -> Result<Self> {
        let f: Vec<usize> = (0..g.y_count()).collect();
        let psi: Vec<usize> = (0..g.bundle().total()).collect();
        Self::from_refinement(g.clone(), g, &f, &psi)
    }

    /// `Q ⊗ P1`-valued `β` applied to a general tensor `[q, c]` with `c` any
    /// element of `P1` over `(y1(z), y1(z''))`: returns `β` restricted to
    /// move `z` to `zp` with `c` carried along, normalized to base `c0`.
    fn beta_with_base(&self, a: usize, qe: usize, zp: usize, c0: usize) -> usize {
        let tg = &*self.source.tg;
        let v = self.beta(a, qe, zp);
        let b = self.base1(self.q.proj(qe), zp);
        self.normal(v, b, c0, tg.id(tg.mul0(self.q.anchor(v), self.source.bundle().anchor(b))))
    }
}

/// `A2 ∘ A1` for `A1: G1 -> G2` and `A2: G2 -> G3`, built over
/// `Y1 ×_M Y2 ×_M Y3` and descended to `Y1 ×_M Y3`.
pub fn compose_gerbe_morphisms(a1: &GerbeMorphismFP, a2: &GerbeMorphismFP) -> Result<GerbeMorphismFP> {
    if !same_gerbe(&a1.target, &a2.source) {
        return Err(Error::MorphismIncompatible("middle gerbes differ".into()));
    }
    let tg = a1.source.tg.clone();
    let tg = &*tg;
    let (g1, g2) = (&a1.source, &a1.target);
    let (q12, q23) = (&a1.q, &a2.q);
    // W = (y1, y2, y3); an element is q23 at (y2, y3) with the least q12 at (y1, y2)
    let mut w = Vec::new();
    for y1 in 0..g1.y_count() {
        let m = g1.pi()[y1];
        for &y2 in g2.ys_over(m) {
            for &y3 in a2.target.ys_over(m) {
                w.push((y1, y2, y3));
            }
        }
    }
    let w_index: HashMap<(usize, usize, usize), usize> = w.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let z12 = |wi: usize| a1.z_index(w[wi].0, w[wi].1).expect("z12");
    let z23 = |wi: usize| a2.z_index(w[wi].1, w[wi].2).expect("z23");
    let b12 = |wi: usize| q12.fibre(z12(wi))[0];
    // elements (w, q23)
    let mut elems = Vec::new();
    let mut eidx = HashMap::new();
    for wi in 0..w.len() {
        for &x in q23.fibre(z23(wi)) {
            eidx.insert((wi, x), elems.len());
            elems.push((wi, x));
        }
    }
    // β on W: a ∈ P3 over (y3, y3'), element (w, x), target w', result
    // normalized to the P1 element c0 over (y1, y1').
    let beta_w = |a: usize, wi: usize, x: usize, wp: usize, c0: usize| -> usize {
        let (zi12, zp12, zp23) = (z12(wi), z12(wp), z23(wp));
        let u = a2.beta(a, x, zp23);
        let base2 = a2.base1(z23(wi), zp23);
        let v = a1.beta_with_base(base2, b12(wi), zp12, c0);
        let _ = zi12;
        // [u, v, c0, id]: move v to the least element b12' of its fibre
        let bp = q12.fibre(zp12)[0];
        let d = q12.divide(bp, v).expect("same fibre");
        let (au, ac) = (q23.anchor(u), g1.bundle().anchor(c0));
        let g = shift(tg, au, d, ac, tg.id(tg.mul0(tg.mul0(au, q12.anchor(v)), ac)));
        absorb(tg, q23, u, tg.mul0(q12.anchor(bp), ac), g)
    };
    let mut uf = UnionFind::<usize>::new(elems.len());
    for (i, &(wi, x)) in elems.iter().enumerate() {
        let (y1, y2, y3) = w[wi];
        let t3 = a2.target.unit(y3);
        let c0 = g1.unit(y1);
        for &y2p in g2.ys_over(g1.pi()[y1]) {
            if y2p == y2 {
                continue;
            }
            let wp = w_index[&(y1, y2p, y3)];
            let xp = beta_w(t3, wi, x, wp, c0);
            uf.union(i, eidx[&(wp, xp)]);
        }
    }
    // Z13 and the representative y2 for each of its points
    let z13 = z_points(g1, &a2.target);
    let rep = |k: usize| {
        let (y1, y3) = z13[k];
        w_index[&(y1, g2.ys_over(g1.pi()[y1])[0], y3)]
    };
    let mut classes: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..elems.len() {
        classes.entry(uf.find(i)).or_default().push(i);
    }
    for members in classes.values() {
        let (y1, _, y3) = w[elems[members[0]].0];
        let mut hits: Vec<usize> = members.iter().map(|&i| w[elems[i].0].1).collect();
        hits.sort_unstable();
        let want: Vec<usize> = g2.ys_over(g1.pi()[y1]).to_vec();
        if hits != want || members.iter().any(|&i| (w[elems[i].0].0, w[elems[i].0].2) != (y1, y3)) {
            return Err(Error::DescentFails(format!("class over ({y1},{y3}) does not meet each y2 once")));
        }
    }
    // Q13: representative elements, listed by z13 point
    let mut qel = Vec::new();
    let mut qidx = HashMap::new();
    for k in 0..z13.len() {
        let wr = rep(k);
        for &x in q23.fibre(z23(wr)) {
            qidx.insert(uf.find(eidx[&(wr, x)]), qel.len());
            qel.push((k, wr, x));
        }
    }
    let proj: Vec<usize> = qel.iter().map(|&(k, _, _)| k).collect();
    let anchor: Vec<usize> = qel.iter().map(|&(_, wr, x)| tg.mul0(q23.anchor(x), q12.anchor(b12(wr)))).collect();
    let q = PrincipalBundle::new(tg.gpd.clone(), z13.len(), proj, anchor, |i, g| {
        let (_, wr, x) = qel[i];
        let y = absorb(tg, q23, x, q12.anchor(b12(wr)), g);
        qidx[&uf.find(eidx[&(wr, y)])]
    })?;
    let source = g1.clone();
    let target = a2.target.clone();
    let z13_index: HashMap<(usize, usize), usize> = z13.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    // β must agree on all representatives of a class
    for (i, &(wi, x)) in elems.iter().enumerate() {
        let (y1, _, y3) = w[wi];
        let k = z13_index[&(y1, y3)];
        let expect_rep = qidx[&uf.find(i)];
        debug_assert_eq!(qel[expect_rep].0, k);
        for &y1p in g1.ys_over(g1.pi()[y1]) {
            for &y3p in a2.target.ys_over(g1.pi()[y1]) {
                let kp = z13_index[&(y1p, y3p)];
                let wp = rep(kp);
                let c0 = g1.fibre_at(y1, y1p)[0];
                for &a in a2.target.fibre_at(y3, y3p) {
                    let from_here = beta_w(a, wi, x, wp, c0);
                    let (_, wr, xr) = qel[expect_rep];
                    let from_rep = beta_w(a, wr, xr, wp, c0);
                    if from_here != from_rep {
                        return Err(Error::DescentFails(format!("β depends on the representative at element {i}")));
                    }
                }
            }
        }
    }
    GerbeMorphismFP::new(source, target, q, |a, qe, zp| {
        let (_, wr, x) = qel[qe];
        let wp = rep(zp);
        let c0 = g1.fibre_at(w[wr].0, z13[zp].0)[0];
        let y = beta_w(a, wr, x, wp, c0);
        Ok(qidx[&uf.find(eidx[&(wp, y)])])
    })
}

/// The isomorphism from the pullback along a refinement `f: W -> Y` back to
/// `g`, with `ψ` the identity on fibres.
pub fn iso_from_refinement(
    g: Arc<DiscreteBundleGerbe>,
    w_pi: &[usize],
    f: &[usize],
) -> Result<(Arc<DiscreteBundleGerbe>, GerbeMorphismFP)> {
    let pb = Arc::new(g.pullback(w_pi, f)?);
    let wpairs = fibre_pairs(w_pi);
    let map: Vec<usize> = wpairs.iter().map(|&(a, b)| g.pair(f[a], f[b]).expect("fibre pair")).collect();
    let (_, elems) = g.bundle().pullback(wpairs.len(), &map);
    let psi: Vec<usize> = elems.iter().map(|&(_, p)| p).collect();
    let m = GerbeMorphismFP::from_refinement(pb.clone(), g, f, &psi)?;
    Ok((pb, m))
}

/// Checks that `phi: Q -> Q'` is a 2-morphism `A => B`: a bundle map over
/// `Z` commuting with `β`.
pub fn check_2morphism(a: &GerbeMorphismFP, b: &GerbeMorphismFP, phi: &[usize]) -> Result<()> {
    if !same_gerbe(&a.source, &b.source) || !same_gerbe(&a.target, &b.target) {
        return Err(Error::MorphismIncompatible("1-morphisms have different ends".into()));
    }
    check_morphism(&a.q, &b.q, phi)?;
    for ((x, qe, zp), v) in a.beta_entries() {
        if b.beta(x, phi[qe], zp) != phi[v] {
            return Err(Error::MorphismIncompatible(format!("φ does not commute with β at ({x},{qe},{zp})")));
        }
    }
    Ok(())
}

/// All 2-morphisms `A => B`, up to `limit`. On each component of `Z` over
/// a point of `M` the value at one element determines the rest through
/// `β`, so candidates are enumerated per component and combined.
pub fn all_2morphisms(a: &GerbeMorphismFP, b: &GerbeMorphismFP, limit: usize) -> Vec<Vec<usize>> {
    if !same_gerbe(&a.source, &b.source) || !same_gerbe(&a.target, &b.target) || a.q.base() != b.q.base() {
        return Vec::new();
    }
    let tg = &*a.source.tg;
    let (qa, qb) = (&a.q, &b.q);
    let mut per_component: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
    for zs in &a.zs_over {
        let z0 = zs[0];
        let q0 = qa.fibre(z0)[0];
        let mut options = Vec::new();
        for &c in qb.fibre(z0) {
            if qb.anchor(c) != qa.anchor(q0) {
                continue;
            }
            let mut part: HashMap<usize, usize> = HashMap::new();
            let mut ok = true;
            for &g in tg.gpd.incoming(qa.anchor(q0)) {
                part.insert(qa.act(q0, g), qb.act(c, g));
            }
            for &zp in zs.iter().filter(|&&z| z != z0) {
                let t = a.target.fibre_at(a.z[z0].1, a.z[zp].1)[0];
                for &g in tg.gpd.incoming(qa.anchor(q0)) {
                    let x = qa.act(q0, g);
                    let (u, v) = (a.beta(t, x, zp), b.beta(t, part[&x], zp));
                    if part.insert(u, v).is_some_and(|w| w != v) {
                        ok = false;
                    }
                }
            }
            if ok && zs.iter().all(|&z| qa.fibre(z).iter().all(|e| part.contains_key(e))) {
                let mut v: Vec<_> = part.into_iter().collect();
                v.sort_unstable();
                options.push(v);
            }
        }
        if options.is_empty() {
            return Vec::new();
        }
        per_component.push(options);
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; per_component.len()];
    loop {
        let mut phi = vec![UNDEF; qa.total()];
        for (k, opts) in per_component.iter().enumerate() {
            for &(x, v) in &opts[choice[k]] {
                phi[x] = v;
            }
        }
        if check_2morphism(a, b, &phi).is_ok() {
            out.push(phi);
            if out.len() >= limit {
                return out;
            }
        }
        // odometer over the per-component options
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < per_component[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            return out;
        }
    }
}

/// A 2-morphism `A => B` if one exists.
pub fn find_2morphism(a: &GerbeMorphismFP, b: &GerbeMorphismFP) -> Option<Vec<usize>> {
    all_2morphisms(a, b, 1).pop()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FiniteGroup;
    use crate::twogroup::{crossed_to_twogroup, CrossedModule};

    fn aut_z3() -> Arc<TwoGroup> {
        Arc::new(crossed_to_twogroup(&CrossedModule::automorphism(&FiniteGroup::cyclic(3), 1 << 20).unwrap()))
    }

    #[test]
    fn trivial_gerbe_validates() {
        let tg = aut_z3();
        let g = trivial_gerbe(tg, 3).unwrap();
        assert_eq!(g.y_count(), 3);
        assert_eq!(g.groupoid().unwrap().n_mor(), 3 * 3);
    }

    #[test]
    fn identity_morphism_validates() {
        let g = Arc::new(trivial_gerbe(aut_z3(), 2).unwrap());
        let id = GerbeMorphismFP::identity(g.clone()).unwrap();
        let c = compose_gerbe_morphisms(&id, &id).unwrap();
        assert!(find_2morphism(&c, &id).is_some());
    }

    #[test]
    fn glued_gerbes_recover_their_class() {
        use crate::cohomology::{are_equivalent_h1, enumerate_h1_classes};
        let cover = ConcreteCover::sphere_star();
        let nerve = cover.nerve();
        for tg in [aut_z3(), Arc::new(crossed_to_twogroup(&CrossedModule::delooping(&FiniteGroup::cyclic(2)).unwrap()))] {
            let classes = enumerate_h1_classes(&nerve, tg.clone(), 1 << 30).unwrap();
            for c in classes.representatives.iter().take(4) {
                let (g, sections) = glued_gerbe(tg.clone(), &cover, c).unwrap();
                let back = extract_cocycle(&g, &cover, &sections).unwrap();
                assert!(are_equivalent_h1(&nerve, &tg, c, &back).is_some());
            }
        }
    }
}
