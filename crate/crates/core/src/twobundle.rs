//! Principal 2-bundles over finite bases, their morphisms, and the passage
//! to and from bundle gerbes.

use std::collections::HashMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::anafunctor::{compose, Anafunctor, GammaAction, GammaGroupoid};
use crate::bundle::{label_classes, PrincipalBundle};
use crate::error::{check_index, Error, Result};
use crate::gerbe::{move_second, DiscreteBundleGerbe, GerbeMorphismFP};
use crate::groupoid::{discrete_groupoid, product, weak_equivalence_check, FiniteGroupoid, GroupoidFunctor, WeakEquivalenceWitness};
use crate::twogroup::TwoGroup;

const UNDEF: usize = usize::MAX;

/// A Γ-groupoid `𝒫` with a projection of its objects to a finite base.
#[derive(Debug, Clone)]
pub struct Principal2Bundle {
    pub tg: Arc<TwoGroup>,
    pub action: GammaGroupoid,
    base: usize,
    pi: Vec<usize>,
}

impl PartialEq for Principal2Bundle {
    fn eq(&self, o: &Self) -> bool {
        self.tg.gpd == o.tg.gpd
            && self.action.gpd == o.action.gpd
            && self.action.r0 == o.action.r0
            && self.action.r1 == o.action.r1
            && self.base == o.base
            && self.pi == o.pi
    }
}

impl Principal2Bundle {
    pub fn new(tg: Arc<TwoGroup>, action: GammaGroupoid, base: usize, pi: Vec<usize>) -> Result<Self> {
        let b = Principal2Bundle { tg, action, base, pi };
        b.validate()?;
        Ok(b)
    }

    pub fn gpd(&self) -> &Arc<FiniteGroupoid> {
        &self.action.gpd
    }
    pub fn base(&self) -> usize {
        self.base
    }
    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    /// Strict action, a surjective invariant projection constant on
    /// components, and `τ: 𝒫 × Γ -> 𝒫 ×_M 𝒫` a weak equivalence.
    pub fn validate(&self) -> Result<()> {
        let tg = &*self.tg;
        self.action.validate(tg).map_err(|e| Error::ActionNotStrict(e.to_string()))?;
        let p = &*self.action.gpd;
        if self.pi.len() != p.n_obj() {
            return Err(Error::Shape("projection length differs from object count".into()));
        }
        let mut hit = vec![false; self.base];
        for &m in &self.pi {
            check_index(m, self.base)?;
            hit[m] = true;
        }
        if let Some(m) = hit.iter().position(|h| !h) {
            return Err(Error::NotACover(m));
        }
        for r in 0..p.n_mor() {
            if self.pi[p.src(r)] != self.pi[p.tgt(r)] {
                return Err(Error::Shape(format!("projection not constant along morphism {r}")));
            }
        }
        for x in 0..p.n_obj() {
            for g in 0..tg.n0() {
                if self.pi[self.action.act0(x, g)] != self.pi[x] {
                    return Err(Error::ActionNotStrict(format!("action moves object {x} off its fibre")));
                }
            }
        }
        if let Some(w) = self.tau_check() {
            return Err(Error::TauNotWeakEquivalence(format!("{w:?}")));
        }
        Ok(())
    }

    /// Object and morphism maps of `τ(x, g) = (x, x g)` into the fibre
    /// square, with its raw structure maps.
    fn tau_data(&self) -> TauData {
        let (tg, p, r) = (&*self.tg, &*self.action.gpd, &self.action);
        let (n0, n1) = (tg.n0(), tg.n1());
        let (no, nm) = (p.n_obj(), p.n_mor());
        let mut obj = HashMap::new();
        let mut y_objs = Vec::new();
        for x in 0..no {
            for y in 0..no {
                if self.pi[x] == self.pi[y] {
                    obj.insert((x, y), y_objs.len());
                    y_objs.push((x, y));
                }
            }
        }
        let mut mor = HashMap::new();
        let (mut y_src, mut y_tgt) = (Vec::new(), Vec::new());
        for a in 0..nm {
            for b in 0..nm {
                if self.pi[p.src(a)] == self.pi[p.src(b)] {
                    mor.insert((a, b), y_src.len());
                    y_src.push(obj[&(p.src(a), p.src(b))]);
                    y_tgt.push(obj[&(p.tgt(a), p.tgt(b))]);
                }
            }
        }
        let mut x_src = Vec::with_capacity(nm * n1);
        let mut x_tgt = Vec::with_capacity(nm * n1);
        let mut mor_map = Vec::with_capacity(nm * n1);
        for a in 0..nm {
            for g in 0..n1 {
                x_src.push(p.src(a) * n0 + tg.s(g));
                x_tgt.push(p.tgt(a) * n0 + tg.t(g));
                mor_map.push(mor[&(a, r.act1(a, g))]);
            }
        }
        let obj_map = (0..no * n0).map(|i| obj[&(i / n0, r.act0(i / n0, i % n0))]).collect();
        TauData { x_n: no * n0, x_src, x_tgt, y_n: y_objs.len(), y_src, y_tgt, obj_map, mor_map }
    }

    /// `None` when `τ` is a weak equivalence.
    pub fn tau_check(&self) -> Option<WeakEquivalenceWitness> {
        let d = self.tau_data();
        weak_equivalence_check(d.x_n, &d.x_src, &d.x_tgt, d.y_n, &d.y_src, &d.y_tgt, &d.obj_map, &d.mor_map)
    }

    /// Whether `τ` is bijective on objects and morphisms.
    pub fn tau_is_isomorphism(&self) -> bool {
        let d = self.tau_data();
        let bij = |m: &[usize], n: usize| {
            let mut seen = vec![false; n];
            m.len() == n && m.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
        };
        bij(&d.obj_map, d.y_n) && bij(&d.mor_map, d.y_src.len())
    }
}

struct TauData {
    x_n: usize,
    x_src: Vec<usize>,
    x_tgt: Vec<usize>,
    y_n: usize,
    y_src: Vec<usize>,
    y_tgt: Vec<usize>,
    obj_map: Vec<usize>,
    mor_map: Vec<usize>,
}

/// `M × Γ` with `Γ` acting on the right: objects `m·|Γ0| + g`, morphisms
/// `m·|Γ1| + γ`.
pub fn trivial_2bundle(tg: Arc<TwoGroup>, base: usize) -> Result<Principal2Bundle> {
    let (n0, n1) = (tg.n0(), tg.n1());
    let gpd = Arc::new(product(&discrete_groupoid(base), &tg.gpd));
    let r0 = (0..base * n0 * n0).map(|i| (i / n0 / n0) * n0 + tg.mul0((i / n0) % n0, i % n0)).collect();
    let r1 = (0..base * n1 * n1).map(|i| (i / n1 / n1) * n1 + tg.mul1((i / n1) % n1, i % n1)).collect();
    let action = GammaGroupoid::new(&tg, gpd, r0, r1)?;
    let pi = (0..base * n0).map(|x| x / n0).collect();
    Principal2Bundle::new(tg, action, base, pi)
}

/// An anafunctor between the total groupoids with a compatible Γ1-action,
/// over the identity of the base.
#[derive(Debug, Clone)]
pub struct TwoBundleMorphism {
    pub source: Arc<Principal2Bundle>,
    pub target: Arc<Principal2Bundle>,
    pub ana: Anafunctor,
    pub rho: GammaAction,
}

impl TwoBundleMorphism {
    pub fn new(source: Arc<Principal2Bundle>, target: Arc<Principal2Bundle>, ana: Anafunctor, rho: GammaAction) -> Result<Self> {
        let m = TwoBundleMorphism { source, target, ana, rho };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (s, t) = (&*self.source, &*self.target);
        if self.ana.x.as_ref() != s.gpd().as_ref() || self.ana.y.as_ref() != t.gpd().as_ref() {
            return Err(Error::Shape("anafunctor ends differ from the bundles".into()));
        }
        if s.base != t.base {
            return Err(Error::MorphismIncompatible("bundles live over different bases".into()));
        }
        self.ana.validate()?;
        self.rho.validate(&s.tg, &self.ana, &s.action, &t.action)?;
        for f in 0..self.ana.total() {
            if s.pi[self.ana.al(f)] != t.pi[self.ana.ar(f)] {
                return Err(Error::MorphismIncompatible(format!("element {f} does not cover the identity")));
            }
        }
        Ok(())
    }

    pub fn identity(b: Arc<Principal2Bundle>) -> Result<Self> {
        let ana = Anafunctor::identity(b.gpd().clone())?;
        let rho = GammaAction::identity(&b.tg, &b.action, &ana);
        Self::new(b.clone(), b, ana, rho)
    }

    /// From a strictly equivariant functor `φ`, as `(x, η)` with
    /// `t(η) = φ(x)` and `ρ((x, η), γ) = (R(x, tγ), R(η, γ))`.
    pub fn from_equivariant_functor(source: Arc<Principal2Bundle>, target: Arc<Principal2Bundle>, phi: &GroupoidFunctor) -> Result<Self> {
        let tg = source.tg.clone();
        let (n0, n1) = (tg.n0(), tg.n1());
        let (x, y) = (source.gpd().clone(), target.gpd().clone());
        for o in 0..x.n_obj() {
            for g in 0..n0 {
                if phi.obj_map[source.action.act0(o, g)] != target.action.act0(phi.obj_map[o], g) {
                    return Err(Error::MorphismIncompatible(format!("functor not equivariant at object {o}")));
                }
            }
        }
        for m in 0..x.n_mor() {
            for g in 0..n1 {
                if phi.mor_map[source.action.act1(m, g)] != target.action.act1(phi.mor_map[m], g) {
                    return Err(Error::MorphismIncompatible(format!("functor not equivariant at morphism {m}")));
                }
            }
        }
        let ana = Anafunctor::from_functor(x.clone(), y.clone(), phi)?;
        let mut offset = Vec::with_capacity(x.n_obj());
        let mut elems = Vec::new();
        for o in 0..x.n_obj() {
            offset.push(elems.len());
            for &e in y.incoming(phi.obj_map[o]) {
                elems.push((o, e));
            }
        }
        let rho = (0..elems.len() * n1)
            .map(|i| {
                let ((o, e), g) = (elems[i / n1], i % n1);
                offset[source.action.act0(o, tg.t(g))] + y.in_pos(target.action.act1(e, g))
            })
            .collect();
        Self::new(source, target, ana, GammaAction { rho })
    }

    /// `second ∘ self`.
    pub fn then(&self, second: &TwoBundleMorphism) -> Result<TwoBundleMorphism> {
        let c = compose(&self.ana, &second.ana)?;
        let rho = GammaAction::compose(&self.source.tg, &c, &self.rho, &second.rho)?;
        Self::new(self.source.clone(), second.target.clone(), c.ana, rho)
    }
}

/// The gerbe of a 2-bundle: `Y = 𝒫0`, `P = 𝒫1 × Γ0` with
/// `(ρ, g)` over `(t ρ, R(s ρ, g⁻¹))`, anchor `g`, and
/// `μ((ρ23, g23), (ρ12, g12)) = (ρ12 ∘ R(ρ23, id_{g12}), g23 g12)`.
pub fn e_object(b: &Principal2Bundle) -> Result<DiscreteBundleGerbe> {
    let tg = b.tg.clone();
    let (n0, p, r) = (tg.n0(), b.gpd().clone(), &b.action);
    let pairs = crate::gerbe::fibre_pairs(&b.pi);
    let pidx: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let total = p.n_mor() * n0;
    let proj = (0..total).map(|i| pidx[&(p.tgt(i / n0), r.act0(p.src(i / n0), tg.inv0(i % n0)))]).collect();
    let anchor = (0..total).map(|i| i % n0).collect();
    let bundle = PrincipalBundle::new(tg.gpd.clone(), pairs.len(), proj, anchor, |i, g| {
        let (rho, h) = (i / n0, i % n0);
        r.act1(rho, tg.mul1(tg.id(tg.inv0(h)), g)) * n0 + tg.s(g)
    })
    .map_err(|e| Error::NotPrincipal(format!("gerbe bundle of a 2-bundle: {e}")))?;
    DiscreteBundleGerbe::new(tg.clone(), b.base, b.pi.clone(), bundle, |a, c| {
        let (r23, g23) = (a / n0, a % n0);
        let (r12, g12) = (c / n0, c % n0);
        let m =
            p.try_compose(r12, r.act1(r23, tg.id(g12))).ok_or_else(|| Error::ProductIllDefined(format!("μ({a},{c}) not composable")))?;
        Ok(m * n0 + tg.mul0(g23, g12))
    })
}

/// The gerbe morphism of a 2-bundle morphism: `Q = F × Γ0` over
/// `𝒫0 ×_M 𝒫0'` and `β` built from a choice of `(h, ρ̃)`, checked to be
/// independent of that choice.
pub fn e_morphism(f: &TwoBundleMorphism, e1: Arc<DiscreteBundleGerbe>, e2: Arc<DiscreteBundleGerbe>) -> Result<GerbeMorphismFP> {
    let tg = f.source.tg.clone();
    let n0 = tg.n0();
    let (s, t) = (&*f.source, &*f.target);
    let (ana, rho) = (&f.ana, &f.rho);
    let z = GerbeMorphismFP::z_for(&e1, &e2);
    let zidx: HashMap<(usize, usize), usize> = z.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let total = ana.total() * n0;
    let proj: Vec<usize> = (0..total)
        .map(|i| {
            let (fe, g) = (i / n0, i % n0);
            zidx.get(&(ana.al(fe), t.action.act0(ana.ar(fe), tg.inv0(g))))
                .copied()
                .ok_or_else(|| Error::MorphismIncompatible(format!("element {fe} does not cover the identity")))
        })
        .collect::<Result<_>>()?;
    let anchor = (0..total).map(|i| i % n0).collect();
    let n1 = tg.n1();
    let q = PrincipalBundle::new(tg.gpd.clone(), z.len(), proj, anchor, |i, g| {
        let (fe, h) = (i / n0, i % n0);
        rho.act(n1, fe, tg.mul1(tg.id(tg.inv0(h)), g)) * n0 + tg.s(g)
    })?;
    let qc = q.clone();
    let p1 = e1.bundle().clone();
    let (g1, sp) = (e1.clone(), s.gpd().clone());
    GerbeMorphismFP::new(e1, e2, q, |a, qe, zp| {
        let (rp, gp) = (a / n0, a % n0);
        let (fe, g) = (qe / n0, qe % n0);
        let p1o = z[qc.proj(qe)].0;
        let p2o = z[zp].0;
        let b = g1.fibre_at(p1o, p2o)[0];
        let mut out = None;
        for h in 0..n0 {
            let from = s.action.act0(p2o, tg.inv0(h));
            for rt in sp.hom(from, p1o) {
                let moved = ana.right(fe, t.action.act1(rp, tg.id(g)));
                let ft = rho.act(n1, ana.left(sp.inv(rt), moved), tg.id(h));
                let qt = ft * n0 + tg.mul0(tg.mul0(gp, g), h);
                let pe = rt * n0 + tg.inv0(h);
                let v = move_second(&tg, &qc, qt, &p1, pe, b, tg.id(tg.mul0(gp, g)));
                match out {
                    None => out = Some(v),
                    Some(w) if w != v => {
                        return Err(Error::ChoiceDependenceDetected(format!("β({a},{qe}) depends on (h, ρ̃)")));
                    }
                    _ => {}
                }
            }
        }
        out.ok_or_else(|| Error::MorphismIncompatible(format!("no (h, ρ̃) for β({a},{qe})")))
    })
}

/// The gerbe 2-morphism of a transformation `η: F => F'`: `(f, g) -> (η f, g)`.
pub fn e_2morphism(eta: &[usize], a: &GerbeMorphismFP, b: &GerbeMorphismFP) -> Result<Vec<usize>> {
    let n0 = a.source.tg.n0();
    if a.q().total() != eta.len() * n0 {
        return Err(Error::Shape("transformation does not match the morphism".into()));
    }
    let phi: Vec<usize> = (0..a.q().total()).map(|i| eta[i / n0] * n0 + i % n0).collect();
    crate::gerbe::check_2morphism(a, b, &phi)?;
    Ok(phi)
}

/// The 2-bundle of a gerbe: objects `Y × Γ0`, morphisms `P × Γ0` with
/// `s(p, g) = (y2, g)`, `t(p, g) = (y1, α(p)⁻¹ g)` for `p` over `(y1, y2)`,
/// composition through `μ`, and the right action
/// `R((p, g), γ) = (p ∘ (id_g · γ · id_{t(γ)⁻¹ g⁻¹ α(p)}), g s(γ))`.
pub fn r_object(g: &DiscreteBundleGerbe) -> Result<Principal2Bundle> {
    let tg = g.tg.clone();
    let (n0, n1) = (tg.n0(), tg.n1());
    let p = g.bundle();
    let ny = g.y_count();
    let nm = p.total() * n0;
    let src = (0..nm).map(|i| g.ends(i / n0).1 * n0 + i % n0).collect();
    let tgt = (0..nm).map(|i| g.ends(i / n0).0 * n0 + tg.mul0(tg.inv0(p.anchor(i / n0)), i % n0)).collect();
    let id = (0..ny * n0).map(|o| g.unit(o / n0) * n0 + o % n0).collect();
    let gpd = Arc::new(FiniteGroupoid::from_fn(ny * n0, src, tgt, id, |m2, m1| g.mu(m1 / n0, m2 / n0) * n0 + m1 % n0)?);
    let r0 = (0..ny * n0 * n0).map(|i| (i / n0 / n0) * n0 + tg.mul0((i / n0) % n0, i % n0)).collect();
    let r1 = (0..nm * n1)
        .map(|i| {
            let (m, c) = (i / n1, i % n1);
            let (e, h) = (m / n0, m % n0);
            let tail = tg.mul0(tg.mul0(tg.inv0(tg.t(c)), tg.inv0(h)), p.anchor(e));
            p.act(e, tg.mul1_3(tg.id(h), c, tg.id(tail))) * n0 + tg.mul0(h, tg.s(c))
        })
        .collect();
    let action = GammaGroupoid::new(&tg, gpd, r0, r1)?;
    let pi = (0..ny * n0).map(|o| g.pi()[o / n0]).collect();
    Principal2Bundle::new(tg, action, g.base(), pi)
}

/// `G`, `R(G)`, `E(R(G))`, and the isomorphism `G -> E(R(G))` from the
/// refinement `y -> (y, 1)`, `p -> ((p, α p), α p)`.
pub struct RoundTrip {
    pub r: Arc<Principal2Bundle>,
    pub erg: Arc<DiscreteBundleGerbe>,
    pub iso: GerbeMorphismFP,
}

pub fn roundtrip_gerbe(g: Arc<DiscreteBundleGerbe>) -> Result<RoundTrip> {
    let r = Arc::new(r_object(&g)?);
    let erg = Arc::new(e_object(&r)?);
    let n0 = g.tg.n0();
    let sigma: Vec<usize> = (0..g.y_count()).map(|y| y * n0).collect();
    let psi: Vec<usize> = (0..g.bundle().total())
        .map(|e| {
            let a = g.bundle().anchor(e);
            (e * n0 + a) * n0 + a
        })
        .collect();
    let iso = GerbeMorphismFP::from_refinement(g, erg.clone(), &sigma, &psi)?;
    Ok(RoundTrip { r, erg, iso })
}

/// The 2-bundle morphism of a gerbe morphism between gerbes of 2-bundles,
/// with the class of each element of `Q` in the quotient.
pub struct RMorphism {
    pub morphism: TwoBundleMorphism,
    pub class_of: Vec<usize>,
}

/// `F = Q / Γ0` with `Γ0` acting through `β0(g, q) = β_r((id, g), q)`.
/// The actions are computed on representatives and checked to be constant
/// on classes; the three splitting identities of `β` are checked first.
pub fn r_morphism(a: &GerbeMorphismFP, s: Arc<Principal2Bundle>, t: Arc<Principal2Bundle>) -> Result<RMorphism> {
    if *a.source != e_object(&s)? || *a.target != e_object(&t)? {
        return Err(Error::Shape("morphism is not between the gerbes of these 2-bundles".into()));
    }
    let tg = s.tg.clone();
    let (n0, n1) = (tg.n0(), tg.n1());
    let (g1, g2) = (&*a.source, &*a.target);
    let (q, p1) = (a.q(), g1.bundle());
    let (sp, tp) = (s.gpd().clone(), t.gpd().clone());
    let zi = |x: usize, y: usize| a.z_index(x, y).expect("point of Z");
    // β_l: Q_(p1,p') -> Q_(p2,p') ⊗ P_(p1 p2) in stored form, and its inverse
    let bl = |qe: usize, p2: usize| -> usize {
        let (_, pp) = a.z()[q.proj(qe)];
        a.beta(g2.unit(pp), qe, zi(p2, pp))
    };
    let mut bl_inv: HashMap<(usize, usize), usize> = HashMap::new();
    for qe in 0..q.total() {
        let z = q.proj(qe);
        let (x, _) = a.z()[z];
        for &p2 in g1.ys_over(g1.pi()[x]) {
            bl_inv.insert((bl(qe, p2), z), qe);
        }
    }
    // preimage under β_l of `[x, e]` with `x` at (p2,p') and `e` in P over (p1,p2)
    let bl_pre = |x: usize, e: usize| -> usize {
        let (p1o, p2o) = g1.ends(e);
        let pp = a.z()[q.proj(x)].1;
        let b = a.base1(zi(p1o, pp), zi(p2o, pp));
        let xn = move_second(&tg, q, x, p1, e, b, tg.id(tg.mul0(q.anchor(x), p1.anchor(e))));
        bl_inv[&(xn, zi(p1o, pp))]
    };
    // β_r: P'_(p1',p2') ⊗ Q_(p,p1') -> Q_(p,p2'), using the unit of P_(p,p)
    let br = |ap: usize, qe: usize| -> usize {
        let (pz, _) = a.z()[q.proj(qe)];
        let zp = zi(pz, g2.ends(ap).1);
        let v = a.beta(ap, qe, zp);
        let b = a.base1(q.proj(qe), zp);
        move_second(&tg, q, v, p1, b, g1.unit(pz), tg.id(tg.mul0(q.anchor(v), p1.anchor(b))))
    };
    // stored β rewritten to base b
    let rebase = |v: usize, from: usize, to: usize| move_second(&tg, q, v, p1, from, to, tg.id(tg.mul0(q.anchor(v), p1.anchor(from))));
    for qe in 0..q.total() {
        let z = q.proj(qe);
        let (x, pp) = a.z()[z];
        let m = g1.pi()[x];
        // (i): β(a', q) against both splittings
        for &x2 in g1.ys_over(m) {
            for &pp2 in g2.ys_over(m) {
                let zp = zi(x2, pp2);
                let b = a.base1(z, zp);
                for &ap in g2.fibre_at(pp, pp2) {
                    let direct = a.beta(ap, qe, zp);
                    let l_then_r = br(ap, bl(qe, x2));
                    let r_then_l = rebase(bl(br(ap, qe), x2), a.base1(zi(x, pp2), zp), b);
                    if l_then_r != direct || r_then_l != direct {
                        return Err(Error::BetaPropertyFails("i", format!("at ({ap},{qe},{zp})")));
                    }
                }
                // (ii): β_l through an intermediate point
                for &x3 in g1.ys_over(m) {
                    let u = bl(qe, x2);
                    let w = bl(u, x3);
                    let c12 = a.base1(z, zi(x2, pp));
                    let c23 = a.base1(zi(x2, pp), zi(x3, pp));
                    let r = g1.mu(c23, c12);
                    let lhs = rebase(w, r, a.base1(z, zi(x3, pp)));
                    if lhs != bl(qe, x3) {
                        return Err(Error::BetaPropertyFails("ii", format!("at ({qe},{x2},{x3})")));
                    }
                }
                // (iii): β_r respects μ'
                for &pp3 in g2.ys_over(m) {
                    for &b1 in g2.fibre_at(pp, pp2) {
                        for &b2 in g2.fibre_at(pp2, pp3) {
                            if br(g2.mu(b2, b1), qe) != br(b2, br(b1, qe)) {
                                return Err(Error::BetaPropertyFails("iii", format!("at ({b2},{b1},{qe})")));
                            }
                        }
                    }
                }
            }
        }
    }
    // the quotient by β0
    let b0 = |g: usize, qe: usize| br(tp.id(a.z()[q.proj(qe)].1) * n0 + g, qe);
    let mut uf = UnionFind::<usize>::new(q.total());
    for qe in 0..q.total() {
        let mut seen = Vec::with_capacity(n0);
        for g in 0..n0 {
            let v = b0(g, qe);
            if seen.contains(&v) {
                return Err(Error::QuotientActionIllDefined(format!("β0 not free at {qe}")));
            }
            seen.push(v);
            uf.union(qe, v);
        }
    }
    let (class, nf) = label_classes(&mut uf, q.total());
    let mut rep = vec![UNDEF; nf];
    for (qe, &c) in class.iter().enumerate() {
        if rep[c] == UNDEF {
            rep[c] = qe;
        }
    }
    let al_q = |qe: usize| a.z()[q.proj(qe)].0;
    let ar_q = |qe: usize| t.action.act0(a.z()[q.proj(qe)].1, q.anchor(qe));
    let ill = |s: String| Err(Error::QuotientActionIllDefined(s));
    let mut al = vec![UNDEF; nf];
    let mut ar = vec![UNDEF; nf];
    let mut left: HashMap<(usize, usize), usize> = HashMap::new();
    let mut right: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rho = vec![UNDEF; nf * n1];
    for qe in 0..q.total() {
        let c = class[qe];
        for (slot, v) in [(&mut al[c], al_q(qe)), (&mut ar[c], ar_q(qe))] {
            if *slot != UNDEF && *slot != v {
                return ill(format!("anchor not constant on class {c}"));
            }
            *slot = v;
        }
        for &chi in sp.out_of(al_q(qe)) {
            let v = class[bl_pre(qe, chi * n0)];
            if *left.entry((chi, c)).or_insert(v) != v {
                return ill(format!("left action depends on the representative of {c}"));
            }
        }
        for &eta in tp.incoming(ar_q(qe)) {
            let e = t.action.act1(eta, tg.id(tg.inv0(q.anchor(qe))));
            let v = class[br(e * n0, qe)];
            if *right.entry((c, eta)).or_insert(v) != v {
                return ill(format!("right action depends on the representative of {c}"));
            }
        }
        for gm in 0..n1 {
            let tgm = tg.t(gm);
            let moved = q.act(qe, tg.mul1_3(tg.id(q.anchor(qe)), gm, tg.id(tg.inv0(tgm))));
            let e = sp.id(s.action.act0(al_q(qe), tgm)) * n0 + tgm;
            let v = class[bl_pre(moved, e)];
            let slot = &mut rho[c * n1 + gm];
            if *slot != UNDEF && *slot != v {
                return ill(format!("Γ1-action depends on the representative of {c}"));
            }
            *slot = v;
        }
    }
    let ana = Anafunctor::new(sp, tp, al, ar, |f, chi| left[&(chi, f)], |f, eta| right[&(f, eta)])?;
    let morphism = TwoBundleMorphism::new(s, t, ana, GammaAction { rho })?;
    Ok(RMorphism { morphism, class_of: class })
}

/// Checks `R(E(F)) ≅ F` through `f -> [(f, 1)]`, as a transformation that
/// also commutes with the Γ1-actions. Returns the map.
pub fn check_r_of_e(f: &TwoBundleMorphism, ref_f: &RMorphism) -> Result<Vec<usize>> {
    let tg = &f.source.tg;
    let (n0, n1) = (tg.n0(), tg.n1());
    let map: Vec<usize> = (0..f.ana.total()).map(|e| ref_f.class_of[e * n0]).collect();
    crate::anafunctor::check_transformation(&f.ana, &ref_f.morphism.ana, &map)?;
    for e in 0..f.ana.total() {
        for g in 0..n1 {
            if map[f.rho.act(n1, e, g)] != ref_f.morphism.rho.act(n1, map[e], g) {
                return Err(Error::MorphismIncompatible(format!("Γ1-action not preserved at ({e},{g})")));
            }
        }
    }
    Ok(map)
}

/// A strictly equivariant isomorphism of total groupoids over the base,
/// found by choosing images of orbit representatives.
pub fn find_strict_isomorphism(a: &Principal2Bundle, b: &Principal2Bundle) -> Option<GroupoidFunctor> {
    let (x, y) = (&**a.gpd(), &**b.gpd());
    if x.n_obj() != y.n_obj() || x.n_mor() != y.n_mor() {
        return None;
    }
    search_equivariant(a, b, true)
}

/// A strictly equivariant functor over the base that is a weak
/// equivalence, so a 1-isomorphism `a -> b` in the bicategory.
pub fn find_equivariant_equivalence(a: &Principal2Bundle, b: &Principal2Bundle) -> Option<GroupoidFunctor> {
    search_equivariant(a, b, false)
}

fn search_equivariant(a: &Principal2Bundle, b: &Principal2Bundle, injective: bool) -> Option<GroupoidFunctor> {
    let (x, y) = (&**a.gpd(), &**b.gpd());
    if a.base != b.base || a.tg.gpd != b.tg.gpd {
        return None;
    }
    let ends = |g: &FiniteGroupoid| -> (Vec<usize>, Vec<usize>) { (0..g.n_mor()).map(|m| (g.src(m), g.tgt(m))).unzip() };
    let mut st = IsoSearch {
        a,
        b,
        x,
        y,
        injective,
        obj: vec![UNDEF; x.n_obj()],
        mor: vec![UNDEF; x.n_mor()],
        obj_used: vec![false; y.n_obj()],
        mor_used: vec![false; y.n_mor()],
        trail: Vec::new(),
        ends: (ends(x), ends(y)),
    };
    st.search().then_some(GroupoidFunctor { obj_map: st.obj, mor_map: st.mor })
}

enum Slot {
    Obj(usize),
    Mor(usize),
}

/// Backtracking over images of single objects and morphisms; each choice
/// is closed under the Γ-action, inverses and composition with what is
/// already assigned, so a complete assignment is an equivariant functor.
struct IsoSearch<'a> {
    a: &'a Principal2Bundle,
    b: &'a Principal2Bundle,
    x: &'a FiniteGroupoid,
    y: &'a FiniteGroupoid,
    injective: bool,
    obj: Vec<usize>,
    mor: Vec<usize>,
    obj_used: Vec<bool>,
    mor_used: Vec<bool>,
    trail: Vec<Slot>,
    ends: ((Vec<usize>, Vec<usize>), (Vec<usize>, Vec<usize>)),
}

impl IsoSearch<'_> {
    fn search(&mut self) -> bool {
        let (x, y) = (self.x, self.y);
        // extend along a morphism out of an assigned object first
        if let Some(m) = (0..self.mor.len()).find(|&m| self.mor[m] == UNDEF && self.obj[x.src(m)] != UNDEF) {
            let cands: Vec<usize> = y.out_of(self.obj[x.src(m)]).to_vec();
            for c in cands {
                let mark = self.trail.len();
                if self.close(vec![], vec![(m, c)]) && self.search() {
                    return true;
                }
                self.undo(mark);
            }
            return false;
        }
        if let Some(o) = (0..self.obj.len()).find(|&o| self.obj[o] == UNDEF) {
            for c in 0..y.n_obj() {
                if self.b.pi[c] != self.a.pi[o] {
                    continue;
                }
                let mark = self.trail.len();
                if self.close(vec![(o, c)], vec![]) && self.search() {
                    return true;
                }
                self.undo(mark);
            }
            return false;
        }
        self.injective || {
            let ((xs, xt), (ys, yt)) = &self.ends;
            weak_equivalence_check(x.n_obj(), xs, xt, y.n_obj(), ys, yt, &self.obj, &self.mor).is_none()
        }
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().expect("trail entry") {
                Slot::Obj(o) => {
                    self.obj_used[self.obj[o]] = false;
                    self.obj[o] = UNDEF;
                }
                Slot::Mor(m) => {
                    self.mor_used[self.mor[m]] = false;
                    self.mor[m] = UNDEF;
                }
            }
        }
    }

    fn close(&mut self, mut objs: Vec<(usize, usize)>, mut mors: Vec<(usize, usize)>) -> bool {
        let (x, y) = (self.x, self.y);
        let (n0, n1) = (self.a.tg.n0(), self.a.tg.n1());
        loop {
            if let Some((o, c)) = objs.pop() {
                if self.obj[o] != UNDEF {
                    if self.obj[o] != c {
                        return false;
                    }
                    continue;
                }
                if self.b.pi[c] != self.a.pi[o] || (self.injective && self.obj_used[c]) {
                    return false;
                }
                self.obj[o] = c;
                self.obj_used[c] = true;
                self.trail.push(Slot::Obj(o));
                for g in 0..n0 {
                    objs.push((self.a.action.act0(o, g), self.b.action.act0(c, g)));
                }
                mors.push((x.id(o), y.id(c)));
            } else if let Some((m, c)) = mors.pop() {
                if self.mor[m] != UNDEF {
                    if self.mor[m] != c {
                        return false;
                    }
                    continue;
                }
                if self.injective && self.mor_used[c] {
                    return false;
                }
                self.mor[m] = c;
                self.mor_used[c] = true;
                self.trail.push(Slot::Mor(m));
                objs.push((x.src(m), y.src(c)));
                objs.push((x.tgt(m), y.tgt(c)));
                mors.push((x.inv(m), y.inv(c)));
                for g in 0..n1 {
                    mors.push((self.a.action.act1(m, g), self.b.action.act1(c, g)));
                }
                for &m2 in x.out_of(x.tgt(m)) {
                    let c2 = self.mor[m2];
                    if c2 != UNDEF {
                        match y.try_compose(c2, c) {
                            Some(v) => mors.push((x.compose(m2, m), v)),
                            None => return false,
                        }
                    }
                }
                for &m0 in x.incoming(x.src(m)) {
                    let c0 = self.mor[m0];
                    if c0 != UNDEF {
                        match y.try_compose(c, c0) {
                            Some(v) => mors.push((x.compose(m, m0), v)),
                            None => return false,
                        }
                    }
                }
            } else {
                return true;
            }
        }
    }
}

/// All Γ-equivariant transformations `F => G`, up to `limit`: orbits of the
/// joint left, right and Γ1 actions are seeded independently.
pub fn all_equivariant_transformations(f: &TwoBundleMorphism, g: &TwoBundleMorphism, limit: usize) -> Vec<Vec<usize>> {
    if f.ana.x != g.ana.x || f.ana.y != g.ana.y {
        return Vec::new();
    }
    let n1 = f.source.tg.n1();
    let (fa, ga) = (&f.ana, &g.ana);
    let n = fa.total();
    let moves = |e: usize| -> Vec<(usize, Box<dyn Fn(&Anafunctor, &GammaAction, usize) -> usize>)> {
        let mut v: Vec<(usize, Box<dyn Fn(&Anafunctor, &GammaAction, usize) -> usize>)> = Vec::new();
        for &c in fa.x.out_of(fa.al(e)) {
            v.push((fa.left(c, e), Box::new(move |a: &Anafunctor, _: &GammaAction, t| a.left(c, t))));
        }
        for &h in fa.y.incoming(fa.ar(e)) {
            v.push((fa.right(e, h), Box::new(move |a: &Anafunctor, _: &GammaAction, t| a.right(t, h))));
        }
        for k in 0..n1 {
            v.push((f.rho.act(n1, e, k), Box::new(move |_: &Anafunctor, r: &GammaAction, t| r.act(n1, t, k))));
        }
        v
    };
    let mut seen = vec![false; n];
    let mut per_orbit: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
    for seed in 0..n {
        if seen[seed] {
            continue;
        }
        let mut options = Vec::new();
        let mut orbit = Vec::new();
        for c in 0..ga.total() {
            if ga.al(c) != fa.al(seed) || ga.ar(c) != fa.ar(seed) {
                continue;
            }
            let mut part: HashMap<usize, usize> = HashMap::from([(seed, c)]);
            let mut stack = vec![seed];
            let mut ok = true;
            while let Some(e) = stack.pop() {
                let img = part[&e];
                for (to, mv) in moves(e) {
                    let v = mv(ga, &g.rho, img);
                    match part.get(&to) {
                        Some(&w) if w != v => ok = false,
                        Some(_) => {}
                        None => {
                            part.insert(to, v);
                            stack.push(to);
                        }
                    }
                }
                if !ok {
                    break;
                }
            }
            if orbit.is_empty() {
                orbit = part.keys().copied().collect();
            }
            if ok {
                let mut v: Vec<_> = part.into_iter().collect();
                v.sort_unstable();
                options.push(v);
            }
        }
        if options.is_empty() {
            return Vec::new();
        }
        for e in orbit {
            seen[e] = true;
        }
        per_orbit.push(options);
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; per_orbit.len()];
    loop {
        let mut map = vec![UNDEF; n];
        for (k, opts) in per_orbit.iter().enumerate() {
            for &(x, v) in &opts[choice[k]] {
                map[x] = v;
            }
        }
        let rho_ok = (0..n).all(|e| (0..n1).all(|k| map[f.rho.act(n1, e, k)] == g.rho.act(n1, map[e], k)));
        if rho_ok && crate::anafunctor::check_transformation(fa, ga, &map).is_ok() {
            out.push(map);
            if out.len() >= limit {
                return out;
            }
        }
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < per_orbit[k].len() {
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
