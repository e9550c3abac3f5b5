//! Cover nerves, Čech cocycles in degrees 0 and 1, coboundary witnesses,
//! exhaustive class enumeration, pushforward along 2-group homomorphisms
//! and an abelian cochain oracle.
//!
//! Cocycles are normalized: data lives on strictly increasing tuples of
//! the vertex order only.

use std::collections::HashMap;
use std::sync::Arc;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::FiniteGroup;
use crate::bundle::{label_classes, PrincipalBundle};
use crate::error::{check_index, Error, Result};
use crate::groupoid::FiniteGroupoid;
use crate::twogroup::{TwoGroup, TwoGroupHom};

/// Default cap on raw cocycle candidates.
pub const DEFAULT_CAP: u128 = 10_000_000;

/// A face-closed simplicial complex up to dimension 3 on `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverNerve {
    n: usize,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    tetras: Vec<[usize; 4]>,
    edge_index: HashMap<(usize, usize), usize>,
    tri_index: HashMap<[usize; 3], usize>,
    /// Edge indices `ab, bc, ac` of each triangle.
    tri_edges: Vec<[usize; 3]>,
    /// Triangle indices `abc, abd, acd, bcd` of each tetra.
    tet_tris: Vec<[usize; 4]>,
    vertex_edges: Vec<Vec<usize>>,
    vertex_tris: Vec<Vec<usize>>,
    edge_tris: Vec<Vec<usize>>,
}

impl CoverNerve {
    /// Sorts simplices lexicographically and checks vertex order and face
    /// closure.
    pub fn new(n: usize, edges: Vec<[usize; 2]>, triangles: Vec<[usize; 3]>, tetras: Vec<[usize; 4]>) -> Result<Self> {
        fn increasing(s: &[usize], n: usize) -> Result<()> {
            for &v in s {
                check_index(v, n)?;
            }
            if s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!("simplex {s:?} is not strictly increasing")));
            }
            Ok(())
        }
        let mut edges = edges;
        let mut triangles = triangles;
        let mut tetras = tetras;
        for e in &edges {
            increasing(e, n)?;
        }
        for t in &triangles {
            increasing(t, n)?;
        }
        for q in &tetras {
            increasing(q, n)?;
        }
        edges.sort_unstable();
        triangles.sort_unstable();
        tetras.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Shape(format!("edge {:?} listed twice", w[0])));
            }
        }
        for w in triangles.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Shape(format!("triangle {:?} listed twice", w[0])));
            }
        }
        for w in tetras.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Shape(format!("tetra {:?} listed twice", w[0])));
            }
        }
        let edge_index: HashMap<(usize, usize), usize> = edges.iter().enumerate().map(|(i, e)| ((e[0], e[1]), i)).collect();
        let tri_index: HashMap<[usize; 3], usize> = triangles.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for &[a, b, c] in &triangles {
            let get = |x, y| edge_index.get(&(x, y)).copied().ok_or(Error::FaceClosureViolated(vec![a, b, c]));
            tri_edges.push([get(a, b)?, get(b, c)?, get(a, c)?]);
        }
        let mut tet_tris = Vec::with_capacity(tetras.len());
        for &[a, b, c, d] in &tetras {
            let get = |t: [usize; 3]| tri_index.get(&t).copied().ok_or(Error::FaceClosureViolated(vec![a, b, c, d]));
            tet_tris.push([get([a, b, c])?, get([a, b, d])?, get([a, c, d])?, get([b, c, d])?]);
        }
        let mut vertex_edges = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            vertex_edges[e[0]].push(i);
            vertex_edges[e[1]].push(i);
        }
        let mut vertex_tris = vec![Vec::new(); n];
        let mut edge_tris = vec![Vec::new(); edges.len()];
        for (i, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_tris[v].push(i);
            }
            for &e in &tri_edges[i] {
                edge_tris[e].push(i);
            }
        }
        Ok(CoverNerve { n, edges, triangles, tetras, edge_index, tri_index, tri_edges, tet_tris, vertex_edges, vertex_tris, edge_tris })
    }

    pub fn vertices(&self) -> usize {
        self.n
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }
    pub fn tetras(&self) -> &[[usize; 4]] {
        &self.tetras
    }
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a, b)).copied()
    }
    pub fn triangle_index(&self, t: [usize; 3]) -> Option<usize> {
        self.tri_index.get(&t).copied()
    }
    /// Edge indices `ab, bc, ac` of triangle `i`.
    pub fn triangle_edges(&self, i: usize) -> [usize; 3] {
        self.tri_edges[i]
    }

    /// Three vertices, three edges, no triangle.
    pub fn circle3() -> Self {
        Self::new(3, vec![[0, 1], [1, 2], [0, 2]], vec![], vec![]).unwrap()
    }

    /// Boundary of the tetrahedron.
    pub fn sphere_tetra() -> Self {
        let (e, t, _) = simplex_faces(4);
        Self::new(4, e, t, vec![]).unwrap()
    }

    /// The full 3-simplex.
    pub fn simplex3() -> Self {
        let (e, t, q) = simplex_faces(4);
        Self::new(4, e, t, q).unwrap()
    }

    /// The 7-vertex minimal triangulation of the torus: triangles
    /// `{i, i+1, i+3}` and `{i, i+2, i+3}` mod 7.
    pub fn torus_min() -> Self {
        let mut tris = Vec::new();
        for i in 0..7 {
            for d in [[0, 1, 3], [0, 2, 3]] {
                let mut t = [(i + d[0]) % 7, (i + d[1]) % 7, (i + d[2]) % 7];
                t.sort_unstable();
                tris.push(t);
            }
        }
        let mut edges = Vec::new();
        for a in 0..7 {
            for b in a + 1..7 {
                edges.push([a, b]);
            }
        }
        Self::new(7, edges, tris, vec![]).unwrap()
    }

    /// A single vertex.
    pub fn point() -> Self {
        Self::new(1, vec![], vec![], vec![]).unwrap()
    }

    pub fn fixture(name: &str) -> Option<Self> {
        match name {
            "circle3" => Some(Self::circle3()),
            "sphere_tetra" => Some(Self::sphere_tetra()),
            "simplex3" => Some(Self::simplex3()),
            "torus_min" => Some(Self::torus_min()),
            "point" => Some(Self::point()),
            _ => None,
        }
    }

    pub const FIXTURES: [&'static str; 4] = ["circle3", "sphere_tetra", "simplex3", "torus_min"];
}

fn simplex_faces(n: usize) -> (Vec<[usize; 2]>, Vec<[usize; 3]>, Vec<[usize; 4]>) {
    let mut e = Vec::new();
    let mut t = Vec::new();
    let mut q = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            e.push([a, b]);
            for c in b + 1..n {
                t.push([a, b, c]);
                for d in c + 1..n {
                    q.push([a, b, c, d]);
                }
            }
        }
    }
    (e, t, q)
}

/// A finite set covered by subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteCover {
    pub points: usize,
    pub sets: Vec<Vec<usize>>,
}

impl ConcreteCover {
    /// Sorts each set and checks that the sets cover.
    pub fn new(points: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        let mut sets = sets;
        let mut hit = vec![false; points];
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
            for &x in s.iter() {
                check_index(x, points)?;
                hit[x] = true;
            }
        }
        if let Some(x) = hit.iter().position(|h| !h) {
            return Err(Error::NotACover(x));
        }
        Ok(ConcreteCover { points, sets })
    }

    /// `U_i ∩ U_j ∩ ...`.
    pub fn intersection(&self, idx: &[usize]) -> Vec<usize> {
        let mut out = self.sets[idx[0]].clone();
        for &i in &idx[1..] {
            out.retain(|x| self.sets[i].binary_search(x).is_ok());
        }
        out
    }

    /// Simplices are the index tuples with nonempty intersection.
    pub fn nerve(&self) -> CoverNerve {
        let n = self.sets.len();
        let ne = |idx: &[usize]| !self.intersection(idx).is_empty();
        let (e, t, q) = simplex_faces(n);
        CoverNerve::new(
            n,
            e.into_iter().filter(|s| ne(s)).collect(),
            t.into_iter().filter(|s| ne(s)).collect(),
            q.into_iter().filter(|s| ne(s)).collect(),
        )
        .expect("nerve of a cover is face-closed")
    }

    /// The star cover of the boundary of the tetrahedron: points are its
    /// 14 cells, set `v` holds the cells containing vertex `v`.
    pub fn sphere_star() -> Self {
        let mut cells: Vec<Vec<usize>> = Vec::new();
        for mask in 1u32..16 {
            if mask != 15 {
                cells.push((0..4).filter(|&v| mask & (1 << v) != 0).collect());
            }
        }
        let sets = (0..4).map(|v| (0..cells.len()).filter(|&c| cells[c].contains(&v)).collect()).collect();
        Self::new(cells.len(), sets).unwrap()
    }
}

/// A degree-0 cocycle: a functor from the Čech groupoid in components.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct H0Cocycle {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

/// A degree-1 cocycle: `f` on edges, `g` on triangles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct H1Cocycle {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

/// A coboundary witness: `h` on vertices, `s` on edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness1 {
    pub h: Vec<usize>,
    pub s: Vec<usize>,
}

pub fn validate_h0(k: &CoverNerve, gamma: &FiniteGroupoid, c: &H0Cocycle) -> Result<()> {
    if c.f.len() != k.n || c.g.len() != k.edges.len() {
        return Err(Error::Shape("cocycle data does not match the nerve".into()));
    }
    for &x in &c.f {
        check_index(x, gamma.n_obj())?;
    }
    for (i, &[a, b]) in k.edges.iter().enumerate() {
        check_index(c.g[i], gamma.n_mor())?;
        if gamma.src(c.g[i]) != c.f[a] || gamma.tgt(c.g[i]) != c.f[b] {
            return Err(Error::SourceTargetMismatch(format!("edge ({a},{b})")));
        }
    }
    for (i, t) in k.triangles.iter().enumerate() {
        let [ab, bc, ac] = k.tri_edges[i];
        if gamma.compose(c.g[bc], c.g[ab]) != c.g[ac] {
            return Err(Error::CocycleConditionFails(t.to_vec()));
        }
    }
    Ok(())
}

/// All degree-0 cocycles, in lexicographic order of `(f, g)`.
pub fn enumerate_h0(k: &CoverNerve, gamma: &FiniteGroupoid, cap: u128) -> Result<Vec<H0Cocycle>> {
    let raw = (gamma.n_obj() as u128).saturating_pow(k.n as u32);
    if raw > cap {
        return Err(Error::SizeLimitExceeded { what: "H0 object assignments".into(), needed: raw, cap });
    }
    let mut out = Vec::new();
    let mut f = vec![0; k.n];
    loop {
        let mut g = vec![0; k.edges.len()];
        h0_edges(k, gamma, &f, &mut g, 0, &mut out);
        // next f
        let mut i = 0;
        while i < k.n {
            f[i] += 1;
            if f[i] < gamma.n_obj() {
                break;
            }
            f[i] = 0;
            i += 1;
        }
        if i == k.n {
            break;
        }
    }
    out.sort();
    Ok(out)
}

fn h0_edges(k: &CoverNerve, gamma: &FiniteGroupoid, f: &[usize], g: &mut Vec<usize>, e: usize, out: &mut Vec<H0Cocycle>) {
    if e == k.edges.len() {
        out.push(H0Cocycle { f: f.to_vec(), g: g.clone() });
        return;
    }
    let [a, b] = k.edges[e];
    let cands: Vec<usize> = gamma.hom(f[a], f[b]).collect();
    for m in cands {
        g[e] = m;
        let ok = k.edge_tris[e].iter().all(|&t| {
            let [ab, bc, ac] = k.tri_edges[t];
            ab.max(bc).max(ac) != e || gamma.compose(g[bc], g[ab]) == g[ac]
        });
        if ok {
            h0_edges(k, gamma, f, g, e + 1, out);
        }
    }
}

/// Degree-0 classes under natural transformations: returns the class label
/// of every cocycle from [`enumerate_h0`] and the number of classes.
pub fn h0_classes(k: &CoverNerve, gamma: &FiniteGroupoid, cap: u128) -> Result<(Vec<H0Cocycle>, Vec<usize>, usize)> {
    let all = enumerate_h0(k, gamma, cap)?;
    let index: HashMap<&H0Cocycle, usize> = all.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut uf = UnionFind::<usize>::new(all.len());
    for (i, c) in all.iter().enumerate() {
        for v in 0..k.n {
            for &h in gamma.out_of(c.f[v]) {
                // h: f_v -> f'_v, g'_e = h_b ∘ g_e ∘ h_a^-1
                let mut d = c.clone();
                d.f[v] = gamma.tgt(h);
                for &e in &k.vertex_edges[v] {
                    let [a, _] = k.edges[e];
                    d.g[e] = if a == v { gamma.compose(c.g[e], gamma.inv(h)) } else { gamma.compose(h, c.g[e]) };
                }
                uf.union(i, index[&d]);
            }
        }
    }
    let (labels, n) = label_classes(&mut uf, all.len());
    Ok((all, labels, n))
}

/// Checks source/target conditions on triangles and the tetra condition
/// `g_αβδ ∘ (g_βγδ · id_{f_αβ}) = g_αγδ ∘ (id_{f_γδ} · g_αβγ)`.
pub fn validate_h1(k: &CoverNerve, tg: &TwoGroup, c: &H1Cocycle) -> Result<()> {
    if c.f.len() != k.edges.len() || c.g.len() != k.triangles.len() {
        return Err(Error::Shape("cocycle data does not match the nerve".into()));
    }
    for &x in &c.f {
        check_index(x, tg.n0())?;
    }
    for &m in &c.g {
        check_index(m, tg.n1())?;
    }
    for (i, t) in k.triangles.iter().enumerate() {
        let [ab, bc, ac] = k.tri_edges[i];
        if tg.s(c.g[i]) != tg.mul0(c.f[bc], c.f[ab]) || tg.t(c.g[i]) != c.f[ac] {
            return Err(Error::SourceTargetMismatch(format!("triangle {t:?}")));
        }
    }
    for (i, q) in k.tetras.iter().enumerate() {
        if !tetra_holds(k, tg, &c.f, &c.g, i) {
            return Err(Error::CocycleConditionFails(q.to_vec()));
        }
    }
    Ok(())
}

#[inline]
fn tetra_holds(k: &CoverNerve, tg: &TwoGroup, f: &[usize], g: &[usize], q: usize) -> bool {
    let [a, b, c, d] = k.tetras[q];
    let [abc, abd, acd, bcd] = k.tet_tris[q];
    let f_ab = f[k.edge_index[&(a, b)]];
    let f_cd = f[k.edge_index[&(c, d)]];
    let lhs = tg.comp(g[abd], tg.mul1(g[bcd], tg.id(f_ab)));
    let rhs = tg.comp(g[acd], tg.mul1(tg.id(f_cd), g[abc]));
    lhs == rhs
}

/// The cocycle `c'` determined by a witness: `f'_αβ = s(s_αβ) h_α^-1` and
/// `g'_αβγ = (s_αγ^-1 ∘ L) · id_{h_α^-1}` with
/// `L = (id_{h_γ} · g_αβγ) ∘ (s_βγ · id_{f_αβ}) ∘ (id_{f'_βγ} · s_αβ)`.
pub fn apply_witness(k: &CoverNerve, tg: &TwoGroup, c: &H1Cocycle, w: &Witness1) -> Result<H1Cocycle> {
    if w.h.len() != k.n || w.s.len() != k.edges.len() {
        return Err(Error::Shape("witness does not match the nerve".into()));
    }
    let mut f = Vec::with_capacity(k.edges.len());
    for (i, &[a, b]) in k.edges.iter().enumerate() {
        check_index(w.s[i], tg.n1())?;
        check_index(w.h[a], tg.n0())?;
        check_index(w.h[b], tg.n0())?;
        if tg.t(w.s[i]) != tg.mul0(w.h[b], c.f[i]) {
            return Err(Error::SourceTargetMismatch(format!("witness edge ({a},{b})")));
        }
        f.push(tg.mul0(tg.s(w.s[i]), tg.inv0(w.h[a])));
    }
    let g = (0..k.triangles.len()).map(|t| g_prime(k, tg, &c.f, &f, &c.g, &w.h, &w.s, t)).collect();
    Ok(H1Cocycle { f, g })
}

#[inline]
fn g_prime(k: &CoverNerve, tg: &TwoGroup, f: &[usize], fp: &[usize], g: &[usize], h: &[usize], s: &[usize], t: usize) -> usize {
    let [a, _, c] = k.triangles[t];
    let [ab, bc, ac] = k.tri_edges[t];
    let l1 = tg.mul1(tg.id(fp[bc]), s[ab]);
    let l2 = tg.mul1(s[bc], tg.id(f[ab]));
    let l3 = tg.mul1(tg.id(h[c]), g[t]);
    let l = tg.comp(l3, tg.comp(l2, l1));
    tg.mul1(tg.comp(tg.vinv(s[ac]), l), tg.id(tg.inv0(h[a])))
}

/// Exhaustive search for a witness `c ~ c'`.
pub fn are_equivalent_h1(k: &CoverNerve, tg: &TwoGroup, c: &H1Cocycle, c2: &H1Cocycle) -> Option<Witness1> {
    let mut h = vec![0; k.n];
    loop {
        let mut s = vec![0; k.edges.len()];
        if witness_edges(k, tg, c, c2, &h, &mut s, 0) {
            return Some(Witness1 { h, s });
        }
        let mut i = 0;
        while i < k.n {
            h[i] += 1;
            if h[i] < tg.n0() {
                break;
            }
            h[i] = 0;
            i += 1;
        }
        if i == k.n {
            return None;
        }
    }
}

fn witness_edges(k: &CoverNerve, tg: &TwoGroup, c: &H1Cocycle, c2: &H1Cocycle, h: &[usize], s: &mut Vec<usize>, e: usize) -> bool {
    if e == k.edges.len() {
        return true;
    }
    let [a, b] = k.edges[e];
    let cands: Vec<usize> = tg.homs(tg.mul0(c2.f[e], h[a]), tg.mul0(h[b], c.f[e])).collect();
    for m in cands {
        s[e] = m;
        let ok = k.edge_tris[e].iter().all(|&t| {
            let te = k.tri_edges[t];
            te[0].max(te[1]).max(te[2]) != e || g_prime(k, tg, &c.f, &c2.f, &c.g, h, s, t) == c2.g[t]
        });
        if ok && witness_edges(k, tg, c, c2, h, s, e + 1) {
            return true;
        }
    }
    false
}

/// Componentwise image under a strict homomorphism.
pub fn push_cocycle(c: &H1Cocycle, f: &TwoGroupHom) -> H1Cocycle {
    H1Cocycle { f: c.f.iter().map(|&x| f.phi.apply(x)).collect(), g: c.g.iter().map(|&m| f.psi.apply(m)).collect() }
}

/// Index layout of reduced cocycles: edge data in a transversal `R` of
/// `im t`, triangle data by position in its hom-set, mixed radix with
/// edges first.
struct Layout {
    rset: Vec<usize>,
    rdigit: Vec<usize>,
    rep: Vec<usize>,
    k: usize,
    wf: Vec<u64>,
    wg: Vec<u64>,
    raw: u64,
    /// `homs[x * n0 + y]`, the morphisms `x -> y` in order.
    homs: Vec<Vec<usize>>,
    digit_of: Vec<usize>,
    n0: usize,
}

impl Layout {
    fn new(k: &CoverNerve, tg: &TwoGroup, cap: u128) -> Result<Self> {
        let n0 = tg.n0();
        let im: Vec<usize> = tg.cm.t.image(n0);
        let mut rep = vec![usize::MAX; n0];
        let mut rset = Vec::new();
        for x in 0..n0 {
            if rep[x] == usize::MAX {
                rset.push(x);
                for &i in &im {
                    rep[tg.mul0(x, i)] = x;
                }
            }
        }
        let mut rdigit = vec![usize::MAX; n0];
        for (i, &r) in rset.iter().enumerate() {
            rdigit[r] = i;
        }
        let kk = tg.hom_size();
        let raw = (rset.len() as u128)
            .checked_pow(k.edges.len() as u32)
            .and_then(|a| a.checked_mul((kk as u128).checked_pow(k.triangles.len() as u32)?))
            .unwrap_or(u128::MAX);
        if raw > cap {
            return Err(Error::SizeLimitExceeded { what: "reduced H1 cocycle candidates".into(), needed: raw, cap });
        }
        let mut wg = Vec::with_capacity(k.triangles.len());
        let mut w = 1u64;
        for _ in 0..k.triangles.len() {
            wg.push(w);
            w *= kk as u64;
        }
        let mut wf = Vec::with_capacity(k.edges.len());
        for _ in 0..k.edges.len() {
            wf.push(w);
            w *= rset.len() as u64;
        }
        let mut homs = Vec::with_capacity(n0 * n0);
        let mut digit_of = vec![0; tg.n1()];
        for x in 0..n0 {
            for y in 0..n0 {
                let hs: Vec<usize> = tg.homs(x, y).collect();
                for (i, &m) in hs.iter().enumerate() {
                    digit_of[m] = i;
                }
                homs.push(hs);
            }
        }
        Ok(Layout { rset, rdigit, rep, k: kk, wf, wg, raw: w, homs, digit_of, n0 })
    }

    fn encode(&self, c: &H1Cocycle) -> u64 {
        let mut i = 0;
        for (e, &x) in c.f.iter().enumerate() {
            i += self.rdigit[x] as u64 * self.wf[e];
        }
        for (t, &m) in c.g.iter().enumerate() {
            i += self.digit_of[m] as u64 * self.wg[t];
        }
        i
    }

    fn decode(&self, k: &CoverNerve, tg: &TwoGroup, idx: u64, c: &mut H1Cocycle) {
        let r = self.rset.len() as u64;
        for e in 0..c.f.len() {
            c.f[e] = self.rset[((idx / self.wf[e]) % r) as usize];
        }
        for t in 0..c.g.len() {
            let [ab, bc, ac] = k.tri_edges[t];
            let d = ((idx / self.wg[t]) % self.k as u64) as usize;
            let s = tg.mul0(c.f[bc], c.f[ab]);
            c.g[t] = self.homs[s * self.n0 + c.f[ac]][d];
        }
    }
}

/// Result of an exhaustive class computation.
pub struct H1Classes {
    pub nerve: CoverNerve,
    pub tg: Arc<TwoGroup>,
    /// Raw size of the reduced candidate space.
    pub raw_size: u128,
    /// Number of valid reduced cocycles.
    pub reduced_count: usize,
    pub class_count: usize,
    /// Least reduced cocycle of each class, ordered by class label.
    pub representatives: Vec<H1Cocycle>,
    layout: Layout,
    valid: Vec<u64>,
    class: Vec<u32>,
}

impl H1Classes {
    /// Class label of any valid cocycle.
    pub fn class_of(&self, c: &H1Cocycle) -> Result<usize> {
        validate_h1(&self.nerve, &self.tg, c)?;
        let r = reduce(&self.nerve, &self.tg, &self.layout, c);
        let idx = self.layout.encode(&r);
        let pos = self.valid.binary_search(&idx).map_err(|_| Error::CocycleConditionFails(vec![]))?;
        Ok(self.class[pos] as usize)
    }

    /// Reduced valid cocycles with their class labels, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (H1Cocycle, usize)> + '_ {
        let mut c = H1Cocycle { f: vec![0; self.nerve.edges.len()], g: vec![0; self.nerve.triangles.len()] };
        self.valid.iter().zip(&self.class).map(move |(&i, &k)| {
            self.layout.decode(&self.nerve, &self.tg, i, &mut c);
            (c.clone(), k as usize)
        })
    }
}

/// Moves every edge value into the transversal with an edge-only witness.
fn reduce(k: &CoverNerve, tg: &TwoGroup, lay: &Layout, c: &H1Cocycle) -> H1Cocycle {
    let s: Vec<usize> = c.f.iter().map(|&x| lay.homs[lay.rep[x] * lay.n0 + x][0]).collect();
    apply_witness(k, tg, c, &Witness1 { h: vec![0; k.n], s }).expect("reduction witness")
}

/// All classes of degree-1 cocycles on `k` with values in `tg`.
///
/// Every class contains a cocycle with edge values in a transversal of
/// `im t`, so only those are generated. Orbits are joined by two kinds of
/// local moves: a generator of `Γ0` at one vertex followed by reduction of
/// the edges at that vertex, and a generator of `ker t` on one edge.
pub fn enumerate_h1_classes(k: &CoverNerve, tg: Arc<TwoGroup>, cap: u128) -> Result<H1Classes> {
    let layout = Layout::new(k, &tg, cap)?;
    let valid = enumerate_reduced(k, &tg, &layout);
    let n = valid.len();
    let compact: Option<Vec<u32>> = (layout.raw <= 1 << 26).then(|| {
        let mut m = vec![u32::MAX; layout.raw as usize];
        for (i, &v) in valid.iter().enumerate() {
            m[v as usize] = i as u32;
        }
        m
    });
    let lookup = |idx: u64| -> u32 {
        match &compact {
            Some(m) => m[idx as usize],
            None => valid.binary_search(&idx).map(|p| p as u32).unwrap_or(u32::MAX),
        }
    };
    let vgens = tg.g0.generators();
    let kernel: Vec<usize> = tg.cm.t.kernel();
    let kgens = kernel_generators(&tg.cm.h, &kernel);
    let mut uf = UnionFind::<u32>::new(n);
    const CHUNK: usize = 1 << 15;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let pairs: Vec<(u32, u32)> = (start..end)
            .into_par_iter()
            .map_init(
                || Scratch::new(k),
                |sc, i| {
                    let mut out = Vec::new();
                    layout.decode(k, &tg, valid[i], &mut sc.c);
                    sc.fp.copy_from_slice(&sc.c.f);
                    for (e, &fe) in sc.c.f.iter().enumerate() {
                        sc.s[e] = tg.id(fe);
                    }
                    let base = valid[i];
                    for v in 0..k.n {
                        for &x in &vgens {
                            let j = vertex_move(k, &tg, &layout, sc, base, v, x);
                            out.push((i as u32, lookup(j)));
                        }
                    }
                    for e in 0..k.edges.len() {
                        for &kg in &kgens {
                            let j = edge_move(k, &tg, &layout, sc, base, e, kg);
                            out.push((i as u32, lookup(j)));
                        }
                    }
                    out
                },
            )
            .flatten()
            .collect();
        for (a, b) in pairs {
            debug_assert!(b != u32::MAX, "move left the valid set");
            uf.union(a, b);
        }
    }
    let mut label: HashMap<u32, u32> = HashMap::new();
    let class: Vec<u32> = (0..n as u32)
        .map(|i| {
            let r = uf.find_mut(i);
            let l = label.len() as u32;
            *label.entry(r).or_insert(l)
        })
        .collect();
    let class_count = label.len();
    let mut representatives = vec![None; class_count];
    let mut c = H1Cocycle { f: vec![0; k.edges.len()], g: vec![0; k.triangles.len()] };
    for (i, &cl) in class.iter().enumerate() {
        if representatives[cl as usize].is_none() {
            layout.decode(k, &tg, valid[i], &mut c);
            representatives[cl as usize] = Some(c.clone());
        }
    }
    Ok(H1Classes {
        nerve: k.clone(),
        raw_size: layout.raw as u128,
        reduced_count: n,
        class_count,
        representatives: representatives.into_iter().map(Option::unwrap).collect(),
        tg,
        layout,
        valid,
        class,
    })
}

/// Greedy generating set of a subgroup.
fn kernel_generators(h: &FiniteGroup, elems: &[usize]) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut span = h.generated(&[]);
    for &x in elems {
        if !span.contains(&x) {
            gens.push(x);
            span = h.generated(&gens);
        }
    }
    gens
}

struct Scratch {
    c: H1Cocycle,
    fp: Vec<usize>,
    h: Vec<usize>,
    s: Vec<usize>,
}

impl Scratch {
    fn new(k: &CoverNerve) -> Self {
        Scratch {
            c: H1Cocycle { f: vec![0; k.edges.len()], g: vec![0; k.triangles.len()] },
            fp: vec![0; k.edges.len()],
            h: vec![0; k.n],
            s: vec![0; k.edges.len()],
        }
    }
}

/// `h_v = x`, then every edge at `v` is sent back into the transversal.
/// The scratch arrays hold the trivial witness on entry and on exit.
fn vertex_move(k: &CoverNerve, tg: &TwoGroup, lay: &Layout, sc: &mut Scratch, base: u64, v: usize, x: usize) -> u64 {
    let Scratch { c, fp, h, s } = sc;
    h[v] = x;
    let mut idx = base;
    for &e in &k.vertex_edges[v] {
        let [a, b] = k.edges[e];
        let target = tg.mul0(h[b], c.f[e]);
        let ha_inv = tg.inv0(h[a]);
        let r = lay.rep[tg.mul0(target, ha_inv)];
        fp[e] = r;
        s[e] = lay.homs[tg.mul0(r, h[a]) * lay.n0 + target][0];
        idx = idx - lay.rdigit[c.f[e]] as u64 * lay.wf[e] + lay.rdigit[r] as u64 * lay.wf[e];
    }
    for &t in &k.vertex_tris[v] {
        let gp = g_prime(k, tg, &c.f, fp, &c.g, h, s, t);
        idx = idx - lay.digit_of[c.g[t]] as u64 * lay.wg[t] + lay.digit_of[gp] as u64 * lay.wg[t];
    }
    h[v] = 0;
    for &e in &k.vertex_edges[v] {
        fp[e] = c.f[e];
        s[e] = tg.id(c.f[e]);
    }
    idx
}

/// `s_e = κ · id_{f_e}` with `t(κ) = 1`, everything else trivial.
fn edge_move(k: &CoverNerve, tg: &TwoGroup, lay: &Layout, sc: &mut Scratch, base: u64, e: usize, kappa: usize) -> u64 {
    let Scratch { c, fp, h, s } = sc;
    s[e] = tg.mul1(tg.join(kappa, 0), tg.id(c.f[e]));
    let mut idx = base;
    for &t in &k.edge_tris[e] {
        let gp = g_prime(k, tg, &c.f, fp, &c.g, h, s, t);
        idx = idx - lay.digit_of[c.g[t]] as u64 * lay.wg[t] + lay.digit_of[gp] as u64 * lay.wg[t];
    }
    s[e] = tg.id(c.f[e]);
    idx
}

/// Valid reduced cocycles, sorted by index. Edge values are assigned by
/// backtracking with the coset condition on each triangle, then triangle
/// values with the tetra condition.
fn enumerate_reduced(k: &CoverNerve, tg: &TwoGroup, lay: &Layout) -> Vec<u64> {
    let mut fs = Vec::new();
    let mut f = vec![0; k.edges.len()];
    edge_backtrack(k, tg, lay, &mut f, 0, &mut fs);
    let mut out: Vec<u64> = fs
        .par_iter()
        .flat_map_iter(|f| {
            let mut res = Vec::new();
            let mut g = vec![0; k.triangles.len()];
            tri_backtrack(k, tg, lay, f, &mut g, 0, &mut res);
            res
        })
        .collect();
    out.sort_unstable();
    out
}

fn edge_backtrack(k: &CoverNerve, tg: &TwoGroup, lay: &Layout, f: &mut Vec<usize>, e: usize, out: &mut Vec<Vec<usize>>) {
    if e == k.edges.len() {
        out.push(f.clone());
        return;
    }
    for &r in &lay.rset {
        f[e] = r;
        let ok = k.edge_tris[e].iter().all(|&t| {
            let [ab, bc, ac] = k.tri_edges[t];
            ab.max(bc).max(ac) != e || !lay.homs[tg.mul0(f[bc], f[ab]) * lay.n0 + f[ac]].is_empty()
        });
        if ok {
            edge_backtrack(k, tg, lay, f, e + 1, out);
        }
    }
}

fn tri_backtrack(k: &CoverNerve, tg: &TwoGroup, lay: &Layout, f: &[usize], g: &mut Vec<usize>, t: usize, out: &mut Vec<u64>) {
    if t == k.triangles.len() {
        let c = H1Cocycle { f: f.to_vec(), g: g.clone() };
        out.push(lay.encode(&c));
        return;
    }
    let [ab, bc, ac] = k.tri_edges[t];
    let hs = &lay.homs[tg.mul0(f[bc], f[ab]) * lay.n0 + f[ac]];
    for &m in hs {
        g[t] = m;
        // tetras whose last face is t
        let ok = (0..k.tetras.len()).filter(|&q| k.tet_tris[q][3] == t).all(|q| tetra_holds(k, tg, f, g, q));
        if ok {
            tri_backtrack(k, tg, lay, f, g, t + 1, out);
        }
    }
}

/// Smith normal form diagonal of an integer matrix (nonzero entries only).
pub fn smith_diagonal(mut m: Vec<Vec<i64>>) -> Vec<i64> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut diag = Vec::new();
    let mut r0 = 0;
    let mut c0 = 0;
    while r0 < rows && c0 < cols {
        // pivot: least nonzero absolute value in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in r0..rows {
            for j in c0..cols {
                if m[i][j] != 0 && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        m.swap(r0, pi);
        for row in m.iter_mut() {
            row.swap(c0, pj);
        }
        loop {
            let p = m[r0][c0];
            let mut dirty = false;
            for i in r0 + 1..rows {
                let q = m[i][c0] / p;
                if q != 0 {
                    for j in c0..cols {
                        m[i][j] -= q * m[r0][j];
                    }
                }
                if m[i][c0] != 0 {
                    dirty = true;
                }
            }
            for j in c0 + 1..cols {
                let q = m[r0][j] / p;
                if q != 0 {
                    for row in m.iter_mut().skip(r0) {
                        row[j] -= q * row[c0];
                    }
                }
                if m[r0][j] != 0 {
                    dirty = true;
                }
            }
            if !dirty {
                // divisibility of the rest of the block
                let bad = (r0 + 1..rows).flat_map(|i| (c0 + 1..cols).map(move |j| (i, j))).find(|&(i, j)| m[i][j] % p != 0);
                match bad {
                    None => break,
                    Some((i, _)) => {
                        for j in c0..cols {
                            let v = m[i][j];
                            m[r0][j] += v;
                        }
                        continue;
                    }
                }
            }
            // move the least nonzero entry of row/column r0/c0 to the pivot
            let mut best = (r0, c0);
            for i in r0..rows {
                if m[i][c0] != 0 && m[i][c0].abs() < m[best.0][best.1].abs() {
                    best = (i, c0);
                }
            }
            for j in c0..cols {
                if m[r0][j] != 0 && m[r0][j].abs() < m[best.0][best.1].abs() {
                    best = (r0, j);
                }
            }
            m.swap(r0, best.0);
            for row in m.iter_mut() {
                row.swap(c0, best.1);
            }
        }
        diag.push(m[r0][c0].abs());
        r0 += 1;
        c0 += 1;
    }
    diag
}

/// Simplicial coboundary `C^{d-1} -> C^d` as an integer matrix (rows are
/// `d`-simplices).
fn coboundary_matrix(k: &CoverNerve, d: usize) -> Vec<Vec<i64>> {
    let simplices = |dim: usize| -> Vec<Vec<usize>> {
        match dim {
            0 => (0..k.n).map(|v| vec![v]).collect(),
            1 => k.edges.iter().map(|e| e.to_vec()).collect(),
            2 => k.triangles.iter().map(|t| t.to_vec()).collect(),
            3 => k.tetras.iter().map(|q| q.to_vec()).collect(),
            _ => Vec::new(),
        }
    };
    let lower = simplices(d - 1);
    let index: HashMap<Vec<usize>, usize> = lower.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    simplices(d)
        .iter()
        .map(|s| {
            let mut row = vec![0i64; lower.len()];
            for skip in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                row[index[&face]] += if skip % 2 == 0 { 1 } else { -1 };
            }
            row
        })
        .collect()
}

/// `|ker(D ⊗ A)|` for an integer matrix `D: A^cols -> A^rows`.
fn kernel_size(d: &[Vec<i64>], cols: usize, a: &FiniteGroup) -> u128 {
    let diag = smith_diagonal(d.to_vec());
    let n = a.order() as u128;
    let mut size = n.pow((cols - diag.len()) as u32);
    for &di in &diag {
        // d-torsion of A, counted directly
        let tors = (0..a.order())
            .filter(|&x| {
                let mut y = 0;
                for _ in 0..di {
                    y = a.mul(y, x);
                }
                y == 0
            })
            .count();
        size *= tors as u128;
    }
    size
}

/// `|H^degree(K; A)|` of the ordered simplicial cochain complex.
pub fn abelian_oracle(k: &CoverNerve, a: &FiniteGroup, degree: usize) -> Result<u128> {
    if !a.is_abelian() {
        return Err(Error::InvalidAction("abelian oracle needs an abelian group".into()));
    }
    if !(1..=2).contains(&degree) {
        return Err(Error::Shape("oracle degree must be 1 or 2".into()));
    }
    let counts = [k.n, k.edges.len(), k.triangles.len(), k.tetras.len()];
    let up = coboundary_matrix(k, degree + 1);
    let down = coboundary_matrix(k, degree);
    let ker_up = kernel_size(&up, counts[degree], a);
    let ker_down = kernel_size(&down, counts[degree - 1], a);
    let image = (a.order() as u128).pow(counts[degree - 1] as u32) / ker_down;
    Ok(ker_up / image)
}

/// Čech groupoid of an abstract nerve: objects are vertices, morphisms are
/// ordered pairs `(i, j)` spanning a vertex or an edge, and
/// `(j, k) ∘ (i, j) = (i, k)`. Returns the groupoid and its pair list.
pub fn cech_groupoid(k: &CoverNerve) -> Result<(FiniteGroupoid, Vec<(usize, usize)>)> {
    let mut pairs = Vec::new();
    for v in 0..k.n {
        pairs.push((v, v));
    }
    for &[a, b] in &k.edges {
        pairs.push((a, b));
        pairs.push((b, a));
    }
    pairs.sort_unstable();
    let index: HashMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    // every composable pair must compose inside the nerve
    for &(i, j) in &pairs {
        for &(j2, l) in &pairs {
            if j2 != j || i == j || j == l {
                continue;
            }
            if i == l {
                continue;
            }
            let mut s = [i, j, l];
            s.sort_unstable();
            if k.triangle_index(s).is_none() {
                return Err(Error::CompositionNotClosed(s.to_vec()));
            }
        }
    }
    let src = pairs.iter().map(|&(i, _)| i).collect();
    let tgt = pairs.iter().map(|&(_, j)| j).collect();
    let id = (0..k.n).map(|v| index[&(v, v)]).collect();
    let g = FiniteGroupoid::from_fn(k.n, src, tgt, id, |m2, m1| index[&(pairs[m1].0, pairs[m2].1)])?;
    Ok((g, pairs))
}

/// Glues trivial pieces: elements `(i, x, γ)` with `x ∈ U_i`, `t(γ) = f_i`,
/// modulo `(i, x, γ) ~ (j, x, g_ij ∘ γ)` for `i < j`.
pub fn h0_to_bundle(cover: &ConcreteCover, gamma: Arc<FiniteGroupoid>, c: &H0Cocycle) -> Result<PrincipalBundle> {
    let k = cover.nerve();
    validate_h0(&k, &gamma, c)?;
    let mut elems = Vec::new();
    let mut index = HashMap::new();
    for (i, set) in cover.sets.iter().enumerate() {
        for &x in set {
            for &m in gamma.incoming(c.f[i]) {
                index.insert((i, x, m), elems.len());
                elems.push((i, x, m));
            }
        }
    }
    let mut uf = UnionFind::<usize>::new(elems.len());
    for (e, &[i, j]) in k.edges.iter().enumerate() {
        for x in cover.intersection(&[i, j]) {
            for &m in gamma.incoming(c.f[i]) {
                uf.union(index[&(i, x, m)], index[&(j, x, gamma.compose(c.g[e], m))]);
            }
        }
    }
    let (class, n) = label_classes(&mut uf, elems.len());
    let mut rep = vec![usize::MAX; n];
    for (e, &cl) in class.iter().enumerate() {
        if rep[cl] == usize::MAX {
            rep[cl] = e;
        }
    }
    let proj = rep.iter().map(|&e| elems[e].1).collect();
    let anchor = rep.iter().map(|&e| gamma.src(elems[e].2)).collect();
    let gm = gamma.clone();
    PrincipalBundle::new(gamma, cover.points, proj, anchor, |p, d| {
        let (i, x, m) = elems[rep[p]];
        class[index[&(i, x, gm.compose(m, d))]]
    })
}

/// Sections `σ_i: U_i -> P` with constant anchor on `U_i` and constant
/// transition on each `U_i ∩ U_j`, found by pruned backtracking. At most
/// `limit` choices are returned, in search order.
pub fn admissible_sections(p: &PrincipalBundle, cover: &ConcreteCover, limit: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut sigma: Vec<Vec<usize>> = cover.sets.iter().map(|s| vec![usize::MAX; s.len()]).collect();
    let mut slots = Vec::new();
    for (i, s) in cover.sets.iter().enumerate() {
        for j in 0..s.len() {
            slots.push((i, j));
        }
    }
    let mut trans: HashMap<(usize, usize), usize> = HashMap::new();
    sections_rec(p, cover, &slots, 0, &mut sigma, &mut trans, &mut out, limit);
    out
}

fn sections_rec(
    p: &PrincipalBundle,
    cover: &ConcreteCover,
    slots: &[(usize, usize)],
    k: usize,
    sigma: &mut Vec<Vec<usize>>,
    trans: &mut HashMap<(usize, usize), usize>,
    out: &mut Vec<Vec<Vec<usize>>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if k == slots.len() {
        out.push(sigma.clone());
        return;
    }
    let (i, j) = slots[k];
    let x = cover.sets[i][j];
    for &cand in p.fibre(x) {
        if j > 0 && p.anchor(cand) != p.anchor(sigma[i][0]) {
            continue;
        }
        // transitions against every earlier set containing x
        let mut added = Vec::new();
        let mut ok = true;
        for a in 0..i {
            let Ok(pos) = cover.sets[a].binary_search(&x) else { continue };
            // σ_a = σ_i ∘ g_ai
            let Some(g) = p.divide(cand, sigma[a][pos]) else {
                ok = false;
                break;
            };
            match trans.get(&(a, i)) {
                Some(&g0) if g0 != g => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    trans.insert((a, i), g);
                    added.push((a, i));
                }
            }
        }
        if ok {
            sigma[i][j] = cand;
            sections_rec(p, cover, slots, k + 1, sigma, trans, out, limit);
            sigma[i][j] = usize::MAX;
        }
        for key in added {
            trans.remove(&key);
        }
        if out.len() >= limit {
            return;
        }
    }
}

/// The cocycle of a section choice: `f_i = α(σ_i)`, `σ_i = σ_j ∘ g_ij`.
pub fn cocycle_of_sections(p: &PrincipalBundle, cover: &ConcreteCover, sigma: &[Vec<usize>]) -> Result<H0Cocycle> {
    let k = cover.nerve();
    let f: Vec<usize> = sigma.iter().map(|s| p.anchor(s[0])).collect();
    let mut g = Vec::with_capacity(k.edges.len());
    for &[i, j] in &k.edges {
        let mut val = None;
        for x in cover.intersection(&[i, j]) {
            let si = sigma[i][cover.sets[i].binary_search(&x).unwrap()];
            let sj = sigma[j][cover.sets[j].binary_search(&x).unwrap()];
            let d = p.divide(sj, si).ok_or_else(|| Error::NotPrincipal("sections in different fibres".into()))?;
            if val.is_some_and(|v| v != d) {
                return Err(Error::NotConstantOnIntersection(format!("U_{i} ∩ U_{j}")));
            }
            val = Some(d);
        }
        g.push(val.expect("edge intersections are nonempty"));
    }
    let c = H0Cocycle { f, g };
    validate_h0(&k, &p.gamma, &c)?;
    Ok(c)
}

/// Cocycle of the first admissible section choice.
pub fn bundle_to_h0(p: &PrincipalBundle, cover: &ConcreteCover) -> Result<H0Cocycle> {
    let sigma =
        admissible_sections(p, cover, 1).pop().ok_or_else(|| Error::NotConstantOnIntersection("no admissible section choice".into()))?;
    cocycle_of_sections(p, cover, &sigma)
}
