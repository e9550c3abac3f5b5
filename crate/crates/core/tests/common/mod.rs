//! Brute-force oracles shared by the integration tests. None of these call
//! the library's own searches; they work directly on raw tables.
#![allow(dead_code)]

use std::collections::BTreeSet;

use gerbecalc::FiniteGroup;

pub type Table = Vec<Vec<usize>>;

pub fn cyclic_table(n: usize) -> Table {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

pub fn is_group_table(t: &Table) -> bool {
    let n = t.len();
    let identity = (0..n).all(|a| t[0][a] == a && t[a][0] == a);
    let latin = (0..n).all(|a| {
        let row: BTreeSet<usize> = t[a].iter().copied().collect();
        let col: BTreeSet<usize> = (0..n).map(|b| t[b][a]).collect();
        row.len() == n && col.len() == n && row.iter().all(|&x| x < n)
    });
    latin && identity && (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| t[t[a][b]][c] == t[a][t[b][c]])))
}

/// Every permutation of `0..n`, lexicographic.
pub fn all_perms(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn is_hom(a: &Table, b: &Table, f: &[usize]) -> bool {
    (0..a.len()).all(|x| (0..a.len()).all(|y| f[a[x][y]] == b[f[x]][f[y]]))
}

/// Number of automorphisms: bijections fixing 0 that respect the table.
pub fn aut_count(t: &Table) -> usize {
    all_perms(t.len()).into_iter().filter(|p| p[0] == 0 && is_hom(t, t, p)).count()
}

/// Isomorphism by backtracking over images, checking every assigned pair.
pub fn isomorphic(a: &Table, b: &Table) -> bool {
    fn rec(a: &Table, b: &Table, f: &mut Vec<usize>, used: &mut Vec<bool>, k: usize) -> bool {
        let n = a.len();
        if k == n {
            return true;
        }
        for v in 0..n {
            if used[v] {
                continue;
            }
            f[k] = v;
            let ok = (0..=k).all(|x| {
                let (p, q) = (a[x][k], a[k][x]);
                (p > k || f[p] == b[f[x]][v]) && (q > k || f[q] == b[v][f[x]])
            });
            if ok {
                used[v] = true;
                if rec(a, b, f, used, k + 1) {
                    return true;
                }
                used[v] = false;
            }
        }
        f[k] = usize::MAX;
        false
    }
    let n = a.len();
    if n != b.len() {
        return false;
    }
    let mut f = vec![usize::MAX; n];
    let mut used = vec![false; n];
    f[0] = 0;
    used[0] = true;
    a[0][0] == 0 && rec(a, b, &mut f, &mut used, 1)
}

pub fn inverse(t: &Table, a: usize) -> usize {
    (0..t.len()).find(|&b| t[a][b] == 0).unwrap()
}

pub fn conjugacy_class_count(t: &Table) -> usize {
    let n = t.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for x in 0..n {
        if seen[x] {
            continue;
        }
        count += 1;
        for g in 0..n {
            seen[t[t[g][x]][inverse(t, g)]] = true;
        }
    }
    count
}

pub fn center_size(t: &Table) -> usize {
    let n = t.len();
    (0..n).filter(|&z| (0..n).all(|g| t[z][g] == t[g][z])).count()
}

/// Small groups used across tests.
pub fn sample_groups() -> Vec<(&'static str, FiniteGroup)> {
    vec![
        ("Z1", FiniteGroup::cyclic(1)),
        ("Z2", FiniteGroup::cyclic(2)),
        ("Z3", FiniteGroup::cyclic(3)),
        ("Z4", FiniteGroup::cyclic(4)),
        ("Z2xZ2", FiniteGroup::product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2))),
        ("Z6", FiniteGroup::cyclic(6)),
        ("S3", FiniteGroup::symmetric(3)),
    ]
}

/// Rank of an integer matrix over `Z/p`, `p` prime, by row reduction.
pub fn rank_mod_p(mut m: Vec<Vec<i64>>, p: i64) -> usize {
    let cols = m.first().map_or(0, |r| r.len());
    for row in &mut m {
        for x in row.iter_mut() {
            *x = x.rem_euclid(p);
        }
    }
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, piv);
        let inv = (1..p).find(|&i| i * m[rank][c] % p == 1).unwrap();
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let k = m[r][c];
                for j in 0..cols {
                    m[r][j] = (m[r][j] - k * m[rank][j]).rem_euclid(p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Simplicial coboundary `C^{d-1} -> C^d` of an ordered complex given by
/// its simplices of each dimension, as a matrix with one row per d-simplex.
pub fn coboundary(lower: &[Vec<usize>], upper: &[Vec<usize>]) -> Vec<Vec<i64>> {
    upper
        .iter()
        .map(|s| {
            let mut row = vec![0; lower.len()];
            for i in 0..s.len() {
                let face: Vec<usize> = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect();
                let col = lower.iter().position(|f| *f == face).expect("face present");
                row[col] += if i % 2 == 0 { 1 } else { -1 };
            }
            row
        })
        .collect()
}

/// `|H^2(K; Z/p)|` from ranks of the coboundaries around degree 2.
pub fn h2_mod_p(edges: &[[usize; 2]], tris: &[[usize; 3]], tetras: &[[usize; 4]], p: i64) -> u128 {
    let e: Vec<Vec<usize>> = edges.iter().map(|s| s.to_vec()).collect();
    let t: Vec<Vec<usize>> = tris.iter().map(|s| s.to_vec()).collect();
    let q: Vec<Vec<usize>> = tetras.iter().map(|s| s.to_vec()).collect();
    let r2 = if t.is_empty() { 0 } else { rank_mod_p(coboundary(&e, &t), p) };
    let r3 = if q.is_empty() { 0 } else { rank_mod_p(coboundary(&t, &q), p) };
    (p as u128).pow((t.len() - r2 - r3) as u32)
}

/// Orbits of edge labelings `g_ab ∈ G` with `g_bc g_ab = g_ac` on every
/// triangle under vertex gauge `g_ab -> h_b g_ab h_a^-1`, by brute force.
pub fn gauge_orbits(t: &Table, vertices: usize, edges: &[[usize; 2]], tris: &[[usize; 3]]) -> usize {
    let n = t.len();
    let ei = |a: usize, b: usize| edges.iter().position(|e| *e == [a, b]).unwrap();
    let total = n.pow(edges.len() as u32);
    let decode = |mut i: usize| {
        (0..edges.len())
            .map(|_| {
                let d = i % n;
                i /= n;
                d
            })
            .collect::<Vec<_>>()
    };
    let encode = |g: &[usize]| g.iter().rev().fold(0, |acc, &d| acc * n + d);
    let valid = |g: &[usize]| tris.iter().all(|&[a, b, c]| t[g[ei(b, c)]][g[ei(a, b)]] == g[ei(a, c)]);
    let mut seen = vec![false; total];
    let mut orbits = 0;
    for i in 0..total {
        let g = decode(i);
        if seen[i] || !valid(&g) {
            continue;
        }
        orbits += 1;
        let mut stack = vec![i];
        seen[i] = true;
        while let Some(j) = stack.pop() {
            let g = decode(j);
            for v in 0..vertices {
                for h in 0..n {
                    let hi = inverse(t, h);
                    let moved: Vec<usize> = edges
                        .iter()
                        .enumerate()
                        .map(|(e, &[a, b])| {
                            let x = if b == v { t[h][g[e]] } else { g[e] };
                            if a == v {
                                t[x][hi]
                            } else {
                                x
                            }
                        })
                        .collect();
                    let k = encode(&moved);
                    if !seen[k] {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
        }
    }
    orbits
}

/// Raw data of a Γ-bundle: projection, anchor and the action as a map on
/// `(p, γ)` pairs with `anchor(p) = t(γ)`.
pub struct RawBundle {
    pub base: usize,
    pub proj: Vec<usize>,
    pub anchor: Vec<usize>,
    pub act: std::collections::BTreeMap<(usize, usize), usize>,
}

impl RawBundle {
    pub fn of(p: &gerbecalc::PrincipalBundle) -> Self {
        let g = &p.gamma;
        let act = (0..p.total()).flat_map(|x| g.incoming(p.anchor(x)).iter().map(move |&m| ((x, m), p.act(x, m)))).collect();
        RawBundle { base: p.base(), proj: p.projs().to_vec(), anchor: p.anchors().to_vec(), act }
    }

    pub fn triples(&self) -> Vec<(usize, usize, usize)> {
        self.act.iter().map(|(&(p, m), &q)| (p, m, q)).collect()
    }
}

/// Action axioms and bijectivity of `(p, γ) -> (p, p ∘ γ)` onto `P ×_M P`,
/// straight from the definitions.
pub fn bundle_is_principal(gpd: &gerbecalc::FiniteGroupoid, b: &RawBundle) -> bool {
    let n = b.proj.len();
    if (0..b.base).any(|m| !b.proj.contains(&m)) || b.anchor.iter().any(|&a| a >= gpd.n_obj()) {
        return false;
    }
    for p in 0..n {
        for m in 0..gpd.n_mor() {
            let defined = b.act.get(&(p, m));
            if (gpd.tgt(m) == b.anchor[p]) != defined.is_some() {
                return false;
            }
            let Some(&q) = defined else { continue };
            if q >= n || b.proj[q] != b.proj[p] || b.anchor[q] != gpd.src(m) {
                return false;
            }
            for m2 in (0..gpd.n_mor()).filter(|&m2| gpd.tgt(m2) == gpd.src(m)) {
                if b.act.get(&(q, m2)) != b.act.get(&(p, gpd.compose(m, m2))) {
                    return false;
                }
            }
        }
        if b.act.get(&(p, gpd.id(b.anchor[p]))) != Some(&p) {
            return false;
        }
    }
    let image: BTreeSet<(usize, usize)> = b.act.iter().map(|(&(p, _), &q)| (p, q)).collect();
    let square = (0..n).flat_map(|p| (0..n).filter(move |&q| b.proj[p] == b.proj[q]).map(move |q| (p, q))).count();
    image.len() == b.act.len() && image.len() == square
}

/// A random bundle with structure groupoid `gpd`: a trivial bundle for a
/// random `f`, relabeled by a random permutation of its total space.
pub fn random_bundle(gpd: &std::sync::Arc<gerbecalc::FiniteGroupoid>, base: usize, rng: &mut impl rand::Rng) -> gerbecalc::PrincipalBundle {
    use rand::seq::SliceRandom;
    let mut elems = Vec::new();
    for m in 0..base {
        let x = rng.gen_range(0..gpd.n_obj());
        for c in 0..gpd.n_mor() {
            if gpd.tgt(c) == x {
                elems.push((m, c));
            }
        }
    }
    let mut label: Vec<usize> = (0..elems.len()).collect();
    label.shuffle(rng);
    let mut at = vec![0; elems.len()];
    for (i, &l) in label.iter().enumerate() {
        at[l] = i;
    }
    let find = |m: usize, c: usize| label[elems.iter().position(|&e| e == (m, c)).unwrap()];
    let proj = (0..elems.len()).map(|l| elems[at[l]].0).collect();
    let anchor = (0..elems.len()).map(|l| gpd.src(elems[at[l]].1)).collect();
    gerbecalc::PrincipalBundle::new(gpd.clone(), base, proj, anchor, |l, c| {
        let (m, e) = elems[at[l]];
        find(m, gpd.compose(e, c))
    })
    .expect("relabeled trivial bundle is valid")
}

/// Raw data of a Γ-groupoid with a projection.
pub struct Raw2Bundle {
    pub base: usize,
    pub n_obj: usize,
    pub src: Vec<usize>,
    pub tgt: Vec<usize>,
    pub comp: std::collections::BTreeMap<(usize, usize), usize>,
    pub r0: Vec<usize>,
    pub r1: Vec<usize>,
    pub pi: Vec<usize>,
}

impl Raw2Bundle {
    pub fn of(b: &gerbecalc::Principal2Bundle) -> Self {
        let p = b.gpd();
        let comp = (0..p.n_mor()).flat_map(|m1| p.out_of(p.tgt(m1)).iter().map(move |&m2| ((m2, m1), p.compose(m2, m1)))).collect();
        Raw2Bundle {
            base: b.base(),
            n_obj: p.n_obj(),
            src: p.srcs().to_vec(),
            tgt: p.tgts().to_vec(),
            comp,
            r0: b.action.r0.clone(),
            r1: b.action.r1.clone(),
            pi: b.pi().to_vec(),
        }
    }
}

/// Strict action axioms, invariant surjective projection, and `τ` fully
/// faithful and essentially surjective, checked directly on raw arrays.
pub fn two_bundle_is_principal(tg: &gerbecalc::TwoGroup, b: &Raw2Bundle) -> bool {
    let (n0, n1) = (tg.n0(), tg.n1());
    let nm = b.src.len();
    let r0 = |x: usize, g: usize| b.r0[x * n0 + g];
    let r1 = |c: usize, g: usize| b.r1[c * n1 + g];
    let id = |x: usize| (0..nm).find(|&c| b.src[c] == x && b.tgt[c] == x && (0..nm).all(|d| b.tgt[d] != x || b.comp[&(c, d)] == d));
    let Some(ids) = (0..b.n_obj).map(id).collect::<Option<Vec<usize>>>() else { return false };
    for x in 0..b.n_obj {
        if r0(x, 0) != x {
            return false;
        }
        for g in 0..n0 {
            if b.pi[r0(x, g)] != b.pi[x] || r1(ids[x], tg.id(g)) != ids[r0(x, g)] {
                return false;
            }
            if (0..n0).any(|h| r0(r0(x, g), h) != r0(x, tg.mul0(g, h))) {
                return false;
            }
        }
    }
    for c in 0..nm {
        if b.pi[b.src[c]] != b.pi[b.tgt[c]] || r1(c, 0) != c {
            return false;
        }
        for g in 0..n1 {
            let r = r1(c, g);
            if b.src[r] != r0(b.src[c], tg.s(g)) || b.tgt[r] != r0(b.tgt[c], tg.t(g)) {
                return false;
            }
            if (0..n1).any(|h| r1(r, h) != r1(c, tg.mul1(g, h))) {
                return false;
            }
        }
    }
    for (&(c2, c1), &c) in &b.comp {
        for g1 in 0..n1 {
            for g2 in (0..n1).filter(|&g2| tg.s(g2) == tg.t(g1)) {
                if r1(c, tg.comp(g2, g1)) != b.comp[&(r1(c2, g2), r1(c1, g1))] {
                    return false;
                }
            }
        }
    }
    if (0..b.base).any(|m| !b.pi.contains(&m)) {
        return false;
    }
    // fully faithful: for each a: x -> x', γ -> R(a, γ) is a bijection
    // Hom(g, g') -> Hom(x g, x' g')
    for a in 0..nm {
        for g in 0..n0 {
            for gp in 0..n0 {
                let homs: Vec<usize> = (0..n1).filter(|&m| tg.s(m) == g && tg.t(m) == gp).collect();
                let (xg, xgp) = (r0(b.src[a], g), r0(b.tgt[a], gp));
                let target: BTreeSet<usize> = (0..nm).filter(|&c| b.src[c] == xg && b.tgt[c] == xgp).collect();
                let image: BTreeSet<usize> = homs.iter().map(|&m| r1(a, m)).collect();
                if image.len() != homs.len() || image != target {
                    return false;
                }
            }
        }
    }
    // essentially surjective: every y over π(x) is isomorphic to some x g
    let iso = |u: usize, v: usize| (0..nm).any(|c| b.src[c] == u && b.tgt[c] == v);
    (0..b.n_obj).all(|x| (0..b.n_obj).filter(|&y| b.pi[y] == b.pi[x]).all(|y| (0..n0).any(|g| iso(r0(x, g), y))))
}

/// `M × Γ` relabeled by random permutations of objects and morphisms.
pub fn random_2bundle(tg: &std::sync::Arc<gerbecalc::TwoGroup>, base: usize, rng: &mut impl rand::Rng) -> gerbecalc::Principal2Bundle {
    use gerbecalc::anafunctor::GammaGroupoid;
    use rand::seq::SliceRandom;
    let triv = gerbecalc::twobundle::trivial_2bundle(tg.clone(), base).unwrap();
    let p = triv.gpd();
    let (no, nm) = (p.n_obj(), p.n_mor());
    let mut lo: Vec<usize> = (0..no).collect();
    let mut lm: Vec<usize> = (0..nm).collect();
    lo.shuffle(rng);
    lm.shuffle(rng);
    let (mut ao, mut am) = (vec![0; no], vec![0; nm]);
    for i in 0..no {
        ao[lo[i]] = i;
    }
    for i in 0..nm {
        am[lm[i]] = i;
    }
    let src = (0..nm).map(|c| lo[p.src(am[c])]).collect();
    let tgt = (0..nm).map(|c| lo[p.tgt(am[c])]).collect();
    let id = (0..no).map(|x| lm[p.id(ao[x])]).collect();
    let gpd = gerbecalc::FiniteGroupoid::from_fn(no, src, tgt, id, |c2, c1| lm[p.compose(am[c2], am[c1])]).unwrap();
    let (n0, n1) = (tg.n0(), tg.n1());
    let r0 = (0..no * n0).map(|i| lo[triv.action.act0(ao[i / n0], i % n0)]).collect();
    let r1 = (0..nm * n1).map(|i| lm[triv.action.act1(am[i / n1], i % n1)]).collect();
    let action = GammaGroupoid::new(tg, std::sync::Arc::new(gpd), r0, r1).unwrap();
    let pi = (0..no).map(|x| triv.pi()[ao[x]]).collect();
    gerbecalc::Principal2Bundle::new(tg.clone(), action, base, pi).unwrap()
}
