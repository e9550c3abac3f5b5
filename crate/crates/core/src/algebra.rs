//! Finite groups as Cayley tables, homomorphisms, actions, automorphism
//! groups and semidirect products.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_index, Error, Result};

/// Default order bound for brute-force automorphism enumeration.
pub const DEFAULT_AUT_CAP: usize = 24;

/// A finite group given by its multiplication table. Element 0 is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteGroup {
    order: usize,
    mul: Vec<usize>,
    #[serde(skip)]
    inv: Vec<usize>,
}

impl FiniteGroup {
    /// Validates a raw square table.
    pub fn from_table(table: &[Vec<usize>]) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::Shape("group must have at least one element".into()));
        }
        let mut mul = Vec::with_capacity(n * n);
        for row in table {
            if row.len() != n {
                return Err(Error::Shape(format!("row of length {} in {n}x{n} table", row.len())));
            }
            for &x in row {
                check_index(x, n)?;
                mul.push(x);
            }
        }
        Self::from_flat(n, mul)
    }

    /// Validates a flat row-major table (`mul[a * n + b] = a * b`).
    pub fn from_flat(n: usize, mul: Vec<usize>) -> Result<Self> {
        if mul.len() != n * n || n == 0 {
            return Err(Error::Shape(format!("expected {} entries", n * n)));
        }
        if let Some(&x) = mul.iter().find(|&&x| x >= n) {
            return Err(Error::IndexOutOfRange { index: x, size: n });
        }
        for a in 0..n {
            if mul[a] != a || mul[a * n] != a {
                return Err(Error::NoIdentityAtZero(a));
            }
        }
        let mut seen = vec![usize::MAX; n];
        for a in 0..n {
            for b in 0..n {
                let x = mul[a * n + b];
                if seen[x] == a {
                    return Err(Error::NotInvertible(a));
                }
                seen[x] = a;
            }
        }
        let mut seen = vec![usize::MAX; n];
        for b in 0..n {
            for a in 0..n {
                let x = mul[a * n + b];
                if seen[x] == b {
                    return Err(Error::NotInvertible(b));
                }
                seen[x] = b;
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = mul[a * n + b];
                for c in 0..n {
                    if mul[ab * n + c] != mul[a * n + mul[b * n + c]] {
                        return Err(Error::NotAssociative(a, b, c));
                    }
                }
            }
        }
        let mut inv = vec![0; n];
        for a in 0..n {
            inv[a] = (0..n).find(|&b| mul[a * n + b] == 0).expect("rows are permutations");
        }
        Ok(FiniteGroup { order: n, mul, inv })
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    /// Z/n with element k standing for k mod n.
    pub fn cyclic(n: usize) -> Self {
        assert!(n > 0);
        let mul = (0..n * n).map(|i| (i / n + i % n) % n).collect();
        let inv = (0..n).map(|a| (n - a) % n).collect();
        FiniteGroup { order: n, mul, inv }
    }

    /// S_n on permutations of 0..n in lexicographic order, so the identity is first.
    /// Product is composition: `(a*b)(x) = a(b(x))`.
    pub fn symmetric(n: usize) -> Self {
        let perms = permutations(n);
        let index: HashMap<&[usize], usize> = perms.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
        let m = perms.len();
        let mut mul = Vec::with_capacity(m * m);
        for a in &perms {
            for b in &perms {
                let c: Vec<usize> = b.iter().map(|&x| a[x]).collect();
                mul.push(index[c.as_slice()]);
            }
        }
        Self::from_flat(m, mul).expect("symmetric group table")
    }

    /// Direct product with pair (a, b) encoded as `a * |B| + b`.
    pub fn product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let (na, nb) = (a.order, b.order);
        let n = na * nb;
        let mut mul = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                mul.push(a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb));
            }
        }
        let inv = (0..n).map(|x| a.inv(x / nb) * nb + b.inv(x % nb)).collect();
        FiniteGroup { order: n, mul, inv }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    /// Rebuilds cached inverses after deserialization.
    pub fn revalidate(self) -> Result<Self> {
        Self::from_flat(self.order, self.mul)
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.mul.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn conj(&self, g: usize, x: usize) -> usize {
        self.mul(self.mul(g, x), self.inv(g))
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Subgroup generated by `gens`, as a sorted element list.
    pub fn generated(&self, gens: &[usize]) -> Vec<usize> {
        let mut inside = vec![false; self.order];
        inside[0] = true;
        let mut stack = vec![0];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if !inside[y] {
                    inside[y] = true;
                    stack.push(y);
                }
            }
        }
        (0..self.order).filter(|&x| inside[x]).collect()
    }

    /// Greedy generating set: repeatedly add the least element outside the
    /// span so far.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = vec![0];
        while span.len() < self.order {
            let next = (0..self.order).find(|x| span.binary_search(x).is_err()).unwrap();
            gens.push(next);
            span = self.generated(&gens);
        }
        gens
    }

    /// Elements of the subgroup `elems` (sorted) form a normal subgroup.
    pub fn is_normal(&self, elems: &[usize]) -> bool {
        (0..self.order).all(|g| elems.iter().all(|&x| elems.binary_search(&self.conj(g, x)).is_ok()))
    }

    /// Quotient by a normal subgroup. Cosets are numbered by their least
    /// element, so the identity coset is 0. Returns the group and the
    /// projection map.
    pub fn quotient(&self, normal: &[usize]) -> (FiniteGroup, Vec<usize>) {
        let n = self.order;
        let mut coset = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for g in 0..n {
            if coset[g] == usize::MAX {
                for &k in normal {
                    coset[self.mul(g, k)] = reps.len();
                }
                reps.push(g);
            }
        }
        let m = reps.len();
        let mut mul = Vec::with_capacity(m * m);
        for &a in &reps {
            for &b in &reps {
                mul.push(coset[self.mul(a, b)]);
            }
        }
        (FiniteGroup::from_flat(m, mul).expect("quotient of a normal subgroup"), coset)
    }

    /// Subgroup on the sorted element list `elems`, relabeled by position.
    pub fn subgroup(&self, elems: &[usize]) -> FiniteGroup {
        let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let m = elems.len();
        let mut mul = Vec::with_capacity(m * m);
        for &a in elems {
            for &b in elems {
                mul.push(pos[&self.mul(a, b)]);
            }
        }
        FiniteGroup::from_flat(m, mul).expect("closed subgroup")
    }

    pub fn center(&self) -> Vec<usize> {
        (0..self.order).filter(|&z| (0..self.order).all(|g| self.mul(z, g) == self.mul(g, z))).collect()
    }
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

/// A homomorphism stored as an element map; the groups are supplied on validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupHom {
    pub map: Vec<usize>,
}

impl GroupHom {
    pub fn new(src: &FiniteGroup, tgt: &FiniteGroup, map: Vec<usize>) -> Result<Self> {
        if map.len() != src.order() {
            return Err(Error::Shape(format!("hom map has length {}, source order {}", map.len(), src.order())));
        }
        for &x in &map {
            check_index(x, tgt.order())?;
        }
        if map[0] != 0 {
            return Err(Error::NotHomomorphism(0, 0));
        }
        for a in 0..src.order() {
            for b in 0..src.order() {
                if map[src.mul(a, b)] != tgt.mul(map[a], map[b]) {
                    return Err(Error::NotHomomorphism(a, b));
                }
            }
        }
        Ok(GroupHom { map })
    }

    pub fn identity(g: &FiniteGroup) -> Self {
        GroupHom { map: (0..g.order()).collect() }
    }

    pub fn trivial(src: &FiniteGroup) -> Self {
        GroupHom { map: vec![0; src.order()] }
    }

    #[inline]
    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn compose(&self, first: &GroupHom) -> GroupHom {
        GroupHom { map: first.map.iter().map(|&x| self.map[x]).collect() }
    }

    /// Sorted kernel.
    pub fn kernel(&self) -> Vec<usize> {
        (0..self.map.len()).filter(|&x| self.map[x] == 0).collect()
    }

    /// Sorted image.
    pub fn image(&self, tgt_order: usize) -> Vec<usize> {
        let mut hit = vec![false; tgt_order];
        for &x in &self.map {
            hit[x] = true;
        }
        (0..tgt_order).filter(|&x| hit[x]).collect()
    }
}

/// A left action of `G` on `H` by automorphisms, `act[g * |H| + h] = ^g h`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAction {
    h_order: usize,
    act: Vec<usize>,
}

impl GroupAction {
    pub fn new(g: &FiniteGroup, h: &FiniteGroup, table: &[Vec<usize>]) -> Result<Self> {
        if table.len() != g.order() || table.iter().any(|r| r.len() != h.order()) {
            return Err(Error::Shape(format!("action table must be {}x{}", g.order(), h.order())));
        }
        let act: Vec<usize> = table.concat();
        Self::from_flat(g, h, act)
    }

    pub fn from_flat(g: &FiniteGroup, h: &FiniteGroup, act: Vec<usize>) -> Result<Self> {
        let nh = h.order();
        if act.len() != g.order() * nh {
            return Err(Error::Shape("action table size".into()));
        }
        for &x in &act {
            check_index(x, nh)?;
        }
        let a = GroupAction { h_order: nh, act };
        for x in 0..nh {
            if a.apply(0, x) != x {
                return Err(Error::InvalidAction(format!("identity moves {x}")));
            }
        }
        for gi in 0..g.order() {
            GroupHom::new(h, h, a.act[gi * nh..(gi + 1) * nh].to_vec())
                .map_err(|_| Error::InvalidAction(format!("g={gi} is not an endomorphism")))?;
            for gj in 0..g.order() {
                for x in 0..nh {
                    if a.apply(g.mul(gi, gj), x) != a.apply(gi, a.apply(gj, x)) {
                        return Err(Error::InvalidAction(format!("not compatible at ({gi},{gj},{x})")));
                    }
                }
            }
        }
        Ok(a)
    }

    pub fn trivial(g: &FiniteGroup, h: &FiniteGroup) -> Self {
        let nh = h.order();
        GroupAction { h_order: nh, act: (0..g.order() * nh).map(|i| i % nh).collect() }
    }

    /// Conjugation action of a group on itself.
    pub fn conjugation(g: &FiniteGroup) -> Self {
        let n = g.order();
        GroupAction { h_order: n, act: (0..n * n).map(|i| g.conj(i / n, i % n)).collect() }
    }

    #[inline]
    pub fn apply(&self, g: usize, h: usize) -> usize {
        self.act[g * self.h_order + h]
    }

    pub fn table(&self) -> Vec<Vec<usize>> {
        self.act.chunks(self.h_order).map(|r| r.to_vec()).collect()
    }
}

/// Aut(G) with the automorphisms listed as permutations (lexicographic
/// order, identity first) and the inner homomorphism `g -> (x -> g x g^-1)`.
#[derive(Debug, Clone)]
pub struct AutGroup {
    pub group: FiniteGroup,
    pub perms: Vec<Vec<usize>>,
    pub inner: GroupHom,
}

pub fn automorphism_group(g: &FiniteGroup, cap: usize) -> Result<AutGroup> {
    if g.order() > cap {
        return Err(Error::SizeLimitExceeded { what: "automorphism search".into(), needed: g.order() as u128, cap: cap as u128 });
    }
    let gens = g.generators();
    let mut perms = Vec::new();
    let mut images = Vec::with_capacity(gens.len());
    extend_automorphisms(g, &gens, &mut images, &mut perms);
    perms.sort();
    let index: HashMap<&[usize], usize> = perms.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let m = perms.len();
    let mut mul = Vec::with_capacity(m * m);
    for a in &perms {
        for b in &perms {
            let c: Vec<usize> = b.iter().map(|&x| a[x]).collect();
            mul.push(index[c.as_slice()]);
        }
    }
    let inner_map = (0..g.order())
        .map(|x| {
            let p: Vec<usize> = (0..g.order()).map(|y| g.conj(x, y)).collect();
            index[p.as_slice()]
        })
        .collect();
    let group = FiniteGroup::from_flat(m, mul)?;
    let inner = GroupHom::new(g, &group, inner_map)?;
    Ok(AutGroup { group, perms, inner })
}

fn extend_automorphisms(g: &FiniteGroup, gens: &[usize], images: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if images.len() == gens.len() {
        if let Some(p) = close_map(g, gens, images) {
            out.push(p);
        }
        return;
    }
    let src = gens[images.len()];
    let ord = g.element_order(src);
    for cand in 1..g.order() {
        if g.element_order(cand) == ord && !images.contains(&cand) {
            images.push(cand);
            extend_automorphisms(g, gens, images, out);
            images.pop();
        }
    }
}

/// Extends generator images to a map by `phi(x g) = phi(x) phi(g)`;
/// returns it if it is a bijective homomorphism.
fn close_map(g: &FiniteGroup, gens: &[usize], images: &[usize]) -> Option<Vec<usize>> {
    let n = g.order();
    let mut phi = vec![usize::MAX; n];
    phi[0] = 0;
    let mut stack = vec![0];
    while let Some(x) = stack.pop() {
        for (&s, &t) in gens.iter().zip(images) {
            let y = g.mul(x, s);
            let v = g.mul(phi[x], t);
            if phi[y] == usize::MAX {
                phi[y] = v;
                stack.push(y);
            } else if phi[y] != v {
                return None;
            }
        }
    }
    let mut hit = vec![false; n];
    for &v in &phi {
        if hit[v] {
            return None;
        }
        hit[v] = true;
    }
    for a in 0..n {
        for b in 0..n {
            if phi[g.mul(a, b)] != g.mul(phi[a], phi[b]) {
                return None;
            }
        }
    }
    Some(phi)
}

/// H ⋊ G with (h2,g2)(h1,g1) = (h2 · ^{g2}h1, g2 g1); pair (h,g) is `h * |G| + g`.
pub fn semidirect_product(h: &FiniteGroup, g: &FiniteGroup, act: &GroupAction) -> FiniteGroup {
    let ng = g.order();
    let n = h.order() * ng;
    let mut mul = Vec::with_capacity(n * n);
    for x in 0..n {
        let (h2, g2) = (x / ng, x % ng);
        for y in 0..n {
            let (h1, g1) = (y / ng, y % ng);
            mul.push(h.mul(h2, act.apply(g2, h1)) * ng + g.mul(g2, g1));
        }
    }
    FiniteGroup::from_flat(n, mul).expect("semidirect product of a valid action")
}

/// Exhaustive isomorphism search by backtracking on generator images.
/// Test utility; returns an isomorphism `a -> b` if one exists.
pub fn find_isomorphism(a: &FiniteGroup, b: &FiniteGroup) -> Option<Vec<usize>> {
    if a.order() != b.order() {
        return None;
    }
    let gens = a.generators();
    let mut images = Vec::new();
    find_iso_rec(a, b, &gens, &mut images)
}

fn find_iso_rec(a: &FiniteGroup, b: &FiniteGroup, gens: &[usize], images: &mut Vec<usize>) -> Option<Vec<usize>> {
    if images.len() == gens.len() {
        return close_map_between(a, b, gens, images);
    }
    let ord = a.element_order(gens[images.len()]);
    for cand in 0..b.order() {
        if b.element_order(cand) == ord {
            images.push(cand);
            if let Some(m) = find_iso_rec(a, b, gens, images) {
                return Some(m);
            }
            images.pop();
        }
    }
    None
}

fn close_map_between(a: &FiniteGroup, b: &FiniteGroup, gens: &[usize], images: &[usize]) -> Option<Vec<usize>> {
    let n = a.order();
    let mut phi = vec![usize::MAX; n];
    phi[0] = 0;
    let mut stack = vec![0];
    while let Some(x) = stack.pop() {
        for (&s, &t) in gens.iter().zip(images) {
            let y = a.mul(x, s);
            let v = b.mul(phi[x], t);
            if phi[y] == usize::MAX {
                phi[y] = v;
                stack.push(y);
            } else if phi[y] != v {
                return None;
            }
        }
    }
    let mut hit = vec![false; n];
    for &v in &phi {
        if hit[v] {
            return None;
        }
        hit[v] = true;
    }
    GroupHom::new(a, b, phi.clone()).ok().map(|_| phi)
}

/// Conjugacy classes, each sorted, ordered by least element.
pub fn conjugacy_classes(g: &FiniteGroup) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.order()];
    let mut out = Vec::new();
    for x in 0..g.order() {
        if seen[x] {
            continue;
        }
        let mut class: Vec<usize> = (0..g.order()).map(|h| g.conj(h, x)).collect();
        class.sort_unstable();
        class.dedup();
        for &y in &class {
            seen[y] = true;
        }
        out.push(class);
    }
    out
}
