//! JSON object specs, named fixtures, and conversion of built objects back
//! to explicit specs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteGroup, GroupAction, GroupHom, DEFAULT_AUT_CAP};
use crate::anafunctor::{Anafunctor, GammaGroupoid};
use crate::bundle::PrincipalBundle;
use crate::cohomology::{ConcreteCover, CoverNerve, H0Cocycle, H1Cocycle};
use crate::error::{Error, Result};
use crate::gerbe::{fibre_pairs, glued_gerbe, trivial_gerbe, DiscreteBundleGerbe};
use crate::groupoid::{action_groupoid, delooping, discrete_groupoid, FiniteGroupoid};
use crate::twobundle::{trivial_2bundle, Principal2Bundle};
use crate::twogroup::{crossed_to_twogroup, CrossedModule, TwoGroup};

/// Named crossed-module fixtures.
pub const TWOGROUP_FIXTURES: [&str; 7] = ["discrete:Z2", "discrete:S3", "B:Z2", "B:Z3", "AUT:Z3", "Z2_in_Z4", "Z4_onto_Z2"];

/// Groups by name: `Zn`, `Z/n`, `Sn`, and products `AxB`.
pub fn group_by_name(name: &str) -> Result<FiniteGroup> {
    if let Some((a, b)) = name.split_once('x') {
        return Ok(FiniteGroup::product(&group_by_name(a)?, &group_by_name(b)?));
    }
    let num = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1);
    if let Some(n) = name.strip_prefix("Z/").or_else(|| name.strip_prefix('Z')).and_then(num) {
        return Ok(FiniteGroup::cyclic(n));
    }
    if let Some(n) = name.strip_prefix('S').and_then(num) {
        return Ok(FiniteGroup::symmetric(n));
    }
    Err(Error::Parse(format!("unknown group name {name:?}")))
}

/// Crossed modules by name: `discrete:G`, `B:A`, `AUT:H`, `Z2_in_Z4`,
/// `Z4_onto_Z2`.
pub fn crossed_by_name(name: &str) -> Result<CrossedModule> {
    match name {
        "Z2_in_Z4" => central(2, 4, vec![0, 2]),
        "Z4_onto_Z2" => central(4, 2, vec![0, 1, 0, 1]),
        _ => match name.split_once(':') {
            Some(("discrete", g)) => Ok(CrossedModule::discrete(&group_by_name(g)?)),
            Some(("B", a)) => CrossedModule::delooping(&group_by_name(a)?),
            Some(("AUT", h)) => CrossedModule::automorphism(&group_by_name(h)?, DEFAULT_AUT_CAP),
            _ => Err(Error::Parse(format!("unknown 2-group name {name:?}"))),
        },
    }
}

fn central(h: usize, g: usize, t: Vec<usize>) -> Result<CrossedModule> {
    let (h, g) = (FiniteGroup::cyclic(h), FiniteGroup::cyclic(g));
    let t = GroupHom::new(&h, &g, t)?;
    let act = GroupAction::trivial(&g, &h);
    CrossedModule::new(h, g, t, act)
}

pub fn twogroup_by_name(name: &str) -> Result<Arc<TwoGroup>> {
    Ok(Arc::new(crossed_to_twogroup(&crossed_by_name(name)?)))
}

pub fn nerve_by_name(name: &str) -> Result<CoverNerve> {
    CoverNerve::fixture(name).ok_or_else(|| Error::Parse(format!("unknown nerve name {name:?}")))
}

pub fn cover_by_name(name: &str) -> Result<ConcreteCover> {
    match name {
        "sphere_star" => Ok(ConcreteCover::sphere_star()),
        _ => Err(Error::Parse(format!("unknown cover name {name:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Named(String),
    Table { order: usize, mul: Vec<Vec<usize>> },
    Cyclic { cyclic: usize },
    Symmetric { symmetric: usize },
    Product { product: Box<(GroupSpec, GroupSpec)> },
}

impl GroupSpec {
    pub fn build(&self) -> Result<FiniteGroup> {
        match self {
            GroupSpec::Named(n) => group_by_name(n),
            GroupSpec::Table { order, mul } => {
                if mul.len() != *order {
                    return Err(Error::Schema(format!("order {order} but {} rows", mul.len())));
                }
                FiniteGroup::from_table(mul)
            }
            GroupSpec::Cyclic { cyclic } => Ok(FiniteGroup::cyclic(*cyclic)),
            GroupSpec::Symmetric { symmetric } => Ok(FiniteGroup::symmetric(*symmetric)),
            GroupSpec::Product { product } => Ok(FiniteGroup::product(&product.0.build()?, &product.1.build()?)),
        }
    }

    pub fn of(g: &FiniteGroup) -> Self {
        GroupSpec::Table { order: g.order(), mul: g.table() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionGroupoidSpec {
    pub group: GroupSpec,
    pub points: usize,
    /// `act[h][x]`.
    pub act: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupoidSpec {
    Explicit {
        objects: usize,
        src: Vec<usize>,
        tgt: Vec<usize>,
        id: Vec<usize>,
        /// `(g2, g1, g2 ∘ g1)` for every composable pair.
        comp: Vec<(usize, usize, usize)>,
    },
    Discrete {
        discrete: usize,
    },
    Delooping {
        delooping: GroupSpec,
    },
    Action {
        action: ActionGroupoidSpec,
    },
    Cech {
        cech: NerveSpec,
    },
    /// The groupoid of a 2-group.
    TwoGroup {
        twogroup: CrossedSpec,
    },
}

impl GroupoidSpec {
    pub fn build(&self) -> Result<FiniteGroupoid> {
        match self {
            GroupoidSpec::Explicit { objects, src, tgt, id, comp } => {
                let n = src.len();
                let mut table = vec![vec![None; n]; n];
                for &(a, b, c) in comp {
                    if a >= n || b >= n {
                        return Err(Error::Schema(format!("composition entry ({a},{b}) out of range")));
                    }
                    table[a][b] = Some(c);
                }
                FiniteGroupoid::from_table(*objects, src.clone(), tgt.clone(), id.clone(), &table)
            }
            GroupoidSpec::Discrete { discrete } => Ok(discrete_groupoid(*discrete)),
            GroupoidSpec::Delooping { delooping: g } => Ok(delooping(&g.build()?)),
            GroupoidSpec::Action { action } => {
                let h = action.group.build()?;
                if action.act.len() != h.order() || action.act.iter().any(|r| r.len() != action.points) {
                    return Err(Error::Schema("action table must be |H| x points".into()));
                }
                action_groupoid(&h, action.points, |g, x| action.act[g][x])
            }
            GroupoidSpec::Cech { cech } => Ok(crate::cohomology::cech_groupoid(&cech.build()?)?.0),
            GroupoidSpec::TwoGroup { twogroup } => Ok((*twogroup.build_twogroup()?.gpd).clone()),
        }
    }

    pub fn of(g: &FiniteGroupoid) -> Self {
        let mut comp = Vec::new();
        for m1 in 0..g.n_mor() {
            for &m2 in g.out_of(g.tgt(m1)) {
                comp.push((m2, m1, g.compose(m2, m1)));
            }
        }
        comp.sort_unstable();
        GroupoidSpec::Explicit { objects: g.n_obj(), src: g.srcs().to_vec(), tgt: g.tgts().to_vec(), id: g.ids().to_vec(), comp }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrossedSpec {
    Named(String),
    Explicit {
        #[serde(rename = "H")]
        h: GroupSpec,
        #[serde(rename = "G")]
        g: GroupSpec,
        t: Vec<usize>,
        /// `act[g][h]`.
        act: Vec<Vec<usize>>,
    },
}

impl CrossedSpec {
    pub fn build(&self) -> Result<CrossedModule> {
        match self {
            CrossedSpec::Named(n) => crossed_by_name(n),
            CrossedSpec::Explicit { h, g, t, act } => {
                let (h, g) = (h.build()?, g.build()?);
                let t = GroupHom::new(&h, &g, t.clone())?;
                let act = GroupAction::new(&g, &h, act)?;
                CrossedModule::new(h, g, t, act)
            }
        }
    }

    pub fn build_twogroup(&self) -> Result<Arc<TwoGroup>> {
        Ok(Arc::new(crossed_to_twogroup(&self.build()?)))
    }

    pub fn of(cm: &CrossedModule) -> Self {
        CrossedSpec::Explicit {
            h: GroupSpec::of(&cm.h),
            g: GroupSpec::of(&cm.g),
            t: (0..cm.h.order()).map(|x| cm.t.apply(x)).collect(),
            act: cm.act.table(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NerveSpec {
    Named(String),
    Explicit {
        vertices: usize,
        #[serde(default)]
        edges: Vec<[usize; 2]>,
        #[serde(default)]
        triangles: Vec<[usize; 3]>,
        #[serde(default)]
        tetras: Vec<[usize; 4]>,
    },
}

impl NerveSpec {
    pub fn build(&self) -> Result<CoverNerve> {
        match self {
            NerveSpec::Named(n) => nerve_by_name(n),
            NerveSpec::Explicit { vertices, edges, triangles, tetras } => {
                CoverNerve::new(*vertices, edges.clone(), triangles.clone(), tetras.clone())
            }
        }
    }

    pub fn of(k: &CoverNerve) -> Self {
        NerveSpec::Explicit {
            vertices: k.vertices(),
            edges: k.edges().to_vec(),
            triangles: k.triangles().to_vec(),
            tetras: k.tetras().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoverSpec {
    Named(String),
    Explicit { points: usize, sets: Vec<Vec<usize>> },
}

impl CoverSpec {
    pub fn build(&self) -> Result<ConcreteCover> {
        match self {
            CoverSpec::Named(n) => cover_by_name(n),
            CoverSpec::Explicit { points, sets } => ConcreteCover::new(*points, sets.clone()),
        }
    }

    pub fn of(c: &ConcreteCover) -> Self {
        CoverSpec::Explicit { points: c.points, sets: c.sets.clone() }
    }
}

/// Bundle data: projection, anchor and the action as `(p, γ, p')` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleData {
    pub base: usize,
    pub total: usize,
    pub proj: Vec<usize>,
    pub anchor: Vec<usize>,
    pub action: Vec<(usize, usize, usize)>,
}

impl BundleData {
    pub fn build(&self, gamma: Arc<FiniteGroupoid>) -> Result<PrincipalBundle> {
        if self.proj.len() != self.total || self.anchor.len() != self.total {
            return Err(Error::Schema(format!("total {} but arrays of length {} and {}", self.total, self.proj.len(), self.anchor.len())));
        }
        PrincipalBundle::from_triples(gamma, self.base, self.proj.clone(), self.anchor.clone(), &self.action)
    }

    pub fn of(p: &PrincipalBundle) -> Self {
        BundleData { base: p.base(), total: p.total(), proj: p.projs().to_vec(), anchor: p.anchors().to_vec(), action: p.triples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleSpec {
    pub groupoid: GroupoidSpec,
    #[serde(flatten)]
    pub data: BundleData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnafunctorSpec {
    pub x: GroupoidSpec,
    pub y: GroupoidSpec,
    pub al: Vec<usize>,
    pub ar: Vec<usize>,
    /// `(χ, f, χ ∘ f)`.
    pub left: Vec<(usize, usize, usize)>,
    /// `(f, η, f ∘ η)`.
    pub right: Vec<(usize, usize, usize)>,
}

impl AnafunctorSpec {
    pub fn build(&self) -> Result<Anafunctor> {
        let (x, y) = (Arc::new(self.x.build()?), Arc::new(self.y.build()?));
        let l: std::collections::HashMap<(usize, usize), usize> = self.left.iter().map(|&(c, f, v)| ((c, f), v)).collect();
        let r: std::collections::HashMap<(usize, usize), usize> = self.right.iter().map(|&(f, e, v)| ((f, e), v)).collect();
        Anafunctor::new(
            x,
            y,
            self.al.clone(),
            self.ar.clone(),
            |f, c| l.get(&(c, f)).copied().unwrap_or(usize::MAX),
            |f, e| r.get(&(f, e)).copied().unwrap_or(usize::MAX),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H0CocycleSpec {
    /// Optional when `cover` is given; it is then the nerve of the cover.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nerve: Option<NerveSpec>,
    /// Needed to realize the cocycle as a bundle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverSpec>,
    pub groupoid: GroupoidSpec,
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

impl H0CocycleSpec {
    /// The nerve, checked against the cover when both are present.
    pub fn nerve(&self) -> Result<CoverNerve> {
        let from_cover = self.cover.as_ref().map(|c| c.build().map(|c| c.nerve())).transpose()?;
        match (&self.nerve, from_cover) {
            (Some(n), Some(k)) => {
                let n = n.build()?;
                if n != k {
                    return Err(Error::Schema("nerve differs from the nerve of the cover".into()));
                }
                Ok(n)
            }
            (Some(n), None) => n.build(),
            (None, Some(k)) => Ok(k),
            (None, None) => Err(Error::Schema("an h0 cocycle needs a nerve or a cover".into())),
        }
    }

    pub fn cocycle(&self) -> H0Cocycle {
        H0Cocycle { f: self.f.clone(), g: self.g.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1CocycleSpec {
    pub nerve: NerveSpec,
    pub twogroup: CrossedSpec,
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialSpec {
    pub twogroup: CrossedSpec,
    pub base: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedSpec {
    pub twogroup: CrossedSpec,
    pub cover: CoverSpec,
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GerbeSpec {
    Trivial {
        trivial: TrivialSpec,
    },
    Glued {
        glued: GluedSpec,
    },
    Explicit {
        twogroup: CrossedSpec,
        base: usize,
        pi: Vec<usize>,
        /// `P` over the pairs `(y, y')` with `π(y) = π(y')` in lexicographic order.
        bundle: BundleData,
        /// `(a, b, μ(a, b))`.
        mu: Vec<(usize, usize, usize)>,
        /// A cover of the base and sections `σ_i(x)`, for cocycle extraction.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cover: Option<CoverSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sections: Option<Vec<Vec<Option<usize>>>>,
    },
}

/// A built gerbe with the cover data it may carry.
pub struct BuiltGerbe {
    pub gerbe: DiscreteBundleGerbe,
    pub cover: Option<ConcreteCover>,
    pub sections: Option<Vec<Vec<usize>>>,
}

impl GerbeSpec {
    pub fn build(&self) -> Result<BuiltGerbe> {
        match self {
            GerbeSpec::Trivial { trivial } => {
                Ok(BuiltGerbe { gerbe: trivial_gerbe(trivial.twogroup.build_twogroup()?, trivial.base)?, cover: None, sections: None })
            }
            GerbeSpec::Glued { glued } => {
                let cover = glued.cover.build()?;
                let c = H1Cocycle { f: glued.f.clone(), g: glued.g.clone() };
                let (gerbe, sections) = glued_gerbe(glued.twogroup.build_twogroup()?, &cover, &c)?;
                Ok(BuiltGerbe { gerbe, cover: Some(cover), sections: Some(sections) })
            }
            GerbeSpec::Explicit { twogroup, base, pi, bundle, mu, cover, sections } => {
                let tg = twogroup.build_twogroup()?;
                if bundle.base != fibre_pairs(pi).len() {
                    return Err(Error::Schema("bundle base must be the number of fibre pairs".into()));
                }
                let p = bundle.build(tg.gpd.clone())?;
                let table: Vec<((usize, usize), usize)> = mu.iter().map(|&(a, b, c)| ((a, b), c)).collect();
                let gerbe = DiscreteBundleGerbe::from_table(tg, *base, pi.clone(), p, &table)?;
                let cover = cover.as_ref().map(|c| c.build()).transpose()?;
                let sections =
                    sections.as_ref().map(|s| s.iter().map(|row| row.iter().map(|v| v.unwrap_or(usize::MAX)).collect()).collect());
                Ok(BuiltGerbe { gerbe, cover, sections })
            }
        }
    }

    pub fn of(g: &DiscreteBundleGerbe, cover: Option<&ConcreteCover>, sections: Option<&[Vec<usize>]>) -> Self {
        GerbeSpec::Explicit {
            twogroup: CrossedSpec::of(&crate::twogroup::twogroup_to_crossed(&g.tg)),
            base: g.base(),
            pi: g.pi().to_vec(),
            bundle: BundleData::of(g.bundle()),
            mu: g.mu_table().into_iter().map(|((a, b), c)| (a, b, c)).collect(),
            cover: cover.map(CoverSpec::of),
            sections: sections.map(|s| s.iter().map(|row| row.iter().map(|&v| (v != usize::MAX).then_some(v)).collect()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TwoBundleSpec {
    Trivial {
        trivial: TrivialSpec,
    },
    Explicit {
        twogroup: CrossedSpec,
        groupoid: GroupoidSpec,
        base: usize,
        pi: Vec<usize>,
        /// `r0[x][g]`.
        r0: Vec<Vec<usize>>,
        /// `r1[ρ][γ]`.
        r1: Vec<Vec<usize>>,
    },
}

impl TwoBundleSpec {
    pub fn build(&self) -> Result<Principal2Bundle> {
        match self {
            TwoBundleSpec::Trivial { trivial } => trivial_2bundle(trivial.twogroup.build_twogroup()?, trivial.base),
            TwoBundleSpec::Explicit { twogroup, groupoid, base, pi, r0, r1 } => {
                let tg = twogroup.build_twogroup()?;
                let gpd = Arc::new(groupoid.build()?);
                let action = GammaGroupoid::new_unchecked(&tg, gpd, r0.concat(), r1.concat())?;
                Principal2Bundle::new(tg, action, *base, pi.clone())
            }
        }
    }

    /// The explicit form; the 2-group is given separately since it is not
    /// recoverable from the tables alone.
    pub fn of(b: &Principal2Bundle) -> Self {
        let (n0, n1) = (b.tg.n0(), b.tg.n1());
        TwoBundleSpec::Explicit {
            twogroup: CrossedSpec::of(&crate::twogroup::twogroup_to_crossed(&b.tg)),
            groupoid: GroupoidSpec::of(b.gpd()),
            base: b.base(),
            pi: b.pi().to_vec(),
            r0: b.action.r0.chunks(n0).map(<[usize]>::to_vec).collect(),
            r1: b.action.r1.chunks(n1).map(<[usize]>::to_vec).collect(),
        }
    }
}

/// Any object the CLI can validate, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectSpec {
    Group(GroupSpec),
    CrossedModule(CrossedSpec),
    Groupoid(GroupoidSpec),
    Bundle(BundleSpec),
    Anafunctor(AnafunctorSpec),
    Nerve(NerveSpec),
    Cover(CoverSpec),
    H0Cocycle(H0CocycleSpec),
    H1Cocycle(H1CocycleSpec),
    Gerbe(GerbeSpec),
    TwoBundle(TwoBundleSpec),
}

impl ObjectSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ObjectSpec::Group(_) => "group",
            ObjectSpec::CrossedModule(_) => "crossed_module",
            ObjectSpec::Groupoid(_) => "groupoid",
            ObjectSpec::Bundle(_) => "bundle",
            ObjectSpec::Anafunctor(_) => "anafunctor",
            ObjectSpec::Nerve(_) => "nerve",
            ObjectSpec::Cover(_) => "cover",
            ObjectSpec::H0Cocycle(_) => "h0_cocycle",
            ObjectSpec::H1Cocycle(_) => "h1_cocycle",
            ObjectSpec::Gerbe(_) => "gerbe",
            ObjectSpec::TwoBundle(_) => "two_bundle",
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// A named fixture: a 2-group, nerve, or cover name.
    pub fn fixture(name: &str) -> Result<Self> {
        if crossed_by_name(name).is_ok() {
            return Ok(ObjectSpec::CrossedModule(CrossedSpec::Named(name.into())));
        }
        if nerve_by_name(name).is_ok() {
            return Ok(ObjectSpec::Nerve(NerveSpec::Named(name.into())));
        }
        if cover_by_name(name).is_ok() {
            return Ok(ObjectSpec::Cover(CoverSpec::Named(name.into())));
        }
        Err(Error::Parse(format!("unknown fixture {name:?}")))
    }

    /// Builds and validates; the error is the first failing invariant.
    pub fn validate(&self) -> Result<()> {
        match self {
            ObjectSpec::Group(g) => g.build().map(drop),
            ObjectSpec::CrossedModule(c) => c.build().map(drop),
            ObjectSpec::Groupoid(g) => g.build().map(drop),
            ObjectSpec::Bundle(b) => b.data.build(Arc::new(b.groupoid.build()?)).map(drop),
            ObjectSpec::Anafunctor(a) => a.build().map(drop),
            ObjectSpec::Nerve(n) => n.build().map(drop),
            ObjectSpec::Cover(c) => c.build().map(drop),
            ObjectSpec::H0Cocycle(c) => {
                let k = c.nerve()?;
                let g = c.groupoid.build()?;
                crate::cohomology::validate_h0(&k, &g, &c.cocycle())
            }
            ObjectSpec::H1Cocycle(c) => {
                let k = c.nerve.build()?;
                let tg = c.twogroup.build_twogroup()?;
                crate::cohomology::validate_h1(&k, &tg, &H1Cocycle { f: c.f.clone(), g: c.g.clone() })
            }
            ObjectSpec::Gerbe(g) => g.build().map(drop),
            ObjectSpec::TwoBundle(b) => b.build().map(drop),
        }
    }
}
