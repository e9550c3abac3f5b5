//! `gerbecalc`: validate objects, count cohomology classes, convert between
//! gerbes, 2-bundles and cocycles, and compare 2-groups along a morphism.
//!
//! Exit codes: 0 pass, 1 invariant failure, 2 usage or parse error,
//! 3 resource cap exceeded.

mod report;

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use gerbecalc::bundle::find_isomorphism;
use gerbecalc::cohomology::{
    admissible_sections, are_equivalent_h1, bundle_to_h0, cocycle_of_sections, enumerate_h1_classes, h0_classes, h0_to_bundle,
    push_cocycle, validate_h1, DEFAULT_CAP,
};
use gerbecalc::gerbe::{extract_cocycle, glued_gerbe, least_preimage_sections};
use gerbecalc::spec::{BundleData, BundleSpec, CoverSpec, CrossedSpec, GerbeSpec, GroupoidSpec, H1CocycleSpec, NerveSpec, TwoBundleSpec};
use gerbecalc::twobundle::{e_object, find_equivariant_equivalence, r_object, roundtrip_gerbe};
use gerbecalc::twogroup::crossed_to_twogroup;
use gerbecalc::{CoverNerve, CrossedModule, Error, FiniteGroupoid, H0Cocycle, H1Cocycle, ObjectSpec, TwoGroup, TwoGroupHom};
use report::Report;
use serde::Deserialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gerbecalc", version, about = "Finite non-abelian gerbes and 2-bundles")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Worker threads for enumeration (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Enumeration cap on candidate counts.
    #[arg(long, global = true, env = "GERBECALC_CAP")]
    cap: Option<u128>,
    /// Add wall time to the report; the report is then not byte-stable.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Validate any object spec and report the first failing invariant.
    Validate {
        /// JSON object spec: a file path or inline JSON.
        #[arg(long, required_unless_present = "fixture")]
        input: Option<String>,
        /// A named 2-group, nerve or cover.
        #[arg(long, conflicts_with = "input")]
        fixture: Option<String>,
    },
    /// Count cohomology classes of a nerve and list representatives.
    Cohomology {
        /// Nerve name or JSON.
        #[arg(long)]
        nerve: String,
        /// 2-group name or crossed-module JSON (degree 1; degree 0 uses its groupoid).
        #[arg(long)]
        twogroup: Option<String>,
        /// Groupoid JSON for degree 0.
        #[arg(long, conflicts_with = "twogroup")]
        groupoid: Option<String>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        degree: u8,
    },
    /// Convert between the pictures and check the result.
    Convert {
        #[arg(long)]
        input: String,
        #[arg(long, value_enum)]
        to: Direction,
        /// Cover (name or JSON) for gerbe-to-cocycle when the gerbe has none.
        #[arg(long)]
        cover: Option<String>,
        /// Write the output object here.
        #[arg(long)]
        output: Option<String>,
    },
    /// Compare class counts of two 2-groups along a morphism.
    Compare {
        #[arg(long)]
        a: String,
        /// Target 2-group; implied by `--hom pi0`.
        #[arg(long)]
        b: Option<String>,
        /// `identity`, `pi0`, or JSON `{"f_h": [...], "f_g": [...]}`.
        #[arg(long)]
        hom: String,
        /// Comma-separated nerve names.
        #[arg(long, value_delimiter = ',', default_value = "circle3,sphere_tetra,simplex3,torus_min")]
        nerves: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    /// gerbe -> 2-bundle
    #[value(name = "2bundle")]
    TwoBundle,
    /// 2-bundle -> gerbe
    Gerbe,
    /// gerbe -> degree-1 cocycle
    Cocycle,
    /// degree-0 cocycle -> bundle
    Bundle,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::TwoBundle => "gerbe->2bundle",
            Direction::Gerbe => "2bundle->gerbe",
            Direction::Cocycle => "gerbe->cocycle",
            Direction::Bundle => "h0->bundle",
        }
    }
}

/// Setup errors: usage problems exit 2, caps exit 3, and anything else is
/// an invariant failure of the input.
enum Fail {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Section choices compared per bundle.
const SECTION_LIMIT: usize = 256;

type Out = std::result::Result<Report, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cap = cli.cap.unwrap_or(DEFAULT_CAP);
    let start = Instant::now();
    let (echo, out) = pool.install(|| run(&cli.command, cap));
    let report = match out {
        Ok(r) => r,
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Fail::Lib(e @ (Error::Parse(_) | Error::Schema(_)))) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(Fail::Lib(e @ Error::SizeLimitExceeded { .. })) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
        Err(Fail::Lib(e)) => {
            let mut r = Report::new(echo);
            r.check::<()>("input", &Err(e));
            r
        }
    };
    let mut report = report;
    if cli.timings {
        report.wall_ms = Some(start.elapsed().as_millis());
    }
    match cli.format {
        Format::Json => println!("{}", report.to_json()),
        Format::Table => print!("{}", report.to_table()),
    }
    ExitCode::from(if report.passed() { 0 } else { 1 })
}

fn run(cmd: &Command, cap: u128) -> (Value, Out) {
    match cmd {
        Command::Validate { input, fixture } => {
            let echo = json!({ "name": "validate", "input": input, "fixture": fixture });
            (echo.clone(), validate(echo, input.as_deref(), fixture.as_deref()))
        }
        Command::Cohomology { nerve, twogroup, groupoid, degree } => {
            let echo = json!({ "name": "cohomology", "nerve": nerve, "twogroup": twogroup, "groupoid": groupoid, "degree": degree });
            (echo.clone(), cohomology(echo, nerve, twogroup.as_deref(), groupoid.as_deref(), *degree, cap))
        }
        Command::Convert { input, to, cover, output } => {
            let echo = json!({ "name": "convert", "input": input, "to": to.name(), "cover": cover });
            (echo.clone(), convert(echo, input, *to, cover.as_deref(), output.as_deref(), cap))
        }
        Command::Compare { a, b, hom, nerves } => {
            let echo = json!({ "name": "compare", "a": a, "b": b, "hom": hom, "nerves": nerves });
            (echo.clone(), compare(echo, a, b.as_deref(), hom, nerves, cap))
        }
    }
}

/// A file path, inline JSON, or (for named kinds) a bare name.
fn load_json(arg: &str) -> std::result::Result<Option<String>, Fail> {
    let t = arg.trim_start();
    if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        return Ok(Some(arg.to_string()));
    }
    if Path::new(arg).is_file() {
        return std::fs::read_to_string(arg).map(Some).map_err(|e| Fail::Usage(format!("cannot read {arg}: {e}")));
    }
    Ok(None)
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> std::result::Result<T, Fail> {
    serde_json::from_str(text).map_err(|e| Fail::Lib(Error::Parse(e.to_string())))
}

fn named_or_json<T: for<'de> Deserialize<'de>>(arg: &str, named: impl FnOnce(String) -> T) -> std::result::Result<T, Fail> {
    match load_json(arg)? {
        Some(text) => parse(&text),
        None => Ok(named(arg.to_string())),
    }
}

fn crossed(arg: &str) -> std::result::Result<CrossedSpec, Fail> {
    named_or_json(arg, CrossedSpec::Named)
}

fn nerve(arg: &str) -> std::result::Result<CoverNerve, Fail> {
    Ok(named_or_json(arg, NerveSpec::Named)?.build()?)
}

fn validate(echo: Value, input: Option<&str>, fixture: Option<&str>) -> Out {
    let spec = match (input, fixture) {
        (Some(i), _) => {
            let text = load_json(i)?.ok_or_else(|| Fail::Usage(format!("{i} is neither a file nor inline JSON")))?;
            ObjectSpec::from_json(&text)?
        }
        (None, Some(f)) => ObjectSpec::fixture(f)?,
        (None, None) => return Err(Fail::Usage("give --input or --fixture".into())),
    };
    let mut r = Report::new(echo);
    r.result = json!({ "kind": spec.kind() });
    match spec.validate() {
        Err(e @ (Error::Parse(_) | Error::Schema(_) | Error::SizeLimitExceeded { .. })) => return Err(e.into()),
        res => {
            r.check(spec.kind(), &res);
        }
    }
    Ok(r)
}

fn cohomology(echo: Value, k: &str, tg: Option<&str>, gpd: Option<&str>, degree: u8, cap: u128) -> Out {
    let k = nerve(k)?;
    let mut r = Report::new(echo);
    if degree == 1 {
        let tg = tg.ok_or_else(|| Fail::Usage("degree 1 needs --twogroup".into()))?;
        let tg = crossed(tg)?.build_twogroup()?;
        let classes = enumerate_h1_classes(&k, tg, cap)?;
        r.result = json!({
            "class_count": classes.class_count,
            "reduced_count": classes.reduced_count,
            "representatives": classes.representatives,
        });
    } else {
        let gamma: FiniteGroupoid = match (tg, gpd) {
            (_, Some(g)) => {
                let text = load_json(g)?.ok_or_else(|| Fail::Usage(format!("{g} is neither a file nor inline JSON")))?;
                parse::<GroupoidSpec>(&text)?.build()?
            }
            (Some(t), None) => (*crossed(t)?.build_twogroup()?.gpd).clone(),
            (None, None) => return Err(Fail::Usage("degree 0 needs --groupoid or --twogroup".into())),
        };
        let (all, labels, n) = h0_classes(&k, &gamma, cap)?;
        let mut reps = vec![None; n];
        for (c, &l) in all.iter().zip(&labels) {
            reps[l].get_or_insert(c);
        }
        r.result = json!({ "class_count": n, "cocycle_count": all.len(), "representatives": reps });
    }
    Ok(r)
}

fn emit(r: &mut Report, out: ObjectSpec, path: Option<&str>) -> std::result::Result<(), Fail> {
    let text = serde_json::to_string_pretty(&out).expect("spec serializes");
    let again = ObjectSpec::from_json(&text).and_then(|o| o.validate());
    r.check("output revalidates", &again);
    if let Some(p) = path {
        std::fs::write(p, format!("{text}\n")).map_err(|e| Fail::Usage(format!("cannot write {p}: {e}")))?;
    }
    r.output = Some(serde_json::to_value(&out).expect("spec serializes"));
    Ok(())
}

fn convert(echo: Value, input: &str, to: Direction, cover: Option<&str>, out_path: Option<&str>, cap: u128) -> Out {
    let text = load_json(input)?.ok_or_else(|| Fail::Usage(format!("{input} is neither a file nor inline JSON")))?;
    let spec = ObjectSpec::from_json(&text)?;
    let mut r = Report::new(echo);
    let wrong = |want: &str| Fail::Usage(format!("{} expects a {want}, got {}", to.name(), spec.kind()));
    match to {
        Direction::TwoBundle => {
            let ObjectSpec::Gerbe(g) = &spec else { return Err(wrong("gerbe")) };
            let g = Arc::new(g.build()?.gerbe);
            let b = r_object(&g);
            if r.check("R(G) is a principal 2-bundle", &b) {
                let b = b.unwrap();
                let tau = b.tau_check();
                r.flag("tau is a weak equivalence", tau.is_none(), &format!("{tau:?}"));
                let rt = roundtrip_gerbe(g).and_then(|rt| rt.iso.validate());
                r.check("round trip G -> E(R(G)) is a 1-isomorphism", &rt);
                emit(&mut r, ObjectSpec::TwoBundle(TwoBundleSpec::of(&b)), out_path)?;
            }
        }
        Direction::Gerbe => {
            let ObjectSpec::TwoBundle(b) = &spec else { return Err(wrong("two_bundle")) };
            let b = b.build()?;
            let e = e_object(&b);
            if r.check("E(P) is a bundle gerbe", &e) {
                let e = e.unwrap();
                let back = r_object(&e);
                if r.check("R(E(P)) is a principal 2-bundle", &back) {
                    let iso = find_equivariant_equivalence(&back.unwrap(), &b).is_some();
                    r.flag("round trip R(E(P)) is equivalent to P", iso, "no equivariant weak equivalence over the base");
                }
                emit(&mut r, ObjectSpec::Gerbe(GerbeSpec::of(&e, None, None)), out_path)?;
            }
        }
        Direction::Cocycle => {
            let ObjectSpec::Gerbe(gs) = &spec else { return Err(wrong("gerbe")) };
            let built = gs.build()?;
            let cov = match (built.cover, cover) {
                (_, Some(c)) => named_or_json(c, CoverSpec::Named)?.build()?,
                (Some(c), None) => c,
                (None, None) => return Err(Fail::Usage("the gerbe carries no cover; pass --cover".into())),
            };
            let sections = match built.sections {
                Some(s) => s,
                None => least_preimage_sections(&built.gerbe, &cov)?,
            };
            let k = cov.nerve();
            let tg = built.gerbe.tg.clone();
            let c = extract_cocycle(&built.gerbe, &cov, &sections);
            if r.check("cocycle extracted", &c) {
                let c = c.unwrap();
                r.check("cocycle condition", &validate_h1(&k, &tg, &c));
                if let GerbeSpec::Glued { glued } = gs {
                    let orig = H1Cocycle { f: glued.f.clone(), g: glued.g.clone() };
                    let eq = are_equivalent_h1(&k, &tg, &orig, &c).is_some();
                    r.flag("round trip: equivalent to the gluing cocycle", eq, "cocycles are not cohomologous");
                } else {
                    let rt = glued_gerbe(tg.clone(), &cov, &c).and_then(|(g2, s2)| extract_cocycle(&g2, &cov, &s2));
                    if r.check("re-glued gerbe extracts", &rt) {
                        let eq = are_equivalent_h1(&k, &tg, &c, &rt.unwrap()).is_some();
                        r.flag("round trip: re-glued cocycle is equivalent", eq, "cocycles are not cohomologous");
                    }
                }
                let twogroup = CrossedSpec::of(&gerbecalc::twogroup::twogroup_to_crossed(&tg));
                let out = H1CocycleSpec { nerve: NerveSpec::of(&k), twogroup, f: c.f, g: c.g };
                emit(&mut r, ObjectSpec::H1Cocycle(out), out_path)?;
            }
        }
        Direction::Bundle => {
            let ObjectSpec::H0Cocycle(h) = &spec else { return Err(wrong("h0_cocycle")) };
            let cov = h.cover.as_ref().ok_or_else(|| Fail::Usage("h0->bundle needs the cocycle's cover".into()))?.build()?;
            let k = h.nerve()?;
            let gamma = Arc::new(h.groupoid.build()?);
            let c = h.cocycle();
            gerbecalc::cohomology::validate_h0(&k, &gamma, &c)?;
            let p = h0_to_bundle(&cov, gamma.clone(), &c);
            if r.check("bundle glued", &p) {
                let p = p.unwrap();
                let back = bundle_to_h0(&p, &cov).and_then(|c| h0_to_bundle(&cov, gamma.clone(), &c));
                if r.check("cocycle of a section choice re-glues", &back) {
                    let iso = find_isomorphism(&p, &back.unwrap()).is_some();
                    r.flag("round trip bundle -> cocycle -> bundle is isomorphic", iso, "no bundle isomorphism");
                }
                // On a finite base every bundle is trivial, so the class is
                // only choice-free when intersections constrain the sections.
                let (all, labels, _) = h0_classes(&k, &gamma, cap)?;
                let label: HashMap<&H0Cocycle, usize> = all.iter().zip(labels).collect();
                let choices = admissible_sections(&p, &cov, SECTION_LIMIT);
                let mut seen = BTreeSet::new();
                for sigma in &choices {
                    match cocycle_of_sections(&p, &cov, sigma) {
                        Ok(c) => {
                            seen.insert(label[&c]);
                        }
                        Err(e) => {
                            r.check::<()>("cocycle of a section choice", &Err(e));
                            break;
                        }
                    }
                }
                r.result = json!({
                    "input_class": label.get(&c),
                    "section_choices": choices.len(),
                    "classes_over_section_choices": seen,
                });
                let out = BundleSpec { groupoid: GroupoidSpec::of(&gamma), data: BundleData::of(&p) };
                emit(&mut r, ObjectSpec::Bundle(out), out_path)?;
            }
        }
    }
    Ok(r)
}

#[derive(Deserialize)]
struct HomSpec {
    f_h: Vec<usize>,
    f_g: Vec<usize>,
}

fn compare(echo: Value, a: &str, b: Option<&str>, hom: &str, nerves: &[String], cap: u128) -> Out {
    let ca = crossed(a)?.build()?;
    let ta = Arc::new(crossed_to_twogroup(&ca));
    let (tb, f): (Arc<TwoGroup>, TwoGroupHom) = match hom {
        "identity" => {
            if b.is_some_and(|b| crossed(b).ok() != crossed(a).ok()) {
                return Err(Fail::Usage("identity needs --b equal to --a or absent".into()));
            }
            (ta.clone(), TwoGroupHom::identity(&ta))
        }
        "pi0" => {
            let image = ca.t.image(ca.g.order());
            let (q, map) = ca.g.quotient(&image);
            let cb = CrossedModule::discrete(&q);
            if let Some(b) = b {
                let given = crossed(b)?.build()?;
                if given.g.table() != q.table() || given.h.order() != 1 {
                    return Err(Fail::Usage("pi0 needs --b to be discrete on the quotient G / im t".into()));
                }
            }
            let tb = Arc::new(crossed_to_twogroup(&cb));
            let f = TwoGroupHom::from_crossed(&ta, &tb, &vec![0; ca.h.order()], &map)?;
            (tb, f)
        }
        _ => {
            let b = b.ok_or_else(|| Fail::Usage("an explicit hom needs --b".into()))?;
            let tb = crossed(b)?.build_twogroup()?;
            let text = load_json(hom)?.ok_or_else(|| Fail::Usage(format!("{hom} is not identity, pi0, a file, or JSON")))?;
            let h: HomSpec = parse(&text)?;
            let f = TwoGroupHom::from_crossed(&ta, &tb, &h.f_h, &h.f_g)?;
            (tb, f)
        }
    };
    let mut r = Report::new(echo);
    let mut rows = Vec::new();
    for name in nerves {
        let k = nerve(name)?;
        let ca = enumerate_h1_classes(&k, ta.clone(), cap)?;
        let cb = enumerate_h1_classes(&k, tb.clone(), cap)?;
        let mut hit = vec![false; cb.class_count];
        let mut injective = true;
        for rep in &ca.representatives {
            let l = cb.class_of(&push_cocycle(rep, &f));
            let l = match l {
                Ok(l) => l,
                Err(e) => {
                    r.check::<()>(&format!("push of a cocycle on {name}"), &Err(e));
                    continue;
                }
            };
            injective &= !std::mem::replace(&mut hit[l], true);
        }
        let surjective = hit.iter().all(|&h| h);
        rows.push(json!({
            "nerve": name,
            "count_a": ca.class_count,
            "count_b": cb.class_count,
            "injective": injective,
            "surjective": surjective,
            "bijective": injective && surjective,
        }));
    }
    let all = rows.iter().all(|row| row["bijective"] == json!(true));
    r.result = json!({ "bijective_everywhere": all, "per_nerve": rows });
    Ok(r)
}
