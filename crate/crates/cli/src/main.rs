//! `signalcert` command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use signalcert::behavior::{AnyBehavior, NsConstraint};
use signalcert::catalog::{self, home_polytope};
use signalcert::channel::{named_polytope, ChannelParams, PolytopeSpec};
use signalcert::functional::{chsh, t_bounds, t_functional, w_functional, Family, Functional};
use signalcert::geometry::{
    extreme_points, membership, ns_project, verify_facet, verify_membership, FacetReport, Sense, DEFAULT_NS_ORDER,
};
use signalcert::quantum::{
    optimize_violation, prop2_strategy, prop3_constant, prop3_strategy, sos_check, QubitStrategy,
};
use signalcert::randomness::{chsh_strategy, classical_attack_lp, noise_threshold, noisy_bell_value, vertex_maximum};
use signalcert::relax::{
    diff_bound, diff_bound_witness, dyadic, kappa, md_to_pd, pd_to_channel, random_md_model, random_pd_extremal,
    sample_and_verify_inclusion,
};
use signalcert::scalar::{fmt_q, parse_q, q, q_from_f64, qi, rationalize, Scalar, Q};
use signalcert::{BehaviorQ, Error};

#[derive(Parser, Serialize)]
#[command(
    name = "signalcert",
    version,
    about = "Signaling local polytopes: vertices, certificates, facets, witnesses"
)]
struct Cli {
    /// Master seed; SIGNALCERT_SEED overrides it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Read decimal literals as the nearest k/DEN instead of the exact decimal.
    #[arg(long, global = true, value_name = "DEN")]
    rationalize: Option<i64>,
    #[arg(long, global = true, value_enum, default_value_t = NumberMode::Exact)]
    number_mode: NumberMode,
    /// Float tolerance for numerical verdicts.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Latex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum NumberMode {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Plain,
    Oneway,
    Star,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Vertices of a channel polytope.
    Vertices(VerticesArgs),
    /// Exact hull membership with a certificate.
    Member(MemberArgs),
    /// Facet catalog: verify, list, show.
    Facets {
        #[command(subcommand)]
        action: FacetsAction,
    },
    /// Vertices of a polytope cut by non-signaling constraints.
    NsProject(NsArgs),
    /// Multistart search for a two-qubit violation.
    Violate(ViolateArgs),
    /// Relaxation lemmas.
    Relax {
        #[command(subcommand)]
        action: RelaxAction,
    },
    /// Randomness diagnostics.
    Rand {
        #[command(subcommand)]
        action: RandAction,
    },
    /// Runs a dossier of checks across every module.
    Report(ReportArgs),
}

#[derive(Args, Serialize)]
struct VerticesArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    s: Option<String>,
    #[arg(long, value_enum, default_value_t = ModelKind::Plain)]
    model: ModelKind,
}

#[derive(Args, Serialize)]
struct MemberArgs {
    /// Behavior JSON file.
    #[arg(long)]
    behavior: PathBuf,
    /// `S[(p,q),(r,s)]`, `oneway(p)` or `star(p,r)`.
    #[arg(long)]
    model: String,
    /// Denominator used to make float behaviors exact.
    #[arg(long, default_value_t = 1 << 40)]
    den: i64,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FacetsAction {
    /// Checks catalog entries on their home polytopes.
    Verify(VerifyArgs),
    /// Lists catalog entries.
    List,
    /// Prints one entry at concrete parameters.
    Show(ShowArgs),
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// B1, B2, B3, B4, all, or a single id such as B3:5.
    #[arg(long, default_value = "all")]
    catalog: String,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    r: Option<String>,
    /// `a:b:step` grid for p (and r, unless --r-grid is given).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    r_grid: Option<String>,
}

#[derive(Args, Serialize)]
struct ShowArgs {
    id: String,
    #[arg(long, default_value = "1/2")]
    p: String,
    #[arg(long, default_value = "1/2")]
    r: String,
}

#[derive(Args, Serialize)]
struct NsArgs {
    #[arg(long)]
    model: String,
    /// Comma-separated constraints, e.g. `AB0,AB1,BA0,BA1`.
    #[arg(long)]
    order: Option<String>,
    /// Cross every straddling pair without reducing to vertices.
    #[arg(long)]
    naive: bool,
}

#[derive(Args, Serialize)]
struct ViolateArgs {
    #[arg(long)]
    facet: String,
    #[arg(long)]
    p: String,
    #[arg(long, default_value = "0")]
    r: String,
    #[arg(long, default_value_t = 64)]
    seeds: usize,
    /// Same as `--format json`.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RelaxAction {
    Verify(RelaxArgs),
}

#[derive(Args, Serialize)]
struct RelaxArgs {
    #[arg(long)]
    lemma: u8,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Overrides the master seed for this run.
    #[arg(long = "sample-seed")]
    sample_seed: Option<u64>,
    #[arg(long, default_value = "1/8")]
    l: String,
    #[arg(long, default_value = "1/4")]
    eps: String,
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum RandAction {
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SweepFunctional {
    Chsh,
    Tp,
    TqOpt,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_enum)]
    functional: SweepFunctional,
    #[arg(long, default_value = "1/2:9/10:1/10")]
    p_grid: String,
    #[arg(long, default_value = "0:3/10:1/10")]
    mu_grid: String,
}

#[derive(Args, Serialize)]
struct ReportArgs {
    /// Full acceptance grids instead of one point per check.
    #[arg(long)]
    all: bool,
}

/// Usage, parse and domain errors; exit code 2.
enum Fail {
    Usage(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Run = Result<bool, Fail>;

struct Ctx {
    seed: u64,
    format: Option<Format>,
    out: Option<PathBuf>,
    rationalize: Option<i64>,
    number_mode: NumberMode,
    tolerance: f64,
    config: Value,
}

impl Ctx {
    fn q(&self, s: &str) -> Result<Q, Fail> {
        match self.rationalize {
            Some(den) if s.contains('.') || s.contains('e') => {
                let x: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Fail::Usage(format!("not a number: {s:?}")))?;
                Ok(rationalize(x, den))
            }
            _ => Ok(parse_q(s)?),
        }
    }

    fn grid(&self, s: &str) -> Result<Vec<Q>, Fail> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Fail::Usage(format!("grid must be a:b:step, got {s:?}")));
        }
        let (a, b, step) = (self.q(parts[0])?, self.q(parts[1])?, self.q(parts[2])?);
        if step <= Q::zero() {
            return Err(Fail::Usage("grid step must be positive".into()));
        }
        let mut v = Vec::new();
        let mut x = a;
        while x <= b {
            v.push(x.clone());
            x += &step;
        }
        Ok(v)
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn behavior(&self, b: &BehaviorQ) -> Value {
        match self.number_mode {
            NumberMode::Exact => b.to_json(),
            NumberMode::Float => b.to_f64().to_json(),
        }
    }

    /// Wraps `body` with the resolved config and seed.
    fn document(&self, body: Value) -> Value {
        json!({ "config": self.config, "seed": self.seed, "result": body })
    }

    fn write(&self, text: &str) -> Result<(), Fail> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Fail::Usage(format!("{}: {e}", path.display()))),
            None => {
                let mut h = std::io::stdout().lock();
                h.write_all(text.as_bytes())
                    .and_then(|_| h.flush())
                    .map_err(|e| Fail::Usage(e.to_string()))
            }
        }
    }

    fn emit_json(&self, body: Value) -> Result<(), Fail> {
        let mut s = serde_json::to_string_pretty(&self.document(body)).expect("json values serialize");
        s.push('\n');
        self.write(&s)
    }

    fn emit_csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<(), Fail> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| Fail::Usage(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| Fail::Usage(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Fail::Usage(e.to_string()))?;
        self.write(&String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Rows as JSON objects keyed by the header.
    fn emit_table(&self, default: Format, header: &[&str], rows: &[Vec<String>], extra: Value) -> Result<(), Fail> {
        match self.format(default) {
            Format::Csv => self.emit_csv(header, rows),
            Format::Json => {
                let objs: Vec<Value> = rows
                    .iter()
                    .map(|r| Value::Object(header.iter().zip(r).map(|(h, v)| (h.to_string(), json!(v))).collect()))
                    .collect();
                let mut body = json!({ "rows": objs });
                if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
                    b.extend(e);
                }
                self.emit_json(body)
            }
            Format::Latex => Err(Fail::Usage("latex output is only available for `facets show`".into())),
        }
    }
}

fn spec_of(kind: ModelKind, p: Q, qq: Option<Q>, r: Option<Q>, s: Option<Q>) -> Result<PolytopeSpec, Fail> {
    Ok(match kind {
        ModelKind::Plain => {
            let half = q(1, 2);
            let qq = qq.unwrap_or_else(|| p.clone());
            let r = r.unwrap_or_else(|| half.clone());
            let s = s.unwrap_or_else(|| r.clone());
            PolytopeSpec::Plain(ChannelParams::new(p, qq, r, s)?)
        }
        ModelKind::Oneway => PolytopeSpec::OneWay(p),
        ModelKind::Star => {
            let r = r.unwrap_or_else(|| p.clone());
            PolytopeSpec::Star(p, r)
        }
    })
}

fn cmd_vertices(ctx: &Ctx, a: &VerticesArgs) -> Run {
    let opt = |s: &Option<String>| s.as_deref().map(|v| ctx.q(v)).transpose();
    let spec = spec_of(a.model, ctx.q(&a.p)?, opt(&a.q)?, opt(&a.r)?, opt(&a.s)?)?;
    let model = named_polytope(&spec);
    match ctx.format(Format::Json) {
        Format::Json => {
            let verts: Vec<Value> = model
                .vertices
                .iter()
                .map(|v| {
                    json!({
                        "behavior": ctx.behavior(&v.behavior),
                        "kA": v.source.1.ka,
                        "kB": v.source.1.kb,
                        "params": model.params[v.source.0].label(),
                    })
                })
                .collect();
            ctx.emit_json(json!({ "model": model.label, "count": model.len(), "vertices": verts }))?;
        }
        Format::Csv => {
            let mut header = vec!["kA".to_string(), "kB".to_string(), "params".to_string()];
            for r in 0..4 {
                for c in 0..4 {
                    header.push(format!("m{r}{c}"));
                }
            }
            let rows: Vec<Vec<String>> = model
                .vertices
                .iter()
                .map(|v| {
                    let mut row = vec![
                        v.source.1.ka.to_string(),
                        v.source.1.kb.to_string(),
                        model.params[v.source.0].label(),
                    ];
                    row.extend(v.behavior.flat().iter().map(|x| match ctx.number_mode {
                        NumberMode::Exact => fmt_q(x),
                        NumberMode::Float => x.to_f64().to_string(),
                    }));
                    row
                })
                .collect();
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            ctx.emit_csv(&h, &rows)?;
        }
        Format::Latex => return Err(Fail::Usage("vertices supports json and csv".into())),
    }
    Ok(true)
}

fn cmd_member(ctx: &Ctx, a: &MemberArgs) -> Run {
    let text = fs::read_to_string(&a.behavior).map_err(|e| Fail::Usage(format!("{}: {e}", a.behavior.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Fail::Usage(format!("behavior json: {e}")))?;
    let b = AnyBehavior::from_json(&v)?.to_exact(a.den);
    b.validate()?;
    let spec = PolytopeSpec::parse(&a.model)?;
    let model = named_polytope(&spec);
    let verts = model.behaviors();
    let m = membership(&b, &verts);
    let verified = verify_membership(&b, &verts, &m);
    ctx.emit_json(json!({
        "model": model.label,
        "vertices": verts.len(),
        "behavior": b.to_json(),
        "membership": m.to_json(),
        "verified": verified,
    }))?;
    Ok(m.is_inside() && verified)
}

fn acceptance_grid(fam: Family) -> Vec<Q> {
    match fam {
        Family::B1 | Family::B2 => [(11, 20), (3, 5), (13, 20), (7, 10), (3, 4), (4, 5), (17, 20), (9, 10)]
            .iter()
            .map(|&(n, d)| q(n, d))
            .collect(),
        Family::B3 => [1, 3, 5, 7, 9].iter().map(|&k| q(k, 10)).collect(),
        _ => [1, 2, 3, 4].iter().map(|&k| q(k, 5)).collect(),
    }
}

struct FacetRow {
    id: String,
    p: Q,
    r: Q,
    report: FacetReport,
}

fn verify_rows(ctx: &Ctx, a: &VerifyArgs) -> Result<Vec<FacetRow>, Fail> {
    let fams = [Family::B1, Family::B2, Family::B3, Family::B4];
    let entries: Vec<_> = match a.catalog.as_str() {
        "all" => fams.iter().flat_map(|f| catalog::family(*f)).collect(),
        s if s.contains(':') => vec![catalog::lookup(s)?],
        s => {
            let fam = Family::parse(s)?;
            if !fams.contains(&fam) {
                return Err(Fail::Usage(format!("no printed facet list for {s}")));
            }
            catalog::family(fam)
        }
    };
    let ps = |fam: Family| -> Result<Vec<Q>, Fail> {
        match (&a.p, &a.grid) {
            (Some(p), _) => Ok(vec![ctx.q(p)?]),
            (None, Some(g)) => ctx.grid(g),
            (None, None) => Ok(acceptance_grid(fam)),
        }
    };
    let rs = |fam: Family| -> Result<Vec<Q>, Fail> {
        if fam != Family::B3 {
            return Ok(vec![Q::zero()]);
        }
        match (&a.r, &a.r_grid, &a.grid) {
            (Some(r), _, _) => Ok(vec![ctx.q(r)?]),
            (None, Some(g), _) | (None, None, Some(g)) => ctx.grid(g),
            (None, None, None) => Ok(acceptance_grid(fam)),
        }
    };
    let mut rows = Vec::new();
    let mut cache: Vec<((Family, Q, Q), Vec<BehaviorQ>)> = Vec::new();
    for bf in entries {
        for p in ps(bf.family)? {
            for r in rs(bf.family)? {
                let f = match bf.instantiate(&p, &r) {
                    Ok(f) => f,
                    Err(e) => {
                        eprintln!("skipping {} at p={}, r={}: {e}", bf.id, fmt_q(&p), fmt_q(&r));
                        continue;
                    }
                };
                let key = (bf.family, p.clone(), r.clone());
                let verts = match cache.iter().find(|(k, _)| k == &key) {
                    Some((_, v)) => v.clone(),
                    None => {
                        let spec = match home_polytope(bf.family, &p, &r) {
                            Ok(s) => s,
                            Err(e) => {
                                eprintln!("skipping {} at p={}, r={}: {e}", bf.id, fmt_q(&p), fmt_q(&r));
                                continue;
                            }
                        };
                        let v = named_polytope(&spec).behaviors();
                        cache.push((key, v.clone()));
                        v
                    }
                };
                let report = verify_facet(&f.coeffs, &f.bound, f.sense, &verts);
                rows.push(FacetRow {
                    id: bf.id.clone(),
                    p: p.clone(),
                    r: r.clone(),
                    report,
                });
            }
        }
    }
    Ok(rows)
}

fn cmd_facets(ctx: &Ctx, action: &FacetsAction) -> Run {
    match action {
        FacetsAction::Verify(a) => {
            let rows = verify_rows(ctx, a)?;
            let ok = rows.iter().all(|r| r.report.is_facet);
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.id.clone(),
                        fmt_q(&r.p),
                        fmt_q(&r.r),
                        r.report.valid.to_string(),
                        r.report.saturators.to_string(),
                        r.report.saturator_rank.to_string(),
                        r.report.is_facet.to_string(),
                    ]
                })
                .collect();
            let header = ["facet_id", "p", "r", "valid", "saturators", "rank", "is_facet"];
            ctx.emit_table(Format::Csv, &header, &table, json!({ "all_facets": ok }))?;
            Ok(ok)
        }
        FacetsAction::List => {
            let rows: Vec<Vec<String>> = catalog::entries()
                .iter()
                .map(|e| {
                    vec![
                        e.id.clone(),
                        e.family.to_string(),
                        e.label.clone(),
                        e.class_size.map(|c| c.to_string()).unwrap_or_default(),
                        e.tag.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            ctx.emit_table(
                Format::Csv,
                &["id", "family", "label", "class_size", "tag"],
                &rows,
                json!({}),
            )?;
            Ok(true)
        }
        FacetsAction::Show(a) => {
            let (p, r) = (ctx.q(&a.p)?, ctx.q(&a.r)?);
            let f = instantiate_any(&a.id, &p, &r)?;
            match ctx.format(Format::Json) {
                Format::Latex => ctx.write(&format!("{}\n", f.to_latex()))?,
                Format::Json => ctx.emit_json(json!({ "p": fmt_q(&p), "r": fmt_q(&r), "functional": f.to_json() }))?,
                Format::Csv => return Err(Fail::Usage("facets show supports json and latex".into())),
            }
            Ok(true)
        }
    }
}

/// Catalog ids plus the named functionals `T`, `W` and `CHSH`.
fn instantiate_any(id: &str, p: &Q, r: &Q) -> Result<Functional, Fail> {
    Ok(match id {
        "T" | "Tp" => t_functional(p)?.instantiate(p, r)?,
        "W" | "Wpr" => w_functional().instantiate(p, r)?,
        "CHSH" | "chsh" => chsh().instantiate(p, r)?,
        _ => catalog::instantiate(id, p, r)?,
    })
}

fn parse_order(s: &str) -> Result<Vec<NsConstraint>, Fail> {
    s.split(',')
        .map(|t| match t.trim() {
            "AB0" => Ok(NsConstraint::AtoB(0)),
            "AB1" => Ok(NsConstraint::AtoB(1)),
            "BA0" => Ok(NsConstraint::BtoA(0)),
            "BA1" => Ok(NsConstraint::BtoA(1)),
            other => Err(Fail::Usage(format!(
                "unknown constraint {other:?}; use AB0, AB1, BA0, BA1"
            ))),
        })
        .collect()
}

fn cmd_ns(ctx: &Ctx, a: &NsArgs) -> Run {
    let spec = PolytopeSpec::parse(&a.model)?;
    let order = match &a.order {
        Some(s) => parse_order(s)?,
        None => DEFAULT_NS_ORDER.to_vec(),
    };
    let model = named_polytope(&spec);
    let out = ns_project(&model.behaviors(), &order, !a.naive);
    let ok = out.iter().all(|b| order.iter().all(|c| b.ns_overlap(*c).is_zero()));
    ctx.emit_json(json!({
        "model": model.label,
        "order": order.iter().map(NsConstraint::label).collect::<Vec<_>>(),
        "pruned": !a.naive,
        "count": out.len(),
        "vertices": out.iter().map(|b| ctx.behavior(b)).collect::<Vec<_>>(),
    }))?;
    Ok(ok)
}

fn strategy_json(s: &QubitStrategy) -> Value {
    json!({ "theta": s.theta, "a": s.a, "b": s.b, "mu": s.mu })
}

fn cmd_violate(ctx: &Ctx, a: &ViolateArgs) -> Run {
    let (p, r) = (ctx.q(&a.p)?, ctx.q(&a.r)?);
    let f = instantiate_any(&a.facet, &p, &r)?;
    let v = optimize_violation(&f, a.seeds, ctx.seed);
    let body = json!({
        "facet": f.id,
        "p": fmt_q(&p),
        "r": fmt_q(&r),
        "strategy": strategy_json(&v.best),
        "value": v.value,
        "bound": v.bound,
        "margin": v.margin,
        "seed": v.master_seed,
        "seeds": v.seeds,
        "converged": v.converged,
    });
    let violated = v.margin > ctx.tolerance;
    match ctx.format(Format::Json) {
        Format::Json => ctx.emit_json(body)?,
        Format::Csv => ctx.emit_csv(
            &["facet", "p", "r", "value", "bound", "margin", "seed"],
            &[vec![
                f.id.clone(),
                fmt_q(&p),
                fmt_q(&r),
                v.value.to_string(),
                v.bound.to_string(),
                v.margin.to_string(),
                ctx.seed.to_string(),
            ]],
        )?,
        Format::Latex => return Err(Fail::Usage("violate supports json and csv".into())),
    }
    Ok(violated)
}

fn lemma1(samples: usize, seed: u64) -> (bool, Value) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..samples {
        let case = (i % 4) as u8 + 1;
        let p = q(1, 2) + dyadic(&mut rng, 6) / qi(2);
        let p = if p.is_one() { q(63, 64) } else { p };
        let e = random_pd_extremal(&p, case, &mut rng);
        match pd_to_channel(&e) {
            Ok(ch) if ch.behavior() == e.behavior() => {}
            Ok(_) => failures.push(json!({ "sample": i, "error": "behavior mismatch" })),
            Err(err) => failures.push(json!({ "sample": i, "error": err.to_string() })),
        }
    }
    (
        failures.is_empty(),
        json!({ "lemma": 1, "samples": samples, "failures": failures }),
    )
}

fn lemma2(l: &Q, eps: &Q, samples: usize, seed: u64) -> Result<(bool, Value), Fail> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0usize;
    for _ in 0..samples {
        let m = random_md_model(l, eps, &mut rng);
        m.validate()?;
        if md_to_pd(&m).behavior() != m.behavior() {
            mismatches += 1;
        }
    }
    let (a, b) = diff_bound_witness(l)?;
    let bound = diff_bound(l)?;
    let witness_ok = &a[0] - &b[0] == bound;
    let k = kappa(l, eps)?;
    Ok((
        mismatches == 0 && witness_ok,
        json!({
            "lemma": 2,
            "samples": samples,
            "md_to_pd_mismatches": mismatches,
            "diff_bound": fmt_q(&bound),
            "witness_attains_bound": witness_ok,
            "kappa": fmt_q(&k),
        }),
    ))
}

fn cmd_relax(ctx: &Ctx, action: &RelaxAction) -> Run {
    let RelaxAction::Verify(a) = action;
    let seed = a.sample_seed.unwrap_or(ctx.seed);
    let (l, eps) = (ctx.q(&a.l)?, ctx.q(&a.eps)?);
    let (ok, body) = match a.lemma {
        1 => lemma1(a.samples, seed),
        2 => lemma2(&l, &eps, a.samples, seed)?,
        3 => {
            let rep = sample_and_verify_inclusion(&l, &eps, a.samples, seed)?;
            (rep.passed(), json!({ "lemma": 3, "report": rep.to_json() }))
        }
        n => return Err(Fail::Usage(format!("lemma must be 1, 2 or 3, got {n}"))),
    };
    ctx.emit_json(json!({ "pass": ok, "detail": body }))?;
    Ok(ok)
}

/// Functional, strategy and bound for one sweep row family at channel fidelity `p`.
fn sweep_target(
    kind: SweepFunctional,
    p: &Q,
    verts: &[BehaviorQ],
) -> Result<(Functional, QubitStrategy, Option<Q>), Fail> {
    let tq = |x: &Q| -> Result<(Functional, QubitStrategy), Fail> {
        Ok((
            t_functional(x)?.instantiate(x, &Q::zero())?,
            prop2_strategy(x.to_f64())?,
        ))
    };
    Ok(match kind {
        SweepFunctional::Chsh => (chsh().instantiate(p, &Q::zero())?, chsh_strategy(), None),
        SweepFunctional::Tp => {
            let (f, s) = tq(p)?;
            (f, s, None)
        }
        SweepFunctional::TqOpt => {
            let mut best: Option<(f64, Q)> = None;
            for k in 41..100 {
                let x = q(k, 100);
                let (f, s) = tq(&x)?;
                let beta = vertex_maximum(&f, verts).to_f64();
                let t = noise_threshold(&f, &s, beta);
                if best.as_ref().is_none_or(|(m, _)| t.mu_star > *m) {
                    best = Some((t.mu_star, x));
                }
            }
            let x = best.expect("nonempty q grid").1;
            let (f, s) = tq(&x)?;
            (f, s, Some(x))
        }
    })
}

fn cmd_rand(ctx: &Ctx, action: &RandAction) -> Run {
    let RandAction::Sweep(a) = action;
    let ps = ctx.grid(&a.p_grid)?;
    let mus = ctx.grid(&a.mu_grid)?;
    let half = q(1, 2);
    let mut rows = Vec::new();
    for p in &ps {
        let verts = named_polytope(&PolytopeSpec::Plain(ChannelParams::new(
            p.clone(),
            p.clone(),
            half.clone(),
            half.clone(),
        )?))
        .behaviors();
        let (f, s, q_opt) = sweep_target(a.functional, p, &verts)?;
        let vmax = vertex_maximum(&f, &verts);
        let t = noise_threshold(&f, &s, vmax.to_f64());
        for mu in &mus {
            let omega = noisy_bell_value(&f, &s, mu.to_f64());
            let target = q_from_f64(omega).ok_or_else(|| Fail::Usage("non-finite Bell value".into()))?;
            let atk = classical_attack_lp(&f, &target, &verts)?;
            rows.push(vec![
                a.functional
                    .to_possible_value()
                    .expect("no skipped variants")
                    .get_name()
                    .to_string(),
                fmt_q(p),
                q_opt.as_ref().map(fmt_q).unwrap_or_default(),
                fmt_q(mu),
                omega.to_string(),
                t.mu_star.to_string(),
                atk.p_guess.as_ref().map(fmt_q).unwrap_or_default(),
                atk.min_entropy_bits.map(|v| (v + 0.0).to_string()).unwrap_or_default(),
            ]);
        }
    }
    let header = [
        "functional",
        "p",
        "q_opt",
        "mu",
        "omega",
        "threshold_mu",
        "classical_pguess",
        "classical_minentropy_bits",
    ];
    ctx.emit_table(Format::Csv, &header, &rows, json!({}))?;
    Ok(true)
}

fn check(name: &str, ok: bool, detail: Value) -> Value {
    json!({ "check": name, "pass": ok, "detail": detail })
}

fn cmd_report(ctx: &Ctx, a: &ReportArgs) -> Run {
    let mut out = Vec::new();
    let half = q(1, 2);
    let plain =
        |p: &Q, qq: &Q, r: &Q, s: &Q| named_polytope(&PolytopeSpec::Plain(ChannelParams::of(p, qq, r, s))).behaviors();

    let generic = plain(&q(61, 100), &q(57, 100), &q(53, 100), &q(51, 100));
    let ext = extreme_points(&plain(&half, &half, &half, &half));
    out.push(check(
        "vertices",
        generic.len() == 256 && ext.len() == 16,
        json!({ "generic_count": generic.len(), "extreme_at_half": ext.len() }),
    ));

    let pr = BehaviorQ::pr_box();
    let local = plain(&half, &half, &half, &half);
    let m = membership(&pr, &local);
    out.push(check(
        "member",
        !m.is_inside() && verify_membership(&pr, &local, &m),
        json!({ "pr_box": m.to_json() }),
    ));

    let points: Vec<(&str, Option<String>, Option<String>)> = if a.all {
        vec![("all", None, None)]
    } else {
        vec![
            ("B1", Some("3/4".into()), None),
            ("B2", Some("3/5".into()), None),
            ("B3", Some("1/2".into()), Some("7/10".into())),
            ("B4", Some("3/5".into()), None),
        ]
    };
    let mut facet_rows = Vec::new();
    for (cat, p, r) in points {
        let args = VerifyArgs {
            catalog: cat.into(),
            p,
            r,
            grid: None,
            r_grid: None,
        };
        facet_rows.extend(verify_rows(ctx, &args)?);
    }
    let failing: Vec<String> = facet_rows
        .iter()
        .filter(|r| !r.report.is_facet)
        .map(|r| format!("{}@({},{})", r.id, fmt_q(&r.p), fmt_q(&r.r)))
        .collect();
    out.push(check(
        "facets",
        failing.is_empty(),
        json!({ "checked": facet_rows.len(), "not_facets": failing }),
    ));

    let p34 = q(3, 4);
    let tb = t_bounds(&p34)?;
    let tf = t_functional(&p34)?.instantiate(&p34, &Q::zero())?;
    let pphh = plain(&p34, &p34, &half, &half);
    let tmax = vertex_maximum(&tf, &pphh);
    let sos = sos_check(0.75)?;
    out.push(check(
        "t_bounds",
        tmax == tb.signaling && sos.pass,
        json!({
            "local": fmt_q(&tb.local),
            "signaling": fmt_q(&tb.signaling),
            "vertex_max": fmt_q(&tmax),
            "quantum": tb.quantum,
            "sos_min_eigenvalue": sos.residual_min_eigenvalue,
        }),
    ));

    let w = w_functional().instantiate(&q(3, 5), &q(2, 5))?;
    let wv = w.evaluate_f64(&signalcert::quantum::behavior_from_strategy(&prop3_strategy()));
    let c = (wv - 1.0) / (0.4 * 0.6);
    out.push(check(
        "prop3",
        (c - prop3_constant()).abs() < 1e-6,
        json!({ "fitted_c": c, "closed_form": prop3_constant() }),
    ));

    let ns = ns_project(&pphh, &DEFAULT_NS_ORDER, true);
    out.push(check(
        "ns_project",
        ns.len() == 32,
        json!({ "model": "S[(3/4,3/4),(1/2,1/2)]", "vertices": ns.len() }),
    ));

    let seeds = if a.all { 48 } else { 12 };
    let g = catalog::instantiate("B3:5", &q(3, 5), &q(3, 5))?;
    let v = optimize_violation(&g, seeds, ctx.seed);
    out.push(check(
        "violate",
        v.margin > ctx.tolerance,
        json!({ "facet": "B3:5", "value": v.value, "strategy": strategy_json(&v.best) }),
    ));

    let n = if a.all { 1000 } else { 100 };
    let (ok1, d1) = lemma1(n, ctx.seed);
    out.push(check("lemma1", ok1, d1));
    let (ok2, d2) = lemma2(&q(1, 8), &q(1, 4), n / 5, ctx.seed)?;
    out.push(check("lemma2", ok2, d2));
    let grid: Vec<(Q, Q)> = if a.all {
        [q(1, 8), q(1, 6)]
            .iter()
            .flat_map(|l| [qi(0), q(1, 4), q(1, 2)].map(|e| (l.clone(), e)))
            .collect()
    } else {
        vec![(q(1, 8), q(1, 4))]
    };
    let samples = if a.all { 500 } else { 50 };
    let mut reps = Vec::new();
    let mut ok3 = true;
    for (l, e) in grid {
        let r = sample_and_verify_inclusion(&l, &e, samples, ctx.seed)?;
        ok3 &= r.passed();
        reps.push(r.to_json());
    }
    out.push(check("lemma3", ok3, json!(reps)));

    let c0 = chsh().instantiate(&Q::zero(), &Q::zero())?;
    let th = noise_threshold(&c0, &chsh_strategy(), 2.0);
    let atk = classical_attack_lp(&tf, &tb.signaling, &pphh)?;
    let above = classical_attack_lp(&tf, &(&tmax + q(1, 100)), &pphh)?;
    out.push(check(
        "randomness",
        (th.mu_star - (1.0 - 0.5f64.sqrt())).abs() < 1e-9 && atk.p_guess == Some(Q::one()) && !above.feasible,
        json!({ "chsh_threshold": th.mu_star, "pguess_at_bound": atk.to_json(), "above_max": above.to_json() }),
    ));

    let ok = out.iter().all(|c| c["pass"] == json!(true));
    let sense = |s: Sense| if s == Sense::Le { "<=" } else { ">=" };
    ctx.emit_json(json!({ "all": a.all, "pass": ok, "checks": out, "t_sense": sense(tf.sense) }))?;
    Ok(ok)
}

fn run(cli: &Cli) -> Run {
    let seed = match std::env::var("SIGNALCERT_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Fail::Usage(format!("SIGNALCERT_SEED is not an integer: {s:?}")))?,
        Err(_) => cli.seed,
    };
    if cli.threads > 0 {
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let mut config = serde_json::to_value(cli).expect("config serializes");
    config["seed"] = json!(seed);
    let ctx = Ctx {
        seed,
        format: cli.format,
        out: cli.out.clone(),
        rationalize: cli.rationalize,
        number_mode: cli.number_mode,
        tolerance: cli.tolerance,
        config,
    };
    match &cli.command {
        Command::Vertices(a) => cmd_vertices(&ctx, a),
        Command::Member(a) => cmd_member(&ctx, a),
        Command::Facets { action } => cmd_facets(&ctx, action),
        Command::NsProject(a) => cmd_ns(&ctx, a),
        Command::Violate(a) => {
            let ctx = if a.json {
                Ctx {
                    format: Some(Format::Json),
                    ..ctx
                }
            } else {
                ctx
            };
            cmd_violate(&ctx, a)
        }
        Command::Relax { action } => cmd_relax(&ctx, action),
        Command::Rand { action } => cmd_rand(&ctx, action),
        Command::Report(a) => cmd_report(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `signalcert --help` for usage");
            ExitCode::from(2)
        }
    }
}
