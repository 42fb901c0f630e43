//! Command-line front end: reads a JSON job, runs one computation and writes a
//! JSON or Markdown report.
//!
//! Exit codes: 0 when every requested check passes, 1 on a failed assertion,
//! 2 on a malformed job or command line, 3 when a degree cap is too small.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use pdcrys::cartier::{glue_alpha, glue_is_horizontal, shiho_phi, verify_glue_cocycle};
use pdcrys::chart::FrobLift;
use pdcrys::cohom::{
    plain_cohomology, verify_theorem_13, Caps, CohomError, CohomologyReport, GluedModule, ReportOptions, Status,
    CLAIM_CERT,
};
use pdcrys::conn::{ConnModule, Lambda, StratTable};
use pdcrys::selftest;

pub mod build;
pub mod jobspec;
pub mod report;

use build::Built;
use jobspec::JobSpec;
use report::{elem_matrix, group_display, matrix_display, matrix_terms, Report};

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Cmd {
    CheckConnection,
    Stratify,
    Shiho,
    Glue,
    MfValidate,
    Cohomology,
    VerifyThm13,
    Selftest,
}

impl Cmd {
    pub fn name(self) -> &'static str {
        match self {
            Cmd::CheckConnection => "check-connection",
            Cmd::Stratify => "stratify",
            Cmd::Shiho => "shiho",
            Cmd::Glue => "glue",
            Cmd::MfValidate => "mf-validate",
            Cmd::Cohomology => "cohomology",
            Cmd::VerifyThm13 => "verify-thm13",
            Cmd::Selftest => "selftest",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Md,
}

#[derive(Debug, Parser)]
#[command(name = "pdcrys", version, about = "Exact crystalline computations on framed charts over Z/p^n")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Cmd,
    /// Job description (JSON); not needed for selftest.
    pub job: Option<PathBuf>,
    /// Laurent degree cap of the small complex.
    #[arg(long)]
    pub cap_poly: Option<i32>,
    /// Divided-power degree cap.
    #[arg(long)]
    pub cap_pd: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory receiving report.json and report.md.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the report printed on stdout.
    #[arg(long, value_enum, default_value = "md")]
    pub format: Format,
    /// Named Frobenius lifts, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lifts: Vec<String>,
    /// Run only these acceptance criteria (selftest).
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    Schema(String),
    Math(String),
    Cap(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Math(_) => 1,
            Failure::Schema(_) => 2,
            Failure::Cap(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Schema(s) | Failure::Math(s) | Failure::Cap(s) => s,
        }
    }
}

fn math<E: Display>(at: &str) -> impl Fn(E) -> Failure + '_ {
    move |e| Failure::Math(format!("{at}: {e}"))
}

fn cohom_failure(at: &str) -> impl Fn(CohomError) -> Failure + '_ {
    move |e| {
        if e.is_cap_failure() {
            Failure::Cap(format!("{at}: {e}"))
        } else {
            Failure::Math(format!("{at}: {e}"))
        }
    }
}

/// Parses `args` (including the program name), runs the job and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = execute(&cli);
    let rep = match outcome {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.message());
            let mut r = Report::new(cli.command.name());
            let kind = match f {
                Failure::Schema(_) => "schema",
                Failure::Math(_) => "assertion",
                Failure::Cap(_) => "cap",
            };
            r.put("error", json!({ "kind": kind, "message": f.message() }));
            match f {
                Failure::Schema(_) => r.schema_error(f.message()),
                Failure::Cap(_) => r.cap_check("error", false, f.message()),
                Failure::Math(_) => r.check("error", false, f.message()),
            }
            if let Err(e) = emit(&cli, &r) {
                eprintln!("error: {e}");
            }
            return f.code();
        }
    };
    if let Err(e) = emit(&cli, &rep) {
        eprintln!("error: {e}");
        return 2;
    }
    rep.exit_code()
}

fn emit(cli: &Cli, rep: &Report) -> Result<(), String> {
    let json = serde_json::to_string_pretty(&rep.to_json()).expect("reports serialize");
    let md = rep.to_markdown();
    let mut out = std::io::stdout().lock();
    let _ = match cli.format {
        Format::Json => writeln!(out, "{json}"),
        Format::Md => write!(out, "{md}"),
    };
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        std::fs::write(dir.join("report.json"), json + "\n").map_err(|e| format!("{}: {e}", dir.display()))?;
        std::fs::write(dir.join("report.md"), md).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<Report, Failure> {
    if cli.command == Cmd::Selftest {
        return Ok(selftest_report(cli));
    }
    let path = cli
        .job
        .as_ref()
        .ok_or_else(|| Failure::Schema(format!("{} needs a job file", cli.command.name())))?;
    let job = JobSpec::load(path).map_err(Failure::Schema)?;
    if let Some(name) = job.command.as_ref().and_then(|c| c.name.as_ref()) {
        if Cmd::from_str(name, false).is_err() {
            return Err(Failure::Schema(format!("command.name: unknown subcommand \"{name}\"")));
        }
    }
    let b = build::atlas(&job).map_err(Failure::Schema)?;
    let mut rep = Report::new(cli.command.name());
    let r = build::ring(&job).map_err(Failure::Schema)?;
    rep.put("ring", json!({ "p": r.p(), "n": r.n(), "s": r.s() }));
    rep.put("charts", json!(b.atlas.len()));
    rep.put("dimension", json!(b.atlas.d));
    match cli.command {
        Cmd::CheckConnection => check_connection(cli, &job, &b, &mut rep)?,
        Cmd::Stratify => stratify(cli, &job, &b, &mut rep)?,
        Cmd::Shiho => shiho(cli, &job, &b, &mut rep)?,
        Cmd::Glue => glue(cli, &job, &b, &mut rep)?,
        Cmd::MfValidate => mf_validate(cli, &job, &b, &mut rep)?,
        Cmd::Cohomology => cohomology(cli, &job, &b, &mut rep)?,
        Cmd::VerifyThm13 => verify(cli, &job, &b, &mut rep)?,
        Cmd::Selftest => unreachable!(),
    }
    Ok(rep)
}

fn chart_index(job: &JobSpec, b: &Built) -> Result<usize, Failure> {
    let j = job.command.as_ref().and_then(|c| c.chart).unwrap_or(0);
    if j >= b.atlas.len() {
        return Err(Failure::Schema(format!("command.chart: no chart {j}")));
    }
    Ok(j)
}

fn lift_names(cli: &Cli, job: &JobSpec) -> Vec<String> {
    if cli.lifts.is_empty() {
        job.command.as_ref().map(|c| c.lifts.clone()).unwrap_or_default()
    } else {
        cli.lifts.clone()
    }
}

/// The first requested lift, or the atlas lift of chart `j`.
fn chosen_lift(cli: &Cli, job: &JobSpec, b: &Built, j: usize) -> Result<(String, FrobLift), Failure> {
    match lift_names(cli, job).first() {
        Some(name) => {
            let (c, f) = b.lift(name).map_err(Failure::Schema)?;
            if *c != j {
                return Err(Failure::Schema(format!("lift \"{name}\" lives on chart {c}, not chart {j}")));
            }
            Ok((name.clone(), f.clone()))
        }
        None => Ok((format!("atlas lift of chart {j}"), b.atlas.lifts[j].clone())),
    }
}

fn lambda_name(l: Lambda) -> &'static str {
    match l {
        Lambda::One => "one",
        Lambda::P => "p",
        Lambda::Higgs => "higgs",
    }
}

fn connection_data(m: &ConnModule) -> Value {
    json!({
        "rank": m.rank,
        "lambda": lambda_name(m.lambda),
        "matrices": m.a.iter().map(matrix_terms).collect::<Vec<_>>(),
    })
}

fn connection_section(title: &str, m: &ConnModule) -> String {
    let mut s = format!("## {title}\n\n");
    for (i, a) in m.a.iter().enumerate() {
        s.push_str(&format!("- A_{} = {}\n", i + 1, matrix_display(a, &m.chart.names)));
    }
    s
}

fn check_connection(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let _ = cli;
    let j = chart_index(job, b)?;
    let m = build::connection(job, b, j).map_err(Failure::Schema)?;
    let spec = build::module_spec(job).map_err(Failure::Schema)?;
    let bound = build::bound(m.ring(), spec);
    rep.put("chart", json!(j));
    rep.put("connection", connection_data(&m));
    rep.sections.push(connection_section("Connection", &m));
    rep.check("integrable", m.check_integrable(), "");
    match m.quasi_nilpotence_order(bound) {
        Ok(k) => {
            rep.put("nilpotence_order", json!(k));
            rep.check("quasi-nilpotent", true, format!("order {k}"));
        }
        Err(e) => rep.check("quasi-nilpotent", false, e.to_string()),
    }
    if m.lambda == Lambda::One {
        let curv = m.p_curvature().map_err(math("p-curvature"))?;
        rep.put("p_curvature", Value::Array(curv.iter().map(matrix_terms).collect()));
        let mut s = String::from("## p-curvature\n\n");
        for (i, c) in curv.iter().enumerate() {
            s.push_str(&format!("- ψ_{} = {}\n", i + 1, matrix_display(c, &m.chart.names)));
        }
        rep.sections.push(s);
    }
    Ok(())
}

fn table_data(t: &StratTable) -> Value {
    json!({
        "flavor": format!("{:?}", t.flavor),
        "max_weight": t.max_weight(),
        "entries": t
            .entries
            .iter()
            .map(|(i, m)| json!({ "index": i.to_vec(), "matrix": matrix_terms(m) }))
            .collect::<Vec<_>>(),
    })
}

fn stratify(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let _ = cli;
    let j = chart_index(job, b)?;
    let spec = build::module_spec(job).map_err(Failure::Schema)?;
    let table = if !spec.gamma.is_empty() {
        build::gamma(job, b).map_err(Failure::Schema)?.stratify()
    } else {
        let m = build::connection(job, b, j).map_err(Failure::Schema)?;
        let bound = build::bound(m.ring(), spec);
        match m.stratify(bound) {
            Ok(t) => t,
            Err(e) => {
                rep.check("stratification", false, e.to_string());
                return Ok(());
            }
        }
    };
    rep.put("chart", json!(j));
    rep.put("table", table_data(&table));
    rep.check("counit", table.counit_ok(), "");
    rep.check("cocycle", table.verify_cocycle(), "");
    let names = &b.atlas.charts[j].names;
    let mut s = format!("## {:?}-flavor stratification\n\n", table.flavor);
    for (i, m) in &table.entries {
        s.push_str(&format!("- θ_{:?} = {}\n", i.to_vec(), matrix_display(m, names)));
    }
    rep.sections.push(s);
    Ok(())
}

fn p_connection(job: &JobSpec, b: &Built, j: usize) -> Result<ConnModule, Failure> {
    let spec = build::module_spec(job).map_err(Failure::Schema)?;
    if !spec.gamma.is_empty() {
        let g = build::gamma(job, b).map_err(Failure::Schema)?;
        return Ok(g.p_connection(&b.atlas.charts[j]));
    }
    build::connection(job, b, j).map_err(Failure::Schema)
}

fn shiho(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let j = chart_index(job, b)?;
    let m = p_connection(job, b, j)?;
    let spec = build::module_spec(job).map_err(Failure::Schema)?;
    let bound = build::bound(m.ring(), spec);
    let (name, f) = chosen_lift(cli, job, b, j)?;
    rep.put("chart", json!(j));
    rep.put("lift", json!(name));
    rep.put("input", connection_data(&m));
    let out = match shiho_phi(&f, &m, bound) {
        Ok(x) => x,
        Err(e) => {
            rep.check("Φ_F defined", false, e.to_string());
            return Ok(());
        }
    };
    rep.check("Φ_F defined", true, "");
    rep.check("output integrable", out.check_integrable(), "");
    let p = m.ring().p() as u32;
    match out.quasi_nilpotence_order(bound * p) {
        Ok(k) => {
            rep.put("nilpotence_order", json!(k));
            rep.check("output quasi-nilpotent", true, format!("order {k}"));
        }
        Err(e) => rep.check("output quasi-nilpotent", false, e.to_string()),
    }
    rep.put("output", connection_data(&out));
    rep.sections.push(connection_section(&format!("Φ_F for {name}"), &out));
    Ok(())
}

fn glue(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let names = lift_names(cli, job);
    if names.len() < 2 {
        return Err(Failure::Schema("glue needs at least two lifts (--lifts F1,F2,...)".into()));
    }
    let mut lifts = Vec::new();
    let mut chart = None;
    for n in &names {
        let (c, f) = b.lift(n).map_err(Failure::Schema)?;
        if chart.is_some_and(|x| x != *c) {
            return Err(Failure::Schema(format!("lift \"{n}\" lives on a different chart")));
        }
        chart = Some(*c);
        lifts.push(f.clone());
    }
    let j = chart.unwrap_or(0);
    let g = build::gamma(job, b).map_err(Failure::Schema)?;
    let strat = g.stratify();
    let m = g.p_connection(&b.atlas.charts[j]);
    let spec = build::module_spec(job).map_err(Failure::Schema)?;
    let bound = build::bound(m.ring(), spec);
    rep.put("chart", json!(j));
    rep.put("lifts", json!(names));
    let chart_names = &b.atlas.charts[j].names;
    let mut alphas = Vec::new();
    let mut s = String::from("## Gluing matrices\n\n");
    for a in 0..lifts.len() {
        for c in a + 1..lifts.len() {
            let alpha = glue_alpha(&lifts[a], &lifts[c], &strat).map_err(math("glue"))?;
            let h = glue_is_horizontal(&lifts[a], &lifts[c], &m, &strat, bound).map_err(math("glue"))?;
            rep.check(format!("α({},{}) horizontal", names[a], names[c]), h, "");
            s.push_str(&format!("- α({},{}) = {}\n", names[a], names[c], matrix_display(&alpha, chart_names)));
            alphas.push(json!({ "from": names[a], "to": names[c], "matrix": matrix_terms(&alpha) }));
        }
    }
    for a in 0..lifts.len().saturating_sub(2) {
        let ok = verify_glue_cocycle(&lifts[a], &lifts[a + 1], &lifts[a + 2], &strat).map_err(math("glue"))?;
        rep.check(
            format!("cocycle ({},{},{})", names[a], names[a + 1], names[a + 2]),
            ok,
            "",
        );
    }
    rep.put("alpha", Value::Array(alphas));
    rep.sections.push(s);
    Ok(())
}

fn mf_validate(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let spec = build::module_spec(job).map_err(Failure::Schema)?;
    let charts: Vec<usize> = if spec.structure_sheaf || !spec.charts.is_empty() {
        (0..b.atlas.len()).collect()
    } else {
        vec![chart_index(job, b)?]
    };
    let mut per_chart = Vec::new();
    for j in charts {
        let (name, f) = if charts_named(cli, job) {
            chosen_lift(cli, job, b, j)?
        } else {
            (format!("atlas lift of chart {j}"), b.atlas.lifts[j].clone())
        };
        let fm = build::fontaine_module(job, b, j, &f).map_err(Failure::Schema)?;
        let v = fm.validate();
        for (item, ok, w) in &v.items {
            rep.check(format!("chart {j}: {item}"), *ok, w.clone());
        }
        per_chart.push(json!({
            "chart": j,
            "lift": name,
            "weights": fm.weights(),
            "ok": v.ok(),
        }));
    }
    rep.put("modules", Value::Array(per_chart));
    Ok(())
}

fn charts_named(cli: &Cli, job: &JobSpec) -> bool {
    !lift_names(cli, job).is_empty()
}

fn caps(cli: &Cli, job: &JobSpec, g: &GluedModule) -> Result<Caps, Failure> {
    let cmd = job.command.clone().unwrap_or_default();
    let poly = cli.cap_poly.or(cmd.cap_poly);
    let pd = cli.cap_pd.or(cmd.cap_pd);
    let p = g.ring().p() as i32;
    let mut c = match (poly, cmd.cap_big, pd) {
        (Some(a), Some(b), Some(c)) => Caps { poly: a, poly_big: b, pd: c },
        _ => Caps::default_for(g).map_err(cohom_failure("default caps"))?,
    };
    if let Some(a) = poly {
        c.poly = a;
        c.poly_big = cmd.cap_big.unwrap_or(p * a + p);
    } else if let Some(b) = cmd.cap_big {
        c.poly_big = b;
    }
    if let Some(x) = pd {
        c.pd = x;
    }
    if c.poly < 0 || c.poly_big < c.poly {
        return Err(Failure::Schema(format!(
            "caps: need 0 ≤ cap_poly ≤ cap_big, got {} and {}",
            c.poly, c.poly_big
        )));
    }
    Ok(c)
}

fn caps_data(c: &Caps) -> Value {
    json!({ "poly": c.poly, "big": c.poly_big, "pd": c.pd })
}

fn groups_section(p: u64, rows: &[(usize, Vec<u32>, bool)]) -> String {
    let mut s = String::from("## Cohomology\n\n| degree | group | invariants | stable |\n|---|---|---|---|\n");
    for (m, e, st) in rows {
        s.push_str(&format!("| {m} | {} | {e:?} | {} |\n", group_display(p, e), if *st { "yes" } else { "no" }));
    }
    s
}

fn cohomology(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let g = build::glued(job, b).map_err(Failure::Schema)?;
    let c = caps(cli, job, &g)?;
    rep.put("caps", caps_data(&c));
    let groups = plain_cohomology(&g, c).map_err(cohom_failure("cohomology"))?;
    let mut rows = Vec::new();
    let mut data = Vec::new();
    for gr in &groups {
        let cert = &gr.certificate;
        rep.cap_check(
            format!("H^{} stable", gr.degree),
            cert.holds(),
            format!("{:?} at caps {:?}, {:?} one step up", cert.exps, cert.caps, cert.exps_next),
        );
        rows.push((gr.degree, gr.exps.clone(), cert.holds()));
        data.push(json!({ "degree": gr.degree, "invariants": gr.exps, "stable": cert.holds() }));
    }
    rep.put("groups", Value::Array(data));
    rep.sections.push(groups_section(g.ring().p(), &rows));
    Ok(())
}

fn report_options(job: &JobSpec) -> ReportOptions {
    let mut o = ReportOptions::default();
    if let Some(c) = &job.command {
        o.frobenius = c.frobenius.unwrap_or(o.frobenius);
        o.lambda = c.lambda.unwrap_or(o.lambda);
        o.e1 = c.e1.unwrap_or(o.e1);
    }
    o
}

fn verify(cli: &Cli, job: &JobSpec, b: &Built, rep: &mut Report) -> Result<(), Failure> {
    let g = build::glued(job, b).map_err(Failure::Schema)?;
    let c = caps(cli, job, &g)?;
    rep.put("caps", caps_data(&c));
    let opts = report_options(job);
    let res = verify_theorem_13(&g, c, opts).map_err(cohom_failure("verify-thm13"))?;
    for claim in res.claims() {
        let st = res.status(&claim);
        let failing: Vec<String> = res
            .verdicts
            .iter()
            .filter(|v| v.claim == claim && v.in_range && !v.holds)
            .map(|v| format!("degree {} index {}: {}", v.degree, v.index, v.witness))
            .collect();
        let detail = if st == Status::Vacuous { "vacuous".to_string() } else { failing.join("; ") };
        if claim == CLAIM_CERT {
            rep.cap_check(claim.clone(), st != Status::Fail, detail);
        } else {
            rep.check(claim.clone(), st != Status::Fail, detail);
        }
    }
    verify_data(&res, rep);
    Ok(())
}

fn verify_data(res: &CohomologyReport, rep: &mut Report) {
    let r = pdcrys::ring::Ring::new(res.p, res.n, res.s).expect("report ring");
    let rows: Vec<(usize, Vec<u32>, bool)> = res
        .groups
        .iter()
        .map(|g| (g.degree, g.exps.clone(), g.certificate.holds()))
        .collect();
    rep.sections.push(groups_section(res.p, &rows));
    rep.put("level", json!(res.level));
    rep.put(
        "groups",
        Value::Array(
            res.groups
                .iter()
                .map(|g| json!({ "degree": g.degree, "invariants": g.exps, "stable": g.certificate.holds() }))
                .collect(),
        ),
    );
    rep.put(
        "filtration",
        Value::Array(
            res.filtration
                .iter()
                .map(|f| {
                    json!({
                        "degree": f.degree,
                        "i": f.i,
                        "source": f.source_exps,
                        "image": f.image_exps,
                        "injective": f.injective,
                    })
                })
                .collect(),
        ),
    );
    rep.put("pd_image", json!(res.pd_exps));
    rep.put(
        "phi",
        Value::Array(
            res.phi
                .iter()
                .map(|x| {
                    json!({
                        "degree": x.degree,
                        "i": x.i,
                        "matrix": elem_matrix(&r, &x.matrix),
                        "independent_of_lift": x.two_lifts_agree,
                        "divisibility": x.divisibility,
                    })
                })
                .collect(),
        ),
    );
    rep.put(
        "e1",
        Value::Array(
            res.e1
                .iter()
                .map(|e| {
                    json!({
                        "r": e.r,
                        "s": e.s,
                        "invariants": e.exps,
                        "d1_zero": e.d1_zero,
                        "in_range": e.in_range,
                    })
                })
                .collect(),
        ),
    );
    rep.put(
        "lambda",
        Value::Array(
            res.lambda
                .iter()
                .map(|l| {
                    json!({
                        "degree": l.degree,
                        "invariants": l.exps,
                        "psi": elem_matrix(&r, &l.psi_matrix),
                        "injective": l.injective,
                        "surjective": l.surjective,
                        "exact": l.exact_sequence,
                        "expected": format!("{:?}", l.expected),
                    })
                })
                .collect(),
        ),
    );
    if !res.phi.is_empty() {
        let mut s = String::from("## Divided Frobenius\n\n| degree | i | matrix | lift independent |\n|---|---|---|---|\n");
        for x in &res.phi {
            let cols: Vec<String> = x
                .matrix
                .iter()
                .map(|c| format!("[{}]", c.iter().map(|&v| r.fmt_elem(v)).collect::<Vec<_>>().join(", ")))
                .collect();
            s.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                x.degree,
                x.i,
                cols.join(" "),
                if x.two_lifts_agree { "yes" } else { "no" }
            ));
        }
        rep.sections.push(s);
    }
    let mut s = String::from("## Verdicts\n\n| claim | status |\n|---|---|\n");
    for c in res.claims() {
        s.push_str(&format!("| {c} | {} |\n", res.status(&c).name()));
    }
    rep.sections.push(s);
}

fn selftest_report(cli: &Cli) -> Report {
    let mut rep = Report::new("selftest");
    rep.put("seed", json!(cli.seed));
    let which: Vec<usize> = if cli.only.is_empty() {
        (1..=selftest::CRITERIA.len()).collect()
    } else {
        cli.only.clone()
    };
    for k in which {
        if k == 0 || k > selftest::CRITERIA.len() {
            rep.check(format!("criterion {k}"), false, "no such criterion");
            continue;
        }
        let res = selftest::run(k, cli.seed);
        eprintln!("criterion {k}: {:.2?} of {:?}", res.elapsed, res.budget);
        rep.check(
            format!("criterion {}: {}", res.number, res.name),
            res.pass,
            format!("{} (budget {} s)", res.detail, res.budget.as_secs()),
        );
    }
    rep
}
