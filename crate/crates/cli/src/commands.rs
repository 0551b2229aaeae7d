//! Command implementations. Each writes its artifacts plus a
//! `<command>.manifest.json` into the output directory.

use std::path::Path;

use phdsens::phd::{fit_phd, EigenvalueRow};
use phdsens::population::{influence_surface, linspace, PopulationModel};
use phdsens::sample::{influence_report, InfluenceReport, Target};
use phdsens::sim::{constant_targets, mc_constants, simulate, Link, McEstimate, SimModel, SimSpec};
use phdsens::{Dataset, PhdVariant};
use serde::Serialize;

use crate::cli::{
    Command, ConstantsArgs, FitArgs, InfluenceArgs, InputArgs, LinkArg, ModelArg, SimulateArgs, SurfaceArgs,
};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, Ingested};
use crate::manifest::{InputRecord, RunManifest};
use crate::output::{num, opt_num, OutDir};

/// Runs a command inside a thread pool capped at `--threads`, if given.
pub fn run(cmd: Command) -> CliResult<()> {
    let threads = match &cmd {
        Command::Fit(a) => a.common.threads,
        Command::Influence(a) => a.common.threads,
        Command::Surface(a) => a.common.threads,
        Command::Simulate(a) => a.common.threads,
        Command::ValidateConstants(a) => a.common.threads,
    };
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
            pool.install(|| dispatch(cmd))
        }
        None => dispatch(cmd),
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Fit(a) => cmd_fit(&a),
        Command::Influence(a) => cmd_influence(&a),
        Command::Surface(a) => cmd_surface(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::ValidateConstants(a) => cmd_validate_constants(&a),
    }
}

fn config_json<S: Serialize>(args: &S) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn load(input: &InputArgs) -> CliResult<(Ingested, Dataset<f64>)> {
    let ing = ingest_csv(&input.input, &input.config()?)?;
    let d = ing.dataset()?;
    Ok((ing, d))
}

fn finish(out: &mut OutDir, name: &str, manifest: RunManifest) -> CliResult<()> {
    let outputs = out.written().to_vec();
    out.write_json(&format!("{name}.manifest.json"), &manifest.finish(&outputs))
}

#[derive(Serialize)]
struct FitDocument<'a> {
    variant: PhdVariant,
    k: usize,
    n: usize,
    p: usize,
    response: &'a str,
    predictors: &'a [String],
    eigenvalues: Vec<EigenvalueRow>,
    /// `directions[k]` is the k-th leading eigenvector.
    directions: Vec<Vec<f64>>,
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("fit", config_json(a), vec![], a.common.threads);
    let (ing, d) = load(&a.input)?;
    let variant: PhdVariant = a.variant.into();
    let fit = fit_phd(&d, variant, a.k)?;
    let table = fit.eigenvalue_table();
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write_csv(
        "fit_eigenvalues.csv",
        &["index", "eigenvalue", "abs_eigenvalue", "ratio_to_next"],
        table.iter().map(|r| vec![r.index.to_string(), num(r.eigenvalue), num(r.abs_eigenvalue), opt_num(r.ratio_to_next)]),
    )?;
    let mut header = vec!["variable".to_string()];
    header.extend((1..=a.k).map(|k| format!("direction_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        "fit_basis.csv",
        &header,
        ing.predictors.iter().enumerate().map(|(i, name)| {
            let mut row = vec![name.clone()];
            row.extend((0..a.k).map(|k| num(fit.gamma_hat.columns()[(i, k)])));
            row
        }),
    )?;
    out.write_json(
        "fit.json",
        &FitDocument {
            variant,
            k: a.k,
            n: d.n(),
            p: d.p(),
            response: &ing.response,
            predictors: &ing.predictors,
            eigenvalues: table.clone(),
            directions: (0..a.k).map(|k| fit.direction(k)).collect(),
        },
    )?;
    println!("{} fit: n = {}, p = {}, K = {}", variant.label(), d.n(), d.p(), a.k);
    println!("{:>5}  {:>14}  {:>12}  {:>10}", "index", "eigenvalue", "|eigenvalue|", "ratio");
    for r in &table {
        let ratio = r.ratio_to_next.map(|v| format!("{v:.3}")).unwrap_or_default();
        println!("{:>5}  {:>14.6}  {:>12.6}  {:>10}", r.index, r.eigenvalue, r.abs_eigenvalue, ratio);
    }
    manifest.input = Some(InputRecord::new(&a.input.input.display().to_string(), &ing));
    finish(&mut out, "fit", manifest)
}

#[derive(Serialize)]
struct InfluenceDocument<'a> {
    response: &'a str,
    predictors: &'a [String],
    #[serde(flatten)]
    report: &'a InfluenceReport<f64>,
}

fn correlation_rows(rep: &InfluenceReport<f64>) -> Vec<Vec<String>> {
    rep.correlations
        .rows
        .iter()
        .map(|row| {
            let mut r = vec![row.variant.tag().to_string(), row.target.tag().to_string()];
            r.extend(row.directions.iter().map(|c| opt_num(*c)));
            r.push(opt_num(row.average));
            r
        })
        .collect()
}

fn influence_rows(rep: &InfluenceReport<f64>) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for rec in &rep.records {
        let flags = rec.flags.join("|");
        for v in PhdVariant::ALL {
            let diag = rec.variant(v);
            let at = |x: &Option<Vec<f64>>, k: usize| x.as_ref().map(|v| v[k]);
            for k in 0..rep.k {
                rows.push(vec![
                    rec.j.to_string(),
                    v.tag().to_string(),
                    (k + 1).to_string(),
                    opt_num(at(&diag.sris, k)),
                    num(diag.eris[k]),
                    opt_num(at(&diag.hris, k)),
                    num(rec.md),
                    flags.clone(),
                ]);
            }
            rows.push(vec![
                rec.j.to_string(),
                v.tag().to_string(),
                "avg".to_string(),
                opt_num(diag.sris_avg),
                num(diag.eris_avg),
                opt_num(diag.hris_avg),
                num(rec.md),
                flags.clone(),
            ]);
        }
    }
    rows
}

pub fn cmd_influence(a: &InfluenceArgs) -> CliResult<()> {
    let mut manifest = RunManifest::start("influence", config_json(a), vec![], a.common.threads);
    let (ing, d) = load(&a.input)?;
    let rep = influence_report(&d, a.k)?;
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write_csv(
        "influence.csv",
        &["j", "variant", "direction", "sris", "eris", "hris", "md", "flags"],
        influence_rows(&rep),
    )?;
    let mut header = vec!["variant".to_string(), "target".to_string()];
    header.extend((1..=a.k).map(|k| format!("direction_{k}")));
    header.push("average".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv("correlations.csv", &header, correlation_rows(&rep))?;
    out.write_json("influence.json", &InfluenceDocument { response: &ing.response, predictors: &ing.predictors, report: &rep })?;

    println!("Spearman correlation of SRIS with (n = {} of {}):", rep.correlations.n_used, rep.n);
    for v in PhdVariant::ALL {
        for t in Target::ALL {
            let row = rep.correlations.get(v, t);
            let cells: Vec<String> =
                row.directions.iter().chain([&row.average]).map(|c| c.map(|c| format!("{c:.3}")).unwrap_or("-".into())).collect();
            println!("  {:<6} {:<5} {}", v.label(), t.tag(), cells.join("  "));
        }
    }
    for v in PhdVariant::ALL {
        let max = rep.records.iter().filter_map(|r| r.variant(v).sris_avg).fold(0.0, f64::max);
        println!("max average SRIS {}: {:.4}", v.label(), max);
    }
    manifest.input = Some(InputRecord::new(&a.input.input.display().to_string(), &ing));
    finish(&mut out, "influence", manifest)
}

pub fn cmd_surface(a: &SurfaceArgs) -> CliResult<()> {
    let manifest = RunManifest::start("surface", config_json(a), vec![], a.common.threads);
    if a.grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    if !(a.norm_max.is_finite() && a.norm_max > 0.0) {
        return Err(CliError::Usage("--norm-max must be positive".into()));
    }
    let beta = a.beta.clone().unwrap_or_else(|| {
        let mut b = vec![0.0; a.p];
        if a.p > 0 {
            b[0] = 1.0;
        }
        b
    });
    let model = PopulationModel::cosine_model(a.p, &beta)?;
    let cells = influence_surface(&model, &linspace(0.0, a.norm_max, a.grid), &linspace(-1.0, 1.0, a.grid))?;
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write_csv(
        "surface.csv",
        &["norm_x0", "cos_theta0", "ris_y", "ris_r"],
        cells.iter().map(|c| vec![num(c.norm_x0), num(c.cos_theta0), num(c.ris_y), num(c.ris_r)]),
    )?;
    println!("wrote {} cells to {}", cells.len(), out.path("surface.csv").display());
    finish(&mut out, "surface", manifest)
}

fn parse_columns(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.split(';')
        .map(|col| {
            col.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad number '{v}' in --b"))))
                .collect()
        })
        .collect()
}

fn sim_spec(a: &SimulateArgs) -> CliResult<SimSpec> {
    let model = match a.model {
        ModelArg::Cosine => {
            let mut beta = a.beta.clone().unwrap_or_else(|| {
                let mut b = vec![0.0; a.p];
                if a.p > 0 {
                    b[0] = 1.0;
                }
                b
            });
            let len = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len > 0.0 {
                beta.iter_mut().for_each(|v| *v /= len);
            }
            SimModel::CosineIndex { beta, sigma: a.sigma }
        }
        ModelArg::Quadratic => SimModel::QuadraticFirst { sigma: a.sigma },
        ModelArg::Linear => SimModel::LinearIndex { beta: a.beta.clone().unwrap_or_else(|| vec![1.0; a.p]), sigma: a.sigma },
        ModelArg::Custom => {
            let b = parse_columns(a.b.as_deref().ok_or_else(|| CliError::Usage("custom model needs --b".into()))?)?;
            let link = match a.link.ok_or_else(|| CliError::Usage("custom model needs --link".into()))? {
                LinkArg::SumOfSquares => Link::SumOfSquares,
                LinkArg::Product => Link::Product,
                LinkArg::SinePlusSquare => Link::SinePlusSquare,
                LinkArg::CosineSum => Link::CosineSum,
            };
            SimModel::CustomIndex { b, link, sigma: a.sigma }
        }
    };
    SimSpec::new(a.p, a.n, model, a.seed).map_err(|e| CliError::Usage(e.to_string()))
}

/// Header `y,x1,…,xp`; readable by the `y` response default of the other commands.
pub fn write_dataset(path: &Path, d: &Dataset<f64>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["y".to_string()];
    header.extend((1..=d.p()).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for i in 0..d.n() {
        let mut row = vec![num(d.y()[i])];
        row.extend(d.row(i).iter().map(|&v| num(v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let manifest = RunManifest::start("simulate", config_json(a), vec![a.seed], a.common.threads);
    let spec = sim_spec(a)?;
    let d = simulate(&spec)?;
    let mut out = OutDir::create(&a.common.out_dir)?;
    let path = a.output.clone().unwrap_or_else(|| out.path("simulated.csv"));
    write_dataset(&path, &d)?;
    println!("wrote n = {}, p = {} to {}", d.n(), d.p(), path.display());
    let mut manifest = manifest;
    manifest.config["spec"] = serde_json::to_value(&spec).expect("spec serializes");
    let outputs = vec![path.display().to_string()];
    let name = "simulate.manifest.json";
    out.write_json(name, &manifest.finish(&outputs))
}

/// Main-text value of λ₁, which the Monte Carlo run must rule out.
pub fn excluded_lambda1() -> f64 {
    -std::f64::consts::SQRT_2 * (-2.0f64).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCheck {
    pub quantity: &'static str,
    pub target: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    /// `true` when the estimate must lie within 3 standard errors of the
    /// target, `false` when it must lie outside.
    pub expect_within: bool,
    pub pass: bool,
}

impl ConstantCheck {
    fn new(quantity: &'static str, target: f64, e: McEstimate, expect_within: bool) -> Self {
        let z = (e.estimate - target) / e.std_error;
        Self { quantity, target, estimate: e.estimate, std_error: e.std_error, z, expect_within, pass: e.within(target, 3.0) == expect_within }
    }
}

pub fn constant_checks(a: &ConstantsArgs) -> CliResult<(Vec<ConstantCheck>, SimSpec)> {
    let spec = SimSpec::cosine(a.p, 0, a.sigma, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let mc = mc_constants(&spec, a.n)?;
    let (mu_y, cov, l1) = constant_targets();
    Ok((
        vec![
            ConstantCheck::new("mu_y", mu_y, mc.mu_y, true),
            ConstantCheck::new("cov_zy", cov, mc.cov_zy, true),
            ConstantCheck::new("lambda1", l1, mc.lambda1, true),
            ConstantCheck::new("lambda1_excluded", excluded_lambda1(), mc.lambda1, false),
        ],
        spec,
    ))
}

pub fn cmd_validate_constants(a: &ConstantsArgs) -> CliResult<()> {
    let manifest = RunManifest::start("validate-constants", config_json(a), vec![a.seed], a.common.threads);
    let (checks, _) = constant_checks(a)?;
    let mut out = OutDir::create(&a.common.out_dir)?;
    out.write_csv(
        "constants.csv",
        &["quantity", "target", "estimate", "std_error", "z", "expect_within_3se", "pass"],
        checks.iter().map(|c| {
            vec![
                c.quantity.to_string(),
                num(c.target),
                num(c.estimate),
                num(c.std_error),
                num(c.z),
                c.expect_within.to_string(),
                c.pass.to_string(),
            ]
        }),
    )?;
    out.write_json("constants.json", &checks)?;
    for c in &checks {
        let relation = if c.expect_within { "within" } else { "outside" };
        println!(
            "{} {}: estimate {:.7} ± {:.7}, target {:.7} ({relation} 3 s.e., z = {:.2})",
            if c.pass { "PASS" } else { "FAIL" },
            c.quantity,
            c.estimate,
            c.std_error,
            c.target,
            c.z
        );
    }
    finish(&mut out, "validate-constants", manifest)
}

