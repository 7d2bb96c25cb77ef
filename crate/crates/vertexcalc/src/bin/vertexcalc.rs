//! Command-line verification surface for the calculus: delta-identity grids,
//! product-vs-iterate associativity on the free-boson model, product-expansion
//! fits, and equality of the two composite dual-space actions.
//!
//! Every subcommand prints a JSON report to stdout (and, with `--csv PATH`,
//! writes the matching CSV table) and exits 0 exactly when every report row
//! passes, 1 on a verification failure or an out-of-region configuration, and
//! 2 on usage errors. The environment variable `VERTEXCALC_THREADS` caps the
//! number of worker threads; report assembly is order-stable regardless of
//! how work is scheduled.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use vertexcalc::{
    assoc_csv, associativity_check, check_tau_equality, compatibility_check, delta_csv,
    fit_product_expansion, fit_csv, leading_extract, res_z, tau_csv, verify_identity,
    AlgebraElement, CorrelatorFunctional, DeltaIdentity, Error, ExpansionFit, Functional,
    LogPoint, PairSampler, RadiiSchedule, RealExpSeries, Sampler, TauRunReport,
};

#[derive(Parser)]
#[command(
    name = "vertexcalc",
    version,
    about = "Verification suites for the formal delta calculus and the free-boson composition model",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the two-variable delta-kernel identities cell-by-cell against
    /// their closed forms on a coefficient grid.
    VerifyDelta(VerifyDeltaArgs),
    /// Compare the two composition orders of three-point correlators over a
    /// basis of excitation tuples.
    Assoc(AssocArgs),
    /// Fit a two-exponent product expansion to correlator samples, or recover
    /// a planted one-variable expansion by shrinking-circle extraction.
    Fit(FitArgs),
    /// Compare the two composite actions of an algebra element on a truncated
    /// correlator functional, cell by cell.
    Tau(TauArgs),
}

/// Points accept `a+bi` (principal branch) or `mag@halfturns` (explicit
/// branch: value mag·e^{iπ·halfturns} with the rotation count kept exact).
const POINT_HELP: &str = "complex point: `a+bi` or `mag@halfturns`";

#[derive(Args)]
struct VerifyDeltaArgs {
    /// Identity labels: one ("14.9"), a comma list, or a range "14.8..14.11".
    #[arg(long, default_value = "14.8..14.11")]
    id: String,
    /// First point, |z1| > |z2| expected for the left expansions.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, help = POINT_HELP)]
    z1: LogPoint,
    /// Second point.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, help = POINT_HELP)]
    z2: LogPoint,
    /// Grid half-width: cells (r,s,t) range over [-grid, grid]^3.
    #[arg(long, default_value_t = 3)]
    grid: i64,
    /// Partial-sum truncation per series direction.
    #[arg(long, default_value_t = 400)]
    terms: usize,
    /// Absolute per-cell error tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the per-cell table as CSV (requires a single identity).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct AssocArgs {
    /// Momenta p1,p2,p3 (fractions like 1/2 accepted).
    #[arg(long, value_parser = parse_momenta, allow_hyphen_values = true)]
    p: Momenta,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, help = POINT_HELP)]
    z1: LogPoint,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, help = POINT_HELP)]
    z2: LogPoint,
    /// Intermediate-sum truncation level L (extended adaptively on demand).
    #[arg(long, default_value_t = 12)]
    level: usize,
    /// Enumerate excitation tuples up to this total level.
    #[arg(long, default_value_t = 2)]
    basis_level: usize,
    /// Relative deviation tolerance per tuple.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Write the per-tuple table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Momenta p1,p2,p3 of the product correlator to sample and fit.
    #[arg(long, value_parser = parse_momenta, allow_hyphen_values = true,
          required_unless_present = "planted", conflicts_with = "planted")]
    p: Option<Momenta>,
    /// JSON file of planted terms [[exponent, re, im], ...]: recover them by
    /// shrinking-circle extraction instead of sampling a correlator.
    #[arg(long)]
    planted: Option<PathBuf>,
    /// Candidate leading exponents, anchored one per class mod 1.
    #[arg(long, default_value = "0,0.5", value_delimiter = ',', allow_hyphen_values = true)]
    candidates: Vec<f64>,
    /// Taylor degree fitted above each anchor exponent.
    #[arg(long, default_value_t = 4)]
    degree: usize,
    /// Probe-point count along the ray z2 fixed, z1/z2 - 1 sweeping.
    #[arg(long, default_value_t = 40)]
    probes: usize,
    /// Modulus of the fixed probe base point z2.
    #[arg(long, default_value_t = 0.9)]
    base: f64,
    /// Residual tolerance (correlator fit) or extraction tolerance (planted).
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the fitted Taylor table as CSV (correlator mode only).
    #[arg(long, conflicts_with = "planted")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct TauArgs {
    /// Algebra element inserted into both composite actions.
    #[arg(long, value_enum, default_value_t = ElementKind::Omega)]
    element: ElementKind,
    /// Momenta of the product-correlator functional the actions hit.
    #[arg(long, value_parser = parse_momenta, allow_hyphen_values = true, default_value = "1,1,0")]
    p: Momenta,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, help = POINT_HELP)]
    z1: LogPoint,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, help = POINT_HELP)]
    z2: LogPoint,
    /// Truncation level of the functional.
    #[arg(long, default_value_t = 8)]
    level: usize,
    /// Cell-grid half-width for the equality check.
    #[arg(long, default_value_t = 1)]
    grid: i64,
    /// Scaled per-cell deviation tolerance.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Also run the boundedness screen (lower truncation + kernel-multiplied
    /// row identity) on the functional.
    #[arg(long)]
    compat: bool,
    /// Tolerance for the boundedness screen; its row identity is soft at
    /// shallow truncation, so this is looser than --tol by default.
    #[arg(long, default_value_t = 0.5)]
    compat_tol: f64,
    /// Write the per-cell deviation table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ElementKind {
    /// Identity insertion: both actions reduce to the delta-kernel identities.
    Vacuum,
    /// The conformal vector (level-2 quadratic element).
    Omega,
}

/// Momentum triple as parsed from `--p`.
#[derive(Clone, Copy, Debug)]
struct Momenta(f64, f64, f64);

fn parse_rational(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n: f64 = num.trim().parse().map_err(|_| format!("bad number {num:?}"))?;
        let d: f64 = den.trim().parse().map_err(|_| format!("bad number {den:?}"))?;
        if d == 0.0 {
            return Err(format!("zero denominator in {t:?}"));
        }
        Ok(n / d)
    } else {
        t.parse().map_err(|_| format!("bad number {t:?}"))
    }
}

fn parse_momenta(s: &str) -> Result<Momenta, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated momenta, got {s:?}"));
    }
    Ok(Momenta(
        parse_rational(parts[0])?,
        parse_rational(parts[1])?,
        parse_rational(parts[2])?,
    ))
}

/// `a+bi` literals: "1", "-2.5", "2i", "-i", "1+2i", "1.5e-3-2e+4i".
fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    if !t.ends_with('i') && !t.ends_with('I') {
        let re: f64 = t.parse().map_err(|_| format!("bad complex literal {t:?}"))?;
        return Ok(Complex64::new(re, 0.0));
    }
    let body = &t[..t.len() - 1];
    let bytes = body.as_bytes();
    // Split at the last sign that starts the imaginary part: not the leading
    // sign and not an exponent sign (preceded by e/E).
    let mut split = None;
    for idx in (1..bytes.len()).rev() {
        let b = bytes[idx];
        if (b == b'+' || b == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
            split = Some(idx);
            break;
        }
    }
    let unit = |part: &str| -> Result<f64, String> {
        match part {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            other => other.parse().map_err(|_| format!("bad complex literal {t:?}")),
        }
    };
    match split {
        None => Ok(Complex64::new(0.0, unit(body)?)),
        Some(idx) => {
            let re: f64 = body[..idx]
                .parse()
                .map_err(|_| format!("bad complex literal {t:?}"))?;
            Ok(Complex64::new(re, unit(&body[idx..])?))
        }
    }
}

/// Point literals: `a+bi` takes the principal branch; `VALUE@k` rotates the
/// principal branch of VALUE by the integer half-turn count k, so `1@2` is the
/// value 1 seen after a full positive loop and `1@-1` is -1 approached from
/// below the cut.
fn parse_point(s: &str) -> Result<LogPoint, String> {
    let t = s.trim();
    if let Some((val, turns)) = t.rsplit_once('@') {
        let k: i64 = turns
            .trim()
            .parse()
            .map_err(|_| format!("half-turn count must be an integer, got {turns:?}"))?;
        let z = parse_complex(val)?;
        if z.im == 0.0 && z.re > 0.0 {
            return LogPoint::from_mag_half_turns(z.re, k).map_err(|e| e.to_string());
        }
        let p = LogPoint::principal(z).map_err(|e| e.to_string())?;
        return Ok(p.rotate(k));
    }
    let z = parse_complex(t)?;
    LogPoint::principal(z).map_err(|e| e.to_string())
}

/// Expand `--id` into identity labels: single label, comma list, or an
/// inclusive range "a..b" in the fixed label order.
fn parse_ids(spec: &str) -> vertexcalc::Result<Vec<DeltaIdentity>> {
    let mut ids: Vec<DeltaIdentity> = Vec::new();
    for piece in spec.split(',') {
        let piece = piece.trim();
        if let Some((lo, hi)) = piece.split_once("..") {
            let all = DeltaIdentity::ALL;
            let a = DeltaIdentity::from_label(lo.trim())?;
            let b = DeltaIdentity::from_label(hi.trim())?;
            let ia = all.iter().position(|x| *x == a).unwrap();
            let ib = all.iter().position(|x| *x == b).unwrap();
            if ia > ib {
                return Err(Error::InvalidInput(format!(
                    "empty identity range {piece:?}"
                )));
            }
            ids.extend_from_slice(&all[ia..=ib]);
        } else {
            ids.push(DeltaIdentity::from_label(piece)?);
        }
    }
    ids.dedup();
    Ok(ids)
}

/// A finished subcommand: the JSON report, an optional CSV table, and whether
/// every row passed.
struct Outcome {
    json: String,
    csv: Option<(PathBuf, String)>,
    pass: bool,
}

fn run_verify_delta(args: &VerifyDeltaArgs) -> vertexcalc::Result<Outcome> {
    let ids = parse_ids(&args.id)?;
    if args.csv.is_some() && ids.len() != 1 {
        return Err(Error::InvalidInput(
            "--csv expects a single identity; pass one --id label".into(),
        ));
    }
    let reports: Vec<_> = ids
        .iter()
        .map(|id| verify_identity(*id, &args.z1, &args.z2, args.grid, args.terms, args.tol))
        .collect();
    let pass = reports.iter().all(|r| r.verified);
    let json = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0]).expect("report serializes")
    } else {
        serde_json::to_string_pretty(&json!({ "pass": pass, "reports": reports }))
            .expect("report serializes")
    };
    let csv = args
        .csv
        .clone()
        .map(|path| (path, delta_csv(&reports[0])));
    Ok(Outcome { json, csv, pass })
}

fn run_assoc(args: &AssocArgs) -> vertexcalc::Result<Outcome> {
    let Momenta(p1, p2, p3) = args.p;
    let report = associativity_check(
        p1,
        p2,
        p3,
        args.basis_level,
        &args.z1,
        &args.z2,
        args.level,
        args.tol,
    )?;
    let pass = report.pass;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let csv = args.csv.clone().map(|path| (path, assoc_csv(&report)));
    Ok(Outcome { json, csv, pass })
}

/// Probe pairs along the ray |z2| = base fixed, z1 = z2·(1+v) with v sweeping
/// [0.05, 0.5]: inside the product region with |z1-z2| < |z2| throughout.
fn probe_ray(base: f64, count: usize) -> vertexcalc::Result<Vec<(LogPoint, LogPoint)>> {
    if !(base > 0.0) || count < 2 {
        return Err(Error::InvalidInput(
            "probe ray needs base > 0 and at least two probes".into(),
        ));
    }
    let z2 = LogPoint::principal(Complex64::new(base, 0.0))?;
    let mut probes = Vec::with_capacity(count);
    for k in 0..count {
        let v = 0.05 + 0.45 * k as f64 / (count - 1) as f64;
        let z1 = LogPoint::principal(Complex64::new(base * (1.0 + v), 0.0))?;
        probes.push((z1, z2.clone()));
    }
    Ok(probes)
}

fn fit_correlator(args: &FitArgs, momenta: Momenta) -> vertexcalc::Result<ExpansionFit> {
    let Momenta(p1, p2, p3) = momenta;
    let p4 = p1 + p2 + p3;
    // Exponent-sum normalization and witness base from the lowest weights:
    // delta = wt w'4 - sum of wt w_i, weight_base = the inner composite
    // sector's lowest weight.
    let delta = p4 * p4 / 2.0 - (p1 * p1 + p2 * p2 + p3 * p3) / 2.0;
    let weight_base = (p2 + p3) * (p2 + p3) / 2.0;
    let probes = probe_ray(args.base, args.probes)?;
    let sample_tol = (args.tol * 1e-2).min(1e-9);
    let first_err: Mutex<Option<Error>> = Mutex::new(None);
    let sampler = PairSampler::new(|z1: &LogPoint, z2: &LogPoint| {
        let value = CorrelatorFunctional::product((p1, p2, p3), z1, z2, 0, sample_tol)
            .and_then(|lam| lam.eval_triple(&[], &[], &[]));
        match value {
            Ok(v) => v,
            Err(e) => {
                let mut slot = first_err.lock().expect("sampler error slot");
                slot.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    });
    let fit = fit_product_expansion(
        &sampler,
        delta,
        &args.candidates,
        args.degree,
        &probes,
        weight_base,
    );
    drop(sampler);
    if let Some(e) = first_err.into_inner().expect("sampler error slot") {
        return Err(e);
    }
    fit
}

#[derive(Serialize)]
struct PlantedRow {
    exponent: f64,
    planted_re: f64,
    planted_im: f64,
    recovered_re: f64,
    recovered_im: f64,
    abs_err: f64,
}

#[derive(Serialize)]
struct PlantedReport {
    file: String,
    tol: f64,
    rows: Vec<PlantedRow>,
    missing: usize,
    extra: usize,
    res_planted_re: f64,
    res_planted_im: f64,
    res_recovered_re: f64,
    res_recovered_im: f64,
    pass: bool,
}

fn fit_planted(args: &FitArgs, path: &PathBuf) -> vertexcalc::Result<Outcome> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let raw: Vec<(f64, f64, f64)> = serde_json::from_str(&text).map_err(|e| {
        Error::InvalidInput(format!(
            "{} must hold a JSON list of [exponent, re, im] terms: {e}",
            path.display()
        ))
    })?;
    let mut terms: Vec<(f64, Complex64)> = raw
        .into_iter()
        .map(|(m, re, im)| (m, Complex64::new(re, im)))
        .collect();
    terms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite exponents"));
    let planted = RealExpSeries::new(terms)?;
    let sampler = Sampler::new(1e-6, 0.5, |z: &LogPoint| planted.eval(z))?;
    let lattice: Vec<f64> = planted.terms().iter().map(|&(m, _)| m).collect();
    let recovered = leading_extract(&sampler, &lattice, args.tol, &RadiiSchedule::default())?;

    let coeff_tol = 1e-6;
    let mut rows = Vec::new();
    let mut missing = 0usize;
    for &(m, a) in planted.terms() {
        let got = recovered
            .terms()
            .iter()
            .find(|&&(mr, _)| (mr - m).abs() < 1e-9)
            .map(|&(_, c)| c);
        let rec = got.unwrap_or(Complex64::new(0.0, 0.0));
        if got.is_none() {
            missing += 1;
        }
        rows.push(PlantedRow {
            exponent: m,
            planted_re: a.re,
            planted_im: a.im,
            recovered_re: rec.re,
            recovered_im: rec.im,
            abs_err: (rec - a).norm(),
        });
    }
    let extra = recovered
        .terms()
        .iter()
        .filter(|&&(mr, _)| !lattice.iter().any(|&m| (mr - m).abs() < 1e-9))
        .count();
    let res_planted = res_z(&planted);
    let res_recovered = res_z(&recovered);
    let pass = missing == 0
        && extra == 0
        && rows.iter().all(|r| r.abs_err <= coeff_tol)
        && (res_recovered - res_planted).norm() <= coeff_tol;
    let report = PlantedReport {
        file: path.display().to_string(),
        tol: args.tol,
        rows,
        missing,
        extra,
        res_planted_re: res_planted.re,
        res_planted_im: res_planted.im,
        res_recovered_re: res_recovered.re,
        res_recovered_im: res_recovered.im,
        pass,
    };
    Ok(Outcome {
        json: serde_json::to_string_pretty(&report).expect("report serializes"),
        csv: None,
        pass,
    })
}

fn run_fit(args: &FitArgs) -> vertexcalc::Result<Outcome> {
    if let Some(path) = &args.planted {
        return fit_planted(args, path);
    }
    let momenta = args.p.expect("clap enforces --p without --planted");
    let fit = fit_correlator(args, momenta)?;
    let pass = fit.residual <= args.tol;
    let Momenta(p1, p2, p3) = momenta;
    let json = serde_json::to_string_pretty(&json!({
        "momenta": [p1, p2, p3],
        "probes": args.probes,
        "base": args.base,
        "pass": pass,
        "fit": fit,
    }))
    .expect("report serializes");
    let csv = args.csv.clone().map(|path| (path, fit_csv(&fit)));
    Ok(Outcome { json, csv, pass })
}

fn run_tau(args: &TauArgs) -> vertexcalc::Result<Outcome> {
    let v = match args.element {
        ElementKind::Vacuum => AlgebraElement::vacuum(),
        ElementKind::Omega => AlgebraElement::omega(),
    };
    let Momenta(p1, p2, p3) = args.p;
    let lam = CorrelatorFunctional::product((p1, p2, p3), &args.z1, &args.z2, args.level, 1e-9)?;
    let equality = check_tau_equality(&v, &lam, &args.z1, &args.z2, args.grid, args.tol)?;
    let compat = if args.compat {
        Some(compatibility_check(
            &lam,
            &args.z1,
            &args.z2,
            &[AlgebraElement::vacuum(), AlgebraElement::omega()],
            args.grid.max(1),
            args.compat_tol,
        )?)
    } else {
        None
    };
    let report = TauRunReport::new(equality, compat);
    let pass = report.pass;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let csv = args
        .csv
        .clone()
        .map(|path| (path, tau_csv(&report.equality)));
    Ok(Outcome { json, csv, pass })
}

/// Cap the worker-thread pool from VERTEXCALC_THREADS before any parallel
/// region spins it up.
fn init_threads() {
    if let Ok(raw) = std::env::var("VERTEXCALC_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let result = match &cli.command {
        Command::VerifyDelta(args) => run_verify_delta(args),
        Command::Assoc(args) => run_assoc(args),
        Command::Fit(args) => run_fit(args),
        Command::Tau(args) => run_tau(args),
    };
    match result {
        Ok(outcome) => {
            println!("{}", outcome.json);
            if let Some((path, data)) = outcome.csv {
                if let Err(e) = std::fs::write(&path, data) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({ "error": e.to_string(), "pass": false }))
                    .expect("error serializes")
            );
            match e {
                Error::InvalidInput(_) | Error::ZeroLog => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
