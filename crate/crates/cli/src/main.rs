//! Command-line interface for the cone verification engine.
//!
//! Subcommands: `classify` an operator file, `verify` a family spec against
//! the identity catalog, `polys` for the predicted Bryant polynomials,
//! `example` to emit named example specs, and `scan` to sweep a parameter
//! grid. Exit codes: 0 all checks pass, 1 some check failed, 2 invalid
//! input.

use bfcone::families::{self, ExampleName, FamilySpec};
use bfcone::herm::{classify, HermForm, HermOp};
use bfcone::poly;
use bfcone::verify::{run_suite, Report};
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "bfcone", about = "Numerical verification of Bochner-flat cone structures", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an eta-hermitian operator and print its minimal and
    /// characteristic polynomials.
    Classify {
        /// JSON file {"mdim": int, "matrix": [[[re, im], ...], ...]}.
        operator: PathBuf,
        /// Numerical tolerance for spectral clustering.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run the identity catalog against a family spec.
    Verify {
        /// Family spec JSON file.
        spec: PathBuf,
        /// Comma-separated catalog ids (default: the full catalog).
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        /// Override the number of domain samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a per-sample residual CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the predicted Bryant minimal and characteristic polynomials.
    Polys {
        /// Family spec JSON file.
        spec: PathBuf,
    },
    /// Emit the spec of a named example configuration.
    Example {
        /// bryant | wproj | einstein | tachibana.
        name: String,
        /// Numeric parameters (see the README for each example).
        #[arg(allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        mdim: usize,
        /// Family case for the einstein example (1, 2 or 4).
        #[arg(long, default_value_t = 1)]
        case: u8,
        /// Negative-d sign variant for wproj.
        #[arg(long, default_value_t = false)]
        negative_d: bool,
        /// Write the spec here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run `verify` over a grid of spec overrides.
    Scan {
        /// JSON file {"base": <spec>, "grid": [{field: value, ...}, ...]}.
        grid: PathBuf,
        /// Directory for the per-run reports.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() {
    if let Ok(threads) = std::env::var("BFCONE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Classify { operator, tol } => {
            let text = std::fs::read_to_string(operator)?;
            let parsed: serde_json::Value = serde_json::from_str(&text)?;
            let mdim = parsed["mdim"]
                .as_u64()
                .ok_or("operator file needs an integer mdim")? as usize;
            let rows = parsed["matrix"]
                .as_array()
                .ok_or("operator file needs a matrix array")?;
            let n = mdim + 2;
            if rows.len() != n {
                return Err(format!("matrix must be {n}x{n} for mdim = {mdim}").into());
            }
            let mut mat = DMatrix::<Complex64>::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                let row = row.as_array().ok_or("matrix rows must be arrays")?;
                if row.len() != n {
                    return Err(format!("matrix must be {n}x{n} for mdim = {mdim}").into());
                }
                for (j, ent) in row.iter().enumerate() {
                    let pair = ent.as_array().ok_or("entries are [re, im] pairs")?;
                    let re = pair.first().and_then(|v| v.as_f64()).ok_or("bad entry")?;
                    let im = pair.get(1).and_then(|v| v.as_f64()).ok_or("bad entry")?;
                    mat[(i, j)] = Complex64::new(re, im);
                }
            }
            let form = HermForm::new(mdim);
            let op = HermOp::with_tol(form, mat.clone(), tol.max(1e-12))?;
            let label = classify(&op, tol)?;
            println!("class: {}", label.kind);
            for (v, mult, block) in &label.spectrum {
                println!(
                    "  eigenvalue {:+.6} {:+.6}i  multiplicity {}  largest block {}",
                    v.re, v.im, mult, block
                );
            }
            let q = poly::minimal_polynomial(&mat, tol)?;
            let bigq = poly::characteristic_polynomial(&mat, tol)?;
            println!("minimal polynomial q(t) ={q}");
            println!("characteristic polynomial Q(t) ={bigq}");
            Ok(0)
        }
        Command::Verify { spec, ids, samples, seed, out, csv } => {
            let mut spec: FamilySpec = serde_json::from_str(&std::fs::read_to_string(spec)?)?;
            if let Some(n) = samples {
                spec.samples = n;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            let started = Instant::now();
            let selection: Option<&[String]> = if ids.is_empty() { None } else { Some(&ids) };
            let report = run_suite(&spec, selection)?;
            emit_report(&report, out.as_deref(), csv.as_deref())?;
            eprintln!(
                "{} checks: {} pass, {} fail ({:.2}s)",
                report.checks.len(),
                report.summary.pass,
                report.summary.fail,
                started.elapsed().as_secs_f64()
            );
            Ok(if report.all_pass() { 0 } else { 1 })
        }
        Command::Polys { spec } => {
            let spec: FamilySpec = serde_json::from_str(&std::fs::read_to_string(spec)?)?;
            let (pm, pc) = families::predicted_polys(&spec)?;
            println!("p_m(t) ={pm}");
            println!("p_c(t) ={pc}");
            Ok(0)
        }
        Command::Example { name, params, mdim, case, negative_d, out } => {
            let example = match name.as_str() {
                "bryant" => ExampleName::Bryant { ks: params },
                "wproj" => ExampleName::WProj { weights: params, negative_d },
                "einstein" => {
                    let e = params.first().copied().unwrap_or(0.0);
                    let lambda = params.get(1).copied();
                    ExampleName::Einstein { e, case, lambda }
                }
                "tachibana" => {
                    let kbar = *params.first().ok_or("tachibana takes kbar [d]")?;
                    let d = params.get(1).copied().unwrap_or(0.0);
                    ExampleName::Tachibana { kbar, d }
                }
                other => return Err(format!("unknown example '{other}'").into()),
            };
            let spec = families::example_spec(mdim, example)?;
            let text = serde_json::to_string_pretty(&spec)?;
            match out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(0)
        }
        Command::Scan { grid, out_dir } => {
            let parsed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(grid)?)?;
            let base = parsed
                .get("base")
                .ok_or("grid file needs a base spec")?
                .clone();
            let entries = parsed
                .get("grid")
                .and_then(|g| g.as_array())
                .ok_or("grid file needs a grid array")?;
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir)?;
            }
            let mut failures = 0usize;
            for (i, overrides) in entries.iter().enumerate() {
                let mut merged = base.clone();
                if let (Some(obj), Some(ov)) = (merged.as_object_mut(), overrides.as_object()) {
                    for (k, v) in ov {
                        obj.insert(k.clone(), v.clone());
                    }
                }
                let spec: FamilySpec = serde_json::from_value(merged)?;
                let report = run_suite(&spec, None)?;
                if !report.all_pass() {
                    failures += 1;
                }
                eprintln!(
                    "run {i}: {} pass, {} fail",
                    report.summary.pass, report.summary.fail
                );
                if let Some(dir) = &out_dir {
                    std::fs::write(dir.join(format!("report_{i:03}.json")), report.to_json())?;
                }
            }
            Ok(if failures == 0 { 0 } else { 1 })
        }
    }
}

fn emit_report(
    report: &Report,
    out: Option<&std::path::Path>,
    csv: Option<&std::path::Path>,
) -> std::io::Result<()> {
    let json = report.to_json();
    match out {
        Some(path) => std::fs::write(path, &json)?,
        None => println!("{json}"),
    }
    if let Some(path) = csv {
        std::fs::write(path, report.to_csv())?;
    }
    for c in &report.checks {
        eprintln!(
            "{:>5}  {}  max residual {:9.3e}  tol {:7.1e}  {}",
            c.id,
            if c.pass { "pass" } else { "FAIL" },
            c.max_residual,
            c.tolerance,
            c.notes
        );
    }
    Ok(())
}
