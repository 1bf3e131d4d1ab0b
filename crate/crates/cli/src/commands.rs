use std::fs;
use std::path::Path;
use std::time::SystemTime;

use anyhow::Context;
use linepack_core::analysis::{bounds_report, certify as certify_frame, BoundsReport};
use linepack_core::baseline::{alternating_projection_multistart, AltProjConfig};
use linepack_core::beamforming::{distortion_mc, ChannelModel};
use linepack_core::reference::{one_distance_expected, published};
use linepack_core::{coherence, normalize_columns, solve as run_solver, Frame, RunRecord, SolveResult, SolverConfig};
use serde_json::json;

use crate::args::{BoundsArgs, CertifyArgs, DistortionArgs, MethodArg, SolveArgs, SolverFlags, SweepArgs};
use crate::format::{opt, sig9};
use crate::CliError;

fn check_solver_flags(flags: &SolverFlags) -> Result<(), CliError> {
    if flags.restarts == 0 {
        return Err(CliError::usage("--restarts must be at least 1"));
    }
    if !(flags.eps > 0.0 && flags.eps.is_finite()) {
        return Err(CliError::usage("--eps must be positive"));
    }
    if flags.threads == Some(0) {
        return Err(CliError::usage("--threads must be at least 1"));
    }
    if !(flags.tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    if flags.max_iters == 0 {
        return Err(CliError::usage("--max-iters must be at least 1"));
    }
    Ok(())
}

/// One multistart run with either method. Size errors are usage errors.
fn run(d: usize, n: usize, flags: &SolverFlags) -> Result<SolveResult, CliError> {
    if d == 0 || n < 2 {
        return Err(CliError::usage(format!("need d >= 1 and N >= 2, got d={d}, N={n}")));
    }
    let result = match flags.method {
        MethodArg::Trstmi => {
            let cfg = SolverConfig::with_eps(d, n, flags.eps)
                .map_err(CliError::usage)?
                .restarts(flags.restarts)
                .seed(flags.seed);
            run_solver(&cfg, flags.threads)
        }
        MethodArg::Altproj => {
            if n < d {
                return Err(CliError::usage("alternating projection needs N >= d"));
            }
            let mut cfg = AltProjConfig::new(d, n);
            cfg.max_iters = flags.max_iters;
            alternating_projection_multistart(d, n, &cfg, flags.restarts, flags.seed, flags.threads)
        }
    };
    result.map_err(|e| CliError::Failure(e.into()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(CliError::Failure)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Failure)
}

pub fn solve(args: SolveArgs) -> Result<(), CliError> {
    check_solver_flags(&args.solver)?;
    let started = SystemTime::now();
    let result = run(args.d, args.n, &args.solver)?;
    let record = RunRecord::from_result(&result, args.solver.seed, args.solver.tol, started);
    if let Some(out) = &args.out {
        write_file(out, &record.to_json())?;
    }
    let bound = record.certificates.bounds.best_applicable;
    println!(
        "d={} N={} coherence={} bound={} gap={}",
        args.d,
        args.n,
        sig9(record.best_coherence),
        sig9(bound),
        sig9(record.best_coherence - bound)
    );
    Ok(())
}

fn bounds_row(b: &BoundsReport) -> String {
    format!(
        "{},{},{},{},{}",
        b.n,
        sig9(b.welch),
        opt(b.orthoplex),
        opt(b.levenshtein),
        b.gerzon_max
    )
}

pub fn bounds(args: BoundsArgs) -> Result<(), CliError> {
    if args.d == 0 {
        return Err(CliError::usage("--d must be at least 1"));
    }
    let (lo, hi) = match (args.n, args.n_range) {
        (Some(n), None) => (n, n),
        (None, Some(r)) => (r.start, r.end),
        _ => return Err(CliError::usage("give exactly one of --N or --N-range")),
    };
    if lo == 0 {
        return Err(CliError::usage("N must be at least 1"));
    }
    let mut csv = String::from("N,welch,orthoplex,levenshtein,gerzon\n");
    for n in lo..=hi {
        csv.push_str(&bounds_row(&bounds_report(args.d, n)));
        csv.push('\n');
    }
    match &args.out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// Reads a frame from a frame JSON file, a RunRecord, or a CSV file.
pub fn load_frame(path: &Path) -> Result<Frame, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let parsed = if is_csv {
        Frame::from_csv(&text)
    } else {
        match RunRecord::from_json(&text) {
            Ok(rec) => rec.best_frame(),
            Err(_) => Frame::from_json(&text),
        }
    };
    let frame = parsed.map_err(|e| CliError::usage(format!("invalid frame file {}: {e}", path.display())))?;
    if frame.is_normalized() {
        Ok(frame)
    } else {
        normalize_columns(&frame).map_err(|e| CliError::usage(format!("invalid frame {}: {e}", path.display())))
    }
}

pub fn certify(args: CertifyArgs) -> Result<(), CliError> {
    if !(args.tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    let frame = load_frame(&args.input)?;
    let report = certify_frame(&frame, args.tol);
    let reference = published(frame.d(), frame.n());
    let out = json!({
        "source": args.input.display().to_string(),
        "report": report,
        "published": reference,
        "published_gap": reference.map(|p| report.coherence - p.trstmi),
        "database_gap": reference.and_then(|p| p.database).map(|db| report.coherence - db),
        "one_distance_expected": one_distance_expected(frame.d(), frame.n()),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json value serializes"));
    Ok(())
}

/// `coherence_monotone[i] = min(coherence[j] for j >= i)`: dropping a vector
/// from a larger packing never raises coherence, so each value is an upper
/// bound for every smaller N.
pub fn monotone_correction(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in (0..out.len().saturating_sub(1)).rev() {
        out[i] = out[i].min(out[i + 1]);
    }
    out
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    check_solver_flags(&args.solver)?;
    if args.d == 0 {
        return Err(CliError::usage("--d must be at least 1"));
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))
        .map_err(CliError::Failure)?;

    let mut rows: Vec<(usize, f64, BoundsReport)> = Vec::new();
    let mut failures = 0;
    for n in args.n_range.start..=args.n_range.end {
        let started = SystemTime::now();
        match run(args.d, n, &args.solver) {
            Ok(result) => {
                let record = RunRecord::from_result(&result, args.solver.seed, args.solver.tol, started);
                write_file(
                    &args.out.join(format!("run_d{}_N{}.json", args.d, n)),
                    &record.to_json(),
                )?;
                eprintln!("N={n} coherence={}", sig9(record.best_coherence));
                rows.push((n, record.best_coherence, record.certificates.bounds));
            }
            Err(CliError::Usage(e)) | Err(CliError::Failure(e)) => {
                failures += 1;
                eprintln!("N={n} failed: {e:#}");
            }
        }
    }

    let raw: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let monotone = monotone_correction(&raw);
    let mut csv = String::from("N,coherence,coherence_monotone,welch,orthoplex,levenshtein\n");
    for ((n, c, b), m) in rows.iter().zip(&monotone) {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n,
            sig9(*c),
            sig9(*m),
            sig9(b.welch),
            opt(b.orthoplex),
            opt(b.levenshtein)
        ));
    }
    write_file(&args.out.join("sweep.csv"), &csv)?;
    if rows.is_empty() {
        return Err(CliError::Failure(anyhow::anyhow!("all {failures} sizes failed")));
    }
    Ok(())
}

pub fn distortion(args: DistortionArgs) -> Result<(), CliError> {
    if args.samples == 0 {
        return Err(CliError::usage("--samples must be at least 1"));
    }
    let frame = load_frame(&args.input)?;
    let model = ChannelModel::new(frame.d(), args.sigma, args.es).map_err(CliError::usage)?;
    let est = distortion_mc(&frame, args.samples, args.seed).map_err(|e| CliError::Failure(e.into()))?;
    let out = json!({
        "estimate": est.estimate,
        "std_error": est.std_error,
        "samples": est.samples,
        "coherence_of_codebook": coherence(&frame),
        "mean_snr": est.mean_gain * model.symbol_energy / model.noise_var,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json value serializes"));
    Ok(())
}
