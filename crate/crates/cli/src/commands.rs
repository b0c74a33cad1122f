use std::process::ExitCode;
use std::time::Instant;

use anisotex_core::besov::{
    alpha_grid, axis_exponents, default_lags, directional_exponent, scan_anisotropy, scan_from_axis_exponents,
    structure_function, tent_prediction, write_scan_csv, write_structure_csv, ExponentScan, Order,
};
use anisotex_core::homog::{check_homogeneity, rho_power_sum};
use anisotex_core::hywave::{
    average_statistics, default_levels, hyperbolic_transform, inverse_transform, ratio_maximize, scale_statistics,
    write_ratio_csv, write_stats_csv, Filter,
};
use anisotex_core::synth::anif::write_anif;
use anisotex_core::synth::{map_realizations, synthesize, synthesize_with, SynthOptions};
use anisotex_core::{FieldSpec, SampledField};
use anyhow::{Context, Result};
use serde_json::json;

use crate::output::{read_field, read_fields, sibling, with_suffix, write_atomic, write_json};
use crate::{AnalyzeArgs, HywaveArgs, ScanArgs, SelftestArgs, SimulateArgs, Usage};

pub fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let spec = FieldSpec::new(a.alpha0, a.hurst, a.size, a.seed)?;
    let field = synthesize(&spec)?;
    write_atomic(&a.out, |mut w| Ok(write_anif(&mut w, &field)?))?;
    println!("{}", serde_json::to_string_pretty(&spec)?);
    Ok(ExitCode::SUCCESS)
}

/// `alpha0=0.6,hurst=0.4,n=1024[,seed=7]`; Greek spellings are accepted.
fn parse_spec(s: &str) -> Result<FieldSpec> {
    let (mut alpha0, mut hurst, mut n, mut seed) = (None, None, None, 0u64);
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Usage(format!("spec entry {part:?} is not key=value")))?;
        let bad = || Usage(format!("bad value in spec entry {part:?}"));
        match k.trim() {
            "alpha0" | "α₀" | "α0" => alpha0 = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
            "hurst" | "H₀" | "H0" | "H" => hurst = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
            "n" | "size" => n = Some(v.trim().parse::<usize>().map_err(|_| bad())?),
            "seed" => seed = v.trim().parse().map_err(|_| bad())?,
            other => return Err(Usage(format!("unknown spec key {other:?}")).into()),
        }
    }
    let missing = |k: &str| Usage(format!("spec is missing {k}"));
    Ok(FieldSpec::new(
        alpha0.ok_or_else(|| missing("alpha0"))?,
        hurst.ok_or_else(|| missing("hurst"))?,
        n.ok_or_else(|| missing("n"))?,
        seed,
    )?)
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums: Option<Vec<f64>> = parts.iter().map(|p| p.trim().parse().ok()).collect();
    match nums.as_deref() {
        Some(&[start, stop, step]) => Ok(alpha_grid(start, stop, step)?),
        _ => Err(Usage(format!("alpha grid {s:?} is not start:stop:step")).into()),
    }
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> Result<(T, T)> {
    let bad = || Usage(format!("{what} {s:?} is not of the form a,b"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

/// RMS distance to the tent over the grid points in `[0.3, 1.7]`.
fn tent_rms(scan: &ExponentScan, spec: &FieldSpec) -> Option<f64> {
    let sq: Vec<f64> = scan
        .alphas
        .iter()
        .zip(&scan.exponents)
        .filter(|(a, _)| (0.3 - 1e-9..=1.7 + 1e-9).contains(*a))
        .filter_map(|(a, e)| {
            tent_prediction(*a, spec.alpha0(), spec.hurst)
                .ok()
                .map(|t| (e - t).powi(2))
        })
        .collect();
    (!sq.is_empty()).then(|| (sq.iter().sum::<f64>() / sq.len() as f64).sqrt())
}

pub fn scan(a: ScanArgs) -> Result<ExitCode> {
    let grid = parse_grid(&a.alpha_grid)?;
    let (scan, spec, count) = match &a.spec {
        Some(s) => {
            let mut spec = parse_spec(s)?;
            if let Some(seed) = a.seed {
                spec = spec.with_seed(seed);
            }
            if a.reps == 0 {
                return Err(Usage("--reps must be at least 1".into()).into());
            }
            let h = map_realizations(&spec, a.reps, |f| axis_exponents(f, a.p))?
                .into_iter()
                .collect::<anisotex_core::Result<Vec<_>>>()?;
            (scan_from_axis_exponents(&h, &grid)?, spec, a.reps)
        }
        None => {
            let fields = read_fields(&a.inputs)?;
            let spec = fields[0].spec.clone();
            (scan_anisotropy(&fields, &grid, a.p)?, spec, fields.len())
        }
    };
    write_atomic(&a.out, |w| Ok(write_scan_csv(w, &scan)?))?;
    let summary = json!({
        "alpha0": spec.alpha0(),
        "hurst": spec.hurst,
        "grid_n": spec.grid_n,
        "first_seed": spec.seed,
        "realizations": count,
        "p": a.p,
        "argmax_alpha": scan.argmax_alpha,
        "peak": scan.peak,
        "tent_rms": tent_rms(&scan, &spec),
    });
    write_json(&sibling(&a.out, "json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

pub fn analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let field = read_field(&a.input)?;
    let dirs: Vec<[f64; 2]> = if a.directions.is_empty() {
        vec![[1.0, 0.0], [0.0, 1.0]]
    } else {
        a.directions
            .iter()
            .map(|d| parse_pair::<f64>(d, "direction").map(|(u, v)| [u, v]))
            .collect::<Result<_>>()?
    };
    let mut sfs = Vec::new();
    let mut entries = Vec::new();
    for dir in dirs {
        let sf = match default_lags(field.n, dir).and_then(|lags| structure_function(&field, dir, a.p, &lags)) {
            Ok(sf) => sf,
            Err(e) => {
                eprintln!("warning: direction {dir:?}: {e}");
                entries.push(json!({ "direction": dir, "error": e.to_string() }));
                continue;
            }
        };
        let lattice = [sf.lattice.0, sf.lattice.1];
        match directional_exponent(&sf) {
            Ok(x) => entries.push(json!({
                "direction": dir,
                "lattice": lattice,
                "h": x.h,
                "stderr": x.stderr,
                "fit_range": [x.fit_range.0, x.fit_range.1],
            })),
            Err(e) => {
                eprintln!("warning: direction {dir:?}: {e}");
                entries.push(json!({ "direction": dir, "lattice": lattice, "error": e.to_string() }));
            }
        }
        sfs.push(sf);
    }
    write_atomic(&a.out, |w| Ok(write_structure_csv(w, &sfs)?))?;
    let summary = json!({ "input": a.input, "p": a.p, "exponents": entries });
    write_json(&sibling(&a.out, "json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

pub fn hywave(a: HywaveArgs) -> Result<ExitCode> {
    let levels = a
        .levels
        .as_deref()
        .map(|s| parse_pair::<usize>(s, "levels"))
        .transpose()?;
    let mut tables = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let field = read_field(path)?;
        let lv = levels.unwrap_or_else(|| default_levels(field.n));
        let pyr = hyperbolic_transform(&field, a.filter, lv)?;
        tables.push(scale_statistics(&pyr, a.p));
    }
    let stats = average_statistics(&tables)?;
    write_atomic(&with_suffix(&a.out, ".stats.csv"), |w| Ok(write_stats_csv(w, &stats)?))?;
    let res = ratio_maximize(&stats).context("scale-ratio search failed")?;
    write_atomic(&with_suffix(&a.out, ".ratios.csv"), |w| Ok(write_ratio_csv(w, &res)?))?;
    let summary = json!({
        "filter": a.filter,
        "p": a.p,
        "levels": [stats.levels.0, stats.levels.1],
        "inputs": a.inputs.len(),
        "best_ratio": res.best_ratio,
        "slope_at_best": res.slope_at_best,
        "implied_alpha0": res.implied_alpha0,
    });
    write_json(&with_suffix(&a.out, ".json"), &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(ExitCode::SUCCESS)
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check_homog() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for a0 in [0.3, 0.6, 1.0, 1.5] {
        worst = worst.max(check_homogeneity(&rho_power_sum(a0)?, 1000)?.max_relative_error);
    }
    Ok(Check {
        name: "homogeneity",
        pass: worst <= 1e-10,
        detail: format!("max relative error {worst:.1e}"),
    })
}

fn check_determinism(inject: bool) -> Result<Check> {
    let spec = FieldSpec::new(0.6, 0.4, 128, 42)?;
    let a = synthesize(&spec)?;
    let stream = if inject { 1 } else { 0 };
    let (b, _) = synthesize_with(&spec, SynthOptions { stream })?;
    let same = a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits());
    let detail = if same {
        "repeated seed is bit-identical"
    } else {
        "repeated seed differs"
    };
    Ok(Check {
        name: "determinism",
        pass: same,
        detail: detail.into(),
    })
}

fn check_origin() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut residue: f64 = 0.0;
    for (a0, h) in [(0.6, 0.4), (1.0, 0.5), (1.5, 0.3)] {
        let (f, d) = synthesize_with(&FieldSpec::new(a0, h, 64, 3)?, SynthOptions::default())?;
        worst = worst.max(f.values[0].abs());
        residue = residue.max(d.imag_residue);
    }
    Ok(Check {
        name: "origin",
        pass: worst == 0.0 && residue < 1e-9,
        detail: format!("|X(0)| = {worst}, imaginary residue {residue:.1e}"),
    })
}

fn check_reconstruction() -> Result<Check> {
    let spec = FieldSpec::new(0.6, 0.4, 128, 5)?;
    let f: SampledField = synthesize(&spec)?;
    let mut worst: f64 = 0.0;
    for filter in [Filter::Haar, Filter::D4] {
        for levels in [(7, 7), (3, 6), (6, 2)] {
            let back = inverse_transform(&hyperbolic_transform(&f, filter, levels)?);
            worst = back
                .iter()
                .zip(&f.values)
                .map(|(a, b)| (a - b).abs())
                .fold(worst, f64::max);
        }
    }
    Ok(Check {
        name: "reconstruction",
        pass: worst < 1e-9,
        detail: format!("max abs error {worst:.1e}"),
    })
}

fn check_tent() -> Result<Check> {
    let spec = FieldSpec::new(0.6, 0.4, 256, 0)?;
    let p = Order::Finite(2.0);
    let h = map_realizations(&spec, 4, |f| axis_exponents(f, p))?
        .into_iter()
        .collect::<anisotex_core::Result<Vec<_>>>()?;
    let scan = scan_from_axis_exponents(&h, &alpha_grid(0.2, 1.8, 0.05)?)?;
    Ok(Check {
        name: "tent",
        pass: (scan.argmax_alpha - 0.6).abs() <= 0.12 + 1e-9 && (scan.peak - 0.4).abs() <= 0.08,
        detail: format!(
            "argmax {:.2} (0.6 +/- 0.12), peak {:.3} (0.4 +/- 0.08)",
            scan.argmax_alpha, scan.peak
        ),
    })
}

pub fn selftest(a: SelftestArgs) -> Result<ExitCode> {
    let mut checks = vec![
        check_homog()?,
        check_determinism(a.inject_bad_seed)?,
        check_origin()?,
        check_reconstruction()?,
    ];
    if !a.quick {
        let t = Instant::now();
        let mut c = check_tent()?;
        c.detail += &format!(" in {:.1} s", t.elapsed().as_secs_f64());
        checks.push(c);
    }
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(if checks.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
