//! The four subcommands.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use billiard_spectra::billiard::Table;
use billiard_spectra::normal_form::{averaging_step, FourierTaylorSeries, MapSeries};
use billiard_spectra::orbits::{delta_spectrum, gcd, SpectrumOptions, TwistProblem, DEFAULT_BITS_CAP};
use billiard_spectra::spectra::{
    billiard_map_fit, fit_exponential, fit_exponential_resonant, fit_line, l1_empirical, marvizi_melrose_l1,
    tabachnikov_a1, a1_empirical,
};
use billiard_spectra::{Real, RealContext};
use serde::Serialize;
use serde_json::json;

use crate::cache::{Entry, RunCache};
use crate::records::{curve_hash, has_content, load_curve, read_rows, write_rows, Format, Row};
use crate::{AsymptoticsArgs, FitArgs, NormalformArgs, SpectrumArgs};

/// Environment variable overriding the precision escalation cap.
pub const BITS_CAP_VAR: &str = "SPECTRAL_BITS_CAP";

fn bits_cap(start: u32) -> Result<u32> {
    let cap = match std::env::var(BITS_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<u32>()
            .with_context(|| format!("{BITS_CAP_VAR}={v:?} is not a bit count"))?,
        Err(_) => DEFAULT_BITS_CAP,
    };
    Ok(cap.max(start))
}

fn context(bits: u32) -> Result<RealContext> {
    Ok(RealContext::new(bits)?)
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Rotation denominators in range that are coprime to `p` and inside the
/// twist interval of the table.
fn q_values(table: Table, p: u64, q_min: u64, q_max: u64) -> Vec<u64> {
    (q_min..=q_max)
        .filter(|&q| {
            let inside = match table {
                Table::Inner => p < q,
                Table::Outer => 2 * p < q,
            };
            let ok = inside && q >= table.min_period() && gcd(p, q) == 1;
            if !ok {
                log::debug!("skipping ({p},{q}) on the {} table", table.name());
            }
            ok
        })
        .collect()
}

pub fn spectrum(args: &SpectrumArgs) -> Result<()> {
    if args.p == 0 || args.q_min > args.q_max {
        bail!("need p ≥ 1 and q-min ≤ q-max");
    }
    let curve = load_curve(&args.curve)?;
    let ctx = context(args.bits)?;
    let hash = curve_hash(&curve);
    let table_name = args.table.name();
    let format = args
        .format
        .unwrap_or_else(|| args.out.as_deref().map_or(Format::Csv, Format::guess));

    let mut present: HashSet<u64> = HashSet::new();
    if let Some(out) = &args.out {
        if has_content(out)? {
            for row in read_rows(out)? {
                if row.p == args.p && row.bits >= args.bits {
                    present.insert(row.q);
                }
            }
        }
    }
    let cache_path = args.cache.clone().or_else(|| {
        args.out.as_ref().map(|o| {
            let mut name = o.as_os_str().to_owned();
            name.push(".cache.jsonl");
            PathBuf::from(name)
        })
    });
    let mut cache = match &cache_path {
        Some(path) => Some(RunCache::open(path)?),
        None => None,
    };

    let mut rows: Vec<Option<Row>> = Vec::new();
    let mut missing: Vec<u64> = Vec::new();
    let qs: Vec<u64> = q_values(args.table, args.p, args.q_min, args.q_max)
        .into_iter()
        .filter(|q| {
            let keep = !present.contains(q);
            if !keep {
                log::info!("({},{q}) already in the output, skipped", args.p);
            }
            keep
        })
        .collect();
    for &q in &qs {
        let hit = cache
            .as_ref()
            .and_then(|c| c.lookup(&hash, table_name, args.p, q, args.bits).cloned());
        match hit {
            Some(row) => {
                log::info!("({},{q}) cache hit at {} bits", args.p, row.bits);
                rows.push(Some(row));
            }
            None => {
                rows.push(None);
                missing.push(q);
            }
        }
    }

    if !missing.is_empty() {
        let options = SpectrumOptions {
            bits_cap: bits_cap(args.bits)?,
            parallel: !args.serial,
        };
        log::info!(
            "computing {} orbit pairs at {} bits (cap {})",
            missing.len(),
            args.bits,
            options.bits_cap
        );
        let problem = TwistProblem::new(curve, args.table);
        let results = delta_spectrum(&problem, args.p, &missing, &ctx, &options);
        let mut computed = missing.iter().zip(results);
        for slot in rows.iter_mut().filter(|r| r.is_none()) {
            let (&q, result) = computed.next().expect("one result per missing q");
            match result {
                Ok(record) => {
                    let row = Row::from_record(&record);
                    log::info!(
                        "({},{q}) delta {} at {} bits {}",
                        args.p,
                        record.delta.to_decimal(6),
                        record.bits,
                        row.flags
                    );
                    if let Some(c) = cache.as_mut() {
                        c.insert(Entry {
                            curve: hash.clone(),
                            table: table_name.to_string(),
                            requested_bits: args.bits,
                            row: row.clone(),
                        })?;
                    }
                    *slot = Some(row);
                }
                Err(e) => log::warn!("({},{q}) failed: {e}", args.p),
            }
        }
    }

    let rows: Vec<Row> = rows.into_iter().flatten().collect();
    match &args.out {
        Some(out) => {
            let header = !has_content(out)?;
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(out)
                .with_context(|| format!("opening {}", out.display()))?;
            write_rows(file, &rows, format, header)?;
            log::info!("appended {} rows to {}", rows.len(), out.display());
        }
        None => write_rows(io::stdout().lock(), &rows, format, true)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    model: String,
    input: String,
    rows: usize,
    points: usize,
    alpha: f64,
    log_k: f64,
    r_squared: f64,
    /// Full-precision decimal strings of the same quantities.
    alpha_exact: String,
    log_k_exact: String,
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let rows = read_rows(&args.input)?;
    if rows.is_empty() {
        bail!("{} holds no rows", args.input.display());
    }
    let records = rows
        .iter()
        .map(|r| r.to_record(Table::Inner))
        .collect::<Result<Vec<_>>>()?;
    let (model, result) = match &args.resonance {
        Some(text) => {
            let (m, n) = parse_ratio(text)?;
            (
                format!("log delta = log K - 2 pi alpha q/|{n}p - {m}q|"),
                fit_exponential_resonant(&records, n, m),
            )
        }
        None => {
            let p = match args.p {
                Some(p) => p,
                None => {
                    let p = rows[0].p;
                    if rows.iter().any(|r| r.p != p) {
                        bail!("rows mix several p; pass --p or --resonance");
                    }
                    p
                }
            };
            let own: Vec<_> = records.into_iter().filter(|r| r.p == p).collect();
            (format!("log delta = log K - 2 pi alpha q/{p}"), fit_exponential(&own, p))
        }
    };
    let fit = result?;
    let report = FitReport {
        model,
        input: args.input.display().to_string(),
        rows: rows.len(),
        points: fit.points,
        alpha: fit.alpha.to_f64(),
        log_k: fit.log_k.to_f64(),
        r_squared: fit.r_squared.to_f64(),
        alpha_exact: fit.alpha.to_decimal(fit.alpha.full_digits()),
        log_k_exact: fit.log_k.to_decimal(fit.log_k.full_digits()),
    };
    emit_json(&serde_json::to_value(report)?, args.out.as_deref())
}

fn parse_ratio(text: &str) -> Result<(u64, u64)> {
    let (m, n) = text
        .split_once('/')
        .with_context(|| format!("resonance {text:?} is not of the form m/n"))?;
    let m: u64 = m.trim().parse()?;
    let n: u64 = n.trim().parse()?;
    if n == 0 {
        bail!("resonance denominator must be positive");
    }
    Ok((m, n))
}

fn relative(a: &Real, b: &Real) -> f64 {
    ((a - b) / b).abs().to_f64()
}

pub fn asymptotics(args: &AsymptoticsArgs) -> Result<()> {
    let curve = load_curve(&args.curve)?;
    let ctx = context(args.bits)?;
    let l1 = marvizi_melrose_l1(&curve, args.p, &ctx)?;
    let l1_emp = l1_empirical(&curve, args.p, &args.q, &ctx)?;
    log::info!("l1 analytic {} empirical {}", l1.to_decimal(20), l1_emp.to_decimal(20));
    let mut report = json!({
        "curve": args.curve.display().to_string(),
        "p": args.p,
        "q": args.q,
        "bits": args.bits,
        "l1": {
            "analytic": l1.to_decimal(30),
            "empirical": l1_emp.to_decimal(30),
            "relative_difference": relative(&l1_emp, &l1),
        },
    });
    if !args.no_area {
        let a1 = tabachnikov_a1(&curve, &ctx)?;
        let a1_emp = a1_empirical(&curve, &args.q, &ctx)?;
        log::info!("a1 cubed {} empirical {}", a1.cubed.to_decimal(20), a1_emp.to_decimal(20));
        report["a1"] = json!({
            "cubed": a1.cubed.to_decimal(30),
            "uncubed_as_printed": a1.uncubed.to_decimal(30),
            "empirical": a1_emp.to_decimal(30),
            "relative_difference": relative(&a1_emp, &a1.cubed),
            "relative_difference_uncubed": relative(&a1_emp, &a1.uncubed),
        });
    }
    emit_json(&report, args.out.as_deref())
}

/// Sample heights for the order checks.
const ORDER_CHECK_Y: [f64; 3] = [1e-2, 3.1622776601683794e-3, 1e-3];

/// Log-log slopes of the angular and radial displacements of `map`; `None`
/// when a component vanishes identically at the sample heights.
fn order_slopes(map: &MapSeries, ctx: &RealContext) -> (Option<f64>, Option<f64>) {
    let mut logs = (Vec::new(), Vec::new());
    let mut ys = Vec::new();
    for y in ORDER_CHECK_Y {
        let (w1, w2) = map.displacement_sup(&ctx.real(y), 64);
        ys.push(ctx.real(y).ln());
        logs.0.push(w1);
        logs.1.push(w2);
    }
    let slope = |w: &[Real]| {
        if w.iter().any(|v| v.is_zero()) {
            return None;
        }
        let v: Vec<Real> = w.iter().map(Real::ln).collect();
        fit_line(&ys, &v).ok().map(|f| f.slope.to_f64())
    };
    (slope(&logs.0), slope(&logs.1))
}

/// Largest modulus of a non-constant harmonic.
fn harmonic_content(g: &FourierTaylorSeries) -> Real {
    let mut worst = Real::zero(g.bits());
    for k in 1..=g.kmax() as i64 {
        for j in 0..=g.jmax() {
            worst = worst.max(g.coeff(k, j).abs());
        }
    }
    worst
}

pub fn normalform(args: &NormalformArgs) -> Result<()> {
    let curve = load_curve(&args.curve)?;
    let ctx = context(args.bits)?;
    if args.order < 3 {
        bail!("the billiard map already has order 2; ask for order 3 or more");
    }
    let fit = billiard_map_fit(&curve, args.jmax, args.kmax, &ctx)?;
    log::info!(
        "billiard map series: structure defect {:.3e}, fit residual {:.3e}",
        fit.structure_defect.to_f64(),
        fit.fit_residual.to_f64()
    );
    let b = ctx.real(args.radius);
    // Changes whose harmonics are below this are x-independent up to the
    // accuracy of the fitted series.
    let trivial_tol = ctx.eps().sqrt();
    let mut map = fit.map.clone();
    let mut rungs = Vec::new();
    while map.order() < args.order {
        let l = map.order();
        let tail = map.tail_estimate(&ctx.zero(), &b) / b.powi(l as i32 + 1);
        let step = averaging_step(&map, &ctx)?;
        let content = harmonic_content(&step.change.psi1).max(harmonic_content(&step.change.psi2));
        let trivial = content <= trivial_tol;
        let (angular, radial) = order_slopes(&step.map, &ctx);
        println!(
            "rung {l} -> {}: |h2*| = {:.3e} (tail {:.3e}), slopes angular {} radial {}, {}",
            l + 1,
            step.h2_star.abs().to_f64(),
            tail.to_f64(),
            angular.map_or("-".into(), |s| format!("{s:.3}")),
            radial.map_or("-".into(), |s| format!("{s:.3}")),
            if trivial { "trivial" } else { "non-trivial" }
        );
        rungs.push(json!({
            "order": l,
            "h2_star": step.h2_star.to_f64(),
            "h2_tail": tail.to_f64(),
            "k1_residual": step.k1_residual.to_f64(),
            "change_harmonic_content": content.to_f64(),
            "trivial": trivial,
            "slope_angular": angular,
            "slope_radial": radial,
        }));
        map = step.map;
    }
    let report = json!({
        "curve": args.curve.display().to_string(),
        "bits": args.bits,
        "kmax": args.kmax,
        "jmax": args.jmax,
        "structure_defect": fit.structure_defect.to_f64(),
        "fit_residual": fit.fit_residual.to_f64(),
        "rungs": rungs,
    });
    match &args.out {
        Some(path) => emit_json(&report, Some(path)),
        None => Ok(()),
    }
}
