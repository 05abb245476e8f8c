//! Command front end: seed construction, non-degeneracy checks, continuation
//! runs, embedding export, and dynamical verification, with reproducible
//! run manifests.
//!
//! File formats:
//! - seed / manifest: JSON
//! - family: CSV with header
//!   `kappa,alpha,residual,newton_iters,min_abs_eig,x_1,y_1,…,x_n,y_n`
//! - embedded series: CSV with header `kappa,body_index,x,y,z`
//!
//! Numbers are written with 17 significant digits so that every double
//! round-trips exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use crate::continuation::{
    continue_family, ContinuationFamily, ContinuationOptions, Direction, FamilyRecord,
};
use crate::dynamics::verify_re;
use crate::embedding::{embed, rescale_unit};
use crate::error::Error;
use crate::model::{Configuration, Masses};
use crate::seeds::{
    check_nondegeneracy, lagrange_triangle, polygon_cc, seed_report, SeedReport, KERNEL_EIG_TOL,
};

/// How the planar seed is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SeedKind {
    /// Regular n-gon of unit masses.
    Polygon(usize),
    /// Lagrange triangle with the given masses.
    Lagrange3(f64, f64, f64),
    /// Seed JSON written by `cmd_seed` (or by hand).
    Custom(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionChoice {
    Pos,
    Neg,
    Both,
}

/// Everything a run needs; serialized verbatim into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed_kind: SeedKind,
    pub direction: DirectionChoice,
    pub delta_kappa: f64,
    pub kappa_limit: f64,
    pub tol: f64,
    pub adaptive: bool,
    pub reflect_z: bool,
    pub out: PathBuf,
    pub manifest: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.delta_kappa <= 0.0 {
            bail!("--dk must be positive");
        }
        if self.tol <= 0.0 {
            bail!("--tol must be positive");
        }
        Ok(())
    }
}

/// Seed file schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedFile {
    pub masses: Vec<f64>,
    /// Flat coordinates (x_1, y_1, …, x_n, y_n).
    pub u: Vec<f64>,
    pub residual: f64,
    pub hessian_spectrum: Vec<f64>,
    pub kernel_dimension: usize,
    pub degenerate: bool,
    pub routh_beta: Option<f64>,
}

impl SeedFile {
    pub fn from_report(r: &SeedReport) -> Self {
        SeedFile {
            masses: r.masses.as_slice().to_vec(),
            u: r.configuration.as_vector().iter().copied().collect(),
            residual: r.residual,
            hessian_spectrum: r.hessian_spectrum.clone(),
            kernel_dimension: r.kernel_dimension,
            degenerate: r.degenerate,
            routh_beta: r.routh_beta,
        }
    }
}

/// Run manifest: enough to reproduce every output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: RunConfig,
    pub version: String,
    pub outputs: Vec<ManifestOutput>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestOutput {
    pub path: PathBuf,
    pub direction: DirectionChoice,
    pub termination: String,
    pub terminal_kappa: f64,
    pub records: usize,
}

/// Build the seed report named by the config.
pub fn build_seed(kind: &SeedKind) -> anyhow::Result<SeedReport> {
    match kind {
        SeedKind::Polygon(n) => {
            let u = polygon_cc(*n)?;
            let m = Masses::new(vec![1.0; *n])?;
            Ok(seed_report(&u, &m)?)
        }
        SeedKind::Lagrange3(m1, m2, m3) => {
            let u = lagrange_triangle(*m1, *m2, *m3)?;
            let m = Masses::new(vec![*m1, *m2, *m3])?;
            Ok(seed_report(&u, &m)?)
        }
        SeedKind::Custom(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading seed file {}", path.display()))?;
            let file: SeedFile = serde_json::from_str(&text)?;
            let u = Configuration::from_flat(nalgebra::DVector::from_vec(file.u))?;
            let m = Masses::new(file.masses)?;
            Ok(check_nondegeneracy(&u, &m, KERNEL_EIG_TOL)?)
        }
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn atomic_write(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp~");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `seed`: write the seed JSON and print a short report.
pub fn cmd_seed(kind: &SeedKind, out: &Path) -> anyhow::Result<SeedReport> {
    let report = build_seed(kind)?;
    let file = SeedFile::from_report(&report);
    atomic_write(out, serde_json::to_string_pretty(&file)?.as_bytes())?;
    let n = report.configuration.n_bodies();
    println!("seed: {n} bodies");
    for j in 0..n {
        let p = report.configuration.point(j);
        println!(
            "  body {}: ({}, {})  |u| = {:.6}",
            j + 1,
            fmt17(p.x),
            fmt17(p.y),
            p.norm()
        );
    }
    println!("gradient residual (max-norm): {:.3e}", report.residual);
    println!("Hessian kernel dimension: {}", report.kernel_dimension);
    if let Some(beta) = report.routh_beta {
        println!("Routh beta: {beta:.6}");
    }
    if report.degenerate {
        bail!("seed is degenerate (kernel dimension {})", report.kernel_dimension);
    }
    Ok(report)
}

/// `check`: non-degeneracy report without writing anything.
pub fn cmd_check(kind: &SeedKind) -> anyhow::Result<SeedReport> {
    let report = build_seed(kind)?;
    println!("gradient residual (max-norm): {:.3e}", report.residual);
    println!(
        "Hessian spectrum (ascending |lambda|): {:?}",
        report.hessian_spectrum
    );
    println!("kernel dimension: {}", report.kernel_dimension);
    if let Some(beta) = report.routh_beta {
        println!("Routh beta: {beta:.6}");
    }
    if report.degenerate {
        bail!("configuration is degenerate");
    }
    println!("non-degenerate: continuation admissible");
    Ok(report)
}

fn family_csv(family: &ContinuationFamily) -> String {
    let n = family.records[0].u.n_bodies();
    let mut header = String::from("kappa,alpha,residual,newton_iters,min_abs_eig");
    for j in 1..=n {
        header.push_str(&format!(",x_{j},y_{j}"));
    }
    let mut out = header;
    out.push('\n');
    for r in &family.records {
        out.push_str(&fmt17(r.kappa));
        out.push(',');
        out.push_str(&fmt17(r.alpha));
        out.push(',');
        out.push_str(&fmt17(r.residual));
        out.push(',');
        out.push_str(&r.newton_iters.to_string());
        out.push(',');
        out.push_str(&fmt17(r.min_abs_eig));
        for x in r.u.as_vector().iter() {
            out.push(',');
            out.push_str(&fmt17(*x));
        }
        out.push('\n');
    }
    out
}

/// Parsed family CSV row.
#[derive(Debug, Clone)]
pub struct FamilyRow {
    pub kappa: f64,
    pub alpha: f64,
    pub residual: f64,
    pub newton_iters: usize,
    pub min_abs_eig: f64,
    pub u: Vec<f64>,
}

/// Read a family CSV written by [`cmd_continue`].
pub fn read_family_csv(path: &Path) -> anyhow::Result<Vec<FamilyRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening family file {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() < 7 {
            bail!("family row has too few fields: {record:?}");
        }
        let parse = |i: usize| -> anyhow::Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| anyhow!("bad float in column {i}: {e}"))
        };
        rows.push(FamilyRow {
            kappa: parse(0)?,
            alpha: parse(1)?,
            residual: parse(2)?,
            newton_iters: record[3].parse()?,
            min_abs_eig: parse(4)?,
            u: (5..record.len()).map(parse).collect::<anyhow::Result<_>>()?,
        });
    }
    Ok(rows)
}

fn direction_out_path(base: &Path, dir: Direction, split: bool) -> PathBuf {
    if !split {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("family");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    let suffix = match dir {
        Direction::Positive => "pos",
        Direction::Negative => "neg",
    };
    base.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn termination_label(family: &ContinuationFamily) -> String {
    format!("{:?}", family.termination)
}

/// `continue`: run the continuation and write CSV output plus a manifest.
///
/// Mathematical termination (fold, accuracy floor) is a result, not an
/// error; only bad input or I/O failures return `Err`.
pub fn cmd_continue(config: &RunConfig) -> anyhow::Result<Vec<ContinuationFamily>> {
    config.validate()?;
    let start = std::time::Instant::now();
    let seed = build_seed(&config.seed_kind)?;
    if seed.degenerate {
        bail!("seed is degenerate; refusing to continue");
    }
    let opts = ContinuationOptions {
        adaptive: config.adaptive,
        ..ContinuationOptions::default()
    };
    let dirs: Vec<Direction> = match config.direction {
        DirectionChoice::Pos => vec![Direction::Positive],
        DirectionChoice::Neg => vec![Direction::Negative],
        DirectionChoice::Both => vec![Direction::Positive, Direction::Negative],
    };
    let split = dirs.len() > 1;
    let mut families = Vec::new();
    let mut outputs = Vec::new();
    for dir in dirs {
        let limit = match dir {
            Direction::Positive => config.kappa_limit.abs(),
            Direction::Negative => -config.kappa_limit.abs(),
        };
        let family = continue_family(&seed, dir, config.delta_kappa, limit, config.tol, &opts)
            .map_err(|e| anyhow!("continuation failed to start: {e}"))?;
        let path = direction_out_path(&config.out, dir, split);
        atomic_write(&path, family_csv(&family).as_bytes())?;
        println!(
            "{}: {} records, terminal kappa {}, termination {}",
            path.display(),
            family.records.len(),
            fmt17(family.terminal_kappa()),
            termination_label(&family)
        );
        outputs.push(ManifestOutput {
            path,
            direction: match dir {
                Direction::Positive => DirectionChoice::Pos,
                Direction::Negative => DirectionChoice::Neg,
            },
            termination: termination_label(&family),
            terminal_kappa: family.terminal_kappa(),
            records: family.records.len(),
        });
        families.push(family);
    }
    if let Some(manifest_path) = &config.manifest {
        let manifest = Manifest {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        atomic_write(
            manifest_path,
            serde_json::to_string_pretty(&manifest)?.as_bytes(),
        )?;
    }
    Ok(families)
}

/// `embed`: map family rows with κ ≠ 0 onto the unit sphere/hyperboloid and
/// write the point series. Returns the number of flat rows skipped.
pub fn cmd_embed(family_path: &Path, out: &Path, reflect_z: bool) -> anyhow::Result<usize> {
    let rows = read_family_csv(family_path)?;
    let mut text = String::from("kappa,body_index,x,y,z\n");
    let mut skipped = 0usize;
    for row in &rows {
        if row.kappa == 0.0 {
            skipped += 1;
            continue;
        }
        let u = Configuration::from_flat(nalgebra::DVector::from_vec(row.u.clone()))?;
        let ec = rescale_unit(&embed(&u, row.kappa)?, reflect_z)?;
        for (j, p) in ec.points.iter().enumerate() {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(row.kappa),
                j + 1,
                fmt17(p.x),
                fmt17(p.y),
                fmt17(p.z)
            ));
        }
    }
    atomic_write(out, text.as_bytes())?;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} flat (kappa = 0) rows");
    }
    Ok(skipped)
}

/// Result of verifying one family row dynamically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyRow {
    pub kappa: f64,
    pub drift: f64,
    pub ok: bool,
}

/// `verify`: integrate sampled rows over one period 2π and report drift.
/// Returns per-row results; `ok` is false where drift exceeds `threshold`.
pub fn cmd_verify(
    family_path: &Path,
    masses: &[f64],
    threshold: f64,
    max_rows: usize,
) -> anyhow::Result<Vec<VerifyRow>> {
    let rows = read_family_csv(family_path)?;
    if rows.is_empty() {
        bail!("family file is empty");
    }
    let m = Masses::new(masses.to_vec())?;
    let stride = (rows.len() / max_rows.max(1)).max(1);
    let mut results = Vec::new();
    for row in rows.iter().step_by(stride).chain(rows.last().into_iter()) {
        if results
            .last()
            .is_some_and(|r: &VerifyRow| r.kappa == row.kappa)
        {
            continue;
        }
        let u = Configuration::from_flat(nalgebra::DVector::from_vec(row.u.clone()))?;
        let result = verify_re(&u, &m, row.kappa, 2.0 * std::f64::consts::PI, 1e-10);
        match result {
            Ok(drift) => {
                let ok = drift <= threshold;
                println!(
                    "kappa {:+.4}: drift {:.3e} {}",
                    row.kappa,
                    drift,
                    if ok { "ok" } else { "FLAGGED" }
                );
                results.push(VerifyRow {
                    kappa: row.kappa,
                    drift,
                    ok,
                });
            }
            Err(Error::StepUnderflow { t }) => {
                println!("kappa {:+.4}: integration failed at t = {t}", row.kappa);
                results.push(VerifyRow {
                    kappa: row.kappa,
                    drift: f64::INFINITY,
                    ok: false,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let max_drift = results.iter().map(|r| r.drift).fold(0.0f64, f64::max);
    println!("max drift over sampled rows: {max_drift:.3e}");
    Ok(results)
}

/// Re-assemble `FamilyRecord`s from parsed CSV rows (positions only; the
/// Hessian diagnostics come straight from the file).
pub fn rows_to_records(rows: &[FamilyRow]) -> anyhow::Result<Vec<FamilyRecord>> {
    rows.iter()
        .map(|r| {
            Ok(FamilyRecord {
                kappa: r.kappa,
                u: Configuration::from_flat(nalgebra::DVector::from_vec(r.u.clone()))?,
                alpha: r.alpha,
                residual: r.residual,
                newton_iters: r.newton_iters,
                min_abs_eig: r.min_abs_eig,
                step_used: 0.0,
            })
        })
        .collect()
}
