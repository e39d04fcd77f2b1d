//! Pipeline stages behind the subcommands. Every stage checks its upstream
//! artifacts before writing anything, stamps outputs with the config hash,
//! and is deterministic: identical inputs produce byte-identical artifacts.

use std::path::{Path, PathBuf};

use romclose::io;
use romclose::{
    assemble_operators, auto_ridge_lambda, compare, d2vms_rhs, emit, extract_closure_samples,
    field_error_series, fit_closure, in_space_error_series, integrate_rom, irom_rhs, solve_burgers,
    solve_toy, toy_closure_samples, ClosureSamples, ErrorSeries, PodBasis, ReportFormat,
    ReportMeta, RomLabel, RomOperators, RomTrajectory, SnapshotSet, UnresolvedInterpolant,
};

use crate::config::{FormatSpec, PipelineConfig, RidgeSpec};
use crate::error::{CliError, Result};

/// ROM variant selector for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Variant {
    Grom,
    Irom,
    D2vms,
}

impl Variant {
    fn stem_name(self) -> &'static str {
        match self {
            Variant::Grom => "traj_grom",
            Variant::Irom => "traj_irom",
            Variant::D2vms => "traj_d2vms",
        }
    }
}

pub fn snapshots_stem(out: &Path) -> PathBuf {
    out.join("snapshots")
}

pub fn basis_stem(out: &Path) -> PathBuf {
    out.join("basis")
}

pub fn operators_stem(out: &Path) -> PathBuf {
    out.join("operators_r")
}

pub fn operators_full_stem(out: &Path) -> PathBuf {
    out.join("operators_full")
}

pub fn closure_stem(out: &Path) -> PathBuf {
    out.join("closure")
}

pub fn trajectory_stem(out: &Path, variant: Variant) -> PathBuf {
    out.join(variant.stem_name())
}

fn require(stem: &Path) -> Result<()> {
    if io::artifact_exists(stem) {
        Ok(())
    } else {
        Err(CliError::UpstreamMissing(stem.with_extension("json")))
    }
}

/// Called only once the stage is ready to write, so a failed upstream check
/// leaves the filesystem untouched.
fn ensure_out_dir(config: &PipelineConfig) -> Result<PathBuf> {
    let dir = config.output.dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Core(e.into()))?;
    Ok(dir)
}

fn load_snapshots(out: &Path) -> Result<SnapshotSet> {
    require(&snapshots_stem(out))?;
    Ok(io::load_snapshots(&snapshots_stem(out))?)
}

fn load_basis(out: &Path) -> Result<PodBasis> {
    require(&basis_stem(out))?;
    Ok(io::load_basis(&basis_stem(out))?)
}

fn resolve_ridge(spec: &RidgeSpec, samples: &ClosureSamples) -> f64 {
    match spec {
        RidgeSpec::Fixed(v) => *v,
        RidgeSpec::Policy(_) => auto_ridge_lambda(samples),
    }
}

/// `fom`: run the full-order solver and write the snapshot artifact.
pub fn cmd_fom(config: &PipelineConfig) -> Result<()> {
    let out = ensure_out_dir(config)?;
    let grid = config.grid()?;
    let snapshots = solve_burgers(&config.fom_config(), &grid)?;
    log::info!(
        "fom: {} snapshots on {} points",
        snapshots.n_snapshots(),
        grid.n_points()
    );
    io::save_snapshots(
        &snapshots,
        &snapshots_stem(&out),
        Some(&config.provenance_hash()),
    )?;
    Ok(())
}

/// `pod`: build the POD basis from stored snapshots.
pub fn cmd_pod(config: &PipelineConfig) -> Result<()> {
    let out = config.output.dir.clone();
    let snapshots = load_snapshots(&out)?;
    let basis = romclose::compute_pod(&snapshots, config.pod.rank, config.pod.centering)?;
    if basis.rank() < config.rom.r {
        return Err(CliError::ConfigInvalid(format!(
            "rom.r = {} exceeds the effective basis rank {} after deflation",
            config.rom.r,
            basis.rank()
        )));
    }
    log::info!(
        "pod: rank {} (requested {}), sigma_1 = {:.3e}",
        basis.rank(),
        config.pod.rank,
        basis.singular_values()[0]
    );
    let out = ensure_out_dir(config)?;
    io::save_basis(&basis, &basis_stem(&out), Some(&config.provenance_hash()))?;
    Ok(())
}

/// `train`: assemble Galerkin operators at both ranks and fit the closure.
pub fn cmd_train(config: &PipelineConfig) -> Result<()> {
    let out = config.output.dir.clone();
    let snapshots = load_snapshots(&out)?;
    let basis = load_basis(&out)?;
    let r = config.rom.r;
    let nu = config.fom.viscosity;

    let ops_r = assemble_operators(&basis, r, nu)?;
    let ops_full = assemble_operators(&basis, basis.rank(), nu)?;
    let samples = extract_closure_samples(&basis, &snapshots, r, nu)?;
    let lambda = resolve_ridge(&config.closure.ridge, &samples);
    let closure = fit_closure(&samples, lambda)?;
    log::info!(
        "train: lambda = {lambda:.3e}, residual_rel = {:.3e}, condition = {:.3e}",
        closure.residual_rel(),
        closure.condition()
    );

    let out = ensure_out_dir(config)?;
    let hash = config.provenance_hash();
    io::save_operators(&ops_r, &operators_stem(&out), Some(&hash))?;
    io::save_operators(&ops_full, &operators_full_stem(&out), Some(&hash))?;
    io::save_closure(&closure, &closure_stem(&out), Some(&hash))?;
    Ok(())
}

/// `simulate`: integrate one ROM variant and write its trajectory.
pub fn cmd_simulate(config: &PipelineConfig, variant: Variant) -> Result<()> {
    let out = config.output.dir.clone();
    let snapshots = load_snapshots(&out)?;
    let basis = load_basis(&out)?;
    let r = config.rom.r;
    let dt = config.rom.dt;
    let n_steps = config.rom.n_steps;
    let t0 = snapshots.times()[0];
    let a0 = basis.project(&snapshots.snapshot(0), r)?;

    let trajectory = match variant {
        Variant::Grom => {
            require(&operators_stem(&out))?;
            let ops = io::load_operators(&operators_stem(&out))?;
            integrate_rom(|_t, a| ops.rhs(a), &a0, t0, dt, n_steps, RomLabel::Grom)?
        }
        Variant::D2vms => {
            require(&operators_stem(&out))?;
            require(&closure_stem(&out))?;
            let ops = io::load_operators(&operators_stem(&out))?;
            let closure = io::load_closure(&closure_stem(&out))?;
            integrate_rom(
                |_t, a| d2vms_rhs(&ops, &closure, a),
                &a0,
                t0,
                dt,
                n_steps,
                RomLabel::D2vms,
            )?
        }
        Variant::Irom => {
            require(&operators_full_stem(&out))?;
            let ops_full = io::load_operators(&operators_full_stem(&out))?;
            let samples =
                extract_closure_samples(&basis, &snapshots, r, config.fom.viscosity)?;
            let interp = UnresolvedInterpolant::new(&samples);
            integrate_rom(
                |t, a| irom_rhs(&ops_full, r, a, &interp, t),
                &a0,
                t0,
                dt,
                n_steps,
                RomLabel::Irom,
            )?
        }
    };
    log::info!(
        "simulate {}: {} steps of dt = {dt}",
        variant.stem_name(),
        n_steps
    );
    let out = ensure_out_dir(config)?;
    io::save_trajectory(
        &trajectory,
        &trajectory_stem(&out, variant),
        Some(&config.provenance_hash()),
    )?;
    Ok(())
}

fn emit_report(
    report: &romclose::ErrorReport,
    formats: &[FormatSpec],
    out: &Path,
    base_name: &str,
) -> Result<()> {
    for format in formats {
        let (ext, kind) = match format {
            FormatSpec::Csv => ("csv", ReportFormat::Csv),
            FormatSpec::Json => ("json", ReportFormat::Json),
        };
        let path = out.join(format!("{base_name}.{ext}"));
        emit(report, kind, &path)?;
        log::info!("report written to {}", path.display());
    }
    Ok(())
}

/// `report`: error series for all three variants plus summary ratios.
pub fn cmd_report(
    config: &PipelineConfig,
    format_override: Option<FormatSpec>,
    against_projection: bool,
) -> Result<()> {
    let out = config.output.dir.clone();
    let snapshots = load_snapshots(&out)?;
    let basis = load_basis(&out)?;
    for variant in [Variant::Grom, Variant::Irom, Variant::D2vms] {
        require(&trajectory_stem(&out, variant))?;
    }

    let mut entries: Vec<(String, ErrorSeries)> = Vec::new();
    for variant in [Variant::Grom, Variant::Irom, Variant::D2vms] {
        let traj: RomTrajectory = io::load_trajectory(&trajectory_stem(&out, variant))?;
        let series = if against_projection {
            in_space_error_series(&basis, &traj, &snapshots)?
        } else {
            field_error_series(&basis, &traj, &snapshots)?
        };
        entries.push((traj.label().as_str().to_string(), series));
    }

    let ridge_lambda = io::load_closure(&closure_stem(&out))
        .ok()
        .map(|c| c.ridge_lambda());
    let meta = ReportMeta {
        r: Some(config.rom.r),
        big_r: Some(basis.rank()),
        viscosity: Some(config.fom.viscosity),
        dt: Some(config.rom.dt),
        ridge_lambda,
        provenance: Some(config.provenance_hash()),
    };
    let report = compare(&entries, meta)?;
    let formats: Vec<FormatSpec> = match format_override {
        Some(f) => vec![f],
        None => config.output.formats.clone(),
    };
    let out = ensure_out_dir(config)?;
    emit_report(&report, &formats, &out, "report")
}

/// `toy`: the schematic three-mode pipeline — 3D reference, 2D truncation,
/// 2D plus fitted closure — reported as coefficient-space errors.
pub fn cmd_toy(config: &PipelineConfig) -> Result<()> {
    let out = ensure_out_dir(config)?;
    let section = config.toy.clone().unwrap_or_default();
    let system = config.toy_system()?;
    let reference = solve_toy(&system, section.dt, section.n_steps)?;
    let keep = section.keep;

    let ops_full: RomOperators = system.operators();
    let ops_trunc = ops_full.leading(keep)?;
    let a0 = system.initial().rows(0, keep).into_owned();

    let truncated = integrate_rom(
        |_t, a| ops_trunc.rhs(a),
        &a0,
        0.0,
        section.dt,
        section.n_steps,
        RomLabel::Grom,
    )?;
    let samples = toy_closure_samples(&system, &reference, keep)?;
    let lambda = resolve_ridge(&config.closure.ridge, &samples);
    let closure = fit_closure(&samples, lambda)?;
    let closed = integrate_rom(
        |_t, a| d2vms_rhs(&ops_trunc, &closure, a),
        &a0,
        0.0,
        section.dt,
        section.n_steps,
        RomLabel::D2vms,
    )?;
    log::info!(
        "toy: lambda = {lambda:.3e}, residual_rel = {:.3e}",
        closure.residual_rel()
    );

    // Coefficient-space error of the retained modes against the reference.
    let error_series = |traj: &RomTrajectory| -> ErrorSeries {
        let mut values = Vec::with_capacity(reference.times().len());
        for j in 0..reference.times().len() {
            let mut d2 = 0.0;
            for i in 0..keep {
                let d = traj.coeffs()[(j, i)] - reference.coeffs()[(j, i)];
                d2 += d * d;
            }
            values.push(d2.sqrt());
        }
        ErrorSeries {
            times: reference.times().to_vec(),
            values,
        }
    };
    let entries = vec![
        ("grom".to_string(), error_series(&truncated)),
        ("d2vms".to_string(), error_series(&closed)),
    ];
    let meta = ReportMeta {
        r: Some(keep),
        big_r: Some(romclose::TOY_DIM),
        viscosity: None,
        dt: Some(section.dt),
        ridge_lambda: Some(lambda),
        provenance: Some(config.provenance_hash()),
    };
    let report = compare(&entries, meta)?;
    emit_report(&report, &config.output.formats, &out, "toy_report")
}
