use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use serde_json::json;
use tomoqubo::baselines::{fbp, sart, SartConfig};
use tomoqubo::encoding::{
    bits_to_string, decode, encode_ground_truth, parse_bits, EncodingKind, EncodingScheme,
    VariableMap,
};
use tomoqubo::geometry::{
    add_noise, build_system_matrix, forward_project, isometric_angles, ProjectionGeometry, Sinogram,
};
use tomoqubo::metrics::{format_table, target_energy, ReconstructionReport};
use tomoqubo::phantom::{
    load_image, prepare, shepp_logan, to_csv, to_pgm_preview, Image, MacLevels,
};
use tomoqubo::qubo::{build_q1, build_q2, combine, energy, QuboModel};
use tomoqubo::solver::{anneal, brute_force, SolveConfig, SolveResult};
use tomoqubo::Error;

use crate::artifacts::{self as art, path_string, BuildInfo};
use crate::{
    BaselineArgs, BaselineMethod, BuildArgs, CompareArgs, Encoding, PhantomArgs, PhantomKind,
    ProjectArgs, ReconstructArgs, SolveArgs,
};

fn or_default(given: &Option<PathBuf>, dir: &Path, name: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| dir.join(name))
}

fn load_sinogram(path: &Path) -> Result<Sinogram> {
    let text = art::read_text(path)?;
    Sinogram::from_csv(&text).with_context(|| format!("reading sinogram {}", path.display()))
}

fn load_geometry(path: &Path) -> Result<ProjectionGeometry> {
    let geom: ProjectionGeometry = art::read_json(path)?;
    geom.validate()
        .with_context(|| format!("checking geometry {}", path.display()))?;
    Ok(geom)
}

fn check_sinogram(sino: &Sinogram, geom: &ProjectionGeometry) -> Result<()> {
    if !sino.matches(geom) {
        return Err(Error::DimensionMismatch(format!(
            "sinogram is {}x{} but geometry has {} angles and {} bins",
            sino.num_angles(),
            sino.num_bins(),
            geom.angles.len(),
            geom.detector_bins
        ))
        .into());
    }
    Ok(())
}

pub fn phantom(args: &PhantomArgs) -> Result<()> {
    let dir = &args.dir.dir;
    let levels = MacLevels::new(args.levels.clone())?;
    let source = match args.kind {
        PhantomKind::SheppLogan => {
            if args.input.is_some() {
                return Err(Error::InvalidArgument(
                    "--input is only used with --kind image".into(),
                )
                .into());
            }
            shepp_logan(args.source_size.max(args.size))?
        }
        PhantomKind::Image => {
            let path = args.input.as_ref().ok_or_else(|| {
                Error::InvalidArgument("--kind image requires --input <path>".into())
            })?;
            load_image(path)?
        }
    };
    let img = prepare(
        &source,
        args.size,
        args.blur,
        &levels,
        args.thresholds.as_deref(),
    )?;
    art::ensure_dir(dir)?;
    art::write(&dir.join(art::PHANTOM_CSV), to_csv(&img))?;
    art::write(&dir.join(art::PHANTOM_PGM), to_pgm_preview(&img))?;
    art::write_provenance(
        dir,
        "phantom",
        json!({
            "kind": format!("{:?}", args.kind).to_lowercase(),
            "size": args.size,
            "levels": args.levels,
            "blur": args.blur,
            "thresholds": args.thresholds,
            "input": args.input.as_deref().map(path_string),
            "source_size": args.source_size,
            "nonzero_pixels": img.pixels().iter().filter(|&&v| v != 0.0).count(),
        }),
    )?;
    println!(
        "wrote {}x{} phantom to {}",
        img.width(),
        img.height(),
        dir.join(art::PHANTOM_CSV).display()
    );
    Ok(())
}

pub fn project(args: &ProjectArgs) -> Result<()> {
    let dir = &args.dir.dir;
    let input = or_default(&args.input, dir, art::PHANTOM_CSV);
    if args.projections == 0 {
        return Err(Error::InvalidArgument("--projections must be at least 1".into()).into());
    }
    let img = load_image(&input)?;
    let angles = isometric_angles(args.projections)?;
    let geom = match args.bins {
        Some(bins) => ProjectionGeometry::new(
            img.width(),
            img.height(),
            angles,
            bins,
            args.bin_width.unwrap_or(1.0),
        )?,
        None => ProjectionGeometry::with_default_detector(img.width(), img.height(), angles)?,
    };
    let sm = build_system_matrix(&geom);
    let sino = forward_project(&img, &sm)?;
    art::ensure_dir(dir)?;
    art::write(&dir.join(art::SINOGRAM), sino.to_csv())?;
    art::write_json(&dir.join(art::GEOMETRY), &geom)?;
    if let Some(level) = args.noise {
        let noisy = add_noise(&sino, level, args.seed)?;
        art::write(&dir.join(art::SINOGRAM_NOISY), noisy.to_csv())?;
    }
    art::write_provenance(
        dir,
        "project",
        json!({
            "input": path_string(&input),
            "projections": args.projections,
            "angles": geom.angles,
            "detector_bins": geom.detector_bins,
            "bin_width": geom.bin_width,
            "noise": args.noise,
            "seed": args.seed,
        }),
    )?;
    println!(
        "wrote {} angles x {} bins sinogram to {}",
        sino.num_angles(),
        sino.num_bins(),
        dir.join(art::SINOGRAM).display()
    );
    Ok(())
}

pub fn build(args: &BuildArgs) -> Result<()> {
    let dir = &args.dir.dir;
    for (name, w) in [("a", args.a), ("b", args.b)] {
        if !(w.is_finite() && w >= 0.0) {
            return Err(
                Error::Validation(format!("--{name} must be finite and non-negative")).into(),
            );
        }
    }
    if args.a == 0.0 && args.b == 0.0 {
        return Err(
            Error::Validation("--a and --b are both zero; the model is empty".into()).into(),
        );
    }
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| if args.b == 0.0 { "qtr" } else { "qcstr" }.to_string());
    art::check_label(&label)?;

    let sino_path = or_default(&args.sinogram, dir, art::SINOGRAM);
    let geom_path = or_default(&args.geometry, dir, art::GEOMETRY);
    let sino = load_sinogram(&sino_path)?;
    let geom = load_geometry(&geom_path)?;
    check_sinogram(&sino, &geom)?;

    let levels = MacLevels::new(args.levels.clone())?;
    let kind = match args.encoding {
        Encoding::MacDifference => EncodingKind::MacDifference,
        Encoding::Mac => EncodingKind::Mac,
        Encoding::Radix2 => EncodingKind::Radix2,
    };
    let scheme = EncodingScheme::from_kind(kind, &levels);
    let map = VariableMap::for_scheme(geom.image_width, geom.image_height, &scheme);
    let sm = build_system_matrix(&geom);
    let q1 = build_q1(&sino, &sm, &scheme, &map)?;
    let q2 = build_q2(&scheme, &map);
    let q = combine(&q1, &q2, args.a, args.b)?;

    let (target, truth_energy) = match &args.phantom {
        Some(path) => {
            let truth = load_image(path)?;
            if truth.width() != geom.image_width || truth.height() != geom.image_height {
                return Err(Error::DimensionMismatch(format!(
                    "phantom is {}x{} but geometry is {}x{}",
                    truth.width(),
                    truth.height(),
                    geom.image_width,
                    geom.image_height
                ))
                .into());
            }
            let bits = encode_ground_truth(&truth, &scheme)?;
            (
                Some(target_energy(&truth, &sino, args.a, args.b)),
                Some(energy(&q, &bits)?),
            )
        }
        None => (None, None),
    };

    art::ensure_dir(dir)?;
    q.export(dir.join(art::qubo_file(&label)))?;
    let info = BuildInfo {
        label: label.clone(),
        a: args.a,
        b: args.b,
        encoding: scheme,
        width: geom.image_width,
        height: geom.image_height,
        projections: geom.angles.len(),
        num_vars: q.num_vars(),
        sum_squares: sino.sum_squares(),
        target_energy: target,
        truth_energy,
    };
    art::write_json(&dir.join(art::build_file(&label)), &info)?;
    art::write_provenance(
        dir,
        &format!("build_{label}"),
        json!({
            "sinogram": path_string(&sino_path),
            "geometry": path_string(&geom_path),
            "encoding": info.encoding,
            "a": args.a,
            "b": args.b,
            "phantom": args.phantom.as_deref().map(path_string),
            "label": label,
        }),
    )?;
    println!(
        "wrote {} ({} variables, {} linear, {} quadratic terms)",
        dir.join(art::qubo_file(&label)).display(),
        q.num_vars(),
        q.linear().len(),
        q.quadratic().len()
    );
    if let Some(t) = target {
        println!("target energy {t}");
    }
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let dir = &args.dir.dir;
    art::check_label(&args.label)?;
    let model_path = dir.join(art::qubo_file(&args.label));
    let model = QuboModel::import(&model_path)?;
    let config = SolveConfig {
        restarts: args.restarts,
        sweeps_per_restart: args.sweeps,
        initial_temperature: args.t0,
        final_temperature: args.tf,
        seed: args.seed,
        threads: args.threads,
        time_limit: match args.time_limit {
            Some(s) if s.is_finite() && s > 0.0 => Some(Duration::from_secs_f64(s)),
            Some(s) => {
                return Err(Error::InvalidArgument(format!(
                    "--time-limit must be a positive number of seconds, got {s}"
                ))
                .into())
            }
            None => None,
        },
    };
    let result = if args.exact {
        brute_force(&model)?
    } else {
        anneal(&model, &config)?
    };
    for (r, e) in result.per_restart_energies.iter().enumerate() {
        eprintln!("restart {r}: energy {e}");
    }
    let mut text = result.to_json(args.timing);
    text.push('\n');
    art::write(&dir.join(art::solve_file(&args.label)), text)?;
    art::write(
        &dir.join(art::bits_file(&args.label)),
        bits_to_string(&result.best_bits),
    )?;
    art::write_provenance(
        dir,
        &format!("solve_{}", args.label),
        json!({
            "model": path_string(&model_path),
            "exact": args.exact,
            "restarts": args.restarts,
            "sweeps": args.sweeps,
            "t0": args.t0,
            "tf": args.tf,
            "seed": args.seed,
            "threads": args.threads,
            "time_limit": args.time_limit,
            "timing": args.timing,
        }),
    )?;
    println!("best energy {}", result.best_energy);
    Ok(())
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let dir = &args.dir.dir;
    art::check_label(&args.label)?;
    let info: BuildInfo = art::read_json(&dir.join(art::build_file(&args.label)))?;
    let bits_path = dir.join(art::bits_file(&args.label));
    let bits = parse_bits(&art::read_text(&bits_path)?)
        .with_context(|| format!("reading {}", bits_path.display()))?;
    let map = VariableMap::for_scheme(info.width, info.height, &info.encoding);
    let img = decode(&bits, &info.encoding, &map)?;
    let out = dir.join(art::recon_file(&args.label));
    art::write(&out, to_csv(&img))?;
    art::write_provenance(
        dir,
        &format!("reconstruct_{}", args.label),
        json!({ "label": args.label, "bits": path_string(&bits_path) }),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn baseline(args: &BaselineArgs) -> Result<()> {
    let dir = &args.dir.dir;
    let sino_path = or_default(&args.sinogram, dir, art::SINOGRAM);
    let geom_path = or_default(&args.geometry, dir, art::GEOMETRY);
    let sino = load_sinogram(&sino_path)?;
    let geom = load_geometry(&geom_path)?;
    check_sinogram(&sino, &geom)?;
    let (label, img, params) = match args.method {
        BaselineMethod::Fbp => ("fbp", fbp(&sino, &geom)?, json!({})),
        BaselineMethod::Sart => {
            let config = SartConfig {
                iterations: args.iterations,
                relaxation: args.relaxation,
            };
            let img = sart(&sino, &build_system_matrix(&geom), &config)?;
            (
                "sart",
                img,
                json!({ "iterations": args.iterations, "relaxation": args.relaxation }),
            )
        }
    };
    let out = dir.join(art::recon_file(label));
    art::write(&out, to_csv(&img))?;
    art::write_provenance(
        dir,
        &format!("baseline_{label}"),
        json!({
            "method": label,
            "sinogram": path_string(&sino_path),
            "geometry": path_string(&geom_path),
            "settings": params,
        }),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Labels of every `recon_<label>.csv` in `dir`, sorted.
fn recon_labels(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut labels = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(label) = name
            .strip_prefix("recon_")
            .and_then(|rest| rest.strip_suffix(".csv"))
        {
            labels.push(label.to_string());
        }
    }
    labels.sort();
    Ok(labels)
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let dir = &args.dir.dir;
    let phantom_path = or_default(&args.phantom, dir, art::PHANTOM_CSV);
    let truth = load_image(&phantom_path)?;
    let geom_path = dir.join(art::GEOMETRY);
    let projections = if geom_path.exists() {
        load_geometry(&geom_path)?.angles.len()
    } else {
        0
    };
    let scenario = args
        .scenario
        .clone()
        .unwrap_or_else(|| format!("{projections} projections"));

    let labels = recon_labels(dir)?;
    if labels.is_empty() {
        return Err(Error::Io {
            path: dir.join("recon_<label>.csv"),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no reconstructions to compare",
            ),
        }
        .into());
    }
    let mut reports = Vec::new();
    for label in &labels {
        let recon: Image = load_image(dir.join(art::recon_file(label)))?;
        let mut report = ReconstructionReport::evaluate(
            label.to_uppercase(),
            scenario.clone(),
            projections,
            &recon,
            &truth,
        )?;
        let build_path = dir.join(art::build_file(label));
        if build_path.exists() {
            let info: BuildInfo = art::read_json(&build_path)?;
            report = report.with_weights(info.a, info.b);
            let solve_path = dir.join(art::solve_file(label));
            if solve_path.exists() {
                let result = SolveResult::from_json(&art::read_text(&solve_path)?)?;
                report = report.with_energies(result.best_energy, info.target_energy);
            }
        }
        reports.push(report);
    }
    let table = format_table(&reports);
    art::write_json(&dir.join(art::REPORT_JSON), &reports)?;
    art::write(&dir.join(art::REPORT_TXT), &table)?;
    art::write_provenance(
        dir,
        "compare",
        json!({
            "phantom": path_string(&phantom_path),
            "scenario": scenario,
            "methods": labels,
        }),
    )?;
    print!("{table}");
    Ok(())
}
