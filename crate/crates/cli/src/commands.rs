use std::fmt::Write as _;
use std::path::Path;

use rislink::experiment::{
    self, bandwidth_3db, compare_resolutions, configuration_map, ideal_resolutions, optimize_and_sweep,
    quantization_csv, quantization_study, sweep_csv, trace_csv, Reference,
};
use rislink::optimizer::{greedy_optimize_model, MeasurementNoise};
use rislink::scalar::watts_to_dbm;
use rislink::scenario::{bundled_json, BUNDLED_PREFIX};
use rislink::{io, Band, ChannelModel, Codebook, Error, LoadedScenario, OptimizerSettings, Result, Start, SurfaceGrid, Vec3};
use serde_json::json;

use crate::args::{CodebookArgs, Command, CompareArgs, OptimizeArgs, OptimizerArgs, QuantizationArgs, SweepArgs};
use crate::manifest::{sha256_hex, InputRecord};

/// Everything a command produces, before anything touches the disk.
pub struct Run {
    pub files: Vec<(String, String)>,
    pub inputs: Vec<InputRecord>,
    pub seed: Option<u64>,
    pub settings: serde_json::Value,
    /// Human-readable summary for stdout.
    pub summary: String,
    pub warnings: Vec<String>,
}

pub fn execute(command: &Command) -> Result<Run> {
    match command {
        Command::Optimize(a) => optimize(a),
        Command::Sweep(a) => sweep(a),
        Command::CodebookAnalyze(a) => codebook_analyze(a),
        Command::CompareResolutions(a) => compare(a),
        Command::QuantizationStudy(a) => quantization(a),
        Command::Replay(_) => unreachable!("replay is dispatched by main"),
    }
}

fn load_scenario(source: &str) -> Result<(LoadedScenario, InputRecord)> {
    let (text, fallback) = match source.strip_prefix(BUNDLED_PREFIX) {
        Some(name) => (
            bundled_json(name)
                .ok_or_else(|| Error::Validation(format!("--scenario: no bundled scenario named {name:?}")))?
                .to_string(),
            name.to_string(),
        ),
        None => {
            let path = Path::new(source);
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (io::read_text(path)?, stem)
        }
    };
    let loaded = rislink::scenario::parse_scenario(&text, &fallback)?;
    Ok((loaded, record("scenario", source, text.as_bytes())))
}

fn load_codebook(source: &str, resolution: Option<&str>) -> Result<(Codebook<f64>, InputRecord)> {
    let (book, bytes) = if source == "measured" {
        (Codebook::measured(), rislink::codebook::MEASURED_CODEBOOK_JSON.as_bytes().to_vec())
    } else if let Some(m) = source.strip_prefix("ideal:") {
        let count = crate::args::parse_count(m).map_err(|e| Error::Validation(format!("--codebook: {e}")))?;
        let book = Codebook::ideal(count).map_err(|e| Error::Validation(format!("--codebook: {e}")))?;
        (book, source.as_bytes().to_vec())
    } else {
        let text = io::read_text(Path::new(source))?;
        (Codebook::from_json(&text)?, text.into_bytes())
    };
    let book = match resolution {
        Some(label) => book.restrict(label)?,
        None => book,
    };
    Ok((book, record("codebook", source, &bytes)))
}

fn record(role: &str, source: &str, bytes: &[u8]) -> InputRecord {
    InputRecord {
        role: role.to_string(),
        source: source.to_string(),
        sha256: sha256_hex(bytes),
    }
}

fn settings_from(args: &OptimizerArgs, noise: Option<MeasurementNoise>) -> Result<OptimizerSettings> {
    let settings = OptimizerSettings {
        max_iterations: args.iterations,
        epsilon: args.epsilon,
        start: match &args.start {
            Some(code) => Start::Uniform(code.clone()),
            None => Start::FirstState,
        },
        noise,
    };
    settings
        .validate()
        .map_err(|e| Error::Validation(format!("optimizer settings: {e}")))?;
    Ok(settings)
}

fn settings_json(s: &OptimizerSettings) -> serde_json::Value {
    json!({
        "max_iterations": s.max_iterations,
        "epsilon": s.epsilon,
        "start": match &s.start {
            Start::Uniform(code) => code.clone(),
            _ => "first-state".to_string(),
        },
        "noise_db": s.noise.map(|n| n.sigma_db),
    })
}

fn optimize(a: &OptimizeArgs) -> Result<Run> {
    let (s, scenario_in) = load_scenario(&a.scenario)?;
    let (book, codebook_in) = load_codebook(&a.codebook, a.resolution.as_deref())?;
    let noise = a.noise_db.map(|sigma_db| MeasurementNoise {
        sigma_db,
        seed: a.seed.expect("clap enforces --seed with --noise-db"),
    });
    let settings = settings_from(&a.optimizer, noise)?;
    let model = ChannelModel::new(&s.scenario, &s.grid)?;
    let result = greedy_optimize_model(&model, &s.groups, &book, s.scenario.f, &settings)?;
    let plate = rislink::reference_plate_power(&s.scenario, &s.grid)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "scenario {}: {} groups, {} states", s.name, s.groups.len(), book.len());
    let _ = writeln!(
        summary,
        "passes {}, evaluations {}",
        result.trace.iterations_completed, result.trace.evaluations
    );
    let _ = writeln!(
        summary,
        "p_r {:.3} dBm (plate {:.3} dBm, improvement {:.3} dB)",
        watts_to_dbm(result.power),
        watts_to_dbm(plate),
        rislink::scalar::ratio_to_db(result.power / plate)
    );
    Ok(Run {
        files: vec![
            ("configuration.json".into(), io::to_json_pretty(&configuration_map(&result.configuration))),
            ("trace.csv".into(), trace_csv(&result.trace)),
            (
                "result.json".into(),
                io::to_json_pretty(&json!({
                    "scenario": s.name,
                    "f_hz": s.scenario.f,
                    "p_r_watts": result.power,
                    "p_r_dbm": watts_to_dbm(result.power),
                    "plate_p_r_watts": plate,
                    "iterations_completed": result.trace.iterations_completed,
                    "evaluations": result.trace.evaluations,
                })),
            ),
        ],
        inputs: vec![scenario_in, codebook_in],
        seed: a.seed,
        settings: json!({"optimizer": settings_json(&settings), "resolution": a.resolution}),
        summary,
        warnings: vec![],
    })
}

fn parse_reference(text: &str) -> Result<Reference> {
    if text == "plate" {
        Ok(Reference::Plate)
    } else if let Some(code) = text.strip_prefix("uniform:") {
        Ok(Reference::Uniform(code.to_string()))
    } else {
        Err(Error::Validation(format!("--reference: expected plate or uniform:CODE, got {text:?}")))
    }
}

fn sweep(a: &SweepArgs) -> Result<Run> {
    if !(a.step > 0.0) {
        return Err(Error::Validation(format!("--step must be positive, got {}", a.step)));
    }
    let band = Band::new(a.band.0, a.band.1).map_err(|e| Error::Validation(format!("--band: {e}")))?;
    let (s, scenario_in) = load_scenario(&a.scenario)?;
    let (book, codebook_in) = load_codebook(&a.codebook, a.resolution.as_deref())?;
    let settings = settings_from(&a.optimizer, None)?;
    let reference = a.reference.as_deref().map(parse_reference).transpose()?;
    let out = optimize_and_sweep(
        &s.scenario,
        &s.grid,
        &s.groups,
        &book,
        &settings,
        a.f_opt,
        band,
        a.step,
        reference.as_ref(),
    )?;
    let bw = bandwidth_3db(&out.curves[0], a.f_opt)?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "{} points, p_r(f_opt) {:.3} dBm",
        out.curves[0].points.len(),
        watts_to_dbm(out.optimized.power)
    );
    let _ = writeln!(summary, "3-dB bandwidth around {:.6e} Hz: {:.6e} Hz", a.f_opt, bw);
    let mut files = vec![
        ("sweep.csv".to_string(), sweep_csv(&out.curves)),
        ("configuration.json".to_string(), io::to_json_pretty(&configuration_map(&out.optimized.configuration))),
        (
            "bandwidth.json".to_string(),
            io::to_json_pretty(&json!({"f_opt_hz": a.f_opt, "bandwidth_3db_hz": bw})),
        ),
    ];
    if a.json {
        files.push(("sweep.json".to_string(), io::to_json_pretty(&out.curves)));
    }
    Ok(Run {
        files,
        inputs: vec![scenario_in, codebook_in],
        seed: None,
        settings: json!({
            "optimizer": settings_json(&settings),
            "resolution": a.resolution,
            "f_opt_hz": a.f_opt,
            "band_hz": [a.band.0, a.band.1],
            "step_hz": a.step,
            "reference": a.reference,
        }),
        summary,
        warnings: vec![],
    })
}

fn codebook_analyze(a: &CodebookArgs) -> Result<Run> {
    let (book, codebook_in) = load_codebook(&a.codebook, None)?;
    if book.len() < 2 {
        return Err(Error::Validation(format!(
            "--codebook: phase standard deviation is undefined for {} state(s)",
            book.len()
        )));
    }
    let frequencies = match (a.band, a.step) {
        (Some((lo, hi)), Some(step)) => {
            if !(step > 0.0) {
                return Err(Error::Validation(format!("--step must be positive, got {step}")));
            }
            Band::new(lo, hi)
                .and_then(|b| b.grid(step))
                .map_err(|e| Error::Validation(format!("--band: {e}")))?
        }
        _ => match book.coverage() {
            // dispersive codebooks: every common sample frequency
            Some((lo, hi)) => {
                let mut f: Vec<f64> = book.states()[0]
                    .samples()
                    .iter()
                    .map(|s| s.f_hz)
                    .filter(|&f| f >= lo && f <= hi)
                    .collect();
                f.dedup();
                f
            }
            None => vec![book.states()[0].samples()[0].f_hz],
        },
    };
    let mut csv = String::from("f_hz,sigma_deg,n_bit\n");
    let mut summary = String::new();
    for &f in &frequencies {
        let q = book.quality_at(f)?;
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e}", f, q.sigma_deg, q.n_bit);
        let _ = writeln!(summary, "{f:.6e} Hz: sigma {:.4} deg, N_bit {:.6}", q.sigma_deg, q.n_bit);
    }
    Ok(Run {
        files: vec![("codebook_quality.csv".into(), csv)],
        inputs: vec![codebook_in],
        seed: None,
        settings: json!({"band_hz": a.band.map(|b| [b.0, b.1]), "step_hz": a.step}),
        summary,
        warnings: vec![],
    })
}

fn compare(a: &CompareArgs) -> Result<Run> {
    let mut labels: Vec<String> = Vec::new();
    let mut warnings = Vec::new();
    for l in &a.labels {
        let l = l.trim().to_string();
        if labels.contains(&l) {
            warnings.push(format!("duplicate label {l:?} ignored"));
        } else {
            labels.push(l);
        }
    }
    let (s, scenario_in) = load_scenario(&a.scenario)?;
    let (book, codebook_in) = load_codebook(&a.codebook, None)?;
    for l in &labels {
        if !book.subsets().contains_key(l) {
            return Err(Error::Validation(format!("--labels: codebook has no subset {l:?}")));
        }
    }
    let settings = settings_from(&a.optimizer, None)?;
    let report = compare_resolutions(&s.scenario, &s.grid, &s.groups, &book, &labels, &settings)?;
    Ok(Run {
        files: vec![("resolutions.json".into(), io::to_json_pretty(&report))],
        inputs: vec![scenario_in, codebook_in],
        seed: None,
        settings: json!({"optimizer": settings_json(&settings), "labels": labels}),
        summary: format!("deltas vs {}\n{}", report.reference, report.table()),
        warnings,
    })
}

fn quantization(a: &QuantizationArgs) -> Result<Run> {
    if a.trials == 0 {
        return Err(Error::Validation("--trials must be at least 1".into()));
    }
    let (rows, cols) = a.grid;
    let grid = SurfaceGrid::new(rows, cols, a.pitch.0, a.pitch.1, Vec3::zero())
        .map_err(|e| Error::Validation(format!("--grid: {e}")))?;
    let books = ideal_resolutions(&a.resolutions).map_err(|e| Error::Validation(format!("--resolutions: {e}")))?;
    let report = quantization_study(&grid, &books, a.trials, a.seed)?;
    let mut summary = String::new();
    for r in &report.rows {
        let _ = writeln!(summary, "{:<6} mean loss {:.3} dB (std {:.3} dB)", r.label, r.mean_loss_db, r.std_loss_db);
    }
    Ok(Run {
        files: vec![
            ("quantization.csv".into(), quantization_csv(&report)),
            ("quantization.json".into(), io::to_json_pretty(&report)),
        ],
        inputs: vec![],
        seed: Some(a.seed),
        settings: json!({
            "grid": [rows, cols],
            "pitch_m": [a.pitch.0, a.pitch.1],
            "resolutions": a.resolutions,
            "trials": a.trials,
            "f_hz": rislink::codebook::NOMINAL_FREQUENCY_HZ,
            "far_field_range_diagonals": experiment::FAR_FIELD_RANGE,
            "far_field_cap_deg": experiment::FAR_FIELD_CAP_DEG,
        }),
        summary,
        warnings: vec![],
    })
}
