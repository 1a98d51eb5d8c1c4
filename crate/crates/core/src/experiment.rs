//! Frequency sweeps, bandwidth extraction, resolution comparisons,
//! quantization-loss studies and result emission.
//!
//! This layer is `f64` only; it sits on top of the generic core.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::channel::{Antenna, AntennaPattern, ChannelModel, Configuration, Scenario};
use crate::codebook::{Codebook, NOMINAL_FREQUENCY_HZ};
use crate::error::{Error, Result};
use crate::geometry::{per_element_groups, GroupMap, SurfaceGrid, Vec3};
use crate::io;
use crate::optimizer::{greedy_optimize_model, OptimizationTrace, OptimizerSettings, Optimized};
use crate::scalar::{ratio_to_db, watts_to_dbm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveLabel {
    Optimized,
    Plate,
    Baseline,
}

impl CurveLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveLabel::Optimized => "optimized",
            CurveLabel::Plate => "plate",
            CurveLabel::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub f_hz: f64,
    pub p_r_watts: f64,
}

/// One received-power curve over frequency, sorted by frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: CurveLabel,
    pub f_opt_hz: Option<f64>,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.f_hz)
    }

    pub fn power_at(&self, f: f64) -> Option<f64> {
        self.points.iter().find(|p| p.f_hz == f).map(|p| p.p_r_watts)
    }
}

/// Sweep frequencies for `band` at `step`, with `f_opt` present verbatim.
///
/// A grid point within a millionth of a step of `f_opt` is replaced by it
/// rather than duplicated.
pub fn sweep_frequencies(band: Band<f64>, step: f64, f_opt: Option<f64>) -> Result<Vec<f64>> {
    let mut freqs = band.grid(step)?;
    if let Some(f) = f_opt {
        if !band.contains(f) {
            return Err(Error::invalid(format!(
                "f_opt {f} Hz outside the sweep band {}–{} Hz",
                band.lo, band.hi
            )));
        }
        let tol = step.abs() * 1e-6;
        match freqs.iter().position(|&x| (x - f).abs() <= tol) {
            Some(i) => freqs[i] = f,
            None => {
                let at = freqs.partition_point(|&x| x < f);
                freqs.insert(at, f);
            }
        }
    }
    Ok(freqs)
}

/// Received power of a frozen configuration at each frequency, re-expanding
/// the reflection coefficients from the codebook at every point.
pub fn sweep_configuration(
    scenario: &Scenario<f64>,
    grid: &SurfaceGrid<f64>,
    groups: &GroupMap,
    codebook: &Codebook<f64>,
    configuration: &Configuration,
    frequencies: &[f64],
) -> Result<Vec<SweepPoint>> {
    configuration.indices(codebook)?;
    frequencies
        .par_iter()
        .map(|&f| {
            let model = ChannelModel::new(&scenario.with_frequency(f), grid)?;
            let gammas = configuration.expand(groups, codebook, f)?;
            Ok(SweepPoint {
                f_hz: f,
                p_r_watts: model.power(&gammas)?,
            })
        })
        .collect()
}

/// What a reference curve reflects with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reference {
    Plate,
    Uniform(String),
}

/// Optimized curve, optimizer output and optional reference curve.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub optimized: Optimized<f64>,
    pub curves: Vec<SweepResult>,
}

/// Greedy-optimizes at `f_opt`, freezes the configuration and sweeps it over
/// the band. The point at `f_opt` equals the optimizer's final power exactly.
#[allow(clippy::too_many_arguments)]
pub fn optimize_and_sweep(
    scenario: &Scenario<f64>,
    grid: &SurfaceGrid<f64>,
    groups: &GroupMap,
    codebook: &Codebook<f64>,
    settings: &OptimizerSettings,
    f_opt: f64,
    band: Band<f64>,
    step: f64,
    reference: Option<&Reference>,
) -> Result<SweepOutcome> {
    let frequencies = sweep_frequencies(band, step, Some(f_opt))?;
    let model = ChannelModel::new(&scenario.with_frequency(f_opt), grid)?;
    let optimized = greedy_optimize_model(&model, groups, codebook, f_opt, settings)?;
    let points = sweep_configuration(scenario, grid, groups, codebook, &optimized.configuration, &frequencies)?;
    let mut curves = vec![SweepResult {
        label: CurveLabel::Optimized,
        f_opt_hz: Some(f_opt),
        points,
    }];
    if let Some(reference) = reference {
        curves.push(reference_sweep(scenario, grid, groups, codebook, reference, &frequencies)?);
    }
    Ok(SweepOutcome { optimized, curves })
}

/// The plate or a uniform baseline, through the same path as the optimized
/// curve.
pub fn reference_sweep(
    scenario: &Scenario<f64>,
    grid: &SurfaceGrid<f64>,
    groups: &GroupMap,
    codebook: &Codebook<f64>,
    reference: &Reference,
    frequencies: &[f64],
) -> Result<SweepResult> {
    let (label, book, configuration) = match reference {
        Reference::Plate => (CurveLabel::Plate, Codebook::plate(), Configuration::uniform("plate", groups.len())),
        Reference::Uniform(code) => {
            if codebook.index_of(code).is_none() {
                return Err(Error::NotFound(format!("state code {code}")));
            }
            (CurveLabel::Baseline, codebook.clone(), Configuration::uniform(code, groups.len()))
        }
    };
    Ok(SweepResult {
        label,
        f_opt_hz: None,
        points: sweep_configuration(scenario, grid, groups, &book, &configuration, frequencies)?,
    })
}

/// Width of the contiguous interval around `f_opt` where power stays at or
/// above half its value at `f_opt`, with edges found by linear interpolation.
pub fn bandwidth_3db(result: &SweepResult, f_opt: f64) -> Result<f64> {
    let pts = &result.points;
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (a.f_hz, b.f_hz),
        _ => return Err(Error::invalid("empty sweep")),
    };
    if !(f_opt >= first && f_opt <= last) {
        return Err(Error::invalid(format!(
            "f_opt {f_opt} Hz outside the sweep {first}–{last} Hz"
        )));
    }
    // index of the last point at or below f_opt
    let i0 = pts.partition_point(|p| p.f_hz <= f_opt) - 1;
    let p_opt = if pts[i0].f_hz == f_opt {
        pts[i0].p_r_watts
    } else {
        interpolate(pts[i0], pts[i0 + 1], f_opt)
    };
    if !(p_opt > 0.0) {
        return Err(Error::invalid("power at f_opt must be positive"));
    }
    let half = p_opt / 2.0;
    let crossing = |inside: SweepPoint, outside: SweepPoint| {
        let t = (inside.p_r_watts - half) / (inside.p_r_watts - outside.p_r_watts);
        inside.f_hz + t * (outside.f_hz - inside.f_hz)
    };
    let at_opt = SweepPoint {
        f_hz: f_opt,
        p_r_watts: p_opt,
    };

    let mut lo = first;
    let mut inside = at_opt;
    for j in (0..=i0).rev() {
        if pts[j].f_hz == f_opt {
            continue;
        }
        if pts[j].p_r_watts < half {
            lo = crossing(inside, pts[j]);
            break;
        }
        inside = pts[j];
    }
    let mut hi = last;
    let mut inside = at_opt;
    for p in &pts[i0 + 1..] {
        if p.p_r_watts < half {
            hi = crossing(inside, *p);
            break;
        }
        inside = *p;
    }
    Ok(hi - lo)
}

fn interpolate(a: SweepPoint, b: SweepPoint, f: f64) -> f64 {
    let t = (f - a.f_hz) / (b.f_hz - a.f_hz);
    a.p_r_watts + t * (b.p_r_watts - a.p_r_watts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub label: String,
    pub states: usize,
    pub p_r_watts: f64,
    /// Reference power over this row's power, in dB; positive means a loss.
    pub delta_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub reference: String,
    pub rows: Vec<ResolutionRow>,
}

impl ResolutionReport {
    pub fn row(&self, label: &str) -> Option<&ResolutionRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<12} {:>6} {:>14} {:>12}\n", "resolution", "states", "p_r (dBm)", "delta (dB)");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<12} {:>6} {:>14.3} {:>12.3}",
                r.label,
                r.states,
                watts_to_dbm(r.p_r_watts),
                r.delta_db
            );
        }
        out
    }
}

/// Greedy-optimizes independently over each labelled subset of `codebook`.
///
/// Deltas are taken against the label with the most states (the last such
/// label on ties), computed from linear watts.
pub fn compare_resolutions(
    scenario: &Scenario<f64>,
    grid: &SurfaceGrid<f64>,
    groups: &GroupMap,
    codebook: &Codebook<f64>,
    labels: &[String],
    settings: &OptimizerSettings,
) -> Result<ResolutionReport> {
    if labels.is_empty() {
        return Err(Error::invalid("no resolution labels given"));
    }
    let books = labels
        .iter()
        .map(|l| codebook.restrict(l))
        .collect::<Result<Vec<_>>>()?;
    let model = ChannelModel::new(scenario, grid)?;
    let powers = books
        .par_iter()
        .map(|book| greedy_optimize_model(&model, groups, book, scenario.f, settings).map(|o| o.power))
        .collect::<Result<Vec<_>>>()?;
    let reference = (0..books.len())
        .rev()
        .max_by_key(|&i| books[i].len())
        .expect("at least one label");
    let p_ref = powers[reference];
    let rows = labels
        .iter()
        .zip(&books)
        .zip(&powers)
        .map(|((label, book), &p)| ResolutionRow {
            label: label.clone(),
            states: book.len(),
            p_r_watts: p,
            delta_db: ratio_to_db(p_ref / p),
        })
        .collect();
    Ok(ResolutionReport {
        reference: labels[reference].clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationRow {
    pub label: String,
    pub states: usize,
    pub mean_loss_db: f64,
    pub std_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<QuantizationRow>,
}

impl QuantizationReport {
    pub fn row(&self, label: &str) -> Option<&QuantizationRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Half-angle of the cone far-field directions are drawn from.
pub const FAR_FIELD_CAP_DEG: f64 = 60.0;
/// Antenna range in aperture diagonals.
pub const FAR_FIELD_RANGE: f64 = 100.0;

/// A uniform direction in the front (`+x`) cap `θ < 60°`: direction cosines
/// `(v, w)` uniform over the disc of radius `sin 60°`.
pub fn random_front_direction<R: Rng>(rng: &mut R) -> Vec3<f64> {
    let radius = FAR_FIELD_CAP_DEG.to_radians().sin();
    loop {
        let v: f64 = rng.gen_range(-radius..radius);
        let w: f64 = rng.gen_range(-radius..radius);
        let s = v * v + w * w;
        if s < radius * radius {
            return Vec3::new((1.0 - s).sqrt(), v, w);
        }
    }
}

/// Isotropic antennas and cells at `FAR_FIELD_RANGE` aperture diagonals in
/// random front directions.
pub fn random_far_field_scenario<R: Rng>(grid: &SurfaceGrid<f64>, f: f64, rng: &mut R) -> Scenario<f64> {
    let range = FAR_FIELD_RANGE * grid.diagonal();
    let tx = random_front_direction(rng) * range;
    let rx = random_front_direction(rng) * range;
    Scenario {
        tx: Antenna::aimed(tx, AntennaPattern::isotropic()),
        rx: Antenna::aimed(rx, AntennaPattern::isotropic()),
        cell_pattern: AntennaPattern::isotropic(),
        p_t: 1.0,
        f,
    }
}

/// Mean and spread of the loss from projecting the ideal per-element phase
/// profile onto each codebook, against unit-magnitude continuous phase.
///
/// Trial seeds are drawn in order from a master generator, so results do not
/// depend on how trials are scheduled.
pub fn quantization_study(
    grid: &SurfaceGrid<f64>,
    codebooks: &[(String, Codebook<f64>)],
    trials: usize,
    seed: u64,
) -> Result<QuantizationReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if codebooks.is_empty() {
        return Err(Error::invalid("no codebooks given"));
    }
    let f = NOMINAL_FREQUENCY_HZ;
    let groups = per_element_groups(grid);
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..trials).map(|_| master.gen()).collect();
    let losses = seeds
        .par_iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let scenario = random_far_field_scenario(grid, f, &mut rng);
            let model = ChannelModel::new(&scenario, grid)?;
            let ideal = model.ideal_phase_profile();
            let continuous: Vec<Complex<f64>> = ideal.iter().map(|&p| Complex::from_polar(1.0, p)).collect();
            let p_cont = model.power(&continuous)?;
            codebooks
                .iter()
                .map(|(_, book)| {
                    let cfg = crate::optimizer::quantize_profile(&ideal, &groups, book, f)?;
                    let p = model.power(&cfg.expand(&groups, book, f)?)?;
                    Ok(ratio_to_db(p_cont / p))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let rows = codebooks
        .iter()
        .enumerate()
        .map(|(c, (label, book))| {
            let mean = losses.iter().map(|l| l[c]).sum::<f64>() / n;
            let var = if trials > 1 {
                losses.iter().map(|l| (l[c] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            QuantizationRow {
                label: label.clone(),
                states: book.len(),
                mean_loss_db: mean,
                std_loss_db: var.sqrt(),
            }
        })
        .collect();
    Ok(QuantizationReport { trials, seed, rows })
}

/// Ideal uniform codebooks of `2^b` states, labelled `"b-bit"`.
pub fn ideal_resolutions(bits: &[u32]) -> Result<Vec<(String, Codebook<f64>)>> {
    bits.iter()
        .map(|&b| {
            if b == 0 || b > 16 {
                return Err(Error::invalid(format!("resolution must be 1–16 bits, got {b}")));
            }
            Ok((format!("{b}-bit"), Codebook::ideal(1usize << b)?))
        })
        .collect()
}

fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn sweep_csv(curves: &[SweepResult]) -> String {
    let mut out = String::from("f_hz,p_r_watts,p_r_dbm,label\n");
    for c in curves {
        for p in &c.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                sci(p.f_hz),
                sci(p.p_r_watts),
                sci(watts_to_dbm(p.p_r_watts)),
                c.label.as_str()
            );
        }
    }
    out
}

pub fn trace_csv(trace: &OptimizationTrace<f64>) -> String {
    let mut out = String::from("pass,group,code,p_r_after_watts\n");
    for s in &trace.steps {
        let _ = writeln!(out, "{},{},{},{}", s.pass, s.group, s.code, sci(s.p_r_after));
    }
    out
}

pub fn quantization_csv(report: &QuantizationReport) -> String {
    let mut out = String::from("resolution,states,mean_loss_db,std_loss_db\n");
    for r in &report.rows {
        let _ = writeln!(out, "{},{},{},{}", r.label, r.states, sci(r.mean_loss_db), sci(r.std_loss_db));
    }
    out
}

/// `{"0": "011", "1": "101", …}` in group order.
pub fn configuration_map(configuration: &Configuration) -> IndexMap<String, String> {
    configuration
        .codes()
        .iter()
        .enumerate()
        .map(|(g, c)| (g.to_string(), c.clone()))
        .collect()
}

pub fn configuration_from_map(map: &IndexMap<String, String>) -> Result<Configuration> {
    let mut codes = vec![None; map.len()];
    for (key, code) in map {
        let g: usize = key
            .parse()
            .map_err(|_| Error::Validation(format!("group id {key:?} is not an index")))?;
        match codes.get_mut(g) {
            Some(slot @ None) => *slot = Some(code.clone()),
            _ => return Err(Error::Validation(format!("group ids must be 0..{} without gaps", map.len()))),
        }
    }
    Ok(Configuration::new(codes.into_iter().map(Option::unwrap).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub fn emit_sweep(curves: &[SweepResult], path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Csv => io::write_text(path, &sweep_csv(curves)),
        Format::Json => io::write_text(path, &io::to_json_pretty(&curves)),
    }
}

pub fn load_sweep_json(path: &Path) -> Result<Vec<SweepResult>> {
    io::parse_json(&io::read_text(path)?).map_err(|e| match e {
        Error::Parse { path: field, message } => Error::Parse {
            path: format!("{}: {field}", path.display()),
            message,
        },
        other => other,
    })
}
