//! Discrete reflection states, resolution subsets and phase-quality metrics.
//!
//! A state's response is a list of `(frequency, |Γ| in dB, ∠Γ)` samples.
//! Between samples the response is interpolated linearly in dB magnitude and
//! in unwrapped phase; a single-sample state is frequency-flat.

use std::path::Path;

use indexmap::IndexMap;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::error::{Error, Result};
use crate::io;
use crate::scalar::{db_to_amplitude, Real};

/// Measured eight-state reflection codebook at 3.75 GHz, with its 1/2/3-bit subsets.
pub const MEASURED_CODEBOOK_JSON: &str = include_str!("../data/measured_3p75ghz.json");

/// Frequency recorded on the samples of synthetic frequency-flat states.
pub const NOMINAL_FREQUENCY_HZ: f64 = 3.75e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseSample<T> {
    pub f_hz: T,
    pub mag_db: T,
    /// Phase in radians as supplied.
    pub phase: T,
}

/// One digital code and its (possibly dispersive) reflection coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionState<T> {
    code: String,
    samples: Vec<ResponseSample<T>>,
    unwrapped: Vec<T>,
}

/// Wraps an angle into `[−π, π)`.
fn wrap_pi<T: Real>(angle: T) -> T {
    let two_pi = T::TAU();
    let a = (angle + T::PI()) % two_pi;
    let a = if a < T::zero() { a + two_pi } else { a };
    a - T::PI()
}

impl<T: Real> ReflectionState<T> {
    pub fn new(code: impl Into<String>, samples: Vec<ResponseSample<T>>) -> Result<Self> {
        let code = code.into();
        if samples.is_empty() {
            return Err(Error::invalid(format!("state {code} has no response samples")));
        }
        for s in &samples {
            if !(s.f_hz.is_finite() && s.f_hz > T::zero()) {
                return Err(Error::invalid(format!("state {code}: frequency {} Hz", s.f_hz)));
            }
            if !(s.mag_db.is_finite() && s.mag_db <= T::zero()) {
                return Err(Error::invalid(format!(
                    "state {code}: |Γ| must lie in (0, 1], got {} dB",
                    s.mag_db
                )));
            }
            if !s.phase.is_finite() {
                return Err(Error::invalid(format!("state {code}: non-finite phase")));
            }
        }
        if samples.windows(2).any(|w| w[1].f_hz <= w[0].f_hz) {
            return Err(Error::invalid(format!(
                "state {code}: sample frequencies must be strictly increasing"
            )));
        }
        let mut unwrapped = Vec::with_capacity(samples.len());
        unwrapped.push(samples[0].phase);
        for w in samples.windows(2) {
            let prev = *unwrapped.last().unwrap();
            unwrapped.push(prev + wrap_pi(w[1].phase - w[0].phase));
        }
        Ok(ReflectionState {
            code,
            samples,
            unwrapped,
        })
    }

    /// Frequency-flat state from a magnitude in dB and a phase in degrees.
    pub fn flat(code: impl Into<String>, mag_db: T, phase_deg: T) -> Result<Self> {
        Self::new(
            code,
            vec![ResponseSample {
                f_hz: T::lit(NOMINAL_FREQUENCY_HZ),
                mag_db,
                phase: phase_deg.to_radians(),
            }],
        )
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn samples(&self) -> &[ResponseSample<T>] {
        &self.samples
    }

    pub fn is_flat(&self) -> bool {
        self.samples.len() == 1
    }

    /// Sampled band, or `None` for a frequency-flat state.
    pub fn coverage(&self) -> Option<(T, T)> {
        if self.is_flat() {
            None
        } else {
            Some((self.samples[0].f_hz, self.samples[self.samples.len() - 1].f_hz))
        }
    }

    /// `(|Γ| in dB, ∠Γ in radians)` at `f`; the phase is returned as
    /// supplied at sample points and unwrapped in between.
    pub fn response_at(&self, f: T) -> Result<(T, T)> {
        if self.is_flat() {
            return Ok((self.samples[0].mag_db, self.samples[0].phase));
        }
        let first = self.samples[0].f_hz;
        let last = self.samples[self.samples.len() - 1].f_hz;
        if !(f >= first && f <= last) {
            return Err(Error::OutOfBand {
                code: self.code.clone(),
                f_hz: f.as_f64(),
                f_min_hz: first.as_f64(),
                f_max_hz: last.as_f64(),
            });
        }
        let upper = self.samples.partition_point(|s| s.f_hz < f);
        let hi = &self.samples[upper];
        if hi.f_hz == f {
            return Ok((hi.mag_db, hi.phase));
        }
        let lo = &self.samples[upper - 1];
        let t = (f - lo.f_hz) / (hi.f_hz - lo.f_hz);
        let mag_db = lo.mag_db + t * (hi.mag_db - lo.mag_db);
        let phase = self.unwrapped[upper - 1] + t * (self.unwrapped[upper] - self.unwrapped[upper - 1]);
        Ok((mag_db, phase))
    }

    pub fn gamma_at(&self, f: T) -> Result<Complex<T>> {
        let (mag_db, phase) = self.response_at(f)?;
        Ok(Complex::from_polar(db_to_amplitude(mag_db), phase))
    }

    /// Phase at `f` in degrees, wrapped to `[−180°, 180°)`.
    pub fn phase_deg_at(&self, f: T) -> Result<T> {
        Ok(wrap_pi(self.response_at(f)?.1).to_degrees())
    }
}

/// Ordered reflection states plus named resolution subsets.
///
/// State order is the order in which the optimizer sweeps candidates and
/// decides ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook<T> {
    states: Vec<ReflectionState<T>>,
    subsets: IndexMap<String, Vec<String>>,
}

/// `N`-bit labels of the form `"3-bit"`.
fn bits_of_label(label: &str) -> Option<u32> {
    label.strip_suffix("-bit")?.parse().ok()
}

impl<T: Real> Codebook<T> {
    pub fn new(states: Vec<ReflectionState<T>>, subsets: IndexMap<String, Vec<String>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::invalid("codebook has no states"));
        }
        for (i, s) in states.iter().enumerate() {
            if states[..i].iter().any(|o| o.code == s.code) {
                return Err(Error::invalid(format!("duplicate state code {}", s.code)));
            }
        }
        for (label, codes) in &subsets {
            for (i, code) in codes.iter().enumerate() {
                if !states.iter().any(|s| &s.code == code) {
                    return Err(Error::invalid(format!("subset {label} lists unknown code {code}")));
                }
                if codes[..i].contains(code) {
                    return Err(Error::invalid(format!("subset {label} lists {code} twice")));
                }
            }
            if let Some(bits) = bits_of_label(label) {
                if bits >= usize::BITS || codes.len() != 1usize << bits {
                    return Err(Error::invalid(format!(
                        "subset {label} must hold {} codes, found {}",
                        1u128 << bits.min(127),
                        codes.len()
                    )));
                }
            }
        }
        Ok(Codebook { states, subsets })
    }

    /// The bundled measured eight-state codebook.
    pub fn measured() -> Self {
        Self::from_json(MEASURED_CODEBOOK_JSON).expect("bundled codebook is valid")
    }

    /// `count` unity-magnitude, frequency-flat states at phases `360°·k/count`.
    ///
    /// Codes are zero-padded binary indices. When `count` is a power of two
    /// the nested uniform subsets `"1-bit"` … `"b-bit"` are included.
    pub fn ideal(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::invalid(format!("ideal codebook needs at least 2 states, got {count}")));
        }
        let width = (usize::BITS - (count - 1).leading_zeros()) as usize;
        let code = |k: usize| format!("{k:0width$b}");
        let states = (0..count)
            .map(|k| {
                let phase = T::lit(360.0) * T::from_count(k) / T::from_count(count);
                ReflectionState::flat(code(k), T::zero(), phase)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut subsets = IndexMap::new();
        if count.is_power_of_two() {
            for bits in 1..=count.trailing_zeros() {
                let stride = count >> bits;
                subsets.insert(format!("{bits}-bit"), (0..count).step_by(stride).map(code).collect());
            }
        }
        Self::new(states, subsets)
    }

    /// Single-state codebook modelling a phase-reversing conductor.
    pub fn plate() -> Self {
        let state = ReflectionState::flat("plate", T::zero(), T::lit(180.0)).expect("valid plate state");
        Self::new(vec![state], IndexMap::new()).expect("valid plate codebook")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[ReflectionState<T>] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &ReflectionState<T> {
        &self.states[index]
    }

    pub fn subsets(&self) -> &IndexMap<String, Vec<String>> {
        &self.subsets
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.states.iter().position(|s| s.code == code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.states.iter().map(|s| s.code.as_str())
    }

    fn find(&self, code: &str) -> Result<&ReflectionState<T>> {
        self.states
            .iter()
            .find(|s| s.code == code)
            .ok_or_else(|| Error::NotFound(format!("state code {code}")))
    }

    pub fn state_gamma(&self, code: &str, f: T) -> Result<Complex<T>> {
        self.find(code)?.gamma_at(f)
    }

    /// Γ of every state at `f`, in codebook order.
    pub fn gammas_at(&self, f: T) -> Result<Vec<Complex<T>>> {
        self.states.iter().map(|s| s.gamma_at(f)).collect()
    }

    /// Band over which every dispersive state is sampled; `None` when all
    /// states are frequency-flat.
    pub fn coverage(&self) -> Option<(T, T)> {
        self.states
            .iter()
            .filter_map(ReflectionState::coverage)
            .reduce(|a, b| (a.0.max(b.0), a.1.min(b.1)))
    }

    /// The subset `label`, keeping parent order and every other subset
    /// whose codes all survive.
    pub fn restrict(&self, label: &str) -> Result<Self> {
        let codes = self
            .subsets
            .get(label)
            .ok_or_else(|| Error::NotFound(format!("resolution subset {label}")))?;
        let states: Vec<_> = self
            .states
            .iter()
            .filter(|s| codes.contains(&s.code))
            .cloned()
            .collect();
        let subsets = self
            .subsets
            .iter()
            .filter(|(_, sub)| sub.iter().all(|c| codes.contains(c)))
            .map(|(l, sub)| (l.clone(), sub.clone()))
            .collect();
        Self::new(states, subsets)
    }

    pub fn quality_at(&self, f: T) -> Result<PhaseQuality<T>> {
        let phases = self
            .states
            .iter()
            .map(|s| s.phase_deg_at(f))
            .collect::<Result<Vec<_>>>()?;
        PhaseQuality::from_phases(&phases)
    }

    pub fn quality_sweep(&self, band: Band<T>, step: T) -> Result<Vec<(T, PhaseQuality<T>)>> {
        band.grid(step)?
            .into_iter()
            .map(|f| Ok((f, self.quality_at(f)?)))
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_data(&io::parse_json::<CodebookFile>(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&io::read_text(path)?)
    }

    pub fn from_file_data(file: &CodebookFile) -> Result<Self> {
        let states = file
            .states
            .iter()
            .map(|s| {
                let samples = s
                    .samples
                    .iter()
                    .map(|p| ResponseSample {
                        f_hz: T::lit(p.f_hz),
                        mag_db: T::lit(p.mag_db),
                        phase: T::lit(p.phase_deg).to_radians(),
                    })
                    .collect();
                ReflectionState::new(s.code.clone(), samples)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(states, file.subsets.clone())
    }

    pub fn to_file_data(&self) -> CodebookFile {
        CodebookFile {
            states: self
                .states
                .iter()
                .map(|s| StateEntry {
                    code: s.code.clone(),
                    samples: s
                        .samples
                        .iter()
                        .map(|p| SampleEntry {
                            f_hz: p.f_hz.as_f64(),
                            mag_db: p.mag_db.as_f64(),
                            phase_deg: p.phase.to_degrees().as_f64(),
                        })
                        .collect(),
                })
                .collect(),
            subsets: self.subsets.clone(),
        }
    }
}

/// On-disk codebook document: magnitudes in dB, phases in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookFile {
    pub states: Vec<StateEntry>,
    #[serde(default)]
    pub subsets: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub code: String,
    pub samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub f_hz: f64,
    pub mag_db: f64,
    pub phase_deg: f64,
}

/// Phase standard deviation and the equivalent bit number derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseQuality<T> {
    pub sigma_deg: T,
    pub n_bit: T,
}

impl<T: Real> PhaseQuality<T> {
    pub fn from_phases(phases_deg: &[T]) -> Result<Self> {
        let sigma_deg = phase_std(phases_deg)?;
        Ok(PhaseQuality {
            sigma_deg,
            n_bit: equivalent_bits(sigma_deg)?,
        })
    }
}

/// Phase standard deviation (degrees) of a set of discrete phase states.
///
/// Gaps are taken between circularly sorted phases, wrap-around included,
/// so they always sum to 360°: `σ = sqrt(Σ Δφ³ / (12·360))`. Coincident
/// phases form a zero gap.
pub fn phase_std<T: Real>(phases_deg: &[T]) -> Result<T> {
    if phases_deg.len() < 2 {
        return Err(Error::invalid(format!(
            "phase standard deviation needs at least 2 states, got {}",
            phases_deg.len()
        )));
    }
    let full = T::lit(360.0);
    let mut sorted = Vec::with_capacity(phases_deg.len());
    for &p in phases_deg {
        if !p.is_finite() {
            return Err(Error::invalid("non-finite phase"));
        }
        let w = p % full;
        let w = if w < T::zero() { w + full } else { w };
        sorted.push(if w >= full { T::zero() } else { w });
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite phases"));
    let wrap = full - sorted[sorted.len() - 1] + sorted[0];
    let cubes = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(wrap))
        .fold(T::zero(), |acc, gap| acc + gap * gap * gap);
    Ok((cubes / (T::lit(12.0) * full)).sqrt())
}

/// `N_bit = log2(360 / (sqrt(12)·σ))` for σ in degrees.
pub fn equivalent_bits<T: Real>(sigma_deg: T) -> Result<T> {
    if !(sigma_deg > T::zero() && sigma_deg.is_finite()) {
        return Err(Error::invalid(format!(
            "phase standard deviation must be positive, got {sigma_deg}"
        )));
    }
    Ok((T::lit(360.0) / (T::lit(12.0).sqrt() * sigma_deg)).log2())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn sample(f: f64, db: f64, deg: f64) -> ResponseSample<f64> {
        ResponseSample {
            f_hz: f,
            mag_db: db,
            phase: deg.to_radians(),
        }
    }

    #[test]
    fn measured_entries() {
        let cb = Codebook::<f64>::measured();
        assert_eq!(cb.len(), 8);
        let g = cb.state_gamma("000", 3.75e9).unwrap();
        assert_relative_eq!(g.norm(), 0.920_449_5, epsilon = 1e-6);
        assert_relative_eq!(g.arg().to_degrees(), 122.2, epsilon = 1e-9);
        let g = cb.state_gamma("011", 3.75e9).unwrap();
        assert_relative_eq!(g.norm(), 10f64.powf(-0.77 / 20.0), epsilon = 1e-15);
        assert_relative_eq!(g.arg().abs().to_degrees(), 180.0, epsilon = 1e-9);
        // frequency-flat: any frequency returns the sample
        assert_eq!(cb.state_gamma("000", 3.9e9).unwrap(), cb.state_gamma("000", 3.75e9).unwrap());
        assert!(matches!(cb.state_gamma("999", 3.75e9), Err(Error::NotFound(_))));
    }

    #[test]
    fn measured_subsets() {
        let cb = Codebook::<f64>::measured();
        let one = cb.restrict("1-bit").unwrap();
        assert_eq!(one.codes().collect::<Vec<_>>(), vec!["011", "001"]);
        let two = cb.restrict("2-bit").unwrap();
        assert_eq!(two.codes().collect::<Vec<_>>(), vec!["011", "101", "001", "000"]);
        assert_eq!(two.subsets().keys().collect::<Vec<_>>(), vec!["1-bit", "2-bit"]);
        assert_eq!(cb.restrict("3-bit").unwrap().len(), 8);
        assert!(matches!(cb.restrict("4-bit"), Err(Error::NotFound(_))));
    }

    #[test]
    fn interpolates_in_db_and_unwrapped_phase() {
        // crosses ±180°: wrapped interpolation would pass through 0°
        let s = ReflectionState::new("a", vec![sample(3.0e9, -1.0, 170.0), sample(4.0e9, -3.0, -170.0)]).unwrap();
        let (db, ph) = s.response_at(3.5e9).unwrap();
        assert_relative_eq!(db, -2.0, epsilon = 1e-12);
        assert_relative_eq!(ph.to_degrees(), 180.0, epsilon = 1e-9);
        assert_relative_eq!(s.phase_deg_at(3.5e9).unwrap(), -180.0, epsilon = 1e-9);
        assert_eq!(s.gamma_at(4.0e9).unwrap(), Complex::from_polar(10f64.powf(-3.0 / 20.0), (-170f64).to_radians()));
        assert!(matches!(s.gamma_at(2.9e9), Err(Error::OutOfBand { .. })));
        assert!(matches!(s.gamma_at(4.1e9), Err(Error::OutOfBand { .. })));
    }

    #[test]
    fn state_validation() {
        assert!(ReflectionState::<f64>::new("a", vec![]).is_err());
        assert!(ReflectionState::new("a", vec![sample(3e9, 0.5, 0.0)]).is_err());
        assert!(ReflectionState::new("a", vec![sample(3e9, -1.0, 0.0), sample(3e9, -1.0, 0.0)]).is_err());
        let a = ReflectionState::flat("a", 0.0f64, 0.0).unwrap();
        assert!(Codebook::new(vec![a.clone(), a.clone()], IndexMap::new()).is_err());
        let mut subsets = IndexMap::new();
        subsets.insert("1-bit".to_string(), vec!["a".to_string()]);
        assert!(Codebook::new(vec![a.clone()], subsets).is_err());
        let mut subsets = IndexMap::new();
        subsets.insert("x".to_string(), vec!["b".to_string()]);
        assert!(Codebook::new(vec![a], subsets).is_err());
        assert!(Codebook::<f64>::new(vec![], IndexMap::new()).is_err());
    }

    #[test]
    fn phase_std_closed_forms() {
        assert_relative_eq!(phase_std(&[0.0f64, 180.0]).unwrap(), 51.96152422706632, epsilon = 1e-12);
        let eight: Vec<f64> = (0..8).map(|k| 45.0 * k as f64).collect();
        assert_relative_eq!(phase_std(&eight).unwrap(), 12.99038105676658, epsilon = 1e-12);
        assert!(phase_std(&[10.0f64]).is_err());
        // coincident states: {0, 0, 180} has the same gaps as {0, 180}
        assert_relative_eq!(
            phase_std(&[0.0f64, 0.0, 180.0]).unwrap(),
            phase_std(&[0.0f64, 180.0]).unwrap(),
            epsilon = 1e-12
        );
        assert_relative_eq!(phase_std(&[-180.0f64, 180.0, 0.0]).unwrap(), 51.96152422706632, epsilon = 1e-12);
    }

    #[test]
    fn equivalent_bit_values() {
        assert_relative_eq!(equivalent_bits(51.96152422706632f64).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(equivalent_bits(12.99038105676658f64).unwrap(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(equivalent_bits(16.25f64).unwrap(), 2.677004032940642, epsilon = 1e-12);
        assert!(equivalent_bits(0.0f64).is_err());
        assert!(equivalent_bits(-1.0f64).is_err());
    }

    #[test]
    fn ideal_codebooks() {
        let two = Codebook::<f64>::ideal(2).unwrap();
        let phases: Vec<f64> = two.states().iter().map(|s| s.phase_deg_at(1e9).unwrap()).collect();
        assert_relative_eq!(phases[0], 0.0);
        assert_relative_eq!(phases[1].abs(), 180.0, epsilon = 1e-9);
        let four = Codebook::<f64>::ideal(4).unwrap();
        assert_relative_eq!(four.quality_at(1e9).unwrap().sigma_deg, 25.98076211353316, epsilon = 1e-9);
        let eight = Codebook::<f64>::ideal(8).unwrap();
        assert_relative_eq!(eight.quality_at(1e9).unwrap().n_bit, 3.0, epsilon = 1e-9);
        assert_eq!(eight.subsets().keys().collect::<Vec<_>>(), vec!["1-bit", "2-bit", "3-bit"]);
        assert_eq!(eight.subsets()["2-bit"], vec!["000", "010", "100", "110"]);
        assert!(Codebook::<f64>::ideal(1).is_err());
        assert!(Codebook::<f64>::ideal(3).unwrap().subsets().is_empty());
    }

    #[test]
    fn flat_codebook_quality_is_constant() {
        let cb = Codebook::<f64>::ideal(8).unwrap();
        let sweep = cb.quality_sweep(Band::new(3e9, 4.5e9).unwrap(), 0.1e9).unwrap();
        assert_eq!(sweep.len(), 16);
        assert!(sweep.iter().all(|(_, q)| (q.n_bit - 3.0).abs() < 1e-9));
    }

    #[test]
    fn dispersive_quality_sweep_rejects_out_of_band() {
        let a = ReflectionState::new("a", vec![sample(3e9, -1.0, 0.0), sample(4e9, -1.0, 20.0)]).unwrap();
        let b = ReflectionState::new("b", vec![sample(3e9, -1.0, 180.0), sample(4e9, -1.0, 20.0)]).unwrap();
        let cb = Codebook::new(vec![a, b], IndexMap::new()).unwrap();
        assert_eq!(cb.coverage(), Some((3e9, 4e9)));
        let sweep = cb.quality_sweep(Band::new(3e9, 4e9).unwrap(), 0.5e9).unwrap();
        assert_relative_eq!(sweep[0].1.n_bit, 1.0, epsilon = 1e-9);
        // both states meet at 20° at 4 GHz: one zero gap and one 360° gap
        assert_relative_eq!(sweep[2].1.sigma_deg, (360f64.powi(3) / 4320.0).sqrt(), epsilon = 1e-9);
        assert!(matches!(
            cb.quality_sweep(Band::new(3e9, 4.5e9).unwrap(), 0.5e9),
            Err(Error::OutOfBand { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let cb = Codebook::<f64>::measured();
        let text = serde_json::to_string(&cb.to_file_data()).unwrap();
        let back = Codebook::<f64>::from_json(&text).unwrap();
        assert_eq!(back.codes().collect::<Vec<_>>(), cb.codes().collect::<Vec<_>>());
        assert_eq!(back.subsets(), cb.subsets());
    }

    #[test]
    fn single_precision_metrics() {
        let cb = Codebook::<f32>::ideal(8).unwrap();
        assert!((cb.quality_at(3.75e9).unwrap().n_bit - 3.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn uniform_states_give_log2_bits(m in 2usize..=64) {
            let phases: Vec<f64> = (0..m).map(|k| 360.0 * k as f64 / m as f64).collect();
            let bits = equivalent_bits(phase_std(&phases).unwrap()).unwrap();
            prop_assert!((bits - (m as f64).log2()).abs() < 1e-9);
        }

        #[test]
        fn phase_std_is_rotation_invariant(
            phases in prop::collection::vec(-180.0f64..180.0, 2..12),
            offset in -720.0f64..720.0,
        ) {
            let shifted: Vec<f64> = phases.iter().map(|p| p + offset).collect();
            let a = phase_std(&phases).unwrap();
            let b = phase_std(&shifted).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }

        #[test]
        fn splitting_largest_gap_never_raises_sigma(phases in prop::collection::vec(-180.0f64..180.0, 2..12)) {
            let mut sorted: Vec<f64> = phases.iter().map(|p| p.rem_euclid(360.0)).collect();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut best = (360.0 - sorted[sorted.len() - 1] + sorted[0], sorted[sorted.len() - 1]);
            for w in sorted.windows(2) {
                if w[1] - w[0] > best.0 { best = (w[1] - w[0], w[0]); }
            }
            let mut more = phases.clone();
            more.push(best.1 + best.0 / 2.0);
            prop_assert!(phase_std(&more).unwrap() <= phase_std(&phases).unwrap() + 1e-12);
        }

        #[test]
        fn restrict_copies_states_verbatim(mask in 1u8..=255) {
            let parent = Codebook::<f64>::measured();
            let codes: Vec<String> = parent.codes().enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, c)| c.to_string())
                .collect();
            let mut subsets = parent.subsets().clone();
            subsets.insert("pick".to_string(), codes.clone());
            let parent = Codebook::new(parent.states().to_vec(), subsets).unwrap();
            let child = parent.restrict("pick").unwrap();
            prop_assert_eq!(child.len(), codes.len());
            for s in child.states() {
                let i = parent.index_of(s.code()).unwrap();
                prop_assert_eq!(s, parent.state(i));
            }
        }

        #[test]
        fn samples_are_reproduced_exactly(
            pts in prop::collection::vec((-6.0f64..0.0, -180.0f64..180.0), 2..8),
        ) {
            let samples: Vec<_> = pts.iter().enumerate()
                .map(|(i, &(db, deg))| sample(3e9 + 1e8 * i as f64, db, deg))
                .collect();
            let s = ReflectionState::new("x", samples.clone()).unwrap();
            for p in &samples {
                prop_assert_eq!(s.gamma_at(p.f_hz).unwrap(), Complex::from_polar(db_to_amplitude(p.mag_db), p.phase));
            }
        }
    }
}
