//! Received power over the Tx → surface → Rx path.
//!
//! ```text
//! P_r = P_t·G_t·G_r·d_x·d_y·λ² / (64π³)
//!       · | Σ_{n,m} sqrt(F_combine)·Γ_{n,m} / (r_t·r_r) · exp(−j·2π/λ·(r_t + r_r)) |²
//! ```
//!
//! `F_combine` is the product of the Tx pattern toward the element, the cell
//! pattern at incidence and at departure, and the Rx pattern toward the
//! element. The sum is accumulated pairwise in element storage order.

use num_complex::Complex;
use rayon::prelude::*;

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::geometry::{path_geometry_aimed, GroupMap, PathGeometry, SurfaceGrid, Vec3};
use crate::scalar::Real;
use crate::sum::pairwise_sum;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternKind<T> {
    Isotropic,
    /// Power pattern `cos^(2q)(θ)` in the front hemisphere, zero behind.
    CosinePower { q: T },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPattern<T> {
    pub kind: PatternKind<T>,
    /// Linear boresight gain.
    pub gain: T,
}

impl<T: Real> AntennaPattern<T> {
    pub fn isotropic() -> Self {
        AntennaPattern {
            kind: PatternKind::Isotropic,
            gain: T::one(),
        }
    }

    pub fn cosine_power(q: T, gain: T) -> Result<Self> {
        if !(q >= T::zero() && q.is_finite()) {
            return Err(Error::invalid(format!("pattern exponent must be ≥ 0, got {q}")));
        }
        if !(gain > T::zero() && gain.is_finite()) {
            return Err(Error::invalid(format!("antenna gain must be positive, got {gain}")));
        }
        Ok(AntennaPattern {
            kind: PatternKind::CosinePower { q },
            gain,
        })
    }

    /// Normalised power pattern at `theta` radians off boresight.
    pub fn value(&self, theta: T) -> T {
        match self.kind {
            PatternKind::Isotropic => T::one(),
            PatternKind::CosinePower { q } => {
                if theta >= T::FRAC_PI_2() {
                    T::zero()
                } else {
                    theta.cos().powf(T::lit(2.0) * q)
                }
            }
        }
    }
}

pub fn pattern_value<T: Real>(pattern: &AntennaPattern<T>, theta: T) -> T {
    pattern.value(theta)
}

/// Boresight gain `2(q + 1)` associated with exponent `q`.
pub fn gain_for_exponent<T: Real>(q: T) -> T {
    T::lit(2.0) * (q + T::one())
}

pub fn exponent_for_gain<T: Real>(gain: T) -> T {
    gain / T::lit(2.0) - T::one()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Antenna<T> {
    pub position: Vec3<T>,
    pub pattern: AntennaPattern<T>,
    /// Boresight direction; `None` aims at the surface centre.
    pub boresight: Option<Vec3<T>>,
}

impl<T: Real> Antenna<T> {
    pub fn aimed(position: Vec3<T>, pattern: AntennaPattern<T>) -> Self {
        Antenna {
            position,
            pattern,
            boresight: None,
        }
    }
}

/// Link endpoints and carrier, in surface-local coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub tx: Antenna<T>,
    pub rx: Antenna<T>,
    pub cell_pattern: AntennaPattern<T>,
    /// Transmit power in watts.
    pub p_t: T,
    /// Carrier frequency in hertz.
    pub f: T,
}

impl<T: Real> Scenario<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_t > T::zero() && self.p_t.is_finite()) {
            return Err(Error::Validation(format!("transmit power must be positive, got {} W", self.p_t)));
        }
        if !(self.f > T::zero() && self.f.is_finite()) {
            return Err(Error::Validation(format!("frequency must be positive, got {} Hz", self.f)));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> T {
        T::lit(SPEED_OF_LIGHT) / self.f
    }

    pub fn with_frequency(&self, f: T) -> Self {
        Scenario { f, ..self.clone() }
    }

    /// The same link with transmitter and receiver exchanged.
    pub fn reversed(&self) -> Self {
        Scenario {
            tx: self.rx,
            rx: self.tx,
            ..self.clone()
        }
    }

    pub fn path_geometry(&self, grid: &SurfaceGrid<T>) -> Result<Vec<PathGeometry<T>>> {
        path_geometry_aimed(
            grid,
            self.tx.position,
            self.tx.boresight,
            self.rx.position,
            self.rx.boresight,
        )
    }

    /// `P_t·G_t·G_r·d_x·d_y·λ² / (64π³)`.
    pub fn prefactor(&self, grid: &SurfaceGrid<T>) -> T {
        let lambda = self.wavelength();
        self.p_t * self.tx.pattern.gain * self.rx.pattern.gain * grid.cell_area() * lambda * lambda
            / (T::lit(64.0) * T::PI().powi(3))
    }
}

/// Per-element `F_combine`.
pub fn combined_pattern<T: Real>(scenario: &Scenario<T>, geometry: &[PathGeometry<T>]) -> Vec<T> {
    geometry
        .iter()
        .map(|g| {
            scenario.tx.pattern.value(g.theta_tx)
                * scenario.cell_pattern.value(g.theta_inc)
                * scenario.cell_pattern.value(g.theta_dep)
                * scenario.rx.pattern.value(g.theta_rx)
        })
        .collect()
}

/// Frequency-specific model of one link: the prefactor and every element's
/// `sqrt(F)/(r_t·r_r)·exp(−jk(r_t + r_r))`.
#[derive(Debug, Clone)]
pub struct ChannelModel<T> {
    prefactor: T,
    amplitudes: Vec<T>,
    path_phases: Vec<T>,
    terms: Vec<Complex<T>>,
}

impl<T: Real> ChannelModel<T> {
    pub fn new(scenario: &Scenario<T>, grid: &SurfaceGrid<T>) -> Result<Self> {
        scenario.validate()?;
        let geometry = scenario.path_geometry(grid)?;
        let f_combine = combined_pattern(scenario, &geometry);
        let k = T::TAU() / scenario.wavelength();
        let (amplitudes, path_phases): (Vec<T>, Vec<T>) = geometry
            .par_iter()
            .zip(f_combine.par_iter())
            .map(|(g, &f)| (f.sqrt() / (g.r_t * g.r_r), k * (g.r_t + g.r_r)))
            .unzip();
        let terms = amplitudes
            .par_iter()
            .zip(path_phases.par_iter())
            .map(|(&a, &phase)| Complex::from_polar(a, -phase))
            .collect();
        Ok(ChannelModel {
            prefactor: scenario.prefactor(grid),
            amplitudes,
            path_phases,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn prefactor(&self) -> T {
        self.prefactor
    }

    /// `sqrt(F)/(r_t·r_r)` per element.
    pub fn amplitudes(&self) -> &[T] {
        &self.amplitudes
    }

    pub fn terms(&self) -> &[Complex<T>] {
        &self.terms
    }

    /// Contribution of element `index` when it reflects with `gamma`.
    #[inline]
    pub fn summand(&self, index: usize, gamma: Complex<T>) -> Complex<T> {
        gamma * self.terms[index]
    }

    /// Received power for an accumulated element sum.
    #[inline]
    pub fn power_of_sum(&self, sum: Complex<T>) -> T {
        self.prefactor * sum.norm_sqr()
    }

    /// Received power for per-element reflection coefficients.
    pub fn power(&self, gammas: &[Complex<T>]) -> Result<T> {
        if gammas.len() != self.terms.len() {
            return Err(Error::invalid(format!(
                "{} reflection coefficients for {} elements",
                gammas.len(),
                self.terms.len()
            )));
        }
        let summands: Vec<Complex<T>> = gammas
            .iter()
            .enumerate()
            .map(|(i, &g)| self.summand(i, g))
            .collect();
        Ok(self.power_of_sum(pairwise_sum(&summands)))
    }

    /// Phase per element, in `[0, 2π)`, that makes every summand real and
    /// positive.
    pub fn ideal_phase_profile(&self) -> Vec<T> {
        self.path_phases.iter().map(|&p| p % T::TAU()).collect()
    }

    /// `prefactor·(Σ sqrt(F)·|Γ|/(r_t·r_r))²`, the power when every summand
    /// is co-phased; no configuration with these magnitudes exceeds it.
    pub fn coherent_bound(&self, magnitudes: &[T]) -> T {
        let weighted: Vec<T> = self
            .amplitudes
            .iter()
            .zip(magnitudes)
            .map(|(&a, &m)| a * m)
            .collect();
        let s = pairwise_sum(&weighted);
        self.prefactor * s * s
    }
}

/// One code per control group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    codes: Vec<String>,
}

impl Configuration {
    pub fn new(codes: Vec<String>) -> Self {
        Configuration { codes }
    }

    pub fn uniform(code: &str, groups: usize) -> Self {
        Configuration {
            codes: vec![code.to_string(); groups],
        }
    }

    pub fn from_indices<T: Real>(indices: &[usize], codebook: &Codebook<T>) -> Self {
        Configuration {
            codes: indices.iter().map(|&k| codebook.state(k).code().to_string()).collect(),
        }
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Codebook index of every group's code.
    pub fn indices<T: Real>(&self, codebook: &Codebook<T>) -> Result<Vec<usize>> {
        self.codes
            .iter()
            .map(|c| {
                codebook
                    .index_of(c)
                    .ok_or_else(|| Error::NotFound(format!("state code {c}")))
            })
            .collect()
    }

    /// Per-element Γ at frequency `f`.
    pub fn expand<T: Real>(&self, groups: &GroupMap, codebook: &Codebook<T>, f: T) -> Result<Vec<Complex<T>>> {
        if self.codes.len() != groups.len() {
            return Err(Error::invalid(format!(
                "configuration has {} codes for {} groups",
                self.codes.len(),
                groups.len()
            )));
        }
        let indices = self.indices(codebook)?;
        let gammas = codebook.gammas_at(f)?;
        Ok((0..groups.element_count())
            .map(|e| gammas[indices[groups.group_of(e)]])
            .collect())
    }
}

/// Received power (watts) of `config` applied through `groups`.
pub fn received_power<T: Real>(
    scenario: &Scenario<T>,
    grid: &SurfaceGrid<T>,
    groups: &GroupMap,
    codebook: &Codebook<T>,
    config: &Configuration,
) -> Result<T> {
    let gammas = config.expand(groups, codebook, scenario.f)?;
    ChannelModel::new(scenario, grid)?.power(&gammas)
}

pub fn ideal_phase_profile<T: Real>(scenario: &Scenario<T>, grid: &SurfaceGrid<T>) -> Result<Vec<T>> {
    Ok(ChannelModel::new(scenario, grid)?.ideal_phase_profile())
}

/// Power reflected by a same-lattice phase-reversing conductor (Γ = 1∠180°).
pub fn reference_plate_power<T: Real>(scenario: &Scenario<T>, grid: &SurfaceGrid<T>) -> Result<T> {
    let plate = Codebook::plate();
    let groups = crate::geometry::whole_surface_group(grid);
    received_power(scenario, grid, &groups, &plate, &Configuration::uniform("plate", 1))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::geometry::{build_grid, per_element_groups};

    fn iso_scenario(tx: Vec3<f64>, rx: Vec3<f64>, f: f64) -> Scenario<f64> {
        Scenario {
            tx: Antenna::aimed(tx, AntennaPattern::isotropic()),
            rx: Antenna::aimed(rx, AntennaPattern::isotropic()),
            cell_pattern: AntennaPattern::isotropic(),
            p_t: 1.0,
            f,
        }
    }

    #[test]
    fn pattern_values() {
        let p = AntennaPattern::cosine_power(2.0f64, 10.0).unwrap();
        assert_eq!(p.value(0.0), 1.0);
        assert_relative_eq!(p.value(60f64.to_radians()), 0.0625, epsilon = 1e-15);
        assert_eq!(p.value(100f64.to_radians()), 0.0);
        assert_eq!(p.value(std::f64::consts::FRAC_PI_2), 0.0);
        assert_eq!(AntennaPattern::<f64>::isotropic().value(2.0), 1.0);
        assert!(AntennaPattern::cosine_power(-1.0f64, 1.0).is_err());
        assert!(AntennaPattern::cosine_power(1.0f64, 0.0).is_err());
        assert_eq!(exponent_for_gain(10.0f64), 4.0);
        assert_eq!(gain_for_exponent(4.0f64), 10.0);
    }

    #[test]
    fn combined_pattern_cases() {
        let g = build_grid(3, 3, 0.1, 0.1, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(2.0, 0.5, 0.0), Vec3::new(1.0, -1.0, 0.3), 3e9);
        let geo = s.path_geometry(&g).unwrap();
        assert!(combined_pattern(&s, &geo).iter().all(|&f| f == 1.0));

        let cos = AntennaPattern::cosine_power(3.0, 8.0).unwrap();
        let broadside = Scenario {
            tx: Antenna::aimed(Vec3::new(5.0, 0.0, 0.0), cos),
            rx: Antenna::aimed(Vec3::new(3.0, 0.0, 0.0), cos),
            cell_pattern: cos,
            p_t: 1.0,
            f: 3e9,
        };
        let geo = broadside.path_geometry(&g).unwrap();
        assert_eq!(combined_pattern(&broadside, &geo)[g.index_of(0, 0).unwrap()], 1.0);

        // Tx pointing away from the surface sees nothing
        let away = Scenario {
            tx: Antenna {
                position: Vec3::new(5.0, 0.0, 0.0),
                pattern: cos,
                boresight: Some(Vec3::new(1.0, 0.0, 0.0)),
            },
            ..broadside
        };
        let geo = away.path_geometry(&g).unwrap();
        assert!(combined_pattern(&away, &geo).iter().all(|&f| f == 0.0));
    }

    #[test]
    fn single_element_closed_form() {
        let g = build_grid(1, 1, 0.0225, 0.015, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 3.75e9);
        let model = ChannelModel::new(&s, &g).unwrap();
        let p = model.power(&[Complex::new(1.0, 0.0)]).unwrap();
        let lambda = SPEED_OF_LIGHT / 3.75e9;
        let expected = 0.0225 * 0.015 * lambda * lambda / (64.0 * std::f64::consts::PI.powi(3));
        assert_relative_eq!(p, expected, max_relative = 1e-12);
        assert_relative_eq!(p, 1.0869837597767565e-09, max_relative = 1e-12);
        assert_eq!(model.power(&[Complex::new(0.0, 0.0)]).unwrap(), 0.0);
        assert!(model.power(&[]).is_err());
    }

    #[test]
    fn coherent_doubling() {
        let pair = build_grid(1, 2, 0.02, 0.02, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(2.0, 0.0, 0.0), Vec3::new(3.0, 0.0, 0.0), 3.75e9);
        let m = ChannelModel::new(&s, &pair).unwrap();
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        let both = m.power(&[one, one]).unwrap();
        let alone = m.power(&[one, zero]).unwrap();
        assert_eq!(m.power(&[zero, one]).unwrap(), alone);
        assert_relative_eq!(both, 4.0 * alone, max_relative = 1e-15);
    }

    #[test]
    fn ideal_profile_cophases_every_summand() {
        let g = build_grid(4, 6, 0.0225, 0.015, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(3.0, 1.0, 0.4), Vec3::new(2.0, -2.0, -0.1), 3.75e9);
        let model = ChannelModel::new(&s, &g).unwrap();
        let profile = model.ideal_phase_profile();
        for (i, &phi) in profile.iter().enumerate() {
            assert!((0.0..std::f64::consts::TAU).contains(&phi));
            let z = model.summand(i, Complex::from_polar(1.0, phi));
            assert!(z.re > 0.0 && z.im.abs() < 1e-9 * z.re);
        }
        let gammas: Vec<_> = profile.iter().map(|&p| Complex::from_polar(1.0, p)).collect();
        let bound = model.coherent_bound(&vec![1.0; g.len()]);
        assert_relative_eq!(model.power(&gammas).unwrap(), bound, max_relative = 1e-9);
    }

    #[test]
    fn plate_matches_uniform_reversing_state() {
        let g = build_grid(4, 4, 0.0225, 0.015, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(3.0, 1.0, 0.0), Vec3::new(3.0, -1.0, 0.0), 3.9e9);
        let plate = reference_plate_power(&s, &g).unwrap();
        let model = ChannelModel::new(&s, &g).unwrap();
        let direct = model.power(&vec![Complex::from_polar(1.0, std::f64::consts::PI); 16]).unwrap();
        assert_eq!(plate, direct);
    }

    #[test]
    fn specular_plate_beats_every_binary_configuration() {
        // mirror-placed antennas: the plate co-phases the aperture
        let g = build_grid(2, 3, 0.0225, 0.015, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(30.0, 4.0, 0.0), Vec3::new(30.0, -4.0, 0.0), 3.75e9);
        let plate = reference_plate_power(&s, &g).unwrap();
        let model = ChannelModel::new(&s, &g).unwrap();
        for mask in 0u32..(1 << 6) {
            let gammas: Vec<_> = (0..6)
                .map(|i| Complex::from_polar(1.0, if mask & (1 << i) != 0 { 0.0 } else { std::f64::consts::PI }))
                .collect();
            assert!(model.power(&gammas).unwrap() <= plate * (1.0 + 1e-12));
        }
    }

    #[test]
    fn configuration_expansion() {
        let g = build_grid(2, 2, 0.02, 0.02, Vec3::zero()).unwrap();
        let groups = per_element_groups(&g);
        let cb = Codebook::<f64>::measured();
        let cfg = Configuration::new(vec!["000".into(), "011".into(), "000".into(), "001".into()]);
        let gammas = cfg.expand(&groups, &cb, 3.75e9).unwrap();
        assert_eq!(gammas[groups.members(1)[0]], cb.state_gamma("011", 3.75e9).unwrap());
        assert_eq!(gammas[groups.members(3)[0]], cb.state_gamma("001", 3.75e9).unwrap());
        assert!(Configuration::uniform("000", 3).expand(&groups, &cb, 3.75e9).is_err());
        assert!(Configuration::uniform("zzz", 4).expand(&groups, &cb, 3.75e9).is_err());
    }

    #[test]
    fn degenerate_geometry_propagates() {
        let g = build_grid(2, 2, 0.02, 0.02, Vec3::zero()).unwrap();
        let s = iso_scenario(Vec3::new(0.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 3e9);
        assert!(matches!(ChannelModel::new(&s, &g), Err(Error::DegenerateGeometry(_))));
        let bad = Scenario { p_t: 0.0, ..iso_scenario(Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), 3e9) };
        assert!(matches!(ChannelModel::new(&bad, &g), Err(Error::Validation(_))));
    }

    #[test]
    fn single_precision_model_tracks_double() {
        let g64 = build_grid(8, 8, 0.0225, 0.015, Vec3::zero()).unwrap();
        let g32 = build_grid(8, 8, 0.0225f32, 0.015f32, Vec3::zero()).unwrap();
        let s64 = iso_scenario(Vec3::new(3.0, 1.0, 0.0), Vec3::new(2.0, -1.0, 0.0), 3.75e9);
        let s32 = Scenario {
            tx: Antenna::aimed(Vec3::new(3.0f32, 1.0, 0.0), AntennaPattern::isotropic()),
            rx: Antenna::aimed(Vec3::new(2.0f32, -1.0, 0.0), AntennaPattern::isotropic()),
            cell_pattern: AntennaPattern::isotropic(),
            p_t: 1.0f32,
            f: 3.75e9f32,
        };
        let p64 = reference_plate_power(&s64, &g64).unwrap();
        let p32 = reference_plate_power(&s32, &g32).unwrap();
        assert!(((p32 as f64) - p64).abs() / p64 < 1e-2);
    }
}
