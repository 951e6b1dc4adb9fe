//! Reflected-field evaluation.
//!
//! The physical model is the scalar scattering integral over the panel,
//! discretized on the element grid:
//!
//! ```text
//! E_r(p_r) = τ/(jλ) · Σ_q E_i e^{jφ_q} · e^{jκ d_{r,q}} / d_r · e^{jω_q} · d_y d_z
//! ```
//!
//! where `φ_q = κ d_{i,q}` is the incident phase at element `q`. Phases
//! always use the exact per-element distances. Amplitudes use the
//! panel-center distances `d_i`, `d_r` by default ([`AmplitudeModel::CenterDistance`]);
//! [`AmplitudeModel::PerElement`] switches to `d_{i,q}`, `d_{r,q}` to measure
//! the effect of that approximation.
//!
//! Powers follow from the plane-wave relations
//! `|E_i|² = 2η P_tx D_tx / (4π d_i²)` and `P_rx = |E_r|²/(2η) · D_rx λ²/(4π)`.
//!
//! The second half of the module is the abstract per-element baseband model
//! `y = Σ_q h_{r,q} Γ_q h_{i,q} s + n` together with the channel coefficients
//! that make it reproduce the field model exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{distance, AnglePair, Axis, CarrierConfig, IrsPanel, Point3};
use crate::units::{db_to_linear, dbm_to_watts, power_to_db};

/// Free-space characteristic impedance, Ω.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730;

/// Transmit/receive antenna and noise parameters (all linear units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub tx_power_w: f64,
    pub tx_directivity: f64,
    pub rx_directivity: f64,
    pub noise_density_w_per_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure: f64,
    pub impedance_ohm: f64,
}

impl Default for RadioConfig {
    /// 10 dBm transmit power, 12 dB / 0 dB directivities, −174 dBm/Hz noise
    /// density over 20 MHz with a 6 dB noise figure.
    fn default() -> Self {
        RadioConfig {
            tx_power_w: dbm_to_watts(10.0),
            tx_directivity: db_to_linear(12.0),
            rx_directivity: db_to_linear(0.0),
            noise_density_w_per_hz: dbm_to_watts(-174.0),
            bandwidth_hz: 20e6,
            noise_figure: db_to_linear(6.0),
            impedance_ohm: FREE_SPACE_IMPEDANCE,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power_w.is_finite() && self.tx_power_w >= 0.0) {
            return Err(Error::invalid(
                "tx_power_w",
                format!("must be nonnegative, got {}", self.tx_power_w),
            ));
        }
        for (name, v) in [
            ("tx_directivity", self.tx_directivity),
            ("rx_directivity", self.rx_directivity),
            ("noise_density_w_per_hz", self.noise_density_w_per_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("noise_figure", self.noise_figure),
            ("impedance_ohm", self.impedance_ohm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Noise power σ² = N_0 · W · N_f, watts.
    pub fn noise_power_w(&self) -> f64 {
        self.noise_density_w_per_hz * self.bandwidth_hz * self.noise_figure
    }

    pub fn with_tx_power_w(self, tx_power_w: f64) -> Self {
        RadioConfig { tx_power_w, ..self }
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let r = angle.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Per-element IRS phase shifts ω_q, stored wrapped to `(−π, π]`.
///
/// Ordering matches [`IrsPanel::element_positions`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    phases: Vec<f64>,
}

impl PhaseProfile {
    pub fn new(phases: impl IntoIterator<Item = f64>) -> Self {
        PhaseProfile {
            phases: phases.into_iter().map(wrap_phase).collect(),
        }
    }

    pub fn zeros(len: usize) -> Self {
        PhaseProfile {
            phases: vec![0.0; len],
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Adds a constant phase to every element.
    pub fn with_offset(&self, offset: f64) -> Self {
        PhaseProfile::new(self.phases.iter().map(|p| p + offset))
    }

    /// Rounds every phase to the nearest of `2^bits` uniformly spaced levels.
    pub fn quantized(&self, bits: u32) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return Err(Error::invalid(
                "bits",
                format!("must be in 1..=16, got {bits}"),
            ));
        }
        let step = 2.0 * PI / f64::from(1u32 << bits);
        Ok(PhaseProfile::new(
            self.phases.iter().map(|p| (p / step).round() * step),
        ))
    }

    pub(crate) fn check_len(&self, panel: &IrsPanel) -> Result<()> {
        if self.len() != panel.element_count() {
            return Err(Error::LengthMismatch {
                expected: panel.element_count(),
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// How the 1/distance amplitude terms of the field sum are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeModel {
    /// Use the panel-center distances `d_i` and `d_r` for every element.
    #[default]
    CenterDistance,
    /// Use the exact element distances `d_{i,q}` and `d_{r,q}`.
    PerElement,
}

/// Accumulation order for the element sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// Plain left-to-right accumulation.
    #[default]
    Plain,
    /// Neumaier-compensated accumulation, for very large panels.
    Compensated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FieldOptions {
    pub amplitude: AmplitudeModel,
    pub summation: Summation,
}

fn sum_complex(terms: impl Iterator<Item = Complex64>, mode: Summation) -> Complex64 {
    match mode {
        Summation::Plain => terms.fold(Complex64::new(0.0, 0.0), |acc, t| acc + t),
        Summation::Compensated => {
            let (mut re, mut im) = (NeumaierSum::default(), NeumaierSum::default());
            for t in terms {
                re.add(t.re);
                im.add(t.im);
            }
            Complex64::new(re.total(), im.total())
        }
    }
}

#[derive(Default)]
struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Incident wave on the panel: center-distance amplitude and exact
/// per-element phases.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentField {
    /// E_i, V/m, evaluated at the panel-center distance d_i.
    pub amplitude: f64,
    /// φ_q = κ d_{i,q} (unwrapped).
    pub phases: Vec<f64>,
    /// d_{i,q}, meters.
    pub element_distances: Vec<f64>,
    /// d_i, meters.
    pub center_distance: f64,
}

fn incident_amplitude(radio: &RadioConfig, d: f64) -> f64 {
    (2.0 * radio.impedance_ohm * radio.tx_power_w * radio.tx_directivity / (4.0 * PI * d * d))
        .sqrt()
}

fn check_off_panel(point: Point3, panel: &IrsPanel, what: &str) -> Result<()> {
    if !point.is_finite() {
        return Err(Error::DegenerateGeometry(format!(
            "{what} position {point} is not finite"
        )));
    }
    if point.x == panel.center().x {
        return Err(Error::DegenerateGeometry(format!(
            "{what} at {point} lies in the panel plane"
        )));
    }
    Ok(())
}

pub fn incident_field(
    panel: &IrsPanel,
    bs: Point3,
    radio: &RadioConfig,
    carrier: &CarrierConfig,
) -> Result<IncidentField> {
    radio.validate()?;
    check_off_panel(bs, panel, "base station")?;
    let kappa = carrier.wavenumber();
    let element_distances: Vec<f64> = panel
        .element_positions()
        .into_iter()
        .map(|p| distance(bs, p))
        .collect();
    let center_distance = distance(bs, panel.center());
    Ok(IncidentField {
        amplitude: incident_amplitude(radio, center_distance),
        phases: element_distances.iter().map(|d| kappa * d).collect(),
        element_distances,
        center_distance,
    })
}

/// Field, power and SNR at one observation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub e_field: Complex64,
    pub rx_power_w: f64,
    pub snr_linear: f64,
}

impl FieldSample {
    pub fn snr_db(&self) -> f64 {
        power_to_db(self.snr_linear)
    }
}

/// Received power from a reflected field amplitude.
pub fn received_power(e_field: Complex64, radio: &RadioConfig, carrier: &CarrierConfig) -> f64 {
    let lambda = carrier.wavelength_m();
    e_field.norm_sqr() / (2.0 * radio.impedance_ohm) * radio.rx_directivity * lambda * lambda
        / (4.0 * PI)
}

/// A configured panel ready to evaluate the reflected field at many points.
///
/// Precomputes `E_i e^{jφ_q} e^{jω_q}` per element so that each observation
/// costs one pass over the elements.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    positions: Vec<Point3>,
    weights: Vec<Complex64>,
    center: Point3,
    panel_x: f64,
    prefactor: Complex64,
    kappa: f64,
    radio: RadioConfig,
    carrier: CarrierConfig,
    options: FieldOptions,
}

impl FieldEvaluator {
    pub fn new(
        panel: &IrsPanel,
        profile: &PhaseProfile,
        bs: Point3,
        radio: &RadioConfig,
        carrier: &CarrierConfig,
    ) -> Result<Self> {
        Self::with_options(panel, profile, bs, radio, carrier, FieldOptions::default())
    }

    pub fn with_options(
        panel: &IrsPanel,
        profile: &PhaseProfile,
        bs: Point3,
        radio: &RadioConfig,
        carrier: &CarrierConfig,
        options: FieldOptions,
    ) -> Result<Self> {
        profile.check_len(panel)?;
        let incident = incident_field(panel, bs, radio, carrier)?;
        let weights = incident
            .phases
            .iter()
            .zip(&incident.element_distances)
            .zip(profile.phases())
            .map(|((phi, d_iq), omega)| {
                let amplitude = match options.amplitude {
                    AmplitudeModel::CenterDistance => incident.amplitude,
                    AmplitudeModel::PerElement => incident_amplitude(radio, *d_iq),
                };
                Complex64::from_polar(amplitude, phi + omega)
            })
            .collect();
        // τ/(jλ) · d_y d_z
        let prefactor = Complex64::new(0.0, -1.0)
            * (panel.tau() * panel.cell_area_m2() / carrier.wavelength_m());
        Ok(FieldEvaluator {
            positions: panel.element_positions(),
            weights,
            center: panel.center(),
            panel_x: panel.center().x,
            prefactor,
            kappa: carrier.wavenumber(),
            radio: *radio,
            carrier: *carrier,
            options,
        })
    }

    /// Complex reflected field E_r at `obs`.
    pub fn field(&self, obs: Point3) -> Result<Complex64> {
        if !obs.is_finite() || obs.x == self.panel_x {
            return Err(Error::DegenerateGeometry(format!(
                "observation point {obs} lies in the panel plane"
            )));
        }
        let kappa = self.kappa;
        let sum = match self.options.amplitude {
            AmplitudeModel::CenterDistance => {
                let d_r = distance(obs, self.center);
                let terms = self
                    .positions
                    .iter()
                    .zip(&self.weights)
                    .map(|(p, w)| w * Complex64::cis(kappa * distance(obs, *p)));
                sum_complex(terms, self.options.summation) / d_r
            }
            AmplitudeModel::PerElement => {
                let terms = self.positions.iter().zip(&self.weights).map(|(p, w)| {
                    let d = distance(obs, *p);
                    w * Complex64::cis(kappa * d) / d
                });
                sum_complex(terms, self.options.summation)
            }
        };
        Ok(self.prefactor * sum)
    }

    pub fn sample(&self, obs: Point3) -> Result<FieldSample> {
        let e_field = self.field(obs)?;
        let rx_power_w = received_power(e_field, &self.radio, &self.carrier);
        Ok(FieldSample {
            e_field,
            rx_power_w,
            snr_linear: rx_power_w / self.radio.noise_power_w(),
        })
    }

    pub fn snr(&self, obs: Point3) -> Result<f64> {
        Ok(self.sample(obs)?.snr_linear)
    }
}

/// Reflected field, received power and SNR at `obs` for the given profile.
pub fn reflected_field(
    panel: &IrsPanel,
    profile: &PhaseProfile,
    bs: Point3,
    obs: Point3,
    radio: &RadioConfig,
    carrier: &CarrierConfig,
) -> Result<FieldSample> {
    FieldEvaluator::new(panel, profile, bs, radio, carrier)?.sample(obs)
}

/// Highest SNR any profile can deliver at `mu`, from the focusing closed form
/// `(P_tx D_tx D_rx / σ²) · (τ L_y L_z / (4π d_i d_r))²`.
pub fn gamma_max(
    panel: &IrsPanel,
    bs: Point3,
    mu: Point3,
    radio: &RadioConfig,
    _carrier: &CarrierConfig,
) -> f64 {
    let d_i = distance(bs, panel.center());
    let d_r = distance(mu, panel.center());
    let aperture = panel.tau() * panel.side_y_m() * panel.side_z_m() / (4.0 * PI * d_i * d_r);
    radio.tx_power_w * radio.tx_directivity * radio.rx_directivity / radio.noise_power_w()
        * aperture
        * aperture
}

/// SNR if all power intercepted by the panel were spread uniformly over an
/// area of `blockage_area_m2`. Not achievable; it bounds every real profile.
///
/// `incidence` gives the base-station direction seen from the panel and
/// `bs_distance_m` its distance to the panel center.
pub fn gamma_uniform(
    panel: &IrsPanel,
    incidence: AnglePair,
    bs_distance_m: f64,
    radio: &RadioConfig,
    carrier: &CarrierConfig,
    blockage_area_m2: f64,
) -> Result<f64> {
    if !(blockage_area_m2.is_finite() && blockage_area_m2 > 0.0) {
        return Err(Error::invalid(
            "blockage_area_m2",
            format!("must be positive, got {blockage_area_m2}"),
        ));
    }
    if !(bs_distance_m.is_finite() && bs_distance_m > 0.0) {
        return Err(Error::invalid(
            "bs_distance_m",
            format!("must be positive, got {bs_distance_m}"),
        ));
    }
    let path = carrier.wavelength_m() / (4.0 * PI * bs_distance_m);
    let projected = panel.side_y_m() * panel.side_z_m() * incidence.a_x().max(0.0);
    Ok(
        radio.tx_power_w * radio.tx_directivity * radio.rx_directivity / radio.noise_power_w()
            * path
            * path
            * projected
            / blockage_area_m2,
    )
}

/// A rectangular grid of observation points spanned by two global axes.
///
/// Point `(i, j)` is `origin + (u_min + i·step_u)·e_u + (v_min + j·step_v)·e_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: Point3,
    pub axis_u: Axis,
    pub u_min: f64,
    pub step_u: f64,
    pub n_u: usize,
    pub axis_v: Axis,
    pub v_min: f64,
    pub step_v: f64,
    pub n_v: usize,
}

impl GridSpec {
    /// Grid centered on `origin`, `n` points per side.
    pub fn centered(origin: Point3, axis_u: Axis, axis_v: Axis, half_width: f64, n: usize) -> Self {
        let step = if n > 1 {
            2.0 * half_width / (n - 1) as f64
        } else {
            0.0
        };
        GridSpec {
            origin,
            axis_u,
            u_min: -half_width,
            step_u: step,
            n_u: n,
            axis_v,
            v_min: -half_width,
            step_v: step,
            n_v: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis_u == self.axis_v {
            return Err(Error::invalid("grid", "u and v axes must differ"));
        }
        if !self.origin.is_finite() {
            return Err(Error::invalid("grid.origin", "must be finite"));
        }
        for (name, v) in [
            ("grid.u_min", self.u_min),
            ("grid.v_min", self.v_min),
            ("grid.step_u", self.step_u),
            ("grid.step_v", self.step_v),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.step_u < 0.0 || self.step_v < 0.0 {
            return Err(Error::invalid("grid", "steps must be nonnegative"));
        }
        Ok(())
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.step_u
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.step_v
    }

    pub fn point(&self, i: usize, j: usize) -> Point3 {
        self.origin + self.axis_u.unit() * self.u(i) + self.axis_v.unit() * self.v(j)
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// SNR in dB over a [`GridSpec`], row-major in `u` (index `i * n_v + j`).
#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid {
    pub spec: GridSpec,
    pub snr_db: Vec<f64>,
}

impl SnrGrid {
    pub fn dims(&self) -> (usize, usize) {
        (self.spec.n_u, self.spec.n_v)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.snr_db[i * self.spec.n_v + j]
    }

    pub fn max_db(&self) -> Option<f64> {
        self.snr_db.iter().copied().reduce(f64::max)
    }

    pub fn min_db(&self) -> Option<f64> {
        self.snr_db.iter().copied().reduce(f64::min)
    }
}

/// SNR (dB) at every grid point. Points are evaluated independently, in
/// parallel; the result does not depend on scheduling.
pub fn snr_map(
    panel: &IrsPanel,
    profile: &PhaseProfile,
    bs: Point3,
    grid: &GridSpec,
    radio: &RadioConfig,
    carrier: &CarrierConfig,
) -> Result<SnrGrid> {
    grid.validate()?;
    let evaluator = FieldEvaluator::new(panel, profile, bs, radio, carrier)?;
    let snr_db = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            evaluator
                .snr(grid.point(k / grid.n_v, k % grid.n_v))
                .map(power_to_db)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnrGrid {
        spec: *grid,
        snr_db,
    })
}

/// Per-element channel coefficients of the baseband model.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCoefficients {
    /// h_{i,q}: base station to element q (including the fixed BS beamformer).
    pub h_incident: Vec<Complex64>,
    /// h_{r,q}: element q to the user antenna.
    pub h_reflect: Vec<Complex64>,
    /// Effective element power gain 4πτ d_y d_z / λ².
    pub reflect_gain: f64,
    /// Reflection amplitude Γ̄ applied to every element.
    pub reflection_magnitude: f64,
}

impl ChannelCoefficients {
    pub fn len(&self) -> usize {
        self.h_incident.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_incident.is_empty()
    }

    pub fn with_reflection_magnitude(self, reflection_magnitude: f64) -> Self {
        ChannelCoefficients {
            reflection_magnitude,
            ..self
        }
    }
}

/// Coefficients that make the baseband model consistent with the field
/// model: `h_{i,q} = √(D_tx G) λ/(4π d_i) e^{jκ d_{i,q}}`,
/// `h_{r,q} = √(G D_rx) λ/(4π d_r) e^{jκ d_{r,q}}`, lossless (Γ̄ = 1).
pub fn build_channel_coefficients(
    panel: &IrsPanel,
    bs: Point3,
    mu: Point3,
    radio: &RadioConfig,
    carrier: &CarrierConfig,
) -> Result<ChannelCoefficients> {
    radio.validate()?;
    check_off_panel(bs, panel, "base station")?;
    check_off_panel(mu, panel, "user")?;
    let lambda = carrier.wavelength_m();
    let kappa = carrier.wavenumber();
    let gain = 4.0 * PI * panel.tau() * panel.cell_area_m2() / (lambda * lambda);
    let d_i = distance(bs, panel.center());
    let d_r = distance(mu, panel.center());
    let amp_i = (radio.tx_directivity * gain).sqrt() * lambda / (4.0 * PI * d_i);
    let amp_r = (gain * radio.rx_directivity).sqrt() * lambda / (4.0 * PI * d_r);
    let positions = panel.element_positions();
    Ok(ChannelCoefficients {
        h_incident: positions
            .iter()
            .map(|p| Complex64::from_polar(amp_i, kappa * distance(bs, *p)))
            .collect(),
        h_reflect: positions
            .iter()
            .map(|p| Complex64::from_polar(amp_r, kappa * distance(mu, *p)))
            .collect(),
        reflect_gain: gain,
        reflection_magnitude: 1.0,
    })
}

/// Phase convention for the reflection coefficient Γ_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionPhase {
    /// Γ_q = Γ̄ e^{j(ω_q − π/2)}; the −π/2 carries the 1/j of the field integral.
    #[default]
    QuarterWaveLag,
    /// Γ_q = Γ̄ e^{jω_q}. Inconsistent with the field model; kept for mutation tests.
    NoOffset,
}

/// End-to-end channel `h_e2e = Σ_q h_{r,q} Γ_q h_{i,q}`.
pub fn end_to_end_channel(
    coeffs: &ChannelCoefficients,
    profile: &PhaseProfile,
) -> Result<Complex64> {
    end_to_end_channel_with(coeffs, profile, ReflectionPhase::default())
}

pub fn end_to_end_channel_with(
    coeffs: &ChannelCoefficients,
    profile: &PhaseProfile,
    convention: ReflectionPhase,
) -> Result<Complex64> {
    if coeffs.h_reflect.len() != coeffs.h_incident.len() {
        return Err(Error::LengthMismatch {
            expected: coeffs.h_incident.len(),
            actual: coeffs.h_reflect.len(),
        });
    }
    if profile.len() != coeffs.len() {
        return Err(Error::LengthMismatch {
            expected: coeffs.len(),
            actual: profile.len(),
        });
    }
    let lag = match convention {
        ReflectionPhase::QuarterWaveLag => PI / 2.0,
        ReflectionPhase::NoOffset => 0.0,
    };
    Ok(coeffs
        .h_reflect
        .iter()
        .zip(&coeffs.h_incident)
        .zip(profile.phases())
        .map(|((h_r, h_i), omega)| {
            h_r * Complex64::from_polar(coeffs.reflection_magnitude, omega - lag) * h_i
        })
        .fold(Complex64::new(0.0, 0.0), |acc, t| acc + t))
}

/// Received baseband sample `y = h_e2e s + n`.
pub fn baseband_receive(
    coeffs: &ChannelCoefficients,
    profile: &PhaseProfile,
    symbol: Complex64,
    noise: Complex64,
) -> Result<Complex64> {
    Ok(end_to_end_channel(coeffs, profile)? * symbol + noise)
}

/// Scale factor `√(D_rx λ² / (2η · 4π))` from reflected field to received
/// baseband amplitude.
pub fn field_to_baseband_scale(radio: &RadioConfig, carrier: &CarrierConfig) -> f64 {
    let lambda = carrier.wavelength_m();
    (radio.rx_directivity * lambda * lambda / (2.0 * radio.impedance_ohm * 4.0 * PI)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BS: Point3 = Point3::new(30.0, 0.0, 10.0);
    const IRS: Point3 = Point3::new(0.0, 50.0, 5.0);
    const MU: Point3 = Point3::new(20.0, 60.0, 1.0);

    fn carrier() -> CarrierConfig {
        CarrierConfig::new(3e9).unwrap()
    }

    fn panel() -> IrsPanel {
        IrsPanel::square(IRS, 0.5, 0.5, &carrier(), 1.0).unwrap()
    }

    // Oracle for focusing written straight from the geometry, independent of
    // the design module.
    fn focus_oracle(panel: &IrsPanel, bs: Point3, target: Point3, kappa: f64) -> PhaseProfile {
        PhaseProfile::new(
            panel
                .element_positions()
                .iter()
                .map(|p| -kappa * (distance(target, *p) + distance(bs, *p))),
        )
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_power_of_default_radio() {
        let r = RadioConfig::default();
        // −174 dBm/Hz + 73 dB·Hz + 6 dB = −95 dBm
        assert!((power_to_db(r.noise_power_w() / 1e-3) + 94.9897).abs() < 1e-3);
    }

    #[test]
    fn incident_amplitude_matches_power_density() {
        let radio = RadioConfig::default();
        let inc = incident_field(&panel(), BS, &radio, &carrier()).unwrap();
        let d_i = distance(BS, IRS);
        let lhs = inc.amplitude * inc.amplitude / (2.0 * radio.impedance_ohm);
        let rhs = radio.tx_power_w * radio.tx_directivity / (4.0 * PI * d_i * d_i);
        assert!(rel(lhs, rhs) < 1e-12);
        assert_eq!(inc.phases.len(), 100);
    }

    #[test]
    fn zero_power_gives_zero_incident_field() {
        let radio = RadioConfig::default().with_tx_power_w(0.0);
        let inc = incident_field(&panel(), BS, &radio, &carrier()).unwrap();
        assert_eq!(inc.amplitude, 0.0);
    }

    #[test]
    fn single_element_phase_is_center_path() {
        let p = IrsPanel::new(IRS, 0.05, 0.05, 0.05, 0.05, 1.0).unwrap();
        let c = carrier();
        let inc = incident_field(&p, BS, &RadioConfig::default(), &c).unwrap();
        assert_eq!(inc.phases, vec![c.wavenumber() * distance(BS, IRS)]);
    }

    #[test]
    fn bs_in_panel_plane_is_rejected() {
        let err = incident_field(
            &panel(),
            Point3::new(0.0, 10.0, 0.0),
            &RadioConfig::default(),
            &carrier(),
        );
        assert!(matches!(err, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn focused_field_equals_closed_form() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let profile = focus_oracle(&p, BS, MU, c.wavenumber());
        let sample = reflected_field(&p, &profile, BS, MU, &radio, &c).unwrap();
        let e_i = incident_amplitude(&radio, distance(BS, IRS));
        let expected =
            p.tau() / c.wavelength_m() * e_i * p.element_count() as f64 * p.cell_area_m2()
                / distance(MU, IRS);
        assert!(rel(sample.e_field.norm(), expected) < 1e-10);
    }

    #[test]
    fn absorbing_surface_reflects_nothing() {
        let p = panel().with_tau(0.0).unwrap();
        let sample = reflected_field(
            &p,
            &PhaseProfile::zeros(100),
            BS,
            MU,
            &RadioConfig::default(),
            &carrier(),
        )
        .unwrap();
        assert_eq!(sample.e_field.norm(), 0.0);
        assert_eq!(sample.snr_linear, 0.0);
        assert_eq!(sample.snr_db(), crate::units::ZERO_POWER_DB);
    }

    #[test]
    fn profile_length_is_checked() {
        let err = reflected_field(
            &panel(),
            &PhaseProfile::zeros(7),
            BS,
            MU,
            &RadioConfig::default(),
            &carrier(),
        );
        assert_eq!(
            err.unwrap_err(),
            Error::LengthMismatch {
                expected: 100,
                actual: 7
            }
        );
    }

    #[test]
    fn observation_on_panel_is_rejected() {
        let err = reflected_field(
            &panel(),
            &PhaseProfile::zeros(100),
            BS,
            IRS,
            &RadioConfig::default(),
            &carrier(),
        );
        assert!(matches!(err, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn global_phase_offset_is_invisible() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let profile = PhaseProfile::new((0..100).map(|_| rng.random_range(-PI..PI)));
        let a = reflected_field(&p, &profile, BS, MU, &radio, &c).unwrap();
        let b = reflected_field(&p, &profile.with_offset(1.234), BS, MU, &radio, &c).unwrap();
        assert!(rel(b.e_field.norm(), a.e_field.norm()) < 1e-12);
        assert!(rel(b.rx_power_w, a.rx_power_w) < 1e-12);
        assert!(rel(b.snr_linear, a.snr_linear) < 1e-12);
    }

    #[test]
    fn gamma_max_agrees_with_field_sum_at_focus() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let profile = focus_oracle(&p, BS, MU, c.wavenumber());
        let summed = reflected_field(&p, &profile, BS, MU, &radio, &c)
            .unwrap()
            .snr_linear;
        let closed = gamma_max(&p, BS, MU, &radio, &c);
        // The only gap is Q d_y d_z vs L_y L_z.
        assert!(rel(summed, closed) < 0.01, "{summed} vs {closed}");
        assert!(summed <= closed);
    }

    #[test]
    fn gamma_max_scaling() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let base = gamma_max(&p, BS, MU, &radio, &c);
        let doubled = RadioConfig {
            rx_directivity: 2.0 * radio.rx_directivity,
            ..radio
        };
        assert!(rel(gamma_max(&p, BS, MU, &doubled, &c), 2.0 * base) < 1e-14);
        let far = IRS + (MU - IRS) * 2.0;
        assert!(rel(gamma_max(&p, BS, far, &radio, &c), base / 4.0) < 1e-14);
    }

    #[test]
    fn gamma_uniform_hand_calculation() {
        let (p, c) = (panel(), carrier());
        let radio = RadioConfig::default();
        let area = PI * 25.0;
        let g = gamma_uniform(&p, AnglePair::new(PI / 2.0, 0.0), 58.52, &radio, &c, area).unwrap();
        // Hand calculation in dB: P_tx D_tx D_rx = 10 + 12 + 0 dBm; σ² = −174 + 73.0103 + 6 dBm;
        // (λ/4πd)² with λ = 0.0999308 m, d = 58.52 m; aperture 0.25 m²; area 25π m².
        let lambda: f64 = 299_792_458.0 / 3e9;
        let fspl_db = 20.0 * (lambda / (4.0 * PI * 58.52)).log10();
        let expected_db = 22.0 - (-174.0 + 10.0 * 20e6_f64.log10() + 6.0)
            + fspl_db
            + 10.0 * (0.25 / area).log10();
        assert!(
            (power_to_db(g) - expected_db).abs() < 1e-9,
            "{} vs {expected_db}",
            power_to_db(g)
        );

        let half = gamma_uniform(
            &p,
            AnglePair::new(PI / 2.0, 0.0),
            58.52,
            &radio,
            &c,
            area / 2.0,
        )
        .unwrap();
        assert!(rel(half, 2.0 * g) < 1e-14);
        let grazing = gamma_uniform(
            &p,
            AnglePair::new(PI / 2.0, PI / 2.0),
            58.52,
            &radio,
            &c,
            area,
        )
        .unwrap();
        assert!(grazing.abs() < 1e-12 * g);
        assert!(gamma_uniform(&p, AnglePair::new(PI / 2.0, 0.0), 58.52, &radio, &c, 0.0).is_err());
    }

    #[test]
    fn reflect_gain_is_pi_at_half_wavelength_spacing() {
        let p = panel();
        let coeffs =
            build_channel_coefficients(&p, BS, MU, &RadioConfig::default(), &carrier()).unwrap();
        assert!((coeffs.reflect_gain - PI).abs() < 1e-12);
        assert_eq!(coeffs.reflection_magnitude, 1.0);
    }

    #[test]
    fn coefficient_amplitudes_are_constant_and_phases_follow_distances() {
        let (p, c) = (panel(), carrier());
        let coeffs = build_channel_coefficients(&p, BS, MU, &RadioConfig::default(), &c).unwrap();
        let a0 = coeffs.h_incident[0].norm();
        for (h, pos) in coeffs.h_incident.iter().zip(p.element_positions()) {
            assert!(rel(h.norm(), a0) < 1e-14);
            let expected = wrap_phase(c.wavenumber() * distance(BS, pos));
            assert!(wrap_phase(h.arg() - expected).abs() < 1e-9);
        }
        let r0 = coeffs.h_reflect[0].norm();
        assert!(coeffs.h_reflect.iter().all(|h| rel(h.norm(), r0) < 1e-14));
    }

    #[test]
    fn baseband_identity_chain() {
        let one = Complex64::new(1.0, 0.0);
        let coeffs = ChannelCoefficients {
            h_incident: vec![one],
            h_reflect: vec![one],
            reflect_gain: 1.0,
            reflection_magnitude: 1.0,
        };
        let s = Complex64::new(0.3, -0.7);
        let y = baseband_receive(
            &coeffs,
            &PhaseProfile::new([PI / 2.0]),
            s,
            Complex64::new(0.0, 0.0),
        )
        .unwrap();
        assert!((y - s).norm() < 1e-15);
        let n = Complex64::new(0.1, 0.2);
        let y = baseband_receive(
            &coeffs,
            &PhaseProfile::new([0.4]),
            Complex64::new(0.0, 0.0),
            n,
        )
        .unwrap();
        assert_eq!(y, n);
        assert!(baseband_receive(&coeffs, &PhaseProfile::zeros(2), s, n).is_err());
    }

    #[test]
    fn baseband_reproduces_field_model() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let coeffs = build_channel_coefficients(&p, BS, MU, &radio, &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let profile = PhaseProfile::new((0..100).map(|_| rng.random_range(-PI..PI)));
            let s = Complex64::new(radio.tx_power_w.sqrt(), 0.0);
            let y = baseband_receive(&coeffs, &profile, s, Complex64::new(0.0, 0.0)).unwrap();
            let sample = reflected_field(&p, &profile, BS, MU, &radio, &c).unwrap();
            assert!(rel(y.norm_sqr(), sample.rx_power_w) < 1e-10);
            let scaled = sample.e_field * field_to_baseband_scale(&radio, &c);
            assert!((y - scaled).norm() / scaled.norm() < 1e-10);
        }
    }

    #[test]
    fn dropping_the_quarter_wave_lag_breaks_the_complex_identity() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let coeffs = build_channel_coefficients(&p, BS, MU, &radio, &c).unwrap();
        let profile = focus_oracle(&p, BS, MU, c.wavenumber());
        let h = end_to_end_channel_with(&coeffs, &profile, ReflectionPhase::NoOffset).unwrap();
        let y = h * radio.tx_power_w.sqrt();
        let reference = reflected_field(&p, &profile, BS, MU, &radio, &c)
            .unwrap()
            .e_field
            * field_to_baseband_scale(&radio, &c);
        let err = (y - reference).norm() / reference.norm();
        assert!((err - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn per_element_amplitude_is_a_small_correction_here() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let profile = focus_oracle(&p, BS, MU, c.wavenumber());
        let center = reflected_field(&p, &profile, BS, MU, &radio, &c).unwrap();
        let exact = FieldEvaluator::with_options(
            &p,
            &profile,
            BS,
            &radio,
            &c,
            FieldOptions {
                amplitude: AmplitudeModel::PerElement,
                ..Default::default()
            },
        )
        .unwrap()
        .sample(MU)
        .unwrap();
        assert!(rel(exact.rx_power_w, center.rx_power_w) < 1e-3);
        assert_ne!(exact.rx_power_w, center.rx_power_w);
    }

    #[test]
    fn compensated_sum_agrees_with_plain() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let profile = PhaseProfile::new((0..100).map(|_| rng.random_range(-PI..PI)));
        let plain = reflected_field(&p, &profile, BS, MU, &radio, &c).unwrap();
        let comp = FieldEvaluator::with_options(
            &p,
            &profile,
            BS,
            &radio,
            &c,
            FieldOptions {
                summation: Summation::Compensated,
                ..Default::default()
            },
        )
        .unwrap()
        .sample(MU)
        .unwrap();
        assert!((plain.e_field - comp.e_field).norm() / plain.e_field.norm() < 1e-12);
    }

    #[test]
    fn snr_map_single_point_matches_gamma_max_and_zero_power_sentinel() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let profile = focus_oracle(&p, BS, MU, c.wavenumber());
        let grid = GridSpec::centered(MU, Axis::X, Axis::Y, 0.0, 1);
        let map = snr_map(&p, &profile, BS, &grid, &radio, &c).unwrap();
        assert_eq!(map.dims(), (1, 1));
        let closed = power_to_db(gamma_max(&p, BS, MU, &radio, &c));
        assert!((map.get(0, 0) - closed).abs() < 0.05);

        let silent = radio.with_tx_power_w(0.0);
        let grid = GridSpec::centered(MU, Axis::X, Axis::Y, 1.0, 3);
        let map = snr_map(&p, &profile, BS, &grid, &silent, &c).unwrap();
        assert!(map.snr_db.iter().all(|&v| v == crate::units::ZERO_POWER_DB));
    }

    #[test]
    fn snr_map_is_mirror_symmetric_in_symmetric_geometry() {
        let c = carrier();
        let center = Point3::new(0.0, 0.0, 0.0);
        let p = IrsPanel::square(center, 0.5, 0.5, &c, 1.0).unwrap();
        let bs = Point3::new(40.0, 0.0, 0.0);
        let focus = Point3::new(15.0, 0.0, 0.0);
        let profile = focus_oracle(&p, bs, focus, c.wavenumber());
        let grid = GridSpec::centered(focus, Axis::X, Axis::Y, 3.0, 21);
        let map = snr_map(&p, &profile, bs, &grid, &RadioConfig::default(), &c).unwrap();
        for i in 0..21 {
            for j in 0..21 {
                assert!((map.get(i, j) - map.get(i, 20 - j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn snr_map_matches_sequential_evaluation_bitwise() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let profile = focus_oracle(&p, BS, MU, c.wavenumber());
        let grid = GridSpec::centered(MU, Axis::X, Axis::Z, 2.0, 9);
        let map = snr_map(&p, &profile, BS, &grid, &radio, &c).unwrap();
        let eval = FieldEvaluator::new(&p, &profile, BS, &radio, &c).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let v = power_to_db(eval.snr(grid.point(i, j)).unwrap());
                assert_eq!(v.to_bits(), map.get(i, j).to_bits());
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn snr_is_linear_in_transmit_parameters(
            k in 0.1..10.0f64,
            seed in any::<u64>(),
            dx in -5.0..5.0f64,
            dy in -5.0..5.0f64,
        ) {
            let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let profile = PhaseProfile::new((0..100).map(|_| rng.random_range(-PI..PI)));
            let obs = MU + Point3::new(dx, dy, 0.0);
            let base = reflected_field(&p, &profile, BS, obs, &radio, &c).unwrap().snr_linear;
            for scaled in [
                RadioConfig { tx_power_w: k * radio.tx_power_w, ..radio },
                RadioConfig { tx_directivity: k * radio.tx_directivity, ..radio },
                RadioConfig { rx_directivity: k * radio.rx_directivity, ..radio },
            ] {
                let s = reflected_field(&p, &profile, BS, obs, &scaled, &c).unwrap().snr_linear;
                prop_assert!(rel(s, k * base) < 1e-10);
            }
        }
    }
}
