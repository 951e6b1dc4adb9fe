//! Reconfiguration protocol under user mobility.
//!
//! A user crosses a circular blockage area on a straight chord at constant
//! speed. The loop simulated by [`run_protocol`] is:
//!
//! 1. localize the user (takes `T_loc`),
//! 2. design a wide-illumination profile around the localized position and
//!    load it on the panel (takes `T_irs`),
//! 3. while the tracked SNR stays at or above `γ_thr`, estimate the scalar
//!    end-to-end channel with `N_plt` pilots once per coherence time,
//! 4. when the SNR drops below `γ_thr`, go back to 1.
//!
//! Localization is perfect: it returns the true user position at the end of
//! the localization window.

use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::design::{wide_profile, IlluminationSpec};
use crate::error::{Error, Result};
use crate::field::{build_channel_coefficients, end_to_end_channel, FieldEvaluator, PhaseProfile};
use crate::geometry::{distance, Point3};
use crate::overhead::proposed_alpha;
use crate::scenario::Scenario;
use crate::units::{power_to_db, ZERO_POWER_DB};

/// Circular region without direct coverage, parallel to the ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockageArea {
    center: Point3,
    diameter_m: f64,
}

impl BlockageArea {
    /// A zero diameter is accepted and describes a single point.
    pub fn new(center: Point3, diameter_m: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("blockage.center", "must be finite"));
        }
        if !(diameter_m.is_finite() && diameter_m >= 0.0) {
            return Err(Error::invalid(
                "blockage.diameter_m",
                format!("must be nonnegative, got {diameter_m}"),
            ));
        }
        Ok(BlockageArea { center, diameter_m })
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn diameter_m(&self) -> f64 {
        self.diameter_m
    }

    pub fn radius_m(&self) -> f64 {
        self.diameter_m / 2.0
    }

    pub fn area_m2(&self) -> f64 {
        std::f64::consts::PI * self.radius_m() * self.radius_m()
    }

    /// Point on the boundary circle at polar angle `angle` (radians).
    pub fn boundary_point(&self, angle: f64) -> Point3 {
        self.center + Point3::new(angle.cos(), angle.sin(), 0.0) * self.radius_m()
    }

    /// Points of a hexagonal lattice with the given spacing that fall inside
    /// the disc (boundary included). The lattice has a node at the center,
    /// so lattices of nested discs with equal spacing are nested too.
    pub fn hex_grid(&self, spacing_m: f64) -> Result<Vec<Point3>> {
        if !(spacing_m.is_finite() && spacing_m > 0.0) {
            return Err(Error::invalid(
                "grid_spacing_m",
                format!("must be positive, got {spacing_m}"),
            ));
        }
        let r = self.radius_m();
        let row_step = spacing_m * 3f64.sqrt() / 2.0;
        let rows = (r / row_step).floor() as i64;
        let cols = (r / spacing_m).floor() as i64 + 1;
        let mut points = Vec::new();
        for row in -rows..=rows {
            let y = row as f64 * row_step;
            let shift = if row.rem_euclid(2) == 1 {
                spacing_m / 2.0
            } else {
                0.0
            };
            for col in -cols..=cols {
                let x = col as f64 * spacing_m + shift;
                if x * x + y * y <= r * r * (1.0 + 1e-12) {
                    points.push(self.center + Point3::new(x, y, 0.0));
                }
            }
        }
        Ok(points)
    }
}

/// Straight-line crossing of the blockage area at constant speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilitySegment {
    pub entry: Point3,
    pub exit: Point3,
    pub speed_m_per_s: f64,
}

impl MobilitySegment {
    pub fn new(entry: Point3, exit: Point3, speed_m_per_s: f64) -> Result<Self> {
        if !(speed_m_per_s.is_finite() && speed_m_per_s > 0.0) {
            return Err(Error::invalid(
                "speed_m_per_s",
                format!("must be positive, got {speed_m_per_s}"),
            ));
        }
        if !(entry.is_finite() && exit.is_finite()) || entry == exit {
            return Err(Error::DegenerateGeometry(
                "segment entry and exit must be distinct".into(),
            ));
        }
        Ok(MobilitySegment {
            entry,
            exit,
            speed_m_per_s,
        })
    }

    pub fn length_m(&self) -> f64 {
        distance(self.entry, self.exit)
    }

    pub fn duration_s(&self) -> f64 {
        self.length_m() / self.speed_m_per_s
    }
}

/// Uniform, independent entry and exit points on the boundary circle.
/// Coincident draws are redrawn. The same seed always gives the same chord.
pub fn sample_crossing(
    blockage: &BlockageArea,
    speed_m_per_s: f64,
    rng_seed: u64,
) -> Result<MobilitySegment> {
    if !(blockage.diameter_m() > 0.0) {
        return Err(Error::invalid(
            "blockage.diameter_m",
            "crossings need a positive diameter",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    loop {
        let a = blockage.boundary_point(rng.random_range(0.0..std::f64::consts::TAU));
        let b = blockage.boundary_point(rng.random_range(0.0..std::f64::consts::TAU));
        if a != b {
            return MobilitySegment::new(a, b, speed_m_per_s);
        }
    }
}

/// User position `t_s` seconds after entering.
pub fn mu_position(segment: &MobilitySegment, t_s: f64) -> Result<Point3> {
    let duration = segment.duration_s();
    if !(0.0..=duration).contains(&t_s) {
        return Err(Error::invalid(
            "t_s",
            format!("{t_s} s is outside the crossing window [0, {duration}] s"),
        ));
    }
    if t_s == duration {
        return Ok(segment.exit);
    }
    let direction = (segment.exit - segment.entry) * (1.0 / segment.length_m());
    Ok(segment.entry + direction * (segment.speed_m_per_s * t_s))
}

/// Least-squares estimate of a scalar channel and its fit residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsEstimate {
    pub channel: Complex64,
    pub residual: f64,
}

/// `ĥ = Σ y_k s_k* / Σ |s_k|²`, residual `Σ |y_k − ĥ s_k|²`.
pub fn ls_estimate(pilots: &[Complex64], received: &[Complex64]) -> Result<LsEstimate> {
    if pilots.len() != received.len() {
        return Err(Error::LengthMismatch {
            expected: pilots.len(),
            actual: received.len(),
        });
    }
    if pilots.is_empty() {
        return Err(Error::invalid("pilots", "at least one pilot is required"));
    }
    let energy: f64 = pilots.iter().map(|s| s.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::invalid("pilots", "pilot sequence is all zero"));
    }
    let correlation: Complex64 = pilots.iter().zip(received).map(|(s, y)| y * s.conj()).sum();
    let channel = correlation / energy;
    let residual = pilots
        .iter()
        .zip(received)
        .map(|(s, y)| (y - channel * s).norm_sqr())
        .sum();
    Ok(LsEstimate { channel, residual })
}

/// Which SNR drives the reconfiguration trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrTracking {
    /// Noise-free line-of-sight SNR at the true user position, checked
    /// every time step.
    #[default]
    Noiseless,
    /// Mean of the SNRs implied by the last `window` LS estimates, checked
    /// after each estimate.
    EstimateWindow { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub gamma_thr_linear: f64,
    pub t_loc_s: f64,
    pub t_irs_s: f64,
    pub t_coh_s: f64,
    pub n_plt: usize,
    pub t_sym_s: f64,
    pub time_step_s: f64,
    pub rng_seed: u64,
    /// Added to Δ at every reconfiguration to absorb localization error.
    pub delta_inflation_m: f64,
    pub tracking: SnrTracking,
}

impl Default for ProtocolConfig {
    /// 10 dB threshold, 24 ms coherence time, 3 pilots of 1/15 kHz, and a
    /// localization time of `C·N_pth·log2(N_grd)` symbols with C = 1,
    /// N_pth = 5, N_grd = 20.
    fn default() -> Self {
        let t_sym_s = 1.0 / 15e3;
        ProtocolConfig {
            gamma_thr_linear: 10.0,
            t_loc_s: 5.0 * 20f64.log2() * t_sym_s,
            t_irs_s: 0.0,
            t_coh_s: 0.024,
            n_plt: 3,
            t_sym_s,
            time_step_s: 0.002,
            rng_seed: 0,
            delta_inflation_m: 0.0,
            tracking: SnrTracking::Noiseless,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_thr_linear", self.gamma_thr_linear),
            ("t_loc_s", self.t_loc_s),
            ("t_coh_s", self.t_coh_s),
            ("t_sym_s", self.t_sym_s),
            ("time_step_s", self.time_step_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.t_irs_s.is_finite() && self.t_irs_s >= 0.0) {
            return Err(Error::invalid(
                "t_irs_s",
                format!("must be nonnegative, got {}", self.t_irs_s),
            ));
        }
        if !(self.delta_inflation_m.is_finite() && self.delta_inflation_m >= 0.0) {
            return Err(Error::invalid("delta_inflation_m", "must be nonnegative"));
        }
        if self.n_plt == 0 {
            return Err(Error::invalid("n_plt", "at least one pilot is required"));
        }
        if self.time_step_s > self.t_coh_s / 10.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "time_step_s",
                format!(
                    "{} s exceeds a tenth of the coherence time ({} s)",
                    self.time_step_s, self.t_coh_s
                ),
            ));
        }
        if let SnrTracking::EstimateWindow { window: 0 } = self.tracking {
            return Err(Error::invalid(
                "tracking",
                "estimate window must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Localize,
    Reconfigure,
    Estimate,
    ThresholdCrossed,
    Exit,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Localize => "localize",
            EventKind::Reconfigure => "reconfigure",
            EventKind::Estimate => "estimate",
            EventKind::ThresholdCrossed => "threshold_crossed",
            EventKind::Exit => "exit",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One protocol event. `snr_db` is the noise-free SNR at the user under the
/// profile loaded at that moment, except for estimates, where it is the SNR
/// implied by the LS estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolEvent {
    pub time_s: f64,
    pub kind: EventKind,
    pub mu: Point3,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    pub events: Vec<ProtocolEvent>,
    /// Length of every completed configuration cycle: from the start of a
    /// localization to the start of the next one, or to the exit.
    pub t_upd_samples_s: Vec<f64>,
    /// Proposed-scheme overhead for this trace's mean update period.
    pub overhead_fraction: f64,
    pub crossing_duration_s: f64,
    /// Localization time used, for overhead bookkeeping.
    pub t_loc_s: f64,
}

impl ProtocolTrace {
    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn reconfiguration_count(&self) -> usize {
        self.count(EventKind::Reconfigure)
    }

    pub fn times_of(&self, kind: EventKind) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.time_s)
            .collect()
    }

    pub fn mean_t_upd_s(&self) -> Option<f64> {
        if self.t_upd_samples_s.is_empty() {
            None
        } else {
            Some(self.t_upd_samples_s.iter().sum::<f64>() / self.t_upd_samples_s.len() as f64)
        }
    }

    /// CSV with header `timestamp_s,kind,mu_x,mu_y,mu_z,snr_db`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp_s,kind,mu_x,mu_y,mu_z,snr_db\n");
        for e in &self.events {
            let _ = writeln!(
                out,
                "{:.6},{},{:.6},{:.6},{:.6},{:.6}",
                e.time_s, e.kind, e.mu.x, e.mu.y, e.mu.z, e.snr_db
            );
        }
        out
    }
}

struct Configured {
    evaluator: FieldEvaluator,
    profile: PhaseProfile,
}

/// Runs the reconfiguration loop over one crossing.
pub fn run_protocol(
    scenario: &Scenario,
    illumination_delta_m: f64,
    cfg: &ProtocolConfig,
    segment: &MobilitySegment,
) -> Result<ProtocolTrace> {
    cfg.validate()?;
    if !(illumination_delta_m.is_finite() && illumination_delta_m >= 0.0) {
        return Err(Error::invalid(
            "illumination.delta_m",
            "must be nonnegative",
        ));
    }
    let Scenario {
        carrier,
        panel,
        radio,
        bs,
        ..
    } = scenario;
    let noise_power = radio.noise_power_w();
    let noise = Normal::new(0.0, (noise_power / 2.0).sqrt()).expect("finite noise power");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let pilot = Complex64::new(radio.tx_power_w.sqrt(), 0.0);
    let pilots = vec![pilot; cfg.n_plt];
    let delta = illumination_delta_m + cfg.delta_inflation_m;

    let end = segment.duration_s();
    let position = |t: f64| mu_position(segment, t.min(end));
    let mut events = Vec::new();
    let mut samples = Vec::new();
    let mut configured: Option<Configured> = None;
    let snr_db_at = |c: &Option<Configured>, p: Point3| -> Result<f64> {
        match c {
            Some(c) => Ok(power_to_db(c.evaluator.snr(p)?)),
            None => Ok(ZERO_POWER_DB),
        }
    };

    let mut cycle_start = 0.0;
    'cycles: loop {
        let here = position(cycle_start)?;
        events.push(ProtocolEvent {
            time_s: cycle_start,
            kind: EventKind::Localize,
            mu: here,
            snr_db: snr_db_at(&configured, here)?,
        });
        let t_cfg = cycle_start + cfg.t_loc_s + cfg.t_irs_s;
        if t_cfg > end {
            break 'cycles;
        }
        let localized = position(cycle_start + cfg.t_loc_s)?;
        let spec = IlluminationSpec::new(localized, delta)?;
        let profile = wide_profile(panel, *bs, &spec, carrier)?;
        let evaluator = FieldEvaluator::new(panel, &profile, *bs, radio, carrier)?;
        configured = Some(Configured { evaluator, profile });
        let current = configured.as_ref().expect("just configured");
        let at_cfg = position(t_cfg)?;
        events.push(ProtocolEvent {
            time_s: t_cfg,
            kind: EventKind::Reconfigure,
            mu: at_cfg,
            snr_db: power_to_db(current.evaluator.snr(at_cfg)?),
        });

        let mut next_estimate = 0usize;
        let estimate_time = |m: usize| t_cfg + m as f64 * cfg.t_coh_s;
        let mut window: Vec<f64> = Vec::new();
        let mut step = 0usize;
        loop {
            let t = t_cfg + step as f64 * cfg.time_step_s;
            if t > end {
                // Crossing finished inside this cycle.
                while estimate_time(next_estimate) < end {
                    let te = estimate_time(next_estimate);
                    let snr =
                        estimate_snr(scenario, current, position(te)?, &pilots, &noise, &mut rng)?;
                    events.push(estimate_event(te, position(te)?, snr));
                    next_estimate += 1;
                }
                samples.push(end - cycle_start);
                break 'cycles;
            }
            let mut triggered = false;
            while estimate_time(next_estimate) < t {
                let te = estimate_time(next_estimate);
                let p = position(te)?;
                let snr = estimate_snr(scenario, current, p, &pilots, &noise, &mut rng)?;
                events.push(estimate_event(te, p, snr));
                next_estimate += 1;
                if let SnrTracking::EstimateWindow { window: len } = cfg.tracking {
                    window.push(snr);
                    if window.len() > len {
                        window.remove(0);
                    }
                    let mean = window.iter().sum::<f64>() / window.len() as f64;
                    if mean < cfg.gamma_thr_linear {
                        triggered = true;
                        break;
                    }
                }
            }
            let here = position(t)?;
            let snr = current.evaluator.snr(here)?;
            if triggered || (cfg.tracking == SnrTracking::Noiseless && snr < cfg.gamma_thr_linear) {
                events.push(ProtocolEvent {
                    time_s: t,
                    kind: EventKind::ThresholdCrossed,
                    mu: here,
                    snr_db: power_to_db(snr),
                });
                samples.push(t - cycle_start);
                cycle_start = t;
                continue 'cycles;
            }
            step += 1;
        }
    }

    let exit = segment.exit;
    events.push(ProtocolEvent {
        time_s: end,
        kind: EventKind::Exit,
        mu: exit,
        snr_db: snr_db_at(&configured, exit)?,
    });
    let mean = if samples.is_empty() {
        None
    } else {
        Some(samples.iter().sum::<f64>() / samples.len() as f64)
    };
    let overhead_fraction = match mean {
        Some(t_upd) if t_upd > cfg.t_loc_s => proposed_alpha(
            cfg.t_loc_s,
            t_upd,
            cfg.n_plt as f64,
            cfg.t_sym_s,
            cfg.t_coh_s,
        )
        .min(1.0),
        _ => 1.0,
    };
    Ok(ProtocolTrace {
        events,
        t_upd_samples_s: samples,
        overhead_fraction,
        crossing_duration_s: end,
        t_loc_s: cfg.t_loc_s,
    })
}

fn estimate_event(time_s: f64, mu: Point3, snr_linear: f64) -> ProtocolEvent {
    ProtocolEvent {
        time_s,
        kind: EventKind::Estimate,
        mu,
        snr_db: power_to_db(snr_linear),
    }
}

/// Simulates one pilot burst through the baseband model and returns the SNR
/// implied by the LS estimate, `|ĥ|² P_tx / σ²`.
fn estimate_snr(
    scenario: &Scenario,
    configured: &Configured,
    mu: Point3,
    pilots: &[Complex64],
    noise: &Normal<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let coeffs = build_channel_coefficients(
        &scenario.panel,
        scenario.bs,
        mu,
        &scenario.radio,
        &scenario.carrier,
    )?;
    let h = end_to_end_channel(&coeffs, &configured.profile)?;
    let received: Vec<Complex64> = pilots
        .iter()
        .map(|s| h * s + Complex64::new(noise.sample(rng), noise.sample(rng)))
        .collect();
    let estimate = ls_estimate(pilots, &received)?;
    Ok(estimate.channel.norm_sqr() * scenario.radio.tx_power_w / scenario.radio.noise_power_w())
}
