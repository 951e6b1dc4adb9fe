//! Self-checks run by `irs-illum verify`: model consistency and the core
//! invariants, each with its measured residual.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ScenarioConfig;
use crate::design::{focus_profile, wide_profile, IlluminationSpec};
use crate::error::Result;
use crate::field::{
    build_channel_coefficients, end_to_end_channel_with, field_to_baseband_scale, incident_field,
    wrap_phase, FieldEvaluator, PhaseProfile, ReflectionPhase,
};
use crate::geometry::{distance, Point3};
use crate::overhead::{comparison_table, overhead_codebook, overhead_onoff_dft, overhead_sparsity};
use crate::protocol::{ls_estimate, EventKind};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skip,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skip => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

impl Check {
    fn measured(name: &'static str, residual: f64, tolerance: f64, what: &str) -> Self {
        Check {
            name,
            status: if residual <= tolerance {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("{what} = {residual:.3e} (tolerance {tolerance:.1e})"),
        }
    }

    fn skip(name: &'static str, why: impl Into<String>) -> Self {
        Check {
            name,
            status: CheckStatus::Skip,
            detail: why.into(),
        }
    }

    fn error(name: &'static str, err: impl fmt::Display) -> Self {
        Check {
            name,
            status: CheckStatus::Fail,
            detail: format!("error: {err}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    /// True when no check failed; skips do not count as failures.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{}  {:<22} {}", c.status, c.name, c.detail)?;
        }
        writeln!(f, "RESULT: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Random scenarios for the consistency check.
    pub trials: usize,
    /// Drop the −π/2 of the reflection coefficient, which must make the
    /// consistency check fail.
    pub corrupt_phase_convention: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 100,
            corrupt_phase_convention: false,
        }
    }
}

fn random_profile(rng: &mut ChaCha8Rng, len: usize) -> PhaseProfile {
    PhaseProfile::new(
        (0..len).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)),
    )
}

/// Random observation point near the configured user, on the same side of
/// the panel.
fn random_point_near(rng: &mut ChaCha8Rng, mu: Point3, panel_x: f64) -> Point3 {
    loop {
        let p = mu
            + Point3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-1.0..1.0),
            );
        if (p.x - panel_x) * (mu.x - panel_x) > 0.0 {
            return p;
        }
    }
}

fn consistency(
    cfg: &ScenarioConfig,
    scenario: &Scenario,
    opts: &VerifyOptions,
    seed: u64,
) -> Check {
    const NAME: &str = "consistency";
    if cfg.irs_gamma_bar != 1.0 {
        return Check::skip(
            NAME,
            format!(
                "irs.gamma_bar = {} describes a lossy surface; the field model assumes a lossless one",
                cfg.irs_gamma_bar
            ),
        );
    }
    let convention = if opts.corrupt_phase_convention {
        ReflectionPhase::NoOffset
    } else {
        ReflectionPhase::QuarterWaveLag
    };
    let run = || -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Scenario {
            carrier,
            panel,
            radio,
            bs,
            mu,
        } = scenario;
        let scale = field_to_baseband_scale(radio, carrier);
        let mut worst = 0.0f64;
        for _ in 0..opts.trials {
            let obs = random_point_near(&mut rng, *mu, panel.center().x);
            let profile = random_profile(&mut rng, panel.element_count());
            let coeffs = build_channel_coefficients(panel, *bs, obs, radio, carrier)?;
            let y =
                end_to_end_channel_with(&coeffs, &profile, convention)? * radio.tx_power_w.sqrt();
            let e = FieldEvaluator::new(panel, &profile, *bs, radio, carrier)?.field(obs)?;
            let reference = e * scale;
            worst = worst.max((y - reference).norm() / reference.norm());
        }
        Ok(worst)
    };
    match run() {
        Ok(r) => Check::measured(NAME, r, 1e-10, "max relative amplitude error"),
        Err(e) => Check::error(NAME, e),
    }
}

fn focus_alignment(scenario: &Scenario) -> Result<f64> {
    let Scenario {
        carrier,
        panel,
        radio,
        bs,
        mu,
    } = scenario;
    let profile = focus_profile(panel, *bs, *mu, carrier)?;
    let incident = incident_field(panel, *bs, radio, carrier)?;
    let kappa = carrier.wavenumber();
    Ok(panel
        .element_positions()
        .iter()
        .zip(&incident.phases)
        .zip(profile.phases())
        .map(|((p, phi), omega)| wrap_phase(phi + omega + kappa * distance(*mu, *p)).abs())
        .fold(0.0, f64::max))
}

fn focus_optimality(scenario: &Scenario, seed: u64, trials: usize) -> Result<f64> {
    let Scenario {
        carrier,
        panel,
        radio,
        bs,
        mu,
    } = scenario;
    let focus = FieldEvaluator::new(
        panel,
        &focus_profile(panel, *bs, *mu, carrier)?,
        *bs,
        radio,
        carrier,
    )?
    .field(*mu)?
    .norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut best = 0.0f64;
    for _ in 0..trials {
        let profile = random_profile(&mut rng, panel.element_count());
        let e = FieldEvaluator::new(panel, &profile, *bs, radio, carrier)?
            .field(*mu)?
            .norm();
        best = best.max(e / focus);
    }
    Ok(best)
}

fn wide_degenerates_to_focus(scenario: &Scenario) -> Result<f64> {
    let Scenario {
        carrier,
        panel,
        bs,
        mu,
        ..
    } = scenario;
    let focus = focus_profile(panel, *bs, *mu, carrier)?;
    let wide = wide_profile(panel, *bs, &IlluminationSpec::new(*mu, 0.0)?, carrier)?;
    let offset = wide.phases()[0] - focus.phases()[0];
    Ok(wide
        .phases()
        .iter()
        .zip(focus.phases())
        .map(|(w, f)| wrap_phase(w - f - offset).abs())
        .fold(0.0, f64::max))
}

fn ls_mse(scenario: &Scenario, n_plt: usize, seed: u64, trials: usize) -> Result<f64> {
    let radio = &scenario.radio;
    let sigma2 = radio.noise_power_w();
    let normal = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("finite noise power");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x15);
    let pilots = vec![Complex64::new(radio.tx_power_w.sqrt(), 0.0); n_plt];
    let h = Complex64::from_polar(1e-6, 0.3);
    let mut sum = 0.0;
    for _ in 0..trials {
        let received: Vec<Complex64> = pilots
            .iter()
            .map(|s| h * s + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        sum += (ls_estimate(&pilots, &received)?.channel - h).norm_sqr();
    }
    let theory = sigma2 / (n_plt as f64 * radio.tx_power_w);
    Ok((sum / trials as f64 / theory - 1.0).abs())
}

/// Runs every check against the configured scenario.
pub fn cmd_verify(cfg: &ScenarioConfig, opts: &VerifyOptions) -> Result<VerifyReport> {
    let scenario = cfg.scenario()?;
    let seed = cfg.seed;
    let mut checks = vec![consistency(cfg, &scenario, opts, seed)];

    checks.push(match focus_alignment(&scenario) {
        Ok(r) => Check::measured("focus_alignment", r, 1e-9, "max phase residual (rad)"),
        Err(e) => Check::error("focus_alignment", e),
    });
    checks.push(match focus_optimality(&scenario, seed, 200) {
        Ok(r) => Check::measured(
            "focus_optimality",
            r,
            1.0,
            "best random |E_r| / focus |E_r|",
        ),
        Err(e) => Check::error("focus_optimality", e),
    });
    checks.push(match wide_degenerates_to_focus(&scenario) {
        Ok(r) => Check::measured(
            "wide_zero_width",
            r,
            1e-9,
            "max phase deviation from focus (rad)",
        ),
        Err(e) => Check::error("wide_zero_width", e),
    });
    checks.push(match ls_mse(&scenario, cfg.n_plt, seed, 20_000) {
        Ok(r) => Check::measured("ls_mse", r, 0.05, "relative MSE deviation"),
        Err(e) => Check::error("ls_mse", e),
    });
    checks.push(match cfg.overhead_params() {
        Ok(p) => {
            let mut values = vec![
                overhead_onoff_dft(&p).overhead,
                overhead_sparsity(&p).overhead,
                overhead_codebook(&p).overhead,
            ];
            if let Ok(rows) = comparison_table(&p) {
                values.extend(rows.iter().map(|r| r.value.overhead));
            }
            let outside = values
                .iter()
                .map(|v| {
                    if (0.0..=1.0).contains(v) {
                        0.0
                    } else {
                        v.abs()
                    }
                })
                .fold(0.0, f64::max);
            Check::measured(
                "overhead_range",
                outside,
                0.0,
                "largest overhead outside [0, 1]",
            )
        }
        Err(e) => Check::error("overhead_range", e),
    });
    checks.push(if cfg.blockage_diameter_m.is_none() {
        Check::skip("protocol_trace", "blockage.diameter_m not set")
    } else {
        match crate::experiments::cmd_protocol_sim(cfg, cfg.illumination_delta_m) {
            Ok(trace) => {
                let backwards = trace
                    .events
                    .windows(2)
                    .map(|w| (w[0].time_s - w[1].time_s).max(0.0))
                    .fold(0.0, f64::max);
                let exits = trace.count(EventKind::Exit);
                let ok = backwards == 0.0 && exits == 1 && (0.0..=1.0).contains(&trace.overhead_fraction);
                Check {
                    name: "protocol_trace",
                    status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
                    detail: format!(
                        "{} events, {} reconfigurations, overhead {:.3e}, max time reversal {backwards:.1e} s",
                        trace.events.len(),
                        trace.reconfiguration_count(),
                        trace.overhead_fraction
                    ),
                }
            }
            Err(e) => Check::error("protocol_trace", e),
        }
    });
    checks.push(match ScenarioConfig::parse(&cfg.to_text()) {
        Ok(echo) if echo.to_text() == cfg.to_text() => Check {
            name: "config_echo",
            status: CheckStatus::Pass,
            detail: "configuration echo re-parses to the same values".into(),
        },
        Ok(_) => Check {
            name: "config_echo",
            status: CheckStatus::Fail,
            detail: "configuration echo differs after re-parsing".into(),
        },
        Err(e) => Check::error("config_echo", e),
    });
    Ok(VerifyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_passes() {
        let report = cmd_verify(&ScenarioConfig::default(), &VerifyOptions::default()).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(
            report.get("protocol_trace").unwrap().status,
            CheckStatus::Skip
        );
        assert!(report.to_string().ends_with("RESULT: PASS\n"));
    }

    #[test]
    fn lossy_surface_skips_consistency() {
        let cfg = ScenarioConfig::parse("irs.gamma_bar = 0.8\n").unwrap();
        let report = cmd_verify(&cfg, &VerifyOptions::default()).unwrap();
        let c = report.get("consistency").unwrap();
        assert_eq!(c.status, CheckStatus::Skip);
        assert!(c.detail.contains("lossless"));
        assert!(report.passed());
    }

    #[test]
    fn corrupted_phase_convention_fails_with_order_one_error() {
        let opts = VerifyOptions {
            trials: 10,
            corrupt_phase_convention: true,
        };
        let report = cmd_verify(&ScenarioConfig::default(), &opts).unwrap();
        let c = report.get("consistency").unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert!(c.detail.contains("1.414e0"), "{}", c.detail);
        assert!(!report.passed());
    }
}
