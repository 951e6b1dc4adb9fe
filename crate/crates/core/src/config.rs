//! Scenario files: flat `key = value` text.
//!
//! Blank lines and `#` comments are ignored. Keys are namespaced
//! (`radio.tx_power_dbm`); unknown or repeated keys are errors. Keys ending
//! in `_db`/`_dbm` are converted to linear units once, at parse time.
//! Positions are three comma-separated numbers, optionally in brackets.
//!
//! Every key except `blockage.diameter_m` has a default; see
//! [`ScenarioConfig::default`] and [`ScenarioConfig::to_text`] for the full
//! list.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{AmplitudeModel, FieldOptions, RadioConfig, Summation};
use crate::geometry::{CarrierConfig, IrsPanel, Point3};
use crate::overhead::{LogBase, OverheadParams};
use crate::protocol::{BlockageArea, ProtocolConfig, SnrTracking};
use crate::scenario::{Scenario, REFERENCE_BS, REFERENCE_IRS, REFERENCE_MU};
use crate::units::{db_to_linear, dbm_to_watts, power_to_db, watts_to_dbm};

/// Element spacing, either absolute or in wavelengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Meters(f64),
    Wavelengths(f64),
}

impl Spacing {
    fn meters(self, carrier: &CarrierConfig) -> f64 {
        match self {
            Spacing::Meters(m) => m,
            Spacing::Wavelengths(w) => w * carrier.wavelength_m(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub frequency_hz: f64,
    pub bs_position: Point3,
    pub irs_center: Point3,
    pub irs_side_y_m: f64,
    pub irs_side_z_m: f64,
    pub irs_spacing_y: Spacing,
    pub irs_spacing_z: Spacing,
    pub irs_tau: f64,
    pub irs_gamma_bar: f64,
    pub mu_position: Point3,
    pub radio: RadioConfig,
    pub field: FieldOptions,
    pub blockage_center: Point3,
    pub blockage_diameter_m: Option<f64>,
    pub illumination_delta_m: f64,
    pub gamma_thr_linear: f64,
    pub speed_m_per_s: f64,
    pub t_loc_s: Option<f64>,
    pub t_irs_s: f64,
    pub t_coh_s: f64,
    pub time_step_s: f64,
    pub delta_inflation_m: f64,
    pub tracking: SnrTracking,
    pub n_plt: usize,
    pub n_pth: f64,
    pub n_grd: f64,
    pub n_cbk: f64,
    pub c_const: f64,
    pub subcarrier_spacing_hz: f64,
    pub log_base: LogBase,
    pub t_upd_s: f64,
    pub grid_spacing_m: Option<f64>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            frequency_hz: 3e9,
            bs_position: REFERENCE_BS,
            irs_center: REFERENCE_IRS,
            irs_side_y_m: 0.5,
            irs_side_z_m: 0.5,
            irs_spacing_y: Spacing::Wavelengths(0.5),
            irs_spacing_z: Spacing::Wavelengths(0.5),
            irs_tau: 1.0,
            irs_gamma_bar: 1.0,
            mu_position: REFERENCE_MU,
            radio: RadioConfig::default(),
            field: FieldOptions::default(),
            blockage_center: REFERENCE_MU,
            blockage_diameter_m: None,
            illumination_delta_m: 0.0,
            gamma_thr_linear: 10.0,
            speed_m_per_s: 0.75,
            t_loc_s: None,
            t_irs_s: 0.0,
            t_coh_s: 0.024,
            time_step_s: 0.002,
            delta_inflation_m: 0.0,
            tracking: SnrTracking::Noiseless,
            n_plt: 3,
            n_pth: 5.0,
            n_grd: 20.0,
            n_cbk: 25.0,
            c_const: 1.0,
            subcarrier_spacing_hz: 15e3,
            log_base: LogBase::Two,
            t_upd_s: 10.0,
            grid_spacing_m: None,
            seed: 0,
        }
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config {
            line,
            message: format!("`{key}` expects a finite number, got `{value}`"),
        })
}

fn parse_point(line: usize, key: &str, value: &str) -> Result<Point3> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config {
            line,
            message: format!("`{key}` expects three comma-separated coordinates, got `{value}`"),
        });
    }
    Ok(Point3::new(
        parse_f64(line, key, parts[0])?,
        parse_f64(line, key, parts[1])?,
        parse_f64(line, key, parts[2])?,
    ))
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64> {
    value.trim().parse::<u64>().map_err(|_| Error::Config {
        line,
        message: format!("`{key}` expects a nonnegative integer, got `{value}`"),
    })
}

fn fmt_point(p: Point3) -> String {
    format!("{}, {}, {}", p.x, p.y, p.z)
}

impl ScenarioConfig {
    /// Parses a scenario file. Keys that are absent keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(line, key, value)?;
        }
        let spacing_conflict = |a: &str, b: &str| seen.contains(a) && seen.contains(b);
        if spacing_conflict("irs.spacing_y_m", "irs.spacing_y_wl")
            || spacing_conflict("irs.spacing_z_m", "irs.spacing_z_wl")
        {
            return Err(Error::Config {
                line: 0,
                message: "give each IRS spacing either in meters or in wavelengths, not both"
                    .into(),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let num = || parse_f64(line, key, value);
        match key {
            "carrier.frequency_hz" => self.frequency_hz = num()?,
            "bs.position_m" => self.bs_position = parse_point(line, key, value)?,
            "irs.center_m" => self.irs_center = parse_point(line, key, value)?,
            "irs.side_y_m" => self.irs_side_y_m = num()?,
            "irs.side_z_m" => self.irs_side_z_m = num()?,
            "irs.spacing_y_m" => self.irs_spacing_y = Spacing::Meters(num()?),
            "irs.spacing_z_m" => self.irs_spacing_z = Spacing::Meters(num()?),
            "irs.spacing_y_wl" => self.irs_spacing_y = Spacing::Wavelengths(num()?),
            "irs.spacing_z_wl" => self.irs_spacing_z = Spacing::Wavelengths(num()?),
            "irs.tau" => self.irs_tau = num()?,
            "irs.gamma_bar" => self.irs_gamma_bar = num()?,
            "mu.position_m" => self.mu_position = parse_point(line, key, value)?,
            "radio.tx_power_dbm" => self.radio.tx_power_w = dbm_to_watts(num()?),
            "radio.tx_directivity_db" => self.radio.tx_directivity = db_to_linear(num()?),
            "radio.rx_directivity_db" => self.radio.rx_directivity = db_to_linear(num()?),
            "radio.noise_density_dbm_per_hz" => {
                self.radio.noise_density_w_per_hz = dbm_to_watts(num()?)
            }
            "radio.bandwidth_hz" => self.radio.bandwidth_hz = num()?,
            "radio.noise_figure_db" => self.radio.noise_figure = db_to_linear(num()?),
            "radio.impedance_ohm" => self.radio.impedance_ohm = num()?,
            "field.amplitude" => {
                self.field.amplitude = match value {
                    "center" => AmplitudeModel::CenterDistance,
                    "per_element" => AmplitudeModel::PerElement,
                    _ => return Err(bad_choice(line, key, value, "center, per_element")),
                }
            }
            "field.summation" => {
                self.field.summation = match value {
                    "plain" => Summation::Plain,
                    "compensated" => Summation::Compensated,
                    _ => return Err(bad_choice(line, key, value, "plain, compensated")),
                }
            }
            "blockage.center_m" => self.blockage_center = parse_point(line, key, value)?,
            "blockage.diameter_m" => self.blockage_diameter_m = Some(num()?),
            "illumination.delta_m" => self.illumination_delta_m = num()?,
            "protocol.gamma_thr_db" => self.gamma_thr_linear = db_to_linear(num()?),
            "protocol.speed_m_per_s" => self.speed_m_per_s = num()?,
            "protocol.t_loc_s" => self.t_loc_s = Some(num()?),
            "protocol.t_irs_s" => self.t_irs_s = num()?,
            "protocol.t_coh_s" => self.t_coh_s = num()?,
            "protocol.time_step_s" => self.time_step_s = num()?,
            "protocol.delta_inflation_m" => self.delta_inflation_m = num()?,
            "protocol.tracking" => {
                self.tracking = if value == "noiseless" {
                    SnrTracking::Noiseless
                } else if let Some(n) = value.strip_prefix("window:") {
                    SnrTracking::EstimateWindow {
                        window: parse_u64(line, key, n)? as usize,
                    }
                } else {
                    return Err(bad_choice(line, key, value, "noiseless, window:<N>"));
                }
            }
            "overhead.n_plt" => self.n_plt = parse_u64(line, key, value)? as usize,
            "overhead.n_pth" => self.n_pth = num()?,
            "overhead.n_grd" => self.n_grd = num()?,
            "overhead.n_cbk" => self.n_cbk = num()?,
            "overhead.c_const" => self.c_const = num()?,
            "overhead.subcarrier_spacing_hz" => self.subcarrier_spacing_hz = num()?,
            "overhead.log_base" => {
                self.log_base = match value {
                    "2" => LogBase::Two,
                    "e" => LogBase::Natural,
                    _ => return Err(bad_choice(line, key, value, "2, e")),
                }
            }
            "overhead.t_upd_s" => self.t_upd_s = num()?,
            "grid.spacing_m" => self.grid_spacing_m = Some(num()?),
            "run.seed" => self.seed = parse_u64(line, key, value)?,
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
        Ok(())
    }

    /// Checks that every derived object can be built.
    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario()?;
        scenario.radio.validate()?;
        self.protocol_config()?.validate()?;
        if !(self.speed_m_per_s.is_finite() && self.speed_m_per_s > 0.0) {
            return Err(Error::invalid("protocol.speed_m_per_s", "must be positive"));
        }
        if !(self.irs_gamma_bar.is_finite() && self.irs_gamma_bar > 0.0) {
            return Err(Error::invalid("irs.gamma_bar", "must be positive"));
        }
        if !(self.illumination_delta_m >= 0.0) {
            return Err(Error::invalid(
                "illumination.delta_m",
                "must be nonnegative",
            ));
        }
        if let Some(d) = self.blockage_diameter_m {
            if !(d > 0.0) {
                return Err(Error::invalid("blockage.diameter_m", "must be positive"));
            }
        }
        if let Some(s) = self.grid_spacing_m {
            if !(s > 0.0) {
                return Err(Error::invalid("grid.spacing_m", "must be positive"));
            }
        }
        for (name, v) in [
            ("overhead.n_pth", self.n_pth),
            ("overhead.n_grd", self.n_grd),
            ("overhead.c_const", self.c_const),
            ("overhead.subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("overhead.t_upd_s", self.t_upd_s),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if !(self.n_cbk >= 0.0) {
            return Err(Error::invalid("overhead.n_cbk", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn carrier(&self) -> Result<CarrierConfig> {
        CarrierConfig::new(self.frequency_hz)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let carrier = self.carrier()?;
        let panel = IrsPanel::new(
            self.irs_center,
            self.irs_side_y_m,
            self.irs_side_z_m,
            self.irs_spacing_y.meters(&carrier),
            self.irs_spacing_z.meters(&carrier),
            self.irs_tau,
        )?;
        self.radio.validate()?;
        Ok(Scenario {
            carrier,
            panel,
            radio: self.radio,
            bs: self.bs_position,
            mu: self.mu_position,
        })
    }

    pub fn t_sym_s(&self) -> f64 {
        1.0 / self.subcarrier_spacing_hz
    }

    /// Localization time: the configured value, or the sparsity-based pilot
    /// bound `C N_pth log(N_grd) T_sym`.
    pub fn t_loc_s(&self) -> f64 {
        self.t_loc_s.unwrap_or_else(|| {
            self.c_const * self.n_pth * self.log_base.log(self.n_grd) * self.t_sym_s()
        })
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        Ok(ProtocolConfig {
            gamma_thr_linear: self.gamma_thr_linear,
            t_loc_s: self.t_loc_s(),
            t_irs_s: self.t_irs_s,
            t_coh_s: self.t_coh_s,
            n_plt: self.n_plt,
            t_sym_s: self.t_sym_s(),
            time_step_s: self.time_step_s,
            rng_seed: self.seed,
            delta_inflation_m: self.delta_inflation_m,
            tracking: self.tracking,
        })
    }

    pub fn overhead_params(&self) -> Result<OverheadParams> {
        let q = self.scenario()?.panel.element_count() as f64;
        Ok(OverheadParams {
            q_elements: q,
            n_plt: self.n_plt as f64,
            n_pth: self.n_pth,
            n_grd: self.n_grd,
            n_cbk: self.n_cbk,
            c_const: self.c_const,
            t_sym_s: self.t_sym_s(),
            t_coh_s: self.t_coh_s,
            t_loc_s: self.t_loc_s(),
            t_upd_s: self.t_upd_s,
            log_base: self.log_base,
        })
    }

    /// The blockage disc. The diameter has no default and must be given.
    pub fn blockage(&self) -> Result<BlockageArea> {
        let d = self.blockage_diameter_m.ok_or_else(|| {
            Error::invalid(
                "blockage.diameter_m",
                "required for this command; no default diameter exists",
            )
        })?;
        BlockageArea::new(self.blockage_center, d)
    }

    /// Spacing of the hexagonal disc grid; defaults to λ/4.
    pub fn disc_grid_spacing_m(&self) -> Result<f64> {
        Ok(match self.grid_spacing_m {
            Some(s) => s,
            None => self.carrier()?.wavelength_m() / 4.0,
        })
    }

    /// Canonical listing of every key, suitable for re-parsing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("carrier.frequency_hz", self.frequency_hz.to_string());
        put("bs.position_m", fmt_point(self.bs_position));
        put("irs.center_m", fmt_point(self.irs_center));
        put("irs.side_y_m", self.irs_side_y_m.to_string());
        put("irs.side_z_m", self.irs_side_z_m.to_string());
        for (axis, s) in [("y", self.irs_spacing_y), ("z", self.irs_spacing_z)] {
            match s {
                Spacing::Meters(m) => put(&format!("irs.spacing_{axis}_m"), m.to_string()),
                Spacing::Wavelengths(w) => put(&format!("irs.spacing_{axis}_wl"), w.to_string()),
            }
        }
        put("irs.tau", self.irs_tau.to_string());
        put("irs.gamma_bar", self.irs_gamma_bar.to_string());
        put("mu.position_m", fmt_point(self.mu_position));
        put(
            "radio.tx_power_dbm",
            watts_to_dbm(self.radio.tx_power_w).to_string(),
        );
        put(
            "radio.tx_directivity_db",
            power_to_db(self.radio.tx_directivity).to_string(),
        );
        put(
            "radio.rx_directivity_db",
            power_to_db(self.radio.rx_directivity).to_string(),
        );
        put(
            "radio.noise_density_dbm_per_hz",
            watts_to_dbm(self.radio.noise_density_w_per_hz).to_string(),
        );
        put("radio.bandwidth_hz", self.radio.bandwidth_hz.to_string());
        put(
            "radio.noise_figure_db",
            power_to_db(self.radio.noise_figure).to_string(),
        );
        put("radio.impedance_ohm", self.radio.impedance_ohm.to_string());
        put(
            "field.amplitude",
            match self.field.amplitude {
                AmplitudeModel::CenterDistance => "center",
                AmplitudeModel::PerElement => "per_element",
            }
            .into(),
        );
        put(
            "field.summation",
            match self.field.summation {
                Summation::Plain => "plain",
                Summation::Compensated => "compensated",
            }
            .into(),
        );
        put("blockage.center_m", fmt_point(self.blockage_center));
        if let Some(d) = self.blockage_diameter_m {
            put("blockage.diameter_m", d.to_string());
        }
        put(
            "illumination.delta_m",
            self.illumination_delta_m.to_string(),
        );
        put(
            "protocol.gamma_thr_db",
            power_to_db(self.gamma_thr_linear).to_string(),
        );
        put("protocol.speed_m_per_s", self.speed_m_per_s.to_string());
        put("protocol.t_loc_s", self.t_loc_s().to_string());
        put("protocol.t_irs_s", self.t_irs_s.to_string());
        put("protocol.t_coh_s", self.t_coh_s.to_string());
        put("protocol.time_step_s", self.time_step_s.to_string());
        put(
            "protocol.delta_inflation_m",
            self.delta_inflation_m.to_string(),
        );
        put(
            "protocol.tracking",
            match self.tracking {
                SnrTracking::Noiseless => "noiseless".into(),
                SnrTracking::EstimateWindow { window } => format!("window:{window}"),
            },
        );
        put("overhead.n_plt", self.n_plt.to_string());
        put("overhead.n_pth", self.n_pth.to_string());
        put("overhead.n_grd", self.n_grd.to_string());
        put("overhead.n_cbk", self.n_cbk.to_string());
        put("overhead.c_const", self.c_const.to_string());
        put(
            "overhead.subcarrier_spacing_hz",
            self.subcarrier_spacing_hz.to_string(),
        );
        put(
            "overhead.log_base",
            match self.log_base {
                LogBase::Two => "2",
                LogBase::Natural => "e",
            }
            .into(),
        );
        put("overhead.t_upd_s", self.t_upd_s.to_string());
        if let Some(s) = self.grid_spacing_m {
            put("grid.spacing_m", s.to_string());
        }
        put("run.seed", self.seed.to_string());
        out
    }
}

fn bad_choice(line: usize, key: &str, value: &str, choices: &str) -> Error {
    Error::Config {
        line,
        message: format!("`{key}` must be one of {choices}; got `{value}`"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_defaults() {
        let cfg = ScenarioConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.panel.element_count(), 100);
        assert!((cfg.t_loc_s() - 1.4406e-3).abs() < 1e-7);
        assert!(cfg.blockage().is_err());
    }

    #[test]
    fn db_keys_are_converted() {
        let cfg =
            ScenarioConfig::parse("radio.tx_power_dbm = 20\nprotocol.gamma_thr_db = 3\n").unwrap();
        assert!((cfg.radio.tx_power_w - 0.1).abs() < 1e-15);
        assert!((cfg.gamma_thr_linear - 1.9952623149688795).abs() < 1e-12);
    }

    #[test]
    fn positions_and_choices_parse() {
        let text = "bs.position_m = [1, 2, 3]\nmu.position_m = 4,5,6 # trailing comment\n\
                    field.amplitude = per_element\nprotocol.tracking = window:4\noverhead.log_base = e\n\
                    blockage.diameter_m = 12\n";
        let cfg = ScenarioConfig::parse(text).unwrap();
        assert_eq!(cfg.bs_position, Point3::new(1.0, 2.0, 3.0));
        assert_eq!(cfg.mu_position, Point3::new(4.0, 5.0, 6.0));
        assert_eq!(cfg.field.amplitude, AmplitudeModel::PerElement);
        assert_eq!(cfg.tracking, SnrTracking::EstimateWindow { window: 4 });
        assert_eq!(cfg.log_base, LogBase::Natural);
        assert_eq!(cfg.blockage().unwrap().diameter_m(), 12.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ScenarioConfig::parse("irs.tau = 1\nirs.colour = red\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = ScenarioConfig::parse("irs.tau = 1\nirs.tau = 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = ScenarioConfig::parse("just words\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }));
        assert!(ScenarioConfig::parse("bs.position_m = 1,2\n").is_err());
        assert!(ScenarioConfig::parse("radio.bandwidth_hz = fast\n").is_err());
        assert!(ScenarioConfig::parse("irs.spacing_y_m = 0.05\nirs.spacing_y_wl = 0.5\n").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ScenarioConfig::parse("irs.tau = 2\n").is_err());
        assert!(ScenarioConfig::parse("blockage.diameter_m = -3\n").is_err());
        assert!(ScenarioConfig::parse("protocol.time_step_s = 0.1\n").is_err());
        assert!(ScenarioConfig::parse("carrier.frequency_hz = 0\n").is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "blockage.diameter_m = 20\nirs.spacing_z_m = 0.04\nradio.tx_power_dbm = 7.5\n\
                    protocol.tracking = window:3\ngrid.spacing_m = 0.1\nrun.seed = 9\n";
        let cfg = ScenarioConfig::parse(text).unwrap();
        let echoed = ScenarioConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(echoed.to_text(), cfg.to_text());
        assert_eq!(echoed.scenario().unwrap(), cfg.scenario().unwrap());
        assert!((echoed.radio.tx_power_w - cfg.radio.tx_power_w).abs() < 1e-15);
    }
}
