//! Experiment drivers: SNR sweeps and maps, overhead versus required SNR,
//! minimum transmit power versus blockage size, and single protocol runs.
//!
//! Every driver takes a [`ScenarioConfig`] and returns typed rows; the
//! `*_csv` helpers render them. Parallel work is split per point or per seed
//! and collected in input order, so results do not depend on scheduling.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::design::{focus_profile, wide_profile, IlluminationSpec};
use crate::error::{Error, Result};
use crate::field::{
    gamma_max, snr_map, FieldEvaluator, GridSpec, PhaseProfile, RadioConfig, SnrGrid,
};
use crate::geometry::{incidence_angles, Axis, Point3};
use crate::overhead::{
    average_overhead, overhead_codebook, overhead_onoff_dft, overhead_sparsity, LogBase,
    OverheadParams,
};
use crate::protocol::{run_protocol, sample_crossing, BlockageArea, ProtocolTrace};
use crate::scenario::Scenario;
use crate::units::{power_to_db, watts_to_dbm};

/// Focusing profile for `delta_m == 0`, wide illumination of a
/// `Δ × Δ` square around `center` otherwise.
pub fn design_profile(scenario: &Scenario, center: Point3, delta_m: f64) -> Result<PhaseProfile> {
    if delta_m == 0.0 {
        focus_profile(&scenario.panel, scenario.bs, center, &scenario.carrier)
    } else {
        let spec = IlluminationSpec::new(center, delta_m)?;
        wide_profile(&scenario.panel, scenario.bs, &spec, &scenario.carrier)
    }
}

fn evaluator(
    scenario: &Scenario,
    cfg: &ScenarioConfig,
    profile: &PhaseProfile,
) -> Result<FieldEvaluator> {
    FieldEvaluator::with_options(
        &scenario.panel,
        profile,
        scenario.bs,
        &scenario.radio,
        &scenario.carrier,
        cfg.field,
    )
}

/// `points` evenly spaced displacements from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start_m: f64,
    pub stop_m: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn validate(&self) -> Result<()> {
        if !(self.start_m.is_finite() && self.stop_m.is_finite()) {
            return Err(Error::invalid("range", "bounds must be finite"));
        }
        if self.stop_m < self.start_m {
            return Err(Error::invalid(
                "range",
                format!("stop {} m is below start {} m", self.stop_m, self.start_m),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start_m],
            n => {
                let step = (self.stop_m - self.start_m) / (n - 1) as f64;
                (0..n).map(|k| self.start_m + k as f64 * step).collect()
            }
        }
    }
}

/// SNR along `axis` through the user position, for a profile designed
/// around that position with illumination width `delta_m`. Returns
/// `(displacement_m, snr_db)` pairs.
pub fn snr_sweep(
    cfg: &ScenarioConfig,
    axis: Axis,
    range: &SweepRange,
    delta_m: f64,
) -> Result<Vec<(f64, f64)>> {
    range.validate()?;
    let scenario = cfg.scenario()?;
    let center = cfg.mu_position;
    let profile = design_profile(&scenario, center, delta_m)?;
    let eval = evaluator(&scenario, cfg, &profile)?;
    range
        .values()
        .into_par_iter()
        .map(|d| Ok((d, power_to_db(eval.snr(center.offset(axis, d))?))))
        .collect()
}

/// CSV with header `displacement_m,snr_db`.
pub fn cmd_snr_sweep(
    cfg: &ScenarioConfig,
    axis: Axis,
    range: &SweepRange,
    delta_m: f64,
) -> Result<String> {
    let mut out = String::from("displacement_m,snr_db\n");
    for (d, snr) in snr_sweep(cfg, axis, range, delta_m)? {
        let _ = writeln!(out, "{d:.6},{snr:.6}");
    }
    Ok(out)
}

/// Square map in the plane of two axes, centered on the user position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSpec {
    pub axis_u: Axis,
    pub axis_v: Axis,
    pub half_width_m: f64,
    pub points: usize,
}

pub fn cmd_snr_map(cfg: &ScenarioConfig, map: &MapSpec, delta_m: f64) -> Result<SnrGrid> {
    if !(map.half_width_m.is_finite() && map.half_width_m >= 0.0) {
        return Err(Error::invalid("half_width_m", "must be nonnegative"));
    }
    let scenario = cfg.scenario()?;
    let profile = design_profile(&scenario, cfg.mu_position, delta_m)?;
    let grid = GridSpec::centered(
        cfg.mu_position,
        map.axis_u,
        map.axis_v,
        map.half_width_m,
        map.points,
    );
    if cfg.field == Default::default() {
        return snr_map(
            &scenario.panel,
            &profile,
            scenario.bs,
            &grid,
            &scenario.radio,
            &scenario.carrier,
        );
    }
    grid.validate()?;
    let eval = evaluator(&scenario, cfg, &profile)?;
    let snr_db = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            eval.snr(grid.point(k / grid.n_v, k % grid.n_v))
                .map(power_to_db)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SnrGrid { spec: grid, snr_db })
}

/// Width of the region around `center`, along `axis`, where the SNR stays at
/// or above `gamma_thr_linear`.
///
/// Marches outward in steps of `step_m` on each side until the first point
/// below threshold (or one that cannot be evaluated), then bisects that
/// step. Each side is capped at `max_extent_m`. Returns 0 if the center
/// itself is below threshold.
pub fn coverage_width(
    eval: &FieldEvaluator,
    center: Point3,
    axis: Axis,
    gamma_thr_linear: f64,
    step_m: f64,
    max_extent_m: f64,
) -> Result<f64> {
    if !(step_m.is_finite() && step_m > 0.0) {
        return Err(Error::invalid("step_m", "must be positive"));
    }
    let covered =
        |d: f64| matches!(eval.snr(center.offset(axis, d)), Ok(s) if s >= gamma_thr_linear);
    if !covered(0.0) {
        return Ok(0.0);
    }
    let side = |sign: f64| {
        let mut inside = 0.0;
        loop {
            let next = inside + step_m;
            if next > max_extent_m {
                return max_extent_m;
            }
            if !covered(sign * next) {
                let (mut lo, mut hi) = (inside, next);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if covered(sign * mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            inside = next;
        }
    };
    Ok(side(1.0) + side(-1.0))
}

/// Lowest value of `f` over the points, evaluated in parallel.
fn min_over<F>(points: &[Point3], f: F) -> Result<f64>
where
    F: Fn(Point3) -> Result<f64> + Sync,
{
    let values = points
        .par_iter()
        .map(|p| f(*p))
        .collect::<Result<Vec<_>>>()?;
    values
        .into_iter()
        .reduce(f64::min)
        .ok_or_else(|| Error::invalid("grid", "the disc grid is empty"))
}

/// Highest SNR achievable at every point of the disc by a profile focused
/// on that point: the minimum of the per-point `γ_max` over the disc grid.
pub fn max_min_snr(
    scenario: &Scenario,
    blockage: &BlockageArea,
    grid_spacing_m: f64,
) -> Result<f64> {
    let points = blockage.hex_grid(grid_spacing_m)?;
    min_over(&points, |p| {
        Ok(gamma_max(
            &scenario.panel,
            scenario.bs,
            p,
            &scenario.radio,
            &scenario.carrier,
        ))
    })
}

/// Benchmark overheads, which depend on the configuration only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmarks {
    pub onoff_dft: f64,
    pub sparsity_log2: f64,
    pub sparsity_ln: f64,
    pub codebook: f64,
}

impl Benchmarks {
    pub fn new(p: &OverheadParams) -> Self {
        Benchmarks {
            onoff_dft: overhead_onoff_dft(p).overhead,
            sparsity_log2: overhead_sparsity(&p.with_log_base(LogBase::Two)).overhead,
            sparsity_ln: overhead_sparsity(&p.with_log_base(LogBase::Natural)).overhead,
            codebook: overhead_codebook(p).overhead,
        }
    }
}

/// Monte Carlo result for one `(γ_thr, Δ)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadRow {
    pub gamma_thr_db: f64,
    pub delta_m: f64,
    pub n_seeds: usize,
    /// Mean over seeds of each crossing's mean update period; `None` if no
    /// crossing completed a cycle.
    pub mean_t_upd_s: Option<f64>,
    pub mean_crossing_s: f64,
    pub reconfiguration: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadSweep {
    pub rows: Vec<OverheadRow>,
    pub benchmarks: Benchmarks,
    /// Minimum over the disc of the per-point `γ_max`, in dB.
    pub max_min_snr_db: f64,
}

/// Runs `n_seeds` random crossings of the blockage disc for every
/// `(γ_thr, Δ)` pair. Crossing `k` uses seed `cfg.seed + k` for both its
/// chord and its estimation noise, so every pair sees the same crossings.
pub fn overhead_vs_snr(
    cfg: &ScenarioConfig,
    gamma_thr_db: &[f64],
    deltas_m: &[f64],
    n_seeds: usize,
) -> Result<OverheadSweep> {
    if gamma_thr_db.is_empty() || deltas_m.is_empty() {
        return Err(Error::invalid(
            "lists",
            "threshold and Δ lists must be nonempty",
        ));
    }
    if n_seeds == 0 {
        return Err(Error::invalid("n_seeds", "at least one seed is required"));
    }
    let scenario = cfg.scenario()?;
    let blockage = cfg.blockage()?;
    let params = cfg.overhead_params()?;
    let segments = (0..n_seeds)
        .map(|k| {
            sample_crossing(
                &blockage,
                cfg.speed_m_per_s,
                cfg.seed.wrapping_add(k as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_crossing_s = segments.iter().map(|s| s.duration_s()).sum::<f64>() / n_seeds as f64;
    let mut rows = Vec::with_capacity(gamma_thr_db.len() * deltas_m.len());
    for &g_db in gamma_thr_db {
        for &delta in deltas_m {
            let mut protocol = cfg.protocol_config()?;
            protocol.gamma_thr_linear = crate::units::db_to_linear(g_db);
            let traces = segments
                .par_iter()
                .enumerate()
                .map(|(k, seg)| {
                    let mut pc = protocol;
                    pc.rng_seed = cfg.seed.wrapping_add(k as u64);
                    run_protocol(&scenario, delta, &pc, seg)
                })
                .collect::<Result<Vec<ProtocolTrace>>>()?;
            let avg = average_overhead(&traces, &params)?;
            let means: Vec<f64> = traces.iter().filter_map(|t| t.mean_t_upd_s()).collect();
            rows.push(OverheadRow {
                gamma_thr_db: g_db,
                delta_m: delta,
                n_seeds,
                mean_t_upd_s: (!means.is_empty())
                    .then(|| means.iter().sum::<f64>() / means.len() as f64),
                mean_crossing_s,
                reconfiguration: avg.reconfiguration,
                total: avg.total,
            });
        }
    }
    let spacing = cfg.disc_grid_spacing_m()?;
    Ok(OverheadSweep {
        rows,
        benchmarks: Benchmarks::new(&params),
        max_min_snr_db: power_to_db(max_min_snr(&scenario, &blockage, spacing)?),
    })
}

/// CSV with one row per `(γ_thr, Δ)` pair and the benchmark overheads
/// repeated on every row.
pub fn overhead_sweep_csv(sweep: &OverheadSweep) -> String {
    let mut out = String::from(
        "gamma_thr_db,delta_m,n_seeds,mean_t_upd_s,reconfiguration_overhead,proposed_overhead,\
         onoff_dft,sparsity_log2,sparsity_ln,codebook,max_min_snr_db\n",
    );
    let b = sweep.benchmarks;
    for r in &sweep.rows {
        let t_upd = r
            .mean_t_upd_s
            .map_or_else(|| "nan".to_string(), |t| format!("{t:.6}"));
        let _ = writeln!(
            out,
            "{:.6},{:.6},{},{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9},{:.6}",
            r.gamma_thr_db,
            r.delta_m,
            r.n_seeds,
            t_upd,
            r.reconfiguration,
            r.total,
            b.onoff_dft,
            b.sparsity_log2,
            b.sparsity_ln,
            b.codebook,
            sweep.max_min_snr_db
        );
    }
    out
}

pub fn cmd_overhead_vs_snr(
    cfg: &ScenarioConfig,
    gamma_thr_db: &[f64],
    deltas_m: &[f64],
    n_seeds: usize,
) -> Result<String> {
    Ok(overhead_sweep_csv(&overhead_vs_snr(
        cfg,
        gamma_thr_db,
        deltas_m,
        n_seeds,
    )?))
}

/// Illumination width used for each blockage diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    Fixed(f64),
    /// Δ equal to the blockage diameter.
    Full,
}

impl DeltaPolicy {
    pub fn delta_m(self, d_blk_m: f64) -> f64 {
        match self {
            DeltaPolicy::Fixed(d) => d,
            DeltaPolicy::Full => d_blk_m,
        }
    }

    pub fn label(self) -> String {
        match self {
            DeltaPolicy::Fixed(d) => format!("delta_{d}m"),
            DeltaPolicy::Full => "delta_full".to_string(),
        }
    }
}

impl FromStr for DeltaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(DeltaPolicy::Full);
        }
        match s.parse::<f64>() {
            Ok(d) if d.is_finite() && d >= 0.0 => Ok(DeltaPolicy::Fixed(d)),
            _ => Err(Error::invalid(
                "delta_policy",
                format!("expected `full` or a nonnegative width, got `{s}`"),
            )),
        }
    }
}

/// Minimum transmit powers for one blockage diameter, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct MinPowerRow {
    pub d_blk_m: f64,
    /// Lower bound from spreading the intercepted power uniformly over the
    /// disc's cross-section normal to the panel-to-disc direction.
    pub uniform_bound_w: f64,
    /// The same estimate using the flat disc area `π D²/4`. Not a bound when
    /// the disc is viewed obliquely.
    pub flat_area_bound_w: f64,
    /// Power if the panel could focus on every point of the disc at once.
    pub focus_bound_w: f64,
    /// One entry per policy, in the order given.
    pub policy_w: Vec<f64>,
}

fn required_power(gamma_thr: f64, snr_per_watt: f64, at: &str) -> Result<f64> {
    if snr_per_watt > 0.0 {
        Ok(gamma_thr / snr_per_watt)
    } else {
        Err(Error::ZeroSnr(at.to_string()))
    }
}

/// Minimum `P_tx` so that every disc point reaches the configured threshold.
///
/// The SNR is linear in `P_tx`, so each entry is `γ_thr / γ_min(1 W)` where
/// `γ_min` is the lowest SNR over the hexagonal disc grid. Profiles are
/// designed around the disc center.
pub fn min_power(
    cfg: &ScenarioConfig,
    d_blk_m: &[f64],
    policies: &[DeltaPolicy],
) -> Result<Vec<MinPowerRow>> {
    if d_blk_m.is_empty() {
        return Err(Error::invalid("d_blk_list", "must be nonempty"));
    }
    let mut scenario = cfg.scenario()?;
    scenario.radio = scenario.radio.with_tx_power_w(1.0);
    let radio: RadioConfig = scenario.radio;
    let spacing = cfg.disc_grid_spacing_m()?;
    let gamma_thr = cfg.gamma_thr_linear;
    let panel = &scenario.panel;
    let incidence = incidence_angles(scenario.bs, panel)?;
    let lambda = scenario.carrier.wavelength_m();
    let d_i = scenario.bs_distance_m();
    d_blk_m
        .iter()
        .map(|&d| {
            let blockage = BlockageArea::new(cfg.blockage_center, d)?;
            let points = blockage.hex_grid(spacing)?;
            let a_x = incidence.a_x();
            if !(a_x > 0.0) {
                return Err(Error::ZeroSnr(
                    "panel seen edge-on from the base station".into(),
                ));
            }
            let four_pi_di = 4.0 * std::f64::consts::PI * d_i;
            let flat_area_bound_w =
                gamma_thr * radio.noise_power_w() * blockage.area_m2() * four_pi_di * four_pi_di
                    / (radio.tx_directivity
                        * radio.rx_directivity
                        * lambda
                        * lambda
                        * panel.side_y_m()
                        * panel.side_z_m()
                        * a_x);
            // The reflected beam crosses the disc obliquely; spreading it over
            // the disc needs only the disc's cross-section normal to the ray.
            let to_disc = blockage.center() - panel.center();
            let projection = (to_disc.z / to_disc.norm()).abs();
            let uniform_bound_w = flat_area_bound_w * projection;
            let focus_min = max_min_snr(&scenario, &blockage, spacing)?;
            let focus_bound_w = required_power(gamma_thr, focus_min, "every disc point")?;
            let policy_w = policies
                .iter()
                .map(|policy| {
                    let profile = design_profile(&scenario, blockage.center(), policy.delta_m(d))?;
                    let eval = evaluator(&scenario, cfg, &profile)?;
                    let worst = min_over(&points, |p| eval.snr(p))?;
                    required_power(
                        gamma_thr,
                        worst,
                        &format!("a disc point for D_blk = {d} m, {}", policy.label()),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MinPowerRow {
                d_blk_m: d,
                uniform_bound_w,
                flat_area_bound_w,
                focus_bound_w,
                policy_w,
            })
        })
        .collect()
}

/// CSV with powers in dBm:
/// `d_blk_m,uniform_bound_dbm,flat_area_bound_dbm,focus_bound_dbm,p_<policy>_dbm...`.
pub fn min_power_csv(rows: &[MinPowerRow], policies: &[DeltaPolicy]) -> String {
    let mut out = String::from("d_blk_m,uniform_bound_dbm,flat_area_bound_dbm,focus_bound_dbm");
    for p in policies {
        let _ = write!(out, ",p_{}_dbm", p.label());
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{:.6},{:.6},{:.6},{:.6}",
            r.d_blk_m,
            watts_to_dbm(r.uniform_bound_w),
            watts_to_dbm(r.flat_area_bound_w),
            watts_to_dbm(r.focus_bound_w)
        );
        for w in &r.policy_w {
            let _ = write!(out, ",{:.6}", watts_to_dbm(*w));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_min_power(
    cfg: &ScenarioConfig,
    d_blk_m: &[f64],
    policies: &[DeltaPolicy],
) -> Result<String> {
    Ok(min_power_csv(&min_power(cfg, d_blk_m, policies)?, policies))
}

/// One crossing of the blockage disc with the configured seed.
pub fn cmd_protocol_sim(cfg: &ScenarioConfig, delta_m: f64) -> Result<ProtocolTrace> {
    let scenario = cfg.scenario()?;
    let blockage = cfg.blockage()?;
    let segment = sample_crossing(&blockage, cfg.speed_m_per_s, cfg.seed)?;
    let mut protocol = cfg.protocol_config()?;
    protocol.rng_seed = cfg.seed;
    run_protocol(&scenario, delta_m, &protocol, &segment)
}
