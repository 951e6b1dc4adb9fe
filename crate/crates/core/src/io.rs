//! Text and image artifacts: CSV tables, PGM heatmaps and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::field::{PhaseProfile, SnrGrid};
use crate::geometry::IrsPanel;

/// Dynamic range kept in heatmaps; darker values are clipped to black.
pub const HEATMAP_RANGE_DB: f64 = 60.0;

/// CSV with header `u_m,v_m,snr_db`, one row per grid point in storage order.
pub fn snr_grid_csv(grid: &SnrGrid) -> String {
    let (n_u, n_v) = grid.dims();
    let mut out = String::from("u_m,v_m,snr_db\n");
    for i in 0..n_u {
        for j in 0..n_v {
            let _ = writeln!(
                out,
                "{:.6},{:.6},{:.6}",
                grid.spec.u(i),
                grid.spec.v(j),
                grid.get(i, j)
            );
        }
    }
    out
}

/// Heatmap of an SNR grid as 8-bit binary PGM plus the text of its sidecar
/// range file.
///
/// Columns run along `u`, rows along `v` with the largest `v` on top. Gray
/// level 255 is the grid maximum; levels scale linearly in dB down to
/// `max − 60 dB`.
pub fn snr_grid_pgm(grid: &SnrGrid) -> (Vec<u8>, String) {
    let (n_u, n_v) = grid.dims();
    let max = grid.max_db().unwrap_or(0.0);
    let floor = grid.min_db().unwrap_or(0.0).max(max - HEATMAP_RANGE_DB);
    let span = max - floor;
    let mut bytes = format!("P5\n{n_u} {n_v}\n255\n").into_bytes();
    bytes.reserve(n_u * n_v);
    for row in 0..n_v {
        let j = n_v - 1 - row;
        for i in 0..n_u {
            let level = if span > 0.0 {
                ((grid.get(i, j) - floor) / span * 255.0)
                    .round()
                    .clamp(0.0, 255.0) as u8
            } else {
                0
            };
            bytes.push(level);
        }
    }
    let sidecar = format!(
        "black_db = {floor:.6}\nwhite_db = {max:.6}\nu_axis = {}\nv_axis = {}\nu_min_m = {:.6}\nu_max_m = {:.6}\nv_min_m = {:.6}\nv_max_m = {:.6}\n",
        grid.spec.axis_u.name(),
        grid.spec.axis_v.name(),
        grid.spec.u(0),
        grid.spec.u(n_u.saturating_sub(1)),
        grid.spec.v(0),
        grid.spec.v(n_v.saturating_sub(1)),
    );
    (bytes, sidecar)
}

/// CSV with header `element_index,y_m,z_m,phase_rad` (offsets from the panel
/// center).
pub fn profile_csv(panel: &IrsPanel, profile: &PhaseProfile) -> Result<String> {
    profile.check_len(panel)?;
    let mut out = String::from("element_index,y_m,z_m,phase_rad\n");
    for (q, ((y, z), phase)) in panel
        .element_offsets()
        .iter()
        .zip(profile.phases())
        .enumerate()
    {
        let _ = writeln!(out, "{q},{y:.6},{z:.6},{phase:.9}");
    }
    Ok(out)
}

/// Manifest text: tool version, command, seed and the full config echo.
pub fn manifest(version: &str, command: &str, cfg: &ScenarioConfig) -> String {
    format!(
        "tool = irs-illum {version}\ncommand = {command}\nseed = {}\n\n# effective configuration\n{}",
        cfg.seed,
        cfg.to_text()
    )
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_artifact(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}
