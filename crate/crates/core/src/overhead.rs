//! Air-time overhead of CSI acquisition and IRS reconfiguration.
//!
//! Each scheme yields a raw duty cycle `α`; the reported overhead is
//! `min{α, 1}`.
//!
//! | scheme | α |
//! |---|---|
//! | ON/OFF or DFT | `Q N_plt T_sym / T_coh` |
//! | sparsity + two-timescale | `C N_pth log(N_grd) T_sym / T_coh` |
//! | codebook | `N_cbk N_plt T_sym / T_coh` |
//! | decoupled illumination + estimation | `T_loc/T_upd + (T_upd − T_loc) N_plt T_sym / (T_upd T_coh)` |

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::protocol::ProtocolTrace;

/// Logarithm base used by the sparsity-based row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::Natural => x.ln(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Two => "log2",
            LogBase::Natural => "ln",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadParams {
    pub q_elements: f64,
    pub n_plt: f64,
    pub n_pth: f64,
    pub n_grd: f64,
    pub n_cbk: f64,
    pub c_const: f64,
    pub t_sym_s: f64,
    pub t_coh_s: f64,
    pub t_loc_s: f64,
    pub t_upd_s: f64,
    pub log_base: LogBase,
}

impl Default for OverheadParams {
    /// Q = 100, N_plt = 3, N_pth = 5, N_grd = 20, N_cbk = 25, C = 1,
    /// 15 kHz subcarriers, 24 ms coherence time, T_loc at its sparsity bound
    /// and T_upd = 10 s.
    fn default() -> Self {
        let mut p = OverheadParams {
            q_elements: 100.0,
            n_plt: 3.0,
            n_pth: 5.0,
            n_grd: 20.0,
            n_cbk: 25.0,
            c_const: 1.0,
            t_sym_s: 1.0 / 15e3,
            t_coh_s: 0.024,
            t_loc_s: 0.0,
            t_upd_s: 10.0,
            log_base: LogBase::Two,
        };
        p.t_loc_s = p.localization_time_bound_s();
        p
    }
}

impl OverheadParams {
    /// `C N_pth log(N_grd) T_sym`: pilot time of sparsity-based localization.
    pub fn localization_time_bound_s(&self) -> f64 {
        self.c_const * self.n_pth * self.log_base.log(self.n_grd) * self.t_sym_s
    }

    pub fn with_log_base(self, log_base: LogBase) -> Self {
        OverheadParams { log_base, ..self }
    }
}

/// `α` before and after clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overhead {
    pub alpha: f64,
    pub overhead: f64,
}

impl Overhead {
    fn from_alpha(alpha: f64) -> Self {
        Overhead {
            alpha,
            overhead: alpha.min(1.0),
        }
    }
}

pub fn overhead_onoff_dft(p: &OverheadParams) -> Overhead {
    Overhead::from_alpha(p.q_elements * p.n_plt * p.t_sym_s / p.t_coh_s)
}

pub fn overhead_sparsity(p: &OverheadParams) -> Overhead {
    Overhead::from_alpha(p.c_const * p.n_pth * p.log_base.log(p.n_grd) * p.t_sym_s / p.t_coh_s)
}

pub fn overhead_codebook(p: &OverheadParams) -> Overhead {
    Overhead::from_alpha(p.n_cbk * p.n_plt * p.t_sym_s / p.t_coh_s)
}

pub(crate) fn proposed_alpha(t_loc: f64, t_upd: f64, n_plt: f64, t_sym: f64, t_coh: f64) -> f64 {
    t_loc / t_upd + (t_upd - t_loc) * n_plt * t_sym / (t_upd * t_coh)
}

/// Proposed scheme. Fails unless `T_loc < T_upd`.
pub fn overhead_proposed(p: &OverheadParams) -> Result<Overhead> {
    if !(p.t_loc_s < p.t_upd_s) {
        return Err(Error::invalid(
            "t_upd_s",
            format!(
                "update period {} s must exceed the localization time {} s",
                p.t_upd_s, p.t_loc_s
            ),
        ));
    }
    Ok(Overhead::from_alpha(proposed_alpha(
        p.t_loc_s, p.t_upd_s, p.n_plt, p.t_sym_s, p.t_coh_s,
    )))
}

/// Reconfiguration-only part `T_loc / T_upd`.
pub fn reconfiguration_overhead(p: &OverheadParams) -> Overhead {
    Overhead::from_alpha(p.t_loc_s / p.t_upd_s)
}

/// Trace-averaged overhead of the proposed scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageOverhead {
    /// Mean of the clamped total overhead.
    pub total: f64,
    /// Mean of the clamped `T_loc / T_upd` term.
    pub reconfiguration: f64,
}

/// Averages the proposed-scheme overhead over traces, each evaluated at its
/// own mean update period. A trace without a completed cycle counts as
/// full overhead.
pub fn average_overhead(traces: &[ProtocolTrace], p: &OverheadParams) -> Result<AverageOverhead> {
    if traces.is_empty() {
        return Err(Error::invalid("traces", "at least one trace is required"));
    }
    let (mut total, mut reconfig) = (0.0, 0.0);
    for trace in traces {
        match trace.mean_t_upd_s() {
            Some(t_upd) if t_upd > p.t_loc_s => {
                let q = OverheadParams {
                    t_upd_s: t_upd,
                    ..*p
                };
                total += overhead_proposed(&q)?.overhead;
                reconfig += reconfiguration_overhead(&q).overhead;
            }
            _ => {
                total += 1.0;
                reconfig += 1.0;
            }
        }
    }
    let n = traces.len() as f64;
    Ok(AverageOverhead {
        total: total / n,
        reconfiguration: reconfig / n,
    })
}

/// One row of a scheme comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOverhead {
    pub scheme: String,
    pub value: Overhead,
}

/// All four schemes, with the sparsity row reported for both log bases.
pub fn comparison_table(p: &OverheadParams) -> Result<Vec<SchemeOverhead>> {
    let row = |scheme: &str, value| SchemeOverhead {
        scheme: scheme.to_string(),
        value,
    };
    Ok(vec![
        row("onoff_dft", overhead_onoff_dft(p)),
        row(
            "sparsity_log2",
            overhead_sparsity(&p.with_log_base(LogBase::Two)),
        ),
        row(
            "sparsity_ln",
            overhead_sparsity(&p.with_log_base(LogBase::Natural)),
        ),
        row("codebook", overhead_codebook(p)),
        row("proposed", overhead_proposed(p)?),
        row("proposed_reconfiguration", reconfiguration_overhead(p)),
    ])
}

/// CSV with header `scheme,alpha_preclamp,overhead`.
pub fn comparison_csv(rows: &[SchemeOverhead]) -> String {
    let mut out = String::from("scheme,alpha_preclamp,overhead\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.9},{:.9}",
            r.scheme, r.value.alpha, r.value.overhead
        );
    }
    out
}
