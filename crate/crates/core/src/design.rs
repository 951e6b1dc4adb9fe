//! Phase-shift profiles.
//!
//! Every design here is a closed-form function of positions (or directions)
//! only. None of them needs channel state.
//!
//! * [`focus_profile`]: co-phases all element contributions at one point.
//! * [`wide_profile`]: maps each element onto one point of a `Δ × Δ` square
//!   and focuses it there, minus the element-independent reference path
//!   from that point to the panel center. `Δ = 0` is focusing.
//! * [`farfield_linear_profile`] / [`farfield_quadratic_profile`]: the
//!   far-field counterparts, parameterized by direction cosines.
//! * [`full_illumination_profile`]: a wide profile sized to a whole blockage
//!   disc, so the panel never needs reconfiguring.
//!
//! Direction cosines follow [`AnglePair`]: they describe the direction *from*
//! the panel center *towards* the source or user. With that convention the
//! far-field designs carry a `+κ` factor, which is what makes
//! [`farfield_linear_profile`] the large-distance limit of [`focus_profile`].

use crate::error::{Error, Result};
use crate::field::{incident_field, PhaseProfile, RadioConfig};
use crate::geometry::{distance, AnglePair, CarrierConfig, IrsPanel, Point3};
use crate::protocol::BlockageArea;

/// Phase profile that focuses the reflected wave on `target`:
/// `ω_q = −κ‖target − p_q‖ − φ_q`.
pub fn focus_profile(
    panel: &IrsPanel,
    bs: Point3,
    target: Point3,
    carrier: &CarrierConfig,
) -> Result<PhaseProfile> {
    if !target.is_finite() || target.x == panel.center().x {
        return Err(Error::DegenerateGeometry(format!(
            "focus target {target} lies in the panel plane"
        )));
    }
    let incident = incident_phases(panel, bs, carrier)?;
    let kappa = carrier.wavenumber();
    Ok(PhaseProfile::new(
        panel
            .element_positions()
            .into_iter()
            .zip(incident)
            .map(|(p, phi)| -kappa * distance(target, p) - phi),
    ))
}

fn incident_phases(panel: &IrsPanel, bs: Point3, carrier: &CarrierConfig) -> Result<Vec<f64>> {
    // Phases do not depend on the radio parameters.
    Ok(incident_field(panel, bs, &RadioConfig::default(), carrier)?.phases)
}

/// Target area for wide illumination: a `Δ × Δ` square, parallel to the
/// ground, centered on `center` (normally the user position).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IlluminationSpec {
    pub center: Point3,
    pub delta_m: f64,
}

impl IlluminationSpec {
    pub fn new(center: Point3, delta_m: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("illumination.center", "must be finite"));
        }
        if !(delta_m.is_finite() && delta_m >= 0.0) {
            return Err(Error::invalid(
                "illumination.delta_m",
                format!("must be nonnegative, got {delta_m}"),
            ));
        }
        Ok(IlluminationSpec { center, delta_m })
    }

    /// Focal point assigned to the element at local offset `(y, z)` on a
    /// panel of side `side_m`:
    /// `M(y, z) = [Δ/L·z + c_x, Δ/L·y + c_y, c_z]`.
    ///
    /// The panel's vertical axis spreads the beam along the ground range
    /// (`x`), its horizontal axis along `y`.
    pub fn map_element(&self, side_m: f64, (y, z): (f64, f64)) -> Point3 {
        let scale = self.delta_m / side_m;
        Point3::new(
            scale * z + self.center.x,
            scale * y + self.center.y,
            self.center.z,
        )
    }
}

/// Wide-illumination profile
/// `ω_q = −κ(‖M(p_q) − p_q‖ − ‖M(p_q) − p_irs‖) − φ_q`.
pub fn wide_profile(
    panel: &IrsPanel,
    bs: Point3,
    spec: &IlluminationSpec,
    carrier: &CarrierConfig,
) -> Result<PhaseProfile> {
    if !panel.is_square() {
        return Err(Error::NonSquarePanel {
            side_y: panel.side_y_m(),
            side_z: panel.side_z_m(),
        });
    }
    if !(spec.delta_m.is_finite() && spec.delta_m >= 0.0) {
        return Err(Error::invalid(
            "illumination.delta_m",
            format!("must be nonnegative, got {}", spec.delta_m),
        ));
    }
    let side = panel.side_y_m();
    let incident = incident_phases(panel, bs, carrier)?;
    let kappa = carrier.wavenumber();
    let center = panel.center();
    Ok(PhaseProfile::new(
        panel
            .element_offsets()
            .iter()
            .zip(panel.element_positions())
            .zip(incident)
            .map(|((&offset, p), phi)| {
                let m = spec.map_element(side, offset);
                -kappa * (distance(m, p) - distance(m, center)) - phi
            }),
    ))
}

/// Far-field linear profile `ω_q = κ[α_y y_q + α_z z_q]` with
/// `α_t = A_t(incident) + A_t(departure)`.
pub fn farfield_linear_profile(
    panel: &IrsPanel,
    incident: AnglePair,
    departure: AnglePair,
    carrier: &CarrierConfig,
) -> PhaseProfile {
    let alpha_y = incident.a_y() + departure.a_y();
    let alpha_z = incident.a_z() + departure.a_z();
    let kappa = carrier.wavenumber();
    PhaseProfile::new(
        panel
            .element_offsets()
            .iter()
            .map(|&(y, z)| kappa * (alpha_y * y + alpha_z * z)),
    )
}

/// Window of summed direction cosines `α_y ∈ [ay_min, ay_max]`,
/// `α_z ∈ [az_min, az_max]` to be covered by a far-field wide beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldSpec {
    pub ay_min: f64,
    pub ay_max: f64,
    pub az_min: f64,
    pub az_max: f64,
}

/// Coefficients of the quadratic far-field profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoefficients {
    pub a_y: f64,
    pub b_y: f64,
    pub a_z: f64,
    pub b_z: f64,
}

impl FarFieldSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [self.ay_min, self.ay_max, self.az_min, self.az_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("farfield", "bounds must be finite"));
        }
        if self.ay_min > self.ay_max || self.az_min > self.az_max {
            return Err(Error::invalid("farfield", "min must not exceed max"));
        }
        Ok(())
    }

    /// `a = (max − min)/L`, `b = (max + min)/2` per axis.
    pub fn coefficients(&self, side_y_m: f64, side_z_m: f64) -> QuadraticCoefficients {
        QuadraticCoefficients {
            a_y: (self.ay_max - self.ay_min) / side_y_m,
            b_y: (self.ay_max + self.ay_min) / 2.0,
            a_z: (self.az_max - self.az_min) / side_z_m,
            b_z: (self.az_max + self.az_min) / 2.0,
        }
    }
}

/// Far-field wide beam `ω_q = κ(a_y y² + b_y y + a_z z² + b_z z)`.
pub fn farfield_quadratic_profile(
    panel: &IrsPanel,
    spec: &FarFieldSpec,
    carrier: &CarrierConfig,
) -> Result<PhaseProfile> {
    spec.validate()?;
    let c = spec.coefficients(panel.side_y_m(), panel.side_z_m());
    let kappa = carrier.wavenumber();
    Ok(PhaseProfile::new(panel.element_offsets().iter().map(
        |&(y, z)| kappa * (c.a_y * y * y + c.b_y * y + c.a_z * z * z + c.b_z * z),
    )))
}

/// Wide profile whose `Δ × Δ` square circumscribes the whole blockage disc.
pub fn full_illumination_profile(
    panel: &IrsPanel,
    bs: Point3,
    blockage: &BlockageArea,
    carrier: &CarrierConfig,
) -> Result<PhaseProfile> {
    let spec = IlluminationSpec::new(blockage.center(), blockage.diameter_m())?;
    wide_profile(panel, bs, &spec, carrier)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{reflected_field, wrap_phase, FieldEvaluator, RadioConfig};
    use crate::geometry::{fraunhofer_distance, incidence_angles};
    use std::f64::consts::PI;

    const BS: Point3 = Point3::new(30.0, 0.0, 10.0);
    const IRS: Point3 = Point3::new(0.0, 50.0, 5.0);
    const MU: Point3 = Point3::new(20.0, 60.0, 1.0);

    fn carrier() -> CarrierConfig {
        CarrierConfig::new(3e9).unwrap()
    }

    fn panel() -> IrsPanel {
        IrsPanel::square(IRS, 0.5, 0.5, &carrier(), 1.0).unwrap()
    }

    /// Max element-wise deviation after removing the common phase offset.
    fn spread_of_difference(a: &PhaseProfile, b: &PhaseProfile) -> f64 {
        let diffs: Vec<f64> = a
            .phases()
            .iter()
            .zip(b.phases())
            .map(|(x, y)| wrap_phase(x - y))
            .collect();
        let reference = diffs[0];
        diffs
            .iter()
            .map(|d| wrap_phase(d - reference).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn single_element_focus() {
        let c = carrier();
        let p = IrsPanel::new(IRS, 0.05, 0.05, 0.05, 0.05, 1.0).unwrap();
        let w = focus_profile(&p, BS, MU, &c).unwrap();
        let total = w.phases()[0] + c.wavenumber() * (distance(BS, IRS) + distance(MU, IRS));
        assert!(wrap_phase(total).abs() < 1e-9);
    }

    #[test]
    fn focus_aligns_every_summand() {
        let (p, c) = (panel(), carrier());
        let w = focus_profile(&p, BS, MU, &c).unwrap();
        let inc = incident_field(&p, BS, &RadioConfig::default(), &c).unwrap();
        for ((phi, omega), pos) in inc.phases.iter().zip(w.phases()).zip(p.element_positions()) {
            let total = phi + c.wavenumber() * distance(MU, pos) + omega;
            assert!(wrap_phase(total).abs() < 1e-9);
        }
    }

    #[test]
    fn focus_rejects_target_on_panel() {
        assert!(focus_profile(&panel(), BS, IRS, &carrier()).is_err());
    }

    #[test]
    fn focus_approaches_linear_profile_far_away() {
        let (p, c) = (panel(), carrier());
        let d_f = fraunhofer_distance(&p, &c);
        let bs_dir = Point3::new(0.6, -0.7, 0.2);
        let mu_dir = Point3::new(0.8, 0.3, -0.1);
        let bs = IRS + bs_dir * (10.0 * d_f / bs_dir.norm());
        let incident = incidence_angles(bs, &p).unwrap();
        let departure = AnglePair::from_direction(mu_dir).unwrap();
        let linear = farfield_linear_profile(&p, incident, departure, &c);
        let mut last = f64::INFINITY;
        for factor in [2.0, 5.0, 10.0, 40.0] {
            let target = IRS + mu_dir * (factor * d_f / mu_dir.norm());
            let focus = focus_profile(&p, bs, target, &c).unwrap();
            let spread = spread_of_difference(&focus, &linear);
            assert!(spread < last, "residual must shrink with distance");
            last = spread;
        }
        assert!(last < 0.05, "{last}");
    }

    #[test]
    fn wide_with_zero_delta_is_focusing_up_to_a_constant() {
        let (p, c) = (panel(), carrier());
        let spec = IlluminationSpec::new(MU, 0.0).unwrap();
        let wide = wide_profile(&p, BS, &spec, &c).unwrap();
        let focus = focus_profile(&p, BS, MU, &c).unwrap();
        assert!(spread_of_difference(&wide, &focus) < 1e-9);
        // The common offset is the reference path κ‖c − p_irs‖.
        let offset = wrap_phase(wide.phases()[0] - focus.phases()[0]);
        assert!(wrap_phase(offset - c.wavenumber() * distance(MU, IRS)).abs() < 1e-9);
    }

    #[test]
    fn mapping_hits_square_corners() {
        let spec = IlluminationSpec::new(MU, 8.0).unwrap();
        let corner = spec.map_element(0.5, (0.25, 0.25));
        assert_eq!(corner, Point3::new(MU.x + 4.0, MU.y + 4.0, MU.z));
        let opposite = spec.map_element(0.5, (-0.25, -0.25));
        assert_eq!(opposite, Point3::new(MU.x - 4.0, MU.y - 4.0, MU.z));
    }

    #[test]
    fn mapped_image_spans_the_square() {
        // Sample the continuous panel edge-to-edge.
        let spec = IlluminationSpec::new(MU, 6.0).unwrap();
        let n = 41;
        let pts: Vec<Point3> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let y = -0.25 + 0.5 * i as f64 / (n - 1) as f64;
                let z = -0.25 + 0.5 * j as f64 / (n - 1) as f64;
                spec.map_element(0.5, (y, z))
            })
            .collect();
        let fold = |f: fn(&Point3) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            pts.iter().map(f).fold(init, pick)
        };
        assert_eq!(fold(|p| p.x, f64::INFINITY, f64::min), MU.x - 3.0);
        assert_eq!(fold(|p| p.x, f64::NEG_INFINITY, f64::max), MU.x + 3.0);
        assert_eq!(fold(|p| p.y, f64::INFINITY, f64::min), MU.y - 3.0);
        assert_eq!(fold(|p| p.y, f64::NEG_INFINITY, f64::max), MU.y + 3.0);
        assert!(pts.iter().all(|p| p.z == MU.z));
    }

    #[test]
    fn wide_rejects_non_square_panel() {
        let p = IrsPanel::new(IRS, 0.5, 0.3, 0.05, 0.05, 1.0).unwrap();
        let spec = IlluminationSpec::new(MU, 2.0).unwrap();
        assert!(matches!(
            wide_profile(&p, BS, &spec, &carrier()),
            Err(Error::NonSquarePanel { .. })
        ));
        assert!(IlluminationSpec::new(MU, -1.0).is_err());
    }

    #[test]
    fn peak_snr_does_not_grow_with_delta() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let mut last = f64::INFINITY;
        for delta in [0.0, 1.0, 2.0, 4.0, 8.0] {
            let spec = IlluminationSpec::new(MU, delta).unwrap();
            let w = wide_profile(&p, BS, &spec, &c).unwrap();
            let snr = reflected_field(&p, &w, BS, MU, &radio, &c)
                .unwrap()
                .snr_linear;
            assert!(snr <= last * (1.0 + 1e-12), "delta {delta}: {snr} > {last}");
            last = snr;
        }
    }

    #[test]
    fn specular_pair_needs_no_phase_gradient() {
        let (p, c) = (panel(), carrier());
        let incident = AnglePair::new(1.1, 0.4);
        // Mirror image in the panel plane: flip the in-plane components.
        let departure = AnglePair::from_direction(Point3::new(
            incident.a_x(),
            -incident.a_y(),
            -incident.a_z(),
        ))
        .unwrap();
        let w = farfield_linear_profile(&p, incident, departure, &c);
        assert!(w.phases().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn in_plane_linear_profile_varies_only_along_y() {
        let (p, c) = (panel(), carrier());
        let w = farfield_linear_profile(
            &p,
            AnglePair::new(PI / 2.0, 0.3),
            AnglePair::new(PI / 2.0, -0.9),
            &c,
        );
        for (phase, &(y, _)) in w.phases().iter().zip(p.element_offsets()) {
            let same_y = p
                .element_offsets()
                .iter()
                .zip(w.phases())
                .filter(|((yy, _), _)| *yy == y)
                .map(|(_, v)| *v);
            for v in same_y {
                assert!(wrap_phase(v - phase).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_profile_has_zero_second_differences() {
        let (p, c) = (panel(), carrier());
        let w =
            farfield_linear_profile(&p, AnglePair::new(0.9, -0.5), AnglePair::new(1.3, 0.8), &c);
        let (n_y, n_z) = p.grid_dims();
        let at = |i: usize, j: usize| w.phases()[i * n_z + j];
        for i in 1..n_y - 1 {
            for j in 0..n_z {
                assert!(wrap_phase(at(i + 1, j) - 2.0 * at(i, j) + at(i - 1, j)).abs() < 1e-9);
            }
        }
        for i in 0..n_y {
            for j in 1..n_z - 1 {
                assert!(wrap_phase(at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn symmetric_window_is_pure_quadratic() {
        let spec = FarFieldSpec {
            ay_min: -0.3,
            ay_max: 0.3,
            az_min: -0.2,
            az_max: 0.2,
        };
        let k = spec.coefficients(0.5, 0.5);
        assert_eq!(k.b_y, 0.0);
        assert_eq!(k.b_z, 0.0);
        assert!((k.a_y - 1.2).abs() < 1e-15);
        assert!((k.a_z - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_width_window_reduces_to_linear() {
        let (p, c) = (panel(), carrier());
        let incident = AnglePair::new(1.2, -0.6);
        let departure = AnglePair::new(1.7, 0.5);
        let (ay, az) = (
            incident.a_y() + departure.a_y(),
            incident.a_z() + departure.a_z(),
        );
        let spec = FarFieldSpec {
            ay_min: ay,
            ay_max: ay,
            az_min: az,
            az_max: az,
        };
        let quad = farfield_quadratic_profile(&p, &spec, &c).unwrap();
        let lin = farfield_linear_profile(&p, incident, departure, &c);
        for (a, b) in quad.phases().iter().zip(lin.phases()) {
            assert!(wrap_phase(a - b).abs() < 1e-9);
        }
        let bad = FarFieldSpec {
            ay_min: 1.0,
            ay_max: 0.0,
            ..spec
        };
        assert!(farfield_quadratic_profile(&p, &bad, &c).is_err());
    }

    #[test]
    fn full_illumination_degenerates_to_focusing_and_ignores_user() {
        let (p, c, radio) = (panel(), carrier(), RadioConfig::default());
        let point = BlockageArea::new(MU, 0.0).unwrap();
        let full = full_illumination_profile(&p, BS, &point, &c).unwrap();
        let focus = focus_profile(&p, BS, MU, &c).unwrap();
        assert!(spread_of_difference(&full, &focus) < 1e-9);

        let disc = BlockageArea::new(MU, 10.0).unwrap();
        let a = full_illumination_profile(&p, BS, &disc, &c).unwrap();
        let b = full_illumination_profile(&p, BS, &disc, &c).unwrap();
        assert_eq!(a, b);
        let eval = FieldEvaluator::new(&p, &a, BS, &radio, &c).unwrap();
        assert!(eval.snr(MU).unwrap() > 0.0);
    }
}
