//! Points, carrier constants, and the discretized IRS panel.
//!
//! All positions live in one global Cartesian frame. The panel's local frame
//! is a pure translation of it: the panel normal is the global `+x` axis and
//! the element grid spans the global `y`–`z` plane through the panel center.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A point (or displacement) in the global frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    /// Component along a global axis.
    pub fn component(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    /// Returns `self` moved by `amount` meters along `axis`.
    pub fn offset(&self, axis: Axis, amount: f64) -> Point3 {
        *self + axis.unit() * amount
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.x, self.y, self.z)
    }
}

/// Global coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Point3 {
        match self {
            Axis::X => Point3::new(1.0, 0.0, 0.0),
            Axis::Y => Point3::new(0.0, 1.0, 0.0),
            Axis::Z => Point3::new(0.0, 0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::invalid(
                "axis",
                format!("expected x, y or z, got `{other}`"),
            )),
        }
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Point3, b: Point3) -> f64 {
    (a - b).norm()
}

/// Carrier frequency with its derived wavelength and wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierConfig {
    frequency_hz: f64,
    wavelength_m: f64,
    wavenumber: f64,
}

impl CarrierConfig {
    pub fn new(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(Error::invalid(
                "frequency_hz",
                format!("must be positive, got {frequency_hz}"),
            ));
        }
        let wavelength_m = SPEED_OF_LIGHT / frequency_hz;
        Ok(CarrierConfig {
            frequency_hz,
            wavelength_m,
            wavenumber: 2.0 * PI / wavelength_m,
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// Wavenumber 2π/λ, rad/m.
    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }
}

/// A planar IRS discretized into a uniform grid of unit cells.
///
/// Elements are cell centers of a `⌊L_y/d_y⌋ × ⌊L_z/d_z⌋` grid; any
/// fractional cell at the border is dropped, so the spacing is exactly
/// `d_y`, `d_z` and the element centroid coincides with the panel center.
/// Element `q` sits at grid index `(q / n_z, q % n_z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsPanel {
    center: Point3,
    side_y_m: f64,
    side_z_m: f64,
    spacing_y_m: f64,
    spacing_z_m: f64,
    tau: f64,
    n_y: usize,
    n_z: usize,
    offsets: Vec<(f64, f64)>,
}

/// Cell count along one side, tolerant to round-off in `side / spacing`.
fn cells_along(side: f64, spacing: f64) -> usize {
    let ratio = side / spacing;
    (ratio + 1e-9 * ratio.max(1.0)).floor() as usize
}

fn centered_offsets(n: usize, spacing: f64) -> impl Iterator<Item = f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n).map(move |k| (k as f64 - mid) * spacing)
}

impl IrsPanel {
    pub fn new(
        center: Point3,
        side_y_m: f64,
        side_z_m: f64,
        spacing_y_m: f64,
        spacing_z_m: f64,
        tau: f64,
    ) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::invalid("irs.center", "coordinates must be finite"));
        }
        for (name, v) in [
            ("side_y_m", side_y_m),
            ("side_z_m", side_z_m),
            ("spacing_y_m", spacing_y_m),
            ("spacing_z_m", spacing_z_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid(
                "tau",
                format!("must lie in [0, 1], got {tau}"),
            ));
        }
        let n_y = cells_along(side_y_m, spacing_y_m);
        let n_z = cells_along(side_z_m, spacing_z_m);
        if n_y == 0 || n_z == 0 {
            return Err(Error::DegenerateGeometry(format!(
                "panel sides ({side_y_m} m, {side_z_m} m) are smaller than the element spacing ({spacing_y_m} m, {spacing_z_m} m)"
            )));
        }
        let offsets = centered_offsets(n_y, spacing_y_m)
            .flat_map(|y| centered_offsets(n_z, spacing_z_m).map(move |z| (y, z)))
            .collect();
        Ok(IrsPanel {
            center,
            side_y_m,
            side_z_m,
            spacing_y_m,
            spacing_z_m,
            tau,
            n_y,
            n_z,
            offsets,
        })
    }

    /// Square panel of side `side_m` with element spacing given in wavelengths.
    pub fn square(
        center: Point3,
        side_m: f64,
        spacing_wavelengths: f64,
        carrier: &CarrierConfig,
        tau: f64,
    ) -> Result<Self> {
        let spacing = spacing_wavelengths * carrier.wavelength_m();
        IrsPanel::new(center, side_m, side_m, spacing, spacing, tau)
    }

    pub fn center(&self) -> Point3 {
        self.center
    }

    pub fn side_y_m(&self) -> f64 {
        self.side_y_m
    }

    pub fn side_z_m(&self) -> f64 {
        self.side_z_m
    }

    pub fn spacing_y_m(&self) -> f64 {
        self.spacing_y_m
    }

    pub fn spacing_z_m(&self) -> f64 {
        self.spacing_z_m
    }

    /// Field reflection magnitude τ.
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same panel with a different reflection magnitude.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::invalid(
                "tau",
                format!("must lie in [0, 1], got {tau}"),
            ));
        }
        Ok(IrsPanel {
            tau,
            ..self.clone()
        })
    }

    /// Number of elements Q.
    pub fn element_count(&self) -> usize {
        self.offsets.len()
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.n_y, self.n_z)
    }

    /// Unit-cell area d_y·d_z.
    pub fn cell_area_m2(&self) -> f64 {
        self.spacing_y_m * self.spacing_z_m
    }

    pub fn is_square(&self) -> bool {
        self.side_y_m == self.side_z_m
    }

    /// Local (y, z) offsets of the element centers.
    pub fn element_offsets(&self) -> &[(f64, f64)] {
        &self.offsets
    }

    /// Global positions of the element centers.
    pub fn element_positions(&self) -> Vec<Point3> {
        self.offsets
            .iter()
            .map(|&(y, z)| Point3::new(self.center.x, self.center.y + y, self.center.z + z))
            .collect()
    }
}

/// Elevation/azimuth of a direction in the panel's spherical frame.
///
/// `theta` is measured from the panel's `z` axis and `phi` from its normal
/// (`x`) towards `y`, so the direction cosines are
/// `(sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePair {
    pub theta_rad: f64,
    pub phi_rad: f64,
}

impl AnglePair {
    pub fn new(theta_rad: f64, phi_rad: f64) -> Self {
        AnglePair { theta_rad, phi_rad }
    }

    /// Angles of a (not necessarily normalized) direction vector.
    pub fn from_direction(direction: Point3) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::DegenerateGeometry("zero-length direction".into()));
        }
        let u = direction * (1.0 / norm);
        let theta = u.z.clamp(-1.0, 1.0).acos();
        let mut phi = u.y.atan2(u.x);
        if phi == -PI {
            phi = PI;
        }
        Ok(AnglePair::new(theta, phi))
    }

    /// sinθ cosφ
    pub fn a_x(&self) -> f64 {
        self.theta_rad.sin() * self.phi_rad.cos()
    }

    /// sinθ sinφ
    pub fn a_y(&self) -> f64 {
        self.theta_rad.sin() * self.phi_rad.sin()
    }

    /// cosθ
    pub fn a_z(&self) -> f64 {
        self.theta_rad.cos()
    }

    pub fn direction(&self) -> Point3 {
        Point3::new(self.a_x(), self.a_y(), self.a_z())
    }
}

/// Angles of `source` as seen from the panel center.
pub fn incidence_angles(source: Point3, panel: &IrsPanel) -> Result<AnglePair> {
    AnglePair::from_direction(source - panel.center()).map_err(|_| {
        Error::DegenerateGeometry(format!("point {source} coincides with the panel center"))
    })
}

/// Fraunhofer distance 8(L_y² + L_z²)/λ for the given panel sides.
pub fn fraunhofer_distance_m(side_y_m: f64, side_z_m: f64, carrier: &CarrierConfig) -> f64 {
    8.0 * (side_y_m * side_y_m + side_z_m * side_z_m) / carrier.wavelength_m()
}

pub fn fraunhofer_distance(panel: &IrsPanel, carrier: &CarrierConfig) -> f64 {
    fraunhofer_distance_m(panel.side_y_m(), panel.side_z_m(), carrier)
}
