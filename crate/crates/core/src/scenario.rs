//! Geometry plus radio parameters for one deployment.

use crate::error::Result;
use crate::field::RadioConfig;
use crate::geometry::{distance, CarrierConfig, IrsPanel, Point3};

/// Base station position of the reference deployment, meters.
pub const REFERENCE_BS: Point3 = Point3::new(30.0, 0.0, 10.0);
/// IRS center of the reference deployment.
pub const REFERENCE_IRS: Point3 = Point3::new(0.0, 50.0, 5.0);
/// User (and blockage-disc center) of the reference deployment.
pub const REFERENCE_MU: Point3 = Point3::new(20.0, 60.0, 1.0);

/// A full deployment: carrier, panel, radio and the fixed node positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier: CarrierConfig,
    pub panel: IrsPanel,
    pub radio: RadioConfig,
    pub bs: Point3,
    pub mu: Point3,
}

impl Scenario {
    /// The reference deployment: a 50 cm × 50 cm panel with half-wavelength
    /// spacing at `[0, 50, 5]`, base station at `[30, 0, 10]`, user at
    /// `[20, 60, 1]`, default radio parameters and τ = 1.
    pub fn reference(frequency_hz: f64) -> Result<Self> {
        let carrier = CarrierConfig::new(frequency_hz)?;
        let panel = IrsPanel::square(REFERENCE_IRS, 0.5, 0.5, &carrier, 1.0)?;
        Ok(Scenario {
            carrier,
            panel,
            radio: RadioConfig::default(),
            bs: REFERENCE_BS,
            mu: REFERENCE_MU,
        })
    }

    pub fn bs_distance_m(&self) -> f64 {
        distance(self.bs, self.panel.center())
    }

    pub fn mu_distance_m(&self) -> f64 {
        distance(self.mu, self.panel.center())
    }
}
