//! Decibel conversions.

/// dB value written for an exactly-zero power ratio.
pub const ZERO_POWER_DB: f64 = -400.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// 10·log10 of a power ratio; zero (or negative) maps to [`ZERO_POWER_DB`].
pub fn power_to_db(linear: f64) -> f64 {
    if linear > 0.0 {
        10.0 * linear.log10()
    } else {
        ZERO_POWER_DB
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    power_to_db(watts * 1e3)
}
