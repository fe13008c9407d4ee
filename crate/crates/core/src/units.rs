//! Physical constants and small unit helpers.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sounder carrier, Hz.
pub const CENTER_FREQUENCY_HZ: f64 = 27.85e9;

pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Wraps an angle in degrees to `[-180, 180)`.
pub fn wrap_deg(deg: f64) -> f64 {
    let w = (deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can return 360.0 for tiny negative inputs
    if w >= 180.0 {
        w - 360.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_covers_edges() {
        assert_eq!(wrap_deg(180.0), -180.0);
        assert_eq!(wrap_deg(-180.0), -180.0);
        assert_eq!(wrap_deg(190.0), -170.0);
        assert_eq!(wrap_deg(-190.0), 170.0);
        assert_eq!(wrap_deg(35.0), 35.0);
    }

    #[test]
    fn wavelength_at_carrier() {
        let lambda = wavelength(CENTER_FREQUENCY_HZ);
        assert!((lambda - 0.010_764_5).abs() < 1e-6);
    }
}
