use super::Vec3;

/// Doppler shift of a polyline path `points[0] → … → points[n]` whose vertices
/// move with `velocities`: `ν = -(1/λ) · dL/dt`, positive while the path shrinks.
pub fn doppler_of_path(points: &[Vec3], velocities: &[Vec3], wavelength: f64) -> f64 {
    debug_assert_eq!(points.len(), velocities.len());
    let rate: f64 = points
        .windows(2)
        .zip(velocities.windows(2))
        .map(|(p, v)| {
            let leg = p[1] - p[0];
            let n = leg.norm();
            if n == 0.0 {
                0.0
            } else {
                leg.dot(&(v[1] - v[0])) / n
            }
        })
        .sum();
    -rate / wavelength
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{wavelength, CENTER_FREQUENCY_HZ};
    use proptest::prelude::*;

    fn lambda() -> f64 {
        wavelength(CENTER_FREQUENCY_HZ)
    }

    fn length(points: &[Vec3]) -> f64 {
        points.windows(2).map(|p| (p[1] - p[0]).norm()).sum()
    }

    #[test]
    fn static_path_has_no_shift() {
        let pts = [Vec3::zeros(), Vec3::new(3.0, 4.0, 0.0), Vec3::new(10.0, 0.0, 1.0)];
        assert_eq!(doppler_of_path(&pts, &[Vec3::zeros(); 3], lambda()), 0.0);
    }

    #[test]
    fn radial_speeds() {
        let v = 48.0 / 3.6;
        // one leg shrinking at 48 kph
        let pts = [Vec3::zeros(), Vec3::new(50.0, 0.0, 0.0)];
        let nu = doppler_of_path(&pts, &[Vec3::zeros(), Vec3::new(-v, 0.0, 0.0)], lambda());
        assert!((nu - v / lambda()).abs() < 1e-9);
        assert!((nu - 1238.5).abs() < 0.5, "{nu}");
        // scatterer approaching a co-located TX/RX: both legs shrink
        let pts = [Vec3::zeros(), Vec3::new(50.0, 0.0, 0.0), Vec3::new(0.0, 0.1, 0.0)];
        let vel = [Vec3::zeros(), Vec3::new(-v, 0.0, 0.0), Vec3::zeros()];
        let nu2 = doppler_of_path(&pts, &vel, lambda());
        assert!((nu2 - 2.0 * 1238.5).abs() < 1.5, "{nu2}");
        // receding pedestrian
        let nu = doppler_of_path(&[Vec3::zeros(), Vec3::new(20.0, 0.0, 0.0)], &[Vec3::zeros(), Vec3::new(1.5, 0.0, 0.0)], lambda());
        assert!((nu + 139.3).abs() < 0.1, "{nu}");
    }

    proptest! {
        #[test]
        fn matches_finite_difference(
            p in proptest::array::uniform3(-40.0f64..40.0),
            v in proptest::array::uniform3(-15.0f64..15.0),
        ) {
            let tx = Vec3::new(-30.0, -5.0, 2.5);
            let rx = Vec3::new(25.0, 8.0, 1.8);
            let s = Vec3::new(p[0], p[1], p[2].abs() + 0.5);
            let vel = Vec3::new(v[0], v[1], 0.0);
            let h = 1e-4;
            let l = |t: f64| length(&[tx, s + vel * t, rx]);
            let fd = -(l(h) - l(-h)) / (2.0 * h) / lambda();
            let nu = doppler_of_path(&[tx, s, rx], &[Vec3::zeros(), vel, Vec3::zeros()], lambda());
            prop_assert!((nu - fd).abs() < 1e-3 * (1.0 + fd.abs()));
            // time reversal negates the shift
            let back = doppler_of_path(&[tx, s, rx], &[Vec3::zeros(), -vel, Vec3::zeros()], lambda());
            prop_assert!((nu + back).abs() < 1e-9);
        }
    }
}
