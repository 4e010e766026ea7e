//! Incomplete elliptic integral of the first kind via Carlson's `R_F`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{require_finite, Error, Result};

/// Carlson's symmetric integral `R_F(x, y, z)` by duplication.
///
/// At most one argument may be zero; all must be non-negative.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    if x < 0.0 || y < 0.0 || z < 0.0 || !(x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(Error::Domain(format!("R_F({x}, {y}, {z}) needs finite non-negative arguments")));
    }
    if [x + y, y + z, x + z].iter().any(|&s| s == 0.0) {
        return Err(Error::Domain("R_F with two zero arguments diverges".into()));
    }
    let (mut x, mut y, mut z) = (x, y, z);
    let a0 = (x + y + z) / 3.0;
    let q = (3.0 * f64::EPSILON).powf(-1.0 / 6.0) * (a0 - x).abs().max((a0 - y).abs()).max((a0 - z).abs());
    let mut a = a0;
    let mut scale = 1.0;
    for _ in 0..100 {
        if q * scale < a.abs() {
            break;
        }
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lam = sx * sy + sy * sz + sz * sx;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        a = 0.25 * (a + lam);
        scale *= 0.25;
    }
    let xd = (a - x) / a;
    let yd = (a - y) / a;
    let zd = -(xd + yd);
    let e2 = xd * yd - zd * zd;
    let e3 = xd * yd * zd;
    Ok((1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / a.sqrt())
}

/// Complete integral `K(m)`, `m < 1`.
pub fn complete_elliptic_k(m: f64) -> Result<f64> {
    require_finite("parameter", m)?;
    if m >= 1.0 {
        return Err(Error::Domain(format!("K(m) diverges for m = {m} >= 1")));
    }
    carlson_rf(0.0, 1.0 - m, 1.0)
}

/// `F(φ|n) = ∫₀^φ dt / √(1 − n sin²t)` on the principal branch `|φ| <= π/2`.
pub fn incomplete_elliptic_f(phi: f64, n: f64) -> Result<f64> {
    require_finite("amplitude", phi)?;
    require_finite("parameter", n)?;
    if phi.abs() > FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::InvalidArgument(format!("amplitude {phi} outside [-π/2, π/2]")));
    }
    let s = phi.sin();
    let c = phi.cos().max(0.0);
    let d = 1.0 - n * s * s;
    if d <= 0.0 {
        return Err(Error::Domain(format!("n·sin²φ = {} >= 1", n * s * s)));
    }
    if n == 0.0 {
        return Ok(phi);
    }
    Ok(s * carlson_rf(c * c, d, 1.0)?)
}

/// `F(φ|m)` continued past `|φ| = π/2` with `F(φ + kπ) = F(φ) + 2kK(m)`.
pub fn incomplete_elliptic_f_ext(phi: f64, m: f64) -> Result<f64> {
    require_finite("amplitude", phi)?;
    let k = (phi / PI).round();
    let r = phi - k * PI;
    let base = incomplete_elliptic_f(r.clamp(-FRAC_PI_2, FRAC_PI_2), m)?;
    if k == 0.0 {
        return Ok(base);
    }
    Ok(base + 2.0 * k * complete_elliptic_k(m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::jacobi::jacobi_elliptic;
    use crate::kernel::quadrature::{quad_adaptive, QuadratureSpec};

    #[test]
    fn zero_parameter_is_identity() {
        for phi in [-1.5, -0.3, 0.0, 0.7, FRAC_PI_2] {
            assert_eq!(incomplete_elliptic_f(phi, 0.0).unwrap(), phi);
        }
    }

    #[test]
    fn matches_simpson_oracle() {
        let phi = PI / 3.0;
        let n = 0.5;
        let spec = QuadratureSpec::new(1e-13, 1e-13, 50).unwrap();
        let oracle =
            quad_adaptive(|t| 1.0 / ((1.0 - t * t) * (1.0 - n * t * t)).sqrt(), 0.0, phi.sin(), &spec).unwrap();
        let v = incomplete_elliptic_f(phi, n).unwrap();
        assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        assert!((v - 1.142_429_058_045_777_3).abs() < 1e-12);
    }

    #[test]
    fn round_trip_with_sn() {
        for n in [0.0, 0.25, 0.5, 0.9, 0.99] {
            for i in 0..20 {
                let v = 0.05 * i as f64;
                let s = jacobi_elliptic(v, n).unwrap().sn;
                let back = incomplete_elliptic_f(s.asin(), n).unwrap();
                assert!((back - v).abs() < 1e-12, "n={n} v={v} back={back}");
            }
        }
    }

    #[test]
    fn domain_error_beyond_singularity() {
        assert!(matches!(incomplete_elliptic_f(1.2, 4.0), Err(Error::Domain(_))));
        assert!(matches!(incomplete_elliptic_f(2.0, 0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn quarter_period() {
        // K(1/4) reference value
        assert!((complete_elliptic_k(0.25).unwrap() - 1.685_750_354_812_596).abs() < 1e-14);
        let k = complete_elliptic_k(0.25).unwrap();
        let ext = incomplete_elliptic_f_ext(PI + 0.3, 0.25).unwrap();
        assert!((ext - (2.0 * k + incomplete_elliptic_f(0.3, 0.25).unwrap())).abs() < 1e-14);
    }
}
