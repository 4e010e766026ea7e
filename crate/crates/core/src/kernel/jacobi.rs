//! Jacobi elliptic functions `sn`, `cn`, `dn` for any real parameter.
//!
//! The core routine handles `0 <= m <= 1` with the arithmetic-geometric mean
//! and a descending Landen recurrence. Parameters above one go through the
//! reciprocal-parameter transformation, negative parameters through the
//! imaginary-modulus transformation.

use crate::error::{require_finite, Error, Result};

/// Elliptic parameter `n` (the square of the modulus).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticParams {
    pub n: f64,
}

impl EllipticParams {
    pub fn new(n: f64) -> Result<Self> {
        require_finite("elliptic parameter", n)?;
        Ok(Self { n })
    }

    pub fn eval(&self, v: f64) -> Result<Jacobi> {
        jacobi_elliptic(v, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobi {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

const AGM_TOL: f64 = 1e-12;
const AGM_STEPS: usize = 16;

/// `sn(v|n)`, `cn(v|n)`, `dn(v|n)`.
pub fn jacobi_elliptic(v: f64, n: f64) -> Result<Jacobi> {
    require_finite("argument", v)?;
    require_finite("elliptic parameter", n)?;
    Ok(eval(v, n))
}

fn eval(v: f64, n: f64) -> Jacobi {
    if n > 1.0 {
        // sn(v|n) = sn(√n v | 1/n)/√n, cn <-> dn
        let r = n.sqrt();
        let j = unit(v * r, 1.0 / n);
        Jacobi { sn: j.sn / r, cn: j.dn, dn: j.cn }
    } else if n < 0.0 {
        // sn(v|-μ) = sd(v√(1+μ) | μ/(1+μ)) / √(1+μ)
        let mu = -n;
        let r = (1.0 + mu).sqrt();
        let j = unit(v * r, mu / (1.0 + mu));
        Jacobi { sn: j.sn / (j.dn * r), cn: j.cn / j.dn, dn: 1.0 / j.dn }
    } else {
        unit(v, n)
    }
}

/// Core evaluation for `0 <= m <= 1`.
fn unit(u: f64, m: f64) -> Jacobi {
    if m == 0.0 {
        return Jacobi { sn: u.sin(), cn: u.cos(), dn: 1.0 };
    }
    let mut emc = 1.0 - m;
    if emc == 0.0 {
        let sech = 1.0 / u.cosh();
        return Jacobi { sn: u.tanh(), cn: sech, dn: sech };
    }

    let mut em = [0.0f64; AGM_STEPS];
    let mut en = [0.0f64; AGM_STEPS];
    let mut a = 1.0;
    let mut c = 1.0;
    let mut l = 0;
    for i in 0..AGM_STEPS {
        l = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= AGM_TOL * a {
            break;
        }
        emc *= a;
        a = c;
    }

    let u = u * c;
    let mut sn = u.sin();
    let mut cn = u.cos();
    let mut dn = 1.0;
    if sn != 0.0 {
        let mut a = cn / sn;
        c *= a;
        for ii in (0..=l).rev() {
            let b = em[ii];
            a *= c;
            c *= dn;
            dn = (en[ii] + a) / (b + a);
            a = c / b;
        }
        a = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { a } else { -a };
        cn = c * sn;
    }
    Jacobi { sn, cn, dn }
}

impl TryFrom<f64> for EllipticParams {
    type Error = Error;
    fn try_from(n: f64) -> Result<Self> {
        Self::new(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::quadrature::gauss_legendre;

    fn sn(v: f64, n: f64) -> f64 {
        jacobi_elliptic(v, n).unwrap().sn
    }

    #[test]
    fn origin_values() {
        for n in [-3.0, -0.5, 0.0, 0.3, 1.0, 4.0, 17.0] {
            let j = jacobi_elliptic(0.0, n).unwrap();
            assert_eq!((j.sn, j.cn, j.dn), (0.0, 1.0, 1.0));
        }
    }

    #[test]
    fn degenerate_parameters() {
        for i in -20..=20 {
            let v = 0.17 * i as f64;
            let j = jacobi_elliptic(v, 1.0).unwrap();
            assert!((j.sn - v.tanh()).abs() < 1e-15);
            assert!((j.dn - 1.0 / v.cosh()).abs() < 1e-15);
            let j = jacobi_elliptic(v, 0.0).unwrap();
            assert!((j.sn - v.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn reciprocal_parameter_instance() {
        for i in -50..=50 {
            let x = i as f64 / 50.0;
            assert!((sn(x, 4.0) - 0.5 * sn(2.0 * x, 0.25)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(jacobi_elliptic(f64::NAN, 0.5), Err(Error::InvalidArgument(_))));
        assert!(matches!(jacobi_elliptic(1.0, f64::INFINITY), Err(Error::InvalidArgument(_))));
    }

    // F(φ|n) by composite Gauss-Legendre, then bisection on φ.
    fn oracle_sn(v: f64, n: f64) -> f64 {
        let (xs, ws) = gauss_legendre(20);
        let f = |phi: f64| {
            let panels = 64;
            let h = phi / panels as f64;
            let mut s = 0.0;
            for p in 0..panels {
                let a = p as f64 * h;
                for (x, w) in xs.iter().zip(&ws) {
                    let t = a + h * x;
                    s += h * w / (1.0 - n * t.sin().powi(2)).sqrt();
                }
            }
            s
        };
        let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        (0.5 * (lo + hi)).sin()
    }

    #[test]
    fn sn_matches_bisection_oracle() {
        let expect = oracle_sn(0.7, 0.25);
        assert!((sn(0.7, 0.25) - expect).abs() < 1e-12, "{} vs {}", sn(0.7, 0.25), expect);
        // frozen from the oracle above
        assert!((sn(0.7, 0.25) - 0.634_293_276_335_112_4).abs() < 1e-12);
    }

    #[test]
    fn negative_parameter_consistency() {
        for i in -10..=10 {
            let v = 0.3 * i as f64;
            let j = jacobi_elliptic(v, -2.5).unwrap();
            assert!((j.sn * j.sn + j.cn * j.cn - 1.0).abs() < 1e-12);
            assert!((j.dn * j.dn - 2.5 * j.sn * j.sn - 1.0).abs() < 1e-12);
        }
    }

    mod props {
        use super::*;
        use approx::assert_abs_diff_eq;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pythagorean_identities(v in -20.0f64..20.0, n in -5.0f64..8.0) {
                let j = jacobi_elliptic(v, n).unwrap();
                assert_abs_diff_eq!(j.sn * j.sn + j.cn * j.cn, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(j.dn * j.dn + n * j.sn * j.sn, 1.0, epsilon = 1e-12);
            }

            #[test]
            fn odd_and_even(v in -10.0f64..10.0, n in -3.0f64..5.0) {
                let a = jacobi_elliptic(v, n).unwrap();
                let b = jacobi_elliptic(-v, n).unwrap();
                assert_abs_diff_eq!(a.sn, -b.sn, epsilon = 1e-14);
                assert_abs_diff_eq!(a.cn, b.cn, epsilon = 1e-14);
                assert_abs_diff_eq!(a.dn, b.dn, epsilon = 1e-14);
            }

            #[test]
            fn reciprocal_parameter(v in -3.0f64..3.0, n in 1.01f64..9.0) {
                let r = n.sqrt();
                let a = jacobi_elliptic(v, n).unwrap();
                let b = jacobi_elliptic(r * v, 1.0 / n).unwrap();
                assert_abs_diff_eq!(a.sn, b.sn / r, epsilon = 1e-12);
            }
        }
    }
}
