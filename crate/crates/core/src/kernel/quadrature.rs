//! One-dimensional quadrature: adaptive Simpson with Richardson correction,
//! adaptive Gauss-Kronrod (7/15), Gauss-Legendre rules and pairwise summation.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_depth: u32) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("abs_tol must be positive, got {abs_tol}")));
        }
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
        }
        if max_depth < 10 {
            return Err(Error::InvalidArgument(format!("max_depth must be at least 10, got {max_depth}")));
        }
        Ok(Self { abs_tol, rel_tol, max_depth })
    }

    /// Tight settings used when fields are later differentiated numerically.
    pub fn fine() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-13, max_depth: 50 }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_depth: 40 }
    }
}

const MIN_DEPTH: u32 = 3;

struct Simpson<'a, F> {
    f: &'a F,
    max_depth: u32,
    failed: bool,
    err: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&self, x: f64) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("integrand is not finite at {x} ({v})")))
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn step(&mut self, a: f64, m: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> Result<f64> {
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.eval(lm)?, self.eval(rm)?);
        let h = b - a;
        let left = h * (fa + 4.0 * flm + fm) / 12.0;
        let right = h * (fm + 4.0 * frm + fb) / 12.0;
        let both = left + right;
        let delta = both - whole;
        if depth >= MIN_DEPTH && delta.abs() <= 15.0 * eps {
            self.err += delta.abs() / 15.0;
            return Ok(both + delta / 15.0);
        }
        if depth >= self.max_depth {
            self.failed = true;
            self.err += delta.abs() / 15.0;
            return Ok(both + delta / 15.0);
        }
        let l = self.step(a, lm, m, fa, flm, fm, left, 0.5 * eps, depth + 1)?;
        let r = self.step(m, rm, b, fm, frm, fb, right, 0.5 * eps, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]`.
///
/// The target is `abs_tol + rel_tol·|I|`, with `I` estimated from a
/// 16-panel composite rule. Exhausting `max_depth` anywhere yields
/// [`Error::Accuracy`] with the best estimate attached.
pub fn quad_adaptive<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite limits [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mut s = Simpson { f: &f, max_depth: spec.max_depth, failed: false, err: 0.0 };

    let panels = 16;
    let h = (hi - lo) / panels as f64;
    let mut coarse = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        coarse += h / 6.0 * (s.eval(a)? + 4.0 * s.eval(a + 0.5 * h)? + s.eval(a + h)?);
    }
    let eps = spec.abs_tol.max(spec.rel_tol * coarse.abs());

    let m = 0.5 * (lo + hi);
    let (fa, fm, fb) = (s.eval(lo)?, s.eval(m)?, s.eval(hi)?);
    let whole = (hi - lo) * (fa + 4.0 * fm + fb) / 6.0;
    let v = s.step(lo, m, hi, fa, fm, fb, whole, eps, 0)?;
    if s.failed {
        return Err(Error::Accuracy { estimate: v, error_bound: s.err });
    }
    Ok(v)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let check = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("integrand is not finite at {x} ({v})")))
        }
    };
    let fc = check(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = check(c - dx)? + check(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Globally adaptive Gauss-Kronrod 7/15 quadrature.
///
/// A smooth integrand on a short interval is handled by a single 15-point
/// rule, which keeps the result a smooth function of the limits.
pub fn quad_gk<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite limits [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let max_intervals = 4 * spec.max_depth as usize;
    let (v, e) = gk15(&f, lo, hi)?;
    let mut parts = vec![(lo, hi, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(pairwise_sum(&parts.iter().map(|p| p.2).collect::<Vec<_>>()));
        }
        if parts.len() >= max_intervals {
            return Err(Error::Accuracy { estimate: total, error_bound: err });
        }
        let (i, _) = parts
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (a, b, _, _) = parts[i];
        let m = 0.5 * (a + b);
        let l = gk15(&f, a, m)?;
        let r = gk15(&f, m, b)?;
        parts[i] = (a, m, l.0, l.1);
        parts.insert(i + 1, (m, b, r.0, r.1));
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`; weights sum to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
            z = 0.0;
        }
        xs[n - 1 - i] = 0.5 * (1.0 + z);
        ws[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (xs, ws)
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if v.len() <= BLOCK {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrands() {
        let spec = QuadratureSpec::default();
        assert_eq!(quad_adaptive(|_| 1.0, 0.0, 1.0, &spec).unwrap(), 1.0);
        let x = 0.37;
        let v = quad_adaptive(|_| 0.0f64.cosh() * std::f64::consts::FRAC_PI_2.sin(), 0.0, x, &spec).unwrap();
        assert!((v - x).abs() < 1e-15);
    }

    #[test]
    fn arcsine_closed_form() {
        let spec = QuadratureSpec::default();
        let v = quad_adaptive(|t| 1.0 / (1.0 - t * t / 2.0).sqrt(), 0.0, 1.0, &spec).unwrap();
        let exact = 2f64.sqrt() * (1.0 / 2f64.sqrt()).asin();
        assert!((v - exact).abs() < 1e-10);
        let v = quad_gk(|t| 1.0 / (1.0 - t * t / 2.0).sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn exact_on_cubics() {
        let spec = QuadratureSpec::default();
        let p = |t: f64| 3.0 * t * t * t - 2.0 * t * t + t - 5.0;
        let exact = |t: f64| 0.75 * t.powi(4) - 2.0 / 3.0 * t.powi(3) + 0.5 * t * t - 5.0 * t;
        let v = quad_adaptive(p, -1.3, 2.1, &spec).unwrap();
        assert!((v - (exact(2.1) - exact(-1.3))).abs() < 1e-14 * 30.0);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let spec = QuadratureSpec::default();
        let a = quad_adaptive(f64::exp, 0.0, 1.0, &spec).unwrap();
        let b = quad_adaptive(f64::exp, 1.0, 0.0, &spec).unwrap();
        assert!((a + b).abs() < 1e-14);
        assert!((a - (1f64.exp() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn depth_exhaustion_reports_estimate() {
        let spec = QuadratureSpec::new(1e-300, 1e-300, 10).unwrap();
        match quad_adaptive(|t: f64| t.abs().sqrt(), -1.0, 1.0, &spec) {
            Err(Error::Accuracy { estimate, error_bound }) => {
                assert!((estimate - 4.0 / 3.0).abs() < 1e-3);
                assert!(error_bound > 0.0);
            }
            other => panic!("expected accuracy failure, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_integrand_is_domain_error() {
        let spec = QuadratureSpec::default();
        assert!(matches!(quad_adaptive(|t| 1.0 / t, 0.0, 1.0, &spec), Err(Error::Domain(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::new(0.0, 1e-10, 40).is_err());
        assert!(QuadratureSpec::new(1e-10, 1e-10, 9).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..12 {
            let (xs, ws) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let v: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use approx::assert_relative_eq;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn exponential_antiderivative(a in -3.0f64..3.0, lo in -2.0f64..0.0, hi in 0.0f64..2.0) {
                let spec = QuadratureSpec::fine();
                let got = quad_gk(|t| (a * t).exp(), lo, hi, &spec).unwrap();
                let want = if a == 0.0 { hi - lo } else { ((a * hi).exp() - (a * lo).exp()) / a };
                assert_relative_eq!(got, want, max_relative = 1e-12, epsilon = 1e-14);
            }

            #[test]
            fn gauss_legendre_is_exact(n in 2usize..24, k in 0i32..8) {
                let (x, w) = gauss_legendre(n);
                let deg = k.min(2 * n as i32 - 1);
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
                assert_relative_eq!(got, 1.0 / (deg as f64 + 1.0), max_relative = 1e-13);
            }
        }
    }
}
