//! Separable solutions `w = 2 artanh(F(x) G(y))` of `Δw = 2 sinh 2w`.
//!
//! `F` and `G` satisfy the paired quartic equations
//! `F'² = AF⁴ + BF² + C` and `G'² = −CG⁴ − (B−4)G² − A`. They are
//! integrated in the differentiated form `F'' = 2AF³ + BF`,
//! `G'' = −2CG³ − (B−4)G`, which has no sign ambiguity at turning points,
//! and the first-order relations are monitored along the solution.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{fd_gradient, fd_laplacian, fd_mixed, mask_singular, GridSpec, ScalarField};
use crate::kernel::{ode_integrate_span, DenseSolution, OdeSpec};
use crate::verifier::ResidualReport;

/// Largest admissible `|tanh(w/2)|`.
pub const TANH_GUARD: f64 = 1.0 - 1e-6;

const INITIAL_DATA_TOL: f64 = 1e-10;
const DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl OdeCoefficients {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if ![a, b, c].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("ODE coefficients must be finite".into()));
        }
        if a == 0.0 && b == 0.0 && c == 0.0 {
            return Err(Error::InvalidArgument("ODE coefficients are all zero".into()));
        }
        Ok(Self { a, b, c })
    }

    /// `F'² − (AF⁴ + BF² + C)`, scaled by the size of the terms.
    pub fn f_defect(&self, f: f64, df: f64) -> f64 {
        let rhs = self.a * f.powi(4) + self.b * f * f + self.c;
        (df * df - rhs).abs() / (1.0 + df * df + (self.a * f.powi(4)).abs() + (self.b * f * f).abs() + self.c.abs())
    }

    /// `G'² + CG⁴ + (B−4)G² + A`, scaled likewise.
    pub fn g_defect(&self, g: f64, dg: f64) -> f64 {
        let rhs = -self.c * g.powi(4) - (self.b - 4.0) * g * g - self.a;
        (dg * dg - rhs).abs()
            / (1.0 + dg * dg + (self.c * g.powi(4)).abs() + ((self.b - 4.0) * g * g).abs() + self.a.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ode,
    Kenmotsu,
    ClosedForm,
}

/// A one-variable factor with its derivative.
pub trait Profile: Send + Sync {
    /// `(value, derivative)` at `t`.
    fn eval(&self, t: f64) -> Result<(f64, f64)>;
    fn range(&self) -> (f64, f64);
}

/// Closed-form factor.
#[derive(Clone)]
pub struct ClosedProfile {
    f: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
}

impl ClosedProfile {
    pub fn new(f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f) }
    }
}

impl Profile for ClosedProfile {
    fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let (v, d) = (self.f)(t);
        if v.is_finite() && d.is_finite() {
            Ok((v, d))
        } else {
            Err(Error::Domain(format!("closed-form factor is singular at {t}")))
        }
    }

    fn range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Factor integrated directly from the second-order equation; state `(F, F')`.
pub struct OdeProfile {
    sol: DenseSolution<2>,
}

impl Profile for OdeProfile {
    fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let v = self.sol.at(t)?;
        Ok((v[0], v[1]))
    }

    fn range(&self) -> (f64, f64) {
        self.sol.range()
    }
}

/// Factor `scale·exp(−∫₀ᵗ f)` with `f'' = 2f³ − 4κf`; state `(f, f', ∫f)`.
pub struct ExpProfile {
    scale: f64,
    sol: DenseSolution<3>,
}

impl ExpProfile {
    /// The generating function `f(t)`.
    pub fn generator(&self, t: f64) -> Result<f64> {
        Ok(self.sol.at(t)?[0])
    }
}

impl Profile for ExpProfile {
    fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.sol.at(t)?;
        let v = self.scale * (-s[2]).exp();
        Ok((v, -s[0] * v))
    }

    fn range(&self) -> (f64, f64) {
        self.sol.range()
    }
}

/// Evaluator for `w(x, y) = 2 artanh(F(x) G(y))`.
#[derive(Clone)]
pub struct SeparableSolution {
    pub coeffs: OdeCoefficients,
    pub f: Arc<dyn Profile>,
    pub g: Arc<dyn Profile>,
    pub f0: f64,
    pub g0: f64,
    pub provenance: Provenance,
}

impl fmt::Debug for SeparableSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableSolution")
            .field("coeffs", &self.coeffs)
            .field("f0", &self.f0)
            .field("g0", &self.g0)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl SeparableSolution {
    pub fn big_f(&self, x: f64) -> Result<(f64, f64)> {
        self.f.eval(x)
    }

    pub fn big_g(&self, y: f64) -> Result<(f64, f64)> {
        self.g.eval(y)
    }

    /// `tanh(w/2) = F(x) G(y)`.
    pub fn tanh_half(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.big_f(x)?.0 * self.big_g(y)?.0)
    }

    pub fn w(&self, x: f64, y: f64) -> Result<f64> {
        let p = self.tanh_half(x, y)?;
        if p.abs() >= TANH_GUARD {
            return Err(Error::Domain(format!("|F G| = {} at ({x}, {y}) exceeds the guard", p.abs())));
        }
        Ok(2.0 * p.atanh())
    }

    /// `(w, ∂x w, ∂y w)`.
    pub fn w_with_gradient(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let (f, df) = self.big_f(x)?;
        let (g, dg) = self.big_g(y)?;
        let p = f * g;
        if p.abs() >= TANH_GUARD {
            return Err(Error::Domain(format!("|F G| = {} at ({x}, {y}) exceeds the guard", p.abs())));
        }
        let k = 2.0 / (1.0 - p * p);
        Ok((2.0 * p.atanh(), k * df * g, k * f * dg))
    }

    /// `b(x) = F'(x) / (2F(x))`.
    pub fn b(&self, x: f64) -> Result<f64> {
        let (f, df) = self.big_f(x)?;
        if f == 0.0 {
            return Err(Error::Domain(format!("F vanishes at x = {x}")));
        }
        Ok(df / (2.0 * f))
    }

    /// `∂y w(x, 0) = 0` for every `x`, i.e. `G'(0) = 0`.
    pub fn is_bt0_eligible(&self) -> bool {
        match self.big_g(0.0) {
            Ok((g, dg)) => dg.abs() <= 1e-12 * (1.0 + g.abs()),
            Err(_) => false,
        }
    }

    /// Sample `w` with the `|FG| < 1 − 1e−6` guard and 3×3 dilation.
    pub fn sample_w(&self, grid: GridSpec) -> Result<ScalarField> {
        mask_singular(
            |x, y| self.w(x, y).unwrap_or(f64::NAN),
            grid,
            |x, y| self.tanh_half(x, y).map(|p| p.abs() < TANH_GUARD).unwrap_or(false),
        )
    }

    /// Largest scaled defect of the two first-order relations over `n` samples
    /// of each range.
    pub fn first_order_drift(&self, xr: (f64, f64), yr: (f64, f64), n: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..=n {
            let x = xr.0 + (xr.1 - xr.0) * k as f64 / n as f64;
            let y = yr.0 + (yr.1 - yr.0) * k as f64 / n as f64;
            let (f, df) = self.big_f(x)?;
            let (g, dg) = self.big_g(y)?;
            worst = worst.max(self.coeffs.f_defect(f, df)).max(self.coeffs.g_defect(g, dg));
        }
        Ok(worst)
    }
}

fn check_range(name: &str, r: (f64, f64)) -> Result<()> {
    if !(r.0 <= 0.0 && 0.0 <= r.1 && r.0 < r.1 && r.0.is_finite() && r.1.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} range [{}, {}] must contain 0", r.0, r.1)));
    }
    Ok(())
}

fn drift_guard(sol: &SeparableSolution, xr: (f64, f64), yr: (f64, f64)) -> Result<()> {
    let drift = sol.first_order_drift(xr, yr, 400)?;
    if drift > DRIFT_TOL {
        return Err(Error::Accuracy { estimate: drift, error_bound: DRIFT_TOL });
    }
    Ok(())
}

/// Separable solution from initial data at the origin.
pub fn make_separable(
    coeffs: OdeCoefficients,
    f0: f64,
    df0: f64,
    g0: f64,
    dg0: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    spec: &OdeSpec,
) -> Result<SeparableSolution> {
    check_range("x", x_range)?;
    check_range("y", y_range)?;
    if ![f0, df0, g0, dg0].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("initial data must be finite".into()));
    }
    if coeffs.f_defect(f0, df0) > INITIAL_DATA_TOL {
        return Err(Error::InvalidArgument(format!(
            "F initial data violate F'² = AF⁴ + BF² + C (defect {:e})",
            coeffs.f_defect(f0, df0)
        )));
    }
    if coeffs.g_defect(g0, dg0) > INITIAL_DATA_TOL {
        return Err(Error::InvalidArgument(format!(
            "G initial data violate G'² = −CG⁴ − (B−4)G² − A (defect {:e})",
            coeffs.g_defect(g0, dg0)
        )));
    }
    let OdeCoefficients { a, b, c } = coeffs;
    let g_accel = -2.0 * c * g0.powi(3) - (b - 4.0) * g0;
    if dg0 == 0.0 && g_accel == 0.0 {
        return Err(Error::InvalidArgument("G is constant for these data; w would depend on x only".into()));
    }
    let fs = ode_integrate_span(
        |_, s: &[f64; 2]| [s[1], 2.0 * a * s[0].powi(3) + b * s[0]],
        [f0, df0],
        0.0,
        x_range.0,
        x_range.1,
        spec,
    )?;
    let gs = ode_integrate_span(
        |_, s: &[f64; 2]| [s[1], -2.0 * c * s[0].powi(3) - (b - 4.0) * s[0]],
        [g0, dg0],
        0.0,
        y_range.0,
        y_range.1,
        spec,
    )?;
    let sol = SeparableSolution {
        coeffs,
        f: Arc::new(OdeProfile { sol: fs }),
        g: Arc::new(OdeProfile { sol: gs }),
        f0,
        g0,
        provenance: Provenance::Ode,
    };
    drift_guard(&sol, x_range, y_range)?;
    Ok(sol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KenmotsuParams {
    pub alpha: f64,
    pub beta: f64,
    pub w0: f64,
}

impl KenmotsuParams {
    pub fn new(alpha: f64, beta: f64, w0: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && w0 > 0.0) || ![alpha, beta, w0].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha, beta, w0 must be positive and finite (got {alpha}, {beta}, {w0})"
            )));
        }
        let ch = w0.cosh();
        if (alpha + beta - ch).abs() > 1e-10 * ch {
            return Err(Error::InvalidArgument(format!("alpha + beta = {} differs from cosh(w0) = {ch}", alpha + beta)));
        }
        Ok(Self { alpha, beta, w0 })
    }

    /// `w0 = arcosh(α + β)`.
    pub fn from_alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha + beta > 1.0) {
            return Err(Error::InvalidArgument(format!("alpha + beta = {} must exceed 1", alpha + beta)));
        }
        Self::new(alpha, beta, (alpha + beta).acosh())
    }

    /// `(A, B, C)` of the quartic equations for `F = tanh(w0/2) e^{−∫f}`.
    pub fn coefficients(&self) -> OdeCoefficients {
        let t2 = (0.5 * self.w0).tanh().powi(2);
        let kappa = 1.0 + self.alpha.powi(2) - self.beta.powi(2);
        OdeCoefficients {
            a: (2.0 * self.alpha - kappa) / t2,
            b: 2.0 * kappa,
            c: -t2 * (2.0 * self.alpha + kappa),
        }
    }
}

/// Family with `f(0) = g(0) = 0`, `f'(0) = −4α`, `g'(0) = −4β`,
/// `F = tanh(w0/2) e^{−∫f}`, `G = e^{−∫g}`.
pub fn make_kenmotsu(p: KenmotsuParams, x_range: (f64, f64), y_range: (f64, f64), spec: &OdeSpec) -> Result<SeparableSolution> {
    let p = KenmotsuParams::new(p.alpha, p.beta, p.w0)?;
    check_range("x", x_range)?;
    check_range("y", y_range)?;
    let kf = 1.0 + p.alpha.powi(2) - p.beta.powi(2);
    let kg = 1.0 + p.beta.powi(2) - p.alpha.powi(2);
    let rhs = |k: f64| move |_: f64, s: &[f64; 3]| [s[1], 2.0 * s[0].powi(3) - 4.0 * k * s[0], s[0]];
    let fs = ode_integrate_span(rhs(kf), [0.0, -4.0 * p.alpha, 0.0], 0.0, x_range.0, x_range.1, spec)?;
    let gs = ode_integrate_span(rhs(kg), [0.0, -4.0 * p.beta, 0.0], 0.0, y_range.0, y_range.1, spec)?;
    let t = (0.5 * p.w0).tanh();
    let sol = SeparableSolution {
        coeffs: p.coefficients(),
        f: Arc::new(ExpProfile { scale: t, sol: fs }),
        g: Arc::new(ExpProfile { scale: 1.0, sol: gs }),
        f0: t,
        g0: 1.0,
        provenance: Provenance::Kenmotsu,
    };
    drift_guard(&sol, x_range, y_range)?;
    Ok(sol)
}

/// `tanh(w/2) = 2y / cosh 2x`.
pub fn example3() -> SeparableSolution {
    SeparableSolution {
        coeffs: OdeCoefficients { a: -4.0, b: 4.0, c: 0.0 },
        f: Arc::new(ClosedProfile::new(|x| {
            let c = (2.0 * x).cosh();
            (1.0 / c, -2.0 * (2.0 * x).sinh() / (c * c))
        })),
        g: Arc::new(ClosedProfile::new(|y| (2.0 * y, 2.0))),
        f0: 1.0,
        g0: 0.0,
        provenance: Provenance::ClosedForm,
    }
}

/// `tanh(w/2) = (√2/2) cosh(2√2 y) / cos 2x`.
pub fn example5() -> SeparableSolution {
    let r = std::f64::consts::SQRT_2;
    SeparableSolution {
        coeffs: OdeCoefficients { a: 8.0, b: -4.0, c: 0.0 },
        f: Arc::new(ClosedProfile::new(move |x| {
            let c = (2.0 * x).cos();
            (r / (2.0 * c), r * (2.0 * x).sin() / (c * c))
        })),
        g: Arc::new(ClosedProfile::new(move |y| ((2.0 * r * y).cosh(), 2.0 * r * (2.0 * r * y).sinh()))),
        f0: r / 2.0,
        g0: 1.0,
        provenance: Provenance::ClosedForm,
    }
}

/// `|Δw − 2 sinh 2w|` over nodes with a valid 5-point stencil.
pub fn sinh_gordon_residual(w: &ScalarField, tol: f64) -> Result<ResidualReport> {
    let lap = fd_laplacian(w);
    let res: Vec<f64> = lap.values.iter().zip(&w.values).map(|(l, v)| l - 2.0 * (2.0 * v).sinh()).collect();
    ResidualReport::from_values("sinh_gordon", &res, &lap.mask, tol, 0)
}

/// `|∂xy w − ∂x w ∂y w coth w|` where `|w| > 1e−3`.
pub fn mixed_derivative_residual(w: &ScalarField, tol: f64) -> Result<ResidualReport> {
    let (wx, wy) = fd_gradient(w);
    let wxy = fd_mixed(w);
    let mut mask = wxy.mask.clone();
    let mut excluded = 0;
    let mut res = vec![0.0; w.grid.len()];
    for k in 0..res.len() {
        if !mask[k] {
            continue;
        }
        if w.values[k].abs() <= 1e-3 {
            mask[k] = false;
            excluded += 1;
            continue;
        }
        res[k] = wxy.values[k] - wx.values[k] * wy.values[k] / w.values[k].tanh();
    }
    ResidualReport::from_values("mixed_derivative", &res, &mask, tol, excluded)
}
