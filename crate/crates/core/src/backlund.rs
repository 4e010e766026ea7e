//! The Bäcklund system
//!
//! ```text
//! ∂x w − ∂y θ = −2 sinh w sin θ
//! ∂y w + ∂x θ = −2 cosh w cos θ
//! ```
//!
//! linking `Δw = 2 sinh 2w` and `Δθ = −2 sin 2θ`, in both directions:
//! θ from a separable `w` with `∂y w(x,0) = 0`, `θ(0,0) = π/2`, and a
//! separable `w` from a one-soliton `θ(x)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{dilate, fd_gradient, fd_laplacian, stencil_mask, GridSpec, ScalarField};
use crate::kernel::{incomplete_elliptic_f_ext, jacobi_elliptic, ode_integrate_span, quad_gk, DenseSolution, OdeSpec, QuadratureSpec};
use crate::sinh_gordon::{SeparableSolution, TANH_GUARD};
use crate::verifier::ResidualReport;

/// Polynomial-form residuals are evaluated only where `|tan(θ/2)|` stays below this.
pub const THETA_HALF_GUARD: f64 = 2.0;

fn separable_factor(sol: &SeparableSolution, x: f64, y: f64) -> f64 {
    match sol.tanh_half(x, y) {
        Ok(p) if p.abs() < TANH_GUARD => p,
        _ => f64::NAN,
    }
}

/// `X(x) = ∫₀ˣ cosh w(t, 0) dt`.
pub fn x_integral(sol: &SeparableSolution, x: f64) -> Result<f64> {
    x_integral_with(sol, x, &QuadratureSpec::fine())
}

pub fn x_integral_with(sol: &SeparableSolution, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    quad_gk(
        |t| {
            let p = separable_factor(sol, t, 0.0);
            (1.0 + p * p) / (1.0 - p * p)
        },
        0.0,
        x,
        spec,
    )
    .map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("X integral path crosses |FG| = 1: {m}")),
        other => other,
    })
}

/// `Y(x, y) = ∫₀ʸ sinh w(x, s) ds`.
pub fn y_integral(sol: &SeparableSolution, x: f64, y: f64) -> Result<f64> {
    y_integral_with(sol, x, y, &QuadratureSpec::fine())
}

pub fn y_integral_with(sol: &SeparableSolution, x: f64, y: f64, spec: &QuadratureSpec) -> Result<f64> {
    quad_gk(
        |s| {
            let p = separable_factor(sol, x, s);
            2.0 * p / (1.0 - p * p)
        },
        0.0,
        y,
        spec,
    )
    .map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("Y integral path crosses |FG| = 1: {m}")),
        other => other,
    })
}

/// Solution of `dθ/dY = 2(sin θ + b)`, `θ(0) = π/2`, as a continuous function of `Y`.
///
/// With `t = tan(θ/2)` the equation is the Riccati equation
/// `t' = bt² + 2t + b`, whose linearisation has the propagator
/// `cosh(κY) I + sinh(κY)/κ M`, `M = [[1, b], [−b, −1]]`, `κ² = 1 − b²`.
pub fn theta_from_b(b: f64, y_int: f64) -> f64 {
    let q = 1.0 - b * b;
    let phi = if q > 0.0 {
        let k = q.sqrt();
        ((1.0 + b) / k * (k * y_int).tanh()).atan()
    } else if q < 0.0 {
        let w = (-q).sqrt();
        let lam = (1.0 + b) / w;
        let psi = w * y_int;
        let turns = (psi / PI).round();
        let r = psi - turns * PI;
        lam.signum() * (turns * PI + (lam.abs() * r.tan()).atan())
    } else {
        ((1.0 + b) * y_int).atan()
    };
    FRAC_PI_2 + 2.0 * phi
}

/// θ attached to a separable `w` with `∂y w(x, 0) = 0` and `θ(0, 0) = π/2`.
pub fn theta_bt0(sol: &SeparableSolution, x: f64, y: f64) -> Result<f64> {
    if !sol.is_bt0_eligible() {
        return Err(Error::InvalidArgument("∂y w(x, 0) does not vanish; the pair cannot be in BT0".into()));
    }
    let b = sol.b(x)?;
    let yi = y_integral(sol, x, y)?;
    Ok(theta_from_b(b, yi))
}

/// `tan(θ/2) = (√(b²−1) tan(J1 + J2) − 1)/b` with `J2 = √(b²−1) Y` and
/// `J1` fixed by `θ(x, 0) = π/2`, evaluated in complex arithmetic.
///
/// Undefined for `b ∈ {0, ±1}`; used as an independent check of [`theta_bt0`].
pub fn theta_bt0_lemma_tan_half(sol: &SeparableSolution, x: f64, y: f64) -> Result<f64> {
    let b = sol.b(x)?;
    if b == 0.0 || (b * b - 1.0).abs() < 1e-14 {
        return Err(Error::DegenerateParameter(format!("b({x}) = {b}: the closed form needs b ∉ {{0, ±1}}")));
    }
    let yi = y_integral(sol, x, y)?;
    let s = Complex64::new(b * b - 1.0, 0.0).sqrt();
    let j1 = ((b + 1.0) / s).atan();
    let t = (s * (j1 + s * yi).tan() - 1.0) / b;
    if t.im.abs() > 1e-10 * (1.0 + t.re.abs()) {
        return Err(Error::Accuracy { estimate: t.re, error_bound: t.im.abs() });
    }
    Ok(t.re)
}

/// A solution `θ(x)` of `θ'' = −2 sin 2θ`.
#[derive(Debug, Clone)]
pub struct SolitonTheta {
    sol: DenseSolution<3>,
    pub theta0: f64,
    pub dtheta0: f64,
    /// `c² = θ'(0)² + 4 sin²θ(0)`.
    pub c: f64,
    /// Phase in `sin θ(x) = sn(cx + c1 | 4/c²)`, when that representation exists.
    pub c1: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub constant: bool,
}

impl SolitonTheta {
    pub fn range(&self) -> (f64, f64) {
        self.sol.range()
    }

    /// `(θ, θ', ∫₀ˣ sin θ)`.
    pub fn state(&self, x: f64) -> Result<[f64; 3]> {
        self.sol.at(x)
    }

    pub fn theta(&self, x: f64) -> Result<f64> {
        Ok(self.sol.at(x)?[0])
    }

    pub fn dtheta(&self, x: f64) -> Result<f64> {
        Ok(self.sol.at(x)?[1])
    }

    /// Elliptic parameter `4/c²`.
    pub fn parameter(&self) -> f64 {
        4.0 / (self.c * self.c)
    }

    /// `(sn, cn, c·dn)` at `cx + c1`, to be compared with `(sin θ, cos θ, θ')`.
    pub fn elliptic_form(&self, x: f64) -> Result<(f64, f64, f64)> {
        let c1 = self
            .c1
            .ok_or_else(|| Error::DegenerateParameter("no sn representation for these initial data".into()))?;
        let j = jacobi_elliptic(self.c * x + c1, self.parameter())?;
        Ok((j.sn, j.cn, self.c * j.dn))
    }

    /// Points in `(0, x]` (or `[x, 0)`) where `sin θ` changes sign, ordered from 0 outward.
    pub fn sin_zeros(&self, x: f64) -> Result<Vec<f64>> {
        let nodes = self.sol.nodes();
        let mut ts: Vec<f64> = nodes.iter().cloned().filter(|&t| if x >= 0.0 { t > 0.0 && t < x } else { t < 0.0 && t > x }).collect();
        if x < 0.0 {
            ts.reverse();
        }
        ts.insert(0, 0.0);
        ts.push(x);
        let s = |t: f64| self.theta(t).map(f64::sin);
        let mut zeros = Vec::new();
        let mut prev = s(ts[0])?;
        for w in ts.windows(2) {
            let cur = s(w[1])?;
            if prev != 0.0 && cur != 0.0 && prev.signum() != cur.signum() {
                let (mut lo, mut hi) = (w[0], w[1]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if s(mid)?.signum() == prev.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if (hi - lo).abs() < 1e-15 * (1.0 + mid.abs()) {
                        break;
                    }
                }
                zeros.push(0.5 * (lo + hi));
            } else if cur == 0.0 && w[1] != x {
                zeros.push(w[1]);
            }
            if cur != 0.0 {
                prev = cur;
            }
        }
        Ok(zeros)
    }
}

/// Integrate `θ'' = −2 sin 2θ` over `range` (which must contain 0).
pub fn soliton_theta(theta0: f64, dtheta0: f64, range: (f64, f64), spec: &OdeSpec) -> Result<SolitonTheta> {
    if !(theta0.is_finite() && dtheta0.is_finite()) {
        return Err(Error::InvalidArgument("initial data must be finite".into()));
    }
    let sol = ode_integrate_span(
        |_, s: &[f64; 3]| [s[1], -2.0 * (2.0 * s[0]).sin(), s[0].sin()],
        [theta0, dtheta0, 0.0],
        0.0,
        range.0,
        range.1,
        spec,
    )?;
    let c = (dtheta0 * dtheta0 + 4.0 * theta0.sin().powi(2)).sqrt();
    let constant = dtheta0 == 0.0 && (2.0 * theta0).sin().abs() < 1e-15;
    let c1 = if c == 0.0 { None } else { elliptic_phase(theta0, dtheta0, c) };
    let a = 2.0 * theta0.cos() + dtheta0;
    let b = 2.0 * theta0.cos() - dtheta0;
    Ok(SolitonTheta { sol, theta0, dtheta0, c, c1, a, b, constant })
}

fn elliptic_phase(theta0: f64, dtheta0: f64, c: f64) -> Option<f64> {
    let n = 4.0 / (c * c);
    if n <= 1.0 {
        // sn = sin θ0, cn = cos θ0, dn = θ'0/c > 0: amplitude θ0
        if dtheta0 <= 0.0 {
            return None;
        }
        incomplete_elliptic_f_ext(theta0, n).ok()
    } else {
        // sn(v|n) = sn(√n v|1/n)/√n, cn(v|n) = dn(√n v|1/n), dn(v|n) = cn(√n v|1/n)
        if theta0.cos() <= 0.0 {
            return None;
        }
        let psi = (2.0 * theta0.sin()).atan2(dtheta0);
        incomplete_elliptic_f_ext(psi, 1.0 / n).ok().map(|v| v * c / 2.0)
    }
}

/// The `y`-factor in `tanh(w/2) = F(x) G(y)`: the solution of
/// `G' = −(bG² + a)/2`, `G(0) = tanh(w00/2)`, in closed form.
#[derive(Debug, Clone, Copy)]
enum GFactor {
    /// `−ρ tan(ν y + k)`
    Tan { rho: f64, nu: f64, k: f64 },
    /// `−ρ tanh(ν y + k)`
    Tanh { rho: f64, nu: f64, k: f64 },
    /// `−ρ coth(ν y + k)`
    Coth { rho: f64, nu: f64, k: f64 },
    Const(f64),
}

impl GFactor {
    fn new(a: f64, b: f64, t0: f64) -> Self {
        let ab = a * b;
        if ab > 0.0 {
            let rho = (a / b).sqrt();
            let nu = b.signum() * ab.sqrt() / 2.0;
            Self::Tan { rho, nu, k: (-t0 / rho).atan() }
        } else {
            let rho = (-a / b).sqrt();
            let nu = -b * rho / 2.0;
            let r = -t0 / rho;
            if r.abs() < 1.0 {
                Self::Tanh { rho, nu, k: r.atanh() }
            } else if r.abs() > 1.0 {
                Self::Coth { rho, nu, k: (1.0 / r).atanh() }
            } else {
                Self::Const(t0)
            }
        }
    }

    fn eval(&self, y: f64) -> (f64, f64) {
        match *self {
            Self::Tan { rho, nu, k } => {
                let t = (nu * y + k).tan();
                (-rho * t, -rho * nu * (1.0 + t * t))
            }
            Self::Tanh { rho, nu, k } => {
                let t = (nu * y + k).tanh();
                (-rho * t, -rho * nu * (1.0 - t * t))
            }
            Self::Coth { rho, nu, k } => {
                let t = 1.0 / (nu * y + k).tanh();
                (-rho * t, -rho * nu * (1.0 - t * t))
            }
            Self::Const(v) => (v, 0.0),
        }
    }
}

/// `w` with `tanh(w/2) = F(x) G(y)` built from a one-soliton θ(x), where
/// `F = (θ' + 2cos θ)/a` and `w(0, 0) = w00`.
#[derive(Clone)]
pub struct SolitonW {
    pub st: Arc<SolitonTheta>,
    pub w00: f64,
    pub a: f64,
    pub b: f64,
    /// `tanh(w00/2)`
    pub t0: f64,
    g: GFactor,
}

impl fmt::Debug for SolitonW {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolitonW").field("w00", &self.w00).field("a", &self.a).field("b", &self.b).finish()
    }
}

pub fn w_from_theta(st: Arc<SolitonTheta>, w00: f64) -> Result<SolitonW> {
    if !w00.is_finite() {
        return Err(Error::InvalidArgument("w00 must be finite".into()));
    }
    let (a, b) = (st.a, st.b);
    if b.abs() < 1e-14 {
        return Err(Error::DegenerateParameter("b = 2cos θ(0) − θ'(0) vanishes; the separable form degenerates".into()));
    }
    if a.abs() < 1e-14 {
        return Err(Error::DegenerateParameter("a = 2cos θ(0) + θ'(0) vanishes; F is undefined".into()));
    }
    let t0 = (0.5 * w00).tanh();
    Ok(SolitonW { st, w00, a, b, t0, g: GFactor::new(a, b, t0) })
}

impl SolitonW {
    /// `(F, F')` with `F = (θ' + 2cos θ)/a`.
    pub fn big_f(&self, x: f64) -> Result<(f64, f64)> {
        let [th, dth, _] = self.st.state(x)?;
        let f = (dth + 2.0 * th.cos()) / self.a;
        Ok((f, -2.0 * th.sin() * f))
    }

    /// `(G, G')`.
    pub fn big_g(&self, y: f64) -> (f64, f64) {
        self.g.eval(y)
    }

    pub fn tanh_half(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.big_f(x)?.0 * self.big_g(y).0)
    }

    pub fn w(&self, x: f64, y: f64) -> Result<f64> {
        let p = self.tanh_half(x, y)?;
        if !(p.abs() < TANH_GUARD) {
            return Err(Error::Domain(format!("|F G| = {} at ({x}, {y}) exceeds the guard", p.abs())));
        }
        Ok(2.0 * p.atanh())
    }

    /// `(a − bG²)/(a + bG²)`, which equals `cos(√(ab) y + 2k)` when `ab > 0`.
    pub fn cos2(&self, y: f64) -> f64 {
        let g = self.big_g(y).0;
        let bg = self.b * g * g;
        (self.a - bg) / (self.a + bg)
    }

    /// `2cos θ(0)·cos 2k − θ'(0)`.
    pub fn denominator(&self) -> f64 {
        2.0 * self.st.theta0.cos() * self.cos2(0.0) - self.st.dtheta0
    }
}

/// `|Δθ + 2 sin 2θ|` over nodes with a valid 5-point stencil.
pub fn sine_gordon_residual(theta: &ScalarField, tol: f64) -> Result<ResidualReport> {
    let lap = fd_laplacian(theta);
    let res: Vec<f64> = lap.values.iter().zip(&theta.values).map(|(l, v)| l + 2.0 * (2.0 * v).sin()).collect();
    ResidualReport::from_values("sine_gordon", &res, &lap.mask, tol, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BtClass {
    Bt,
    Bt0,
}

/// Pointwise evaluators of a candidate pair `(w, θ)`.
pub trait PairField: Send + Sync {
    fn w(&self, x: f64, y: f64) -> Result<f64>;
    fn theta(&self, x: f64, y: f64) -> Result<f64>;
}

struct ClosedPair<W, T> {
    w: W,
    theta: T,
}

impl<W, T> PairField for ClosedPair<W, T>
where
    W: Fn(f64, f64) -> f64 + Send + Sync,
    T: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn w(&self, x: f64, y: f64) -> Result<f64> {
        let v = (self.w)(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("w is singular at ({x}, {y})")))
        }
    }

    fn theta(&self, x: f64, y: f64) -> Result<f64> {
        Ok((self.theta)(x, y))
    }
}

struct SeparableBt0 {
    sol: SeparableSolution,
}

impl PairField for SeparableBt0 {
    fn w(&self, x: f64, y: f64) -> Result<f64> {
        self.sol.w(x, y)
    }

    fn theta(&self, x: f64, y: f64) -> Result<f64> {
        theta_bt0(&self.sol, x, y)
    }
}

impl PairField for SolitonW {
    fn w(&self, x: f64, y: f64) -> Result<f64> {
        SolitonW::w(self, x, y)
    }

    fn theta(&self, x: f64, _y: f64) -> Result<f64> {
        self.st.theta(x)
    }
}

#[derive(Clone)]
pub struct BtPair {
    pub field: Arc<dyn PairField>,
    pub class: BtClass,
}

impl fmt::Debug for BtPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BtPair").field("class", &self.class).finish()
    }
}

impl BtPair {
    pub fn new(field: Arc<dyn PairField>, class: BtClass) -> Self {
        Self { field, class }
    }

    pub fn from_fns(
        w: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        theta: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        class: BtClass,
    ) -> Self {
        Self::new(Arc::new(ClosedPair { w, theta }), class)
    }

    /// `(w, θ) = (0, π/2)`.
    pub fn trivial() -> Self {
        Self::from_fns(|_, _| 0.0, |_, _| FRAC_PI_2, BtClass::Bt0)
    }

    /// `tanh(w/2) = 2y/cosh 2x`, `tan(θ/2) = coth x`, with θ taken in its
    /// continuous form `π − 2 atan(tanh x)`.
    pub fn example3() -> Self {
        Self::from_fns(
            |x, y| {
                let p = 2.0 * y / (2.0 * x).cosh();
                if p.abs() < TANH_GUARD {
                    2.0 * p.atanh()
                } else {
                    f64::NAN
                }
            },
            |x, _| PI - 2.0 * x.tanh().atan(),
            BtClass::Bt,
        )
    }

    pub fn bt0(sol: SeparableSolution) -> Result<Self> {
        if !sol.is_bt0_eligible() {
            return Err(Error::InvalidArgument("∂y w(x, 0) does not vanish; not a BT0 candidate".into()));
        }
        Ok(Self::new(Arc::new(SeparableBt0 { sol }), BtClass::Bt0))
    }

    pub fn soliton(sw: SolitonW) -> Self {
        let class = if (sw.st.theta0 - FRAC_PI_2).abs() < 1e-15 && sw.st.dtheta0 == 0.0 { BtClass::Bt0 } else { BtClass::Bt };
        Self::new(Arc::new(sw), class)
    }

    pub fn w(&self, x: f64, y: f64) -> Result<f64> {
        self.field.w(x, y)
    }

    pub fn theta(&self, x: f64, y: f64) -> Result<f64> {
        self.field.theta(x, y)
    }

    /// Sample both fields; nodes where either evaluation fails are masked
    /// together with their 3×3 neighbourhoods.
    pub fn sample(&self, grid: GridSpec) -> Result<(ScalarField, ScalarField)> {
        grid.validate()?;
        let n = grid.len();
        let mut wv = Vec::with_capacity(n);
        let mut tv = Vec::with_capacity(n);
        let mut ok = Vec::with_capacity(n);
        for k in 0..n {
            let (x, y) = grid.coords(k);
            match (self.w(x, y), self.theta(x, y)) {
                (Ok(w), Ok(t)) if w.is_finite() && t.is_finite() => {
                    wv.push(w);
                    tv.push(t);
                    ok.push(true);
                }
                _ => {
                    wv.push(f64::NAN);
                    tv.push(f64::NAN);
                    ok.push(false);
                }
            }
        }
        let mask = dilate(&grid, &ok);
        if !mask.iter().any(|&m| m) {
            return Err(Error::EmptyField("pair is singular on the whole grid".into()));
        }
        Ok((ScalarField { grid, values: wv, mask: mask.clone() }, ScalarField { grid, values: tv, mask }))
    }
}

/// Raw and polynomial-form Bäcklund residuals of sampled fields:
///
/// ```text
/// ∂x w − ∂y θ + 2 sinh w sin θ
/// ∂y w + ∂x θ + 2 cosh w cos θ
/// ∂x W (1+Θ²) − ∂y Θ (1−W²) + 4WΘ
/// ∂y W (1+Θ²) + ∂x Θ (1−W²) + (1+W²)(1−Θ²)
/// ```
///
/// with `W = tanh(w/2)`, `Θ = tan(θ/2)`. The polynomial form is restricted
/// to stencils where `|Θ| <= THETA_HALF_GUARD`; its two reports are omitted
/// when no such stencil exists.
pub fn bt_residual_fields(w: &ScalarField, theta: &ScalarField, tol: f64) -> Result<Vec<ResidualReport>> {
    if w.grid != theta.grid {
        return Err(Error::InvalidArgument("w and θ are sampled on different grids".into()));
    }
    let grid = w.grid;
    let both: Vec<bool> = w.mask.iter().zip(&theta.mask).map(|(&a, &b)| a && b).collect();
    let wm = ScalarField { grid, values: w.values.clone(), mask: both.clone() };
    let tm = ScalarField { grid, values: theta.values.clone(), mask: both.clone() };
    let (wx, wy) = fd_gradient(&wm);
    let (tx, ty) = fd_gradient(&tm);
    let n = grid.len();
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    for k in 0..n {
        if !wx.mask[k] {
            continue;
        }
        let (sh, ch) = (w.values[k].sinh(), w.values[k].cosh());
        let (st, ct) = theta.values[k].sin_cos();
        r1[k] = wx.values[k] - ty.values[k] + 2.0 * sh * st;
        r2[k] = wy.values[k] + tx.values[k] + 2.0 * ch * ct;
    }

    let big_w = wm.map(|v| (0.5 * v).tanh());
    let th_vals: Vec<f64> = theta.values.iter().map(|v| (0.5 * v).tan()).collect();
    let th_mask: Vec<bool> = both.iter().zip(&th_vals).map(|(&m, v)| m && v.abs() <= THETA_HALF_GUARD).collect();
    let big_t = ScalarField { grid, values: th_vals, mask: th_mask };
    let (bwx, bwy) = fd_gradient(&big_w);
    let (btx, bty) = fd_gradient(&big_t);
    let pmask: Vec<bool> = (0..n).map(|k| bwx.mask[k] && btx.mask[k]).collect();
    let excluded = stencil_mask(&grid, &both).iter().zip(&pmask).filter(|(&s, &p)| s && !p).count();
    let mut p1 = vec![0.0; n];
    let mut p2 = vec![0.0; n];
    for k in 0..n {
        if !pmask[k] {
            continue;
        }
        let (a, t) = (big_w.values[k], big_t.values[k]);
        let (ow, ot) = (1.0 - a * a, 1.0 + t * t);
        p1[k] = bwx.values[k] * ot - bty.values[k] * ow + 4.0 * a * t;
        p2[k] = bwy.values[k] * ot + btx.values[k] * ow + (1.0 + a * a) * (1.0 - t * t);
    }
    let mut out = vec![
        ResidualReport::from_values("backlund_x", &r1, &wx.mask, tol, 0)?,
        ResidualReport::from_values("backlund_y", &r2, &wx.mask, tol, 0)?,
    ];
    if pmask.iter().any(|&m| m) {
        out.push(ResidualReport::from_values("backlund_poly_x", &p1, &pmask, tol, excluded)?);
        out.push(ResidualReport::from_values("backlund_poly_y", &p2, &pmask, tol, excluded)?);
    }
    Ok(out)
}

/// Bäcklund residuals of a pair sampled on `grid`.
pub fn bt_residual(pair: &BtPair, grid: GridSpec, tol: f64) -> Result<Vec<ResidualReport>> {
    let (w, t) = pair.sample(grid)?;
    bt_residual_fields(&w, &t, tol)
}

/// Worst raw Bäcklund residual over small patches (spacing `h`) centred on
/// `probes`; patches that are singular are skipped.
pub fn bt_probe_residual(pair: &BtPair, probes: &[(f64, f64)], h: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut seen = false;
    for &(x, y) in probes {
        let g = GridSpec::patch(x, y, h, 4)?;
        let Ok((w, t)) = pair.sample(g) else { continue };
        let Ok(r) = bt_residual_fields(&w, &t, 1.0) else { continue };
        seen = true;
        worst = worst.max(r[0].max_abs).max(r[1].max_abs);
    }
    if !seen {
        return Err(Error::EmptyField("no probe patch could be evaluated".into()));
    }
    Ok(worst)
}
