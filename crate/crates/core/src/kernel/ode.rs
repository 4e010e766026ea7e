//! Dormand-Prince 5(4) integrator with C² quintic Hermite dense output.
//!
//! Second derivatives at the accepted nodes come from a fourth-order
//! difference of the right-hand side along the solution's tangent line, so
//! the interpolant is twice continuously differentiable. That matters when
//! its values are fed into finite-difference residual checks.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSpec {
    pub step_tol: f64,
    pub max_step: f64,
    pub dense_output: bool,
}

impl OdeSpec {
    pub fn new(step_tol: f64, max_step: f64, dense_output: bool) -> Result<Self> {
        if !(step_tol > 0.0 && step_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("step_tol must be positive, got {step_tol}")));
        }
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("max_step must be positive, got {max_step}")));
        }
        Ok(Self { step_tol, max_step, dense_output })
    }
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self { step_tol: 1e-12, max_step: 0.01, dense_output: true }
    }
}

const MAX_STEPS: usize = 2_000_000;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Accepted nodes of an integration, with values and first and second
/// derivatives, sorted by increasing `t`.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    t: Vec<f64>,
    y: Vec<[f64; N]>,
    dy: Vec<[f64; N]>,
    d2y: Vec<[f64; N]>,
    dense: bool,
}

impl<const N: usize> DenseSolution<N> {
    pub fn range(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn node_values(&self) -> &[[f64; N]] {
        &self.y
    }

    /// State at the far end of the integration.
    pub fn end(&self, toward_hi: bool) -> [f64; N] {
        if toward_hi {
            self.y[self.y.len() - 1]
        } else {
            self.y[0]
        }
    }

    fn locate(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(t >= lo - slack && t <= hi + slack) {
            return Err(Error::Domain(format!("t = {t} outside integrated range [{lo}, {hi}]")));
        }
        if !self.dense {
            return match self.t.iter().position(|&s| (s - t).abs() <= slack) {
                Some(i) => Ok(i),
                None => Err(Error::InvalidArgument("dense output was not requested".into())),
            };
        }
        let i = self.t.partition_point(|&s| s <= t);
        Ok(i.clamp(1, self.t.len() - 1) - 1)
    }

    fn poly(&self, i: usize, t: f64) -> ([f64; N], [f64; N], [f64; N]) {
        if !self.dense || self.t.len() == 1 {
            return (self.y[i], self.dy[i], self.d2y[i]);
        }
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let mut v = [0.0; N];
        let mut d1 = [0.0; N];
        let mut d2 = [0.0; N];
        for k in 0..N {
            let a = self.y[i][k];
            let b = h * self.dy[i][k];
            let c = h * h * self.d2y[i][k];
            let d = self.y[i + 1][k];
            let e = h * self.dy[i + 1][k];
            let g = h * h * self.d2y[i + 1][k];
            let c3 = -10.0 * a - 6.0 * b - 1.5 * c + 10.0 * d - 4.0 * e + 0.5 * g;
            let c4 = 15.0 * a + 8.0 * b + 1.5 * c - 15.0 * d + 7.0 * e - g;
            let c5 = -6.0 * a - 3.0 * b - 0.5 * c + 6.0 * d - 3.0 * e + 0.5 * g;
            let c2 = 0.5 * c;
            v[k] = a + s * (b + s * (c2 + s * (c3 + s * (c4 + s * c5))));
            d1[k] = (b + s * (2.0 * c2 + s * (3.0 * c3 + s * (4.0 * c4 + s * 5.0 * c5)))) / h;
            d2[k] = (2.0 * c2 + s * (6.0 * c3 + s * (12.0 * c4 + s * 20.0 * c5))) / (h * h);
        }
        (v, d1, d2)
    }

    /// Interpolated state.
    pub fn at(&self, t: f64) -> Result<[f64; N]> {
        let i = self.locate(t)?;
        Ok(self.poly(i, t).0)
    }

    /// Interpolated state with its first and second derivatives.
    pub fn at_with_derivs(&self, t: f64) -> Result<([f64; N], [f64; N], [f64; N])> {
        let i = self.locate(t)?;
        Ok(self.poly(i, t))
    }
}

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[[f64; N]], coef: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (kj, &a) in k.iter().zip(coef) {
        if a != 0.0 {
            for i in 0..N {
                out[i] += h * a * kj[i];
            }
        }
    }
    out
}

fn second_derivative<const N: usize, F>(rhs: &F, t: f64, y: &[f64; N], f: &[f64; N]) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let d = 1e-3;
    let g = |tau: f64| {
        let mut p = *y;
        for i in 0..N {
            p[i] += tau * f[i];
        }
        rhs(t + tau, &p)
    };
    let (p1, m1, p2, m2) = (g(d), g(-d), g(2.0 * d), g(-2.0 * d));
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * d);
    }
    out
}

/// Integrate `y' = rhs(t, y)` from `x0` to `x1` (either direction).
pub fn ode_integrate<const N: usize, F>(rhs: F, y0: [f64; N], x0: f64, x1: f64, spec: &OdeSpec) -> Result<DenseSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let (t, y, dy) = march(&rhs, y0, x0, x1, spec)?;
    finish(&rhs, t, y, dy, spec.dense_output)
}

/// Integrate from `x0` both down to `lo` and up to `hi`; `lo <= x0 <= hi`.
pub fn ode_integrate_span<const N: usize, F>(
    rhs: F,
    y0: [f64; N],
    x0: f64,
    lo: f64,
    hi: f64,
    spec: &OdeSpec,
) -> Result<DenseSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(lo <= x0 && x0 <= hi) {
        return Err(Error::InvalidArgument(format!("initial point {x0} outside [{lo}, {hi}]")));
    }
    let (mut t, mut y, mut dy) = march(&rhs, y0, x0, lo, spec)?;
    let (t2, y2, dy2) = march(&rhs, y0, x0, hi, spec)?;
    t.extend_from_slice(&t2[1..]);
    y.extend_from_slice(&y2[1..]);
    dy.extend_from_slice(&dy2[1..]);
    finish(&rhs, t, y, dy, spec.dense_output)
}

type Track<const N: usize> = (Vec<f64>, Vec<[f64; N]>, Vec<[f64; N]>);

fn finish<const N: usize, F>(
    rhs: &F,
    t: Vec<f64>,
    y: Vec<[f64; N]>,
    dy: Vec<[f64; N]>,
    dense: bool,
) -> Result<DenseSolution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let t: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
    let y: Vec<[f64; N]> = idx.iter().map(|&i| y[i]).collect();
    let dy: Vec<[f64; N]> = idx.iter().map(|&i| dy[i]).collect();
    let d2y = if dense {
        t.iter().zip(&y).zip(&dy).map(|((&t, y), f)| second_derivative(rhs, t, y, f)).collect()
    } else {
        vec![[0.0; N]; t.len()]
    };
    Ok(DenseSolution { t, y, dy, d2y, dense })
}

/// Returns the node track in integration order, starting at `x0`.
fn march<const N: usize, F>(rhs: &F, y0: [f64; N], x0: f64, x1: f64, spec: &OdeSpec) -> Result<Track<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(x0.is_finite() && x1.is_finite()) || !finite(&y0) {
        return Err(Error::InvalidArgument("non-finite initial data".into()));
    }
    let f0 = rhs(x0, &y0);
    if !finite(&f0) {
        return Err(Error::Domain(format!("right-hand side not finite at t = {x0}")));
    }
    let mut ts = vec![x0];
    let mut ys = vec![y0];
    let mut fs = vec![f0];
    let span = x1 - x0;
    if span == 0.0 {
        return Ok((ts, ys, fs));
    }
    let dir = span.signum();
    let tol = spec.step_tol;
    let mut t = x0;
    let mut y = y0;
    let mut f = f0;
    let mut h = (0.01 * span.abs()).min(spec.max_step).min(1e-3) * dir;

    for _ in 0..MAX_STEPS {
        let remaining = x1 - t;
        if remaining * dir <= 0.0 {
            break;
        }
        let last = h.abs() >= remaining.abs();
        if last {
            h = remaining;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = f;
        for s in 1..7 {
            let ys = axpy(&y, h, &k[..s], &A[s][..s]);
            k[s] = rhs(t + C[s] * h, &ys);
        }
        let ynew = axpy(&y, h, &k[..6], &A[6][..6]);
        let mut err = 0.0;
        for i in 0..N {
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * k[s][i];
            }
            let sc = tol + tol * y[i].abs().max(ynew[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();
        let ok = err.is_finite() && finite(&ynew) && finite(&k[6]);

        if ok && err <= 1.0 {
            t = if last { x1 } else { t + h };
            y = ynew;
            f = k[6];
            ts.push(t);
            ys.push(y);
            fs.push(f);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * grow).abs().min(spec.max_step) * dir;
        } else {
            let shrink = if ok { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= shrink;
            if h.abs() < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::Stiffness { t });
            }
        }
    }
    if (x1 - t) * dir > 0.0 {
        return Err(Error::Stiffness { t });
    }
    Ok((ts, ys, fs))
}
