//! Harmonic maps `u = R + iS` into the upper half-plane built from a
//! Bäcklund pair, by three routes: nested fiber quadrature for any pair,
//! and closed forms for separable BT0 pairs and one-soliton θ.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::backlund::{theta_from_b, w_from_theta, x_integral, BtPair, SolitonTheta, SolitonW};
use crate::error::{require_finite, Error, Result};
use crate::field::{GridSpec, MapField};
use crate::kernel::{gauss_legendre, quad_gk, QuadratureSpec};
use crate::sinh_gordon::{SeparableSolution, TANH_GUARD};

/// Bäcklund residual allowed at the probe points before a quadrature build.
pub const PAIR_CHECK_TOL: f64 = 1e-4;
const FIBER_TOL: f64 = 1e-8;
const FIBER_DEPTH: u32 = 30;
const ROOT_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseValues {
    #[serde(rename = "R00")]
    pub r00: f64,
    #[serde(rename = "S00")]
    pub s00: f64,
}

impl BaseValues {
    pub fn new(r00: f64, s00: f64) -> Result<Self> {
        require_finite("R00", r00)?;
        require_finite("S00", s00)?;
        if s00 == 0.0 {
            return Err(Error::InvalidArgument("S00 must be nonzero".into()));
        }
        Ok(Self { r00, s00 })
    }

    fn pair(&self) -> (f64, f64) {
        (self.r00, self.s00)
    }
}

struct Rule {
    xi: [f64; 8],
    w: [f64; 8],
    /// `a[k][l] = ∫₀^{ξ_k} L_l`, the spectral integration matrix.
    a: [[f64; 8]; 8],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let (xs, ws) = gauss_legendre(8);
        let mut xi = [0.0; 8];
        let mut w = [0.0; 8];
        xi.copy_from_slice(&xs);
        w.copy_from_slice(&ws);
        let lagrange = |l: usize, t: f64| {
            (0..8).filter(|&m| m != l).map(|m| (t - xi[m]) / (xi[l] - xi[m])).product::<f64>()
        };
        let mut a = [[0.0; 8]; 8];
        for k in 0..8 {
            for l in 0..8 {
                a[k][l] = xi[k] * (0..8).map(|q| w[q] * lagrange(l, xi[k] * xi[q])).sum::<f64>();
            }
        }
        Rule { xi, w, a }
    })
}

/// Increments of `E = ∫g` and `N = ∫ e^{2E} h` over `[a, b]` with `E(a) = e0`,
/// from one 8-point panel.
fn panel<F: Fn(f64) -> Option<(f64, f64)>>(f: &F, a: f64, b: f64, e0: f64) -> Option<(f64, f64)> {
    let r = rule();
    let len = b - a;
    let mut g = [0.0; 8];
    let mut h = [0.0; 8];
    for k in 0..8 {
        let (gk, hk) = f(a + len * r.xi[k])?;
        g[k] = gk;
        h[k] = hk;
    }
    let mut de = 0.0;
    let mut dn = 0.0;
    for k in 0..8 {
        let ek = e0 + len * (0..8).map(|l| r.a[k][l] * g[l]).sum::<f64>();
        de += r.w[k] * g[k];
        dn += r.w[k] * (2.0 * ek).exp() * h[k];
    }
    let out = (len * de, len * dn);
    (out.0.is_finite() && out.1.is_finite()).then_some(out)
}

fn nested_step<F: Fn(f64) -> Option<(f64, f64)>>(f: &F, a: f64, b: f64, e0: f64, depth: u32) -> Result<(f64, f64)> {
    let singular = || Error::Domain(format!("pair is singular on [{a}, {b}]"));
    let whole = panel(f, a, b, e0).ok_or_else(singular)?;
    let m = 0.5 * (a + b);
    let left = panel(f, a, m, e0).ok_or_else(singular)?;
    let right = panel(f, m, b, e0 + left.0).ok_or_else(singular)?;
    let fine = (left.0 + right.0, left.1 + right.1);
    let diff = (whole.0 - fine.0).abs().max((whole.1 - fine.1).abs());
    if diff <= FIBER_TOL * (1.0f64).max(fine.0.abs()).max(fine.1.abs()) {
        return Ok(fine);
    }
    if depth == 0 {
        return Err(Error::Accuracy { estimate: fine.1, error_bound: diff });
    }
    let l = nested_step(f, a, m, e0, depth - 1)?;
    let r = nested_step(f, m, b, e0 + l.0, depth - 1)?;
    Ok((l.0 + r.0, l.1 + r.1))
}

/// `(E, N)` at each of `ts`, which run outward from 0; `None` from the first
/// failure on.
fn cumulative<F: Fn(f64) -> Option<(f64, f64)>>(f: &F, ts: &[f64]) -> Vec<Option<(f64, f64)>> {
    let mut out = Vec::with_capacity(ts.len());
    let (mut prev, mut e, mut n) = (0.0, 0.0, 0.0);
    for (k, &t) in ts.iter().enumerate() {
        if t != prev {
            match nested_step(f, prev, t, e, FIBER_DEPTH) {
                Ok((de, dn)) => {
                    e += de;
                    n += dn;
                    prev = t;
                }
                Err(_) => {
                    out.resize(ts.len(), None);
                    debug_assert!(k <= ts.len());
                    return out;
                }
            }
        }
        out.push(Some((e, n)));
    }
    out
}

/// Runs `cumulative` outward from 0 in both directions over increasing `vals`.
fn cumulative_grid<F: Fn(f64) -> Option<(f64, f64)>>(f: &F, vals: &[f64]) -> Vec<Option<(f64, f64)>> {
    let split = vals.partition_point(|&v| v < 0.0);
    let pos = cumulative(f, &vals[split..]);
    let neg_ts: Vec<f64> = vals[..split].iter().rev().cloned().collect();
    let mut neg = cumulative(f, &neg_ts);
    neg.reverse();
    neg.extend(pos);
    neg
}

fn axis_integrand(pair: &BtPair) -> impl Fn(f64) -> Option<(f64, f64)> + '_ {
    move |t| {
        let w = pair.w(t, 0.0).ok()?;
        let (s, c) = pair.theta(t, 0.0).ok()?.sin_cos();
        let ch = w.cosh();
        Some((ch * s, ch * c))
    }
}

fn fiber_integrand(pair: &BtPair, x: f64) -> impl Fn(f64) -> Option<(f64, f64)> + '_ {
    move |s| {
        let w = pair.w(x, s).ok()?;
        let (st, ct) = pair.theta(x, s).ok()?.sin_cos();
        let sh = w.sinh();
        Some((sh * ct, sh * st))
    }
}

/// Pointwise evaluators of the four route integrals
///
/// ```text
/// I1(x)    = ∫₀ˣ cosh w(t,0) sin θ(t,0) dt
/// I2(x, y) = ∫₀ʸ sinh w(x,s) cos θ(x,s) ds
/// I3(x)    = ∫₀ˣ e^{2 I1(t)} cosh w(t,0) cos θ(t,0) dt
/// I4(x, y) = e^{2 I1(x)} ∫₀ʸ e^{2 I2(x,s)} sinh w(x,s) sin θ(x,s) ds
/// ```
#[derive(Debug, Clone)]
pub struct QuadratureIntegrals {
    pub pair: BtPair,
}

impl QuadratureIntegrals {
    pub fn new(pair: BtPair) -> Self {
        Self { pair }
    }

    fn axis(&self, x: f64) -> Result<(f64, f64)> {
        if x == 0.0 {
            return Ok((0.0, 0.0));
        }
        nested_step(&axis_integrand(&self.pair), 0.0, x, 0.0, FIBER_DEPTH)
    }

    fn fiber(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if y == 0.0 {
            return Ok((0.0, 0.0));
        }
        nested_step(&fiber_integrand(&self.pair, x), 0.0, y, 0.0, FIBER_DEPTH)
    }

    pub fn i1(&self, x: f64) -> Result<f64> {
        Ok(self.axis(x)?.0)
    }

    pub fn i2(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.fiber(x, y)?.0)
    }

    pub fn i3(&self, x: f64) -> Result<f64> {
        Ok(self.axis(x)?.1)
    }

    pub fn i4(&self, x: f64, y: f64) -> Result<f64> {
        Ok((2.0 * self.i1(x)?).exp() * self.fiber(x, y)?.1)
    }

    /// `(R, S)` at one point.
    pub fn map_at(&self, base: BaseValues, x: f64, y: f64) -> Result<(f64, f64)> {
        let (i1, i3) = self.axis(x)?;
        let (i2, n) = self.fiber(x, y)?;
        let i4 = (2.0 * i1).exp() * n;
        Ok((base.r00 + 2.0 * base.s00 * (i3 - i4), base.s00 * (2.0 * (i1 + i2)).exp()))
    }
}

fn probe_points(grid: &GridSpec) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for fx in [0.5, 0.25, 0.75] {
        for fy in [0.5, 0.25, 0.75] {
            if (fx == 0.5) != (fy == 0.5) {
                continue;
            }
            pts.push((grid.x_min + fx * (grid.x_max - grid.x_min), grid.y_min + fy * (grid.y_max - grid.y_min)));
        }
    }
    pts
}

/// `S = S00 e^{2(I1+I2)}`, `R = R00 + 2 S00 (I3 − I4)` by cumulative
/// quadrature outward from the axes. Nodes whose integration path meets a
/// singularity are masked.
pub fn build_quadrature(pair: &BtPair, base: BaseValues, grid: GridSpec) -> Result<MapField> {
    let base = BaseValues::new(base.r00, base.s00)?;
    grid.validate()?;
    let probe = crate::backlund::bt_probe_residual(pair, &probe_points(&grid), 1e-3)?;
    if probe > PAIR_CHECK_TOL {
        return Err(Error::InvalidArgument(format!(
            "pair fails the Bäcklund check (residual {probe:e} > {PAIR_CHECK_TOL:e})"
        )));
    }
    let xs = grid.xs();
    let ys = grid.ys();
    let axis = cumulative_grid(&axis_integrand(pair), &xs);
    let n = grid.len();
    let mut r = vec![f64::NAN; n];
    let mut s = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for (i, &x) in xs.iter().enumerate() {
        let Some((i1, i3)) = axis[i] else { continue };
        let fiber = cumulative_grid(&fiber_integrand(pair, x), &ys);
        for (j, v) in fiber.into_iter().enumerate() {
            let Some((i2, nn)) = v else { continue };
            let k = grid.index(i, j);
            let i4 = (2.0 * i1).exp() * nn;
            r[k] = base.r00 + 2.0 * base.s00 * (i3 - i4);
            s[k] = base.s00 * (2.0 * (i1 + i2)).exp();
            mask[k] = r[k].is_finite() && s[k].is_finite() && s[k] != 0.0;
        }
    }
    finish(grid, r, s, mask, base)
}

fn finish(grid: GridSpec, r: Vec<f64>, s: Vec<f64>, mask: Vec<bool>, base: BaseValues) -> Result<MapField> {
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyField("every node of the map is masked".into()));
    }
    let r = r.iter().zip(&mask).map(|(&v, &m)| if m { v } else { f64::NAN }).collect();
    let s = s.iter().zip(&mask).map(|(&v, &m)| if m { v } else { f64::NAN }).collect();
    MapField::new(grid, r, s, mask, base.pair())
}

/// `Y(x, y_j)` for every `y_j`, accumulated outward from 0 with one
/// Gauss-Kronrod integral per grid interval.
fn fiber_y(sol: &SeparableSolution, x: f64, ys: &[f64]) -> Vec<Option<f64>> {
    let spec = QuadratureSpec::fine();
    let f = |s: f64| match sol.tanh_half(x, s) {
        Ok(p) if p.abs() < TANH_GUARD => 2.0 * p / (1.0 - p * p),
        _ => f64::NAN,
    };
    let run = |ts: &[f64]| {
        let mut out = Vec::with_capacity(ts.len());
        let (mut prev, mut acc) = (0.0, 0.0);
        for &t in ts {
            if t != prev {
                match quad_gk(f, prev, t, &spec) {
                    Ok(v) => {
                        acc += v;
                        prev = t;
                    }
                    Err(_) => break,
                }
            }
            out.push(Some(acc));
        }
        out.resize(ts.len(), None);
        out
    };
    let split = ys.partition_point(|&v| v < 0.0);
    let neg_ts: Vec<f64> = ys[..split].iter().rev().cloned().collect();
    let mut neg = run(&neg_ts);
    neg.reverse();
    neg.extend(run(&ys[split..]));
    neg
}

/// Closed form for a separable solution in BT0:
/// `S = S00 e^{2X}(sin θ + b)/(1 + b)`, `R = R00 + S00 e^{2X} cos θ/(1 + b)`.
pub fn build_newclass(sol: &SeparableSolution, base: BaseValues, grid: GridSpec) -> Result<MapField> {
    let base = BaseValues::new(base.r00, base.s00)?;
    grid.validate()?;
    if !sol.is_bt0_eligible() {
        return Err(Error::InvalidArgument("∂y w(x, 0) does not vanish; the closed form needs BT0".into()));
    }
    let ys = grid.ys();
    let n = grid.len();
    let mut r = vec![f64::NAN; n];
    let mut s = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for (i, x) in grid.xs().into_iter().enumerate() {
        let (Ok(big_x), Ok(b)) = (x_integral(sol, x), sol.b(x)) else { continue };
        if (1.0 + b).abs() < 1e-12 {
            continue;
        }
        let scale = (2.0 * big_x).exp() / (1.0 + b);
        for (j, yi) in fiber_y(sol, x, &ys).into_iter().enumerate() {
            let Some(yi) = yi else { continue };
            if sol.w(x, ys[j]).is_err() {
                continue;
            }
            let (st, ct) = theta_from_b(b, yi).sin_cos();
            let k = grid.index(i, j);
            s[k] = base.s00 * scale * (st + b);
            r[k] = base.r00 + base.s00 * scale * ct;
            mask[k] = s[k].is_finite() && r[k].is_finite() && s[k] != 0.0;
        }
    }
    finish(grid, r, s, mask, base)
}

/// The integrand of `J` and its radicand `2(8−ab)u² − a² − b²u⁴`, which is
/// `16u² sin²θ` along the soliton with `u = (2cos θ − θ')/b`.
struct JKernel {
    a: f64,
    b: f64,
    t0sq: f64,
    roots: [f64; 2],
}

impl JKernel {
    fn new(st: &SolitonTheta, w00: f64) -> Result<Self> {
        if st.b.abs() < 1e-14 {
            return Err(Error::DegenerateParameter("b = 0: J is undefined".into()));
        }
        let ab = st.b.abs();
        Ok(Self {
            a: st.a,
            b: st.b,
            t0sq: (0.5 * w00).tanh().powi(2),
            roots: [(2.0 - st.c).abs() / ab, (2.0 + st.c) / ab],
        })
    }

    fn rad(&self, u: f64) -> f64 {
        let k = 2.0 * (8.0 - self.a * self.b);
        k * u * u - self.a * self.a - self.b * self.b * u.powi(4)
    }

    /// Taylor coefficients of the radicand about `p`.
    fn taylor(&self, p: f64) -> [f64; 5] {
        let k = 2.0 * (8.0 - self.a * self.b);
        let b2 = self.b * self.b;
        [
            self.rad(p),
            -4.0 * b2 * p.powi(3) + 2.0 * k * p,
            -6.0 * b2 * p * p + k,
            -4.0 * b2 * p,
            -b2,
        ]
    }

    fn numerator(&self, u: f64) -> f64 {
        (u * u + self.t0sq) / (u * u) * (self.b * u * u + self.a)
    }

    fn snap(&self, u: f64) -> (f64, bool) {
        for r in self.roots {
            if (u - r).abs() <= ROOT_SNAP * r.max(1.0) {
                return (r, true);
            }
        }
        (u, false)
    }

    /// `∫_p^m` with `u = p + (m − p)s²`, which removes an inverse square root
    /// singularity at `p`.
    fn segment(&self, p: f64, p_root: bool, m: f64) -> Result<f64> {
        if p == m {
            return Ok(0.0);
        }
        let c = self.taylor(p);
        let d = m - p;
        let f = |s: f64| {
            let delta = d * s * s;
            let q = c[1] + delta * (c[2] + delta * (c[3] + delta * c[4]));
            let u = p + delta;
            if p_root {
                self.numerator(u) * 2.0 * d.signum() * d.abs().sqrt() / q.abs().sqrt()
            } else {
                let rad = c[0] + delta * q;
                self.numerator(u) * 2.0 * d * s / rad.sqrt()
            }
        };
        quad_gk(f, 0.0, 1.0, &QuadratureSpec::fine())
    }

    fn between(&self, p: f64, q: f64) -> Result<f64> {
        let (p, pr) = self.snap(p);
        let (q, qr) = self.snap(q);
        if p == q {
            return Ok(0.0);
        }
        for (u, root) in [(p, pr), (q, qr)] {
            if !root && !(self.rad(u) > 0.0) {
                return Err(Error::Domain(format!("radicand is negative at u = {u}")));
            }
        }
        let m = 0.5 * (p + q);
        if !(self.rad(m) > 0.0) {
            return Err(Error::Domain(format!("radicand vanishes inside [{p}, {q}]")));
        }
        Ok(self.segment(p, pr, m)? - self.segment(q, qr, m)?)
    }
}

/// `J(t) = ∫₁ᵗ (u² + tanh²(w00/2))/u² · (bu² + a)/√(2(8−ab)u² − a² − b²u⁴) du`.
pub fn j_integral(st: &SolitonTheta, w00: f64, t: f64) -> Result<f64> {
    require_finite("t", t)?;
    JKernel::new(st, w00)?.between(1.0, t)
}

/// `I3(x)` along a soliton pair: `½ cosh²(w00/2) Σ σ_i [J]` over the pieces of
/// `[0, x]` on which `sin θ` keeps the sign `σ_i`.
pub fn soliton_i3(sw: &SolitonW, x: f64) -> Result<f64> {
    let st = &sw.st;
    if x == 0.0 {
        return Ok(0.0);
    }
    if st.constant {
        return Ok(x * sw.w00.cosh() * st.theta0.cos());
    }
    let kern = JKernel::new(st, sw.w00)?;
    let u = |t: f64| -> Result<f64> {
        let [th, dth, _] = st.state(t)?;
        Ok((2.0 * th.cos() - dth) / st.b)
    };
    let mut cuts = vec![0.0];
    cuts.extend(st.sin_zeros(x)?);
    cuts.push(x);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let sigma = st.theta(0.5 * (w[0] + w[1]))?.sin().signum();
        total += sigma * kern.between(u(w[0])?, u(w[1])?)?;
    }
    Ok(0.5 * total / (1.0 - kern.t0sq))
}

/// Closed form for a one-soliton θ with `tanh(w/2) = F(x)G(y)`:
/// `S = S00 (2cos θ(x) c(y) − θ'(x))/D` and
/// `R = R00 + 2 S00 I3(x) − 2 S00 sin θ(x)(c(y) − c(0))/D`, where
/// `c(y) = (a − bG²)/(a + bG²)` and `D = 2cos θ(0) c(0) − θ'(0)`.
pub fn build_soliton(st: Arc<SolitonTheta>, w00: f64, base: BaseValues, grid: GridSpec) -> Result<MapField> {
    let base = BaseValues::new(base.r00, base.s00)?;
    grid.validate()?;
    let sw = w_from_theta(st, w00)?;
    let d = sw.denominator();
    if d.abs() < 1e-14 {
        return Err(Error::DegenerateParameter("2cos θ(0) cos 2k − θ'(0) vanishes".into()));
    }
    let ys = grid.ys();
    let c2: Vec<f64> = ys.iter().map(|&y| sw.cos2(y)).collect();
    let c20 = sw.cos2(0.0);
    let n = grid.len();
    let mut r = vec![f64::NAN; n];
    let mut s = vec![f64::NAN; n];
    let mut mask = vec![false; n];
    for (i, x) in grid.xs().into_iter().enumerate() {
        let Ok([th, dth, _]) = sw.st.state(x) else { continue };
        let Ok(i3) = soliton_i3(&sw, x) else { continue };
        let (sn, cs) = th.sin_cos();
        for (j, &y) in ys.iter().enumerate() {
            if sw.w(x, y).is_err() {
                continue;
            }
            let k = grid.index(i, j);
            s[k] = base.s00 * (2.0 * cs * c2[j] - dth) / d;
            r[k] = base.r00 + 2.0 * base.s00 * i3 - 2.0 * base.s00 * sn * (c2[j] - c20) / d;
            mask[k] = s[k].is_finite() && r[k].is_finite() && s[k] != 0.0;
        }
    }
    finish(grid, r, s, mask, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backlund::soliton_theta;
    use crate::kernel::OdeSpec;
    use crate::sinh_gordon::example5;
    use crate::verifier::harmonicity_residual;

    fn max_dev(u: &MapField, f: impl Fn(f64, f64) -> (f64, f64)) -> f64 {
        let mut worst = 0.0f64;
        for k in (0..u.grid.len()).filter(|&k| u.mask[k]) {
            let (x, y) = u.grid.coords(k);
            let (r, s) = f(x, y);
            worst = worst.max((u.r[k] - r).abs()).max((u.s[k] - s).abs());
        }
        worst
    }

    #[test]
    fn integration_matrix_is_exact_for_polynomials() {
        let r = rule();
        for k in 0..8 {
            let got: f64 = (0..8).map(|l| r.a[k][l] * r.xi[l].powi(6)).sum();
            assert!((got - r.xi[k].powi(7) / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn base_values_validation() {
        assert!(BaseValues::new(0.0, 0.0).is_err());
        assert!(BaseValues::new(f64::NAN, 1.0).is_err());
        assert!(BaseValues::new(1.0, -0.25).is_ok());
    }

    #[test]
    fn example3_route_integrals() {
        let q = QuadratureIntegrals::new(BtPair::example3());
        for (x, y) in [(0.3f64, 0.2f64), (-0.4, 0.1), (0.1, -0.3), (0.0, 0.25)] {
            let c = (2.0 * x).cosh();
            assert!((q.i1(x).unwrap() - 0.5 * c.ln()).abs() < 1e-10);
            assert!((q.i2(x, y).unwrap() - 0.5 * (1.0 - 4.0 * y * y / (c * c)).ln()).abs() < 1e-10);
            assert!((q.i3(x).unwrap() + x).abs() < 1e-10);
            assert!((q.i4(x, y).unwrap() - 2.0 * y * y * (2.0 * x).tanh()).abs() < 1e-10);
        }
        assert_eq!(q.i1(0.0).unwrap(), 0.0);
        assert_eq!(q.i4(0.3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn example3_golden_map() {
        let g = GridSpec::new(-0.5, 0.5, -0.5, 0.5, 101, 101).unwrap();
        let u = build_quadrature(&BtPair::example3(), BaseValues::new(0.0, -0.25).unwrap(), g).unwrap();
        let err = max_dev(&u, |x, y| {
            let c = (2.0 * x).cosh();
            (x / 2.0 + y * y * (2.0 * x).tanh(), y * y / c - c / 4.0)
        });
        assert!(err < 1e-6, "{err}");
        // the corners (0, ±0.5) sit on |FG| = 1
        assert!(!u.mask[g.index(50, 100)] && !u.mask[g.index(50, 0)]);
        assert!(u.mask[g.index(0, 100)]);
    }

    #[test]
    fn trivial_pair_gives_exponential() {
        let g = GridSpec::new(-1.0, 1.0, -0.5, 0.5, 41, 21).unwrap();
        let u = build_quadrature(&BtPair::trivial(), BaseValues::new(0.3, 2.0).unwrap(), g).unwrap();
        assert_eq!(u.valid_count(), g.len());
        assert!(max_dev(&u, |x, _| (0.3, 2.0 * (2.0 * x).exp())) < 1e-12);
    }

    #[test]
    fn quadrature_rejects_non_pair() {
        let g = GridSpec::new(-0.2, 0.2, -0.2, 0.2, 11, 11).unwrap();
        let bad = BtPair::from_fns(|_, _| 0.0, |_, _| 0.0, crate::backlund::BtClass::Bt);
        assert!(matches!(build_quadrature(&bad, BaseValues::new(0.0, 1.0).unwrap(), g), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn example5_closed_forms() {
        let g = GridSpec::new(-0.38, 0.38, -0.29, 0.29, 77, 59).unwrap();
        let u = build_newclass(&example5(), BaseValues::new(0.0, 1.0).unwrap(), g).unwrap();
        let r2 = 2f64.sqrt();
        let err = max_dev(&u, |x, y| {
            let den = 1.0 + (4.0 * r2 * y).cosh() - 2.0 * (4.0 * x).sin();
            let e = (2.0 * x).exp();
            (
                -4.0 * e * (2.0 * x).cos() * (2.0 * r2 * y).sinh() / den,
                e * (1.0 + 2.0 * (4.0 * x).cos() - (4.0 * r2 * y).cosh()) / den,
            )
        });
        assert!(err < 1e-6, "{err}");
        let k0 = g.index(38, 29);
        assert!(u.r[k0].abs() < 1e-15 && (u.s[k0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn newclass_agrees_with_quadrature() {
        let g = GridSpec::new(-0.3, 0.3, -0.2, 0.2, 31, 21).unwrap();
        let base = BaseValues::new(0.5, -2.0).unwrap();
        let a = build_newclass(&example5(), base, g).unwrap();
        let b = build_quadrature(&BtPair::bt0(example5()).unwrap(), base, g).unwrap();
        let mut worst = 0.0f64;
        for k in (0..g.len()).filter(|&k| a.mask[k] && b.mask[k]) {
            worst = worst.max((a.r[k] - b.r[k]).abs()).max((a.s[k] - b.s[k]).abs());
        }
        assert!(worst < 1e-5, "{worst}");
        assert_eq!(a.valid_count(), b.valid_count());
    }

    fn example6() -> Arc<SolitonTheta> {
        Arc::new(soliton_theta(0.0, 1.0, (-3.0, 3.0), &OdeSpec::default()).unwrap())
    }

    #[test]
    fn j_integral_values() {
        let st = example6();
        assert_eq!(j_integral(&st, 0.0, 1.0).unwrap(), 0.0);
        // (u² − 1)(9 − u²) is the radicand; u = 1 + v² leaves
        // 2(u² + 3)/(√(2 + v²) √(9 − u²)) dv, integrated with a 200-point rule
        let (xs, ws) = gauss_legendre(200);
        let vmax = 0.5f64.sqrt();
        let oracle: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(&s, &w)| {
                let v = vmax * s;
                let u = 1.0 + v * v;
                w * vmax * 2.0 * (u * u + 3.0) / ((2.0 + v * v).sqrt() * (9.0 - u * u).sqrt())
            })
            .sum();
        let got = j_integral(&st, 0.0, 1.5).unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        assert!((got - 1.527_495_622_844_991_5).abs() < 1e-9, "{got}");
        assert!(matches!(j_integral(&st, 0.0, 3.5), Err(Error::Domain(_))));
    }

    #[test]
    fn soliton_i3_against_direct_quadrature() {
        // w00 = 0 makes w(t, 0) = 0, so I3 = ∫ e^{2∫sin θ} cos θ dt
        let st = example6();
        let sw = w_from_theta(st.clone(), 0.0).unwrap();
        for x in [0.3, -0.5, 1.0, 1.7, -2.4, 2.9] {
            let direct = quad_gk(
                |t| {
                    let [th, _, i] = st.state(t).unwrap();
                    (2.0 * i).exp() * th.cos()
                },
                0.0,
                x,
                &QuadratureSpec::fine(),
            )
            .unwrap();
            let got = soliton_i3(&sw, x).unwrap();
            assert!((got - direct).abs() < 1e-8, "x={x}: {got} vs {direct}");
        }
    }

    #[test]
    fn example6_map() {
        let g = GridSpec::with_step(-1.0, 1.0, -0.3, 0.3, 0.02).unwrap();
        let st = example6();
        let u = build_soliton(st.clone(), 0.0, BaseValues::new(0.0, 1.0).unwrap(), g).unwrap();
        let mut worst = 0.0f64;
        for k in (0..g.len()).filter(|&k| u.mask[k]) {
            let (x, y) = g.coords(k);
            let [th, dth, _] = st.state(x).unwrap();
            worst = worst.max((u.s[k] - (2.0 * th.cos() * (3f64.sqrt() * y).cos() - dth)).abs());
        }
        assert!(worst < 1e-6, "{worst}");
        let k0 = g.index(50, 15);
        assert_eq!((u.r[k0], u.s[k0]), (0.0, 1.0));
    }

    #[test]
    fn soliton_agrees_with_quadrature() {
        for (t0, d0, w00) in [(0.0, 1.0, 0.0), (0.4, -0.7, 0.3), (0.2, 3.0, -0.2), (2.8, 0.5, 0.1)] {
            let st = Arc::new(soliton_theta(t0, d0, (-1.0, 1.0), &OdeSpec::default()).unwrap());
            let g = GridSpec::new(-0.4, 0.4, -0.15, 0.15, 17, 13).unwrap();
            let base = BaseValues::new(0.2, 0.7).unwrap();
            let a = build_soliton(st.clone(), w00, base, g).unwrap();
            let pair = BtPair::soliton(w_from_theta(st, w00).unwrap());
            let b = build_quadrature(&pair, base, g).unwrap();
            let mut worst = 0.0f64;
            for k in (0..g.len()).filter(|&k| a.mask[k] && b.mask[k]) {
                worst = worst.max((a.r[k] - b.r[k]).abs()).max((a.s[k] - b.s[k]).abs());
            }
            assert!(worst < 1e-5, "({t0},{d0},{w00}) {worst}");
        }
    }

    #[test]
    fn soliton_map_is_harmonic() {
        let st = Arc::new(soliton_theta(0.4, -0.7, (-1.0, 1.0), &OdeSpec::default()).unwrap());
        let g = GridSpec::with_step(-0.3, 0.3, -0.2, 0.2, 1e-3).unwrap();
        let u = build_soliton(st, 0.3, BaseValues::new(0.0, 1.0).unwrap(), g).unwrap();
        let (a, b) = harmonicity_residual(&u, 1e-5).unwrap();
        assert!(a.pass && b.pass, "{} {}", a.line(), b.line());
    }

    #[test]
    fn degenerate_soliton_rejected() {
        let st = Arc::new(soliton_theta(0.0, 2.0, (-1.0, 1.0), &OdeSpec::default()).unwrap());
        let g = GridSpec::new(-0.2, 0.2, -0.2, 0.2, 9, 9).unwrap();
        let r = build_soliton(st, 0.0, BaseValues::new(0.0, 1.0).unwrap(), g);
        assert!(matches!(r, Err(Error::DegenerateParameter(_))));
    }
}
