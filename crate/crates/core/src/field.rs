//! Rectangular grids, masked fields and central-difference operators.
//!
//! Node `(i, j)` sits at `(x_min + i·dx, y_min + j·dy)` and is stored at
//! `j·nx + i`, so rows run along x and rows are ordered by y.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self { x_min, x_max, y_min, y_max, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Grid with spacing as close to `h` as the box allows.
    pub fn with_step(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("grid step must be positive, got {h}")));
        }
        let nx = ((x_max - x_min) / h).round() as usize + 1;
        let ny = ((y_max - y_min) / h).round() as usize + 1;
        Self::new(x_min, x_max, y_min, y_max, nx, ny)
    }

    /// `(2r+1)²` nodes with spacing `h` centred on `(x, y)`.
    pub fn patch(x: f64, y: f64, h: f64, r: usize) -> Result<Self> {
        let half = h * r as f64;
        Self::new(x - half, x + half, y - half, y + half, 2 * r + 1, 2 * r + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::InvalidArgument(format!(
                "grid box [{}, {}]×[{}, {}] is empty or not finite",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        if self.nx < 8 || self.ny < 8 {
            return Err(Error::InvalidArgument(format!("grid needs at least 8×8 nodes, got {}×{}", self.nx, self.ny)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.ny {
            self.y_max
        } else {
            self.y_min + j as f64 * self.dy()
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x(i), self.y(j))
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| self.y(j)).collect()
    }

    /// Index of the node nearest to `(x, y)`.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x_min) / self.dx()).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((y - self.y_min) / self.dy()).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }
}

/// Real values on a grid; `mask[k]` is true where `values[k]` is usable.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() || mask.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values and {} mask entries for {} nodes",
                values.len(),
                mask.len(),
                grid.len()
            )));
        }
        if let Some(k) = (0..values.len()).find(|&k| mask[k] && !values[k].is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at valid node {k}")));
        }
        Ok(Self { grid, values, mask })
    }

    /// Sample `f`; non-finite samples are masked.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.coords(k);
                f(x, y)
            })
            .collect();
        let mask = values.iter().map(|v| v.is_finite()).collect();
        Self { grid, values, mask }
    }

    pub fn constant(grid: GridSpec, v: f64) -> Self {
        Self { grid, values: vec![v; grid.len()], mask: vec![true; grid.len()] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.mask[self.grid.index(i, j)]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Pointwise map, keeping the mask; non-finite results are masked.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mask = self.mask.iter().zip(&values).map(|(&m, v)| m && v.is_finite()).collect();
        Self { grid: self.grid, values, mask }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value,mask")?;
        for k in 0..self.grid.len() {
            let (x, y) = self.grid.coords(k);
            writeln!(w, "{:.16e},{:.16e},{:.16e},{}", x, y, self.values[k], u8::from(self.mask[k]))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let rows = read_rows(r, &["x", "y", "value", "mask"])?;
        let grid = grid_from_rows(&rows)?;
        let values = rows.iter().map(|r| r[2]).collect();
        let mask = rows.iter().map(|r| r[3] != 0.0).collect();
        Self::new(grid, values, mask)
    }
}

/// Samples of `u = R + iS` with the base values `(R(0,0), S(0,0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapField {
    pub grid: GridSpec,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub mask: Vec<bool>,
    pub base: (f64, f64),
}

impl MapField {
    pub fn new(grid: GridSpec, r: Vec<f64>, s: Vec<f64>, mask: Vec<bool>, base: (f64, f64)) -> Result<Self> {
        grid.validate()?;
        let n = grid.len();
        if r.len() != n || s.len() != n || mask.len() != n {
            return Err(Error::InvalidArgument("map field arrays do not match the grid".into()));
        }
        if let Some(k) = (0..n).find(|&k| mask[k] && !(r[k].is_finite() && s[k].is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite map value at valid node {k}")));
        }
        Ok(Self { grid, r, s, mask, base })
    }

    pub fn from_fn(grid: GridSpec, base: (f64, f64), f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let n = grid.len();
        let mut r = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for k in 0..n {
            let (x, y) = grid.coords(k);
            let (a, b) = f(x, y);
            r.push(a);
            s.push(b);
        }
        let mask = r.iter().zip(&s).map(|(a, b)| a.is_finite() && b.is_finite() && *b != 0.0).collect();
        Self { grid, r, s, mask, base }
    }

    pub fn real(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.r.clone(), mask: self.mask.clone() }
    }

    pub fn imag(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.s.clone(), mask: self.mask.clone() }
    }

    pub fn conj(&self) -> Self {
        Self { s: self.s.iter().map(|v| -v).collect(), base: (self.base.0, -self.base.1), ..self.clone() }
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// S must not vanish on valid nodes and must keep one sign on each
    /// 4-connected component of the valid set.
    pub fn check_invariants(&self) -> Result<()> {
        let g = self.grid;
        if let Some(k) = (0..g.len()).find(|&k| self.mask[k] && self.s[k] == 0.0) {
            return Err(Error::Domain(format!("S vanishes at valid node {k}")));
        }
        let mut seen = vec![false; g.len()];
        let mut stack = Vec::new();
        for start in 0..g.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            let sign = self.s[start] > 0.0;
            seen[start] = true;
            stack.push(start);
            while let Some(k) = stack.pop() {
                if (self.s[k] > 0.0) != sign {
                    return Err(Error::Domain(format!("S changes sign inside a connected component at node {k}")));
                }
                let (i, j) = g.ij(k);
                let mut push = |ii: usize, jj: usize| {
                    let q = g.index(ii, jj);
                    if self.mask[q] && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                };
                if i > 0 {
                    push(i - 1, j);
                }
                if i + 1 < g.nx {
                    push(i + 1, j);
                }
                if j > 0 {
                    push(i, j - 1);
                }
                if j + 1 < g.ny {
                    push(i, j + 1);
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,R,S,mask")?;
        for k in 0..self.grid.len() {
            let (x, y) = self.grid.coords(k);
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{}", x, y, self.r[k], self.s[k], u8::from(self.mask[k]))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, base: (f64, f64)) -> Result<Self> {
        let rows = read_rows(r, &["x", "y", "R", "S", "mask"])?;
        let grid = grid_from_rows(&rows)?;
        let rr = rows.iter().map(|r| r[2]).collect();
        let ss = rows.iter().map(|r| r[3]).collect();
        let mask = rows.iter().map(|r| r[4] != 0.0).collect();
        Self::new(grid, rr, ss, mask, base)
    }
}

fn read_rows<R: BufRead>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))??;
    let cols: Vec<&str> = first.trim().split(',').collect();
    if cols != header {
        return Err(Error::Parse(format!("expected header {}, found {}", header.join(","), first.trim())));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .trim()
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("line {}: expected {} columns, got {}", n + 2, header.len(), row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn grid_from_rows(rows: &[Vec<f64>]) -> Result<GridSpec> {
    if rows.is_empty() {
        return Err(Error::Parse("field file has no data rows".into()));
    }
    let y0 = rows[0][1];
    let nx = rows.iter().take_while(|r| r[1] == y0).count();
    if nx == 0 || rows.len() % nx != 0 {
        return Err(Error::Parse(format!("{} rows do not form a grid with {} columns", rows.len(), nx)));
    }
    let ny = rows.len() / nx;
    let grid = GridSpec::new(rows[0][0], rows[nx - 1][0], y0, rows[rows.len() - 1][1], nx, ny)
        .map_err(|e| Error::Parse(format!("grid: {e}")))?;
    for (k, row) in rows.iter().enumerate() {
        let (x, y) = grid.coords(k);
        let tol = 1e-12 * (1.0 + x.abs().max(y.abs()));
        if (row[0] - x).abs() > tol || (row[1] - y).abs() > tol {
            return Err(Error::Parse(format!("row {} at ({}, {}) is off the grid", k + 2, row[0], row[1])));
        }
    }
    Ok(grid)
}

/// Evaluate `f` where `guard` holds; failing nodes and their 3×3
/// neighbourhoods are masked.
pub fn mask_singular(
    f: impl Fn(f64, f64) -> f64,
    grid: GridSpec,
    guard: impl Fn(f64, f64) -> bool,
) -> Result<ScalarField> {
    grid.validate()?;
    let mut ok = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (x, y) = grid.coords(k);
        if guard(x, y) {
            let v = f(x, y);
            ok.push(v.is_finite());
            values.push(v);
        } else {
            ok.push(false);
            values.push(f64::NAN);
        }
    }
    let mask = dilate(&grid, &ok);
    if !mask.iter().any(|&m| m) {
        return Err(Error::EmptyField("every node failed the guard".into()));
    }
    Ok(ScalarField { grid, values, mask })
}

/// Remove every node that has an invalid node in its 3×3 neighbourhood.
pub fn dilate(grid: &GridSpec, mask: &[bool]) -> Vec<bool> {
    let mut out = mask.to_vec();
    for k in 0..grid.len() {
        if mask[k] {
            continue;
        }
        let (i, j) = grid.ij(k);
        for jj in j.saturating_sub(1)..=(j + 1).min(grid.ny - 1) {
            for ii in i.saturating_sub(1)..=(i + 1).min(grid.nx - 1) {
                out[grid.index(ii, jj)] = false;
            }
        }
    }
    out
}

/// True where the full 3×3 stencil around the node is valid and inside the grid.
pub fn stencil_mask(grid: &GridSpec, mask: &[bool]) -> Vec<bool> {
    let mut out = vec![false; grid.len()];
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let mut ok = true;
            'outer: for jj in j - 1..=j + 1 {
                for ii in i - 1..=i + 1 {
                    if !mask[grid.index(ii, jj)] {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            out[grid.index(i, j)] = ok;
        }
    }
    out
}

fn stencil_op(f: &ScalarField, op: impl Fn(&[f64], usize, usize, usize) -> f64) -> ScalarField {
    let g = f.grid;
    let mask = stencil_mask(&g, &f.mask);
    let values = (0..g.len())
        .map(|k| {
            if mask[k] {
                let (i, j) = g.ij(k);
                op(&f.values, g.nx, i, j)
            } else {
                f64::NAN
            }
        })
        .collect();
    ScalarField { grid: g, values, mask }
}

/// Central differences `(∂x f, ∂y f)`.
pub fn fd_gradient(f: &ScalarField) -> (ScalarField, ScalarField) {
    let hx = f.grid.dx();
    let hy = f.grid.dy();
    let fx = stencil_op(f, |v, nx, i, j| (v[j * nx + i + 1] - v[j * nx + i - 1]) / (2.0 * hx));
    let fy = stencil_op(f, |v, nx, i, j| (v[(j + 1) * nx + i] - v[(j - 1) * nx + i]) / (2.0 * hy));
    (fx, fy)
}

/// Five-point Laplacian.
pub fn fd_laplacian(f: &ScalarField) -> ScalarField {
    let hx2 = f.grid.dx().powi(2);
    let hy2 = f.grid.dy().powi(2);
    stencil_op(f, |v, nx, i, j| {
        let c = v[j * nx + i];
        (v[j * nx + i + 1] - 2.0 * c + v[j * nx + i - 1]) / hx2 + (v[(j + 1) * nx + i] - 2.0 * c + v[(j - 1) * nx + i]) / hy2
    })
}

/// Four-corner mixed derivative `∂xy f`.
pub fn fd_mixed(f: &ScalarField) -> ScalarField {
    let d = 4.0 * f.grid.dx() * f.grid.dy();
    stencil_op(f, |v, nx, i, j| {
        (v[(j + 1) * nx + i + 1] - v[(j + 1) * nx + i - 1] - v[(j - 1) * nx + i + 1] + v[(j - 1) * nx + i - 1]) / d
    })
}

/// `∂z u` and `∂z̄ u` at every node with a valid stencil.
#[derive(Debug, Clone)]
pub struct Wirtinger {
    pub grid: GridSpec,
    pub uz: Vec<Complex64>,
    pub uzbar: Vec<Complex64>,
    pub mask: Vec<bool>,
}

pub fn wirtinger(u: &MapField) -> Wirtinger {
    let (rx, ry) = fd_gradient(&u.real());
    let (sx, sy) = fd_gradient(&u.imag());
    let n = u.grid.len();
    let mut uz = Vec::with_capacity(n);
    let mut uzbar = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b, c, d) = (rx.values[k], ry.values[k], sx.values[k], sy.values[k]);
        uz.push(Complex64::new(0.5 * (a + d), 0.5 * (c - b)));
        uzbar.push(Complex64::new(0.5 * (a - d), 0.5 * (c + b)));
    }
    Wirtinger { grid: u.grid, uz, uzbar, mask: rx.mask }
}

/// Maximum and root-mean-square of the values where `mask` holds.
pub fn masked_norms(values: &[f64], mask: &[bool]) -> Option<(f64, f64, usize)> {
    let picked: Vec<f64> = values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.abs()).collect();
    if picked.is_empty() {
        return None;
    }
    let max = picked.iter().fold(0.0f64, |m, &v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) });
    let sq: Vec<f64> = picked.iter().map(|v| v * v).collect();
    let rms = (pairwise_sum(&sq) / picked.len() as f64).sqrt();
    Some((max, rms, picked.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64) -> GridSpec {
        GridSpec::with_step(-0.3, 0.2, -0.1, 0.25, h).unwrap()
    }

    fn max_err(a: &ScalarField, f: impl Fn(f64, f64) -> f64) -> f64 {
        (0..a.grid.len())
            .filter(|&k| a.mask[k])
            .map(|k| {
                let (x, y) = a.grid.coords(k);
                (a.values[k] - f(x, y)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 7, 8).is_err());
        assert!(GridSpec::new(1.0, 1.0, 0.0, 1.0, 8, 8).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, f64::NAN, 8, 8).is_err());
        let g = GridSpec::new(-1.0, 1.0, 0.0, 2.0, 11, 21).unwrap();
        assert_eq!(g.x(10), 1.0);
        assert_eq!(g.index(3, 2), 25);
        assert_eq!(g.coords(25), (g.x(3), g.y(2)));
    }

    #[test]
    fn affine_and_quadratic_exactness() {
        let g = grid(0.01);
        let (fx, fy) = fd_gradient(&ScalarField::from_fn(g, |x, _| x));
        assert!(max_err(&fx, |_, _| 1.0) < 1e-12);
        assert!(max_err(&fy, |_, _| 0.0) < 1e-12);
        let q = ScalarField::from_fn(g, |x, y| x * x + y * y);
        let (qx, _) = fd_gradient(&q);
        assert!(max_err(&qx, |x, _| 2.0 * x) < 1e-12);
        assert!(max_err(&fd_laplacian(&q), |_, _| 4.0) < 1e-9);
        let harm = ScalarField::from_fn(g, |x, y| x * x - y * y);
        assert!(max_err(&fd_laplacian(&harm), |_, _| 0.0) < 1e-9);
    }

    #[test]
    fn analytic_oracles_at_fine_step() {
        let g = grid(1e-3);
        let f = ScalarField::from_fn(g, |x, y| x.sin() * y.cos());
        let (fx, fy) = fd_gradient(&f);
        assert!(max_err(&fx, |x, y| x.cos() * y.cos()) < 1e-6);
        assert!(max_err(&fy, |x, y| -x.sin() * y.sin()) < 1e-6);
        let e = ScalarField::from_fn(g, |x, y| x.exp() * y.sin());
        assert!(max_err(&fd_laplacian(&e), |_, _| 0.0) < 1e-6);
        assert!(max_err(&fd_mixed(&f), |x, y| -x.cos() * y.sin()) < 1e-6);
    }

    #[test]
    fn wirtinger_of_simple_maps() {
        let g = grid(0.01);
        let z = MapField::from_fn(g, (0.0, 1.0), |x, y| (x, y + 1.0));
        let w = wirtinger(&z);
        let zbar = wirtinger(&MapField::from_fn(g, (0.0, 1.0), |x, y| (x, -y - 1.0)));
        for k in (0..g.len()).filter(|&k| w.mask[k]) {
            assert!((w.uz[k] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(w.uzbar[k].norm() < 1e-12);
            assert!(zbar.uz[k].norm() < 1e-12);
            assert!((zbar.uzbar[k] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let g = grid(1e-3);
        let e = wirtinger(&MapField::from_fn(g, (0.0, 1.0), |x, _| (0.0, (2.0 * x).exp())));
        for k in (0..g.len()).filter(|&k| e.mask[k]) {
            let (x, _) = g.coords(k);
            let want = Complex64::new(0.0, (2.0 * x).exp());
            assert!((e.uz[k] - want).norm() < 1e-6);
            assert!((e.uzbar[k] - want).norm() < 1e-6);
        }
    }

    #[test]
    fn conjugate_map_swaps_wirtinger_parts() {
        let g = grid(0.01);
        let u = MapField::from_fn(g, (0.0, 1.0), |x, y| (x * y + x.sin(), 1.0 + (x - y).exp()));
        let a = wirtinger(&u);
        let b = wirtinger(&u.conj());
        for k in (0..g.len()).filter(|&k| a.mask[k]) {
            assert!((a.uzbar[k] - b.uz[k].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mask_singular_examples() {
        let g = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 101, 101).unwrap();
        let full = mask_singular(|x, y| x + y, g, |_, _| true).unwrap();
        assert_eq!(full.valid_count(), g.len());
        let w = mask_singular(
            |x, y| 2.0 * (2.0 * y / (2.0 * x).cosh()).atanh(),
            g,
            |x, y| (2.0 * y / (2.0 * x).cosh()).abs() < 1.0 - 1e-6,
        )
        .unwrap();
        let (i, j) = g.nearest(0.0, 0.5);
        assert!(!w.is_valid(i, j));
        assert!(!w.is_valid(i, j - 1));
        assert!(w.is_valid(i, g.ny / 2));
        let e5 = mask_singular(|x, _| 1.0 / (2.0 * x).cos(), g, |x, _| (2.0 * x).cos().abs() > 0.02).unwrap();
        assert!(e5.valid_count() < g.len());
        assert!(matches!(mask_singular(|_, _| 0.0, g, |_, _| false), Err(Error::EmptyField(_))));
    }

    #[test]
    fn csv_round_trip() {
        let g = GridSpec::new(-0.5, 0.5, 0.0, 0.3, 9, 8).unwrap();
        let mut f = ScalarField::from_fn(g, |x, y| (x + 3.0 * y).exp() / 7.0);
        f.mask[5] = false;
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = ScalarField::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.values, f.values);
        assert_eq!(back.mask, f.mask);
        let u = MapField::from_fn(g, (0.0, 1.0), |x, y| (x - y, 1.0 + x * x));
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x,y,R,S,mask\n"));
        assert_eq!(MapField::read_csv(buf.as_slice(), (0.0, 1.0)).unwrap(), u);
        assert!(ScalarField::read_csv("a,b\n".as_bytes()).is_err());
    }

    #[test]
    fn sign_invariant_of_s() {
        let g = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 11, 11).unwrap();
        let ok = MapField::from_fn(g, (0.0, 1.0), |x, _| (x, (2.0 * x).exp()));
        assert!(ok.check_invariants().is_ok());
        let bad = MapField::from_fn(g, (0.0, 1.0), |x, _| (0.0, x + 0.05));
        assert!(bad.check_invariants().is_err());
    }
}
