//! Classical up-scaling baselines on rectilinear grids: bilinear, per-axis
//! natural cubic splines, and separable cubic convolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Shape parameter of the cubic-convolution kernel.
pub const KEYS_A: f64 = -0.5;
const UNIFORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationMethod {
    Bilinear,
    AxisCubic,
    Bicubic,
}

impl InterpolationMethod {
    pub const ALL: [InterpolationMethod; 3] =
        [InterpolationMethod::Bilinear, InterpolationMethod::AxisCubic, InterpolationMethod::Bicubic];

    pub fn name(self) -> &'static str {
        match self {
            InterpolationMethod::Bilinear => "bilinear",
            InterpolationMethod::AxisCubic => "axiscubic",
            InterpolationMethod::Bicubic => "bicubic",
        }
    }
}

impl std::str::FromStr for InterpolationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bilinear" => Ok(InterpolationMethod::Bilinear),
            "axiscubic" => Ok(InterpolationMethod::AxisCubic),
            "bicubic" => Ok(InterpolationMethod::Bicubic),
            other => Err(Error::invalid(format!("unknown interpolation method `{other}`"))),
        }
    }
}

/// Rectilinear source data: `values[i][j]` sits at `(rows[i], cols[j])`.
#[derive(Debug, Clone, Copy)]
pub struct GridData<'a> {
    pub values: &'a Grid,
    pub rows: &'a [f64],
    pub cols: &'a [f64],
}

impl<'a> GridData<'a> {
    pub fn new(values: &'a Grid, rows: &'a [f64], cols: &'a [f64]) -> Result<Self> {
        if values.shape() != (rows.len(), cols.len()) {
            return Err(Error::ShapeMismatch(format!(
                "grid {:?} vs axes {}x{}",
                values.shape(),
                rows.len(),
                cols.len()
            )));
        }
        for axis in [rows, cols] {
            if axis.len() < 2 {
                return Err(Error::invalid("interpolation needs at least two nodes per axis"));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid("interpolation axes must be strictly increasing"));
            }
        }
        Ok(GridData { values, rows, cols })
    }

    fn check_hull(&self, x: [f64; 2]) -> Result<()> {
        let inside = |axis: &[f64], v: f64| v >= axis[0] && v <= axis[axis.len() - 1];
        if inside(self.rows, x[0]) && inside(self.cols, x[1]) {
            Ok(())
        } else {
            Err(Error::OutsideHull(x[0], x[1]))
        }
    }
}

/// Cell index `i` with `axis[i] <= x <= axis[i+1]` and the fraction within it.
pub fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    let i = match axis.partition_point(|&a| a <= x) {
        0 => 0,
        p => (p - 1).min(n - 2),
    };
    let frac = (x - axis[i]) / (axis[i + 1] - axis[i]);
    (i, frac)
}

fn bilinear(data: &GridData, x: [f64; 2]) -> f64 {
    let (i, fr) = locate(data.rows, x[0]);
    let (j, fc) = locate(data.cols, x[1]);
    let v = data.values;
    (1.0 - fr) * ((1.0 - fc) * v.get(i, j) + fc * v.get(i, j + 1))
        + fr * ((1.0 - fc) * v.get(i + 1, j) + fc * v.get(i + 1, j + 1))
}

/// Natural cubic spline through `(xs, ys)`.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives (Thomas algorithm).
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for k in 0..m {
                let i = k + 1;
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[k] = 2.0 * (h0 + h1);
                upper[k] = h1;
                rhs[k] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            }
            for k in 1..m {
                let lower = xs[k + 1] - xs[k];
                let factor = lower / diag[k - 1];
                diag[k] -= factor * upper[k - 1];
                rhs[k] -= factor * rhs[k - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for k in (0..m - 1).rev() {
                second[k + 1] = (rhs[k] - upper[k] * second[k + 2]) / diag[k];
            }
        }
        NaturalSpline { xs: xs.to_vec(), ys: ys.to_vec(), second }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, _) = locate(&self.xs, x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }
}

/// Which axis the first spline pass runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisOrder {
    ColumnsFirst,
    RowsFirst,
}

fn axis_cubic(data: &GridData, x: [f64; 2], order: AxisOrder) -> f64 {
    let v = data.values;
    match order {
        AxisOrder::ColumnsFirst => {
            let through: Vec<f64> =
                (0..data.rows.len()).map(|i| NaturalSpline::new(data.cols, v.row(i)).eval(x[1])).collect();
            NaturalSpline::new(data.rows, &through).eval(x[0])
        }
        AxisOrder::RowsFirst => {
            let through: Vec<f64> = (0..data.cols.len())
                .map(|j| {
                    let column: Vec<f64> = (0..data.rows.len()).map(|i| v.get(i, j)).collect();
                    NaturalSpline::new(data.rows, &column).eval(x[0])
                })
                .collect();
            NaturalSpline::new(data.cols, &through).eval(x[1])
        }
    }
}

/// Axis-cubic interpolation with an explicit pass order.
pub fn axis_cubic_ordered(data: &GridData, x: [f64; 2], order: AxisOrder) -> Result<f64> {
    data.check_hull(x)?;
    Ok(axis_cubic(data, x, order))
}

fn keys_kernel(s: f64) -> f64 {
    let s = s.abs();
    let a = KEYS_A;
    if s <= 1.0 {
        ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0
    } else if s < 2.0 {
        ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a
    } else {
        0.0
    }
}

fn uniform_step(axis: &[f64]) -> Result<f64> {
    let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    let tol = UNIFORM_TOLERANCE * h.abs().max(1.0);
    if axis.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return Err(Error::invalid("bicubic convolution needs uniformly spaced axes"));
    }
    Ok(h)
}

/// Stencil indices (clamped) and kernel weights along one uniform axis.
fn keys_stencil(axis: &[f64], h: f64, x: f64) -> ([usize; 4], [f64; 4]) {
    let n = axis.len();
    let u = (x - axis[0]) / h;
    let base = (u.floor() as isize).clamp(0, n as isize - 2);
    let t = u - base as f64;
    let mut idx = [0usize; 4];
    let mut w = [0.0; 4];
    for (k, offset) in (-1isize..=2).enumerate() {
        idx[k] = (base + offset).clamp(0, n as isize - 1) as usize;
        w[k] = keys_kernel(t - offset as f64);
    }
    (idx, w)
}

fn bicubic(data: &GridData, x: [f64; 2], steps: (f64, f64)) -> f64 {
    let (ri, rw) = keys_stencil(data.rows, steps.0, x[0]);
    let (ci, cw) = keys_stencil(data.cols, steps.1, x[1]);
    let mut acc = 0.0;
    for a in 0..4 {
        let mut row = 0.0;
        for b in 0..4 {
            row += cw[b] * data.values.get(ri[a], ci[b]);
        }
        acc += rw[a] * row;
    }
    acc
}

pub fn interpolate_point(data: &GridData, method: InterpolationMethod, x: [f64; 2]) -> Result<f64> {
    data.check_hull(x)?;
    match method {
        InterpolationMethod::Bilinear => Ok(bilinear(data, x)),
        InterpolationMethod::AxisCubic => Ok(axis_cubic(data, x, AxisOrder::ColumnsFirst)),
        InterpolationMethod::Bicubic => {
            let steps = (uniform_step(data.rows)?, uniform_step(data.cols)?);
            Ok(bicubic(data, x, steps))
        }
    }
}

/// Interpolates onto every node of `target_rows x target_cols`.
pub fn upscale_grid(
    data: &GridData,
    method: InterpolationMethod,
    target_rows: &[f64],
    target_cols: &[f64],
) -> Result<Grid> {
    for &r in target_rows {
        for &c in target_cols {
            data.check_hull([r, c])?;
        }
    }
    let (tr, tc) = (target_rows.len(), target_cols.len());
    match method {
        InterpolationMethod::Bilinear => {
            Ok(Grid::from_fn(tr, tc, |i, j| bilinear(data, [target_rows[i], target_cols[j]])))
        }
        InterpolationMethod::Bicubic => {
            let steps = (uniform_step(data.rows)?, uniform_step(data.cols)?);
            Ok(Grid::from_fn(tr, tc, |i, j| bicubic(data, [target_rows[i], target_cols[j]], steps)))
        }
        InterpolationMethod::AxisCubic => {
            // Row splines are shared by every target column.
            let row_splines: Vec<NaturalSpline> =
                (0..data.rows.len()).map(|i| NaturalSpline::new(data.cols, data.values.row(i))).collect();
            let mut out = Grid::zeros(tr, tc);
            for (j, &c) in target_cols.iter().enumerate() {
                let through: Vec<f64> = row_splines.iter().map(|s| s.eval(c)).collect();
                let column = NaturalSpline::new(data.rows, &through);
                for (i, &r) in target_rows.iter().enumerate() {
                    out.set(i, j, column.eval(r));
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::linspace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn affine_grid(rows: &[f64], cols: &[f64]) -> Grid {
        Grid::from_fn(rows.len(), cols.len(), |i, j| 0.7 * rows[i] - 1.3 * cols[j] + 0.25)
    }

    #[test]
    fn bilinear_cell_center() {
        let g = Grid::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let axis = [0.0, 1.0];
        let data = GridData::new(&g, &axis, &axis).unwrap();
        assert_eq!(interpolate_point(&data, InterpolationMethod::Bilinear, [0.5, 0.5]).unwrap(), 0.5);
    }

    #[test]
    fn node_exactness_all_methods() {
        let rows = linspace(0.1, 2.5, 9);
        let cols = linspace(0.0, 1.4, 7);
        let g = Grid::from_fn(9, 7, |i, j| ((i * 7 + j) as f64 * 0.37).sin());
        let data = GridData::new(&g, &rows, &cols).unwrap();
        for m in InterpolationMethod::ALL {
            for i in 0..9 {
                for j in 0..7 {
                    let v = interpolate_point(&data, m, [rows[i], cols[j]]).unwrap();
                    assert!((v - g.get(i, j)).abs() < 1e-14, "{m:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn affine_fields_are_reproduced() {
        let rows = linspace(0.1, 2.5, 12);
        let cols = linspace(0.0, 1.4, 10);
        let g = affine_grid(&rows, &cols);
        let data = GridData::new(&g, &rows, &cols).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            // Keep the 4-point stencil inside the grid: clamped replication
            // breaks linear precision in the outermost cells.
            let x = [rng.random_range(rows[1]..rows[10]), rng.random_range(cols[1]..cols[8])];
            let exact = 0.7 * x[0] - 1.3 * x[1] + 0.25;
            for m in InterpolationMethod::ALL {
                assert!((interpolate_point(&data, m, x).unwrap() - exact).abs() < 1e-10, "{m:?}");
            }
        }
    }

    #[test]
    fn splines_accept_non_uniform_axes_bicubic_rejects_them() {
        let rows = [0.1, 0.3, 0.35, 0.9, 1.0];
        let cols = [0.0, 0.2, 0.7, 1.4];
        let g = affine_grid(&rows, &cols);
        let data = GridData::new(&g, &rows, &cols).unwrap();
        let x = [0.5, 0.33];
        let exact = 0.7 * x[0] - 1.3 * x[1] + 0.25;
        assert!((interpolate_point(&data, InterpolationMethod::AxisCubic, x).unwrap() - exact).abs() < 1e-12);
        assert!((interpolate_point(&data, InterpolationMethod::Bilinear, x).unwrap() - exact).abs() < 1e-12);
        assert!(interpolate_point(&data, InterpolationMethod::Bicubic, x).is_err());
    }

    #[test]
    fn outside_hull_is_an_error() {
        let axis = [0.0, 1.0, 2.0];
        let g = Grid::zeros(3, 3);
        let data = GridData::new(&g, &axis, &axis).unwrap();
        for m in InterpolationMethod::ALL {
            assert!(matches!(interpolate_point(&data, m, [2.1, 0.5]), Err(Error::OutsideHull(..))));
            assert!(matches!(interpolate_point(&data, m, [0.5, -0.1]), Err(Error::OutsideHull(..))));
        }
    }

    #[test]
    fn upscale_identity_and_pointwise_agreement() {
        let rows = linspace(0.1, 2.5, 6);
        let cols = linspace(0.0, 1.4, 5);
        let g = Grid::from_fn(6, 5, |i, j| (i as f64 * 0.5).cos() * (j as f64 + 1.0).ln());
        let data = GridData::new(&g, &rows, &cols).unwrap();
        let fine_r = linspace(0.1, 2.5, 17);
        let fine_c = linspace(0.0, 1.4, 13);
        for m in InterpolationMethod::ALL {
            let same = upscale_grid(&data, m, &rows, &cols).unwrap();
            for (a, b) in same.as_slice().iter().zip(g.as_slice()) {
                assert!((a - b).abs() < 1e-14);
            }
            let up = upscale_grid(&data, m, &fine_r, &fine_c).unwrap();
            for i in 0..17 {
                for j in 0..13 {
                    let p = interpolate_point(&data, m, [fine_r[i], fine_c[j]]).unwrap();
                    assert!((up.get(i, j) - p).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn bilinear_bounded_by_corners_and_monotone() {
        let rows = linspace(0.1, 2.5, 8);
        let cols = linspace(0.0, 1.4, 8);
        // Monotone in T only.
        let g = Grid::from_fn(8, 8, |i, j| (i as f64).powi(2) * 0.1 + 0.01 * (j as f64).sin());
        let data = GridData::new(&g, &rows, &cols).unwrap();
        let fine = linspace(0.1, 2.5, 41);
        let up = upscale_grid(&data, InterpolationMethod::Bilinear, &fine, &cols).unwrap();
        for j in 0..8 {
            for i in 1..41 {
                assert!(up.get(i, j) >= up.get(i - 1, j));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let x = [rng.random_range(0.1..2.5), rng.random_range(0.0..1.4)];
            let (i, _) = locate(&rows, x[0]);
            let (j, _) = locate(&cols, x[1]);
            let corners = [g.get(i, j), g.get(i + 1, j), g.get(i, j + 1), g.get(i + 1, j + 1)];
            let v = interpolate_point(&data, InterpolationMethod::Bilinear, x).unwrap();
            let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(v >= lo - 1e-15 && v <= hi + 1e-15);
        }
    }

    #[test]
    fn axis_cubic_commutes_with_transpose_on_symmetric_fields() {
        let axis = linspace(0.0, 1.0, 7);
        let g = Grid::from_fn(7, 7, |i, j| ((i * j) as f64 * 0.3).sin() + (i + j) as f64 * 0.1);
        let gt = g.transpose();
        let data = GridData::new(&g, &axis, &axis).unwrap();
        let data_t = GridData::new(&gt, &axis, &axis).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let direct = axis_cubic_ordered(&data, x, AxisOrder::ColumnsFirst).unwrap();
            let swapped = axis_cubic_ordered(&data_t, [x[1], x[0]], AxisOrder::RowsFirst).unwrap();
            assert!((direct - swapped).abs() < 1e-13);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in InterpolationMethod::ALL {
            assert_eq!(m.name().parse::<InterpolationMethod>().unwrap(), m);
        }
        assert!("lanczos".parse::<InterpolationMethod>().is_err());
    }
}
