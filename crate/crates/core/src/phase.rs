//! Condensate phase diagrams over (T/g, mu/g), their min-max normalization,
//! the transition band, and the comparison against the analytic curve.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::spin::ModelParams;
use crate::theory::analytic_condensate;
use crate::thermal::{ThermalEngine, MIN_PRODUCTION_T};

pub const DEFAULT_T_MAX: f64 = 2.5;
pub const DEFAULT_MU_MAX: f64 = 1.4;
pub const TRANSITION_LOW: f64 = 0.4;
pub const TRANSITION_HIGH: f64 = 0.6;

pub fn generator_version() -> String {
    format!("nniqs-core {}", env!("CARGO_PKG_VERSION"))
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count).map(|i| if i == count - 1 { hi } else { lo + step * i as f64 }).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub t_values: Vec<f64>,
    pub mu_values: Vec<f64>,
}

impl AxisGrid {
    pub fn new(t_values: Vec<f64>, mu_values: Vec<f64>) -> Result<Self> {
        let axes = AxisGrid { t_values, mu_values };
        axes.validate()?;
        Ok(axes)
    }

    /// Uniform `t_points x mu_points` grid over `[t_min, t_max] x [0, mu_max]`.
    pub fn uniform(t_min: f64, t_max: f64, t_points: usize, mu_max: f64, mu_points: usize) -> Result<Self> {
        AxisGrid::new(linspace(t_min, t_max, t_points), linspace(0.0, mu_max, mu_points))
    }

    /// Square grid on the default plotting window.
    pub fn default_window(points: usize) -> Result<Self> {
        AxisGrid::uniform(MIN_PRODUCTION_T, DEFAULT_T_MAX, points, DEFAULT_MU_MAX, points)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("T", &self.t_values), ("mu", &self.mu_values)] {
            if axis.is_empty() {
                return Err(Error::Empty(format!("{name} axis")));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} axis has non-finite entries")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(format!("{name} axis must be strictly increasing")));
            }
        }
        if self.t_values[0] < MIN_PRODUCTION_T {
            return Err(Error::invalid(format!("T axis starts below {MIN_PRODUCTION_T}")));
        }
        if self.mu_values[0] < 0.0 {
            return Err(Error::invalid("mu axis must be non-negative"));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.t_values.len(), self.mu_values.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    /// Chain parameters; `mu_over_g` is the baseline and is overridden per column.
    pub params: ModelParams,
    pub axes: AxisGrid,
    /// Rows follow T ascending, columns mu ascending; condensate in units of g.
    pub values: Grid,
    pub generator_version: String,
}

impl PhaseDiagram {
    pub fn new(params: ModelParams, axes: AxisGrid, values: Grid) -> Result<Self> {
        axes.validate()?;
        if values.shape() != axes.shape() {
            return Err(Error::ShapeMismatch(format!("grid {:?} vs axes {:?}", values.shape(), axes.shape())));
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("phase diagram contains non-finite values"));
        }
        Ok(PhaseDiagram { params, axes, values, generator_version: generator_version() })
    }
}

/// Simulates the condensate on every (T, mu) node, diagonalizing once per
/// mu column. Columns run in parallel; results are placed by index.
pub fn generate(params: &ModelParams, axes: &AxisGrid) -> Result<PhaseDiagram> {
    params.validate()?;
    axes.validate()?;
    let columns = axes
        .mu_values
        .par_iter()
        .map(|&mu| {
            let engine = ThermalEngine::new(&params.with_mu(mu))?;
            axes.t_values.iter().map(|&t| engine.expectation(t)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values = Grid::from_fn(axes.t_values.len(), axes.mu_values.len(), |i, j| columns[j][i]);
    PhaseDiagram::new(params.with_mu(0.0), axes.clone(), values)
}

/// `(v - min) / (max - min)` applied to a slice.
pub fn minmax_normalize_values(values: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::DegenerateNormalization);
    }
    let span = hi - lo;
    Ok(values.iter().map(|&v| if v == hi { 1.0 } else { (v - lo) / span }).collect())
}

pub fn minmax_normalize_grid(grid: &Grid) -> Result<Grid> {
    Grid::from_vec(grid.rows(), grid.cols(), minmax_normalize_values(grid.as_slice())?)
}

pub fn minmax_normalize(diagram: &PhaseDiagram) -> Result<Grid> {
    minmax_normalize_grid(&diagram.values)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMask {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl TransitionMask {
    pub fn from_cells(rows: usize, cols: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} cells for {rows}x{cols}", cells.len())));
        }
        Ok(TransitionMask { rows, cols, cells })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        TransitionMask { rows, cols, cells: vec![true; rows * cols] }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> TransitionMask {
        let cells = rows.iter().flat_map(|&i| cols.iter().map(move |&j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        TransitionMask { rows: rows.len(), cols: cols.len(), cells }
    }
}

/// Cells whose normalized value lies in the inclusive band `[0.4, 0.6]`.
pub fn transition_mask(normalized: &Grid) -> TransitionMask {
    let cells = normalized.as_slice().iter().map(|&v| (TRANSITION_LOW..=TRANSITION_HIGH).contains(&v)).collect();
    TransitionMask { rows: normalized.rows(), cols: normalized.cols(), cells }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryComparison {
    pub t_values: Vec<f64>,
    pub simulated_normalized: Vec<f64>,
    pub theory_normalized: Vec<f64>,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    /// Steps along increasing T where a normalized curve decreases.
    pub simulated_order_violations: usize,
    pub theory_order_violations: usize,
}

/// Compares two curves over a shared T axis after min-max normalizing each.
pub fn compare_curves(t_values: &[f64], simulated: &[f64], theory: &[f64]) -> Result<TheoryComparison> {
    if simulated.len() != t_values.len() || theory.len() != t_values.len() {
        return Err(Error::ShapeMismatch("curve lengths differ from the T axis".into()));
    }
    let sim = minmax_normalize_values(simulated)?;
    let th = minmax_normalize_values(theory)?;
    let deviations: Vec<f64> = sim.iter().zip(&th).map(|(a, b)| (a - b).abs()).collect();
    let violations = |c: &[f64]| c.windows(2).filter(|w| w[1] < w[0]).count();
    Ok(TheoryComparison {
        t_values: t_values.to_vec(),
        max_abs_deviation: deviations.iter().copied().fold(0.0, f64::max),
        mean_abs_deviation: deviations.iter().sum::<f64>() / deviations.len() as f64,
        simulated_order_violations: violations(&sim),
        theory_order_violations: violations(&th),
        simulated_normalized: sim,
        theory_normalized: th,
    })
}

/// Normalized mu = 0 column against the normalized analytic curve.
pub fn compare_to_theory(diagram: &PhaseDiagram) -> Result<TheoryComparison> {
    if diagram.axes.mu_values[0] != 0.0 {
        return Err(Error::invalid("diagram has no mu = 0 column"));
    }
    let t = &diagram.axes.t_values;
    if *t.last().expect("validated non-empty") < 2.0 {
        return Err(Error::invalid("theory comparison needs T/g up to at least 2.0"));
    }
    let column: Vec<f64> = (0..t.len()).map(|i| diagram.values.get(i, 0)).collect();
    compare_curves(t, &column, &analytic_condensate(t)?)
}
