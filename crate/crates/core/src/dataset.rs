//! Training material for the implicit field: cropping, random down-sampling,
//! the sigmoid value transform, three-channel packing, and the coordinate
//! chart. Nothing here interpolates; every value is a lookup into a
//! simulated grid.

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::phase::{generate, linspace, AxisGrid, PhaseDiagram, DEFAULT_MU_MAX, DEFAULT_T_MAX};
use crate::rng::{stream, Rng, Stream};
use crate::spin::ModelParams;
use crate::thermal::MIN_PRODUCTION_T;

/// Value of the two inactive input channels.
pub const PLACEHOLDER: f64 = 1e-3;
pub const CHANNELS: usize = 3;
pub const W_RANGE: (f64, f64) = (0.3, 1.5);

pub fn to_model_space(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn from_model_space(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Saturated(s));
    }
    Ok((s / (1.0 - s)).ln())
}

/// Cell-center chart: index `i` of an `m`-point axis maps to `-1 + (2i+1)/m`.
pub fn chart_coordinate(i: usize, m: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / m as f64
}

pub fn chart_axis(m: usize) -> Vec<f64> {
    (0..m).map(|i| chart_coordinate(i, m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CropStrategy {
    /// Contiguous square window at a uniformly random corner.
    ContiguousBlock,
    /// Independently chosen sorted index sets per axis.
    RandomCoordinates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropSpec {
    pub strategy: CropStrategy,
    pub side: usize,
    pub seed: u64,
}

/// A selection from a parent grid: values plus the physical axes and the
/// parent indices they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub t_values: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub values: Grid,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Patch {
    pub fn from_diagram(diagram: &PhaseDiagram) -> Self {
        let (r, c) = diagram.values.shape();
        Patch {
            t_values: diagram.axes.t_values.clone(),
            mu_values: diagram.axes.mu_values.clone(),
            values: diagram.values.clone(),
            rows: (0..r).collect(),
            cols: (0..c).collect(),
        }
    }

    pub fn side(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// Sub-patch at parent-relative `rows x cols`; indices stay relative to
    /// this patch's own parent.
    fn select(&self, rows: Vec<usize>, cols: Vec<usize>) -> Patch {
        Patch {
            t_values: rows.iter().map(|&i| self.t_values[i]).collect(),
            mu_values: cols.iter().map(|&j| self.mu_values[j]).collect(),
            values: self.values.select(&rows, &cols),
            rows: rows.iter().map(|&i| self.rows[i]).collect(),
            cols: cols.iter().map(|&j| self.cols[j]).collect(),
        }
    }
}

fn sorted_subset(rng: &mut Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx = sample_indices(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

pub fn crop_with(patch: &Patch, strategy: CropStrategy, side: usize, rng: &mut Rng) -> Result<Patch> {
    let (r, c) = patch.side();
    if side == 0 || side > r || side > c {
        return Err(Error::invalid(format!("crop side {side} exceeds source {r}x{c}")));
    }
    let (rows, cols) = match strategy {
        CropStrategy::ContiguousBlock => {
            let top = rng.random_range(0..=r - side);
            let left = rng.random_range(0..=c - side);
            ((top..top + side).collect(), (left..left + side).collect())
        }
        CropStrategy::RandomCoordinates => (sorted_subset(rng, r, side), sorted_subset(rng, c, side)),
    };
    Ok(patch.select(rows, cols))
}

/// Crop of a whole diagram; the resulting patch indexes the diagram.
pub fn crop(diagram: &PhaseDiagram, spec: &CropSpec) -> Result<Patch> {
    let mut rng = stream(spec.seed, Stream::Crop, 0);
    crop_with(&Patch::from_diagram(diagram), spec.strategy, spec.side, &mut rng)
}

/// Picks `count` distinct sorted indices per axis and keeps the values at
/// their intersections. The returned patch indexes `patch` itself.
pub fn downsample_random(patch: &Patch, count: usize, rng: &mut Rng) -> Result<Patch> {
    let (r, c) = patch.side();
    if count == 0 || count > r || count > c {
        return Err(Error::invalid(format!("down-sample count {count} exceeds patch {r}x{c}")));
    }
    let rows = sorted_subset(rng, r, count);
    let cols = sorted_subset(rng, c, count);
    Ok(Patch {
        t_values: rows.iter().map(|&i| patch.t_values[i]).collect(),
        mu_values: cols.iter().map(|&j| patch.mu_values[j]).collect(),
        values: patch.values.select(&rows, &cols),
        rows,
        cols,
    })
}

/// Pixel-major `rows x cols x 3` input array.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedInput {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl PackedInput {
    #[inline]
    pub fn get(&self, i: usize, j: usize, channel: usize) -> f64 {
        self.data[(i * self.cols + j) * CHANNELS + channel]
    }
}

/// Packs a model-space grid into channel 0 with constant placeholder channels.
pub fn pack(model_space: &Grid) -> PackedInput {
    let mut data = Vec::with_capacity(model_space.as_slice().len() * CHANNELS);
    for &v in model_space.as_slice() {
        data.extend_from_slice(&[v, PLACEHOLDER, PLACEHOLDER]);
    }
    PackedInput { rows: model_space.rows(), cols: model_space.cols(), data }
}

pub fn unpack(packed: &PackedInput) -> Grid {
    Grid::from_fn(packed.rows, packed.cols, |i, j| packed.get(i, j, 0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    /// (T, mu) chart coordinate in `[-1, 1]^2`.
    pub coord: [f64; 2],
    pub cell: [f64; 2],
    /// Model-space ground truth.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub diagram: usize,
    /// Window rows/cols as indices into the source diagram.
    pub window_rows: Vec<usize>,
    pub window_cols: Vec<usize>,
    /// Input rows/cols as indices into the window.
    pub input_rows: Vec<usize>,
    pub input_cols: Vec<usize>,
    pub ratio: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: PackedInput,
    /// Chart coordinates of the input rows (T) and columns (mu).
    pub input_coords: [Vec<f64>; 2],
    /// Window shape; targets enumerate it row-major.
    pub target_shape: (usize, usize),
    pub targets: Vec<Target>,
    pub provenance: Provenance,
}

impl Sample {
    pub fn cell(&self) -> [f64; 2] {
        [2.0 / self.target_shape.0 as f64, 2.0 / self.target_shape.1 as f64]
    }

    pub fn target_axes(&self) -> [Vec<f64>; 2] {
        [chart_axis(self.target_shape.0), chart_axis(self.target_shape.1)]
    }

    pub fn target_grid(&self) -> Grid {
        let (r, c) = self.target_shape;
        Grid::from_vec(r, c, self.targets.iter().map(|t| t.value).collect()).expect("targets fill the window")
    }

    pub fn input_grid(&self) -> Grid {
        unpack(&self.input)
    }
}

/// Builds one (input, targets) pair: window of side `input_side * ratio`,
/// down-sampled to `input_side` per axis.
pub fn make_sample(
    diagram_id: usize,
    diagram: &PhaseDiagram,
    strategy: CropStrategy,
    input_side: usize,
    ratio: usize,
    rng: &mut Rng,
) -> Result<Sample> {
    if ratio == 0 {
        return Err(Error::invalid("up-scaling ratio must be at least 1"));
    }
    let side = input_side * ratio;
    let (r, c) = diagram.values.shape();
    if side > r || side > c {
        return Err(Error::invalid(format!("window {side} = {input_side} x {ratio} exceeds the {r}x{c} ground truth")));
    }
    let window = crop_with(&Patch::from_diagram(diagram), strategy, side, rng)?;
    let input = downsample_random(&window, input_side, rng)?;

    let axis = chart_axis(side);
    let cell = [2.0 / side as f64, 2.0 / side as f64];
    let mut targets = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            targets.push(Target { coord: [axis[i], axis[j]], cell, value: to_model_space(window.values.get(i, j)) });
        }
    }
    Ok(Sample {
        input: pack(&input.values.map(to_model_space)),
        input_coords: [input.rows.iter().map(|&i| axis[i]).collect(), input.cols.iter().map(|&j| axis[j]).collect()],
        target_shape: (side, side),
        targets,
        provenance: Provenance {
            diagram: diagram_id,
            window_rows: window.rows,
            window_cols: window.cols,
            input_rows: input.rows,
            input_cols: input.cols,
            ratio,
        },
    })
}

/// Seeded pair generator: pair `index` draws its ratio, window, and
/// down-sampling from its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub input_side: usize,
    pub ratio_min: usize,
    pub ratio_max: usize,
    pub strategy: CropStrategy,
}

impl PairConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_side == 0 {
            return Err(Error::invalid("input side must be positive"));
        }
        if self.ratio_min == 0 || self.ratio_min > self.ratio_max {
            return Err(Error::invalid(format!(
                "ratio range [{}, {}] is empty or starts at 0",
                self.ratio_min, self.ratio_max
            )));
        }
        Ok(())
    }

    pub fn pair(&self, diagrams: &[PhaseDiagram], diagram_id: usize, rng: &mut Rng) -> Result<Sample> {
        let ratio = rng.random_range(self.ratio_min..=self.ratio_max);
        make_sample(diagram_id, &diagrams[diagram_id], self.strategy, self.input_side, ratio, rng)
    }
}

/// One pair per diagram, in dataset order, each from stream `(seed, index)`.
pub fn make_pairs<'a>(
    diagrams: &'a [PhaseDiagram],
    config: PairConfig,
    seed: u64,
) -> impl Iterator<Item = Result<Sample>> + 'a {
    (0..diagrams.len()).map(move |id| {
        config.validate()?;
        let mut rng = stream(seed, Stream::TrainPair, id as u64);
        config.pair(diagrams, id, &mut rng)
    })
}

/// Seeded diagram-level split: `floor(n * fraction)` items train, the rest
/// validate. Both sides must be non-empty.
pub fn split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} outside (0, 1)")));
    }
    let n_train = (n as f64 * fraction).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Empty(format!("split of {n} items at {fraction} leaves a side empty")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Stream::Split, 0));
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_values: Vec<usize>,
    pub w_values: Vec<f64>,
    pub ground_side: usize,
    pub input_side: usize,
    pub ratio_min: usize,
    pub ratio_max: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub t_min: f64,
    pub t_max: f64,
    pub mu_max: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_values: vec![6, 8, 10],
            w_values: linspace(W_RANGE.0, W_RANGE.1, 25),
            ground_side: 196,
            input_side: 48,
            ratio_min: 1,
            ratio_max: 4,
            train_fraction: 0.9,
            seed: 0,
            t_min: MIN_PRODUCTION_T,
            t_max: DEFAULT_T_MAX,
            mu_max: DEFAULT_MU_MAX,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.w_values.is_empty() {
            return Err(Error::Empty("dataset needs at least one N and one w/g".into()));
        }
        for &w in &self.w_values {
            if !(W_RANGE.0..=W_RANGE.1).contains(&w) {
                return Err(Error::invalid(format!("w/g = {w} outside [{}, {}]", W_RANGE.0, W_RANGE.1)));
            }
        }
        if self.input_side >= self.ground_side {
            return Err(Error::invalid("input resolution must be below the ground-truth resolution"));
        }
        if self.ratio_max < 2 || self.ratio_min == 0 || self.ratio_min > self.ratio_max {
            return Err(Error::invalid("ratio range must be [r_min >= 1, r_max >= 2]"));
        }
        if self.input_side * self.ratio_max > self.ground_side {
            return Err(Error::invalid(format!(
                "r_max = {} exceeds {} div {}",
                self.ratio_max, self.ground_side, self.input_side
            )));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::invalid("train fraction must lie in (0, 1)"));
        }
        for &n in &self.n_values {
            ModelParams::new(n, 1.0, 0.0)?;
        }
        Ok(())
    }

    pub fn axes(&self) -> Result<AxisGrid> {
        AxisGrid::uniform(self.t_min, self.t_max, self.ground_side, self.mu_max, self.ground_side)
    }

    /// `(N, w/g)` for each diagram, N-major.
    pub fn configurations(&self) -> Vec<(usize, f64)> {
        self.n_values.iter().flat_map(|&n| self.w_values.iter().map(move |&w| (n, w))).collect()
    }

    pub fn pair_config(&self, strategy: CropStrategy) -> PairConfig {
        PairConfig { input_side: self.input_side, ratio_min: self.ratio_min, ratio_max: self.ratio_max, strategy }
    }
}

/// Simulates every configuration of `spec` at the ground-truth resolution.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<PhaseDiagram>> {
    spec.validate()?;
    let axes = spec.axes()?;
    spec.configurations().into_iter().map(|(n, w)| generate(&ModelParams::new(n, w, 0.0)?, &axes)).collect()
}

/// Indices whose `w/g` lies in `[lo, hi]` and the remainder.
pub fn partition_by_w(diagrams: &[PhaseDiagram], lo: f64, hi: f64) -> (Vec<usize>, Vec<usize>) {
    (0..diagrams.len()).partition(|&i| (lo..=hi).contains(&diagrams[i].params.w_over_g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy_diagram(side: usize) -> PhaseDiagram {
        let axes = AxisGrid::default_window(side).unwrap();
        let values = Grid::from_fn(side, side, |i, j| -0.5 + 0.01 * i as f64 - 0.003 * j as f64);
        PhaseDiagram::new(ModelParams::new(6, 1.0, 0.0).unwrap(), axes, values).unwrap()
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(to_model_space(0.0), 0.5);
        assert!(to_model_space(-0.3) < 0.5);
        assert!((from_model_space(to_model_space(-0.3)).unwrap() + 0.3).abs() < 1e-12);
        assert!(matches!(from_model_space(0.0), Err(Error::Saturated(_))));
        assert!(matches!(from_model_space(1.0), Err(Error::Saturated(_))));
    }

    #[test]
    fn identity_crops_and_downsamples() {
        let d = toy_diagram(10);
        for strategy in [CropStrategy::ContiguousBlock, CropStrategy::RandomCoordinates] {
            let p = crop(&d, &CropSpec { strategy, side: 10, seed: 3 }).unwrap();
            assert_eq!(p, Patch::from_diagram(&d));
        }
        let full = Patch::from_diagram(&d);
        let same = downsample_random(&full, 10, &mut stream(1, Stream::Downsample, 0)).unwrap();
        assert_eq!(same.values, full.values);
        assert!(crop(&d, &CropSpec { strategy: CropStrategy::ContiguousBlock, side: 11, seed: 0 }).is_err());
        assert!(downsample_random(&full, 11, &mut stream(1, Stream::Downsample, 0)).is_err());
    }

    #[test]
    fn crops_are_seed_deterministic() {
        let d = toy_diagram(20);
        for strategy in [CropStrategy::ContiguousBlock, CropStrategy::RandomCoordinates] {
            let a = crop(&d, &CropSpec { strategy, side: 7, seed: 42 }).unwrap();
            let b = crop(&d, &CropSpec { strategy, side: 7, seed: 42 }).unwrap();
            assert_eq!(a, b);
            assert!(a.rows.windows(2).all(|w| w[0] < w[1]));
            if strategy == CropStrategy::ContiguousBlock {
                assert!(a.rows.windows(2).all(|w| w[1] == w[0] + 1));
            }
        }
    }

    #[test]
    fn unit_ratio_targets_coincide_with_inputs() {
        let d = toy_diagram(12);
        let s = make_sample(0, &d, CropStrategy::ContiguousBlock, 12, 1, &mut stream(5, Stream::TrainPair, 0)).unwrap();
        assert_eq!(s.input_grid(), s.target_grid());
        assert_eq!(s.input_coords[0], chart_axis(12));
    }

    #[test]
    fn paper_window_fits_ground_truth() {
        // r = 4 at 48 inputs needs 192 <= 196 points per axis.
        let spec = DatasetSpec::default();
        assert!(spec.validate().is_ok());
        assert_eq!(spec.input_side * spec.ratio_max, 192);
        let bad = DatasetSpec { ratio_max: 5, ..DatasetSpec::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn oversized_window_is_rejected() {
        let d = toy_diagram(20);
        let r = make_sample(0, &d, CropStrategy::ContiguousBlock, 6, 4, &mut stream(0, Stream::TrainPair, 0));
        assert!(r.is_err());
    }

    #[test]
    fn split_follows_floor_rule() {
        let (train, val) = split(75, 0.9, 11).unwrap();
        assert_eq!((train.len(), val.len()), (67, 8));
        let mut all: Vec<_> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..75).collect::<Vec<_>>());
        assert_eq!(split(75, 0.9, 11).unwrap(), (train, val));
        assert!(split(3, 0.1, 0).is_err());
        assert!(split(5, 1.0, 0).is_err());
    }

    #[test]
    fn pack_layout() {
        let g = Grid::from_fn(3, 4, |i, j| 0.1 * (i + j) as f64 + 0.05);
        let p = pack(&g);
        assert_eq!(unpack(&p), g);
        assert_eq!(p.get(2, 3, 1), PLACEHOLDER);
        assert_eq!(p.get(1, 0, 2), PLACEHOLDER);
    }

    #[test]
    fn partition_by_w_bounds() {
        let axes = AxisGrid::default_window(3).unwrap();
        let ds: Vec<PhaseDiagram> = [0.3, 0.5, 0.9, 1.3, 1.5]
            .iter()
            .map(|&w| PhaseDiagram::new(ModelParams::new(4, w, 0.0).unwrap(), axes.clone(), Grid::zeros(3, 3)).unwrap())
            .collect();
        assert_eq!(partition_by_w(&ds, 0.5, 1.3), (vec![1, 2, 3], vec![0, 4]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn samples_are_exact_lookups(seed in 0u64..1000, ratio in 1usize..=3) {
            let d = toy_diagram(18);
            let mut rng = stream(seed, Stream::TrainPair, 0);
            let s = make_sample(4, &d, CropStrategy::RandomCoordinates, 6, ratio, &mut rng).unwrap();
            let pv = &s.provenance;
            let side = 6 * ratio;
            prop_assert_eq!(s.targets.len(), side * side);
            for (k, t) in s.targets.iter().enumerate() {
                let (i, j) = (k / side, k % side);
                prop_assert_eq!(t.value, to_model_space(d.values.get(pv.window_rows[i], pv.window_cols[j])));
                prop_assert!(t.coord[0].abs() < 1.0 && t.coord[1].abs() < 1.0);
                prop_assert_eq!(t.cell, [2.0 / side as f64; 2]);
            }
            let input = s.input_grid();
            for (a, &wi) in pv.input_rows.iter().enumerate() {
                for (b, &wj) in pv.input_cols.iter().enumerate() {
                    let src = d.values.get(pv.window_rows[wi], pv.window_cols[wj]);
                    prop_assert_eq!(input.get(a, b), to_model_space(src));
                    prop_assert!(input.get(a, b) > 0.0 && input.get(a, b) < 1.0);
                }
            }
        }

        // Above v ~ 8 the sigmoid itself rounds away the information needed
        // to invert it in f64; condensates are negative in practice.
        #[test]
        fn sigmoid_round_trip(v in -30.0f64..8.0) {
            prop_assert!((from_model_space(to_model_space(v)).unwrap() - v).abs() < 1e-12);
        }
    }
}
