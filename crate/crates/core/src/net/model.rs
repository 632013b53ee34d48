use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::{relu_backward_in_place, relu_in_place, Conv3, Dense};
use crate::dataset::{PackedInput, CHANNELS};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::locate;
use crate::rng::{stream, Stream};

/// Rows per decoder GEMM when predicting.
const DECODE_CHUNK: usize = 8192;
/// Floor on the value-channel spread used to standardize encoder inputs.
pub const MIN_INPUT_SPREAD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub in_channels: usize,
    pub latent_dim: usize,
    pub res_blocks: usize,
    pub hidden_width: usize,
    pub hidden_layers: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig { in_channels: CHANNELS, latent_dim: 64, res_blocks: 8, hidden_width: 256, hidden_layers: 5 }
    }
}

impl ArchConfig {
    /// Smallest useful network; used for gradient checks.
    pub fn mini() -> Self {
        ArchConfig { in_channels: CHANNELS, latent_dim: 4, res_blocks: 1, hidden_width: 8, hidden_layers: 2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.latent_dim == 0 || self.hidden_width == 0 || self.hidden_layers == 0 {
            return Err(Error::invalid(format!("architecture has a zero dimension: {self:?}")));
        }
        Ok(())
    }

    /// Latent features, two offset components, two cell components.
    pub fn decoder_inputs(&self) -> usize {
        self.latent_dim + 4
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    head: Conv3,
    blocks: Vec<[Conv3; 2]>,
    tail: Conv3,
    mlp: Vec<Dense>,
    total: usize,
}

impl Layout {
    fn new(arch: &ArchConfig) -> Self {
        let mut off = 0;
        let d = arch.latent_dim;
        let head = Conv3::new(arch.in_channels, d, &mut off);
        let blocks = (0..arch.res_blocks).map(|_| [Conv3::new(d, d, &mut off), Conv3::new(d, d, &mut off)]).collect();
        let tail = Conv3::new(d, d, &mut off);
        let mut mlp = Vec::with_capacity(arch.hidden_layers + 1);
        let mut width = arch.decoder_inputs();
        for _ in 0..arch.hidden_layers {
            mlp.push(Dense::new(width, arch.hidden_width, &mut off));
            width = arch.hidden_width;
        }
        mlp.push(Dense::new(width, 1, &mut off));
        Layout { head, blocks, tail, mlp, total: off }
    }

    /// `(weight offset, weight len, bias offset, bias len, fan_in)` per layer,
    /// in declaration order.
    fn tensors(&self) -> Vec<(usize, usize, usize, usize, usize)> {
        let conv = |c: &Conv3| (c.weight, c.param_count() - c.outputs, c.bias, c.outputs, c.fan_in());
        let mut out = vec![conv(&self.head)];
        for [a, b] in &self.blocks {
            out.push(conv(a));
            out.push(conv(b));
        }
        out.push(conv(&self.tail));
        for l in &self.mlp {
            out.push((l.weight, l.param_count() - l.outputs, l.bias, l.outputs, l.fan_in()));
        }
        out
    }
}

/// Encoder and decoder parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: ArchConfig,
    layout: Layout,
    params: Vec<f64>,
}

/// Activations kept from an encoder forward pass.
pub(crate) struct EncoderCache {
    h: usize,
    w: usize,
    head_cols: Vec<f64>,
    blocks: Vec<BlockCache>,
    tail_cols: Vec<f64>,
}

struct BlockCache {
    cols1: Vec<f64>,
    pre: Vec<f64>,
    cols2: Vec<f64>,
}

/// Inputs and pre-activations of each decoder layer.
pub(crate) struct DecoderCache {
    rows: usize,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Network {
    /// Uniform `±1/sqrt(fan_in)` weights and zero biases from the seeded stream.
    pub fn new(arch: ArchConfig, seed: u64) -> Result<Self> {
        let mut net = Network::zeroed(arch)?;
        let mut rng = stream(seed, Stream::Init, 0);
        for (w, wlen, _, _, fan_in) in net.layout.tensors() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut net.params[w..w + wlen] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeroed(arch: ArchConfig) -> Result<Self> {
        arch.validate()?;
        let layout = Layout::new(&arch);
        let params = vec![0.0; layout.total];
        Ok(Network { arch, layout, params })
    }

    pub fn from_params(arch: ArchConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = Network::zeroed(arch)?;
        if params.len() != net.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "architecture needs {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Number of parameters belonging to the encoder; they come first.
    pub fn encoder_param_count(&self) -> usize {
        self.layout.mlp[0].weight
    }

    /// Input-side weights of the head convolution for one input channel.
    pub fn head_channel_weights_mut(&mut self, channel: usize) -> impl Iterator<Item = &mut f64> {
        let head = self.layout.head;
        let (c, d) = (head.inputs, head.outputs);
        self.params[head.weight..head.weight + 9 * c * d]
            .chunks_exact_mut(d)
            .enumerate()
            .filter(move |(row, _)| row % c == channel)
            .flat_map(|(_, w)| w.iter_mut())
    }

    pub fn encode(&self, input: &PackedInput, axes: &[Vec<f64>; 2]) -> Result<LatentGrid> {
        self.check_input(input)?;
        let (data, scale) = self.standardize(input);
        let features = self.encoder_forward(&data, input.rows, input.cols, None);
        let values = input.data.iter().step_by(self.arch.in_channels).copied().collect();
        Ok(LatentGrid::new(input.rows, input.cols, self.arch.latent_dim, features, values, axes.clone())?
            .with_scale(scale))
    }

    /// Shifts the value channel to zero mean and unit spread; placeholder
    /// channels pass unchanged.
    pub(crate) fn standardize(&self, input: &PackedInput) -> (Vec<f64>, ValueScale) {
        let c = self.arch.in_channels;
        let n = (input.rows * input.cols) as f64;
        let mean = input.data.iter().step_by(c).sum::<f64>() / n;
        let var = input.data.iter().step_by(c).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let spread = var.sqrt().max(MIN_INPUT_SPREAD);
        let mut data = input.data.clone();
        for v in data.iter_mut().step_by(c) {
            *v = (*v - mean) / spread;
        }
        (data, ValueScale { mean, spread })
    }

    fn check_input(&self, input: &PackedInput) -> Result<()> {
        if input.data.len() != input.rows * input.cols * self.arch.in_channels {
            return Err(Error::ShapeMismatch(format!(
                "input holds {} values, expected {}x{}x{}",
                input.data.len(),
                input.rows,
                input.cols,
                self.arch.in_channels
            )));
        }
        Ok(())
    }

    pub(crate) fn encoder_forward(&self, x: &[f64], h: usize, w: usize, cache: Option<&mut EncoderCache>) -> Vec<f64> {
        let p = &self.params;
        let l = &self.layout;
        let (skip, head_cols) = l.head.forward(p, x, h, w);
        let mut state = skip.clone();
        let mut blocks = Vec::new();
        for [c1, c2] in &l.blocks {
            let (pre, cols1) = c1.forward(p, &state, h, w);
            let mut act = pre.clone();
            relu_in_place(&mut act);
            let (out, cols2) = c2.forward(p, &act, h, w);
            for (s, o) in state.iter_mut().zip(&out) {
                *s += o;
            }
            if cache.is_some() {
                blocks.push(BlockCache { cols1, pre, cols2 });
            }
        }
        let (mut latent, tail_cols) = l.tail.forward(p, &state, h, w);
        for (z, s) in latent.iter_mut().zip(&skip) {
            *z += s;
        }
        if let Some(c) = cache {
            *c = EncoderCache { h, w, head_cols, blocks, tail_cols };
        }
        latent
    }

    pub(crate) fn empty_encoder_cache() -> EncoderCache {
        EncoderCache { h: 0, w: 0, head_cols: Vec::new(), blocks: Vec::new(), tail_cols: Vec::new() }
    }

    pub(crate) fn encoder_backward(&self, cache: &EncoderCache, d_latent: &[f64], grad: &mut [f64]) {
        let p = &self.params;
        let l = &self.layout;
        let (h, w) = (cache.h, cache.w);
        let mut d_state = l.tail.backward(p, &cache.tail_cols, d_latent, h, w, grad, true).expect("dx requested");
        for ([c1, c2], bc) in l.blocks.iter().zip(&cache.blocks).rev() {
            let mut d_act = c2.backward(p, &bc.cols2, &d_state, h, w, grad, true).expect("dx requested");
            relu_backward_in_place(&bc.pre, &mut d_act);
            let d_in = c1.backward(p, &bc.cols1, &d_act, h, w, grad, true).expect("dx requested");
            for (s, d) in d_state.iter_mut().zip(&d_in) {
                *s += d;
            }
        }
        for (s, d) in d_state.iter_mut().zip(d_latent) {
            *s += d;
        }
        l.head.backward(p, &cache.head_cols, &d_state, h, w, grad, false);
    }

    /// `rows x decoder_inputs` -> `rows` outputs of the MLP alone.
    pub(crate) fn decoder_forward(&self, x: Vec<f64>, rows: usize, cache: Option<&mut DecoderCache>) -> Vec<f64> {
        let p = &self.params;
        let last = self.layout.mlp.len() - 1;
        let mut inputs = Vec::new();
        let mut pres = Vec::new();
        let mut act = x;
        for (k, layer) in self.layout.mlp.iter().enumerate() {
            let pre = layer.forward(p, &act, rows);
            if k == last {
                if cache.is_some() {
                    inputs.push(act);
                }
                act = pre;
                break;
            }
            let mut next = pre.clone();
            relu_in_place(&mut next);
            if cache.is_some() {
                inputs.push(std::mem::replace(&mut act, next));
                pres.push(pre);
            } else {
                act = next;
            }
        }
        if let Some(c) = cache {
            *c = DecoderCache { rows, inputs, pre: pres };
        }
        act
    }

    pub(crate) fn empty_decoder_cache() -> DecoderCache {
        DecoderCache { rows: 0, inputs: Vec::new(), pre: Vec::new() }
    }

    /// Returns the gradient with respect to the decoder input rows.
    pub(crate) fn decoder_backward(&self, cache: &DecoderCache, d_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let p = &self.params;
        let mut d = d_out.to_vec();
        for (k, layer) in self.layout.mlp.iter().enumerate().rev() {
            if k < cache.pre.len() {
                relu_backward_in_place(&cache.pre[k], &mut d);
            }
            d = layer.backward(p, &cache.inputs[k], &d, cache.rows, grad, true).expect("dx requested");
        }
        d
    }

    /// Decoder input row for one ensemble term.
    pub(crate) fn decoder_row(&self, latent: &LatentGrid, q: &Query, out: &mut Vec<f64>) {
        let s = latent.offset_scale();
        out.extend_from_slice(latent.feature(q.site));
        out.extend_from_slice(&[q.offset[0] * s[0], q.offset[1] * s[1], q.cell[0] * s[0], q.cell[1] * s[1]]);
    }
}

/// Encoder output with the coordinates of its sites and the input value channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    features: Vec<f64>,
    values: Vec<f64>,
    axes: [Vec<f64>; 2],
    scale: ValueScale,
}

/// Mean and spread of the encoded value channel. Decoder outputs are in
/// units of the spread about the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueScale {
    pub mean: f64,
    pub spread: f64,
}

impl ValueScale {
    pub const IDENTITY: ValueScale = ValueScale { mean: 0.0, spread: 1.0 };

    pub fn restore(&self, standardized: f64) -> f64 {
        self.mean + self.spread * standardized
    }
}

/// One decoder evaluation: latent site, offset from it, and target cell size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query {
    pub site: usize,
    pub offset: [f64; 2],
    pub cell: [f64; 2],
}

/// The four corners of the enclosing cell with their ensemble weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ensemble {
    pub sites: [usize; 4],
    pub weights: [f64; 4],
    pub offsets: [[f64; 2]; 4],
}

impl LatentGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        dim: usize,
        features: Vec<f64>,
        values: Vec<f64>,
        axes: [Vec<f64>; 2],
    ) -> Result<Self> {
        if features.len() != rows * cols * dim || values.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("latent arrays do not match {rows}x{cols}x{dim}")));
        }
        if axes[0].len() != rows || axes[1].len() != cols {
            return Err(Error::ShapeMismatch("latent axes do not match the grid".into()));
        }
        for axis in &axes {
            if axis.len() < 2 {
                return Err(Error::DegenerateCell("latent axis needs at least two sites".into()));
            }
            if axis.windows(2).any(|p| !(p[1] > p[0])) {
                return Err(Error::DegenerateCell("latent sites coincide or are unordered".into()));
            }
        }
        if features.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::invalid("latent grid holds non-finite entries"));
        }
        Ok(LatentGrid { rows, cols, dim, features, values, axes, scale: ValueScale::IDENTITY })
    }

    pub fn with_scale(mut self, scale: ValueScale) -> Self {
        self.scale = scale;
        self
    }

    pub fn scale(&self) -> ValueScale {
        self.scale
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.dim)
    }

    pub fn axes(&self) -> &[Vec<f64>; 2] {
        &self.axes
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, site: usize) -> &[f64] {
        &self.features[site * self.dim..(site + 1) * self.dim]
    }

    /// Input value channel at a site.
    pub fn value(&self, site: usize) -> f64 {
        self.values[site]
    }

    /// Offsets and cells are fed to the decoder in units of half the latent
    /// extent per site.
    fn offset_scale(&self) -> [f64; 2] {
        [self.rows as f64 / 2.0, self.cols as f64 / 2.0]
    }

    /// Clamps `x` into the hull and returns its four corners. Each weight is
    /// the area of the rectangle between `x` and the opposite corner.
    pub fn ensemble(&self, x: [f64; 2]) -> Result<Ensemble> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::invalid(format!("query point ({}, {}) is not finite", x[0], x[1])));
        }
        let [ra, ca] = &self.axes;
        let xr = x[0].clamp(ra[0], ra[ra.len() - 1]);
        let xc = x[1].clamp(ca[0], ca[ca.len() - 1]);
        let (i, _) = locate(ra, xr);
        let (j, _) = locate(ca, xc);
        let (r0, r1, c0, c1) = (ra[i], ra[i + 1], ca[j], ca[j + 1]);
        let total = (r1 - r0) * (c1 - c0);
        let corners = [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)];
        let mut e = Ensemble { sites: [0; 4], weights: [0.0; 4], offsets: [[0.0; 2]; 4] };
        for (t, &(ti, tj)) in corners.iter().enumerate() {
            let (oi, oj) = corners[3 - t];
            e.sites[t] = ti * self.cols + tj;
            e.weights[t] = ((ra[oi] - xr) * (ca[oj] - xc)).abs() / total;
            e.offsets[t] = [xr - ra[ti], xc - ca[tj]];
        }
        Ok(e)
    }
}

/// Maps latent features at a site, plus the relative position of the query,
/// to a model-space value.
pub trait LocalDecoder {
    fn decode(&self, latent: &LatentGrid, queries: &[Query]) -> Vec<f64>;
}

/// Decoder that ignores the features and returns the site's input value.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl LocalDecoder for PassThrough {
    fn decode(&self, latent: &LatentGrid, queries: &[Query]) -> Vec<f64> {
        queries.iter().map(|q| latent.value(q.site)).collect()
    }
}

/// The network decodes in standardized units and maps back to model space.
impl LocalDecoder for Network {
    fn decode(&self, latent: &LatentGrid, queries: &[Query]) -> Vec<f64> {
        queries
            .par_chunks(DECODE_CHUNK)
            .flat_map_iter(|chunk| {
                let mut x = Vec::with_capacity(chunk.len() * self.arch.decoder_inputs());
                for q in chunk {
                    self.decoder_row(latent, q, &mut x);
                }
                let out = self.decoder_forward(x, chunk.len(), None);
                out.into_iter().map(|o| latent.scale.restore(o)).collect::<Vec<_>>()
            })
            .collect()
    }
}

pub fn query(latent: &LatentGrid, decoder: &impl LocalDecoder, x: [f64; 2], cell: [f64; 2]) -> Result<f64> {
    Ok(predict_points(latent, decoder, &[x], cell)?[0])
}

pub fn predict_points(
    latent: &LatentGrid,
    decoder: &impl LocalDecoder,
    points: &[[f64; 2]],
    cell: [f64; 2],
) -> Result<Vec<f64>> {
    let ensembles = points.iter().map(|&x| latent.ensemble(x)).collect::<Result<Vec<_>>>()?;
    let queries: Vec<Query> = ensembles
        .iter()
        .flat_map(|e| (0..4).map(move |t| Query { site: e.sites[t], offset: e.offsets[t], cell }))
        .collect();
    let decoded = decoder.decode(latent, &queries);
    Ok(ensembles
        .iter()
        .zip(decoded.chunks_exact(4))
        .map(|(e, d)| e.weights.iter().zip(d).map(|(w, v)| w * v).sum())
        .collect())
}

/// Queries every `(axes[0][i], axes[1][j])`; the grid is row-major in T.
pub fn predict_grid(
    latent: &LatentGrid,
    decoder: &impl LocalDecoder,
    axes: [&[f64]; 2],
    cell: [f64; 2],
) -> Result<Grid> {
    let points: Vec<[f64; 2]> = axes[0].iter().flat_map(|&r| axes[1].iter().map(move |&c| [r, c])).collect();
    Grid::from_vec(axes[0].len(), axes[1].len(), predict_points(latent, decoder, &points, cell)?)
}
