//! Dense and 3x3 convolution layers over a flat parameter vector, with
//! explicit forward caches and reverse-mode backward passes.
//!
//! Activations are pixel-major: an `h x w` map with `c` channels is a
//! `(h*w) x c` row-major matrix.

/// Row-major `C = A' B' + beta C`, where `A'` is `m x k` and `B'` is `k x n`;
/// `trans_a`/`trans_b` mean the stored matrix is the transpose.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    trans_a: bool,
    b: &[f64],
    trans_b: bool,
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the slices hold exactly the extents described by the strides,
    // as asserted above, and `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Fully connected layer: `y = x W + b` with `W` stored `inputs x outputs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: usize,
    pub bias: usize,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, offset: &mut usize) -> Self {
        let weight = *offset;
        let bias = weight + inputs * outputs;
        *offset = bias + outputs;
        Dense { inputs, outputs, weight, bias }
    }

    pub fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    pub fn fan_in(&self) -> usize {
        self.inputs
    }

    fn w<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.weight..self.weight + self.inputs * self.outputs]
    }

    fn b<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.bias..self.bias + self.outputs]
    }

    /// `rows x inputs` -> `rows x outputs`.
    pub fn forward(&self, params: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
        let mut y = Vec::with_capacity(rows * self.outputs);
        let bias = self.b(params);
        for _ in 0..rows {
            y.extend_from_slice(bias);
        }
        gemm(rows, self.inputs, self.outputs, x, false, self.w(params), false, 1.0, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grad`; returns `dx` when asked.
    pub fn backward(
        &self,
        params: &[f64],
        x: &[f64],
        dy: &[f64],
        rows: usize,
        grad: &mut [f64],
        want_dx: bool,
    ) -> Option<Vec<f64>> {
        let (i, o) = (self.inputs, self.outputs);
        gemm(i, rows, o, x, true, dy, false, 1.0, &mut grad[self.weight..self.weight + i * o]);
        let gb = &mut grad[self.bias..self.bias + o];
        for row in dy.chunks_exact(o) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        want_dx.then(|| {
            let mut dx = vec![0.0; rows * i];
            gemm(rows, o, i, dy, false, self.w(params), true, 0.0, &mut dx);
            dx
        })
    }
}

/// 3x3 convolution, unit stride, one pixel of zero padding on every side.
/// Weight rows are indexed `(ky*3 + kx)*inputs + c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conv3 {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: usize,
    pub bias: usize,
}

impl Conv3 {
    pub fn new(inputs: usize, outputs: usize, offset: &mut usize) -> Self {
        let weight = *offset;
        let bias = weight + 9 * inputs * outputs;
        *offset = bias + outputs;
        Conv3 { inputs, outputs, weight, bias }
    }

    pub fn param_count(&self) -> usize {
        9 * self.inputs * self.outputs + self.outputs
    }

    pub fn fan_in(&self) -> usize {
        9 * self.inputs
    }

    fn as_dense(&self) -> Dense {
        Dense { inputs: 9 * self.inputs, outputs: self.outputs, weight: self.weight, bias: self.bias }
    }

    /// Patch matrix: row `p` holds the 3x3 neighbourhood of pixel `p`.
    pub fn im2col(&self, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        let c = self.inputs;
        let mut cols = vec![0.0; h * w * 9 * c];
        for i in 0..h {
            for j in 0..w {
                let row = &mut cols[(i * w + j) * 9 * c..(i * w + j + 1) * 9 * c];
                for ky in 0..3 {
                    let si = i as isize + ky as isize - 1;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let sj = j as isize + kx as isize - 1;
                        if sj < 0 || sj >= w as isize {
                            continue;
                        }
                        let src = (si as usize * w + sj as usize) * c;
                        let dst = (ky * 3 + kx) * c;
                        row[dst..dst + c].copy_from_slice(&x[src..src + c]);
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, dcols: &[f64], h: usize, w: usize) -> Vec<f64> {
        let c = self.inputs;
        let mut dx = vec![0.0; h * w * c];
        for i in 0..h {
            for j in 0..w {
                let row = &dcols[(i * w + j) * 9 * c..(i * w + j + 1) * 9 * c];
                for ky in 0..3 {
                    let si = i as isize + ky as isize - 1;
                    if si < 0 || si >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let sj = j as isize + kx as isize - 1;
                        if sj < 0 || sj >= w as isize {
                            continue;
                        }
                        let dst = (si as usize * w + sj as usize) * c;
                        let src = (ky * 3 + kx) * c;
                        for (d, s) in dx[dst..dst + c].iter_mut().zip(&row[src..src + c]) {
                            *d += s;
                        }
                    }
                }
            }
        }
        dx
    }

    /// Returns the output and the patch matrix needed by `backward`.
    pub fn forward(&self, params: &[f64], x: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
        let cols = self.im2col(x, h, w);
        let y = self.as_dense().forward(params, &cols, h * w);
        (y, cols)
    }

    pub fn backward(
        &self,
        params: &[f64],
        cols: &[f64],
        dy: &[f64],
        h: usize,
        w: usize,
        grad: &mut [f64],
        want_dx: bool,
    ) -> Option<Vec<f64>> {
        self.as_dense().backward(params, cols, dy, h * w, grad, want_dx).map(|dcols| self.col2im(&dcols, h, w))
    }
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `dy` wherever the pre-activation was not positive.
pub fn relu_backward_in_place(pre: &[f64], dy: &mut [f64]) {
    for (d, &p) in dy.iter_mut().zip(pre) {
        if p <= 0.0 {
            *d = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_transposes() {
        // A = [[1,2,3],[4,5,6]], B = [[1,0],[0,1],[1,1]]
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let mut c = vec![0.0; 4];
        gemm(2, 3, 2, &a, false, &b, false, 0.0, &mut c);
        assert_eq!(c, vec![4.0, 5.0, 10.0, 11.0]);
        // A^T stored as 3x2.
        let at = [1.0, 4.0, 2.0, 5.0, 3.0, 6.0];
        let bt = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let mut c2 = vec![0.0; 4];
        gemm(2, 3, 2, &at, true, &bt, true, 0.0, &mut c2);
        assert_eq!(c2, c);
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut off = 0;
        let conv = Conv3::new(2, 3, &mut off);
        let params: Vec<f64> = (0..off).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.1).collect();
        let (h, w) = (4, 5);
        let x: Vec<f64> = (0..h * w * 2).map(|i| (i as f64 * 0.37).sin()).collect();
        let (y, _) = conv.forward(&params, &x, h, w);
        for i in 0..h {
            for j in 0..w {
                for o in 0..3 {
                    let mut acc = params[conv.bias + o];
                    for ky in 0..3i32 {
                        for kx in 0..3i32 {
                            let (si, sj) = (i as i32 + ky - 1, j as i32 + kx - 1);
                            if si < 0 || sj < 0 || si >= h as i32 || sj >= w as i32 {
                                continue;
                            }
                            for c in 0..2 {
                                let wrow = (ky * 3 + kx) as usize * 2 + c;
                                acc += params[conv.weight + wrow * 3 + o] * x[(si as usize * w + sj as usize) * 2 + c];
                            }
                        }
                    }
                    assert!((y[(i * w + j) * 3 + o] - acc).abs() < 1e-13);
                }
            }
        }
    }
}
