//! Dense real symmetric matrices and their eigendecomposition via Householder
//! tridiagonalization followed by implicit-shift QL (the EISPACK tred2/tql2 pair).

use crate::error::{Error, Result};

/// Maximum QL iterations spent on a single eigenvalue.
pub const QL_MAX_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::ShapeMismatch(format!("{} entries for {n}x{n}", data.len())));
        }
        Ok(SymMatrix { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Eigenvalues in ascending order; eigenvector `k` is column `k` of the
/// row-major `vectors` array.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    vectors: Vec<f64>,
    n: usize,
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Component `i` of eigenvector `k`.
    #[inline]
    pub fn vector_component(&self, i: usize, k: usize) -> f64 {
        self.vectors[i * self.n + k]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vector_component(i, k)).collect()
    }

    /// `max_k ||A v_k - E_k v_k||_inf`.
    pub fn max_residual(&self, a: &SymMatrix) -> f64 {
        (0..self.n)
            .map(|k| {
                let v = self.vector(k);
                a.matvec(&v).iter().zip(&v).map(|(av, x)| (av - self.values[k] * x).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in a..n {
                let dot: f64 = (0..n).map(|i| self.vector_component(i, a) * self.vector_component(i, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Full eigendecomposition of a symmetric matrix. Only the lower triangle
/// is read.
pub fn symmetric_eigen(a: &SymMatrix) -> Result<SymEigen> {
    let n = a.dim();
    if n == 0 {
        return Ok(SymEigen { values: Vec::new(), vectors: Vec::new(), n });
    }
    let mut v = a.as_slice().to_vec();
    for i in 0..n {
        for j in i + 1..n {
            v[i * n + j] = v[j * n + i];
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    ql_implicit(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    Ok(SymEigen { values, vectors, n })
}

/// Householder reduction to tridiagonal form; on exit `v` holds the
/// accumulated orthogonal transform, `d` the diagonal and `e[1..]` the
/// subdiagonal.
fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e[..i].iter_mut() {
                *x = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`, rotating `v` alongside.
fn ql_implicit(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let idx = |i: usize, j: usize| i * n + j;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERATIONS {
                    return Err(Error::NoConvergence { sector: usize::MAX, dim: n });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d[l + 2..].iter_mut() {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let vk1 = v[idx(k, i + 1)];
                        let vk = v[idx(k, i)];
                        v[idx(k, i + 1)] = s * vk + c * vk1;
                        v[idx(k, i)] = c * vk - s * vk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let x = rng.random_range(-1.0..1.0);
                m.set(i, j, x);
                m.set(j, i, x);
            }
        }
        m
    }

    #[test]
    fn one_by_one() {
        let m = SymMatrix::from_row_major(1, vec![-0.125]).unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        assert_eq!(eig.values, vec![-0.125]);
        assert_eq!(eig.vector(0), vec![1.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = SymMatrix::from_row_major(2, vec![-0.125, 1.0, 1.0, 0.125]).unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        let root = 65f64.sqrt() / 8.0;
        assert!((eig.values[0] + root).abs() < 1e-14);
        assert!((eig.values[1] - root).abs() < 1e-14);
        assert!(eig.max_residual(&m) < 1e-14);
    }

    #[test]
    fn random_fifty_reconstructs() {
        let n = 50;
        let m = random_symmetric(n, 7);
        let eig = symmetric_eigen(&m).unwrap();
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(eig.orthonormality_error() < 1e-10);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let r: f64 =
                    (0..n).map(|k| eig.vector_component(i, k) * eig.values[k] * eig.vector_component(j, k)).sum();
                worst = worst.max((r - m.get(i, j)).abs());
            }
        }
        assert!(worst < 1e-10, "reconstruction error {worst}");
        assert!(eig.max_residual(&m) <= 1e-10 * m.norm_inf());
    }

    #[test]
    fn diagonal_and_degenerate_inputs() {
        let mut m = SymMatrix::zeros(4);
        for (i, v) in [3.0, -1.0, 3.0, 0.0].into_iter().enumerate() {
            m.set(i, i, v);
        }
        let eig = symmetric_eigen(&m).unwrap();
        assert_eq!(eig.values, vec![-1.0, 0.0, 3.0, 3.0]);
        assert!(eig.orthonormality_error() < 1e-15);

        let zero = SymMatrix::zeros(5);
        let eig = symmetric_eigen(&zero).unwrap();
        assert!(eig.values.iter().all(|&v| v == 0.0));
        assert!(eig.orthonormality_error() < 1e-15);
    }

    #[test]
    fn agrees_with_nalgebra_spectrum() {
        let m = random_symmetric(30, 11);
        let eig = symmetric_eigen(&m).unwrap();
        let na = nalgebra::DMatrix::from_row_slice(30, 30, m.as_slice());
        let mut reference: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
