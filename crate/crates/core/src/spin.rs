//! Lattice spin Hamiltonian of the massless Schwinger model, split into
//! fixed-magnetization sectors, and the staggered chiral-condensate operator.
//!
//! Conventions: site `n` in `1..=N` is bit `n - 1` of a basis mask, and a set
//! bit means Z-eigenvalue `+1`. Energies are in units of the coupling `g`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub const MIN_SITES: usize = 2;
pub const MAX_SITES: usize = 16;
/// Largest chain the dense Kronecker-product construction accepts.
pub const DENSE_ORACLE_MAX_SITES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sites: usize,
    pub w_over_g: f64,
    pub mu_over_g: f64,
    pub m_over_g: f64,
}

impl ModelParams {
    /// Massless model parameters; `m/g` is pinned to zero.
    pub fn new(n_sites: usize, w_over_g: f64, mu_over_g: f64) -> Result<Self> {
        let p = ModelParams { n_sites, w_over_g, mu_over_g, m_over_g: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_SITES..=MAX_SITES).contains(&self.n_sites) {
            return Err(Error::invalid(format!("n_sites = {} outside [{MIN_SITES}, {MAX_SITES}]", self.n_sites)));
        }
        if !(self.w_over_g.is_finite() && self.w_over_g > 0.0) {
            return Err(Error::invalid(format!("w/g = {} must be positive", self.w_over_g)));
        }
        if !(self.mu_over_g.is_finite() && self.mu_over_g >= 0.0) {
            return Err(Error::invalid(format!("mu/g = {} must be non-negative", self.mu_over_g)));
        }
        if self.m_over_g != 0.0 {
            return Err(Error::invalid("only the massless model (m/g = 0) is supported"));
        }
        Ok(())
    }

    pub fn with_mu(&self, mu_over_g: f64) -> Self {
        ModelParams { mu_over_g, ..*self }
    }

    /// Lattice spacing in units of `1/g`, from `w = 1/(2a)`.
    pub fn lattice_spacing(&self) -> f64 {
        1.0 / (2.0 * self.w_over_g)
    }

    /// Factor turning `<sum (-1)^n Z_n>` into a condensate in units of `g`:
    /// `1/(2 N a) = (w/g) / N`.
    pub fn condensate_scale(&self) -> f64 {
        self.w_over_g / self.n_sites as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub hamming_weight: usize,
    /// Ascending masks with exactly `hamming_weight` set bits.
    pub states: Vec<u32>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, hamming_weight: usize) -> Self {
        let states = (0u32..1 << n_sites).filter(|m| m.count_ones() as usize == hamming_weight).collect();
        SectorBasis { n_sites, hamming_weight, states }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianBlock {
    pub sector: SectorBasis,
    pub matrix: SymMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondensateDiagonal {
    /// `d(mask) = sum_n (-1)^n z_n(mask)`, indexed by mask.
    pub values: Vec<f64>,
    pub scale: f64,
}

#[inline]
fn z(mask: u32, site: usize) -> f64 {
    if mask >> (site - 1) & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

#[inline]
fn stagger(site: usize) -> f64 {
    if site.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn enumerate_sectors(params: &ModelParams) -> Vec<SectorBasis> {
    (0..=params.n_sites).map(|k| SectorBasis::new(params.n_sites, k)).collect()
}

/// Diagonal (Z-only) part of the Hamiltonian for one basis mask.
pub fn diagonal_energy(params: &ModelParams, mask: u32) -> f64 {
    let n = params.n_sites;
    let gauge = 1.0 / (8.0 * params.w_over_g);

    // Running prefix S_m = sum_{l<=m} z_l gives sum_{k<l<=m} z_k z_l = (S_m^2 - m)/2.
    let mut prefix = 0.0;
    let mut long_range = 0.0;
    let mut linear = 0.0;
    let mut field = 0.0;
    for site in 1..=n {
        let zs = z(mask, site);
        prefix += zs;
        if (2..n).contains(&site) {
            long_range += 0.5 * (prefix * prefix - site as f64);
        }
        if site < n && site % 2 == 1 {
            linear += prefix;
        }
        field += (params.m_over_g * stagger(site) + params.mu_over_g) * zs;
    }
    gauge * long_range + 0.5 * field - gauge * linear
}

pub fn build_block(params: &ModelParams, sector: &SectorBasis) -> Result<HamiltonianBlock> {
    params.validate()?;
    if sector.n_sites != params.n_sites {
        return Err(Error::invalid(format!("sector built for N={} used with N={}", sector.n_sites, params.n_sites)));
    }
    let dim = sector.dim();
    let mut matrix = SymMatrix::zeros(dim);
    for (row, &mask) in sector.states.iter().enumerate() {
        matrix.set(row, row, diagonal_energy(params, mask));
        // (XX + YY)/2 * w/g flips an antiparallel neighbour pair with amplitude w/g.
        for bond in 0..params.n_sites - 1 {
            let pair = (mask >> bond) & 0b11;
            if pair == 0b01 || pair == 0b10 {
                let flipped = mask ^ (0b11 << bond);
                if flipped > mask {
                    let col = sector.index_of(flipped).expect("hopping conserves the Hamming weight");
                    matrix.set(row, col, params.w_over_g);
                    matrix.set(col, row, params.w_over_g);
                }
            }
        }
    }
    Ok(HamiltonianBlock { sector: sector.clone(), matrix })
}

pub fn build_condensate_diagonal(params: &ModelParams) -> CondensateDiagonal {
    let n = params.n_sites;
    let values = (0u32..1 << n).map(|mask| (1..=n).map(|site| stagger(site) * z(mask, site)).sum()).collect();
    CondensateDiagonal { values, scale: params.condensate_scale() }
}

/// Full `2^N x 2^N` Hamiltonian assembled term by term from Kronecker
/// products of single-site Pauli matrices. Used to validate [`build_block`].
pub fn dense_oracle(params: &ModelParams) -> Result<DMatrix<f64>> {
    params.validate()?;
    let n = params.n_sites;
    if n > DENSE_ORACLE_MAX_SITES {
        return Err(Error::invalid(format!("dense oracle limited to N <= {DENSE_ORACLE_MAX_SITES}, got {n}")));
    }
    // Local basis index b = bit value; Z|1> = +|1>.
    let id = DMatrix::<f64>::identity(2, 2);
    let pz = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let px = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    // i*Y is real; Y(x)Y = -(iY)(x)(iY).
    let iy = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);

    // Kronecker order puts the highest bit leftmost, so site n sits at factor N - n.
    let embed = |ops: &[(usize, &DMatrix<f64>)]| -> DMatrix<f64> {
        let mut acc = DMatrix::<f64>::identity(1, 1);
        for site in (1..=n).rev() {
            let factor = ops.iter().find(|(s, _)| *s == site).map(|(_, m)| *m).unwrap_or(&id);
            acc = acc.kronecker(factor);
        }
        acc
    };

    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let gauge = 1.0 / (8.0 * params.w_over_g);
    for m in 2..n {
        for k in 1..=m {
            for l in k + 1..=m {
                h += embed(&[(k, &pz), (l, &pz)]) * gauge;
            }
        }
    }
    for site in 1..n {
        let xx = embed(&[(site, &px), (site + 1, &px)]);
        let yy = -embed(&[(site, &iy), (site + 1, &iy)]);
        h += (xx + yy) * (0.5 * params.w_over_g);
    }
    for site in 1..=n {
        let coeff = 0.5 * (params.m_over_g * stagger(site) + params.mu_over_g);
        h += embed(&[(site, &pz)]) * coeff;
    }
    for m in (1..n).filter(|m| m % 2 == 1) {
        for l in 1..=m {
            h -= embed(&[(l, &pz)]) * gauge;
        }
    }
    Ok(h)
}

/// Total magnetization `sum_n Z_n` in the dense basis.
pub fn dense_total_z(n_sites: usize) -> DMatrix<f64> {
    let dim = 1usize << n_sites;
    DMatrix::from_fn(dim, dim, |i, j| if i == j { (1..=n_sites).map(|s| z(i as u32, s)).sum() } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize, w: f64, mu: f64) -> ModelParams {
        ModelParams::new(n, w, mu).unwrap()
    }

    #[test]
    fn sector_sizes_are_binomial() {
        let sizes: Vec<_> = enumerate_sectors(&params(2, 1.0, 0.0)).iter().map(|s| s.dim()).collect();
        assert_eq!(sizes, vec![1, 2, 1]);

        let s10 = enumerate_sectors(&params(10, 1.0, 0.0));
        assert_eq!(s10.iter().map(|s| s.dim()).max(), Some(252));

        let s12 = enumerate_sectors(&params(12, 1.0, 0.0));
        assert_eq!(s12.len(), 13);
        assert_eq!(s12.iter().map(|s| s.dim()).sum::<usize>(), 4096);
        for s in &s12 {
            assert!(s.states.windows(2).all(|w| w[0] < w[1]));
            assert!(s.states.iter().all(|m| m.count_ones() as usize == s.hamming_weight));
        }
    }

    #[test]
    fn two_site_blocks() {
        let p = params(2, 1.0, 0.0);
        let sectors = enumerate_sectors(&p);
        let k1 = build_block(&p, &sectors[1]).unwrap();
        assert_eq!(k1.sector.states, vec![0b01, 0b10]);
        let expected = [[-0.125, 1.0], [1.0, 0.125]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((k1.matrix.get(i, j) - expected[i][j]).abs() < 1e-15);
            }
        }
        let k2 = build_block(&p, &sectors[2]).unwrap();
        assert_eq!(k2.sector.states, vec![0b11]);
        assert!((k2.matrix.get(0, 0) + 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(1, 1.0, 0.0).is_err());
        assert!(ModelParams::new(17, 1.0, 0.0).is_err());
        assert!(ModelParams::new(4, 0.0, 0.0).is_err());
        assert!(ModelParams::new(4, 1.0, -0.1).is_err());
        let p = ModelParams { m_over_g: 0.2, ..params(4, 1.0, 0.0) };
        assert!(p.validate().is_err());
        assert!(dense_oracle(&params(11, 1.0, 0.0)).is_err());
    }

    #[test]
    fn block_from_wrong_chain_is_rejected() {
        let p = params(4, 1.0, 0.0);
        let foreign = SectorBasis::new(6, 3);
        assert!(build_block(&p, &foreign).is_err());
    }

    #[test]
    fn condensate_diagonal_examples() {
        let d2 = build_condensate_diagonal(&params(2, 1.0, 0.0));
        assert_eq!(d2.values[0b01], -2.0);
        assert_eq!(d2.values[0b11], 0.0);
        assert_eq!(d2.scale, 0.5);

        let d4 = build_condensate_diagonal(&params(4, 1.0, 0.0));
        assert_eq!(d4.values[0b0101], -4.0);
        assert_eq!(d4.values[0b1111], 0.0);
    }

    #[test]
    fn dense_oracle_matches_two_site_blocks() {
        let p = params(2, 1.0, 0.0);
        let h = dense_oracle(&p).unwrap();
        // Masks 00, 01, 10, 11 -> sectors k=0, 1, 1, 2.
        assert!((h[(1, 1)] + 0.125).abs() < 1e-15);
        assert!((h[(2, 2)] - 0.125).abs() < 1e-15);
        assert!((h[(1, 2)] - 1.0).abs() < 1e-15);
        assert!((h[(3, 3)] + 0.125).abs() < 1e-15);
        // k=0 block: mask 00, z1 = -1.
        assert!((h[(0, 0)] - 0.125).abs() < 1e-15);
        for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3)] {
            assert_eq!(h[(i, j)], 0.0);
        }
    }

    #[test]
    fn dense_oracle_is_symmetric_and_conserves_magnetization() {
        for n in 2..=8 {
            let p = params(n, 0.7, 0.9);
            let h = dense_oracle(&p).unwrap();
            let asym = (&h - h.transpose()).abs().max();
            assert!(asym < 1e-12, "N={n} asym={asym}");
            let sz = dense_total_z(n);
            let comm = (&h * &sz - &sz * &h).abs().max();
            assert_eq!(comm, 0.0, "N={n}");
        }
    }

    fn reassembly_error(p: &ModelParams) -> f64 {
        let h = dense_oracle(p).unwrap();
        let mut rebuilt = DMatrix::<f64>::zeros(h.nrows(), h.ncols());
        for sector in enumerate_sectors(p) {
            let block = build_block(p, &sector).unwrap();
            for (a, &ma) in sector.states.iter().enumerate() {
                for (b, &mb) in sector.states.iter().enumerate() {
                    rebuilt[(ma as usize, mb as usize)] = block.matrix.get(a, b);
                }
            }
        }
        (h - rebuilt).abs().max()
    }

    #[test]
    fn blocks_reassemble_the_dense_oracle() {
        for n in 2..=10 {
            let err = reassembly_error(&params(n, 1.3, 0.4));
            assert!(err < 1e-12, "N={n}: {err}");
        }
    }

    #[test]
    fn condensate_diagonal_is_traceless() {
        for n in 2..=12 {
            let d = build_condensate_diagonal(&params(n, 1.0, 0.0));
            assert_eq!(d.values.iter().sum::<f64>(), 0.0);
            assert!(d.values.iter().all(|v| v.abs() <= n as f64));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_params_reassemble(n in 2usize..=7, w in 0.3f64..1.5, mu in 0.0f64..1.4) {
            prop_assert!(reassembly_error(&params(n, w, mu)) < 1e-12);
        }

        #[test]
        fn blocks_symmetric_and_weight_preserving(n in 2usize..=10, w in 0.3f64..3.4, mu in 0.0f64..1.4) {
            let p = params(n, w, mu);
            for sector in enumerate_sectors(&p) {
                let block = build_block(&p, &sector).unwrap();
                let dim = sector.dim();
                for i in 0..dim {
                    for j in 0..dim {
                        let a = block.matrix.get(i, j);
                        prop_assert!((a - block.matrix.get(j, i)).abs() < 1e-14);
                        if i != j && a != 0.0 {
                            let diff = sector.states[i] ^ sector.states[j];
                            // Exactly one adjacent pair differs.
                            prop_assert_eq!(diff.count_ones(), 2);
                            prop_assert_eq!(diff >> diff.trailing_zeros(), 0b11);
                        }
                    }
                }
            }
        }
    }
}
