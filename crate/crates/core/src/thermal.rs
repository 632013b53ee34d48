//! Gibbs-state expectation of the chiral condensate from sector-resolved
//! spectra.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, SymEigen};
use crate::spin::{
    build_block, build_condensate_diagonal, enumerate_sectors, CondensateDiagonal, HamiltonianBlock, ModelParams,
    SectorBasis,
};

/// Lowest temperature used for production sweeps.
pub const MIN_PRODUCTION_T: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub sector: SectorBasis,
    pub eigen: SymEigen,
}

pub fn diagonalize(block: &HamiltonianBlock) -> Result<EigenSystem> {
    let eigen = symmetric_eigen(&block.matrix).map_err(|err| match err {
        Error::NoConvergence { dim, .. } => Error::NoConvergence { sector: block.sector.hamming_weight, dim },
        other => other,
    })?;
    Ok(EigenSystem { sector: block.sector.clone(), eigen })
}

/// Every eigenstate's energy paired with its diagonal condensate element
/// `O_kk = sum_i v_ik^2 d(i)`.
#[derive(Debug, Clone)]
pub struct SpectralObservable {
    pub levels: Vec<(f64, f64)>,
    pub e_min: f64,
    pub scale: f64,
}

impl SpectralObservable {
    pub fn from_systems(systems: &[EigenSystem], diagonal: &CondensateDiagonal) -> Self {
        let mut levels = Vec::new();
        for sys in systems {
            let states = &sys.sector.states;
            for (k, &energy) in sys.eigen.values.iter().enumerate() {
                let o_kk = states
                    .iter()
                    .enumerate()
                    .map(|(i, &mask)| {
                        let c = sys.eigen.vector_component(i, k);
                        c * c * diagonal.values[mask as usize]
                    })
                    .sum();
                levels.push((energy, o_kk));
            }
        }
        let e_min = levels.iter().map(|l| l.0).fold(f64::INFINITY, f64::min);
        SpectralObservable { levels, e_min, scale: diagonal.scale }
    }

    /// Boltzmann weights `exp(-(E_k - E_min)/t)`, each in `(0, 1]`.
    pub fn gibbs_weights(&self, t_over_g: f64) -> Vec<f64> {
        self.levels.iter().map(|&(e, _)| (-(e - self.e_min) / t_over_g).exp()).collect()
    }

    /// Infinite-temperature limit: the unweighted mean over all states.
    pub fn infinite_temperature_limit(&self) -> f64 {
        let n = self.levels.len() as f64;
        self.scale * self.levels.iter().map(|l| l.1).sum::<f64>() / n
    }
}

/// Condensate `<psi-bar psi>/g` in the Gibbs state at temperature `t_over_g`.
pub fn thermal_expectation(obs: &SpectralObservable, t_over_g: f64) -> Result<f64> {
    if !(t_over_g > 0.0) || !t_over_g.is_finite() {
        return Err(Error::invalid(format!("temperature {t_over_g} must be positive and finite")));
    }
    let mut z = 0.0;
    let mut acc = 0.0;
    for &(e, o) in &obs.levels {
        let w = (-(e - obs.e_min) / t_over_g).exp();
        z += w;
        acc += w * o;
    }
    Ok(obs.scale * acc / z)
}

/// Diagonalizes every sector of `params` once; the result can be evaluated
/// at any temperature.
#[derive(Debug, Clone)]
pub struct ThermalEngine {
    pub params: ModelParams,
    pub observable: SpectralObservable,
}

impl ThermalEngine {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let systems = enumerate_sectors(params)
            .iter()
            .map(|sector| build_block(params, sector).and_then(|b| diagonalize(&b)))
            .collect::<Result<Vec<_>>>()?;
        let diagonal = build_condensate_diagonal(params);
        Ok(ThermalEngine { params: *params, observable: SpectralObservable::from_systems(&systems, &diagonal) })
    }

    pub fn expectation(&self, t_over_g: f64) -> Result<f64> {
        thermal_expectation(&self.observable, t_over_g)
    }
}

fn validate_t_axis(t_axis: &[f64]) -> Result<()> {
    if t_axis.is_empty() {
        return Err(Error::Empty("temperature axis".into()));
    }
    if t_axis[0] < MIN_PRODUCTION_T {
        return Err(Error::invalid(format!("T/g = {} below {MIN_PRODUCTION_T}", t_axis[0])));
    }
    if t_axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("temperature axis must be strictly increasing"));
    }
    Ok(())
}

/// Condensate along a temperature axis with one diagonalization for all points.
pub fn sweep(params: &ModelParams, t_axis: &[f64]) -> Result<Vec<f64>> {
    validate_t_axis(t_axis)?;
    let engine = ThermalEngine::new(params)?;
    t_axis.iter().map(|&t| engine.expectation(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(n: usize, w: f64, mu: f64) -> ThermalEngine {
        ThermalEngine::new(&ModelParams::new(n, w, mu).unwrap()).unwrap()
    }

    #[test]
    fn single_qubit_two_level_system() {
        // H = Z with levels E = +-1 and O = Z.
        let obs = SpectralObservable { levels: vec![(-1.0, -1.0), (1.0, 1.0)], e_min: -1.0, scale: 1.0 };
        for t in [0.1, 0.5, 1.0, 3.0, 40.0] {
            let got = thermal_expectation(&obs, t).unwrap();
            assert!((got + (1.0 / t).tanh()).abs() < 1e-14, "T={t}");
        }
    }

    #[test]
    fn rejects_non_positive_temperature() {
        let e = engine(4, 1.0, 0.2);
        assert!(e.expectation(0.0).is_err());
        assert!(e.expectation(-1.0).is_err());
        assert!(e.expectation(f64::NAN).is_err());
    }

    #[test]
    fn infinite_temperature_is_zero() {
        for n in 2..=8 {
            let e = engine(n, 0.8, 0.5);
            assert!(e.observable.infinite_temperature_limit().abs() < 1e-12);
            assert!(e.expectation(1e9).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn spectral_observable_shape() {
        let e = engine(6, 1.0, 0.7);
        assert_eq!(e.observable.levels.len(), 64);
        assert!(e.observable.levels.iter().all(|l| l.1.abs() <= 6.0 + 1e-12));
        let w = e.observable.gibbs_weights(0.3);
        assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
        assert!(w.contains(&1.0));
    }

    #[test]
    fn eigen_systems_meet_residual_bound() {
        let p = ModelParams::new(8, 1.1, 0.3).unwrap();
        for sector in enumerate_sectors(&p) {
            let block = build_block(&p, &sector).unwrap();
            let sys = diagonalize(&block).unwrap();
            let bound = 1e-10 * block.matrix.norm_inf().max(f64::MIN_POSITIVE);
            assert!(sys.eigen.max_residual(&block.matrix) <= bound);
            assert!(sys.eigen.orthonormality_error() <= 1e-10);
        }
    }

    #[test]
    fn sweep_matches_pointwise_and_is_bounded() {
        let p = ModelParams::new(6, 1.0, 0.7).unwrap();
        let axis = [0.1, 0.2, 0.5, 1.0, 2.5];
        let swept = sweep(&p, &axis).unwrap();
        let e = ThermalEngine::new(&p).unwrap();
        for (t, v) in axis.iter().zip(&swept) {
            assert!((e.expectation(*t).unwrap() - v).abs() <= 1e-12);
            assert!(v.is_finite());
            assert!(v.abs() <= p.w_over_g + 1e-12);
        }
        assert_eq!(sweep(&p, &[0.5]).unwrap()[0], e.expectation(0.5).unwrap());
    }

    #[test]
    fn sweep_rejects_bad_axes() {
        let p = ModelParams::new(4, 1.0, 0.0).unwrap();
        assert!(sweep(&p, &[]).is_err());
        assert!(sweep(&p, &[0.05, 0.2]).is_err());
        assert!(sweep(&p, &[0.3, 0.2]).is_err());
        assert!(sweep(&p, &[0.3, 0.3]).is_err());
    }

    #[test]
    fn level_order_does_not_matter() {
        let e = engine(6, 0.9, 0.4);
        let mut reversed = e.observable.clone();
        reversed.levels.reverse();
        let a = thermal_expectation(&e.observable, 0.7).unwrap();
        let b = thermal_expectation(&reversed, 0.7).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}
