//! Linear autoencoder baseline: covariance, isotropy and PCA truncation.
//!
//! With no noise the optimal linear encoder/decoder pair projects onto the
//! leading eigenvectors of the covariance. For points on a circle the
//! covariance is `(r²/2)·I`, so no direction is preferred and one component
//! leaves half of the variance unexplained.

use crate::datagen::Dataset;
use crate::numerics::{jacobi_eigen, Matrix, SymEigen};
use crate::{Error, Result};

/// Population covariance (divide by N) about the column means.
pub fn covariance(data: &Dataset) -> Result<Matrix> {
    let (n, d) = data.features.shape();
    if n < 2 {
        return Err(Error::Data(format!(
            "covariance needs at least 2 events, got {n}"
        )));
    }
    let mean = column_means(&data.features);
    let mut cov = Matrix::zeros(d, d);
    for r in 0..n {
        let row = data.features.row(r);
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                let v = cov.get(i, j) + di * (row[j] - mean[j]);
                cov.set(i, j, v);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / n as f64;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    Ok(cov)
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= x.rows() as f64);
    mean
}

/// Deterministic linear autoencoder `x̂ = mean + W_dec · W_enc · (x - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearVae {
    /// k × D, rows are the leading principal directions.
    pub w_enc: Matrix,
    /// D × k
    pub w_dec: Matrix,
    pub mean: Vec<f64>,
    pub eigen: SymEigen,
}

impl LinearVae {
    pub fn latent_dim(&self) -> usize {
        self.w_enc.rows()
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        self.center(x)?.matmul_nt(&self.w_enc)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = self.encode(x)?.matmul_nt(&self.w_dec)?;
        for r in 0..out.rows() {
            for (v, m) in out.row_mut(r).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }

    fn center(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::shape("LinearVae", self.mean.len(), x.cols()));
        }
        let mut c = x.clone();
        for r in 0..c.rows() {
            for (v, m) in c.row_mut(r).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        Ok(c)
    }
}

/// Fits the rank-`k` PCA autoencoder and returns it with its mean squared
/// reconstruction error (squared norm per event, averaged over events).
pub fn fit_linear_ae(data: &Dataset, k: usize) -> Result<(LinearVae, f64)> {
    let d = data.dim();
    if k == 0 || k > d {
        return Err(Error::Config(format!(
            "latent size k = {k} must be in 1..={d}"
        )));
    }
    let cov = covariance(data)?;
    let eigen = jacobi_eigen(&cov)?;
    let mut w_enc = Matrix::zeros(k, d);
    for c in 0..k {
        for (j, v) in eigen.vector(c).into_iter().enumerate() {
            w_enc.set(c, j, v);
        }
    }
    let model = LinearVae {
        w_dec: w_enc.transpose(),
        w_enc,
        mean: column_means(&data.features),
        eigen,
    };
    let residual = model.reconstruct(&data.features)?.sub(&data.features)?;
    let err = residual.as_slice().iter().map(|v| v * v).sum::<f64>() / data.len() as f64;
    Ok((model, err))
}

/// Whether `cov` is a multiple of the identity, within `tol` entrywise.
///
/// Returns the flag and `max |cov - (tr(cov)/D)·I|`.
pub fn isotropy_check(cov: &Matrix, tol: f64) -> (bool, f64) {
    let d = cov.rows();
    if d == 0 || cov.cols() != d {
        return (false, f64::INFINITY);
    }
    let level = (0..d).map(|i| cov.get(i, i)).sum::<f64>() / d as f64;
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { level } else { 0.0 };
            dev = dev.max((cov.get(i, j) - target).abs());
        }
    }
    (dev <= tol, dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_circle, gen_pp_drellyan, DatasetMeta, DEFAULT_M_Z};
    use crate::numerics::Rng;

    fn dataset(rows: &[[f64; 2]]) -> Dataset {
        Dataset::new(
            Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(),
            vec!["x1".into(), "x2".into()],
            DatasetMeta::default(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn two_point_covariance() {
        let cov = covariance(&dataset(&[[1.0, 0.0], [-1.0, 0.0]])).unwrap();
        assert_eq!(cov.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn constant_data_has_zero_covariance() {
        let cov = covariance(&dataset(&[[2.0, 3.0]; 5])).unwrap();
        assert_eq!(cov, Matrix::zeros(2, 2));
    }

    #[test]
    fn single_event_is_rejected() {
        assert!(covariance(&dataset(&[[1.0, 1.0]])).is_err());
    }

    #[test]
    fn full_rank_reconstruction_is_exact() {
        let d = gen_circle(500, 10.0, &mut Rng::seed_from(1)).unwrap();
        let (_, err) = fit_linear_ae(&d, 2).unwrap();
        assert!(err < 1e-9);
    }

    #[test]
    fn line_data_needs_one_component() {
        let rows: Vec<[f64; 2]> = (0..50)
            .map(|i| [i as f64 * 0.1 - 2.0, 2.0 * (i as f64 * 0.1 - 2.0)])
            .collect();
        let (m, err) = fit_linear_ae(&dataset(&rows), 1).unwrap();
        assert!(err < 1e-9);
        assert_eq!(m.latent_dim(), 1);
    }

    #[test]
    fn circle_projection_leaves_half_the_variance() {
        let d = gen_circle(10_000, 10.0, &mut Rng::seed_from(2)).unwrap();
        let (_, err) = fit_linear_ae(&d, 1).unwrap();
        assert!((err - 50.0).abs() < 2.0, "err = {err}");
    }

    #[test]
    fn error_is_sum_of_discarded_eigenvalues() {
        let d = gen_pp_drellyan(3000, 13.0, DEFAULT_M_Z, None, &mut Rng::seed_from(3)).unwrap();
        let (s, _) = crate::datagen::standardize(&d).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=s.dim() {
            let (m, err) = fit_linear_ae(&s, k).unwrap();
            let discarded: f64 = m.eigen.values[k..].iter().sum();
            assert!(
                (err - discarded).abs() < 1e-8,
                "k={k}: {err} vs {discarded}"
            );
            assert!(err <= last + 1e-12);
            last = err;
        }
    }

    #[test]
    fn invalid_k() {
        let d = gen_circle(10, 1.0, &mut Rng::seed_from(4)).unwrap();
        assert!(fit_linear_ae(&d, 0).is_err());
        assert!(fit_linear_ae(&d, 3).is_err());
    }

    #[test]
    fn isotropy() {
        assert_eq!(
            isotropy_check(&Matrix::identity(2).scale(50.0), 1e-12),
            (true, 0.0)
        );
        let aniso = Matrix::from_rows(&[vec![60.0, 0.0], vec![0.0, 40.0]]).unwrap();
        assert_eq!(isotropy_check(&aniso, 5.0), (false, 10.0));
    }
}
