use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Per-feature affine map to zero mean and unit (population) variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits means and population standard deviations; errors on a constant column.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.len();
        if n == 0 {
            return Err(Error::Data("cannot standardize an empty dataset".into()));
        }
        let mut mean = Vec::with_capacity(data.dim());
        let mut std = Vec::with_capacity(data.dim());
        for c in 0..data.dim() {
            let col = data.features.column(c);
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
            let s = var.sqrt();
            if !(s > 1e-12 * (1.0 + m.abs())) {
                return Err(Error::ZeroVariance(data.names[c].clone()));
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Standardized copy of `data`; constraints are dropped.
    pub fn apply_to(&self, data: &Dataset) -> Result<Dataset> {
        let mut meta = data.meta.clone();
        meta.standardized = true;
        Dataset::new(
            self.transform(&data.features)?,
            data.names.clone(),
            meta,
            vec![],
        )
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.apply(x, |v, m, s| (v - m) / s)
    }

    pub fn inverse(&self, x: &Matrix) -> Result<Matrix> {
        self.apply(x, |v, m, s| v * s + m)
    }

    fn apply(&self, x: &Matrix, f: impl Fn(f64, f64, f64) -> f64) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::shape("Standardizer", self.dim(), x.cols()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = f(*v, *m, *s);
            }
        }
        Ok(out)
    }
}

/// Standardizes every feature. The returned dataset declares no constraints,
/// since those are stated in physical units.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardizer)> {
    let st = Standardizer::fit(data)?;
    Ok((st.apply_to(data)?, st))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_pp_drellyan, DatasetMeta, DEFAULT_M_Z};
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn dataset(rows: Vec<Vec<f64>>) -> Dataset {
        let d = rows[0].len();
        Dataset::new(
            Matrix::from_rows(&rows).unwrap(),
            (0..d).map(|i| format!("f{i}")).collect(),
            DatasetMeta::default(),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn standardized_moments() {
        let data = gen_pp_drellyan(2000, 13.0, DEFAULT_M_Z, None, &mut Rng::seed_from(1)).unwrap();
        let (s, _) = standardize(&data).unwrap();
        for c in 0..s.dim() {
            let col = s.features.column(c);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(m.abs() < 1e-9);
            assert!((sd - 1.0).abs() < 1e-6);
        }
        assert!(s.meta.standardized);
        assert!(s.constraints.is_empty());
    }

    #[test]
    fn already_standard_is_a_fixed_point() {
        let d = dataset(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
        let (s, _) = standardize(&d).unwrap();
        assert!(s.features.sub(&d.features).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn constant_column_is_named() {
        let mut d = dataset(vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![4.0, 3.0]]);
        d.names = vec!["a".into(), "flat".into()];
        match standardize(&d) {
            Err(Error::ZeroVariance(name)) => assert_eq!(name, "flat"),
            other => panic!("expected zero-variance error, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn transform_then_inverse_is_identity(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 3..30)
        ) {
            let d = dataset(rows);
            if let Ok(st) = Standardizer::fit(&d) {
                let back = st.inverse(&st.transform(&d.features).unwrap()).unwrap();
                let scale = d.features.max_abs().max(1.0);
                prop_assert!(back.sub(&d.features).unwrap().max_abs() <= 1e-12 * scale);
            }
        }
    }
}
