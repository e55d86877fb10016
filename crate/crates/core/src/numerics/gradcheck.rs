use super::MlpParams;
use crate::{Error, Result};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Anything whose trainable parameters can be viewed as a list of flat tensors.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
}

impl ParamSet for MlpParams {
    fn tensors(&self) -> Vec<&[f64]> {
        MlpParams::tensors(self)
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        MlpParams::tensors_mut(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// (tensor, element) where the maximum was attained.
    pub worst: (usize, usize),
    pub passed: bool,
}

/// Compares the analytic gradient returned by `objective` against central
/// differences of its value, parameter by parameter.
///
/// The per-parameter error is `|a - fd| / (|a| + |fd| + 1e-12)`; the check
/// passes when the maximum is below `tol`.
pub fn finite_diff_check<P, F>(params: &P, objective: F, tol: f64) -> Result<GradCheck>
where
    P: ParamSet + Clone,
    F: Fn(&P) -> Result<(f64, Vec<Vec<f64>>)>,
{
    let (value, analytic) = objective(params)?;
    if !value.is_finite() {
        return Err(Error::NonFinite("finite_diff_check objective"));
    }
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    if analytic.len() != shapes.len() || analytic.iter().zip(&shapes).any(|(g, &n)| g.len() != n) {
        return Err(Error::shape(
            "finite_diff_check",
            format!("gradient tensors {shapes:?}"),
            format!("{:?}", analytic.iter().map(Vec::len).collect::<Vec<_>>()),
        ));
    }

    let mut probe = params.clone();
    let mut worst = (0, 0);
    let mut max_rel = 0.0f64;
    for (t, grad) in analytic.iter().enumerate() {
        for (j, &a) in grad.iter().enumerate() {
            let x0 = params.tensors()[t][j];
            probe.tensors_mut()[t][j] = x0 + FD_STEP;
            let (plus, _) = objective(&probe)?;
            probe.tensors_mut()[t][j] = x0 - FD_STEP;
            let (minus, _) = objective(&probe)?;
            probe.tensors_mut()[t][j] = x0;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite("finite_diff_check objective"));
            }
            let fd = (plus - minus) / (2.0 * FD_STEP);
            let rel = (a - fd).abs() / (a.abs() + fd.abs() + 1e-12);
            if rel > max_rel {
                max_rel = rel;
                worst = (t, j);
            }
        }
    }
    Ok(GradCheck {
        max_rel_error: max_rel,
        worst,
        passed: max_rel < tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Activation, Matrix, Rng};

    fn squared_output_loss(x: Matrix) -> impl Fn(&MlpParams) -> Result<(f64, Vec<Vec<f64>>)> {
        move |p: &MlpParams| {
            let (y, cache) = p.forward(&x)?;
            let loss = 0.5 * y.as_slice().iter().map(|v| v * v).sum::<f64>();
            let (g, _) = p.backward(&cache, &y)?;
            Ok((loss, g.into_tensors()))
        }
    }

    fn random_input(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn linear_model_quadratic_loss() {
        let mut rng = Rng::seed_from(11);
        let p = MlpParams::init(&[3, 2], Activation::Relu, &mut rng).unwrap();
        let x = random_input(&mut rng, 4, 3);
        let check = finite_diff_check(&p, squared_output_loss(x), 1e-6).unwrap();
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn three_layer_relu_net() {
        let mut rng = Rng::seed_from(12);
        let p = MlpParams::init(&[4, 6, 5, 2], Activation::Relu, &mut rng).unwrap();
        let x = random_input(&mut rng, 3, 4);
        let check = finite_diff_check(&p, squared_output_loss(x), 1e-4).unwrap();
        assert!(check.passed, "{check:?}");
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let mut rng = Rng::seed_from(13);
        let p = MlpParams::init(&[2, 3, 1], Activation::Relu, &mut rng).unwrap();
        let shapes: Vec<usize> = p.tensors().iter().map(|t| t.len()).collect();
        let check = finite_diff_check(
            &p,
            |_: &MlpParams| Ok((4.0, shapes.iter().map(|&n| vec![0.0; n]).collect())),
            1e-12,
        )
        .unwrap();
        assert_eq!(check.max_rel_error, 0.0);
    }

    #[test]
    fn wrong_analytic_gradient_is_caught() {
        let mut rng = Rng::seed_from(14);
        let p = MlpParams::init(&[2, 2], Activation::Relu, &mut rng).unwrap();
        let x = random_input(&mut rng, 2, 2);
        let good = squared_output_loss(x);
        let bad = |p: &MlpParams| {
            let (l, mut g) = good(p)?;
            g[0][0] *= 1.5;
            Ok((l, g))
        };
        assert!(!finite_diff_check(&p, bad, 1e-4).unwrap().passed);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let mut rng = Rng::seed_from(15);
        let p = MlpParams::init(&[2, 2], Activation::Relu, &mut rng).unwrap();
        let shapes: Vec<usize> = p.tensors().iter().map(|t| t.len()).collect();
        let r = finite_diff_check(
            &p,
            |_: &MlpParams| Ok((f64::NAN, shapes.iter().map(|&n| vec![0.0; n]).collect())),
            1e-4,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
