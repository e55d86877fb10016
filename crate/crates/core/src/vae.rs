//! Dense VAE: encoder to `(μ, log σ²)`, reparameterized sample, decoder.
//!
//! Loss per mini-batch of `B` events:
//!
//! ```text
//! L_rec = (1/B) Σᵢ ‖xᵢ - x̂ᵢ‖²
//! L_KL  = -(1/2B) Σᵢ Σⱼ (1 + log σᵢⱼ² - μᵢⱼ² - σᵢⱼ²)
//! L     = L_rec + β · L_KL
//! ```

use serde::{Deserialize, Serialize};

use crate::analysis::LatentStats;
use crate::datagen::Dataset;
use crate::numerics::{Activation, AdamState, Matrix, MlpParams, ParamSet, Rng};
use crate::{Error, Result};

/// Encoder log-variance outputs are clamped to `±LOGVAR_CLAMP`.
pub const LOGVAR_CLAMP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVae")]
pub struct VaeModel {
    input_dim: usize,
    latent_dim: usize,
    encoder: MlpParams,
    decoder: MlpParams,
}

#[derive(Deserialize)]
struct RawVae {
    input_dim: usize,
    latent_dim: usize,
    encoder: MlpParams,
    decoder: MlpParams,
}

impl TryFrom<RawVae> for VaeModel {
    type Error = Error;

    fn try_from(raw: RawVae) -> Result<Self> {
        let m = VaeModel::from_parts(raw.encoder, raw.decoder)?;
        if m.input_dim != raw.input_dim || m.latent_dim != raw.latent_dim {
            return Err(Error::Config(format!(
                "declared dims ({}, {}) disagree with the weights ({}, {})",
                raw.input_dim, raw.latent_dim, m.input_dim, m.latent_dim
            )));
        }
        Ok(m)
    }
}

impl VaeModel {
    /// Random model: `D → hidden… → 2·d_z` encoder and `d_z → hidden… → D` decoder, ReLU hidden layers.
    pub fn new(
        input_dim: usize,
        latent_dim: usize,
        hidden: &[usize],
        rng: &mut Rng,
    ) -> Result<Self> {
        let widths = |a: usize, b: usize| {
            std::iter::once(a)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(b))
                .collect::<Vec<_>>()
        };
        let encoder = MlpParams::init(&widths(input_dim, 2 * latent_dim), Activation::Relu, rng)?;
        let decoder = MlpParams::init(&widths(latent_dim, input_dim), Activation::Relu, rng)?;
        VaeModel::from_parts(encoder, decoder)
    }

    pub fn from_parts(encoder: MlpParams, decoder: MlpParams) -> Result<Self> {
        let latent_dim = decoder.input_dim();
        if encoder.output_dim() != 2 * latent_dim {
            return Err(Error::shape(
                "VaeModel",
                format!("encoder output width {}", 2 * latent_dim),
                encoder.output_dim(),
            ));
        }
        if decoder.output_dim() != encoder.input_dim() {
            return Err(Error::shape(
                "VaeModel",
                format!("decoder output width {}", encoder.input_dim()),
                decoder.output_dim(),
            ));
        }
        Ok(VaeModel {
            input_dim: encoder.input_dim(),
            latent_dim,
            encoder,
            decoder,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn encoder(&self) -> &MlpParams {
        &self.encoder
    }

    pub fn decoder(&self) -> &MlpParams {
        &self.decoder
    }

    /// Posterior mean and standard deviation, each `N × d_z`.
    pub fn encode(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        let (h, _) = self.encoder.forward(x)?;
        let mu = h.columns(0, self.latent_dim);
        let sigma = h
            .columns(self.latent_dim, 2 * self.latent_dim)
            .map(|lv| (0.5 * lv.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP)).exp());
        Ok((mu, sigma))
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        Ok(self.decoder.forward(z)?.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl ParamSet for VaeModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t = self.encoder.tensors();
        t.extend(self.decoder.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t = self.encoder.tensors_mut();
        t.extend(self.decoder.tensors_mut());
        t
    }
}

fn same_shape(op: &'static str, a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{:?}", a.shape()),
            format!("{:?}", b.shape()),
        ));
    }
    Ok(())
}

/// `z = μ + σ ⊙ ε` with `ε` drawn from `rng`, row by row.
pub fn reparameterize(mu: &Matrix, sigma: &Matrix, rng: &mut Rng) -> Result<Matrix> {
    same_shape("reparameterize", mu, sigma)?;
    let eps = standard_normal(mu.rows(), mu.cols(), rng);
    reparameterize_with(mu, sigma, &eps)
}

/// `z = μ + σ ⊙ ε` for a given noise matrix.
pub fn reparameterize_with(mu: &Matrix, sigma: &Matrix, eps: &Matrix) -> Result<Matrix> {
    same_shape("reparameterize", mu, sigma)?;
    same_shape("reparameterize", mu, eps)?;
    let data = mu
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .zip(eps.as_slice())
        .map(|((m, s), e)| m + s * e)
        .collect();
    Matrix::from_vec(mu.rows(), mu.cols(), data)
}

pub fn standard_normal(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.normal()).collect();
    Matrix::from_vec(rows, cols, data).expect("sized and finite")
}

/// KL divergence to the standard normal prior, averaged over events and
/// summed over latent dimensions.
pub fn kl_loss(mu: &Matrix, sigma: &Matrix) -> Result<f64> {
    same_shape("kl_loss", mu, sigma)?;
    if mu.rows() == 0 {
        return Err(Error::Data("kl_loss of an empty batch".into()));
    }
    if sigma.as_slice().iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Data(
            "kl_loss requires strictly positive sigma".into(),
        ));
    }
    let sum: f64 = mu
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .map(|(m, s)| {
            let var = s * s;
            1.0 + var.ln() - m * m - var
        })
        .sum();
    Ok(-sum / (2.0 * mu.rows() as f64))
}

/// Squared reconstruction error summed over features, averaged over events.
pub fn rec_loss(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    same_shape("rec_loss", x, x_hat)?;
    if x.rows() == 0 {
        return Err(Error::Data("rec_loss of an empty batch".into()));
    }
    let sum: f64 = x
        .as_slice()
        .iter()
        .zip(x_hat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / x.rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub rec: f64,
    pub kl: f64,
}

/// Loss of a batch for fixed noise `eps`, and its gradient with respect to
/// every tensor in [`ParamSet::tensors`] order.
pub fn loss_and_grads(
    model: &VaeModel,
    x: &Matrix,
    eps: &Matrix,
    beta: f64,
) -> Result<(LossBreakdown, Vec<Vec<f64>>)> {
    let b = x.rows();
    let dz = model.latent_dim;
    if b == 0 {
        return Err(Error::Data("empty batch".into()));
    }
    if eps.shape() != (b, dz) {
        return Err(Error::shape(
            "loss_and_grads",
            format!("noise of shape ({b}, {dz})"),
            format!("{:?}", eps.shape()),
        ));
    }
    let (h, enc_cache) = model.encoder.forward(x)?;

    let mut mu = Matrix::zeros(b, dz);
    let mut logvar = Matrix::zeros(b, dz);
    let mut clamped = vec![false; b * dz];
    for i in 0..b {
        let row = h.row(i);
        mu.row_mut(i).copy_from_slice(&row[..dz]);
        for j in 0..dz {
            let raw = row[dz + j];
            clamped[i * dz + j] = !(-LOGVAR_CLAMP..=LOGVAR_CLAMP).contains(&raw);
            logvar.set(i, j, raw.clamp(-LOGVAR_CLAMP, LOGVAR_CLAMP));
        }
    }
    let sigma = logvar.map(|lv| (0.5 * lv).exp());
    let z = reparameterize_with(&mu, &sigma, eps)?;
    let (x_hat, dec_cache) = model.decoder.forward(&z)?;

    let rec = rec_loss(x, &x_hat)?;
    let kl_sum: f64 = mu
        .as_slice()
        .iter()
        .zip(logvar.as_slice())
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum();
    let kl = -kl_sum / (2.0 * b as f64);
    let total = rec + beta * kl;
    if !total.is_finite() {
        return Err(Error::NonFinite("vae loss"));
    }

    let inv_b = 1.0 / b as f64;
    let grad_xhat = x_hat.sub(x)?.scale(2.0 * inv_b);
    let (dec_grads, grad_z) = model.decoder.backward(&dec_cache, &grad_xhat)?;

    let mut grad_h = Matrix::zeros(b, 2 * dz);
    for i in 0..b {
        for j in 0..dz {
            let gz = grad_z.get(i, j);
            let m = mu.get(i, j);
            let s = sigma.get(i, j);
            grad_h.set(i, j, gz + beta * m * inv_b);
            let g_lv = if clamped[i * dz + j] {
                0.0
            } else {
                gz * eps.get(i, j) * 0.5 * s + beta * 0.5 * inv_b * (s * s - 1.0)
            };
            grad_h.set(i, dz + j, g_lv);
        }
    }
    let (enc_grads, _) = model.encoder.backward(&enc_cache, &grad_h)?;

    let mut grads = enc_grads.into_tensors();
    grads.extend(dec_grads.into_tensors());
    Ok((LossBreakdown { total, rec, kl }, grads))
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub latent_dim: usize,
    #[serde(default = "TrainConfig::default_beta")]
    pub beta: f64,
    #[serde(default = "TrainConfig::default_lr")]
    pub lr: f64,
    #[serde(default = "TrainConfig::default_epochs")]
    pub epochs: usize,
    #[serde(default = "TrainConfig::default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Hidden layer widths shared by encoder and decoder.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
}

impl TrainConfig {
    fn default_beta() -> f64 {
        0.1
    }
    fn default_lr() -> f64 {
        1e-3
    }
    fn default_epochs() -> usize {
        30
    }
    fn default_batch() -> usize {
        128
    }

    pub fn new(latent_dim: usize, seed: u64) -> Self {
        TrainConfig {
            latent_dim,
            beta: Self::default_beta(),
            lr: Self::default_lr(),
            epochs: Self::default_epochs(),
            batch_size: Self::default_batch(),
            seed,
            hidden: default_hidden(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.latent_dim == 0 {
            return fail("latent_dim must be at least 1");
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return fail("beta must be finite and non-negative");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return fail("learning rate must be positive");
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.hidden.contains(&0) {
            return fail("hidden layer widths must be positive");
        }
        Ok(())
    }
}

/// Event-weighted epoch means of the loss terms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub total: Vec<f64>,
    pub rec: Vec<f64>,
    pub kl: Vec<f64>,
}

impl TrainTrace {
    pub fn epochs(&self) -> usize {
        self.total.len()
    }
}

/// Mini-batch Adam on shuffled data. Weight init, shuffling and noise all
/// draw from one generator seeded with `cfg.seed`.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<(VaeModel, TrainTrace)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    let mut rng = Rng::seed_from(cfg.seed);
    let mut model = VaeModel::new(data.dim(), cfg.latent_dim, &cfg.hidden, &mut rng)?;
    let shapes: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let mut adam = AdamState::new(&shapes, cfg.lr);
    let mut trace = TrainTrace::default();
    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let (mut tot, mut rec, mut kl) = (0.0, 0.0, 0.0);
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let diverged = || Error::Diverged { epoch, batch };
            let x = data.features.select_rows(idx);
            let eps = standard_normal(idx.len(), cfg.latent_dim, &mut rng);
            let (loss, grads) = match loss_and_grads(&model, &x, &eps, cfg.beta) {
                Err(Error::NonFinite(_)) => return Err(diverged()),
                other => other?,
            };
            let w = idx.len() as f64;
            tot += w * loss.total;
            rec += w * loss.rec;
            kl += w * loss.kl;
            let grad_refs: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
            match adam.step(&mut model.tensors_mut(), &grad_refs) {
                Err(Error::NonFinite(_)) => return Err(diverged()),
                other => other?,
            }
            if model
                .tensors()
                .iter()
                .any(|t| t.iter().any(|v| !v.is_finite()))
            {
                return Err(diverged());
            }
        }
        trace.total.push(tot / n as f64);
        trace.rec.push(rec / n as f64);
        trace.kl.push(kl / n as f64);
    }
    Ok((model, trace))
}

/// Per-event posterior means and widths; no sampling.
pub fn posterior_stats(model: &VaeModel, data: &Dataset) -> Result<LatentStats> {
    if data.dim() != model.input_dim {
        return Err(Error::shape("posterior_stats", model.input_dim, data.dim()));
    }
    let (z_mean, z_sigma) = model.encode(&data.features)?;
    LatentStats::new(z_mean, z_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_circle, standardize};
    use crate::numerics::{finite_diff_check, Layer};

    fn zero_model(input: usize, latent: usize) -> VaeModel {
        let layer = |i: usize, o: usize| Layer {
            weight: Matrix::zeros(o, i),
            bias: vec![0.0; o],
            activation: Activation::Linear,
        };
        VaeModel::from_parts(
            MlpParams::new(vec![layer(input, 2 * latent)]).unwrap(),
            MlpParams::new(vec![layer(latent, input)]).unwrap(),
        )
        .unwrap()
    }

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn zero_encoder_gives_prior() {
        let model = zero_model(3, 2);
        let x = m(&[&[1.0, 2.0, 3.0], &[-1.0, 0.5, 4.0]]);
        let (mu, sigma) = model.encode(&x).unwrap();
        assert_eq!(mu, Matrix::zeros(2, 2));
        assert!(sigma.as_slice().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn one_layer_encoder_by_hand() {
        // h = W x + b with W = [[1,0],[0,2]] (μ row, log σ² row), b = (0.5, -1)
        // x = (2, 0.5): μ = 2.5, log σ² = 0 → σ = 1
        let enc = MlpParams::new(vec![Layer {
            weight: m(&[&[1.0, 0.0], &[0.0, 2.0]]),
            bias: vec![0.5, -1.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        let dec = MlpParams::new(vec![Layer {
            weight: m(&[&[1.0], &[1.0]]),
            bias: vec![0.0, 0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        let model = VaeModel::from_parts(enc, dec).unwrap();
        let (mu, sigma) = model.encode(&m(&[&[2.0, 0.5], &[0.0, 1.5]])).unwrap();
        assert_eq!(mu.as_slice(), &[2.5, 0.5]);
        assert_eq!(sigma.get(0, 0), 1.0);
        assert!((sigma.get(1, 0) - 1.0f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn logvar_is_clamped() {
        let enc = MlpParams::new(vec![Layer {
            weight: m(&[&[0.0], &[100.0]]),
            bias: vec![0.0, 0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        let dec = MlpParams::new(vec![Layer {
            weight: m(&[&[1.0]]),
            bias: vec![0.0],
            activation: Activation::Linear,
        }])
        .unwrap();
        let model = VaeModel::from_parts(enc, dec).unwrap();
        let (_, sigma) = model.encode(&m(&[&[1.0], &[-1.0]])).unwrap();
        assert_eq!(sigma.get(0, 0), (0.5 * LOGVAR_CLAMP).exp());
        assert_eq!(sigma.get(1, 0), (-0.5 * LOGVAR_CLAMP).exp());
    }

    #[test]
    fn encode_shapes() {
        let model = VaeModel::new(6, 3, &[8], &mut Rng::seed_from(1)).unwrap();
        let (mu, sigma) = model.encode(&Matrix::zeros(17, 6)).unwrap();
        assert_eq!(mu.shape(), (17, 3));
        assert_eq!(sigma.shape(), (17, 3));
        assert!(model.encode(&Matrix::zeros(2, 5)).is_err());
    }

    #[test]
    fn zero_sigma_returns_mean() {
        let mu = m(&[&[1.0, -2.0]]);
        let z = reparameterize(&mu, &Matrix::zeros(1, 2), &mut Rng::seed_from(2)).unwrap();
        assert_eq!(z, mu);
    }

    #[test]
    fn reparameterize_is_seeded() {
        let mu = Matrix::zeros(5, 2);
        let s = mu.map(|_| 1.0);
        let a = reparameterize(&mu, &s, &mut Rng::seed_from(3)).unwrap();
        let b = reparameterize(&mu, &s, &mut Rng::seed_from(3)).unwrap();
        assert_eq!(a, b);
        assert!(reparameterize(&mu, &Matrix::zeros(5, 3), &mut Rng::seed_from(3)).is_err());
    }

    #[test]
    fn reparameterized_moments() {
        // 3σ bounds for n = 1e5: mean ±0.0095, std ±0.0067; tolerance 0.02 as stated
        let n = 100_000;
        let mu = Matrix::zeros(n, 1);
        let z = reparameterize(&mu, &mu.map(|_| 1.0), &mut Rng::seed_from(4)).unwrap();
        let mean = z.as_slice().iter().sum::<f64>() / n as f64;
        let sd = (z.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!(mean.abs() < 0.02);
        assert!((sd - 1.0).abs() < 0.02);
    }

    #[test]
    fn kl_values() {
        let zeros = Matrix::zeros(4, 3);
        assert_eq!(kl_loss(&zeros, &zeros.map(|_| 1.0)).unwrap(), 0.0);
        assert!((kl_loss(&m(&[&[1.0]]), &m(&[&[1.0]])).unwrap() - 0.5).abs() < 1e-12);
        let expected = -0.5 * (1.0 + 4.0f64.ln() - 4.0);
        assert!((kl_loss(&m(&[&[0.0]]), &m(&[&[2.0]])).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.806_852_819_440_054_7).abs() < 1e-15);
        assert!(kl_loss(&m(&[&[0.0]]), &m(&[&[0.0]])).is_err());
    }

    #[test]
    fn rec_values() {
        let x = m(&[&[1.0, 1.0]]);
        assert_eq!(rec_loss(&x, &x).unwrap(), 0.0);
        assert_eq!(rec_loss(&x, &m(&[&[4.0, 5.0]])).unwrap(), 25.0);
        let base = m(&[&[0.5, -1.0], &[2.0, 0.0]]);
        let y = m(&[&[1.5, -2.0], &[0.0, 3.0]]);
        let residual = y.sub(&base).unwrap();
        let doubled = Matrix::from_vec(
            2,
            2,
            base.as_slice()
                .iter()
                .zip(residual.as_slice())
                .map(|(b, r)| b + 2.0 * r)
                .collect(),
        )
        .unwrap();
        let once = rec_loss(&base, &y).unwrap();
        assert!((rec_loss(&base, &doubled).unwrap() - 4.0 * once).abs() < 1e-12);
        assert!(rec_loss(&x, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn loss_decomposes_exactly() {
        let mut rng = Rng::seed_from(5);
        let model = VaeModel::new(3, 2, &[5], &mut rng).unwrap();
        let x = standard_normal(7, 3, &mut rng);
        let eps = standard_normal(7, 2, &mut rng);
        let beta = 0.1;
        let (l, _) = loss_and_grads(&model, &x, &eps, beta).unwrap();
        assert_eq!(l.total, l.rec + beta * l.kl);
        // independent route through the public pieces
        let (mu, sigma) = model.encode(&x).unwrap();
        let z = reparameterize_with(&mu, &sigma, &eps).unwrap();
        assert!((l.rec - rec_loss(&x, &model.decode(&z).unwrap()).unwrap()).abs() < 1e-12);
        assert!((l.kl - kl_loss(&mu, &sigma).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn full_loss_gradient_matches_finite_differences() {
        for seed in 0..5 {
            let mut rng = Rng::seed_from(100 + seed);
            let mut model = VaeModel::new(3, 2, &[4, 4], &mut rng).unwrap();
            // nonzero biases keep pre-activations off the ReLU kink
            for t in model.tensors_mut() {
                t.iter_mut().for_each(|v| *v += 0.1 * rng.normal());
            }
            let x = standard_normal(6, 3, &mut rng);
            let eps = standard_normal(6, 2, &mut rng);
            let check = finite_diff_check(
                &model,
                |p: &VaeModel| loss_and_grads(p, &x, &eps, 0.1).map(|(l, g)| (l.total, g)),
                1e-4,
            )
            .unwrap();
            assert!(check.passed, "seed {seed}: {check:?}");
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::new(2, 0);
        cfg.validate().unwrap();
        cfg.epochs = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = TrainConfig::new(0, 0);
        assert!(cfg.validate().is_err());
        cfg.latent_dim = 1;
        cfg.beta = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_defaults_from_json() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"latent_dim": 4}"#).unwrap();
        assert_eq!(cfg, TrainConfig::new(4, 0));
        assert_eq!(
            (cfg.beta, cfg.lr, cfg.epochs, cfg.batch_size),
            (0.1, 1e-3, 30, 128)
        );
    }

    fn small_circle() -> Dataset {
        let d = gen_circle(600, 10.0, &mut Rng::seed_from(9)).unwrap();
        standardize(&d).unwrap().0
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let data = small_circle();
        let mut cfg = TrainConfig::new(2, 11);
        cfg.epochs = 8;
        cfg.hidden = vec![16, 16];
        cfg.batch_size = 32;
        let (m1, t1) = train(&data, &cfg).unwrap();
        let (m2, t2) = train(&data, &cfg).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(t1, t2);
        assert_eq!(t1.epochs(), 8);
        assert!(t1.total.last().unwrap() < &t1.total[0]);
        assert!(t1
            .total
            .iter()
            .chain(&t1.rec)
            .chain(&t1.kl)
            .all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn training_rejects_bad_inputs() {
        let data = small_circle();
        let mut cfg = TrainConfig::new(2, 0);
        cfg.epochs = 0;
        assert!(matches!(train(&data, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn divergence_is_reported_with_position() {
        let data = small_circle();
        let mut cfg = TrainConfig::new(2, 0);
        cfg.lr = 1e300;
        cfg.hidden = vec![4];
        cfg.epochs = 3;
        match train(&data, &cfg) {
            Err(Error::Diverged { epoch, .. }) => assert!(epoch < 3),
            other => panic!("expected divergence, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn posterior_stats_match_encode() {
        let data = small_circle();
        let model = VaeModel::new(2, 3, &[5], &mut Rng::seed_from(12)).unwrap();
        let stats = posterior_stats(&model, &data).unwrap();
        let (mu, sigma) = model.encode(&data.features).unwrap();
        assert_eq!(stats.z_mean(), &mu);
        assert_eq!(stats.z_sigma(), &sigma);
        let zero = posterior_stats(&zero_model(2, 3), &data).unwrap();
        assert!(zero.z_mean().as_slice().iter().all(|&v| v == 0.0));
        assert!(zero.z_sigma().as_slice().iter().all(|&v| v == 1.0));
        assert_eq!(zero.z_mean().shape(), (data.len(), 3));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let model = VaeModel::new(4, 2, &[7, 3], &mut Rng::seed_from(13)).unwrap();
        let back = VaeModel::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        let bits = |m: &VaeModel| {
            m.tensors()
                .iter()
                .flat_map(|t| t.iter().map(|v| v.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&back), bits(&model));
    }

    #[test]
    fn inconsistent_json_is_rejected() {
        let model = VaeModel::new(4, 2, &[3], &mut Rng::seed_from(14)).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
        v["latent_dim"] = 3.into();
        assert!(VaeModel::from_json(&v.to_string()).is_err());
    }
}
