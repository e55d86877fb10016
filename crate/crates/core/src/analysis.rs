//! Latent relevance and what it says about the data.
//!
//! For latent `j`, relevance is the spread of the posterior means across the
//! dataset divided by the typical posterior width:
//!
//! ```text
//! relevance_j = std_i(μ_ij) / mean_i(σ_ij)
//! ```
//!
//! Collapsed latents sit at the prior (μ ≈ 0, σ ≈ 1) and score near zero;
//! latents that carry information have spread-out means and narrow widths.

use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Smallest ratio between consecutive sorted relevances that counts as a drop.
pub const DEFAULT_MIN_GAP: f64 = 2.0;
/// Relevances are floored here before taking ratios.
pub const RELEVANCE_FLOOR: f64 = 1e-12;

/// Posterior means and widths for every event and latent.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentStats {
    z_mean: Matrix,
    z_sigma: Matrix,
}

impl LatentStats {
    pub fn new(z_mean: Matrix, z_sigma: Matrix) -> Result<Self> {
        if z_mean.shape() != z_sigma.shape() {
            return Err(Error::shape(
                "LatentStats",
                format!("{:?}", z_mean.shape()),
                format!("{:?}", z_sigma.shape()),
            ));
        }
        if z_sigma.as_slice().iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Data("posterior widths must be positive".into()));
        }
        Ok(LatentStats { z_mean, z_sigma })
    }

    pub fn z_mean(&self) -> &Matrix {
        &self.z_mean
    }

    pub fn z_sigma(&self) -> &Matrix {
        &self.z_sigma
    }

    pub fn events(&self) -> usize {
        self.z_mean.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.z_mean.cols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    /// Per-latent relevance. For an aggregate this is the rank-averaged profile.
    pub relevance: Vec<f64>,
    /// Indices into `relevance`, most relevant first.
    pub order: Vec<usize>,
    pub effective_dim: usize,
    /// Largest ratio between consecutive sorted relevances.
    pub gap_ratio: f64,
    pub runs: usize,
}

impl RelevanceReport {
    /// Builds a report from unsorted relevances using the default gap threshold.
    pub fn from_relevance(relevance: Vec<f64>, runs: usize) -> Result<Self> {
        let order = descending_order(&relevance);
        let sorted: Vec<f64> = order.iter().map(|&i| relevance[i]).collect();
        let (effective_dim, gap_ratio) = if sorted.len() < 2 {
            (sorted.len(), 1.0)
        } else {
            gap_analysis(&sorted, DEFAULT_MIN_GAP)?
        };
        Ok(RelevanceReport {
            relevance,
            order,
            effective_dim,
            gap_ratio,
            runs,
        })
    }

    /// Relevances from largest to smallest.
    pub fn sorted(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.relevance[i]).collect()
    }

    pub fn latent_dim(&self) -> usize {
        self.relevance.len()
    }
}

fn descending_order(v: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    order
}

fn population_std(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// Single-run relevance of every latent.
pub fn relevance(stats: &LatentStats) -> Result<RelevanceReport> {
    let n = stats.events();
    if n < 2 {
        return Err(Error::Data(format!(
            "relevance needs at least 2 events, got {n}"
        )));
    }
    let rel = (0..stats.latent_dim())
        .map(|j| {
            let spread = population_std((0..n).map(|i| stats.z_mean.get(i, j)));
            let width = (0..n).map(|i| stats.z_sigma.get(i, j)).sum::<f64>() / n as f64;
            spread / width
        })
        .collect();
    RelevanceReport::from_relevance(rel, 1)
}

/// Effective dimensionality and the largest consecutive ratio of a
/// descending relevance profile.
///
/// Picks the `k` maximizing `r_k / r_{k+1}`. If that ratio is below
/// `min_gap` there is no clear drop and every latent counts.
pub fn gap_analysis(sorted: &[f64], min_gap: f64) -> Result<(usize, f64)> {
    if sorted.len() < 2 {
        return Err(Error::Data(
            "effective dimension needs at least 2 latents".into(),
        ));
    }
    if sorted.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Data(
            "relevances must be finite and non-negative".into(),
        ));
    }
    if sorted.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Data(
            "relevance profile must be sorted in descending order".into(),
        ));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (k, w) in sorted.windows(2).enumerate() {
        let ratio = w[0].max(RELEVANCE_FLOOR) / w[1].max(RELEVANCE_FLOOR);
        if ratio > best.1 {
            best = (k + 1, ratio);
        }
    }
    let dim = if best.1 >= min_gap {
        best.0
    } else {
        sorted.len()
    };
    Ok((dim, best.1))
}

pub fn effective_dim(sorted: &[f64], min_gap: f64) -> Result<usize> {
    gap_analysis(sorted, min_gap).map(|(d, _)| d)
}

/// Rank-wise average of several runs.
///
/// Latent indices are not aligned across trainings, so each run is sorted
/// first and the k-th largest values are averaged together. Values at each
/// rank are summed in sorted order, which makes the result independent of
/// the order of `reports`.
pub fn aggregate_runs(reports: &[RelevanceReport]) -> Result<RelevanceReport> {
    let Some(first) = reports.first() else {
        return Err(Error::Data("no runs to aggregate".into()));
    };
    let d = first.latent_dim();
    if let Some(bad) = reports.iter().find(|r| r.latent_dim() != d) {
        return Err(Error::Data(format!(
            "cannot aggregate runs with {} and {} latents",
            d,
            bad.latent_dim()
        )));
    }
    let profiles: Vec<Vec<f64>> = reports.iter().map(RelevanceReport::sorted).collect();
    let runs: usize = reports.iter().map(|r| r.runs).sum();
    let mean = (0..d)
        .map(|k| {
            let mut at_rank: Vec<f64> = profiles.iter().map(|p| p[k]).collect();
            at_rank.sort_by(f64::total_cmp);
            at_rank.iter().sum::<f64>() / at_rank.len() as f64
        })
        .collect();
    RelevanceReport::from_relevance(mean, runs)
}

/// A linear combination of dataset columns to correlate latents against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    /// (column index, coefficient)
    pub terms: Vec<(usize, f64)>,
}

impl Probe {
    pub fn feature(data: &Dataset, col: usize) -> Self {
        Probe {
            label: data.names[col].clone(),
            terms: vec![(col, 1.0)],
        }
    }

    fn values(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| self.terms.iter().map(|&(c, w)| w * x.get(i, c)).sum())
            .collect()
    }
}

/// Every raw feature, plus `a_mu - a_mubar` and `a_mu + a_mubar` for each
/// quantity `a` present for both muons.
pub fn default_probes(data: &Dataset) -> Vec<Probe> {
    let mut probes: Vec<Probe> = (0..data.dim()).map(|c| Probe::feature(data, c)).collect();
    let pairs: Vec<(usize, usize, &str)> = data
        .names
        .iter()
        .enumerate()
        .filter_map(|(i, name)| {
            let stem = name.strip_suffix("_mu")?;
            let j = data
                .names
                .iter()
                .position(|n| *n == format!("{stem}_mubar"))?;
            Some((i, j, stem))
        })
        .collect();
    for &(i, j, stem) in &pairs {
        probes.push(Probe {
            label: format!("{stem}_mu-{stem}_mubar"),
            terms: vec![(i, 1.0), (j, -1.0)],
        });
    }
    for &(i, j, stem) in &pairs {
        probes.push(Probe {
            label: format!("{stem}_mu+{stem}_mubar"),
            terms: vec![(i, 1.0), (j, 1.0)],
        });
    }
    probes
}

/// Pearson correlations between posterior means and probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub latent_labels: Vec<String>,
    pub probe_labels: Vec<String>,
    /// `latents × probes`
    pub r: Matrix,
    /// Probes with no variance over the dataset; their correlations are reported as 0.
    pub zero_variance: Vec<bool>,
}

impl CorrelationMatrix {
    pub fn probe_index(&self, label: &str) -> Option<usize> {
        self.probe_labels.iter().position(|p| p == label)
    }

    /// Probe with the largest |r| for `latent` among `candidates`.
    pub fn best_match(&self, latent: usize, candidates: &[usize]) -> Option<(usize, f64)> {
        candidates
            .iter()
            .map(|&p| (p, self.r.get(latent, p)))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn latent_feature_correlations(
    stats: &LatentStats,
    data: &Dataset,
    probes: &[Probe],
) -> Result<CorrelationMatrix> {
    if stats.events() != data.len() {
        return Err(Error::shape(
            "latent_feature_correlations",
            data.len(),
            stats.events(),
        ));
    }
    if data.len() < 2 {
        return Err(Error::Data("correlations need at least 2 events".into()));
    }
    let col_std: Vec<f64> = (0..data.dim())
        .map(|c| population_std(data.features.column(c).into_iter()))
        .collect();
    let mut r = Matrix::zeros(stats.latent_dim(), probes.len());
    let mut zero_variance = Vec::with_capacity(probes.len());
    let latents: Vec<Vec<f64>> = (0..stats.latent_dim())
        .map(|j| stats.z_mean.column(j))
        .collect();
    for (p, probe) in probes.iter().enumerate() {
        if let Some(&(c, _)) = probe.terms.iter().find(|(c, _)| *c >= data.dim()) {
            return Err(Error::shape("probe column", format!("< {}", data.dim()), c));
        }
        let values = probe.values(&data.features);
        let scale: f64 = probe.terms.iter().map(|&(c, w)| w.abs() * col_std[c]).sum();
        let spread = population_std(values.iter().copied());
        let flat = !(spread > 1e-9 * scale);
        zero_variance.push(flat);
        if flat {
            continue;
        }
        for (j, z) in latents.iter().enumerate() {
            r.set(j, p, pearson(z, &values).unwrap_or(0.0));
        }
    }
    Ok(CorrelationMatrix {
        latent_labels: (0..stats.latent_dim())
            .map(|j| format!("z{}", j + 1))
            .collect(),
        probe_labels: probes.iter().map(|p| p.label.clone()).collect(),
        r,
        zero_variance,
    })
}

/// `(feature value, ⟨z⟩)` pairs in dataset order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterTable {
    pub feature: String,
    pub latent: String,
    pub points: Vec<[f64; 2]>,
}

impl ScatterTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.feature, self.latent);
        for [x, y] in &self.points {
            s.push_str(&format!("{x:.16e},{y:.16e}\n"));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty scatter table".into()))?;
        let (feature, latent) = header
            .split_once(',')
            .ok_or_else(|| Error::Data("scatter header needs two columns".into()))?;
        let points = lines
            .enumerate()
            .map(|(i, line)| {
                let bad = || Error::Data(format!("scatter table line {}: `{line}`", i + 2));
                let (a, b) = line.split_once(',').ok_or_else(bad)?;
                Ok([a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScatterTable {
            feature: feature.to_string(),
            latent: latent.to_string(),
            points,
        })
    }
}

pub fn scatter_export(
    stats: &LatentStats,
    data: &Dataset,
    latent_idx: usize,
    feature_idx: usize,
) -> Result<ScatterTable> {
    if latent_idx >= stats.latent_dim() {
        return Err(Error::Data(format!(
            "latent index {latent_idx} out of range (have {})",
            stats.latent_dim()
        )));
    }
    if feature_idx >= data.dim() {
        return Err(Error::Data(format!(
            "feature index {feature_idx} out of range (have {})",
            data.dim()
        )));
    }
    if stats.events() != data.len() {
        return Err(Error::shape("scatter_export", data.len(), stats.events()));
    }
    Ok(ScatterTable {
        feature: data.names[feature_idx].clone(),
        latent: format!("z{}", latent_idx + 1),
        points: (0..data.len())
            .map(|i| {
                [
                    data.features.get(i, feature_idx),
                    stats.z_mean.get(i, latent_idx),
                ]
            })
            .collect(),
    })
}
