use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Constraint, Dataset, DatasetMeta};
use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

/// GeV
pub const DEFAULT_SQRT_S_EE: f64 = 80.0;
/// TeV
pub const DEFAULT_SQRT_S_PP_TEV: f64 = 13.0;
/// GeV
pub const DEFAULT_M_Z: f64 = 91.1876;

/// Optional acceptance cuts applied to both muons of a pp event. Off by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuonCuts {
    /// GeV
    pub min_pt: f64,
    pub max_abs_eta: f64,
}

fn check_common(n: usize, scale: f64, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("number of events must be at least 1".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Config(format!(
            "{what} must be positive and finite, got {scale}"
        )));
    }
    Ok(())
}

fn meta(generator: &str, params: &[(&str, f64)]) -> DatasetMeta {
    DatasetMeta {
        generator: generator.to_string(),
        seed: None,
        params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        standardized: false,
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Two independent coordinates uniform on `[-r, r]`.
pub fn gen_uniform2d(n: usize, r: f64, rng: &mut Rng) -> Result<Dataset> {
    check_common(n, r, "radius")?;
    let data = (0..2 * n).map(|_| rng.uniform_in(-r, r)).collect();
    Dataset::new(
        Matrix::from_vec(n, 2, data)?,
        names(&["x1", "x2"]),
        meta("uniform2d", &[("r", r)]),
        vec![],
    )
}

/// Points uniform in angle on a circle of radius `r`.
pub fn gen_circle(n: usize, r: f64, rng: &mut Rng) -> Result<Dataset> {
    check_common(n, r, "radius")?;
    let angles: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, 2.0 * PI)).collect();
    circle_from_angles(&angles, r)
}

/// Circle dataset at prescribed angles.
pub fn circle_from_angles(angles: &[f64], r: f64) -> Result<Dataset> {
    check_common(angles.len(), r, "radius")?;
    let data = angles
        .iter()
        .flat_map(|t| [r * t.cos(), r * t.sin()])
        .collect();
    Dataset::new(
        Matrix::from_vec(angles.len(), 2, data)?,
        names(&["x1", "x2"]),
        meta("circle", &[("r", r)]),
        vec![Constraint::Circle],
    )
}

/// `cos θ` with density proportional to `1 + cos² θ`, by rejection.
fn sample_qed_cos_theta(rng: &mut Rng) -> f64 {
    loop {
        let c = rng.uniform_in(-1.0, 1.0);
        if rng.uniform_in(0.0, 2.0) < 1.0 + c * c {
            return c;
        }
    }
}

fn direction(cos_theta: f64, phi: f64) -> [f64; 3] {
    let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
    [sin_theta * phi.cos(), sin_theta * phi.sin(), cos_theta]
}

/// e+e- → μ+μ- at fixed `sqrt_s` (GeV), massless muons, back to back in the lab.
///
/// Columns: `px_mu, py_mu, pz_mu, px_mubar, py_mubar, pz_mubar`.
pub fn gen_ee_dimuon(n: usize, sqrt_s: f64, rng: &mut Rng) -> Result<Dataset> {
    check_common(n, sqrt_s, "sqrt_s")?;
    let p = 0.5 * sqrt_s;
    let mut data = Vec::with_capacity(6 * n);
    for _ in 0..n {
        let c = sample_qed_cos_theta(rng);
        let phi = rng.uniform_in(0.0, 2.0 * PI);
        let d = direction(c, phi);
        let mu = [p * d[0], p * d[1], p * d[2]];
        data.extend_from_slice(&mu);
        data.extend(mu.iter().map(|v| -v));
    }
    Dataset::new(
        Matrix::from_vec(n, 6, data)?,
        names(&[
            "px_mu", "py_mu", "pz_mu", "px_mubar", "py_mubar", "pz_mubar",
        ]),
        meta("ee-dimuon", &[("sqrt_s", sqrt_s)]),
        vec![Constraint::PSumZero],
    )
}

fn pseudorapidity(p: &[f64; 4]) -> f64 {
    let pt = p[1].hypot(p[2]);
    p[3].atan2(pt).tan().asinh()
}

/// pp → Z → μ+μ- with an on-shell, zero-width Z.
///
/// `sqrt_s` in TeV, `m_z` in GeV, momenta in GeV. The parton fraction `x1`
/// follows a density ∝ 1/x on `[τ, 1]` with `τ = m_z²/s` and `x2 = τ/x1`.
/// The Z carries no transverse momentum and decays isotropically in its rest
/// frame.
///
/// Columns: `E, px, py, pz` of the muon, then of the antimuon.
pub fn gen_pp_drellyan(
    n: usize,
    sqrt_s: f64,
    m_z: f64,
    cuts: Option<MuonCuts>,
    rng: &mut Rng,
) -> Result<Dataset> {
    check_common(n, sqrt_s, "sqrt_s")?;
    check_common(n, m_z, "m_z")?;
    let roots = sqrt_s * 1000.0;
    let tau = (m_z / roots).powi(2);
    if tau >= 1.0 {
        return Err(Error::Config(format!(
            "m_z = {m_z} GeV is above sqrt_s = {roots} GeV"
        )));
    }

    let max_attempts = n.saturating_mul(1000);
    let mut attempts = 0usize;
    let mut data = Vec::with_capacity(8 * n);
    let mut accepted = 0;
    while accepted < n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Config("muon cuts reject almost every event".into()));
        }
        let x1 = tau.powf(1.0 - rng.uniform()).clamp(tau, 1.0);
        let x2 = (tau / x1).clamp(tau, 1.0);
        let energy = 0.5 * (x1 + x2) * roots;
        let pz = 0.5 * (x1 - x2) * roots;
        let beta = pz / energy;
        let gamma = energy / m_z;

        let c = rng.uniform_in(-1.0, 1.0);
        let phi = rng.uniform_in(0.0, 2.0 * PI);
        let d = direction(c, phi);
        let half = 0.5 * m_z;
        let boost = |sign: f64| -> [f64; 4] {
            let (px, py, pzr) = (sign * half * d[0], sign * half * d[1], sign * half * d[2]);
            [
                gamma * (half + beta * pzr),
                px,
                py,
                gamma * (pzr + beta * half),
            ]
        };
        let mu = boost(1.0);
        let mubar = boost(-1.0);

        if let Some(cut) = cuts {
            let pass = |p: &[f64; 4]| {
                p[1].hypot(p[2]) >= cut.min_pt && pseudorapidity(p).abs() <= cut.max_abs_eta
            };
            if !(pass(&mu) && pass(&mubar)) {
                continue;
            }
        }
        data.extend_from_slice(&mu);
        data.extend_from_slice(&mubar);
        accepted += 1;
    }

    let mut m = meta("pp-drellyan", &[("sqrt_s", sqrt_s), ("m_z", m_z)]);
    if let Some(cut) = cuts {
        m.params.insert("min_pt".into(), cut.min_pt);
        m.params.insert("max_abs_eta".into(), cut.max_abs_eta);
    }
    Dataset::new(
        Matrix::from_vec(n, 8, data)?,
        names(&[
            "E_mu", "px_mu", "py_mu", "pz_mu", "E_mubar", "px_mubar", "py_mubar", "pz_mubar",
        ]),
        m,
        vec![
            Constraint::PtSumZero,
            Constraint::MasslessMu,
            Constraint::ZMass,
        ],
    )
}
