//! Dataset generators with declared kinematic constraints.
//!
//! Collision datasets come from closed-form two-body phase space rather than a
//! matrix-element generator. What matters downstream is the constraint
//! structure (momentum conservation, on-shell masses), which is exact here.

mod csv;
mod generators;
mod standardize;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, Rng};
use crate::{Error, Result};

pub use self::csv::{csv_read, csv_write};
pub use generators::{
    circle_from_angles, gen_circle, gen_ee_dimuon, gen_pp_drellyan, gen_uniform2d, MuonCuts,
    DEFAULT_M_Z, DEFAULT_SQRT_S_EE, DEFAULT_SQRT_S_PP_TEV,
};
pub use standardize::{standardize, Standardizer};

/// Kinematic or geometric relation every row of a generated dataset satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `x1² + x2² = r²`
    Circle,
    /// `p_mu + p_mubar = 0` for all three components.
    PSumZero,
    /// `px` and `py` of the two muons cancel.
    PtSumZero,
    /// `E² = |p|²` for each muon.
    MasslessMu,
    /// Dimuon invariant mass equals `m_z`.
    ZMass,
}

impl Constraint {
    pub fn id(self) -> &'static str {
        match self {
            Constraint::Circle => "circle",
            Constraint::PSumZero => "p_sum_zero",
            Constraint::PtSumZero => "pt_sum_zero",
            Constraint::MasslessMu => "massless_mu",
            Constraint::ZMass => "z_mass",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        [
            Constraint::Circle,
            Constraint::PSumZero,
            Constraint::PtSumZero,
            Constraint::MasslessMu,
            Constraint::ZMass,
        ]
        .into_iter()
        .find(|c| c.id() == id)
    }

    /// Number of scalar equations this constraint imposes per event.
    pub fn count(self) -> usize {
        match self {
            Constraint::Circle | Constraint::ZMass => 1,
            Constraint::PSumZero => 3,
            Constraint::PtSumZero | Constraint::MasslessMu => 2,
        }
    }

    /// Tolerance on the normalized residual checked by [`verify_constraints`].
    pub fn tolerance(self) -> f64 {
        match self {
            Constraint::Circle | Constraint::PSumZero | Constraint::PtSumZero => 1e-9,
            Constraint::MasslessMu | Constraint::ZMass => 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub generator: String,
    pub seed: Option<u64>,
    /// Physical parameters such as `r`, `sqrt_s`, `m_z`.
    pub params: BTreeMap<String, f64>,
    pub standardized: bool,
}

impl DatasetMeta {
    pub fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Data(format!("dataset metadata lacks parameter `{key}`")))
    }
}

/// N×D feature matrix with column names, provenance and declared constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub names: Vec<String>,
    pub meta: DatasetMeta,
    pub constraints: Vec<Constraint>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        names: Vec<String>,
        meta: DatasetMeta,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if names.len() != features.cols() {
            return Err(Error::shape(
                "Dataset::new",
                format!("{} names", features.cols()),
                names.len(),
            ));
        }
        Ok(Dataset {
            features,
            names,
            meta,
            constraints,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Data(format!("no column named `{name}`")))
    }

    /// Total number of scalar constraint equations.
    pub fn constraint_count(&self) -> usize {
        self.constraints.iter().map(|c| c.count()).sum()
    }
}

/// Outcome of checking one declared constraint over every row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCheck {
    pub constraint: Constraint,
    pub max_residual: f64,
    pub tolerance: f64,
}

/// Re-checks every declared constraint row by row.
///
/// Residuals are normalized: the circle by `r²`, momentum sums by the summed
/// magnitudes of the terms, masses by `E²` or `m_z²`. The first violating
/// row is reported as an error.
type Residual<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;

pub fn verify_constraints(data: &Dataset) -> Result<Vec<ConstraintCheck>> {
    let col = |name: &str| data.column_index(name);
    let mut out = Vec::with_capacity(data.constraints.len());
    for &c in &data.constraints {
        let residual: Residual = match c {
            Constraint::Circle => {
                let r = data.meta.param("r")?;
                let (a, b) = (col("x1")?, col("x2")?);
                Box::new(move |row| (row[a] * row[a] + row[b] * row[b] - r * r).abs() / (r * r))
            }
            Constraint::PSumZero | Constraint::PtSumZero => {
                let comps: &[&str] = if c == Constraint::PSumZero {
                    &["px", "py", "pz"]
                } else {
                    &["px", "py"]
                };
                let pairs = comps
                    .iter()
                    .map(|k| Ok((col(&format!("{k}_mu"))?, col(&format!("{k}_mubar"))?)))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(move |row| {
                    let scale: f64 = pairs
                        .iter()
                        .map(|&(a, b)| row[a].abs() + row[b].abs())
                        .sum();
                    let worst = pairs
                        .iter()
                        .map(|&(a, b)| (row[a] + row[b]).abs())
                        .fold(0.0, f64::max);
                    if scale == 0.0 {
                        worst
                    } else {
                        worst / scale
                    }
                })
            }
            Constraint::MasslessMu => {
                let idx = ["mu", "mubar"]
                    .iter()
                    .map(|s| {
                        Ok([
                            col(&format!("E_{s}"))?,
                            col(&format!("px_{s}"))?,
                            col(&format!("py_{s}"))?,
                            col(&format!("pz_{s}"))?,
                        ])
                    })
                    .collect::<Result<Vec<_>>>()?;
                Box::new(move |row| {
                    idx.iter()
                        .map(|&[e, x, y, z]| {
                            let m2 = row[e] * row[e]
                                - row[x] * row[x]
                                - row[y] * row[y]
                                - row[z] * row[z];
                            m2.abs() / (row[e] * row[e])
                        })
                        .fold(0.0, f64::max)
                })
            }
            Constraint::ZMass => {
                let m_z = data.meta.param("m_z")?;
                let idx = ["E", "px", "py", "pz"]
                    .iter()
                    .map(|k| Ok((col(&format!("{k}_mu"))?, col(&format!("{k}_mubar"))?)))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(move |row| {
                    let s: Vec<f64> = idx.iter().map(|&(a, b)| row[a] + row[b]).collect();
                    let m2 = s[0] * s[0] - s[1] * s[1] - s[2] * s[2] - s[3] * s[3];
                    (m2 - m_z * m_z).abs() / (m_z * m_z)
                })
            }
        };
        let mut max_residual = 0.0f64;
        for i in 0..data.len() {
            let r = residual(data.features.row(i));
            if !(r <= c.tolerance()) {
                return Err(Error::Constraint {
                    constraint: c.id().to_string(),
                    row: i,
                    residual: r,
                });
            }
            max_residual = max_residual.max(r);
        }
        out.push(ConstraintCheck {
            constraint: c,
            max_residual,
            tolerance: c.tolerance(),
        });
    }
    Ok(out)
}

/// Generator selection plus its physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    Uniform2d {
        n: usize,
        #[serde(default = "default_r")]
        r: f64,
    },
    Circle {
        n: usize,
        #[serde(default = "default_r")]
        r: f64,
    },
    EeDimuon {
        n: usize,
        /// GeV
        #[serde(default = "default_sqrt_s_ee")]
        sqrt_s: f64,
    },
    PpDrellyan {
        n: usize,
        /// TeV
        #[serde(default = "default_sqrt_s_pp")]
        sqrt_s: f64,
        /// GeV
        #[serde(default = "default_m_z")]
        m_z: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cuts: Option<MuonCuts>,
    },
}

fn default_r() -> f64 {
    10.0
}
fn default_sqrt_s_ee() -> f64 {
    DEFAULT_SQRT_S_EE
}
fn default_sqrt_s_pp() -> f64 {
    DEFAULT_SQRT_S_PP_TEV
}
fn default_m_z() -> f64 {
    DEFAULT_M_Z
}

impl DatasetSpec {
    pub fn generator_id(&self) -> &'static str {
        match self {
            DatasetSpec::Uniform2d { .. } => "uniform2d",
            DatasetSpec::Circle { .. } => "circle",
            DatasetSpec::EeDimuon { .. } => "ee-dimuon",
            DatasetSpec::PpDrellyan { .. } => "pp-drellyan",
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let mut rng = Rng::seed_from(seed);
        let mut data = match *self {
            DatasetSpec::Uniform2d { n, r } => gen_uniform2d(n, r, &mut rng),
            DatasetSpec::Circle { n, r } => gen_circle(n, r, &mut rng),
            DatasetSpec::EeDimuon { n, sqrt_s } => gen_ee_dimuon(n, sqrt_s, &mut rng),
            DatasetSpec::PpDrellyan {
                n,
                sqrt_s,
                m_z,
                cuts,
            } => gen_pp_drellyan(n, sqrt_s, m_z, cuts, &mut rng),
        }?;
        data.meta.seed = Some(seed);
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_counts_match_degrees_of_freedom() {
        let mut rng = Rng::seed_from(1);
        let pp = gen_pp_drellyan(10, 13.0, DEFAULT_M_Z, None, &mut rng).unwrap();
        assert_eq!(pp.dim() - pp.constraint_count(), 3);
        let ee = gen_ee_dimuon(10, 80.0, &mut rng).unwrap();
        assert_eq!(ee.dim() - ee.constraint_count(), 3);
        let c = gen_circle(10, 10.0, &mut rng).unwrap();
        assert_eq!(c.dim() - c.constraint_count(), 1);
    }

    #[test]
    fn violated_constraint_reports_row() {
        let mut rng = Rng::seed_from(2);
        let mut c = gen_circle(5, 10.0, &mut rng).unwrap();
        c.features.set(3, 0, 0.0);
        match verify_constraints(&c) {
            Err(Error::Constraint {
                constraint, row, ..
            }) => {
                assert_eq!(constraint, "circle");
                assert_eq!(row, 3);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn broken_momentum_balance_is_caught() {
        let mut rng = Rng::seed_from(3);
        let mut ee = gen_ee_dimuon(5, 80.0, &mut rng).unwrap();
        let v = ee.features.get(0, 5);
        ee.features.set(0, 5, v + 1e-3);
        assert!(verify_constraints(&ee).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: DatasetSpec =
            serde_json::from_str(r#"{"generator":"pp-drellyan","n":100}"#).unwrap();
        assert_eq!(
            spec,
            DatasetSpec::PpDrellyan {
                n: 100,
                sqrt_s: 13.0,
                m_z: DEFAULT_M_Z,
                cuts: None
            }
        );
        let back: DatasetSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<DatasetSpec>(r#"{"generator":"torus","n":1}"#).is_err());
    }

    #[test]
    fn spec_generation_is_seeded() {
        let spec = DatasetSpec::EeDimuon {
            n: 50,
            sqrt_s: 80.0,
        };
        assert_eq!(spec.generate(4).unwrap(), spec.generate(4).unwrap());
        assert_ne!(spec.generate(4).unwrap(), spec.generate(5).unwrap());
    }
}
