use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    QuantumGeneral,
    CoherentClosedForm,
    FockLimit,
    SemiclassicalLinear,
    QuantumSHG,
    SemiclassicalSHG,
    /// Population-only SHG with the inner resonances shifted by `ω`.
    TextbookSHG,
    Oracle,
}

impl Formula {
    pub fn tag(&self) -> &'static str {
        match self {
            Formula::QuantumGeneral => "QuantumGeneral",
            Formula::CoherentClosedForm => "CoherentClosedForm",
            Formula::FockLimit => "FockLimit",
            Formula::SemiclassicalLinear => "SemiclassicalLinear",
            Formula::QuantumSHG => "QuantumSHG",
            Formula::SemiclassicalSHG => "SemiclassicalSHG",
            Formula::TextbookSHG => "TextbookSHG",
            Formula::Oracle => "Oracle",
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = [
            Formula::QuantumGeneral,
            Formula::CoherentClosedForm,
            Formula::FockLimit,
            Formula::SemiclassicalLinear,
            Formula::QuantumSHG,
            Formula::SemiclassicalSHG,
            Formula::TextbookSHG,
            Formula::Oracle,
        ];
        all.into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown formula '{s}'")))
    }
}

impl std::fmt::Display for Formula {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Provenance echoed next to every result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub number_density: f64,
    /// Drive frequency, rad/s.
    pub omega: f64,
    /// Detuning in units of the transition frequency, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_photons: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymmetry: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matter_state: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_state: Option<String>,
    pub epsilon0: f64,
    pub fock_cutoff: usize,
}

#[derive(Debug, Clone)]
pub struct ChiResult {
    pub chi0: Option<[C64; 3]>,
    pub chi1: Option<Array2<C64>>,
    pub chi2: Option<Array3<C64>>,
    pub formula: Formula,
    pub params: Params,
}

/// `Σ_j χ_ij e_j`.
pub fn contract_chi1(chi: &Array2<C64>, e: &[f64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (i, slot) in out.iter_mut().enumerate() {
        for (j, ej) in e.iter().enumerate() {
            *slot += chi[[i, j]] * *ej;
        }
    }
    out
}

/// `Σ_jk χ_ijk e_j e_k`.
pub fn contract_chi2(chi: &Array3<C64>, e: &[f64; 3]) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (i, slot) in out.iter_mut().enumerate() {
        for (j, ej) in e.iter().enumerate() {
            for (k, ek) in e.iter().enumerate() {
                *slot += chi[[i, j, k]] * (*ej * *ek);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for C64 {
    fn from(z: ComplexJson) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ChiResultJson {
    formula: Formula,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    chi0: Option<Vec<ComplexJson>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    chi1: Option<Vec<Vec<ComplexJson>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    chi2: Option<Vec<Vec<Vec<ComplexJson>>>>,
    params: Params,
}

impl ChiResult {
    pub fn new(formula: Formula, params: Params) -> Self {
        Self { chi0: None, chi1: None, chi2: None, formula, params }
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let dto = ChiResultJson {
            formula: self.formula,
            chi0: self.chi0.map(|v| v.iter().map(|&z| z.into()).collect()),
            chi1: self.chi1.as_ref().map(|m| {
                (0..3).map(|i| (0..3).map(|j| m[[i, j]].into()).collect()).collect()
            }),
            chi2: self.chi2.as_ref().map(|t| {
                (0..3)
                    .map(|i| (0..3).map(|j| (0..3).map(|k| t[[i, j, k]].into()).collect()).collect())
                    .collect()
            }),
            params: self.params.clone(),
        };
        serde_json::to_value(dto).expect("plain data serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: ChiResultJson = serde_json::from_str(text)?;
        let shape_err = || Error::Io("malformed susceptibility JSON".into());
        let chi0 = match dto.chi0 {
            Some(v) if v.len() == 3 => Some([v[0].into(), v[1].into(), v[2].into()]),
            Some(_) => return Err(shape_err()),
            None => None,
        };
        let chi1 = match dto.chi1 {
            Some(rows) => {
                if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
                    return Err(shape_err());
                }
                Some(Array2::from_shape_fn((3, 3), |(i, j)| rows[i][j].into()))
            }
            None => None,
        };
        let chi2 = match dto.chi2 {
            Some(t) => {
                if t.len() != 3 || t.iter().any(|r| r.len() != 3 || r.iter().any(|c| c.len() != 3)) {
                    return Err(shape_err());
                }
                Some(Array3::from_shape_fn((3, 3, 3), |(i, j, k)| t[i][j][k].into()))
            }
            None => None,
        };
        Ok(Self { chi0, chi1, chi2, formula: dto.formula, params: dto.params })
    }
}
