//! Geometry configuration file: per-digit hardware geometry, nominal virtual links,
//! phalanx lengths and DIP coupling. Lengths are mm and angles degrees on disk.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{
    DigitKind, DigitModel, DistalFixed, FixedGeometry, KinematicsError, TableForm, VirtualLinks, DEFAULT_DIP_RATIO,
};

pub const GEOMETRY_VERSION: u32 = 1;

const SHIPPED: &str = include_str!("../data/nominal_geometry.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("geometry file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported geometry file version {0} (expected {GEOMETRY_VERSION})")]
    Version(u32),
    #[error("geometry for {0} is missing")]
    MissingDigit(DigitKind),
    #[error("{digit}: {source}")]
    Invalid { digit: DigitKind, source: KinematicsError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedGeometryFile {
    pub b1_mm: f64,
    pub a2_mm: f64,
    pub d2_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a3_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c3_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d3_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1_deg: Option<f64>,
}

/// XY virtual links as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirtualLinksFile {
    pub x1_mm: f64,
    pub y1_mm: f64,
    pub x2_mm: f64,
    pub y2_mm: f64,
    pub x3_mm: f64,
    pub y3_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x4_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y4_mm: Option<f64>,
}

impl VirtualLinksFile {
    pub fn to_links(&self) -> Result<VirtualLinks, KinematicsError> {
        let v = match (self.x4_mm, self.y4_mm) {
            (Some(x4), Some(y4)) => {
                VirtualLinks::thumb(self.x1_mm, self.y1_mm, self.x2_mm, self.y2_mm, self.x3_mm, self.y3_mm, x4, y4)
            }
            (None, None) => {
                VirtualLinks::finger(self.x1_mm, self.y1_mm, self.x2_mm, self.y2_mm, self.x3_mm, self.y3_mm)
            }
            _ => return Err(KinematicsError::InvalidGeometry("x4_mm and y4_mm must be given together".into())),
        };
        v.validate()?;
        Ok(v)
    }

    pub fn from_links(v: &VirtualLinks) -> Self {
        VirtualLinksFile {
            x1_mm: v.x1(),
            y1_mm: v.y1(),
            x2_mm: v.l1(),
            y2_mm: v.c1(),
            x3_mm: v.x3(),
            y3_mm: v.y3(),
            x4_mm: v.x4(),
            y4_mm: v.y4(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitGeometryFile {
    pub fixed: FixedGeometryFile,
    #[serde(rename = "virtual")]
    pub virt: VirtualLinksFile,
    pub phalanges_mm: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dip_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub version: u32,
    #[serde(default)]
    pub table_form: TableForm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dip_ratio: Option<f64>,
    pub reference_hand_length_cm: f64,
    pub digits: BTreeMap<DigitKind, DigitGeometryFile>,
}

/// Validated geometry for all configured digits.
#[derive(Debug, Clone, PartialEq)]
pub struct HandGeometry {
    pub reference_hand_length_cm: f64,
    models: BTreeMap<DigitKind, (DigitModel, VirtualLinks)>,
    file: GeometryFile,
}

impl HandGeometry {
    /// The nominal geometry bundled with the library.
    pub fn shipped() -> Self {
        Self::from_json_str(SHIPPED).expect("bundled geometry is valid")
    }

    pub fn shipped_json() -> &'static str {
        SHIPPED
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let file: GeometryFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn from_file(file: GeometryFile) -> Result<Self, ConfigError> {
        if file.version != GEOMETRY_VERSION {
            return Err(ConfigError::Version(file.version));
        }
        let mut models = BTreeMap::new();
        for (&digit, dg) in &file.digits {
            let wrap = |source| ConfigError::Invalid { digit, source };
            let f = &dg.fixed;
            let distal = match (f.a3_mm, f.c3_mm, f.d3_mm, f.gamma1_deg) {
                (Some(a3), Some(c3), Some(d3), Some(g1)) => Some(DistalFixed { a3, c3, d3, gamma1: g1.to_radians() }),
                (None, None, None, None) => None,
                _ => {
                    return Err(wrap(KinematicsError::InvalidGeometry(
                        "distal loop needs all of a3_mm, c3_mm, d3_mm, gamma1_deg".into(),
                    )))
                }
            };
            let geom = FixedGeometry { b1: f.b1_mm, a2: f.a2_mm, d2: f.d2_mm, distal };
            let mut model = DigitModel::new(digit, geom, dg.phalanges_mm);
            model.dip_ratio = dg.dip_ratio.or(file.dip_ratio).unwrap_or(DEFAULT_DIP_RATIO);
            model.form = file.table_form;
            model.validate().map_err(wrap)?;
            let virt = dg.virt.to_links().map_err(wrap)?;
            virt.check_digit(digit).map_err(wrap)?;
            models.insert(digit, (model, virt));
        }
        Ok(HandGeometry { reference_hand_length_cm: file.reference_hand_length_cm, models, file })
    }

    pub fn digits(&self) -> impl Iterator<Item = DigitKind> + '_ {
        self.models.keys().copied()
    }

    pub fn model(&self, digit: DigitKind) -> Result<DigitModel, ConfigError> {
        self.models.get(&digit).map(|m| m.0).ok_or(ConfigError::MissingDigit(digit))
    }

    pub fn nominal_virt(&self, digit: DigitKind) -> Result<VirtualLinks, ConfigError> {
        self.models.get(&digit).map(|m| m.1).ok_or(ConfigError::MissingDigit(digit))
    }

    /// Hand scale factor implied by a hand length.
    pub fn hand_scale(&self, hand_length_cm: f64) -> f64 {
        hand_length_cm / self.reference_hand_length_cm
    }

    pub fn file(&self) -> &GeometryFile {
        &self.file
    }

    /// Copy with every model switched to the given closed-form variant.
    pub fn with_table_form(&self, form: TableForm) -> Self {
        let mut out = self.clone();
        out.file.table_form = form;
        for (m, _) in out.models.values_mut() {
            m.form = form;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_geometry_loads() {
        let g = HandGeometry::shipped();
        assert_eq!(g.digits().count(), 3);
        let idx = g.model(DigitKind::Index).unwrap();
        assert_eq!(idx.phalanges, [45.0, 25.0, 15.0]);
        assert!((idx.dip_ratio - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.nominal_virt(DigitKind::Thumb).unwrap().len(), 8);
    }

    #[test]
    fn unknown_field_is_named() {
        let text = HandGeometry::shipped_json().replace("\"b1_mm\"", "\"b9_mm\"");
        let err = HandGeometry::from_json_str(&text).unwrap_err().to_string();
        assert!(err.contains("b9_mm"), "{err}");
    }

    #[test]
    fn wrong_version_rejected() {
        let text = HandGeometry::shipped_json().replacen("\"version\": 1", "\"version\": 9", 1);
        assert!(matches!(HandGeometry::from_json_str(&text), Err(ConfigError::Version(9))));
    }
}
