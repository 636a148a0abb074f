//! Deployment gate: a prediction is trusted only when the case is no harder
//! than the certified capability of the model for the predicted class.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cat::MlcReport;
use crate::classifier::TrainedModel;
use crate::rng::fnv1a64;
use crate::{ClassLabel, Error, Result};

pub const CERTIFICATE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlcCertificate {
    pub schema_version: u32,
    pub model_id: String,
    pub mlc_class1: f64,
    pub mlc_class2: f64,
    pub reliability: f64,
    pub cases_used_class1: usize,
    pub cases_used_class2: usize,
    pub created_by: String,
}

/// Stable identifier of a model: FNV-1a of its JSON form, in hex.
pub fn model_id(model: &TrainedModel) -> Result<String> {
    Ok(format!("{:016x}", fnv1a64(model.to_json()?.as_bytes())))
}

impl MlcCertificate {
    pub fn new(model_id: impl Into<String>, mlc_class1: f64, mlc_class2: f64, reliability: f64) -> Self {
        MlcCertificate {
            schema_version: CERTIFICATE_SCHEMA_VERSION,
            model_id: model_id.into(),
            mlc_class1,
            mlc_class2,
            reliability,
            cases_used_class1: 0,
            cases_used_class2: 0,
            created_by: concat!("mlc ", env!("CARGO_PKG_VERSION")).to_string(),
        }
    }

    /// Builds a certificate from one completed session per class.
    pub fn from_reports(model: &TrainedModel, class1: &MlcReport, class2: &MlcReport, reliability: f64) -> Result<Self> {
        if class1.class_label != ClassLabel::Class1 || class2.class_label != ClassLabel::Class2 {
            return Err(Error::Certificate("reports must be for class1 and class2 in that order".into()));
        }
        let mlc = |r: &MlcReport| {
            r.mlc.ok_or_else(|| {
                Error::Certificate(format!("{} session ended without an MLC ({:?})", r.class_label, r.stop_reason))
            })
        };
        let mut cert = Self::new(model_id(model)?, mlc(class1)?, mlc(class2)?, reliability);
        cert.cases_used_class1 = class1.cases_used;
        cert.cases_used_class2 = class2.cases_used;
        Ok(cert)
    }

    pub fn mlc(&self, class: ClassLabel) -> f64 {
        match class {
            ClassLabel::Class1 => self.mlc_class1,
            ClassLabel::Class2 => self.mlc_class2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CERTIFICATE_SCHEMA_VERSION {
            return Err(Error::Certificate(format!("unsupported schema version {}", self.schema_version)));
        }
        if !self.mlc_class1.is_finite() || !self.mlc_class2.is_finite() {
            return Err(Error::Certificate("MLC values must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::json("certificate", e))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: MlcCertificate = serde_json::from_str(s).map_err(|e| Error::json("certificate", e))?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Algorithm,
    HumanReview,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub case_id: String,
    pub predicted_class: ClassLabel,
    pub raw_cdi: f64,
    pub oriented_cdi: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Orients the raw CDI by the predicted class and compares it with that
/// class's MLC. Equality counts as within capability.
pub fn gate_case(case_id: &str, raw_cdi: f64, predicted: ClassLabel, cert: &MlcCertificate) -> GateDecision {
    let oriented = predicted.orientation() * raw_cdi;
    let threshold = cert.mlc(predicted);
    GateDecision {
        case_id: case_id.to_string(),
        predicted_class: predicted,
        raw_cdi,
        oriented_cdi: oriented,
        threshold,
        verdict: if oriented <= threshold { Verdict::Algorithm } else { Verdict::HumanReview },
    }
}

/// A scored test case ready for gating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCase {
    pub case_id: String,
    pub raw_cdi: f64,
    pub true_class: ClassLabel,
    pub predicted_class: ClassLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGateSummary {
    pub class_label: ClassLabel,
    pub n_cases: usize,
    pub n_algorithm: usize,
    pub n_correct: usize,
    /// Absent when no case of this class passed the gate.
    pub accuracy: Option<f64>,
}

/// Accuracy over gate-passing cases, per true class.
pub fn gated_accuracy(cases: &[GateCase], cert: &MlcCertificate) -> Vec<ClassGateSummary> {
    ClassLabel::BOTH
        .iter()
        .map(|&class| {
            let mine: Vec<&GateCase> = cases.iter().filter(|c| c.true_class == class).collect();
            let passed: Vec<&&GateCase> = mine
                .iter()
                .filter(|c| gate_case(&c.case_id, c.raw_cdi, c.predicted_class, cert).verdict == Verdict::Algorithm)
                .collect();
            let n_correct = passed.iter().filter(|c| c.predicted_class == c.true_class).count();
            ClassGateSummary {
                class_label: class,
                n_cases: mine.len(),
                n_algorithm: passed.len(),
                n_correct,
                accuracy: (!passed.is_empty()).then(|| n_correct as f64 / passed.len() as f64),
            }
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct BatchRow {
    case_id: String,
    raw_cdi: f64,
    predicted_class: ClassLabel,
}

/// Gates every row of a `case_id,raw_cdi,predicted_class` CSV and writes one
/// decision per row.
pub fn gate_csv<R: Read, W: Write>(input: R, cert: &MlcCertificate, output: W) -> Result<Vec<GateDecision>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = csv::Writer::from_writer(output);
    let mut decisions = Vec::new();
    for row in rdr.deserialize::<BatchRow>() {
        let row = row.map_err(|e| Error::csv("gate input", e))?;
        let d = gate_case(&row.case_id, row.raw_cdi, row.predicted_class, cert);
        out.serialize(&d).map_err(|e| Error::csv("gate output", e))?;
        decisions.push(d);
    }
    out.flush().map_err(|e| Error::io("gate output", e))?;
    Ok(decisions)
}
