//! Serializable validation report shared by the bound validators and the CLI.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Outcome of one numerical bound validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Tag of the validated estimate.
    pub lemma: String,
    pub samples: usize,
    /// Largest observed ratio of left side to the constant-free right side.
    pub max_ratio: f64,
    /// Constant calibrated on the leading samples.
    pub constant: f64,
    pub fitted_exponents: BTreeMap<String, f64>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(lemma: &str) -> Self {
        Report {
            lemma: lemma.to_string(),
            samples: 0,
            max_ratio: 0.0,
            constant: 0.0,
            fitted_exponents: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    /// Calibrates the constant as `margin` times the largest ratio among the first
    /// `calibration` entries and lists the remaining entries that exceed it.
    pub fn calibrate(&mut self, ratios: &[(f64, String)], calibration: usize, margin: f64) {
        let calibration = calibration.clamp(1, ratios.len().max(1));
        self.samples = ratios.len();
        self.max_ratio = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
        self.constant = margin
            * ratios
                .iter()
                .take(calibration)
                .map(|r| r.0)
                .fold(0.0, f64::max);
        self.failures = ratios
            .iter()
            .skip(calibration)
            .filter(|r| !(r.0 <= self.constant))
            .map(|r| format!("ratio {:.4e} at {}", r.0, r.1))
            .collect();
    }
}
