//! The JSON analysis report written by the `pipeline` command.

use serde::{Deserialize, Serialize};

use crate::decomposition::{
    analyze_fiber, AnalysisOptions, BirefringenceEstimate, PolarDecomposition, RetardanceResult,
};
use crate::error::Result;
use crate::mueller::MuellerMatrix;
use crate::retrieval::MeasurementSet;

/// Where a report came from: enough to rerun it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub input: Option<String>,
    pub wavelength: f64,
    pub fiber_length: f64,
    pub prior_delta_n_cb: f64,
    pub prior_delta_n_lb: f64,
    pub resamples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub mueller: MuellerMatrix,
    pub element_sigma: [[f64; 4]; 4],
    pub condition_number: f64,
    pub decomposition: PolarDecomposition,
    pub retardance: RetardanceResult,
    pub circular: BirefringenceEstimate,
    pub linear: BirefringenceEstimate,
    pub provenance: Provenance,
}

/// Run the full analysis chain on a measurement set and package the result.
pub fn analysis_report(
    set: &MeasurementSet,
    prior_cb: f64,
    prior_lb: f64,
    opts: &AnalysisOptions,
    input: Option<String>,
) -> Result<AnalysisReport> {
    let a = analyze_fiber(set, prior_cb, prior_lb, opts)?;
    Ok(AnalysisReport {
        mueller: a.estimate.m,
        element_sigma: a.estimate.element_sigma,
        condition_number: a.estimate.condition_number,
        decomposition: a.decomposition,
        retardance: a.retardance,
        circular: a.circular,
        linear: a.linear,
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            input,
            wavelength: set.wavelength,
            fiber_length: set.fiber_length,
            prior_delta_n_cb: prior_cb,
            prior_delta_n_lb: prior_lb,
            resamples: opts.resamples,
            seed: opts.seed,
        },
    })
}
