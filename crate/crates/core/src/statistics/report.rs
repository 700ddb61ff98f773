//! The JSON report record shared by the CLI and the plotting scripts.

use serde::{Deserialize, Serialize};

use super::{CumulantReport, Method, QuadratureGrid};
use crate::kernels::KernelSpec;
use crate::theory::VariancePrediction;

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct GridInfo {
    pub nr: usize,
    pub ntheta: usize,
    pub rmax: f64,
}

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub struct PredictionInfo {
    pub bulk: f64,
    pub boundary: f64,
    pub total: f64,
}

#[derive(Clone, Copy, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub richardson_gap: Option<f64>,
    pub rejections: Option<u64>,
}

/// `{spec, g, method, k, value, std_error, grid, prediction, diagnostics}`.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct Report {
    pub spec: KernelSpec,
    pub g: String,
    pub method: Method,
    pub k: usize,
    pub value: f64,
    pub std_error: f64,
    pub grid: Option<GridInfo>,
    pub prediction: Option<PredictionInfo>,
    pub diagnostics: Diagnostics,
}

impl From<&QuadratureGrid> for GridInfo {
    fn from(g: &QuadratureGrid) -> Self {
        Self { nr: g.nr, ntheta: g.ntheta, rmax: g.r_max }
    }
}

impl From<&VariancePrediction> for PredictionInfo {
    fn from(p: &VariancePrediction) -> Self {
        Self { bulk: p.bulk, boundary: p.boundary, total: p.total }
    }
}

impl Report {
    pub fn new(c: &CumulantReport) -> Self {
        Self {
            spec: c.spec,
            g: c.g.clone(),
            method: c.method,
            k: c.k,
            value: c.value,
            std_error: c.std_error,
            grid: None,
            prediction: None,
            diagnostics: Diagnostics { richardson_gap: c.richardson_gap, rejections: None },
        }
    }

    pub fn with_grid(mut self, grid: &QuadratureGrid) -> Self {
        self.grid = Some(grid.into());
        self
    }

    pub fn with_prediction(mut self, p: &VariancePrediction) -> Self {
        self.prediction = Some(p.into());
        self
    }

    pub fn with_rejections(mut self, rejections: u64) -> Self {
        self.diagnostics.rejections = Some(rejections);
        self
    }

    /// `|value - prediction| / |prediction|` when a prediction is attached.
    pub fn relative_error(&self) -> Option<f64> {
        self.prediction.map(|p| (self.value - p.total).abs() / p.total.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::{variance_quadrature, DEFAULT_ANGLES, DEFAULT_TOLERANCE};
    use crate::theory::{predicted_variance, TestFunction};

    #[test]
    fn json_has_documented_keys_and_round_trips() {
        let spec = KernelSpec::full(4, 2).unwrap();
        let g = TestFunction::parse("re").unwrap();
        let grid = QuadratureGrid::for_spec(&spec, &g, 64, DEFAULT_ANGLES).unwrap();
        let c = variance_quadrature(&spec, &g, &grid, DEFAULT_TOLERANCE).unwrap();
        let r = Report::new(&c).with_grid(&grid).with_prediction(&predicted_variance(&spec, &g).unwrap());
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in ["spec", "g", "method", "k", "value", "std_error", "grid", "prediction", "diagnostics"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["spec"]["variant"], "full");
        assert_eq!(v["method"], "quadrature");
        assert_eq!(v["g"], "re");
        for key in ["nr", "ntheta", "rmax"] {
            assert!(v["grid"].get(key).is_some());
        }
        for key in ["bulk", "boundary", "total"] {
            assert!(v["prediction"].get(key).is_some());
        }
        assert!(v["diagnostics"].get("richardson_gap").is_some());
        let back: Report = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
