//! Linear statistics `X_g = Σ g(λ_j)` and their cumulants.

mod exact;
mod mc;
mod quadrature;
mod report;

use serde::{Deserialize, Serialize};

use crate::kernels::KernelSpec;
use crate::sampler::PointSample;
use crate::theory::TestFunction;

pub use exact::{
    build_gk, cumulant_exact_smalln, cumulant_exact_value, exact_kernel, full_c2_via_diffops, pure_c2_via_laguerre,
    verify_crossterms, CrosstermCheck, GkRepresentation,
};
pub use mc::{
    fluctuations, k_statistics, mc_cumulant_report, mc_cumulants, normality, KStatistics, McCumulants, Normality,
    MIN_REPLICATES,
};
pub use report::{Diagnostics, GridInfo, PredictionInfo, Report};
pub use quadrature::{
    expected_trace, integrated_intensity, variance_on_grid, variance_quadrature, QuadratureGrid, DEFAULT_ANGLES,
    DEFAULT_RADIAL_NODES, DEFAULT_TOLERANCE,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Quadrature,
    ExactOracle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Mc => "mc",
            Method::Quadrature => "quadrature",
            Method::ExactOracle => "exact_oracle",
        })
    }
}

/// One cumulant estimate with its provenance.
#[derive(Clone, Debug, Serialize)]
pub struct CumulantReport {
    pub k: usize,
    pub value: f64,
    pub method: Method,
    pub std_error: f64,
    pub spec: KernelSpec,
    pub g: String,
    pub richardson_gap: Option<f64>,
    pub converged: bool,
    pub replicates: Option<usize>,
}

/// `Σ_j g(λ_j)` for one configuration.
pub fn linear_statistic(sample: &PointSample, g: &TestFunction) -> f64 {
    let mut acc = crate::special::Neumaier::default();
    for &z in &sample.points {
        acc.add(g.eval(z));
    }
    acc.value()
}
