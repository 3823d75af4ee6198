//! Scattering data and timelike asymptotics for radial quasilinear wave
//! equations `g^{αβ}(u) ∂_α∂_β u = 0`.

/// Version of this crate, recorded in artifact manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod eikonal;
pub mod error;
pub mod geometry;
pub mod interior;
pub mod io;
pub mod kirchhoff;
pub mod numerics;
pub mod reduced_system;
pub mod wave_solver;

pub use eikonal::{
    extract_limits, gauge_independence_check, label_lattice, trace_characteristic, trace_family, CharacteristicTrace,
    EikonalRegion, ExtractOptions, Extraction, GaugeCheckParams, GaugeReport, TraceOptions, TraceSample,
};
pub use error::{Error, Result};
pub use geometry::{
    angular_derivative, evaluate_g, null_condition_satisfied, sphere_rule, spherical_mean_reduction, AngularPolynomial,
    MetricModel, Profile1D, SphereRule, Vec3,
};
pub use interior::{
    assumption_scan, axis_residuals, classify_vanishing, interior_prediction, spherical_means_decay, verify_interior,
    Classification, DecayTable, SampleSpec, ScanTable, VerificationReport,
};
pub use kirchhoff::{
    backward_representation, inhomogeneous_part, limit_geometry, linear_part, phi_form_difference, remainder_budget,
    SpacetimeSampler,
};
pub use reduced_system::{
    derive_ai, derive_ui, gauge_map, gauge_map_inverse, normalized_profiles, reduced_residual, reduced_solution,
    scattering_from_limits, u_hat_profile, GaugeMap, GridFunction1D, Letter, MultiIndexWord, ScatteringData, Term,
    TermList,
};
pub use wave_solver::{
    dalembert_linear, exact_linear_radiation_field, simulate_radial, simulate_radial_strided, FieldSample, InitialData,
    Quantity, RadialField,
};
