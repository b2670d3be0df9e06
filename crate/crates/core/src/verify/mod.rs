//! One checker per inequality or identity; each returns a [`VerificationRecord`].

mod constants;
mod convergence;
mod identities;
mod inequalities;
mod record;
mod sweep;

pub use constants::{cap_fraction, compute_c1, StabilityConstants, CAP_THRESHOLD};
pub use convergence::{
    convergence_study, non_monotone, row_error, write_convergence_csv, ConvergenceRow,
    ConvergenceSpec,
};
pub use identities::{
    check_centroaffine_identity, check_centroid_chain, check_centroid_decomposition,
    check_divergence_identity, check_ibp_identity, check_ibp_identity_body,
    check_isotropic_identity, probe_excluded_exponent, self_similarity_residual,
};
pub use inequalities::{
    check_basic_estimate, check_diameter_bound_chain, check_hausdorff_comparison,
    check_key_inequality, check_poincare, check_poincare_field, check_stability_theorem,
};
pub use record::{Link, Relation, Status, Tolerances, VerificationRecord};
pub use sweep::{
    check_body, run_corpus, write_csv, ReportSummary, SweepConfig, CHECKS, CSV_HEADER,
};
