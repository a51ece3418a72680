//! Gowers norms, finite-scale local and star seminorms, and inequality checks.

mod gowers;
mod inequalities;
mod local;

pub use gowers::{
    gowers_interval, gowers_interval_values, gowers_zn, gowers_zn_with, indicator_norm, root_clamped, GowersMethod,
    GowersOptions, GowersResult, DEFAULT_WORK_BUDGET,
};
pub use inequalities::{
    gcs_cap, gcs_check, nonperiodic_gcs_check, normequiv_check, trapezoid, vdc_check, vdc_values, GcsReport,
    NonperiodicGcsReport, NormEquivReport, TrapezoidDiagnostic, VdcReport, TOLERANCE,
};
pub use local::{
    h_ladder, local_seminorm, local_seminorm_ladder, local_star_seminorm, LadderEntry, LocalSeminormResult,
    StarSeminormResult,
};
