//! Every threshold a verdict depends on.

/// Largest accepted |z| for oracle comparisons.
pub const Z_GATE: f64 = 3.0;
/// Smallest accepted p-value.
pub const P_VALUE_FLOOR: f64 = 0.01;
/// Largest accepted coefficient of variation at the end of a ladder.
pub const CV_CEILING: f64 = 0.10;
/// Coverage of the bootstrap band around the empirical characteristic function.
pub const BAND_LEVEL: f64 = 0.99;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Delete-a-group jackknife groups.
pub const JACKKNIFE_GROUPS: usize = 20;

pub const MIN_VARIANCE_REPLICAS: usize = 200;
pub const MIN_ECF_REPLICAS: usize = 1000;
pub const MIN_NORMALITY_SAMPLES: usize = 1000;
pub const MIN_KURTOSIS_SAMPLES: usize = 2000;

/// The ECF grid is `theta_k = k * ECF_THETA_SPAN / (ECF_THETA_POINTS * sd)`.
pub const ECF_THETA_POINTS: usize = 16;
pub const ECF_THETA_SPAN: f64 = 3.0;

/// Gaps `2^-1 .. 2^-6` of the moment-scaling regression.
pub const MOMENT_GAP_EXPONENTS: [i32; 6] = [1, 2, 3, 4, 5, 6];
