//! Monte Carlo and exact estimators of the quantities entering the
//! concentration bounds.

mod correlation;
mod dynamics;
mod ergodic;
mod lambda;
mod measure;
mod observable;

pub use correlation::{
    correlation_dimension, correlation_sum, correlation_sums, heaviside, phi0,
    CorrelationDimension, CorrelationSum, Kernel, LadderRung,
};
pub use dynamics::{
    fixed_points_of, lyapunov_1d, lyapunov_projective, nonexpansive_fixed_points, synchronization,
    FixedPoint, ProjectiveRates, DEFAULT_FIXED_POINT_GRID,
};
pub(crate) use ergodic::birkhoff_sum_fast;
pub use ergodic::{
    birkhoff_average, birkhoff_sums, correlation_coefficient_pj, kantorovich, log_averaged_measure,
    push_forward, sigma2_estimate, stationary_approx, Estimate, Sigma2Estimate, StationaryApprox,
};
pub use lambda::{
    default_ceiling, lambda_ladder, lambda_n, pair_distance_profile, u_profile, LambdaEstimate,
    PairEntry, PairSource, StepStat,
};
pub use measure::{
    empirical_measure, kantorovich_circle, kantorovich_gaussian, kantorovich_interval,
    kantorovich_line, kantorovich_uniform, log_averaged_from_sums, EmpiricalMeasure, LineMeasure,
};
pub use observable::Observable;
