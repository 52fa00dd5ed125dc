//! Large-population description of the learning dynamics: payoff moments,
//! drift and noise covariance of the attraction differences, and the
//! homogeneous-population aggregate dynamics.

pub mod aggregates;
pub mod field;
pub mod moments;
pub mod normal;

pub use aggregates::{aggregates_from_choice, mirror, MarketSystem, TrajectoryPoint};
pub(crate) use aggregates::nearest_root;
pub use field::{covariance, drift, fd_jacobian, DriftField, LangevinField, LinearField};
pub use moments::{
    finite_population_role_moments, payoff_moments, role_moments, PayoffMoments, RoleMoments,
};
