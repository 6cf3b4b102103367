//! Moment-based lower and upper bounds on the overlap of a trial state with
//! selected eigenstates of a Hamiltonian.
//!
//! The pipeline is: a [`SpectralModel`] or a dense matrix and state produce a
//! [`MomentVector`]; an [`IndicatorSpec`] describes which energies count as
//! target; [`discretize`] turns that into a [`ConstraintGrid`]; and
//! [`optimal_bound`] solves the linear program for the best polynomial
//! minorant or majorant, whose expectation bounds the target overlap.

pub mod bounds;
pub mod error;
pub mod indicator;
pub mod linalg;
pub mod lp;
pub mod moments;
pub mod spectrum;

pub use bounds::{
    certify, degree_sweep, eckart_lower, error_decomposition, first_order_bounds, first_order_errors,
    mora_upper, optimal_bound, BoundResult, CertifyOptions, Direction, ErrorDecomposition,
    FirstOrderBounds, SweepInput,
};
pub use error::{Error, Result};
pub use indicator::{
    build_exact_indicator, build_gap_indicator, build_interval_indicator, build_threshold_indicator,
    discretize, gap_windows, refine, ConstraintGrid, IndicatorMode, IndicatorSpec, PointCounts, Region,
};
pub use linalg::{eigh, gershgorin, lanczos_extremal, DenseSymmetricMatrix, StateVector};
pub use lp::{check_feasibility, solve_lp, LinearProgram, LpError, LpSolution, LpStatus};
pub use moments::{
    chebyshev_moments, hankel_consistency_check, moments_from_spectrum, power_moments, Basis,
    MomentVector, ScalingWindow,
};
pub use spectrum::{exact_overlap, gen_cluster_model, ClusterModelParams, GridVariant, SpectralModel};
