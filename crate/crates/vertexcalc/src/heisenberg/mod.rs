//! A rank-one free-boson model at finite truncation: Fock-space states
//! graded by excitation level, oscillator and Virasoro actions, exponential
//! intertwining operators between momentum sectors, closed-form four-point
//! correlators in both composition orders, and the Ω skew transform.

pub mod basis;
pub mod correlator;
pub mod modes;
pub mod vertex;
pub mod wick;

pub use basis::{
    gram_norm, partition_size, partitions_of, partitions_up_to, weight, DualVector, FockState,
    FockVector, Partition, MOMENTUM_TOL,
};
pub use correlator::{
    associativity_check, iterate_correlator, iterate_correlator_depth, product_correlator,
    product_correlator_depth, skew_chain_check, tuple_id, AssocReport, ConvergenceReport,
    SkewReport, TupleCheck, MAX_ADAPTIVE_LEVEL,
};
pub use modes::{
    apply_a0, apply_annihilation, apply_creation, apply_mode, exp_virasoro, virasoro_apply,
};
pub use vertex::{
    apply_intertwiner, apply_vertex, intertwiner_matrix_coeff, matrix_coeff_series, omega,
    Intertwiner, Realization, XSeries,
};
pub use wick::WickEngine;
