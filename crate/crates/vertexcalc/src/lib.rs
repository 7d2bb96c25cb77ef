pub mod branch;
pub mod delta;
pub mod dual_actions;
pub mod error;
pub mod expansion;
pub mod formal_series;
pub mod heisenberg;
pub mod report;

pub use branch::{in_composition_region, substitute, LogPoint, SubstituteDiagnostics};
pub use delta::{
    closed_form_coeff, coeff_series_iterate_region, coeff_series_product_region, expand_side,
    verify_identity, CellCheck, CoeffReport, DeltaFactor, DeltaIdentity, DeltaProductExpr, Side,
};
pub use dual_actions::{
    basis_triples, check_tau_equality, compatibility_check, lprime0_apply, parse_triple_id,
    tau1_apply, tau2_apply, triple_id, triple_total, AlgebraElement, BasisTriple, CompatReport,
    CompatRow, CorrelatorFunctional, CorrelatorKind, Functional, FunctionalSeries, TauCellRow,
    TauEqualityReport, TruncatedFunctional,
};
pub use error::{Error, Result};
pub use expansion::{
    exponent_support, fit_product_expansion, leading_extract, res_z, ExpansionFit, FitTerm,
    PairSampler, RadiiSchedule, RealExpSeries, Sampler,
};
pub use formal_series::{
    binomial_coeff, iota_expand, CoeffSeries, ExpansionConvention, Slot, SlotRef, Window,
};
pub use report::{assoc_csv, delta_csv, fit_csv, tau_csv, TauRunReport};

pub use heisenberg::{
    apply_intertwiner, apply_vertex, associativity_check, exp_virasoro, gram_norm,
    intertwiner_matrix_coeff, iterate_correlator, matrix_coeff_series, omega, partitions_of,
    partitions_up_to, product_correlator, skew_chain_check, virasoro_apply, weight, AssocReport,
    ConvergenceReport, DualVector, FockState, FockVector, Intertwiner, Partition, SkewReport,
    WickEngine, XSeries,
};
