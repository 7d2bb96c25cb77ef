//! Machine-readable report assembly: CSV projections of the JSON reports,
//! with stable column and row orders independent of how the values were
//! computed. Floats print in shortest round-trip form.

use serde::Serialize;

use crate::delta::CoeffReport;
use crate::dual_actions::{CompatReport, TauEqualityReport};
use crate::expansion::ExpansionFit;
use crate::heisenberg::AssocReport;

/// Column header of the identity-verification CSV.
pub const DELTA_CSV_HEADER: &str =
    "r,s,t,side,value_re,value_im,closed_re,closed_im,abs_err,terms,converged";

/// Identity verification cells, one row per (cell, side), in the report's
/// own order.
pub fn delta_csv(report: &CoeffReport) -> String {
    let mut out = String::from(DELTA_CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            c.r,
            c.s,
            c.t,
            c.side.tag(),
            c.value_re,
            c.value_im,
            c.closed_re,
            c.closed_im,
            c.abs_err,
            c.terms,
            c.converged
        ));
    }
    out
}

/// Column header of the model-playground CSV: the identity-verification
/// value columns with the cell identity replaced by momenta and basis-tuple
/// identity.
pub const PLAYGROUND_CSV_HEADER: &str =
    "p1,p2,p3,tuple_id,side,value_re,value_im,closed_re,closed_im,abs_err,terms,converged";

/// Composition comparison rows, two per basis tuple (one per composition
/// order), with the first order's value repeated as the reference column.
pub fn assoc_csv(report: &AssocReport) -> String {
    let mut out = String::from(PLAYGROUND_CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        let abs_err = {
            let dr = row.product_re - row.iterate_re;
            let di = row.product_im - row.iterate_im;
            (dr * dr + di * di).sqrt()
        };
        for (side, vre, vim) in [
            ("product", row.product_re, row.product_im),
            ("iterate", row.iterate_re, row.iterate_im),
        ] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                report.p1,
                report.p2,
                report.p3,
                row.tuple_id,
                side,
                vre,
                vim,
                row.product_re,
                row.product_im,
                if side == "product" { 0.0 } else { abs_err },
                report.level,
                row.pass
            ));
        }
    }
    out
}

/// Column header of the expansion-fit CSV.
pub const FIT_CSV_HEADER: &str = "term,r,s,k,coeff_re,coeff_im";

/// Fitted expansion terms, one row per Taylor coefficient of each term.
pub fn fit_csv(fit: &ExpansionFit) -> String {
    let mut out = String::from(FIT_CSV_HEADER);
    out.push('\n');
    for (i, term) in fit.terms.iter().enumerate() {
        for (k, c) in term.taylor.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i, term.r, term.s, k, c.re, c.im
            ));
        }
    }
    out
}

/// Column header of the two-action comparison CSV.
pub const TAU_CSV_HEADER: &str = "r,s,t,norm,dev,pass";

/// Cellwise deviation rows of a two-action comparison; `pass` repeats the
/// report-level verdict so each row is self-contained.
pub fn tau_csv(report: &TauEqualityReport) -> String {
    let mut out = String::from(TAU_CSV_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.r, row.s, row.t, row.norm, row.dev, report.pass
        ));
    }
    out
}

/// Combined output of the two-action subcommand: the cellwise equality
/// comparison and, when requested, the compatibility verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct TauRunReport {
    pub equality: TauEqualityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compatibility: Option<CompatReport>,
    pub pass: bool,
}

impl TauRunReport {
    pub fn new(equality: TauEqualityReport, compatibility: Option<CompatReport>) -> TauRunReport {
        let pass = equality.pass && compatibility.as_ref().map_or(true, |c| c.pass);
        TauRunReport {
            equality,
            compatibility,
            pass,
        }
    }
}
