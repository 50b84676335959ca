//! Bregman terms, the telescoping identity, and the convergence bounds of the
//! PC family, evaluated on finished runs.

mod bounds;
mod example43;
mod forms;
mod lemma;

pub use bounds::{
    bregman_delta, bregman_delta_general, cor52_eval, run_general_mu, thm51_check, thm_a3_check, BoundReport,
    MuRule, PcRecord, TermwiseReport, BOUND_TOL,
};
pub use example43::{example43_dichotomy, Example43Report};
pub use forms::RegularizerForm;
pub use lemma::{lemma_a1_residual, IdentityCheck};
