//! Covertness quantities: relative entropies, the Fisher scaling constant,
//! the hypothesis-testing lower bound, and regularity verification.

mod fisher;
mod kl;
pub mod quad;
mod regularity;

pub use fisher::{fisher_constant_analytic, fisher_constant_c, fisher_constant_quadrature};
pub use kl::{
    covertness_lower_bound, kl_poisson_counts, kl_scaled_exponential_closed_form,
    kl_scaled_renewal, kl_scaled_renewal_quadrature, KlMethod, KlResult, PoissonCountKl,
};
pub use regularity::{
    check_regularity, check_regularity_pdf, RegularityReport, Verdict, C3_RESIDUAL_TOL, C3_STEP,
};
