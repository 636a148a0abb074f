//! Item response theory: the 2PL and graded response models, marginal
//! maximum-likelihood fitting by EM, and response simulation.

mod fit;
mod model;
mod quadrature;
mod responses;
mod simulate;

pub use fit::{fit_2pl, fit_2pl_from, fit_grm, fit_grm_from, CategoryCollapse, FitConfig, FitResult};
pub use model::{
    category_probs_grm, log_logistic, logistic, prob_correct_2pl, DichotomousItem, GradedItem,
    ItemBank, ModelKind, BANK_SCHEMA_VERSION,
};
pub use quadrature::QuadratureGrid;
pub use responses::ResponseMatrix;
pub use simulate::simulate_responses;
