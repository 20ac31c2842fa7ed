//! Licensing interactions and the inferential statistics run on them.
//!
//! Sum coding uses +/-0.5: `wh` is +0.5 when the licensor is present, `gap` is
//! +0.5 when the gap is present. The interaction regressor `wh:gap` is
//! `-(x_wh * x_gap)`, so its coefficient is the licensing interaction
//! `(S_b - S_a) - (S_d - S_c)` in bits rather than its negative.

mod analyses;
mod ci;
mod interaction;
mod mixed;

use thiserror::Error;

pub use analyses::{
    interaction_design, island_contrast, length_slope, licensing_fit, CellObservation, IslandContrast, LevelReduction,
    PairedTest,
};
pub use ci::{paired_t_interval, within_item_ci, ContrastCI, WithinItemCIs};
pub use interaction::{licensing_interaction, positive_share, InteractionRecord};
pub use mixed::{fit_mixed, wald_p, FitMethod, MixedFit};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("need at least {need} items, got {got}")]
    TooFewItems { need: usize, got: usize },
    #[error("design matrix is rank deficient (rank {rank} < {cols} columns){}", hint(.detail))]
    RankDeficient { rank: usize, cols: usize, detail: String },
    #[error("mixed model did not converge: {0}")]
    NonConvergence(String),
    #[error("unknown coefficient {0:?}")]
    UnknownCoefficient(String),
    #[error("unbalanced or incomplete data: {0}")]
    Unbalanced(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("missing baseline level: {0}")]
    MissingBaseline(String),
}

fn hint(detail: &str) -> String {
    if detail.is_empty() {
        String::new()
    } else {
        format!(": {detail}")
    }
}
