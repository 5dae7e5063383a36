//! Two-stage pulse search: LD screening, simplex refinement, full-solver
//! refinement, sensitivity scoring and Pareto selection.

mod calibrate;
mod golden;
pub mod nelder_mead;
mod search;

pub use calibrate::{calibrate_config, calibrate_phase};
pub use golden::golden_section;
pub use search::{
    ld_score, local_optimize, pareto_select, refine_full, run_search, seed_candidates, sensitivity, Candidate,
    Jitter, LdScore, SearchSpace, SolutionSet, AREA_REFERENCE,
};
