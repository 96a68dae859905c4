//! Functional side: nonincreasing ρ with generalized inverses, lattice
//! functions, function polarity, the layer-cake right-hand side, the
//! Prékopa–Leindler verifier, orthant inequalities and set/function lifts.

mod checks;
mod grid;
mod rho;

pub use checks::{
    check_function_polarity, conjectured_rhs, default_lattice, full_space_from_orthants, lift_from_bodies, orthant_rhs_integral,
    prekopa_leindler_check, prekopa_leindler_check_fn, layer_cake_pipeline, relaxed_bound_check, superlevel_hull_volume,
    superlevel_polytope, weighted_orthant_check, FullSpaceReport, FunctionPolarityVerdict, FunctionSamplerCfg, OrthantParams,
    OrthantReport, PrekopaLeindlerReport, LayerCakeReport, RelaxedBoundReport, Table1D,
};
pub use grid::{format_grid, parse_grid, read_grid, write_grid, EvenFunction, ExpLp, GridFunction, Indicator};
pub use rho::{RhoFunction, REGULARIZATION_EPS};

#[cfg(test)]
mod tests;
