//! Symmetric convex bodies: V- and H-polytopes, membership oracles, Steiner
//! symmetrization and linear images.

mod io;
mod oracle;
mod polytope;
mod steiner;

pub use io::{
    format_halfspaces, format_polytope, parse_halfspaces, parse_polytope, read_halfspaces, read_polytope,
    write_halfspaces, write_polytope,
};
pub use oracle::{make_lp_ball, Body, BodyOracle, MemberFn, OracleKind, SymmetryClass};
pub use polytope::{Boundedness, HalfspacePolytope, SymmetricPolytope};
pub use steiner::{steiner_symmetrize, unconditionalize, unconditionalize_sweep, SweepOutcome, UNCONDITIONAL_TOL};

#[cfg(test)]
mod tests;
