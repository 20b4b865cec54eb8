//! Exact identities and explicit constants: shuffle products over simplices,
//! the Dirichlet-type simplex integral, the iteration kernels `𝓗`, `𝓗̃`, the
//! smallness assumptions and the resulting Malliavin bounds.

mod assumptions;
mod bounds;
mod kernel;
mod shuffle;
mod simplex;

pub use assumptions::{check_assumptions, compute_aj, l1_ceiling, AssumptionInput, AssumptionReport, HurstVerdict, Regime};
pub use bounds::{default_beta, malliavin_bounds, BoundReport};
pub use kernel::{h_kernel, h_tilde_kernel};
pub use shuffle::{
    double_shuffle_map, shuffle_product_check, shuffle_square_check, shuffles, simplex_monomial_integral, Monomial, ShuffleCheck, ShuffleSet, PRODUCT_CAP, SHUFFLE_CAP,
};
pub use simplex::{simplex_integral_closed, simplex_integral_quadrature, SimplexSpec};
