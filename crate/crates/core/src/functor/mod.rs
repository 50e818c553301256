//! Functor expressions, F-structures over finite carriers, evaluation
//! functions and coupling enumeration.

mod coupling;
mod eval;
mod expr;
mod metric;
mod structure;

pub use coupling::{
    enumerate_couplings_diagsquare, enumerate_couplings_finpow, projections, CouplingError,
    CouplingSet, DEFAULT_MAX_CELLS,
};
pub use eval::{eval_functor, eval_on_states, Leaf};
pub use expr::{ConstSpace, FunctorError, FunctorExpr, ProductEval, UNIT_ATOM};
pub use metric::{MetricError, PseudometricTable};
pub use structure::{FStructure, ShapeError, Side};
