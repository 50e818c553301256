pub mod functor;
pub mod lifting;
pub mod lp;
pub mod numerics;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod coalgebra;
pub mod fixpoint;
#[cfg(any(test, feature = "oracle"))]
pub mod suites;
