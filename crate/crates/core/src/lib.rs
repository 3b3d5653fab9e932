//! Covering lemmas, truncated Hardy–Littlewood maximal operators and a local
//! Calderón–Zygmund theory on finite metric measure spaces, with every
//! quantitative conclusion checked against its explicit constant.

pub mod covering;
pub mod czd;
pub mod error;
pub mod exponent;
pub mod function;
pub mod interp;
pub mod kernel;
pub mod maximal;
pub mod mixed;
pub mod operator;
pub mod report;
pub mod space;
pub mod suite;

pub use error::{Error, Result};
pub use exponent::Exponent;
pub use function::{FunctionOnSpace, VecNorm};
pub use report::BoundReport;
pub use space::{Ball, MetricMeasureSpace};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/coverings.md")]
    mod coverings {}
    #[doc = include_str!("../../../book/src/maximal.md")]
    mod maximal {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/interpolation.md")]
    mod interpolation {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/mixed.md")]
    mod mixed {}
    #[doc = include_str!("../../../book/src/suite.md")]
    mod suite {}
}
