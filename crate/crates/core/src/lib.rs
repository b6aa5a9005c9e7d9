//! Decorated rooted trees and the algebraic machinery of B-series for
//! singular SPDEs: grafting products, coproducts and their convolution
//! products, symbolic elementary differentials, composition and substitution
//! of tree series, and a small numerical realization of the recentred
//! integral maps on a periodic grid.
//!
//! All algebraic modules work over exact rationals; the numerical module is
//! the only place floating point appears.

pub mod classical;
pub mod coalgebra;
pub mod elem_diff;
pub mod enumerate;
pub mod equation;
pub mod error;
pub mod grafting;
pub mod model;
pub mod multiindex;
pub mod rational;
pub mod series;
pub mod tree;
pub mod verify;

pub use equation::{EdgeDecoration, EquationSpec, KernelLabel, NoiseLabel};
pub use error::{AlgebraError, ModelError};
pub use multiindex::MultiIndex;
pub use rational::Q;
pub use tree::{DecoratedTree, Forest, ForestCombination, TreeCombination};
