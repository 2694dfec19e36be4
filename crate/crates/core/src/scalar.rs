//! Numeric traits shared by the generic parts of the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Floating point scalar used by the dense-network engine and the crowding
/// distance (anything that needs `sqrt`, `exp` or infinities).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for `f32`/`f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Value type of an objective coordinate.
///
/// Dominance, sorting and hypervolume only need ordering and ring arithmetic,
/// so this admits exact types such as `num_rational::Ratio<i64>` alongside the
/// floats. Values must be totally ordered in practice (no NaN).
pub trait Objective: Num + Copy + PartialOrd + Debug {}

impl<T: Num + Copy + PartialOrd + Debug> Objective for T {}
