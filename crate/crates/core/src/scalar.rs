// SPDX-License-Identifier: MIT
//! Floating-point scalar abstraction for the numerical modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type (`f32` or `f64`) used by the numerical parts of the crate.
///
/// Linear algebra goes through nalgebra's [`RealField`]; conversions to and
/// from `f64` (for random draws, tolerances and serialization) go through
/// num-traits.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Convert from `f64`; infallible for the supported types.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every supported scalar")
    }

    /// Convert to `f64`; infallible for the supported types.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("supported scalars convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
