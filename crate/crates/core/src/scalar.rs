//! Floating-point abstraction shared by every geometric routine.
//!
//! All kernels are written against [`Scalar`] so the same code runs in `f64`
//! (the default, used by the planner) and `f32` (useful for GPU-side
//! previews and for checking that nothing silently depends on double
//! precision). Tolerances that only make sense at a given precision live on
//! the trait rather than as free constants.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// floating point: f32 or f64
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Minimum ray parameter accepted as a hit (mm).
    const HIT_T_MIN: f64;
    /// Slack on barycentric coordinates.
    const BARY_EPS: f64;
    /// Cutoff on the Möller–Trumbore determinant below which a ray is parallel.
    const DET_EPS: f64;
    /// Faces with a smaller area (mm²) are degenerate.
    const AREA_EPS: f64;
    /// Two distances or ray parameters closer than this are a tie.
    const TIE_EPS: f64;

    /// Converts an `f64` literal. Every value used by this crate is representable.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 literal fits the scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    #[inline]
    fn hit_t_min() -> Self {
        Self::lit(Self::HIT_T_MIN)
    }

    #[inline]
    fn bary_eps() -> Self {
        Self::lit(Self::BARY_EPS)
    }

    #[inline]
    fn det_eps() -> Self {
        Self::lit(Self::DET_EPS)
    }

    #[inline]
    fn area_eps() -> Self {
        Self::lit(Self::AREA_EPS)
    }

    #[inline]
    fn tie_eps() -> Self {
        Self::lit(Self::TIE_EPS)
    }
}

impl Scalar for f64 {
    const HIT_T_MIN: f64 = 1e-7;
    const BARY_EPS: f64 = 1e-9;
    const DET_EPS: f64 = 1e-12;
    const AREA_EPS: f64 = 1e-12;
    const TIE_EPS: f64 = 1e-9;
}

// f32 cannot resolve the f64 slacks at millimetre scale; these are the
// equivalent few-ulp values.
impl Scalar for f32 {
    const HIT_T_MIN: f64 = 1e-4;
    const BARY_EPS: f64 = 1e-6;
    const DET_EPS: f64 = 1e-12;
    const AREA_EPS: f64 = 1e-12;
    const TIE_EPS: f64 = 1e-5;
}
