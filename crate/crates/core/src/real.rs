use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the spin algebra, waveforms and propagators are generic over.
///
/// Implemented for `f32` and `f64`. The tolerance constants scale the invariant checks
/// to the precision of the type; every acceptance tolerance is quoted for `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static {
    /// Allowed deviation of a state norm (or of `U†U` from identity) from exact.
    const NORM_TOL: f64;
    /// Allowed deviation of a user-supplied axis or SU(2) pair from unit length.
    const INPUT_TOL: f64;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f32 {
    const NORM_TOL: f64 = 1e-4;
    const INPUT_TOL: f64 = 1e-5;
}

impl Real for f64 {
    const NORM_TOL: f64 = 1e-10;
    const INPUT_TOL: f64 = 1e-9;
}
