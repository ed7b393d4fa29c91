//! Scalar abstraction shared by the numerical kernels.
//!
//! Quadrature, dense LU, the phase-matrix machinery and the embedded
//! Runge-Kutta stepper are written once over [`Real`] and instantiated for
//! `f32` and `f64`. The physical layers (models, self-energy, spectral
//! search, dynamics) are pinned to `f64`; their tolerances are calibrated in
//! double precision.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Real floating-point scalar usable by the generic kernels.
pub trait Real: Float + FloatConst + NumAssign + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as num_traits::NumCast>::from(x).expect("literal representable in scalar type")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn from_usize(n: usize) -> Self {
        <Self as num_traits::NumCast>::from(n).expect("count representable in scalar type")
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Float + FloatConst + NumAssign + Debug + Display + Default + Send + Sync + 'static {}

/// `e^{iθ}` for a complex argument θ, i.e. `exp(i·z)`.
#[inline]
pub fn expi<T: Real>(z: Complex<T>) -> Complex<T> {
    (Complex::<T>::i() * z).exp()
}

/// Principal square root, `√ζ = √|ζ|·e^{i·arg(ζ)/2}` with `arg ∈ (−π, π]`.
///
/// Every branch-sensitive evaluation in the crate goes through this helper.
/// A negative real argument carrying a signed zero imaginary part is mapped
/// to the `arg = π` side, so `√(−x − 0i) = +i√x`.
#[inline]
pub fn principal_sqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.norm();
    if r == T::zero() {
        return Complex::new(T::zero(), T::zero());
    }
    let mut arg = z.im.atan2(z.re);
    if arg == -T::PI() {
        arg = T::PI();
    }
    let half = T::lit(0.5);
    Complex::from_polar(r.sqrt(), arg * half)
}
