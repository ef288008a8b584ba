//! Scalar abstraction shared by the tensor engine and the networks.
//!
//! Everything numeric in this crate is written against [`Scalar`]; `f64` is
//! the working precision, `f32` is supported for experimentation.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};
use std::sync::atomic::{AtomicUsize, Ordering};

pub trait Scalar:
    'static
    + Copy
    + Send
    + Sync
    + Default
    + Debug
    + Display
    + LowerExp
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
{
    /// General matrix multiply `c = alpha * a * b + beta * c` over strided
    /// row/column layouts (`rs*` = row stride, `cs*` = column stride).
    ///
    /// The default is a plain triple loop; `f32`/`f64` dispatch to a
    /// blocked kernel.
    ///
    /// # Safety
    /// The pointers and strides must describe in-bounds `m×k`, `k×n` and
    /// `m×n` views, and `c` must not alias `a` or `b`.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    ) {
        for i in 0..m {
            for j in 0..n {
                let mut acc = Self::zero();
                for p in 0..k {
                    acc += *a.offset(i as isize * rsa + p as isize * csa)
                        * *b.offset(p as isize * rsb + j as isize * csb);
                }
                let dst = c.offset(i as isize * rsc + j as isize * csc);
                *dst = if beta == Self::zero() {
                    alpha * acc
                } else {
                    alpha * acc + beta * *dst
                };
            }
        }
    }

    /// Lossless widening used by the parameter file format.
    fn to_f64_exact(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }
}

impl Scalar for f64 {
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f32 {
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

static MAX_THREADS: AtomicUsize = AtomicUsize::new(1);

/// Caps the number of threads a single matrix product may use. The default
/// of 1 keeps results bitwise reproducible across machines; any fixed value
/// is reproducible on its own.
pub fn set_max_threads(n: usize) {
    MAX_THREADS.store(n.max(1), Ordering::Relaxed);
}

pub fn max_threads() -> usize {
    MAX_THREADS.load(Ordering::Relaxed)
}
