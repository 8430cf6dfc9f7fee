//! Arbitrary-length discrete Fourier transform on top of `rustfft`.
//!
//! Convention: `forward` computes `X_ℓ = Σ_j x_j e^{−2πi ℓj/M}` without
//! normalization, `inverse` computes `x_j = (1/M) Σ_ℓ X_ℓ e^{+2πi ℓj/M}`.
//! rustfft picks mixed-radix kernels for smooth lengths and Rader or
//! Bluestein for large prime factors, so every length costs `O(M log M)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and backward plans for one length.
#[derive(Clone)]
pub struct DftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        DftPlan {
            len,
            forward: planner.plan_fft_forward(len),
            backward: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(
            data.len(),
            self.len,
            "buffer length does not match the plan"
        );
        if self.len > 1 {
            self.forward.process(data);
        }
    }

    /// `Σ_ℓ X_ℓ e^{+2πi ℓj/M}` without the `1/M` factor, in place.
    pub fn backward_unnormalized(&self, data: &mut [Complex64]) {
        assert_eq!(
            data.len(),
            self.len,
            "buffer length does not match the plan"
        );
        if self.len > 1 {
            self.backward.process(data);
        }
    }

    /// Normalized inverse transform, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.backward_unnormalized(data);
        let scale = 1.0 / self.len.max(1) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Forward DFT of a copy of `data`.
pub fn dft_forward(data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    DftPlan::new(out.len()).forward(&mut out);
    out
}

/// Inverse DFT (with the `1/M` factor) of a copy of `data`.
pub fn dft_inverse(data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    DftPlan::new(out.len()).inverse(&mut out);
    out
}
