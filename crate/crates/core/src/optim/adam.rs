use crate::gaussian::NUM_PARAMS;
use crate::real::Real;

/// First and second Adam moments for one Gaussian, in flattened parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments<T> {
    pub m: [T; NUM_PARAMS],
    pub v: [T; NUM_PARAMS],
}

impl<T: Real> Moments<T> {
    pub fn zero() -> Self {
        Self {
            m: [T::zero(); NUM_PARAMS],
            v: [T::zero(); NUM_PARAMS],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    /// One update of `params` in place. `step` is 1-based and drives the bias
    /// correction.
    pub fn update<T: Real>(
        &self,
        params: &mut [T; NUM_PARAMS],
        grads: &[T; NUM_PARAMS],
        moments: &mut Moments<T>,
        lrs: &[f64; NUM_PARAMS],
        step: u64,
    ) {
        let (b1, b2) = (T::lit(self.beta1), T::lit(self.beta2));
        let bc1 = 1.0 - self.beta1.powf(step as f64);
        let bc2 = 1.0 - self.beta2.powf(step as f64);
        let eps = T::lit(self.eps);
        for i in 0..NUM_PARAMS {
            let g = grads[i];
            moments.m[i] = b1 * moments.m[i] + (T::one() - b1) * g;
            moments.v[i] = b2 * moments.v[i] + (T::one() - b2) * g * g;
            let step_size = T::lit(lrs[i] / bc1);
            let denom = (moments.v[i] / T::lit(bc2)).sqrt() + eps;
            params[i] -= step_size * moments.m[i] / denom;
        }
    }
}
