use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exponential damping factor `exp(-lambda_bar * delta / eps^2)` over one substep
/// with the damping frozen at `lambda_bar`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpDampingWeight<T> {
    pub lambda_bar: T,
    pub epsilon: T,
    pub delta: T,
}

impl<T: Real> ExpDampingWeight<T> {
    pub fn new(lambda_bar: T, epsilon: T, delta: T) -> Result<Self> {
        if !(lambda_bar > T::zero()) || !(epsilon > T::zero()) || !(delta >= T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "damping weight needs lambda > 0, eps > 0, delta >= 0 (got {lambda_bar}, {epsilon}, {delta})"
            )));
        }
        Ok(Self { lambda_bar, epsilon, delta })
    }

    /// `lambda_bar * delta / eps^2`.
    pub fn exponent(&self) -> T {
        self.lambda_bar * self.delta / (self.epsilon * self.epsilon)
    }

    pub fn decay(&self) -> T {
        (-self.exponent()).exp()
    }

    /// `1 - decay`, accurate when the exponent is small.
    pub fn complement(&self) -> T {
        -(-self.exponent()).exp_m1()
    }
}

/// Advances the velocity over one substep of length `delta` with force and
/// damping frozen at `f_bar` and `lambda_bar`:
///
/// ```text
/// p_next = p e^{-a} + (f/lambda)(1 - e^{-a}),              a = lambda delta / eps^2
/// dx     = (f/lambda) delta + (p - f/lambda)(eps^2/lambda)(1 - e^{-a})
/// ```
///
/// Both are the exact solution of `eps^2 p' = f - lambda p`, `x' = p` for
/// constant coefficients, so the step is stable for any `delta / eps^2`.
pub fn step_momentum_exp<T: Real>(p: T, f_bar: T, lambda_bar: T, epsilon: T, delta: T, kappa0: T) -> Result<(T, T)> {
    if !(lambda_bar >= kappa0) {
        return Err(Error::DampingFloor {
            lambda: lambda_bar.to_f64_lossy(),
            kappa0: kappa0.to_f64_lossy(),
            t: f64::NAN,
            x: f64::NAN,
            y: f64::NAN,
        });
    }
    let weight = ExpDampingWeight::new(lambda_bar, epsilon, delta)?;
    let decay = weight.decay();
    let terminal = f_bar / lambda_bar;
    let p_next = p * decay + terminal * (T::one() - decay);
    let x_increment =
        terminal * delta + (p - terminal) * (epsilon * epsilon / lambda_bar) * weight.complement();
    Ok((p_next, x_increment))
}
