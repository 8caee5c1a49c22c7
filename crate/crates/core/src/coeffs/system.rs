use sha2::{Digest, Sha256};

use super::expr::{Expr, Var};
use super::parser::parse_expr;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Names accepted by [`builtin_system`].
pub const BUILTIN_SYSTEMS: [&str; 2] = ["example1", "example2"];

/// Scalar fast–slow system
///
/// ```text
/// eps^2 X'' = F(t,X,Y) - lambda(t,X,Y) X'
/// dY        = b(t,X,Y)/eps dt + sigma(t,X,Y)/sqrt(eps) dB
/// ```
///
/// with a declared damping floor `kappa0 > 0`. Every evaluation of `lambda`
/// made through [`FastSlowSystem::damping`] is checked against the floor.
#[derive(Clone, Debug, PartialEq)]
pub struct FastSlowSystem<T> {
    pub name: String,
    pub force: Expr,
    pub damping: Expr,
    pub drift: Expr,
    pub diffusion: Expr,
    pub kappa0: T,
}

impl<T: Real> FastSlowSystem<T> {
    pub fn new(
        name: impl Into<String>,
        force: Expr,
        damping: Expr,
        drift: Expr,
        diffusion: Expr,
        kappa0: T,
    ) -> Result<Self> {
        if !(kappa0 > T::zero()) || !kappa0.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa0 must be positive and finite, got {kappa0}")));
        }
        Ok(Self { name: name.into(), force, damping, drift, diffusion, kappa0 })
    }

    /// Builds a system from expression sources.
    pub fn from_sources(name: impl Into<String>, f: &str, lambda: &str, b: &str, sigma: &str, kappa0: T) -> Result<Self> {
        let parse = |what: &str, src: &str| parse_expr(src).map_err(|e| Error::from(e).context(format!("coefficient `{what}`")));
        Self::new(
            name,
            parse("F", f)?,
            parse("lambda", lambda)?,
            parse("b", b)?,
            parse("sigma", sigma)?,
            kappa0,
        )
    }

    /// Same system with the fast diffusion amplitude replaced.
    pub fn with_diffusion(mut self, sigma: Expr) -> Self {
        self.diffusion = sigma;
        self
    }

    pub fn with_force(mut self, force: Expr) -> Self {
        self.force = force;
        self
    }

    pub fn with_damping(mut self, damping: Expr) -> Self {
        self.damping = damping;
        self
    }

    pub fn force(&self, t: T, x: T, y: T) -> Result<T> {
        Ok(self.force.eval(t, x, y)?)
    }

    /// Damping coefficient; fails if it falls below `kappa0`.
    pub fn damping(&self, t: T, x: T, y: T) -> Result<T> {
        let lambda = self.damping.eval(t, x, y)?;
        if !(lambda >= self.kappa0) {
            return Err(Error::DampingFloor {
                lambda: lambda.to_f64_lossy(),
                kappa0: self.kappa0.to_f64_lossy(),
                t: t.to_f64_lossy(),
                x: x.to_f64_lossy(),
                y: y.to_f64_lossy(),
            });
        }
        Ok(lambda)
    }

    /// Reduced (first-order) drift `F/lambda`.
    pub fn reduced_drift(&self, t: T, x: T, y: T) -> Result<T> {
        Ok(self.force(t, x, y)? / self.damping(t, x, y)?)
    }

    pub fn fast_drift(&self, t: T, x: T, y: T) -> Result<T> {
        Ok(self.drift.eval(t, x, y)?)
    }

    pub fn fast_diffusion(&self, t: T, x: T, y: T) -> Result<T> {
        Ok(self.diffusion.eval(t, x, y)?)
    }

    /// `Sigma = sigma^2`.
    pub fn diffusion_matrix(&self, t: T, x: T, y: T) -> Result<T> {
        let s = self.fast_diffusion(t, x, y)?;
        Ok(s * s)
    }

    /// Whether the fast dynamics `(b, sigma)` read the slow coordinate.
    pub fn fast_depends_on_slow(&self) -> bool {
        self.drift.depends_on(Var::X) || self.diffusion.depends_on(Var::X)
    }

    pub fn fast_depends_on_time(&self) -> bool {
        self.drift.depends_on(Var::T) || self.diffusion.depends_on(Var::T)
    }

    /// Canonical text used for hashing and manifests.
    pub fn canonical(&self) -> String {
        format!(
            "F={};lambda={};b={};sigma={};kappa0={}",
            self.force,
            self.damping,
            self.drift,
            self.diffusion,
            self.kappa0.to_f64_lossy()
        )
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Built-in example systems.
///
/// * `example1`: `F = -(1+y) x`, `lambda = 1`, `b = -y`, `sigma = 1`.
/// * `example2`: `F = -(1+y^2) x`, `lambda = 1`, `b = -(1+x^2) y`, `sigma = 2 + sin(x)`.
///
/// Both declare `kappa0 = 1`.
pub fn builtin_system<T: Real>(name: &str) -> Result<FastSlowSystem<T>> {
    match name {
        "example1" => FastSlowSystem::from_sources(name, "-(1+y)*x", "1", "-y", "1", T::one()),
        "example2" => FastSlowSystem::from_sources(name, "-(1+y^2)*x", "1", "-(1+x^2)*y", "2+sin(x)", T::one()),
        other => Err(Error::UnknownSystem { name: other.to_string(), available: BUILTIN_SYSTEMS.join(", ") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_values() {
        let s = builtin_system::<f64>("example1").unwrap();
        assert_eq!(s.force(0.0, 2.0, 1.0).unwrap(), -4.0);
        for (x, y) in [(0.3, -1.0), (5.0, 2.0)] {
            assert_eq!(s.fast_diffusion(0.0, x, y).unwrap(), 1.0);
        }
        assert!(!s.fast_depends_on_slow());
    }

    #[test]
    fn example2_values() {
        let s = builtin_system::<f64>("example2").unwrap();
        assert_eq!(s.fast_drift(0.0, 1.0, 3.0).unwrap(), -6.0);
        assert_eq!(s.fast_diffusion(0.0, 0.0, 7.0).unwrap(), 2.0);
        assert!(s.fast_depends_on_slow());
    }

    #[test]
    fn unknown_builtin_lists_available() {
        let err = builtin_system::<f64>("example3").unwrap_err();
        match err {
            Error::UnknownSystem { name, available } => {
                assert_eq!(name, "example3");
                assert!(available.contains("example1") && available.contains("example2"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn damping_floor_is_enforced() {
        let s = FastSlowSystem::<f64>::from_sources("floor", "-x", "x", "-y", "1", 0.5).unwrap();
        assert_eq!(s.damping(0.0, 0.7, 0.0).unwrap(), 0.7);
        assert!(matches!(s.damping(0.0, 0.2, 0.0), Err(Error::DampingFloor { .. })));
    }

    #[test]
    fn kappa0_must_be_positive() {
        assert!(FastSlowSystem::<f64>::from_sources("bad", "0", "1", "-y", "1", 0.0).is_err());
        assert!(FastSlowSystem::<f64>::from_sources("bad", "0", "1", "-y", "1", -1.0).is_err());
    }

    #[test]
    fn fingerprint_is_stable() {
        let a = builtin_system::<f64>("example1").unwrap();
        let b = builtin_system::<f64>("example1").unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = builtin_system::<f64>("example2").unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
