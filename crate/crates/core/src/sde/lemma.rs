use serde::{Deserialize, Serialize};

use crate::coeffs::Expr;
use crate::error::{Error, Result};
use crate::quad::{gauss_legendre3, simpson_uniform};
use crate::scalar::Real;

/// Both sides of the integration-by-parts identity for a deterministic weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport<T> {
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    /// Number of Simpson intervals used.
    pub intervals: usize,
}

fn five_point_derivative<T: Real>(f: &Expr, s: T, h: T) -> Result<T> {
    let two = T::lit(2.0);
    let v = |x: T| f.eval_in_time(x).map_err(Error::from);
    Ok((v(s - two * h)? - T::lit(8.0) * v(s - h)? + T::lit(8.0) * v(s + h)? - v(s + two * h)?) / (T::lit(12.0) * h))
}

/// Checks, for `u, g, w` functions of `s` with `w > 0`,
///
/// ```text
/// (1/ε²) ∫₀ᵗ u I ds = ∫ u g / w + ∫ (u'/w) I − (u/w)(t) I(t) − ∫ (u/w²) I w' ds
/// ```
///
/// where `I(s) = ∫₀ˢ exp(−(1/ε²) ∫ᵣˢ w) g(r) dr`. `I` is built cell by cell
/// with nested Gauss–Legendre rules; the outer integrals use composite Simpson
/// on a grid no coarser than `quad_step`.
pub fn check_integration_by_parts<T: Real>(
    u: &Expr,
    g: &Expr,
    w: &Expr,
    epsilon: T,
    t: T,
    quad_step: T,
) -> Result<LemmaReport<T>> {
    if !(epsilon > T::zero()) || !(quad_step > T::zero()) || !(t >= T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "need epsilon > 0, quad_step > 0, t >= 0; got {epsilon}, {quad_step}, {t}"
        )));
    }
    if t == T::zero() {
        return Ok(LemmaReport { lhs: T::zero(), rhs: T::zero(), residual: T::zero(), intervals: 0 });
    }
    let mut n = (t / quad_step - T::lit(1e-9)).ceil().max(T::one()).to_usize().unwrap_or(2);
    if n % 2 == 1 {
        n += 1;
    }
    let ds = t / T::from_usize_lossy(n);
    let inv_e2 = T::one() / (epsilon * epsilon);
    let nodes: Vec<T> = (0..=n).map(|i| if i == n { t } else { T::from_usize_lossy(i) * ds }).collect();

    let weight = |s: T| -> Result<T> {
        let v = w.eval_in_time(s)?;
        if v > T::zero() && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveWeight { s: s.to_f64_lossy(), value: v.to_f64_lossy() })
        }
    };
    let source = |s: T| -> Result<T> { Ok(g.eval_in_time(s)?) };

    // I on the grid
    let mut inner = Vec::with_capacity(n + 1);
    inner.push(T::zero());
    for k in 0..n {
        let (a, b) = (nodes[k], nodes[k + 1]);
        let cell_weight = gauss_legendre3(a, b, weight)?;
        let fresh = gauss_legendre3(a, b, |r| {
            let tail = gauss_legendre3(r, b, weight)?;
            Ok((-inv_e2 * tail).exp() * source(r)?)
        })?;
        inner.push((-inv_e2 * cell_weight).exp() * inner[k] + fresh);
    }

    let fd_step = T::lit(1e-3);
    let mut lhs_f = Vec::with_capacity(n + 1);
    let mut ug_w = Vec::with_capacity(n + 1);
    let mut du_term = Vec::with_capacity(n + 1);
    let mut dw_term = Vec::with_capacity(n + 1);
    for (&s, &i_s) in nodes.iter().zip(&inner) {
        let uv = u.eval_in_time(s)?;
        let wv = weight(s)?;
        let gv = source(s)?;
        let du = five_point_derivative(u, s, fd_step)?;
        let dw = five_point_derivative(w, s, fd_step)?;
        lhs_f.push(inv_e2 * uv * i_s);
        ug_w.push(uv * gv / wv);
        du_term.push(du / wv * i_s);
        dw_term.push(uv / (wv * wv) * i_s * dw);
    }
    let lhs = simpson_uniform(&lhs_f, ds)?;
    let boundary = u.eval_in_time(t)? / weight(t)? * inner[n];
    let rhs = simpson_uniform(&ug_w, ds)? + simpson_uniform(&du_term, ds)? - boundary - simpson_uniform(&dw_term, ds)?;
    Ok(LemmaReport { lhs, rhs, residual: (lhs - rhs).abs(), intervals: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::parse_expr;

    fn e(src: &str) -> Expr {
        parse_expr(src).unwrap()
    }

    #[test]
    fn constant_triple_is_exact() {
        let r = check_integration_by_parts(&e("1"), &e("1"), &e("1"), 0.3, 1.0, 1e-4).unwrap();
        let exact = 1.0 - 0.09 * (1.0 - (-1.0f64 / 0.09).exp());
        assert!((r.lhs - exact).abs() < 1e-10, "{}", r.lhs);
        assert!(r.residual <= 1e-10, "{}", r.residual);
    }

    #[test]
    fn zero_horizon() {
        let r = check_integration_by_parts(&e("s"), &e("1"), &e("1"), 0.3, 0.0, 1e-4).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn smooth_triple() {
        let r = check_integration_by_parts(&e("sin(s)+2"), &e("cos(s)"), &e("2+sin(s)"), 0.5, 1.0, 1e-4).unwrap();
        assert!(r.residual <= 1e-6, "{}", r.residual);
    }

    #[test]
    fn nonpositive_weight_is_rejected() {
        let err = check_integration_by_parts(&e("1"), &e("1"), &e("s-0.5"), 0.3, 1.0, 1e-2).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { .. }));
    }
}
