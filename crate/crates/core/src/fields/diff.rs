//! Centered finite-difference stencils of order 1..4, accuracy 2 or 4.
//!
//! On periodic axes the stencil wraps; on non-periodic axes the boundary
//! nodes inside the stencil halfwidth are marked invalid (NaN) and are
//! excluded from all interior norms.

use num_complex::Complex64;

use super::{unflatten, SampledField};
use crate::error::{NsError, Result};

/// Stencil halfwidth for a given derivative order and accuracy.
pub fn stencil_halfwidth(order: u32, accuracy: u32) -> usize {
    match (order, accuracy) {
        (1, 2) => 1,
        (1, 4) => 2,
        (2, 2) => 1,
        (2, 4) => 2,
        (3, 2) => 2,
        (3, 4) => 3,
        (4, 2) => 2,
        (4, 4) => 3,
        _ => 0,
    }
}

/// (offset, weight) pairs; the result is sum(w_k f_{i+k}) / h^order.
fn stencil(order: u32, accuracy: u32) -> Option<&'static [(isize, f64)]> {
    const D1A2: &[(isize, f64)] = &[(-1, -0.5), (1, 0.5)];
    const D1A4: &[(isize, f64)] = &[
        (-2, 1.0 / 12.0),
        (-1, -8.0 / 12.0),
        (1, 8.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    const D2A2: &[(isize, f64)] = &[(-1, 1.0), (0, -2.0), (1, 1.0)];
    const D2A4: &[(isize, f64)] = &[
        (-2, -1.0 / 12.0),
        (-1, 16.0 / 12.0),
        (0, -30.0 / 12.0),
        (1, 16.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    const D3A2: &[(isize, f64)] = &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)];
    const D3A4: &[(isize, f64)] = &[
        (-3, 1.0 / 8.0),
        (-2, -1.0),
        (-1, 13.0 / 8.0),
        (1, -13.0 / 8.0),
        (2, 1.0),
        (3, -1.0 / 8.0),
    ];
    const D4A2: &[(isize, f64)] = &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)];
    const D4A4: &[(isize, f64)] = &[
        (-3, -1.0 / 6.0),
        (-2, 2.0),
        (-1, -13.0 / 2.0),
        (0, 28.0 / 3.0),
        (1, -13.0 / 2.0),
        (2, 2.0),
        (3, -1.0 / 6.0),
    ];
    match (order, accuracy) {
        (1, 2) => Some(D1A2),
        (1, 4) => Some(D1A4),
        (2, 2) => Some(D2A2),
        (2, 4) => Some(D2A4),
        (3, 2) => Some(D3A2),
        (3, 4) => Some(D3A4),
        (4, 2) => Some(D4A2),
        (4, 4) => Some(D4A4),
        _ => None,
    }
}

/// Centered derivative of `field` along `axis`.
pub fn central_difference(
    field: &SampledField,
    axis: usize,
    order: u32,
    accuracy: u32,
) -> Result<SampledField> {
    if axis >= field.rank() {
        return Err(NsError::InvalidArgument(format!(
            "derivative axis {axis} out of range"
        )));
    }
    let weights = stencil(order, accuracy).ok_or_else(|| {
        NsError::InvalidArgument(format!(
            "unsupported derivative order {order} / accuracy {accuracy}"
        ))
    })?;
    let hw = stencil_halfwidth(order, accuracy);
    let n = field.axes[axis].count;
    if n < 2 * hw + 1 {
        return Err(NsError::InvalidArgument(format!(
            "axis {axis} has {n} nodes, stencil needs {}",
            2 * hw + 1
        )));
    }
    let h = field.axes[axis].step;
    let scale = 1.0 / h.powi(order as i32);
    let shape = field.shape();
    let strides = field.strides();
    let periodic = field.axes[axis].periodic;

    let mut out = field.clone();
    out.real = false;
    out.label = format!("d{order}_{axis}({})", field.label);
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..field.values.len() {
        unflatten(flat, &shape, &mut idx);
        let i = idx[axis];
        if !periodic && (i < hw || i + hw >= n) {
            out.values[flat] = Complex64::new(f64::NAN, f64::NAN);
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(off, w) in weights {
            let j = if periodic {
                (i as isize + off).rem_euclid(n as isize) as usize
            } else {
                (i as isize + off) as usize
            };
            let src = flat as isize + (j as isize - i as isize) * strides[axis] as isize;
            acc += field.values[src as usize] * w;
        }
        out.values[flat] = acc * scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{interior_max_abs, Grid1D};

    fn field_1d(g: Grid1D, f: impl Fn(f64) -> f64) -> SampledField {
        SampledField::from_fn(vec![g], "f", |c| Complex64::new(f(c[0]), 0.0)).unwrap()
    }

    #[test]
    fn first_derivative_exact_on_quadratic() {
        let g = Grid1D::new(-1.0, 0.25, 9, false).unwrap();
        let f = field_1d(g, |x| x * x);
        let d = central_difference(&f, 0, 1, 2).unwrap();
        for i in 1..8 {
            let x = g.node(i);
            assert!((d.values[i].re - 2.0 * x).abs() < 1e-13);
        }
        // Boundary nodes are marked invalid.
        assert!(d.values[0].re.is_nan());
        assert!(d.values[8].re.is_nan());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = Grid1D::new(0.0, 0.1, 12, false).unwrap();
        let f = field_1d(g, |_| 3.5);
        for (order, acc) in [(1u32, 2u32), (2, 2), (3, 2), (4, 2), (4, 4)] {
            let d = central_difference(&f, 0, order, acc).unwrap();
            // Weight cancellation is exact up to roundoff amplified by 1/h^order.
            let tol = 1e-13 / g.step.powi(order as i32);
            assert!(interior_max_abs(&d, &[stencil_halfwidth(order, acc)]) < tol);
        }
    }

    #[test]
    fn fourth_derivative_error_ratio_matches_taylor_order() {
        // d^4/dx^4 sin(x) on step h then h/2: the interior error must drop by
        // ~2^accuracy. Sampled at x = 0.3, shared by both grids, where the
        // leading error-term derivatives of sin do not vanish.
        // Steps stay coarse so truncation dominates the 1/h^4 roundoff.
        for (acc, expect) in [(2u32, 4.0f64), (4u32, 16.0f64)] {
            let mut errs = Vec::new();
            for n in [21usize, 41] {
                let g = Grid1D::new(-1.0, 2.0 / (n - 1) as f64, n, false).unwrap();
                let f = field_1d(g, f64::sin);
                let d = central_difference(&f, 0, 4, acc).unwrap();
                let i = ((0.3 - g.origin) / g.step).round() as usize;
                let x = g.node(i);
                errs.push((d.values[i].re - x.sin()).abs());
            }
            let ratio = errs[0] / errs[1];
            assert!(
                (ratio / expect - 1.0).abs() < 0.35,
                "acc {acc}: ratio {ratio} vs {expect}"
            );
        }
    }

    #[test]
    fn periodic_axis_wraps() {
        let n = 32;
        let g = Grid1D::new(0.0, 2.0 * std::f64::consts::PI / n as f64, n, true).unwrap();
        let f = field_1d(g, f64::sin);
        let d = central_difference(&f, 0, 1, 4).unwrap();
        for i in 0..n {
            let x = g.node(i);
            assert!((d.values[i].re - x.cos()).abs() < 2e-4);
        }
    }

    #[test]
    fn grid_too_small_rejected() {
        let g = Grid1D::new(0.0, 0.1, 4, false).unwrap();
        let f = field_1d(g, |x| x);
        assert!(central_difference(&f, 0, 4, 4).is_err());
    }
}
