//! Local quintic (6-point Lagrange) interpolation on uniform grids.
//!
//! Periodic axes wrap the stencil; non-periodic axes shift it one-sided
//! near the boundary. Evaluation outside a non-periodic axis range is an
//! out-of-domain error.

use num_complex::Complex64;

use super::{unflatten, SampledField};
use crate::error::{NsError, Result};

const POINTS: usize = 6;

/// Stencil start index and the fractional position of `x` on `grid`.
fn locate(grid: &super::Grid1D, x: f64) -> Result<(usize, f64)> {
    let t = (x - grid.origin) / grid.step;
    let n = grid.count;
    if grid.periodic {
        let tw = t.rem_euclid(n as f64);
        let i0 = tw.floor() as isize - (POINTS as isize / 2 - 1);
        return Ok((i0.rem_euclid(n as isize) as usize, tw));
    }
    if t < -1e-9 || t > (n - 1) as f64 + 1e-9 {
        return Err(NsError::OutOfDomain {
            detail: format!(
                "coordinate {x} outside grid [{}, {}]",
                grid.origin,
                grid.last()
            ),
            nodes: vec![],
        });
    }
    let t = t.clamp(0.0, (n - 1) as f64);
    if n < POINTS {
        return Err(NsError::InvalidArgument(format!(
            "interpolation needs at least {POINTS} nodes, axis has {n}"
        )));
    }
    let i0 = (t.floor() as isize - (POINTS as isize / 2 - 1))
        .clamp(0, (n - POINTS) as isize) as usize;
    Ok((i0, t))
}

/// Lagrange weights for the nodes i0..i0+5 at fractional position t
/// (both in index units; for periodic axes `rel` is t - i0 mod n).
fn weights(rel: f64) -> [f64; POINTS] {
    let mut w = [0.0; POINTS];
    for (j, wj) in w.iter_mut().enumerate() {
        let mut p = 1.0;
        for k in 0..POINTS {
            if k != j {
                p *= (rel - k as f64) / (j as f64 - k as f64);
            }
        }
        *wj = p;
    }
    w
}

/// Interpolates `field` at the point `coords` (one coordinate per axis).
pub fn interpolate(field: &SampledField, coords: &[f64]) -> Result<Complex64> {
    if coords.len() != field.rank() {
        return Err(NsError::InvalidArgument(format!(
            "expected {} coordinates, got {}",
            field.rank(),
            coords.len()
        )));
    }
    let mut starts = Vec::with_capacity(field.rank());
    let mut wts: Vec<[f64; POINTS]> = Vec::with_capacity(field.rank());
    for (d, &x) in coords.iter().enumerate() {
        let g = &field.axes[d];
        let (i0, t) = locate(g, x)?;
        let rel = if g.periodic {
            let raw = t - i0 as f64;
            raw.rem_euclid(g.count as f64)
        } else {
            t - i0 as f64
        };
        starts.push(i0);
        wts.push(weights(rel));
    }

    let rank = field.rank();
    let shape = field.shape();
    let strides = field.strides();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut local = vec![0usize; rank];
    let cells = POINTS.pow(rank as u32);
    let local_shape = vec![POINTS; rank];
    for cell in 0..cells {
        unflatten(cell, &local_shape, &mut local);
        let mut w = 1.0;
        let mut flat = 0usize;
        for d in 0..rank {
            w *= wts[d][local[d]];
            let mut i = starts[d] + local[d];
            if field.axes[d].periodic {
                i %= shape[d];
            }
            flat += i * strides[d];
        }
        acc += field.values[flat] * w;
    }
    Ok(acc)
}
