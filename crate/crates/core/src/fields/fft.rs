//! FFT helpers over strided field axes and the band-limited shift.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{row_major_strides, Grid1D, SampledField};
use crate::error::{NsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FftDirection {
    Forward,
    Inverse,
}

/// Angular frequencies of an n-point DFT with sample spacing `dx`,
/// in FFT bin order (non-negative first, then negative; the Nyquist bin
/// of an even n is reported as negative).
pub fn fftfreq(n: usize, dx: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / (n as f64 * dx);
    (0..n)
        .map(|m| {
            let k = if m <= (n - 1) / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            k as f64 * base
        })
        .collect()
}

/// In-place unnormalized DFT of every lane along `axis`. The inverse
/// direction applies the 1/n normalization so that forward->inverse is
/// the identity.
pub fn fft_along_axis(
    values: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    dir: FftDirection,
) -> Result<()> {
    if axis >= shape.len() {
        return Err(NsError::InvalidArgument(format!(
            "fft axis {axis} out of range"
        )));
    }
    let n = shape[axis];
    let total: usize = shape.iter().product();
    if values.len() != total {
        return Err(NsError::InvalidArgument(
            "fft buffer does not match shape".into(),
        ));
    }
    let strides = row_major_strides(shape);
    let axis_stride = strides[axis];
    let mut planner = FftPlanner::new();
    let fft = match dir {
        FftDirection::Forward => planner.plan_fft_forward(n),
        FftDirection::Inverse => planner.plan_fft_inverse(n),
    };
    let mut lane = vec![Complex64::new(0.0, 0.0); n];
    let lanes = total / n;
    for lane_id in 0..lanes {
        // Decompose lane_id over the non-axis dimensions to find the base offset.
        let mut rem = lane_id;
        let mut base = 0usize;
        for d in (0..shape.len()).rev() {
            if d == axis {
                continue;
            }
            let i = rem % shape[d];
            rem /= shape[d];
            base += i * strides[d];
        }
        for (j, slot) in lane.iter_mut().enumerate() {
            *slot = values[base + j * axis_stride];
        }
        fft.process(&mut lane);
        let scale = if dir == FftDirection::Inverse {
            1.0 / n as f64
        } else {
            1.0
        };
        for (j, slot) in lane.iter().enumerate() {
            values[base + j * axis_stride] = slot * scale;
        }
    }
    Ok(())
}

/// Evaluates the trigonometric interpolant of `field` at `node + delta`
/// along periodic axis `a`. Exact for band-limited data.
pub fn fourier_shift(field: &SampledField, delta: f64, a: usize) -> Result<SampledField> {
    if a >= field.rank() {
        return Err(NsError::InvalidArgument(format!(
            "shift axis {a} out of range"
        )));
    }
    if !field.axes[a].periodic {
        return Err(NsError::InvalidArgument(format!(
            "fourier_shift requires a periodic axis, axis {a} is not"
        )));
    }
    let mut out = field.clone();
    let shape = field.shape();
    fft_along_axis(&mut out.values, &shape, a, FftDirection::Forward)?;
    apply_axis_multiplier(&mut out.values, &shape, a, &phase_factors(&field.axes[a], delta));
    fft_along_axis(&mut out.values, &shape, a, FftDirection::Inverse)?;
    out.real = false;
    Ok(out)
}

fn phase_factors(grid: &Grid1D, delta: f64) -> Vec<Complex64> {
    fftfreq(grid.count, grid.step)
        .into_iter()
        .map(|w| Complex64::new(0.0, w * delta).exp())
        .collect()
}

/// Multiplies every lane along `axis` pointwise by `factors`.
pub(crate) fn apply_axis_multiplier(
    values: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    factors: &[Complex64],
) {
    let mut idx = vec![0usize; shape.len()];
    for (flat, v) in values.iter_mut().enumerate() {
        super::unflatten(flat, shape, &mut idx);
        *v *= factors[idx[axis]];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid1D;

    fn wave_field(omega: f64, n: usize) -> SampledField {
        let grid = Grid1D::new(0.0, 2.0 * std::f64::consts::PI / n as f64, n, true).unwrap();
        SampledField::from_fn(vec![grid], "wave", |c| {
            Complex64::new(0.0, omega * c[0]).exp()
        })
        .unwrap()
    }

    #[test]
    fn fftfreq_layout() {
        let f = fftfreq(4, 1.0);
        let base = 2.0 * std::f64::consts::PI / 4.0;
        assert_eq!(f, vec![0.0, base, -2.0 * base, -base]);
    }

    #[test]
    fn roundtrip_is_identity() {
        let mut f = wave_field(3.0, 16);
        let orig = f.values.clone();
        let shape = f.shape();
        fft_along_axis(&mut f.values, &shape, 0, FftDirection::Forward).unwrap();
        fft_along_axis(&mut f.values, &shape, 0, FftDirection::Inverse).unwrap();
        for (a, b) in f.values.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let f = wave_field(2.0, 32);
        let shifted = fourier_shift(&f, 0.0, 0).unwrap();
        for (a, b) in shifted.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn shift_of_pure_mode_is_phase() {
        // e^{i w x} shifted by d must become e^{i w d} e^{i w x}, pointwise.
        let omega = 5.0;
        let d = 0.37;
        let f = wave_field(omega, 64);
        let shifted = fourier_shift(&f, d, 0).unwrap();
        let phase = Complex64::new(0.0, omega * d).exp();
        for (s, v) in shifted.values.iter().zip(&f.values) {
            assert!((s - phase * v).norm() <= 1e-12 * v.norm());
        }
    }

    #[test]
    fn shift_then_unshift_restores() {
        let f = wave_field(4.0, 64);
        let there = fourier_shift(&f, 1.2345, 0).unwrap();
        let back = fourier_shift(&there, -1.2345, 0).unwrap();
        let peak = f.max_abs();
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).norm() <= 1e-12 * peak);
        }
    }

    #[test]
    fn shift_requires_periodic_axis() {
        let grid = Grid1D::new(0.0, 0.1, 8, false).unwrap();
        let f = SampledField::zeros(vec![grid], "u").unwrap();
        assert!(fourier_shift(&f, 0.5, 0).is_err());
    }
}
