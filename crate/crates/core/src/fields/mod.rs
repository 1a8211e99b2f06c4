//! Uniform grids, complex sampled fields, Fourier utilities,
//! finite-difference stencils, and field persistence.

mod diff;
mod fft;
mod interp;
mod io;

pub use diff::{central_difference, stencil_halfwidth};
pub use fft::{fft_along_axis, fftfreq, fourier_shift, FftDirection};
pub use interp::interpolate;
pub use io::{export_csv, load_field, store_field};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NsError, Result};

/// Maximum imaginary fraction a field flagged `real` may carry.
pub const REAL_FLAG_TOL: f64 = 1e-13;

/// Relative edge magnitude above which spectral data is considered
/// under-resolved on a periodic-for-FFT axis.
pub const EDGE_DECAY_TOL: f64 = 1e-10;

/// A uniform one-dimensional grid: `node(i) = origin + i*step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub origin: f64,
    pub step: f64,
    pub count: usize,
    pub periodic: bool,
}

impl Grid1D {
    pub fn new(origin: f64, step: f64, count: usize, periodic: bool) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(NsError::InvalidArgument(format!(
                "grid step must be positive and finite, got {step}"
            )));
        }
        if count < 2 {
            return Err(NsError::InvalidArgument(format!(
                "grid needs at least 2 nodes, got {count}"
            )));
        }
        Ok(Grid1D {
            origin,
            step,
            count,
            periodic,
        })
    }

    /// Symmetric grid of `count` nodes spanning roughly [-extent/2, extent/2].
    pub fn symmetric(extent: f64, count: usize, periodic: bool) -> Result<Self> {
        let step = extent / count as f64;
        Grid1D::new(-extent / 2.0, step, count, periodic)
    }

    pub fn node(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.node(i))
    }

    pub fn last(&self) -> f64 {
        self.node(self.count - 1)
    }

    /// Full period length when the grid is treated as periodic.
    pub fn period(&self) -> f64 {
        self.step * self.count as f64
    }
}

/// Complex scalar field sampled on a rank-1..4 tensor grid, row-major
/// over the axes. A field flagged `real` promises |Im| <= 1e-13 * max |value|.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub axes: Vec<Grid1D>,
    pub values: Vec<Complex64>,
    pub label: String,
    pub real: bool,
}

impl SampledField {
    pub fn new(axes: Vec<Grid1D>, values: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 4 {
            return Err(NsError::InvalidArgument(format!(
                "field rank must be 1..=4, got {}",
                axes.len()
            )));
        }
        let n: usize = axes.iter().map(|a| a.count).product();
        if values.len() != n {
            return Err(NsError::InvalidArgument(format!(
                "value count {} does not match grid size {}",
                values.len(),
                n
            )));
        }
        Ok(SampledField {
            axes,
            values,
            label: label.into(),
            real: false,
        })
    }

    pub fn zeros(axes: Vec<Grid1D>, label: impl Into<String>) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.count).product();
        SampledField::new(axes, vec![Complex64::new(0.0, 0.0); n], label)
    }

    /// Samples `f` at every grid node. The closure receives the node
    /// coordinates in axis order.
    pub fn from_fn(
        axes: Vec<Grid1D>,
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        let mut field = SampledField::zeros(axes, label)?;
        let shape = field.shape();
        let mut idx = vec![0usize; shape.len()];
        let mut coords = vec![0.0f64; shape.len()];
        for flat in 0..field.values.len() {
            unflatten(flat, &shape, &mut idx);
            for (d, &i) in idx.iter().enumerate() {
                coords[d] = field.axes[d].node(i);
            }
            field.values[flat] = f(&coords);
        }
        Ok(field)
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    /// Row-major strides matching `shape()`.
    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape())
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        let strides = self.strides();
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max)
    }

    /// Largest |Im| over the field, relative to the peak magnitude.
    pub fn imag_fraction(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let worst = self
            .values
            .iter()
            .map(|v| v.im.abs())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        worst / peak
    }

    /// Sets the `real` flag when the invariant holds; returns the measured
    /// imaginary fraction either way.
    pub fn flag_real(&mut self) -> f64 {
        let frac = self.imag_fraction();
        self.real = frac <= REAL_FLAG_TOL;
        frac
    }

    /// Relative magnitude of the field on the boundary nodes of axis `a`.
    pub fn edge_fraction(&self, a: usize) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let shape = self.shape();
        let mut idx = vec![0usize; shape.len()];
        let mut worst: f64 = 0.0;
        for flat in 0..self.values.len() {
            unflatten(flat, &shape, &mut idx);
            if idx[a] == 0 || idx[a] == shape[a] - 1 {
                worst = worst.max(self.values[flat].norm());
            }
        }
        worst / peak
    }
}

/// Evolution parameters of the two lowest hierarchy subsets.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TimeVector {
    pub t_shift: [f64; 3],
    pub t_dual: [f64; 3],
}

impl TimeVector {
    pub fn is_finite(&self) -> bool {
        self.t_shift.iter().chain(self.t_dual.iter()).all(|t| t.is_finite())
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}

pub(crate) fn unflatten(flat: usize, shape: &[usize], idx: &mut [usize]) {
    let mut rem = flat;
    for d in (0..shape.len()).rev() {
        idx[d] = rem % shape[d];
        rem /= shape[d];
    }
}

/// Max |value| over interior nodes, skipping NaN-marked entries and a
/// per-axis margin of `margins[d]` nodes on non-periodic axes.
pub fn interior_max_abs(field: &SampledField, margins: &[usize]) -> f64 {
    interior_fold(field, margins, 0.0, |acc, v| acc.max(v.norm()))
}

/// L2 norm (root mean square) over the same interior nodes.
pub fn interior_l2(field: &SampledField, margins: &[usize]) -> f64 {
    let mut count = 0usize;
    let sum = interior_fold(field, margins, 0.0, |acc, v| {
        count += 1;
        acc + v.norm_sqr()
    });
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

fn interior_fold<A>(
    field: &SampledField,
    margins: &[usize],
    init: A,
    mut f: impl FnMut(A, Complex64) -> A,
) -> A {
    let shape = field.shape();
    let mut idx = vec![0usize; shape.len()];
    let mut acc = init;
    'outer: for flat in 0..field.values.len() {
        unflatten(flat, &shape, &mut idx);
        for d in 0..shape.len() {
            if !field.axes[d].periodic {
                let m = margins.get(d).copied().unwrap_or(0);
                if idx[d] < m || idx[d] + m >= shape[d] {
                    continue 'outer;
                }
            }
        }
        let v = field.values[flat];
        if v.re.is_nan() || v.im.is_nan() {
            continue;
        }
        acc = f(acc, v);
    }
    acc
}

/// Pointwise combination of two fields on identical axes.
pub fn zip_map(
    a: &SampledField,
    b: &SampledField,
    label: impl Into<String>,
    f: impl Fn(Complex64, Complex64) -> Complex64,
) -> Result<SampledField> {
    if a.axes != b.axes {
        return Err(NsError::GridMismatch(format!(
            "fields '{}' and '{}' live on different grids",
            a.label, b.label
        )));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| f(x, y))
        .collect();
    SampledField::new(a.axes.clone(), values, label)
}

/// Pointwise map of one field.
pub fn map_values(
    a: &SampledField,
    label: impl Into<String>,
    f: impl Fn(Complex64) -> Complex64,
) -> Result<SampledField> {
    SampledField::new(a.axes.clone(), a.values.iter().map(|&x| f(x)).collect(), label)
}

/// Extracts the rank-(n-1) field at `index` along `axis`.
pub fn slice_axis(field: &SampledField, axis: usize, index: usize) -> Result<SampledField> {
    if axis >= field.rank() {
        return Err(NsError::InvalidArgument(format!(
            "axis {axis} out of range for rank {}",
            field.rank()
        )));
    }
    if field.rank() == 1 {
        return Err(NsError::InvalidArgument(
            "cannot slice a rank-1 field".into(),
        ));
    }
    let shape = field.shape();
    if index >= shape[axis] {
        return Err(NsError::InvalidArgument(format!(
            "slice index {index} out of range {}",
            shape[axis]
        )));
    }
    let mut out_axes = field.axes.clone();
    out_axes.remove(axis);
    let mut out = SampledField::zeros(out_axes, field.label.clone())?;
    let out_shape = out.shape();
    let mut out_idx = vec![0usize; out_shape.len()];
    let mut full_idx = vec![0usize; shape.len()];
    for flat in 0..out.values.len() {
        unflatten(flat, &out_shape, &mut out_idx);
        for d in 0..shape.len() {
            full_idx[d] = match d.cmp(&axis) {
                std::cmp::Ordering::Less => out_idx[d],
                std::cmp::Ordering::Equal => index,
                std::cmp::Ordering::Greater => out_idx[d - 1],
            };
        }
        out.values[flat] = field.values[field.flat_index(&full_idx)];
    }
    out.real = field.real;
    Ok(out)
}

/// Inserts a constant axis at `position`, replicating the field values.
pub fn insert_constant_axis(
    field: &SampledField,
    position: usize,
    grid: Grid1D,
) -> Result<SampledField> {
    if position > field.rank() {
        return Err(NsError::InvalidArgument(format!(
            "axis position {position} out of range"
        )));
    }
    let mut axes = field.axes.clone();
    axes.insert(position, grid);
    let mut out = SampledField::zeros(axes, field.label.clone())?;
    let out_shape = out.shape();
    let mut out_idx = vec![0usize; out_shape.len()];
    let mut in_idx = vec![0usize; field.rank()];
    for flat in 0..out.values.len() {
        unflatten(flat, &out_shape, &mut out_idx);
        let mut d_in = 0;
        for (d, &i) in out_idx.iter().enumerate() {
            if d != position {
                in_idx[d_in] = i;
                d_in += 1;
            }
        }
        out.values[flat] = field.values[field.flat_index(&in_idx)];
    }
    out.real = field.real;
    Ok(out)
}
