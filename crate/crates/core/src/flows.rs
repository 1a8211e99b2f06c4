//! Exact time evolution of the reduced spectral data r(alpha, beta) under
//! the shift subset (multiplication by phases in direct space) and the dual
//! subset (phase multiplication in the FFT-conjugate (s, v) domain), plus
//! hermiticity maintenance and the linearized-KPI dispersion check.
//!
//! Conventions. The full data is f = delta(alpha-beta) + r; the delta part
//! is invariant under every implemented flow and is never stored. Flows
//! integrate df/dt = -i * g * f with generator symbols
//!   shift m: g = alpha^m - beta^m,
//!   dual  n: g = s^n - (-v)^n   on the transform R(s,v), where
//! r(alpha,beta) = integral e^{i(s alpha + v beta)} R(s,v) ds dv.
//! The sign is fixed so that the m-th shift flow translates the reconstructed
//! potential forward in x_m and the first dual flow acts as r(alpha-t, beta-t).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NsError, Result};
use crate::fields::{
    fft_along_axis, fftfreq, FftDirection, Grid1D, SampledField, EDGE_DECAY_TOL,
};

/// Which commuting family a flow belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    Shift,
    Dual,
}

/// Reduced spectral data on a shared square (alpha, beta) grid,
/// periodic-for-FFT. Hermitian by construction: conj r(a,b) = r(b,a).
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    pub alpha: Grid1D,
    pub beta: Grid1D,
    /// Row-major: r[i * n + j] = r(alpha_i, beta_j).
    pub r: Vec<Complex64>,
    pub warnings: Vec<String>,
}

impl SpectralKernel {
    pub fn n(&self) -> usize {
        self.alpha.count
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.r[i * self.n() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Relative magnitude of r on the boundary rows/columns.
    pub fn edge_fraction(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
                    worst = worst.max(self.at(i, j).norm());
                }
            }
        }
        worst / peak
    }

    pub fn to_field(&self) -> SampledField {
        let mut f = SampledField::new(vec![self.alpha, self.beta], self.r.clone(), "r").unwrap();
        f.real = false;
        f
    }

    pub fn from_field(field: &SampledField) -> Result<SpectralKernel> {
        if field.rank() != 2 {
            return Err(NsError::InvalidArgument(
                "spectral kernel field must be rank 2".into(),
            ));
        }
        if field.axes[0] != field.axes[1] {
            return Err(NsError::GridMismatch(
                "alpha and beta grids must coincide".into(),
            ));
        }
        Ok(SpectralKernel {
            alpha: field.axes[0],
            beta: field.axes[1],
            r: field.values.clone(),
            warnings: Vec::new(),
        })
    }
}

/// Projects sampled data g(alpha, beta) onto its hermitian part
/// (g + swap-conjugate)/2, which makes the hermiticity defect exactly zero.
/// An edge-decay warning is attached when the data does not decay to
/// EDGE_DECAY_TOL of its peak at the grid boundary.
pub fn make_spectral_kernel(
    grid: Grid1D,
    g: impl Fn(f64, f64) -> Complex64,
) -> Result<SpectralKernel> {
    let n = grid.count;
    let mut raw = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            raw[i * n + j] = g(grid.node(i), grid.node(j));
        }
    }
    make_spectral_kernel_from_samples(grid, grid, raw)
}

pub fn make_spectral_kernel_from_samples(
    alpha: Grid1D,
    beta: Grid1D,
    samples: Vec<Complex64>,
) -> Result<SpectralKernel> {
    if alpha != beta {
        return Err(NsError::GridMismatch(
            "alpha and beta grids must coincide for the hermitian projection".into(),
        ));
    }
    let n = alpha.count;
    if samples.len() != n * n {
        return Err(NsError::InvalidArgument(format!(
            "expected {} samples, got {}",
            n * n,
            samples.len()
        )));
    }
    let mut r = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            r[i * n + j] = (samples[i * n + j] + samples[j * n + i].conj()) * 0.5;
        }
    }
    let mut kernel = SpectralKernel {
        alpha,
        beta,
        r,
        warnings: Vec::new(),
    };
    let edge = kernel.edge_fraction();
    if edge > EDGE_DECAY_TOL {
        kernel
            .warnings
            .push(format!("edge decay {edge:.3e} exceeds {EDGE_DECAY_TOL:.0e}"));
    }
    Ok(kernel)
}

/// Max |conj r(a,b) - r(b,a)| relative to max |r|.
pub fn hermiticity_defect(kernel: &SpectralKernel) -> f64 {
    let peak = kernel.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let n = kernel.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((kernel.at(i, j).conj() - kernel.at(j, i)).norm());
        }
    }
    worst / peak
}

/// r <- e^{-i t (alpha^m - beta^m)} r, the exactly integrated m-th shift flow.
pub fn evolve_shift_flow(kernel: &SpectralKernel, m: u32, t: f64) -> Result<SpectralKernel> {
    check_flow_index(m)?;
    let n = kernel.n();
    let mut out = kernel.clone();
    for i in 0..n {
        let am = kernel.alpha.node(i).powi(m as i32);
        for j in 0..n {
            let bm = kernel.beta.node(j).powi(m as i32);
            let phase = Complex64::new(0.0, -t * (am - bm)).exp();
            out.r[i * n + j] *= phase;
        }
    }
    Ok(out)
}

/// Exactly integrated n-th dual flow: multiply the (s, v) transform by
/// e^{-i t (s^n - (-v)^n)}. Violated edge decay attaches an aliasing
/// warning to the result; the evolution is still performed.
pub fn evolve_dual_flow(kernel: &SpectralKernel, n: u32, t: f64) -> Result<SpectralKernel> {
    check_flow_index(n)?;
    let mut ts = [0.0; 3];
    ts[(n - 1) as usize] = t;
    evolve_dual_multi(kernel, ts)
}

/// Applies the three commuting dual flows with parameters (t1, t2, t3)
/// in a single conjugate-domain phase multiplication.
pub fn evolve_dual_multi(kernel: &SpectralKernel, ts: [f64; 3]) -> Result<SpectralKernel> {
    let n = kernel.n();
    let mut out = kernel.clone();
    let edge = kernel.edge_fraction();
    if edge > EDGE_DECAY_TOL {
        out.warnings
            .push(format!("aliasing: edge decay {edge:.3e} before dual flow"));
    }
    let shape = [n, n];
    fft_along_axis(&mut out.r, &shape, 0, FftDirection::Forward)?;
    fft_along_axis(&mut out.r, &shape, 1, FftDirection::Forward)?;
    let s = fftfreq(n, kernel.alpha.step);
    let v = fftfreq(n, kernel.beta.step);
    for i in 0..n {
        for j in 0..n {
            let mut g = 0.0;
            for (idx, &t) in ts.iter().enumerate() {
                if t != 0.0 {
                    let p = (idx + 1) as i32;
                    g += t * (s[i].powi(p) - (-v[j]).powi(p));
                }
            }
            out.r[i * n + j] *= Complex64::new(0.0, -g).exp();
        }
    }
    fft_along_axis(&mut out.r, &shape, 0, FftDirection::Inverse)?;
    fft_along_axis(&mut out.r, &shape, 1, FftDirection::Inverse)?;
    Ok(out)
}

fn check_flow_index(m: u32) -> Result<()> {
    if (1..=3).contains(&m) {
        Ok(())
    } else {
        Err(NsError::InvalidArgument(format!(
            "flow index must be 1..=3, got {m}"
        )))
    }
}

/// Applies the generator combination G1 G3 - (3/4) G2^2 + (1/4) G1^4 exactly
/// (G_m = -i times the subset symbol) and returns max |result| / max |r|.
/// The combination is the zero polynomial, so the value is pure roundoff.
pub fn dispersion_residual(kernel: &SpectralKernel, subset: Subset) -> Result<f64> {
    let peak = kernel.max_abs();
    if peak == 0.0 {
        return Ok(0.0);
    }
    let n = kernel.n();
    let combined = |a: f64, b: f64| -> Complex64 {
        let g = |p: i32| Complex64::new(0.0, -(a.powi(p) - b.powi(p)));
        g(1) * g(3) - g(2) * g(2) * 0.75 + g(1).powu(4) * 0.25
    };
    match subset {
        Subset::Shift => {
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let c = combined(kernel.alpha.node(i), kernel.beta.node(j));
                    worst = worst.max((c * kernel.at(i, j)).norm());
                }
            }
            Ok(worst / peak)
        }
        Subset::Dual => {
            let mut work = kernel.r.clone();
            let shape = [n, n];
            fft_along_axis(&mut work, &shape, 0, FftDirection::Forward)?;
            fft_along_axis(&mut work, &shape, 1, FftDirection::Forward)?;
            let s = fftfreq(n, kernel.alpha.step);
            let v = fftfreq(n, kernel.beta.step);
            for i in 0..n {
                for j in 0..n {
                    work[i * n + j] *= combined(s[i], -v[j]);
                }
            }
            fft_along_axis(&mut work, &shape, 0, FftDirection::Inverse)?;
            fft_along_axis(&mut work, &shape, 1, FftDirection::Inverse)?;
            let worst = work.iter().map(|z| z.norm()).fold(0.0, f64::max);
            Ok(worst / peak)
        }
    }
}

/// Hermitian kernel built from two off-diagonal Gaussian bumps centered at
/// (-k0, k0) and (k0, -k0). Decays rapidly away from the bumps, including
/// along the diagonal, which keeps the reconstructed potential localized.
pub fn gaussian_pair_kernel(
    grid: Grid1D,
    amplitude: f64,
    k0: f64,
    sigma: f64,
) -> Result<SpectralKernel> {
    make_spectral_kernel(grid, |a, b| {
        let g1 = (-((a + k0).powi(2) + (b - k0).powi(2)) / (2.0 * sigma * sigma)).exp();
        let g2 = (-((a - k0).powi(2) + (b + k0).powi(2)) / (2.0 * sigma * sigma)).exp();
        Complex64::new(amplitude * (g1 + g2), 0.0)
    })
}

/// Hermitian kernel from a single centered real Gaussian bump.
pub fn gaussian_diag_kernel(grid: Grid1D, amplitude: f64, sigma: f64) -> Result<SpectralKernel> {
    make_spectral_kernel(grid, |a, b| {
        Complex64::new(
            amplitude * (-(a * a + b * b) / (2.0 * sigma * sigma)).exp(),
            0.0,
        )
    })
}

/// Seeded random hermitian kernel. With `windowed`, a Gaussian envelope
/// enforces edge decay; without it the samples are full-band white noise.
pub fn random_hermitian_kernel(
    grid: Grid1D,
    amplitude: f64,
    seed: u64,
    windowed: bool,
) -> Result<SpectralKernel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.count;
    let half_span = 0.5 * grid.step * (n - 1) as f64;
    let mid = grid.origin + half_span;
    let sigma = half_span / 4.0;
    let mut raw = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let w = if windowed {
                let da = grid.node(i) - mid;
                let db = grid.node(j) - mid;
                (-(da * da + db * db) / (2.0 * sigma * sigma)).exp()
            } else {
                1.0
            };
            raw[i * n + j] = z * (amplitude * w);
        }
    }
    make_spectral_kernel_from_samples(grid, grid, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::fourier_shift;

    fn test_grid(n: usize) -> Grid1D {
        Grid1D::symmetric(16.0, n, true).unwrap()
    }

    fn rel_diff(a: &SpectralKernel, b: &SpectralKernel) -> f64 {
        let peak = a.max_abs().max(b.max_abs());
        if peak == 0.0 {
            return 0.0;
        }
        a.r.iter()
            .zip(&b.r)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / peak
    }

    #[test]
    fn hermitian_projection_is_exact() {
        let k = random_hermitian_kernel(test_grid(24), 1.0, 5, false).unwrap();
        assert_eq!(hermiticity_defect(&k), 0.0);
    }

    #[test]
    fn already_hermitian_data_is_unchanged() {
        let grid = test_grid(16);
        // Real symmetric Gaussian bump.
        let k = gaussian_diag_kernel(grid, 2.0, 1.5).unwrap();
        let again = make_spectral_kernel(grid, |a, b| {
            Complex64::new(2.0 * (-(a * a + b * b) / (2.0 * 1.5 * 1.5)).exp(), 0.0)
        })
        .unwrap();
        assert_eq!(k.r, again.r);

        // i times a real antisymmetric function is hermitian.
        let s = |a: f64, b: f64| (a - b) * (-(a * a + b * b) / 4.0).exp();
        let k = make_spectral_kernel(grid, |a, b| Complex64::new(0.0, s(a, b))).unwrap();
        for i in 0..grid.count {
            for j in 0..grid.count {
                let want = Complex64::new(0.0, s(grid.node(i), grid.node(j)));
                assert!((k.at(i, j) - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn shift_flow_identity_at_t_zero() {
        let k = gaussian_diag_kernel(test_grid(16), 1.0, 1.5).unwrap();
        let e = evolve_shift_flow(&k, 1, 0.0).unwrap();
        assert_eq!(e.r, k.r);
    }

    #[test]
    fn shift_flow_phase_at_unit_point() {
        // Grid contains alpha = 1, beta = 0 exactly; at t = pi the m = 1
        // multiplier there is e^{-i pi} = -1.
        let grid = Grid1D::new(-2.0, 0.5, 9, true).unwrap();
        let k = make_spectral_kernel(grid, |a, b| {
            Complex64::new((-(a * a + b * b)).exp(), 0.0)
        })
        .unwrap();
        let e = evolve_shift_flow(&k, 1, std::f64::consts::PI).unwrap();
        let i1 = 6; // node -2 + 6*0.5 = 1
        let j0 = 4; // node 0
        let got = e.at(i1, j0);
        let want = -k.at(i1, j0);
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn flow_group_law() {
        let k = gaussian_pair_kernel(test_grid(32), 1.0, 1.5, 0.5).unwrap();
        for m in 1..=3u32 {
            let ab = evolve_shift_flow(&evolve_shift_flow(&k, m, 0.3).unwrap(), m, 0.45).unwrap();
            let once = evolve_shift_flow(&k, m, 0.75).unwrap();
            assert!(rel_diff(&ab, &once) <= 1e-12, "shift m={m}");
        }
        for n in 1..=3u32 {
            let ab = evolve_dual_flow(&evolve_dual_flow(&k, n, 0.02).unwrap(), n, 0.03).unwrap();
            let once = evolve_dual_flow(&k, n, 0.05).unwrap();
            assert!(rel_diff(&ab, &once) <= 1e-12, "dual n={n}");
        }
    }

    #[test]
    fn first_dual_flow_is_diagonal_shift() {
        let k = gaussian_diag_kernel(test_grid(64), 1.0, 1.2).unwrap();
        let t = 0.4;
        let evolved = evolve_dual_flow(&k, 1, t).unwrap();
        // r(alpha - t, beta - t): trigonometric shift by -t along both axes.
        let f = k.to_field();
        let shifted = fourier_shift(&fourier_shift(&f, -t, 0).unwrap(), -t, 1).unwrap();
        let peak = k.max_abs();
        let worst = evolved
            .r
            .iter()
            .zip(&shifted.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst / peak <= 1e-11, "diff {}", worst / peak);
    }

    #[test]
    fn dual_flow_inverse_restores() {
        let k = gaussian_pair_kernel(test_grid(48), 1.0, 1.5, 0.6).unwrap();
        let back = evolve_dual_flow(&evolve_dual_flow(&k, 2, 0.07).unwrap(), 2, -0.07).unwrap();
        assert!(rel_diff(&back, &k) <= 1e-12);
    }

    #[test]
    fn same_subset_flows_commute_across_orders() {
        let k = gaussian_pair_kernel(test_grid(32), 1.0, 1.5, 0.5).unwrap();
        let a = evolve_shift_flow(&evolve_shift_flow(&k, 1, 0.3).unwrap(), 2, 0.2).unwrap();
        let b = evolve_shift_flow(&evolve_shift_flow(&k, 2, 0.2).unwrap(), 1, 0.3).unwrap();
        assert!(rel_diff(&a, &b) <= 1e-13);

        let a = evolve_dual_flow(&evolve_dual_flow(&k, 1, 0.05).unwrap(), 2, 0.03).unwrap();
        let b = evolve_dual_flow(&evolve_dual_flow(&k, 2, 0.03).unwrap(), 1, 0.05).unwrap();
        assert!(rel_diff(&a, &b) <= 1e-12);
    }

    #[test]
    fn different_subsets_do_not_commute() {
        let k = gaussian_pair_kernel(test_grid(48), 1.0, 1.5, 0.6).unwrap();
        let a = evolve_dual_flow(&evolve_shift_flow(&k, 2, 0.7).unwrap(), 1, 0.5).unwrap();
        let b = evolve_shift_flow(&evolve_dual_flow(&k, 1, 0.5).unwrap(), 2, 0.7).unwrap();
        assert!(rel_diff(&a, &b) > 1e-6);
    }

    #[test]
    fn dispersion_symbol_vanishes() {
        let zero = make_spectral_kernel(test_grid(16), |_, _| Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(dispersion_residual(&zero, Subset::Shift).unwrap(), 0.0);
        assert_eq!(dispersion_residual(&zero, Subset::Dual).unwrap(), 0.0);

        let k = random_hermitian_kernel(test_grid(64), 1.0, 99, false).unwrap();
        let shift = dispersion_residual(&k, Subset::Shift).unwrap();
        let dual = dispersion_residual(&k, Subset::Dual).unwrap();
        assert!(shift <= 1e-12, "shift {shift}");
        assert!(dual <= 1e-10, "dual {dual}");
    }

    #[test]
    fn hermiticity_preserved_by_flows() {
        let k = gaussian_pair_kernel(test_grid(48), 1.0, 1.5, 0.6).unwrap();
        let after_shift = evolve_shift_flow(&k, 2, 0.8).unwrap();
        assert!(hermiticity_defect(&after_shift) <= 1e-13);
        let after_dual = evolve_dual_flow(&k, 3, 0.05).unwrap();
        assert!(hermiticity_defect(&after_dual) <= 1e-11);
    }

    #[test]
    fn aliasing_warning_attached_when_edges_hot() {
        let k = random_hermitian_kernel(test_grid(16), 1.0, 3, false).unwrap();
        assert!(!k.warnings.is_empty());
        let e = evolve_dual_flow(&k, 1, 0.3).unwrap();
        assert!(e.warnings.iter().any(|w| w.contains("aliasing")));
    }

    #[test]
    fn kernel_field_roundtrip() {
        let k = gaussian_pair_kernel(test_grid(24), 1.0, 1.5, 0.6).unwrap();
        let f = k.to_field();
        let back = SpectralKernel::from_field(&f).unwrap();
        assert_eq!(back.r, k.r);
        assert_eq!(back.alpha, k.alpha);
    }
}
