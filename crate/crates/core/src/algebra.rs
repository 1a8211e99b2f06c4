//! Finite-dimensional checks of the symmetry algebra: the nested commutator
//! identity behind the linearized KPI equation, the generator family
//! a_{m,n} = (i^m/2){D1^m, Delta^n}, Heisenberg relations, commuting subsets,
//! and the decomposition of non-coprime generators over lower ones.
//!
//! Two realizations are used. `PolyRep` acts on coefficient vectors of
//! polynomials in one variable: D1 = -i a (multiplication), Delta = -i d/da,
//! chosen so that a_{1,0} acts as multiplication by the spectral variable and
//! a_{0,1} as -i d/da, matching the left actions of the spectral flows.
//! `LadderRep` realizes the same algebra unitarily in the oscillator basis,
//! where hermiticity statements are meaningful.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{NsError, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Finite complex matrix used for the algebra identities.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub mat: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(mat: DMatrix<Complex64>) -> Self {
        DenseOperator { mat }
    }

    pub fn zeros(dim: usize) -> Self {
        DenseOperator::new(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        DenseOperator::new(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn frobenius(&self) -> f64 {
        self.mat.norm()
    }

    pub fn max_entry(&self) -> f64 {
        self.mat.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator::new(&self.mat * &other.mat)
    }

    pub fn pow(&self, e: u32) -> DenseOperator {
        let mut out = DenseOperator::identity(self.dim());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> DenseOperator {
        DenseOperator::new(self.mat.map(|v| v * c))
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator::new(&self.mat + &other.mat)
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator::new(&self.mat - &other.mat)
    }
}

/// Uniform random complex matrix with entries in the unit square.
pub fn random_operator(dim: usize, rng: &mut impl Rng) -> DenseOperator {
    DenseOperator::new(DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }))
}

/// AB - BA.
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    if a.dim() != b.dim() {
        return Err(NsError::InvalidArgument(format!(
            "commutator dims {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.mul(b).sub(&b.mul(a)))
}

/// Frobenius norm of [a^3,[a,F]] - (3/4)[a^2,[a^2,F]] - (1/4)[a,[a,[a,[a,F]]]],
/// normalized by |a|^4 |F|. Zero for arbitrary a and F up to roundoff: in
/// left/right multiplication operators the combination is
/// (L^3-R^3)(L-R) - (3/4)(L^2-R^2)^2 - (1/4)(L-R)^4, the zero polynomial.
pub fn kp_commutator_residual(a: &DenseOperator, f: &DenseOperator) -> Result<f64> {
    let a2 = a.pow(2);
    let a3 = a.pow(3);
    let t1 = commutator(&a3, &commutator(a, f)?)?;
    let t2 = commutator(&a2, &commutator(&a2, f)?)?;
    let t4 = commutator(a, &commutator(a, &commutator(a, &commutator(a, f)?)?)?)?;
    let r = t1
        .sub(&t2.scale(Complex64::new(0.75, 0.0)))
        .sub(&t4.scale(Complex64::new(0.25, 0.0)));
    let denom = a.frobenius().powi(4) * f.frobenius();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(r.frobenius() / denom)
}

/// Truncated polynomial-space realization on degrees < n.
#[derive(Debug, Clone)]
pub struct PolyRep {
    pub n: usize,
    /// Multiplication by -i a (coefficient shift-up scaled by -i).
    pub d1: DenseOperator,
    /// -i d/da (shift-down with degree factors, scaled by -i).
    pub delta: DenseOperator,
    /// In the one-variable reduction X2 acts trivially, so X1 coincides
    /// with Delta.
    pub x1: DenseOperator,
}

impl PolyRep {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(NsError::InvalidArgument(format!(
                "polynomial degree bound must be >= 3, got {n}"
            )));
        }
        let mut d1 = DMatrix::zeros(n, n);
        let mut delta = DMatrix::zeros(n, n);
        for j in 0..n {
            if j + 1 < n {
                d1[(j + 1, j)] = -I;
            }
            if j >= 1 {
                delta[(j - 1, j)] = -I * j as f64;
            }
        }
        let delta = DenseOperator::new(delta);
        Ok(PolyRep {
            n,
            d1: DenseOperator::new(d1),
            x1: delta.clone(),
            delta,
        })
    }
}

/// a_{m,n} = (i^m/2){D1^m, Delta^n} in the polynomial realization,
/// equivalently (1/2){a^m (multiplication), (-i d/da)^n}.
pub fn build_amn(m: u32, n: u32, rep: &PolyRep) -> Result<DenseOperator> {
    if m + n == 0 {
        return Err(NsError::InvalidArgument("a_{0,0} is not a generator".into()));
    }
    if (m + n) as usize >= rep.n {
        return Err(NsError::Truncation(format!(
            "a_{{{m},{n}}} needs degree bound > {}, have {}",
            m + n,
            rep.n
        )));
    }
    Ok(anticommutator_form(&rep.d1, &rep.delta, m, n))
}

fn anticommutator_form(
    d1: &DenseOperator,
    delta: &DenseOperator,
    m: u32,
    n: u32,
) -> DenseOperator {
    let dm = d1.pow(m);
    let dn = delta.pow(n);
    let phase = I.powu(m);
    dm.mul(&dn)
        .add(&dn.mul(&dm))
        .scale(phase * Complex64::new(0.5, 0.0))
}

/// Max entry of [D1, Delta] - I over columns of degree < n-1, where the
/// truncation leaves the relation exact. Integer arithmetic makes this
/// exactly zero.
pub fn heisenberg_residual(rep: &PolyRep) -> f64 {
    let c = rep
        .d1
        .mul(&rep.delta)
        .sub(&rep.delta.mul(&rep.d1))
        .sub(&DenseOperator::identity(rep.n));
    max_entry_restricted(&c, rep.n, rep.n - 1)
}

/// Same residual over the full space, including the top-degree truncation
/// artifact. Reported separately from the restricted value.
pub fn heisenberg_residual_full(rep: &PolyRep) -> f64 {
    let c = rep
        .d1
        .mul(&rep.delta)
        .sub(&rep.delta.mul(&rep.d1))
        .sub(&DenseOperator::identity(rep.n));
    c.max_entry()
}

fn max_entry_restricted(op: &DenseOperator, rows: usize, cols: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..cols.min(op.dim()) {
        for i in 0..rows.min(op.dim()) {
            worst = worst.max(op.mat[(i, j)].norm());
        }
    }
    worst
}

/// Norm of [a_{k,l}^{m1}, a_{k,l}^{m2}] on the safely untruncated columns
/// (degree < n - (k+l)(m1+m2) - 1), normalized by the power norms.
pub fn subset_commute_residual(k: u32, l: u32, m1: u32, m2: u32, rep: &PolyRep) -> Result<f64> {
    if gcd(k, l) != 1 {
        return Err(NsError::InvalidArgument(format!(
            "subset label ({k},{l}) must be coprime"
        )));
    }
    let span = ((m1 + m2) * (k + l)) as usize;
    if span + 1 >= rep.n {
        return Err(NsError::Truncation(format!(
            "need degree bound > {}, have {}",
            span + 1,
            rep.n
        )));
    }
    let a = build_amn(k, l, rep)?;
    let p1 = a.pow(m1);
    let p2 = a.pow(m2);
    let c = commutator(&p1, &p2)?;
    let denom = p1.frobenius() * p2.frobenius();
    let raw = max_entry_restricted(&c, rep.n, rep.n - span - 1);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(raw / denom)
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least-squares residual of fitting a_{m,n} - (a_{m/k,n/k})^k on the span of
/// the lower generators plus the identity, restricted to untruncated columns.
/// Returns the residual relative to |a_{m,n} - (a_{m/k,n/k})^k|.
pub fn nonprime_decomposition_residual(m: u32, n: u32, rep: &PolyRep) -> Result<f64> {
    let k = gcd(m, n);
    if k <= 1 {
        return Err(NsError::InvalidArgument(format!(
            "({m},{n}) must have gcd > 1"
        )));
    }
    if ((m + n) as usize) * 2 >= rep.n {
        return Err(NsError::Truncation(format!(
            "need degree bound > {}, have {}",
            2 * (m + n),
            rep.n
        )));
    }
    let target = build_amn(m, n, rep)?.sub(&build_amn(m / k, n / k, rep)?.pow(k));

    let mut basis = vec![DenseOperator::identity(rep.n)];
    for total in 1..(m + n) {
        for mm in 0..=total {
            basis.push(build_amn(mm, total - mm, rep)?);
        }
    }

    // Keep only columns where every involved operator acts without truncation.
    let max_raise = (m + n) as usize; // raising degree never exceeds the total order
    let cols = rep.n - max_raise;
    let rows = rep.n;
    let eqs = rows * cols;

    let vectorize = |op: &DenseOperator| -> Vec<Complex64> {
        let mut v = Vec::with_capacity(eqs);
        for j in 0..cols {
            for i in 0..rows {
                v.push(op.mat[(i, j)]);
            }
        }
        v
    };

    let t = vectorize(&target);
    let t_norm = t.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if t_norm == 0.0 {
        return Ok(0.0);
    }
    let cols_b: Vec<Vec<Complex64>> = basis.iter().map(vectorize).collect();
    let nb = cols_b.len();

    // Normal equations B^H B c = B^H t.
    let mut gram: DMatrix<Complex64> = DMatrix::zeros(nb, nb);
    let mut rhs: nalgebra::DVector<Complex64> = nalgebra::DVector::zeros(nb);
    for p in 0..nb {
        for q in 0..nb {
            gram[(p, q)] = cols_b[p]
                .iter()
                .zip(&cols_b[q])
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>();
        }
        rhs[p] = cols_b[p]
            .iter()
            .zip(&t)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>();
    }
    let coeffs = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| NsError::SingularSystem("decomposition normal equations".into()))?;

    let mut resid = 0.0;
    for (row, tv) in t.iter().enumerate() {
        let fit: Complex64 = (0..nb).map(|p| cols_b[p][row] * coeffs[p]).sum();
        resid += (fit - tv).norm_sqr();
    }
    Ok(resid.sqrt() / t_norm)
}

/// Oscillator-basis realization: X = (a + a^dag)/sqrt(2),
/// P = -i(a - a^dag)/sqrt(2), D1 = -iX, Delta = P. The inner product is the
/// honest L2 one, so hermiticity of the generators is a meaningful statement.
#[derive(Debug, Clone)]
pub struct LadderRep {
    pub n: usize,
    pub x: DenseOperator,
    pub p: DenseOperator,
}

impl LadderRep {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(NsError::InvalidArgument(format!(
                "ladder dimension must be >= 3, got {n}"
            )));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut x = DMatrix::zeros(n, n);
        let mut p = DMatrix::zeros(n, n);
        for col in 0..n {
            if col >= 1 {
                let r = (col as f64).sqrt() * s;
                x[(col - 1, col)] = Complex64::new(r, 0.0);
                p[(col - 1, col)] = -I * r;
            }
            if col + 1 < n {
                let r = ((col + 1) as f64).sqrt() * s;
                x[(col + 1, col)] = Complex64::new(r, 0.0);
                p[(col + 1, col)] = I * r;
            }
        }
        Ok(LadderRep {
            n,
            x: DenseOperator::new(x),
            p: DenseOperator::new(p),
        })
    }

    pub fn build_amn(&self, m: u32, n: u32) -> Result<DenseOperator> {
        if m + n == 0 || (m + n) as usize >= self.n {
            return Err(NsError::Truncation(format!(
                "a_{{{m},{n}}} exceeds ladder dimension {}",
                self.n
            )));
        }
        let d1 = self.x.scale(-I);
        Ok(anticommutator_form(&d1, &self.p, m, n))
    }
}

/// Max |A - A^dag| over the leading block untouched by truncation,
/// normalized by the largest entry there.
pub fn hermiticity_defect_block(op: &DenseOperator, block: usize) -> f64 {
    let b = block.min(op.dim());
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..b {
        for j in 0..b {
            let d = (op.mat[(i, j)] - op.mat[(j, i)].conj()).norm();
            worst = worst.max(d);
            scale = scale.max(op.mat[(i, j)].norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn op2(entries: [[Complex64; 2]; 2]) -> DenseOperator {
        DenseOperator::new(DMatrix::from_fn(2, 2, |i, j| entries[i][j]))
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_operator(5, &mut rng);
        let c = commutator(&DenseOperator::identity(5), &b).unwrap();
        assert_eq!(c.max_entry(), 0.0);
    }

    #[test]
    fn commutator_of_diag_and_offdiag() {
        // [diag(1,2), e12] by direct 2x2 multiplication: AB has (1,2) entry 1,
        // BA has (1,2) entry 2, so the commutator is -e12.
        let a = op2([[c(1.0), c(0.0)], [c(0.0), c(2.0)]]);
        let e12 = op2([[c(0.0), c(1.0)], [c(0.0), c(0.0)]]);
        let r = commutator(&a, &e12).unwrap();
        assert_eq!(r.mat[(0, 1)], c(-1.0));
        assert_eq!(r.mat[(0, 0)], c(0.0));
        assert_eq!(r.mat[(1, 0)], c(0.0));
        assert_eq!(r.mat[(1, 1)], c(0.0));
    }

    #[test]
    fn powers_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_operator(6, &mut rng);
        let r = commutator(&a, &a.pow(3)).unwrap();
        assert!(r.max_entry() <= 1e-13 * a.frobenius().powi(4));
    }

    #[test]
    fn commutator_dim_mismatch_rejected() {
        let a = DenseOperator::identity(3);
        let b = DenseOperator::identity(4);
        assert!(commutator(&a, &b).is_err());
    }

    #[test]
    fn kp_identity_trivial_cases() {
        let zero = DenseOperator::zeros(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_operator(4, &mut rng);
        assert_eq!(kp_commutator_residual(&zero, &f).unwrap(), 0.0);

        // Commuting pair (a, p(a)).
        let a = random_operator(4, &mut rng);
        let p = a.pow(2).add(&a.scale(c(3.0)));
        let r = kp_commutator_residual(&a, &p).unwrap();
        assert!(r <= 1e-13);
    }

    #[test]
    fn kp_identity_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(20260810);
        for dim in [4usize, 8, 16] {
            for _ in 0..10 {
                let a = random_operator(dim, &mut rng);
                let f = random_operator(dim, &mut rng);
                let r = kp_commutator_residual(&a, &f).unwrap();
                assert!(r <= 1e-12, "dim {dim}: residual {r}");
            }
        }
    }

    #[test]
    fn amn_low_cases_match_definitions() {
        let rep = PolyRep::new(8).unwrap();
        // a_{1,0} is multiplication by the variable: shift-up with weight 1.
        let a10 = build_amn(1, 0, &rep).unwrap();
        for j in 0..7 {
            assert_eq!(a10.mat[(j + 1, j)], c(1.0));
        }
        // a_{0,1} = -i d/da.
        let a01 = build_amn(0, 1, &rep).unwrap();
        for j in 1..8 {
            assert_eq!(a01.mat[(j - 1, j)], -I * j as f64);
        }
        // a_{1,1} applied to the constant polynomial gives -i/2.
        let a11 = build_amn(1, 1, &rep).unwrap();
        assert_eq!(a11.mat[(0, 0)], Complex64::new(0.0, -0.5));
    }

    #[test]
    fn heisenberg_exact_on_untruncated_subspace() {
        for n in [3usize, 8, 16] {
            let rep = PolyRep::new(n).unwrap();
            assert_eq!(heisenberg_residual(&rep), 0.0, "n = {n}");
            // Full space sees the trace obstruction at the top degree.
            assert!(heisenberg_residual_full(&rep) >= 1.0);
        }
    }

    #[test]
    fn subset_powers_commute() {
        let rep = PolyRep::new(16).unwrap();
        assert_eq!(subset_commute_residual(1, 0, 1, 2, &rep).unwrap(), 0.0);
        assert_eq!(subset_commute_residual(0, 1, 1, 3, &rep).unwrap(), 0.0);
        let r = subset_commute_residual(1, 1, 1, 2, &rep).unwrap();
        assert!(r <= 1e-12, "residual {r}");
    }

    #[test]
    fn subset_requires_coprime_and_room() {
        let rep = PolyRep::new(8).unwrap();
        assert!(subset_commute_residual(2, 2, 1, 2, &rep).is_err());
        assert!(matches!(
            subset_commute_residual(1, 1, 3, 4, &rep),
            Err(NsError::Truncation(_))
        ));
    }

    #[test]
    fn nonprime_generators_decompose_over_lower_ones() {
        let rep = PolyRep::new(16).unwrap();
        for (m, n) in [(2u32, 0u32), (0, 2), (2, 2)] {
            let r = nonprime_decomposition_residual(m, n, &rep).unwrap();
            assert!(r <= 1e-10, "({m},{n}): residual {r}");
        }
    }

    #[test]
    fn nonprime_rejects_coprime_input() {
        let rep = PolyRep::new(16).unwrap();
        assert!(nonprime_decomposition_residual(2, 1, &rep).is_err());
    }

    #[test]
    fn ladder_generators_are_hermitian() {
        let rep = LadderRep::new(24).unwrap();
        for (m, n) in [(1u32, 0u32), (0, 1), (1, 1), (2, 1), (1, 2), (3, 2), (2, 2)] {
            let a = rep.build_amn(m, n).unwrap();
            let block = rep.n - (m + n) as usize;
            let d = hermiticity_defect_block(&a, block);
            assert!(d <= 1e-12, "a_{{{m},{n}}}: defect {d}");
        }
    }

    #[test]
    fn ladder_heisenberg_holds() {
        let rep = LadderRep::new(12).unwrap();
        let d1 = rep.x.scale(-I);
        let c = commutator(&d1, &rep.p).unwrap();
        for j in 0..rep.n - 1 {
            for i in 0..rep.n {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((c.mat[(i, j)] - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }
}
