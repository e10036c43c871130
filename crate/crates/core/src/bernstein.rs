//! Bernstein basis, tensor-product Bernstein operators and the
//! Bernstein/monomial change of basis.
//!
//! Flat indices follow Kronecker order: the multi-index `(k_1, .., k_m)`
//! maps to `sum_l k_l * prod_{p > l} (n_p + 1)`, so the last axis varies
//! fastest.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Multi-degree `(n_1, .., n_m)` of the tensor Bernstein space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeVector(Vec<usize>);

impl DegreeVector {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidDegree("degree vector is empty".into()));
        }
        if let Some(l) = degrees.iter().position(|&n| n == 0) {
            return Err(Error::InvalidDegree(format!("degree on axis {l} is zero")));
        }
        let mut total: usize = 1;
        for &n in &degrees {
            total = total
                .checked_mul(n + 1)
                .ok_or_else(|| Error::InvalidDegree("basis size overflows usize".into()))?;
        }
        Ok(Self(degrees))
    }

    /// Same degree `n` on each of `m` axes.
    pub fn uniform(n: usize, m: usize) -> Result<Self> {
        Self::new(vec![n; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> usize {
        self.0[axis]
    }

    /// `N = prod_l (n_l + 1)`.
    pub fn basis_size(&self) -> usize {
        self.0.iter().map(|n| n + 1).product()
    }

    /// Stride of each axis in the flat ordering.
    pub fn strides(&self) -> Vec<usize> {
        let m = self.dim();
        let mut s = vec![1usize; m];
        for l in (0..m.saturating_sub(1)).rev() {
            s[l] = s[l + 1] * (self.0[l + 1] + 1);
        }
        s
    }

    /// `sqrt(sum_l 1/n_l)`.
    pub fn inverse_root_sum(&self) -> f64 {
        self.0.iter().map(|&n| 1.0 / n as f64).sum::<f64>().sqrt()
    }
}

impl fmt::Display for DegreeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

impl std::str::FromStr for DegreeVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let degrees = s
            .split([',', ';'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidDegree(format!("cannot parse `{p}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(degrees)
    }
}

/// The regular lattice `{(k_1/n_1, .., k_m/n_m)}` with its index map.
#[derive(Debug, Clone)]
pub struct LatticeGrid {
    degree: DegreeVector,
    strides: Vec<usize>,
}

impl LatticeGrid {
    pub fn new(degree: DegreeVector) -> Self {
        let strides = degree.strides();
        Self { degree, strides }
    }

    pub fn degree(&self) -> &DegreeVector {
        &self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree.dim()
    }

    pub fn len(&self) -> usize {
        self.degree.basis_size()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-index of flat position `j` (0-based).
    pub fn multi_index(&self, j: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(self.degree.degrees())
            .map(|(s, n)| (j / s) % (n + 1))
            .collect()
    }

    pub fn flat_index(&self, k: &[usize]) -> usize {
        k.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }

    /// Lattice node `x̂_j`.
    pub fn point(&self, j: usize) -> Vec<f64> {
        self.multi_index(j)
            .iter()
            .zip(self.degree.degrees())
            .map(|(&k, &n)| k as f64 / n as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    /// Samples `f(x̂_j)` in lattice order.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|j| f(&self.point(j))).collect()
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Scalar function on the unit box with an optional gradient.
#[derive(Clone)]
pub struct Observable {
    eval: Arc<ScalarFn>,
    gradient: Option<Arc<VectorFn>>,
    label: String,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("has_gradient", &self.gradient.is_some())
            .finish()
    }
}

impl Observable {
    pub fn new(label: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(eval),
            gradient: None,
            label: label.into(),
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// The coordinate observable `x ↦ x_axis`.
    pub fn coordinate(axis: usize, m: usize) -> Self {
        Self::new(format!("x{}", axis + 1), move |x| x[axis]).with_gradient(move |_| {
            let mut g = vec![0.0; m];
            g[axis] = 1.0;
            g
        })
    }

    pub fn constant(c: f64, m: usize) -> Self {
        Self::new(format!("{c}"), move |_| c).with_gradient(move |_| vec![0.0; m])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    pub fn require_gradient(&self) -> Result<&Arc<VectorFn>> {
        self.gradient
            .as_ref()
            .ok_or_else(|| Error::MissingGradient(self.label.clone()))
    }

    /// Largest deviation between the gradient and central differences on
    /// `samples` random interior points. Errors if it exceeds `tol`.
    pub fn check_gradient(&self, m: usize, samples: usize, tol: f64, seed: u64) -> Result<f64> {
        let grad = self.require_gradient()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.01..0.99)).collect();
            let g = grad(&x);
            for l in 0..m {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[l] += h;
                xm[l] -= h;
                let fd = (self.eval(&xp) - self.eval(&xm)) / (2.0 * h);
                worst = worst.max((fd - g[l]).abs() / (1.0 + fd.abs()));
            }
        }
        if worst > tol {
            return Err(Error::Expression(format!(
                "gradient of `{}` disagrees with finite differences by {worst:e}",
                self.label
            )));
        }
        Ok(worst)
    }
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{x} is outside [0, 1]")));
    }
    Ok(())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|i| ((n - k + i) as f64 / i as f64).ln())
        .sum()
}

/// Binomial coefficient as a float (exact for the sizes used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
    }
    acc.round()
}

/// `b_{n,k}(x) = C(n,k) x^k (1-x)^(n-k)`, evaluated in the log domain.
pub fn bernstein_basis(n: usize, k: usize, x: f64) -> Result<f64> {
    if k > n {
        return Err(Error::Domain(format!("basis index {k} exceeds degree {n}")));
    }
    check_unit(x)?;
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if x == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let ln = ln_binomial(n, k) + k as f64 * x.ln() + (n - k) as f64 * (-x).ln_1p();
    Ok(ln.exp())
}

/// All `n + 1` basis values at `x` via the triangular recurrence.
/// Works for any real `x` (outside `[0,1]` the values may be negative).
pub fn basis_vector(n: usize, x: f64) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    let y = 1.0 - x;
    for d in 1..=n {
        for k in (1..=d).rev() {
            b[k] = y * b[k] + x * b[k - 1];
        }
        b[0] *= y;
    }
    b
}

/// Derivatives `d/dx b_{n,k}(x) = n (b_{n-1,k-1} - b_{n-1,k})`.
pub fn basis_derivative_vector(n: usize, x: f64) -> Vec<f64> {
    let lower = basis_vector(n - 1, x);
    let nf = n as f64;
    (0..=n)
        .map(|k| {
            let left = if k > 0 { lower[k - 1] } else { 0.0 };
            let right = if k < n { lower[k] } else { 0.0 };
            nf * (left - right)
        })
        .collect()
}

fn check_samples(samples: &[f64], degree: &DegreeVector) -> Result<()> {
    let expected = degree.basis_size();
    if samples.len() != expected {
        return Err(Error::Shape {
            expected,
            got: samples.len(),
        });
    }
    Ok(())
}

fn check_point(x: &[f64], m: usize) -> Result<()> {
    if x.len() != m {
        return Err(Error::Shape {
            expected: m,
            got: x.len(),
        });
    }
    x.iter().try_for_each(|&v| check_unit(v))
}

/// Full tensor contraction `sum_j values_j prod_l weights[l][k_l(j)]`,
/// contracting the last axis first.
pub fn contract(values: &[f64], degree: &DegreeVector, weights: &[Vec<f64>]) -> f64 {
    let mut cur: Vec<f64> = values.to_vec();
    for l in (0..degree.dim()).rev() {
        let w = &weights[l];
        let width = w.len();
        cur = cur
            .chunks_exact(width)
            .map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum())
            .collect();
    }
    cur[0]
}

/// Evaluates `sum_j samples_j prod_l b_{n_l, k_l(j)}(x_l)`, i.e. `B_n(f; x)`
/// when `samples_j = f(x̂_j)`.
pub fn eval_bernstein_operator(samples: &[f64], grid: &LatticeGrid, x: &[f64]) -> Result<f64> {
    check_samples(samples, grid.degree())?;
    check_point(x, grid.dim())?;
    Ok(eval_bernstein_unchecked(samples, grid.degree(), x))
}

/// Same contraction without domain checks, for points that may sit
/// marginally outside the box.
pub fn eval_bernstein_unchecked(coeffs: &[f64], degree: &DegreeVector, x: &[f64]) -> f64 {
    let weights: Vec<Vec<f64>> = degree
        .degrees()
        .iter()
        .zip(x)
        .map(|(&n, &v)| basis_vector(n, v))
        .collect();
    contract(coeffs, degree, &weights)
}

/// Gradient of the polynomial with Bernstein coefficients `coeffs`.
pub fn bernstein_gradient(coeffs: &[f64], degree: &DegreeVector, x: &[f64]) -> Vec<f64> {
    let values: Vec<Vec<f64>> = degree
        .degrees()
        .iter()
        .zip(x)
        .map(|(&n, &v)| basis_vector(n, v))
        .collect();
    (0..degree.dim())
        .map(|l| {
            let mut w = values.clone();
            w[l] = basis_derivative_vector(degree.get(l), x[l]);
            contract(coeffs, degree, &w)
        })
        .collect()
}

/// Sample tensor with some axes already contracted by univariate
/// Bernstein operators. Remaining axes keep their original labels.
#[derive(Debug, Clone)]
pub struct SampleTensor {
    axes: Vec<usize>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl SampleTensor {
    pub fn from_samples(samples: &[f64], grid: &LatticeGrid) -> Result<Self> {
        check_samples(samples, grid.degree())?;
        Ok(Self {
            axes: (0..grid.dim()).collect(),
            shape: grid.degree().degrees().iter().map(|n| n + 1).collect(),
            values: samples.to_vec(),
        })
    }

    /// Original axis labels still open.
    pub fn open_axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The scalar once every axis has been contracted.
    pub fn scalar(&self) -> Option<f64> {
        self.axes.is_empty().then(|| self.values[0])
    }

    /// Applies the univariate operator `B^(axis)` at `x_axis`.
    pub fn contract(&self, axis: usize, x: f64) -> Result<Self> {
        check_unit(x)?;
        let pos = self.axes.iter().position(|&a| a == axis).ok_or(Error::Axis {
            axis,
            dim: self.axes.len(),
        })?;
        let width = self.shape[pos];
        let w = basis_vector(width - 1, x);
        let inner: usize = self.shape[pos + 1..].iter().product();
        let outer: usize = self.shape[..pos].iter().product();
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            for (k, wk) in w.iter().enumerate() {
                let base = (o * width + k) * inner;
                for i in 0..inner {
                    out[o * inner + i] += wk * self.values[base + i];
                }
            }
        }
        let mut axes = self.axes.clone();
        let mut shape = self.shape.clone();
        axes.remove(pos);
        shape.remove(pos);
        Ok(Self {
            axes,
            shape,
            values: out,
        })
    }
}

/// Applies `B^(axis)_{n_axis}` at `x_axis` to lattice samples.
pub fn partial_bernstein_operator(
    samples: &[f64],
    grid: &LatticeGrid,
    axis: usize,
    x_axis: f64,
) -> Result<SampleTensor> {
    if axis >= grid.dim() {
        return Err(Error::Axis {
            axis,
            dim: grid.dim(),
        });
    }
    SampleTensor::from_samples(samples, grid)?.contract(axis, x_axis)
}

/// Univariate factor with entry `(k, j) = (-1)^(j-k) C(n,j) C(j,k)`.
pub fn univariate_conversion(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n + 1, |k, j| {
        if j < k {
            0.0
        } else {
            let sign = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, j) * binomial(j, k)
        }
    })
}

/// `C = C^(1) ⊗ .. ⊗ C^(m)`, satisfying `B(x) = C X(x)`.
pub fn conversion_matrix(degree: &DegreeVector) -> DMatrix<f64> {
    let mut c = univariate_conversion(degree.get(0));
    for &n in &degree.degrees()[1..] {
        c = c.kronecker(&univariate_conversion(n));
    }
    c
}

fn kron_vectors(factors: impl IntoIterator<Item = Vec<f64>>) -> DVector<f64> {
    let mut acc = vec![1.0];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for a in &acc {
            next.extend(f.iter().map(|b| a * b));
        }
        acc = next;
    }
    DVector::from_vec(acc)
}

/// `X(x) = X^(1)(x_1) ⊗ .. ⊗ X^(m)(x_m)` with `X^(l) = (1, x_l, .., x_l^{n_l})`.
/// Defined for any real `x`.
pub fn monomial_vector(degree: &DegreeVector, x: &[f64]) -> DVector<f64> {
    kron_vectors(degree.degrees().iter().zip(x).map(|(&n, &v)| {
        let mut p = Vec::with_capacity(n + 1);
        let mut acc = 1.0;
        for _ in 0..=n {
            p.push(acc);
            acc *= v;
        }
        p
    }))
}

/// `B(x) = B^(1)(x_1) ⊗ .. ⊗ B^(m)(x_m)`.
pub fn bernstein_vector(degree: &DegreeVector, x: &[f64]) -> DVector<f64> {
    kron_vectors(
        degree
            .degrees()
            .iter()
            .zip(x)
            .map(|(&n, &v)| basis_vector(n, v)),
    )
}

/// Solves `C y = v` in place by back substitution along each axis, using
/// the upper-triangular structure of every univariate factor.
pub fn solve_conversion(degree: &DegreeVector, v: &mut [f64]) {
    let strides = degree.strides();
    for (l, &n) in degree.degrees().iter().enumerate() {
        let c = univariate_conversion(n);
        let stride = strides[l];
        let block = stride * (n + 1);
        let mut line = vec![0.0; n + 1];
        for start in (0..v.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = v[base + k * stride];
                }
                for k in (0..=n).rev() {
                    let mut acc = line[k];
                    for j in k + 1..=n {
                        acc -= c[(k, j)] * line[j];
                    }
                    line[k] = acc / c[(k, k)];
                }
                for (k, slot) in line.iter().enumerate() {
                    v[base + k * stride] = *slot;
                }
            }
        }
    }
}

/// `C^{-1} M`, column by column.
pub fn solve_conversion_matrix(degree: &DegreeVector, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mut buf: Vec<f64> = col.iter().copied().collect();
        solve_conversion(degree, &mut buf);
        col.copy_from_slice(&buf);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn grid(d: &[usize]) -> LatticeGrid {
        LatticeGrid::new(DegreeVector::new(d.to_vec()).unwrap())
    }

    #[test]
    fn basis_examples() {
        assert_eq!(bernstein_basis(5, 0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(bernstein_basis(2, 1, 0.5).unwrap(), 0.5, epsilon = 1e-15);
        let s: f64 = (0..=3).map(|k| bernstein_basis(3, k, 0.7).unwrap()).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_rejects_bad_input() {
        assert!(bernstein_basis(3, 4, 0.5).is_err());
        assert!(bernstein_basis(3, 1, 1.5).is_err());
        assert!(bernstein_basis(3, 1, -0.1).is_err());
    }

    #[test]
    fn basis_stable_at_high_degree() {
        for &x in &[0.01, 0.3, 0.5, 0.99] {
            let s: f64 = (0..=400).map(|k| bernstein_basis(400, k, x).unwrap()).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-11);
            let v = basis_vector(400, x);
            for k in (0..=400).step_by(37) {
                let a = bernstein_basis(400, k, x).unwrap();
                assert!((a - v[k]).abs() <= 1e-12 + 1e-9 * a);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        let d = basis_derivative_vector(7, 0.37);
        let p = basis_vector(7, 0.37 + h);
        let q = basis_vector(7, 0.37 - h);
        for k in 0..=7 {
            assert_abs_diff_eq!(d[k], (p[k] - q[k]) / (2.0 * h), epsilon = 1e-6);
        }
    }

    #[test]
    fn operator_examples() {
        let g = grid(&[2]);
        let s = g.sample(|u| u[0] * u[0]);
        assert_abs_diff_eq!(eval_bernstein_operator(&s, &g, &[0.5]).unwrap(), 0.375, epsilon = 1e-15);
        let g = grid(&[3, 4]);
        let c = vec![2.5; g.len()];
        assert_abs_diff_eq!(eval_bernstein_operator(&c, &g, &[0.2, 0.9]).unwrap(), 2.5, epsilon = 1e-13);
        assert!(matches!(
            eval_bernstein_operator(&c[1..], &g, &[0.2, 0.9]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn index_map_round_trip() {
        let g = grid(&[2, 3, 1]);
        for j in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(j)), j);
        }
        assert_eq!(g.multi_index(1), vec![0, 0, 1]);
        assert_eq!(g.multi_index(2), vec![0, 1, 0]);
        assert_eq!(g.point(g.len() - 1), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn conversion_examples() {
        let c1 = conversion_matrix(&DegreeVector::new(vec![1]).unwrap());
        assert_eq!(c1, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]));
        let c2 = conversion_matrix(&DegreeVector::new(vec![2]).unwrap());
        assert_eq!(
            c2,
            DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 1.0, 0.0, 2.0, -2.0, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn monomial_examples() {
        let d = DegreeVector::new(vec![2]).unwrap();
        assert_eq!(monomial_vector(&d, &[0.5]).as_slice(), &[1.0, 0.5, 0.25]);
        let d = DegreeVector::new(vec![2, 3]).unwrap();
        let x = monomial_vector(&d, &[0.0, 0.0]);
        assert_eq!(x[0], 1.0);
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 1);
    }

    // Inverse of the univariate factor in closed form: M[k][j] = C(j,k)/C(n,k).
    #[test]
    fn back_substitution_matches_closed_form_inverse() {
        let d = DegreeVector::new(vec![4, 3]).unwrap();
        let inv = |n: usize| {
            DMatrix::from_fn(n + 1, n + 1, |k, j| binomial(j, k) / binomial(n, k))
        };
        let full_inv = inv(4).kronecker(&inv(3));
        let v: Vec<f64> = (0..d.basis_size()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut w = v.clone();
        solve_conversion(&d, &mut w);
        let expect = &full_inv * DVector::from_vec(v);
        for (a, b) in w.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-11);
        }
    }

    #[test]
    fn partial_contraction_commutes() {
        let g = grid(&[3, 5]);
        let s: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let x = [0.31, 0.77];
        let a = partial_bernstein_operator(&s, &g, 0, x[0]).unwrap().contract(1, x[1]).unwrap();
        let b = partial_bernstein_operator(&s, &g, 1, x[1]).unwrap().contract(0, x[0]).unwrap();
        let full = eval_bernstein_operator(&s, &g, &x).unwrap();
        assert_abs_diff_eq!(a.scalar().unwrap(), b.scalar().unwrap(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.scalar().unwrap(), full, epsilon = 1e-12);
        assert!(partial_bernstein_operator(&s, &g, 2, 0.5).is_err());
    }

    #[test]
    fn partial_on_constant_stays_constant() {
        let g = grid(&[4, 2]);
        let s = vec![1.5; g.len()];
        let t = partial_bernstein_operator(&s, &g, 1, 0.3).unwrap();
        assert!(t.values().iter().all(|v| (v - 1.5).abs() < 1e-14));
        assert_eq!(t.open_axes(), &[0]);
    }

    #[test]
    fn gradient_of_coefficients() {
        let d = DegreeVector::new(vec![3, 2]).unwrap();
        let g = LatticeGrid::new(d.clone());
        let c: Vec<f64> = (0..g.len()).map(|i| (i as f64).cos()).collect();
        let x = [0.4, 0.6];
        let grad = bernstein_gradient(&c, &d, &x);
        let h = 1e-6;
        for l in 0..2 {
            let mut p = x;
            let mut q = x;
            p[l] += h;
            q[l] -= h;
            let fd = (eval_bernstein_unchecked(&c, &d, &p) - eval_bernstein_unchecked(&c, &d, &q)) / (2.0 * h);
            assert_abs_diff_eq!(grad[l], fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn observable_gradient_check() {
        let f = Observable::new("x1^2", |x| x[0] * x[0]).with_gradient(|x| vec![2.0 * x[0]]);
        assert!(f.check_gradient(1, 20, 1e-6, 3).is_ok());
        let bad = Observable::new("bad", |x| x[0] * x[0]).with_gradient(|_| vec![1.0]);
        assert!(bad.check_gradient(1, 20, 1e-6, 3).is_err());
        assert!(Observable::new("nograd", |x| x[0]).check_gradient(1, 5, 1e-6, 0).is_err());
    }

    fn degrees(max_m: usize, max_n: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1..=max_n, 1..=max_m)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_of_unity(n in 1usize..=50, x in 0.0f64..=1.0) {
            let s: f64 = (0..=n).map(|k| bernstein_basis(n, k, x).unwrap()).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn linear_preservation(d in degrees(3, 8), seed in any::<u64>()) {
            let g = grid(&d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..d.len()).map(|_| rng.random::<f64>()).collect();
            for l in 0..d.len() {
                let s = g.sample(|u| u[l]);
                let v = eval_bernstein_operator(&s, &g, &x).unwrap();
                prop_assert!((v - x[l]).abs() < 1e-12);
            }
        }

        #[test]
        fn second_central_moment(d in degrees(3, 8), seed in any::<u64>()) {
            let g = grid(&d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..d.len()).map(|_| rng.random::<f64>()).collect();
            let s = g.sample(|u| u.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum());
            let lhs = eval_bernstein_operator(&s, &g, &x).unwrap();
            let rhs: f64 = x.iter().zip(&d).map(|(v, &n)| v * (1.0 - v) / n as f64).sum();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn positivity_and_abs_domination(d in degrees(2, 6), seed in any::<u64>()) {
            let g = grid(&d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let abs: Vec<f64> = s.iter().map(|v| v.abs()).collect();
            let x: Vec<f64> = (0..d.len()).map(|_| rng.random::<f64>()).collect();
            let v = eval_bernstein_operator(&s, &g, &x).unwrap();
            let va = eval_bernstein_operator(&abs, &g, &x).unwrap();
            prop_assert!(va >= 0.0);
            prop_assert!(v.abs() <= va + 1e-14);
            let sup = abs.iter().cloned().fold(0.0, f64::max);
            prop_assert!(v.abs() <= sup + 1e-14);
        }

        #[test]
        fn conversion_reproduces_basis(d in degrees(3, 4), seed in any::<u64>()) {
            let deg = DegreeVector::new(d.clone()).unwrap();
            let c = conversion_matrix(&deg);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..d.len()).map(|_| rng.random::<f64>()).collect();
            let lhs = &c * monomial_vector(&deg, &x);
            let rhs = bernstein_vector(&deg, &x);
            for (a, b) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn conversion_is_unit_upper_triangular(n in 1usize..=20) {
            let c = univariate_conversion(n);
            for k in 0..=n {
                for j in 0..k {
                    prop_assert_eq!(c[(k, j)], 0.0);
                }
            }
            prop_assert!((c.determinant().abs() - (0..=n).map(|j| binomial(n, j)).product::<f64>()).abs()
                / (0..=n).map(|j| binomial(n, j)).product::<f64>() < 1e-6);
        }
    }
}
