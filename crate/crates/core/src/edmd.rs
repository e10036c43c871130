//! Least-squares Koopman matrix over the monomial dictionary.

use nalgebra::{DMatrix, DVector};

use crate::bernstein::{monomial_vector, DegreeVector};
use crate::data_driven::DataSet;
use crate::error::{Error, Result};
use crate::koopman::gamma_index;

/// Default relative cut-off for singular values.
pub const DEFAULT_TRUNCATION: f64 = 1e-10;

/// Conventional rank cut-off of a numerical Moore-Penrose pseudoinverse,
/// `max(rows, cols) · ε`, relative to the largest singular value.
pub fn standard_truncation(rows: usize, cols: usize) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON
}

#[derive(Debug, Clone)]
pub struct EdmdMatrices {
    pub degree: DegreeVector,
    /// Column `j` is `X(x_j)`.
    pub u_x: DMatrix<f64>,
    /// Column `j` is `X(y_j)`.
    pub u_y: DMatrix<f64>,
    /// `U_Y U_X^+`.
    pub k: DMatrix<f64>,
    pub rank_used: usize,
    pub truncation_tol: f64,
    pub gamma: Vec<usize>,
}

fn dictionary(degree: &DegreeVector, points: &[Vec<f64>]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = points.iter().map(|p| monomial_vector(degree, p)).collect();
    DMatrix::from_columns(&cols)
}

/// Pseudoinverse by SVD, dropping singular values below `tol · σ_max`.
pub fn truncated_pinv(a: &DMatrix<f64>, tol: f64) -> Result<(DMatrix<f64>, usize)> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = tol * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cut && svd.singular_values[i] > 0.0)
        .collect();
    if keep.is_empty() {
        return Err(Error::RankZero { tol });
    }
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let mut pinv = DMatrix::zeros(a.ncols(), a.nrows());
    for &i in &keep {
        let s = svd.singular_values[i];
        pinv += (vt.row(i).transpose() / s) * u.column(i).transpose();
    }
    Ok((pinv, keep.len()))
}

pub fn build_edmd(data: &DataSet, degree: &DegreeVector) -> Result<EdmdMatrices> {
    build_edmd_with_tolerance(data, degree, DEFAULT_TRUNCATION)
}

pub fn build_edmd_with_tolerance(data: &DataSet, degree: &DegreeVector, tol: f64) -> Result<EdmdMatrices> {
    if degree.dim() != data.dim() {
        return Err(Error::Data(format!(
            "degree has {} axes but the data is {}-dimensional",
            degree.dim(),
            data.dim()
        )));
    }
    let u_x = dictionary(degree, data.inputs());
    let u_y = dictionary(degree, data.outputs());
    let (pinv, rank_used) = truncated_pinv(&u_x, tol)?;
    let k = &u_y * pinv;
    let gamma = (0..degree.dim())
        .map(|l| gamma_index(degree, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(EdmdMatrices {
        degree: degree.clone(),
        u_x,
        u_y,
        k,
        rank_used,
        truncation_tol: tol,
        gamma,
    })
}

/// Lifts `x0` once and applies `K` repeatedly, reading the coordinate
/// monomials. Divergence is reported as is.
pub fn predict_edmd(matrices: &EdmdMatrices, x0: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    if x0.len() != matrices.degree.dim() {
        return Err(Error::Shape {
            expected: matrices.degree.dim(),
            got: x0.len(),
        });
    }
    let mut z = monomial_vector(&matrices.degree, x0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        z = &matrices.k * z;
        out.push(matrices.gamma.iter().map(|&g| z[g]).collect());
    }
    Ok(out)
}

impl EdmdMatrices {
    /// `‖K U_X − U_Y‖_F`.
    pub fn residual(&self) -> f64 {
        (&self.k * &self.u_x - &self.u_y).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::LatticeGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lattice_data(n: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> (DataSet, DegreeVector) {
        let deg = DegreeVector::new(vec![n]).unwrap();
        let pts = LatticeGrid::new(deg.clone()).points();
        (DataSet::from_map(pts, f).unwrap(), deg)
    }

    #[test]
    fn identity_gives_identity() {
        let deg = DegreeVector::uniform(3, 2).unwrap();
        let data = DataSet::from_map(LatticeGrid::new(deg.clone()).points(), |x| x.to_vec()).unwrap();
        let e = build_edmd(&data, &deg).unwrap();
        let id = DMatrix::<f64>::identity(16, 16);
        assert!((&e.k - id).amax() < 1e-8);
        let traj = predict_edmd(&e, &[0.3, 0.7], 4).unwrap();
        for p in traj {
            assert!((p[0] - 0.3).abs() < 1e-8 && (p[1] - 0.7).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_map_is_diagonal() {
        let (data, deg) = lattice_data(4, |x| vec![0.5 * x[0]]);
        let e = build_edmd(&data, &deg).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 0.5f64.powi(i as i32) } else { 0.0 };
                assert!((e.k[(i, j)] - want).abs() < 1e-8);
            }
        }
        let traj = predict_edmd(&e, &[1.0], 3).unwrap();
        for (p, want) in traj.iter().zip([0.5, 0.25, 0.125]) {
            assert!((p[0] - want).abs() < 1e-8);
        }
    }

    #[test]
    fn rank_zero_is_an_error() {
        let deg = DegreeVector::new(vec![1]).unwrap();
        let a = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(truncated_pinv(&a, 1e-10), Err(Error::RankZero { .. })));
        let data = DataSet::new(vec![vec![0.0], vec![1.0]], vec![vec![0.0], vec![0.0]]).unwrap();
        assert!(build_edmd(&data, &deg).is_ok());
    }

    #[test]
    fn matches_normal_equations() {
        let (data, deg) = lattice_data(3, |x| vec![x[0] * x[0] * 0.9 + 0.05]);
        let e = build_edmd(&data, &deg).unwrap();
        let g = &e.u_x * e.u_x.transpose();
        let k2 = &e.u_y * e.u_x.transpose() * g.try_inverse().unwrap();
        assert!((&e.k - k2).amax() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn least_squares_optimal(seed in 0u64..10_000, n in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let deg = DegreeVector::uniform(n, 2).unwrap();
            let pts: Vec<Vec<f64>> = (0..deg.basis_size())
                .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
                .collect();
            let data = DataSet::from_map(pts, |x| vec![x[0] * x[1], (x[0] + x[1]) / 2.0]).unwrap();
            let e = build_edmd(&data, &deg).unwrap();
            let base = e.residual();
            for _ in 0..100 {
                let p = DMatrix::from_fn(e.k.nrows(), e.k.ncols(), |_, _| rng.random_range(-1e-3..1e-3));
                let r = ((&e.k + p) * &e.u_x - &e.u_y).norm();
                prop_assert!(base <= r + 1e-12);
            }
        }
    }
}
