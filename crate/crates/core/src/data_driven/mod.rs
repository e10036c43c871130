//! Koopman matrices from scattered snapshot pairs, through a
//! piecewise-linear change of variables onto the regular lattice.

mod assignment;
mod dataset;
mod lattice;

pub use assignment::{build_assignment, verify_assignment};
pub use dataset::{load_permutation, read_permutation, write_permutation, DataSet};
pub use lattice::{affine_box_map, build_lattice_map, lipschitz_of_s, LatticeMap, Simplex, HULL_PROJECTION_TOL};

use rayon::prelude::*;

use crate::bernstein::DegreeVector;
use crate::bounds::{bound_data_driven, BoundReport};
use crate::error::{Error, Result};
use crate::koopman::{predict_trajectory, predict_trajectory_bernstein, KoopmanMatrices};
use crate::modulus::ModulusEstimate;

/// Pulled-back matrices and the lattice map they live on.
#[derive(Debug, Clone)]
pub struct DataKoopman {
    pub matrices: KoopmanMatrices,
    pub map: LatticeMap,
    /// `y_{π(j)}` in lattice order.
    pub outputs: Vec<Vec<f64>>,
}

/// Column `j` of the sample matrix is `X(S^{-1}(y_{π(j)}))`.
pub fn build_data_koopman(data: &DataSet, degree: &DegreeVector, map: &LatticeMap) -> Result<DataKoopman> {
    data.check_degree(degree)?;
    if map.degree() != degree {
        return Err(Error::Data(format!(
            "lattice map has degree {}, expected {degree}",
            map.degree()
        )));
    }
    let images = map
        .assignment()
        .par_iter()
        .map(|&p| {
            map.eval_inverse(&data.outputs()[p]).map_err(|e| match e {
                Error::OutOfHull { point, .. } => Error::OutOfHull {
                    point,
                    pair: Some(p + 1),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DataKoopman {
        matrices: KoopmanMatrices::from_images(degree, images)?,
        map: map.clone(),
        outputs: map.assignment().iter().map(|&p| data.outputs()[p].clone()).collect(),
    })
}

/// Assignment, lattice map and matrices in one call. A supplied `perm`
/// replaces the sorting heuristic.
pub fn fit(data: &DataSet, degree: &DegreeVector, perm: Option<&[usize]>) -> Result<DataKoopman> {
    let assignment = match perm {
        Some(p) => {
            verify_assignment(data, degree, p)?;
            p.to_vec()
        }
        None => build_assignment(data, degree)?,
    };
    let map = build_lattice_map(data, degree, &assignment)?;
    build_data_koopman(data, degree, &map)
}

/// How a pulled-back prediction is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Monomial vector times `K^X`.
    Monomial,
    /// Bernstein vector times `K_B`.
    #[default]
    Bernstein,
}

impl DataKoopman {
    /// Lifts `x0` with `S^{-1}`, iterates in lattice coordinates and maps
    /// each state back with `S` (extended past the box if needed).
    pub fn predict(&self, x0: &[f64], steps: usize, route: Route) -> Result<Vec<Vec<f64>>> {
        let z0 = self.map.eval_inverse(x0)?;
        let traj = match route {
            Route::Monomial => predict_trajectory(&self.matrices, &z0, steps)?,
            Route::Bernstein => predict_trajectory_bernstein(&self.matrices, &z0, steps)?,
        };
        Ok(traj.iter().map(|z| self.map.eval_extended(z)).collect())
    }

    /// Approximation of `f ∘ φ` at `x`: `Σ_j f(y_{π(j)}) b_j(S^{-1}(x))`.
    pub fn approximate(&self, f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
        let z = self.map.eval_inverse(x)?;
        let samples: Vec<f64> = self.outputs.iter().map(|y| f(y)).collect();
        Ok(crate::bernstein::eval_bernstein_unchecked(&samples, &self.matrices.degree, &z))
    }
}

/// Full and partial data-driven bounds from the modulus of `f`, the
/// Lipschitz constant of the map and the lattice map's constants.
pub fn data_driven_bounds(
    modulus: &ModulusEstimate,
    l_phi: f64,
    map: &LatticeMap,
) -> (BoundReport, BoundReport) {
    bound_data_driven(modulus, l_phi, &lipschitz_of_s(map), map.degree())
}
