//! Koopman matrices of the Bernstein-approximated composition operator and
//! trajectory prediction.

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bernstein::{
    bernstein_vector, conversion_matrix, eval_bernstein_unchecked, monomial_vector, DegreeVector,
    LatticeGrid,
};
use crate::domain::{BoxDomain, BOX_TOL};
use crate::error::{Error, Result};
use crate::modulus::{estimate_lipschitz, LipschitzData};

type VectorFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type MatrixFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// What to do when a lattice image leaves the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    /// Out-of-box images are a hard error.
    Strict,
    /// Images are used as they are, even outside the box.
    Permissive,
}

/// A map of the unit box into itself.
#[derive(Clone)]
pub struct MapOnBox {
    eval: Arc<VectorFn>,
    jacobian: Option<Arc<MatrixFn>>,
    label: String,
    dim: usize,
    lipschitz: Option<LipschitzData>,
    containment: Containment,
}

impl fmt::Debug for MapOnBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapOnBox")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("containment", &self.containment)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl MapOnBox {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            jacobian: None,
            label: label.into(),
            dim,
            lipschitz: None,
            containment: Containment::Strict,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new("identity", dim, |x| x.to_vec()).with_jacobian(move |_| {
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        })
    }

    /// Closed-form Jacobian, rows indexed by output component.
    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_lipschitz(mut self, data: LipschitzData) -> Self {
        self.lipschitz = Some(data);
        self
    }

    pub fn with_containment(mut self, containment: Containment) -> Self {
        self.containment = containment;
        self
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        self.jacobian.as_ref().map(|j| j(x))
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn containment(&self) -> Containment {
        self.containment
    }

    pub fn lipschitz(&self) -> Option<&LipschitzData> {
        self.lipschitz.as_ref()
    }

    /// Attached constants, or fresh estimates on a grid of `resolution`.
    pub fn lipschitz_or_estimate(&self, resolution: usize) -> LipschitzData {
        match &self.lipschitz {
            Some(d) => d.clone(),
            None => estimate_lipschitz(self, &BoxDomain::unit(self.dim), resolution),
        }
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &MapOnBox) -> MapOnBox {
        let a = self.eval.clone();
        let b = other.eval.clone();
        MapOnBox::new(
            format!("{}∘{}", self.label, other.label),
            other.dim,
            move |x| a(&b(x)),
        )
        .with_containment(self.containment)
    }
}

/// The matrices of the approximated operator together with the lattice
/// images they were built from.
#[derive(Debug, Clone)]
pub struct KoopmanMatrices {
    pub degree: DegreeVector,
    /// Conversion matrix `C` with `B(x) = C X(x)`.
    pub conversion: DMatrix<f64>,
    /// Sample matrix `U`, column `j` is `X(φ(x̂_j))`.
    pub samples: DMatrix<f64>,
    /// `C U`, acting on Bernstein vectors.
    pub bernstein: DMatrix<f64>,
    /// `U C`, acting on monomial vectors.
    pub monomial: DMatrix<f64>,
    /// 0-based positions of `x_1, .., x_m` inside `X(x)`.
    pub gamma: Vec<usize>,
    pub images: Vec<Vec<f64>>,
}

impl KoopmanMatrices {
    /// Assembles every matrix from lattice images `φ(x̂_j)`.
    pub fn from_images(degree: &DegreeVector, images: Vec<Vec<f64>>) -> Result<Self> {
        let n = degree.basis_size();
        if images.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: images.len(),
            });
        }
        let samples = sample_matrix_from_images(degree, &images);
        let conversion = conversion_matrix(degree);
        let bernstein = &conversion * &samples;
        let monomial = &samples * &conversion;
        let gamma = (0..degree.dim())
            .map(|j| gamma_index(degree, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            degree: degree.clone(),
            conversion,
            samples,
            bernstein,
            monomial,
            gamma,
            images,
        })
    }

    pub fn dim(&self) -> usize {
        self.degree.dim()
    }

    pub fn basis_size(&self) -> usize {
        self.degree.basis_size()
    }

    fn extract(&self, z: &DVector<f64>) -> Vec<f64> {
        self.gamma.iter().map(|&g| z[g]).collect()
    }
}

fn sample_matrix_from_images(degree: &DegreeVector, images: &[Vec<f64>]) -> DMatrix<f64> {
    let n = degree.basis_size();
    let cols: Vec<DVector<f64>> = images
        .par_iter()
        .map(|y| monomial_vector(degree, y))
        .collect();
    DMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Images `φ(x̂_j)` of the lattice, checked against the unit box for
/// strict maps. Values within the box tolerance are snapped onto it.
pub fn lattice_images(map: &MapOnBox, grid: &LatticeGrid) -> Result<Vec<Vec<f64>>> {
    if map.dim() != grid.dim() {
        return Err(Error::Shape {
            expected: grid.dim(),
            got: map.dim(),
        });
    }
    let mut images: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|j| map.eval(&grid.point(j)))
        .collect();
    if map.containment() == Containment::Strict {
        let unit = BoxDomain::unit(grid.dim());
        for (index, y) in images.iter_mut().enumerate() {
            if !unit.contains(y, BOX_TOL) {
                return Err(Error::OutOfBox {
                    index,
                    point: y.clone(),
                });
            }
            *y = unit.clamp(y);
        }
    }
    Ok(images)
}

/// `U = [X(φ(x̂_1)) .. X(φ(x̂_N))]`.
pub fn build_sample_matrix(map: &MapOnBox, grid: &LatticeGrid) -> Result<DMatrix<f64>> {
    let images = lattice_images(map, grid)?;
    Ok(sample_matrix_from_images(grid.degree(), &images))
}

pub fn build_koopman_matrices(map: &MapOnBox, degree: &DegreeVector) -> Result<KoopmanMatrices> {
    let grid = LatticeGrid::new(degree.clone());
    let images = lattice_images(map, &grid)?;
    KoopmanMatrices::from_images(degree, images)
}

/// 0-based position `γ_j` of the monomial `x_j` in `X(x)`.
pub fn gamma_index(degree: &DegreeVector, axis: usize) -> Result<usize> {
    if axis >= degree.dim() {
        return Err(Error::Axis {
            axis,
            dim: degree.dim(),
        });
    }
    Ok(degree.strides()[axis])
}

fn check_start(x0: &[f64], m: usize) -> Result<()> {
    if x0.len() != m {
        return Err(Error::Shape {
            expected: m,
            got: x0.len(),
        });
    }
    if !BoxDomain::unit(m).contains(x0, BOX_TOL) {
        return Err(Error::Domain(format!(
            "initial state {x0:?} is outside the unit box"
        )));
    }
    Ok(())
}

/// Linear predictor: lift `x0` once, then apply `K^X` `steps` times.
/// States may leave the box; no clamping is applied.
pub fn predict_trajectory(
    matrices: &KoopmanMatrices,
    x0: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    check_start(x0, matrices.dim())?;
    let mut z = monomial_vector(&matrices.degree, x0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        z = &matrices.monomial * &z;
        out.push(matrices.extract(&z));
    }
    Ok(out)
}

/// Nonlinear predictor that re-lifts the predicted state at every step.
pub fn predict_trajectory_relift(
    matrices: &KoopmanMatrices,
    x0: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    check_start(x0, matrices.dim())?;
    let unit = BoxDomain::unit(matrices.dim());
    let mut state = x0.to_vec();
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        if step > 0 && !unit.contains(&state, BOX_TOL) {
            return Err(Error::Escape { step, state });
        }
        let z = &matrices.monomial * monomial_vector(&matrices.degree, &state);
        state = matrices.extract(&z);
        out.push(state.clone());
    }
    Ok(out)
}

/// Bernstein prediction: propagates `B(x0)` with `K_B`, extracting each
/// coordinate as the lattice-weighted sum. Agrees with
/// [`predict_trajectory`] in exact arithmetic.
pub fn predict_trajectory_bernstein(
    matrices: &KoopmanMatrices,
    x0: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    check_start(x0, matrices.dim())?;
    let grid = LatticeGrid::new(matrices.degree.clone());
    let nodes = grid.points();
    let mut w = bernstein_vector(&matrices.degree, x0);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        w = &matrices.bernstein * &w;
        out.push(
            (0..matrices.dim())
                .map(|l| nodes.iter().zip(w.iter()).map(|(p, c)| p[l] * c).sum())
                .collect(),
        );
    }
    Ok(out)
}

/// Bernstein coefficients of `B_n K g` from those of `g`: `K_B^T c`.
pub fn apply_to_coefficients(matrices: &KoopmanMatrices, coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = matrices.basis_size();
    if coeffs.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: coeffs.len(),
        });
    }
    let c = DVector::from_column_slice(coeffs);
    Ok(matrices.bernstein.tr_mul(&c).iter().copied().collect())
}

/// One-step prediction `B_n(φ; x0)` straight from lattice images, without
/// assembling any matrix.
pub fn one_step_prediction(degree: &DegreeVector, images: &[Vec<f64>], x0: &[f64]) -> Vec<f64> {
    (0..degree.dim())
        .map(|l| {
            let coord: Vec<f64> = images.iter().map(|y| y[l]).collect();
            eval_bernstein_unchecked(&coord, degree, x0)
        })
        .collect()
}

/// Basis tag written into matrix files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Bernstein,
    Monomial,
    Samples,
    Conversion,
}

impl Basis {
    fn tag(self) -> &'static str {
        match self {
            Basis::Bernstein => "bernstein",
            Basis::Monomial => "monomial",
            Basis::Samples => "samples",
            Basis::Conversion => "conversion",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "bernstein" => Basis::Bernstein,
            "monomial" => Basis::Monomial,
            "samples" => Basis::Samples,
            "conversion" => Basis::Conversion,
            other => return Err(Error::Data(format!("unknown basis tag `{other}`"))),
        })
    }
}

/// Writes a square matrix as CSV: two comment lines
/// (`# kb-koopman v1` and `# m=<m> degrees=<n1;n2> basis=<tag> rows=<r> cols=<c>`)
/// followed by one comma-separated row per line.
pub fn write_matrix_csv(
    out: &mut impl Write,
    matrix: &DMatrix<f64>,
    degree: &DegreeVector,
    basis: Basis,
) -> Result<()> {
    writeln!(out, "# kb-koopman v1")?;
    writeln!(
        out,
        "# m={} degrees={} basis={} rows={} cols={}",
        degree.dim(),
        degree,
        basis.tag(),
        matrix.nrows(),
        matrix.ncols()
    )?;
    for row in matrix.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_csv(input: impl BufRead) -> Result<(DMatrix<f64>, DegreeVector, Basis)> {
    let mut lines = input.lines();
    let magic = lines.next().transpose()?.unwrap_or_default();
    if magic.trim() != "# kb-koopman v1" {
        return Err(Error::Data("missing `# kb-koopman v1` header".into()));
    }
    let meta = lines.next().transpose()?.unwrap_or_default();
    let field = |key: &str| -> Result<String> {
        meta.trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(&format!("{key}=")).map(str::to_string))
            .ok_or_else(|| Error::Data(format!("matrix header lacks `{key}`")))
    };
    let degree: DegreeVector = field("degrees")?.parse()?;
    let basis = Basis::parse(&field("basis")?)?;
    let parse_dim = |key: &str| -> Result<usize> {
        field(key)?
            .parse()
            .map_err(|_| Error::Data(format!("bad `{key}` in matrix header")))
    };
    let (rows, cols) = (parse_dim("rows")?, parse_dim("cols")?);
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        for cell in line.split(',') {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad matrix entry `{cell}`")))?,
            );
        }
    }
    if values.len() != rows * cols {
        return Err(Error::Shape {
            expected: rows * cols,
            got: values.len(),
        });
    }
    Ok((DMatrix::from_row_slice(rows, cols, &values), degree, basis))
}
