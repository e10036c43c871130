use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::bernstein::{DegreeVector, LatticeGrid};
use crate::domain::{euclidean, BoxDomain, BOX_TOL};
use crate::error::{Error, Result};
use crate::modulus::{spectral_norm, LipschitzData};

use super::dataset::{validate_permutation, DataSet};

/// Distance within which a point outside the image hull is projected onto
/// it instead of being rejected.
pub const HULL_PROJECTION_TOL: f64 = 1e-6;

const BARY_TOL: f64 = 1e-12;

/// One Kuhn simplex of a lattice cell and its affine piece
/// `S(x) = S(v_0) + A (x - v_0)`.
#[derive(Debug, Clone)]
pub struct Simplex {
    /// Lower corner of the cell, as a multi-index.
    pub cell: Vec<usize>,
    /// Axis order: the path `v_0 → v_m` steps along `order[0]`, then
    /// `order[1]`, and so on.
    pub order: Vec<usize>,
    /// Flat lattice indices of `v_0 .. v_m`.
    pub vertices: Vec<usize>,
    pub origin: Vec<f64>,
    pub image_origin: Vec<f64>,
    pub linear: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub det: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Pieces {
    Identity,
    Affine(BoxDomain),
    Simplicial {
        simplices: Vec<Simplex>,
        /// Rank of every axis order in the per-cell listing.
        orders: Vec<Vec<usize>>,
    },
}

/// Piecewise-linear bijection from `[0,1]^m` onto the data domain that
/// sends lattice vertex `j` to data point `π[j]`.
#[derive(Debug, Clone)]
pub struct LatticeMap {
    degree: DegreeVector,
    assignment: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    pieces: Pieces,
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn point_in_cell(degree: &DegreeVector, x: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut cell = Vec::with_capacity(x.len());
    let mut local = Vec::with_capacity(x.len());
    for (l, &v) in x.iter().enumerate() {
        let n = degree.get(l);
        let s = v * n as f64;
        let k = (s.floor().max(0.0) as usize).min(n - 1);
        cell.push(k);
        local.push(s - k as f64);
    }
    (cell, local)
}

/// Axis order of the Kuhn simplex holding local coordinates `t`:
/// decreasing `t`, ties broken by axis.
fn order_of(t: &[f64]) -> Vec<usize> {
    let mut o: Vec<usize> = (0..t.len()).collect();
    o.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
    o
}

/// Barycentric coordinates of local cell coordinates in the simplex with
/// the given axis order.
fn barycentric(t: &[f64], order: &[usize]) -> Vec<f64> {
    let m = order.len();
    let mut b = Vec::with_capacity(m + 1);
    b.push(1.0 - t[order[0]]);
    for i in 0..m - 1 {
        b.push(t[order[i]] - t[order[i + 1]]);
    }
    b.push(t[order[m - 1]]);
    b
}

impl LatticeMap {
    /// Builds the map from images of the lattice vertices, in lattice
    /// order.
    pub fn from_vertices(degree: &DegreeVector, nodes: Vec<Vec<f64>>) -> Result<Self> {
        let assignment = (0..nodes.len()).collect();
        Self::assemble(degree, nodes, assignment)
    }

    fn assemble(degree: &DegreeVector, nodes: Vec<Vec<f64>>, assignment: Vec<usize>) -> Result<Self> {
        let grid = LatticeGrid::new(degree.clone());
        let m = degree.dim();
        if nodes.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: nodes.len(),
            });
        }
        if nodes.iter().any(|v| v.len() != m) {
            return Err(Error::Data("vertex image has the wrong dimension".into()));
        }
        let identity = (0..grid.len()).all(|j| {
            grid.point(j)
                .iter()
                .zip(&nodes[j])
                .all(|(a, b)| a.to_bits() == b.to_bits())
        });
        if identity {
            return Ok(Self {
                degree: degree.clone(),
                assignment,
                nodes,
                pieces: Pieces::Identity,
            });
        }
        let orders = permutations(m);
        let strides = degree.strides();
        let cell_count: usize = degree.degrees().iter().product();
        let mut simplices = Vec::with_capacity(cell_count * orders.len());
        for c in 0..cell_count {
            let cell = cell_multi_index(degree, c);
            let base: usize = cell.iter().zip(&strides).map(|(k, s)| k * s).sum();
            for order in &orders {
                let mut vertices = vec![base];
                for &l in order {
                    vertices.push(vertices.last().unwrap() + strides[l]);
                }
                let mut linear = DMatrix::zeros(m, m);
                for (i, &l) in order.iter().enumerate() {
                    let a = &nodes[vertices[i]];
                    let b = &nodes[vertices[i + 1]];
                    let n = degree.get(l) as f64;
                    for r in 0..m {
                        linear[(r, l)] = n * (b[r] - a[r]);
                    }
                }
                let det = linear.determinant();
                let index = simplices.len();
                let inverse = linear.clone().try_inverse().filter(|_| det != 0.0 && det.is_finite()).ok_or_else(|| {
                    Error::DegenerateSimplex {
                        simplex: index,
                        cell: cell.clone(),
                        reason: "image simplex has zero volume".into(),
                    }
                })?;
                let image: Vec<&Vec<f64>> = vertices.iter().map(|&v| &nodes[v]).collect();
                let lo = (0..m).map(|r| image.iter().map(|p| p[r]).fold(f64::INFINITY, f64::min)).collect();
                let hi = (0..m).map(|r| image.iter().map(|p| p[r]).fold(f64::NEG_INFINITY, f64::max)).collect();
                simplices.push(Simplex {
                    origin: grid.point(base),
                    image_origin: nodes[base].clone(),
                    cell: cell.clone(),
                    order: order.clone(),
                    vertices,
                    linear,
                    inverse,
                    det,
                    lo,
                    hi,
                });
            }
        }
        let sign = simplices[0].det.signum();
        for (i, s) in simplices.iter().enumerate() {
            if s.det.signum() != sign {
                return Err(Error::DegenerateSimplex {
                    simplex: i,
                    cell: s.cell.clone(),
                    reason: "image simplex is folded over its neighbours".into(),
                });
            }
        }
        Ok(Self {
            degree: degree.clone(),
            assignment,
            nodes,
            pieces: Pieces::Simplicial { simplices, orders },
        })
    }

    pub fn degree(&self) -> &DegreeVector {
        &self.degree
    }

    pub fn dim(&self) -> usize {
        self.degree.dim()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Images of the lattice vertices, in lattice order.
    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.pieces, Pieces::Identity)
    }

    pub fn simplices(&self) -> &[Simplex] {
        match &self.pieces {
            Pieces::Simplicial { simplices, .. } => simplices,
            _ => &[],
        }
    }

    fn locate(&self, x: &[f64]) -> Option<&Simplex> {
        let Pieces::Simplicial { simplices, orders } = &self.pieces else {
            return None;
        };
        let (cell, t) = point_in_cell(&self.degree, x);
        let order = order_of(&t);
        let rank = orders.binary_search(&order).expect("every order is listed");
        let c = cell_flat_index(&self.degree, &cell);
        Some(&simplices[c * orders.len() + rank])
    }

    /// Flat index of the lattice vertex at `x`, if `x` is one up to
    /// rounding.
    fn vertex_at(&self, x: &[f64]) -> Option<usize> {
        let strides = self.degree.strides();
        let mut j = 0;
        for (l, &v) in x.iter().enumerate() {
            let s = v * self.degree.get(l) as f64;
            let k = s.round();
            if (s - k).abs() > 4.0 * f64::EPSILON * s.abs().max(1.0) || k < 0.0 || k > self.degree.get(l) as f64 {
                return None;
            }
            j += k as usize * strides[l];
        }
        Some(j)
    }

    /// `S(x)` for `x` in the unit box.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !BoxDomain::unit(self.dim()).contains(x, BOX_TOL) {
            return Err(Error::Domain(format!("{x:?} is outside the unit box")));
        }
        Ok(self.eval_extended(x))
    }

    /// `S(x)`, extended past the unit box by the affine piece of the
    /// nearest boundary simplex.
    pub fn eval_extended(&self, x: &[f64]) -> Vec<f64> {
        match &self.pieces {
            Pieces::Identity => x.to_vec(),
            Pieces::Affine(b) => b.from_unit(x),
            Pieces::Simplicial { .. } => {
                if let Some(j) = self.vertex_at(x) {
                    return self.nodes[j].clone();
                }
                let clamped = BoxDomain::unit(self.dim()).clamp(x);
                let s = self.locate(&clamped).expect("simplicial");
                let d = DVector::from_iterator(x.len(), x.iter().zip(&s.origin).map(|(a, b)| a - b));
                let y = &s.linear * d;
                s.image_origin.iter().zip(y.iter()).map(|(a, b)| a + b).collect()
            }
        }
    }

    /// `S^{-1}(y)`. Points within [`HULL_PROJECTION_TOL`] of the image
    /// hull are projected onto it.
    pub fn eval_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let m = self.dim();
        if y.len() != m {
            return Err(Error::Shape {
                expected: m,
                got: y.len(),
            });
        }
        let out_of_hull = || Error::OutOfHull {
            point: y.to_vec(),
            pair: None,
        };
        match &self.pieces {
            Pieces::Identity => {
                let unit = BoxDomain::unit(m);
                if unit.contains(y, HULL_PROJECTION_TOL) {
                    Ok(unit.clamp(y))
                } else {
                    Err(out_of_hull())
                }
            }
            Pieces::Affine(b) => {
                let unit = BoxDomain::unit(m);
                let u = b.to_unit(y);
                let proj = unit.clamp(&u);
                if euclidean(&b.from_unit(&proj), y) <= HULL_PROJECTION_TOL {
                    Ok(proj)
                } else {
                    Err(out_of_hull())
                }
            }
            Pieces::Simplicial { simplices, .. } => {
                let mut best: Option<(f64, Vec<f64>)> = None;
                for s in simplices {
                    let near = (0..m).all(|r| {
                        y[r] >= s.lo[r] - HULL_PROJECTION_TOL && y[r] <= s.hi[r] + HULL_PROJECTION_TOL
                    });
                    if !near {
                        continue;
                    }
                    let d = DVector::from_iterator(m, y.iter().zip(&s.image_origin).map(|(a, b)| a - b));
                    let u = &s.inverse * d;
                    let t: Vec<f64> = (0..m)
                        .map(|l| u[l] * self.degree.get(l) as f64)
                        .collect();
                    let bary = barycentric(&t, &s.order);
                    let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
                    if worst >= -BARY_TOL {
                        let x: Vec<f64> = s.origin.iter().zip(u.iter()).map(|(a, b)| a + b).collect();
                        return Ok(BoxDomain::unit(m).clamp(&x));
                    }
                    if best.as_ref().is_none_or(|(w, _)| worst > *w) {
                        // Clip negative weights and renormalise.
                        let mut b: Vec<f64> = bary.iter().map(|v| v.max(0.0)).collect();
                        let total: f64 = b.iter().sum();
                        b.iter_mut().for_each(|v| *v /= total);
                        let mut x = s.origin.clone();
                        let mut acc = 0.0;
                        for i in (0..m).rev() {
                            acc += b[i + 1];
                            let l = s.order[i];
                            x[l] += acc / self.degree.get(l) as f64;
                        }
                        best = Some((worst, x));
                    }
                }
                if let Some((_, x)) = best {
                    if euclidean(&self.eval_extended(&x), y) <= HULL_PROJECTION_TOL {
                        return Ok(x);
                    }
                }
                Err(out_of_hull())
            }
        }
    }

    /// Affine pieces `A` of every simplex (one matrix for the affine box
    /// map, the unit matrix for the identity).
    fn linear_parts(&self) -> Vec<DMatrix<f64>> {
        let m = self.dim();
        match &self.pieces {
            Pieces::Identity => vec![DMatrix::identity(m, m)],
            Pieces::Affine(b) => vec![DMatrix::from_diagonal(&DVector::from_vec(b.widths()))],
            Pieces::Simplicial { simplices, .. } => simplices.iter().map(|s| s.linear.clone()).collect(),
        }
    }
}

fn cell_multi_index(degree: &DegreeVector, mut c: usize) -> Vec<usize> {
    let m = degree.dim();
    let mut k = vec![0; m];
    for l in (0..m).rev() {
        let n = degree.get(l);
        k[l] = c % n;
        c /= n;
    }
    k
}

fn cell_flat_index(degree: &DegreeVector, cell: &[usize]) -> usize {
    cell.iter()
        .enumerate()
        .fold(0, |acc, (l, &k)| acc * degree.get(l) + k)
}

/// Piecewise-linear map for a verified assignment.
pub fn build_lattice_map(data: &DataSet, degree: &DegreeVector, assignment: &[usize]) -> Result<LatticeMap> {
    data.check_degree(degree)?;
    let assignment = validate_permutation(assignment.to_vec(), data.len())?;
    let nodes = assignment.iter().map(|&p| data.inputs()[p].clone()).collect();
    LatticeMap::assemble(degree, nodes, assignment)
}

/// `x ↦ a + (b - a) x` as a one-cell lattice map.
pub fn affine_box_map(bounds: &BoxDomain) -> Result<LatticeMap> {
    let m = bounds.dim();
    if bounds.widths().iter().any(|w| w.is_nan() || *w <= 0.0) {
        return Err(Error::Domain("affine box map needs positive widths".into()));
    }
    let degree = DegreeVector::uniform(1, m)?;
    let grid = LatticeGrid::new(degree.clone());
    let nodes = grid.points().iter().map(|p| bounds.from_unit(p)).collect();
    Ok(LatticeMap {
        degree,
        assignment: (0..grid.len()).collect(),
        nodes,
        pieces: if bounds.is_unit() {
            Pieces::Identity
        } else {
            Pieces::Affine(bounds.clone())
        },
    })
}

/// `L_S` as the largest spectral norm over affine pieces, `L_S^(l)` as the
/// largest norm of column `l`.
pub fn lipschitz_of_s(map: &LatticeMap) -> LipschitzData {
    let m = map.dim();
    let parts = map.linear_parts();
    let rows = |a: &DMatrix<f64>| -> Vec<Vec<f64>> { (0..m).map(|r| a.row(r).iter().copied().collect()).collect() };
    let full = parts
        .par_iter()
        .map(|a| spectral_norm(&rows(a)))
        .reduce(|| 0.0, f64::max);
    let partial = (0..m)
        .map(|l| parts.iter().map(|a| a.column(l).norm()).fold(0.0, f64::max))
        .collect();
    LipschitzData::new(full, partial)
}
