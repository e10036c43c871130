use crate::bernstein::{DegreeVector, LatticeGrid};
use crate::error::{Error, Result};

use super::dataset::{validate_permutation, DataSet};

/// Pairs lattice vertex `j` (lexicographic order) with data row `π[j]`.
///
/// Points are sorted by the last coordinate into slabs, each slab by the
/// next coordinate, and so on down to the first axis. In the plane this is
/// the band sort: `n_2+1` bands of `n_1+1` points. The result is verified
/// before it is returned.
pub fn build_assignment(data: &DataSet, degree: &DegreeVector) -> Result<Vec<usize>> {
    data.check_degree(degree)?;
    let mut idx: Vec<usize> = (0..data.len()).collect();
    let mut perm = vec![0; data.len()];
    let strides = degree.strides();
    slab_sort(data.inputs(), degree, &strides, degree.dim() - 1, &mut idx, 0, &mut perm);
    verify_assignment(data, degree, &perm).map_err(|e| match e {
        Error::Assignment(msg) => Error::Assignment(format!(
            "{msg}; the sorting heuristic failed, supply the pairing with --perm"
        )),
        other => other,
    })?;
    Ok(perm)
}

fn slab_sort(
    x: &[Vec<f64>],
    degree: &DegreeVector,
    strides: &[usize],
    axis: usize,
    idx: &mut [usize],
    offset: usize,
    perm: &mut [usize],
) {
    idx.sort_by(|&a, &b| x[a][axis].total_cmp(&x[b][axis]).then(a.cmp(&b)));
    let slabs = degree.get(axis) + 1;
    let size = idx.len() / slabs;
    for (k, chunk) in idx.chunks_mut(size).enumerate() {
        let base = offset + k * strides[axis];
        if axis == 0 {
            perm[base] = chunk[0];
        } else {
            slab_sort(x, degree, strides, axis - 1, chunk, base, perm);
        }
    }
}

/// Checks that `perm` is a permutation and that the images of lattice
/// edges do not overlap: consecutive images are strictly ordered for
/// `m = 1`, and edges are pairwise non-crossing for `m = 2`. In higher
/// dimension only the permutation itself is checked here; folds are caught
/// when the map is built.
pub fn verify_assignment(data: &DataSet, degree: &DegreeVector, perm: &[usize]) -> Result<()> {
    data.check_degree(degree)?;
    validate_permutation(perm.to_vec(), data.len())?;
    let grid = LatticeGrid::new(degree.clone());
    let at = |j: usize| &data.inputs()[perm[j]];
    match degree.dim() {
        1 => {
            let n = degree.get(0);
            let sign = (at(1)[0] - at(0)[0]).signum();
            for k in 0..n {
                let d = at(k + 1)[0] - at(k)[0];
                if d == 0.0 || d.signum() != sign {
                    return Err(Error::Assignment(format!(
                        "lattice edge {k}-{} folds back",
                        k + 1
                    )));
                }
            }
            Ok(())
        }
        2 => {
            let strides = degree.strides();
            let mut edges: Vec<(usize, usize)> = Vec::with_capacity(2 * grid.len());
            for j in 0..grid.len() {
                let k = grid.multi_index(j);
                for (l, &s) in strides.iter().enumerate() {
                    if k[l] < degree.get(l) {
                        edges.push((j, j + s));
                    }
                }
            }
            let seg: Vec<([f64; 2], [f64; 2])> = edges
                .iter()
                .map(|&(a, b)| ([at(a)[0], at(a)[1]], [at(b)[0], at(b)[1]]))
                .collect();
            let bbox: Vec<[f64; 4]> = seg
                .iter()
                .map(|(p, q)| [p[0].min(q[0]), p[0].max(q[0]), p[1].min(q[1]), p[1].max(q[1])])
                .collect();
            for a in 0..edges.len() {
                for b in a + 1..edges.len() {
                    let (ea, eb) = (edges[a], edges[b]);
                    if ea.0 == eb.0 || ea.0 == eb.1 || ea.1 == eb.0 || ea.1 == eb.1 {
                        continue;
                    }
                    let (p, q) = (bbox[a], bbox[b]);
                    if p[1] < q[0] || q[1] < p[0] || p[3] < q[2] || q[3] < p[2] {
                        continue;
                    }
                    if segments_intersect(seg[a], seg[b]) {
                        let ka = grid.multi_index(ea.0);
                        let kb = grid.multi_index(eb.0);
                        return Err(Error::Assignment(format!(
                            "images of lattice edges at {ka:?} and {kb:?} cross"
                        )));
                    }
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection, touching and collinear overlap included.
pub(crate) fn segments_intersect(s: ([f64; 2], [f64; 2]), t: ([f64; 2], [f64; 2])) -> bool {
    let (p1, p2) = s;
    let (q1, q2) = t;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoxDomain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn jittered_grid(n: usize, amp: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 1.0 / n as f64;
        let mut pts: Vec<Vec<f64>> = BoxDomain::unit(2)
            .grid(n)
            .into_iter()
            .map(|p| {
                p.iter()
                    .map(|&v| {
                        if v > 0.0 && v < 1.0 {
                            v + amp * h * rng.random_range(-1.0..1.0)
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        pts.reverse();
        pts
    }

    #[test]
    fn sorts_one_dimension() {
        let d = DataSet::from_map(vec![vec![0.9], vec![0.1], vec![0.5]], |x| x.to_vec()).unwrap();
        let p = build_assignment(&d, &DegreeVector::new(vec![2]).unwrap()).unwrap();
        assert_eq!(p, vec![1, 2, 0]);
    }

    #[test]
    fn regular_lattice_is_recovered() {
        for degrees in [vec![3, 2], vec![2, 1, 2]] {
            let deg = DegreeVector::new(degrees).unwrap();
            let grid = LatticeGrid::new(deg.clone());
            let mut pts = grid.points();
            pts.reverse();
            let d = DataSet::from_map(pts.clone(), |x| x.to_vec()).unwrap();
            let p = build_assignment(&d, &deg).unwrap();
            for j in 0..grid.len() {
                assert_eq!(pts[p[j]], grid.point(j));
            }
        }
    }

    #[test]
    fn jittered_grid_passes() {
        let d = DataSet::from_map(jittered_grid(3, 0.3, 5), |x| x.to_vec()).unwrap();
        let deg = DegreeVector::uniform(3, 2).unwrap();
        let p = build_assignment(&d, &deg).unwrap();
        assert!(verify_assignment(&d, &deg, &p).is_ok());
    }

    #[test]
    fn jitter_below_half_cell() {
        let deg = DegreeVector::uniform(3, 2).unwrap();
        for seed in 0..50 {
            let d = DataSet::from_map(jittered_grid(3, 0.49, seed), |x| x.to_vec()).unwrap();
            assert!(build_assignment(&d, &deg).is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn crossing_is_detected() {
        let deg = DegreeVector::uniform(1, 2).unwrap();
        let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let d = DataSet::from_map(pts, |x| x.to_vec()).unwrap();
        assert!(verify_assignment(&d, &deg, &[0, 1, 2, 3]).is_ok());
        // Swapping two vertices makes the two horizontal edges cross.
        assert!(matches!(verify_assignment(&d, &deg, &[0, 3, 2, 1]), Err(Error::Assignment(_))));
        assert!(matches!(
            verify_assignment(&d, &DegreeVector::new(vec![3]).unwrap(), &[0, 1, 2, 3]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn segment_predicate() {
        assert!(segments_intersect(([0.0, 0.0], [1.0, 1.0]), ([0.0, 1.0], [1.0, 0.0])));
        assert!(!segments_intersect(([0.0, 0.0], [1.0, 0.0]), ([0.0, 1.0], [1.0, 1.0])));
        assert!(segments_intersect(([0.0, 0.0], [2.0, 0.0]), ([1.0, 0.0], [3.0, 0.0])));
        assert!(segments_intersect(([0.0, 0.0], [2.0, 0.0]), ([1.0, 0.0], [1.0, 1.0])));
    }
}
