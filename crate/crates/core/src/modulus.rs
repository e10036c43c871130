//! Sampled moduli of continuity and Lipschitz constants.
//!
//! A modulus estimate is the exact modulus of the sampled point set: one
//! pass over all sample pairs records the Pareto frontier of
//! (distance, variation), after which any `δ` is answered by binary search.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::Observable;
use crate::domain::{euclidean, BoxDomain};
use crate::koopman::MapOnBox;

/// Default grid resolution (cells per axis) for a given dimension.
pub fn default_resolution(m: usize) -> usize {
    match m {
        1 => 256,
        2 => 96,
        _ => 16,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModulusKind {
    Full,
    /// Variation along one axis with all other coordinates fixed.
    Partial(usize),
}

/// Points over which a modulus is sampled, with the largest distance from
/// any point of the underlying continuous set to its nearest sample.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub cover_radius: f64,
    pub description: String,
    /// Grid shape when the set is a regular box grid.
    grid: Option<(BoxDomain, usize)>,
}

impl SampleSet {
    /// Regular grid with `resolution` cells per axis.
    pub fn grid(domain: &BoxDomain, resolution: usize) -> Self {
        let cell: f64 = domain
            .widths()
            .iter()
            .map(|w| (w / resolution as f64).powi(2))
            .sum::<f64>()
            .sqrt();
        Self {
            points: domain.grid(resolution),
            cover_radius: 0.5 * cell,
            description: format!("grid {resolution} per axis on {:?}", domain.intervals()),
            grid: Some((domain.clone(), resolution)),
        }
    }

    /// Sampled image `φ([0,1]^m)`. In one dimension this is a regular grid on
    /// the hull `[min φ, max φ]` of the sampled image; otherwise it is the
    /// cloud `φ(grid)`, with the cover radius taken as the largest image-cell
    /// diameter.
    pub fn image(map: &MapOnBox, resolution: usize) -> Self {
        let m = map.dim();
        let domain = BoxDomain::unit(m);
        let pts: Vec<Vec<f64>> = domain.grid(resolution).par_iter().map(|x| map.eval(x)).collect();
        if m == 1 {
            let lo = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= 1e-15 {
                return Self {
                    points: vec![vec![lo]],
                    cover_radius: 0.0,
                    description: format!("image point {lo}"),
                    grid: None,
                };
            }
            let hull = BoxDomain::new(vec![lo], vec![hi]).expect("non-degenerate hull");
            let mut set = Self::grid(&hull, resolution);
            set.description = format!("image hull [{lo}, {hi}]");
            set.grid = None;
            return set;
        }
        let cover = image_cell_diameter(&pts, m, resolution);
        Self {
            points: pts,
            cover_radius: cover,
            description: format!("image of grid {resolution} per axis"),
            grid: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest value of `|g|` over the samples.
    pub fn sup_norm(&self, g: impl Fn(&[f64]) -> Vec<f64> + Sync) -> f64 {
        self.points
            .par_iter()
            .map(|p| g(p).iter().map(|v| v * v).sum::<f64>().sqrt())
            .reduce(|| 0.0, f64::max)
    }
}

fn image_cell_diameter(pts: &[Vec<f64>], m: usize, resolution: usize) -> f64 {
    let per = resolution + 1;
    let strides: Vec<usize> = (0..m).map(|l| per.pow((m - 1 - l) as u32)).collect();
    let corners = 1usize << m;
    let cells = resolution.pow(m as u32);
    (0..cells)
        .into_par_iter()
        .map(|c| {
            let mut base = 0;
            let mut rem = c;
            for l in (0..m).rev() {
                base += (rem % resolution) * strides[l];
                rem /= resolution;
            }
            let idx: Vec<usize> = (0..corners)
                .map(|mask| {
                    base + (0..m)
                        .filter(|l| mask & (1 << l) != 0)
                        .map(|l| strides[l])
                        .sum::<usize>()
                })
                .collect();
            let mut d: f64 = 0.0;
            for a in 0..corners {
                for b in a + 1..corners {
                    d = d.max(euclidean(&pts[idx[a]], &pts[idx[b]]));
                }
            }
            d
        })
        .reduce(|| 0.0, f64::max)
}

const BINS: usize = 8192;

/// Best sampled pair per distance bin. Keeping one pair per bin loses at
/// most one bin width in the distance argument, which the certified mode
/// adds back.
struct Frontier {
    bins: Vec<(f64, f64)>,
    scale: f64,
    max_distance: f64,
}

impl Frontier {
    fn new(dmax: f64) -> Self {
        Self {
            bins: vec![(f64::INFINITY, 0.0); BINS],
            scale: if dmax > 0.0 { BINS as f64 / dmax } else { 0.0 },
            max_distance: 0.0,
        }
    }

    fn bin_width(dmax: f64) -> f64 {
        dmax / BINS as f64
    }

    #[inline]
    fn insert(&mut self, d: f64, v: f64) {
        // Nominally equal grid distances differ in the last bits; merge them.
        let d = (d * 1e12).round() / 1e12;
        if d > self.max_distance {
            self.max_distance = d;
        }
        if v <= 0.0 {
            return;
        }
        let b = ((d * self.scale) as usize).min(BINS - 1);
        let slot = &mut self.bins[b];
        if v > slot.1 || (v == slot.1 && d < slot.0) {
            *slot = (d, v);
        }
    }

    fn merge(mut self, other: Frontier) -> Frontier {
        self.max_distance = self.max_distance.max(other.max_distance);
        for (mine, (d, v)) in self.bins.iter_mut().zip(other.bins) {
            if v > mine.1 || (v == mine.1 && d < mine.0) {
                *mine = (d, v);
            }
        }
        self
    }

    /// Flattens to a nondecreasing step function.
    fn steps(self) -> (Vec<(f64, f64)>, f64) {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut best = 0.0;
        for (d, v) in self.bins {
            if v > best {
                best = v;
                out.push((d, v));
            }
        }
        (out, self.max_distance)
    }
}

fn vdist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        (a[0] - b[0]).abs()
    } else {
        euclidean(a, b)
    }
}

/// Sampled modulus of continuity.
#[derive(Debug, Clone)]
pub struct ModulusEstimate {
    kind: ModulusKind,
    steps: Vec<(f64, f64)>,
    diameter: f64,
    cover_radius: f64,
    bin_width: f64,
    inflate: bool,
    restriction: String,
}

impl ModulusEstimate {
    /// Full modulus over every pair of `set`, for vector values (the norm of
    /// the difference is used).
    pub fn over_set(set: &SampleSet, values: &[Vec<f64>]) -> Self {
        let pts = &set.points;
        let dmax = DomainBounds::of(pts).diagonal();
        let n = pts.len();
        let frontier = (0..n)
            .into_par_iter()
            .fold(
                || Frontier::new(dmax),
                |mut acc, i| {
                    for j in i + 1..n {
                        acc.insert(euclidean(&pts[i], &pts[j]), vdist(&values[i], &values[j]));
                    }
                    acc
                },
            )
            .reduce(|| Frontier::new(dmax), Frontier::merge);
        let (steps, diameter) = frontier.steps();
        Self {
            kind: ModulusKind::Full,
            steps,
            diameter,
            cover_radius: set.cover_radius,
            bin_width: Frontier::bin_width(dmax),
            inflate: false,
            restriction: set.description.clone(),
        }
    }

    /// Scalar convenience wrapper around [`ModulusEstimate::over_set`].
    pub fn of_function(set: &SampleSet, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values: Vec<Vec<f64>> = set.points.par_iter().map(|p| vec![f(p)]).collect();
        Self::over_set(set, &values)
    }

    /// Vector-valued wrapper, e.g. for gradients.
    pub fn of_vector_function(set: &SampleSet, g: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Self {
        let values: Vec<Vec<f64>> = set.points.par_iter().map(|p| g(p)).collect();
        Self::over_set(set, &values)
    }

    /// Turns on the certified mode used by the bounds:
    /// `Ω(δ) ≈ raw(δ + 2r + w) + 2 raw(r + w)` with `r` the cover radius and
    /// `w` the distance bin width.
    pub fn inflated(mut self) -> Self {
        self.inflate = true;
        self
    }

    pub fn is_inflated(&self) -> bool {
        self.inflate
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn cover_radius(&self) -> f64 {
        self.cover_radius
    }

    pub fn restriction(&self) -> &str {
        &self.restriction
    }

    fn raw(&self, delta: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.0 <= delta);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].1
        }
    }

    /// Largest sampled variation at distance at most `δ` (arguments above
    /// the diameter are clamped to it).
    pub fn evaluate(&self, delta: f64) -> f64 {
        self.raw(delta.min(self.diameter))
    }

    /// Value used inside bounds, and whether `δ` had to be clamped.
    pub fn evaluate_with_clamp(&self, delta: f64) -> (f64, bool) {
        let clamped = delta > self.diameter;
        let d = delta.min(self.diameter);
        let v = if self.inflate {
            let (r, w) = (self.cover_radius, self.bin_width);
            self.raw(d + 2.0 * r + w) + 2.0 * self.raw(r + w)
        } else {
            self.raw(d)
        };
        (v, clamped)
    }

    /// Value at the diameter, i.e. the full spread of the samples.
    pub fn spread(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.1)
    }
}

struct DomainBounds {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl DomainBounds {
    fn of(points: &[Vec<f64>]) -> Self {
        let (lo, hi) = BoxDomain::bounding(points).unwrap_or((vec![0.0], vec![0.0]));
        Self { lo, hi }
    }

    fn diagonal(&self) -> f64 {
        euclidean(&self.lo, &self.hi)
    }
}

/// Modulus of `f` on a regular grid of `domain`, full or along one axis.
pub fn estimate_modulus(
    f: &Observable,
    domain: &BoxDomain,
    kind: ModulusKind,
    resolution: usize,
) -> ModulusEstimate {
    let set = SampleSet::grid(domain, resolution);
    match kind {
        ModulusKind::Full => ModulusEstimate::of_function(&set, |x| f.eval(x)),
        ModulusKind::Partial(axis) => partial_modulus(f, &set, domain, axis, resolution),
    }
}

fn partial_modulus(
    f: &Observable,
    set: &SampleSet,
    domain: &BoxDomain,
    axis: usize,
    resolution: usize,
) -> ModulusEstimate {
    let m = domain.dim();
    let per = resolution + 1;
    let values: Vec<f64> = set.points.par_iter().map(|p| f.eval(p)).collect();
    let stride = per.pow((m - 1 - axis) as u32);
    let width = domain.widths()[axis];
    let h = width / resolution as f64;
    let lines: Vec<usize> = (0..set.len())
        .filter(|&i| (i / stride).is_multiple_of(per))
        .collect();
    let frontier = lines
        .par_iter()
        .fold(
            || Frontier::new(width),
            |mut acc, &start| {
                for a in 0..per {
                    for b in a + 1..per {
                        let va = values[start + a * stride];
                        let vb = values[start + b * stride];
                        acc.insert((b - a) as f64 * h, (va - vb).abs());
                    }
                }
                acc
            },
        )
        .reduce(|| Frontier::new(width), Frontier::merge);
    let (steps, diameter) = frontier.steps();
    ModulusEstimate {
        kind: ModulusKind::Partial(axis),
        steps,
        diameter,
        cover_radius: 0.5 * h,
        bin_width: Frontier::bin_width(width),
        inflate: false,
        restriction: set.description.clone(),
    }
}

/// Lipschitz constants of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzData {
    pub full: f64,
    pub partial: Vec<f64>,
    /// Per axis, the Lipschitz constant of `∂_l φ` along axis `l`.
    pub derivative: Option<Vec<f64>>,
}

impl LipschitzData {
    pub fn new(full: f64, partial: Vec<f64>) -> Self {
        Self {
            full,
            partial,
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, derivative: Vec<f64>) -> Self {
        self.derivative = Some(derivative);
        self
    }
}

pub(crate) fn spectral_norm(rows: &[Vec<f64>]) -> f64 {
    let r = rows.len();
    let c = rows.first().map_or(0, |v| v.len());
    if r == 1 || c == 1 {
        return rows.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    }
    let m = DMatrix::from_fn(r, c, |i, j| rows[i][j]);
    m.singular_values().max()
}

fn column_norm(rows: &[Vec<f64>], l: usize) -> f64 {
    rows.iter().map(|r| r[l] * r[l]).sum::<f64>().sqrt()
}

/// Column `l` of the Jacobian, closed form when available, otherwise by
/// central differences (one-sided at the faces).
fn derivative_column(map: &MapOnBox, x: &[f64], l: usize, lo: f64, hi: f64) -> Vec<f64> {
    if let Some(j) = map.jacobian(x) {
        return j.iter().map(|row| row[l]).collect();
    }
    let h = 1e-5 * (hi - lo);
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[l] = (x[l] + h).min(hi);
    xm[l] = (x[l] - h).max(lo);
    let step = xp[l] - xm[l];
    map.eval(&xp)
        .iter()
        .zip(map.eval(&xm))
        .map(|(a, b)| (a - b) / step)
        .collect()
}

/// Lipschitz constants from chords on a regular grid. The full constant
/// uses chords to every neighbour within two cells; partial constants use
/// adjacent chords along each axis. When the map carries a Jacobian, its
/// sampled norms are folded in as well.
pub fn estimate_lipschitz(map: &MapOnBox, domain: &BoxDomain, resolution: usize) -> LipschitzData {
    let m = domain.dim();
    let per = resolution + 1;
    let pts = domain.grid(resolution);
    let vals: Vec<Vec<f64>> = pts.par_iter().map(|x| map.eval(x)).collect();
    let strides: Vec<usize> = (0..m).map(|l| per.pow((m - 1 - l) as u32)).collect();
    let index = |i: usize, l: usize| (i / strides[l]) % per;

    let offsets: Vec<Vec<i64>> = {
        let span = 5i64.pow(m as u32);
        (0..span)
            .map(|c| {
                let mut rem = c;
                (0..m)
                    .map(|_| {
                        let v = rem % 5 - 2;
                        rem /= 5;
                        v
                    })
                    .collect::<Vec<i64>>()
            })
            .filter(|o| o.iter().find(|v| **v != 0).is_some_and(|v| *v > 0))
            .collect()
    };

    let full = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            'offsets: for o in &offsets {
                let mut j = i as i64;
                for l in 0..m {
                    let k = index(i, l) as i64 + o[l];
                    if k < 0 || k >= per as i64 {
                        continue 'offsets;
                    }
                    j += o[l] * strides[l] as i64;
                }
                let j = j as usize;
                let dx = euclidean(&pts[i], &pts[j]);
                best = best.max(euclidean(&vals[i], &vals[j]) / dx);
            }
            best
        })
        .reduce(|| 0.0, f64::max);

    let mut partial: Vec<f64> = (0..m)
        .map(|l| {
            (0..pts.len())
                .into_par_iter()
                .filter(|&i| index(i, l) + 1 < per)
                .map(|i| {
                    let j = i + strides[l];
                    euclidean(&vals[i], &vals[j]) / (pts[j][l] - pts[i][l])
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let mut full = full;

    if map.has_jacobian() {
        let (jf, jp) = pts
            .par_iter()
            .map(|x| {
                let j = map.jacobian(x).expect("jacobian present");
                let cols: Vec<f64> = (0..m).map(|l| column_norm(&j, l)).collect();
                (spectral_norm(&j), cols)
            })
            .reduce(
                || (0.0, vec![0.0; m]),
                |a, b| (a.0.max(b.0), a.1.iter().zip(&b.1).map(|(x, y)| x.max(*y)).collect()),
            );
        full = full.max(jf);
        for (p, q) in partial.iter_mut().zip(jp) {
            *p = p.max(q);
        }
    }

    let derivative: Vec<f64> = (0..m)
        .map(|l| {
            let (lo, hi) = (domain.lower()[l], domain.upper()[l]);
            let cols: Vec<Vec<f64>> = pts
                .par_iter()
                .map(|x| derivative_column(map, x, l, lo, hi))
                .collect();
            (0..pts.len())
                .into_par_iter()
                .filter(|&i| index(i, l) + 1 < per)
                .map(|i| {
                    let j = i + strides[l];
                    euclidean(&cols[i], &cols[j]) / (pts[j][l] - pts[i][l])
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();

    LipschitzData {
        full,
        partial,
        derivative: Some(derivative),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit1() -> BoxDomain {
        BoxDomain::unit(1)
    }

    #[test]
    fn identity_modulus_is_delta() {
        let f = Observable::new("x", |x| x[0]);
        let est = estimate_modulus(&f, &unit1(), ModulusKind::Full, 256);
        assert!((est.evaluate(0.2) - 0.2).abs() <= 1.0 / 256.0);
        assert_abs_diff_eq!(est.evaluate(5.0), 1.0, epsilon = 1e-12);
        assert!(est.evaluate_with_clamp(5.0).1);
        assert!(!est.evaluate_with_clamp(0.5).1);
    }

    #[test]
    fn constant_modulus_is_zero() {
        let f = Observable::constant(3.0, 2);
        let est = estimate_modulus(&f, &BoxDomain::unit(2), ModulusKind::Full, 16);
        assert_eq!(est.evaluate(0.3), 0.0);
        assert_eq!(est.evaluate(10.0), 0.0);
    }

    #[test]
    fn half_square_modulus() {
        // sup |x^2 - y^2| / 2 over |x - y| <= δ is δ(2 - δ)/2.
        let f = Observable::new("x^2/2", |x| x[0] * x[0] / 2.0);
        let est = estimate_modulus(&f, &unit1(), ModulusKind::Full, 256);
        assert!((est.evaluate(0.1) - 0.095).abs() < 0.005);
    }

    #[test]
    fn partial_modulus_sees_one_axis() {
        let f = Observable::new("3x1+x2", |x| 3.0 * x[0] + x[1]);
        let d = BoxDomain::unit(2);
        let p0 = estimate_modulus(&f, &d, ModulusKind::Partial(0), 32);
        let p1 = estimate_modulus(&f, &d, ModulusKind::Partial(1), 32);
        assert_abs_diff_eq!(p0.evaluate(0.25), 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(p1.evaluate(0.25), 0.25, epsilon = 1e-12);
        assert_eq!(p0.kind(), ModulusKind::Partial(0));
    }

    #[test]
    fn modulus_grows_with_resolution() {
        let f = Observable::new("sin", |x| (7.0 * x[0]).sin() + x[1] * x[1]);
        let d = BoxDomain::unit(2);
        let coarse = estimate_modulus(&f, &d, ModulusKind::Full, 16);
        let fine = estimate_modulus(&f, &d, ModulusKind::Full, 32);
        for delta in [0.0625, 0.125, 0.25, 0.5] {
            assert!(fine.evaluate(delta) >= coarse.evaluate(delta) - 1e-12);
        }
    }

    #[test]
    fn lipschitz_examples() {
        let id = MapOnBox::new("id", 1, |x| x.to_vec());
        let l = estimate_lipschitz(&id, &unit1(), 256);
        assert!((l.full - 1.0).abs() < 0.02);

        let e = std::f64::consts::E;
        let flow = MapOnBox::new("logistic", 1, move |x| vec![x[0] / (e + x[0] * (e - 1.0))]);
        let l = estimate_lipschitz(&flow, &unit1(), 256);
        assert!((l.full - 1.0 / e).abs() / (1.0 / e) < 0.02);
        let d = l.derivative.unwrap()[0];
        let exact = 2.0 * (e - 1.0) / (e * e);
        assert!((d - exact).abs() / exact < 0.02, "{d} vs {exact}");

        let swap = MapOnBox::new("swap", 2, |x| vec![x[1], x[0]]);
        let l = estimate_lipschitz(&swap, &BoxDomain::unit(2), 32);
        assert!((l.full - 1.0).abs() < 1e-9);
        assert!((l.partial[0] - 1.0).abs() < 1e-9 && (l.partial[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lipschitz_full_vs_partials() {
        let map = MapOnBox::new("m", 2, |x| vec![0.5 * x[0] * x[0] + 0.2 * x[1], x[0] * x[1] * 0.7]);
        let l = estimate_lipschitz(&map, &BoxDomain::unit(2), 64);
        let pmax = l.partial.iter().cloned().fold(0.0, f64::max);
        let psum = l.partial.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(pmax <= l.full * 1.01);
        assert!(l.full <= psum * 1.01);
    }

    #[test]
    fn image_set_hull_in_one_dimension() {
        let e = std::f64::consts::E;
        let flow = MapOnBox::new("logistic", 1, move |x| vec![x[0] / (e + x[0] * (e - 1.0))]);
        let set = SampleSet::image(&flow, 64);
        let hi = set.points.last().unwrap()[0];
        assert_abs_diff_eq!(set.points[0][0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 1.0 / (2.0 * e - 1.0), epsilon = 1e-12);
        assert!(set.cover_radius > 0.0);
    }

    #[test]
    fn inflation_is_conservative() {
        let f = Observable::new("x", |x| x[0]);
        let est = estimate_modulus(&f, &unit1(), ModulusKind::Full, 64).inflated();
        let (v, _) = est.evaluate_with_clamp(0.1);
        assert!(v >= 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn monotone_and_subadditive(a in 1.0f64..8.0, b in 0.5f64..4.0, nu in 0.5f64..4.0, delta in 0.02f64..0.3) {
            let f = Observable::new("g", move |x| (a * x[0]).sin() * b + x[1] * x[0]);
            let est = estimate_modulus(&f, &BoxDomain::unit(2), ModulusKind::Full, 24);
            let h = (2.0f64).sqrt() / 24.0;
            prop_assert!(est.evaluate(delta) <= est.evaluate(delta * 1.5) + 1e-15);
            let lhs = est.evaluate(nu * delta);
            // Chain argument on the grid: interior chain points snap to
            // nodes, so each link grows by at most one cell diagonal.
            let rhs = (1.0 + nu) * est.evaluate(delta + 1.05 * h);
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
