//! Certified uniform error bounds for the Bernstein approximation of the
//! Koopman operator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bernstein::{bernstein_gradient, eval_bernstein_unchecked, DegreeVector, LatticeGrid, Observable};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::koopman::{lattice_images, MapOnBox};
use crate::modulus::{default_resolution, LipschitzData, ModulusEstimate, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremTag {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6a,
    T6b,
    T6c,
    AppA,
    MeasNoise,
    DataFull,
    DataPartial,
}

impl TheoremTag {
    pub const ALL: [TheoremTag; 12] = [
        TheoremTag::T1,
        TheoremTag::T2,
        TheoremTag::T3,
        TheoremTag::T4,
        TheoremTag::T5,
        TheoremTag::T6a,
        TheoremTag::T6b,
        TheoremTag::T6c,
        TheoremTag::AppA,
        TheoremTag::MeasNoise,
        TheoremTag::DataFull,
        TheoremTag::DataPartial,
    ];
}

impl fmt::Display for TheoremTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for TheoremTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremTag::ALL
            .iter()
            .copied()
            .find(|t| t.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown bound `{s}`")))
    }
}

/// A computed bound together with the constants that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub tag: TheoremTag,
    pub value: f64,
    pub m: usize,
    pub degrees: Vec<usize>,
    pub k: usize,
    pub constants: Vec<(String, f64)>,
    /// Some modulus argument exceeded the set diameter and was clamped.
    pub clamped: bool,
}

impl BoundReport {
    fn new(tag: TheoremTag, degree: &DegreeVector, k: usize) -> Self {
        Self {
            tag,
            value: 0.0,
            m: degree.dim(),
            degrees: degree.degrees().to_vec(),
            k,
            constants: Vec::new(),
            clamped: false,
        }
    }

    fn constant(mut self, name: &str, value: f64) -> Self {
        self.constants.push((name.to_string(), value));
        self
    }

    fn modulus(&mut self, est: &ModulusEstimate, delta: f64) -> f64 {
        let (v, c) = est.evaluate_with_clamp(delta);
        self.clamped |= c;
        v
    }

    fn finish(mut self, value: f64) -> Self {
        self.value = value.max(0.0);
        self
    }

    pub fn csv_header() -> &'static str {
        "theorem_tag,m,degrees,k,value,constants,clamped"
    }

    pub fn to_csv_row(&self) -> String {
        let degrees: Vec<String> = self.degrees.iter().map(|d| d.to_string()).collect();
        let constants: Vec<String> = self
            .constants
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.tag,
            self.m,
            degrees.join(";"),
            self.k,
            self.value,
            constants.join(";"),
            self.clamped
        )
    }
}

fn single(n: usize) -> DegreeVector {
    DegreeVector::new(vec![n.max(1)]).expect("positive degree")
}

/// `(3/2) ω_f(L_φ / √n)` with the modulus taken over the image interval.
pub fn bound_univariate_continuous(modulus: &ModulusEstimate, l_phi: f64, n: usize) -> BoundReport {
    let delta = l_phi / (n as f64).sqrt();
    let mut r = BoundReport::new(TheoremTag::T1, &single(n), 1)
        .constant("L", l_phi)
        .constant("delta", delta);
    let w = r.modulus(modulus, delta);
    r.constant("omega", w).finish(1.5 * w)
}

/// `(1/√n) (L_φ ω_{f'}(L_φ/(2√n)) + sup|f'∘φ| L_{φ'}/(2√n))`.
pub fn bound_univariate_c1(
    derivative_modulus: &ModulusEstimate,
    l_phi: f64,
    l_dphi: f64,
    sup_derivative: f64,
    n: usize,
) -> BoundReport {
    let rn = (n as f64).sqrt();
    let mut r = BoundReport::new(TheoremTag::T2, &single(n), 1)
        .constant("L", l_phi)
        .constant("L_dphi", l_dphi)
        .constant("sup_df", sup_derivative);
    let w = r.modulus(derivative_modulus, l_phi / (2.0 * rn));
    let value = (l_phi * w + sup_derivative * l_dphi / (2.0 * rn)) / rn;
    r.constant("omega_df", w).finish(value)
}

/// `(3/2) Ω_f(L_φ sqrt(Σ 1/n_l))` over the image.
pub fn bound_multivariate_full(modulus: &ModulusEstimate, l_phi: f64, degree: &DegreeVector) -> BoundReport {
    let delta = l_phi * degree.inverse_root_sum();
    let mut r = BoundReport::new(TheoremTag::T3, degree, 1)
        .constant("L", l_phi)
        .constant("delta", delta);
    let w = r.modulus(modulus, delta);
    r.constant("omega", w).finish(1.5 * w)
}

/// `(3/2) Σ_l Ω_f(L^(l)_φ / √n_l)` over the image.
pub fn bound_multivariate_partial(
    modulus: &ModulusEstimate,
    partial: &[f64],
    degree: &DegreeVector,
) -> BoundReport {
    let mut r = BoundReport::new(TheoremTag::T4, degree, 1);
    let mut total = 0.0;
    for (l, (&lp, &n)) in partial.iter().zip(degree.degrees()).enumerate() {
        let w = r.modulus(modulus, lp / (n as f64).sqrt());
        r = r.constant(&format!("L{}", l + 1), lp).constant(&format!("omega{}", l + 1), w);
        total += w;
    }
    r.finish(1.5 * total)
}

/// `Σ_l (1/√n_l)(L^(l) Ω_∇f(L^(l)/(2√n_l)) + sup‖∇f‖ L^(l)_∂/(2√n_l))`.
pub fn bound_multivariate_c1(
    gradient_modulus: &ModulusEstimate,
    partial: &[f64],
    derivative_partial: &[f64],
    sup_gradient: f64,
    degree: &DegreeVector,
) -> BoundReport {
    let mut r = BoundReport::new(TheoremTag::T5, degree, 1).constant("sup_grad", sup_gradient);
    let mut total = 0.0;
    for l in 0..degree.dim() {
        let rn = (degree.get(l) as f64).sqrt();
        let lp = partial[l];
        let w = r.modulus(gradient_modulus, lp / (2.0 * rn));
        r = r
            .constant(&format!("L{}", l + 1), lp)
            .constant(&format!("Ld{}", l + 1), derivative_partial[l])
            .constant(&format!("omega_grad{}", l + 1), w);
        total += (lp * w + sup_gradient * derivative_partial[l] / (2.0 * rn)) / rn;
    }
    r.finish(total)
}

/// `(3/2) Σ_{l=1}^k 4^{k-l} Ω_f(L_φ^l δ)` with `δ = sqrt(Σ 1/n_l)`.
pub fn bound_iterated_alternative(
    modulus: &ModulusEstimate,
    l_phi: f64,
    degree: &DegreeVector,
    k: usize,
) -> BoundReport {
    let delta = degree.inverse_root_sum();
    let mut r = BoundReport::new(TheoremTag::AppA, degree, k)
        .constant("L", l_phi)
        .constant("delta", delta);
    let mut total = 0.0;
    for l in 1..=k {
        let w = r.modulus(modulus, l_phi.powi(l as i32) * delta);
        total += 4f64.powi((k - l) as i32) * w;
    }
    r.finish(1.5 * total)
}

/// `Ω_f(‖Δ‖_∞)`.
pub fn bound_measurement_noise(modulus: &ModulusEstimate, noise_sup: f64) -> BoundReport {
    let mut r = BoundReport {
        tag: TheoremTag::MeasNoise,
        value: 0.0,
        m: 0,
        degrees: Vec::new(),
        k: 1,
        constants: vec![("noise_sup".into(), noise_sup)],
        clamped: false,
    };
    if noise_sup <= 0.0 {
        return r;
    }
    let w = r.modulus(modulus, noise_sup);
    r.finish(w)
}

/// Full and partial bounds for the pulled-back operator built on a lattice
/// map with Lipschitz data `s`.
pub fn bound_data_driven(
    modulus: &ModulusEstimate,
    l_phi: f64,
    s: &LipschitzData,
    degree: &DegreeVector,
) -> (BoundReport, BoundReport) {
    let delta = l_phi * s.full * degree.inverse_root_sum();
    let mut full = BoundReport::new(TheoremTag::DataFull, degree, 1)
        .constant("L_phi", l_phi)
        .constant("L_S", s.full);
    let w = full.modulus(modulus, delta);
    let full = full.constant("omega", w).finish(1.5 * w);

    let mut part = BoundReport::new(TheoremTag::DataPartial, degree, 1).constant("L_phi", l_phi);
    let mut total = 0.0;
    for (l, (&ls, &n)) in s.partial.iter().zip(degree.degrees()).enumerate() {
        let w = part.modulus(modulus, l_phi * ls / (n as f64).sqrt());
        part = part.constant(&format!("L_S{}", l + 1), ls);
        total += w;
    }
    (full, part.finish(1.5 * total))
}

/// Which inequality an iterated bound instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterVariant {
    Full,
    Partial,
    C1,
}

/// Precomputed ingredients for all bounds of one (map, observable) pair:
/// Lipschitz data, the sampled image, and certified moduli of `f`.
pub struct BoundContext {
    map: MapOnBox,
    f: Observable,
    lipschitz: LipschitzData,
    image: SampleSet,
    modulus: ModulusEstimate,
    gradient: Option<(ModulusEstimate, f64)>,
    resolution: usize,
}

impl BoundContext {
    pub fn new(map: &MapOnBox, f: &Observable) -> Self {
        Self::with_resolution(map, f, default_resolution(map.dim()))
    }

    pub fn with_resolution(map: &MapOnBox, f: &Observable, resolution: usize) -> Self {
        Self::with_settings(map, f, resolution, true)
    }

    /// `inflate = false` keeps the raw grid moduli. Those can undercut the
    /// true modulus, so the bounds are no longer certified, but they follow
    /// the asymptotic rate down to smaller scales.
    pub fn with_settings(map: &MapOnBox, f: &Observable, resolution: usize, inflate: bool) -> Self {
        let finish = |e: ModulusEstimate| if inflate { e.inflated() } else { e };
        let lipschitz = map.lipschitz_or_estimate(resolution);
        let image = SampleSet::image(map, resolution);
        let modulus = finish(ModulusEstimate::of_function(&image, |y| f.eval(y)));
        let gradient = f.has_gradient().then(|| {
            let grad = |y: &[f64]| f.gradient(y).expect("gradient present");
            let est = finish(ModulusEstimate::of_vector_function(&image, grad));
            let sup = image.sup_norm(grad) + est.evaluate_with_clamp(0.0).0;
            (est, sup)
        });
        Self {
            map: map.clone(),
            f: f.clone(),
            lipschitz,
            image,
            modulus,
            gradient,
            resolution,
        }
    }

    pub fn lipschitz(&self) -> &LipschitzData {
        &self.lipschitz
    }

    pub fn image(&self) -> &SampleSet {
        &self.image
    }

    pub fn modulus(&self) -> &ModulusEstimate {
        &self.modulus
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    fn gradient(&self) -> Result<&(ModulusEstimate, f64)> {
        self.gradient
            .as_ref()
            .ok_or_else(|| Error::MissingGradient(self.f.label().to_string()))
    }

    fn derivative_constants(&self) -> Result<&[f64]> {
        self.lipschitz
            .derivative
            .as_deref()
            .ok_or(Error::MissingDerivativeConstants)
    }

    fn require_univariate(&self) -> Result<()> {
        if self.map.dim() != 1 {
            return Err(Error::Config(format!(
                "univariate bound requested for a {}-dimensional map",
                self.map.dim()
            )));
        }
        Ok(())
    }

    pub fn t1(&self, n: usize) -> Result<BoundReport> {
        self.require_univariate()?;
        Ok(bound_univariate_continuous(&self.modulus, self.lipschitz.full, n))
    }

    pub fn t2(&self, n: usize) -> Result<BoundReport> {
        self.require_univariate()?;
        let (g, sup) = self.gradient()?;
        let ld = self.derivative_constants()?[0];
        Ok(bound_univariate_c1(g, self.lipschitz.full, ld, *sup, n))
    }

    pub fn t3(&self, degree: &DegreeVector) -> BoundReport {
        bound_multivariate_full(&self.modulus, self.lipschitz.full, degree)
    }

    pub fn t4(&self, degree: &DegreeVector) -> BoundReport {
        bound_multivariate_partial(&self.modulus, &self.lipschitz.partial, degree)
    }

    pub fn t5(&self, degree: &DegreeVector) -> Result<BoundReport> {
        let (g, sup) = self.gradient()?;
        let ld = self.derivative_constants()?;
        Ok(bound_multivariate_c1(g, &self.lipschitz.partial, ld, *sup, degree))
    }

    pub fn app_a(&self, degree: &DegreeVector, k: usize) -> BoundReport {
        bound_iterated_alternative(&self.modulus, self.lipschitz.full, degree, k)
    }

    /// Robustness bound under sample perturbation, with the modulus of `f` taken over the
    /// image box widened by `noise_sup` on each side.
    pub fn measurement_noise(&self, noise_sup: f64) -> BoundReport {
        if noise_sup <= 0.0 {
            return bound_measurement_noise(&self.modulus, 0.0);
        }
        let (lo, hi) = BoxDomain::bounding(&self.image.points).expect("non-empty image");
        let lo: Vec<f64> = lo.iter().map(|v| v - noise_sup).collect();
        let hi: Vec<f64> = hi.iter().map(|v| v + noise_sup).collect();
        let widened = BoxDomain::new(lo, hi).expect("widened box is non-degenerate");
        let set = SampleSet::grid(&widened, self.resolution);
        let est = ModulusEstimate::of_function(&set, |y| self.f.eval(y)).inflated();
        bound_measurement_noise(&est, noise_sup)
    }

    /// Bernstein coefficients of `(B_n K)^j f` for `j = 1..k-1`; the first is
    /// `f(φ(x̂))` and each next one evaluates the previous polynomial at the
    /// lattice images (the action of `K_B^T`).
    pub fn iterate_coefficients(&self, degree: &DegreeVector, k: usize) -> Result<Vec<Vec<f64>>> {
        let grid = LatticeGrid::new(degree.clone());
        let images = lattice_images(&self.map, &grid)?;
        let mut out = Vec::new();
        if k < 2 {
            return Ok(out);
        }
        let mut c: Vec<f64> = images.iter().map(|y| self.f.eval(y)).collect();
        out.push(c.clone());
        for _ in 2..k {
            c = images
                .iter()
                .map(|y| eval_bernstein_unchecked(&c, degree, y))
                .collect();
            out.push(c.clone());
        }
        Ok(out)
    }

    /// Iterated bound: sum of the single-step bound applied to every
    /// iterate `(B_n K)^j f`, `j = 0..k-1`.
    pub fn t6(&self, degree: &DegreeVector, k: usize, variant: IterVariant) -> Result<BoundReport> {
        let k = k.max(1);
        let first = match variant {
            IterVariant::Full => self.t3(degree),
            IterVariant::Partial => self.t4(degree),
            IterVariant::C1 => self.t5(degree)?,
        };
        let tag = match variant {
            IterVariant::Full => TheoremTag::T6a,
            IterVariant::Partial => TheoremTag::T6b,
            IterVariant::C1 => TheoremTag::T6c,
        };
        let mut total = first.value;
        let mut clamped = first.clamped;
        let mut constants = first.constants.clone();
        constants.push(("term0".into(), first.value));
        for (j, c) in self.iterate_coefficients(degree, k)?.iter().enumerate() {
            let est = ModulusEstimate::of_function(&self.image, |y| eval_bernstein_unchecked(c, degree, y)).inflated();
            let term = match variant {
                IterVariant::Full => bound_multivariate_full(&est, self.lipschitz.full, degree),
                IterVariant::Partial => bound_multivariate_partial(&est, &self.lipschitz.partial, degree),
                IterVariant::C1 => {
                    let grad = |y: &[f64]| bernstein_gradient(c, degree, y);
                    let gest = ModulusEstimate::of_vector_function(&self.image, grad).inflated();
                    let sup = self.image.sup_norm(grad) + gest.evaluate_with_clamp(0.0).0;
                    bound_multivariate_c1(&gest, &self.lipschitz.partial, self.derivative_constants()?, sup, degree)
                }
            };
            clamped |= term.clamped;
            total += term.value;
            constants.push((format!("term{}", j + 1), term.value));
        }
        Ok(BoundReport {
            tag,
            value: total,
            m: degree.dim(),
            degrees: degree.degrees().to_vec(),
            k,
            constants,
            clamped,
        })
    }

    /// Any model-based bound by tag. Data-driven tags are computed by the
    /// data-driven module.
    pub fn bound(&self, tag: TheoremTag, degree: &DegreeVector, k: usize) -> Result<BoundReport> {
        match tag {
            TheoremTag::T1 => self.t1(degree.get(0)),
            TheoremTag::T2 => self.t2(degree.get(0)),
            TheoremTag::T3 => Ok(self.t3(degree)),
            TheoremTag::T4 => Ok(self.t4(degree)),
            TheoremTag::T5 => self.t5(degree),
            TheoremTag::T6a => self.t6(degree, k, IterVariant::Full),
            TheoremTag::T6b => self.t6(degree, k, IterVariant::Partial),
            TheoremTag::T6c => self.t6(degree, k, IterVariant::C1),
            TheoremTag::AppA => Ok(self.app_a(degree, k)),
            other => Err(Error::Config(format!(
                "bound {other} needs a noise level or a data set"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{estimate_modulus, ModulusKind};
    use approx::assert_abs_diff_eq;

    fn identity_modulus() -> ModulusEstimate {
        estimate_modulus(&Observable::new("x", |x| x[0]), &BoxDomain::unit(1), ModulusKind::Full, 1000)
    }

    fn logistic() -> MapOnBox {
        let e = std::f64::consts::E;
        MapOnBox::new("logistic", 1, move |x| vec![x[0] / (e + x[0] * (e - 1.0))]).with_jacobian(move |x| {
            let d = e + x[0] * (e - 1.0);
            vec![vec![e / (d * d)]]
        })
    }

    fn half_square() -> Observable {
        Observable::new("x^2/2", |x| x[0] * x[0] / 2.0).with_gradient(|x| vec![x[0]])
    }

    #[test]
    fn closed_form_examples() {
        let w = identity_modulus();
        assert_abs_diff_eq!(bound_univariate_continuous(&w, 1.0, 100).value, 0.15, epsilon = 1e-3);
        assert_abs_diff_eq!(bound_measurement_noise(&w, 0.01).value, 0.01, epsilon = 1e-3);
        assert_eq!(bound_measurement_noise(&w, 0.0).value, 0.0);
        let zero = estimate_modulus(&Observable::constant(1.0, 1), &BoxDomain::unit(1), ModulusKind::Full, 64);
        assert_eq!(bound_univariate_continuous(&zero, 0.4, 7).value, 0.0);
        assert_eq!(bound_univariate_c1(&zero, 1.0, 0.0, 3.0, 9).value, 0.0);
        let d = DegreeVector::new(vec![4, 9]).unwrap();
        assert_eq!(bound_multivariate_full(&zero, 1.0, &d).value, 0.0);
    }

    #[test]
    fn single_axis_reductions() {
        let w = identity_modulus();
        let d = DegreeVector::new(vec![50]).unwrap();
        let t1 = bound_univariate_continuous(&w, 0.7, 50).value;
        assert_eq!(bound_multivariate_full(&w, 0.7, &d).value, t1);
        assert_eq!(bound_multivariate_partial(&w, &[0.7], &d).value, t1);
        let a = bound_iterated_alternative(&w, 0.7, &d, 1).value;
        assert_eq!(a, t1);
    }

    #[test]
    fn alternative_bound_expansion() {
        let w = identity_modulus();
        let d = DegreeVector::new(vec![400]).unwrap();
        let l = 0.5;
        let delta = 0.05;
        let expect = 1.5 * delta * (16.0 * l + 4.0 * l * l + l * l * l);
        let got = bound_iterated_alternative(&w, l, &d, 3).value;
        assert!((got - expect).abs() < 1.5 * 21.0 / 1000.0, "{got} vs {expect}");
    }

    #[test]
    fn example_two_first_bound() {
        let ctx = BoundContext::new(&logistic(), &half_square());
        let t1 = ctx.t1(100).unwrap().value;
        assert!((t1 - 0.0114).abs() < 0.0006, "{t1}");
        let r = ctx.t2(100).unwrap().value / ctx.t2(400).unwrap().value;
        assert!((r - 4.0).abs() < 0.8, "{r}");
    }

    #[test]
    fn iterated_first_term_matches_single_step() {
        let ctx = BoundContext::new(&logistic(), &half_square());
        let d = DegreeVector::new(vec![30]).unwrap();
        assert_eq!(ctx.t6(&d, 1, IterVariant::Full).unwrap().value, ctx.t3(&d).value);
        assert_eq!(ctx.t6(&d, 1, IterVariant::Partial).unwrap().value, ctx.t4(&d).value);
        assert_eq!(ctx.t6(&d, 1, IterVariant::C1).unwrap().value, ctx.t5(&d).unwrap().value);
        let t6 = ctx.t6(&d, 3, IterVariant::Full).unwrap();
        assert_eq!(t6.k, 3);
        assert!(t6.value > ctx.t3(&d).value);
    }

    #[test]
    fn missing_gradient_is_reported() {
        let f = Observable::new("x", |x| x[0]);
        let ctx = BoundContext::new(&logistic(), &f);
        assert!(matches!(ctx.t2(10), Err(Error::MissingGradient(_))));
    }

    #[test]
    fn csv_row_layout() {
        let w = identity_modulus();
        let r = bound_univariate_continuous(&w, 1.0, 100);
        let row = r.to_csv_row();
        assert!(row.starts_with("T1,1,100,1,"));
        assert_eq!(row.split(',').count(), BoundReport::csv_header().split(',').count());
        assert_eq!("t6b".parse::<TheoremTag>().unwrap(), TheoremTag::T6b);
    }
}
