//! Example systems, time-t flow maps rescaled to the unit box, and
//! measurement noise.

pub mod expr;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BoxDomain, BOX_TOL};
use crate::error::{Error, Result};
use crate::koopman::{Containment, MapOnBox};

use expr::{variable_names, Expr};

type FieldFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type ClosedFn = dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync;
type JacobianFn = dyn Fn(&[f64], f64) -> Vec<Vec<f64>> + Send + Sync;

/// Default RK4 resolution.
pub const RK4_STEPS_PER_UNIT: usize = 300;

const VALIDATION_RESOLUTION: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    ClosedForm,
    Integrated,
}

/// A continuous-time system sampled at a fixed horizon.
#[derive(Clone)]
pub struct FlowSpec {
    pub name: String,
    pub kind: FlowKind,
    pub vector_field: Option<Arc<FieldFn>>,
    pub closed_flow: Option<Arc<ClosedFn>>,
    /// Jacobian of the closed flow in native coordinates, if known.
    pub closed_jacobian: Option<Arc<JacobianFn>>,
    pub horizon: f64,
    pub native_box: BoxDomain,
    /// Box rescaled onto the unit box on the output side; defaults to the
    /// native box.
    pub output_box: Option<BoxDomain>,
    pub rk4_steps_per_unit: usize,
    pub containment: Containment,
}

impl fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("horizon", &self.horizon)
            .field("native_box", &self.native_box)
            .field("output_box", &self.output_box)
            .field("rk4_steps_per_unit", &self.rk4_steps_per_unit)
            .field("containment", &self.containment)
            .finish()
    }
}

fn rk4_step(field: &FieldFn, x: &[f64], h: f64) -> Vec<f64> {
    let axpy = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    let k1 = field(x);
    let k2 = field(&axpy(x, &k1, h / 2.0));
    let k3 = field(&axpy(x, &k2, h / 2.0));
    let k4 = field(&axpy(x, &k3, h));
    x.iter()
        .enumerate()
        .map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Fixed-step RK4 over `[0, t]` with `steps` steps. When `guard` is given,
/// leaving that box is an error.
pub fn integrate_rk4(
    field: &FieldFn,
    x0: &[f64],
    t: f64,
    steps: usize,
    guard: Option<&BoxDomain>,
) -> Result<Vec<f64>> {
    let steps = steps.max(1);
    let h = t / steps as f64;
    let mut x = x0.to_vec();
    for _ in 0..steps {
        x = rk4_step(field, &x, h);
        if let Some(b) = guard {
            if !b.contains(&x, BOX_TOL) {
                return Err(Error::FlowEscape {
                    start: x0.to_vec(),
                    bounds: b.intervals(),
                    horizon: t,
                });
            }
        }
    }
    Ok(x)
}

impl FlowSpec {
    pub fn dim(&self) -> usize {
        self.native_box.dim()
    }

    pub fn output_box(&self) -> &BoxDomain {
        self.output_box.as_ref().unwrap_or(&self.native_box)
    }

    pub fn rk4_steps(&self, t: f64) -> usize {
        ((self.rk4_steps_per_unit as f64 * t).ceil() as usize).max(1)
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.horizon = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon.is_nan() || self.horizon <= 0.0 {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        match self.kind {
            FlowKind::ClosedForm if self.closed_flow.is_none() => {
                Err(Error::Config(format!("system `{}` lacks a closed-form flow", self.name)))
            }
            FlowKind::Integrated if self.vector_field.is_none() => {
                Err(Error::Config(format!("system `{}` lacks a vector field", self.name)))
            }
            _ => {
                if self.output_box().dim() != self.dim() {
                    return Err(Error::Config("output box dimension mismatch".into()));
                }
                Ok(())
            }
        }
    }

    /// Time-`t` flow in native coordinates. Strict systems report leaving
    /// the native box during integration.
    pub fn flow_native(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        match self.kind {
            FlowKind::ClosedForm => Ok((self.closed_flow.as_ref().expect("validated"))(x, t)),
            FlowKind::Integrated => {
                let guard = (self.containment == Containment::Strict).then_some(&self.native_box);
                integrate_rk4(
                    self.vector_field.as_deref().expect("validated"),
                    x,
                    t,
                    self.rk4_steps(t),
                    guard,
                )
            }
        }
    }

    fn flow_unchecked(&self, x: &[f64], t: f64) -> Vec<f64> {
        match self.kind {
            FlowKind::ClosedForm => (self.closed_flow.as_ref().expect("validated"))(x, t),
            FlowKind::Integrated => integrate_rk4(
                self.vector_field.as_deref().expect("validated"),
                x,
                t,
                self.rk4_steps(t),
                None,
            )
            .expect("unguarded integration cannot fail"),
        }
    }

    /// RK4 integration of the vector field regardless of the flow kind.
    pub fn integrate(&self, x: &[f64], t: f64, steps: usize) -> Result<Vec<f64>> {
        let field = self
            .vector_field
            .as_deref()
            .ok_or_else(|| Error::Config(format!("system `{}` has no vector field", self.name)))?;
        integrate_rk4(field, x, t, steps, None)
    }
}

/// The time-`t` map composed with the rescalings native box → unit box
/// (input side) and output box → unit box (output side). Strict systems
/// are validated on a 32-per-axis grid and must land in the unit box.
pub fn flow_map(spec: &FlowSpec) -> Result<MapOnBox> {
    spec.validate()?;
    let m = spec.dim();
    if spec.containment == Containment::Strict {
        let unit = BoxDomain::unit(m);
        let grid = unit.grid(VALIDATION_RESOLUTION);
        grid.par_iter().try_for_each(|u| -> Result<()> {
            let x = spec.native_box.from_unit(u);
            let y = spec.flow_native(&x, spec.horizon)?;
            let v = spec.output_box().to_unit(&y);
            if !unit.contains(&v, BOX_TOL) {
                return Err(Error::FlowEscape {
                    start: x,
                    bounds: spec.output_box().intervals(),
                    horizon: spec.horizon,
                });
            }
            Ok(())
        })?;
    }
    let s = spec.clone();
    let t = spec.horizon;
    let mut map = MapOnBox::new(spec.name.clone(), m, move |u| {
        let x = s.native_box.from_unit(u);
        s.output_box().to_unit(&s.flow_unchecked(&x, t))
    })
    .with_containment(spec.containment);
    if let Some(jac) = spec.closed_jacobian.clone() {
        let win = spec.native_box.widths();
        let wout = spec.output_box().widths();
        let native = spec.native_box.clone();
        map = map.with_jacobian(move |u| {
            let x = native.from_unit(u);
            let j = jac(&x, t);
            j.iter()
                .enumerate()
                .map(|(i, row)| row.iter().enumerate().map(|(l, v)| v * win[l] / wout[i]).collect())
                .collect()
        });
    }
    Ok(map)
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 4] = ["van_der_pol", "scalar_logistic", "product_decay_2d", "lotka_volterra"];

/// Example systems.
pub fn builtin(name: &str) -> Result<FlowSpec> {
    let e = std::f64::consts::E;
    let spec = match name {
        "van_der_pol" => FlowSpec {
            name: name.into(),
            kind: FlowKind::Integrated,
            vector_field: Some(Arc::new(|x: &[f64]| vec![x[1], 0.5 * (1.0 - x[0] * x[0]) * x[1] - x[0]])),
            closed_flow: None,
            closed_jacobian: None,
            horizon: 0.3,
            native_box: BoxDomain::from_intervals(&[(-3.0, 3.0), (-3.0, 3.0)])?,
            output_box: None,
            rk4_steps_per_unit: RK4_STEPS_PER_UNIT,
            // Corners of the box are carried outside it within t = 0.3.
            containment: Containment::Permissive,
        },
        "scalar_logistic" => FlowSpec {
            name: name.into(),
            kind: FlowKind::ClosedForm,
            vector_field: Some(Arc::new(|x: &[f64]| vec![-x[0] * (1.0 + x[0])])),
            closed_flow: Some(Arc::new(|x: &[f64], t: f64| {
                let et = t.exp();
                vec![x[0] / (et + x[0] * (et - 1.0))]
            })),
            closed_jacobian: Some(Arc::new(|x: &[f64], t: f64| {
                let et = t.exp();
                let d = et + x[0] * (et - 1.0);
                vec![vec![et / (d * d)]]
            })),
            horizon: 1.0,
            native_box: BoxDomain::unit(1),
            output_box: None,
            rk4_steps_per_unit: RK4_STEPS_PER_UNIT,
            containment: Containment::Strict,
        },
        "product_decay_2d" => FlowSpec {
            name: name.into(),
            kind: FlowKind::ClosedForm,
            vector_field: Some(Arc::new(|x: &[f64]| vec![x[0] * (1.0 + x[1]), -x[1] * x[1]])),
            closed_flow: Some(Arc::new(|x: &[f64], t: f64| {
                vec![t.exp() * x[0] * (t * x[1] + 1.0), x[1] / (1.0 + t * x[1])]
            })),
            closed_jacobian: Some(Arc::new(|x: &[f64], t: f64| {
                let et = t.exp();
                let d = 1.0 + t * x[1];
                vec![vec![et * (t * x[1] + 1.0), et * x[0] * t], vec![0.0, 1.0 / (d * d)]]
            })),
            horizon: 1.0,
            native_box: BoxDomain::unit(2),
            // Image of [0,1]^2 at t = 1.
            output_box: Some(BoxDomain::from_intervals(&[(0.0, 2.0 * e), (0.0, 0.5)])?),
            rk4_steps_per_unit: RK4_STEPS_PER_UNIT,
            containment: Containment::Strict,
        },
        "lotka_volterra" => FlowSpec {
            name: name.into(),
            kind: FlowKind::Integrated,
            vector_field: Some(Arc::new(|x: &[f64]| {
                vec![
                    1.5 * x[0] * (1.0 - x[0]) - x[0] * x[1],
                    1.5 * x[1] * (1.0 - x[1]) - x[0] * x[1],
                ]
            })),
            closed_flow: None,
            closed_jacobian: None,
            horizon: 1.0,
            native_box: BoxDomain::unit(2),
            output_box: None,
            rk4_steps_per_unit: RK4_STEPS_PER_UNIT,
            containment: Containment::Strict,
        },
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    Ok(spec)
}

/// The identity flow on `[0,1]^m`.
pub fn identity_spec(m: usize) -> FlowSpec {
    FlowSpec {
        name: "identity".into(),
        kind: FlowKind::ClosedForm,
        vector_field: Some(Arc::new(move |_: &[f64]| vec![0.0; m])),
        closed_flow: Some(Arc::new(|x: &[f64], _| x.to_vec())),
        closed_jacobian: Some(Arc::new(move |_: &[f64], _| {
            (0..m)
                .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        })),
        horizon: 1.0,
        native_box: BoxDomain::unit(m),
        output_box: None,
        rk4_steps_per_unit: RK4_STEPS_PER_UNIT,
        containment: Containment::Strict,
    }
}

/// Declarative user system, read from JSON.
///
/// ```json
/// { "name": "vdp", "dim": 2, "field": ["x2", "0.5*(1-x1^2)*x2-x1"],
///   "horizon": 0.3, "box": [[-3, 3], [-3, 3]], "containment": "permissive" }
/// ```
///
/// An optional `"flow"` entry gives a closed form in `x1..xm` and `t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dim: usize,
    pub field: Vec<String>,
    #[serde(default)]
    pub flow: Option<Vec<String>>,
    pub horizon: f64,
    #[serde(rename = "box")]
    pub native_box: Vec<[f64; 2]>,
    #[serde(default)]
    pub output_box: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_steps")]
    pub rk4_steps_per_unit: usize,
    #[serde(default)]
    pub containment: Option<String>,
}

fn default_name() -> String {
    "user".into()
}

fn default_steps() -> usize {
    RK4_STEPS_PER_UNIT
}

fn to_box(v: &[[f64; 2]]) -> Result<BoxDomain> {
    BoxDomain::from_intervals(&v.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn into_spec(self) -> Result<FlowSpec> {
        let m = self.dim;
        if self.field.len() != m {
            return Err(Error::Config(format!(
                "field has {} components for dimension {m}",
                self.field.len()
            )));
        }
        let native_box = to_box(&self.native_box)?;
        if native_box.dim() != m {
            return Err(Error::Config("box dimension does not match `dim`".into()));
        }
        let vars = variable_names(m, false);
        let field: Vec<Expr> = self
            .field
            .iter()
            .map(|s| Expr::parse(s, &vars))
            .collect::<Result<_>>()?;
        let vector_field: Arc<FieldFn> =
            Arc::new(move |x: &[f64]| field.iter().map(|e| e.eval(x)).collect());
        let (kind, closed_flow, closed_jacobian) = match self.flow {
            Some(exprs) => {
                if exprs.len() != m {
                    return Err(Error::Config("closed flow has the wrong number of components".into()));
                }
                let tvars = variable_names(m, true);
                let parsed: Vec<Expr> = exprs
                    .iter()
                    .map(|s| Expr::parse(s, &tvars))
                    .collect::<Result<_>>()?;
                let jac: Option<Vec<Vec<Expr>>> = parsed
                    .iter()
                    .map(|e| (0..m).map(|l| e.derivative(l)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
                    .ok();
                let flow_exprs = parsed.clone();
                let closed: Arc<ClosedFn> = Arc::new(move |x: &[f64], t: f64| {
                    let mut v = x.to_vec();
                    v.push(t);
                    flow_exprs.iter().map(|e| e.eval(&v)).collect()
                });
                let jacobian: Option<Arc<JacobianFn>> = jac.map(|rows| {
                    Arc::new(move |x: &[f64], t: f64| {
                        let mut v = x.to_vec();
                        v.push(t);
                        rows.iter()
                            .map(|r| r.iter().map(|e| e.eval(&v)).collect())
                            .collect()
                    }) as Arc<JacobianFn>
                });
                (FlowKind::ClosedForm, Some(closed), jacobian)
            }
            None => (FlowKind::Integrated, None, None),
        };
        let containment = match self.containment.as_deref() {
            None | Some("strict") => Containment::Strict,
            Some("permissive") => Containment::Permissive,
            Some(other) => return Err(Error::Config(format!("unknown containment `{other}`"))),
        };
        let spec = FlowSpec {
            name: self.name,
            kind,
            vector_field: Some(vector_field),
            closed_flow,
            closed_jacobian,
            horizon: self.horizon,
            native_box,
            output_box: self.output_box.as_deref().map(to_box).transpose()?,
            rk4_steps_per_unit: self.rk4_steps_per_unit,
            containment,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Builtin name, `identity`, or a path to a JSON system file.
pub fn resolve_system(name: &str, m_hint: usize) -> Result<FlowSpec> {
    if name == "identity" {
        return Ok(identity_spec(m_hint.max(1)));
    }
    if BUILTINS.contains(&name) {
        return builtin(name);
    }
    let path = Path::new(name);
    if path.exists() {
        return SystemConfig::load(path)?.into_spec();
    }
    Err(Error::UnknownSystem(name.to_string()))
}

/// Perturbed samples with the realized perturbation size.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyValues {
    pub values: Vec<Vec<f64>>,
    /// `max_j ‖Δ_j‖` (Euclidean per point), including any clamping.
    pub sup_norm: f64,
    /// Largest single-component perturbation.
    pub max_component: f64,
}

/// Adds i.i.d. `N(0, σ²)` noise to every component, deterministically
/// under `seed`. With `clamp`, results are projected onto that box and the
/// projection is part of the reported perturbation.
pub fn add_noise(values: &[Vec<f64>], sigma: f64, seed: u64, clamp: Option<&BoxDomain>) -> Result<NoisyValues> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::Config(format!("noise level must be non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(NoisyValues {
            values: values.to_vec(),
            sup_norm: 0.0,
            max_component: 0.0,
        });
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let out = values
        .iter()
        .map(|v| {
            let mut w: Vec<f64> = v.iter().map(|x| x + normal.sample(&mut rng)).collect();
            if let Some(b) = clamp {
                w = b.clamp(&w);
            }
            let mut sq = 0.0;
            for (a, b) in w.iter().zip(v) {
                let d = a - b;
                comp = comp.max(d.abs());
                sq += d * d;
            }
            sup = sup.max(sq.sqrt());
            w
        })
        .collect();
    Ok(NoisyValues {
        values: out,
        sup_norm: sup,
        max_component: comp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_values() {
        let s = builtin("scalar_logistic").unwrap();
        assert_abs_diff_eq!(s.flow_native(&[0.5], 1.0).unwrap()[0], 0.13977, epsilon = 1e-5);
        let s = builtin("product_decay_2d").unwrap();
        let y = s.flow_native(&[0.2, 0.5], 1.0).unwrap();
        assert_abs_diff_eq!(y[0], 0.81548, epsilon = 1e-5);
        assert_abs_diff_eq!(y[1], 0.33333, epsilon = 1e-5);
        let id = flow_map(&builtin("scalar_logistic").unwrap().with_horizon(1e-14)).unwrap();
        assert_abs_diff_eq!(id.eval(&[0.37])[0], 0.37, epsilon = 1e-12);
    }

    #[test]
    fn equilibria_are_fixed() {
        let v = builtin("van_der_pol").unwrap();
        let y = v.flow_native(&[0.0, 0.0], 0.3).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        let lv = builtin("lotka_volterra").unwrap();
        let y = lv.flow_native(&[0.6, 0.6], 1.0).unwrap();
        assert_abs_diff_eq!(y[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(y[1], 0.6, epsilon = 1e-12);
    }

    #[test]
    fn integrator_matches_closed_form() {
        let s = builtin("scalar_logistic").unwrap();
        for i in 0..50 {
            let x = [i as f64 / 49.0];
            let a = s.flow_native(&x, 1.0).unwrap()[0];
            let b = s.integrate(&x, 1.0, 300).unwrap()[0];
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn rk4_is_fourth_order() {
        let s = builtin("scalar_logistic").unwrap();
        let exact = s.flow_native(&[1.0], 1.0).unwrap()[0];
        let errs: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&n| (s.integrate(&[1.0], 1.0, n).unwrap()[0] - exact).abs())
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((8.0..=32.0).contains(&r), "ratio {r}");
        }
    }

    #[test]
    fn step_halving_is_converged() {
        let s = builtin("lotka_volterra").unwrap();
        for x in BoxDomain::unit(2).grid(4) {
            let a = s.integrate(&x, 1.0, 300).unwrap();
            let b = s.integrate(&x, 1.0, 600).unwrap();
            assert!(crate::domain::euclidean(&a, &b) < 1e-8);
        }
    }

    #[test]
    fn strict_builtins_land_in_box() {
        for name in ["scalar_logistic", "product_decay_2d", "lotka_volterra"] {
            let map = flow_map(&builtin(name).unwrap()).unwrap();
            let m = map.dim();
            let n = 30;
            let d = crate::bernstein::DegreeVector::uniform(n, m).unwrap();
            let g = crate::bernstein::LatticeGrid::new(d);
            assert!(crate::koopman::lattice_images(&map, &g).is_ok(), "{name}");
        }
        let vdp = flow_map(&builtin("van_der_pol").unwrap()).unwrap();
        assert_eq!(vdp.containment(), Containment::Permissive);
        assert!(vdp.eval(&[1.0, 1.0])[0] > 1.0);
    }

    #[test]
    fn escaping_strict_flow_is_an_error() {
        let cfg = SystemConfig::from_json(
            r#"{"dim":1,"field":["1"],"horizon":0.5,"box":[[0,1]]}"#,
        )
        .unwrap();
        let spec = cfg.into_spec().unwrap();
        assert!(matches!(flow_map(&spec), Err(Error::FlowEscape { .. })));
    }

    #[test]
    fn user_config_matches_builtin() {
        let cfg = SystemConfig::from_json(
            r#"{"name":"logi","dim":1,"field":["-x1*(1+x1)"],"flow":["x1/(2.718281828459045^t + x1*(2.718281828459045^t - 1))"],
                "horizon":1.0,"box":[[0,1]]}"#,
        )
        .unwrap();
        let spec = cfg.into_spec().unwrap();
        assert_eq!(spec.kind, FlowKind::ClosedForm);
        let a = flow_map(&spec).unwrap();
        let b = flow_map(&builtin("scalar_logistic").unwrap()).unwrap();
        assert_abs_diff_eq!(a.eval(&[0.3])[0], b.eval(&[0.3])[0], epsilon = 1e-12);
        assert!(a.has_jacobian());
        assert!(matches!(builtin("nope"), Err(Error::UnknownSystem(_))));
    }

    #[test]
    fn noise_contract() {
        let vals: Vec<Vec<f64>> = BoxDomain::unit(2).grid(10);
        let same = add_noise(&vals, 0.0, 1, None).unwrap();
        assert_eq!(same.values, vals);
        assert_eq!(same.sup_norm, 0.0);
        let a = add_noise(&vals, 0.01, 42, None).unwrap();
        let b = add_noise(&vals, 0.01, 42, None).unwrap();
        assert_eq!(a, b);
        let mut inside = 0;
        for seed in 0..200 {
            let r = add_noise(&vals, 0.01, seed, None).unwrap();
            if (0.015..=0.06).contains(&r.sup_norm) {
                inside += 1;
            }
        }
        assert!(inside >= 198, "{inside}");
        let c = add_noise(&vals, 0.05, 3, Some(&BoxDomain::unit(2))).unwrap();
        assert!(c.values.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert!(add_noise(&vals, -1.0, 0, None).is_err());
    }
}
