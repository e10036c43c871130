//! Experiment drivers behind the `kb` binary. Each command turns an
//! [`ExperimentConfig`] into a CSV table plus a few summary numbers.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{eval_bernstein_unchecked, DegreeVector, LatticeGrid, Observable};
use crate::bounds::{BoundContext, BoundReport, TheoremTag};
use crate::data_driven::{self, load_permutation, DataSet, Route};
use crate::domain::{euclidean, BoxDomain};
use crate::dynamics::expr::observable_from_expr;
use crate::dynamics::{add_noise, flow_map, resolve_system, FlowSpec};
use crate::edmd::{build_edmd_with_tolerance, predict_edmd, standard_truncation, DEFAULT_TRUNCATION};
use crate::error::{Error, Result};
use crate::koopman::{
    lattice_images, one_step_prediction, predict_trajectory, predict_trajectory_bernstein,
    predict_trajectory_relift, KoopmanMatrices, MapOnBox,
};

/// Coordinates in which an initial state is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Native,
    #[default]
    Unit,
}

/// Propagation scheme for model-based prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictRoute {
    /// Lift once, iterate `K^X`.
    #[default]
    Linear,
    /// Re-lift the predicted state every step.
    Relift,
    /// Iterate `K_B` on the Bernstein vector.
    Bernstein,
}

/// Singular-value cut-off used by the EDMD baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdmdTolerance {
    /// `max(rows, cols) · ε`, as in a plain Moore-Penrose pseudoinverse.
    Standard,
    Relative(f64),
}

impl Default for EdmdTolerance {
    fn default() -> Self {
        EdmdTolerance::Relative(DEFAULT_TRUNCATION)
    }
}

impl EdmdTolerance {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            EdmdTolerance::Standard => standard_truncation(n, n),
            EdmdTolerance::Relative(t) => *t,
        }
    }
}

impl std::str::FromStr for EdmdTolerance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("standard") {
            return Ok(EdmdTolerance::Standard);
        }
        s.parse::<f64>()
            .ok()
            .filter(|t| *t >= 0.0)
            .map(EdmdTolerance::Relative)
            .ok_or_else(|| Error::Config(format!("bad EDMD tolerance `{s}`")))
    }
}

/// Everything a command needs; serialised verbatim into the first line of
/// every CSV it writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub system: String,
    /// Per-axis degree; a single entry applies to every axis.
    pub degree: Vec<usize>,
    pub observable: Option<String>,
    pub bounds: Vec<String>,
    pub steps: usize,
    pub sigma: f64,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub perm: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub x0: Option<Vec<f64>>,
    pub x0_frame: Frame,
    /// Degrees swept by `bounds` and `table2`.
    pub sweep: Option<Vec<usize>>,
    /// Noise levels for `table2`.
    pub sigmas: Option<Vec<f64>>,
    /// Noise realisations averaged by `table2`.
    pub seeds: usize,
    /// Grid resolution for moduli and Lipschitz constants.
    pub resolution: Option<usize>,
    /// Dense evaluation grid, points per axis minus one.
    pub grid: Option<usize>,
    pub route: PredictRoute,
    pub data_route: Route,
    pub edmd_tol: EdmdTolerance,
    /// Lattice jitter of generated data, in cells.
    pub jitter: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            system: "van_der_pol".into(),
            degree: vec![10],
            observable: None,
            bounds: Vec::new(),
            steps: 6,
            sigma: 0.0,
            seed: 0,
            data: None,
            perm: None,
            out: None,
            x0: None,
            x0_frame: Frame::Unit,
            sweep: None,
            sigmas: None,
            seeds: 50,
            resolution: None,
            grid: None,
            route: PredictRoute::Linear,
            data_route: Route::Bernstein,
            edmd_tol: EdmdTolerance::default(),
            jitter: 0.3,
        }
    }
}

impl ExperimentConfig {
    pub fn new(command: &str, system: &str) -> Self {
        Self {
            command: command.into(),
            system: system.into(),
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config is serialisable")
    }

    pub fn degree_for(&self, m: usize) -> Result<DegreeVector> {
        match self.degree.len() {
            1 => DegreeVector::uniform(self.degree[0], m),
            l if l == m => DegreeVector::new(self.degree.clone()),
            l => Err(Error::Config(format!("{l} degrees given for a {m}-dimensional system"))),
        }
    }

    pub fn spec(&self) -> Result<FlowSpec> {
        resolve_system(&self.system, self.degree.len().max(1))
    }

    pub fn observable(&self, m: usize) -> Result<Observable> {
        match &self.observable {
            Some(src) => observable_from_expr(src, m),
            None => Ok(Observable::coordinate(0, m)),
        }
    }

    pub fn dense_grid(&self, m: usize) -> Vec<Vec<f64>> {
        let r = self.grid.unwrap_or(match m {
            1 => 1000,
            2 => 120,
            _ => 12,
        });
        BoxDomain::unit(m).grid(r)
    }

    /// The system and its unit-box map.
    pub fn model(&self) -> Result<(FlowSpec, MapOnBox)> {
        let spec = self.spec()?;
        let map = flow_map(&spec)?;
        Ok((spec, map))
    }

    fn start(&self, spec: &FlowSpec, default: &[f64]) -> Result<Vec<f64>> {
        let m = spec.dim();
        let x0 = self.x0.clone().unwrap_or_else(|| default.to_vec());
        if x0.len() != m {
            return Err(Error::Config(format!("x0 has {} entries, system is {m}-dimensional", x0.len())));
        }
        Ok(match self.x0_frame {
            Frame::Unit => x0,
            Frame::Native => spec.native_box.to_unit(&x0),
        })
    }
}

/// Header plus rows, written after a `# config:` comment line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn with_header(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write(&self, config: &ExperimentConfig, mut out: impl Write) -> Result<()> {
        writeln!(out, "# config: {}", config.to_json())?;
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, config: &ExperimentConfig) -> String {
        let mut buf = Vec::new();
        self.write(config, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn nums(v: &[f64]) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| num(*x))
}

fn axis_names(prefix: &str, m: usize) -> Vec<String> {
    (1..=m).map(|l| format!("{prefix}{l}")).collect()
}

fn model(cfg: &ExperimentConfig) -> Result<(FlowSpec, MapOnBox)> {
    cfg.model()
}

/// Result of [`cmd_approximate`].
#[derive(Debug, Clone)]
pub struct Approximation {
    pub table: Table,
    pub sup_error: f64,
}

/// Compares `B_n K f` with `K f` on a dense grid of the unit box.
pub fn cmd_approximate(cfg: &ExperimentConfig) -> Result<Approximation> {
    let (spec, map) = model(cfg)?;
    let m = spec.dim();
    let degree = cfg.degree_for(m)?;
    let f = cfg.observable(m)?;
    let grid = LatticeGrid::new(degree.clone());
    let images = lattice_images(&map, &grid)?;
    let samples: Vec<f64> = images.iter().map(|y| f.eval(y)).collect();
    let pts = cfg.dense_grid(m);
    let rows: Vec<(Vec<f64>, f64, f64)> = pts
        .par_iter()
        .map(|x| (x.clone(), f.eval(&map.eval(x)), eval_bernstein_unchecked(&samples, &degree, x)))
        .collect();
    let mut header = axis_names("x", m);
    header.extend(["kf_true", "kf_approx", "abs_error"].map(String::from));
    let mut table = Table::with_header(header);
    let mut sup: f64 = 0.0;
    for (x, t, a) in rows {
        let e = (t - a).abs();
        sup = sup.max(e);
        table.push(nums(&x).chain([num(t), num(a), num(e)]).collect());
    }
    Ok(Approximation { table, sup_error: sup })
}

/// Result of [`cmd_predict`].
#[derive(Debug, Clone)]
pub struct Prediction {
    pub table: Table,
    pub predicted: Vec<Vec<f64>>,
    pub truth: Vec<Vec<f64>>,
    /// Euclidean error in unit-box coordinates, per step.
    pub errors: Vec<f64>,
}

/// Iterates the Koopman matrices from `x0` and compares with the true
/// iterates of the rescaled map.
pub fn cmd_predict(cfg: &ExperimentConfig) -> Result<Prediction> {
    let (spec, map) = model(cfg)?;
    let m = spec.dim();
    let degree = cfg.degree_for(m)?;
    let x0 = cfg.start(&spec, &[0.4, 0.0][..m.min(2)].iter().copied().chain(std::iter::repeat(0.0)).take(m).collect::<Vec<_>>())?;
    let images = lattice_images(&map, &LatticeGrid::new(degree.clone()))?;
    let matrices = KoopmanMatrices::from_images(&degree, images)?;
    let predicted = match cfg.route {
        PredictRoute::Linear => predict_trajectory(&matrices, &x0, cfg.steps)?,
        PredictRoute::Relift => predict_trajectory_relift(&matrices, &x0, cfg.steps)?,
        PredictRoute::Bernstein => predict_trajectory_bernstein(&matrices, &x0, cfg.steps)?,
    };
    let mut truth = Vec::with_capacity(cfg.steps);
    let mut x = x0.clone();
    for _ in 0..cfg.steps {
        x = map.eval(&x);
        truth.push(x.clone());
    }
    let errors: Vec<f64> = predicted.iter().zip(&truth).map(|(p, t)| euclidean(p, t)).collect();
    let mut header = vec!["step".to_string()];
    header.extend(axis_names("pred_x", m));
    header.extend(axis_names("true_x", m));
    header.push("error".into());
    let mut table = Table::with_header(header);
    table.push(std::iter::once("0".to_string()).chain(nums(&x0)).chain(nums(&x0)).chain([num(0.0)]).collect());
    for (k, ((p, t), e)) in predicted.iter().zip(&truth).zip(&errors).enumerate() {
        table.push(
            std::iter::once((k + 1).to_string())
                .chain(nums(p))
                .chain(nums(t))
                .chain([num(*e)])
                .collect(),
        );
    }
    Ok(Prediction {
        table,
        predicted,
        truth,
        errors,
    })
}

/// A measured error next to the bounds it should respect.
#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub label: &'static str,
    pub degrees: Vec<usize>,
    pub k: usize,
    pub value: f64,
}

/// Result of [`cmd_bounds`].
#[derive(Debug, Clone)]
pub struct BoundSweep {
    pub table: Table,
    pub reports: Vec<BoundReport>,
    pub measured: Vec<Measured>,
}

impl BoundSweep {
    pub fn value(&self, tag: TheoremTag, n: usize) -> Option<f64> {
        self.reports
            .iter()
            .find(|r| r.tag == tag && r.degrees.iter().all(|&d| d == n))
            .map(|r| r.value)
    }

    pub fn measured(&self, label: &str, n: usize, k: usize) -> Option<f64> {
        self.measured
            .iter()
            .find(|r| r.label == label && r.k == k && r.degrees.iter().all(|&d| d == n))
            .map(|r| r.value)
    }
}

fn default_tags(m: usize) -> Vec<TheoremTag> {
    if m == 1 {
        vec![TheoremTag::T1, TheoremTag::T2]
    } else {
        vec![TheoremTag::T3, TheoremTag::T4, TheoremTag::T5]
    }
}

/// Coefficients of `(B_n K)^k f` on the lattice, `k ≥ 1`.
pub fn iterated_samples(f: &Observable, images: &[Vec<f64>], degree: &DegreeVector, k: usize) -> Vec<f64> {
    let mut c: Vec<f64> = images.iter().map(|y| f.eval(y)).collect();
    for _ in 1..k {
        c = images.par_iter().map(|y| eval_bernstein_unchecked(&c, degree, y)).collect();
    }
    c
}

/// `sup_x |(B_n K)^k f(x) − f(φ^k(x))|` over `points`.
pub fn measured_error(
    map: &MapOnBox,
    f: &Observable,
    images: &[Vec<f64>],
    degree: &DegreeVector,
    k: usize,
    points: &[Vec<f64>],
) -> f64 {
    let c = iterated_samples(f, images, degree, k);
    points
        .par_iter()
        .map(|x| {
            let mut y = x.clone();
            for _ in 0..k {
                y = map.eval(&y);
            }
            (eval_bernstein_unchecked(&c, degree, x) - f.eval(&y)).abs()
        })
        .reduce(|| 0.0, f64::max)
}

/// Bound curves over a sweep of uniform degrees, with measured errors.
pub fn cmd_bounds(cfg: &ExperimentConfig) -> Result<BoundSweep> {
    let (spec, map) = model(cfg)?;
    let m = spec.dim();
    let f = cfg.observable(m)?;
    let tags: Vec<TheoremTag> = if cfg.bounds.is_empty() {
        default_tags(m)
    } else {
        cfg.bounds.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    let sweep = match &cfg.sweep {
        Some(s) => s.clone(),
        None => vec![cfg.degree_for(m)?.get(0)],
    };
    let ctx = match cfg.resolution {
        Some(r) => BoundContext::with_resolution(&map, &f, r),
        None => BoundContext::new(&map, &f),
    };
    let iterated = tags.iter().any(|t| {
        matches!(t, TheoremTag::T6a | TheoremTag::T6b | TheoremTag::T6c | TheoremTag::AppA)
    });
    let data_tags = tags.iter().any(|t| matches!(t, TheoremTag::DataFull | TheoremTag::DataPartial));
    let data = if data_tags {
        let path = cfg
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("data-driven bounds need --data".into()))?;
        Some(DataSet::load(path)?)
    } else {
        None
    };
    let points = cfg.dense_grid(m);
    let mut reports = Vec::new();
    let mut measured = Vec::new();
    for &n in &sweep {
        let degree = DegreeVector::uniform(n, m)?;
        let images = lattice_images(&map, &LatticeGrid::new(degree.clone()))?;
        for &tag in &tags {
            match tag {
                TheoremTag::MeasNoise => {
                    let noisy = add_noise(&images, cfg.sigma, cfg.seed, None)?;
                    let mut r = ctx.measurement_noise(noisy.sup_norm);
                    r.degrees = degree.degrees().to_vec();
                    reports.push(r);
                    let clean: Vec<f64> = images.iter().map(|y| f.eval(y)).collect();
                    let dirty: Vec<f64> = noisy.values.iter().map(|y| f.eval(y)).collect();
                    let v = points
                        .par_iter()
                        .map(|x| {
                            (eval_bernstein_unchecked(&clean, &degree, x) - eval_bernstein_unchecked(&dirty, &degree, x)).abs()
                        })
                        .reduce(|| 0.0, f64::max);
                    measured.push(Measured {
                        label: "measured_noise",
                        degrees: degree.degrees().to_vec(),
                        k: 1,
                        value: v,
                    });
                }
                TheoremTag::DataFull | TheoremTag::DataPartial => {
                    let data = data.as_ref().expect("loaded above");
                    let mut d = data.clone();
                    if cfg.sigma > 0.0 {
                        d = d.with_outputs(add_noise(d.outputs(), cfg.sigma, cfg.seed, Some(&d.domain_box()?))?.values)?;
                    }
                    let perm = cfg.perm.as_ref().map(|p| load_permutation(p, d.len())).transpose()?;
                    let dk = data_driven::fit(&d, &degree, perm.as_deref())?;
                    let (full, part) = data_driven::data_driven_bounds(ctx.modulus(), ctx.lipschitz().full, &dk.map);
                    reports.push(if tag == TheoremTag::DataFull { full } else { part });
                    if !measured.iter().any(|r: &Measured| r.label == "measured_data" && r.degrees == degree.degrees()) {
                        let v = points
                            .par_iter()
                            .filter_map(|x| {
                                let y = spec.flow_native(x, spec.horizon).ok()?;
                                dk.approximate(|z| f.eval(z), x).ok().map(|a| (a - f.eval(&y)).abs())
                            })
                            .reduce(|| 0.0, f64::max);
                        measured.push(Measured {
                            label: "measured_data",
                            degrees: degree.degrees().to_vec(),
                            k: 1,
                            value: v,
                        });
                    }
                }
                _ => reports.push(ctx.bound(tag, &degree, cfg.steps)?),
            }
        }
        measured.push(Measured {
            label: "measured",
            degrees: degree.degrees().to_vec(),
            k: 1,
            value: measured_error(&map, &f, &images, &degree, 1, &points),
        });
        if iterated && cfg.steps > 1 {
            measured.push(Measured {
                label: "measured",
                degrees: degree.degrees().to_vec(),
                k: cfg.steps,
                value: measured_error(&map, &f, &images, &degree, cfg.steps, &points),
            });
        }
    }
    let mut table = Table::new(&BoundReport::csv_header().split(',').collect::<Vec<_>>());
    for r in &reports {
        table.push(r.to_csv_row().split(',').map(String::from).collect());
    }
    for r in &measured {
        let degrees = r.degrees.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";");
        table.push(vec![
            r.label.to_string(),
            r.degrees.len().to_string(),
            degrees,
            r.k.to_string(),
            num(r.value),
            String::new(),
            "false".into(),
        ]);
    }
    Ok(BoundSweep {
        table,
        reports,
        measured,
    })
}

/// One predicted trajectory of [`cmd_datadriven`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub method: &'static str,
    pub noisy: bool,
    pub states: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
}

impl Trajectory {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
    }
}

/// Result of [`cmd_datadriven`].
#[derive(Debug, Clone)]
pub struct DataDrivenRun {
    pub table: Table,
    pub truth: Vec<Vec<f64>>,
    pub trajectories: Vec<Trajectory>,
    pub noise_sup: f64,
    pub edmd_rank: usize,
}

impl DataDrivenRun {
    pub fn get(&self, method: &str, noisy: bool) -> Option<&Trajectory> {
        self.trajectories.iter().find(|t| t.method == method && t.noisy == noisy)
    }
}

type States = Vec<Vec<f64>>;

fn predict_data(
    data: &DataSet,
    degree: &DegreeVector,
    perm: Option<&[usize]>,
    x0: &[f64],
    cfg: &ExperimentConfig,
) -> Result<(States, States, usize)> {
    let dk = data_driven::fit(data, degree, perm)?;
    let bern = dk.predict(x0, cfg.steps, cfg.data_route)?;
    let edmd = build_edmd_with_tolerance(data, degree, cfg.edmd_tol.value(data.len()))?;
    let e = predict_edmd(&edmd, x0, cfg.steps)?;
    Ok((bern, e, edmd.rank_used))
}

/// Bernstein (through the lattice map) and EDMD trajectories from the
/// same snapshot data, clean and, when `sigma > 0`, with noisy outputs.
/// The truth comes from the named system; `none` skips it.
pub fn cmd_datadriven(cfg: &ExperimentConfig) -> Result<DataDrivenRun> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("data-driven mode needs --data".into()))?;
    let data = DataSet::load(path)?;
    let m = data.dim();
    let degree = cfg.degree_for(m)?;
    data.check_degree(&degree)?;
    let perm = cfg.perm.as_ref().map(|p| load_permutation(p, data.len())).transpose()?;
    let spec = if cfg.system == "none" { None } else { Some(cfg.spec()?) };
    if let Some(s) = &spec {
        if s.dim() != m {
            return Err(Error::Config("system and data dimensions differ".into()));
        }
    }
    let x0 = match &cfg.x0 {
        Some(x) if x.len() == m => x.clone(),
        Some(_) => return Err(Error::Config("x0 dimension does not match the data".into())),
        None => [0.4, 0.3].iter().copied().chain(std::iter::repeat(0.5)).take(m).collect(),
    };
    let truth: Vec<Vec<f64>> = match &spec {
        Some(s) => {
            let mut x = x0.clone();
            (0..cfg.steps)
                .map(|_| {
                    x = s.flow_native(&x, s.horizon)?;
                    Ok(x.clone())
                })
                .collect::<Result<_>>()?
        }
        None => vec![vec![f64::NAN; m]; cfg.steps],
    };
    let mut runs = vec![(false, data.clone())];
    let mut noise_sup = 0.0;
    if cfg.sigma > 0.0 {
        let hull = BoxDomain::bounding(data.inputs()).expect("non-empty");
        let hull = BoxDomain::new(hull.0, hull.1)?;
        let noisy = add_noise(data.outputs(), cfg.sigma, cfg.seed, Some(&hull))?;
        noise_sup = noisy.sup_norm;
        runs.push((true, data.with_outputs(noisy.values)?));
    }
    let mut trajectories = Vec::new();
    let mut edmd_rank = 0;
    for (noisy, d) in &runs {
        let (b, e, rank) = predict_data(d, &degree, perm.as_deref(), &x0, cfg)?;
        edmd_rank = rank;
        for (method, states) in [("bernstein", b), ("edmd", e)] {
            let errors = states.iter().zip(&truth).map(|(p, t)| euclidean(p, t)).collect();
            trajectories.push(Trajectory {
                method,
                noisy: *noisy,
                states,
                errors,
            });
        }
    }
    let mut header: Vec<String> = ["step", "variant", "method"].map(String::from).to_vec();
    header.extend(axis_names("pred_x", m));
    header.extend(axis_names("true_x", m));
    header.push("error".into());
    let mut table = Table::with_header(header);
    for t in &trajectories {
        for (k, (p, e)) in t.states.iter().zip(&t.errors).enumerate() {
            table.push(
                [(k + 1).to_string(), if t.noisy { "noisy" } else { "clean" }.into(), t.method.into()]
                    .into_iter()
                    .chain(nums(p))
                    .chain(nums(&truth[k]))
                    .chain([num(*e)])
                    .collect(),
            );
        }
    }
    Ok(DataDrivenRun {
        table,
        truth,
        trajectories,
        noise_sup,
        edmd_rank,
    })
}

/// One cell of [`cmd_table2`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCell {
    pub n: usize,
    pub sigma: f64,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseTable {
    pub table: Table,
    pub cells: Vec<NoiseCell>,
}

impl NoiseTable {
    pub fn mean(&self, n: usize, sigma: f64) -> Option<f64> {
        self.cells.iter().find(|c| c.n == n && c.sigma == sigma).map(|c| c.mean_error)
    }
}

/// One-step prediction error under noisy lattice samples, averaged over
/// `seeds` noise realisations.
pub fn cmd_table2(cfg: &ExperimentConfig) -> Result<NoiseTable> {
    let (spec, map) = model(cfg)?;
    let m = spec.dim();
    let x0 = cfg.start(&spec, &[0.4, 0.0][..m.min(2)].iter().copied().chain(std::iter::repeat(0.0)).take(m).collect::<Vec<_>>())?;
    let truth = map.eval(&x0);
    let sweep = cfg.sweep.clone().unwrap_or_else(|| vec![10, 20, 25]);
    let sigmas = cfg.sigmas.clone().unwrap_or_else(|| vec![0.0, 0.001, 0.01, 0.1]);
    let seeds = cfg.seeds.max(1);
    let mut table = Table::new(&["n", "sigma", "mean_error", "std_error", "seeds"]);
    let mut cells = Vec::new();
    for &n in &sweep {
        let degree = DegreeVector::uniform(n, m)?;
        let images = lattice_images(&map, &LatticeGrid::new(degree.clone()))?;
        for &sigma in &sigmas {
            let errs: Vec<f64> = (0..seeds as u64)
                .into_par_iter()
                .map(|s| -> Result<f64> {
                    let noisy = add_noise(&images, sigma, cfg.seed.wrapping_add(s), None)?;
                    Ok(euclidean(&one_step_prediction(&degree, &noisy.values, &x0), &truth))
                })
                .collect::<Result<_>>()?;
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / errs.len() as f64;
            let cell = NoiseCell {
                n,
                sigma,
                mean_error: mean,
                std_error: var.sqrt(),
            };
            table.push(vec![n.to_string(), num(sigma), num(mean), num(cell.std_error), seeds.to_string()]);
            cells.push(cell);
        }
    }
    Ok(NoiseTable { table, cells })
}

/// Snapshot pairs on a jittered lattice of the system's native box.
/// Interior coordinates move by up to `jitter` cells; points on a face
/// only move along it, so the input hull is the whole box.
pub fn generate_data(spec: &FlowSpec, degree: &DegreeVector, jitter: f64, seed: u64) -> Result<DataSet> {
    if !(0.0..0.5).contains(&jitter) {
        return Err(Error::Config(format!("jitter must lie in [0, 0.5), got {jitter}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = LatticeGrid::new(degree.clone());
    let pts: Vec<Vec<f64>> = (0..grid.len())
        .map(|j| {
            let k = grid.multi_index(j);
            let u: Vec<f64> = k
                .iter()
                .enumerate()
                .map(|(l, &kl)| {
                    let n = degree.get(l);
                    let base = kl as f64 / n as f64;
                    let shift = jitter / n as f64 * rng.random_range(-1.0..1.0);
                    if kl == 0 || kl == n { base } else { base + shift }
                })
                .collect();
            spec.native_box.from_unit(&u)
        })
        .collect();
    let y = pts
        .par_iter()
        .map(|x| spec.flow_native(x, spec.horizon))
        .collect::<Result<Vec<_>>>()?;
    DataSet::new(pts, y)
}

pub fn cmd_gen_data(cfg: &ExperimentConfig) -> Result<DataSet> {
    let spec = cfg.spec()?;
    let degree = cfg.degree_for(spec.dim())?;
    generate_data(&spec, &degree, cfg.jitter, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(command: &str, system: &str) -> ExperimentConfig {
        ExperimentConfig::new(command, system)
    }

    #[test]
    fn constant_observable_has_no_error() {
        let mut c = cfg("approximate", "scalar_logistic");
        c.observable = Some("3".into());
        c.degree = vec![5];
        c.grid = Some(50);
        assert!(cmd_approximate(&c).unwrap().sup_error < 1e-13);
    }

    #[test]
    fn approximation_improves_with_degree() {
        let mut c = cfg("approximate", "scalar_logistic");
        c.observable = Some("x^2/2".into());
        c.grid = Some(200);
        c.degree = vec![20];
        let a = cmd_approximate(&c).unwrap().sup_error;
        c.degree = vec![40];
        let b = cmd_approximate(&c).unwrap().sup_error;
        assert!(b < a);
    }

    #[test]
    fn identity_predicts_exactly() {
        let mut c = cfg("predict", "identity");
        c.degree = vec![4, 4];
        c.x0 = Some(vec![0.3, 0.6]);
        let p = cmd_predict(&c).unwrap();
        assert!(p.errors.iter().all(|e| *e < 1e-9));
        assert_eq!(p.table.rows.len(), c.steps + 1);
    }

    #[test]
    fn native_frame_start() {
        let mut c = cfg("predict", "van_der_pol");
        c.x0 = Some(vec![0.0, 0.0]);
        c.x0_frame = Frame::Native;
        c.steps = 2;
        let p = cmd_predict(&c).unwrap();
        assert!(p.truth.iter().all(|t| euclidean(t, &[0.5, 0.5]) < 1e-12));
    }

    #[test]
    fn csv_is_deterministic_and_commented() {
        let mut c = cfg("table2", "van_der_pol");
        c.sweep = Some(vec![5]);
        c.sigmas = Some(vec![0.0, 0.01]);
        c.seeds = 4;
        let a = cmd_table2(&c).unwrap().table.to_csv_string(&c);
        let b = cmd_table2(&c).unwrap().table.to_csv_string(&c);
        assert_eq!(a, b);
        assert!(a.starts_with("# config: {"));
        assert_eq!(a.lines().nth(1).unwrap(), "n,sigma,mean_error,std_error,seeds");
    }

    #[test]
    fn constant_bounds_vanish() {
        let mut c = cfg("bounds", "product_decay_2d");
        c.observable = Some("2".into());
        c.sweep = Some(vec![4]);
        c.resolution = Some(24);
        c.grid = Some(10);
        let s = cmd_bounds(&c).unwrap();
        assert!(s.reports.iter().all(|r| r.value == 0.0));
    }

    #[test]
    fn generated_data_has_box_hull() {
        let spec = crate::dynamics::builtin("lotka_volterra").unwrap();
        let deg = DegreeVector::uniform(5, 2).unwrap();
        let d = generate_data(&spec, &deg, 0.3, 1).unwrap();
        let (lo, hi) = BoxDomain::bounding(d.inputs()).unwrap();
        assert_eq!((lo, hi), (vec![0.0, 0.0], vec![1.0, 1.0]));
        assert!(data_driven::build_assignment(&d, &deg).is_ok());
        assert!(generate_data(&spec, &deg, 0.7, 1).is_err());
    }
}
