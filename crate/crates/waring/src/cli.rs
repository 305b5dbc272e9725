//! File-based command-line harness: instance generation, moment preparation,
//! algorithm execution with error reporting, and parameter sweeps.
//!
//! All I/O is file based (JSON in, JSON + CSV out); exit codes are 0 on
//! success, 1 on algorithm failure, 2 on I/O or configuration errors.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decompose::{
    jennrich, unit_sphere, v_decompose_moments, v_decompose_sphere, v_decompose_tensor,
    DecompOptions, Discriminator, RoundDiagnostics,
};
use crate::measures::{
    backward_error, condition_report, fake_moments_norm_scaled, hausdorff_distance,
    match_components, MomentSequence, PointMeasure,
};
use crate::numerics::{norm, weighted_power_sum};
use crate::poly::HomPoly;
use crate::sdpsolver::ToleranceConfig;
use crate::sosprog::ComplexityCap;
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "seed,n,m,d,algo,forward_err,backward_err,rounds,wall_ms,solver_iters_total";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Jennrich,
    VExact,
    VTensor,
    VSphere,
}

impl std::str::FromStr for Algo {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jennrich" => Ok(Algo::Jennrich),
            "v_exact" => Ok(Algo::VExact),
            "v_tensor" => Ok(Algo::VTensor),
            "v_sphere" => Ok(Algo::VSphere),
            other => Err(Error::Config(format!("unknown algorithm {other}"))),
        }
    }
}

impl std::fmt::Display for Algo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algo::Jennrich => "jennrich",
            Algo::VExact => "v_exact",
            Algo::VTensor => "v_tensor",
            Algo::VSphere => "v_sphere",
        };
        write!(f, "{s}")
    }
}

/// How the moment sequence fed to the algorithm is prepared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MomentsMode {
    /// The measure's true moments `T_0..T_d`.
    #[default]
    True,
    /// Directional fake moments of the top tensor (the tensor pipeline).
    Directional,
    /// Norm-scaled even-degree fake moments of the top tensor.
    NormScaled,
}

impl std::str::FromStr for MomentsMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(MomentsMode::True),
            "directional" => Ok(MomentsMode::Directional),
            "norm_scaled" => Ok(MomentsMode::NormScaled),
            other => Err(Error::Config(format!("unknown moments mode {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    RandomSphere,
    Orthonormal,
    Simplex,
    Hypercube,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub m: usize,
    /// Weights drawn uniformly from this range; unit weights when absent.
    #[serde(default)]
    pub weight_range: Option<(f64, f64)>,
    /// Random-sphere instances are redrawn until `κ_min` reaches this bound.
    #[serde(default)]
    pub min_kappa: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct DecompConfig {
    #[serde(default)]
    pub w_degree: Option<u32>,
    #[serde(default)]
    pub max_rounds: Option<usize>,
    /// One of "v_linear", "v_squared", "norm_squared".
    #[serde(default)]
    pub discriminator: Option<String>,
    /// Derive the uniform-ball cap from the instance and activate it.
    #[serde(default)]
    pub complexity_cap: bool,
    #[serde(default)]
    pub interval_margin: Option<f64>,
    /// Sphere-variant parameters; derived from the instance when absent.
    #[serde(default)]
    pub lambda_min: Option<f64>,
    #[serde(default)]
    pub rho_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct SweepSpec {
    #[serde(default)]
    pub d_values: Option<Vec<u32>>,
    #[serde(default)]
    pub m_values: Option<Vec<usize>>,
}

/// Run configuration: a JSON config file with CLI-flag overrides.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct RunConfig {
    /// Instance file; mutually exclusive with `generator`.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub d: Option<u32>,
    #[serde(default)]
    pub algo: Option<Algo>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub moments_mode: Option<MomentsMode>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: Option<ToleranceConfig>,
    #[serde(default)]
    pub decomp: Option<DecompConfig>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

// --- instance generators --------------------------------------------------------

fn draw_weights(spec: &GeneratorSpec, rng: &mut impl RngCore) -> Result<Vec<f64>> {
    match spec.weight_range {
        None => Ok(vec![1.0; spec.m]),
        Some((lo, hi)) => {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::Config(format!("bad weight range [{lo}, {hi}]")));
            }
            Ok((0..spec.m).map(|_| lo + (hi - lo) * rng.gen::<f64>()).collect())
        }
    }
}

/// Vertices of a regular simplex: the first `m ≤ n+1` vertices, centered and
/// scaled to unit length so that all pairwise distances agree.
fn simplex_nodes(n: usize, m: usize) -> Vec<Vec<f64>> {
    // Standard basis of R^m centered at the centroid lives in the sum-zero
    // hyperplane; express it in the Helmert orthonormal basis of that plane.
    let mut nodes = Vec::with_capacity(m);
    for i in 0..m {
        let mut centered = vec![-1.0 / m as f64; m];
        centered[i] += 1.0;
        // Helmert rows h_k (k = 1..m−1): (1,…,1,−k,0,…,0)/√(k(k+1)).
        let mut coords = vec![0.0; n];
        for k in 1..m {
            let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
            let mut v = 0.0;
            for (j, &cj) in centered.iter().enumerate().take(k) {
                v += cj * scale;
                let _ = j;
            }
            v -= centered[k] * k as f64 * scale;
            coords[k - 1] = v;
        }
        let len = norm(&coords);
        nodes.push(coords.into_iter().map(|x| x / len).collect());
    }
    nodes
}

/// Generate the node set of an instance.
pub fn generate_nodes(spec: &GeneratorSpec, rng: &mut impl RngCore) -> Result<Vec<Vec<f64>>> {
    let (n, m) = (spec.n, spec.m);
    if n == 0 || m == 0 {
        return Err(Error::Config("generator needs n ≥ 1, m ≥ 1".into()));
    }
    match spec.kind {
        GeneratorKind::Orthonormal => {
            if m > n {
                return Err(Error::Config(format!(
                    "orthonormal generator needs m ≤ n, got m={m}, n={n}"
                )));
            }
            Ok((0..m)
                .map(|i| {
                    let mut v = vec![0.0; n];
                    v[i] = 1.0;
                    v
                })
                .collect())
        }
        GeneratorKind::Simplex => {
            if m > n + 1 {
                return Err(Error::Config(format!(
                    "simplex generator needs m ≤ n+1, got m={m}, n={n}"
                )));
            }
            Ok(simplex_nodes(n, m))
        }
        GeneratorKind::Hypercube => {
            if n < 64 && m as u128 > (1u128 << n) {
                return Err(Error::Config(format!(
                    "hypercube generator needs m ≤ 2^n, got m={m}, n={n}"
                )));
            }
            let scale = 1.0 / (n as f64).sqrt();
            Ok((0..m)
                .map(|i| {
                    (0..n)
                        .map(|b| if (i >> b) & 1 == 1 { -scale } else { scale })
                        .collect()
                })
                .collect())
        }
        GeneratorKind::RandomSphere => {
            for _ in 0..10_000 {
                let nodes: Vec<Vec<f64>> = (0..m).map(|_| unit_sphere(rng, n)).collect();
                if let Some(min_kappa) = spec.min_kappa {
                    if m >= 2 {
                        let rep = condition_report(&nodes)?;
                        if rep.kappa_min < min_kappa {
                            continue;
                        }
                    }
                }
                return Ok(nodes);
            }
            Err(Error::Config(
                "random_sphere generator could not meet min_kappa".into(),
            ))
        }
    }
}

pub fn generate_instance(spec: &GeneratorSpec, seed: u64) -> Result<PointMeasure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = generate_nodes(spec, &mut rng)?;
    let weights = draw_weights(spec, &mut rng)?;
    PointMeasure::new(nodes, weights)
}

// --- run --------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub d: u32,
    pub algo: Algo,
    pub moments_mode: MomentsMode,
    pub forward_err: f64,
    pub backward_err: f64,
    /// Worst matched weight error; absent when the mode folds weights into
    /// the components.
    pub weight_err: Option<f64>,
    pub rounds: Vec<RoundDiagnostics>,
    pub warnings: Vec<String>,
    pub wall_ms: f64,
    pub solver_iters_total: usize,
    pub components: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl RunResult {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{:.6e},{:.6e},{},{:.1},{}",
            self.seed,
            self.n,
            self.m,
            self.d,
            self.algo,
            self.forward_err,
            self.backward_err,
            self.rounds.len(),
            self.wall_ms,
            self.solver_iters_total
        )
    }
}

fn folded_components(mu: &PointMeasure, d: u32) -> Vec<Vec<f64>> {
    mu.weights()
        .iter()
        .zip(mu.nodes())
        .map(|(w, a)| {
            let s = w.powf(1.0 / d as f64);
            a.iter().map(|x| s * x).collect()
        })
        .collect()
}

fn decomp_options(cfg: &RunConfig, seed: u64) -> Result<DecompOptions> {
    let dc = cfg.decomp.clone().unwrap_or_default();
    let mut opts = DecompOptions::seeded(seed);
    opts.w_degree = dc.w_degree;
    if let Some(r) = dc.max_rounds {
        opts.max_rounds = r;
    }
    if let Some(tol) = cfg.solver {
        opts.tol = tol;
    }
    if let Some(margin) = dc.interval_margin {
        opts.interval_margin = margin;
    }
    opts.discriminator = match dc.discriminator.as_deref() {
        None => None,
        Some("v_linear") => Some(Discriminator::VLinear),
        Some("v_squared") => Some(Discriminator::VSquared),
        Some("norm_squared") => Some(Discriminator::NormSquared),
        Some(other) => {
            return Err(Error::Config(format!("unknown discriminator {other}")));
        }
    };
    Ok(opts)
}

/// Uniform-ball cap derived from the instance: the band Chebyshev of degree
/// `(d−2)/2` attains its maximum over the ball at the extreme squared
/// distances, so `c_max = max(T_I(0), T_I((1+max‖a‖)²))`.
pub fn derive_cap_for(mu: &PointMeasure, margin: f64, d: u32) -> Result<ComplexityCap> {
    if mu.len() < 2 {
        return Err(Error::Config("complexity cap needs ≥ 2 nodes".into()));
    }
    if d < 4 || d % 2 != 0 {
        return Err(Error::Config(format!("complexity cap needs even d ≥ 4, got {d}")));
    }
    let rep = condition_report(mu.nodes())?;
    let interval =
        crate::chebyshev::Interval::testimony_band(rep.kappa_min, rep.kappa_max, margin)?;
    let inner = crate::chebyshev::cheb_interval(interval, (d - 2) / 2);
    let max_norm = mu.nodes().iter().map(|a| norm(a)).fold(0.0f64, f64::max);
    let far = (1.0 + max_norm).powi(2);
    let c_max = inner.eval(0.0).max(inner.eval(far));
    let lambda_min = mu.weights().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ComplexityCap { lambda_min, c_max })
}

/// Execute one algorithm run against a known instance and grade the result.
pub fn run_instance(mu: &PointMeasure, cfg: &RunConfig) -> Result<RunResult> {
    let algo = cfg.algo.ok_or_else(|| Error::Config("algo missing".into()))?;
    let seed = cfg.seed.unwrap_or(0);
    let mode = cfg.moments_mode.unwrap_or_default();
    let d = match algo {
        Algo::Jennrich => 3,
        _ => cfg
            .d
            .ok_or_else(|| Error::Config("degree d missing".into()))?,
    };
    let n = mu.dim();
    let mut opts = decomp_options(cfg, seed)?;
    if cfg.decomp.as_ref().map(|dc| dc.complexity_cap) == Some(true) && algo != Algo::Jennrich {
        opts.complexity_cap = Some(derive_cap_for(mu, opts.interval_margin, d)?);
    }

    let start = Instant::now();
    let (components, weights, rounds, warnings, iters, truth, mod_sign, weight_err_truth): (
        Vec<Vec<f64>>,
        Vec<f64>,
        Vec<RoundDiagnostics>,
        Vec<String>,
        usize,
        Vec<Vec<f64>>,
        bool,
        Option<Vec<f64>>,
    ) = match (algo, mode) {
        (Algo::Jennrich, _) => {
            let truth = folded_components(mu, 3);
            let t3 = weighted_power_sum(&vec![1.0; truth.len()], &truth, 3)?;
            let comps = jennrich(&t3, seed)?;
            let k = comps.len();
            (comps, vec![1.0; k], vec![], vec![], 0, truth, false, None)
        }
        (Algo::VExact, MomentsMode::True) => {
            let ms = mu.moment_sequence(d)?;
            let res = v_decompose_moments(&ms, &opts)?;
            (
                res.components,
                res.weights,
                res.rounds,
                res.warnings,
                res.solver_iterations_total,
                mu.nodes().to_vec(),
                false,
                Some(mu.weights().to_vec()),
            )
        }
        (Algo::VExact, MomentsMode::NormScaled) => {
            // Even-degree fake moments of the folded top tensor: the nodes of
            // the equivalent measure are the unit directions. Only an even
            // discriminator couples to even-only data.
            let folded = folded_components(mu, d);
            let t = weighted_power_sum(&vec![1.0; folded.len()], &folded, d)?;
            let ms = fake_moments_norm_scaled(&t)?;
            if opts.discriminator.is_none() {
                opts.discriminator = Some(Discriminator::VSquared);
            }
            let res = v_decompose_moments(&ms, &opts)?;
            let truth: Vec<Vec<f64>> = folded
                .iter()
                .map(|a| {
                    let len = norm(a);
                    a.iter().map(|x| x / len).collect()
                })
                .collect();
            (
                res.components,
                res.weights,
                res.rounds,
                res.warnings,
                res.solver_iterations_total,
                truth,
                true,
                None,
            )
        }
        (Algo::VTensor, _) | (Algo::VExact, MomentsMode::Directional) => {
            let truth = folded_components(mu, d);
            let t = weighted_power_sum(&vec![1.0; truth.len()], &truth, d)?;
            let res = v_decompose_tensor(&t, &opts)?;
            (
                res.components,
                res.weights,
                res.rounds,
                res.warnings,
                res.solver_iterations_total,
                truth,
                true,
                None,
            )
        }
        (Algo::VSphere, mode) => {
            let dc = cfg.decomp.clone().unwrap_or_default();
            let lambda_min = dc
                .lambda_min
                .unwrap_or_else(|| mu.weights().iter().cloned().fold(f64::INFINITY, f64::min));
            let rho_min = match dc.rho_min {
                Some(r) => r,
                None => {
                    if mu.len() >= 2 {
                        condition_report(mu.nodes())?.rho_min_sq_corr / 2.0
                    } else {
                        0.5
                    }
                }
            };
            let ms = match mode {
                MomentsMode::NormScaled => {
                    let folded = folded_components(mu, d);
                    let t = weighted_power_sum(&vec![1.0; folded.len()], &folded, d)?;
                    fake_moments_norm_scaled(&t)?
                }
                _ => mu.moment_sequence(d)?,
            };
            let res = v_decompose_sphere(&ms, lambda_min, rho_min, &opts)?;
            (
                res.components,
                res.weights,
                res.rounds,
                res.warnings,
                res.solver_iterations_total,
                mu.nodes().to_vec(),
                true,
                None,
            )
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let forward_err = hausdorff_distance(&components, &truth, mod_sign)?;
    let top = match algo {
        Algo::Jennrich => weighted_power_sum(&vec![1.0; truth.len()], &truth, 3)?,
        _ => mu.moment_tensor(d)?,
    };
    let backward_err = match algo {
        Algo::VExact if mode == MomentsMode::True => {
            backward_error(&top, &components, Some(&weights))?
        }
        Algo::VSphere => {
            // Unit components with refit weights against the true top tensor.
            backward_error(&top, &components, Some(&weights))?
        }
        Algo::VExact => {
            let folded_top = {
                let folded = folded_components(mu, d);
                weighted_power_sum(&vec![1.0; folded.len()], &folded, d)?
            };
            backward_error(&folded_top, &components, Some(&weights))?
        }
        _ => backward_error(&top, &components, None)?,
    };
    let weight_err = match weight_err_truth {
        Some(true_weights) if components.len() == truth.len() => {
            let (_, perm) = match_components(&truth, &components, mod_sign)?;
            Some(
                perm.iter()
                    .enumerate()
                    .map(|(i, &p)| (weights[p] - true_weights[i]).abs())
                    .fold(0.0f64, f64::max),
            )
        }
        _ => None,
    };

    Ok(RunResult {
        seed,
        n,
        m: mu.len(),
        d,
        algo,
        moments_mode: mode,
        forward_err,
        backward_err,
        weight_err,
        rounds,
        warnings,
        wall_ms,
        solver_iters_total: iters,
        components,
        weights,
    })
}

fn load_or_generate(cfg: &RunConfig) -> Result<PointMeasure> {
    match (&cfg.instance, &cfg.generator) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            Ok(serde_json::from_str(&text)?)
        }
        (None, Some(spec)) => generate_instance(spec, cfg.seed.unwrap_or(0)),
        (None, None) => Err(Error::Config("no instance file or generator given".into())),
    }
}

// --- subcommand entry points ---------------------------------------------------------

fn write_csv(path: &Path, rows: &[String]) -> Result<()> {
    let exists = path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if !exists {
        writeln!(file, "{CSV_HEADER}")?;
    }
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

fn out_prefix(cfg: &RunConfig) -> Result<&Path> {
    cfg.out
        .as_deref()
        .ok_or_else(|| Error::Config("output path missing (--out)".into()))
}

/// `generate`: write the instance JSON; with a degree and moments mode also
/// write the prepared moment sequence.
pub fn cmd_generate(cfg: &RunConfig) -> Result<PathBuf> {
    let spec = cfg
        .generator
        .as_ref()
        .ok_or_else(|| Error::Config("generate needs a generator spec".into()))?;
    let mu = generate_instance(spec, cfg.seed.unwrap_or(0))?;
    let out = out_prefix(cfg)?;
    let instance_path = out.with_extension("instance.json");
    std::fs::write(&instance_path, serde_json::to_string_pretty(&mu)?)?;
    if let (Some(d), Some(mode)) = (cfg.d, cfg.moments_mode) {
        let ms: MomentSequence = match mode {
            MomentsMode::True => mu.moment_sequence(d)?,
            MomentsMode::NormScaled => {
                let folded = folded_components(&mu, d);
                let t: HomPoly = weighted_power_sum(&vec![1.0; folded.len()], &folded, d)?;
                fake_moments_norm_scaled(&t)?
            }
            MomentsMode::Directional => {
                let folded = folded_components(&mu, d);
                let t = weighted_power_sum(&vec![1.0; folded.len()], &folded, d)?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0) ^ 0x77);
                let w = unit_sphere(&mut rng, mu.dim());
                crate::measures::fake_moments_directional(&t, &w)?
            }
        };
        let moments_path = out.with_extension("moments.json");
        std::fs::write(&moments_path, serde_json::to_string_pretty(&ms)?)?;
    }
    Ok(instance_path)
}

/// `run`: execute one algorithm, write `<out>.json` and append `<out>.csv`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunResult> {
    let mu = load_or_generate(cfg)?;
    let result = run_instance(&mu, cfg)?;
    let out = out_prefix(cfg)?;
    std::fs::write(out.with_extension("json"), serde_json::to_string_pretty(&result)?)?;
    write_csv(&out.with_extension("csv"), &[result.csv_row()])?;
    Ok(result)
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub d: u32,
    pub m: usize,
    pub result: std::result::Result<RunResult, String>,
}

/// `sweep`: run every parameter point (in parallel worker threads), one CSV
/// row per point, failures recorded in-row.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep spec missing".into()))?;
    let points: Vec<RunConfig> = match (&spec.d_values, &spec.m_values) {
        (Some(ds), None) if !ds.is_empty() => ds
            .iter()
            .map(|&d| RunConfig {
                d: Some(d),
                sweep: None,
                ..cfg.clone()
            })
            .collect(),
        (None, Some(ms)) if !ms.is_empty() => {
            let base = cfg
                .generator
                .clone()
                .ok_or_else(|| Error::Config("m sweep needs a generator".into()))?;
            ms.iter()
                .map(|&m| RunConfig {
                    generator: Some(GeneratorSpec { m, ..base.clone() }),
                    sweep: None,
                    ..cfg.clone()
                })
                .collect()
        }
        _ => {
            return Err(Error::Config(
                "sweep needs exactly one nonempty range (d_values or m_values)".into(),
            ))
        }
    };

    let mut rows: Vec<Option<SweepRow>> = (0..points.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (idx, point) in points.iter().enumerate() {
            handles.push((
                idx,
                scope.spawn(move || {
                    load_or_generate(point).and_then(|mu| run_instance(&mu, point))
                }),
            ));
        }
        for (idx, handle) in handles {
            let outcome = handle
                .join()
                .unwrap_or_else(|_| Err(Error::Solver("worker panicked".into())));
            let point = &points[idx];
            rows[idx] = Some(SweepRow {
                d: point.d.unwrap_or(0),
                m: point.generator.as_ref().map(|g| g.m).unwrap_or(0),
                result: outcome.map_err(|e| e.to_string()),
            });
        }
    });
    let rows: Vec<SweepRow> = rows.into_iter().map(|r| r.expect("filled")).collect();

    let out = out_prefix(cfg)?;
    let csv_rows: Vec<String> = rows
        .iter()
        .map(|row| match &row.result {
            Ok(res) => res.csv_row(),
            Err(_) => format!(
                "{},{},{},{},{},nan,nan,0,nan,0",
                cfg.seed.unwrap_or(0),
                cfg.generator.as_ref().map(|g| g.n).unwrap_or(0),
                row.m,
                row.d,
                cfg.algo.map(|a| a.to_string()).unwrap_or_default()
            ),
        })
        .collect();
    write_csv(&out.with_extension("csv"), &csv_rows)?;
    std::fs::write(out.with_extension("json"), serde_json::to_string_pretty(&rows)?)?;
    Ok(rows)
}

// --- clap surface -----------------------------------------------------------------------

#[derive(clap::Parser)]
#[command(
    name = "waring",
    about = "Decompose symmetric tensors and moment sequences into weighted powers of linear forms"
)]
pub struct CliArgs {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Clone)]
pub struct CommonFlags {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Instance JSON file ({"n","m","weights","nodes"}).
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Algorithm: jennrich | v_exact | v_tensor | v_sphere.
    #[arg(long)]
    pub algo: Option<String>,
    /// Top moment degree d.
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output prefix; writes <out>.json / <out>.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Moment preparation: true | directional | norm_scaled.
    #[arg(long)]
    pub moments_mode: Option<String>,
}

#[derive(clap::Subcommand, Clone)]
pub enum Command {
    /// Write an instance (and optional moments) to files.
    Generate(CommonFlags),
    /// Run one algorithm on one instance.
    Run(CommonFlags),
    /// Run a d- or m-range and collect a CSV table.
    Sweep(CommonFlags),
}

fn merged_config(flags: &CommonFlags) -> Result<RunConfig> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if flags.instance.is_some() {
        cfg.instance = flags.instance.clone();
    }
    if let Some(a) = &flags.algo {
        cfg.algo = Some(a.parse()?);
    }
    if flags.degree.is_some() {
        cfg.d = flags.degree;
    }
    if flags.seed.is_some() {
        cfg.seed = flags.seed;
    }
    if flags.out.is_some() {
        cfg.out = flags.out.clone();
    }
    if let Some(mm) = &flags.moments_mode {
        cfg.moments_mode = Some(mm.parse()?);
    }
    Ok(cfg)
}

/// CLI entry point; returns the process exit code.
pub fn run_cli(args: CliArgs) -> i32 {
    let outcome = (|| -> Result<()> {
        match &args.command {
            Command::Generate(flags) => {
                let cfg = merged_config(flags)?;
                let path = cmd_generate(&cfg)?;
                eprintln!("instance written to {}", path.display());
            }
            Command::Run(flags) => {
                let cfg = merged_config(flags)?;
                let result = cmd_run(&cfg)?;
                eprintln!(
                    "{}: forward_err {:.3e}, backward_err {:.3e}, {} rounds, {:.1} ms",
                    result.algo,
                    result.forward_err,
                    result.backward_err,
                    result.rounds.len(),
                    result.wall_ms
                );
            }
            Command::Sweep(flags) => {
                let cfg = merged_config(flags)?;
                let rows = cmd_sweep(&cfg)?;
                let failures = rows.iter().filter(|r| r.result.is_err()).count();
                eprintln!("sweep finished: {} points, {failures} failures", rows.len());
            }
        }
        Ok(())
    })();
    match outcome {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Io(_) | Error::Json(_) => 2,
                _ => 1,
            }
        }
    }
}
