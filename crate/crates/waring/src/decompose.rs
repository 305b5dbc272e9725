//! The decomposition algorithms.
//!
//! Every variant shares one round structure: solve an SOS program for a
//! nonnegative weight polynomial `W` that concentrates on a single component,
//! contract the input against `W` to a quadratic form
//! `M = Σᵢ λᵢ W(aᵢ) ⟨aᵢ,X⟩²`, and read the component off the top eigenpair of
//! `M`. Rounds differ in how the discriminator `f` is chosen, how recovered
//! components are excluded from later rounds (exact point constraints vs. SOS
//! exclusion balls), and how lower-degree moments are obtained (given, or
//! generated from a single tensor).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::cheb_eval;
use crate::measures::{fake_moments_directional, MomentSequence, PointMeasure};
use crate::numerics::{
    dot, least_squares_weights_moments, least_squares_weights_tensor, linear_form_vector, norm,
    quadratic_form_matrix, sym_eig, Mat,
};
use crate::poly::{contract, pow_linear_form, HomPoly, MultiPoly};
use crate::sdpsolver::ToleranceConfig;
use crate::sosprog::{build_v_program, solve_program, ComplexityCap, ExtraConstraint};
use crate::{Error, Result};

/// Degree-≤2 polynomial selecting which component a round recovers via the
/// value gap `f(a_j) − f(a_i)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Discriminator {
    /// `⟨v,X⟩` with fresh random `v` per round.
    VLinear,
    /// `⟨v,X⟩²` with fresh random `v` per round.
    VSquared,
    /// `‖X‖²`, deterministic; separates components of distinct lengths.
    NormSquared,
    /// A fixed user-supplied polynomial of degree ≤ 2.
    Custom(MultiPoly),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompOptions {
    /// Weight-polynomial degree bound; defaults to the largest even value
    /// ≤ d−2.
    pub w_degree: Option<u32>,
    /// Defaults per algorithm: linear for the exact and tensor variants,
    /// squared for the sphere variant.
    pub discriminator: Option<Discriminator>,
    pub max_rounds: usize,
    pub seed: u64,
    pub tol: ToleranceConfig,
    pub complexity_cap: Option<ComplexityCap>,
    /// Margin added to the testimony band by harness helpers.
    pub interval_margin: f64,
    /// Rejection-sampling budget for the conditioned direction draw.
    pub max_sample_attempts: usize,
}

impl Default for DecompOptions {
    fn default() -> Self {
        DecompOptions {
            w_degree: None,
            discriminator: None,
            max_rounds: 32,
            seed: 0,
            tol: ToleranceConfig::default(),
            complexity_cap: None,
            interval_margin: 0.1,
            max_sample_attempts: 200_000,
        }
    }
}

impl DecompOptions {
    pub fn seeded(seed: u64) -> Self {
        DecompOptions {
            seed,
            ..Default::default()
        }
    }
}

/// Per-round diagnostics, emitted as structured JSON by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    pub round: usize,
    pub objective: f64,
    pub solver_status: String,
    pub solver_iterations: usize,
    /// Largest two |eigenvalues| of the contracted quadratic form.
    pub top_eigenvalues: (f64, f64),
    /// `1 − μ₁/trace(M)`: mass the weight polynomial leaks off the top
    /// component.
    pub off_component_mass: f64,
    /// `1/W*(c)`; untrusted, the final weights come from the refit.
    pub rho_raw: f64,
    pub discriminator: String,
    pub sampler_attempts: usize,
    /// Sphere-mode sampling thresholds (algorithm-box and text variants).
    pub threshold_box: Option<f64>,
    pub threshold_text: Option<f64>,
    pub notes: Vec<String>,
}

/// Degree-feasibility report for the sphere variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UsefulConstraintsReport {
    pub d: u32,
    pub m: usize,
    /// Correlation threshold `r = 0.999·(λ_min/T₀)^{2/d}`.
    pub r: f64,
    /// `ρ = (1−√(1−ρ_min))/2`.
    pub rho: f64,
    /// `B = (T_{(d−2)/2}((8+2ρ)/(8−ρ)) + 1)/2`.
    pub best_ratio: f64,
    /// `ε̃ = 16 T₀ / (ρ_min · B · λ_min)`.
    pub eps_tilde: f64,
    /// `w_max = 1/(B·λ_min)`.
    pub w_max: f64,
    pub c1: ConstraintCheck,
    pub c2: ConstraintCheck,
    pub c3: ConstraintCheck,
    pub all_hold: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn check(lhs: f64, rhs: f64) -> ConstraintCheck {
    ConstraintCheck {
        lhs,
        rhs,
        holds: lhs >= rhs,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub components: Vec<Vec<f64>>,
    /// Least-squares refit weights.
    pub weights: Vec<f64>,
    /// Per-round `1/W*(c)`, reported but untrusted.
    pub raw_weights: Vec<f64>,
    pub rounds: Vec<RoundDiagnostics>,
    pub warnings: Vec<String>,
    pub useful_constraints: Option<UsefulConstraintsReport>,
    pub solver_iterations_total: usize,
}

// --- random directions --------------------------------------------------------

pub fn gaussian(rng: &mut impl RngCore) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform draw from the unit sphere.
pub fn unit_sphere(rng: &mut impl RngCore, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
        let len = norm(&v);
        if len > 1e-8 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Uniform draw from the sphere conditioned on `v ⊥ w`.
fn unit_sphere_orthogonal(rng: &mut impl RngCore, w: &[f64]) -> Vec<f64> {
    loop {
        let g = unit_sphere(rng, w.len());
        let proj = dot(&g, w);
        let v: Vec<f64> = g.iter().zip(w).map(|(gi, wi)| gi - proj * wi).collect();
        let len = norm(&v);
        if len > 1e-6 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Rejection-sample a unit vector until `S(v) ≥ threshold`; returns the draw
/// count alongside. The failure carries the best value seen.
pub fn sample_discriminator(
    s: &MultiPoly,
    threshold: f64,
    rng: &mut impl RngCore,
    max_attempts: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut best = f64::NEG_INFINITY;
    for attempt in 1..=max_attempts {
        let v = unit_sphere(rng, s.n());
        let value = s.eval(&v)?;
        if value >= threshold {
            return Ok((v, attempt));
        }
        best = best.max(value);
    }
    Err(Error::Sampling(format!(
        "no direction reached threshold {threshold:.6} in {max_attempts} draws (best {best:.6})"
    )))
}

// --- Jennrich -------------------------------------------------------------------

/// Jennrich's eigendecomposition algorithm for 3-tensors with pairwise
/// orthogonal components: slice the tensor along a random direction, read the
/// components off the eigenpairs of the resulting matrix, undo the scaling
/// with a real cube root.
pub fn jennrich(t3: &HomPoly, seed: u64) -> Result<Vec<Vec<f64>>> {
    if t3.degree() != 3 {
        return Err(Error::Domain(format!(
            "Jennrich needs a degree-3 tensor, got {}",
            t3.degree()
        )));
    }
    if t3.is_zero() {
        return Ok(vec![]);
    }
    let n = t3.n();
    let t_norm = t3.frobenius_norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_issue = String::new();
    for _ in 0..5 {
        let v = unit_sphere(&mut rng, n);
        let slice = contract(&MultiPoly::linear_form(&v), t3.as_poly(), 2)?;
        let m = quadratic_form_matrix(&slice)?;
        let eig = sym_eig(&m)?;
        let scale = eig.spectral_norm();
        let zero_tol = 1e-8 * (1.0 + scale);
        let nonzero: Vec<(f64, &Vec<f64>)> = eig
            .eigenvalues
            .iter()
            .zip(&eig.eigenvectors)
            .filter(|(mu, _)| mu.abs() > zero_tol)
            .map(|(mu, u)| (*mu, u))
            .collect();
        let mut collision = false;
        for i in 0..nonzero.len() {
            for j in (i + 1)..nonzero.len() {
                if (nonzero[i].0 - nonzero[j].0).abs() < 1e-8 * (1.0 + scale) {
                    collision = true;
                }
            }
        }
        if collision {
            last_issue = "eigenvalue collision".into();
            continue;
        }
        let comps: Vec<Vec<f64>> = nonzero
            .iter()
            .map(|(mu, u)| {
                let ratio = mu / dot(u, &v);
                let len = ratio.cbrt();
                u.iter().map(|ui| len * ui).collect()
            })
            .collect();
        let residual = crate::measures::backward_error(t3, &comps, None)?;
        if residual <= 1e-7 * (1.0 + t_norm) {
            return Ok(comps);
        }
        last_issue = format!("backward error {residual:.3e}");
    }
    Err(Error::Degenerate(format!(
        "Jennrich failed after 5 direction draws ({last_issue})"
    )))
}

// --- single round ----------------------------------------------------------------

/// Output of one weight-polynomial round.
#[derive(Debug, Clone)]
pub struct VStepOutcome {
    pub wstar: MultiPoly,
    pub m_matrix: Mat,
    pub component: Vec<f64>,
    pub rho: f64,
    pub diagnostics: RoundDiagnostics,
}

/// One component-recovery round: solve the weight program, contract to the
/// quadratic form, take the top eigenpair, decide the sign against the
/// degree-1 contraction, and rescale by `√μ` (skipped on the sphere).
#[allow(clippy::too_many_arguments)]
pub fn v_step(
    moments: &MomentSequence,
    f: &MultiPoly,
    w_degree: u32,
    extra: &[ExtraConstraint],
    cap: Option<ComplexityCap>,
    tol: &ToleranceConfig,
    sphere_mode: bool,
    round: usize,
) -> Result<VStepOutcome> {
    let prog = build_v_program(moments, f, w_degree, extra, cap)?;
    let (sol, mut polys) = solve_program(&prog, tol)?;
    let wstar = polys.remove("W").expect("weight variable present");
    let sum = moments.sum_all();

    let m_poly = contract(&wstar, &sum, 2)?;
    let m_matrix = quadratic_form_matrix(&m_poly)?;
    let eig = sym_eig(&m_matrix)?;
    let mu = eig.eigenvalues[0];
    if mu <= 1e-12 * (1.0 + m_matrix.trace().abs()) {
        return Err(Error::Degenerate(format!(
            "top eigenvalue {mu:.3e} of the contracted form is not positive"
        )));
    }
    let mut u = eig.eigenvectors[0].clone();

    let l_poly = contract(&wstar, &sum, 1)?;
    let l = linear_form_vector(&l_poly)?;
    if dot(&u, &l) < 0.0 {
        for x in &mut u {
            *x = -*x;
        }
    }

    let component: Vec<f64> = if sphere_mode {
        u
    } else {
        u.iter().map(|x| x * mu.sqrt()).collect()
    };
    let w_at_c = wstar.eval(&component)?;
    let rho = if w_at_c > 0.0 {
        1.0 / w_at_c
    } else {
        f64::INFINITY
    };

    let trace = m_matrix.trace();
    let second = eig.eigenvalues.get(1).copied().unwrap_or(0.0);
    let diagnostics = RoundDiagnostics {
        round,
        objective: sol.objective,
        solver_status: format!("{:?}", sol.status),
        solver_iterations: sol.iterations,
        top_eigenvalues: (mu, second),
        off_component_mass: (1.0 - mu / trace.max(1e-300)).clamp(0.0, 1.0),
        rho_raw: rho,
        discriminator: format!("{f:?}"),
        sampler_attempts: 0,
        threshold_box: None,
        threshold_text: None,
        notes: vec![],
    };
    Ok(VStepOutcome {
        wstar,
        m_matrix,
        component,
        rho,
        diagnostics,
    })
}

fn default_w_degree(d: u32) -> u32 {
    let w = d.saturating_sub(2);
    w - (w % 2)
}

fn resolved_w_degree(d: u32, opts: &DecompOptions) -> Result<u32> {
    let w = opts.w_degree.unwrap_or_else(|| default_w_degree(d));
    if w % 2 != 0 {
        return Err(Error::Parity(format!("w_degree must be even, got {w}")));
    }
    if w + 2 > d {
        return Err(Error::DegreeLimit(format!(
            "w_degree {w} needs moments of degree ≥ {}",
            w + 2
        )));
    }
    Ok(w)
}

fn duplicate_of(c: &[f64], comps: &[Vec<f64>], mod_sign: bool) -> Option<usize> {
    let tol = 1e-3 * (1.0 + norm(c));
    comps.iter().position(|prev| {
        let direct: f64 = c
            .iter()
            .zip(prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let flipped: f64 = c
            .iter()
            .zip(prev)
            .map(|(a, b)| (a + b) * (a + b))
            .sum::<f64>()
            .sqrt();
        direct < tol || (mod_sign && flipped < tol)
    })
}

fn round_discriminator(
    choice: &Discriminator,
    rng: &mut impl RngCore,
    n: usize,
) -> Result<MultiPoly> {
    Ok(match choice {
        Discriminator::VLinear => MultiPoly::linear_form(&unit_sphere(rng, n)),
        Discriminator::VSquared => pow_linear_form(&unit_sphere(rng, n), 2)?.into_poly(),
        Discriminator::NormSquared => MultiPoly::squared_norm(n),
        Discriminator::Custom(p) => p.clone(),
    })
}

// --- moment decomposition (exact regime) ------------------------------------------

/// Full moment decomposition: repeat the recovery round with a fresh random
/// direction, excluding every recovered component through the point constraint
/// `W(cᵢ) = 0`, until the program becomes infeasible. Exact for `d ≥ 2m`.
pub fn v_decompose_moments(
    moments: &MomentSequence,
    opts: &DecompOptions,
) -> Result<DecompositionResult> {
    let d = moments.degree();
    if d < 2 {
        return Err(Error::DegreeLimit("moment decomposition needs d ≥ 2".into()));
    }
    let mut warnings = Vec::new();
    if d % 2 != 0 {
        warnings.push(format!("degree {d} is odd; guarantees assume even d"));
    }
    let w_degree = resolved_w_degree(d, opts)?;
    let discriminator = opts.discriminator.clone().unwrap_or(Discriminator::VLinear);
    let n = moments.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut extra: Vec<ExtraConstraint> = Vec::new();
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut raw_weights: Vec<f64> = Vec::new();
    let mut rounds: Vec<RoundDiagnostics> = Vec::new();
    let mut iter_total = 0usize;
    let randomized = matches!(
        discriminator,
        Discriminator::VLinear | Discriminator::VSquared
    );

    'rounds: for round in 1..=opts.max_rounds {
        // A failed solve with a feasible constraint set is retried with a
        // fresh direction; a deterministic discriminator cannot be redrawn.
        let mut outcome = None;
        for retry in 0..3 {
            let f = round_discriminator(&discriminator, &mut rng, n)?;
            match v_step(
                moments,
                &f,
                w_degree,
                &extra,
                opts.complexity_cap,
                &opts.tol,
                false,
                round,
            ) {
                Ok(out) => {
                    outcome = Some(out);
                    break;
                }
                Err(Error::Infeasible) => break 'rounds,
                Err(err) => {
                    let prog =
                        build_v_program(moments, &f, w_degree, &extra, opts.complexity_cap)?;
                    match crate::sdpsolver::check_feasible(&prog.compile()?, &opts.tol)? {
                        crate::sdpsolver::Feasibility::Infeasible { .. } => break 'rounds,
                        crate::sdpsolver::Feasibility::Feasible(_) => {
                            if !randomized || retry == 2 {
                                warnings.push(format!("round {round} aborted: {err}"));
                                break 'rounds;
                            }
                            warnings.push(format!("round {round} retried: {err}"));
                        }
                    }
                }
            }
        }
        let Some(outcome) = outcome else { break };
        iter_total += outcome.diagnostics.solver_iterations;
        if let Some(prev) = duplicate_of(&outcome.component, &components, false) {
            let mut diag = outcome.diagnostics;
            diag.notes.push(format!(
                "component duplicates round {}; treating the feasible set as exhausted",
                prev + 1
            ));
            rounds.push(diag);
            break;
        }
        extra.push(ExtraConstraint::PointVanish(outcome.component.clone()));
        components.push(outcome.component);
        raw_weights.push(outcome.rho);
        rounds.push(outcome.diagnostics);
        if round == opts.max_rounds {
            warnings.push(format!(
                "max_rounds {} reached; result may be partial",
                opts.max_rounds
            ));
        }
    }

    if components.is_empty() {
        return Err(Error::Degenerate("no components recovered".into()));
    }
    let fit = least_squares_weights_moments(moments, &components)?;
    if fit.rank_deficient {
        warnings.push("weight refit hit a rank-deficient Gram matrix".into());
    }
    Ok(DecompositionResult {
        components,
        weights: fit.weights,
        raw_weights,
        rounds,
        warnings,
        useful_constraints: None,
        solver_iterations_total: iter_total,
    })
}

// --- tensor decomposition via directional fake moments ------------------------------

/// Decompose a single even-degree tensor by generating directional fake
/// moments along a random `w` and running the moment algorithm with the
/// discriminator drawn orthogonal to `w`. Output components carry a `±1`
/// ambiguity each; exact for `d ≥ 2m`.
pub fn v_decompose_tensor(t: &HomPoly, opts: &DecompOptions) -> Result<DecompositionResult> {
    let d = t.degree();
    if d % 2 != 0 || d < 4 {
        return Err(Error::Parity(format!(
            "tensor decomposition needs even degree ≥ 4, got {d}"
        )));
    }
    let n = t.n();
    let w_degree = resolved_w_degree(d, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut outer_issue = String::new();
    let mut best_partial: Option<DecompositionResult> = None;
    'outer: for attempt in 0..3 {
        let w = unit_sphere(&mut rng, n);
        let fake = fake_moments_directional(t, &w)?;
        let mut extra: Vec<ExtraConstraint> = Vec::new();
        let mut fake_nodes: Vec<Vec<f64>> = Vec::new();
        let mut components: Vec<Vec<f64>> = Vec::new();
        let mut raw_weights: Vec<f64> = Vec::new();
        let mut rounds: Vec<RoundDiagnostics> = Vec::new();
        let mut warnings: Vec<String> = Vec::new();
        let mut iter_total = 0usize;
        // Set when the attempt ends for a reason a fresh w could cure.
        let mut aborted = false;

        'rounds: for round in 1..=opts.max_rounds {
            let mut outcome = None;
            for retry in 0..3 {
                let v = unit_sphere_orthogonal(&mut rng, &w);
                let f = MultiPoly::linear_form(&v);
                match v_step(
                    &fake,
                    &f,
                    w_degree,
                    &extra,
                    opts.complexity_cap,
                    &opts.tol,
                    false,
                    round,
                ) {
                    Ok(out) => {
                        outcome = Some(out);
                        break;
                    }
                    Err(Error::Infeasible) => break 'rounds,
                    Err(err) => {
                        let prog =
                            build_v_program(&fake, &f, w_degree, &extra, opts.complexity_cap)?;
                        match crate::sdpsolver::check_feasible(&prog.compile()?, &opts.tol)? {
                            crate::sdpsolver::Feasibility::Infeasible { .. } => break 'rounds,
                            crate::sdpsolver::Feasibility::Feasible(_) => {
                                if retry == 2 {
                                    outer_issue = format!("round {round} solver failure: {err}");
                                    aborted = true;
                                    break 'rounds;
                                }
                                warnings.push(format!("round {round} retried: {err}"));
                            }
                        }
                    }
                }
            }
            let Some(outcome) = outcome else { break };
            iter_total += outcome.diagnostics.solver_iterations;
            let b = outcome.component.clone();
            let bw = dot(&b, &w);
            if bw.abs() < 1e-6 * (1.0 + norm(&b)) {
                outer_issue = "recovered node nearly orthogonal to w".into();
                aborted = true;
                break;
            }
            if outcome.rho <= 0.0 || !outcome.rho.is_finite() {
                outer_issue = "nonpositive fake weight".into();
                aborted = true;
                break;
            }
            if duplicate_of(&b, &fake_nodes, false).is_some() {
                let mut diag = outcome.diagnostics;
                diag.notes.push("duplicate fake node; stopping".into());
                rounds.push(diag);
                break;
            }
            // Exclusion happens at the fake node b/⟨b,w⟩ of the rescaled
            // measure; the true component is λ^{1/d}·b.
            let node: Vec<f64> = b.iter().map(|x| x / bw).collect();
            extra.push(ExtraConstraint::PointVanish(node));
            let lambda = outcome.rho;
            let len = lambda.powf(1.0 / d as f64);
            components.push(b.iter().map(|x| len * x).collect());
            fake_nodes.push(b);
            raw_weights.push(lambda);
            rounds.push(outcome.diagnostics);
        }

        if components.is_empty() {
            outer_issue = "no components recovered".into();
            continue 'outer;
        }
        let fit = least_squares_weights_tensor(t, &components)?;
        if fit.rank_deficient {
            warnings.push("weight refit hit a rank-deficient Gram matrix".into());
        }
        let result = DecompositionResult {
            components,
            weights: fit.weights,
            raw_weights,
            rounds,
            warnings,
            useful_constraints: None,
            solver_iterations_total: iter_total,
        };
        if !aborted {
            return Ok(result);
        }
        // Keep the largest partial recovery in case every direction fails.
        let better = best_partial
            .as_ref()
            .map(|b| result.components.len() > b.components.len())
            .unwrap_or(true);
        if better {
            best_partial = Some(result);
        }
        let _ = attempt;
    }
    match best_partial {
        Some(mut result) => {
            result
                .warnings
                .push(format!("partial result after 3 direction draws ({outer_issue})"));
            Ok(result)
        }
        None => Err(Error::Degenerate(format!(
            "tensor decomposition failed after 3 direction draws ({outer_issue})"
        ))),
    }
}

// --- degree feasibility for the sphere variant ---------------------------------------

/// `F(x) = 1 − √(1−x)`, clamped to 1 for arguments above 1 (converts squared
/// projective distances to squared sphere distances).
fn f_dist(x: f64) -> f64 {
    1.0 - (1.0 - x).max(0.0).sqrt()
}

/// Evaluate the three degree-feasibility inequalities of the sphere variant
/// for given `(d, m, ρ_min, λ_min, T₀)`:
/// (I) `ρ_min/4 ≥ 2(1−r)`, (II) `ρ ≥ 4F(ε̃)`,
/// (III) `ρ_min/4 ≥ 4m·√(2−2(1−ε̃)^{d/2})`.
pub fn check_useful_constraints(
    d: u32,
    m: usize,
    rho_min: f64,
    lambda_min: f64,
    t0: f64,
) -> Result<UsefulConstraintsReport> {
    if !(rho_min > 0.0 && rho_min <= 1.0) {
        return Err(Error::Domain(format!(
            "rho_min must be in (0,1], got {rho_min}"
        )));
    }
    if !(lambda_min > 0.0 && lambda_min <= t0) {
        return Err(Error::Domain("need 0 < lambda_min ≤ T0 (total mass)".into()));
    }
    if d % 4 != 2 {
        return Err(Error::Parity(format!("need d ≡ 2 (mod 4), got {d}")));
    }
    let r = 0.999 * (lambda_min / t0).powf(2.0 / d as f64);
    let rho = 0.5 * (1.0 - (1.0 - rho_min).sqrt());
    let kappa = (8.0 + 2.0 * rho) / (8.0 - rho);
    let best_ratio = 0.5 * (cheb_eval((d - 2) / 2, kappa) + 1.0);
    let eps_tilde = 16.0 * t0 / (rho_min * best_ratio * lambda_min);
    let w_max = 1.0 / (best_ratio * lambda_min);

    let c1 = check(0.25 * rho_min, 2.0 * (1.0 - r));
    let c2 = check(rho, 4.0 * f_dist(eps_tilde));
    let drift = (2.0 - 2.0 * (1.0 - eps_tilde).powi(d as i32 / 2))
        .max(0.0)
        .sqrt();
    let c3 = check(0.25 * rho_min, 4.0 * m as f64 * drift);
    let all_hold = c1.holds && c2.holds && c3.holds;
    Ok(UsefulConstraintsReport {
        d,
        m,
        r,
        rho,
        best_ratio,
        eps_tilde,
        w_max,
        c1,
        c2,
        c3,
        all_hold,
    })
}

// --- sphere variant --------------------------------------------------------------------

/// Approximate decomposition for unit-norm components: each round conditions
/// the direction draw on a high value of the running residual
/// `S = T_d − Σ ⟨recovered,X⟩^d`, optimises with `f = ⟨v,X⟩²`, outputs the
/// unit top eigenvector, and excludes it through the distinct-recovery SOS
/// constraint with exclusion radius `δ = 2−2√(1−ε̃)` and cap `w_max`.
///
/// When the three useful constraints fail at the given degree (typical for
/// small `d`), the theoretical `ε̃` exceeds 1 and would make the exclusion
/// radius and sampling drift meaningless; the run then continues with a small
/// practical `ε̃` and records a warning.
pub fn v_decompose_sphere(
    moments: &MomentSequence,
    lambda_min: f64,
    rho_min: f64,
    opts: &DecompOptions,
) -> Result<DecompositionResult> {
    let d = moments.degree();
    if d % 4 != 2 {
        return Err(Error::Parity(format!(
            "sphere variant needs d ≡ 2 (mod 4), got {d}"
        )));
    }
    let t_top = moments
        .tensor(d)
        .ok_or_else(|| Error::Domain("top-degree tensor missing".into()))?
        .clone();
    let t0 = moments
        .total_mass()
        .ok_or_else(|| Error::Domain("degree-0 tensor missing".into()))?;
    let n = moments.dim();
    let w_degree = resolved_w_degree(d, opts)?;
    let m_estimate = ((t0 / lambda_min) + 1e-9).floor().max(1.0) as usize;
    let report = check_useful_constraints(d, m_estimate, rho_min, lambda_min, t0)?;

    let mut warnings = Vec::new();
    let eps_used = if report.eps_tilde < 1.0 {
        report.eps_tilde
    } else {
        warnings.push(format!(
            "useful constraints fail at d={d} (ε̃ = {:.3e}); continuing with practical ε̃ = 1e-4",
            report.eps_tilde
        ));
        1e-4
    };
    if !report.all_hold && report.eps_tilde < 1.0 {
        warnings.push("useful constraints fail at this degree; no multi-round guarantee".into());
    }
    let delta = 2.0 - 2.0 * (1.0 - eps_used).sqrt();
    let drift_box = (1.0 - (1.0 - eps_used).powi(d as i32 / 2)).max(0.0).sqrt();
    let drift_text = (2.0 - 2.0 * (1.0 - eps_used).powi(d as i32 / 2))
        .max(0.0)
        .sqrt();

    let discriminator = opts.discriminator.clone().unwrap_or(Discriminator::VSquared);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut s_resid = t_top.as_poly().clone();
    let mut extra: Vec<ExtraConstraint> = Vec::new();
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut raw_weights: Vec<f64> = Vec::new();
    let mut rounds: Vec<RoundDiagnostics> = Vec::new();
    let mut iter_total = 0usize;

    'rounds: for round in 1..=opts.max_rounds {
        let threshold_box = report.r - 4.0 * (round as f64 - 1.0) * drift_box;
        let threshold_text = report.r - 2.0 * (round as f64 - 1.0) * drift_text;

        let mut recovered = None;
        for retry in 0..3 {
            let (f, attempts) = match &discriminator {
                Discriminator::VSquared | Discriminator::VLinear => {
                    let (v, attempts) = match sample_discriminator(
                        &s_resid,
                        threshold_box,
                        &mut rng,
                        opts.max_sample_attempts,
                    ) {
                        Ok(out) => out,
                        Err(err) => {
                            warnings.push(format!("round {round}: {err}"));
                            break 'rounds;
                        }
                    };
                    let f = if matches!(discriminator, Discriminator::VLinear) {
                        MultiPoly::linear_form(&v)
                    } else {
                        pow_linear_form(&v, 2)?.into_poly()
                    };
                    (f, attempts)
                }
                other => (round_discriminator(other, &mut rng, n)?, 0),
            };

            match v_step(
                moments,
                &f,
                w_degree,
                &extra,
                opts.complexity_cap,
                &opts.tol,
                true,
                round,
            ) {
                Ok(mut outcome) => {
                    iter_total += outcome.diagnostics.solver_iterations;
                    outcome.diagnostics.sampler_attempts = attempts;
                    outcome.diagnostics.threshold_box = Some(threshold_box);
                    outcome.diagnostics.threshold_text = Some(threshold_text);
                    if let Some(prev) = duplicate_of(&outcome.component, &components, true) {
                        if retry < 2 {
                            outcome
                                .diagnostics
                                .notes
                                .push(format!("duplicate of round {}; redrawing v", prev + 1));
                            rounds.push(outcome.diagnostics);
                            continue;
                        }
                        outcome
                            .diagnostics
                            .notes
                            .push("persistent duplicate; stopping".into());
                        rounds.push(outcome.diagnostics);
                        break 'rounds;
                    }
                    recovered = Some(outcome);
                    break;
                }
                Err(Error::Infeasible) => break 'rounds,
                Err(err) => {
                    let prog = build_v_program(moments, &f, w_degree, &extra, opts.complexity_cap)?;
                    match crate::sdpsolver::check_feasible(&prog.compile()?, &opts.tol)? {
                        crate::sdpsolver::Feasibility::Infeasible { .. } => break 'rounds,
                        crate::sdpsolver::Feasibility::Feasible(_) => {
                            if retry == 2 {
                                warnings.push(format!("round {round} aborted: {err}"));
                                break 'rounds;
                            }
                            warnings.push(format!("round {round} retried: {err}"));
                        }
                    }
                }
            }
        }
        let Some(outcome) = recovered else { break };
        let u = outcome.component.clone();
        extra.push(ExtraConstraint::DistinctRecovery {
            center: u.clone(),
            delta,
            w_max: report.w_max,
        });
        s_resid = s_resid.sub(pow_linear_form(&u, d)?.as_poly());
        components.push(u);
        raw_weights.push(outcome.rho);
        rounds.push(outcome.diagnostics);
    }

    if components.is_empty() {
        return Err(Error::Degenerate("no components recovered".into()));
    }
    let fit = least_squares_weights_tensor(&t_top, &components)?;
    if fit.rank_deficient {
        warnings.push("weight refit hit a rank-deficient Gram matrix".into());
    }
    Ok(DecompositionResult {
        components,
        weights: fit.weights,
        raw_weights,
        rounds,
        warnings,
        useful_constraints: Some(report),
        solver_iterations_total: iter_total,
    })
}

// --- ground-truth diagnostics -----------------------------------------------------------

/// Concentration inequality of the optimiser, evaluated against known ground
/// truth: `Σ_{i≠j} λᵢ W*(aᵢ) ≤ w_max·‖λ‖₁·(maxΔ/minΔ)` where `j` maximises
/// the discriminator over the true components.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConcentrationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub argmax: usize,
    pub delta_ratio: f64,
}

pub fn concentration_check(
    wstar: &MultiPoly,
    f: &MultiPoly,
    truth: &PointMeasure,
    w_max: f64,
) -> Result<ConcentrationCheck> {
    let values: Vec<f64> = truth
        .nodes()
        .iter()
        .map(|a| f.eval(a))
        .collect::<Result<_>>()?;
    let j = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let deltas: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != j)
        .map(|(_, v)| values[j] - v)
        .collect();
    let max_delta = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_delta = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = max_delta / min_delta;
    let mut lhs = 0.0;
    for (i, (lam, a)) in truth.weights().iter().zip(truth.nodes()).enumerate() {
        if i != j {
            lhs += lam * wstar.eval(a)?;
        }
    }
    let rhs = w_max * truth.total_mass() * ratio;
    Ok(ConcentrationCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-6,
        argmax: j,
        delta_ratio: ratio,
    })
}
