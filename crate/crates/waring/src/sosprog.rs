//! Construction of SOS optimisation programs and their compilation to
//! block-PSD SDP data.
//!
//! An SOS decision variable `W` of even degree bound `2h` is represented by a
//! PSD Gram matrix `G` over the monomial basis `X^{≤h}`: `W = (X^{≤h})ᵀ G X^{≤h}`.
//! Linear functionals of `W` (objective, normalisation, point evaluations)
//! become linear functionals of `G`; polynomial identities between variables
//! become one linear equality per monomial. The scaled-coefficient convention
//! is kept throughout: the Gram-to-coefficient map divides by `binom(|γ|,γ)`
//! once, at compile time.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::measures::MomentSequence;
use crate::numerics::Mat;
use crate::poly::{
    adjoint_multiply, evaluation_pairing, indices_up_to, multinomial, MultiIndex, MultiPoly,
};
use crate::sdpsolver::{
    check_feasible, solve, Feasibility, SdpProblem, SdpSolution, SdpStatus, SparseRow,
    ToleranceConfig,
};
use crate::{Error, Result};

/// Monomial basis `X^{≤half_degree}` in graded-lex order; Gram matrices are
/// indexed by it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramBasis {
    n: usize,
    half_degree: u32,
    monomials: Vec<MultiIndex>,
}

impl GramBasis {
    pub fn new(n: usize, half_degree: u32) -> Self {
        GramBasis {
            n,
            half_degree,
            monomials: indices_up_to(n, half_degree),
        }
    }

    pub fn size(&self) -> usize {
        self.monomials.len()
    }

    pub fn half_degree(&self) -> u32 {
        self.half_degree
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }
}

/// SOS decision polynomial with an even degree bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SosVariable {
    pub name: String,
    pub degree_bound: u32,
    pub basis: GramBasis,
}

/// `Σ_v ⟨W_v, pairing_v⟩ (= or ≤) rhs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearConstraint {
    /// One optional pairing polynomial per variable.
    pub pairings: Vec<Option<MultiPoly>>,
    pub rhs: f64,
}

/// Coefficientwise identity `Σ_t sign_t · mult_t · W_{v_t} + constant = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityConstraint {
    pub terms: Vec<(usize, MultiPoly, f64)>,
    pub constant: MultiPoly,
}

/// An SOS optimisation program: maximise a functional linear in the
/// coefficients of the SOS variables subject to linear and polynomial-identity
/// constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SosProgram {
    n: usize,
    variables: Vec<SosVariable>,
    /// Objective pairing per variable; the sense is maximisation.
    objective: Vec<Option<MultiPoly>>,
    equalities: Vec<LinearConstraint>,
    /// `Σ_v ⟨W_v, pairing⟩ ≤ rhs`, realised with 1×1 slack blocks.
    inequalities: Vec<LinearConstraint>,
    identities: Vec<IdentityConstraint>,
}

impl SosProgram {
    pub fn new(n: usize) -> Self {
        SosProgram {
            n,
            variables: vec![],
            objective: vec![],
            equalities: vec![],
            inequalities: vec![],
            identities: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn variables(&self) -> &[SosVariable] {
        &self.variables
    }

    pub fn add_variable(&mut self, name: &str, degree_bound: u32) -> Result<usize> {
        if degree_bound % 2 != 0 {
            return Err(Error::Parity(format!(
                "SOS variable degree bound must be even, got {degree_bound}"
            )));
        }
        self.variables.push(SosVariable {
            name: name.to_string(),
            degree_bound,
            basis: GramBasis::new(self.n, degree_bound / 2),
        });
        self.objective.push(None);
        Ok(self.variables.len() - 1)
    }

    fn check_pairing(&self, var: usize, pairing: &MultiPoly) -> Result<()> {
        if pairing.degree() > self.variables[var].degree_bound {
            return Err(Error::DegreeLimit(format!(
                "pairing degree {} exceeds variable bound {}",
                pairing.degree(),
                self.variables[var].degree_bound
            )));
        }
        Ok(())
    }

    pub fn set_objective_pairing(&mut self, var: usize, pairing: MultiPoly) -> Result<()> {
        self.check_pairing(var, &pairing)?;
        self.objective[var] = Some(pairing);
        Ok(())
    }

    pub fn add_equality(&mut self, pairings: Vec<(usize, MultiPoly)>, rhs: f64) -> Result<()> {
        let mut row = vec![None; self.variables.len()];
        for (var, p) in pairings {
            self.check_pairing(var, &p)?;
            row[var] = Some(p);
        }
        self.equalities.push(LinearConstraint { pairings: row, rhs });
        Ok(())
    }

    pub fn add_inequality(&mut self, pairings: Vec<(usize, MultiPoly)>, rhs: f64) -> Result<()> {
        let mut row = vec![None; self.variables.len()];
        for (var, p) in pairings {
            self.check_pairing(var, &p)?;
            row[var] = Some(p);
        }
        self.inequalities
            .push(LinearConstraint { pairings: row, rhs });
        Ok(())
    }

    /// Point-vanishing constraint `W_var(c) = 0`.
    pub fn add_point_vanish(&mut self, var: usize, point: &[f64]) -> Result<()> {
        let pairing = evaluation_pairing(point, self.variables[var].degree_bound)?;
        self.add_equality(vec![(var, pairing)], 0.0)
    }

    pub fn add_identity(&mut self, identity: IdentityConstraint) -> Result<()> {
        for (var, mult, _) in &identity.terms {
            if *var >= self.variables.len() {
                return Err(Error::Domain("identity references unknown variable".into()));
            }
            if mult.n() != self.n || identity.constant.n() != self.n {
                return Err(Error::DimMismatch("identity dimension".into()));
            }
        }
        self.identities.push(identity);
        Ok(())
    }

    /// Distinct-recovery constraint around an already recovered component:
    /// adds an SOS multiplier `g` (degree bound `deg W − 2`) and a slack `σ`
    /// together with the identity
    /// `w_max − W − g·(delta − ‖X−c‖²) − σ = 0`,
    /// which forces every later optimiser below `w_max` on the `delta`-ball
    /// around `c`.
    pub fn add_distinct_recovery_constraint(
        &mut self,
        center: &[f64],
        delta: f64,
        w_max: f64,
    ) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Domain("program has no weight variable".into()));
        }
        let w_deg = self.variables[0].degree_bound;
        if w_deg < 2 {
            return Err(Error::DegreeLimit(
                "distinct-recovery constraint needs weight degree ≥ 2".into(),
            ));
        }
        let round = self.identities.len();
        let g = self.add_variable(&format!("g{round}"), w_deg - 2)?;
        let sigma = self.add_variable(&format!("sigma{round}"), w_deg)?;
        let ball = MultiPoly::constant(self.n, delta).sub(&MultiPoly::squared_distance(center));
        self.add_identity(IdentityConstraint {
            terms: vec![
                (0, MultiPoly::constant(self.n, 1.0), -1.0),
                (g, ball, -1.0),
                (sigma, MultiPoly::constant(self.n, 1.0), -1.0),
            ],
            constant: MultiPoly::constant(self.n, w_max),
        })
    }

    /// Caps the uniform-ball expectation of the weight variable:
    /// `E_U[W] ≤ (c_max+1)/lambda_min`. An infinite cap is a no-op.
    pub fn add_complexity_cap(&mut self, lambda_min: f64, c_max: f64) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::Domain("program has no weight variable".into()));
        }
        if !c_max.is_finite() {
            return Ok(());
        }
        if !(lambda_min > 0.0) {
            return Err(Error::Domain("complexity cap needs lambda_min > 0".into()));
        }
        let pairing = ball_moment_pairing(self.n, self.variables[0].degree_bound);
        self.add_inequality(vec![(0, pairing)], (c_max + 1.0) / lambda_min)
    }

    /// Compile to block-PSD SDP data: one Gram block per SOS variable, then
    /// one 1×1 slack block per inequality. Identity constraints expand to one
    /// equality row per monomial appearing across the identity.
    pub fn compile(&self) -> Result<SdpProblem> {
        let nvars = self.variables.len();
        let mut block_dims: Vec<usize> = self.variables.iter().map(|v| v.basis.size()).collect();
        let slack_base = nvars;
        block_dims.extend(std::iter::repeat(1).take(self.inequalities.len()));

        // Objective.
        let mut objective: Vec<Mat> = Vec::with_capacity(block_dims.len());
        for (v, pairing) in self.objective.iter().enumerate() {
            let basis = &self.variables[v].basis;
            let mut c = Mat::zeros(basis.size());
            if let Some(p) = pairing {
                for (i, a) in basis.monomials().iter().enumerate() {
                    for (j, b) in basis.monomials().iter().enumerate() {
                        c.set(i, j, p.coeff(&a.add(b)));
                    }
                }
            }
            objective.push(c);
        }
        for _ in 0..self.inequalities.len() {
            objective.push(Mat::zeros(1));
        }

        let mut rows: Vec<SparseRow> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();

        let pairing_row = |constraint: &LinearConstraint| -> SparseRow {
            let mut row = SparseRow::default();
            for (v, pairing) in constraint.pairings.iter().enumerate() {
                let Some(p) = pairing else { continue };
                let basis = &self.variables[v].basis;
                for (i, a) in basis.monomials().iter().enumerate() {
                    for (j, b) in basis.monomials().iter().enumerate().skip(i) {
                        let kappa = p.coeff(&a.add(b));
                        if kappa != 0.0 {
                            row.push(v, i, j, kappa);
                        }
                    }
                }
            }
            row
        };

        for eq in &self.equalities {
            rows.push(pairing_row(eq));
            rhs.push(eq.rhs);
        }
        for (s, ineq) in self.inequalities.iter().enumerate() {
            let mut row = pairing_row(ineq);
            row.push(slack_base + s, 0, 0, 1.0);
            rows.push(row);
            rhs.push(ineq.rhs);
        }

        for identity in &self.identities {
            // Monomials reachable by any term, plus the constant's support.
            let mut support: BTreeSet<MultiIndex> = identity
                .constant
                .terms()
                .map(|(a, _)| a.clone())
                .collect();
            for (v, mult, _) in &identity.terms {
                let basis = &self.variables[*v].basis;
                for (phi, _) in mult.terms() {
                    for (i, a) in basis.monomials().iter().enumerate() {
                        for b in basis.monomials().iter().skip(i) {
                            support.insert(phi.add(&a.add(b)));
                        }
                    }
                }
            }
            for eta in support {
                let binom_eta = multinomial(&eta)? as f64;
                let mut row = SparseRow::default();
                for (v, mult, sign) in &identity.terms {
                    let basis = &self.variables[*v].basis;
                    for (i, a) in basis.monomials().iter().enumerate() {
                        for (j, b) in basis.monomials().iter().enumerate().skip(i) {
                            if let Some(phi) = eta.checked_sub(&a.add(b)) {
                                let raw = mult.coeff(&phi) * multinomial(&phi)? as f64;
                                if raw != 0.0 {
                                    row.push(*v, i, j, sign * raw / binom_eta);
                                }
                            }
                        }
                    }
                }
                rows.push(row);
                rhs.push(-identity.constant.coeff(&eta));
            }
        }

        let problem = SdpProblem {
            block_dims,
            objective,
            rows,
            rhs,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Recover the polynomial of every SOS variable from a solver result.
    /// Each Gram block must be PSD up to `−tol_psd·(1+trace)`.
    pub fn extract_solution(
        &self,
        sol: &SdpSolution,
        tol: &ToleranceConfig,
    ) -> Result<BTreeMap<String, MultiPoly>> {
        match sol.status {
            SdpStatus::Optimal | SdpStatus::MaxIter => {}
            SdpStatus::Infeasible => return Err(Error::Infeasible),
            SdpStatus::Unbounded => {
                return Err(Error::Solver("cannot extract from unbounded program".into()))
            }
        }
        self.extract_from_blocks(&sol.blocks, tol)
    }

    /// Extraction from raw blocks (e.g. a phase-I feasible point).
    pub fn extract_from_blocks(
        &self,
        blocks: &[Mat],
        tol: &ToleranceConfig,
    ) -> Result<BTreeMap<String, MultiPoly>> {
        let mut out = BTreeMap::new();
        for (v, var) in self.variables.iter().enumerate() {
            let g = &blocks[v];
            let eig = crate::numerics::sym_eig(g)?;
            let min_eig = eig.eigenvalues.iter().fold(f64::INFINITY, |m, &x| m.min(x));
            if min_eig < -tol.tol_psd * (1.0 + g.trace()) {
                return Err(Error::Solver(format!(
                    "Gram block for {} has eigenvalue {min_eig}",
                    var.name
                )));
            }
            out.insert(var.name.clone(), gram_to_poly(g, &var.basis)?);
        }
        Ok(out)
    }
}

/// The polynomial `(X^{≤h})ᵀ G X^{≤h}`, linear in `G`.
pub fn gram_to_poly(g: &Mat, basis: &GramBasis) -> Result<MultiPoly> {
    if g.n() != basis.size() {
        return Err(Error::DimMismatch(format!(
            "Gram size {} vs basis size {}",
            g.n(),
            basis.size()
        )));
    }
    let mut raw: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (i, a) in basis.monomials().iter().enumerate() {
        for (j, b) in basis.monomials().iter().enumerate().skip(i) {
            let factor = if i == j { 1.0 } else { 2.0 };
            let v = factor * g.get(i, j);
            if v != 0.0 {
                *raw.entry(a.add(b)).or_insert(0.0) += v;
            }
        }
    }
    let mut p = MultiPoly::zero(basis.n);
    for (gamma, v) in raw {
        let scaled = v / multinomial(&gamma)? as f64;
        p.add_term(gamma, scaled)?;
    }
    Ok(p)
}

/// Extra constraints threaded into the weight-polynomial program.
#[derive(Debug, Clone)]
pub enum ExtraConstraint {
    /// `W(c) = 0`, the exact-regime exclusion of a recovered component.
    PointVanish(Vec<f64>),
    /// SOS exclusion ball for the approximate regime.
    DistinctRecovery {
        center: Vec<f64>,
        delta: f64,
        w_max: f64,
    },
}

/// Uniform-ball expectation cap parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexityCap {
    pub lambda_min: f64,
    pub c_max: f64,
}

/// The weight-polynomial optimisation program
/// ```text
///   max ⟨W·f, Σ_k T_k⟩   s.t.  ⟨W, Σ_{k≤d−2} T_k⟩ = 1,  W SOS of degree ≤ w_degree
/// ```
/// with optional point-vanishing / distinct-recovery constraints and an
/// optional complexity cap. The objective is realised by pairing `W` against
/// the multiplication adjoint of `f` applied to the moment sum.
pub fn build_v_program(
    moments: &MomentSequence,
    f: &MultiPoly,
    w_degree: u32,
    extra: &[ExtraConstraint],
    cap: Option<ComplexityCap>,
) -> Result<SosProgram> {
    let d = moments.degree();
    if f.degree() > 2 {
        return Err(Error::DegreeLimit(format!(
            "discriminator degree {} exceeds 2",
            f.degree()
        )));
    }
    if w_degree + 2 > d {
        return Err(Error::DegreeLimit(format!(
            "weight degree {w_degree} too high for moment degree {d}"
        )));
    }
    if f.n() != moments.dim() {
        return Err(Error::DimMismatch("discriminator vs moments".into()));
    }
    let mut prog = SosProgram::new(moments.dim());
    let w = prog.add_variable("W", w_degree)?;
    let objective = adjoint_multiply(f, &moments.sum_all(), w_degree)?;
    prog.set_objective_pairing(w, objective)?;
    let normalisation = moments.sum_up_to(d - 2);
    prog.add_equality(vec![(w, truncate(&normalisation, w_degree))], 1.0)?;
    for c in extra {
        match c {
            ExtraConstraint::PointVanish(point) => prog.add_point_vanish(w, point)?,
            ExtraConstraint::DistinctRecovery {
                center,
                delta,
                w_max,
            } => prog.add_distinct_recovery_constraint(center, *delta, *w_max)?,
        }
    }
    if let Some(cap) = cap {
        prog.add_complexity_cap(cap.lambda_min, cap.c_max)?;
    }
    Ok(prog)
}

fn truncate(p: &MultiPoly, max_degree: u32) -> MultiPoly {
    let mut out = MultiPoly::zero(p.n());
    for (a, c) in p.terms() {
        if a.degree() <= max_degree {
            out.add_term(a.clone(), c).expect("degree shrinks");
        }
    }
    out
}

/// `E[x^α]` under the uniform probability measure on the unit ball: zero for
/// any odd exponent, otherwise with `β = α/2`, `s = |β|`:
/// `(n/(2s+n)) · Π (2βᵢ−1)!! / Π_{k<s} (n+2k)`.
pub fn ball_moment(alpha: &MultiIndex) -> f64 {
    let n = alpha.len() as f64;
    if alpha.exponents().iter().any(|&e| e % 2 == 1) {
        return 0.0;
    }
    let s: u32 = alpha.exponents().iter().map(|&e| e / 2).sum();
    let mut num = 1.0;
    for &e in alpha.exponents() {
        let beta = (e / 2) as i64;
        let mut k = 1i64;
        while k <= beta {
            num *= (2 * k - 1) as f64;
            k += 1;
        }
    }
    let mut den = 1.0;
    for k in 0..s {
        den *= n + 2.0 * k as f64;
    }
    (n / (2.0 * s as f64 + n)) * num / den
}

/// Pairing polynomial whose Reznick product with `W` equals `E_U[W]`.
pub fn ball_moment_pairing(n: usize, max_degree: u32) -> MultiPoly {
    let mut p = MultiPoly::zero(n);
    for alpha in indices_up_to(n, max_degree) {
        let v = ball_moment(&alpha);
        if v != 0.0 {
            p.add_term(alpha, v).expect("degree bounded");
        }
    }
    p
}

/// Decide whether `p` is a sum of squares of polynomials of degree ≤
/// `degree_bound/2`; on success returns the Gram-certified polynomial (equal
/// to `p` up to solver tolerance).
pub fn sos_feasibility(
    p: &MultiPoly,
    degree_bound: u32,
    tol: &ToleranceConfig,
) -> Result<Option<MultiPoly>> {
    let mut prog = SosProgram::new(p.n());
    let w = prog.add_variable("W", degree_bound)?;
    prog.add_identity(IdentityConstraint {
        terms: vec![(w, MultiPoly::constant(p.n(), 1.0), 1.0)],
        constant: p.scale(-1.0),
    })?;
    let sdp = prog.compile()?;
    match check_feasible(&sdp, tol)? {
        Feasibility::Feasible(blocks) => {
            let map = prog.extract_from_blocks(&blocks, tol)?;
            Ok(map.into_values().next())
        }
        Feasibility::Infeasible { .. } => Ok(None),
    }
}

/// Solve an SOS program and extract all variable polynomials.
pub fn solve_program(
    prog: &SosProgram,
    tol: &ToleranceConfig,
) -> Result<(SdpSolution, BTreeMap<String, MultiPoly>)> {
    let sdp = prog.compile()?;
    let sol = solve(&sdp, tol)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Infeasible);
    }
    if sol.status == SdpStatus::Unbounded {
        return Err(Error::Solver("program is unbounded".into()));
    }
    if sol.status == SdpStatus::MaxIter && (sol.primal_residual > 1e-5 || sol.duality_gap > 1e-4) {
        return Err(Error::Solver(format!(
            "no convergence: primal residual {:.3e}, gap {:.3e} after {} iterations",
            sol.primal_residual, sol.duality_gap, sol.iterations
        )));
    }
    let polys = prog.extract_solution(&sol, tol)?;
    Ok((sol, polys))
}
