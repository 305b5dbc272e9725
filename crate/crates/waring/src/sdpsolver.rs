//! Dense primal-dual interior-point solver for small block-diagonal SDPs.
//!
//! Problem form (maximisation):
//! ```text
//!   max  Σ_b ⟨C_b, X_b⟩   s.t.  Σ_b ⟨A_{r,b}, X_b⟩ = rhs_r,   X_b ⪰ 0
//! ```
//! The solver runs an infeasible-start predictor-corrector path-following
//! iteration with Nesterov–Todd scaling and a dense Cholesky of the Schur
//! complement. Infeasibility is decided by a phase-I run that relaxes the
//! equalities with a single nonnegative slack and minimises it.

use serde::{Deserialize, Serialize};

use crate::numerics::{sym_eig, sym_matrix_function, Mat};
use crate::{Error, Result};

/// One equality row: sparse symmetric entries `(block, i, j, value)` with
/// `i ≤ j`; the value is the matrix entry `A_ij = A_ji`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SparseRow {
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl SparseRow {
    pub fn push(&mut self, block: usize, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((block, i, j, v));
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Block-PSD SDP with linear equality constraints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    /// Objective matrices, one per block; the sense is maximisation.
    pub objective: Vec<Mat>,
    pub rows: Vec<SparseRow>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.block_dims.len() {
            return Err(Error::DimMismatch("objective vs blocks".into()));
        }
        for (c, &d) in self.objective.iter().zip(&self.block_dims) {
            if c.n() != d || d == 0 {
                return Err(Error::DimMismatch("objective block size".into()));
            }
        }
        if self.rows.len() != self.rhs.len() {
            return Err(Error::DimMismatch("rows vs rhs".into()));
        }
        for row in &self.rows {
            for &(b, i, j, _) in &row.entries {
                if b >= self.block_dims.len() || i > j || j >= self.block_dims[b] {
                    return Err(Error::DimMismatch("constraint entry out of range".into()));
                }
            }
        }
        Ok(())
    }

    fn data_scale(&self) -> f64 {
        let mut m = 0.0f64;
        for c in &self.objective {
            m = m.max(c.max_abs());
        }
        for row in &self.rows {
            for &(_, _, _, v) in &row.entries {
                m = m.max(v.abs());
            }
        }
        for &b in &self.rhs {
            m = m.max(b.abs());
        }
        m
    }
}

/// Interior-point tolerances; also read from the CLI config file.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToleranceConfig {
    #[serde(default = "default_tol_feas")]
    pub tol_feas: f64,
    #[serde(default = "default_tol_gap")]
    pub tol_gap: f64,
    #[serde(default = "default_tol_psd")]
    pub tol_psd: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Phase-I slack threshold for declaring a program infeasible.
    #[serde(default = "default_tol_infeas")]
    pub tol_infeas: f64,
}

fn default_tol_feas() -> f64 {
    1e-8
}
fn default_tol_gap() -> f64 {
    1e-8
}
fn default_tol_psd() -> f64 {
    1e-7
}
fn default_max_iter() -> usize {
    200
}
fn default_tol_infeas() -> f64 {
    1e-6
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            tol_feas: default_tol_feas(),
            tol_gap: default_tol_gap(),
            tol_psd: default_tol_psd(),
            max_iter: default_max_iter(),
            tol_infeas: default_tol_infeas(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub blocks: Vec<Mat>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

/// Feasibility verdict from the phase-I run.
#[derive(Debug, Clone)]
pub enum Feasibility {
    /// A (near-)feasible point, strictly interior when one exists.
    Feasible(Vec<Mat>),
    /// The residual slack that could not be removed.
    Infeasible { margin: f64 },
}

struct RowData {
    /// Dense symmetric matrix per touched block.
    blocks: Vec<(usize, Mat)>,
}

impl RowData {
    fn build(row: &SparseRow, dims: &[usize]) -> RowData {
        let mut touched: Vec<usize> = row.entries.iter().map(|e| e.0).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut blocks = Vec::with_capacity(touched.len());
        for b in touched {
            let mut m = Mat::zeros(dims[b]);
            for &(eb, i, j, v) in &row.entries {
                if eb == b {
                    m.add_to(i, j, v);
                    if i != j {
                        m.add_to(j, i, v);
                    }
                }
            }
            blocks.push((b, m));
        }
        RowData { blocks }
    }

    fn dot_blocks(&self, x: &[Mat]) -> f64 {
        self.blocks.iter().map(|(b, a)| a.dot(&x[*b])).sum()
    }
}

fn frob_norm_blocks(mats: &[Mat]) -> f64 {
    mats.iter()
        .map(|m| m.frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Largest `α ∈ [0, cap]` with `X + αΔ ⪰ 0`, via the generalized eigenvalue
/// bound `λ_min(L⁻¹ Δ L⁻ᵀ)`.
fn max_step(x: &Mat, delta: &Mat, cap: f64) -> f64 {
    let l = match x.cholesky() {
        Some(l) => l,
        None => return 0.0,
    };
    let y = l.forward_solve_matrix(delta);
    let b = l.forward_solve_matrix(&y.transpose()).symmetrize();
    let eig = match sym_eig(&b) {
        Ok(e) => e,
        Err(_) => return 0.0,
    };
    let lam_min = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    if lam_min >= -1e-13 {
        cap
    } else {
        cap.min(-1.0 / lam_min)
    }
}

/// Nesterov–Todd scaling point: the unique `W ≻ 0` with `W S W = X`.
fn nt_scaling(x: &Mat, s: &Mat) -> Result<Mat> {
    let xh = sym_matrix_function(x, |v| v.max(1e-300).sqrt())?;
    let t = xh.matmul(s).matmul(&xh).symmetrize();
    let tmh = sym_matrix_function(&t, |v| 1.0 / v.max(1e-300).sqrt())?;
    Ok(xh.matmul(&tmh).matmul(&xh).symmetrize())
}

fn spd_inverse(m: &Mat) -> Option<Mat> {
    let l = m.cholesky()?;
    let n = m.n();
    let mut inv = Mat::zeros(n);
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = l.solve_cholesky(&e);
        for r in 0..n {
            inv.set(r, col, x[r]);
        }
    }
    Some(inv.symmetrize())
}

/// Solve the SDP. Infeasible inputs surface as `Infeasible` via an internal
/// phase-I classification; numerical breakdown reports `MaxIter` together
/// with the residual diagnostics.
pub fn solve(sdp: &SdpProblem, tol: &ToleranceConfig) -> Result<SdpSolution> {
    solve_inner(sdp, tol, true)
}

fn solve_inner(sdp: &SdpProblem, tol: &ToleranceConfig, classify: bool) -> Result<SdpSolution> {
    sdp.validate()?;
    let dims = &sdp.block_dims;
    let nblocks = dims.len();
    let nrows = sdp.rows.len();
    let scale0 = 1.0 + sdp.data_scale();

    // A zero row with nonzero right-hand side is a contradiction.
    for (row, &b) in sdp.rows.iter().zip(&sdp.rhs) {
        if row.entries.iter().all(|e| e.3 == 0.0) && b.abs() > tol.tol_feas * scale0 {
            return Ok(SdpSolution {
                status: SdpStatus::Infeasible,
                blocks: dims.iter().map(|&d| Mat::zeros(d)).collect(),
                y: vec![0.0; nrows],
                objective: 0.0,
                dual_objective: 0.0,
                primal_residual: b.abs(),
                dual_residual: 0.0,
                duality_gap: f64::INFINITY,
                iterations: 0,
            });
        }
    }

    // Row equilibration: scale every constraint to unit Frobenius norm. The
    // feasible set is unchanged; multipliers are mapped back on exit.
    let row_scales: Vec<f64> = sdp
        .rows
        .iter()
        .map(|row| {
            let mut sq = 0.0;
            for &(_, i, j, v) in &row.entries {
                sq += if i == j { v * v } else { 2.0 * v * v };
            }
            if sq > 1e-300 {
                1.0 / sq.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let sdp = {
        let mut scaled = sdp.clone();
        for (row, &s) in scaled.rows.iter_mut().zip(&row_scales) {
            for entry in &mut row.entries {
                entry.3 *= s;
            }
        }
        for (b, &s) in scaled.rhs.iter_mut().zip(&row_scales) {
            *b *= s;
        }
        scaled
    };
    let sdp = &sdp;

    // No constraints: bounded iff C ⪯ 0, in which case X = 0 is optimal.
    if nrows == 0 {
        let mut top = f64::NEG_INFINITY;
        for c in &sdp.objective {
            let eig = sym_eig(c)?;
            top = top.max(eig.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)));
        }
        let status = if top > tol.tol_gap * scale0 {
            SdpStatus::Unbounded
        } else {
            SdpStatus::Optimal
        };
        return Ok(SdpSolution {
            status,
            blocks: dims.iter().map(|&d| Mat::zeros(d)).collect(),
            y: vec![],
            objective: 0.0,
            dual_objective: 0.0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            duality_gap: 0.0,
            iterations: 0,
        });
    }

    let rows: Vec<RowData> = sdp.rows.iter().map(|r| RowData::build(r, dims)).collect();
    let total_dim: f64 = dims.iter().map(|&d| d as f64).sum();
    let tau = 1.0 + sdp.data_scale();

    let mut x: Vec<Mat> = dims.iter().map(|&d| Mat::scaled_identity(d, tau)).collect();
    let mut s: Vec<Mat> = dims.iter().map(|&d| Mat::scaled_identity(d, tau)).collect();
    let mut y = vec![0.0; nrows];

    let b_norm = 1.0 + sdp.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = 1.0 + frob_norm_blocks(&sdp.objective);

    let mut best = SdpSolution {
        status: SdpStatus::MaxIter,
        blocks: x.clone(),
        y: y.clone(),
        objective: 0.0,
        dual_objective: 0.0,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        duality_gap: f64::INFINITY,
        iterations: 0,
    };

    let mut iterations = 0;
    for iter in 1..=tol.max_iter {
        iterations = iter;

        // Residuals.
        let rp: Vec<f64> = (0..nrows)
            .map(|r| sdp.rhs[r] - rows[r].dot_blocks(&x))
            .collect();
        let mut rd: Vec<Mat> = (0..nblocks)
            .map(|b| sdp.objective[b].scale(-1.0).sub(&s[b]))
            .collect();
        for (r, row) in rows.iter().enumerate() {
            for (b, a) in &row.blocks {
                rd[*b].axpy(y[r], a);
            }
        }
        let mu: f64 = x.iter().zip(&s).map(|(xb, sb)| xb.dot(sb)).sum::<f64>() / total_dim;

        let obj: f64 = sdp
            .objective
            .iter()
            .zip(&x)
            .map(|(c, xb)| c.dot(xb))
            .sum();
        let dual_obj: f64 = sdp.rhs.iter().zip(&y).map(|(b, yr)| b * yr).sum();
        let rp_norm = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / b_norm;
        let rd_norm = frob_norm_blocks(&rd) / c_norm;
        let gap = (dual_obj - obj).abs() / (1.0 + obj.abs() + dual_obj.abs());

        if rp_norm + rd_norm < best.primal_residual + best.dual_residual {
            best = SdpSolution {
                status: SdpStatus::MaxIter,
                blocks: x.clone(),
                y: y.clone(),
                objective: obj,
                dual_objective: dual_obj,
                primal_residual: rp_norm,
                dual_residual: rd_norm,
                duality_gap: gap,
                iterations: iter,
            };
        }

        if rp_norm <= tol.tol_feas && rd_norm <= tol.tol_feas && gap <= tol.tol_gap {
            let y_out = y.iter().zip(&row_scales).map(|(yr, s)| yr * s).collect();
            return Ok(SdpSolution {
                status: SdpStatus::Optimal,
                blocks: x,
                y: y_out,
                objective: obj,
                dual_objective: dual_obj,
                primal_residual: rp_norm,
                dual_residual: rd_norm,
                duality_gap: gap,
                iterations: iter,
            });
        }

        // Runaway primal objective with small residual: unbounded above.
        if obj.abs() > 1e10 * scale0 && rp_norm <= 1e-4 {
            let mut out = best.clone();
            out.status = SdpStatus::Unbounded;
            out.iterations = iter;
            out.y = out.y.iter().zip(&row_scales).map(|(yr, s)| yr * s).collect();
            return Ok(out);
        }
        if mu > 1e16 * scale0 || !mu.is_finite() {
            break;
        }

        // NT scaling and Schur complement.
        let w: Vec<Mat> = match x
            .iter()
            .zip(&s)
            .map(|(xb, sb)| nt_scaling(xb, sb))
            .collect::<Result<Vec<_>>>()
        {
            Ok(w) => w,
            Err(_) => break,
        };
        let sinv: Vec<Mat> = match s.iter().map(|sb| spd_inverse(sb).ok_or(())).collect::<std::result::Result<Vec<_>, ()>>() {
            Ok(v) => v,
            Err(_) => break,
        };

        // U_r = W A_r W per touched block.
        let u: Vec<Vec<(usize, Mat)>> = rows
            .iter()
            .map(|row| {
                row.blocks
                    .iter()
                    .map(|(b, a)| (*b, w[*b].matmul(a).matmul(&w[*b])))
                    .collect()
            })
            .collect();

        let mut schur = Mat::zeros(nrows);
        for r in 0..nrows {
            for c in r..nrows {
                let mut acc = 0.0;
                for (b, ur) in &u[r] {
                    for (b2, ac) in &rows[c].blocks {
                        if b2 == b {
                            acc += ur.dot(ac);
                        }
                    }
                }
                schur.set(r, c, acc);
                schur.set(c, r, acc);
            }
        }

        // Factor with escalating ridge.
        let mut ridge = 1e-13 * (1.0 + schur.trace().abs() / nrows as f64);
        let l_schur = loop {
            let mut m = schur.clone();
            for i in 0..nrows {
                m.add_to(i, i, ridge);
            }
            match m.cholesky() {
                Some(l) => break Some(l),
                None => {
                    ridge *= 100.0;
                    if ridge > 1e-4 * (1.0 + schur.trace().abs()) {
                        break None;
                    }
                }
            }
        };
        let l_schur = match l_schur {
            Some(l) => l,
            None => break,
        };

        // Common rhs part: −b_r − ⟨A_r, W Rd W⟩.
        let wrdw: Vec<Mat> = (0..nblocks)
            .map(|b| w[b].matmul(&rd[b]).matmul(&w[b]))
            .collect();
        let base_rhs: Vec<f64> = (0..nrows)
            .map(|r| -sdp.rhs[r] - rows[r].dot_blocks(&wrdw))
            .collect();
        let a_dot_sinv: Vec<f64> = (0..nrows).map(|r| rows[r].dot_blocks(&sinv)).collect();

        let direction = |sigma_mu: f64, l: &Mat| -> (Vec<f64>, Vec<Mat>, Vec<Mat>) {
            let rhs: Vec<f64> = (0..nrows)
                .map(|r| sigma_mu * a_dot_sinv[r] + base_rhs[r])
                .collect();
            let dy = l.solve_cholesky(&rhs);
            let mut ds: Vec<Mat> = rd.clone();
            for (r, row) in rows.iter().enumerate() {
                for (b, a) in &row.blocks {
                    ds[*b].axpy(dy[r], a);
                }
            }
            let dx: Vec<Mat> = (0..nblocks)
                .map(|b| {
                    let mut m = sinv[b].scale(sigma_mu);
                    m.axpy(-1.0, &x[b]);
                    m.axpy(-1.0, &w[b].matmul(&ds[b]).matmul(&w[b]));
                    m.symmetrize()
                })
                .collect();
            (dy, dx, ds)
        };

        // Predictor.
        let (_dy_aff, dx_aff, ds_aff) = direction(0.0, &l_schur);
        let mut ap_aff = 1.0f64;
        let mut ad_aff = 1.0f64;
        for b in 0..nblocks {
            ap_aff = ap_aff.min(max_step(&x[b], &dx_aff[b], 1.0));
            ad_aff = ad_aff.min(max_step(&s[b], &ds_aff[b], 1.0));
        }
        let mut mu_aff = 0.0;
        for b in 0..nblocks {
            let mut xa = x[b].clone();
            xa.axpy(ap_aff, &dx_aff[b]);
            let mut sa = s[b].clone();
            sa.axpy(ad_aff, &ds_aff[b]);
            mu_aff += xa.dot(&sa);
        }
        mu_aff /= total_dim;
        let sigma = (mu_aff / mu).powi(3).clamp(1e-8, 0.99);

        // Corrector.
        let (dy, dx, ds) = direction(sigma * mu, &l_schur);
        let mut ap = 1.0f64;
        let mut ad = 1.0f64;
        for b in 0..nblocks {
            ap = ap.min(max_step(&x[b], &dx[b], 1.0 / 0.98));
            ad = ad.min(max_step(&s[b], &ds[b], 1.0 / 0.98));
        }
        let ap = (0.98 * ap).min(1.0);
        let ad = (0.98 * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            break;
        }
        for b in 0..nblocks {
            x[b].axpy(ap, &dx[b]);
            s[b].axpy(ad, &ds[b]);
        }
        for r in 0..nrows {
            y[r] += ad * dy[r];
        }
    }

    best.iterations = iterations;
    best.y = best
        .y
        .iter()
        .zip(&row_scales)
        .map(|(yr, s)| yr * s)
        .collect();
    // The iteration stalled. A stubborn primal residual suggests an empty
    // feasible set; let phase-I decide.
    if classify && best.primal_residual > 10.0 * tol.tol_feas {
        if let Feasibility::Infeasible { margin } = check_feasible(sdp, tol)? {
            best.status = SdpStatus::Infeasible;
            best.primal_residual = margin;
            return Ok(best);
        }
    }
    Ok(best)
}

/// Phase-I feasibility check: minimise a single slack `s ≥ 0` that relaxes
/// every equality towards the initial point. Feasible iff the optimal slack
/// vanishes; the minimiser doubles as a near-feasible starting point.
pub fn check_feasible(sdp: &SdpProblem, tol: &ToleranceConfig) -> Result<Feasibility> {
    sdp.validate()?;
    let dims = &sdp.block_dims;
    let tau = 1.0 + sdp.data_scale();
    let x0: Vec<Mat> = dims.iter().map(|&d| Mat::scaled_identity(d, tau)).collect();
    let rows: Vec<RowData> = sdp.rows.iter().map(|r| RowData::build(r, dims)).collect();
    let r0: Vec<f64> = (0..sdp.rows.len())
        .map(|r| sdp.rhs[r] - rows[r].dot_blocks(&x0))
        .collect();
    let r0_norm = r0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r0_norm <= tol.tol_feas {
        return Ok(Feasibility::Feasible(x0));
    }

    let slack_block = dims.len();
    let mut block_dims = dims.clone();
    block_dims.push(1);
    let mut objective: Vec<Mat> = dims.iter().map(|&d| Mat::zeros(d)).collect();
    let mut slack_obj = Mat::zeros(1);
    slack_obj.set(0, 0, -1.0);
    objective.push(slack_obj);
    let mut prows = sdp.rows.clone();
    for (row, &rv) in prows.iter_mut().zip(&r0) {
        row.push(slack_block, 0, 0, rv);
    }
    let phase1 = SdpProblem {
        block_dims,
        objective,
        rows: prows,
        rhs: sdp.rhs.clone(),
    };
    let sol = solve_inner(&phase1, tol, false)?;
    let slack = sol.blocks[slack_block].get(0, 0);
    let threshold = tol.tol_infeas * (1.0 + sdp.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    if slack <= threshold {
        Ok(Feasibility::Feasible(sol.blocks[..dims.len()].to_vec()))
    } else {
        Ok(Feasibility::Infeasible { margin: slack })
    }
}
