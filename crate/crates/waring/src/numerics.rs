//! Dense symmetric linear algebra: cyclic Jacobi eigendecomposition, Cholesky
//! factorisation, and the least-squares weight refit.
//!
//! Everything here is sized for matrices up to a few hundred rows; the Jacobi
//! method is used because it is simple and delivers machine-precision
//! eigenpairs for symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::measures::MomentSequence;
use crate::poly::{pow_linear_form, HomPoly, MultiIndex};
use crate::{Error, Result};

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            m.set(i, i, s);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise inner product `Σ A_ij B_ij`.
    pub fn dot(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        Mat {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add_to(i, j, aik * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn symmetrize(&self) -> Mat {
        Mat::from_fn(self.n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Lower-triangular Cholesky factor; `None` if a pivot drops below
    /// `1e-14·(1+max diagonal)`.
    pub fn cholesky(&self) -> Option<Mat> {
        let n = self.n;
        let pivot_floor = 1e-14 * (1.0 + (0..n).fold(0.0f64, |m, i| m.max(self.get(i, i).abs())));
        let mut l = Mat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l.get(i, k) * l.get(j, k);
                }
                if i == j {
                    if sum <= pivot_floor {
                        return None;
                    }
                    l.set(i, i, sum.sqrt());
                } else {
                    l.set(i, j, sum / l.get(j, j));
                }
            }
        }
        Some(l)
    }

    /// Solve `self · x = b` given that `self` is the lower factor `L`.
    pub fn solve_cholesky(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.get(i, k) * y[k];
            }
            y[i] /= self.get(i, i);
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.get(k, i) * y[k];
            }
            y[i] /= self.get(i, i);
        }
        y
    }

    /// `L⁻¹ · B` by forward substitution on each column, `self = L` lower.
    pub fn forward_solve_matrix(&self, b: &Mat) -> Mat {
        let n = self.n;
        let mut out = b.clone();
        for col in 0..n {
            for i in 0..n {
                let mut v = out.get(i, col);
                for k in 0..i {
                    v -= self.get(i, k) * out.get(k, col);
                }
                out.set(i, col, v / self.get(i, i));
            }
        }
        out
    }
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                write!(f, "{:>12.5e} ", self.get(i, j))?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigenpairs of a symmetric matrix, ordered by descending `|λ|`, eigenvectors
/// of unit length.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` corresponds to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.first().map(|v| v.abs()).unwrap_or(0.0)
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eig(m: &Mat) -> Result<EigenDecomposition> {
    let n = m.n();
    let scale = 1.0 + m.max_abs();
    if !m.is_symmetric(1e-10 * scale) {
        return Err(Error::Domain("matrix is not symmetric".into()));
    }
    let mut a = m.symmetrize();
    let mut v = Mat::identity(n);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).abs();
            }
        }
        if off <= 1e-15 * scale * (n * n) as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a.get(q, q) - a.get(p, p)) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                a.add_to(p, p, -h);
                a.add_to(q, q, h);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a.get(r, p);
                        let arq = a.get(r, q);
                        a.set(r, p, arp - s * (arq + tau * arp));
                        a.set(p, r, a.get(r, p));
                        a.set(r, q, arq + s * (arp - tau * arq));
                        a.set(q, r, a.get(r, q));
                    }
                }
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, vrp - s * (vrq + tau * vrp));
                    v.set(r, q, vrq + s * (vrp - tau * vrq));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(j, j)
            .abs()
            .partial_cmp(&a.get(i, i).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = order.iter().map(|&i| a.get(i, i)).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| (0..n).map(|r| v.get(r, i)).collect())
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Spectral norm `max |λ|` of a symmetric matrix.
pub fn spectral_norm(m: &Mat) -> Result<f64> {
    Ok(sym_eig(m)?.spectral_norm())
}

/// `Q f(Λ) Qᵀ` for a symmetric matrix.
pub fn sym_matrix_function(m: &Mat, f: impl Fn(f64) -> f64) -> Result<Mat> {
    let eig = sym_eig(m)?;
    let n = m.n();
    let mut out = Mat::zeros(n);
    for (lam, vec) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        let fv = f(*lam);
        for i in 0..n {
            for j in 0..n {
                out.add_to(i, j, fv * vec[i] * vec[j]);
            }
        }
    }
    Ok(out)
}

/// Outcome of the gapped-matrix hypothesis test.
#[derive(Debug, Clone)]
pub struct GappedCheck {
    /// Whether `spec(M − aaᵀ) ≤ ‖M‖_spec − γ‖a‖²` holds.
    pub hypothesis_holds: bool,
    /// `⟨u, a/‖a‖⟩²` for the computed top eigenvector `u`.
    pub correlation_sq: f64,
    /// `correlation_sq ≥ γ − 1e−9`, only meaningful when the hypothesis holds.
    pub conclusion_holds: bool,
}

/// Checks the gapped-matrix condition: when `spec(M − aaᵀ)` is below
/// `‖M‖_spec − γ‖a‖²`, every top eigenvector of `M` must have squared
/// correlation at least `γ` with `a`.
pub fn gapped_top_eigvec_bound(m: &Mat, a: &[f64], gamma: f64) -> Result<GappedCheck> {
    let norm_a_sq: f64 = a.iter().map(|v| v * v).sum();
    if norm_a_sq == 0.0 {
        return Err(Error::Domain("gapped-matrix check with zero vector".into()));
    }
    let n = m.n();
    let deflated = Mat::from_fn(n, |i, j| m.get(i, j) - a[i] * a[j]);
    let spec_deflated = spectral_norm(&deflated)?;
    let eig = sym_eig(m)?;
    let spec_m = eig.spectral_norm();
    let hypothesis_holds = spec_deflated <= spec_m - gamma * norm_a_sq;
    let u = &eig.eigenvectors[0];
    let corr: f64 = u
        .iter()
        .zip(a)
        .map(|(ui, ai)| ui * ai / norm_a_sq.sqrt())
        .sum();
    let correlation_sq = corr * corr;
    Ok(GappedCheck {
        hypothesis_holds,
        correlation_sq,
        conclusion_holds: correlation_sq >= gamma - 1e-9,
    })
}

/// Result of the least-squares weight refit.
#[derive(Debug, Clone)]
pub struct WeightFit {
    pub weights: Vec<f64>,
    /// Set when the Gram matrix was rank deficient and a ridge was applied.
    pub rank_deficient: bool,
}

/// Minimises `‖T_d − Σ λᵢ ⟨cᵢ,X⟩^d‖_F²` over unconstrained `λ`.
///
/// Uses the Gram identity `⟨⟨cᵢ,X⟩^d, ⟨cⱼ,X⟩^d⟩ = ⟨cᵢ,cⱼ⟩^d`, so the normal
/// equations never require expanding the powers.
pub fn least_squares_weights_tensor(t: &HomPoly, comps: &[Vec<f64>]) -> Result<WeightFit> {
    if comps.is_empty() {
        return Err(Error::Domain("weight refit needs components".into()));
    }
    let d = t.degree() as i32;
    let k = comps.len();
    let gram = Mat::from_fn(k, |i, j| dot(&comps[i], &comps[j]).powi(d));
    let mut rhs = Vec::with_capacity(k);
    for c in comps {
        rhs.push(t.eval(c)?);
    }
    solve_normal_equations(&gram, &rhs)
}

/// Weight refit against a whole moment sequence: minimises
/// `Σ_k ‖T_k − Σ λᵢ ⟨cᵢ,X⟩^k‖_F²` over the degrees present.
pub fn least_squares_weights_moments(
    moments: &MomentSequence,
    comps: &[Vec<f64>],
) -> Result<WeightFit> {
    if comps.is_empty() {
        return Err(Error::Domain("weight refit needs components".into()));
    }
    let k = comps.len();
    let mut gram = Mat::zeros(k);
    let mut rhs = vec![0.0; k];
    for (deg, tensor) in moments.present() {
        let p = deg as i32;
        for i in 0..k {
            for j in 0..k {
                gram.add_to(i, j, dot(&comps[i], &comps[j]).powi(p));
            }
            rhs[i] += tensor.eval(&comps[i])?;
        }
    }
    solve_normal_equations(&gram, &rhs)
}

fn solve_normal_equations(gram: &Mat, rhs: &[f64]) -> Result<WeightFit> {
    if let Some(l) = gram.cholesky() {
        return Ok(WeightFit {
            weights: l.solve_cholesky(rhs),
            rank_deficient: false,
        });
    }
    // Rank-deficient Gram: ridge regularisation approximates the minimum-norm
    // solution.
    let ridge = 1e-12 * (1.0 + gram.trace().abs());
    let mut g = gram.clone();
    for i in 0..g.n() {
        g.add_to(i, i, ridge);
    }
    let l = g
        .cholesky()
        .ok_or_else(|| Error::Degenerate("normal equations not solvable".into()))?;
    Ok(WeightFit {
        weights: l.solve_cholesky(rhs),
        rank_deficient: true,
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric matrix of a homogeneous quadratic: `M_ii` is the scaled
/// coefficient at `2eᵢ`, `M_ij` the scaled coefficient at `eᵢ+eⱼ`.
pub fn quadratic_form_matrix(h: &HomPoly) -> Result<Mat> {
    if h.degree() != 2 {
        return Err(Error::Domain(format!(
            "quadratic form from degree-{} polynomial",
            h.degree()
        )));
    }
    let n = h.n();
    let mut m = Mat::zeros(n);
    for i in 0..n {
        let mut diag = vec![0u32; n];
        diag[i] = 2;
        m.set(i, i, h.as_poly().coeff(&MultiIndex::new(diag)));
        for j in (i + 1)..n {
            let mut off = vec![0u32; n];
            off[i] = 1;
            off[j] = 1;
            let v = h.as_poly().coeff(&MultiIndex::new(off));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    Ok(m)
}

/// Coefficient vector of a homogeneous linear polynomial.
pub fn linear_form_vector(h: &HomPoly) -> Result<Vec<f64>> {
    if h.degree() != 1 {
        return Err(Error::Domain(format!(
            "linear form from degree-{} polynomial",
            h.degree()
        )));
    }
    let n = h.n();
    Ok((0..n)
        .map(|i| h.as_poly().coeff(&MultiIndex::unit(n, i)))
        .collect())
}

/// Reconstruct `Σ λᵢ ⟨aᵢ,X⟩^d` as a tensor.
pub fn weighted_power_sum(weights: &[f64], nodes: &[Vec<f64>], d: u32) -> Result<HomPoly> {
    if weights.len() != nodes.len() {
        return Err(Error::DimMismatch("weights vs nodes".into()));
    }
    let n = nodes.first().map(|v| v.len()).unwrap_or(0);
    let mut acc = HomPoly::zero(n, d);
    for (w, a) in weights.iter().zip(nodes) {
        acc = acc.add(&pow_linear_form(a, d)?.scale(*w))?;
    }
    Ok(acc)
}


#[cfg(test)]
mod tests {
    use super::*;
    use test_rng::TestRng;

    #[test]
    fn eig_diagonal() {
        let m = Mat::from_fn(3, |i, j| {
            if i == j {
                [3.0, 1.0, 0.0][i]
            } else {
                0.0
            }
        });
        let eig = sym_eig(&m).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 1.0, 0.0]);
        assert!((eig.eigenvectors[0][0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_identity() {
        let eig = sym_eig(&Mat::identity(4)).unwrap();
        for v in eig.eigenvalues {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_rank_one() {
        let mut rng = TestRng::seeded(5);
        for _ in 0..10 {
            let a = rng.unit_vector(4);
            let m = Mat::from_fn(4, |i, j| a[i] * a[j]);
            let eig = sym_eig(&m).unwrap();
            assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-10);
            let u = &eig.eigenvectors[0];
            assert!((dot(u, &a).abs() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let mut m = Mat::zeros(2);
        m.set(0, 1, 1.0);
        assert!(sym_eig(&m).is_err());
    }

    #[test]
    fn eig_reconstruction_and_residual() {
        let mut rng = TestRng::seeded(17);
        for _ in 0..10 {
            let n = 6;
            let mut m = Mat::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.vector(1, 2.0)[0];
                    m.set(i, j, v);
                    m.set(j, i, v);
                }
            }
            let eig = sym_eig(&m).unwrap();
            // Reconstruction Σ λ v vᵀ = M.
            let mut rec = Mat::zeros(n);
            for (lam, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
                for i in 0..n {
                    for j in 0..n {
                        rec.add_to(i, j, lam * v[i] * v[j]);
                    }
                }
            }
            assert!(rec.sub(&m).frobenius_norm() <= 1e-8 * (1.0 + m.frobenius_norm()));
            // Residuals and orthogonality.
            let scale = m.frobenius_norm();
            for (lam, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
                let mv = m.matvec(v);
                let res: f64 = mv
                    .iter()
                    .zip(v)
                    .map(|(a, b)| (a - lam * b) * (a - lam * b))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-9 * (1.0 + scale));
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    assert!(dot(&eig.eigenvectors[i], &eig.eigenvectors[j]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn gapped_matrix_cases() {
        // M = aaᵀ with γ = 1: hypothesis holds, correlation exactly 1.
        let a = vec![0.6, 0.8, 0.0];
        let m = Mat::from_fn(3, |i, j| a[i] * a[j]);
        let chk = gapped_top_eigvec_bound(&m, &a, 1.0).unwrap();
        assert!(chk.hypothesis_holds);
        assert!(chk.conclusion_holds);
        assert!((chk.correlation_sq - 1.0).abs() < 1e-10);

        // M = aaᵀ + 0.1 bbᵀ with b ⊥ a: spec(M − aaᵀ) = 0.1 ≤ 1 − 0.8.
        let b = vec![-0.8, 0.6, 0.0];
        let m2 = Mat::from_fn(3, |i, j| a[i] * a[j] + 0.1 * b[i] * b[j]);
        let chk2 = gapped_top_eigvec_bound(&m2, &a, 0.8).unwrap();
        assert!(chk2.hypothesis_holds);
        assert!(chk2.conclusion_holds);

        // M = I: spec(M − e1e1ᵀ) = 1 = ‖M‖, hypothesis fails for γ = 0.9.
        let chk3 = gapped_top_eigvec_bound(&Mat::identity(3), &[1.0, 0.0, 0.0], 0.9).unwrap();
        assert!(!chk3.hypothesis_holds);
    }

    #[test]
    fn weight_refit_orthogonal() {
        let t = weighted_power_sum(
            &[2.0, 3.0],
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            4,
        )
        .unwrap();
        let fit =
            least_squares_weights_tensor(&t, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!fit.rank_deficient);
        assert!((fit.weights[0] - 2.0).abs() < 1e-10);
        assert!((fit.weights[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn weight_refit_rank_deficient_minimum_norm() {
        let t = weighted_power_sum(&[1.0], &[vec![1.0, 0.0]], 4).unwrap();
        let fit =
            least_squares_weights_tensor(&t, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(fit.rank_deficient);
        // The tiny ridge leaves ~1e-4 relative error in the deficient
        // direction.
        assert!((fit.weights[0] - 0.5).abs() < 1e-3);
        assert!((fit.weights[1] - 0.5).abs() < 1e-3);
        assert!((fit.weights[0] + fit.weights[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weight_refit_random_exact() {
        let mut rng = TestRng::seeded(19);
        for _ in 0..10 {
            let nodes = vec![rng.unit_vector(3), rng.unit_vector(3), rng.unit_vector(3)];
            let weights = vec![
                0.5 + rng.uniform(),
                0.5 + rng.uniform(),
                0.5 + rng.uniform(),
            ];
            let t = weighted_power_sum(&weights, &nodes, 6).unwrap();
            let fit = least_squares_weights_tensor(&t, &nodes).unwrap();
            for (got, want) in fit.weights.iter().zip(&weights) {
                assert!((got - want).abs() < 1e-8, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn gram_identity_for_powers() {
        // ⟨⟨a,X⟩^d, ⟨b,X⟩^d⟩ = ⟨a,b⟩^d.
        let mut rng = TestRng::seeded(23);
        for d in [2u32, 5, 8] {
            let a = rng.vector(3, 1.0);
            let b = rng.vector(3, 1.0);
            let pa = pow_linear_form(&a, d).unwrap();
            let pb = pow_linear_form(&b, d).unwrap();
            let lhs = crate::poly::reznick_product(pa.as_poly(), pb.as_poly()).unwrap();
            let rhs = dot(&a, &b).powi(d as i32);
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn quadratic_form_round_trip() {
        let mut rng = TestRng::seeded(31);
        let a = rng.vector(3, 1.0);
        let q = pow_linear_form(&a, 2).unwrap();
        let m = quadratic_form_matrix(&q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - a[i] * a[j]).abs() < 1e-12);
            }
        }
        // Evaluation agreement: Q(x) = xᵀMx.
        let x = rng.vector(3, 2.0);
        let via_mat = dot(&x, &m.matvec(&x));
        assert!((q.eval(&x).unwrap() - via_mat).abs() < 1e-10);
    }

    #[test]
    fn cholesky_solves() {
        let mut rng = TestRng::seeded(37);
        let n = 5;
        let mut b = Mat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                b.set(i, j, rng.vector(1, 1.0)[0]);
            }
        }
        let spd = b.matmul(&b.transpose()).add(&Mat::scaled_identity(n, 0.5));
        let l = spd.cholesky().unwrap();
        let x_true = rng.vector(n, 1.0);
        let rhs = spd.matvec(&x_true);
        let x = l.solve_cholesky(&rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
