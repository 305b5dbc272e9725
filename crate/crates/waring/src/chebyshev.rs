//! Chebyshev polynomials, interval remapping, and the feasibility certificates
//! ("testimonies") built from them.
//!
//! The shifted composition `T_{I,(d−2)/2}(‖X−a‖²) + 1` is a globally
//! nonnegative, rotation-symmetric SOS polynomial: it is tiny on the band
//! `‖x−a‖² ∈ I` and grows like `T(κ)` at the center, which is what makes it a
//! witness that the weight-polynomial optimisation can concentrate on a single
//! component.

use crate::measures::PointMeasure;
use crate::poly::{MultiPoly, PRUNE_EPS};
use crate::{Error, Result};

/// Univariate polynomial `c₀ + c₁Λ + … ` in the monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map(|c| c.abs() < PRUNE_EPS) == Some(true) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UniPoly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        UniPoly { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, s: f64) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; len];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        UniPoly::new(out)
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// Substitute a multivariate polynomial for Λ by Horner's scheme.
    pub fn compose(&self, q: &MultiPoly) -> Result<MultiPoly> {
        let n = q.n();
        let mut acc = MultiPoly::zero(n);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(q)?;
            acc = acc.add(&MultiPoly::constant(n, c));
        }
        Ok(acc)
    }
}

/// Closed interval `[a, b]` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Domain(format!("interval needs a < b, got [{a}, {b}]")));
        }
        Ok(Interval { a, b })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }

    /// Default testimony band around the pairwise node distances, with extra
    /// margin: `[κ_min/2 − δ, 2κ_max + δ]`.
    pub fn testimony_band(kappa_min: f64, kappa_max: f64, delta: f64) -> Result<Self> {
        Interval::new(0.5 * kappa_min - delta, 2.0 * kappa_max + delta)
    }

    /// Tight band `[κ_min, κ_max]`.
    pub fn tight_band(kappa_min: f64, kappa_max: f64) -> Result<Self> {
        Interval::new(kappa_min, kappa_max)
    }
}

/// `T_d(x)` by the three-term recurrence.
pub fn cheb_eval(d: u32, x: f64) -> f64 {
    if d == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = x;
    for _ in 1..d {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_d(κ)` for `κ > 1` by the closed form
/// `½(κ+√(κ²−1))^d + ½(κ−√(κ²−1))^d`.
pub fn cheb_exterior_value(kappa: f64, d: u32) -> Result<f64> {
    if !(kappa > 1.0) {
        return Err(Error::Domain(format!(
            "exterior value needs kappa > 1, got {kappa}"
        )));
    }
    let s = (kappa * kappa - 1.0).sqrt();
    Ok(0.5 * (kappa + s).powi(d as i32) + 0.5 * (kappa - s).powi(d as i32))
}

/// Coefficients of `T_d ∘ ψ` where `ψ(Λ) = (2Λ − (b+a))/(b−a)` maps `I` onto
/// `[−1,1]`; `|T_{I,d}| ≤ 1` on `I`.
pub fn cheb_interval(interval: Interval, d: u32) -> UniPoly {
    let (a, b) = (interval.a, interval.b);
    let psi = UniPoly::new(vec![-(b + a) / (b - a), 2.0 / (b - a)]);
    if d == 0 {
        return UniPoly::constant(1.0);
    }
    let mut prev = UniPoly::constant(1.0);
    let mut cur = psi.clone();
    for _ in 1..d {
        let next = psi.mul(&cur).scale(2.0).add(&prev.scale(-1.0));
        prev = cur;
        cur = next;
    }
    cur
}

/// The multivariate testimony `T_{I,(d−2)/2}(‖X−center‖²) + 1`: globally
/// nonnegative SOS of degree `d−2`, with a rotation-symmetric low band where
/// `‖x−center‖² ∈ I`. Requires `d ≡ 2 (mod 4)` so the inner Chebyshev degree
/// is even, and `I.a > 0` so the center sits outside the band.
pub fn testimony_poly(center: &[f64], interval: Interval, d: u32) -> Result<MultiPoly> {
    if d % 4 != 2 {
        return Err(Error::Parity(format!(
            "testimony needs d ≡ 2 (mod 4), got {d}"
        )));
    }
    if interval.a <= 0.0 {
        return Err(Error::Domain("testimony interval must have a > 0".into()));
    }
    let inner = cheb_interval(interval, (d - 2) / 2);
    let q = MultiPoly::squared_distance(center);
    let composed = inner.compose(&q)?;
    Ok(composed.add(&MultiPoly::constant(center.len(), 1.0)))
}

/// Ratio between the testimony's value at its center and its supremum on the
/// band: `B = (T_{I,(d−2)/2}(0) + 1)/2`. An optimiser as good as the testimony
/// then satisfies `w_minmax ≤ 1/(B·λ_j)`.
pub fn best_ratio(interval: Interval, d: u32) -> Result<f64> {
    if d % 4 != 2 {
        return Err(Error::Parity(format!(
            "best ratio needs d ≡ 2 (mod 4), got {d}"
        )));
    }
    if interval.contains(0.0) {
        return Err(Error::Domain(
            "band containing 0 makes the testimony useless".into(),
        ));
    }
    let p = cheb_interval(interval, (d - 2) / 2);
    Ok((p.eval(0.0) + 1.0) / 2.0)
}

/// Interpolation testimony for the exact regime: the SOS polynomial
/// `I_j = (1/λ_j) Π_{i≠j} ‖X−aᵢ‖²/‖aᵢ−aⱼ‖²` of degree `2(m−1)` with
/// `λᵢ I_j(aᵢ) = δ_ij`.
pub fn interpolation_testimony(j: usize, mu: &PointMeasure) -> Result<MultiPoly> {
    let nodes = mu.nodes();
    if j >= nodes.len() {
        return Err(Error::Domain(format!("node index {j} out of range")));
    }
    let n = mu.dim();
    let mut p = MultiPoly::constant(n, 1.0 / mu.weights()[j]);
    for (i, node) in nodes.iter().enumerate() {
        if i == j {
            continue;
        }
        let denom: f64 = node
            .iter()
            .zip(&nodes[j])
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        if denom < 1e-300 {
            return Err(Error::Domain(format!("nodes {i} and {j} coincide")));
        }
        p = p.mul(&MultiPoly::squared_distance(node).scale(1.0 / denom))?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_rng::TestRng;

    #[test]
    fn recurrence_small_values() {
        assert!((cheb_eval(2, 0.5) + 0.5).abs() < 1e-15);
        let x = 0.3f64.cos();
        assert!((cheb_eval(5, x) - 1.5f64.cos()).abs() < 1e-12);
        assert!((cheb_eval(2, 2.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_recurrence() {
        for &kappa in &[1.1, 2.0, 5.0] {
            for d in 0..=20u32 {
                let closed = cheb_exterior_value(kappa, d).unwrap();
                let rec = cheb_eval(d, kappa);
                assert!(
                    (closed - rec).abs() <= 1e-9 * closed.abs().max(1.0),
                    "kappa={kappa} d={d}: {closed} vs {rec}"
                );
            }
        }
        assert!(cheb_exterior_value(1.0, 3).is_err());
        assert!((cheb_exterior_value(1.0 + 1e-14, 7).unwrap() - 1.0).abs() < 1e-5);
        assert!((cheb_exterior_value(3.0, 1).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interval_remap() {
        // On [−1,1] the remap is the identity.
        let p = cheb_interval(Interval::new(-1.0, 1.0).unwrap(), 4);
        for x in [-0.9, -0.3, 0.2, 0.77] {
            assert!((p.eval(x) - cheb_eval(4, x)).abs() < 1e-12);
        }
        // [1,3], d = 2: ψ(0) = −2 so the value at 0 is T₂(−2) = 7; midpoint −1.
        let p = cheb_interval(Interval::new(1.0, 3.0).unwrap(), 2);
        assert!((p.eval(0.0) - 7.0).abs() < 1e-12);
        assert!((p.eval(2.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_oscillation_count() {
        // T_{I,d} attains |value| = 1 at exactly d+1 points of I including the
        // endpoints: d sign changes on a fine grid, every |value| ≤ 1.
        let interval = Interval::new(0.5, 2.5).unwrap();
        for d in [3u32, 4, 7] {
            let p = cheb_interval(interval, d);
            let grid = 10_000;
            let mut sign_changes = 0;
            let mut last_nonzero = 0.0;
            let mut peaks = 0;
            let mut in_peak = false;
            for g in 0..=grid {
                let x = interval.a + (interval.b - interval.a) * g as f64 / grid as f64;
                let v = p.eval(x);
                assert!(v.abs() <= 1.0 + 1e-9);
                if v != 0.0 {
                    if v * last_nonzero < 0.0 {
                        sign_changes += 1;
                    }
                    last_nonzero = v;
                }
                if v.abs() >= 1.0 - 1e-4 {
                    if !in_peak {
                        peaks += 1;
                        in_peak = true;
                    }
                } else {
                    in_peak = false;
                }
            }
            assert_eq!(sign_changes, d as usize);
            assert_eq!(peaks, d as usize + 1);
            assert!((p.eval(interval.a).abs() - 1.0).abs() < 1e-9);
            assert!((p.eval(interval.b).abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exterior_dominance() {
        // Any polynomial bounded by 1 on I stays below the Chebyshev value at 0.
        let interval = Interval::new(1.0, 3.0).unwrap();
        let d = 4u32;
        let cheb0 = cheb_interval(interval, d).eval(0.0);
        let mut rng = TestRng::seeded(71);
        for _ in 0..200 {
            let coeffs: Vec<f64> = (0..=d).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            let p = UniPoly::new(coeffs);
            let sup = (0..=2000)
                .map(|g| {
                    p.eval(interval.a + (interval.b - interval.a) * g as f64 / 2000.0)
                        .abs()
                })
                .fold(0.0f64, f64::max);
            let rescaled = p.scale(1.0 / sup);
            assert!(rescaled.eval(0.0) <= cheb0 + 1e-6);
        }
    }

    #[test]
    fn testimony_values() {
        let interval = Interval::new(1.0, 3.0).unwrap();
        let d = 6u32;
        let center = vec![0.0, 0.0];
        let w = testimony_poly(&center, interval, d).unwrap();
        assert_eq!(w.degree(), d - 2);
        // At the center q = 0 is exterior, so the value is ≥ 2.
        assert!(w.eval(&center).unwrap() >= 2.0);
        // On the band the shifted value lies in [0, 2].
        let mut rng = TestRng::seeded(73);
        for _ in 0..50 {
            let dir = rng.unit_vector(2);
            let r = (1.0 + 2.0 * rng.uniform()).sqrt();
            let x: Vec<f64> = dir.iter().map(|v| v * r).collect();
            let val = w.eval(&x).unwrap();
            assert!((-1e-9..=2.0 + 1e-9).contains(&val));
        }
        // Boundary: d = 6, x = e1 gives q = 1, ψ(1) = −1, T₂(−1) = 1, value 2.
        assert!((w.eval(&[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-10);
        // Global nonnegativity on random points.
        for _ in 0..200 {
            let x = rng.vector(2, 3.0);
            assert!(w.eval(&x).unwrap() >= -1e-9);
        }
        assert!(testimony_poly(&center, interval, 8).is_err());
    }

    #[test]
    fn best_ratio_values() {
        let interval = Interval::new(1.0, 3.0).unwrap();
        assert!((best_ratio(interval, 6).unwrap() - 4.0).abs() < 1e-12);
        assert!((best_ratio(interval, 2).unwrap() - 1.0).abs() < 1e-12);
        // Strictly increasing in d at fixed interval.
        let mut last = 0.0;
        for d in [2u32, 6, 10, 14, 18] {
            let b = best_ratio(interval, d).unwrap();
            assert!(b > last);
            last = b;
        }
        assert!(best_ratio(Interval::new(-1.0, 1.0).unwrap(), 6).is_err());
    }

    #[test]
    fn best_ratio_matches_grid_supremum() {
        // B = w_test(center)/sup_I(w_test) with the sup estimated on a grid
        // plus parabolic refinement.
        let interval = Interval::new(1.0, 3.0).unwrap();
        for d in [6u32, 10] {
            let inner = cheb_interval(interval, (d - 2) / 2);
            let shifted = inner.add(&UniPoly::constant(1.0));
            let grid = 100_000;
            let mut best_g = 0usize;
            let mut best_v = f64::MIN;
            for g in 0..=grid {
                let x = interval.a + (interval.b - interval.a) * g as f64 / grid as f64;
                let v = shifted.eval(x);
                if v > best_v {
                    best_v = v;
                    best_g = g;
                }
            }
            // Parabolic refinement only for interior maxima; a boundary
            // maximum is exact at the endpoint.
            let sup = if best_g == 0 || best_g == grid {
                best_v
            } else {
                let h = (interval.b - interval.a) / grid as f64;
                let best_x = interval.a + (interval.b - interval.a) * best_g as f64 / grid as f64;
                let (vm, v0, vp) = (
                    shifted.eval(best_x - h),
                    shifted.eval(best_x),
                    shifted.eval(best_x + h),
                );
                let denom = vm - 2.0 * v0 + vp;
                if denom.abs() > 1e-300 {
                    v0 - (vp - vm) * (vp - vm) / (8.0 * denom)
                } else {
                    v0
                }
            };
            let ratio = shifted.eval(0.0) / sup;
            let b = best_ratio(interval, d).unwrap();
            assert!((ratio - b).abs() < 1e-6 * b, "d={d}: {ratio} vs {b}");
        }
    }

    #[test]
    fn interpolation_testimony_delta_property() {
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let mu = PointMeasure::new(vec![e1.clone(), e2.clone()], vec![1.0, 1.0]).unwrap();
        let i1 = interpolation_testimony(0, &mu).unwrap();
        assert!((i1.eval(&e1).unwrap() - 1.0).abs() < 1e-12);
        assert!(i1.eval(&e2).unwrap().abs() < 1e-12);

        // Single node: the constant 1/λ.
        let single = PointMeasure::new(vec![vec![0.3, -0.4]], vec![2.0]).unwrap();
        let i = interpolation_testimony(0, &single).unwrap();
        assert!((i.eval(&[9.0, 9.0]).unwrap() - 0.5).abs() < 1e-12);

        // Random 3-node measure: λᵢ I_j(aᵢ) = δ_ij.
        let mut rng = TestRng::seeded(79);
        let mu = PointMeasure::new(
            vec![rng.vector(3, 1.0), rng.vector(3, 1.0), rng.vector(3, 1.0)],
            vec![0.6, 1.7, 0.9],
        )
        .unwrap();
        for j in 0..3 {
            let ij = interpolation_testimony(j, &mu).unwrap();
            assert_eq!(ij.degree(), 4);
            for i in 0..3 {
                let v = mu.weights()[i] * ij.eval(&mu.nodes()[i]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-10, "i={i} j={j}: {v}");
            }
        }
    }
}
