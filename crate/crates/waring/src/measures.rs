//! Finitely supported measures, their moment tensors, fake-moment generation,
//! and the error/condition metrics used to grade decompositions.

use serde::{Deserialize, Serialize};

use crate::numerics::{dot, norm};
use crate::poly::{contract, pow_linear_form, HomPoly, MultiPoly};
use crate::{Error, Result};

/// Weighted node set `μ = Σ λᵢ δ_{aᵢ}` with `λᵢ > 0` and pairwise distinct
/// nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PointMeasureDto", into = "PointMeasureDto")]
pub struct PointMeasure {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PointMeasureDto {
    n: usize,
    m: usize,
    weights: Vec<f64>,
    nodes: Vec<Vec<f64>>,
}

impl From<PointMeasure> for PointMeasureDto {
    fn from(p: PointMeasure) -> Self {
        PointMeasureDto {
            n: p.dim(),
            m: p.len(),
            weights: p.weights,
            nodes: p.nodes,
        }
    }
}

impl TryFrom<PointMeasureDto> for PointMeasure {
    type Error = Error;
    fn try_from(dto: PointMeasureDto) -> Result<Self> {
        if dto.nodes.len() != dto.m || dto.weights.len() != dto.m {
            return Err(Error::InvalidMeasure("m inconsistent with data".into()));
        }
        if dto.nodes.iter().any(|v| v.len() != dto.n) {
            return Err(Error::InvalidMeasure("node dimension mismatch".into()));
        }
        PointMeasure::new(dto.nodes, dto.weights)
    }
}

impl PointMeasure {
    pub fn new(nodes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidMeasure(
                "need equally many nodes and weights, at least one".into(),
            ));
        }
        let n = nodes[0].len();
        if nodes.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidMeasure("nodes of mixed dimension".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidMeasure("weights must be positive".into()));
        }
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if nodes[i] == nodes[j] {
                    return Err(Error::InvalidMeasure(format!(
                        "nodes {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(PointMeasure { nodes, weights })
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Soft checks: nodes that are nonnegative multiples of each other make
    /// the decomposition ill-posed but are not rejected outright.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.nodes.len() {
            for j in (i + 1)..self.nodes.len() {
                let a = &self.nodes[i];
                let b = &self.nodes[j];
                let (na, nb) = (norm(a), norm(b));
                if na == 0.0 || nb == 0.0 {
                    out.push(format!("node {} is zero", if na == 0.0 { i } else { j }));
                    continue;
                }
                let cos = dot(a, b) / (na * nb);
                if cos > 1.0 - 1e-12 {
                    out.push(format!("nodes {i} and {j} are nonnegative multiples"));
                }
            }
        }
        out
    }

    /// `M_k = Σ λᵢ ⟨aᵢ,X⟩^k`.
    pub fn moment_tensor(&self, k: u32) -> Result<HomPoly> {
        let mut acc = HomPoly::zero(self.dim(), k);
        for (w, a) in self.weights.iter().zip(&self.nodes) {
            acc = acc.add(&pow_linear_form(a, k)?.scale(*w))?;
        }
        Ok(acc)
    }

    /// All moments `M_0..M_d`.
    pub fn moment_sequence(&self, d: u32) -> Result<MomentSequence> {
        let mut tensors = Vec::with_capacity(d as usize + 1);
        for k in 0..=d {
            tensors.push(Some(self.moment_tensor(k)?));
        }
        Ok(MomentSequence {
            n: self.dim(),
            tensors,
        })
    }
}

/// Tensors `T_0..T_d` of degrees `0..d`; odd entries may be absent when only
/// even-degree data is generated.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    n: usize,
    tensors: Vec<Option<HomPoly>>,
}

impl MomentSequence {
    pub fn from_tensors(n: usize, tensors: Vec<Option<HomPoly>>) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::Domain("empty moment sequence".into()));
        }
        for (k, t) in tensors.iter().enumerate() {
            if let Some(t) = t {
                if t.degree() as usize != k || t.n() != n {
                    return Err(Error::Domain(format!(
                        "tensor at slot {k} has degree {} / dim {}",
                        t.degree(),
                        t.n()
                    )));
                }
            }
        }
        Ok(MomentSequence { n, tensors })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Top degree `d`.
    pub fn degree(&self) -> u32 {
        (self.tensors.len() - 1) as u32
    }

    pub fn tensor(&self, k: u32) -> Option<&HomPoly> {
        self.tensors.get(k as usize).and_then(|t| t.as_ref())
    }

    /// Degrees with data, ascending.
    pub fn present(&self) -> impl Iterator<Item = (u32, &HomPoly)> {
        self.tensors
            .iter()
            .enumerate()
            .filter_map(|(k, t)| t.as_ref().map(|t| (k as u32, t)))
    }

    /// `Σ_{k ≤ max_degree} T_k` as one inhomogeneous polynomial.
    pub fn sum_up_to(&self, max_degree: u32) -> MultiPoly {
        let mut acc = MultiPoly::zero(self.n);
        for (k, t) in self.present() {
            if k <= max_degree {
                acc = acc.add(t.as_poly());
            }
        }
        acc
    }

    pub fn sum_all(&self) -> MultiPoly {
        self.sum_up_to(self.degree())
    }

    /// `T_0` when present, interpreted as the total mass `Σ λᵢ`.
    pub fn total_mass(&self) -> Option<f64> {
        self.tensor(0)
            .map(|t| t.as_poly().eval(&vec![0.0; self.n]).unwrap_or(0.0))
    }
}

// Wire format: list of MultiPoly objects keyed by degree.
#[derive(Serialize, Deserialize)]
struct MomentEntryDto {
    degree: u32,
    tensor: MultiPoly,
}

impl Serialize for MomentSequence {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<MomentEntryDto> = self
            .present()
            .map(|(k, t)| MomentEntryDto {
                degree: k,
                tensor: t.as_poly().clone(),
            })
            .collect();
        entries.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MomentSequence {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let entries = Vec::<MomentEntryDto>::deserialize(de)?;
        let d = entries.iter().map(|e| e.degree).max().ok_or_else(|| {
            D::Error::custom("moment sequence needs at least one tensor")
        })?;
        let n = entries[0].tensor.n();
        let mut tensors: Vec<Option<HomPoly>> = vec![None; d as usize + 1];
        for e in entries {
            let hom = e
                .tensor
                .homogeneous_part(e.degree)
                .as_poly()
                .clone();
            if hom != e.tensor {
                return Err(D::Error::custom(format!(
                    "tensor keyed by degree {} is not homogeneous of that degree",
                    e.degree
                )));
            }
            tensors[e.degree as usize] =
                Some(HomPoly::from_poly(e.tensor, e.degree).map_err(D::Error::custom)?);
        }
        MomentSequence::from_tensors(n, tensors).map_err(D::Error::custom)
    }
}

/// Directional fake moments of a single degree-`d` tensor:
/// `T_k = ⟨⟨w,X⟩^{d−k} ⊗ id, T⟩ = Σᵢ ⟨aᵢ,w⟩^{d−k} ⟨aᵢ,X⟩^k`.
///
/// These are the true moments of the rescaled measure with weights
/// `⟨aᵢ,w⟩^d` and nodes `aᵢ/⟨aᵢ,w⟩`.
pub fn fake_moments_directional(t: &HomPoly, w: &[f64]) -> Result<MomentSequence> {
    let d = t.degree();
    if d % 2 != 0 {
        return Err(Error::Parity(format!("fake moments need even degree, got {d}")));
    }
    if (norm(w) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("direction w must be a unit vector".into()));
    }
    if w.len() != t.n() {
        return Err(Error::DimMismatch("direction vs tensor".into()));
    }
    let mut tensors = Vec::with_capacity(d as usize + 1);
    for k in 0..=d {
        let q = pow_linear_form(w, d - k)?;
        tensors.push(Some(contract(q.as_poly(), t.as_poly(), k)?));
    }
    MomentSequence::from_tensors(t.n(), tensors)
}

/// Norm-scaled fake moments, even degrees only:
/// `T_k = ⟨(ΣXⱼ²)^{(d−k)/2} ⊗ id, T⟩ = Σᵢ ‖aᵢ‖^{d−k} ⟨aᵢ,X⟩^k`.
pub fn fake_moments_norm_scaled(t: &HomPoly) -> Result<MomentSequence> {
    let d = t.degree();
    if d % 2 != 0 {
        return Err(Error::Parity(format!("fake moments need even degree, got {d}")));
    }
    let q2 = MultiPoly::squared_norm(t.n());
    let mut tensors: Vec<Option<HomPoly>> = vec![None; d as usize + 1];
    for k in (0..=d).step_by(2) {
        let q = q2.pow((d - k) / 2)?;
        tensors[k as usize] = Some(contract(&q, t.as_poly(), k)?);
    }
    MomentSequence::from_tensors(t.n(), tensors)
}

/// Separation and correlation parameters of a node set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `min_{i≠j} ‖aᵢ−aⱼ‖²`.
    pub kappa_min: f64,
    /// `max_{i≠j} ‖aᵢ−aⱼ‖²`.
    pub kappa_max: f64,
    /// `max_{i≠j} spec(aᵢaᵢᵀ − aⱼaⱼᵀ)`.
    pub rho_spec: f64,
    /// `max_{i≠j} (1 − ⟨aᵢ,aⱼ⟩/(‖aᵢ‖‖aⱼ‖))`.
    pub rho_lin: f64,
    /// `min_{i≠j} (1 − ⟨aᵢ,aⱼ⟩²/(‖aᵢ‖²‖aⱼ‖²))`, the squared projective
    /// distance of the closest pair.
    pub rho_min_sq_corr: f64,
    pub pairs: Vec<PairDetail>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDetail {
    pub i: usize,
    pub j: usize,
    pub dist_sq: f64,
    pub spec: f64,
    pub sq_corr_dist: f64,
}

/// `spec(aaᵀ − bbᵀ)` from the rank-2 characteristic polynomial: with trace
/// `t = ‖a‖²−‖b‖²` and second elementary symmetric value
/// `p = −(‖a‖²‖b‖²−⟨a,b⟩²)` the nonzero eigenvalues are `(t ± √(t²−4p))/2`.
pub fn rank_two_spec(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a);
    let nb = dot(b, b);
    let ab = dot(a, b);
    let t = na - nb;
    let p = -(na * nb - ab * ab);
    let disc = (t * t - 4.0 * p).max(0.0).sqrt();
    0.5 * (t.abs() + disc)
}

pub fn condition_report(nodes: &[Vec<f64>]) -> Result<ConditionReport> {
    if nodes.len() < 2 {
        return Err(Error::Domain("condition report needs at least 2 nodes".into()));
    }
    if nodes.iter().any(|a| norm(a) == 0.0) {
        return Err(Error::Domain(
            "zero node makes correlation metrics undefined".into(),
        ));
    }
    let mut kappa_min = f64::INFINITY;
    let mut kappa_max: f64 = 0.0;
    let mut rho_spec: f64 = 0.0;
    let mut rho_lin: f64 = f64::NEG_INFINITY;
    let mut rho_min = f64::INFINITY;
    let mut pairs = Vec::new();
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let (a, b) = (&nodes[i], &nodes[j]);
            let diff_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            let spec = rank_two_spec(a, b);
            let cos = dot(a, b) / (norm(a) * norm(b));
            let sq_corr_dist = (1.0 - cos * cos).max(0.0);
            kappa_min = kappa_min.min(diff_sq);
            kappa_max = kappa_max.max(diff_sq);
            rho_spec = rho_spec.max(spec);
            rho_lin = rho_lin.max(1.0 - cos);
            rho_min = rho_min.min(sq_corr_dist);
            pairs.push(PairDetail {
                i,
                j,
                dist_sq: diff_sq,
                spec,
                sq_corr_dist,
            });
        }
    }
    Ok(ConditionReport {
        kappa_min,
        kappa_max,
        rho_spec,
        rho_lin,
        rho_min_sq_corr: rho_min,
        pairs,
    })
}

fn pair_distance(a: &[f64], b: &[f64], mod_sign: bool) -> f64 {
    let plain: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    if !mod_sign {
        return plain;
    }
    let flipped: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x + y) * (x + y))
        .sum::<f64>()
        .sqrt();
    plain.min(flipped)
}

/// Hausdorff distance between finite sets: the smallest `ε` admitting a
/// surjection `σ` from the larger set onto the smaller with
/// `‖a − σ(a)‖ ≤ ε` throughout. With `mod_sign` the metric is
/// `min(‖a−b‖, ‖a+b‖)`.
pub fn hausdorff_distance(m: &[Vec<f64>], n: &[Vec<f64>], mod_sign: bool) -> Result<f64> {
    if m.is_empty() || n.is_empty() {
        return Err(Error::Domain("hausdorff distance of empty set".into()));
    }
    let (large, small) = if m.len() >= n.len() { (m, n) } else { (n, m) };
    if large.len() == small.len() && large.len() <= 8 {
        return Ok(hausdorff_permutations(large, small, mod_sign));
    }
    // ε* = max(bottleneck matching saturating the smaller set,
    //          worst nearest-neighbour distance of the larger set).
    let nn_worst = large
        .iter()
        .map(|a| {
            small
                .iter()
                .map(|b| pair_distance(a, b, mod_sign))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|b| large.iter().map(|a| pair_distance(a, b, mod_sign)).collect())
        .collect();
    let bottleneck = bottleneck_matching(&cost);
    Ok(nn_worst.max(bottleneck))
}

fn hausdorff_permutations(a: &[Vec<f64>], b: &[Vec<f64>], mod_sign: bool) -> f64 {
    let k = a.len();
    let dist: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| pair_distance(x, y, mod_sign)).collect())
        .collect();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let worst = (0..k).map(|i| dist[i][p[i]]).fold(0.0f64, f64::max);
        if worst < best {
            best = worst;
        }
    });
    best
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Smallest threshold `t` such that every row of `cost` can be matched to a
/// distinct column with cost ≤ `t` (rows ≤ columns).
fn bottleneck_matching(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    if rows == 0 {
        return 0.0;
    }
    let mut candidates: Vec<f64> = cost.iter().flatten().copied().collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    let feasible = |t: f64| -> bool {
        let cols = cost[0].len();
        let mut match_of_col = vec![usize::MAX; cols];
        let mut matched = 0;
        for r in 0..rows {
            let mut seen = vec![false; cols];
            if kuhn_augment(r, cost, t, &mut seen, &mut match_of_col) {
                matched += 1;
            }
        }
        matched == rows
    };
    let mut lo = 0;
    let mut hi = candidates.len() - 1;
    if !feasible(candidates[hi]) {
        return f64::INFINITY;
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

fn kuhn_augment(
    r: usize,
    cost: &[Vec<f64>],
    t: f64,
    seen: &mut [bool],
    match_of_col: &mut [usize],
) -> bool {
    for c in 0..cost[r].len() {
        if cost[r][c] <= t && !seen[c] {
            seen[c] = true;
            if match_of_col[c] == usize::MAX
                || kuhn_augment(match_of_col[c], cost, t, seen, match_of_col)
            {
                match_of_col[c] = r;
                return true;
            }
        }
    }
    false
}

/// Optimal matching of two equal-size component sets: returns the bottleneck
/// value and, for each truth index, the matched recovered index.
pub fn match_components(
    truth: &[Vec<f64>],
    recovered: &[Vec<f64>],
    mod_sign: bool,
) -> Result<(f64, Vec<usize>)> {
    if truth.len() != recovered.len() || truth.is_empty() {
        return Err(Error::Domain("matching needs equal nonempty sets".into()));
    }
    let k = truth.len();
    let dist: Vec<Vec<f64>> = truth
        .iter()
        .map(|x| {
            recovered
                .iter()
                .map(|y| pair_distance(x, y, mod_sign))
                .collect()
        })
        .collect();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::INFINITY;
    let mut best_perm = perm.clone();
    permute(&mut perm, 0, &mut |p| {
        let worst = (0..k).map(|i| dist[i][p[i]]).fold(0.0f64, f64::max);
        if worst < best {
            best = worst;
            best_perm = p.to_vec();
        }
    });
    Ok((best, best_perm))
}

/// `‖T − Σ ρᵢ ⟨cᵢ,X⟩^d‖_F`; unit weights when none are given.
pub fn backward_error(t: &HomPoly, comps: &[Vec<f64>], weights: Option<&[f64]>) -> Result<f64> {
    let d = t.degree();
    let mut residual = t.clone();
    for (i, c) in comps.iter().enumerate() {
        let w = weights.map(|w| w[i]).unwrap_or(1.0);
        residual = residual.sub(&pow_linear_form(c, d)?.scale(w))?;
    }
    Ok(residual.frobenius_norm())
}
