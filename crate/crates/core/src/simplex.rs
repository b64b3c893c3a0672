//! Points on the probability simplex, degree-D multi-indices, and the
//! Bernstein (multinomial) basis built from them.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const SUM_TOLERANCE: f64 = 1e-9;

/// A point `t` on the probability simplex: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Validates `entries`, renormalizing small floating-point drift in the sum.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("weight vector must have at least one entry"));
        }
        if entries.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain(format!(
                "weight entries must be finite and nonnegative: {entries:?}"
            )));
        }
        let sum: f64 = entries.iter().sum();
        let drift = (sum - 1.0).abs();
        if drift > SUM_TOLERANCE {
            return Err(Error::domain(format!(
                "weight entries sum to {sum}, not 1 (tolerance {SUM_TOLERANCE:e})"
            )));
        }
        if drift == 0.0 {
            Ok(WeightVector(entries))
        } else {
            Ok(WeightVector(entries.into_iter().map(|v| v / sum).collect()))
        }
    }

    /// The `m`-th vertex of the simplex with `dim` coordinates.
    pub fn vertex(dim: usize, m: usize) -> Self {
        assert!(m < dim, "vertex {m} out of range for dimension {dim}");
        let mut e = vec![0.0; dim];
        e[m] = 1.0;
        WeightVector(e)
    }

    pub fn barycenter(dim: usize) -> Self {
        assert!(dim > 0);
        WeightVector(vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        WeightVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// Exponent vector `d` of a degree-`D` monomial `t^d`.
pub type MultiIndex = Vec<u32>;

/// The ordered set of all multi-indices of degree `D` in `M` variables,
/// with their multinomial coefficients.
///
/// Indices are sorted in descending lexicographic order, so `(D,0,...,0)`
/// comes first and `(0,...,0,D)` last. Serialized control matrices use this
/// order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    objectives: usize,
    degree: u32,
    indices: Vec<MultiIndex>,
    coefficients: Vec<f64>,
}

impl MultiIndexSet {
    pub fn new(objectives: usize, degree: u32) -> Result<Self> {
        if objectives == 0 {
            return Err(Error::domain("number of objectives M must be at least 1"));
        }
        if degree == 0 {
            return Err(Error::domain("degree D must be at least 1"));
        }
        let mut indices = Vec::with_capacity(count_multi_indices(objectives, degree) as usize);
        let mut scratch = vec![0u32; objectives];
        push_descending(&mut indices, &mut scratch, 0, degree);
        let coefficients = indices.iter().map(|d| multinomial(d)).collect();
        Ok(MultiIndexSet {
            objectives,
            degree,
            indices,
            coefficients,
        })
    }

    pub fn objectives(&self) -> usize {
        self.objectives
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Position of `D * e_m`, the multi-index whose control point is the image of vertex `m`.
    pub fn vertex_position(&self, m: usize) -> usize {
        assert!(m < self.objectives);
        self.indices
            .iter()
            .position(|d| d[m] == self.degree)
            .expect("pure power is always enumerated")
    }

    pub fn position(&self, index: &[u32]) -> Option<usize> {
        self.indices.iter().position(|d| d.as_slice() == index)
    }

    /// The Bernstein vector `z(t)`: entry `i` is `binom(D, d_i) * t^{d_i}`.
    pub fn bernstein_vector(&self, t: &WeightVector) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.bernstein_into(t, &mut out)?;
        Ok(out)
    }

    pub(crate) fn bernstein_into(&self, t: &WeightVector, out: &mut [f64]) -> Result<()> {
        if t.dim() != self.objectives {
            return Err(Error::domain(format!(
                "weight has {} entries but the basis has M = {}",
                t.dim(),
                self.objectives
            )));
        }
        debug_assert_eq!(out.len(), self.len());
        for ((slot, d), c) in out.iter_mut().zip(&self.indices).zip(&self.coefficients) {
            let mono: f64 = d
                .iter()
                .zip(t.as_slice())
                .map(|(&e, &tm)| tm.powi(e as i32))
                .product();
            *slot = c * mono;
        }
        Ok(())
    }
}

/// `enumerate_multi_indices(M, D)`.
pub fn enumerate_multi_indices(objectives: usize, degree: u32) -> Result<MultiIndexSet> {
    MultiIndexSet::new(objectives, degree)
}

pub fn bernstein_vector(t: &WeightVector, basis: &MultiIndexSet) -> Result<Vec<f64>> {
    basis.bernstein_vector(t)
}

fn push_descending(out: &mut Vec<MultiIndex>, scratch: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(scratch.to_vec());
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[pos] = e;
        push_descending(out, scratch, pos + 1, remaining - e);
    }
}

/// `binomial(D + M - 1, M - 1)`, the number of degree-`D` multi-indices.
pub fn count_multi_indices(objectives: usize, degree: u32) -> u64 {
    if objectives == 0 {
        return 0;
    }
    binomial(degree as u64 + objectives as u64 - 1, objectives as u64 - 1).unwrap_or(u64::MAX as u128)
        as u64
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `D! / prod(d_m!)` as a product of binomials, exact while it fits in 128 bits;
/// past that it is evaluated in log space and loses the last few ulps.
fn multinomial(d: &[u32]) -> f64 {
    let mut acc: Option<u128> = Some(1);
    let mut partial = 0u64;
    for &e in d {
        partial += e as u64;
        acc = acc.and_then(|a| binomial(partial, e as u64).and_then(|b| a.checked_mul(b)));
    }
    match acc {
        Some(v) => v as f64,
        None => {
            let ln_fact = |n: u64| (2..=n).map(|k| (k as f64).ln()).sum::<f64>();
            let total: u64 = d.iter().map(|&e| e as u64).sum();
            (ln_fact(total) - d.iter().map(|&e| ln_fact(e as u64)).sum::<f64>()).exp()
        }
    }
}

/// Draws one point from the flat Dirichlet by normalizing unit exponentials.
pub fn sample_weight<R: Rng + ?Sized>(objectives: usize, rng: &mut R) -> WeightVector {
    assert!(objectives > 0);
    let draws: Vec<f64> = (0..objectives).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 {
        WeightVector(draws.into_iter().map(|v| v / sum).collect())
    } else {
        WeightVector::barycenter(objectives)
    }
}

pub fn sample_weights<R: Rng + ?Sized>(objectives: usize, n: usize, rng: &mut R) -> Vec<WeightVector> {
    (0..n).map(|_| sample_weight(objectives, rng)).collect()
}

/// `n` i.i.d. uniform points on the `(M-1)`-simplex, deterministic in `seed`.
pub fn sample_uniform_simplex(objectives: usize, n: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if objectives == 0 || n == 0 {
        return Err(Error::domain("sample_uniform_simplex needs M >= 1 and n >= 1"));
    }
    let mut r = rng::stream(seed, &[]);
    Ok(sample_weights(objectives, n, &mut r))
}

/// Regular simplex lattice `{d / H : d in N^M_H}` with the largest `H >= 1`
/// whose point count does not exceed `max_points`, in canonical index order.
pub fn lattice_weights(objectives: usize, max_points: usize) -> Result<Vec<WeightVector>> {
    if objectives == 0 {
        return Err(Error::domain("lattice needs M >= 1"));
    }
    if objectives == 1 {
        return Ok(vec![WeightVector(vec![1.0])]);
    }
    let mut divisions = 0u32;
    while count_multi_indices(objectives, divisions + 1) <= max_points as u64 {
        divisions += 1;
    }
    if divisions == 0 {
        return Err(Error::domain(format!(
            "a simplex lattice in M = {objectives} needs at least {objectives} points, got {max_points}"
        )));
    }
    let set = MultiIndexSet::new(objectives, divisions)?;
    let h = divisions as f64;
    Ok(set
        .indices()
        .iter()
        .map(|d| WeightVector(d.iter().map(|&e| e as f64 / h).collect()))
        .collect())
}

/// Fixed evaluation grid: the largest lattice within `size / 2` points, topped
/// up with seeded uniform draws to exactly `size` points.
pub fn weight_grid(objectives: usize, size: usize, seed: u64) -> Result<Vec<WeightVector>> {
    let mut grid = lattice_weights(objectives, size / 2).unwrap_or_default();
    let fill = size - grid.len().min(size);
    if fill > 0 {
        grid.extend(sample_uniform_simplex(objectives, fill, seed)?);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumerates_m2_d2() {
        let set = MultiIndexSet::new(2, 2).unwrap();
        assert_eq!(set.indices(), &[vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(set.coefficients(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(MultiIndexSet::new(3, 3).unwrap().len(), 10);
        let single = MultiIndexSet::new(1, 5).unwrap();
        assert_eq!(single.indices(), &[vec![5]]);
        assert_eq!(single.coefficients(), &[1.0]);
        for m in 1..6 {
            for d in 1..7 {
                let set = MultiIndexSet::new(m, d).unwrap();
                assert_eq!(set.len() as u64, count_multi_indices(m, d));
                assert!(set.indices().iter().all(|i| i.iter().sum::<u32>() == d));
                // strictly descending, hence no duplicates
                assert!(set.indices().windows(2).all(|w| w[0] > w[1]));
            }
        }
    }

    #[test]
    fn multinomial_coefficients_match_factorials() {
        let fact = |n: u32| (1..=n as u64).product::<u64>();
        let set = MultiIndexSet::new(4, 6).unwrap();
        for (d, c) in set.indices().iter().zip(set.coefficients()) {
            let expect = fact(6) / d.iter().map(|&e| fact(e)).product::<u64>();
            assert_eq!(*c, expect as f64);
        }
        // log-space branch still lands close
        let big = multinomial(&[40, 40, 40]);
        let exact = multinomial(&[20, 20, 20]);
        assert!(big.is_finite() && big > exact);
    }

    #[test]
    fn rejects_degenerate_sets() {
        assert!(matches!(MultiIndexSet::new(0, 3), Err(Error::Domain(_))));
        assert!(matches!(MultiIndexSet::new(3, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn bernstein_examples() {
        let set = MultiIndexSet::new(3, 3).unwrap();
        let z = set.bernstein_vector(&WeightVector::vertex(3, 0)).unwrap();
        assert_eq!(z[0], 1.0);
        assert!(z[1..].iter().all(|&v| v == 0.0));

        let set = MultiIndexSet::new(2, 2).unwrap();
        let z = set
            .bernstein_vector(&WeightVector::new(vec![0.5, 0.5]).unwrap())
            .unwrap();
        assert_eq!(z, vec![0.25, 0.5, 0.25]);

        let bad = WeightVector::new(vec![0.5, 0.5]).unwrap();
        assert!(MultiIndexSet::new(3, 2).unwrap().bernstein_vector(&bad).is_err());
    }

    #[test]
    fn vertex_selection() {
        for m_count in 1..5 {
            let set = MultiIndexSet::new(m_count, 4).unwrap();
            for m in 0..m_count {
                let z = set.bernstein_vector(&WeightVector::vertex(m_count, m)).unwrap();
                let pos = set.vertex_position(m);
                for (i, v) in z.iter().enumerate() {
                    assert_eq!(*v, if i == pos { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.6]).is_err());
        assert!(WeightVector::new(vec![-0.1, 1.1]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
        let w = WeightVector::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_degenerate_and_deterministic() {
        let s = sample_uniform_simplex(1, 7, 3).unwrap();
        assert!(s.iter().all(|w| w.as_slice() == [1.0]));
        let a = sample_uniform_simplex(4, 50, 11).unwrap();
        let b = sample_uniform_simplex(4, 50, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_uniform_simplex(4, 50, 12).unwrap());
        assert!(sample_uniform_simplex(0, 3, 1).is_err());
        assert!(sample_uniform_simplex(3, 0, 1).is_err());
    }

    #[test]
    fn sample_mean_matches_dirichlet_mean() {
        let s = sample_uniform_simplex(3, 100_000, 2024).unwrap();
        for m in 0..3 {
            let mean = s.iter().map(|w| w[m]).sum::<f64>() / s.len() as f64;
            assert!((mean - 1.0 / 3.0).abs() < 0.01, "coordinate {m} mean {mean}");
        }
    }

    #[test]
    fn lattice_sizes() {
        assert_eq!(lattice_weights(3, 10).unwrap().len(), 10);
        assert_eq!(lattice_weights(3, 9).unwrap().len(), 6);
        assert_eq!(lattice_weights(3, 1000).unwrap().len(), 990);
        assert!(lattice_weights(3, 2).is_err());
        let grid = weight_grid(3, 2000, 1).unwrap();
        assert_eq!(grid.len(), 2000);
        assert_eq!(grid[..990], lattice_weights(3, 1000).unwrap()[..]);
        assert_eq!(grid, weight_grid(3, 2000, 1).unwrap());
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_norm_bound(m in 1usize..=5, d in 1u32..=5, seed in any::<u64>()) {
            let set = MultiIndexSet::new(m, d).unwrap();
            for t in sample_uniform_simplex(m, 8, seed).unwrap() {
                let s: f64 = t.as_slice().iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
                let z = set.bernstein_vector(&t).unwrap();
                prop_assert!(z.iter().all(|&v| (0.0..=1.0).contains(&v)));
                prop_assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(z.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0);
            }
        }
    }
}
