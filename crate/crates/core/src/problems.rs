//! Benchmark problems: scaled-MED, skew-MMED and skew-MMMD, their Jacobians,
//! and weighted-sum scalarization.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::simplex::WeightVector;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    ScaledMed,
    SkewMed {
        exponents: Vec<f64>,
    },
    SkewMmd {
        /// Diagonals of the scale matrices `A_m`.
        scales: Vec<Vec<f64>>,
        centers: Vec<Vec<f64>>,
        exponents: Vec<f64>,
    },
}

/// A differentiable `M`-objective problem on `R^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    name: String,
    objectives: usize,
    variables: usize,
    kind: Kind,
}

/// `p_m = exp(2(m-1)/(M-1) - 1)` for `m = 1..=M`.
pub fn skew_exponents(objectives: usize) -> Vec<f64> {
    let denom = (objectives - 1) as f64;
    (0..objectives)
        .map(|m| (2.0 * m as f64 / denom - 1.0).exp())
        .collect()
}

fn unit(dim: usize, m: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[m] = 1.0;
    e
}

/// Scaled-MED: three quadratics on `R^3` with a closed-form Pareto map.
pub fn scaled_med() -> Problem {
    Problem {
        name: "scaled-med".into(),
        objectives: 3,
        variables: 3,
        kind: Kind::ScaledMed,
    }
}

/// Skew-MMED: `f_m(x) = (||x - e_m||^2 / sqrt 2)^{p_m}`.
pub fn skew_mmed(objectives: usize) -> Result<Problem> {
    if objectives < 2 {
        return Err(Error::domain("skew-MMED needs M >= 2"));
    }
    Ok(Problem {
        name: if objectives == 3 {
            "skew-3med".into()
        } else {
            format!("skew-med:{objectives}")
        },
        objectives,
        variables: objectives,
        kind: Kind::SkewMed {
            exponents: skew_exponents(objectives),
        },
    })
}

/// Skew-MMMD with explicit parameters: `f_m(x) = ||A_m (x - c_m)||^{p_m}`,
/// where `A_m = diag(scales[m])`.
pub fn skew_mmmd(scales: Vec<Vec<f64>>, centers: Vec<Vec<f64>>, exponents: Vec<f64>) -> Result<Problem> {
    let objectives = exponents.len();
    if objectives == 0 || scales.len() != objectives || centers.len() != objectives {
        return Err(Error::domain(
            "skew-MMMD needs one scale diagonal, center and exponent per objective",
        ));
    }
    let variables = centers[0].len();
    if variables == 0
        || centers.iter().any(|c| c.len() != variables)
        || scales.iter().any(|a| a.len() != variables)
    {
        return Err(Error::domain("skew-MMMD scales and centers must share one dimension"));
    }
    if let Some(p) = exponents.iter().find(|p| !p.is_finite() || **p <= 0.0) {
        return Err(Error::domain(format!("skew-MMMD exponents must be positive, got {p}")));
    }
    if scales.iter().flatten().chain(centers.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::domain("skew-MMMD parameters must be finite"));
    }
    Ok(Problem {
        name: format!("skew-mmd-custom:{objectives}"),
        objectives,
        variables,
        kind: Kind::SkewMmd {
            scales,
            centers,
            exponents,
        },
    })
}

/// The default skew-MMMD instance: `A_m` is 3/5 on the `m`-th diagonal entry
/// and 4/5 elsewhere, `c_m = e_m`, and skew exponents. For `M = 3` this is
/// skew-3MMD.
pub fn skew_mmmd_default(objectives: usize) -> Result<Problem> {
    if objectives < 2 {
        return Err(Error::domain("skew-MMMD default instance needs M >= 2"));
    }
    let scales = (0..objectives)
        .map(|m| (0..objectives).map(|j| if j == m { 0.6 } else { 0.8 }).collect())
        .collect();
    let centers = (0..objectives).map(|m| unit(objectives, m)).collect();
    let mut p = skew_mmmd(scales, centers, skew_exponents(objectives))?;
    p.name = if objectives == 3 {
        "skew-3mmd".into()
    } else {
        format!("skew-mmd:{objectives}")
    };
    Ok(p)
}

/// Closed-form minimizer of the `t`-weighted sum of scaled-MED objectives.
pub fn scaled_med_pareto(t: &WeightVector) -> [f64; 3] {
    let (t1, t2, t3) = (t[0], t[1], t[2]);
    [
        (2.0 * t2 + 3.0 * t3) / (t1 + 2.0 * t2 + 3.0 * t3),
        (3.0 * t1 + 2.0 * t3) / (3.0 * t1 + t2 + 2.0 * t3),
        (2.0 * t1 + 3.0 * t2 - t3) / (2.0 * t1 + 3.0 * t2 + t3),
    ]
}

impl Problem {
    /// Looks up `scaled-med`, `skew-3med`, `skew-3mmd`, `skew-med:M` or `skew-mmd:M`.
    pub fn from_name(name: &str) -> Result<Problem> {
        let parse_m = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Config(format!("bad objective count in problem name {name:?}")))
        };
        match name {
            "scaled-med" => Ok(scaled_med()),
            "skew-3med" => skew_mmed(3),
            "skew-3mmd" => skew_mmmd_default(3),
            _ => {
                if let Some(m) = name.strip_prefix("skew-med:") {
                    skew_mmed(parse_m(m)?).map_err(|e| Error::Config(e.to_string()))
                } else if let Some(m) = name.strip_prefix("skew-mmd:") {
                    skew_mmmd_default(parse_m(m)?).map_err(|e| Error::Config(e.to_string()))
                } else {
                    Err(Error::Config(format!(
                        "unknown problem {name:?} (expected scaled-med, skew-3med, skew-3mmd, skew-med:M, skew-mmd:M)"
                    )))
                }
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn objectives(&self) -> usize {
        self.objectives
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn has_pareto_map(&self) -> bool {
        matches!(self.kind, Kind::ScaledMed)
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.variables {
            return Err(Error::domain(format!(
                "{} expects {} variables, got {}",
                self.name,
                self.variables,
                x.len()
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        Ok(match &self.kind {
            Kind::ScaledMed => {
                let (a, b, c) = (x[0], x[1], x[2]);
                vec![
                    a * a + 3.0 * (b - 1.0).powi(2) + 2.0 * (c - 1.0).powi(2),
                    2.0 * (a - 1.0).powi(2) + b * b + 3.0 * (c - 1.0).powi(2),
                    3.0 * (a - 1.0).powi(2) + 2.0 * (b - 1.0).powi(2) + (c + 1.0).powi(2),
                ]
            }
            Kind::SkewMed { exponents } => exponents
                .iter()
                .enumerate()
                .map(|(m, p)| (dist2_to_unit(x, m) / SQRT_2).powf(*p))
                .collect(),
            Kind::SkewMmd {
                scales,
                centers,
                exponents,
            } => (0..self.objectives)
                .map(|m| scaled_dist2(x, &scales[m], &centers[m]).sqrt().powf(exponents[m]))
                .collect(),
        })
    }

    /// Gradient of objective `m` at `x`. At a norm-power center the zero
    /// vector is returned.
    pub fn gradient(&self, m: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        if m >= self.objectives {
            return Err(Error::domain(format!("objective {m} out of range")));
        }
        Ok(self.gradient_unchecked(m, x))
    }

    fn gradient_unchecked(&self, m: usize, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::ScaledMed => {
                let (a, b, c) = (x[0], x[1], x[2]);
                match m {
                    0 => vec![2.0 * a, 6.0 * (b - 1.0), 4.0 * (c - 1.0)],
                    1 => vec![4.0 * (a - 1.0), 2.0 * b, 6.0 * (c - 1.0)],
                    _ => vec![6.0 * (a - 1.0), 4.0 * (b - 1.0), 2.0 * (c + 1.0)],
                }
            }
            Kind::SkewMed { exponents } => {
                let s = dist2_to_unit(x, m) / SQRT_2;
                if s == 0.0 {
                    return vec![0.0; x.len()];
                }
                let p = exponents[m];
                let scale = p * s.powf(p - 1.0) * SQRT_2;
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| scale * (v - if j == m { 1.0 } else { 0.0 }))
                    .collect()
            }
            Kind::SkewMmd {
                scales,
                centers,
                exponents,
            } => {
                let r2 = scaled_dist2(x, &scales[m], &centers[m]);
                if r2 == 0.0 {
                    return vec![0.0; x.len()];
                }
                let p = exponents[m];
                let scale = p * r2.powf(0.5 * p - 1.0);
                x.iter()
                    .zip(&scales[m])
                    .zip(&centers[m])
                    .map(|((v, a), c)| scale * a * a * (v - c))
                    .collect()
            }
        }
    }

    /// `J_f(x)`, one gradient per row.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_x(x)?;
        let mut j = DMatrix::zeros(self.objectives, self.variables);
        for m in 0..self.objectives {
            for (l, g) in self.gradient_unchecked(m, x).into_iter().enumerate() {
                j[(m, l)] = g;
            }
        }
        Ok(j)
    }

    /// `J_f(x)^T t`.
    pub fn weighted_gradient(&self, x: &[f64], t: &WeightVector) -> Result<Vec<f64>> {
        self.check_x(x)?;
        self.check_t(t)?;
        let mut out = vec![0.0; self.variables];
        for m in 0..self.objectives {
            if t[m] == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(self.gradient_unchecked(m, x)) {
                *o += t[m] * g;
            }
        }
        Ok(out)
    }

    fn check_t(&self, t: &WeightVector) -> Result<()> {
        if t.dim() != self.objectives {
            return Err(Error::domain(format!(
                "{} has {} objectives, weight has {} entries",
                self.name,
                self.objectives,
                t.dim()
            )));
        }
        Ok(())
    }

    /// The analytic map from weights to minimizers of the scalarized problem,
    /// when one is known.
    pub fn pareto_map(&self, t: &WeightVector) -> Result<Option<Vec<f64>>> {
        self.check_t(t)?;
        Ok(match self.kind {
            Kind::ScaledMed => Some(scaled_med_pareto(t).to_vec()),
            _ => None,
        })
    }

    /// Individual minimizer of each objective.
    pub fn anchors(&self) -> Vec<Vec<f64>> {
        match &self.kind {
            Kind::ScaledMed => vec![
                vec![0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0],
                vec![1.0, 1.0, -1.0],
            ],
            Kind::SkewMed { .. } => (0..self.objectives)
                .map(|m| unit(self.variables, m))
                .collect(),
            Kind::SkewMmd { centers, .. } => centers.clone(),
        }
    }

    pub fn scalarize(&self, t: WeightVector) -> Result<ScalarizedObjective<'_>> {
        self.check_t(&t)?;
        Ok(ScalarizedObjective { problem: self, t })
    }
}

fn dist2_to_unit(x: &[f64], m: usize) -> f64 {
    x.iter()
        .enumerate()
        .map(|(j, &v)| (v - if j == m { 1.0 } else { 0.0 }).powi(2))
        .sum()
}

fn scaled_dist2(x: &[f64], scale: &[f64], center: &[f64]) -> f64 {
    x.iter()
        .zip(scale)
        .zip(center)
        .map(|((v, a), c)| (a * (v - c)).powi(2))
        .sum()
}

/// Weighted sum `sum_m t_m f_m` of a problem's objectives.
#[derive(Debug, Clone)]
pub struct ScalarizedObjective<'a> {
    problem: &'a Problem,
    t: WeightVector,
}

impl<'a> ScalarizedObjective<'a> {
    pub fn problem(&self) -> &'a Problem {
        self.problem
    }

    pub fn weight(&self) -> &WeightVector {
        &self.t
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .problem
            .evaluate(x)?
            .iter()
            .zip(self.t.as_slice())
            .map(|(f, t)| f * t)
            .sum())
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.problem.weighted_gradient(x, &self.t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::sample_uniform_simplex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    /// Central differences with step `h`.
    fn fd_jacobian(p: &Problem, x: &[f64], h: f64) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(p.objectives(), p.variables());
        for l in 0..p.variables() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[l] += h;
            xm[l] -= h;
            let (fp, fm) = (p.evaluate(&xp).unwrap(), p.evaluate(&xm).unwrap());
            for m in 0..p.objectives() {
                j[(m, l)] = (fp[m] - fm[m]) / (2.0 * h);
            }
        }
        j
    }

    fn check_jacobian(p: &Problem, seed: u64, points: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchors = p.anchors();
        let mut checked = 0;
        while checked < points {
            let x: Vec<f64> = (0..p.variables()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let near_center = anchors.iter().any(|c| {
                c.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= 0.1
            });
            if near_center && p.name() != "scaled-med" {
                continue;
            }
            let analytic = p.jacobian(&x).unwrap();
            let numeric = fd_jacobian(p, &x, 1e-6);
            for m in 0..p.objectives() {
                let a = analytic.row(m);
                let n = numeric.row(m);
                let rel = (a - n).norm() / a.norm().max(1e-8);
                assert!(rel < 1e-5, "{} objective {m} at {x:?}: {rel}", p.name());
            }
            checked += 1;
        }
    }

    #[test]
    fn scaled_med_values() {
        let p = scaled_med();
        assert_eq!(p.evaluate(&[0.0, 1.0, 1.0]).unwrap(), vec![0.0, 3.0, 7.0]);
        let j = p.jacobian(&[0.0, 1.0, 1.0]).unwrap();
        assert_eq!(j.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0; 3]);
        assert_eq!(
            p.pareto_map(&WeightVector::vertex(3, 0)).unwrap().unwrap(),
            vec![0.0, 1.0, 1.0]
        );
    }

    #[test]
    fn scaled_med_barycenter_matches_descent() {
        // plain gradient descent on the convex quadratic, independent of the closed form
        let p = scaled_med();
        let t = WeightVector::barycenter(3);
        let mut x = vec![0.0; 3];
        for _ in 0..100_000 {
            let g = p.weighted_gradient(&x, &t).unwrap();
            if g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-10 {
                break;
            }
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= 0.2 * gi;
            }
        }
        let closed = scaled_med_pareto(&t);
        let expect = [5.0 / 6.0, 5.0 / 6.0, 2.0 / 3.0];
        for l in 0..3 {
            assert!((closed[l] - expect[l]).abs() < 1e-15);
            assert!((closed[l] - x[l]).abs() < 1e-8);
        }
    }

    #[test]
    fn scaled_med_map_is_stationary() {
        let p = scaled_med();
        for t in sample_uniform_simplex(3, 100, 42).unwrap() {
            let x = scaled_med_pareto(&t);
            let g = p.weighted_gradient(&x, &t).unwrap();
            assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-9);
        }
    }

    #[test]
    fn skew_med_values() {
        let p = skew_mmed(3).unwrap();
        let expo = skew_exponents(3);
        assert!((expo[0] - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(expo[1], 1.0);
        assert!((expo[2] - 1.0f64.exp()).abs() < 1e-15);
        let f = p.evaluate(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f[0], 0.0);
        assert!((f[1] - SQRT_2).abs() < 1e-15);
        assert!((f[2] - SQRT_2.powf(1.0f64.exp())).abs() < 1e-14);
        assert!(skew_mmed(1).is_err());
        check_jacobian(&p, 1, 20);
    }

    #[test]
    fn skew_mmd_values() {
        let p = skew_mmmd_default(3).unwrap();
        let f = p.evaluate(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f[0], 0.0);
        assert!((f[1] - 1.0).abs() < 1e-15);
        check_jacobian(&p, 2, 20);
        // zero gradient exactly at centers
        for m in 0..3 {
            assert_eq!(p.gradient(m, &unit(3, m)).unwrap(), vec![0.0; 3]);
        }
        assert!(skew_mmmd(vec![vec![1.0]], vec![vec![0.0]], vec![0.0]).is_err());
        assert!(skew_mmmd(vec![vec![1.0]], vec![vec![0.0]], vec![-1.0]).is_err());
        assert!(skew_mmmd(vec![vec![1.0, 1.0]], vec![vec![0.0]], vec![1.0]).is_err());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        for name in ["scaled-med", "skew-3med", "skew-3mmd", "skew-med:4", "skew-mmd:5"] {
            check_jacobian(&Problem::from_name(name).unwrap(), 7, 100);
        }
    }

    #[test]
    fn registry() {
        assert_eq!(Problem::from_name("skew-3mmd").unwrap().name(), "skew-3mmd");
        assert_eq!(Problem::from_name("skew-med:4").unwrap().objectives(), 4);
        assert!(matches!(Problem::from_name("zdt1"), Err(Error::Config(_))));
        assert!(Problem::from_name("skew-med:x").is_err());
        assert!(Problem::from_name("skew-med:1").is_err());
    }

    #[test]
    fn scalarization() {
        let p = scaled_med();
        let x = [0.3, -0.7, 1.9];
        for m in 0..3 {
            let s = p.scalarize(WeightVector::vertex(3, m)).unwrap();
            assert_eq!(s.gradient(&x).unwrap(), p.gradient(m, &x).unwrap());
        }
        let a = w(&[0.2, 0.3, 0.5]);
        let b = w(&[0.6, 0.1, 0.3]);
        let mid = w(&[0.4, 0.2, 0.4]);
        let va = p.scalarize(a).unwrap().value(&x).unwrap();
        let vb = p.scalarize(b).unwrap().value(&x).unwrap();
        let vm = p.scalarize(mid).unwrap().value(&x).unwrap();
        assert!((vm - 0.5 * (va + vb)).abs() < 1e-12);
        assert!(p.scalarize(w(&[0.5, 0.5])).is_err());
        assert!(p.evaluate(&[1.0]).is_err());
    }

    #[test]
    fn objectives_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in ["scaled-med", "skew-3med", "skew-3mmd"] {
            let p = Problem::from_name(name).unwrap();
            for _ in 0..200 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                assert!(p.evaluate(&x).unwrap().iter().all(|&f| f >= 0.0));
            }
        }
    }
}
