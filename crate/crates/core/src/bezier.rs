//! Bezier simplices: evaluation, design matrices and least-squares fitting of
//! control points.

use nalgebra::{ColPivQR, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{MultiIndex, MultiIndexSet, WeightVector};

/// A fit is declared singular below this ratio of extreme singular values.
pub const SINGULAR_RATIO: f64 = 1e-10;

/// Polynomial map from the simplex into `R^L`, `b(t) = P^T z(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierSimplex {
    basis: MultiIndexSet,
    /// `|N^M_D|` rows by `L` columns, rows in canonical index order.
    control: DMatrix<f64>,
}

impl BezierSimplex {
    pub fn new(basis: MultiIndexSet, control: DMatrix<f64>) -> Result<Self> {
        if control.nrows() != basis.len() {
            return Err(Error::domain(format!(
                "control matrix has {} rows, basis has {} multi-indices",
                control.nrows(),
                basis.len()
            )));
        }
        if control.ncols() == 0 {
            return Err(Error::domain("ambient dimension L must be at least 1"));
        }
        if control.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("control points must be finite"));
        }
        Ok(BezierSimplex { basis, control })
    }

    pub fn zeros(basis: MultiIndexSet, dim: usize) -> Result<Self> {
        let rows = basis.len();
        Self::new(basis, DMatrix::zeros(rows, dim))
    }

    pub fn basis(&self) -> &MultiIndexSet {
        &self.basis
    }

    pub fn control_points(&self) -> &DMatrix<f64> {
        &self.control
    }

    pub fn objectives(&self) -> usize {
        self.basis.objectives()
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    pub fn dim(&self) -> usize {
        self.control.ncols()
    }

    pub fn evaluate(&self, t: &WeightVector) -> Result<Vec<f64>> {
        let z = self.basis.bernstein_vector(t)?;
        Ok(self.combine(&z))
    }

    /// `P^T z` for a precomputed Bernstein vector.
    pub(crate) fn combine(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (i, &zi) in z.iter().enumerate() {
            if zi == 0.0 {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += zi * self.control[(i, j)];
            }
        }
        out
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            objectives: self.objectives(),
            degree: self.degree(),
            dim: self.dim(),
            index_order: self.basis.indices().to_vec(),
            control_points: self
                .control
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        let basis = MultiIndexSet::new(doc.objectives, doc.degree)
            .map_err(|e| Error::Schema(e.to_string()))?;
        if doc.index_order.as_slice() != basis.indices() {
            return Err(Error::Schema(format!(
                "index_order does not match the canonical enumeration for M = {}, D = {}",
                doc.objectives, doc.degree
            )));
        }
        if doc.control_points.len() != basis.len() {
            return Err(Error::Schema(format!(
                "expected {} control points for M = {}, D = {}, found {}",
                basis.len(),
                doc.objectives,
                doc.degree,
                doc.control_points.len()
            )));
        }
        if let Some(bad) = doc.control_points.iter().position(|r| r.len() != doc.dim) {
            return Err(Error::Schema(format!(
                "control point {bad} has {} coordinates, L = {}",
                doc.control_points[bad].len(),
                doc.dim
            )));
        }
        let flat: Vec<f64> = doc.control_points.iter().flatten().copied().collect();
        let control = DMatrix::from_row_slice(basis.len(), doc.dim, &flat);
        BezierSimplex::new(basis, control).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        Self::from_document(&doc)
    }
}

/// On-disk model schema. Floats are written in shortest round-trip form, so
/// reading a written model reproduces every control point bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(rename = "M")]
    pub objectives: usize,
    #[serde(rename = "D")]
    pub degree: u32,
    #[serde(rename = "L")]
    pub dim: usize,
    pub index_order: Vec<MultiIndex>,
    pub control_points: Vec<Vec<f64>>,
}

/// Stacked Bernstein vectors of a weight batch, one row per weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    pub fn new(ts: &[WeightVector], basis: &MultiIndexSet) -> Result<Self> {
        if ts.is_empty() {
            return Err(Error::domain("design matrix needs at least one weight"));
        }
        let mut z = DMatrix::zeros(ts.len(), basis.len());
        let mut row = vec![0.0; basis.len()];
        for (n, t) in ts.iter().enumerate() {
            basis.bernstein_into(t, &mut row)?;
            for (i, v) in row.iter().enumerate() {
                z[(n, i)] = *v;
            }
        }
        Ok(DesignMatrix(z))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn row(&self, n: usize) -> Vec<f64> {
        self.0.row(n).iter().copied().collect()
    }
}

pub fn design_matrix(ts: &[WeightVector], basis: &MultiIndexSet) -> Result<DesignMatrix> {
    DesignMatrix::new(ts, basis)
}

/// Column-pivoted QR factorization of a design matrix together with its
/// singular values, reusable across right-hand sides.
pub struct LeastSquares {
    qr: ColPivQR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    singular_values: DVector<f64>,
    rows: usize,
    cols: usize,
}

impl LeastSquares {
    /// Factorizes `design`, failing if it is rank deficient or too short.
    pub fn new(design: &DesignMatrix) -> Result<Self> {
        let z = design.matrix();
        let (rows, cols) = z.shape();
        let singular_values = z.clone().singular_values();
        let sigma_max = singular_values.max();
        let sigma_min = if rows < cols { 0.0 } else { singular_values.min() };
        let ratio = if sigma_max > 0.0 { sigma_min / sigma_max } else { 0.0 };
        if rows < cols || ratio < SINGULAR_RATIO {
            return Err(Error::SingularFit { sigma_min, ratio });
        }
        Ok(LeastSquares {
            qr: ColPivQR::new(z.clone()),
            singular_values,
            rows,
            cols,
        })
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.min()
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.max()
    }

    /// Smallest eigenvalue of `Z^T Z`.
    pub fn gram_lambda_min(&self) -> f64 {
        self.sigma_min().powi(2)
    }

    /// `||(Z^T Z)^{-1}||_F`.
    pub fn inverse_gram_frobenius(&self) -> f64 {
        self.singular_values.iter().map(|s| s.powi(-4)).sum::<f64>().sqrt()
    }

    /// Minimizes `||rhs - Z P||_F` over `P`.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(rhs.nrows(), self.rows, "right-hand side row mismatch");
        let mut qtb = rhs.clone();
        self.qr.q_tr_mul(&mut qtb);
        let r = self.qr.r();
        let r_square = r.view((0, 0), (self.cols, self.cols));
        let top = qtb.rows(0, self.cols).into_owned();
        let mut sol = r_square
            .solve_upper_triangular(&top)
            .expect("nonsingular after conditioning check");
        self.qr.p().inv_permute_rows(&mut sol);
        sol
    }
}

/// Fits control points minimizing `(1/N) ||X - Z P||_F^2`.
pub fn fit_least_squares(
    basis: &MultiIndexSet,
    ts: &[WeightVector],
    xs: &[Vec<f64>],
) -> Result<BezierSimplex> {
    if ts.len() != xs.len() {
        return Err(Error::domain(format!(
            "{} weights but {} target points",
            ts.len(),
            xs.len()
        )));
    }
    let targets = points_to_matrix(xs)?;
    let design = DesignMatrix::new(ts, basis)?;
    let ls = LeastSquares::new(&design)?;
    BezierSimplex::new(basis.clone(), ls.solve(&targets))
}

/// Explicit normal-equation solution `(Z^T Z)^{-1} Z^T X`. Kept as an
/// independent reference for the QR route; not used on the hot path.
pub fn solve_normal_equations(design: &DesignMatrix, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let z = design.matrix();
    let gram = z.transpose() * z;
    let inv = gram.try_inverse().ok_or(Error::SingularFit {
        sigma_min: 0.0,
        ratio: 0.0,
    })?;
    Ok(inv * z.transpose() * rhs)
}

pub(crate) fn points_to_matrix(xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let first = xs
        .first()
        .ok_or_else(|| Error::domain("need at least one point"))?;
    let dim = first.len();
    if dim == 0 || xs.iter().any(|x| x.len() != dim) {
        return Err(Error::domain("points must share a nonzero dimension"));
    }
    let flat: Vec<f64> = xs.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(xs.len(), dim, &flat))
}
