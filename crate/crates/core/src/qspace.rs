//! Finite quasi-metric spaces: axiom validation, reverse and symmetrized
//! distances, triangular functions and potential shifts.
//!
//! Potential shifts use the forward convention
//! `d'(x, y) = d(x, y) + phi(x) - phi(y)`. The backward convention
//! `d'(x, y) = d(x, y) + phi(y) - phi(x)` is the same operation applied to
//! `-phi` and is not exposed separately.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::slip;

/// A potential on a finite space, aligned with its points.
pub type Potential = ScalarField;

/// Identifier of a point; JSON accepts integers or strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointLabel {
    Index(i64),
    Name(String),
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::Index(i) => write!(f, "{i}"),
            PointLabel::Name(s) => f.write_str(s),
        }
    }
}

fn default_t1() -> bool {
    true
}

/// Serialized layout: `{"points": [...], "d": [[...]], "t1": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawQuasiMetric {
    points: Vec<PointLabel>,
    d: Vec<Vec<f64>>,
    #[serde(default = "default_t1")]
    t1: bool,
}

/// `n` points with a distance matrix (row = from, column = to).
///
/// Construction only checks the matrix shape and that entries are finite and
/// nonnegative; the quasi-metric axioms are checked by [`validate_axioms`] and
/// by every operation that requires a valid space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuasiMetric", into = "RawQuasiMetric")]
pub struct FiniteQuasiMetric {
    points: Vec<PointLabel>,
    dmat: Vec<Vec<f64>>,
    t1_required: bool,
}

impl TryFrom<RawQuasiMetric> for FiniteQuasiMetric {
    type Error = Error;

    fn try_from(raw: RawQuasiMetric) -> Result<Self> {
        Self::with_labels(raw.points, raw.d, raw.t1)
    }
}

impl From<FiniteQuasiMetric> for RawQuasiMetric {
    fn from(q: FiniteQuasiMetric) -> Self {
        RawQuasiMetric { points: q.points, d: q.dmat, t1: q.t1_required }
    }
}

impl FiniteQuasiMetric {
    /// Points are labelled `0..n`; T1 is required.
    pub fn new(dmat: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..dmat.len() as i64).map(PointLabel::Index).collect();
        Self::with_labels(labels, dmat, true)
    }

    pub fn with_labels(points: Vec<PointLabel>, dmat: Vec<Vec<f64>>, t1_required: bool) -> Result<Self> {
        check_matrix(&dmat)?;
        if points.len() != dmat.len() {
            return Err(Error::LabelMismatch { labels: points.len(), size: dmat.len() });
        }
        Ok(Self { points, dmat, t1_required })
    }

    pub fn from_fn(n: usize, d: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new((0..n).map(|i| (0..n).map(|j| d(i, j)).collect()).collect())
    }

    /// Builds and requires every axiom to hold.
    pub fn checked(dmat: Vec<Vec<f64>>) -> Result<Self> {
        let q = Self::new(dmat)?;
        q.ensure_valid()?;
        Ok(q)
    }

    pub fn with_t1(mut self, t1_required: bool) -> Self {
        self.t1_required = t1_required;
        self
    }

    pub fn len(&self) -> usize {
        self.dmat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dmat.is_empty()
    }

    pub fn points(&self) -> &[PointLabel] {
        &self.points
    }

    pub fn t1_required(&self) -> bool {
        self.t1_required
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dmat
    }

    #[inline]
    pub fn d(&self, from: usize, to: usize) -> f64 {
        self.dmat[from][to]
    }

    pub fn index_of(&self, label: &PointLabel) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn check_point(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::UnknownPoint { index, len: self.len() });
        }
        Ok(())
    }

    pub fn validate(&self) -> ValidationReport {
        validate_axioms(self)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidQuasiMetric(format!(
                "{v} ({} violation(s) in total)",
                report.violations.len()
            ))),
        }
    }

    /// `d(x, y) == d(y, x)` for every pair.
    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (i + 1..n).all(|j| self.dmat[i][j] == self.dmat[j][i]))
    }

    /// Same distances, points relabelled so that point `i` of the result is
    /// point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.len();
        if perm.len() != n {
            return Err(Error::SizeMismatch { x: perm.len(), y: n });
        }
        let dmat = perm.iter().map(|&a| perm.iter().map(|&b| self.dmat[a][b]).collect()).collect();
        let points = perm.iter().map(|&a| self.points[a].clone()).collect();
        Self::with_labels(points, dmat, self.t1_required)
    }

    /// `c * d`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let dmat = self.dmat.iter().map(|row| row.iter().map(|v| c * v).collect()).collect();
        Self::with_labels(self.points.clone(), dmat, self.t1_required)
    }
}

fn check_matrix(dmat: &[Vec<f64>]) -> Result<()> {
    let n = dmat.len();
    for (i, row) in dmat.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonSquareMatrix { row: i, len: row.len(), expected: n });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { from: i, to: j, value: v });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry { from: i, to: j, value: v });
            }
        }
    }
    Ok(())
}

/// One failed axiom with its witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum Violation {
    /// `d(x, x) != 0`.
    Diagonal { point: usize, value: f64 },
    /// `d(x, y) = d(y, x) = 0` with `x != y`.
    Separation { x: usize, y: usize },
    /// `d(x, y) = 0` with `x != y` on a space that requires T1.
    T1 { x: usize, y: usize },
    /// `d(x, y) > d(x, z) + d(z, y)`; the witness is `(x, z, y)`.
    Triangle { witness: [usize; 3], direct: f64, via: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Diagonal { point, value } => write!(f, "d({point},{point}) = {value} != 0"),
            Violation::Separation { x, y } => write!(f, "d({x},{y}) = d({y},{x}) = 0"),
            Violation::T1 { x, y } => write!(f, "d({x},{y}) = 0 on a T1 space"),
            Violation::Triangle { witness: [x, z, y], direct, via } => {
                write!(f, "d({x},{y}) = {direct} > d({x},{z}) + d({z},{y}) = {via}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated axiom, compared exactly.
pub fn validate_axioms(d: &FiniteQuasiMetric) -> ValidationReport {
    let n = d.len();
    let m = &d.dmat;
    let mut violations = Vec::new();
    for i in 0..n {
        if m[i][i] != 0.0 {
            violations.push(Violation::Diagonal { point: i, value: m[i][i] });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || m[i][j] != 0.0 {
                continue;
            }
            if i < j && m[j][i] == 0.0 {
                violations.push(Violation::Separation { x: i, y: j });
            }
            if d.t1_required {
                violations.push(Violation::T1 { x: i, y: j });
            }
        }
    }
    for x in 0..n {
        for z in 0..n {
            for y in 0..n {
                let via = m[x][z] + m[z][y];
                if m[x][y] > via {
                    violations.push(Violation::Triangle { witness: [x, z, y], direct: m[x][y], via });
                }
            }
        }
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeriveMode {
    Reverse,
    Symmetric,
}

/// Reverse distance `d(y, x)` or symmetrized distance `max(d(x,y), d(y,x))`.
pub fn derive(d: &FiniteQuasiMetric, mode: DeriveMode) -> Result<FiniteQuasiMetric> {
    d.ensure_valid()?;
    let n = d.len();
    let m = &d.dmat;
    let dmat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match mode {
                    DeriveMode::Reverse => m[j][i],
                    DeriveMode::Symmetric => m[i][j].max(m[j][i]),
                })
                .collect()
        })
        .collect();
    FiniteQuasiMetric::with_labels(d.points.clone(), dmat, d.t1_required)
}

/// `d(x1, x2) + d(x2, x3) - d(x1, x3)`.
pub fn triangular(d: &FiniteQuasiMetric, x1: usize, x2: usize, x3: usize) -> Result<f64> {
    d.check_point(x1)?;
    d.check_point(x2)?;
    d.check_point(x3)?;
    Ok(d.d(x1, x2) + d.d(x2, x3) - d.d(x1, x3))
}

/// `d'(x, y) = d(x, y) + phi(x) - phi(y)`.
///
/// Requires `||phi|_S <= 1` on `d`; the steepest pair is reported otherwise.
/// When the bound is attained the shifted distance has zeros off the diagonal,
/// so the result only keeps the T1 requirement if no such zero appears.
/// For potentials that are not exactly representable sums, the triangle
/// inequality of the result holds up to floating rounding.
pub fn shift_quasimetric(d: &FiniteQuasiMetric, phi: &Potential) -> Result<FiniteQuasiMetric> {
    d.ensure_valid()?;
    phi.expect_len(d.len())?;
    let steep = slip::forward_witness(phi, d)?;
    if let Some((from, to, ratio)) = steep {
        if ratio > 1.0 {
            return Err(Error::PotentialTooSteep { from, to, ratio });
        }
    }
    let n = d.len();
    let p = phi.values();
    let dmat: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { (d.d(i, j) + p[i] - p[j]).max(0.0) })
                .collect()
        })
        .collect();
    let has_zero = (0..n).any(|i| (0..n).any(|j| i != j && dmat[i][j] == 0.0));
    // valid by construction; re-validating exactly would reject
    // last-bit rounding of non-dyadic potentials
    FiniteQuasiMetric::with_labels(d.points.clone(), dmat, d.t1_required && !has_zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn q3() -> FiniteQuasiMetric {
        FiniteQuasiMetric::new(vec![vec![0.0, 1.0, 2.0], vec![2.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap()
    }

    /// Independent check: every triple, written out without the validator.
    fn all_triangles_hold(m: &[Vec<f64>]) -> bool {
        let n = m.len();
        itertools::iproduct!(0..n, 0..n, 0..n).all(|(i, j, k)| m[i][j] <= m[i][k] + m[k][j])
    }

    #[test]
    fn q3_is_a_valid_t1_quasi_metric() {
        let q = q3();
        assert!(all_triangles_hold(q.matrix()));
        assert!(validate_axioms(&q).is_valid());
    }

    #[test]
    fn single_point_space_is_valid() {
        let q = FiniteQuasiMetric::new(vec![vec![0.0]]).unwrap();
        assert!(validate_axioms(&q).is_valid());
    }

    #[test]
    fn broken_triangle_reports_witness() {
        let q = FiniteQuasiMetric::new(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]])
            .unwrap();
        let report = validate_axioms(&q);
        assert!(report
            .violations
            .contains(&Violation::Triangle { witness: [0, 1, 2], direct: 3.0, via: 2.0 }));
        assert!(q.ensure_valid().is_err());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            FiniteQuasiMetric::new(vec![vec![0.0, 1.0], vec![0.0]]),
            Err(Error::NonSquareMatrix { row: 1, .. })
        ));
        assert!(matches!(
            FiniteQuasiMetric::new(vec![vec![0.0, -1.0], vec![1.0, 0.0]]),
            Err(Error::NegativeEntry { from: 0, to: 1, .. })
        ));
        assert!(matches!(
            FiniteQuasiMetric::new(vec![vec![0.0, f64::NAN], vec![1.0, 0.0]]),
            Err(Error::NonFiniteEntry { .. })
        ));
    }

    #[test]
    fn t1_and_separation() {
        let q = FiniteQuasiMetric::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(validate_axioms(&q).violations, vec![Violation::T1 { x: 0, y: 1 }]);
        assert!(validate_axioms(&q.clone().with_t1(false)).is_valid());
        let z = FiniteQuasiMetric::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap().with_t1(false);
        assert_eq!(validate_axioms(&z).violations, vec![Violation::Separation { x: 0, y: 1 }]);
    }

    #[test]
    fn reverse_and_symmetric() {
        let q = q3();
        let r = derive(&q, DeriveMode::Reverse).unwrap();
        assert_eq!(r.matrix(), &[vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]);
        let s = derive(&q, DeriveMode::Symmetric).unwrap();
        assert_eq!((s.d(0, 1), s.d(0, 2), s.d(1, 2)), (2.0, 2.0, 1.0));
        assert!(s.is_symmetric());
        let m = FiniteQuasiMetric::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(derive(&m, DeriveMode::Reverse).unwrap(), m);
        assert_eq!(derive(&m, DeriveMode::Symmetric).unwrap(), m);
    }

    #[test]
    fn triangular_values() {
        let q = q3();
        assert_eq!(triangular(&q, 0, 1, 2).unwrap(), 0.0);
        assert_eq!(triangular(&q, 1, 0, 2).unwrap(), 3.0);
        assert_eq!(triangular(&q, 2, 2, 2).unwrap(), 0.0);
        assert!(matches!(triangular(&q, 0, 1, 3), Err(Error::UnknownPoint { index: 3, len: 3 })));
    }

    #[test]
    fn shift_q3() {
        let q = q3();
        let s = shift_quasimetric(&q, &ScalarField::new(vec![0.0, 0.5, 0.2])).unwrap();
        let expect = [((0, 1), 0.5), ((1, 0), 2.5), ((1, 2), 1.3), ((2, 1), 0.7), ((0, 2), 1.8), ((2, 0), 1.2)];
        for ((i, j), v) in expect {
            assert!((s.d(i, j) - v).abs() < 1e-12, "d'({i},{j}) = {}", s.d(i, j));
        }
        assert!(s.validate().is_valid());
    }

    #[test]
    fn constant_shift_is_identity() {
        let q = q3();
        assert_eq!(shift_quasimetric(&q, &ScalarField::constant(3, 4.25)).unwrap(), q);
    }

    #[test]
    fn steep_potential_is_rejected() {
        let err = shift_quasimetric(&q3(), &ScalarField::new(vec![0.0, 1.5, 0.0])).unwrap_err();
        assert_eq!(err, Error::PotentialTooSteep { from: 0, to: 1, ratio: 1.5 });
    }

    #[test]
    fn extremal_potential_drops_t1() {
        let s = shift_quasimetric(&q3(), &ScalarField::new(vec![0.0, 1.0, 0.0])).unwrap();
        assert_eq!(s.d(0, 1), 0.0);
        assert!(!s.t1_required());
    }

    #[test]
    fn json_layout() {
        let q: FiniteQuasiMetric =
            serde_json::from_str(r#"{"points": [0, "b", 2], "d": [[0,1,2],[2,0,1],[1,1,0]], "t1": true}"#).unwrap();
        assert_eq!(q.points()[1], PointLabel::Name("b".into()));
        let v = serde_json::to_value(&q).unwrap();
        assert_eq!(v["d"][1][0], 2.0);
        assert!(serde_json::from_str::<FiniteQuasiMetric>(r#"{"points": [0], "d": [[0, 1]]}"#).is_err());
    }
}
