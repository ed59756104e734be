//! Soft confusion matrices.
//!
//! Rows are reference classes, columns predicted classes. Element `(i, j)`
//! sums the conjunction of reference membership `i` and predicted membership
//! `j` over all samples. Sums run in input order with compensated
//! accumulation, so the same data always gives the same bits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::membership::MembershipMatrix;
use crate::operators::AndOperator;
use crate::sum::{self, Accumulator};

/// Which conjunction produced a matrix, or which recombination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Strong,
    Product,
    Weak,
    /// Weak diagonal with strong off-diagonal: best case.
    #[serde(rename = "opt")]
    Optimistic,
    /// Strong diagonal with weak off-diagonal: worst case.
    #[serde(rename = "pess")]
    Pessimistic,
}

impl From<AndOperator> for MatrixKind {
    fn from(op: AndOperator) -> Self {
        match op {
            AndOperator::Strong => MatrixKind::Strong,
            AndOperator::Product => MatrixKind::Product,
            AndOperator::Weak => MatrixKind::Weak,
        }
    }
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Strong => "strong",
            MatrixKind::Product => "product",
            MatrixKind::Weak => "weak",
            MatrixKind::Optimistic => "opt",
            MatrixKind::Pessimistic => "pess",
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    counts: Vec<f64>,
    n_samples: usize,
    kind: MatrixKind,
    class_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
    pub total: f64,
}

impl ConfusionMatrix {
    pub fn build(reference: &MembershipMatrix, prediction: &MembershipMatrix, op: AndOperator) -> Result<Self> {
        reference.same_layout(prediction)?;
        let k = reference.n_classes();
        let mut acc = vec![Accumulator::default(); k * k];
        for (r, p) in reference.rows().zip(prediction.rows()) {
            for i in 0..k {
                for j in 0..k {
                    acc[i * k + j].add(op.apply(r[i], p[j]));
                }
            }
        }
        Ok(ConfusionMatrix {
            counts: acc.iter().map(Accumulator::value).collect(),
            n_samples: reference.n_samples(),
            kind: op.into(),
            class_names: reference.class_names().to_vec(),
        })
    }

    /// Elementwise sum, e.g. over the folds of one cross-validation run.
    pub fn pool(matrices: &[ConfusionMatrix]) -> Result<Self> {
        let first = matrices.first().ok_or_else(|| Error::Shape("nothing to pool".into()))?;
        for m in &matrices[1..] {
            if m.kind != first.kind {
                return Err(Error::MixedOperator(first.kind.to_string(), m.kind.to_string()));
            }
            if m.class_names != first.class_names {
                return Err(Error::ClassNameMismatch {
                    left: first.class_names.clone(),
                    right: m.class_names.clone(),
                });
            }
        }
        let counts = (0..first.counts.len())
            .map(|e| sum::sum(matrices.iter().map(|m| m.counts[e])))
            .collect();
        Ok(ConfusionMatrix {
            counts,
            n_samples: matrices.iter().map(|m| m.n_samples).sum(),
            kind: first.kind,
            class_names: first.class_names.clone(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn get(&self, reference: usize, predicted: usize) -> f64 {
        self.counts[reference * self.n_classes() + predicted]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.counts.chunks(self.n_classes())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_classes()).map(|g| self.get(g, g)).collect()
    }

    pub fn marginals(&self) -> Marginals {
        let k = self.n_classes();
        Marginals {
            row_sums: self.rows().map(|row| sum::sum(row.iter().copied())).collect(),
            col_sums: (0..k).map(|j| sum::sum(self.rows().map(|row| row[j]))).collect(),
            total: sum::sum(self.counts.iter().copied()),
        }
    }

    /// Splits weak and strong matrices of the same data into the
    /// optimistic and pessimistic matrices.
    pub fn recombine_opt_pess(weak: &ConfusionMatrix, strong: &ConfusionMatrix) -> Result<(Self, Self)> {
        check_pair(weak, MatrixKind::Weak, strong, MatrixKind::Strong)?;
        Ok((
            weak.mix_diagonal(strong, MatrixKind::Optimistic),
            strong.mix_diagonal(weak, MatrixKind::Pessimistic),
        ))
    }

    /// Inverse of [`recombine_opt_pess`](Self::recombine_opt_pess).
    pub fn split_opt_pess(opt: &ConfusionMatrix, pess: &ConfusionMatrix) -> Result<(Self, Self)> {
        check_pair(opt, MatrixKind::Optimistic, pess, MatrixKind::Pessimistic)?;
        Ok((
            opt.mix_diagonal(pess, MatrixKind::Weak),
            pess.mix_diagonal(opt, MatrixKind::Strong),
        ))
    }

    /// Diagonal from `self`, off-diagonal elements from `other`.
    fn mix_diagonal(&self, other: &ConfusionMatrix, kind: MatrixKind) -> ConfusionMatrix {
        let k = self.n_classes();
        let counts = (0..k * k)
            .map(|e| {
                if e / k == e % k {
                    self.counts[e]
                } else {
                    other.counts[e]
                }
            })
            .collect();
        ConfusionMatrix {
            counts,
            n_samples: self.n_samples,
            kind,
            class_names: self.class_names.clone(),
        }
    }
}

fn check_pair(a: &ConfusionMatrix, a_kind: MatrixKind, b: &ConfusionMatrix, b_kind: MatrixKind) -> Result<()> {
    if a.kind != a_kind || b.kind != b_kind {
        return Err(Error::MixedProvenance(format!(
            "expected {a_kind} and {b_kind} matrices, got {} and {}",
            a.kind, b.kind
        )));
    }
    if a.class_names != b.class_names {
        return Err(Error::MixedProvenance(format!(
            "class names {:?} vs {:?}",
            a.class_names, b.class_names
        )));
    }
    if a.n_samples != b.n_samples {
        return Err(Error::MixedProvenance(format!(
            "{} vs {} samples",
            a.n_samples, b.n_samples
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membership::{Tolerances, World};

    fn mm(rows: &[Vec<f64>]) -> MembershipMatrix {
        let names = (0..rows[0].len()).map(|i| format!("c{i}")).collect();
        MembershipMatrix::validate(rows, names, World::Closed, Tolerances::default()).unwrap()
    }

    fn assert_close(cm: &ConfusionMatrix, expected: &[[f64; 2]; 2]) {
        for (i, row) in expected.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert!((cm.get(i, j) - e).abs() < 1e-12, "({i},{j}): {} vs {e}", cm.get(i, j));
            }
        }
    }

    #[test]
    fn crisp_misclassification() {
        let r = mm(&[vec![1.0, 0.0]]);
        let p = mm(&[vec![0.0, 1.0]]);
        for op in AndOperator::ALL {
            let cm = ConfusionMatrix::build(&r, &p, op).unwrap();
            assert_close(&cm, &[[0.0, 1.0], [0.0, 0.0]]);
            assert_eq!(cm.n_samples(), 1);
        }
    }

    #[test]
    fn single_soft_sample_product() {
        let r = mm(&[vec![0.5, 0.5]]);
        let p = mm(&[vec![0.8, 0.2]]);
        let cm = ConfusionMatrix::build(&r, &p, AndOperator::Product).unwrap();
        assert_close(&cm, &[[0.4, 0.1], [0.4, 0.1]]);
    }

    #[test]
    fn two_samples_weak() {
        let r = mm(&[vec![1.0, 0.0], vec![0.5, 0.5]]);
        let p = mm(&[vec![0.8, 0.2], vec![0.6, 0.4]]);
        let cm = ConfusionMatrix::build(&r, &p, AndOperator::Weak).unwrap();
        assert_close(&cm, &[[1.3, 0.6], [0.5, 0.4]]);
    }

    #[test]
    fn recombination_example() {
        let r = mm(&[vec![0.5, 0.5]]);
        let p = mm(&[vec![0.8, 0.2]]);
        let weak = ConfusionMatrix::build(&r, &p, AndOperator::Weak).unwrap();
        let strong = ConfusionMatrix::build(&r, &p, AndOperator::Strong).unwrap();
        assert_close(&weak, &[[0.5, 0.2], [0.5, 0.2]]);
        assert_close(&strong, &[[0.3, 0.0], [0.3, 0.0]]);
        let (opt, pess) = ConfusionMatrix::recombine_opt_pess(&weak, &strong).unwrap();
        assert_close(&opt, &[[0.5, 0.0], [0.3, 0.2]]);
        assert_close(&pess, &[[0.3, 0.2], [0.5, 0.0]]);
        assert_eq!(opt.kind(), MatrixKind::Optimistic);

        let (w, s) = ConfusionMatrix::split_opt_pess(&opt, &pess).unwrap();
        assert_eq!(w, weak);
        assert_eq!(s, strong);
    }

    #[test]
    fn recombination_rejects_wrong_inputs() {
        let r = mm(&[vec![0.5, 0.5]]);
        let p = mm(&[vec![0.8, 0.2]]);
        let weak = ConfusionMatrix::build(&r, &p, AndOperator::Weak).unwrap();
        let prod = ConfusionMatrix::build(&r, &p, AndOperator::Product).unwrap();
        assert!(matches!(
            ConfusionMatrix::recombine_opt_pess(&weak, &prod),
            Err(Error::MixedProvenance(_))
        ));
        let r2 = mm(&[vec![0.5, 0.5], vec![1.0, 0.0]]);
        let p2 = mm(&[vec![0.8, 0.2], vec![1.0, 0.0]]);
        let strong2 = ConfusionMatrix::build(&r2, &p2, AndOperator::Strong).unwrap();
        assert!(matches!(
            ConfusionMatrix::recombine_opt_pess(&weak, &strong2),
            Err(Error::MixedProvenance(_))
        ));
    }

    #[test]
    fn crisp_recombination_is_trivial() {
        let r = mm(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        let p = mm(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let weak = ConfusionMatrix::build(&r, &p, AndOperator::Weak).unwrap();
        let strong = ConfusionMatrix::build(&r, &p, AndOperator::Strong).unwrap();
        let (opt, pess) = ConfusionMatrix::recombine_opt_pess(&weak, &strong).unwrap();
        assert_eq!(weak.counts, strong.counts);
        assert_eq!(opt.counts, weak.counts);
        assert_eq!(pess.counts, weak.counts);
        assert_eq!(weak.marginals().row_sums, vec![2.0, 1.0]);
    }

    #[test]
    fn pooling() {
        let r1 = mm(&[vec![1.0, 0.0], vec![0.5, 0.5]]);
        let p1 = mm(&[vec![0.8, 0.2], vec![0.6, 0.4]]);
        let r2 = mm(&[vec![0.3, 0.7]]);
        let p2 = mm(&[vec![0.1, 0.9]]);
        let a = ConfusionMatrix::build(&r1, &p1, AndOperator::Weak).unwrap();
        let b = ConfusionMatrix::build(&r2, &p2, AndOperator::Weak).unwrap();
        assert_eq!(ConfusionMatrix::pool(std::slice::from_ref(&a)).unwrap(), a);
        let pooled = ConfusionMatrix::pool(&[a.clone(), b]).unwrap();
        let whole =
            ConfusionMatrix::build(&r1.stack(&r2).unwrap(), &p1.stack(&p2).unwrap(), AndOperator::Weak).unwrap();
        assert_eq!(pooled.n_samples(), 3);
        for (x, y) in pooled.counts.iter().zip(&whole.counts) {
            assert!((x - y).abs() < 1e-15);
        }

        let c = ConfusionMatrix::build(&r2, &p2, AndOperator::Product).unwrap();
        assert!(matches!(ConfusionMatrix::pool(&[a, c]), Err(Error::MixedOperator(..))));
        assert!(ConfusionMatrix::pool(&[]).is_err());
    }

    #[test]
    fn build_rejects_mismatched_inputs() {
        let r = mm(&[vec![1.0, 0.0]]);
        let p = mm(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            ConfusionMatrix::build(&r, &p, AndOperator::Weak),
            Err(Error::ShapeMismatch { .. })
        ));
        let q = MembershipMatrix::validate(
            &[vec![1.0, 0.0]],
            vec!["x".into(), "y".into()],
            World::Closed,
            Tolerances::default(),
        )
        .unwrap();
        assert!(matches!(
            ConfusionMatrix::build(&r, &q, AndOperator::Weak),
            Err(Error::ClassNameMismatch { .. })
        ));
    }

    #[test]
    fn product_marginals_and_weak_excess() {
        let r = mm(&[vec![0.5, 0.5], vec![0.2, 0.8], vec![1.0, 0.0]]);
        let p = mm(&[vec![0.8, 0.2], vec![0.4, 0.6], vec![0.9, 0.1]]);
        let prod = ConfusionMatrix::build(&r, &p, AndOperator::Product).unwrap();
        let m = prod.marginals();
        assert!((m.total - 3.0).abs() < 1e-12);
        for (g, total) in r.class_totals().iter().enumerate() {
            assert!((m.row_sums[g] - total).abs() < 1e-12);
        }
        for (g, total) in p.class_totals().iter().enumerate() {
            assert!((m.col_sums[g] - total).abs() < 1e-12);
        }
        let weak = ConfusionMatrix::build(&r, &p, AndOperator::Weak).unwrap();
        assert!(weak.marginals().total > 3.0);
    }

    #[test]
    fn perfect_soft_reproduction_is_not_diagonal() {
        let crisp = mm(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let cm = ConfusionMatrix::build(&crisp, &crisp, AndOperator::Product).unwrap();
        assert_eq!(cm.get(0, 1) + cm.get(1, 0), 0.0);

        let soft = mm(&[vec![1.0, 0.0], vec![0.3, 0.7]]);
        let cm = ConfusionMatrix::build(&soft, &soft, AndOperator::Product).unwrap();
        assert!(cm.get(0, 1) > 0.0 && cm.get(1, 0) > 0.0);

        let weak = ConfusionMatrix::build(&soft, &soft, AndOperator::Weak).unwrap();
        assert_eq!(weak.diagonal(), soft.class_totals());
    }
}
