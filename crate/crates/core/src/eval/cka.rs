use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Row-per-example embedding matrix as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    #[serde(default)]
    pub tag: String,
    pub rows: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>, EvalError> {
        let n = self.rows.len();
        if n < 2 {
            return Err(EvalError::Shape(format!("need at least 2 rows, got {n}")));
        }
        let d = self.rows[0].len();
        if d == 0 || self.rows.iter().any(|r| r.len() != d) {
            return Err(EvalError::Shape("rows must share a non-zero width".into()));
        }
        if self.rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EvalError::Shape("non-finite value".into()));
        }
        Ok(DMatrix::from_row_iterator(
            n,
            d,
            self.rows.iter().flatten().copied(),
        ))
    }
}

fn center_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = m.clone();
    for mut col in c.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    c
}

/// Linear CKA, `‖YᵀX‖²_F / (‖XᵀX‖_F ‖YᵀY‖_F)` on column-centered inputs.
pub fn linear_cka(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64, EvalError> {
    if x.nrows() != y.nrows() {
        return Err(EvalError::Shape(format!(
            "row counts differ: {} vs {}",
            x.nrows(),
            y.nrows()
        )));
    }
    let x = center_columns(x);
    let y = center_columns(y);
    let xx = (x.transpose() * &x).norm();
    let yy = (y.transpose() * &y).norm();
    if xx == 0.0 || yy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    let yx = (y.transpose() * &x).norm();
    Ok((yx * yx / (xx * yy)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        EmbeddingMatrix {
            tag: String::new(),
            rows: rows.iter().map(|r| r.to_vec()).collect(),
        }
        .to_matrix()
        .unwrap()
    }

    #[test]
    fn self_similarity_is_one() {
        let x = m(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.0], &[-2.0, 1.0]]);
        assert!((linear_cka(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invariant_to_rotation_and_scale() {
        let x = m(&[&[1.0, 2.0], &[0.5, -1.0], &[3.0, 0.0], &[-2.0, 1.0]]);
        let (s, c) = 0.3f64.sin_cos();
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let y = &x * q * 7.5;
        assert!((linear_cka(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_matrix_fails() {
        let x = m(&[&[1.0], &[1.0], &[1.0]]);
        let y = m(&[&[1.0], &[2.0], &[3.0]]);
        assert!(matches!(linear_cka(&x, &y), Err(EvalError::ZeroVariance)));
    }

    #[test]
    fn row_mismatch_fails() {
        let x = m(&[&[1.0], &[2.0]]);
        let y = m(&[&[1.0], &[2.0], &[3.0]]);
        assert!(matches!(linear_cka(&x, &y), Err(EvalError::Shape(_))));
    }
}
