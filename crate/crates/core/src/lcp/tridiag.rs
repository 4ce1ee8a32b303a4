use crate::error::{Error, Result};

/// Row-oriented tridiagonal matrix: row `i` reads
/// `lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1]`.
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Turn row `i` into an identity row.
    pub fn set_identity_row(&mut self, i: usize) {
        self.lower[i] = 0.0;
        self.diag[i] = 1.0;
        self.upper[i] = 0.0;
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let n = self.len();
        let mut v = self.diag[i] * x[i];
        if i > 0 {
            v += self.lower[i] * x[i - 1];
        }
        if i + 1 < n {
            v += self.upper[i] * x[i + 1];
        }
        v
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.row_dot(i, x)).collect()
    }

    /// Rows that are not strictly diagonally dominant.
    pub fn non_dominant_rows(&self) -> Vec<usize> {
        let n = self.len();
        (0..n)
            .filter(|&i| {
                let off =
                    if i > 0 { self.lower[i].abs() } else { 0.0 } + if i + 1 < n { self.upper[i].abs() } else { 0.0 };
                self.diag[i].abs() <= off
            })
            .collect()
    }
}

/// Solve `a x = rhs` by the Thomas algorithm (no pivoting).
pub fn thomas_solve(a: &Tridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if rhs.len() != n {
        return Err(Error::InvalidParameter(format!(
            "rhs length {} does not match matrix size {n}",
            rhs.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let pivot_floor = |p: f64, scale: f64| p.abs() <= 1e-300 || p.abs() <= f64::EPSILON * 1e-3 * scale;

    let mut beta = a.diag[0];
    if pivot_floor(beta, a.diag[0].abs().max(a.upper[0].abs())) {
        return Err(Error::SingularPivot { row: 0 });
    }
    c[0] = if n > 1 { a.upper[0] / beta } else { 0.0 };
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = a.diag[i] - a.lower[i] * c[i - 1];
        let scale = a.diag[i].abs().max(a.lower[i].abs());
        if pivot_floor(beta, scale) {
            return Err(Error::SingularPivot { row: i });
        }
        c[i] = if i + 1 < n { a.upper[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - a.lower[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let rhs = vec![1.0, -2.0, 3.5, 0.25];
        assert_eq!(thomas_solve(&Tridiagonal::identity(4), &rhs).unwrap(), rhs);
    }

    #[test]
    fn diagonal_is_elementwise_division() {
        let mut a = Tridiagonal::zeros(3);
        a.diag = vec![2.0, 4.0, -5.0];
        let x = thomas_solve(&a, &[1.0, 1.0, 10.0]).unwrap();
        assert_eq!(x, vec![0.5, 0.25, -2.0]);
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut a = Tridiagonal::identity(3);
        a.diag[1] = 0.0;
        assert!(matches!(
            thomas_solve(&a, &[1.0; 3]),
            Err(Error::SingularPivot { row: 1 })
        ));
    }

    #[test]
    fn flags_non_dominant_rows() {
        let mut a = Tridiagonal::identity(3);
        a.upper[1] = 1.5;
        assert_eq!(a.non_dominant_rows(), vec![1]);
    }
}
