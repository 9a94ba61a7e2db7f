use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.n + c]
    }

    pub fn add(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.n + c] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.at(r, c) * x[c]).sum())
            .collect()
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// On a zero pivot returns the offending column.
pub fn lu_solve(mut a: ComplexMatrix, mut b: Vec<Complex64>) -> Result<Vec<Complex64>, usize> {
    let n = a.n;
    let scale = a.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tiny = scale * 1e-300_f64.max(f64::EPSILON * 1e-6);
    for k in 0..n {
        let (p, best) = (k..n)
            .map(|r| (r, a.at(r, k).norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best > tiny) {
            return Err(k);
        }
        if p != k {
            for c in 0..n {
                a.data.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        let pivot = a.at(k, k);
        for r in k + 1..n {
            let f = a.at(r, k) / pivot;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            a.data[r * n + k] = Complex64::new(0.0, 0.0);
            for c in k + 1..n {
                let v = a.at(k, c);
                a.data[r * n + c] -= f * v;
            }
            let bk = b[k];
            b[r] -= f * bk;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let s: Complex64 = (k + 1..n).map(|c| a.at(k, c) * x[c]).sum();
        x[k] = (b[k] - s) / a.at(k, k);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn needs_pivoting() {
        let mut a = ComplexMatrix::zeros(2);
        a.add(0, 1, c(1.0, 0.0));
        a.add(1, 0, c(2.0, 0.0));
        let x = lu_solve(a, vec![c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert_eq!(x, vec![c(2.0, 0.0), c(3.0, 0.0)]);
    }

    #[test]
    fn singular_column_reported() {
        let mut a = ComplexMatrix::zeros(3);
        a.add(0, 0, c(1.0, 0.0));
        a.add(1, 1, c(1.0, 1.0));
        assert_eq!(lu_solve(a, vec![c(1.0, 0.0); 3]), Err(2));
    }

    proptest! {
        #[test]
        fn residual_is_small(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let mut a = ComplexMatrix::zeros(4);
            for (i, (re, im)) in vals.iter().enumerate() {
                a.add(i / 4, i % 4, c(*re, *im));
            }
            for i in 0..4 {
                a.add(i, i, c(4.0, 0.0));
            }
            let b: Vec<Complex64> = (0..4).map(|i| c(i as f64, 1.0)).collect();
            let x = lu_solve(a.clone(), b.clone()).unwrap();
            let r = a.mul_vec(&x);
            let err = r.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12);
        }
    }
}
