//! Compressed sparse row matrices and a preconditioned conjugate gradient
//! solver.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in triplets {
            if (i, j) == last {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.vals.iter_mut().for_each(|v| *v *= s);
    }

    /// `self + s * other`, assuming both are square of the same size.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, s * v)));
        }
        CsrMatrix::from_triplets(self.n, t)
    }

    /// Replaces rows and columns flagged in `fixed` by identity rows.
    pub fn constrain(&self, fixed: &[bool]) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n {
            if fixed[i] {
                t.push((i, i, 1.0));
                continue;
            }
            t.extend(self.row(i).filter(|&(j, _)| !fixed[j]).map(|(j, v)| (i, j, v)));
        }
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Maximum of `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Dense copy, intended for tests and tiny systems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric preconditioner.
#[derive(Clone, Debug)]
pub enum Preconditioner {
    Jacobi(Vec<f64>),
    /// Incomplete Cholesky factor with the sparsity of the lower triangle.
    Ic0(CsrMatrix),
}

impl Preconditioner {
    /// IC(0), shifting the diagonal on breakdown and falling back to Jacobi.
    pub fn new(a: &CsrMatrix) -> Self {
        let mut shift = 0.0;
        for _ in 0..8 {
            if let Some(l) = ic0(a, shift) {
                return Preconditioner::Ic0(l);
            }
            shift = if shift == 0.0 { 1e-3 } else { shift * 10.0 };
        }
        Self::jacobi(a)
    }

    pub fn jacobi(a: &CsrMatrix) -> Self {
        Preconditioner::Jacobi(a.diag().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect())
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(inv) => {
                for i in 0..r.len() {
                    z[i] = inv[i] * r[i];
                }
            }
            Preconditioner::Ic0(l) => {
                // Forward solve L y = r (diagonal is the last entry of each row).
                for i in 0..l.n {
                    let mut s = r[i];
                    let end = l.row_ptr[i + 1] - 1;
                    for k in l.row_ptr[i]..end {
                        s -= l.vals[k] * z[l.cols[k]];
                    }
                    z[i] = s / l.vals[end];
                }
                // Backward solve L^T x = y in place.
                for i in (0..l.n).rev() {
                    let end = l.row_ptr[i + 1] - 1;
                    z[i] /= l.vals[end];
                    let zi = z[i];
                    for k in l.row_ptr[i]..end {
                        z[l.cols[k]] -= l.vals[k] * zi;
                    }
                }
            }
        }
    }
}

fn ic0(a: &CsrMatrix, shift: f64) -> Option<CsrMatrix> {
    let n = a.n;
    let mut row_ptr = vec![0; n + 1];
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                cols.push(j);
                vals.push(if j == i { v * (1.0 + shift) } else { v });
            }
        }
        row_ptr[i + 1] = cols.len();
        if cols.last() != Some(&i) {
            return None;
        }
    }
    for i in 0..n {
        let (ri0, ri1) = (row_ptr[i], row_ptr[i + 1]);
        for p in ri0..ri1 {
            let k = cols[p];
            // Sparse dot of rows i and k over columns < k.
            let (mut a_ptr, mut b_ptr) = (ri0, row_ptr[k]);
            let b_end = row_ptr[k + 1] - 1;
            let mut s = 0.0;
            while a_ptr < p && b_ptr < b_end {
                match cols[a_ptr].cmp(&cols[b_ptr]) {
                    std::cmp::Ordering::Less => a_ptr += 1,
                    std::cmp::Ordering::Greater => b_ptr += 1,
                    std::cmp::Ordering::Equal => {
                        s += vals[a_ptr] * vals[b_ptr];
                        a_ptr += 1;
                        b_ptr += 1;
                    }
                }
            }
            if k < i {
                vals[p] = (vals[p] - s) / vals[row_ptr[k + 1] - 1];
            } else {
                let d = vals[p] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                vals[p] = d.sqrt();
            }
        }
    }
    Some(CsrMatrix { n, row_ptr, cols, vals })
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveInfo {
    pub iterations: usize,
    /// Final `||b - A x||_2`.
    pub residual: f64,
}

/// Preconditioned CG until `||b - A x||_2 <= rel_tol * ||b||_2`.
/// The iteration cap is `10 * n`.
pub fn pcg(
    a: &CsrMatrix,
    pre: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    rel_tol: f64,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.n;
    let bnorm = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveInfo { iterations: 0, residual: 0.0 }));
    }
    let target = rel_tol * bnorm;
    let cap = 10 * n.max(1);
    let mut iterations = 0;
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    // Outer loop recomputes the true residual to guard against drift.
    loop {
        a.apply_into(&x, &mut q);
        for i in 0..n {
            r[i] = b[i] - q[i];
        }
        let rn = norm(&r);
        if rn <= target {
            return Ok((x, SolveInfo { iterations, residual: rn }));
        }
        if iterations >= cap {
            return Err(Error::SolverStalled { iterations, residual: rn / bnorm });
        }
        let start = iterations;
        pre.apply(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        loop {
            a.apply_into(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                break;
            }
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            iterations += 1;
            // Aim slightly below the target so the true residual also passes.
            if norm(&r) <= 0.5 * target || iterations >= cap {
                break;
            }
            pre.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if iterations == start {
            a.apply_into(&x, &mut q);
            let rn = norm(&b.iter().zip(&q).map(|(b, q)| b - q).collect::<Vec<_>>());
            return Err(Error::SolverStalled { iterations, residual: rn / bnorm });
        }
    }
}

/// A matrix bundled with its preconditioner.
#[derive(Clone, Debug)]
pub struct SpdSolver {
    pub matrix: CsrMatrix,
    pub pre: Preconditioner,
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix) -> Self {
        let pre = Preconditioner::new(&matrix);
        Self { matrix, pre }
    }

    pub fn solve(&self, b: &[f64], rel_tol: f64) -> Result<(Vec<f64>, SolveInfo)> {
        pcg(&self.matrix, &self.pre, b, None, rel_tol)
    }
}

/// Solves `op x = rhs` to relative ℓ² residual `rel_tol`.
pub fn solve_spd(op: &CsrMatrix, rhs: &[f64], rel_tol: f64) -> Result<(Vec<f64>, SolveInfo)> {
    pcg(op, &Preconditioner::new(op), rhs, None, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn triplets_are_summed() {
        let m = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn identity_solve_is_exact() {
        let b = vec![1.0, -2.0, 3.5];
        let (x, _) = solve_spd(&CsrMatrix::identity(3), &b, 1e-14).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn ic0_of_tridiagonal_is_exact_cholesky() {
        let a = laplace_1d(30);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let (x, info) = solve_spd(&a, &b, 1e-13).unwrap();
        assert!(info.iterations <= 2);
        let r: Vec<f64> = a.apply(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&r) <= 1e-13 * norm(&b));
    }

    #[test]
    fn jacobi_pcg_converges() {
        let a = laplace_1d(50);
        let b = vec![1.0; 50];
        let (x, info) = pcg(&a, &Preconditioner::jacobi(&a), &b, None, 1e-12).unwrap();
        assert!(info.residual <= 1e-12 * norm(&b));
        assert!((x[0] - 25.0).abs() < 1e-8);
    }

    #[test]
    fn constrain_gives_identity_rows() {
        let a = laplace_1d(4).constrain(&[true, false, false, true]);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(1, 1), 2.0);
        assert_eq!(a.asymmetry(), 0.0);
    }
}
