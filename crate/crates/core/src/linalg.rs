//! Dense LU with partial pivoting and a Hager-Higham 1-norm condition estimate.

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn norm_1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    norm_1: f64,
}

impl Lu {
    /// Returns `None` when a pivot is exactly zero.
    pub fn factor(a: &Matrix) -> Option<Self> {
        let n = a.n;
        let norm_1 = a.norm_1();
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (p, pmax) = (col..n)
                .map(|r| (r, lu[r * n + col].abs()))
                .fold((col, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax == 0.0 || !pmax.is_finite() {
                return None;
            }
            if p != col {
                for j in 0..n {
                    lu.swap(p * n + j, col * n + j);
                }
                perm.swap(p, col);
            }
            let pivot = lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] / pivot;
                lu[r * n + col] = f;
                if f != 0.0 {
                    let (top, bottom) = lu.split_at_mut(r * n);
                    let src = &top[col * n + col + 1..col * n + n];
                    let dst = &mut bottom[col + 1..n];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= f * s;
                    }
                }
            }
        }
        Some(Self {
            n,
            lu,
            perm,
            norm_1,
        })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        // A = P^T L U, so A^T = U^T L^T P.
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[j * n + i] * y[j]).sum();
            y[i] -= s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Estimate of `||A||_1 ||A^-1||_1` (Hager's method, Higham's variant).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.n;
        if n == 0 {
            return 1.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            let new_est: f64 = y.iter().map(|v| v.abs()).sum();
            if !new_est.is_finite() {
                return f64::INFINITY;
            }
            let sign: Vec<f64> = y
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose(&sign);
            let (jmax, zmax) =
                z.iter().enumerate().fold(
                    (0, 0.0),
                    |b, (j, v)| if v.abs() > b.1 { (j, v.abs()) } else { b },
                );
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if new_est <= est || zmax <= ztx {
                est = est.max(new_est);
                break;
            }
            est = new_est;
            x = vec![0.0; n];
            x[jmax] = 1.0;
        }
        // Higham's alternating-sign lower bound guards against underestimates.
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0))
            })
            .collect();
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est) * self.norm_1
    }
}
