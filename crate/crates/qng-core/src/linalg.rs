//! Small dense linear algebra used throughout the crate.
//!
//! Everything here is deliberately self-contained: the matrices are small
//! (at most a few thousand on a side), the call sites need bitwise
//! reproducible results across platforms, and the generator blocks we
//! exponentiate are symmetric tridiagonal, so a general-purpose backend
//! buys nothing.

use num_complex::Complex64 as C64;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.cols + j] = v;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    /// Matrix product `self * rhs` (ikj loop order, skips zero entries).
    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(row.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = C64::new(0.0, 0.0);
            for (&a, &b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// `self† * x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.rows, x.len());
        let mut y = vec![C64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi.norm_sqr() == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            for (yj, &a) in y.iter_mut().zip(row.iter()) {
                *yj += a.conj() * xi;
            }
        }
        y
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `⟨x|y⟩ = Σ conj(x_i) y_i`.
pub fn vec_dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn normalize(x: &mut [C64]) -> f64 {
    let n = vec_norm(x);
    if n > 0.0 {
        let inv = 1.0 / n;
        for z in x.iter_mut() {
            *z *= inv;
        }
    }
    n
}

/// Eigendecomposition of a real symmetric tridiagonal matrix by the QL
/// algorithm with implicit shifts (tql2 lineage).
///
/// `diag` holds the n diagonal entries, `off` the n-1 subdiagonal couplings
/// (`off[i]` between rows i and i+1). Returns eigenvalues (ascending) and
/// the orthogonal eigenvector matrix as row-major n*n storage with
/// eigenvectors in columns: A = Z diag(w) Z^T.
pub fn sym_tridiag_eigen(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    assert!(n > 0);
    assert_eq!(off.len(), n.saturating_sub(1));
    let mut d = diag.to_vec();
    let mut e = vec![0.0f64; n];
    e[..n - 1].copy_from_slice(off);
    let mut z = vec![0.0f64; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    let eps = f64::EPSILON;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 64, "tridiagonal QL failed to converge");

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, permuting eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let w: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut zs = vec![0.0f64; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            zs[k * n + new_col] = z[k * n + old_col];
        }
    }
    (w, zs)
}

/// Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi
/// rotations. Returns eigenvalues ascending and a unitary matrix with the
/// eigenvectors in columns: A = V diag(w) V†.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut v = CMat::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let g = apq.norm();
                if g <= 1e-300 {
                    continue;
                }
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                // Phase u makes the (p,q) block real; a real Jacobi rotation
                // then zeroes it. Combined 2x2 unitary J = diag(1, ū)·R(θ).
                let u = apq / g;
                let tau = (aqq - app) / (2.0 * g);
                // Small-magnitude root of t² − 2τt − 1 = 0 for this rotation
                // convention.
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cu = c * u.conj();
                let su = s * u.conj();

                // A <- A·J (columns p,q).
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp + su * akq);
                    m.set(k, q, -s * akp + cu * akq);
                }
                // A <- J†·A (rows p,q).
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk + s * u * aqk);
                    m.set(q, k, -s * apk + c * u * aqk);
                }
                // Clean the rotated pair.
                let dpp = m.get(p, p).re;
                let dqq = m.get(q, q).re;
                m.set(p, p, C64::new(dpp, 0.0));
                m.set(q, q, C64::new(dqq, 0.0));
                m.set(p, q, C64::new(0.0, 0.0));
                m.set(q, p, C64::new(0.0, 0.0));
                // V <- V·J.
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp + su * vkq);
                    v.set(k, q, -s * vkp + cu * vkq);
                }
            }
        }
    }

    let w: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap());
    let ws: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let mut vs = CMat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vs.set(k, new_col, v.get(k, old_col));
        }
    }
    (ws, vs)
}

/// Squared spectral norm of a complex matrix with the maximizing unit
/// vectors: returns (σ_max², u, v) with σ_max = |u† M v|.
///
/// Exact path through the Hermitian eigendecomposition of M†M.
pub fn spectral_norm_sq(m: &CMat) -> (f64, Vec<C64>, Vec<C64>) {
    let b = m.adjoint().mul(m);
    let (w, vmat) = hermitian_eigen(&b);
    let n = b.rows;
    let lam = w[n - 1].max(0.0);
    let mut v = vec![C64::new(0.0, 0.0); n];
    for k in 0..n {
        v[k] = vmat.get(k, n - 1);
    }
    let mut u = m.mul_vec(&v);
    let nu = normalize(&mut u);
    if nu == 0.0 && !u.is_empty() {
        u[0] = C64::new(1.0, 0.0);
    }
    (lam, u, v)
}

/// Fast squared-spectral-norm estimate by power iteration on M†M.
///
/// `warm` seeds the iteration (useful when scanning a smooth parameter
/// grid); the deterministic fallback start is a fixed decaying profile.
/// Convergence is judged by the eigen-residual ‖M†Mv − λv‖, which stays
/// honest across singular-value branch crossings where the Rayleigh
/// quotient alone stalls; if the budget runs out the exact eigensolver
/// takes over. Returns (σ_max², v).
pub fn spectral_norm_sq_power(
    m: &CMat,
    warm: Option<&[C64]>,
    rel_tol: f64,
    max_iter: usize,
) -> (f64, Vec<C64>) {
    let n = m.cols;
    let mut v: Vec<C64> = match warm {
        Some(w) if w.len() == n && vec_norm(w) > 1e-12 => w.to_vec(),
        _ => (0..n)
            .map(|k| C64::new(1.0 / (k as f64 + 1.0), 0.0))
            .collect(),
    };
    normalize(&mut v);
    let resid_tol = rel_tol.sqrt().max(1e-9);
    for _ in 0..max_iter {
        let w = m.mul_vec(&v);
        let lam = w.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if lam <= 1e-280 {
            // v landed in the null space; restart with a shifted profile.
            v = (0..n)
                .map(|k| C64::new(1.0 / (k as f64 + 1.5), 0.2 / (k as f64 + 2.0)))
                .collect();
            normalize(&mut v);
            continue;
        }
        let mut v_next = m.adjoint_mul_vec(&w);
        let resid = v_next
            .iter()
            .zip(v.iter())
            .map(|(z, vi)| (z - lam * vi).norm_sqr())
            .sum::<f64>()
            .sqrt();
        normalize(&mut v_next);
        v = v_next;
        if resid <= resid_tol * lam {
            return (lam, v);
        }
    }
    // Not converged within budget (typically a near-degenerate top pair):
    // hand over to the exact decomposition.
    let (lam, _, v) = spectral_norm_sq(m);
    (lam, v)
}
