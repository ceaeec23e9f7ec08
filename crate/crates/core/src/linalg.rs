//! Dense linear algebra: symmetric eigendecomposition, PSD fractional powers,
//! SPD solves, the unitary DFT and circulant/Hankel matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Eigenvalues below this fraction of the largest are treated as zero before
/// fractional powers.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Negative eigenvalues beyond this fraction of the largest reject a
/// supposedly PSD input.
pub const PSD_TOLERANCE: f64 = 1e-6;

/// Symmetric square matrix; symmetrized as `(A + A^T) / 2` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    pub fn new(m: Mat) -> Result<SymMatrix> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                context: "symmetric matrix",
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let n = m.rows();
        let mut s = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(SymMatrix(s))
    }

    pub fn identity(n: usize) -> SymMatrix {
        SymMatrix(Mat::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }
}

impl core::ops::Deref for SymMatrix {
    type Target = Mat;

    fn deref(&self) -> &Mat {
        &self.0
    }
}

/// Eigenpairs of a symmetric matrix; `vectors` holds them column-wise.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    /// `V diag(f(λ)) V^T`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        for i in 0..n {
            for (v, w) in scaled.row_mut(i).iter_mut().zip(&weights) {
                *v *= w;
            }
        }
        SymMatrix(scaled.matmul_t(&self.vectors))
            .symmetrized()
    }
}

impl SymMatrix {
    fn symmetrized(self) -> SymMatrix {
        SymMatrix::new(self.0).expect("square by construction")
    }
}

/// Householder tridiagonalization followed by implicit QL; eigenvalues ascending.
pub fn sym_eig(a: &SymMatrix) -> Result<SymEigen> {
    if !a.is_finite() {
        return Err(Error::NonFinite("sym_eig input"));
    }
    let n = a.dim();
    if n == 0 {
        return Ok(SymEigen {
            values: Vec::new(),
            vectors: Mat::zeros(0, 0),
        });
    }
    let mut v = a.as_mat().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = Mat::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

fn tridiagonalize(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tridiagonal_ql(v: &mut Mat, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > 64 {
                    return Err(Error::NonFinite("QL iteration did not converge"));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// `M^s` for symmetric PSD `M`.
///
/// Eigenvalues below `1e-12 λ_max` are zeroed before exponentiation; inputs
/// with `λ_min < -1e-6 λ_max` are rejected.
pub fn psd_power(m: &SymMatrix, s: f64) -> Result<SymMatrix> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidExponent(s));
    }
    let eig = sym_eig(m)?;
    let (min, max) = match (eig.values.first(), eig.values.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Ok(SymMatrix(Mat::zeros(0, 0))),
    };
    if max <= 0.0 {
        if min < 0.0 {
            return Err(Error::NotPsd { min, max });
        }
        return Ok(SymMatrix(Mat::zeros(m.dim(), m.dim())));
    }
    if min < -PSD_TOLERANCE * max {
        return Err(Error::NotPsd { min, max });
    }
    let floor = EIGEN_CLAMP * max;
    Ok(eig.reassemble(|l| if l < floor { 0.0 } else { libm::pow(l, s) }))
}

/// Outcome of [`solve_spd`].
#[derive(Debug, Clone)]
pub struct SpdSolution {
    pub alpha: Mat,
    /// Ridge actually added to the diagonal, when the jitter fallback fired.
    pub jitter_applied: Option<f64>,
}

/// `(K + jitter I)^{-1} Y` by Cholesky. If the factorization breaks down, it
/// is retried once with `jitter = 1e-10 trace(K) / n`.
pub fn solve_spd(k: &SymMatrix, y: &Mat, jitter: f64) -> Result<SpdSolution> {
    let n = k.dim();
    if y.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_spd right-hand side",
            expected: n,
            found: y.rows(),
        });
    }
    if !k.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite("solve_spd input"));
    }
    match Cholesky::factor(k, jitter) {
        Ok(ch) => Ok(SpdSolution {
            alpha: ch.solve(y),
            jitter_applied: (jitter != 0.0).then_some(jitter),
        }),
        Err(_) => {
            let retry = 1e-10 * k.trace() / n as f64;
            let ch = Cholesky::factor(k, jitter + retry).map_err(|pivot| {
                Error::SingularKernel {
                    pivot,
                    size: n,
                    jitter: jitter + retry,
                }
            })?;
            Ok(SpdSolution {
                alpha: ch.solve(y),
                jitter_applied: Some(jitter + retry),
            })
        }
    }
}

/// Solves `A X = Y` for a general square `A` by LU with partial pivoting.
///
/// For kernel matrices that are invertible but not positive definite.
/// Unblocked; meant for small systems.
pub fn solve_lu(a: &Mat, y: &Mat) -> Result<Mat> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            context: "solve_lu matrix",
            expected: n,
            found: a.cols(),
        });
    }
    if y.rows() != n {
        return Err(Error::DimensionMismatch {
            context: "solve_lu right-hand side",
            expected: n,
            found: y.rows(),
        });
    }
    if !a.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite("solve_lu input"));
    }
    let tol = n as f64 * f64::EPSILON * a.max_abs();
    let mut lu = a.clone();
    let mut x = y.clone();
    let r = y.cols();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
            .unwrap_or(k);
        if !(lu[(piv, k)].abs() > tol) {
            return Err(Error::SingularKernel {
                pivot: k,
                size: n,
                jitter: 0.0,
            });
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..r {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            if f == 0.0 {
                continue;
            }
            lu[(i, k)] = f;
            for j in k + 1..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..r {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..r {
            let mut s = x[(k, j)];
            for i in k + 1..n {
                s -= lu[(k, i)] * x[(i, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    Ok(x)
}

const BLOCK: usize = 96;

/// Lower Cholesky factor stored in the lower triangle of a dense buffer.
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// Strided gemm on raw views: `c <- alpha a b + beta c`.
///
/// # Safety
/// Each pointer/stride pair must describe a valid region of the stated shape,
/// and `c` must not overlap `a` or `b`.
#[allow(clippy::too_many_arguments)]
unsafe fn gemm_view(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    rsa: isize,
    csa: isize,
    b: *const f64,
    rsb: isize,
    csb: isize,
    beta: f64,
    c: *mut f64,
    rsc: isize,
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, 1);
}

impl Cholesky {
    /// Right-looking blocked factorization; `Err(pivot)` on a non-positive pivot.
    fn factor(k: &SymMatrix, jitter: f64) -> core::result::Result<Cholesky, usize> {
        let n = k.dim();
        let mut a = k.as_slice().to_vec();
        if jitter != 0.0 {
            for i in 0..n {
                a[i * n + i] += jitter;
            }
        }
        let mut inv = vec![0.0; BLOCK * BLOCK];
        let mut panel = Vec::new();
        let mut k0 = 0;
        while k0 < n {
            let kb = BLOCK.min(n - k0);
            let k1 = k0 + kb;
            // Diagonal block.
            for j in k0..k1 {
                let mut s = a[j * n + j];
                for t in k0..j {
                    s -= a[j * n + t] * a[j * n + t];
                }
                if !(s > 0.0) || !s.is_finite() {
                    return Err(j);
                }
                let ljj = libm::sqrt(s);
                a[j * n + j] = ljj;
                for i in (j + 1)..k1 {
                    let mut s = a[i * n + j];
                    for t in k0..j {
                        s -= a[i * n + t] * a[j * n + t];
                    }
                    a[i * n + j] = s / ljj;
                }
            }
            if k1 == n {
                break;
            }
            // inv <- L11^{-1} (lower, kb x kb, row stride kb).
            inv[..kb * kb].iter_mut().for_each(|v| *v = 0.0);
            for j in 0..kb {
                inv[j * kb + j] = 1.0 / a[(k0 + j) * n + k0 + j];
                for i in (j + 1)..kb {
                    let mut s = 0.0;
                    for t in j..i {
                        s += a[(k0 + i) * n + k0 + t] * inv[t * kb + j];
                    }
                    inv[i * kb + j] = -s / a[(k0 + i) * n + k0 + i];
                }
            }
            // L21 <- A21 L11^{-T}, via a scratch copy of A21.
            let rows = n - k1;
            panel.resize(rows * kb, 0.0);
            for r in 0..rows {
                let src = (k1 + r) * n + k0;
                panel[r * kb..(r + 1) * kb].copy_from_slice(&a[src..src + kb]);
            }
            // SAFETY: `panel` is rows x kb, `inv` is kb x kb (read transposed),
            // and the destination is the rows x kb window of `a` at (k1, k0).
            unsafe {
                gemm_view(
                    rows,
                    kb,
                    kb,
                    1.0,
                    panel.as_ptr(),
                    kb as isize,
                    1,
                    inv.as_ptr(),
                    1,
                    kb as isize,
                    0.0,
                    a.as_mut_ptr().add(k1 * n + k0),
                    n as isize,
                );
            }
            for r in 0..rows {
                let src = (k1 + r) * n + k0;
                panel[r * kb..(r + 1) * kb].copy_from_slice(&a[src..src + kb]);
            }
            // Trailing update of the lower triangle, one block row at a time.
            let mut i0 = k1;
            while i0 < n {
                let i1 = (i0 + BLOCK).min(n);
                // SAFETY: reads rows [i0, i1) and [k1, i1) of `panel`
                // (rows x kb); writes the (i1 - i0) x (i1 - k1) window of `a`
                // at (i0, k1), disjoint from `panel`.
                unsafe {
                    gemm_view(
                        i1 - i0,
                        kb,
                        i1 - k1,
                        -1.0,
                        panel.as_ptr().add((i0 - k1) * kb),
                        kb as isize,
                        1,
                        panel.as_ptr(),
                        1,
                        kb as isize,
                        1.0,
                        a.as_mut_ptr().add(i0 * n + k1),
                        n as isize,
                    );
                }
                i0 = i1;
            }
            k0 = k1;
        }
        Ok(Cholesky { n, l: a })
    }

    /// `L L^T X = Y`, blocked forward and backward substitution.
    fn solve(&self, y: &Mat) -> Mat {
        let n = self.n;
        let p = y.cols();
        let l = &self.l;
        let mut z = y.as_slice().to_vec();
        // Forward: L Z = Y.
        let mut i0 = 0;
        while i0 < n {
            let i1 = (i0 + BLOCK).min(n);
            if i0 > 0 {
                let (done, rest) = z.split_at_mut(i0 * p);
                // SAFETY: L[i0..i1, 0..i0] (row stride n) times Z[0..i0]
                // (i0 x p) into the disjoint rows Z[i0..i1].
                unsafe {
                    gemm_view(
                        i1 - i0,
                        i0,
                        p,
                        -1.0,
                        l.as_ptr().add(i0 * n),
                        n as isize,
                        1,
                        done.as_ptr(),
                        p as isize,
                        1,
                        1.0,
                        rest.as_mut_ptr(),
                        p as isize,
                    );
                }
            }
            for i in i0..i1 {
                for t in i0..i {
                    let lit = l[i * n + t];
                    if lit != 0.0 {
                        let (head, tail) = z.split_at_mut(i * p);
                        let src = &head[t * p..(t + 1) * p];
                        for (zi, zt) in tail[..p].iter_mut().zip(src) {
                            *zi -= lit * zt;
                        }
                    }
                }
                let inv = 1.0 / l[i * n + i];
                z[i * p..(i + 1) * p].iter_mut().for_each(|v| *v *= inv);
            }
            i0 = i1;
        }
        // Backward: L^T X = Z.
        let mut i1 = n;
        while i1 > 0 {
            let i0 = i1.saturating_sub(BLOCK);
            if i1 < n {
                let (head, done) = z.split_at_mut(i1 * p);
                // SAFETY: (L[i1..n, i0..i1])^T times X[i1..n] into the
                // disjoint rows X[i0..i1].
                unsafe {
                    gemm_view(
                        i1 - i0,
                        n - i1,
                        p,
                        -1.0,
                        l.as_ptr().add(i1 * n + i0),
                        1,
                        n as isize,
                        done.as_ptr(),
                        p as isize,
                        1,
                        1.0,
                        head.as_mut_ptr().add(i0 * p),
                        p as isize,
                    );
                }
            }
            for i in (i0..i1).rev() {
                for t in (i + 1)..i1 {
                    let lti = l[t * n + i];
                    if lti != 0.0 {
                        let (head, tail) = z.split_at_mut(t * p);
                        let src = &tail[..p];
                        for (zi, zt) in head[i * p..(i + 1) * p].iter_mut().zip(src) {
                            *zi -= lti * zt;
                        }
                    }
                }
                let inv = 1.0 / l[i * n + i];
                z[i * p..(i + 1) * p].iter_mut().for_each(|v| *v *= inv);
            }
            i1 = i0;
        }
        Mat::from_vec(n, p, z).expect("shape preserved")
    }
}

/// Complex number as an explicit `(re, im)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };
    pub const ONE: Complex = Complex { re: 1.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Complex {
        Complex { re, im }
    }

    /// `exp(i theta)`.
    pub fn cis(theta: f64) -> Complex {
        Complex::new(libm::cos(theta), libm::sin(theta))
    }

    pub fn conj(self) -> Complex {
        Complex::new(self.re, -self.im)
    }

    pub fn scale(self, s: f64) -> Complex {
        Complex::new(self.re * s, self.im * s)
    }

    pub fn abs(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, o: Complex) -> Complex {
        Complex::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, o: Complex) -> Complex {
        Complex::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, o: Complex) -> Complex {
        Complex::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

/// `<u, v>_C = u^T conj(v)`.
pub fn complex_inner(u: &[Complex], v: &[Complex]) -> Complex {
    u.iter().zip(v).fold(Complex::ZERO, |acc, (&a, &b)| acc + a * b.conj())
}

/// Unitary DFT matrix, `F_jk = ω^{jk} / sqrt(d)` with `ω = exp(-2πi/d)`.
#[derive(Debug, Clone)]
pub struct DftMatrix {
    d: usize,
    entries: Vec<Complex>,
}

pub fn dft(d: usize) -> Result<DftMatrix> {
    if d == 0 {
        return Err(Error::EmptyInput("dft dimension"));
    }
    let norm = 1.0 / libm::sqrt(d as f64);
    let mut entries = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            // Reduce jk mod d first so the angle stays small and exact.
            let e = (j * k) % d;
            entries.push(Complex::cis(-2.0 * PI * e as f64 / d as f64).scale(norm));
        }
    }
    Ok(DftMatrix { d, entries })
}

impl DftMatrix {
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn entry(&self, j: usize, k: usize) -> Complex {
        self.entries[j * self.d + k]
    }

    /// `F e_k`.
    pub fn column(&self, k: usize) -> Vec<Complex> {
        (0..self.d).map(|j| self.entry(j, k)).collect()
    }

    /// `F x` for real `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<Complex> {
        debug_assert_eq!(x.len(), self.d);
        (0..self.d)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .fold(Complex::ZERO, |acc, (k, &v)| acc + self.entry(j, k).scale(v))
            })
            .collect()
    }

    pub fn apply_complex(&self, x: &[Complex]) -> Vec<Complex> {
        (0..self.d)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .fold(Complex::ZERO, |acc, (k, &v)| acc + self.entry(j, k) * v)
            })
            .collect()
    }

    /// `F^H x`.
    pub fn apply_adjoint(&self, x: &[Complex]) -> Vec<Complex> {
        (0..self.d)
            .map(|j| {
                x.iter()
                    .enumerate()
                    .fold(Complex::ZERO, |acc, (k, &v)| acc + self.entry(k, j).conj() * v)
            })
            .collect()
    }

    /// `max |(F F^H - I)_{jk}|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.d;
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for k in 0..d {
                let mut acc = Complex::ZERO;
                for t in 0..d {
                    acc = acc + self.entry(j, t) * self.entry(k, t).conj();
                }
                let target = if j == k { Complex::ONE } else { Complex::ZERO };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }

    /// `F diag(w) F^H` as separate real and imaginary parts.
    pub fn conjugate_diagonal(&self, w: &[Complex]) -> (Mat, Mat) {
        let d = self.d;
        let mut re = Mat::zeros(d, d);
        let mut im = Mat::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                let mut acc = Complex::ZERO;
                for t in 0..d {
                    acc = acc + self.entry(j, t) * w[t] * self.entry(k, t).conj();
                }
                re[(j, k)] = acc.re;
                im[(j, k)] = acc.im;
            }
        }
        (re, im)
    }
}

/// How successive rows relate to the first row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CirculantKind {
    /// Rows `c, σ(c), σ²(c), …` (constant wrapped diagonals).
    Circulant,
    /// Rows `c, σ⁻¹(c), σ⁻²(c), …` (constant wrapped anti-diagonals).
    Hankel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    pub first_row: Vec<f64>,
    pub kind: CirculantKind,
}

/// `σ^shift(u)`, with `[σ(u)]_j = u_{j-1 mod p}`.
pub fn cyclic_shift(u: &[f64], shift: isize) -> Vec<f64> {
    let p = u.len() as isize;
    (0..p)
        .map(|j| u[(j - shift).rem_euclid(p) as usize])
        .collect()
}

pub fn circulant(spec: &CirculantSpec) -> Result<Mat> {
    let c = &spec.first_row;
    let p = c.len();
    if p == 0 {
        return Err(Error::EmptyInput("circulant first row"));
    }
    Ok(match spec.kind {
        CirculantKind::Circulant => Mat::from_fn(p, p, |i, j| c[(j + p - i) % p]),
        CirculantKind::Hankel => Mat::from_fn(p, p, |i, j| c[(j + i) % p]),
    })
}

/// Circulant with first row `e_1`: the single-step shift permutation.
pub fn shift_matrix(p: usize) -> Mat {
    Mat::from_fn(p, p, |i, j| if j == (i + 1) % p { 1.0 } else { 0.0 })
}

/// Whether `C` equals `F diag(sqrt(p) F c) F^H` for its own first row `c`, to
/// relative Frobenius error `1e-9`. True exactly for circulant matrices.
pub fn circulant_log_check(c: &Mat) -> Result<bool> {
    Ok(circulant_diagonalization_error(c)? < 1e-9)
}

/// Relative Frobenius error of the DFT diagonalization of `c`.
pub fn circulant_diagonalization_error(c: &Mat) -> Result<f64> {
    if !c.is_square() {
        return Err(Error::DimensionMismatch {
            context: "circulant check",
            expected: c.rows(),
            found: c.cols(),
        });
    }
    let p = c.rows();
    let norm = c.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix("circulant check"));
    }
    let f = dft(p)?;
    let root = libm::sqrt(p as f64);
    let spectrum: Vec<Complex> = f.apply(c.row(0)).into_iter().map(|z| z.scale(root)).collect();
    let (re, im) = f.conjugate_diagonal(&spectrum);
    let diff = libm::sqrt(
        re.sub(c).as_slice().iter().map(|v| v * v).sum::<f64>()
            + im.as_slice().iter().map(|v| v * v).sum::<f64>(),
    );
    Ok(diff / norm)
}
