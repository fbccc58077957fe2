//! Symmetric eigensolvers: dense Householder tridiagonalization with implicit
//! QL, and a restarted Lanczos iteration for the largest eigenpairs of a
//! sparse operator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{axpy, dot, norm, Scalar};

/// Eigenpairs sorted by ascending eigenvalue. `vectors[j]` pairs with
/// `values[j]` and has unit norm.
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

/// Full decomposition of a dense symmetric matrix given row-major.
pub fn symmetric_eigen<T: Scalar>(a: &[T], n: usize) -> Eigen<T> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Eigen {
            values: Vec::new(),
            vectors: Vec::new(),
        };
    }
    // column-major: v[c * n + r]; `a` is symmetric so the copy is its own transpose
    let mut v = a.to_vec();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    tql2(n, &mut v, &mut d, &mut e);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y)));
    Eigen {
        values: order.iter().map(|&j| d[j]).collect(),
        vectors: order.iter().map(|&j| v[j * n..(j + 1) * n].to_vec()).collect(),
    }
}

fn tred2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let zero = T::zero();
    let one = T::one();
    macro_rules! at {
        ($r:expr, $c:expr) => {
            v[($c) * n + ($r)]
        };
    }
    for j in 0..n {
        d[j] = at!(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = at!(i - 1, j);
                at!(i, j) = zero;
                at!(j, i) = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                at!(j, i) = f;
                g = e[j] + at!(j, j) * f;
                for k in (j + 1)..i {
                    g += at!(k, j) * d[k];
                    e[k] += at!(k, j) * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = at!(i - 1, j);
                at!(i, j) = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        at!(n - 1, i) = at!(i, i);
        at!(i, i) = one;
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = at!(k, i + 1) / h;
            }
            for j in 0..=i {
                let (left, right) = v.split_at_mut((i + 1) * n);
                let next = &right[..=i];
                let col = &mut left[j * n..j * n + i + 1];
                let g = dot(next, col);
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            at!(k, i + 1) = zero;
        }
    }
    for j in 0..n {
        d[j] = at!(n - 1, j);
        at!(n - 1, j) = zero;
    }
    at!(n - 1, n - 1) = one;
    e[0] = zero;
}

fn tql2<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let zero = T::zero();
    let one = T::one();
    let two = one + one;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
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
            let mut iter = 0;
            loop {
                iter += 1;
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
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
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = v.split_at_mut((i + 1) * n);
                    let col_i = &mut lo[i * n..];
                    let col_next = &mut hi[..n];
                    for k in 0..n {
                        let hk = col_next[k];
                        col_next[k] = s * col_i[k] + c * hk;
                        col_i[k] = c * col_i[k] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
}

/// Symmetric sparse matrix in CSR form.
#[derive(Debug, Clone)]
pub struct SparseSymmetric<T> {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseSymmetric<T> {
    /// `rows[i]` lists `(j, value)`; the caller guarantees symmetry.
    pub fn from_rows(rows: &[Vec<(u32, T)>]) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in rows {
            for &(j, x) in r {
                cols.push(j);
                vals.push(x);
            }
            offsets.push(cols.len());
        }
        SparseSymmetric {
            n: rows.len(),
            offsets,
            cols,
            vals,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&j, &x)| (j as usize, x))
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.offsets[i]..self.offsets[i + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = s;
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut a = vec![T::zero(); self.n * self.n];
        for i in 0..self.n {
            for (j, x) in self.row(i) {
                a[i * self.n + j] = x;
            }
        }
        a
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Converged when every wanted Ritz residual norm is below this, or below
    /// 1000 machine epsilons when that is larger.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_restarts: 500,
            seed: 0,
        }
    }
}

/// Orthogonalizes `w` against `basis` twice and returns its remaining norm.
fn orthogonalize<T: Scalar>(w: &mut [T], basis: &[Vec<T>]) -> T {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            axpy(-c, b, w);
        }
    }
    norm(w)
}

/// The `k` largest eigenpairs of `a`, ascending like [`symmetric_eigen`].
///
/// Thick-restart Lanczos with full reorthogonalization: the Krylov basis is
/// grown to `m` vectors, the Rayleigh quotient is diagonalized, and the best
/// `k + extra` Ritz vectors plus the residual direction seed the next cycle.
pub fn largest_eigenpairs<T: Scalar>(a: &SparseSymmetric<T>, k: usize, opts: &LanczosOptions) -> Eigen<T> {
    let n = a.n();
    let k = k.min(n);
    if k == 0 {
        return Eigen {
            values: Vec::new(),
            vectors: Vec::new(),
        };
    }
    if n <= 64 {
        let full = symmetric_eigen(&a.to_dense(), n);
        return Eigen {
            values: full.values[n - k..].to_vec(),
            vectors: full.vectors[n - k..].to_vec(),
        };
    }
    let keep = (k + 8).min(n);
    let m = (2 * keep + 20).min(n);
    // residuals below a few hundred ulps are out of reach in low precision
    let tol = T::of(opts.tol).max(T::of(1e3) * T::epsilon());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut images: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut next: Vec<T> = (0..n).map(|_| T::of(rng.random::<f64>() - 0.5)).collect();
    let mut result = None;

    for _restart in 0..opts.max_restarts {
        while basis.len() < m {
            let nrm = orthogonalize(&mut next, &basis);
            if nrm <= T::of(1e-12) {
                // invariant subspace found; continue from a fresh random direction
                next = (0..n).map(|_| T::of(rng.random::<f64>() - 0.5)).collect();
                let nrm = orthogonalize(&mut next, &basis);
                if nrm <= T::of(1e-12) {
                    break;
                }
                next.iter_mut().for_each(|x| *x /= nrm);
            } else {
                next.iter_mut().for_each(|x| *x /= nrm);
            }
            let mut img = vec![T::zero(); n];
            a.matvec(&next, &mut img);
            basis.push(std::mem::take(&mut next));
            next = img.clone();
            images.push(img);
        }
        let size = basis.len();
        // Rayleigh quotient H = Vᵀ A V
        let mut h = vec![T::zero(); size * size];
        for i in 0..size {
            for j in i..size {
                let x = dot(&basis[i], &images[j]);
                h[i * size + j] = x;
                h[j * size + i] = x;
            }
        }
        let small = symmetric_eigen(&h, size);
        let take = keep.min(size);
        let mut ritz_vecs = Vec::with_capacity(take);
        let mut ritz_imgs = Vec::with_capacity(take);
        let mut ritz_vals = Vec::with_capacity(take);
        let mut worst = T::zero();
        let mut residual_dir: Option<Vec<T>> = None;
        let mut residual_norm = T::zero();
        for idx in (size - take)..size {
            let y = &small.vectors[idx];
            let mut x = vec![T::zero(); n];
            let mut ax = vec![T::zero(); n];
            for (c, (bv, iv)) in y.iter().zip(basis.iter().zip(&images)) {
                axpy(*c, bv, &mut x);
                axpy(*c, iv, &mut ax);
            }
            let theta = small.values[idx];
            let r: Vec<T> = ax.iter().zip(&x).map(|(&p, &q)| p - theta * q).collect();
            let rn = norm(&r);
            if idx >= size - k {
                worst = worst.max(rn);
            }
            if rn > residual_norm {
                residual_norm = rn;
                residual_dir = Some(r);
            }
            ritz_vecs.push(x);
            ritz_imgs.push(ax);
            ritz_vals.push(theta);
        }
        let converged = worst <= tol || size == n;
        result = Some((ritz_vals.clone(), ritz_vecs.clone()));
        if converged {
            break;
        }
        basis = ritz_vecs;
        images = ritz_imgs;
        next = residual_dir.unwrap_or_else(|| (0..n).map(|_| T::of(rng.random::<f64>() - 0.5)).collect());
    }
    let (vals, vecs) = result.expect("at least one cycle ran");
    let start = vals.len() - k;
    let mut vectors: Vec<Vec<T>> = vecs[start..].to_vec();
    for v in &mut vectors {
        let nv = norm(v);
        if nv > T::zero() {
            v.iter_mut().for_each(|x| *x /= nv);
        }
    }
    Eigen {
        values: vals[start..].to_vec(),
        vectors,
    }
}
