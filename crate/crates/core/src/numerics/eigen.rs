//! Dense real symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration with Wilkinson-style shifts. All inner loops walk contiguous rows
//! of row-major storage; no pivoting or randomization, so results are
//! bit-reproducible for identical input.

use crate::error::{Error, Result};

/// Dense symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from the lower triangle produced by `f(i, j)` with `j <= i`.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts full row-major data. Asymmetry above `1e-12` relative to the
    /// largest entry is rejected; smaller asymmetry is averaged away.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::invalid(
                "data",
                format!("expected {} entries, got {}", n * n, data.len()),
            ));
        }
        let scale = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut m = SymMatrix { n, data };
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (m.data[i * n + j], m.data[j * n + i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::invalid(
                        "data",
                        format!("asymmetric at ({i}, {j}): {a} vs {b}"),
                    ));
                }
                let avg = 0.5 * (a + b);
                m.data[i * n + j] = avg;
                m.data[j * n + i] = avg;
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to `(i, j)` and, off the diagonal, to `(j, i)`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += c;
        }
        m
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors.
///
/// Eigenvectors are stored one per row: `vector(k)` is the eigenvector of
/// `values[k]`. A partial decomposition may carry fewer vectors than values.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    n: usize,
    vectors: Vec<f64>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector_count(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.vectors.len() / self.n
        }
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    /// `‖A·V − V·diag(λ)‖_max` over the stored vectors.
    pub fn residual(&self, a: &SymMatrix) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.vector_count() {
            let v = self.vector(k);
            for i in 0..self.n {
                let av: f64 = a.row(i).iter().zip(v).map(|(x, y)| x * y).sum();
                worst = worst.max((av - self.values[k] * v[i]).abs());
            }
        }
        worst
    }

    /// `‖VᵀV − I‖_max` over the stored vectors.
    pub fn orthogonality_error(&self) -> f64 {
        let m = self.vector_count();
        let mut worst = 0.0f64;
        for a in 0..m {
            for b in 0..=a {
                let dot: f64 = self
                    .vector(a)
                    .iter()
                    .zip(self.vector(b))
                    .map(|(x, y)| x * y)
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Full eigendecomposition of a symmetric matrix.
pub fn sym_eig(a: &SymMatrix) -> Result<EigenDecomposition> {
    check_finite(a)?;
    let n = a.dim();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            n: 0,
            vectors: vec![],
        });
    }
    let (mut d, mut e, reflectors) = reduce(a);
    // Rows of `zt` are the columns of the tridiagonal eigenvector matrix.
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    implicit_ql(&mut d, &mut e, Some(&mut zt), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].total_cmp(&d[y]).then(x.cmp(&y)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &src in &order {
        let mut v = zt[src * n..(src + 1) * n].to_vec();
        back_transform(&reflectors, &mut v);
        vectors.extend_from_slice(&v);
    }
    Ok(EigenDecomposition { values, n, vectors })
}

/// All eigenvalues, but only the eigenvectors of the `k` lowest.
///
/// Eigenvectors come from inverse iteration on the tridiagonal form with
/// re-orthogonalization inside clusters of close eigenvalues, which avoids
/// accumulating the full rotation matrix.
pub fn sym_eig_partial(a: &SymMatrix, k: usize) -> Result<EigenDecomposition> {
    if k >= a.dim() {
        return sym_eig(a);
    }
    sym_eig_selected(a, |_| Ok(k))
}

/// Like [`sym_eig_partial`], with the number of eigenvectors chosen by
/// `select` after it has seen the full ascending spectrum.
pub fn sym_eig_selected(
    a: &SymMatrix,
    select: impl FnOnce(&[f64]) -> Result<usize>,
) -> Result<EigenDecomposition> {
    let n = a.dim();
    check_finite(a)?;
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            n: 0,
            vectors: vec![],
        });
    }
    let (d, e, reflectors) = reduce(a);

    // Split into unreduced blocks; e[i] couples i-1 and i.
    let mut blocks = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if e[i].abs() <= f64::EPSILON * (d[i - 1].abs() + d[i].abs()) {
            blocks.push(start..i);
            start = i;
        }
    }
    blocks.push(start..n);

    // (value, block, rank within block)
    let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(n);
    let mut block_values = Vec::with_capacity(blocks.len());
    for (b, r) in blocks.iter().enumerate() {
        let mut bd = d[r.clone()].to_vec();
        let mut be: Vec<f64> = r.clone().map(|i| if i == r.start { 0.0 } else { e[i] }).collect();
        implicit_ql(&mut bd, &mut be, None, r.len()).map_err(|err| match err {
            Error::EigenNoConvergence { index, iterations } => Error::EigenNoConvergence {
                index: index + r.start,
                iterations,
            },
            other => other,
        })?;
        bd.sort_by(f64::total_cmp);
        for (rank, &v) in bd.iter().enumerate() {
            all.push((v, b, rank));
        }
        block_values.push(bd);
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let values: Vec<f64> = all.iter().map(|t| t.0).collect();
    let k = select(&values)?.min(n);

    // Inverse iteration per block over the selected eigenvalues, ascending.
    let mut wanted: Vec<Vec<usize>> = vec![Vec::new(); blocks.len()];
    for &(_, b, rank) in all.iter().take(k) {
        wanted[b].push(rank);
    }
    let mut block_vectors: Vec<Vec<Vec<f64>>> = Vec::with_capacity(blocks.len());
    for (b, r) in blocks.iter().enumerate() {
        let bd = &d[r.clone()];
        let be: Vec<f64> = r.clone().skip(1).map(|i| e[i]).collect();
        let ranks = &wanted[b];
        let lambdas: Vec<f64> = ranks.iter().map(|&j| block_values[b][j]).collect();
        block_vectors.push(tridiagonal_vectors(bd, &be, &lambdas, b as u64));
    }

    let mut taken = vec![0usize; blocks.len()];
    let mut vectors = Vec::with_capacity(k * n);
    for &(_, b, _) in all.iter().take(k) {
        let r = &blocks[b];
        let mut v = vec![0.0; n];
        v[r.clone()].copy_from_slice(&block_vectors[b][taken[b]]);
        taken[b] += 1;
        back_transform(&reflectors, &mut v);
        vectors.extend_from_slice(&v);
    }
    Ok(EigenDecomposition { values, n, vectors })
}

/// For symmetric `z` and `x` on the same space: the eigenvector of `z` whose
/// eigenvalue has the largest magnitude (ties go to the lower one), returned
/// as `(zᵀ-eigenvalue, vᵀ x v)`.
pub fn extremal_expectation(z: &SymMatrix, x: &SymMatrix) -> Result<(f64, f64)> {
    let dec = sym_eig(z)?;
    let g = z.dim();
    if g == 0 {
        return Err(Error::invalid("z", "empty block"));
    }
    let pick = if dec.values[g - 1].abs() > dec.values[0].abs() { g - 1 } else { 0 };
    let c = dec.vector(pick);
    let mut xv = 0.0;
    for i in 0..g {
        let row: f64 = (0..g).map(|j| x.get(i, j) * c[j]).sum();
        xv += c[i] * row;
    }
    Ok((dec.values[pick], xv))
}

/// Eigenvalues only.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    check_finite(a)?;
    let n = a.dim();
    if n == 0 {
        return Ok(vec![]);
    }
    let (mut d, mut e, _) = reduce(a);
    implicit_ql(&mut d, &mut e, None, n)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn check_finite(a: &SymMatrix) -> Result<()> {
    let n = a.dim();
    match a.data.iter().position(|x| !x.is_finite()) {
        Some(p) => Err(Error::NonFinite {
            row: p / n,
            col: p % n,
        }),
        None => Ok(()),
    }
}

fn reduce(a: &SymMatrix) -> (Vec<f64>, Vec<f64>, Vec<Reflector>) {
    let n = a.dim();
    let mut work = a.data.clone();
    let reflectors = tridiagonalize(&mut work, n);
    let d = (0..n).map(|i| work[i * n + i]).collect();
    let e = (0..n)
        .map(|i| if i == 0 { 0.0 } else { work[i * n + i - 1] })
        .collect();
    (d, e, reflectors)
}

/// Maps a tridiagonal-basis vector back to the original basis and applies the
/// sign convention: largest-magnitude component positive, first index on ties.
fn back_transform(reflectors: &[Reflector], v: &mut [f64]) {
    for r in reflectors.iter().rev() {
        r.apply(v);
    }
    let (mut imax, mut vmax) = (0, 0.0f64);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > vmax {
            vmax = x.abs();
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Inverse iteration for an unreduced tridiagonal block (diagonal `d`,
/// off-diagonal `e` of length `d.len() - 1`) at ascending eigenvalues `lambdas`.
fn tridiagonal_vectors(d: &[f64], e: &[f64], lambdas: &[f64], seed: u64) -> Vec<Vec<f64>> {
    const MAX_ITS: usize = 5;
    const EXTRA: usize = 2;
    let n = d.len();
    if n == 1 {
        return lambdas.iter().map(|_| vec![1.0]).collect();
    }
    let onenrm = (0..n)
        .map(|i| {
            d[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 }
        })
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let ortol = 1e-3 * onenrm;
    let pertol = 10.0 * eps * onenrm;
    let stpcrt = (0.1 / n as f64).sqrt();

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    let mut rng = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x2545_F491_4F6C_DD1D;
    for (j, &lambda) in lambdas.iter().enumerate() {
        let mut shift = lambda;
        if j > 0 {
            if lambda - lambdas[j - 1] > ortol {
                cluster_start = j;
            }
            if shift - prev_shift < pertol {
                shift = prev_shift + pertol;
            }
        }
        prev_shift = shift;

        let lu = TridiagLu::factor(d, e, shift, eps * onenrm);
        let mut b: Vec<f64> = (0..n)
            .map(|_| {
                rng ^= rng << 13;
                rng ^= rng >> 7;
                rng ^= rng << 17;
                (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect();
        let mut converged_for = 0;
        for _ in 0..MAX_ITS + EXTRA {
            let norm1: f64 = b.iter().map(|x| x.abs()).sum();
            let scale = n as f64 * onenrm * eps.max(lu.last_pivot().abs()) / norm1;
            b.iter_mut().for_each(|x| *x *= scale);
            lu.solve(&mut b);
            for prev in &out[cluster_start..j] {
                let dot: f64 = prev.iter().zip(&b).map(|(x, y)| x * y).sum();
                b.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
            }
            let nrm = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if nrm >= stpcrt {
                converged_for += 1;
                if converged_for > EXTRA {
                    break;
                }
            }
            if !(nrm > 0.0) || !nrm.is_finite() {
                break;
            }
            b.iter_mut().for_each(|x| *x /= nrm);
        }
        // Second pass of Gram-Schmidt keeps clustered vectors orthogonal.
        for prev in &out[cluster_start..j] {
            let dot: f64 = prev.iter().zip(&b).map(|(x, y)| x * y).sum();
            b.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
        }
        let norm2 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        b.iter_mut().for_each(|x| *x /= norm2);
        out.push(b);
    }
    out
}

/// LU factorization with partial pivoting of `T − λI` for tridiagonal `T`.
struct TridiagLu {
    diag: Vec<f64>,
    up1: Vec<f64>,
    up2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
    tiny: f64,
}

impl TridiagLu {
    fn factor(d: &[f64], e: &[f64], lambda: f64, tiny: f64) -> Self {
        let n = d.len();
        let mut diag: Vec<f64> = d.iter().map(|x| x - lambda).collect();
        let mut up1: Vec<f64> = e.to_vec();
        up1.push(0.0);
        let mut up2 = vec![0.0; n];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for k in 0..n - 1 {
            let sub = e[k];
            if diag[k].abs() >= sub.abs() {
                let piv = if diag[k] == 0.0 { tiny } else { diag[k] };
                diag[k] = piv;
                let m = sub / piv;
                mult[k] = m;
                diag[k + 1] -= m * up1[k];
            } else {
                let m = diag[k] / sub;
                mult[k] = m;
                swapped[k] = true;
                let (ok1, next_up1) = (up1[k], if k + 1 < n - 1 { up1[k + 1] } else { 0.0 });
                let next_diag = diag[k + 1];
                diag[k] = sub;
                up1[k] = next_diag;
                up2[k] = next_up1;
                diag[k + 1] = ok1 - m * next_diag;
                if k + 1 < n - 1 {
                    up1[k + 1] = -m * next_up1;
                }
            }
        }
        TridiagLu {
            diag,
            up1,
            up2,
            mult,
            swapped,
            tiny,
        }
    }

    fn last_pivot(&self) -> f64 {
        *self.diag.last().unwrap()
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for k in 0..n - 1 {
            if self.swapped[k] {
                b.swap(k, k + 1);
            }
            b[k + 1] -= self.mult[k] * b[k];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.up1[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.up2[i] * b[i + 2];
            }
            let mut piv = self.diag[i];
            if piv.abs() < self.tiny {
                piv = if piv < 0.0 { -self.tiny } else { self.tiny };
            }
            b[i] = v / piv;
        }
    }
}

/// `P = I − u uᵀ / h` acting on the leading `u.len()` coordinates.
struct Reflector {
    u: Vec<f64>,
    h: f64,
}

impl Reflector {
    #[inline]
    fn apply(&self, v: &mut [f64]) {
        let m = self.u.len();
        let dot: f64 = self.u.iter().zip(&v[..m]).map(|(a, b)| a * b).sum();
        let f = dot / self.h;
        for (x, u) in v[..m].iter_mut().zip(&self.u) {
            *x -= f * u;
        }
    }
}

/// Reduces the lower triangle of `a` (row-major, n×n) in place to tridiagonal form; the upper triangle is ignored. Returns
/// the reflectors in the order they were applied, last row first.
fn tridiagonalize(a: &mut [f64], n: usize) -> Vec<Reflector> {
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![0.0; n];
    for i in (2..n).rev() {
        let row = &a[i * n..i * n + i];
        let scale = row.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale == 0.0 || row[..i - 1].iter().all(|&x| x == 0.0) {
            continue;
        }
        let mut u: Vec<f64> = row.iter().map(|x| x / scale).collect();
        let sigma = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let last = u[i - 1];
        let alpha = if last >= 0.0 { -sigma } else { sigma };
        u[i - 1] -= alpha;
        let h = sigma * sigma - last * alpha;
        // Undo the scaling on the reflected value; `u` may stay scaled since
        // P only depends on its direction.
        let new_sub = alpha * scale;

        // p = A u / h from the lower triangle only, k = uᵀp / 2h, q = p − k u
        p[..i].iter_mut().for_each(|x| *x = 0.0);
        for j in 0..i {
            let rj = &a[j * n..j * n + j];
            let uj = u[j];
            let mut acc = a[j * n + j] * uj;
            for ((pk, &x), &uk) in p[..j].iter_mut().zip(rj).zip(&u[..j]) {
                acc += x * uk;
                *pk += x * uj;
            }
            p[j] += acc;
        }
        p[..i].iter_mut().for_each(|x| *x /= h);
        let kk = u.iter().zip(&p[..i]).map(|(x, y)| x * y).sum::<f64>() / (2.0 * h);
        for j in 0..i {
            p[j] -= kk * u[j];
        }
        for j in 0..i {
            let (qj, uj) = (p[j], u[j]);
            let rj = &mut a[j * n..j * n + j + 1];
            for ((x, &uk), &qk) in rj.iter_mut().zip(&u[..=j]).zip(&p[..=j]) {
                *x -= qj * uk + uj * qk;
            }
        }
        for k in 0..i - 1 {
            a[i * n + k] = 0.0;
        }
        a[i * n + i - 1] = new_sub;
        reflectors.push(Reflector { u, h });
    }
    reflectors
}

/// Implicit QL on the symmetric tridiagonal (d, e) where `e[i]` couples
/// `i-1` and `i`. Rotations are accumulated into the rows of `zt`.
fn implicit_ql(d: &mut [f64], e: &mut [f64], mut zt: Option<&mut [f64]>, n: usize) -> Result<()> {
    const MAX_ITER: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_ITER {
                return Err(Error::EigenNoConvergence {
                    index: l,
                    iterations: MAX_ITER,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                if let Some(zt) = zt.as_deref_mut() {
                    let (lo, hi) = zt.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (x, y) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *y;
                        *y = s * *x + c * f;
                        *x = c * *x - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_lower_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = sym_eig(&SymMatrix::identity(5)).unwrap();
        assert!(eig.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(eig.orthogonality_error() < 1e-14);
    }

    #[test]
    fn pauli_x() {
        let m = SymMatrix::from_row_major(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let eig = sym_eig(&m).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-15);
        assert!((eig.values[1] - 1.0).abs() < 1e-15);
        // sign convention: largest component positive
        for k in 0..2 {
            let v = eig.vector(k);
            let big = if v[0].abs() >= v[1].abs() { v[0] } else { v[1] };
            assert!(big > 0.0);
        }
    }

    #[test]
    fn random_50_meets_residual_contract() {
        let a = random_sym(50, 7);
        let eig = sym_eig(&a).unwrap();
        assert!(eig.residual(&a) <= 1e-10 * a.max_abs());
        assert!(eig.orthogonality_error() <= 1e-10);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = eig.values.iter().sum();
        assert!((tr - a.trace()).abs() <= 1e-10 * a.trace().abs().max(1.0));
    }

    #[test]
    fn diagonal_shift_moves_spectrum() {
        let a = random_sym(30, 11);
        let base = sym_eigenvalues(&a).unwrap();
        let shifted = sym_eigenvalues(&a.shifted(2.5)).unwrap();
        for (x, y) in base.iter().zip(&shifted) {
            assert!((y - x - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = SymMatrix::zeros(3);
        m.set(2, 1, f64::NAN);
        assert!(matches!(sym_eig(&m), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let r = SymMatrix::from_row_major(2, vec![0.0, 1.0, 0.5, 0.0]);
        assert!(r.is_err());
    }

    #[test]
    fn degenerate_spectrum_keeps_orthonormal_vectors() {
        // block diagonal with repeated blocks -> exact multiplicities
        let n = 12;
        let mut m = SymMatrix::zeros(n);
        for b in 0..4 {
            let o = 3 * b;
            m.set(o, o, 1.0);
            m.set(o + 1, o + 1, 2.0);
            m.set(o + 2, o + 2, 1.0);
            m.set(o + 1, o, 0.5);
            m.set(o + 2, o + 1, 0.25);
        }
        let eig = sym_eig(&m).unwrap();
        assert!(eig.orthogonality_error() < 1e-12);
        assert!(eig.residual(&m) < 1e-12);
    }

    #[test]
    fn partial_matches_full() {
        let a = random_sym(40, 3);
        let full = sym_eig(&a).unwrap();
        let part = sym_eig_partial(&a, 5).unwrap();
        assert_eq!(part.vector_count(), 5);
        for (x, y) in full.values.iter().zip(&part.values) {
            assert!((x - y).abs() < 1e-13);
        }
        for k in 0..5 {
            for (x, y) in full.vector(k).iter().zip(part.vector(k)) {
                assert!((x - y).abs() < 1e-10);
            }
        }
        assert!(part.residual(&a) < 1e-12);
        assert!(part.orthogonality_error() < 1e-12);
    }

    #[test]
    fn partial_handles_exact_degeneracy() {
        // spin-up/spin-down copies of one ladder: every level doubly degenerate
        let n = 40;
        let mut m = SymMatrix::zeros(n);
        for i in 0..n / 2 {
            for blk in 0..2 {
                let o = blk * n / 2;
                m.set(o + i, o + i, i as f64 * 0.3);
                if i + 1 < n / 2 {
                    m.set(o + i + 1, o + i, 0.7);
                }
            }
        }
        let part = sym_eig_partial(&m, 12).unwrap();
        assert!(part.residual(&m) < 1e-12);
        assert!(part.orthogonality_error() < 1e-12);
        for k in 0..6 {
            assert!((part.values[2 * k] - part.values[2 * k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn selected_count_sees_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 30;
        let m = SymMatrix::from_lower_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let all = sym_eig_selected(&m, |vals| Ok(vals.iter().filter(|&&v| v < 0.0).count())).unwrap();
        let negative = all.values.iter().filter(|&&v| v < 0.0).count();
        assert_eq!(all.vector_count(), negative);
        let every = sym_eig_selected(&m, |_| Ok(n + 5)).unwrap();
        assert_eq!(every.vector_count(), n);
        assert!(every.residual(&m) < 1e-12 && every.orthogonality_error() < 1e-12);
        assert!(sym_eig_selected(&m, |_| Err(Error::FitFailure("stop".into()))).is_err());
    }

    #[test]
    fn partial_on_clustered_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 80;
        // nearly degenerate diagonal plus weak random coupling
        let m = SymMatrix::from_lower_fn(n, |i, j| {
            if i == j {
                (i / 4) as f64
            } else {
                1e-9 * rng.gen_range(-1.0..1.0)
            }
        });
        let part = sym_eig_partial(&m, 30).unwrap();
        assert!(part.residual(&m) < 1e-12 * m.max_abs().max(1.0));
        assert!(part.orthogonality_error() < 1e-11);
    }

    #[test]
    fn repeated_calls_are_bit_identical() {
        let a = random_sym(25, 99);
        assert_eq!(sym_eig(&a).unwrap(), sym_eig(&a).unwrap());
    }
}
