//! Sparse symmetric eigenvalue machinery behind the stability spectra:
//! CSR matrices, reverse Cuthill-McKee reordering, banded LDL^T
//! factorization (inertia counts and direct solves), and a shift-invert
//! Lanczos solver for the lowest eigenpairs of `A x = lambda B x` with a
//! positive diagonal `B`.
//!
//! Deliberately `f64`-only: subspace iterations need full double
//! precision regardless of what scalar the operator was assembled with.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MinsurfError, Result};
use crate::scalar::Real;

/// Symmetric sparse matrix in CSR form; both triangles stored.
#[derive(Debug, Clone)]
pub struct SymCsr<T: Real> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub val: Vec<T>,
}

impl<T: Real> SymCsr<T> {
    /// Assemble from (row, col, value) triplets, summing duplicates.
    /// Triplets must already contain both (i,j) and (j,i) for i != j.
    pub fn from_triplets(n: usize, triplets: &[(u32, u32, T)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut order: Vec<u32> = vec![0; triplets.len()];
        let mut fill = counts.clone();
        for (idx, &(i, _, _)) in triplets.iter().enumerate() {
            order[fill[i as usize]] = idx as u32;
            fill[i as usize] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        let mut row_entries: Vec<(u32, T)> = Vec::new();
        for i in 0..n {
            row_entries.clear();
            for &t in &order[counts[i]..counts[i + 1]] {
                let (_, j, v) = triplets[t as usize];
                row_entries.push((j, v));
            }
            row_entries.sort_unstable_by_key(|e| e.0);
            let mut idx = 0;
            while idx < row_entries.len() {
                let j = row_entries[idx].0;
                let mut v = T::zero();
                while idx < row_entries.len() && row_entries[idx].0 == j {
                    v += row_entries[idx].1;
                    idx += 1;
                }
                col.push(j);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        SymCsr { n, row_ptr, col, val }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let mut s = T::zero();
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[idx] * x[self.col[idx] as usize];
            }
            y[i] = s;
        }
    }

    pub fn diag(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[idx] as usize == i {
                    d[i] += self.val[idx];
                }
            }
        }
        d
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> T {
        let mut best = T::zero();
        for i in 0..self.n {
            let mut s = T::zero();
            for v in &self.val[self.row_ptr[i]..self.row_ptr[i + 1]] {
                s += v.abs();
            }
            best = best.max(s);
        }
        best
    }
}

/// Reverse Cuthill-McKee ordering; returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee<T: Real>(a: &SymCsr<T>) -> Vec<u32> {
    let n = a.n;
    let degree = |v: usize| a.row_ptr[v + 1] - a.row_ptr[v];
    // Pseudo-peripheral start: min degree, then two BFS sweeps outward.
    let mut start = (0..n).min_by_key(|&v| degree(v)).unwrap_or(0);
    for _ in 0..2 {
        let levels = bfs_levels(a, start);
        let mut far = start;
        let mut far_level = 0usize;
        for (v, l) in levels.iter().enumerate() {
            if let Some(l) = *l {
                if l > far_level || (l == far_level && degree(v) < degree(far)) {
                    far = v;
                    far_level = l;
                }
            }
        }
        start = far;
    }
    let mut perm = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    // Components beyond the first are appended in index order.
    let mut next_seed = 0;
    loop {
        queue.push_back(start);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            perm.push(v as u32);
            let mut nbrs: Vec<usize> = (a.row_ptr[v]..a.row_ptr[v + 1])
                .map(|idx| a.col[idx] as usize)
                .filter(|&w| !seen[w])
                .collect();
            nbrs.sort_unstable_by_key(|&w| (degree(w), w));
            for w in nbrs {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        while next_seed < n && seen[next_seed] {
            next_seed += 1;
        }
        if next_seed == n {
            break;
        }
        start = next_seed;
    }
    perm.reverse();
    perm
}

/// BFS depth per vertex from `start` (None for unreachable vertices).
fn bfs_levels<T: Real>(a: &SymCsr<T>, start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; a.n];
    let mut queue = std::collections::VecDeque::new();
    level[start] = Some(0);
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap();
        for idx in a.row_ptr[v]..a.row_ptr[v + 1] {
            let w = a.col[idx] as usize;
            if level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

/// Banded LDL^T factorization of a symmetric matrix, lower band stored
/// row-major: entry `(i, i - bw + k)` lives at `f[i * (bw + 1) + k]`.
pub struct BandLdlt {
    n: usize,
    bw: usize,
    f: Vec<f64>,
    /// Diagonal D of the factorization.
    d: Vec<f64>,
}

impl BandLdlt {
    /// Number of negative and near-zero pivots (Sylvester inertia).
    pub fn inertia(&self, zero_scale: f64) -> (usize, usize) {
        let mut neg = 0;
        let mut zero = 0;
        for &d in &self.d {
            if d.abs() <= zero_scale {
                zero += 1;
            } else if d < 0.0 {
                neg += 1;
            }
        }
        (neg, zero)
    }

    /// Solve `L D L^T x = b` in place (banded forward/backward sweeps).
    pub fn solve(&self, b: &mut [f64]) {
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for j in lo..i {
                s -= self.f[i * w + (j + bw - i)] * b[j];
            }
            b[i] = s;
        }
        for i in 0..self.n {
            b[i] /= self.d[i];
        }
        for i in (0..self.n).rev() {
            let hi = (i + bw).min(self.n - 1);
            let mut s = b[i];
            for j in i + 1..=hi {
                s -= self.f[j * w + (i + bw - j)] * b[j];
            }
            b[i] = s;
        }
    }
}

/// Factor `P (A - sigma B) P^T` where `P` is the RCM permutation and `B`
/// is diagonal. Fails if a pivot degenerates (no pivoting is performed).
pub fn factor_shifted(
    a: &SymCsr<f64>,
    bdiag: &[f64],
    sigma: f64,
    perm: &[u32],
) -> Result<BandLdlt> {
    let n = a.n;
    let mut inv = vec![0u32; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old as usize] = new as u32;
    }
    let mut bw = 0usize;
    for i in 0..n {
        for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col[idx] as usize;
            bw = bw.max((inv[i] as isize - inv[j] as isize).unsigned_abs());
        }
    }
    let w = bw + 1;
    let mut f = vec![0.0; n * w];
    for newi in 0..n {
        let i = perm[newi] as usize;
        for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
            let j = a.col[idx] as usize;
            let newj = inv[j] as usize;
            if newj <= newi {
                f[newi * w + (newj + bw - newi)] += a.val[idx];
            }
        }
        f[newi * w + bw] -= sigma * bdiag[i];
    }
    // In-place banded LDL^T.
    let mut d = vec![0.0; n];
    let scale = a.inf_norm().max(1e-300);
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        for j in lo..i {
            let mut s = f[i * w + (j + bw - i)];
            let kl = j.saturating_sub(bw).max(lo);
            for k in kl..j {
                s -= f[i * w + (k + bw - i)] * f[j * w + (k + bw - j)] * d[k];
            }
            f[i * w + (j + bw - i)] = s / d[j];
        }
        let mut s = f[i * w + bw];
        for k in lo..i {
            let l = f[i * w + (k + bw - i)];
            s -= l * l * d[k];
        }
        if !s.is_finite() || s.abs() < 1e-14 * scale {
            return Err(MinsurfError::Solver(format!(
                "pivot breakdown at row {i} (|d| = {:.3e})",
                s.abs()
            )));
        }
        d[i] = s;
        f[i * w + bw] = s;
    }
    Ok(BandLdlt { n, bw, f, d })
}

/// Count of generalized eigenvalues of `(A, B)` strictly below `sigma`
/// (`B` diagonal positive), via Sylvester inertia of `A - sigma B`. The
/// shift is jittered deterministically if a pivot lands on zero.
pub fn count_below(a: &SymCsr<f64>, bdiag: &[f64], sigma: f64) -> Result<usize> {
    let perm = reverse_cuthill_mckee(a);
    let scale = a.inf_norm().max(1.0);
    let mut shift = sigma;
    for attempt in 0..4 {
        match factor_shifted(a, bdiag, shift, &perm) {
            Ok(fac) => return Ok(fac.inertia(0.0).0),
            Err(_) if attempt < 3 => {
                shift = sigma + scale * 1e-12 * (attempt + 1) as f64;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

/// Converged lowest eigenpairs of `A x = lambda B x`.
pub struct EigenResult {
    /// Ascending generalized eigenvalues.
    pub values: Vec<f64>,
    /// `B`-orthonormal eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// Relative residual norms `|Ax - lambda Bx| / ((|A| + |lambda| |B|) |x|)`.
    pub residuals: Vec<f64>,
}

struct Deflation<'a> {
    vectors: &'a [Vec<f64>],
    bdiag: &'a [f64],
}

impl Deflation<'_> {
    /// B-orthogonalize `w` against the locked vectors (two passes).
    fn apply(&self, w: &mut [f64]) {
        for _ in 0..2 {
            for x in self.vectors {
                let mut dot = 0.0;
                for i in 0..w.len() {
                    dot += w[i] * self.bdiag[i] * x[i];
                }
                for i in 0..w.len() {
                    w[i] -= dot * x[i];
                }
            }
        }
    }
}

/// Lowest `k` eigenpairs of the generalized symmetric problem with
/// diagonal positive `B`, by shift-invert Lanczos with full
/// reorthogonalization and deflation of converged pairs.
///
/// The shift is placed below the generalized Gershgorin lower bound, so
/// the factored matrix is positive definite and every Ritz value maps
/// back through `lambda = sigma + 1/theta`. Deterministic: start vectors
/// come from a fixed-seed generator.
pub fn lowest_eigenpairs(
    a: &SymCsr<f64>,
    bdiag: &[f64],
    k: usize,
    tol: f64,
) -> Result<EigenResult> {
    let n = a.n;
    if k == 0 || k > n {
        return Err(MinsurfError::InvalidInput(format!(
            "requested {k} eigenpairs of an {n}-dimensional problem"
        )));
    }
    if bdiag.len() != n || bdiag.iter().any(|&b| b <= 0.0 || !b.is_finite()) {
        return Err(MinsurfError::InvalidInput(
            "mass diagonal must be positive and finite".into(),
        ));
    }

    // Generalized Gershgorin bounds.
    let mut g_lo = f64::INFINITY;
    let mut g_hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut center = 0.0;
        let mut radius = 0.0;
        for idx in a.row_ptr[i]..a.row_ptr[i + 1] {
            if a.col[idx] as usize == i {
                center += a.val[idx];
            } else {
                radius += a.val[idx].abs();
            }
        }
        g_lo = g_lo.min((center - radius) / bdiag[i]);
        g_hi = g_hi.max((center + radius) / bdiag[i]);
    }
    let spread = (g_hi - g_lo).max(1e-30);
    let perm = reverse_cuthill_mckee(a);
    let mut sigma = g_lo - 1e-6 * spread;
    let mut factor = None;
    for attempt in 0..6 {
        match factor_shifted(a, bdiag, sigma, &perm) {
            Ok(fac) if fac.inertia(0.0).0 == 0 => {
                factor = Some(fac);
                break;
            }
            _ => sigma -= spread * (1 << attempt) as f64 * 1e-6,
        }
    }
    let factor = factor.ok_or_else(|| {
        MinsurfError::Solver("could not find a definite shift below the spectrum".into())
    })?;

    let a_norm = a.inf_norm();
    let b_norm = bdiag.iter().fold(0.0f64, |m, &b| m.max(b));
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_vecs: Vec<Vec<f64>> = Vec::new();
    let mut locked_res: Vec<f64> = Vec::new();

    // Applies P (A - sigma B)^-1 B P^T in original ordering.
    let solve_op = |w: &[f64], out: &mut Vec<f64>, buf: &mut Vec<f64>| {
        buf.resize(n, 0.0);
        for newi in 0..n {
            buf[newi] = w[perm[newi] as usize] * bdiag[perm[newi] as usize];
        }
        factor.solve(buf);
        out.resize(n, 0.0);
        for newi in 0..n {
            out[perm[newi] as usize] = buf[newi];
        }
    };

    let mut run = 0usize;
    let mut m_budget = (3 * k + 40).min(n);
    while locked_vals.len() < k && run < k + 6 {
        let defl = Deflation { vectors: &locked_vecs, bdiag };
        // Deterministic start vector, fresh per run.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001 + run as u64);
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        defl.apply(&mut v);
        let norm = b_norm_of(&v, bdiag).max(1e-300);
        for x in v.iter_mut() {
            *x /= norm;
        }

        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = Vec::new();
        let mut buf = Vec::new();
        let m = m_budget.min(n - locked_vecs.len());
        for j in 0..m {
            solve_op(&basis[j], &mut w, &mut buf);
            defl.apply(&mut w);
            let aj = b_dot(&w, &basis[j], bdiag);
            alpha.push(aj);
            for i in 0..n {
                w[i] -= aj * basis[j][i];
            }
            if j > 0 {
                let bj = beta[j - 1];
                for i in 0..n {
                    w[i] -= bj * basis[j - 1][i];
                }
            }
            // Full reorthogonalization, two passes.
            for _ in 0..2 {
                for q in &basis {
                    let d = b_dot(&w, q, bdiag);
                    for i in 0..n {
                        w[i] -= d * q[i];
                    }
                }
            }
            let bj = b_norm_of(&w, bdiag);
            if bj < 1e-13 {
                break;
            }
            beta.push(bj);
            let mut next = w.clone();
            for x in next.iter_mut() {
                *x /= bj;
            }
            basis.push(next);
        }

        // Ritz pairs of the tridiagonal projection.
        let m = alpha.len();
        if m == 0 {
            break;
        }
        let mut t = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            t[(j, j)] = alpha[j];
            if j + 1 < m && j < beta.len() {
                t[(j, j + 1)] = beta[j];
                t[(j + 1, j)] = beta[j];
            }
        }
        let eig = t.symmetric_eigen();
        // Largest theta first: those are the lowest lambda.
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&p, &q| {
            eig.eigenvalues[q]
                .partial_cmp(&eig.eigenvalues[p])
                .expect("finite ritz values")
        });

        let mut new_locked = 0;
        for &ri in &idx {
            if locked_vals.len() >= k {
                break;
            }
            let theta = eig.eigenvalues[ri];
            if theta <= 0.0 {
                break;
            }
            let lambda = sigma + 1.0 / theta;
            let mut x = vec![0.0; n];
            for (j, q) in basis.iter().take(m).enumerate() {
                let cjr = eig.eigenvectors[(j, ri)];
                for i in 0..n {
                    x[i] += cjr * q[i];
                }
            }
            let norm = b_norm_of(&x, bdiag).max(1e-300);
            for xi in x.iter_mut() {
                *xi /= norm;
            }
            // True residual in the original problem.
            let mut ax = vec![0.0; n];
            a.matvec(&x, &mut ax);
            let mut r2 = 0.0;
            let mut x2 = 0.0;
            for i in 0..n {
                let r = ax[i] - lambda * bdiag[i] * x[i];
                r2 += r * r;
                x2 += x[i] * x[i];
            }
            let rel = r2.sqrt() / ((a_norm + lambda.abs() * b_norm) * x2.sqrt().max(1e-300));
            if rel > tol {
                // Ritz order is by closeness to sigma; once one fails,
                // deeper ones are not converged either.
                break;
            }
            canonical_sign(&mut x);
            locked_vals.push(lambda);
            locked_vecs.push(x);
            locked_res.push(rel);
            new_locked += 1;
        }
        if new_locked == 0 {
            m_budget = (m_budget * 2).min(n);
        }
        run += 1;
    }

    if locked_vals.len() < k {
        return Err(MinsurfError::Solver(format!(
            "eigensolver converged {io}/{k} pairs (best residuals {rs:?})",
            io = locked_vals.len(),
            rs = &locked_res
        )));
    }

    // Deflated runs can discover the spectrum slightly out of order when
    // clusters split across runs; sort the final set.
    let mut order: Vec<usize> = (0..locked_vals.len()).collect();
    order.sort_by(|&p, &q| locked_vals[p].partial_cmp(&locked_vals[q]).unwrap());
    Ok(EigenResult {
        values: order.iter().map(|&i| locked_vals[i]).collect(),
        vectors: order.iter().map(|&i| locked_vecs[i].clone()).collect(),
        residuals: order.iter().map(|&i| locked_res[i]).collect(),
    })
}

fn b_dot(x: &[f64], y: &[f64], bdiag: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += x[i] * bdiag[i] * y[i];
    }
    s
}

fn b_norm_of(x: &[f64], bdiag: &[f64]) -> f64 {
    b_dot(x, x, bdiag).sqrt()
}

/// Fix the overall sign so outputs are reproducible: the entry of
/// largest magnitude is made positive.
fn canonical_sign(x: &mut [f64]) {
    let mut best = 0;
    for i in 1..x.len() {
        if x[i].abs() > x[best].abs() {
            best = i;
        }
    }
    if x[best] < 0.0 {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dirichlet path Laplacian tri(-1, 2, -1).
    fn path_laplacian(n: usize) -> SymCsr<f64> {
        let mut t = Vec::new();
        for i in 0..n as u32 {
            t.push((i, i, 2.0));
            if i + 1 < n as u32 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SymCsr::from_triplets(n, &t)
    }

    /// Periodic ring Laplacian: eigenvalues 2 - 2 cos(2 pi k / n), all
    /// interior ones doubly degenerate.
    fn ring_laplacian(n: usize) -> SymCsr<f64> {
        let mut t = Vec::new();
        for i in 0..n as u32 {
            let j = (i + 1) % n as u32;
            t.push((i, i, 2.0));
            t.push((i, j, -1.0));
            t.push((j, i, -1.0));
        }
        SymCsr::from_triplets(n, &t)
    }

    #[test]
    fn csr_assembly_sums_duplicates() {
        let a = SymCsr::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.5), (1, 0, -1.0), (0, 1, -1.0), (1, 1, 4.0)]);
        assert_eq!(a.diag(), vec![3.5, 4.0]);
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0], &mut y);
        assert_eq!(y, vec![2.5, 3.0]);
    }

    #[test]
    fn path_laplacian_lowest_eigenvalues_match_closed_form() {
        let n = 60;
        let a = path_laplacian(n);
        let b = vec![1.0; n];
        let res = lowest_eigenpairs(&a, &b, 5, 1e-9).unwrap();
        for (k, lam) in res.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-9, "k={k} lam={lam} exact={exact}");
            assert!(res.residuals[k] <= 1e-9);
        }
        // B-orthonormality.
        for i in 0..5 {
            for j in 0..5 {
                let d = b_dot(&res.vectors[i], &res.vectors[j], &b);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-8, "gram[{i}{j}] = {d}");
            }
        }
    }

    #[test]
    fn generalized_problem_scales_by_mass() {
        let n = 40;
        let a = path_laplacian(n);
        let b = vec![2.0; n];
        let res = lowest_eigenpairs(&a, &b, 3, 1e-9).unwrap();
        for (k, lam) in res.values.iter().enumerate() {
            let exact = (2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos()) / 2.0;
            assert!((lam - exact).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn degenerate_pairs_of_the_ring_are_found() {
        let n = 48;
        let a = ring_laplacian(n);
        let b = vec![1.0; n];
        let res = lowest_eigenpairs(&a, &b, 5, 1e-9).unwrap();
        let lam = |k: usize| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos();
        let expected = [0.0, lam(1), lam(1), lam(2), lam(2)];
        for (got, want) in res.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "got {got} want {want}");
        }
    }

    #[test]
    fn inertia_counts_match_eigenvalue_counts() {
        let n = 60;
        let a = path_laplacian(n);
        let b = vec![1.0; n];
        for sigma in [0.05, 0.5, 1.0, 3.0] {
            let count = count_below(&a, &b, sigma).unwrap();
            let exact = (1..=n)
                .filter(|&k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos() < sigma)
                .count();
            assert_eq!(count, exact, "sigma={sigma}");
        }
    }

    #[test]
    fn shifted_spectrum_goes_negative() {
        // A - 1.2 I on the path graph: some eigenvalues below zero; the
        // solver must handle indefinite A (sigma below everything).
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n as u32 {
            t.push((i, i, 2.0 - 1.2));
            if i + 1 < n as u32 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = SymCsr::from_triplets(n, &t);
        let b = vec![1.0; n];
        let res = lowest_eigenpairs(&a, &b, 4, 1e-9).unwrap();
        for (k, lam) in res.values.iter().enumerate() {
            let exact =
                2.0 - 1.2 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-9);
        }
        assert!(res.values[0] < 0.0);
        let neg = count_below(&a, &b, 0.0).unwrap();
        let exact_neg = (1..=n)
            .filter(|&k| 0.8 - 2.0 * (std::f64::consts::PI * k as f64 / (n + 1) as f64).cos() < 0.0)
            .count();
        assert_eq!(neg, exact_neg);
    }
}
