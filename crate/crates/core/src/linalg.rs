//! Sparse assembly, reverse Cuthill-McKee ordering and a banded LU with
//! partial pivoting. Used for the Newton-KKT solves.

use std::collections::VecDeque;

use nalgebra::DMatrix;

/// Coordinate-format sparse matrix. Duplicate entries are summed.
#[derive(Debug, Clone, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        if v != 0.0 {
            self.entries.push((i, j, v));
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Self::new(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                t.push(i, j, m[(i, j)]);
            }
        }
        t
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// `Aᵀ x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for &(i, j, v) in &self.entries {
            y[j] += v * x[i];
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }
}

/// Reverse Cuthill-McKee ordering of the symmetrised pattern of a square matrix.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(n: usize, entries: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, _) in entries {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let root = peripheral_root(start, &adj, &degree);
        let mut queue = VecDeque::new();
        visited[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// A few rounds of the George-Liu pseudo-peripheral node search.
fn peripheral_root(start: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = start;
    let mut depth = 0;
    for _ in 0..8 {
        let (levels, last) = bfs_levels(root, adj);
        if levels <= depth {
            break;
        }
        depth = levels;
        root = *last.iter().min_by_key(|&&v| (degree[v], v)).unwrap_or(&root);
    }
    root
}

fn bfs_levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut seen = std::collections::HashSet::new();
    seen.insert(root);
    let mut frontier = vec![root];
    let mut levels = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in &adj[v] {
                if seen.insert(u) {
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            return (levels, frontier);
        }
        levels += 1;
        frontier = next;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorError {
    /// A pivot fell below the relative threshold at the given (permuted) column.
    Singular { column: usize, pivot: f64 },
    NotFinite,
}

/// LU factors of a permuted band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<f64>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Factor a square matrix given as triplets, after reordering by `perm`
    /// (`perm[new] = old`). Pivots below `pivot_tol * max|K|` are singular.
    pub fn factor(k: &Triplets, perm: &[usize], pivot_tol: f64) -> Result<Self, FactorError> {
        let n = k.nrows;
        assert_eq!(k.ncols, n);
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in &k.entries {
            let (pi, pj) = (inv[i], inv[j]);
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
        // make the pattern symmetric so pivoting fill stays in the band
        let bw = kl.max(ku);
        let (kl, ku) = (bw, bw);
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            ab: vec![0.0; n * width],
            pivots: vec![0; n],
            perm: perm.to_vec(),
        };
        let mut scale: f64 = 0.0;
        for &(i, j, v) in &k.entries {
            if !v.is_finite() {
                return Err(FactorError::NotFinite);
            }
            let id = lu.idx(inv[i], inv[j]);
            lu.ab[id] += v;
            scale = scale.max(v.abs());
        }
        let threshold = pivot_tol * scale.max(f64::MIN_POSITIVE);
        for col in 0..n {
            let last_row = (col + kl).min(n - 1);
            let mut p = col;
            let mut best = lu.ab[lu.idx(col, col)].abs();
            for r in col + 1..=last_row {
                let v = lu.ab[lu.idx(r, col)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= threshold || !best.is_finite() {
                return Err(FactorError::Singular { column: col, pivot: best });
            }
            lu.pivots[col] = p;
            let last_col = (col + kl + ku).min(n - 1);
            if p != col {
                for j in col..=last_col {
                    let a = lu.idx(col, j);
                    let b = lu.idx(p, j);
                    lu.ab.swap(a, b);
                }
            }
            let piv = lu.ab[lu.idx(col, col)];
            for r in col + 1..=last_row {
                let id = lu.idx(r, col);
                let m = lu.ab[id] / piv;
                lu.ab[id] = m;
                if m != 0.0 {
                    for j in col + 1..=last_col {
                        let src = lu.ab[lu.idx(col, j)];
                        let dst = lu.idx(r, j);
                        lu.ab[dst] -= m * src;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn bandwidth(&self) -> usize {
        self.kl
    }

    /// Solve `K x = b` in the original ordering.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for col in 0..n {
            let p = self.pivots[col];
            if p != col {
                y.swap(col, p);
            }
            let yc = y[col];
            if yc != 0.0 {
                for r in col + 1..=(col + self.kl).min(n - 1) {
                    y[r] -= self.ab[self.idx(r, col)] * yc;
                }
            }
        }
        for row in (0..n).rev() {
            let mut s = y[row];
            for j in row + 1..=(row + self.kl + self.ku).min(n - 1) {
                s -= self.ab[self.idx(row, j)] * y[j];
            }
            y[row] = s / self.ab[self.idx(row, row)];
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Counts of positive, negative and numerically zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Inertia of a symmetric matrix by block `LDLᵀ` in the order `perm`.
///
/// With bandwidth `b` under `perm`, blocks of `b` consecutive indices make the
/// matrix block tridiagonal. The Schur complements
/// `S_{i+1} = K_{i+1,i+1} - K_{i+1,i} S_i⁻¹ K_{i,i+1}` are diagonalised densely
/// and their eigenvalue signs summed (Sylvester's law). Eigenvalues below
/// `tiny * max|K|` count as zero and are dropped from `S_i⁻¹`. `None` if a
/// value is not finite.
pub fn block_inertia(k: &Triplets, perm: &[usize], tiny: f64) -> Option<Inertia> {
    let n = k.nrows;
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let mut bw = 1;
    let mut scale: f64 = 0.0;
    for &(i, j, v) in &k.entries {
        bw = bw.max(inv[i].abs_diff(inv[j]));
        scale = scale.max(v.abs());
        if !v.is_finite() {
            return None;
        }
    }
    let threshold = tiny * scale.max(f64::MIN_POSITIVE);
    let blocks = n.div_ceil(bw);
    let size = |b: usize| bw.min(n - b * bw);
    let mut diag: Vec<DMatrix<f64>> = (0..blocks).map(|b| DMatrix::zeros(size(b), size(b))).collect();
    // upper[b] couples block b (rows) with block b + 1 (columns)
    let mut upper: Vec<DMatrix<f64>> = (0..blocks.saturating_sub(1)).map(|b| DMatrix::zeros(size(b), size(b + 1))).collect();
    for &(i, j, v) in &k.entries {
        let (pi, pj) = (inv[i], inv[j]);
        let (bi, bj) = (pi / bw, pj / bw);
        if bi == bj {
            diag[bi][(pi % bw, pj % bw)] += v;
        } else if bj == bi + 1 {
            upper[bi][(pi % bw, pj % bw)] += v;
        }
    }
    let mut out = Inertia { positive: 0, negative: 0, zero: 0 };
    let mut carry: Option<DMatrix<f64>> = None;
    for b in 0..blocks {
        let mut s = diag[b].clone();
        if let Some(c) = carry.take() {
            s -= c;
        }
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
            return None;
        }
        for &lam in eig.eigenvalues.iter() {
            if lam.abs() <= threshold {
                out.zero += 1;
            } else if lam > 0.0 {
                out.positive += 1;
            } else {
                out.negative += 1;
            }
        }
        if b + 1 < blocks {
            // K_{b+1,b} S⁻¹ K_{b,b+1} with the pseudo-inverse on the nonzero spectrum
            let q = &eig.eigenvectors;
            let y = q.transpose() * &upper[b];
            let mut scaled = y.clone();
            for (r, &lam) in eig.eigenvalues.iter().enumerate() {
                let f = if lam.abs() <= threshold { 0.0 } else { 1.0 / lam };
                scaled.row_mut(r).scale_mut(f);
            }
            carry = Some(y.transpose() * scaled);
        }
    }
    Some(out)
}

/// Solve with a factorisation of a nearby matrix, refining against `k`.
pub fn solve_refined(lu: &BandLu, k: &Triplets, b: &[f64], rounds: usize) -> Vec<f64> {
    let mut x = lu.solve(b);
    let bnorm = inf_norm(b).max(f64::MIN_POSITIVE);
    let mut best_res = f64::INFINITY;
    let mut best = x.clone();
    for _ in 0..=rounds {
        let kx = k.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&kx).map(|(bi, ki)| bi - ki).collect();
        let rn = inf_norm(&r);
        if rn < best_res {
            best_res = rn;
            best.clone_from(&x);
        } else {
            break;
        }
        if rn <= 1e-15 * bnorm {
            break;
        }
        let dx = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    best
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_banded(n: usize, bw: usize, seed: u64) -> Triplets {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
                if rng.gen_bool(0.6) || i == j {
                    t.push(i, j, rng.gen_range(-1.0..1.0));
                }
            }
        }
        t
    }

    #[test]
    fn band_lu_matches_dense() {
        for seed in 0..5 {
            let k = random_banded(40, 3, seed);
            let n = k.nrows;
            // scramble the ordering so RCM has something to recover
            let shuffle: Vec<usize> = (0..n).map(|i| (i * 17) % n).collect();
            let mut scrambled = Triplets::new(n, n);
            for &(i, j, v) in &k.entries {
                scrambled.push(shuffle[i], shuffle[j], v);
            }
            let perm = reverse_cuthill_mckee(n, &scrambled.entries);
            let lu = BandLu::factor(&scrambled, &perm, 1e-14).unwrap();
            let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let x = solve_refined(&lu, &scrambled, &b, 2);
            let dense = scrambled.to_dense().lu().solve(&nalgebra::DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                assert!((x[i] - dense[i]).abs() < 1e-9 * (1.0 + dense[i].abs()), "seed {seed}");
            }
        }
    }

    #[test]
    fn rcm_reduces_bandwidth_of_path() {
        // path graph on a scrambled labelling
        let n = 30;
        let label: Vec<usize> = (0..n).map(|i| (i * 7) % n).collect();
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(label[i], label[i], 2.0);
            if i + 1 < n {
                t.push(label[i], label[i + 1], -1.0);
                t.push(label[i + 1], label[i], -1.0);
            }
        }
        let perm = reverse_cuthill_mckee(n, &t.entries);
        let lu = BandLu::factor(&t, &perm, 1e-14).unwrap();
        assert_eq!(lu.bandwidth(), 1);
    }

    #[test]
    fn needs_pivoting() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        let lu = BandLu::factor(&t, &[0, 1], 1e-14).unwrap();
        let x = lu.solve(&[3.0, 5.0]);
        assert_eq!(x, vec![5.0, 3.0]);
    }

    #[test]
    fn detects_singular() {
        let mut t = Triplets::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(1, 1, 1.0);
        t.push(0, 2, 1.0);
        assert!(matches!(
            BandLu::factor(&t, &[0, 1, 2], 1e-13),
            Err(FactorError::Singular { .. })
        ));
    }

    fn dense_inertia(a: &DMatrix<f64>) -> (usize, usize) {
        let e = a.clone().symmetric_eigen().eigenvalues;
        (e.iter().filter(|v| **v > 1e-12).count(), e.iter().filter(|v| **v < -1e-12).count())
    }

    #[test]
    fn block_inertia_matches_dense_eigenvalues() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 6 + trial;
            let band = 1 + trial % 4;
            let mut a = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..(i + band + 1).min(n) {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let perm: Vec<usize> = (0..n).collect();
            let got = block_inertia(&Triplets::from_dense(&a), &perm, 1e-14).unwrap();
            let (p, q) = dense_inertia(&a);
            assert_eq!((got.positive, got.negative, got.zero), (p, q, 0), "trial {trial}");
        }
    }

    #[test]
    fn block_inertia_of_saddle_with_zero_diagonal() {
        // KKT matrix [H Jᵀ; J 0] with H indefinite on the null space of J
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0, 1.0, 0.0]);
        let (p, q) = dense_inertia(&a);
        for perm in [vec![0, 1, 2], vec![2, 0, 1], vec![1, 2, 0]] {
            let got = block_inertia(&Triplets::from_dense(&a), &perm, 1e-14).unwrap();
            assert_eq!((got.positive, got.negative), (p, q), "{perm:?}");
        }
    }

    #[test]
    fn block_inertia_counts_zero_eigenvalue() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let got = block_inertia(&Triplets::from_dense(&a), &[0, 1], 1e-12).unwrap();
        assert_eq!(got, Inertia { positive: 1, negative: 0, zero: 1 });
    }
}
