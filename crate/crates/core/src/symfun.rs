//! Elementary symmetric functions of eigenvalue vectors and symmetric matrices.
//!
//! `σ_k` is evaluated with the O(nk) product recurrence
//! `e_j ← e_j + x·e_{j-1}` rather than by enumerating subsets. Minors
//! `σ_k(λ|i)` and `σ_k(λ|ij)` are the same recurrence run over the spectrum
//! with the listed entries skipped.

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};

/// Real spectrum, usually the principal curvatures of a hypersurface.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalSpectrum {
    values: Vec<f64>,
    sorted: bool,
}

impl PrincipalSpectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("spectrum entry {i} is not finite"));
        }
        Ok(Self { values, sorted: false })
    }

    /// Builds a spectrum sorted in descending order. Equal entries keep their
    /// original relative order.
    pub fn sorted_desc(mut values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("spectrum entry {i} is not finite"));
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(Self { values, sorted: true })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `σ_0, …, σ_n` in one pass.
    pub fn all_sigmas(&self) -> Vec<f64> {
        sigma_table(self.values.iter().copied(), self.values.len())
    }
}

/// Runs the product recurrence over `values`, returning `σ_0..=σ_top`.
fn sigma_table(values: impl Iterator<Item = f64>, top: usize) -> Vec<f64> {
    let mut e = vec![0.0; top + 1];
    e[0] = 1.0;
    let mut seen = 0usize;
    for x in values {
        seen += 1;
        for j in (1..=seen.min(top)).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Square symmetric matrix with packed upper-triangular storage, so that
/// `get(i, j) == get(j, i)` holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    packed: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            packed: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Reads the upper triangle of `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Symmetric part `(A + Aᵀ)/2` of a dense matrix.
    pub fn from_dense_symmetrized(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return domain("matrix is not square");
        }
        Ok(Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)])))
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.packed[k] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut ev = match self.n {
            0 => Vec::new(),
            1 => vec![self.get(0, 0)],
            2 => {
                let (a, b, c) = (self.get(0, 0), self.get(0, 1), self.get(1, 1));
                let mean = 0.5 * (a + c);
                let rad = (0.5 * (a - c)).hypot(b);
                vec![mean + rad, mean - rad]
            }
            _ => {
                let eig = self
                    .to_dense()
                    .try_symmetric_eigen(f64::EPSILON, 10_000)
                    .ok_or_else(|| {
                        Error::Numeric(format!(
                            "symmetric eigensolver failed (‖W‖_F = {:.6e})",
                            self.frobenius_norm()
                        ))
                    })?;
                eig.eigenvalues.iter().copied().collect()
            }
        };
        if ev.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite eigenvalue (‖W‖_F = {:.6e})",
                self.frobenius_norm()
            )));
        }
        ev.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(ev)
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k > n {
        return domain(format!("k = {k} outside 0..={n}"));
    }
    Ok(())
}

/// `σ_k(λ)`, with `σ_0 = 1`.
pub fn sigma(lambda: &PrincipalSpectrum, k: usize) -> Result<f64> {
    let n = lambda.dim();
    check_k(k, n)?;
    Ok(sigma_table(lambda.values.iter().copied(), k)[k])
}

/// `σ_k` of the spectrum with one or two entries deleted.
///
/// Orders beyond the number of remaining entries give 0.
pub fn sigma_minor(lambda: &PrincipalSpectrum, k: usize, deleted: &[usize]) -> Result<f64> {
    let n = lambda.dim();
    match deleted {
        [i] if *i < n => {}
        [i, j] if *i < n && *j < n && i != j => {}
        [_] | [_, _] => return domain(format!("deleted indices {deleted:?} invalid for dimension {n}")),
        _ => return domain("minor must delete one or two entries"),
    }
    check_k(k, n)?;
    let rest = lambda
        .values
        .iter()
        .enumerate()
        .filter(|(i, _)| !deleted.contains(i))
        .map(|(_, &v)| v);
    Ok(sigma_table(rest, k)[k])
}

/// `∂σ_k/∂λ_i = σ_{k-1}(λ|i)` for every `i`.
pub fn sigma_grad(lambda: &PrincipalSpectrum, k: usize) -> Result<Vec<f64>> {
    let n = lambda.dim();
    if k == 0 || k > n {
        return domain(format!("gradient order k = {k} outside 1..={n}"));
    }
    (0..n).map(|i| sigma_minor(lambda, k - 1, &[i])).collect()
}

/// Strict membership in the Gårding cone `Γ_k`. `Γ_0` is everything and
/// `Γ_k` is empty for `k > n`.
pub fn gamma_cone_contains(lambda: &PrincipalSpectrum, k: usize) -> bool {
    if k > lambda.dim() {
        return false;
    }
    let e = sigma_table(lambda.values.iter().copied(), k);
    e[1..=k].iter().all(|&s| s > 0.0)
}

/// `σ_k(W) = σ_k(λ(W))` together with the descending spectrum of `W`.
pub fn sigma_of_matrix(w: &SymMatrix, k: usize) -> Result<(f64, PrincipalSpectrum)> {
    check_k(k, w.dim())?;
    let spectrum = PrincipalSpectrum {
        values: w.eigenvalues()?,
        sorted: true,
    };
    let value = sigma(&spectrum, k)?;
    Ok((value, spectrum))
}

/// The matrix `{∂σ_k/∂W_ij}`: `Q diag(σ_{k-1}(λ|i)) Qᵀ` in the eigenbasis of `W`.
pub fn sigma_matrix_gradient(w: &SymMatrix, k: usize) -> Result<SymMatrix> {
    let n = w.dim();
    if k == 0 || k > n {
        return domain(format!("gradient order k = {k} outside 1..={n}"));
    }
    let eig = w.to_dense().try_symmetric_eigen(f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numeric(format!(
            "symmetric eigensolver failed (‖W‖_F = {:.6e})",
            w.frobenius_norm()
        ))
    })?;
    let lambda = PrincipalSpectrum::new(eig.eigenvalues.iter().copied().collect())?;
    let d = sigma_grad(&lambda, k)?;
    let q = &eig.eigenvectors;
    Ok(SymMatrix::from_fn(n, |i, j| {
        (0..n).map(|m| q[(i, m)] * d[m] * q[(j, m)]).sum()
    }))
}

/// Difference of the two sides of the minor identity
/// `σ_l^{ii}σ_l^{jj} − σ_l σ_{l−2}(λ|ij) = σ_{l−1}(λ|ij)² − σ_l(λ|ij)σ_{l−2}(λ|ij)`.
pub fn minor_identity_residual(lambda: &PrincipalSpectrum, l: usize, i: usize, j: usize) -> Result<f64> {
    let n = lambda.dim();
    if i == j {
        return domain("indices must differ");
    }
    if l < 2 || l > n {
        return domain(format!("order l = {l} outside 2..={n}"));
    }
    let lhs = sigma_minor(lambda, l - 1, &[i])? * sigma_minor(lambda, l - 1, &[j])?
        - sigma(lambda, l)? * sigma_minor(lambda, l - 2, &[i, j])?;
    let rhs = sigma_minor(lambda, l - 1, &[i, j])?.powi(2)
        - sigma_minor(lambda, l, &[i, j])? * sigma_minor(lambda, l - 2, &[i, j])?;
    Ok(lhs - rhs)
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(v: &[f64]) -> PrincipalSpectrum {
        PrincipalSpectrum::new(v.to_vec()).unwrap()
    }

    /// Subset enumeration, used only as an oracle.
    fn sigma_brute(v: &[f64], k: usize) -> f64 {
        let n = v.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                total += (0..n).filter(|i| mask & (1 << i) != 0).map(|i| v[i]).product::<f64>();
            }
        }
        total
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&spectrum(&[1.0, 1.0, 1.0]), 2).unwrap(), 3.0);
        assert_eq!(sigma(&spectrum(&[1.0, 2.0, 3.0]), 2).unwrap(), 11.0);
        assert_eq!(sigma(&spectrum(&[4.0, -2.0]), 0).unwrap(), 1.0);
        assert!(matches!(sigma(&spectrum(&[1.0, 2.0]), 3), Err(Error::Domain(_))));
    }

    #[test]
    fn sigma_matches_subset_enumeration() {
        let v = [0.3, -1.2, 2.5, 0.7, -0.4, 1.9, 3.1, -0.05];
        for k in 0..=v.len() {
            let fast = sigma(&spectrum(&v), k).unwrap();
            let slow = sigma_brute(&v, k);
            assert!((fast - slow).abs() <= 1e-12 * (1.0 + slow.abs()), "k={k}");
        }
    }

    #[test]
    fn minor_examples() {
        let l = spectrum(&[1.0, 2.0, 3.0]);
        assert_eq!(sigma_minor(&l, 1, &[0]).unwrap(), 5.0);
        assert_eq!(sigma_minor(&l, 2, &[0, 1]).unwrap(), 0.0);
        assert_eq!(sigma_minor(&l, 0, &[2]).unwrap(), 1.0);
        assert!(sigma_minor(&l, 1, &[1, 1]).is_err());
        assert!(sigma_minor(&l, 1, &[3]).is_err());
        assert!(sigma_minor(&l, 1, &[]).is_err());
    }

    #[test]
    fn grad_examples() {
        let l = spectrum(&[1.0, 2.0, 3.0]);
        assert_eq!(sigma_grad(&l, 2).unwrap(), vec![5.0, 4.0, 3.0]);
        assert_eq!(sigma_grad(&l, 3).unwrap(), vec![6.0, 3.0, 2.0]);
        assert_eq!(sigma_grad(&spectrum(&[0.7; 4]), 1).unwrap(), vec![1.0; 4]);
        assert!(sigma_grad(&l, 0).is_err());
    }

    #[test]
    fn grad_matches_central_differences() {
        let v = vec![1.3, -0.2, 0.8, 2.1, 0.5];
        for k in 1..=v.len() {
            let g = sigma_grad(&spectrum(&v), k).unwrap();
            for i in 0..v.len() {
                let h = 1e-5;
                let mut p = v.clone();
                let mut m = v.clone();
                p[i] += h;
                m[i] -= h;
                let fd = (sigma(&spectrum(&p), k).unwrap() - sigma(&spectrum(&m), k).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-8 * (1.0 + g[i].abs()), "k={k} i={i}");
            }
        }
    }

    #[test]
    fn cone_examples() {
        let l = spectrum(&[3.0, -1.0, -1.0]);
        assert!(gamma_cone_contains(&l, 1));
        assert!(!gamma_cone_contains(&l, 2));
        assert!(gamma_cone_contains(&spectrum(&[1.0, 1.0, 1.0]), 3));
        // open cone: boundary points are excluded
        assert!(!gamma_cone_contains(&spectrum(&[1.0, -1.0]), 1));
    }

    #[test]
    fn matrix_examples() {
        let d = SymMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let (v, s) = sigma_of_matrix(&d, 2).unwrap();
        assert!((v - 11.0).abs() < 1e-12);
        assert_eq!(s.values().len(), 3);
        assert!(s.is_sorted());
        let (v, _) = sigma_of_matrix(&SymMatrix::identity(3), 3).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_sigma_is_conjugation_invariant() {
        // Q = rotation by 0.7 about (1,1,1)/√3
        let axis = nalgebra::Unit::new_normalize(nalgebra::Vector3::new(1.0, 1.0, 1.0));
        let q = nalgebra::Rotation3::from_axis_angle(&axis, 0.7).into_inner();
        let d = nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 2.0, 3.0));
        let w = q * d * q.transpose();
        let dense = DMatrix::from_fn(3, 3, |i, j| w[(i, j)]);
        let sym = SymMatrix::from_dense_symmetrized(&dense).unwrap();
        let (v, s) = sigma_of_matrix(&sym, 2).unwrap();
        assert!((v - 11.0).abs() < 1e-12);
        assert!((s.values()[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_gradient_matches_finite_differences() {
        let w = SymMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 0) => 2.0,
            (1, 1) => 1.5,
            (2, 2) => 1.0,
            (0, 1) => 0.3,
            (0, 2) => -0.2,
            _ => 0.1,
        });
        let k = 2;
        let g = sigma_matrix_gradient(&w, k).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            for j in i..3 {
                let mut p = w.clone();
                let mut m = w.clone();
                p.set(i, j, w.get(i, j) + h);
                m.set(i, j, w.get(i, j) - h);
                let fd = (sigma_of_matrix(&p, k).unwrap().0 - sigma_of_matrix(&m, k).unwrap().0) / (2.0 * h);
                // symmetric perturbation touches both (i,j) and (j,i)
                let expected = if i == j { g.get(i, i) } else { 2.0 * g.get(i, j) };
                assert!((fd - expected).abs() < 1e-7, "({i},{j}) fd={fd} g={expected}");
            }
        }
    }

    #[test]
    fn minor_identity_examples() {
        let l = spectrum(&[1.0, 2.0, 3.0]);
        assert!(minor_identity_residual(&l, 2, 0, 1).unwrap().abs() < 1e-14);
        assert!(
            minor_identity_residual(&spectrum(&[1.0, 1.0, 1.0]), 2, 1, 2)
                .unwrap()
                .abs()
                < 1e-14
        );
        assert!(minor_identity_residual(&l, 2, 1, 1).is_err());
    }

    #[test]
    fn sorting_is_stable_and_descending() {
        let s = PrincipalSpectrum::sorted_desc(vec![1.0, 3.0, -2.0, 3.0]).unwrap();
        assert_eq!(s.values(), &[3.0, 3.0, 1.0, -2.0]);
        assert!(PrincipalSpectrum::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20.0);
        assert_eq!(binomial(2, 2), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
    }
}
