//! Randomised property suite for the symmetric-function layer.
//!
//! Each case samples spectra from `Γ_k` and measures the worst violation of
//! Maclaurin's inequality, the two-index minor identity, concavity of
//! `σ_k^{1/k}` and of the quotients, ellipticity of `∂σ_k/∂W` and the
//! largest-entry bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::symfun::{
    binomial, gamma_cone_contains, minor_identity_residual, sigma, sigma_grad, sigma_matrix_gradient, sigma_minor,
    PrincipalSpectrum, SymMatrix,
};

pub const MACLAURIN_TOL: f64 = 1e-12;
pub const MINOR_IDENTITY_TOL: f64 = 1e-12;
pub const CONCAVITY_TOL: f64 = 1e-8;
pub const GRADIENT_TOL: f64 = 1e-8;
const CONCAVITY_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// Largest relative excess of `(σ_k/C)^{1/k}` over `(σ_l/C)^{1/l}`.
    pub maclaurin: f64,
    pub minor_identity: f64,
    /// Largest positive second difference of `σ_k^{1/k}`, scaled.
    pub concavity: f64,
    /// Same for `(σ_k/σ_l)^{1/(k−l)}` over all `l < k`.
    pub quotient_concavity: f64,
    /// Smallest eigenvalue of `∂σ_k/∂W` relative to its largest.
    pub ellipticity_min: f64,
    /// Empirical minimum of `λ_1 σ_{k−1}(λ|1) / σ_k(λ)`.
    pub largest_entry_c: f64,
    pub gradient: f64,
}

impl CaseReport {
    pub fn passed(&self) -> bool {
        self.maclaurin <= MACLAURIN_TOL
            && self.minor_identity <= MINOR_IDENTITY_TOL
            && self.concavity <= CONCAVITY_TOL
            && self.quotient_concavity <= CONCAVITY_TOL
            && self.ellipticity_min > 0.0
            && self.largest_entry_c > 0.0
            && self.gradient <= GRADIENT_TOL
    }
}

/// Draws a spectrum in `Γ_k` by rejection from a box of random scale.
pub fn sample_cone(rng: &mut impl Rng, n: usize, k: usize) -> PrincipalSpectrum {
    loop {
        let scale = 10f64.powf(rng.gen_range(-1.0..1.0));
        let shift = rng.gen_range(-0.5..1.0);
        let v: Vec<f64> = (0..n).map(|_| scale * (shift + rng.gen_range(-1.0..1.0))).collect();
        let lam = PrincipalSpectrum::new(v).expect("finite sample");
        if gamma_cone_contains(&lam, k) {
            return lam;
        }
    }
}

fn random_orthogonal(rng: &mut impl Rng, n: usize) -> nalgebra::DMatrix<f64> {
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

fn shifted(lam: &PrincipalSpectrum, dir: &[f64], t: f64) -> PrincipalSpectrum {
    PrincipalSpectrum::new(lam.values().iter().zip(dir).map(|(a, b)| a + t * b).collect()).expect("finite")
}

/// Positive part of the centred second difference of `f` along `dir`, or
/// `None` when the stencil leaves the cone.
fn second_difference(
    lam: &PrincipalSpectrum,
    dir: &[f64],
    k: usize,
    f: impl Fn(&PrincipalSpectrum) -> Result<f64>,
) -> Result<Option<f64>> {
    let lo = shifted(lam, dir, -CONCAVITY_STEP);
    let hi = shifted(lam, dir, CONCAVITY_STEP);
    if !gamma_cone_contains(&lo, k) || !gamma_cone_contains(&hi, k) {
        return Ok(None);
    }
    let mid = f(lam)?;
    let d = f(&hi)? - 2.0 * mid + f(&lo)?;
    Ok(Some(d.max(0.0) / mid.abs().max(1.0)))
}

/// Runs one `(n, k)` case with `samples` draws.
pub fn run_case(n: usize, k: usize, samples: usize, seed: u64) -> Result<CaseReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32) ^ k as u64);
    let mut rep = CaseReport {
        n,
        k,
        samples,
        maclaurin: 0.0,
        minor_identity: 0.0,
        concavity: 0.0,
        quotient_concavity: 0.0,
        ellipticity_min: f64::INFINITY,
        largest_entry_c: f64::INFINITY,
        gradient: 0.0,
    };
    for s in 0..samples {
        let lam = sample_cone(&mut rng, n, k);
        let sig = lam.all_sigmas();

        let mean_k = (sig[k] / binomial(n, k)).powf(1.0 / k as f64);
        for l in 1..k {
            let mean_l = (sig[l] / binomial(n, l)).powf(1.0 / l as f64);
            rep.maclaurin = rep.maclaurin.max((mean_k - mean_l) / mean_l);
        }

        if k >= 2 {
            let i = rng.gen_range(0..n);
            let j = (i + rng.gen_range(1..n)) % n;
            let res = minor_identity_residual(&lam, k, i, j)?;
            let del = [i, j];
            let scale = [
                sigma_minor(&lam, k - 1, &[i])? * sigma_minor(&lam, k - 1, &[j])?,
                sig[k] * sigma_minor(&lam, k - 2, &del)?,
                sigma_minor(&lam, k - 1, &del)?.powi(2),
                sigma_minor(&lam, k, &del)? * sigma_minor(&lam, k - 2, &del)?,
            ]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
            rep.minor_identity = rep.minor_identity.max(res.abs() / scale);
        }

        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let kth_root = |x: &PrincipalSpectrum| Ok(sigma(x, k)?.powf(1.0 / k as f64));
        if let Some(d) = second_difference(&lam, &dir, k, kth_root)? {
            rep.concavity = rep.concavity.max(d);
        }
        for l in 0..k {
            let q = |x: &PrincipalSpectrum| Ok((sigma(x, k)? / sigma(x, l)?).powf(1.0 / (k - l) as f64));
            if let Some(d) = second_difference(&lam, &dir, k, q)? {
                rep.quotient_concavity = rep.quotient_concavity.max(d);
            }
        }

        let sorted = PrincipalSpectrum::sorted_desc(lam.values().to_vec())?;
        let top = sorted.values()[0] * sigma_minor(&sorted, k - 1, &[0])?;
        rep.largest_entry_c = rep.largest_entry_c.min(if top > 0.0 { top / sig[k] } else { 0.0 });

        // the matrix and gradient checks are costlier; thin them out
        if s % 4 == 0 {
            let q = random_orthogonal(&mut rng, n);
            let w = &q
                * nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lam.values()))
                * q.transpose();
            let grad = sigma_matrix_gradient(&SymMatrix::from_dense_symmetrized(&w)?, k)?;
            let eig = grad.eigenvalues()?;
            let (hi, lo) = (eig[0], eig[n - 1]);
            rep.ellipticity_min = rep.ellipticity_min.min(if hi > 0.0 { lo / hi } else { lo });

            let g = sigma_grad(&lam, k)?;
            let scale = g.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
            let h = 1e-5 * lam.values().iter().fold(1e-3f64, |m, v| m.max(v.abs()));
            for (i, gi) in g.iter().enumerate() {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let fd = (sigma(&shifted(&lam, &e, h), k)? - sigma(&shifted(&lam, &e, -h), k)?) / (2.0 * h);
                rep.gradient = rep.gradient.max((fd - gi).abs() / scale);
            }
        }
    }
    Ok(rep)
}

/// Every `(n, k)` with `2 ≤ n ≤ max_n`, `1 ≤ k ≤ n`.
pub fn symfun_suite(max_n: usize, samples: usize, seed: u64) -> Result<Vec<CaseReport>> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        for k in 1..=n {
            out.push(run_case(n, k, samples, seed)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_lie_in_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=4 {
            for _ in 0..200 {
                assert!(gamma_cone_contains(&sample_cone(&mut rng, 4, k), k));
            }
        }
    }

    #[test]
    fn small_suite_passes() {
        for rep in symfun_suite(4, 400, 3).unwrap() {
            assert!(rep.passed(), "{rep:?}");
            if rep.k == 1 {
                // λ_1 ≥ σ_1 / n on Γ_1
                assert!(rep.largest_entry_c >= 1.0 / rep.n as f64 - 1e-12);
            }
        }
    }

    #[test]
    fn detects_non_concavity() {
        // σ_2 itself (no root) is not concave along (1, 1)
        let lam = PrincipalSpectrum::new(vec![1.0, 1.0]).unwrap();
        let d = second_difference(&lam, &[1.0, 1.0], 2, |x| sigma(x, 2))
            .unwrap()
            .unwrap();
        assert!(d > CONCAVITY_TOL);
    }
}
