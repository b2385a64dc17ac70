//! Brute-force oracle: the full `(2s+1)^L` amplitude vector.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampler::haar_vector;
use crate::vbs::{boundary_tensor, local_tensor, Boundary, ChainSpec, SpinSpec};

pub const DEFAULT_DENSE_CAP: usize = 10_000_000;

const MAX_SWEEPS: usize = 20_000;
const SWEEP_TOL: f64 = 1e-15;

/// Amplitudes indexed by the level string `(m_1, …, m_L)`, site 1 most significant,
/// digit `m_i + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    spin: SpinSpec,
    length: usize,
    boundary: Boundary,
    amplitudes: Vec<Complex64>,
}

fn checked_size(spin: SpinSpec, length: usize, cap: usize) -> Result<usize> {
    let needed = (spin.physical_dim() as u128).checked_pow(length as u32).unwrap_or(u128::MAX);
    if needed > cap as u128 {
        return Err(Error::CapExceeded { needed, cap });
    }
    Ok(needed as usize)
}

/// Expand the matrix product site by site. `PBC` traces over the bond index,
/// `Obc { p, q }` keeps the `(p, q)` element with `g_start` on the first site.
pub fn dense_state(chain: &ChainSpec, cap: usize) -> Result<DenseState> {
    let spin = chain.spin;
    let total = checked_size(spin, chain.length, cap)?;
    let d = spin.bond_dim();
    let phys = spin.physical_dim();
    let local = local_tensor(spin).level_matrices();
    let (first, pairs): (Vec<DMatrix<f64>>, Vec<(usize, usize)>) = match chain.boundary {
        Boundary::Pbc => (local.clone(), (0..d).map(|p| (p, p)).collect()),
        Boundary::Obc { p, q } => (boundary_tensor(spin).level_matrices(), vec![(p - 1, q - 1)]),
        Boundary::ObcAveraged => {
            return Err(Error::InvalidInput(
                "a dense state needs a periodic chain or explicit boundary indices".into(),
            ))
        }
    };

    let mut amplitudes = vec![Complex64::new(0.0, 0.0); total];
    for (start, end) in pairs {
        // one bond row vector per prefix configuration
        let mut rows = vec![0.0; d];
        rows[start] = 1.0;
        let mut count = 1usize;
        for site in 0..chain.length {
            let mats = if site == 0 { &first } else { &local };
            let mut next = vec![0.0; count * phys * d];
            for c in 0..count {
                let row = &rows[c * d..(c + 1) * d];
                for (k, a) in mats.iter().enumerate() {
                    let out = &mut next[(c * phys + k) * d..(c * phys + k + 1) * d];
                    for (j, o) in out.iter_mut().enumerate() {
                        *o = (0..d).map(|i| row[i] * a[(i, j)]).sum();
                    }
                }
            }
            rows = next;
            count *= phys;
        }
        for (c, amp) in amplitudes.iter_mut().enumerate() {
            amp.re += rows[c * d + end];
        }
    }
    Ok(DenseState {
        spin,
        length: chain.length,
        boundary: chain.boundary,
        amplitudes,
    })
}

/// All states behind a chain: one for PBC or `Obc { p, q }`, the `(s+1)^2`
/// boundary states (row-major in `(p, q)`) for the averaged open chain.
pub fn dense_family(chain: &ChainSpec, cap: usize) -> Result<Vec<DenseState>> {
    match chain.boundary {
        Boundary::ObcAveraged => {
            let d = chain.spin.bond_dim();
            let mut out = Vec::with_capacity(d * d);
            for p in 1..=d {
                for q in 1..=d {
                    out.push(dense_state(&chain.with_boundary(Boundary::Obc { p, q })?, cap)?);
                }
            }
            Ok(out)
        }
        _ => Ok(vec![dense_state(chain, cap)?]),
    }
}

/// Contract the axis sitting between `left` and `right` blocks with `conj(v)`.
fn contract_axis(t: &[Complex64], left: usize, dim: usize, right: usize, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); left * right];
    for l in 0..left {
        for (k, vk) in v.iter().enumerate().take(dim) {
            let w = vk.conj();
            let base = (l * dim + k) * right;
            for r in 0..right {
                out[l * right + r] += w * t[base + r];
            }
        }
    }
    out
}

impl DenseState {
    pub fn spin(&self) -> SpinSpec {
        self.spin
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_vectors(&self, vectors: &[Vec<Complex64>]) -> Result<()> {
        let dim = self.spin.physical_dim();
        if vectors.len() != self.length || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Dimension(format!(
                "expected {} site vectors of length {dim}",
                self.length
            )));
        }
        Ok(())
    }

    /// `⟨Φ|ψ⟩` for the product state `⊗ v_i`.
    pub fn overlap(&self, vectors: &[Vec<Complex64>]) -> Result<Complex64> {
        self.check_vectors(vectors)?;
        let dim = self.spin.physical_dim();
        let mut t = self.amplitudes.clone();
        let mut left = self.amplitudes.len();
        for v in vectors.iter().rev() {
            left /= dim;
            t = contract_axis(&t, left, dim, 1, v);
        }
        Ok(t[0])
    }

    /// Contraction with every site vector except `site`: `⟨Φ|ψ⟩ = Σ_m conj(v_site[m]) env[m]`.
    pub fn environment(&self, site: usize, vectors: &[Vec<Complex64>]) -> Result<Vec<Complex64>> {
        self.check_vectors(vectors)?;
        if site >= self.length {
            return Err(Error::SiteOutOfRange {
                index: site,
                len: self.length,
            });
        }
        let dim = self.spin.physical_dim();
        let mut t = self.amplitudes.clone();
        let mut left = self.amplitudes.len();
        for v in vectors[site + 1..].iter().rev() {
            left /= dim;
            t = contract_axis(&t, left, dim, 1, v);
        }
        for v in &vectors[..site] {
            let right = t.len() / dim;
            t = contract_axis(&t, 1, dim, right, v);
        }
        Ok(t)
    }

    /// Normalized one-site reduced density matrix, rows/columns indexed by `m + s`.
    pub fn single_site_rdm(&self, site: usize) -> Result<DMatrix<Complex64>> {
        if site >= self.length {
            return Err(Error::SiteOutOfRange {
                index: site,
                len: self.length,
            });
        }
        let dim = self.spin.physical_dim();
        let right = dim.pow((self.length - site - 1) as u32);
        let left = self.amplitudes.len() / (dim * right);
        let norm = self.norm_sqr();
        let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for l in 0..left {
            for a in 0..dim {
                for b in 0..dim {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in 0..right {
                        acc += self.amplitudes[(l * dim + a) * right + r] * self.amplitudes[(l * dim + b) * right + r].conj();
                    }
                    rho[(a, b)] += acc;
                }
            }
        }
        Ok(rho.unscale(norm))
    }
}

/// Normalized `|⟨Φ|VBS⟩|²` by brute force; the averaged open chain averages the
/// `(s+1)^2` normalized boundary-state overlaps.
pub fn dense_overlap_sq(chain: &ChainSpec, vectors: &[Vec<Complex64>], cap: usize) -> Result<f64> {
    let family = dense_family(chain, cap)?;
    let mut total = 0.0;
    for state in &family {
        total += state.overlap(vectors)?.norm_sqr() / state.norm_sqr();
    }
    Ok(total / family.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    /// Best normalized `|⟨Φ|VBS⟩|²` over all restarts.
    pub max_overlap_sq: f64,
    /// Site vectors of the best product state, indexed by `m + s`.
    pub vectors: Vec<Vec<Complex64>>,
    /// Converged value of each restart, in restart order.
    pub restart_values: Vec<f64>,
}

impl OptimizeResult {
    /// Total weight of the best state on odd levels, summed over sites.
    pub fn odd_level_weight(&self) -> f64 {
        let s = (self.vectors[0].len() / 2) as i32;
        self.vectors
            .iter()
            .flat_map(|v| v.iter().enumerate())
            .filter(|(k, _)| (*k as i32 - s).rem_euclid(2) == 1)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }
}

/// Maximize the normalized overlap over unconstrained product states by
/// alternating single-site updates. Restart `r` draws its start from stream `r`
/// of a ChaCha generator seeded with `seed`, so adding restarts never lowers
/// the result.
pub fn dense_optimize(chain: &ChainSpec, restarts: usize, seed: u64, cap: usize) -> Result<OptimizeResult> {
    if restarts == 0 {
        return Err(Error::InvalidInput("at least one restart is required".into()));
    }
    let family = dense_family(chain, cap)?;
    let weights: Vec<f64> = family
        .iter()
        .map(|st| 1.0 / (family.len() as f64 * st.norm_sqr()))
        .collect();
    let dim = chain.spin.physical_dim();
    let objective = |vectors: &[Vec<Complex64>]| -> Result<f64> {
        let mut total = 0.0;
        for (st, w) in family.iter().zip(&weights) {
            total += w * st.overlap(vectors)?.norm_sqr();
        }
        Ok(total)
    };

    let mut best: Option<(f64, Vec<Vec<Complex64>>)> = None;
    let mut restart_values = Vec::with_capacity(restarts);
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut vectors: Vec<Vec<Complex64>> = (0..chain.length).map(|_| haar_vector(&mut rng, dim)).collect();
        let mut value = objective(&vectors)?;
        for _ in 0..MAX_SWEEPS {
            for site in 0..chain.length {
                let mut envs = Vec::with_capacity(family.len());
                for st in &family {
                    envs.push(st.environment(site, &vectors)?);
                }
                if let Some(v) = best_site_vector(&envs, &weights) {
                    vectors[site] = v;
                }
            }
            let next = objective(&vectors)?;
            let done = (next - value).abs() <= SWEEP_TOL * next.max(f64::MIN_POSITIVE);
            value = next;
            if done {
                break;
            }
        }
        restart_values.push(value);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, vectors));
        }
    }
    let (max_overlap_sq, vectors) = best.expect("restarts >= 1");
    Ok(OptimizeResult {
        max_overlap_sq,
        vectors,
        restart_values,
    })
}

/// Maximizer of `Σ_k w_k |v† e_k|²` over unit `v`: `e/|e|` for a single
/// environment, otherwise the top eigenvector of `Σ_k w_k e_k e_k†`.
fn best_site_vector(envs: &[Vec<Complex64>], weights: &[f64]) -> Option<Vec<Complex64>> {
    if envs.len() == 1 {
        let n: f64 = envs[0].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        return (n > 0.0).then(|| envs[0].iter().map(|c| c / n).collect());
    }
    let dim = envs[0].len();
    let mut h = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (e, w) in envs.iter().zip(weights) {
        for a in 0..dim {
            for b in 0..dim {
                h[(a, b)] += e[a] * e[b].conj() * *w;
            }
        }
    }
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    if eig.eigenvalues[top] <= 0.0 {
        return None;
    }
    Some(eig.eigenvectors.column(top).iter().copied().collect())
}
