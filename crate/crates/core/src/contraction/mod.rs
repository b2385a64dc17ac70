//! Norms and overlaps of VBS chains by transfer-matrix contraction, plus the
//! dense-state oracle used to cross-check them.
//!
//! Every chain product goes through [`ScaledMatrix`], so results are reported
//! as base-2 logarithms ([`NormResult`]). Vanishing traces that follow from the
//! sector structure of the contracted rows are detected structurally and come
//! back as `exact_zero` rather than as a tiny finite number.

mod dense;
mod scaled;

pub use dense::{
    dense_family, dense_optimize, dense_overlap_sq, dense_state, DenseState, OptimizeResult, DEFAULT_DENSE_CAP,
};
pub use scaled::{scaled_power, scaled_product, shares_chiral_involution, ScaledMatrix, ScaledScalar};

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vbs::{boundary_tensor, local_tensor, row_matrix, uniform_row, BondTensor, Boundary, ChainSpec, Sector, SpinSpec};

/// Base-2 logarithm of a non-negative quantity (squared norm, squared overlap, ratio).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    /// Meaningless when `exact_zero` is set.
    pub log2value: f64,
    pub exact_zero: bool,
}

impl NormResult {
    pub fn from_log2(log2value: f64) -> Self {
        Self {
            log2value,
            exact_zero: false,
        }
    }

    pub fn zero() -> Self {
        Self {
            log2value: f64::NEG_INFINITY,
            exact_zero: true,
        }
    }

    /// `None` for an exact zero.
    pub fn log2(&self) -> Option<f64> {
        (!self.exact_zero).then_some(self.log2value)
    }

    /// Linear value `2^log2value` (0 for an exact zero; may under/overflow).
    pub fn value(&self) -> f64 {
        if self.exact_zero {
            0.0
        } else {
            self.log2value.exp2()
        }
    }

    /// `self / other`. Dividing by an exact zero is a caller bug.
    pub fn div(&self, other: &NormResult) -> NormResult {
        assert!(!other.exact_zero, "division by an exact zero");
        if self.exact_zero {
            NormResult::zero()
        } else {
            NormResult::from_log2(self.log2value - other.log2value)
        }
    }
}

/// Sum of values given in log2 form (exact zeros skipped).
pub(crate) fn log2_sum(terms: impl IntoIterator<Item = NormResult>) -> NormResult {
    let logs: Vec<f64> = terms.into_iter().filter_map(|t| t.log2()).collect();
    let Some(max) = logs.iter().copied().reduce(f64::max) else {
        return NormResult::zero();
    };
    let sum: f64 = logs.iter().map(|l| (l - max).exp2()).sum();
    NormResult::from_log2(max + sum.log2())
}

/// How the open-chain overlap is normalized and averaged over `(p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObcMode {
    /// Average of `|⟨VBS;p,q|Φ⟩|² / ⟨VBS;p,q|VBS;p,q⟩` with exact per-`(p,q)` norms.
    #[default]
    Exact,
    /// `Tr^(2)[row product] / c_L` with `c_L = (s+1)·[(2s+1)!/(s+1)]^L`.
    Asymptotic,
}

/// Transfer matrix `E[(p,q),(p',q')] = Σ_m A_m[p,p'] A_m[q,q']`, index `(p,q) → p·(s+1)+q`.
pub fn transfer_matrix(tensor: &BondTensor) -> DMatrix<f64> {
    let d = tensor.spin().bond_dim();
    let mut e = DMatrix::zeros(d * d, d * d);
    for a in tensor.level_matrices() {
        e += a.kronecker(&a);
    }
    e
}

/// `log2 ⟨VBS|VBS⟩` for a periodic chain: `Tr E^L`.
pub fn norm_pbc(chain: &ChainSpec) -> Result<NormResult> {
    if chain.boundary != Boundary::Pbc {
        return Err(Error::InvalidInput(format!(
            "norm_pbc needs a periodic chain, got {}",
            chain.boundary.label()
        )));
    }
    let e = transfer_matrix(&local_tensor(chain.spin));
    Ok(scaled_power(&e, chain.length)?.trace().log2_norm())
}

impl ScaledScalar<f64> {
    /// `log2 |x|` for a quantity that is itself a norm (not a squared amplitude).
    fn log2_norm(&self) -> NormResult {
        match self.log2_abs() {
            Some(l) => NormResult::from_log2(l),
            None => NormResult::zero(),
        }
    }
}

/// `E_start · E^{L-1}`: its `((p,p),(q,q))` entry is `⟨VBS;p,q|VBS;p,q⟩`.
fn obc_norm_matrix(spin: SpinSpec, length: usize) -> Result<ScaledMatrix<f64>> {
    let start = ScaledMatrix::new(transfer_matrix(&boundary_tensor(spin)));
    let bulk = scaled_power(&transfer_matrix(&local_tensor(spin)), length - 1)?;
    start.mul(&bulk)
}

/// `log2 ⟨VBS;p,q|VBS;p,q⟩` for all 1-based `(p, q)`, row-major.
pub fn obc_norms(spin: SpinSpec, length: usize) -> Result<Vec<NormResult>> {
    let d = spin.bond_dim();
    let n = obc_norm_matrix(spin, length)?;
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in 0..d {
            out.push(n.entry(p * d + p, q * d + q).log2_norm());
        }
    }
    Ok(out)
}

/// `log2 ⟨VBS;p,q|VBS;p,q⟩` for an `Obc { p, q }` chain.
pub fn norm_obc(chain: &ChainSpec) -> Result<NormResult> {
    let Boundary::Obc { p, q } = chain.boundary else {
        return Err(Error::InvalidInput(format!(
            "norm_obc needs explicit boundary indices, got {}",
            chain.boundary.label()
        )));
    };
    let d = chain.spin.bond_dim();
    Ok(obc_norms(chain.spin, chain.length)?[(p - 1) * d + (q - 1)])
}

/// `log2 c_L = log2(s+1) + L·log2((2s+1)!/(s+1))`.
pub fn log2_c_l(spin: SpinSpec, length: usize) -> f64 {
    let s = spin.s() as u64;
    let per_site: f64 = (1..=2 * s + 1).filter(|&k| k != s + 1).map(|k| (k as f64).log2()).sum();
    ((s + 1) as f64).log2() + length as f64 * per_site
}

/// Unnormalized `log2 |⟨Φ|VBS⟩|²` for the uniform sector state on a periodic chain.
pub fn overlap_pbc(chain: &ChainSpec, sector: Sector) -> Result<NormResult> {
    if chain.boundary != Boundary::Pbc {
        return Err(Error::InvalidInput(format!(
            "overlap_pbc needs a periodic chain, got {}",
            chain.boundary.label()
        )));
    }
    let row = uniform_row(&local_tensor(chain.spin), sector);
    if chain.length % 2 == 1 && shares_chiral_involution(&[&row]) {
        return Ok(NormResult::zero());
    }
    Ok(scaled_power(&row, chain.length)?.trace().log2_abs_sq())
}

/// `g_start` row followed by `L-1` bulk rows, for the uniform sector state.
fn uniform_open_product(spin: SpinSpec, length: usize, sector: Sector) -> Result<ScaledMatrix<f64>> {
    let start = ScaledMatrix::new(uniform_row(&boundary_tensor(spin), sector));
    let bulk = scaled_power(&uniform_row(&local_tensor(spin), sector), length - 1)?;
    start.mul(&bulk)
}

/// Unnormalized `log2 |⟨VBS;p,q|Φ⟩|²` for the uniform sector state on an `Obc { p, q }` chain.
pub fn overlap_obc_pq(chain: &ChainSpec, sector: Sector) -> Result<NormResult> {
    let Boundary::Obc { p, q } = chain.boundary else {
        return Err(Error::InvalidInput(format!(
            "overlap_obc_pq needs explicit boundary indices, got {}",
            chain.boundary.label()
        )));
    };
    let x = uniform_open_product(chain.spin, chain.length, sector)?;
    Ok(x.entry(p - 1, q - 1).log2_abs_sq())
}

/// Normalized, `(p,q)`-averaged `log2 |Λ|²` of the uniform sector state on an open chain.
pub fn overlap_obc(chain: &ChainSpec, sector: Sector, mode: ObcMode) -> Result<NormResult> {
    if chain.boundary != Boundary::ObcAveraged {
        return Err(Error::InvalidInput(format!(
            "overlap_obc averages over boundary states, got {}",
            chain.boundary.label()
        )));
    }
    let x = uniform_open_product(chain.spin, chain.length, sector)?;
    averaged_open(chain, &x, mode)
}

fn averaged_open<T: ComplexField<RealField = f64> + Copy>(
    chain: &ChainSpec,
    product: &ScaledMatrix<T>,
    mode: ObcMode,
) -> Result<NormResult> {
    let spin = chain.spin;
    let d = spin.bond_dim();
    match mode {
        ObcMode::Asymptotic => {
            let c_l = NormResult::from_log2(log2_c_l(spin, chain.length));
            Ok(product.log2_sum_sq().div(&c_l))
        }
        ObcMode::Exact => {
            let norms = obc_norms(spin, chain.length)?;
            let terms = (0..d).flat_map(|p| (0..d).map(move |q| (p, q))).map(|(p, q)| {
                product
                    .entry(p, q)
                    .log2_abs_sq()
                    .div(&norms[p * d + q])
            });
            let total = log2_sum(terms);
            let count = NormResult::from_log2(((d * d) as f64).log2());
            Ok(if total.exact_zero { total } else { total.div(&count) })
        }
    }
}

/// Normalized `log2 Λ²` of the uniform sector state for any boundary.
pub fn log2_lambda_sq(chain: &ChainSpec, sector: Sector, mode: ObcMode) -> Result<NormResult> {
    match chain.boundary {
        Boundary::Pbc => Ok(overlap_pbc(chain, sector)?.div(&norm_pbc(chain)?)),
        Boundary::Obc { .. } => Ok(overlap_obc_pq(chain, sector)?.div(&norm_obc(chain)?)),
        Boundary::ObcAveraged => overlap_obc(chain, sector, mode),
    }
}

/// Normalized `log2 |⟨Φ|VBS⟩|²` for an arbitrary product state given as one
/// `2s+1` vector per site. Open chains put `g_start` on site 0; the averaged
/// open chain uses the `mode` normalization.
pub fn product_overlap(chain: &ChainSpec, vectors: &[Vec<Complex64>], mode: ObcMode) -> Result<NormResult> {
    if vectors.len() != chain.length {
        return Err(Error::Dimension(format!(
            "{} site vectors for a chain of {} sites",
            vectors.len(),
            chain.length
        )));
    }
    let local = local_tensor(chain.spin);
    let first_tensor = if chain.boundary.is_open() {
        boundary_tensor(chain.spin)
    } else {
        local.clone()
    };
    let mut rows = Vec::with_capacity(chain.length);
    rows.push(row_matrix(&first_tensor, &vectors[0])?);
    for v in &vectors[1..] {
        rows.push(row_matrix(&local, v)?);
    }
    match chain.boundary {
        Boundary::Pbc => {
            let refs: Vec<&DMatrix<Complex64>> = rows.iter().collect();
            if chain.length % 2 == 1 && shares_chiral_involution(&refs) {
                return Ok(NormResult::zero());
            }
            let x = scaled_product(&rows)?;
            Ok(x.trace().log2_abs_sq().div(&norm_pbc(chain)?))
        }
        Boundary::Obc { p, q } => {
            let x = scaled_product(&rows)?;
            Ok(x.entry(p - 1, q - 1).log2_abs_sq().div(&norm_obc(chain)?))
        }
        Boundary::ObcAveraged => averaged_open(chain, &scaled_product(&rows)?, mode),
    }
}
