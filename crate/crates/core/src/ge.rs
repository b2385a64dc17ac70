//! Per-site geometric entanglement from sector overlaps.
//!
//! `ε_sector = -log2(Λ²_sector) / L` at finite `L`; the large-`L` value is only
//! ever obtained through [`extrapolate`]. An overlap that vanishes identically
//! gives an infinite `ε`.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::{log2_lambda_sq, NormResult, ObcMode};
use crate::error::{Error, Result};
use crate::vbs::{coefficient_sq, Boundary, ChainSpec, Sector, SpinSpec};

/// Entanglement per site in bits, or infinite when the overlap vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eps {
    Finite(f64),
    #[serde(rename = "inf")]
    Infinite,
}

impl Eps {
    pub fn from_overlap(log2_lambda_sq: NormResult, length: usize) -> Self {
        match log2_lambda_sq.log2() {
            Some(l) => Eps::Finite(-l / length as f64),
            None => Eps::Infinite,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Eps::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Eps::Finite(v) => Some(*v),
            Eps::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite variant.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn min(self, other: Eps) -> Eps {
        match self.as_f64().total_cmp(&other.as_f64()) {
            Ordering::Greater => other,
            _ => self,
        }
    }
}

impl std::fmt::Display for Eps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Eps::Finite(v) => write!(f, "{v:.16e}"),
            Eps::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeResult {
    pub chain: ChainSpec,
    pub obc_mode: ObcMode,
    pub eps_even: Eps,
    pub eps_odd: Eps,
    /// `min(eps_even, eps_odd)`.
    pub eps: Eps,
    pub log2_lambda_sq_even: NormResult,
    pub log2_lambda_sq_odd: NormResult,
}

impl GeResult {
    pub fn eps_for(&self, sector: Sector) -> Eps {
        match sector {
            Sector::Even => self.eps_even,
            Sector::Odd => self.eps_odd,
        }
    }

    pub fn log2_lambda_sq(&self, sector: Sector) -> NormResult {
        match sector {
            Sector::Even => self.log2_lambda_sq_even,
            Sector::Odd => self.log2_lambda_sq_odd,
        }
    }
}

/// Entanglement of the chain with exact open-chain averaging.
pub fn ge(chain: &ChainSpec) -> Result<GeResult> {
    ge_with_mode(chain, ObcMode::Exact)
}

pub fn ge_with_mode(chain: &ChainSpec, mode: ObcMode) -> Result<GeResult> {
    let even = log2_lambda_sq(chain, Sector::Even, mode)?;
    let odd = log2_lambda_sq(chain, Sector::Odd, mode)?;
    let eps_even = Eps::from_overlap(even, chain.length);
    let eps_odd = Eps::from_overlap(odd, chain.length);
    Ok(GeResult {
        chain: *chain,
        obc_mode: mode,
        eps_even,
        eps_odd,
        eps: eps_even.min(eps_odd),
        log2_lambda_sq_even: even,
        log2_lambda_sq_odd: odd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedGe {
    pub eps_infinity: f64,
    /// Coefficient of the `1/L` correction.
    pub slope: f64,
    /// RMS deviation of the fitted model.
    pub residual: f64,
}

/// Least-squares fit of `ε(L) = ε_∞ + slope / L` over points of one length parity.
pub fn extrapolate(points: &[(usize, f64)]) -> Result<ExtrapolatedGe> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "extrapolation needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut lengths: Vec<usize> = points.iter().map(|p| p.0).collect();
    lengths.sort_unstable();
    lengths.dedup();
    if lengths.len() != points.len() {
        return Err(Error::InvalidInput("extrapolation lengths must be distinct".into()));
    }
    if lengths.iter().any(|l| l % 2 != lengths[0] % 2) {
        return Err(Error::InvalidInput(
            "extrapolation lengths must share one parity".into(),
        ));
    }
    if lengths[0] == 0 || points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::InvalidInput("extrapolation needs positive lengths and finite values".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let eps_infinity = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - eps_infinity - slope * x).powi(2))
        .sum();
    Ok(ExtrapolatedGe {
        eps_infinity,
        slope,
        residual: (sse / n).sqrt(),
    })
}

/// Extrapolated `ε` of one sector over the given lengths (all with the same parity).
pub fn extrapolated_eps(
    spin: SpinSpec,
    sector: Sector,
    boundary: Boundary,
    lengths: &[usize],
    mode: ObcMode,
) -> Result<ExtrapolatedGe> {
    let mut points = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let chain = ChainSpec::new(spin, l, boundary)?;
        let eps = Eps::from_overlap(log2_lambda_sq(&chain, sector, mode)?, l);
        match eps {
            Eps::Finite(v) => points.push((l, v)),
            Eps::Infinite => {
                return Err(Error::InvalidInput(format!(
                    "{} overlap vanishes at L = {l}",
                    sector.label()
                )))
            }
        }
    }
    extrapolate(&points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalGe {
    pub length: usize,
    pub eps_even: f64,
    /// `eps_even · L`, in bits.
    pub value: f64,
}

pub fn global_ge(chain: &ChainSpec) -> Result<GlobalGe> {
    let r = ge(chain)?;
    let eps_even = r.eps_even.finite().ok_or(Error::UndefinedGlobalGe)?;
    Ok(GlobalGe {
        length: chain.length,
        eps_even,
        value: eps_even * chain.length as f64,
    })
}

/// Exact `⟨VBS;p,q|VBS;p,q⟩` for every 1-based `(p, q)`, row-major.
///
/// Starting from a diagonal bond pair `(p, p)` the transfer matrix only reaches
/// diagonal pairs, where it reduces to the integer matrix `D[a, b] = g(a, b)²`;
/// the same holds for `g_start`. So each norm is the integer `[D^L]_{p,q}`.
pub fn exact_obc_norms(spin: SpinSpec, length: usize) -> Vec<BigUint> {
    let d = spin.bond_dim();
    let step: Vec<BigUint> = (1..=d)
        .flat_map(|a| (1..=d).map(move |b| coefficient_sq(spin, a, b)))
        .collect();
    let mut acc = step.clone();
    for _ in 1..length {
        let mut next = vec![BigUint::zero(); d * d];
        for i in 0..d {
            for k in 0..d {
                let lhs = &acc[i * d + k];
                if lhs.is_zero() {
                    continue;
                }
                for j in 0..d {
                    next[i * d + j] += lhs * &step[k * d + j];
                }
            }
        }
        acc = next;
    }
    acc
}

/// `c_L = (s+1)·[(2s+1)!/(s+1)]^L` as an exact integer.
pub fn exact_c_l(spin: SpinSpec, length: usize) -> BigUint {
    let s = spin.s() as u64;
    let fact: BigUint = (1..=2 * s + 1).map(BigUint::from).product();
    let per_site = fact / BigUint::from(s + 1);
    BigUint::from(s + 1) * num_traits::pow(per_site, length)
}

/// `log2 n` for an arbitrarily large positive integer.
pub fn log2_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        return n.to_u64().expect("fits in 64 bits").to_f64().expect("finite").log2();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().expect("64 bits").to_f64().expect("finite");
    top.log2() + shift as f64
}

/// `log2(Σ_{(p,q)} ⟨VBS;p,q|VBS;p,q⟩) - log2(c_L)`, computed from exact integers.
pub fn asymptotic_norm_error(chain: &ChainSpec) -> Result<f64> {
    if !chain.boundary.is_open() {
        return Err(Error::InvalidInput("the c_L asymptote applies to open chains".into()));
    }
    let total: BigUint = exact_obc_norms(chain.spin, chain.length).iter().sum();
    let c_l = exact_c_l(chain.spin, chain.length);
    let diff = BigInt::from(total) - BigInt::from(c_l.clone());
    if diff.is_zero() {
        return Ok(0.0);
    }
    // log2(1 + diff / c_L) without cancellation
    let mag = diff.abs().to_biguint().expect("non-negative");
    let ratio = (log2_big(&mag) - log2_big(&c_l)).exp2();
    let ratio = if diff.is_negative() { -ratio } else { ratio };
    Ok(ratio.ln_1p() / std::f64::consts::LN_2)
}

/// True when `Σ_{(p,q)} ⟨VBS;p,q|VBS;p,q⟩ = c_L` holds exactly.
pub fn asymptote_is_exact(spin: SpinSpec, length: usize) -> bool {
    let total: BigUint = exact_obc_norms(spin, length).iter().sum();
    total == exact_c_l(spin, length)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub s: i64,
    pub length: usize,
    pub result: std::result::Result<GeResult, Error>,
}

/// Entanglement over a grid of spins and lengths; rows ordered spin-major then
/// by length. A failing cell becomes an error row and the sweep continues.
pub fn sweep(spins: &[i64], lengths: &[usize], boundary: Boundary, mode: ObcMode) -> Result<Vec<SweepRow>> {
    if spins.is_empty() || lengths.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one spin and one length".into()));
    }
    let cells: Vec<(i64, usize)> = spins
        .iter()
        .flat_map(|&s| lengths.iter().map(move |&l| (s, l)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(s, length)| SweepRow {
            s,
            length,
            result: ChainSpec::build(s, length, boundary).and_then(|c| ge_with_mode(&c, mode)),
        })
        .collect())
}
