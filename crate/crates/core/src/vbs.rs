//! Chain descriptors, the VBS local/boundary tensors and parity-sector product states.
//!
//! Bond indices `(p, q)` are 1-based (`1..=s+1`) in every public signature.
//! Storage is row-major and 0-based. Site vectors are indexed by `m + s`, so a
//! vector for spin `s` has `2s + 1` entries ordered from `m = -s` to `m = +s`.

use nalgebra::{ComplexField, DMatrix};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_integer::binomial;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer spin magnitude `s >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u32", try_from = "i64")]
pub struct SpinSpec(u32);

impl SpinSpec {
    pub fn new(s: i64) -> Result<Self> {
        if s < 1 || s > i64::from(u32::MAX) {
            return Err(Error::InvalidSpin(s));
        }
        Ok(Self(s as u32))
    }

    pub fn s(self) -> u32 {
        self.0
    }

    /// Local physical dimension `2s + 1`.
    pub fn physical_dim(self) -> usize {
        2 * self.0 as usize + 1
    }

    /// Virtual bond dimension `s + 1`.
    pub fn bond_dim(self) -> usize {
        self.0 as usize + 1
    }

    pub fn is_odd(self) -> bool {
        self.0 % 2 == 1
    }
}

impl From<SpinSpec> for u32 {
    fn from(spin: SpinSpec) -> u32 {
        spin.0
    }
}

impl TryFrom<i64> for SpinSpec {
    type Error = Error;
    fn try_from(s: i64) -> Result<Self> {
        Self::new(s)
    }
}

/// Boundary condition of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Boundary {
    Pbc,
    /// One of the `(s+1)^2` degenerate open-chain states, 1-based `(p, q)`.
    Obc { p: usize, q: usize },
    /// Average over all `(p, q)` open-chain states.
    ObcAveraged,
}

impl Boundary {
    pub fn label(&self) -> String {
        match self {
            Boundary::Pbc => "pbc".to_string(),
            Boundary::Obc { p, q } => format!("obc({p},{q})"),
            Boundary::ObcAveraged => "obc".to_string(),
        }
    }

    pub fn is_open(&self) -> bool {
        !matches!(self, Boundary::Pbc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainSpec {
    pub spin: SpinSpec,
    pub length: usize,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(spin: SpinSpec, length: usize, boundary: Boundary) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidLength(length));
        }
        if let Boundary::Obc { p, q } = boundary {
            let max = spin.bond_dim();
            if !(1..=max).contains(&p) || !(1..=max).contains(&q) {
                return Err(Error::BoundaryIndex { p, q, max });
            }
        }
        Ok(Self {
            spin,
            length,
            boundary,
        })
    }

    /// Shorthand for tests and the CLI: `ChainSpec::new(SpinSpec::new(s)?, length, boundary)`.
    pub fn build(s: i64, length: usize, boundary: Boundary) -> Result<Self> {
        Self::new(SpinSpec::new(s)?, length, boundary)
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::new(self.spin, self.length, boundary)
    }

    pub fn with_length(&self, length: usize) -> Result<Self> {
        Self::new(self.spin, length, self.boundary)
    }
}

/// Eigenspaces of the single-site parity `exp(iπ S^z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Even,
    Odd,
}

impl Sector {
    pub const BOTH: [Sector; 2] = [Sector::Even, Sector::Odd];

    /// Levels `m` spanned by the sector: `{2k : |k| <= [s/2]}` or
    /// `{2k+1 : -[(s+1)/2] <= k <= [(s-1)/2]}`.
    pub fn levels(self, spin: SpinSpec) -> Vec<i32> {
        let s = spin.s() as i32;
        match self {
            Sector::Even => (-(s / 2)..=s / 2).map(|k| 2 * k).collect(),
            Sector::Odd => (-((s + 1) / 2)..=(s - 1) / 2).map(|k| 2 * k + 1).collect(),
        }
    }

    pub fn contains(self, level: i32) -> bool {
        match self {
            Sector::Even => level.rem_euclid(2) == 0,
            Sector::Odd => level.rem_euclid(2) == 1,
        }
    }

    /// `c_p = 1/sqrt(1 + 2[s/2])` or `c_n = 1/sqrt(2[(s+1)/2])`.
    pub fn uniform_amplitude(self, spin: SpinSpec) -> f64 {
        let s = spin.s();
        let count = match self {
            Sector::Even => 1 + 2 * (s / 2),
            Sector::Odd => 2 * s.div_ceil(2),
        };
        1.0 / f64::from(count).sqrt()
    }

    pub fn label(self) -> &'static str {
        match self {
            Sector::Even => "even",
            Sector::Odd => "odd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    /// Bulk tensor `g_i`, carrying the sign `(-1)^{s+p-1}`.
    Local,
    /// End tensor `g_start`, unsigned.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub coefficient: f64,
    /// Magnetic quantum number `m = q - p` of the ket attached to this entry.
    pub level: i32,
}

/// `(s+1)×(s+1)` matrix whose `(p, q)` entry is `coefficient · |s; q-p⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondTensor {
    spin: SpinSpec,
    kind: TensorKind,
    entries: Vec<Entry>,
}

/// Exact squared magnitude `C(s,p-1)·C(s,q-1)·(s-p+q)!·(s+p-q)!` for 1-based `(p, q)`.
pub fn coefficient_sq(spin: SpinSpec, p: usize, q: usize) -> BigUint {
    let s = spin.s() as u64;
    let (a, b) = ((p - 1) as u64, (q - 1) as u64);
    if let Some(v) = coefficient_sq_u128(s, a, b) {
        return BigUint::from(v);
    }
    let fact = |n: u64| -> BigUint { (1..=n).map(BigUint::from).product() };
    binomial(BigUint::from(s), BigUint::from(a))
        * binomial(BigUint::from(s), BigUint::from(b))
        * fact(s - a + b)
        * fact(s + a - b)
}

fn coefficient_sq_u128(s: u64, a: u64, b: u64) -> Option<u128> {
    let fact = |n: u64| -> Option<u128> { (1..=u128::from(n)).try_fold(1u128, |acc, k| acc.checked_mul(k)) };
    let c1 = u128::from(binomial(s, a));
    let c2 = u128::from(binomial(s, b));
    c1.checked_mul(c2)?
        .checked_mul(fact(s - a + b)?)?
        .checked_mul(fact(s + a - b)?)
}

fn build_tensor(spin: SpinSpec, kind: TensorKind) -> BondTensor {
    let d = spin.bond_dim();
    let s = spin.s() as usize;
    let mut entries = Vec::with_capacity(d * d);
    for p in 1..=d {
        for q in 1..=d {
            let magnitude = coefficient_sq(spin, p, q)
                .to_f64()
                .expect("finite squared coefficient")
                .sqrt();
            let sign = match kind {
                TensorKind::Local if (s + p - 1) % 2 == 1 => -1.0,
                _ => 1.0,
            };
            entries.push(Entry {
                coefficient: sign * magnitude,
                level: q as i32 - p as i32,
            });
        }
    }
    BondTensor {
        spin,
        kind,
        entries,
    }
}

/// Bulk tensor `g_i(p, q) = (-1)^{s+p-1} sqrt(C(s,p-1) C(s,q-1)) sqrt((s-p+q)! (s+p-q)!) |s; q-p⟩`.
pub fn local_tensor(spin: SpinSpec) -> BondTensor {
    build_tensor(spin, TensorKind::Local)
}

/// End tensor `g_start`: entrywise magnitude of [`local_tensor`].
pub fn boundary_tensor(spin: SpinSpec) -> BondTensor {
    build_tensor(spin, TensorKind::Boundary)
}

impl BondTensor {
    pub fn spin(&self) -> SpinSpec {
        self.spin
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    /// Entry at 1-based bond indices.
    pub fn get(&self, p: usize, q: usize) -> Result<Entry> {
        let d = self.spin.bond_dim();
        if !(1..=d).contains(&p) || !(1..=d).contains(&q) {
            return Err(Error::BoundaryIndex { p, q, max: d });
        }
        Ok(self.entries[(p - 1) * d + (q - 1)])
    }

    pub(crate) fn at(&self, i: usize, j: usize) -> Entry {
        self.entries[i * self.spin.bond_dim() + j]
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Coefficient matrix of the ket `|s; m⟩`: the `(p, q)` entries with `q - p = m`.
    pub fn level_matrix(&self, level: i32) -> DMatrix<f64> {
        let d = self.spin.bond_dim();
        DMatrix::from_fn(d, d, |i, j| {
            let e = self.at(i, j);
            if e.level == level {
                e.coefficient
            } else {
                0.0
            }
        })
    }

    /// All level matrices, ordered `m = -s..=s`.
    pub fn level_matrices(&self) -> Vec<DMatrix<f64>> {
        let s = self.spin.s() as i32;
        (-s..=s).map(|m| self.level_matrix(m)).collect()
    }
}

/// Per-site coefficients of a product state.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    /// Equal non-negative amplitude on every level of the sector, identical on every site.
    Uniform,
    /// One full-length (`2s+1`) complex vector per site.
    PerSite(Vec<Vec<Complex64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductAnsatz {
    spin: SpinSpec,
    sector: Option<Sector>,
    coefficients: Coefficients,
}

const UNIT_NORM_TOL: f64 = 1e-10;

impl ProductAnsatz {
    /// Per-site product state. With `sector = Some(..)` the vectors must vanish off the sector.
    pub fn per_site(spin: SpinSpec, sector: Option<Sector>, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = spin.physical_dim();
        let s = spin.s() as i32;
        for (site, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "site {site} vector has {} components, expected {dim}",
                    v.len()
                )));
            }
            let norm_sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if (norm_sq.sqrt() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidInput(format!("site {site} vector is not normalized")));
            }
            if let Some(sector) = sector {
                let leaks = v
                    .iter()
                    .enumerate()
                    .any(|(k, c)| !sector.contains(k as i32 - s) && *c != Complex64::new(0.0, 0.0));
                if leaks {
                    return Err(Error::InvalidInput(format!(
                        "site {site} vector has weight outside the {} sector",
                        sector.label()
                    )));
                }
            }
        }
        Ok(Self {
            spin,
            sector,
            coefficients: Coefficients::PerSite(vectors),
        })
    }

    pub fn spin(&self) -> SpinSpec {
        self.spin
    }

    pub fn sector(&self) -> Option<Sector> {
        self.sector
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    /// Full `2s+1` vector for a site (indexed by `m + s`).
    pub fn site_vector(&self, site: usize) -> Result<Vec<Complex64>> {
        match &self.coefficients {
            Coefficients::Uniform => {
                let sector = self.sector.expect("uniform ansatz always has a sector");
                Ok(uniform_vector(self.spin, sector)
                    .into_iter()
                    .map(|x| Complex64::new(x, 0.0))
                    .collect())
            }
            Coefficients::PerSite(vectors) => vectors.get(site).cloned().ok_or(Error::SiteOutOfRange {
                index: site,
                len: vectors.len(),
            }),
        }
    }
}

/// The analytic sector state `c Σ_{m ∈ sector} |m⟩`, identical on all sites.
pub fn sector_ansatz(spin: SpinSpec, sector: Sector) -> ProductAnsatz {
    ProductAnsatz {
        spin,
        sector: Some(sector),
        coefficients: Coefficients::Uniform,
    }
}

/// Real site vector of the uniform sector state, indexed by `m + s`.
pub fn uniform_vector(spin: SpinSpec, sector: Sector) -> Vec<f64> {
    let s = spin.s() as i32;
    let c = sector.uniform_amplitude(spin);
    (-s..=s).map(|m| if sector.contains(m) { c } else { 0.0 }).collect()
}

/// Project a tensor onto a site vector: entry `(p, q)` is `conj(v[q-p]) · coefficient(p, q)`.
pub fn row_matrix<T>(tensor: &BondTensor, vector: &[T]) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let spin = tensor.spin();
    if vector.len() != spin.physical_dim() {
        return Err(Error::Dimension(format!(
            "site vector has {} components, tensor expects {}",
            vector.len(),
            spin.physical_dim()
        )));
    }
    let d = spin.bond_dim();
    let s = spin.s() as i32;
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let e = tensor.at(i, j);
        vector[(e.level + s) as usize]
            .conjugate()
            .scale(e.coefficient)
    }))
}

/// Real contracted row of the uniform sector state.
pub fn uniform_row(tensor: &BondTensor, sector: Sector) -> DMatrix<f64> {
    row_matrix(tensor, &uniform_vector(tensor.spin(), sector)).expect("matching dimensions")
}

/// Contracted row `⟨φ_site| ⊗ g` for an arbitrary ansatz.
pub fn contracted_row(ansatz: &ProductAnsatz, tensor: &BondTensor, site: usize) -> Result<DMatrix<Complex64>> {
    if ansatz.spin() != tensor.spin() {
        return Err(Error::Dimension(format!(
            "ansatz spin {} does not match tensor spin {}",
            ansatz.spin().s(),
            tensor.spin().s()
        )));
    }
    row_matrix(tensor, &ansatz.site_vector(site)?)
}
