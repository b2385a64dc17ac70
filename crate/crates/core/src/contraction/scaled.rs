//! Matrix chain products carried as `body × 2^log2scale`.

use nalgebra::{ComplexField, DMatrix};

use super::NormResult;
use crate::error::{Error, Result};

/// Multiply by `2^k` without rounding (as long as the result stays normal).
pub(crate) fn pow2(k: i64) -> f64 {
    let k = k.clamp(-2000, 2000);
    let step = |e: i64| f64::from_bits(((e + 1023) as u64) << 52);
    if (-1022..=1023).contains(&k) {
        step(k)
    } else {
        // split so each factor is a normal number
        step(k / 2) * step(k - k / 2)
    }
}

/// A matrix represented as `body × 2^log2scale`.
///
/// After every operation the largest entry modulus of `body` lies in `[1, 2)`,
/// unless the matrix is identically zero, in which case `is_zero()` is set and
/// `log2scale` carries no information.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledMatrix<T: ComplexField<RealField = f64> + Copy> {
    body: DMatrix<T>,
    log2scale: f64,
    zero: bool,
}

/// A scalar `value × 2^log2scale` pulled out of a [`ScaledMatrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledScalar<T> {
    pub value: T,
    pub log2scale: f64,
}

impl<T: ComplexField<RealField = f64> + Copy> ScaledScalar<T> {
    /// `log2 |value × 2^scale|^2`, or exact zero.
    pub fn log2_abs_sq(&self) -> NormResult {
        let m = self.value.modulus();
        if m == 0.0 {
            NormResult::zero()
        } else {
            NormResult::from_log2(2.0 * (m.log2() + self.log2scale))
        }
    }

    /// `log2 |value × 2^scale|`; `None` for zero.
    pub fn log2_abs(&self) -> Option<f64> {
        let m = self.value.modulus();
        (m != 0.0).then(|| m.log2() + self.log2scale)
    }
}

impl<T: ComplexField<RealField = f64> + Copy> ScaledMatrix<T> {
    pub fn new(body: DMatrix<T>) -> Self {
        let mut out = Self {
            body,
            log2scale: 0.0,
            zero: false,
        };
        out.normalize();
        out
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn body(&self) -> &DMatrix<T> {
        &self.body
    }

    pub fn log2scale(&self) -> f64 {
        self.log2scale
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn dim(&self) -> usize {
        self.body.nrows()
    }

    fn normalize(&mut self) {
        let max = self.body.iter().map(|x| x.modulus()).fold(0.0f64, f64::max);
        if max == 0.0 {
            self.zero = true;
            self.log2scale = 0.0;
            return;
        }
        let (_, exp) = frexp(max);
        // max = mantissa × 2^exp with mantissa in [0.5, 1), so max × 2^(1-exp) ∈ [1, 2)
        let shift = 1 - exp;
        if shift != 0 {
            self.body.scale_mut(pow2(shift));
            self.log2scale -= shift as f64;
        }
    }

    /// `self · rhs`, renormalized.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.body.ncols() != rhs.body.nrows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.body.nrows(),
                self.body.ncols(),
                rhs.body.nrows(),
                rhs.body.ncols()
            )));
        }
        if self.zero || rhs.zero {
            return Ok(Self {
                body: DMatrix::zeros(self.body.nrows(), rhs.body.ncols()),
                log2scale: 0.0,
                zero: true,
            });
        }
        let mut out = Self {
            body: &self.body * &rhs.body,
            log2scale: self.log2scale + rhs.log2scale,
            zero: false,
        };
        out.normalize();
        Ok(out)
    }

    pub fn trace(&self) -> ScaledScalar<T> {
        ScaledScalar {
            value: if self.zero { T::zero() } else { self.body.trace() },
            log2scale: self.log2scale,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> ScaledScalar<T> {
        ScaledScalar {
            value: if self.zero { T::zero() } else { self.body[(i, j)] },
            log2scale: self.log2scale,
        }
    }

    /// `log2` of the sum of squared entry moduli.
    pub fn log2_sum_sq(&self) -> NormResult {
        if self.zero {
            return NormResult::zero();
        }
        let sum: f64 = self.body.iter().map(|x| x.modulus_squared()).sum();
        NormResult::from_log2(sum.log2() + 2.0 * self.log2scale)
    }

    /// Materialize the represented value (may overflow or underflow).
    pub fn to_dense(&self) -> DMatrix<T> {
        if self.zero {
            return self.body.clone();
        }
        let k = self.log2scale as i64;
        let mut out = self.body.clone();
        // apply in two steps so intermediate factors stay finite
        out.scale_mut(pow2(k / 2));
        out.scale_mut(pow2(k - k / 2));
        out
    }
}

/// Decompose `x > 0` into `m × 2^e` with `m ∈ [0.5, 1)`.
fn frexp(x: f64) -> (f64, i64) {
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    if raw_exp == 0 {
        // subnormal: renormalize first
        let (m, e) = frexp(x * pow2(64));
        return (m, e - 64);
    }
    let e = raw_exp - 1022;
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, e)
}

fn check_square(factors: &[&DMatrix<impl ComplexField>]) -> Result<usize> {
    let first = factors
        .first()
        .ok_or_else(|| Error::Dimension("empty factor list".into()))?;
    let d = first.nrows();
    for (k, f) in factors.iter().enumerate() {
        if f.nrows() != d || f.ncols() != d {
            return Err(Error::Dimension(format!(
                "factor {k} is {}x{}, expected {d}x{d}",
                f.nrows(),
                f.ncols()
            )));
        }
    }
    Ok(d)
}

/// Ordered product `F_1 F_2 ⋯ F_n`, renormalized after every multiplication.
pub fn scaled_product<T: ComplexField<RealField = f64> + Copy>(factors: &[DMatrix<T>]) -> Result<ScaledMatrix<T>> {
    let refs: Vec<&DMatrix<T>> = factors.iter().collect();
    check_square(&refs)?;
    let mut acc = ScaledMatrix::new(factors[0].clone());
    for f in &factors[1..] {
        if acc.is_zero() {
            break;
        }
        acc = acc.mul(&ScaledMatrix::new(f.clone()))?;
    }
    Ok(acc)
}

/// `M^n` for `n >= 1` by repeated squaring, renormalized after every multiplication.
pub fn scaled_power<T: ComplexField<RealField = f64> + Copy>(m: &DMatrix<T>, n: usize) -> Result<ScaledMatrix<T>> {
    check_square(&[m])?;
    if n == 0 {
        return Ok(ScaledMatrix::identity(m.nrows()));
    }
    let mut base = ScaledMatrix::new(m.clone());
    let mut result: Option<ScaledMatrix<T>> = None;
    let mut k = n;
    loop {
        if k & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.mul(&base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = base.mul(&base)?;
    }
    Ok(result.expect("n >= 1"))
}

/// Signed permutation `Q` with `Q[i, perm[i]] = sign[i]`.
struct SignedPermutation {
    perm: Vec<usize>,
    sign: Vec<f64>,
}

impl SignedPermutation {
    fn candidates(d: usize) -> [SignedPermutation; 3] {
        let alternating: Vec<f64> = (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let reversed: Vec<usize> = (0..d).rev().collect();
        [
            SignedPermutation {
                perm: (0..d).collect(),
                sign: alternating.clone(),
            },
            SignedPermutation {
                perm: reversed.clone(),
                sign: vec![1.0; d],
            },
            SignedPermutation {
                perm: reversed,
                sign: alternating,
            },
        ]
    }

    /// `Q M Q^T == -M` entrywise, in exact floating-point equality.
    fn anticommutes<T: ComplexField<RealField = f64> + Copy>(&self, m: &DMatrix<T>) -> bool {
        let d = m.nrows();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let conj = m[(self.perm[i], self.perm[j])].scale(self.sign[i] * self.sign[j]);
                conj == -m[(i, j)]
            })
        })
    }
}

/// True when some signed permutation `Q` (alternating signs, index reversal, or both)
/// satisfies `Q F Q^T = -F` for every factor. Then `Tr(F_1 ⋯ F_n) = (-1)^n Tr(F_1 ⋯ F_n)`
/// and the trace of any odd-length product vanishes identically.
pub fn shares_chiral_involution<T: ComplexField<RealField = f64> + Copy>(factors: &[&DMatrix<T>]) -> bool {
    let Ok(d) = check_square(factors) else {
        return false;
    };
    SignedPermutation::candidates(d)
        .iter()
        .any(|q| factors.iter().all(|f| q.anticommutes(f)))
}
