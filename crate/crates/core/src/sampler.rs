//! Seeded random product states and their entanglement values.
//!
//! Every sample owns an independent ChaCha8 stream: the master seed picks the
//! key and the sample index picks the stream, so the records do not depend on
//! how rayon schedules the work.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::{product_overlap, ObcMode};
use crate::error::{Error, Result};
use crate::ge::Eps;
use crate::vbs::{uniform_vector, ChainSpec, Sector};

/// Haar-random unit vector: independent standard complex Gaussians, normalized.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Which coefficients of the product state are drawn at random.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SampleMode {
    /// Independent Haar vectors on every site.
    Unconstrained,
    /// One Haar vector repeated on every site.
    PermInvariant,
    /// Uniform `sector` ansatz on sites `2..L`, a Haar vector on site 1.
    BoundaryRandom { sector: Sector },
}

impl SampleMode {
    pub fn label(&self) -> String {
        match self {
            SampleMode::Unconstrained => "unconstrained".into(),
            SampleMode::PermInvariant => "perm-invariant".into(),
            SampleMode::BoundaryRandom { sector } => format!("boundary-random({})", sector.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    /// `-log2 |⟨Φ|VBS⟩|² / L` in bits per site.
    pub value: Eps,
    /// Master seed; the sample's stream is `index`.
    pub seed: u64,
    pub mode: SampleMode,
    pub chain: ChainSpec,
}

/// The site vectors of sample `index`.
pub fn sample_vectors(chain: &ChainSpec, mode: SampleMode, seed: u64, index: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let dim = chain.spin.physical_dim();
    match mode {
        SampleMode::Unconstrained => (0..chain.length).map(|_| haar_vector(&mut rng, dim)).collect(),
        SampleMode::PermInvariant => vec![haar_vector(&mut rng, dim); chain.length],
        SampleMode::BoundaryRandom { sector } => {
            let rest: Vec<Complex64> = uniform_vector(chain.spin, sector)
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect();
            let mut v = vec![rest; chain.length];
            v[0] = haar_vector(&mut rng, dim);
            v
        }
    }
}

/// Draws `n` product states and records their entanglement per site.
pub fn sample(chain: &ChainSpec, mode: SampleMode, n: usize, seed: u64) -> Result<Vec<SampleRecord>> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let mut records = (0..n)
        .into_par_iter()
        .map(|index| {
            let vectors = sample_vectors(chain, mode, seed, index);
            let overlap = product_overlap(chain, &vectors, ObcMode::Exact)?;
            Ok(SampleRecord {
                index,
                value: Eps::from_overlap(overlap, chain.length),
                seed,
                mode,
                chain: *chain,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.index);
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    /// Smallest finite value, absent when every sample has zero overlap.
    pub min: Option<f64>,
    pub mean: Option<f64>,
    /// Share of finite values within `delta` of `bound`.
    pub within_delta: f64,
    pub finite: usize,
    pub infinite: usize,
    /// Finite values below `bound - 1e-9`.
    pub below_bound: usize,
}

pub const BOUND_SLACK: f64 = 1e-9;

pub fn summarize(records: &[SampleRecord], bound: f64, delta: f64) -> Result<SampleSummary> {
    if records.is_empty() {
        return Err(Error::InvalidInput("cannot summarize an empty sample".into()));
    }
    let values: Vec<f64> = records.iter().filter_map(|r| r.value.finite()).collect();
    let finite = values.len();
    let min = values.iter().copied().reduce(f64::min);
    let mean = (finite > 0).then(|| values.iter().sum::<f64>() / finite as f64);
    let near = values.iter().filter(|v| (*v - bound).abs() <= delta).count();
    Ok(SampleSummary {
        min,
        mean,
        within_delta: if finite > 0 { near as f64 / finite as f64 } else { 0.0 },
        finite,
        infinite: records.len() - finite,
        below_bound: values.iter().filter(|v| **v < bound - BOUND_SLACK).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ge::ge;
    use crate::vbs::Boundary;

    fn pbc(s: i64, l: usize) -> ChainSpec {
        ChainSpec::build(s, l, Boundary::Pbc).unwrap()
    }

    #[test]
    fn same_seed_same_records() {
        let c = pbc(1, 6);
        let a = sample(&c, SampleMode::Unconstrained, 40, 11).unwrap();
        let b = sample(&c, SampleMode::Unconstrained, 40, 11).unwrap();
        assert_eq!(a, b);
        let other = sample(&c, SampleMode::Unconstrained, 40, 12).unwrap();
        assert_ne!(a, other);
        assert!(a.iter().enumerate().all(|(i, r)| r.index == i));
    }

    #[test]
    fn perm_invariant_repeats_one_vector() {
        let c = pbc(2, 5);
        for i in 0..10 {
            let v = sample_vectors(&c, SampleMode::PermInvariant, 3, i);
            assert!(v.iter().all(|x| x == &v[0]));
        }
    }

    #[test]
    fn site_vectors_have_unit_norm() {
        let c = pbc(3, 7);
        for mode in [
            SampleMode::Unconstrained,
            SampleMode::PermInvariant,
            SampleMode::BoundaryRandom { sector: Sector::Odd },
        ] {
            for i in 0..20 {
                for v in sample_vectors(&c, mode, 99, i) {
                    let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                    assert!((n.sqrt() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boundary_random_keeps_the_ansatz_on_the_bulk() {
        let c = ChainSpec::build(2, 6, Boundary::ObcAveraged).unwrap();
        let v = sample_vectors(&c, SampleMode::BoundaryRandom { sector: Sector::Even }, 5, 0);
        let u = uniform_vector(c.spin, Sector::Even);
        for site in &v[1..] {
            for (a, b) in site.iter().zip(&u) {
                assert_eq!(*a, Complex64::new(*b, 0.0));
            }
        }
    }

    #[test]
    fn summary_of_constant_records() {
        let c = pbc(1, 4);
        let recs: Vec<SampleRecord> = (0..5)
            .map(|index| SampleRecord {
                index,
                value: if index == 4 { Eps::Infinite } else { Eps::Finite(2.0) },
                seed: 0,
                mode: SampleMode::Unconstrained,
                chain: c,
            })
            .collect();
        let s = summarize(&recs, 2.0, 0.1).unwrap();
        assert_eq!(s.min, Some(2.0));
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.finite, 4);
        assert_eq!(s.infinite, 1);
        assert_eq!(s.within_delta, 1.0);
        assert!(summarize(&[], 0.0, 0.1).is_err());
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(sample(&pbc(1, 4), SampleMode::Unconstrained, 0, 1).is_err());
    }

    #[test]
    fn perm_invariant_never_beats_the_sector_value() {
        let c = pbc(1, 10);
        let bound = ge(&c).unwrap().eps.as_f64();
        let recs = sample(&c, SampleMode::PermInvariant, 300, 8).unwrap();
        let s = summarize(&recs, bound, 0.05).unwrap();
        assert_eq!(s.below_bound, 0);
    }

    #[test]
    fn boundary_random_gap_shrinks_with_length() {
        for s in [2i64, 3] {
            let mut gaps = Vec::new();
            for l in [4usize, 8, 16] {
                let c = ChainSpec::build(s, l, Boundary::ObcAveraged).unwrap();
                let bound = ge(&c).unwrap().eps_even.as_f64();
                let recs = sample(&c, SampleMode::BoundaryRandom { sector: Sector::Even }, 200, 21).unwrap();
                let min = summarize(&recs, bound, 0.05).unwrap().min.unwrap();
                gaps.push((min - bound).abs());
            }
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "s={s}: {gaps:?}");
        }
    }
}
