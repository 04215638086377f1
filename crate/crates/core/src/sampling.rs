//! MixedTS variates through the mixture construction
//! `mu0 + mu V + sigma sqrt(V) X`, `V ~ Gamma(a, 1)`, `X | V ~ stdCTS(alpha, sigma lambda± sqrt(V))`.
//!
//! `V` is drawn exactly. The conditional stdCTS law is drawn by inverse CDF on
//! an FFT grid; the range of `V` is cut into Gamma quantile buckets and each
//! bucket shares one grid, built at the bucket's conditional mean.
//!
//! Streams: the output is split into blocks of [`BLOCK`] variates and block `i`
//! draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so a batch does
//! not depend on the number of threads.

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma as GammaCdf};

use crate::charfn::{stdcts_log_cf, CfGridSpec};
use crate::density::{invert_cf, DensityGrid};
use crate::error::{Error, Result};
use crate::moments::{stdcts_higher_cumulants, MomentSet};
use crate::params::{MixedTsParams, StdCtsParams, Validate};

pub const BLOCK: usize = 4096;
pub const BUCKETS: usize = 256;
/// Smallest tempering rate used for a conditional grid.
const MIN_RATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl SampleBatch {
    /// Single-column CSV preceded by a `# seed=` comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// Uniform on the open interval (0, 1).
fn open_unit<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn rng_for_block(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn fill_blocks<F>(count: usize, seed: u64, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let mut values = vec![0.0; count];
    values.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        let mut rng = rng_for_block(seed, b);
        for v in chunk {
            *v = draw(&mut rng);
        }
    });
    values
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::OutOfRange(0.0, "count >= 1"));
    }
    Ok(())
}

/// Unit-variance stdCTS grid, trimmed to where the distribution function moves.
pub fn stdcts_grid(p: &StdCtsParams) -> Result<DensityGrid> {
    let p = p.validate()?;
    let (c3, c4) = stdcts_higher_cumulants(&p);
    let m = MomentSet::from_cumulants([0.0, 1.0, c3, c4]);
    let log_cf = |u| stdcts_log_cf(u, &p);
    let spec = CfGridSpec::for_moments(log_cf, &m, 1 << 12)?;
    Ok(invert_cf(log_cf, &spec)?.trimmed(1e-14))
}

struct Buckets {
    /// Upper Gamma quantile of each bucket but the last.
    edges: Vec<f64>,
    grids: Vec<DensityGrid>,
}

impl Buckets {
    fn build(p: &MixedTsParams, core: &StdCtsParams) -> Result<Self> {
        let shape = GammaCdf::new(p.a, 1.0).map_err(|_| Error::OutOfRange(p.a, "a > 0"))?;
        let shifted = GammaCdf::new(p.a + 1.0, 1.0).map_err(|_| Error::OutOfRange(p.a, "a > 0"))?;
        let edges: Vec<f64> = (1..BUCKETS).map(|b| shape.inverse_cdf(b as f64 / BUCKETS as f64)).collect();
        // E[V | bucket] = a (F_{a+1}(hi) - F_{a+1}(lo)) / P(bucket)
        let mut upper = edges.iter().map(|&e| shifted.cdf(e)).collect::<Vec<_>>();
        upper.push(1.0);
        let means: Vec<f64> = (0..BUCKETS)
            .map(|b| {
                let lo = if b == 0 { 0.0 } else { upper[b - 1] };
                p.a * (upper[b] - lo) * BUCKETS as f64
            })
            .collect();
        let rate_min = p.sigma * core.lambda_plus.min(core.lambda_minus);
        let v_floor = (MIN_RATE / rate_min).powi(2);
        let grids = means
            .par_iter()
            .map(|&v| stdcts_grid(&core.rescaled(p.sigma * v.max(v_floor).sqrt())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { edges, grids })
    }

    fn grid_for(&self, v: f64) -> &DensityGrid {
        &self.grids[self.edges.partition_point(|&e| e < v)]
    }
}

/// `count` MixedTS variates, deterministic given `seed`.
pub fn sample_mixedts(p: &MixedTsParams, count: usize, seed: u64) -> Result<SampleBatch> {
    check_count(count)?;
    let p = p.validate()?;
    let mixing = Gamma::new(p.a, 1.0).map_err(|_| Error::OutOfRange(p.a, "a > 0"))?;
    let outer = |v: f64, x: f64| p.mu0 + p.mu * v + p.sigma * v.sqrt() * x;
    let values = match p.std_core() {
        None => fill_blocks(count, seed, |rng| {
            let v = mixing.sample(rng);
            let z: f64 = rng.sample(StandardNormal);
            outer(v, z)
        }),
        Some(core) => {
            let buckets = Buckets::build(&p, &core)?;
            fill_blocks(count, seed, |rng| {
                let v = mixing.sample(rng);
                let q = open_unit(rng);
                let x = buckets.grid_for(v).quantile(q).expect("q lies in (0, 1)");
                outer(v, x)
            })
        }
    };
    Ok(SampleBatch { values, seed })
}

/// Inverse-CDF draws from a tabulated law.
pub fn sample_from_grid(grid: &DensityGrid, count: usize, seed: u64) -> Result<SampleBatch> {
    check_count(count)?;
    let values = fill_blocks(count, seed, |rng| grid.quantile(open_unit(rng)).expect("q lies in (0, 1)"));
    Ok(SampleBatch { values, seed })
}
