use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};
use rayon::prelude::*;

use super::Interval;
use crate::error::{Error, Result};
use crate::metrics::{Measure, Sample};

/// Replicates drawn from one generator before switching to the next sub-seed.
const BLOCK: usize = 256;
const MAX_REDRAWS: usize = 10;

/// Sub-seed for task `index` under `master` (SplitMix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master).wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Runs `count` draws in fixed-size blocks, one generator per block, so the
/// output is identical for any thread count.
pub(crate) fn replicates<T: Send>(count: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..count.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b as u64));
            let len = BLOCK.min(count - b * BLOCK);
            (0..len).map(|_| draw(&mut rng)).collect::<Vec<T>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn exceeds(perm: f64, observed: f64, signed: bool) -> bool {
    let (a, b) = if signed { (perm.abs(), observed.abs()) } else { (perm, observed) };
    a >= b - 1e-12 * b.abs().max(1.0)
}

/// Permutation p-value `(1 + #{stat_perm >= stat_obs}) / (1 + n_perm)`.
///
/// `draw` produces one statistic under a random permutation of the protected
/// column. Signed statistics compare absolute values. Draws where the
/// statistic is undefined count as exceedances.
pub fn permutation_p(observed: f64, signed: bool, n_perm: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> Result<f64> + Sync) -> f64 {
    let hits = replicates(n_perm, seed, |rng| draw(rng).map_or(true, |v| exceeds(v, observed, signed)))
        .into_iter()
        .filter(|&h| h)
        .count();
    (1 + hits) as f64 / (1 + n_perm) as f64
}

/// Sorted bootstrap replicates. Each replicate is redrawn up to 10 times while
/// the statistic is undefined, then skipped.
pub fn bootstrap_replicates(n_boot: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    let outcomes = replicates(n_boot, seed, |rng| {
        let mut first_failed = false;
        for attempt in 0..MAX_REDRAWS {
            match draw(rng) {
                Ok(v) => return (first_failed, Some(v)),
                Err(_) => first_failed |= attempt == 0,
            }
        }
        (true, None)
    });
    let degenerate = outcomes.iter().filter(|(f, _)| *f).count();
    if 2 * degenerate > n_boot {
        return Err(Error::UnstableContext {
            degenerate,
            total: n_boot,
        });
    }
    let mut values: Vec<f64> = outcomes.into_iter().filter_map(|(_, v)| v).collect();
    values.sort_unstable_by(f64::total_cmp);
    Ok(values)
}

/// Percentile interval of sorted replicates at confidence `level`.
pub fn percentile_interval(sorted: &[f64], level: f64) -> Interval {
    let alpha = 1.0 - level;
    Interval::new(quantile(sorted, alpha / 2.0), quantile(sorted, 1.0 - alpha / 2.0))
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let (i, frac) = (h.floor() as usize, h - h.floor());
    if i + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Percentile bootstrap CI of a statistic over row indices `0..n`.
pub fn bootstrap_ci(
    n: usize,
    n_boot: usize,
    conf: f64,
    seed: u64,
    statistic: impl Fn(&[usize]) -> Result<f64> + Sync,
) -> Result<Interval> {
    if n == 0 {
        return Err(Error::InvalidParameter("bootstrap of an empty sample".into()));
    }
    let reps = bootstrap_replicates(n_boot, seed, |rng| {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        statistic(&idx)
    })?;
    Ok(percentile_interval(&reps, conf))
}

/// Permutation p-value of a measure: the protected column is shuffled
/// (within strata when conditioned). Categorical samples draw permuted
/// tables directly from the hypergeometric distribution with fixed margins.
pub fn measure_permutation_p(measure: &Measure, sample: &Sample, n_perm: usize, seed: u64) -> Result<f64> {
    let observed = measure.evaluate(sample)?;
    let signed = measure.metric.is_signed();
    if let Some(counts) = measure.cell_counts(sample) {
        let samplers: Vec<TableSampler> = (0..counts.n_strata)
            .map(|k| {
                let (rows, cols) = margins(counts.stratum(k), counts.n_output, counts.n_protected);
                TableSampler::new(rows, cols)
            })
            .collect();
        return Ok(permutation_p(observed, signed, n_perm, seed, |rng| {
            let mut cells = vec![0; counts.cells.len()];
            for (k, sampler) in samplers.iter().enumerate() {
                sampler.fill(&mut cells[k * counts.width()..(k + 1) * counts.width()], rng);
            }
            measure.evaluate_cells(sample, cells)
        }));
    }
    let groups = sample.stratum_groups();
    Ok(permutation_p(observed, signed, n_perm, seed, |rng| {
        let mut perm: Vec<usize> = (0..sample.len()).collect();
        for g in &groups {
            let mut shuffled = g.clone();
            shuffled.shuffle(rng);
            for (&i, &j) in g.iter().zip(&shuffled) {
                perm[i] = j;
            }
        }
        measure.evaluate_pairs(sample, perm.iter().enumerate().map(|(i, &j)| (i, j)))
    }))
}

/// Sorted bootstrap replicates of a measure, resampling rows within strata.
/// Categorical samples resample cell counts from the equivalent multinomial.
pub fn measure_bootstrap(measure: &Measure, sample: &Sample, n_boot: usize, seed: u64) -> Result<Vec<f64>> {
    if let Some(counts) = measure.cell_counts(sample) {
        return bootstrap_replicates(n_boot, seed, |rng| {
            let mut cells = Vec::with_capacity(counts.cells.len());
            for k in 0..counts.n_strata {
                cells.extend(multinomial(counts.stratum(k), rng));
            }
            measure.evaluate_cells(sample, cells)
        });
    }
    let groups = sample.stratum_groups();
    bootstrap_replicates(n_boot, seed, |rng| {
        let mut idx = Vec::with_capacity(sample.len());
        for g in groups.iter().filter(|g| !g.is_empty()) {
            idx.extend((0..g.len()).map(|_| g[rng.random_range(0..g.len())]));
        }
        measure.evaluate_pairs(sample, idx.iter().map(|&i| (i, i)))
    })
}

/// Row (output) and column (protected) totals of an `rows x cols` table.
fn margins(cells: &[u64], rows: usize, cols: usize) -> (Vec<u64>, Vec<u64>) {
    let mut r = vec![0; rows];
    let mut c = vec![0; cols];
    for i in 0..rows {
        for j in 0..cols {
            r[i] += cells[i * cols + j];
            c[j] += cells[i * cols + j];
        }
    }
    (r, c)
}

fn hypergeometric(pool: u64, successes: u64, draws: u64, rng: &mut ChaCha8Rng) -> u64 {
    if draws == 0 || successes == 0 {
        0
    } else if successes == pool {
        draws
    } else if draws == pool {
        successes
    } else {
        Hypergeometric::new(pool, successes, draws).expect("valid hypergeometric parameters").sample(rng)
    }
}

/// Random tables with fixed margins, as produced by shuffling the column labels.
struct TableSampler {
    rows: Vec<u64>,
    cols: Vec<u64>,
    /// The first draw always has the same parameters.
    first: Option<Hypergeometric>,
}

impl TableSampler {
    fn new(rows: Vec<u64>, cols: Vec<u64>) -> Self {
        let total: u64 = rows.iter().sum();
        let first = match (rows.first(), cols.first()) {
            (Some(&r), Some(&c)) if r > 0 && c > 0 && r < total && c < total => Hypergeometric::new(total, r, c).ok(),
            _ => None,
        };
        Self { rows, cols, first }
    }

    fn fill(&self, out: &mut [u64], rng: &mut ChaCha8Rng) {
        let (nr, nc) = (self.rows.len(), self.cols.len());
        let mut remaining = [0u64; 8];
        let mut heap = Vec::new();
        let remaining: &mut [u64] = if nr <= remaining.len() {
            remaining[..nr].copy_from_slice(&self.rows);
            &mut remaining[..nr]
        } else {
            heap.extend_from_slice(&self.rows);
            &mut heap
        };
        for (j, &col) in self.cols.iter().enumerate() {
            let mut draws = col;
            let mut pool: u64 = remaining.iter().sum();
            for i in 0..nr {
                if draws == 0 {
                    out[i * nc + j] = 0;
                    continue;
                }
                let x = match (&self.first, i, j) {
                    (Some(d), 0, 0) => d.sample(rng),
                    _ => hypergeometric(pool, remaining[i], draws, rng),
                };
                pool -= remaining[i];
                out[i * nc + j] = x;
                remaining[i] -= x;
                draws -= x;
            }
        }
    }
}

#[cfg(test)]
fn permuted_table(rows: &[u64], cols: &[u64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut out = vec![0; rows.len() * cols.len()];
    TableSampler::new(rows.to_vec(), cols.to_vec()).fill(&mut out, rng);
    out
}

/// Multinomial resample of `cells.iter().sum()` items with probabilities proportional to `cells`.
fn multinomial(cells: &[u64], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut left: u64 = cells.iter().sum();
    let mut mass = left;
    let mut out = Vec::with_capacity(cells.len());
    for &c in cells {
        let x = if left == 0 || c == 0 {
            0
        } else if c == mass {
            left
        } else {
            Binomial::new(left, c as f64 / mass as f64).expect("valid binomial parameters").sample(rng)
        };
        out.push(x);
        left -= x;
        mass -= c;
    }
    out
}
