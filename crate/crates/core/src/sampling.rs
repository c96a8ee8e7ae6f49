//! Deterministic parallel sample aggregation.
//!
//! Samples are partitioned into fixed chunks of `CHUNK_SAMPLES`. Chunk c uses
//! the child stream `stream.split(c)`, and sample i inside the chunk uses
//! `stream.split(c).split(i)`, so the set of random numbers consumed is a
//! pure function of the parent stream and the sample count. Chunks may run
//! on any number of worker threads; their partial sums are combined with a
//! fixed-shape pairwise tree over the chunk index, which keeps the floating
//! point result bit-identical regardless of thread count or scheduling.

use rayon::prelude::*;

use crate::rng::RngStream;

/// Samples per chunk. Changing this changes which stream each sample draws
/// from, and therefore every seeded result.
pub const CHUNK_SAMPLES: usize = 1 << 12;

/// Running first and second moments of a scalar sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SampleStats {
    fn merge(self, other: SampleStats) -> SampleStats {
        SampleStats {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Unbiased sample variance, clamped at zero against cancellation.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_err(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Bivariate moments, enough for a correlation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairStats {
    pub count: usize,
    pub sum_x: f64,
    pub sum_y: f64,
    pub sum_xx: f64,
    pub sum_yy: f64,
    pub sum_xy: f64,
}

impl PairStats {
    fn merge(self, o: PairStats) -> PairStats {
        PairStats {
            count: self.count + o.count,
            sum_x: self.sum_x + o.sum_x,
            sum_y: self.sum_y + o.sum_y,
            sum_xx: self.sum_xx + o.sum_xx,
            sum_yy: self.sum_yy + o.sum_yy,
            sum_xy: self.sum_xy + o.sum_xy,
        }
    }

    pub fn mean_x(&self) -> f64 {
        self.sum_x / self.count as f64
    }

    pub fn var_x(&self) -> f64 {
        let n = self.count as f64;
        ((self.sum_xx - self.sum_x * self.sum_x / n) / (n - 1.0)).max(0.0)
    }

    pub fn var_y(&self) -> f64 {
        let n = self.count as f64;
        ((self.sum_yy - self.sum_y * self.sum_y / n) / (n - 1.0)).max(0.0)
    }

    pub fn correlation(&self) -> f64 {
        let n = self.count as f64;
        let cov = (self.sum_xy - self.sum_x * self.sum_y / n) / (n - 1.0);
        cov / (self.var_x() * self.var_y()).sqrt()
    }
}

/// Fold `samples` evaluations of `f` into per-chunk accumulators and merge
/// them pairwise in chunk order.
fn fold_chunks<A, F, G>(samples: usize, stream: &RngStream, fold: F, merge: G) -> A
where
    A: Default + Send,
    F: Fn(A, &RngStream) -> A + Sync,
    G: Fn(A, A) -> A + Sync + Send,
{
    let chunks = samples.div_ceil(CHUNK_SAMPLES);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let chunk_stream = stream.split(c as u32);
            let lo = c * CHUNK_SAMPLES;
            let hi = ((c + 1) * CHUNK_SAMPLES).min(samples);
            let mut acc = A::default();
            for i in lo..hi {
                acc = fold(acc, &chunk_stream.split((i - lo) as u32));
            }
            acc
        })
        .collect();
    pairwise_merge(partials, &merge)
}

/// Reduce in a balanced tree whose shape depends only on the length.
fn pairwise_merge<A, G>(mut items: Vec<A>, merge: &G) -> A
where
    A: Default,
    G: Fn(A, A) -> A,
{
    if items.is_empty() {
        return A::default();
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.into_iter().next().unwrap()
}

/// Mean/variance statistics of `samples` draws of a scalar functional.
pub fn sample_stats<F>(samples: usize, stream: &RngStream, f: F) -> SampleStats
where
    F: Fn(&RngStream) -> f64 + Sync,
{
    fold_chunks(
        samples,
        stream,
        |mut acc: SampleStats, s| {
            let v = f(s);
            acc.count += 1;
            acc.sum += v;
            acc.sum_sq += v * v;
            acc
        },
        SampleStats::merge,
    )
}

/// Joint statistics of `samples` draws of a pair of functionals.
pub fn pair_stats<F>(samples: usize, stream: &RngStream, f: F) -> PairStats
where
    F: Fn(&RngStream) -> (f64, f64) + Sync,
{
    fold_chunks(
        samples,
        stream,
        |mut acc: PairStats, s| {
            let (x, y) = f(s);
            acc.count += 1;
            acc.sum_x += x;
            acc.sum_y += y;
            acc.sum_xx += x * x;
            acc.sum_yy += y * y;
            acc.sum_xy += x * y;
            acc
        },
        PairStats::merge,
    )
}

/// Evaluate `f` once per index, in parallel, returning values in index order.
pub fn indexed_values<F>(count: usize, stream: &RngStream, f: F) -> Vec<f64>
where
    F: Fn(&RngStream) -> f64 + Sync,
{
    (0..count)
        .into_par_iter()
        .map(|i| {
            let c = i / CHUNK_SAMPLES;
            f(&stream.split(c as u32).split((i % CHUNK_SAMPLES) as u32))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_degenerate_sample() {
        let s = RngStream::new(0);
        let stats = sample_stats(1000, &s, |_| 2.5);
        assert_eq!(stats.count, 1000);
        assert_eq!(stats.mean(), 2.5);
        assert_eq!(stats.variance(), 0.0);
        assert_eq!(stats.std_err(), 0.0);
    }

    #[test]
    fn stats_match_sequential_reference() {
        // small enough to recompute by hand with the same stream layout
        let s = RngStream::new(77);
        let n = 10_000usize;
        let stats = sample_stats(n, &s, |st| st.sampler().next_gaussian());
        let mut vals = Vec::with_capacity(n);
        for c in 0..n.div_ceil(CHUNK_SAMPLES) {
            let cs = s.split(c as u32);
            let lo = c * CHUNK_SAMPLES;
            let hi = ((c + 1) * CHUNK_SAMPLES).min(n);
            for i in lo..hi {
                vals.push(cs.split((i - lo) as u32).sampler().next_gaussian());
            }
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        assert!((stats.mean() - mean).abs() < 1e-12);
        assert!(stats.mean().abs() < 0.05);
        assert!((stats.variance() - 1.0).abs() < 0.05);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let s = RngStream::new(123).split(6);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| sample_stats(50_000, &s, |st| st.sampler().next_gaussian()))
        };
        let one = run(1);
        let four = run(4);
        let sixteen = run(16);
        assert_eq!(one, four);
        assert_eq!(one, sixteen);
    }

    #[test]
    fn pairwise_merge_is_balanced_not_sequential() {
        // association: ((a+b)+(c+d)) + e for five leaves
        let items = vec![1.0f64, 2.0, 3.0, 4.0, 5.0];
        let merged = pairwise_merge(items, &|a, b| a + b);
        assert_eq!(merged, (((1.0 + 2.0) + (3.0 + 4.0)) + 5.0));
    }

    #[test]
    fn pair_stats_detects_correlation() {
        let s = RngStream::new(8);
        let stats = pair_stats(100_000, &s, |st| {
            let mut smp = st.sampler();
            let x = smp.next_gaussian();
            let e = smp.next_gaussian();
            (x, 0.5 * x + e)
        });
        let expect = 0.5 / (1.25f64).sqrt();
        assert!((stats.correlation() - expect).abs() < 0.02);
    }

    #[test]
    fn indexed_values_are_ordered_and_deterministic() {
        let s = RngStream::new(55);
        let a = indexed_values(5000, &s, |st| st.sampler().next_uniform());
        let b = indexed_values(5000, &s, |st| st.sampler().next_uniform());
        assert_eq!(a, b);
        // first sample of chunk 1 uses stream split(1).split(0)
        let direct = s.split(1).split(0).sampler().next_uniform();
        assert_eq!(a[CHUNK_SAMPLES], direct);
    }
}
