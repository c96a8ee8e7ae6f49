//! Time grids and Brownian path increments.
//!
//! Grids are finite node sets 0 = t_0 < ... < t_k = T. Uniform grids are the
//! common case; the union of two uniform grids is what couples a fine and a
//! coarse discretization of the same path: increments are generated once on
//! the union grid and then summed down to each participant, which reproduces
//! the exact joint law of the two discrete paths.
//!
//! Node values are always computed as `horizon * (i as f64 / d as f64)`, so
//! two grids placing a node at the same rational fraction of the horizon get
//! the bit-identical f64. Embedding checks can therefore use exact equality.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Partition of [0, T] into simulation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid with nodes t_k = k T / steps.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("step count must be positive".into()));
        }
        let nodes = (0..=steps)
            .map(|k| horizon * (k as f64 / steps as f64))
            .collect();
        Ok(TimeGrid { horizon, nodes })
    }

    /// Merge of the node sets of two grids over the same horizon.
    pub fn union(a: &TimeGrid, b: &TimeGrid) -> Result<Self> {
        if a.horizon != b.horizon {
            return Err(Error::InvalidGrid(format!(
                "cannot merge grids with horizons {} and {}",
                a.horizon, b.horizon
            )));
        }
        let mut nodes = Vec::with_capacity(a.nodes.len() + b.nodes.len());
        let (mut i, mut j) = (0, 0);
        while i < a.nodes.len() || j < b.nodes.len() {
            let next = match (a.nodes.get(i), b.nodes.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            nodes.push(next);
        }
        Ok(TimeGrid {
            horizon: a.horizon,
            nodes,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Width of step k, i.e. t_{k+1} - t_k.
    #[inline]
    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }
}

/// Brownian increments over the steps of a grid, `dims` components per step.
///
/// Increment k is N(0, (t_{k+1} - t_k) I) and increments are independent
/// across steps. Layout is row-major: component j of step k sits at
/// `data[k * dims + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIncrements {
    grid: TimeGrid,
    dims: usize,
    data: Vec<f64>,
}

impl PathIncrements {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    #[inline]
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.data[k * self.dims..(k + 1) * self.dims]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Terminal Brownian value W_T per component, summed left to right.
    pub fn terminal(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.dims];
        for k in 0..self.grid.step_count() {
            for (j, t) in total.iter_mut().enumerate() {
                *t += self.data[k * self.dims + j];
            }
        }
        total
    }
}

/// Draw the increments of a `dims`-dimensional Brownian path on `grid`.
///
/// Pure function of the stream identity: the same (stream, grid, dims)
/// triple always yields the same increments.
pub fn brownian_increments(stream: &RngStream, grid: &TimeGrid, dims: usize) -> PathIncrements {
    let mut sampler = stream.sampler();
    let steps = grid.step_count();
    let mut data = Vec::with_capacity(steps * dims);
    for k in 0..steps {
        let sd = grid.step(k).sqrt();
        for _ in 0..dims {
            data.push(sd * sampler.next_gaussian());
        }
    }
    PathIncrements {
        grid: grid.clone(),
        dims,
        data,
    }
}

/// Sum fine increments down to a coarser grid whose nodes are all nodes of
/// the fine grid. Each coarse increment is the left-to-right sum of the fine
/// increments it covers, so the joint law of (fine, coarse) is exact.
pub fn coarsen_increments(fine: &PathIncrements, coarse_grid: &TimeGrid) -> Result<PathIncrements> {
    let fine_nodes = fine.grid().nodes();
    let dims = fine.dims();
    let mut data = vec![0.0; coarse_grid.step_count() * dims];
    let mut fi = 0usize; // index into fine steps
    for (ci, window) in coarse_grid.nodes().windows(2).enumerate() {
        let target = window[1];
        loop {
            if fi >= fine.grid().step_count() {
                return Err(Error::GridMismatch(format!(
                    "coarse node {target} not present in fine grid"
                )));
            }
            for j in 0..dims {
                data[ci * dims + j] += fine.data[fi * dims + j];
            }
            fi += 1;
            let reached = fine_nodes[fi];
            if reached == target {
                break;
            }
            if reached > target {
                return Err(Error::GridMismatch(format!(
                    "coarse node {target} not present in fine grid"
                )));
            }
        }
    }
    if fi != fine.grid().step_count() {
        return Err(Error::GridMismatch(
            "coarse grid ends before the fine grid does".into(),
        ));
    }
    Ok(PathIncrements {
        grid: coarse_grid.clone(),
        dims,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_grid_endpoints_are_exact() {
        let g = TimeGrid::uniform(2.5, 7).unwrap();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes()[7], 2.5);
        assert_eq!(g.step_count(), 7);
        for w in g.nodes().windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::uniform(-1.0, 4).is_err());
        assert!(TimeGrid::uniform(f64::NAN, 4).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
    }

    #[test]
    fn union_of_quarters_and_thirds_has_seven_nodes() {
        let a = TimeGrid::uniform(1.0, 4).unwrap();
        let b = TimeGrid::uniform(1.0, 3).unwrap();
        let u = TimeGrid::union(&a, &b).unwrap();
        assert_eq!(u.nodes().len(), 7);
        // every node of both parents is present bit-for-bit
        for t in a.nodes().iter().chain(b.nodes()) {
            assert!(u.nodes().contains(t));
        }
    }

    #[test]
    fn union_requires_matching_horizon() {
        let a = TimeGrid::uniform(1.0, 4).unwrap();
        let b = TimeGrid::uniform(2.0, 4).unwrap();
        assert!(TimeGrid::union(&a, &b).is_err());
    }

    #[test]
    fn embedded_nodes_match_bitwise_across_resolutions() {
        // node at rational position k/n equals node at (k*c)/(n*c)
        let coarse = TimeGrid::uniform(0.75, 5).unwrap();
        let fine = TimeGrid::uniform(0.75, 35).unwrap();
        for (k, &t) in coarse.nodes().iter().enumerate() {
            assert_eq!(t, fine.nodes()[k * 7]);
        }
    }

    #[test]
    fn increments_deterministic_and_sized() {
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let s = RngStream::new(7).split(4);
        let a = brownian_increments(&s, &g, 2);
        let b = brownian_increments(&s, &g, 2);
        assert_eq!(a, b);
        assert_eq!(a.data().len(), 32);
        assert_eq!(a.increment(3).len(), 2);
    }

    #[test]
    fn single_step_increment_variance() {
        let g = TimeGrid::uniform(1.0, 1).unwrap();
        let root = RngStream::new(99);
        let n = 100_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for i in 0..n {
            let w = brownian_increments(&root.split(i), &g, 1);
            let x = w.data()[0];
            sum += x;
            sum_sq += x * x;
        }
        let var = sum_sq / n as f64 - (sum / n as f64).powi(2);
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn coarsen_sums_left_to_right() {
        let fine = PathIncrements {
            grid: TimeGrid::uniform(1.0, 3).unwrap(),
            dims: 1,
            data: vec![0.1, -0.2, 0.3],
        };
        let coarse = TimeGrid::uniform(1.0, 1).unwrap();
        let out = coarsen_increments(&fine, &coarse).unwrap();
        assert_eq!(out.data(), &[0.1 - 0.2 + 0.3]);
    }

    #[test]
    fn coarsen_to_same_grid_is_identity() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        let w = brownian_increments(&RngStream::new(1), &g, 1);
        let out = coarsen_increments(&w, &g).unwrap();
        assert_eq!(out.data(), w.data());
    }

    #[test]
    fn coarsen_rejects_non_embedded_grid() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let w = brownian_increments(&RngStream::new(1), &g, 1);
        let bad = TimeGrid::uniform(1.0, 7).unwrap();
        assert!(coarsen_increments(&w, &bad).is_err());
    }

    #[test]
    fn union_coarsening_preserves_terminal_value() {
        let a = TimeGrid::uniform(1.0, 4).unwrap();
        let b = TimeGrid::uniform(1.0, 3).unwrap();
        let u = TimeGrid::union(&a, &b).unwrap();
        let w = brownian_increments(&RngStream::new(3).split(0), &u, 1);
        let wa = coarsen_increments(&w, &a).unwrap();
        let wb = coarsen_increments(&w, &b).unwrap();
        let t = w.terminal()[0];
        // telescoping sums; only association of the additions differs
        assert!((wa.terminal()[0] - t).abs() < 1e-14);
        assert!((wb.terminal()[0] - t).abs() < 1e-14);
    }

    proptest! {
        // nested uniform grids embed exactly, and every coarse increment is
        // exactly the left-to-right sum of the fine increments it covers
        #[test]
        fn prop_nested_coarsening_exact(
            seed in any::<u64>(),
            coarse_steps in 1usize..40,
            refine in 1usize..6,
            horizon_milli in 1u32..4000,
        ) {
            let horizon = f64::from(horizon_milli) / 1000.0;
            let coarse = TimeGrid::uniform(horizon, coarse_steps).unwrap();
            let fine = TimeGrid::uniform(horizon, coarse_steps * refine).unwrap();
            let w = brownian_increments(&RngStream::new(seed), &fine, 1);
            let down = coarsen_increments(&w, &coarse).unwrap();
            prop_assert_eq!(down.grid().step_count(), coarse_steps);
            for k in 0..coarse_steps {
                let mut run = 0.0;
                for i in 0..refine {
                    run += w.data()[k * refine + i];
                }
                prop_assert_eq!(down.data()[k], run);
            }
        }

        // union grids embed both parents; coarsening back to each succeeds
        #[test]
        fn prop_union_embeds_both_parents(
            seed in any::<u64>(),
            n in 1usize..30,
            m in 1usize..30,
        ) {
            let a = TimeGrid::uniform(1.0, n).unwrap();
            let b = TimeGrid::uniform(1.0, m).unwrap();
            let u = TimeGrid::union(&a, &b).unwrap();
            let w = brownian_increments(&RngStream::new(seed), &u, 1);
            let wa = coarsen_increments(&w, &a).unwrap();
            let wb = coarsen_increments(&w, &b).unwrap();
            prop_assert_eq!(wa.grid().step_count(), n);
            prop_assert_eq!(wb.grid().step_count(), m);
            let t = w.terminal()[0];
            prop_assert!((wa.terminal()[0] - t).abs() <= 1e-12 * (1.0 + t.abs()));
            prop_assert!((wb.terminal()[0] - t).abs() <= 1e-12 * (1.0 + t.abs()));
        }
    }
}
