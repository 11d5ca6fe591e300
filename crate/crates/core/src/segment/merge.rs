use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap};

use super::partition::{RegionStats, SuperpixelPartition};
use crate::error::Result;
use crate::raster::CoherencyImage;

/// Wishart log-likelihood merging cost of two regions:
/// `L·[(n_i+n_j)·ln|Z̄_ij| − n_i·ln|Z̄_i| − n_j·ln|Z̄_j|]` with `Z̄_ij` the
/// pooled mean. Singular means are diagonally loaded.
pub fn sc_criterion(a: &RegionStats, b: &RegionStats, looks: f64) -> f64 {
    cost_increase(a, b, looks).max(0.0)
}

fn cost_increase(a: &RegionStats, b: &RegionStats, looks: f64) -> f64 {
    region_cost(&a.merged(b), looks) - region_cost(a, looks) - region_cost(b, looks)
}

/// `L · n · ln|Z̄|` of one region, the quantity a merge increases by SC.
pub fn region_cost(r: &RegionStats, looks: f64) -> f64 {
    looks * r.count as f64 * r.mean().ln_det_regularized()
}

/// One hierarchical merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeStep {
    /// Surviving region (smaller id) and the region merged into it.
    pub keep: u32,
    pub gone: u32,
    pub sc: f64,
    /// Summed region cost of the pool before and after the merge.
    pub cost_before: f64,
    pub cost_after: f64,
}

/// Outcome of hierarchical merging.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalMerge {
    pub partition: SuperpixelPartition,
    /// Old region id → new region id.
    pub mapping: Vec<u32>,
    pub steps: Vec<MergeStep>,
}

#[derive(PartialEq)]
struct Candidate {
    sc: f64,
    a: u32,
    b: u32,
    version: (u64, u64),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> Ordering {
        self.sc
            .total_cmp(&o.sc)
            .then(self.a.cmp(&o.a))
            .then(self.b.cmp(&o.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Repeatedly merges the adjacent pair of `pool` regions with the smallest
/// SC (ties by smallest id pair) until `target` pool regions remain.
/// Regions outside the pool are never touched. Stops early with a warning
/// when no adjacent pool pair is left; `target` at or above the pool size is
/// a no-op.
pub fn hierarchical_merge(
    partition: &SuperpixelPartition,
    pool: &[u32],
    target: usize,
    looks: f64,
    img: &CoherencyImage,
) -> Result<HierarchicalMerge> {
    let n = partition.len();
    let identity: Vec<u32> = (0..n as u32).collect();
    if target >= pool.len() || target == 0 {
        if target > pool.len() {
            log::warn!(
                "N_r = {target} exceeds the {} homogenous regions; nothing merged",
                pool.len()
            );
        }
        return Ok(HierarchicalMerge {
            partition: partition.clone(),
            mapping: identity,
            steps: Vec::new(),
        });
    }
    let mut in_pool = vec![false; n];
    for &p in pool {
        in_pool[p as usize] = true;
    }
    let mut stats = partition.regions.clone();
    let mut alive = in_pool.clone();
    let mut version = vec![0u64; n];
    let mut parent: Vec<u32> = identity.clone();
    let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for &(a, b) in &partition.adjacency {
        if in_pool[a as usize] && in_pool[b as usize] {
            adj[a as usize].insert(b);
            adj[b as usize].insert(a);
        }
    }
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Reverse<Candidate>>,
                stats: &[RegionStats],
                version: &[u64],
                a: u32,
                b: u32| {
        let (a, b) = (a.min(b), a.max(b));
        heap.push(Reverse(Candidate {
            sc: sc_criterion(&stats[a as usize], &stats[b as usize], looks),
            a,
            b,
            version: (version[a as usize], version[b as usize]),
        }));
    };
    for &(a, b) in &partition.adjacency {
        if in_pool[a as usize] && in_pool[b as usize] {
            push(&mut heap, &stats, &version, a, b);
        }
    }
    let mut cost: f64 = pool
        .iter()
        .map(|&p| region_cost(&stats[p as usize], looks))
        .sum();
    let mut count = pool.len();
    let mut steps = Vec::new();
    while count > target {
        let Some(Reverse(c)) = heap.pop() else {
            log::warn!("no adjacent homogenous regions left at {count} > N_r = {target}");
            break;
        };
        let (a, b) = (c.a as usize, c.b as usize);
        if !alive[a] || !alive[b] || c.version != (version[a], version[b]) {
            continue;
        }
        let before = cost;
        cost += cost_increase(&stats[a], &stats[b], looks);
        stats[a] = stats[a].merged(&stats[b]);
        alive[b] = false;
        parent[b] = a as u32;
        version[a] += 1;
        let moved = std::mem::take(&mut adj[b]);
        for o in moved {
            adj[o as usize].remove(&(b as u32));
            if o as usize != a {
                adj[o as usize].insert(a as u32);
                adj[a].insert(o);
            }
        }
        adj[a].remove(&(a as u32));
        for &o in &adj[a] {
            push(&mut heap, &stats, &version, a as u32, o);
        }
        steps.push(MergeStep {
            keep: a as u32,
            gone: b as u32,
            sc: c.sc,
            cost_before: before,
            cost_after: cost,
        });
        count -= 1;
    }
    let root = |mut i: u32| {
        while parent[i as usize] != i {
            i = parent[i as usize];
        }
        i
    };
    let labels: Vec<u32> = (0..n as u32).map(root).collect();
    let merged = partition.relabel(&labels, img)?;
    let mut mapping = vec![0u32; n];
    for (old, new) in partition
        .region_id
        .as_slice()
        .iter()
        .zip(merged.region_id.as_slice())
    {
        mapping[*old as usize] = *new;
    }
    Ok(HierarchicalMerge {
        partition: merged,
        mapping,
        steps,
    })
}
