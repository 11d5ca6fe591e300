use rayon::prelude::*;

use crate::geometry::Point;
use crate::sketch::SketchSegment;

/// Result of grouping the aggregated segments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Grouping {
    /// Member segment indices per group, each sorted ascending; groups are
    /// ordered by their smallest member.
    pub groups: Vec<Vec<usize>>,
    /// Segments of components smaller than `k`, relabelled isolated.
    pub dissolved: Vec<usize>,
}

/// For each member of `subset`, the subset members within its `k`-th nearest
/// distance (ties at the boundary all included, so the result does not
/// depend on enumeration order).
fn knn_sets(centers: &[Point], k: usize) -> Vec<Vec<(usize, f64)>> {
    (0..centers.len())
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(usize, f64)> = (0..centers.len())
                .filter(|&j| j != i)
                .map(|j| (j, centers[i].dist(centers[j])))
                .collect();
            if k == 0 || d.is_empty() {
                return Vec::new();
            }
            d.sort_by(|a, b| a.1.total_cmp(&b.1));
            let kth = d[(k - 1).min(d.len() - 1)].1;
            d.retain(|e| e.1 <= kth);
            d
        })
        .collect()
}

/// Connected components of the graph joining two aggregated segments when
/// either is among the other's `k` nearest and their midpoints are at most
/// `delta2` apart. Components with fewer than `k` members are dissolved.
pub fn group_segments(
    segments: &[SketchSegment],
    subset: &[usize],
    delta2: f64,
    k: usize,
) -> Grouping {
    let centers: Vec<Point> = subset.iter().map(|&i| segments[i].center()).collect();
    let knn = knn_sets(&centers, k);
    let n = subset.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (i, list) in knn.iter().enumerate() {
        for &(j, d) in list {
            if d <= delta2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut comps: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(subset[i]);
    }
    let mut out = Grouping::default();
    for (_, mut members) in comps {
        members.sort_unstable();
        if members.len() < k {
            out.dissolved.extend(members);
        } else {
            out.groups.push(members);
        }
    }
    out.groups.sort_by_key(|g| g[0]);
    out.dissolved.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(x: f64, y: f64) -> SketchSegment {
        SketchSegment::new(Point::new(x - 0.5, y), Point::new(x + 0.5, y))
    }

    #[test]
    fn two_clusters() {
        let mut segs = Vec::new();
        for c in 0..2 {
            for i in 0..12 {
                segs.push(dot(
                    c as f64 * 30.0 + (i % 4) as f64 * 2.0,
                    (i / 4) as f64 * 2.0,
                ));
            }
        }
        let all: Vec<usize> = (0..segs.len()).collect();
        let g = group_segments(&segs, &all, 4.0, 9);
        assert_eq!(g.groups.len(), 2);
        assert_eq!(g.groups[0], (0..12).collect::<Vec<_>>());
        assert!(g.dissolved.is_empty());
    }

    #[test]
    fn small_cluster_dissolves() {
        let segs: Vec<_> = (0..8).map(|i| dot(i as f64, 0.0)).collect();
        let all: Vec<usize> = (0..8).collect();
        let g = group_segments(&segs, &all, 5.0, 9);
        assert!(g.groups.is_empty());
        assert_eq!(g.dissolved, all);
    }

    #[test]
    fn chain_stays_connected() {
        let d2 = 5.0;
        let segs: Vec<_> = (0..12).map(|i| dot(i as f64 * (d2 - 1.0), 0.0)).collect();
        let all: Vec<usize> = (0..12).collect();
        let g = group_segments(&segs, &all, d2, 9);
        assert_eq!(g.groups, vec![all]);
    }
}
