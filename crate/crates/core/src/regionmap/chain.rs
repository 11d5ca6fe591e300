use crate::geometry::{orientation_diff_deg, Point};
use crate::sketch::{SketchLine, SketchSegment};

/// A maximal head-to-tail chain of segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    /// Segment indices in chain order, with `true` where the segment runs
    /// tail to head inside the chain.
    pub members: Vec<(usize, bool)>,
}

impl Chain {
    /// The chain as a line of consistently oriented segments.
    pub fn to_line(&self, segments: &[SketchSegment]) -> SketchLine {
        SketchLine::new(
            self.members
                .iter()
                .map(|&(i, flip)| oriented(&segments[i], flip))
                .collect(),
        )
    }

    pub fn total_length(&self, segments: &[SketchSegment]) -> f64 {
        self.members
            .iter()
            .map(|&(i, _)| segments[i].length())
            .sum()
    }
}

fn oriented(s: &SketchSegment, flip: bool) -> SketchSegment {
    let mut s = s.clone();
    if flip {
        std::mem::swap(&mut s.head, &mut s.tail);
        s.support.reverse();
    }
    s
}

fn endpoint(s: &SketchSegment, end: usize) -> Point {
    if end == 0 {
        s.head
    } else {
        s.tail
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Links segments whose endpoints are at most `max_gap` apart into maximal
/// chains. Each endpoint joins at most one other endpoint; where several
/// candidates compete the pair with the smallest orientation change wins
/// (then the smaller gap, then the lower indices). Segments are undirected,
/// so a segment may be reversed to continue a chain.
pub fn connect_lines(segments: &[SketchSegment], max_gap: f64) -> Vec<Chain> {
    let n = segments.len();
    let mut links = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dtheta = orientation_diff_deg(segments[i].orientation(), segments[j].orientation());
            for a in 0..2 {
                for b in 0..2 {
                    let gap = endpoint(&segments[i], a).dist(endpoint(&segments[j], b));
                    if gap <= max_gap {
                        links.push((dtheta, gap, 2 * i + a, 2 * j + b));
                    }
                }
            }
        }
    }
    links.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.total_cmp(&y.1))
            .then((x.2, x.3).cmp(&(y.2, y.3)))
    });

    // partner[e] = endpoint linked to endpoint e
    let mut partner = vec![usize::MAX; 2 * n];
    let mut parent: Vec<usize> = (0..n).collect();
    for &(_, _, ea, eb) in &links {
        if partner[ea] != usize::MAX || partner[eb] != usize::MAX {
            continue;
        }
        let (ra, rb) = (find(&mut parent, ea / 2), find(&mut parent, eb / 2));
        if ra == rb {
            continue;
        }
        parent[ra.max(rb)] = ra.min(rb);
        partner[ea] = eb;
        partner[eb] = ea;
    }

    let mut used = vec![false; n];
    let mut chains = Vec::new();
    for start in 0..n {
        if used[start] {
            continue;
        }
        // walk to the free end of this chain, then collect forwards
        let (mut seg, mut exit) = (start, 0usize);
        let mut steps = 0;
        while partner[2 * seg + exit] != usize::MAX && steps <= n {
            let e = partner[2 * seg + exit];
            seg = e / 2;
            exit = 1 - e % 2;
            steps += 1;
        }
        // `exit` is now the free end; the chain runs from there
        let mut members = Vec::new();
        let mut cur = seg;
        let mut entry = exit;
        loop {
            used[cur] = true;
            members.push((cur, entry == 1));
            let e = partner[2 * cur + (1 - entry)];
            if e == usize::MAX {
                break;
            }
            cur = e / 2;
            entry = e % 2;
        }
        chains.push(canonical(members));
    }
    chains.sort_by_key(|c| c.members.iter().map(|m| m.0).min());
    chains
}

/// Orients a chain so its lower-indexed end segment comes first.
fn canonical(mut members: Vec<(usize, bool)>) -> Chain {
    if members.len() > 1 && members[members.len() - 1].0 < members[0].0 {
        members.reverse();
        for m in &mut members {
            m.1 = !m.1;
        }
    }
    Chain { members }
}

/// Whether a chain is a straight line: every orientation change between
/// consecutive segments is below `theta0` degrees and every step moves
/// forward, i.e. the head of one segment and the tail of the next are
/// farther apart than either segment is long.
pub fn is_straight(chain: &Chain, segments: &[SketchSegment], theta0: f64) -> bool {
    let segs: Vec<SketchSegment> = chain
        .members
        .iter()
        .map(|&(i, f)| oriented(&segments[i], f))
        .collect();
    segs.windows(2).all(|w| {
        let dtheta = orientation_diff_deg(w[0].orientation(), w[1].orientation());
        let d2 = w[0].head.dist(w[1].tail);
        dtheta < theta0 && d2 > w[0].length().max(w[1].length())
    })
}

/// Segments of the longest straight chains: the top `top_fraction` of the
/// straight chains by total length (at least one if any chain is straight).
pub fn label_long_straight(
    chains: &[Chain],
    segments: &[SketchSegment],
    theta0: f64,
    top_fraction: f64,
) -> Vec<bool> {
    let mut straight: Vec<(f64, usize)> = chains
        .iter()
        .enumerate()
        .filter(|(_, c)| is_straight(c, segments, theta0))
        .map(|(i, c)| (c.total_length(segments), i))
        .collect();
    straight.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let take = if straight.is_empty() {
        0
    } else {
        ((straight.len() as f64 * top_fraction).floor() as usize).max(1)
    };
    let mut is = vec![false; segments.len()];
    for &(_, ci) in straight.iter().take(take) {
        for &(s, _) in &chains[ci].members {
            is[s] = true;
        }
    }
    is
}
