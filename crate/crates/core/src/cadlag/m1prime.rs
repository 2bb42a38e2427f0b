//! Completed graphs and a certified sandwich for the M1' distance.
//!
//! The completed graph of `xi` starts at `(0, xi(0-)) = (0, 0)`, so a
//! nonzero initial value shows up as a vertical segment at time 0.

use serde::{Deserialize, Serialize};

use super::path::{AsStep, StepPath};
use crate::error::{invalid, Result};

pub const DEFAULT_DENSITY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphPoint {
    pub value: f64,
    pub time: f64,
}

impl GraphPoint {
    fn dist(&self, o: &GraphPoint) -> f64 {
        (self.value - o.value).abs().max((self.time - o.time).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Vertical { time: f64, from: f64, to: f64 },
    Horizontal { value: f64, from: f64, to: f64 },
}

impl Segment {
    fn start(&self) -> GraphPoint {
        match *self {
            Segment::Vertical { time, from, .. } => GraphPoint { value: from, time },
            Segment::Horizontal { value, from, .. } => GraphPoint { value, time: from },
        }
    }

    fn end(&self) -> GraphPoint {
        match *self {
            Segment::Vertical { time, to, .. } => GraphPoint { value: to, time },
            Segment::Horizontal { value, to, .. } => GraphPoint { value, time: to },
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Segment::Vertical { from, to, .. } | Segment::Horizontal { from, to, .. } => (to - from).abs(),
        }
    }

    /// Exact l-infinity distance from `z` to the segment.
    pub fn distance(&self, z: &GraphPoint) -> f64 {
        fn gap(x: f64, a: f64, b: f64) -> f64 {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            (lo - x).max(x - hi).max(0.0)
        }
        match *self {
            Segment::Vertical { time, from, to } => (z.time - time).abs().max(gap(z.value, from, to)),
            Segment::Horizontal { value, from, to } => (z.value - value).abs().max(gap(z.time, from, to)),
        }
    }
}

/// Segments of the completed graph in traversal order.
pub fn graph_segments(p: &StepPath) -> Vec<Segment> {
    let mut out = Vec::with_capacity(2 * p.n_jumps() + 2);
    let mut level = p.initial();
    if level != 0.0 {
        out.push(Segment::Vertical { time: 0.0, from: 0.0, to: level });
    }
    let mut t = 0.0;
    for j in p.jumps() {
        out.push(Segment::Horizontal { value: level, from: t, to: j.time });
        out.push(Segment::Vertical { time: j.time, from: level, to: level + j.size });
        level += j.size;
        t = j.time;
    }
    out.push(Segment::Horizontal { value: level, from: t, to: 1.0 });
    out
}

/// Points of the completed graph in traversal order, at spacing at most
/// `density` along every segment and including every corner.
pub fn completed_graph<P: AsStep + ?Sized>(p: &P, density: f64) -> Result<Vec<GraphPoint>> {
    if !(density > 0.0) {
        return Err(invalid("density", "must be positive"));
    }
    let segs = graph_segments(&p.as_step());
    let mut out: Vec<GraphPoint> = Vec::new();
    for s in segs {
        let (a, b) = (s.start(), s.end());
        let pieces = (s.length() / density).ceil().max(1.0) as usize;
        let first = if out.last() == Some(&a) { 1 } else { 0 };
        for k in first..=pieces {
            let f = k as f64 / pieces as f64;
            let pt = if k == pieces {
                b
            } else {
                GraphPoint {
                    value: a.value + f * (b.value - a.value),
                    time: a.time + f * (b.time - a.time),
                }
            };
            if out.last() != Some(&pt) {
                out.push(pt);
            }
        }
    }
    Ok(out)
}

/// Bottleneck alignment of two point sequences: the smallest `d` such that
/// a monotone coupling of the sequences keeps all coupled pairs within `d`.
fn discrete_frechet(a: &[GraphPoint], b: &[GraphPoint]) -> f64 {
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for (i, pa) in a.iter().enumerate() {
        for j in 0..m {
            let d = pa.dist(&b[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut v = f64::INFINITY;
                if i > 0 {
                    v = v.min(prev[j]);
                }
                if j > 0 {
                    v = v.min(cur[j - 1]);
                }
                if i > 0 && j > 0 {
                    v = v.min(prev[j - 1]);
                }
                v
            };
            cur[j] = d.max(best);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Upper bound on the M1' distance. Any monotone coupling of the sampled
/// graphs interpolates to a pair of parametrisations whose distance is the
/// largest coupled gap, since the l-infinity norm is convex along segments.
pub fn m1prime_upper<P: AsStep + ?Sized, Q: AsStep + ?Sized>(p: &P, q: &Q, density: f64) -> Result<f64> {
    let a = completed_graph(p, density)?;
    let b = completed_graph(q, density)?;
    Ok(discrete_frechet(&a, &b))
}

fn one_sided_gap(points: &[GraphPoint], segs: &[Segment]) -> f64 {
    points
        .iter()
        .map(|z| segs.iter().map(|s| s.distance(z)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Lower bound: every point of one graph is within the M1' distance of the
/// other graph.
pub fn m1prime_lower_pointgap<P: AsStep + ?Sized, Q: AsStep + ?Sized>(p: &P, q: &Q, density: f64) -> Result<f64> {
    let (p, q) = (p.as_step(), q.as_step());
    let (gp, gq) = (completed_graph(&*p, density)?, completed_graph(&*q, density)?);
    let (sp, sq) = (graph_segments(&p), graph_segments(&q));
    Ok(one_sided_gap(&gp, &sq).max(one_sided_gap(&gq, &sp)))
}

/// Oscillation of `q` over `[ws, we]`, counting the left limit at `ws`.
fn oscillation(q: &StepPath, levels: &[f64], ws: f64, we: f64) -> f64 {
    let jumps = q.jumps();
    let first = jumps.partition_point(|j| j.time < ws);
    let last = jumps.partition_point(|j| j.time <= we);
    let start = if ws <= 0.0 { 0.0 } else { levels[first] };
    let (mut lo, mut hi) = (start, start);
    if ws <= 0.0 {
        lo = lo.min(q.initial());
        hi = hi.max(q.initial());
    }
    for v in &levels[first + 1..=last.max(first)] {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    hi - lo
}

fn flatjump_one_way(p: &StepPath, q: &StepPath) -> f64 {
    let levels = q.levels();
    let mut cuts: Vec<f64> = Vec::with_capacity(p.n_jumps() + 1);
    if p.initial() != 0.0 {
        cuts.push(0.0);
    }
    cuts.extend(p.jumps().iter().map(|j| j.time));
    let mut best: f64 = 0.0;
    for k in 0..=cuts.len() {
        let left = if k == 0 { None } else { Some(cuts[k - 1]) };
        let right = cuts.get(k).copied();
        let window = |d: f64| {
            let ws = left.map_or(0.0, |l| l + d);
            let we = right.map_or(1.0, |r| (r - d).min(1.0));
            (ws, we)
        };
        let feasible = |d: f64| {
            let (ws, we) = window(d);
            ws <= we && oscillation(q, &levels, ws, we) >= 2.0 * d
        };
        let (ws, we) = window(0.0);
        if ws > we {
            continue;
        }
        let mut hi = 0.5 * oscillation(q, &levels, ws, we);
        if hi <= best {
            continue;
        }
        if feasible(hi) {
            best = best.max(hi);
            continue;
        }
        let mut lo = best;
        if !feasible(lo) {
            continue;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Step back from the floating-point edge so the bound stays certified.
        best = best.max(lo - 1e-12);
    }
    best.max(0.0)
}

/// Lower bound: if `q` moves by `2 delta` over `[s, t]` while `p` is flat on
/// `[s - delta, t + delta]`, the distance is at least `delta`. A nonzero
/// initial value counts as a jump at time 0.
pub fn m1prime_lower_flatjump<P: AsStep + ?Sized, Q: AsStep + ?Sized>(p: &P, q: &Q) -> f64 {
    let (p, q) = (p.as_step(), q.as_step());
    flatjump_one_way(&p, &q).max(flatjump_one_way(&q, &p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M1Bounds {
    pub lower: f64,
    pub upper: f64,
}

/// Certified interval `[lower, upper]` containing the M1' distance.
pub fn m1prime_bounds<P: AsStep + ?Sized, Q: AsStep + ?Sized>(p: &P, q: &Q, density: f64) -> Result<M1Bounds> {
    let (p, q) = (p.as_step(), q.as_step());
    let lower = m1prime_lower_pointgap(&*p, &*q, density)?.max(m1prime_lower_flatjump(&*p, &*q));
    let upper = m1prime_upper(&*p, &*q, density)?;
    Ok(M1Bounds { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(t: f64, s: f64) -> StepPath {
        StepPath::indicator(t, s).unwrap()
    }

    fn precedes(a: &GraphPoint, b: &GraphPoint) -> bool {
        a.time < b.time || (a.time == b.time && a != b)
    }

    #[test]
    fn graph_of_zero_path() {
        let g = completed_graph(&StepPath::zero(), 0.5).unwrap();
        for t in [0.0, 0.5, 1.0] {
            assert!(g.contains(&GraphPoint { value: 0.0, time: t }));
        }
        assert!(g.iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn graph_of_indicator() {
        let g = completed_graph(&ind(0.5, 1.0), 0.1).unwrap();
        assert!(g.contains(&GraphPoint { value: 0.0, time: 0.5 }));
        assert!(g.contains(&GraphPoint { value: 1.0, time: 0.5 }));
        assert!(g.iter().filter(|p| p.time == 0.5).count() >= 10);
        assert!(g.windows(2).all(|w| precedes(&w[0], &w[1])));
        assert!(g.windows(2).all(|w| w[0].dist(&w[1]) <= 0.1 + 1e-15));
    }

    #[test]
    fn upper_examples() {
        let p = ind(0.5, 1.0);
        assert_eq!(m1prime_upper(&p, &p, 1e-2).unwrap(), 0.0);
        let d = m1prime_upper(&ind(0.0, 1.0), &ind(0.1, 1.0), 1e-3).unwrap();
        assert!(d <= 0.1 + 1e-3, "{d}");
        let d = m1prime_upper(&StepPath::zero(), &p, 1e-3).unwrap();
        assert!((d - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn pointgap_examples() {
        let p = ind(0.5, 1.0);
        assert_eq!(m1prime_lower_pointgap(&p, &p, 1e-2).unwrap(), 0.0);
        let d = m1prime_lower_pointgap(&StepPath::zero(), &p, 1e-2).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let d = m1prime_lower_pointgap(&p, &ind(0.8, 1.0), 1e-3).unwrap();
        assert!(d >= 0.3 - 1e-3, "{d}");
    }

    #[test]
    fn flatjump_examples() {
        let p = ind(0.5, 1.0);
        assert_eq!(m1prime_lower_flatjump(&p, &p), 0.0);
        assert!((m1prime_lower_flatjump(&StepPath::zero(), &p) - 0.5).abs() < 1e-12);
        let early = StepPath::new(0.0, [(0.05, 0.3), (0.2, -0.7)]).unwrap();
        let late = ind(0.9, 1.0);
        assert!((m1prime_lower_flatjump(&early, &late) - 0.5).abs() < 1e-9);
        // The paths on either side of the convergent family are close in
        // M1', so the initial value must count as a jump.
        assert!(m1prime_lower_flatjump(&ind(0.0, 1.0), &ind(0.01, 1.0)) <= 0.01 + 1e-12);
    }

    #[test]
    fn convergent_family() {
        for n in [2usize, 5, 64] {
            let d = m1prime_upper(&ind(0.0, 1.0), &ind(1.0 / n as f64, 1.0), 1e-3).unwrap();
            assert!(d <= 1.0 / n as f64 + 2e-3);
        }
    }
}
