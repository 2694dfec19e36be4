//! Dominance, non-dominated sorting, crowding distance, the hypervolume
//! indicator and hypervolume subset selection.
//!
//! Everything minimizes. Points are anything that derefs to a slice of
//! objective values, so `Vec<f64>`, `[f64; 2]` and rational vectors all work.
//! Ties are always broken toward the lowest index.

use thiserror::Error;

use crate::scalar::{Objective, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParetoError {
    #[error("objective vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates<T: Objective>(a: &[T], b: &[T]) -> Result<bool, ParetoError> {
    if a.len() != b.len() {
        return Err(ParetoError::LengthMismatch(a.len(), b.len()));
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
pub(crate) fn dominates_unchecked<T: Objective>(a: &[T], b: &[T]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        strict |= x < y;
    }
    strict
}

#[inline]
fn weakly_dominates<T: Objective>(a: &[T], b: &[T]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Ranked fronts `F1..Fk`, each an ascending list of population indices.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FrontPartition {
    pub fronts: Vec<Vec<usize>>,
}

impl FrontPartition {
    /// Zero-based front rank of every point.
    pub fn ranks(&self) -> Vec<usize> {
        let n = self.fronts.iter().map(Vec::len).sum();
        let mut ranks = vec![0; n];
        for (r, front) in self.fronts.iter().enumerate() {
            for &i in front {
                ranks[i] = r;
            }
        }
        ranks
    }

    pub fn len(&self) -> usize {
        self.fronts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fronts.is_empty()
    }
}

/// Non-dominated sorting (the bookkeeping variant of iterative peeling).
pub fn nds<T: Objective, P: AsRef<[T]>>(points: &[P]) -> FrontPartition {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates_unchecked(a, b) {
                dominating[i].push(j);
                dominated_by[j] += 1;
            } else if dominates_unchecked(b, a) {
                dominating[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    FrontPartition { fronts }
}

/// Indices of the non-dominated points, ascending.
pub fn pareto_front<T: Objective, P: AsRef<[T]>>(points: &[P]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| dominates_unchecked(q.as_ref(), points[i].as_ref())))
        .collect()
}

/// NSGA-II crowding distance of the points of one front.
pub fn crowding_distance<T: Scalar, P: AsRef<[T]>>(front: &[P]) -> Vec<T> {
    let n = front.len();
    if n == 0 {
        return Vec::new();
    }
    let m = front[0].as_ref().len();
    let mut dist = vec![T::zero(); n];
    if n <= 2 {
        return vec![T::infinity(); n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let value = |i: usize| front[i].as_ref()[k];
        order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        dist[order[0]] = T::infinity();
        dist[order[n - 1]] = T::infinity();
        let range = hi - lo;
        if range <= T::zero() {
            continue;
        }
        for w in 1..n - 1 {
            let gap = value(order[w + 1]) - value(order[w - 1]);
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// Lebesgue measure of the region dominated by `points` and bounded by
/// `reference`. Points not strictly better than the reference in every
/// objective contribute nothing.
pub fn hypervolume<T: Objective, P: AsRef<[T]>>(points: &[P], reference: &[T]) -> T {
    let kept: Vec<&[T]> = points
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| p.len() == reference.len() && p.iter().zip(reference).all(|(x, r)| x < r))
        .collect();
    hv_recursive(kept, reference)
}

fn hv_recursive<T: Objective>(mut points: Vec<&[T]>, reference: &[T]) -> T {
    let m = reference.len();
    if points.is_empty() {
        return T::zero();
    }
    match m {
        0 => T::zero(),
        1 => {
            let best = points.iter().map(|p| p[0]).fold(reference[0], |a, b| if b < a { b } else { a });
            reference[0] - best
        }
        2 => {
            points.sort_by(|a, b| cmp(a[0], b[0]).then(cmp(a[1], b[1])));
            let mut area = T::zero();
            let mut floor = reference[1];
            for p in points {
                if p[1] < floor {
                    area = area + (reference[0] - p[0]) * (floor - p[1]);
                    floor = p[1];
                }
            }
            area
        }
        _ => {
            // Slice along the last objective: between consecutive levels the
            // cross-section is the (m-1)-dimensional volume of every point at
            // or below the lower level.
            let last = m - 1;
            points.sort_by(|a, b| cmp(a[last], b[last]));
            let mut volume = T::zero();
            for i in 0..points.len() {
                let level = points[i][last];
                let upper = if i + 1 < points.len() { points[i + 1][last] } else { reference[last] };
                if !(level < upper) {
                    continue;
                }
                let slice: Vec<&[T]> = points[..=i].iter().map(|p| &p[..last]).collect();
                volume = volume + hv_recursive(pareto_slice(slice), &reference[..last]) * (upper - level);
            }
            volume
        }
    }
}

/// Drops dominated points before recursing so slices stay small.
fn pareto_slice<T: Objective>(points: Vec<&[T]>) -> Vec<&[T]> {
    let mut kept: Vec<&[T]> = Vec::with_capacity(points.len());
    for p in points {
        if kept.iter().any(|q| weakly_dominates(q, p)) {
            continue;
        }
        kept.retain(|q| !weakly_dominates(p, q));
        kept.push(p);
    }
    kept
}

fn cmp<T: PartialOrd>(a: T, b: T) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}

/// Hypervolume lost when point `i` is removed.
pub fn hv_contribution<T: Objective, P: AsRef<[T]>>(points: &[P], i: usize, reference: &[T]) -> T {
    let p = points[i].as_ref();
    let covered = points.iter().enumerate().any(|(j, q)| j != i && weakly_dominates(q.as_ref(), p));
    if covered || !p.iter().zip(reference).all(|(x, r)| x < r) {
        return T::zero();
    }
    let rest: Vec<&[T]> = points.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, q)| q.as_ref()).collect();
    let loss = hypervolume(points, reference) - hypervolume(&rest, reference);
    if loss < T::zero() {
        T::zero()
    } else {
        loss
    }
}

/// Index of the point whose removal loses the least hypervolume.
///
/// Points covered by another member (dominated or duplicated) contribute
/// exactly zero, so they go first.
pub fn hssp_remove_one<T: Objective, P: AsRef<[T]>>(points: &[P], reference: &[T]) -> usize {
    assert!(!points.is_empty(), "hssp_remove_one needs a nonempty set");
    let mut best = 0;
    let mut best_loss = hv_contribution(points, 0, reference);
    for i in 1..points.len() {
        let loss = hv_contribution(points, i, reference);
        if loss < best_loss {
            best = i;
            best_loss = loss;
        }
    }
    best
}

/// Greedy forward hypervolume subset selection of `k` points, returned in
/// ascending index order.
pub fn hssp_greedy<T: Objective, P: AsRef<[T]>>(points: &[P], k: usize, reference: &[T]) -> Vec<usize> {
    let n = points.len();
    if k >= n {
        return (0..n).collect();
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let mut selected: Vec<&[T]> = Vec::with_capacity(k + 1);
    for _ in 0..k {
        let mut best: Option<(usize, T)> = None;
        for i in 0..n {
            if taken[i] {
                continue;
            }
            selected.push(points[i].as_ref());
            let value = hypervolume(&selected, reference);
            selected.pop();
            if best.as_ref().is_none_or(|(_, v)| value > *v) {
                best = Some((i, value));
            }
        }
        let (i, _) = best.expect("k < n leaves a candidate");
        taken[i] = true;
        chosen.push(i);
        selected.push(points[i].as_ref());
    }
    chosen.sort_unstable();
    chosen
}

/// Picks `k` points by front order, resolving the front that straddles the cut
/// with [`hssp_greedy`]. Indices come back ascending.
pub fn select_by_nds_hssp<T: Objective, P: AsRef<[T]>>(points: &[P], k: usize, reference: &[T]) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    if k == 0 {
        return out;
    }
    for front in nds(points).fronts {
        let room = k - out.len();
        if front.len() <= room {
            out.extend_from_slice(&front);
        } else {
            let members: Vec<&[T]> = front.iter().map(|&i| points[i].as_ref()).collect();
            out.extend(hssp_greedy(&members, room, reference).into_iter().map(|j| front[j]));
        }
        if out.len() == k {
            break;
        }
    }
    out.sort_unstable();
    out
}

/// Orders a population by front rank, then crowding distance descending, then
/// index. Returns the permutation.
pub fn rank_by_nds_crowding<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    let mut order = Vec::with_capacity(points.len());
    for front in nds(points).fronts {
        let members: Vec<&[f64]> = front.iter().map(|&i| points[i].as_ref()).collect();
        let crowd = crowding_distance(&members);
        let mut local: Vec<usize> = (0..front.len()).collect();
        local.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(front[a].cmp(&front[b])));
        order.extend(local.into_iter().map(|j| front[j]));
    }
    order
}
