use serde::{Deserialize, Serialize};

use crate::protocol::l1_distance;
use crate::scalar::Scalar;

/// Closed interval of rounds `[start, end]`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin<T> {
    pub start: usize,
    pub end: usize,
    /// Path length of the partitioned sequence inside the bin.
    pub tv: T,
}

impl<T> Bin<T> {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 0-based half-open row range.
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start - 1..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<T> {
    pub bins: Vec<Bin<T>>,
    pub horizon: usize,
}

impl<T: Scalar> Partition<T> {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Bins are ordered, disjoint and cover `1..=horizon`.
    pub fn tiles(&self) -> bool {
        let mut next = 1;
        for b in &self.bins {
            if b.start != next || b.end < b.start {
                return false;
            }
            next = b.end + 1;
        }
        next == self.horizon + 1
    }

    /// Largest `C_i − B/√n_i` over bins (≤ 0 when every bin meets its budget).
    pub fn max_budget_excess(&self, bound: T) -> T {
        self.bins
            .iter()
            .map(|b| b.tv - bound / T::from_count(b.len()).sqrt())
            .fold(T::neg_infinity(), |a, b| a.max(b))
    }
}

/// Key partition of an oracle sequence.
///
/// Greedy pass: the open bin `[i_s, i_t]` is closed as soon as the path
/// length through the next round exceeds `B/√(i_t − i_s + 2)`. A second pass
/// moves every boundary that falls inside a flat stretch to the flat's edge:
/// the flat `[p, q]` around the boundary becomes its own bin when the next
/// bin extends past it, and is otherwise merged into the next bin. In
/// several dimensions the rule runs on the ℓ₁ increments.
pub fn build_partition<T: Scalar>(u: &[Vec<T>], bound: T) -> Partition<T> {
    let n = u.len();
    if n == 0 {
        return Partition {
            bins: Vec::new(),
            horizon: 0,
        };
    }
    // step[j] = ‖u_j − u_{j−1}‖₁ (0-based j ≥ 1)
    let mut step = vec![T::zero(); n];
    for j in 1..n {
        step[j] = l1_distance(&u[j], &u[j - 1]);
    }

    let mut greedy = Vec::new();
    let mut start = 0;
    let mut acc = T::zero();
    for end in 0..n - 1 {
        let with_next = acc + step[end + 1];
        if with_next > bound / T::from_count(end - start + 2).sqrt() {
            greedy.push((start, end));
            start = end + 1;
            acc = T::zero();
        } else {
            acc = with_next;
        }
    }
    greedy.push((start, n - 1));

    let flat = |j: usize| u[j] == u[j + 1];
    let mut rows: Vec<(usize, usize)> = Vec::with_capacity(greedy.len() * 2);
    let mut cur = 0;
    for (i, &(_, end)) in greedy.iter().enumerate() {
        if i + 1 == greedy.len() {
            rows.push((cur, end));
            break;
        }
        if !flat(end) {
            rows.push((cur, end));
            cur = end + 1;
            continue;
        }
        let mut p = end;
        while p > cur && flat(p - 1) {
            p -= 1;
        }
        let mut q = end + 1;
        while q + 1 < n && flat(q) {
            q += 1;
        }
        if p > cur {
            rows.push((cur, p - 1));
        }
        let next_end = greedy[i + 1].1;
        if next_end > q {
            rows.push((p, q));
            cur = q + 1;
        } else {
            cur = p;
        }
    }

    let bins = rows
        .into_iter()
        .map(|(s, e)| Bin {
            start: s + 1,
            end: e + 1,
            tv: step[s + 1..=e].iter().copied().sum(),
        })
        .collect();
    Partition { bins, horizon: n }
}
