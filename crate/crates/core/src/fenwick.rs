//! Append-only Fenwick (binary indexed) tree over f64 weights.
//!
//! Supports O(log n) point update, total, and inverse-prefix search, which
//! is all the degree-weighted sampler needs. Slots are 0-based externally;
//! the classic 1-based layout lives inside.

#[derive(Clone, Debug, Default)]
pub struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    pub fn new() -> Self {
        Fenwick { tree: vec![0.0] }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Append a new slot holding weight `w`.
    pub fn push(&mut self, w: f64) {
        let i = self.tree.len();
        // tree[i] covers the range (i - lowbit(i), i]; seed it with the sums
        // of the child nodes already present.
        let mut v = w;
        let lb = i & i.wrapping_neg();
        let mut j = i - 1;
        while j > i - lb {
            v += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        self.tree.push(v);
    }

    /// Add `delta` to slot `i` (0-based).
    pub fn add(&mut self, i: usize, delta: f64) {
        let n = self.len();
        let mut j = i + 1;
        while j <= n {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Sum of weights in slots `0..i` (0-based, exclusive).
    pub fn prefix(&self, i: usize) -> f64 {
        let mut s = 0.0;
        let mut j = i;
        while j > 0 {
            s += self.tree[j];
            j -= j & j.wrapping_neg();
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    /// First slot whose cumulative weight exceeds `x`, i.e. the inverse of
    /// `prefix` for sampling: a uniform x in [0, total) selects slot s with
    /// probability w_s / total. Clamped to the last slot to absorb rounding
    /// at the upper boundary.
    pub fn find(&self, x: f64) -> usize {
        let n = self.len();
        debug_assert!(n > 0, "find on empty tree");
        let mut i = 0usize;
        let mut mask = n.next_power_of_two();
        if mask > n {
            mask >>= 1;
        }
        let mut rem = x;
        while mask > 0 {
            let j = i + mask;
            if j <= n && self.tree[j] <= rem {
                rem -= self.tree[j];
                i = j;
            }
            mask >>= 1;
        }
        i.min(n - 1)
    }
}
