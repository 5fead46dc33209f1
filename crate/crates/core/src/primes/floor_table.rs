//! Prime counts at every value `floor(n / k)`.
//!
//! The set `{floor(n/k)}` has about `2 sqrt(n)` members. Sieving all of them at
//! once (Lucy's dynamic programme over Legendre's identity) costs
//! `O(n^(3/4))` and afterwards `pi(floor(n/k))` is a lookup for every `k`.

use super::counting::iroot;

#[derive(Debug, Clone)]
pub struct PiFloorTable {
    n: u64,
    root: u64,
    // small[v] = pi(v) for v <= root
    small: Vec<u64>,
    // large[k] = pi(n / k) for 1 <= k <= root
    large: Vec<u64>,
}

impl PiFloorTable {
    pub fn new(n: u64) -> Self {
        let root = iroot(n, 2);
        let r = root as usize;
        let mut small: Vec<u64> = (0..=root).map(|v| v.saturating_sub(1)).collect();
        let mut large: Vec<u64> = (0..=root).map(|k| n.checked_div(k).map_or(0, |v| v - 1)).collect();
        for p in 2..=root {
            if small[p as usize] == small[p as usize - 1] {
                continue;
            }
            let below = small[p as usize - 1];
            let p2 = p * p;
            let k_max = root.min(n / p2);
            for k in 1..=k_max {
                let d = k * p;
                let count = if d <= root { large[d as usize] } else { small[(n / d) as usize] };
                large[k as usize] -= count - below;
            }
            if p2 <= root {
                for v in (p2 as usize..=r).rev() {
                    small[v] -= small[v / p as usize] - below;
                }
            }
        }
        Self { n, root, small, large }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// `pi(floor(n / k))` for `1 <= k <= sqrt(n)`.
    pub fn pi_n_over(&self, k: u64) -> u64 {
        assert!(k >= 1 && k <= self.root, "k = {k} outside 1..={}", self.root);
        self.large[k as usize]
    }

    /// `pi(v)` for `v <= sqrt(n)`, or any `v` of the form `floor(n/k)`.
    pub fn pi(&self, v: u64) -> Option<u64> {
        if v <= self.root {
            return Some(self.small[v as usize]);
        }
        let k = self.n / v;
        (k >= 1 && k <= self.root && self.n / k == v).then(|| self.large[k as usize])
    }

    pub fn root(&self) -> u64 {
        self.root
    }
}
