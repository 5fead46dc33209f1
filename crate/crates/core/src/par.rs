//! Order-preserving indexed maps, data-parallel when the `parallel` feature
//! is on, plus per-item seed derivation.
//!
//! Every batch routine in the crate funnels through [`map_indexed`] and draws
//! item randomness from [`item_rng`], so outputs do not depend on the number
//! of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser of `master ^ golden * (index + 1)`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for item `index` of a batch seeded by `master`.
pub fn item_rng(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

pub mod seq {
    /// `(0..n).map(f)` collected in order.
    pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T,
    {
        (0..n).map(f).collect()
    }

    /// Fallible variant; the first error by index wins.
    pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
    where
        F: Fn(usize) -> Result<T, E>,
    {
        (0..n).map(f).collect()
    }

    pub fn map_slice<A, T, F>(items: &[A], f: F) -> Vec<T>
    where
        F: Fn(&A) -> T,
    {
        items.iter().map(f).collect()
    }
}

#[cfg(feature = "parallel")]
#[allow(clippy::module_inception)]
pub mod par {
    use rayon::prelude::*;

    pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }

    pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        // collect everything, then report the lowest failing index
        let all: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
        all.into_iter().collect()
    }

    pub fn map_slice<A, T, F>(items: &[A], f: F) -> Vec<T>
    where
        A: Sync,
        T: Send,
        F: Fn(&A) -> T + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}

#[cfg(feature = "parallel")]
pub use par::{map_indexed, map_slice, try_map_indexed};
#[cfg(not(feature = "parallel"))]
pub use seq::{map_indexed, map_slice, try_map_indexed};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), a.len());
        assert_eq!(derive_seed(7, 3), a[3]);
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn routes_agree() {
        let f = |i: usize| derive_seed(1, i as u64) % 1000;
        assert_eq!(map_indexed(500, f), seq::map_indexed(500, f));
        let r: Result<Vec<usize>, usize> = try_map_indexed(100, |i| if i % 30 == 29 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(29));
    }
}
