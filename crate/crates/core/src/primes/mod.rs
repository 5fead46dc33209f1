//! Prime counting, primality, and the Riemann explicit formula.

pub mod counter;
pub mod counting;
pub mod floor_table;
pub mod primality;
pub mod riemann;
pub mod sieve;
pub mod zeros;

pub use counter::{CountingMode, PrimeCounter};
pub use counting::MeisselLehmer;
pub use floor_table::PiFloorTable;
pub use primality::{is_prime, is_prime_u64, random_prime};
pub use riemann::{pi_approx, riemann_r, varsigma};
pub use sieve::PrimeSieve;
pub use zeros::{load_zeros, ZetaZeroTable};
