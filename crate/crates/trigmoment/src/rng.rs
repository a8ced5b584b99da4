//! Counter-based random substreams.
//!
//! Every simulation draws from a ChaCha8 generator whose key is derived from
//! `(seed, cell)` and whose stream id is the replication index, so any
//! replication can be regenerated independently of scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for replication `rep` of study cell `cell` under master `seed`.
pub fn substream(seed: u64, cell: u64, rep: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&cell.to_le_bytes());
    key[16..24].copy_from_slice(&0x7472_6967_6d6f_6d65u64.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

/// Uniform variate on the open interval (0, 1) with 53 random bits.
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}
