//! Seeded random piecewise-linear endomorphisms of `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pwl::PwlMap;
use crate::rational::{ratio, Rational};

/// Denominator of the random node heights.
pub const HEIGHT_DENOMINATOR: i64 = 97;

/// A map with `1..=max_pieces` equal-width pieces and heights `a / 97`.
pub fn random_map(rng: &mut impl Rng, max_pieces: usize) -> PwlMap {
    let pieces = rng.gen_range(1..=max_pieces.max(1)) as i64;
    let nodes: Vec<(Rational, Rational)> = (0..=pieces)
        .map(|j| {
            (
                ratio(j, pieces),
                ratio(rng.gen_range(0..=HEIGHT_DENOMINATOR), HEIGHT_DENOMINATOR),
            )
        })
        .collect();
    PwlMap::from_nodes(nodes).expect("equal-width nodes are strictly increasing")
}

pub fn seeded_map(seed: u64, max_pieces: usize) -> PwlMap {
    random_map(&mut ChaCha8Rng::seed_from_u64(seed), max_pieces)
}

/// A rational in `[0, 1]` with denominator at most `max_den`.
pub fn random_unit_rational(rng: &mut impl Rng, max_den: i64) -> Rational {
    let q = rng.gen_range(1..=max_den);
    ratio(rng.gen_range(0..=q), q)
}
