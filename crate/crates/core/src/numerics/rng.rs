use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A reproducible random stream: ChaCha8 keyed by `seed`, with `stream`
/// selecting one of 2⁶⁴ independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }

    /// Child stream `i`, distinct from the parent and from siblings.
    pub fn substream(&self, i: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix(self.stream ^ splitmix(i.wrapping_add(1))),
        }
    }
}

/// Draws a positive `a`-stable variable with `E exp(-tS) = exp(-t^a)`
/// (Kanter's representation).
pub fn sample_positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    assert!(a > 0.0 && a < 1.0, "stable index must lie in (0, 1)");
    let u = loop {
        let u: f64 = rng.random::<f64>() * std::f64::consts::PI;
        if u > 0.0 {
            break u;
        }
    };
    let e = -(1.0 - rng.random::<f64>()).ln();
    let part1 = (a * u).sin() / u.sin().powf(1.0 / a);
    let part2 = (((1.0 - a) * u).sin() / e).powf((1.0 - a) / a);
    part1 * part2
}

/// Convenience form taking an explicit stream.
pub fn sample_positive_stable_at(a: f64, state: RngState) -> f64 {
    sample_positive_stable(a, &mut state.rng())
}

/// Point `i` of the Halton sequence in base `b` (radical inverse).
pub fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}
