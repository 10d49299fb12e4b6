//! Seeded random data families.

use std::f64::consts::TAU;

use hypharm::estimates::{Datum, Family};
use hypharm::geometry::DiscPoint;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `size` Gaussians with centres within geodesic radius 1.2 and widths in
/// `[0.3, 0.6]`, drawn from a ChaCha8 stream seeded with `seed`.
pub fn random_family(size: usize, seed: u64) -> Family {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = (0..size)
        .map(|j| {
            let r = rng.gen_range(0.0..1.2);
            let angle = rng.gen_range(0.0..TAU);
            let sigma: f64 = rng.gen_range(0.3..0.6);
            let centre = DiscPoint::from_polar(r, angle);
            Datum::new(format!("random/{j}"), move |x: &DiscPoint| {
                let d = x.distance(&centre);
                Complex64::new((-d * d / (2.0 * sigma * sigma)).exp(), 0.0)
            })
        })
        .collect();
    Family {
        name: "random".into(),
        members,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_family() {
        let x = DiscPoint::from_polar(0.4, 1.0);
        let eval = |seed| -> Vec<Complex64> {
            random_family(5, seed)
                .members
                .iter()
                .map(|d| d.eval(&x))
                .collect()
        };
        assert_eq!(eval(7), eval(7));
        assert_ne!(eval(7), eval(8));
    }
}
