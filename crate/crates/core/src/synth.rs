// SPDX-License-Identifier: Apache-2.0

//! Seeded synthetic volumes for demos, benchmarks and tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::volume::{Geometry, Volume};

/// A ball of constant intensity on a constant background, with additive
/// Gaussian noise.
#[derive(Debug, Clone, Copy)]
pub struct NoisySphere {
    pub size: usize,
    /// Radius in voxels.
    pub radius: f64,
    pub foreground: f32,
    pub background: f32,
    pub noise_sigma: f32,
    pub seed: u64,
}

impl NoisySphere {
    pub fn new(size: usize) -> Self {
        Self { size, radius: size as f64 * 0.3, foreground: 1.0, background: 0.0, noise_sigma: 0.1, seed: 7 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn geometry(&self) -> Geometry {
        Geometry::new([self.size; 3], [1.0; 3], [0.0; 3]).expect("size must be positive")
    }

    fn inside(&self, [x, y, z]: [usize; 3]) -> bool {
        let c = (self.size as f64 - 1.0) / 2.0;
        let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
        d2 <= self.radius * self.radius
    }

    /// The analytic ground truth: voxel centres within `radius` of the
    /// lattice centre.
    pub fn mask(&self) -> Volume<u8> {
        Volume::from_fn(self.geometry(), |p| u8::from(self.inside(p)))
    }

    pub fn volume(&self) -> Volume<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0f32, self.noise_sigma.max(0.0)).expect("finite sigma");
        Volume::from_fn(self.geometry(), |p| {
            let base = if self.inside(p) { self.foreground } else { self.background };
            base + noise.sample(&mut rng)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let s = NoisySphere::new(8);
        assert_eq!(s.volume(), s.volume());
        assert_ne!(s.volume(), s.with_seed(8).volume());
    }

    #[test]
    fn mask_is_centred_ball() {
        let m = NoisySphere::new(16).mask();
        let n = m.voxels().iter().filter(|&&v| v == 1).count() as f64;
        let expected = 4.0 / 3.0 * std::f64::consts::PI * (16.0f64 * 0.3).powi(3);
        assert!((n - expected).abs() / expected < 0.1, "{n} vs {expected}");
        assert_eq!(*m.get([0, 0, 0]), 0);
        assert_eq!(*m.get([8, 8, 8]), 1);
    }
}
