//! Counter-addressed Gaussian noise.
//!
//! Each `(master_seed, path_index)` pair owns one ChaCha8 stream. Step `s`
//! always reads the same block of words, so the increment for a step does
//! not depend on which steps were drawn before it.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AUX_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Reproducible source of standard normal increments for one ensemble path.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    path_index: u64,
    dim: usize,
    words_per_step: u128,
    rng: ChaCha8Rng,
    next_step: u64,
}

impl NoiseStream {
    pub fn new(master_seed: u64, path_index: u64, dim: usize) -> Self {
        Self::keyed(master_seed, master_seed, path_index, dim)
    }

    fn keyed(master_seed: u64, key: u64, path_index: u64, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(path_index);
        // Box-Muller consumes two u64 (four 32-bit words) per pair of normals.
        let pairs = dim.div_ceil(2) as u128;
        Self {
            master_seed,
            path_index,
            dim,
            words_per_step: 4 * pairs,
            rng,
            next_step: 0,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// An independent stream derived from this one, e.g. for transverse
    /// radial normals or for drawing initial phases.
    pub fn auxiliary(&self, tag: u64, dim: usize) -> NoiseStream {
        let key = splitmix(self.master_seed ^ splitmix(tag.wrapping_add(AUX_SALT)));
        Self::keyed(self.master_seed, key, self.path_index, dim)
    }

    /// Fills `out` (length `dim`) with the standard normals of step `step`.
    pub fn standard_normals(&mut self, step: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        if step != self.next_step {
            self.rng.set_word_pos(step as u128 * self.words_per_step);
        }
        let mut chunks = out.chunks_mut(2);
        for chunk in &mut chunks {
            let (z0, z1) = box_muller(self.rng.next_u64(), self.rng.next_u64());
            chunk[0] = z0;
            if chunk.len() > 1 {
                chunk[1] = z1;
            }
        }
        self.next_step = step + 1;
    }

    /// Brownian increments `N(0, dt)` for step `step`.
    pub fn increments(&mut self, step: u64, dt: f64, out: &mut [f64]) {
        self.standard_normals(step, out);
        let s = dt.sqrt();
        out.iter_mut().for_each(|z| *z *= s);
    }

    /// Uniform draws on `[0, 1)` from a dedicated position of the stream.
    pub fn uniforms(&mut self, step: u64, out: &mut [f64]) {
        self.rng.set_word_pos(step as u128 * self.words_per_step);
        for u in out.iter_mut() {
            *u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        }
        self.next_step = u64::MAX;
    }
}

#[inline]
fn box_muller(a: u64, b: u64) -> (f64, f64) {
    // u1 in (0, 1] keeps the logarithm finite.
    let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(stream: &mut NoiseStream, steps: u64) -> Vec<f64> {
        let mut out = vec![0.0; stream.dim()];
        let mut all = Vec::new();
        for s in 0..steps {
            stream.standard_normals(s, &mut out);
            all.extend_from_slice(&out);
        }
        all
    }

    #[test]
    fn same_key_same_sequence() {
        let a = draw(&mut NoiseStream::new(42, 3, 3), 50);
        let b = draw(&mut NoiseStream::new(42, 3, 3), 50);
        assert_eq!(a, b);
    }

    #[test]
    fn different_paths_differ() {
        let a = draw(&mut NoiseStream::new(42, 0, 2), 10);
        let b = draw(&mut NoiseStream::new(42, 1, 2), 10);
        let c = draw(&mut NoiseStream::new(43, 0, 2), 10);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_access_matches_sequential() {
        let mut seq = NoiseStream::new(7, 11, 3);
        let all = draw(&mut seq, 20);
        let mut ra = NoiseStream::new(7, 11, 3);
        let mut out = vec![0.0; 3];
        for s in [13u64, 2, 19, 0, 14] {
            ra.standard_normals(s, &mut out);
            assert_eq!(&out[..], &all[s as usize * 3..s as usize * 3 + 3]);
        }
    }

    #[test]
    fn moments_are_standard_normal() {
        let xs = draw(&mut NoiseStream::new(1, 0, 2), 100_000);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let kurt = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n / (var * var);
        assert!(mean.abs() < 4.0 / n.sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n).sqrt());
        assert!((kurt - 3.0).abs() < 0.05);
    }

    #[test]
    fn distinct_paths_are_uncorrelated() {
        let a = draw(&mut NoiseStream::new(5, 0, 1), 100_000);
        let b = draw(&mut NoiseStream::new(5, 1, 1), 100_000);
        let n = a.len() as f64;
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n;
        assert!(corr.abs() < 4.0 / n.sqrt(), "corr = {corr}");
    }

    #[test]
    fn auxiliary_stream_is_independent_of_parent() {
        let parent = NoiseStream::new(9, 2, 2);
        let mut aux = parent.auxiliary(1, 2);
        let mut p = parent.clone();
        assert_ne!(draw(&mut aux, 5), draw(&mut p, 5));
        assert_eq!(
            draw(&mut parent.auxiliary(1, 2), 5),
            draw(&mut parent.auxiliary(1, 2), 5)
        );
    }
}
