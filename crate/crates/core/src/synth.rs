//! Synthetic fixtures with known ground-truth motion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{gaussian_smooth, GrayFrame};

/// Blur applied to white noise to obtain a smooth texture.
pub const TEXTURE_SIGMA: f64 = 1.5;

/// Smooth random texture spanning the full `[0, 255]` range.
pub fn smooth_texture(width: usize, height: usize, seed: u64) -> GrayFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = GrayFrame::from_fn(width, height, |_, _| rng.gen_range(0.0..255.0));
    gaussian_smooth(&noise, TEXTURE_SIGMA).rescaled(0.0, 255.0)
}

/// A frame pair related by a known global translation.
#[derive(Clone, Debug)]
pub struct TranslationFixture {
    pub prev: GrayFrame,
    pub next: GrayFrame,
    /// Ground-truth displacement `(u, v)` of every pixel of `prev`.
    pub truth: (f64, f64),
}

/// Cuts two overlapping windows out of a larger texture so that `next` is
/// `prev` moved by `truth`, with real image content up to the borders.
pub fn translation_pair(width: usize, height: usize, truth: (f64, f64), seed: u64) -> TranslationFixture {
    let margin = (truth.0.abs().max(truth.1.abs()).ceil() as usize) + 4;
    let canvas = smooth_texture(width + 2 * margin, height + 2 * margin, seed);
    let m = margin as f64;
    let prev = GrayFrame::from_fn(width, height, |x, y| canvas.get(x + margin, y + margin));
    let next = GrayFrame::from_fn(width, height, |x, y| {
        canvas.sample_bilinear(x as f64 + m - truth.0, y as f64 + m - truth.1)
    });
    TranslationFixture { prev, next, truth }
}

/// Integer translations with `0 < |t| ≤ 4`, in a fixed order.
pub fn translation_offsets() -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for ty in -4i32..=4 {
        for tx in -4i32..=4 {
            if (tx, ty) != (0, 0) && tx * tx + ty * ty <= 16 {
                out.push((tx, ty));
            }
        }
    }
    out
}

/// `count` translated 160×120 scenes; each scene uses its own texture and an
/// offset drawn from [`translation_offsets`].
pub fn translation_suite(count: usize, seed: u64) -> Vec<TranslationFixture> {
    let offsets = translation_offsets();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let (tx, ty) = offsets[rng.gen_range(0..offsets.len())];
            translation_pair(160, 120, (f64::from(tx), f64::from(ty)), seed.wrapping_add(1 + i as u64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_pair_is_exact_for_integer_offsets() {
        let fx = translation_pair(30, 20, (2.0, -3.0), 7);
        for y in 4..16 {
            for x in 4..26 {
                let moved = fx.next.get(x + 2, (y as isize - 3) as usize);
                assert_eq!(moved, fx.prev.get(x, y));
            }
        }
    }

    #[test]
    fn offsets_are_bounded() {
        let offs = translation_offsets();
        assert!(offs.iter().all(|&(x, y)| x * x + y * y <= 16 && (x, y) != (0, 0)));
        assert!(offs.contains(&(4, 0)) && offs.contains(&(0, -4)));
    }

    #[test]
    fn texture_is_deterministic() {
        assert_eq!(smooth_texture(16, 16, 3), smooth_texture(16, 16, 3));
        assert_ne!(smooth_texture(16, 16, 3), smooth_texture(16, 16, 4));
    }
}
