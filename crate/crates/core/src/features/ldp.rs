//! Local directional pattern codes: one 8-bit code per pixel from the signs
//! of neighbor-minus-center differences.

use crate::error::Result;
use crate::features::{scale_unit, Extractor, FeatureVector};
use crate::imaging::{GrayImage, Patch};

/// Neighbor offsets `(drow, dcol)` for bits 0..8, clockwise from the top-left.
pub const NEIGHBOR_ORDER: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
];

/// Code image the same size as the input. Bit `n` is set when neighbor `n`
/// is at least as bright as the center. Borders replicate the edge pixels.
pub fn ldp_map(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let clamp = |v: isize, hi: isize| v.clamp(0, hi - 1) as usize;
    let mut codes = Vec::with_capacity(img.len());
    for r in 0..h {
        for c in 0..w {
            let center = img.get(r as usize, c as usize);
            let code = NEIGHBOR_ORDER
                .iter()
                .enumerate()
                .fold(0u8, |acc, (bit, &(dr, dc))| {
                    let n = img.get(clamp(r + dr, h), clamp(c + dc, w));
                    if n >= center {
                        acc | (1 << bit)
                    } else {
                        acc
                    }
                });
            codes.push(code);
        }
    }
    GrayImage::new(img.width(), img.height(), codes).expect("same dimensions as input")
}

/// Row-major LDP codes scaled to [0, 1].
pub fn ldp_vector(patch: &Patch) -> Result<FeatureVector> {
    let codes = ldp_map(patch.image());
    FeatureVector::new(Extractor::Ldp, scale_unit(codes.pixels()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Label;

    #[test]
    fn constant_image_all_bits() {
        let img = GrayImage::filled(5, 4, 77).unwrap();
        assert!(ldp_map(&img).pixels().iter().all(|&c| c == 255));
    }

    #[test]
    fn local_maximum_is_zero() {
        let mut px = vec![10u8; 9];
        px[4] = 200;
        let img = GrayImage::new(3, 3, px).unwrap();
        assert_eq!(ldp_map(&img).get(1, 1), 0);
    }

    #[test]
    fn single_brighter_neighbor() {
        // neighbors [9,1,1,1,1,1,1,1] in bit order around a center of 5
        let img = GrayImage::new(3, 3, vec![9, 1, 1, 1, 5, 1, 1, 1, 1]).unwrap();
        assert_eq!(ldp_map(&img).get(1, 1), 1);
    }

    #[test]
    fn bit_order_is_clockwise() {
        for (bit, &(dr, dc)) in NEIGHBOR_ORDER.iter().enumerate() {
            let mut px = vec![0u8; 9];
            px[4] = 5;
            px[((1 + dr) * 3 + 1 + dc) as usize] = 9;
            let img = GrayImage::new(3, 3, px).unwrap();
            assert_eq!(ldp_map(&img).get(1, 1), 1 << bit);
        }
    }

    #[test]
    fn corner_uses_replicated_border() {
        // bits 0, 1 and 7 clamp onto the pixel itself; bits 2 and 6 clamp onto darker pixels
        let img = GrayImage::new(2, 2, vec![5, 0, 0, 0]).unwrap();
        assert_eq!(ldp_map(&img).get(0, 0), 0b1000_0011);
    }

    #[test]
    fn vector_lengths() {
        for size in [16usize, 48] {
            let p = Patch::from_pixels(size, vec![3; size * size], Label::Coronavirus).unwrap();
            let v = ldp_vector(&p).unwrap();
            assert_eq!(v.len(), size * size);
            assert!(v.values.iter().all(|&x| x == 1.0));
        }
    }
}
