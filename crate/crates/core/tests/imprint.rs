mod common;

use common::{imprint_oracle, random_image};
use photac_core::imprint::augmented_imprint;
use photac_core::{ImprintParams, RgbImage};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn imprint_matches_integer_oracle(seed: u64, w in 1usize..24, h in 1usize..24, alpha in prop::sample::select(vec![1, 5, 10])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_image(&mut rng, w, h);
        let b = random_image(&mut rng, w, h);
        let out = augmented_imprint(&a, &b, &ImprintParams::new(f64::from(alpha)).unwrap()).unwrap();
        let expected = imprint_oracle(&a, &b, alpha);
        prop_assert_eq!(out.pixels(), expected.as_slice());
    }
}

#[test]
fn tagged_examples() {
    let p5 = ImprintParams::new(5.0).unwrap();
    let base = RgbImage::filled(1, 1, [100, 100, 100]).unwrap();
    assert_eq!(augmented_imprint(&base, &base, &p5).unwrap().pixels(), &[[128; 3]]);
    let up = RgbImage::filled(1, 1, [130, 100, 100]).unwrap();
    assert_eq!(augmented_imprint(&base, &up, &p5).unwrap().pixels()[0][0], 255);
    let down = RgbImage::filled(1, 1, [60, 100, 100]).unwrap();
    assert_eq!(augmented_imprint(&base, &down, &p5).unwrap().pixels()[0][0], 0);
}
