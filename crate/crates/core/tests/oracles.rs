mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn median_matches_sorting_oracle() {
    assert_eq!(check_median(&mut rng(1)), None);
}

#[test]
fn bilateral_within_one_level_of_direct_sum() {
    assert_eq!(check_bilateral(&mut rng(2)), None);
}

#[test]
fn dbscan_matches_distance_matrix_oracle() {
    assert_eq!(check_dbscan(&mut rng(3)), None);
}

#[test]
fn components_match_recursive_flood_fill() {
    assert_eq!(check_components(&mut rng(4)), None);
}

#[test]
fn matcher_matches_exhaustive_search() {
    assert_eq!(check_matcher(&mut rng(5)), None);
}
