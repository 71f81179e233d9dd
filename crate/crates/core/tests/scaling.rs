//! Kept in its own binary so no other test competes for the CPU.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ucdi_core::damage::{analyze, AnalysisConfig};
use ucdi_core::raster::RasterImage;
use ucdi_core::synth::{cut_note, generate_note, CutKind, NoteSpec};

fn best_time(reference: &RasterImage, photo: &RasterImage) -> Duration {
    (0..3)
        .map(|_| {
            let t = Instant::now();
            analyze(reference, photo, &AnalysisConfig::default()).unwrap();
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn runtime_scales_near_linearly() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let small = generate_note(&NoteSpec::new(1024, 512, 30));
    let large = generate_note(&NoteSpec::new(2048, 1024, 30));
    let small_cut = cut_note(&small, 10.0, CutKind::Corner, &mut rng);
    let large_cut = cut_note(&large, 10.0, CutKind::Corner, &mut rng);
    let a = best_time(&small.image, &small_cut.image);
    let b = best_time(&large.image, &large_cut.image);
    let ratio = b.as_secs_f64() / a.as_secs_f64();
    assert!(ratio <= 4.0, "{a:?} -> {b:?}, ratio {ratio:.2}");
}
