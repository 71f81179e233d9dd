//! Bundled example notes shipped in `fixtures/`, regenerated from fixed seeds.

use std::path::Path;

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use ucdi_core::io::save;
use ucdi_core::raster::RasterImage;
use ucdi_core::synth::{cut_note, generate_note, CutKind, NoteSpec};

pub const CLEAN: &str = "clean.png";
pub const TEAR: &str = "tear.png";
pub const TEAR_TRUTH: &str = "tear.json";

/// Generator parameters and the exact removed share of the tear fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TearTruth {
    pub note: NoteSpec,
    pub kind: CutKind,
    pub target_pct: f64,
    pub cut_seed: u64,
    /// Ground-truth B, percent.
    pub removed_pct: f64,
}

pub struct Fixtures {
    pub clean: RasterImage,
    pub tear: RasterImage,
    pub truth: TearTruth,
}

pub fn generate() -> Fixtures {
    let spec = NoteSpec::new(640, 400, 21);
    let note = generate_note(&spec);
    let (kind, target_pct, cut_seed) = (CutKind::Edge, 12.0, 4);
    let cut = cut_note(&note, target_pct, kind, &mut ChaCha8Rng::seed_from_u64(cut_seed));
    Fixtures {
        clean: note.image,
        tear: cut.image,
        truth: TearTruth {
            note: spec,
            kind,
            target_pct,
            cut_seed,
            removed_pct: cut.removed_pct,
        },
    }
}

/// Writes the fixture set into `dir`.
pub fn write(dir: &Path) -> Result<()> {
    let f = generate();
    std::fs::create_dir_all(dir)?;
    save(&f.clean, dir.join(CLEAN))?;
    save(&f.tear, dir.join(TEAR))?;
    std::fs::write(dir.join(TEAR_TRUTH), serde_json::to_string_pretty(&f.truth)? + "\n")?;
    Ok(())
}

/// Directory holding the bundled fixtures.
pub fn bundled_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
