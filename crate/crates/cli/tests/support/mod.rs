//! Corpus builders and process helpers shared by the CLI suites.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ucdi_core::align::warp_to_reference;
use ucdi_core::io::save;
use ucdi_core::raster::RasterImage;
use ucdi_core::synth::{cut_note, generate_note, random_homography_in_frame, CutKind, NoteSpec, WarpRange};

pub fn ucdi(args: &[&str]) -> Output {
    ucdi_env(args, &[])
}

pub fn ucdi_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ucdi"));
    cmd.args(args).env_remove("UCDI_CONFIG");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Parses the `UCDI x.xxxx` line from `analyze`.
pub fn printed_score(o: &Output) -> f64 {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix("UCDI "))
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| panic!("no score in {:?}", stdout(o)))
}

/// Two denominations of `w × h` references plus `n` damaged photos spread
/// over them; every third photo is also warped. Writes `templates.map`
/// next to `refs/` and `photos/<denomination>/`.
pub fn batch_corpus(root: &Path, n: usize, w: usize, h: usize, seed: u64) -> (PathBuf, PathBuf) {
    let names = ["ten", "fifty"];
    let refs = root.join("refs");
    std::fs::create_dir_all(&refs).unwrap();
    let notes: Vec<_> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let note = generate_note(&NoteSpec::new(w, h, seed * 10 + i as u64));
            save(&note.image, refs.join(format!("{name}.png"))).unwrap();
            note
        })
        .collect();
    let map = root.join("templates.map");
    let lines: Vec<String> = names.iter().map(|n| format!("{n} = refs/{n}.png")).collect();
    std::fs::write(&map, lines.join("\n") + "\n").unwrap();

    let photos = root.join("photos");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [CutKind::Corner, CutKind::Edge, CutKind::Hole];
    for i in 0..n {
        let d = i % names.len();
        let note = &notes[d];
        let cut = cut_note(note, rng.gen_range(1.0..30.0), kinds[i % 3], &mut rng);
        let img: RasterImage = if i % 3 == 0 {
            let hom = random_homography_in_frame(note, &WarpRange::default(), &mut rng);
            warp_to_reference(&cut.image, &hom, w, h)
        } else {
            cut.image
        };
        let dir = photos.join(names[d]);
        std::fs::create_dir_all(&dir).unwrap();
        save(&img, dir.join(format!("note{i:03}.png"))).unwrap();
    }
    (photos, map)
}
