//! `dedup`, `split`, `preprocess` and `augment`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ucdi_core::dataprep::{
    cross_dataset_dedup, phash64, stratified_split, DedupStatus, HashedImage, Split,
    IMAGENET_MEAN, IMAGENET_STD,
};
use ucdi_core::enhance::enhance_pipeline;
use ucdi_core::io::{load_rgb, save};

use crate::config::RunConfig;
use crate::files::{class_of, images_under, is_image};
use crate::report::{SCHEMA_VERSION, TOOL_VERSION};
use crate::{with_workers, CmdResult, ExitCode};

/// Class used for images that sit directly in a source directory.
pub const UNCLASSED: &str = "unclassified";

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Source directories, highest precedence first.
    #[arg(required = true)]
    pub dirs: Vec<PathBuf>,
    /// Maximum Hamming distance treated as a duplicate.
    #[arg(long)]
    pub threshold: Option<u32>,
    #[arg(long, default_value = "manifest.json")]
    pub out: PathBuf,
    /// Hashing threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Manifest written by `dedup`.
    pub manifest: PathBuf,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub ratios: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output manifest; defaults to rewriting the input.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Image file or directory.
    pub input: PathBuf,
    /// Output file for a file input, directory for a directory input.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Overrides `augment.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        Self { mean: IMAGENET_MEAN, std: IMAGENET_STD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub source: String,
    pub class: String,
    /// 64-bit perceptual hash, hex; absent for skipped files.
    pub hash: Option<String>,
    #[serde(flatten)]
    pub status: DedupStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub retained: usize,
    pub dropped: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub ratios: [f64; 3],
    pub seed: u64,
    pub warnings: Vec<String>,
    pub counts: BTreeMap<Split, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub threshold: u32,
    pub sources: Vec<String>,
    /// Channel statistics for model input; stored images stay 8-bit.
    pub normalization: Normalization,
    pub images: Vec<ManifestEntry>,
    pub summary: BTreeMap<String, ClassSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitInfo>,
}

impl Manifest {
    pub fn read(path: &Path) -> anyhow::Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

fn hash_file(path: &Path) -> Result<ucdi_core::dataprep::PerceptualHash, String> {
    let img = load_rgb(path).map_err(|e| e.to_string())?;
    phash64(&img).map_err(|e| e.to_string())
}

pub fn dedup(args: &DedupArgs, config: &RunConfig) -> CmdResult {
    let mut cfg = config.dedup.clone();
    if let Some(t) = args.threshold {
        cfg.threshold = t;
    }
    cfg.validate().usage()?;
    let mut listed = Vec::new();
    for dir in &args.dirs {
        if !dir.is_dir() {
            return Err(anyhow!("{} is not a directory", dir.display())).usage();
        }
        let files = images_under(dir);
        listed.push((dir, files));
    }
    if listed.iter().all(|(_, f)| f.is_empty()) {
        return Err(anyhow!("no images found")).usage();
    }

    let mut source_of = BTreeMap::new();
    let sources = with_workers(args.workers, || {
        listed
            .iter()
            .map(|(dir, files)| {
                files
                    .par_iter()
                    .map(|f| HashedImage {
                        id: f.display().to_string(),
                        class: class_of(dir, f, UNCLASSED),
                        hash: hash_file(f),
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    })
    .usage()?;
    for ((dir, _), images) in listed.iter().zip(&sources) {
        for img in images {
            source_of.insert(img.id.clone(), dir.display().to_string());
        }
    }
    let (_, decisions) = cross_dataset_dedup(&sources, &cfg).usage()?;

    let mut images = Vec::new();
    let mut summary: BTreeMap<String, ClassSummary> = BTreeMap::new();
    for d in decisions.into_iter().flatten() {
        let s = summary.entry(d.class.clone()).or_default();
        match d.status {
            DedupStatus::Retained => s.retained += 1,
            DedupStatus::DuplicateOf { .. } => s.dropped += 1,
            DedupStatus::Skipped { .. } => s.skipped += 1,
        }
        images.push(ManifestEntry {
            source: source_of[&d.id].clone(),
            path: d.id,
            class: d.class,
            hash: d.hash.map(|h| format!("{:016x}", h.0)),
            status: d.status,
            split: None,
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        threshold: cfg.threshold,
        sources: args.dirs.iter().map(|d| d.display().to_string()).collect(),
        normalization: Normalization::default(),
        images,
        summary,
        split: None,
    };
    manifest.write(&args.out).usage()?;
    println!("{:<20} {:>9} {:>9} {:>9}", "class", "retained", "dropped", "skipped");
    for (class, s) in &manifest.summary {
        println!("{class:<20} {:>9} {:>9} {:>9}", s.retained, s.dropped, s.skipped);
    }
    Ok(())
}

pub fn parse_ratios(text: &str) -> anyhow::Result<[f64; 3]> {
    let parts = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("bad ratios {text:?}"))?;
    <[f64; 3]>::try_from(parts).map_err(|_| anyhow!("expected three ratios, got {text:?}"))
}

pub fn split(args: &SplitArgs) -> CmdResult {
    let ratios = parse_ratios(&args.ratios).usage()?;
    let mut manifest = Manifest::read(&args.manifest).usage()?;
    let items: Vec<(String, String)> = manifest
        .images
        .iter()
        .filter(|e| e.status == DedupStatus::Retained)
        .map(|e| (e.path.clone(), e.class.clone()))
        .collect();
    if items.is_empty() {
        return Err(anyhow!("manifest has no retained images")).usage();
    }
    let result = stratified_split(&items, ratios, args.seed).usage()?;
    for e in &mut manifest.images {
        e.split = result.assignments.get(&e.path).copied();
    }
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let counts = Split::ALL.iter().map(|&s| (s, result.count(s))).collect();
    manifest.split = Some(SplitInfo {
        ratios,
        seed: args.seed,
        warnings: result.warnings.clone(),
        counts,
    });
    manifest.write(args.out.as_deref().unwrap_or(&args.manifest)).usage()?;
    for s in Split::ALL {
        println!("{:<6} {}", s.as_str(), result.count(s));
    }
    Ok(())
}

pub fn preprocess(args: &PreprocessArgs, config: &RunConfig) -> CmdResult {
    let cfg = &config.analysis.enhance;
    let jobs: Vec<(PathBuf, PathBuf)> = if args.input.is_dir() {
        images_under(&args.input)
            .into_iter()
            .map(|f| {
                let rel = f.strip_prefix(&args.input).expect("walked from the input root");
                let out = args.out.join(rel);
                (f, out)
            })
            .collect()
    } else if is_image(&args.input) {
        vec![(args.input.clone(), args.out.clone())]
    } else {
        return Err(anyhow!("{} is neither an image nor a directory", args.input.display())).usage();
    };
    if jobs.is_empty() {
        return Err(anyhow!("no images found")).usage();
    }
    for (src, dst) in &jobs {
        let img = load_rgb(src).usage()?;
        let out = enhance_pipeline(&img, cfg).analysis()?;
        if let Some(dir) = dst.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).usage()?;
        }
        save(&out, dst).usage()?;
    }
    println!("preprocessed {} image(s)", jobs.len());
    Ok(())
}

#[derive(Debug, Serialize)]
struct AugmentMetadata<'a> {
    source: String,
    count: usize,
    files: Vec<String>,
    config: &'a ucdi_core::dataprep::AugmentConfig,
    normalization: Normalization,
}

pub fn augment(args: &AugmentArgs, config: &RunConfig) -> CmdResult {
    let mut cfg = config.augment.clone();
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().usage()?;
    let img = load_rgb(&args.image).usage()?;
    std::fs::create_dir_all(&args.out).usage()?;
    let stem = args
        .image
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut files = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let view = ucdi_core::dataprep::augment(&img, &cfg, &mut rng).analysis()?;
        let name = format!("{stem}_aug{i:04}.png");
        save(&view, args.out.join(&name)).usage()?;
        files.push(name);
    }
    let meta = AugmentMetadata {
        source: args.image.display().to_string(),
        count: args.count,
        files,
        config: &cfg,
        normalization: Normalization::default(),
    };
    let text = serde_json::to_string_pretty(&meta).usage()?;
    std::fs::write(args.out.join("augment.json"), text + "\n").usage()?;
    println!("wrote {} view(s) to {}", args.count, args.out.display());
    Ok(())
}

/// Reads `denomination = path` lines; paths are relative to the map's directory.
pub fn parse_template_map(path: &Path) -> anyhow::Result<BTreeMap<String, PathBuf>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let Some((name, file)) = line.split_once('=') else {
            bail!("{}:{}: expected denomination = path", path.display(), n + 1);
        };
        out.insert(name.trim().to_string(), base.join(file.trim()));
    }
    if out.is_empty() {
        bail!("{} lists no templates", path.display());
    }
    Ok(out)
}
