//! `analyze` and `batch`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ucdi_core::damage::{AnalysisConfig, AnalysisStatus, DamageReport};
use ucdi_core::io::decode_rgb;
use ucdi_core::raster::RasterImage;

use crate::config::RunConfig;
use crate::curate::parse_template_map;
use crate::files::images_under;
use crate::overlay::write_overlays;
use crate::report::{digest, InputRef, Inputs, ReportDocument};
use crate::{with_workers, CmdResult, ExitCode, Failure, EXIT_ANALYSIS};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Clean reference template.
    pub reference: PathBuf,
    /// Photo of the note to score.
    pub input: PathBuf,
    /// Report JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for mask, heatmap and motif overlays.
    #[arg(long)]
    pub overlays: Option<PathBuf>,
    /// Overrides `align.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Directory of photos (one subdirectory per denomination) or a file listing photo paths.
    pub input: PathBuf,
    /// Lines of `denomination = reference path`.
    #[arg(long)]
    pub templates: PathBuf,
    /// NDJSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Overrides `align.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn analysis_config(config: &RunConfig, seed: Option<u64>) -> AnalysisConfig {
    let mut cfg = config.analysis.clone();
    if let Some(s) = seed {
        cfg.align.seed = s;
    }
    cfg
}

fn read_image(path: &Path) -> anyhow::Result<(Vec<u8>, RasterImage)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let img = decode_rgb(&bytes).with_context(|| format!("decoding {}", path.display()))?;
    Ok((bytes, img))
}

fn stage_failure(e: ucdi_core::Error) -> Failure {
    let stage = e.stage().unwrap_or("analysis");
    Failure {
        code: EXIT_ANALYSIS,
        error: anyhow!(e).context(format!("stage {stage} failed")),
    }
}

pub fn analyze(args: &AnalyzeArgs, config: &RunConfig) -> CmdResult {
    let mut run_config = config.clone();
    run_config.analysis = analysis_config(config, args.seed);
    let (ref_bytes, reference) = read_image(&args.reference).usage()?;
    let (dmg_bytes, damaged) = read_image(&args.input).usage()?;
    let inputs = Inputs {
        reference: InputRef::new(&args.reference, &ref_bytes),
        damaged: InputRef::new(&args.input, &dmg_bytes),
    };

    let analysis = ucdi_core::damage::analyze(&reference, &damaged, &run_config.analysis)
        .map_err(stage_failure)?;
    let doc = ReportDocument::new(inputs, analysis.report.clone(), &run_config);
    if let Some(out) = &args.out {
        doc.write(out).usage()?;
    }
    if let Some(dir) = &args.overlays {
        write_overlays(&analysis, &reference, dir).usage()?;
    }
    match (doc.report.status, doc.report.ucdi) {
        (AnalysisStatus::Ok, Some(score)) => {
            println!("UCDI {score:.4}");
            Ok(())
        }
        _ => Err(anyhow!(
            "unalignable: {}",
            doc.report.message.as_deref().unwrap_or("registration failed")
        ))
        .analysis(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemStatus {
    Ok,
    Unalignable,
    Error,
}

/// One NDJSON line of `batch` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchLine {
    pub input: String,
    pub sha256: Option<String>,
    pub denomination: String,
    pub reference: Option<String>,
    pub status: ItemStatus,
    pub error: Option<String>,
    /// Same content as the `report` of a single `analyze` run.
    pub report: Option<DamageReport>,
}

struct Item {
    path: PathBuf,
    denomination: String,
}

fn denomination_of(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn collect_items(input: &Path) -> anyhow::Result<Vec<Item>> {
    let paths = if input.is_dir() {
        images_under(input)
    } else {
        let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        let base = input.parent().unwrap_or(Path::new(""));
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };
    let mut items: Vec<Item> = paths
        .into_iter()
        .map(|path| Item { denomination: denomination_of(&path), path })
        .collect();
    items.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(items)
}

type Template = Result<(String, RasterImage), String>;

fn run_item(item: &Item, templates: &BTreeMap<String, Template>, cfg: &AnalysisConfig) -> BatchLine {
    let mut line = BatchLine {
        input: item.path.display().to_string(),
        sha256: None,
        denomination: item.denomination.clone(),
        reference: None,
        status: ItemStatus::Error,
        error: None,
        report: None,
    };
    let bytes = match std::fs::read(&item.path) {
        Ok(b) => b,
        Err(e) => {
            line.error = Some(format!("reading input: {e}"));
            return line;
        }
    };
    line.sha256 = Some(digest(&bytes));
    let (ref_path, reference) = match templates.get(&item.denomination) {
        None => {
            line.error = Some(format!("no template for denomination {:?}", item.denomination));
            return line;
        }
        Some(Err(e)) => {
            line.error = Some(e.clone());
            return line;
        }
        Some(Ok((p, img))) => (p, img),
    };
    line.reference = Some(ref_path.clone());
    let damaged = match decode_rgb(&bytes) {
        Ok(img) => img,
        Err(e) => {
            line.error = Some(format!("decoding input: {e}"));
            return line;
        }
    };
    match ucdi_core::damage::analyze(reference, &damaged, cfg) {
        Ok(a) => {
            let mut report = a.report;
            report.timings.clear();
            line.status = match report.status {
                AnalysisStatus::Ok => ItemStatus::Ok,
                AnalysisStatus::Unalignable => ItemStatus::Unalignable,
            };
            line.error = report.message.clone();
            line.report = Some(report);
        }
        Err(e) => line.error = Some(e.to_string()),
    }
    line
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BatchSummary {
    pub items: usize,
    pub ok: usize,
    pub unalignable: usize,
    pub errors: usize,
    pub ucdi_mean: Option<f64>,
    pub ucdi_min: Option<f64>,
    pub ucdi_max: Option<f64>,
}

pub fn summarize(lines: &[BatchLine]) -> BatchSummary {
    let scores: Vec<f64> = lines.iter().filter_map(|l| l.report.as_ref()?.ucdi).collect();
    let count = |s| lines.iter().filter(|l| l.status == s).count();
    BatchSummary {
        items: lines.len(),
        ok: count(ItemStatus::Ok),
        unalignable: count(ItemStatus::Unalignable),
        errors: count(ItemStatus::Error),
        ucdi_mean: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
        ucdi_min: scores.iter().copied().reduce(f64::min),
        ucdi_max: scores.iter().copied().reduce(f64::max),
    }
}

pub fn batch(args: &BatchArgs, config: &RunConfig) -> CmdResult {
    let cfg = analysis_config(config, args.seed);
    let map = parse_template_map(&args.templates).usage()?;
    let items = collect_items(&args.input).usage()?;
    if items.is_empty() {
        return Err(anyhow!("no images found in {}", args.input.display())).usage();
    }
    let templates: BTreeMap<String, Template> = map
        .into_iter()
        .map(|(name, path)| {
            let t = read_image(&path)
                .map(|(_, img)| (path.display().to_string(), img))
                .map_err(|e| format!("{e:#}"));
            (name, t)
        })
        .collect();

    let lines: Vec<BatchLine> =
        with_workers(args.workers, || items.par_iter().map(|it| run_item(it, &templates, &cfg)).collect())
            .usage()?;

    let mut text = String::new();
    for l in &lines {
        text += &serde_json::to_string(l).usage()?;
        text.push('\n');
    }
    match &args.out {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display())).usage()?,
        None => std::io::stdout().write_all(text.as_bytes()).usage()?,
    }

    let s = summarize(&lines);
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    let summary = format!(
        "items {} ok {} unalignable {} error {}\nucdi mean {} min {} max {}",
        s.items,
        s.ok,
        s.unalignable,
        s.errors,
        fmt(s.ucdi_mean),
        fmt(s.ucdi_min),
        fmt(s.ucdi_max)
    );
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(status: ItemStatus, ucdi: Option<f64>) -> BatchLine {
        let report = ucdi.map(|u| DamageReport {
            status: AnalysisStatus::Ok,
            message: None,
            reference_area: 1,
            registration: None,
            metrics: None,
            overlaps: None,
            clusters: vec![],
            matches: vec![],
            ucdi: Some(u),
            breakdown: None,
            timings: vec![],
        });
        BatchLine {
            input: "x".into(),
            sha256: None,
            denomination: "d".into(),
            reference: None,
            status,
            error: None,
            report,
        }
    }

    #[test]
    fn summary_counts_and_stats() {
        let lines = [line(ItemStatus::Ok, Some(0.5)), line(ItemStatus::Ok, Some(0.9)), line(ItemStatus::Error, None)];
        let s = summarize(&lines);
        assert_eq!((s.items, s.ok, s.errors, s.unalignable), (3, 2, 1, 0));
        assert!((s.ucdi_mean.unwrap() - 0.7).abs() < 1e-12);
        assert_eq!((s.ucdi_min, s.ucdi_max), (Some(0.5), Some(0.9)));
    }

    #[test]
    fn denomination_is_parent_name() {
        assert_eq!(denomination_of(Path::new("/b/ten/x.png")), "ten");
    }
}
