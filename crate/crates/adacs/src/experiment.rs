//! Runs a configured experiment over a list of images and writes outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use adacs_core::pipeline::{error_proxy_study, run_arm, ErrorProxyStudy, PipelineRun};
use adacs_core::{Arm, PipelineConfig};

use crate::config::{ExperimentConfig, Mode};
use crate::error::{Error, Result};
use crate::pgm::{load_pgm, save_mask_pgm, save_pgm};
use crate::report::{
    study_csv, summary_rows, ArmJson, ConfigJson, ImageReport, StudyJson, SUMMARY_HEADER,
};

/// Everything computed for one input image.
#[derive(Debug)]
pub struct ImageOutcome {
    pub stem: String,
    pub runs: Vec<PipelineRun>,
    pub study: Option<ErrorProxyStudy>,
}

pub fn arms(mode: Mode, cfg: &PipelineConfig) -> Vec<Arm> {
    match mode {
        Mode::Run if cfg.adaptive_enabled => vec![Arm::Adaptive],
        Mode::Run | Mode::Baseline => vec![Arm::Uniform],
        Mode::Ablate => vec![Arm::Adaptive, Arm::Uniform],
        Mode::Study => vec![Arm::Uniform],
    }
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| {
            Error::Setting(format!(
                "cannot derive an output name from {}",
                path.display()
            ))
        })
}

/// Runs the pipeline for one image without touching the filesystem beyond
/// reading it.
pub fn process_image(path: &Path, mode: Mode, cfg: &PipelineConfig) -> Result<ImageOutcome> {
    let stem = stem_of(path)?;
    let img = load_pgm(path)?;
    let pipeline = if mode == Mode::Study {
        PipelineConfig { stages: 1, ..*cfg }
    } else {
        *cfg
    };
    let runs = arms(mode, &pipeline)
        .into_iter()
        .map(|arm| run_arm(&img, &pipeline, arm))
        .collect::<adacs_core::Result<Vec<_>>>()?;
    let study = match runs.first() {
        Some(run) if run.grid.patch_count() >= 3 => {
            Some(error_proxy_study(run, 1, cfg.alpha, cfg.delta)?)
        }
        _ => None,
    };
    Ok(ImageOutcome { stem, runs, study })
}

fn stage_name(stem: &str, arm: Arm, stage: usize, mode: Mode) -> String {
    match (mode, arm) {
        (Mode::Ablate, Arm::Uniform) => format!("{stem}_uniform_stage{stage}.pgm"),
        _ => format!("{stem}_stage{stage}.pgm"),
    }
}

fn write(path: PathBuf, contents: &[u8]) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(path, e))
}

fn write_outcome(
    out: &Path,
    image: &Path,
    mode: Mode,
    cfg: &PipelineConfig,
    o: &ImageOutcome,
) -> Result<()> {
    for run in &o.runs {
        for (record, recon) in run.records.iter().zip(&run.reconstructions) {
            save_pgm(
                &recon.clamp_to_display(),
                out.join(stage_name(&o.stem, run.arm, record.stage, mode)),
            )?;
            if let (Arm::Adaptive, Some(mask)) = (run.arm, &record.mask) {
                save_mask_pgm(
                    mask,
                    &run.grid,
                    out.join(format!("{}_mask{}.pgm", o.stem, record.stage)),
                )?;
            }
        }
    }
    let grid = &o.runs[0].grid;
    let report = ImageReport {
        image: image.display().to_string(),
        height: grid.height(),
        width: grid.width(),
        patch_count: grid.patch_count(),
        config: ConfigJson::new(mode, cfg),
        arms: o.runs.iter().map(ArmJson::new).collect(),
        error_proxy: o.study.as_ref().map(StudyJson::new),
    };
    write(
        out.join(format!("{}_report.json", o.stem)),
        report.to_json().as_bytes(),
    )?;
    if let (Mode::Study, Some(study)) = (mode, &o.study) {
        write(
            out.join(format!("{}_proxy.csv", o.stem)),
            study_csv(study, cfg.delta).as_bytes(),
        )?;
    }
    Ok(())
}

/// Runs every image (concurrently), then writes per-image outputs and
/// `summary.csv` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ImageOutcome>> {
    if cfg.images.is_empty() {
        return Err(Error::Setting("no input images given".into()));
    }
    cfg.pipeline.validate()?;
    let mut stems: Vec<String> = cfg
        .images
        .iter()
        .map(|p| stem_of(p))
        .collect::<Result<_>>()?;
    stems.sort();
    if stems.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Setting(
            "input images must have distinct file names".into(),
        ));
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;

    let outcomes: Vec<Result<ImageOutcome>> = thread::scope(|s| {
        let handles: Vec<_> = cfg
            .images
            .iter()
            .map(|path| s.spawn(move || process_image(path, cfg.mode, &cfg.pipeline)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("image worker panicked"))
            .collect()
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for (path, outcome) in cfg.images.iter().zip(&outcomes) {
        write_outcome(&cfg.out, path, cfg.mode, &cfg.pipeline, outcome)?;
        for run in &outcome.runs {
            summary_rows(&mut summary, &outcome.stem, run);
        }
    }
    write(cfg.out.join("summary.csv"), summary.as_bytes())?;
    Ok(outcomes)
}
