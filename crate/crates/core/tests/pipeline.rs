use adacs_core::pipeline::{run_adaptive, run_arm, run_uniform, Arm};
use adacs_core::{Image, PipelineConfig, RateMode};

/// Flat left half, textured right half.
fn composite(size: usize, checker: bool) -> Image {
    Image::from_fn(size, size, |r, c| {
        if c < size / 2 {
            100.0
        } else if checker {
            if (r / 2 + c / 2) % 2 == 0 {
                228.0
            } else {
                28.0
            }
        } else {
            let (rf, cf) = (r as f64, c as f64);
            128.0
                + 60.0 * (rf * 1.3).sin() * (cf * 0.9).cos()
                + 30.0 * ((r * 7 + c * 3) as f64 * 0.77).sin()
        }
    })
    .unwrap()
}

fn scene(h: usize, w: usize) -> Image {
    Image::from_fn(h, w, |r, c| {
        let (rf, cf) = (r as f64, c as f64);
        120.0 + 50.0 * (rf / 5.0).sin() * (cf / 8.0).cos() + if r > c { 40.0 } else { 0.0 }
    })
    .unwrap()
}

#[test]
fn measurement_budget_adds_up() {
    let img = scene(128, 128);
    let cfg = PipelineConfig::default();
    let run = run_adaptive(&img, &cfg).unwrap();
    let patches = run.grid.patch_count();
    let pixels = run.grid.pixel_count() as f64;
    let mut total = 0;
    for r in &run.records {
        assert_eq!(r.measurements, r.m * r.sampled_patch_count);
        total += r.measurements;
        assert_eq!(r.cumulative_measurements, total);
        let nominal = r.stage as f64 * cfg.rate * pixels;
        assert!(
            (total as f64 - nominal).abs() <= patches as f64,
            "stage {}",
            r.stage
        );
        assert!((r.cumulative_nominal_rate - r.stage as f64 * cfg.rate).abs() < 1e-12);
        assert_eq!(r.cumulative_actual_rate, total as f64 / pixels);
    }
    let ms: Vec<usize> = run.records.iter().map(|r| r.m).collect();
    assert_eq!(ms, [3, 5, 7, 9]);
    let sampled: Vec<usize> = run.records.iter().map(|r| r.sampled_patch_count).collect();
    // 256 patches: 256 - round(256 (1 - 0.7^(i-1)))
    assert_eq!(sampled, [256, 179, 125, 88]);
    for (set, r) in run.measurements.iter().zip(&run.records) {
        assert_eq!(set.total_measurements(), r.measurements);
        assert_eq!(set.stage, r.stage);
    }
}

#[test]
fn constant_rate_mode_keeps_m() {
    let cfg = PipelineConfig {
        rate_mode: RateMode::ConstantM,
        stages: 3,
        ..Default::default()
    };
    let run = run_adaptive(&scene(64, 64), &cfg).unwrap();
    let ms: Vec<usize> = run.records.iter().map(|r| r.m).collect();
    assert_eq!(ms, [3, 3, 3]);
    let rates: Vec<f64> = run
        .records
        .iter()
        .map(|r| r.cumulative_nominal_rate)
        .collect();
    let expect = [0.05, 0.05 + 0.035, 0.05 + 0.035 + 0.0245];
    for (a, b) in rates.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn single_stage_equals_uniform() {
    let img = scene(64, 96);
    let cfg = PipelineConfig {
        stages: 1,
        ..Default::default()
    };
    let a = run_adaptive(&img, &cfg).unwrap();
    let u = run_uniform(&img, &cfg).unwrap();
    assert_eq!(a.records, u.records);
    assert_eq!(a.reconstructions, u.reconstructions);
    assert_eq!(a.measurements, u.measurements);
}

#[test]
fn uniform_arm_samples_everything_at_base_rate() {
    let cfg = PipelineConfig {
        adaptive_enabled: false,
        ..Default::default()
    };
    let run = run_adaptive(&scene(64, 64), &cfg).unwrap();
    assert_eq!(run.arm, Arm::Uniform);
    for (r, expect) in run.records.iter().zip([0.05, 0.10, 0.15, 0.20]) {
        assert_eq!(r.m, 3);
        assert_eq!(r.sampled_patch_count, run.grid.patch_count());
        assert!(r.mask.is_none());
        assert!((r.cumulative_nominal_rate - expect).abs() < 1e-12);
    }
}

#[test]
fn arms_share_stage_one() {
    let img = scene(64, 64);
    let cfg = PipelineConfig::default();
    let a = run_arm(&img, &cfg, Arm::Adaptive).unwrap();
    let u = run_arm(&img, &cfg, Arm::Uniform).unwrap();
    assert_eq!(a.records[0], u.records[0]);
    assert!(a.records[1].mask.is_some());
}

#[test]
fn stage_two_mask_covers_the_textured_half() {
    let img = composite(128, false);
    let cfg = PipelineConfig {
        stages: 2,
        ..Default::default()
    };
    let run = run_adaptive(&img, &cfg).unwrap();
    let mask = run.records[1].mask.as_ref().unwrap();
    let grid = &run.grid;
    let textured: Vec<usize> = (0..grid.patch_count())
        .filter(|&j| grid.block_of(j).1 >= grid.cols() / 2)
        .collect();
    let covered = textured.iter().filter(|&&j| mask.bits[j]).count();
    let coverage = covered as f64 / textured.len() as f64;
    assert!(coverage >= 0.9, "coverage {coverage}");
    let excluded_flat = (0..grid.patch_count())
        .filter(|&j| !mask.bits[j] && grid.block_of(j).1 < grid.cols() / 2)
        .count();
    assert!(excluded_flat as f64 >= 0.9 * mask.n_unsampled as f64);
}

#[test]
fn adaptive_beats_uniform_on_composite() {
    let img = composite(128, true);
    let cfg = PipelineConfig::default();
    let a = run_arm(&img, &cfg, Arm::Adaptive).unwrap();
    let u = run_arm(&img, &cfg, Arm::Uniform).unwrap();
    let (fa, fu) = (a.final_record(), u.final_record());
    assert_eq!(fa.cumulative_nominal_rate, fu.cumulative_nominal_rate);
    assert!(fa.psnr - fu.psnr >= 0.75, "{} vs {}", fa.psnr, fu.psnr);
}

#[test]
fn runs_are_deterministic() {
    let img = scene(64, 64);
    let cfg = PipelineConfig {
        noise_sigma: 2.0,
        seed: 42,
        ..Default::default()
    };
    let a = run_adaptive(&img, &cfg).unwrap();
    let b = run_adaptive(&img, &cfg).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.reconstructions, b.reconstructions);
    let other = run_adaptive(&img, &PipelineConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.measurements, other.measurements);
}

#[test]
fn cold_start_converges_to_a_similar_image() {
    let img = scene(64, 64);
    let warm = run_adaptive(&img, &PipelineConfig::default()).unwrap();
    let cold = run_adaptive(
        &img,
        &PipelineConfig {
            warm_start: false,
            ..Default::default()
        },
    )
    .unwrap();
    let (w, c) = (warm.records[1].psnr, cold.records[1].psnr);
    assert!((w - c).abs() < 1.0, "warm {w} cold {c}");
}

#[test]
fn indivisible_images_are_rejected() {
    assert!(run_adaptive(&scene(60, 64), &PipelineConfig::default()).is_err());
}
