use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dr_forge::dataset_io::read_manifest;
use dr_forge::image::Image;
use dr_forge::io;
use dr_forge::metrics::MetricReport;
use dr_forge::{EnvironmentMap, Rgb};

fn dr_forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dr-forge"))
        .args(args)
        .env_remove("DR_FORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dr_forge(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(dr_forge(&["gen-scenes", "--bogus"]).status.code(), Some(2));
    assert_eq!(dr_forge(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(dr_forge(&["eval", "--pred", "a", "--gt", "b", "--kind", "depth", "--out", "r.json"]).status.code(), Some(2));
    assert_eq!(dr_forge(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dr_forge(&["validate", s(&dir.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[renderer]\nspp = 0\n").unwrap();
    let out = dr_forge(&["--config", s(&cfg), "gen-scenes", "--count", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_scenes_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["gen-scenes", "--count", "4", "--seed-base", "7", "--out", s(out)]);
    }
    let ta = tree(&a);
    assert_eq!(ta.len(), 5);
    assert_eq!(ta, tree(&b));
    let m = read_manifest(&a.join("manifest.json")).unwrap();
    let ids: Vec<&str> = m.clips.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["clip_000007", "clip_000008", "clip_000009", "clip_000010"]);
}

#[test]
fn config_file_layers_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "seed = 40\n[generator]\nmax_objects = 1\nmax_primitives = 0\nframes_per_clip = 3\n").unwrap();
    let out = dir.path().join("scenes");
    ok(&["--config", s(&cfg), "gen-scenes", "--count", "2", "--out", s(&out)]);
    let m = read_manifest(&out.join("manifest.json")).unwrap();
    assert_eq!(m.clips[0].id, "clip_000040");
    assert!(m.clips.iter().all(|c| c.frames == 3));
    ok(&["--config", s(&cfg), "--seed", "3", "gen-scenes", "--count", "1", "--out", s(&out)]);
    assert_eq!(read_manifest(&out.join("manifest.json")).unwrap().clips[0].id, "clip_000003");
}

#[test]
fn thread_count_does_not_change_payloads() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    ok(&["gen-scenes", "--count", "1", "--seed-base", "3", "--out", s(&scenes)]);
    let render = |threads: &str, out: &Path| {
        ok(&[
            "--threads", threads, "render-dataset", "--manifest", s(&scenes), "--out", s(out), "--spp", "4", "--frames", "2",
            "--res", "24",
        ]);
    };
    let (one, many) = (dir.path().join("one"), dir.path().join("many"));
    render("1", &one);
    render("4", &many);
    assert_eq!(tree(&one), tree(&many));
}

#[test]
fn smoke_pipeline_renders_validates_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes");
    let data = dir.path().join("data");
    ok(&["gen-scenes", "--count", "2", "--seed-base", "11", "--out", s(&scenes)]);
    ok(&[
        "render-dataset", "--manifest", s(&scenes), "--out", s(&data), "--spp", "16", "--frames", "4", "--res", "128",
    ]);
    let m = read_manifest(&data.join("manifest.json")).unwrap();
    assert_eq!(m.clips.len(), 2);
    assert!(m.clips.iter().all(|c| c.files.len() == 4 && c.width == 128));
    assert!(dr_forge(&["validate", s(&data)]).status.success());

    let report_path = dir.path().join("normal.json");
    ok(&["eval", "--pred", s(&data), "--gt", s(&data), "--kind", "normal", "--out", s(&report_path)]);
    let report: MetricReport = serde_json::from_slice(&fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(report.clips.len(), 2);
    assert_eq!(report.aggregate.angular_error_deg, Some(0.0));

    let split = dir.path().join("splitsum");
    ok(&["baseline", "splitsum", "--gbuffer", s(&data), "--out", s(&split)]);
    let ssrt = dir.path().join("ssrt");
    ok(&["baseline", "ssrt", "--gbuffer", s(&data), "--out", s(&ssrt), "--clip", &m.clips[0].id, "--spp", "4"]);
    assert!(split.join(&m.clips[1].id).join("0003.exr").is_file());
    assert!(split.join("prefiltered").read_dir().unwrap().next().is_some());
    assert!(ssrt.join(&m.clips[0].id).join("0003.png").is_file());
    assert!(!ssrt.join(&m.clips[1].id).exists());

    let render_report = dir.path().join("render.json");
    ok(&["eval", "--pred", s(&split), "--gt", s(&data), "--kind", "render", "--out", s(&render_report)]);
    let report: MetricReport = serde_json::from_slice(&fs::read(&render_report).unwrap()).unwrap();
    let psnr = report.aggregate.psnr.unwrap();
    assert!(psnr > 10.0 && psnr < 99.0, "{psnr}");
    assert!(report.aggregate.ssim.unwrap() <= 1.0);
    // A predicted tree lacking a ground-truth clip is a runtime error.
    let out = dr_forge(&["eval", "--pred", s(&ssrt), "--gt", s(&data), "--kind", "render", "--out", s(&render_report)]);
    assert_eq!(out.status.code(), Some(1));

    fs::remove_file(data.join(&m.clips[0].files[2].normal)).unwrap();
    let out = dr_forge(&["validate", s(&data)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("missing file"));
}

#[test]
fn encode_env_writes_unit_directions() {
    let dir = tempfile::tempdir().unwrap();
    let env_path = dir.path().join("env.exr");
    let env = EnvironmentMap::from_fn(16, |x, y| Rgb::new(x as f64 + 1.0, y as f64, 0.5)).unwrap();
    io::write_env(&env_path, &env).unwrap();
    let out = dir.path().join("enc");
    ok(&["encode-env", "--env", s(&env_path), "--out", s(&out), "--yaw", "0.5", "--flip"]);
    let e_dir = io::read_rgb_exr(&out.join("e_dir.exr"), None).unwrap();
    assert_eq!(e_dir.dims(), (32, 16));
    for p in e_dir.pixels() {
        assert!(((p.r * p.r + p.g * p.g + p.b * p.b).sqrt() - 1.0).abs() < 1e-5);
    }
    let e_log = io::read_rgb_exr(&out.join("e_log.exr"), None).unwrap();
    let max = e_log.pixels().iter().map(|p| p.max_component()).fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-6);
    assert!(out.join("e_ldr.png").is_file() && out.join("encoding.json").is_file());
}

#[test]
fn composite_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let img = |v: f64| Image::filled(4, 3, Rgb::splat(v));
    let p = |n: &str| dir.path().join(n);
    io::write_rgb_exr(&p("bg.exr"), &img(0.5), None).unwrap();
    io::write_rgb_exr(&p("ins.exr"), &img(0.25), None).unwrap();
    io::write_rgb_exr(&p("bgr.exr"), &img(1.0), None).unwrap();
    let mask = Image::from_fn(4, 3, |x, _| if x < 2 { 1.0 } else { 0.0 });
    io::write_png_gray(&p("mask.png"), &mask).unwrap();
    ok(&[
        "composite", "--bg", s(&p("bg.exr")), "--ins", s(&p("ins.exr")), "--bg-rerender", s(&p("bgr.exr")), "--mask",
        s(&p("mask.png")), "--out", s(&p("out.exr")),
    ]);
    let out = io::read_rgb_exr(&p("out.exr"), None).unwrap();
    for y in 0..3 {
        for x in 0..4 {
            // Inside the mask the insertion render wins; outside, the
            // background is darkened by the shading ratio 0.25.
            let want = if x < 2 { 0.25 } else { 0.125 };
            assert!((out.get(x, y).r - want).abs() < 1e-6, "{x},{y}: {:?}", out.get(x, y));
        }
    }
}
