mod support;

use std::fs;
use std::path::Path;

use persal::fgrd;
use persal::formats::{DetectionEntry, DetectionRecord, ImageId, PvecFile};
use persal::manifest::RunManifest;
use persal_core::synth::SynthConfig;
use persal_core::SaliencyGrid;
use support::{p, persal, persal_env, snapshot, write_fixture};

fn small() -> SynthConfig {
    SynthConfig { images: 6, ..SynthConfig::default() }
}

fn write_history(path: &Path, recs: &[DetectionRecord]) {
    fs::write(path, serde_json::to_string(recs).unwrap()).unwrap();
}

fn det(category_id: u32, score: f64) -> DetectionEntry {
    DetectionEntry { category_id, score, bbox: [1.0, 1.0, 10.0, 10.0] }
}

fn rec(id: u64, ts: Option<i64>, dets: Vec<DetectionEntry>) -> DetectionRecord {
    DetectionRecord { image_id: ImageId::Number(id), width: 100, height: 100, timestamp: ts, detections: dets }
}

#[test]
fn profile_prints_pvec_and_respects_window() {
    let dir = tempfile::tempdir().unwrap();
    let day = 86_400;
    write_history(
        &dir.path().join("d.json"),
        &[
            rec(1, Some(100 * day), vec![det(17, 0.9), det(3, 0.3)]),
            rec(2, Some(100 * day), vec![det(17, 0.9)]),
            rec(3, Some(day), vec![det(3, 1.0), det(3, 1.0), det(3, 1.0)]),
        ],
    );
    fs::write(
        dir.path().join("m.json"),
        r#"{"super_categories": ["animal", "vehicle"], "map": {"cat": 0, "3": 1}}"#,
    )
    .unwrap();
    let args = ["profile", "--detections", "d.json", "--mapping", "m.json", "--window-days", "90", "--now"];
    let out = persal(dir.path(), &[&args[..], &[&(100 * day).to_string()]].concat());
    assert_eq!(out.code, 0, "{}", out.stderr);
    let pvec: PvecFile = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(pvec.names, ["animal", "vehicle"]);
    assert_eq!(pvec.weights[0], 1.0);
    assert!((pvec.weights[1] - 0.3 / 1.8).abs() < 1e-15);
    assert!(dir.path().join("run_manifest.json").exists());
}

#[test]
fn profile_ratings_and_default_now_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("m.json"),
        r#"{"super_categories": ["cat", "car", "others"], "map": {"17": 0, "3": 1}, "catch_all": 2}"#,
    )
    .unwrap();
    let out = persal(dir.path(), &["profile", "--mapping", "m.json", "--ratings", "10,8,2", "--out", "p.json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let pvec: PvecFile = serde_json::from_slice(&fs::read(dir.path().join("p.json")).unwrap()).unwrap();
    assert_eq!(pvec.weights, [1.0, 0.8, 0.2]);
    assert!(dir.path().join("p.json.manifest.json").exists());

    let bad = persal(dir.path(), &["profile", "--mapping", "m.json", "--ratings", "10,8"]);
    assert_eq!(bad.code, 1);
    let bad = persal(dir.path(), &["profile", "--mapping", "m.json", "--ratings", "10,8,11"]);
    assert_eq!(bad.code, 1);

    write_history(&dir.path().join("d.json"), &[rec(1, None, vec![det(17, 0.5)])]);
    let out = persal(dir.path(), &["profile", "--detections", "d.json", "--mapping", "m.json", "--out", "q.json"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let m = RunManifest::load(&dir.path().join("q.json.manifest.json")).unwrap();
    assert!(m.args.windows(2).any(|w| w[0] == "--now" && w[1].parse::<i64>().is_ok()));
}

#[test]
fn profile_directory_uses_file_times() {
    let dir = tempfile::tempdir().unwrap();
    let hist = dir.path().join("hist");
    fs::create_dir(&hist).unwrap();
    write_history(&hist.join("a.json"), &[rec(1, None, vec![det(1, 0.9)])]);
    write_history(&hist.join("b.json"), &[rec(2, None, vec![det(3, 0.45)])]);
    let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap().as_secs() as i64;

    let recent = persal(dir.path(), &["profile", "--detections", "hist", "--now", &(now + 60).to_string()]);
    assert_eq!(recent.code, 0, "{}", recent.stderr);
    let pvec: PvecFile = serde_json::from_str(&recent.stdout).unwrap();
    assert_eq!(pvec.names.len(), 12);
    let person = pvec.names.iter().position(|n| n == "person").unwrap();
    let vehicle = pvec.names.iter().position(|n| n == "vehicle").unwrap();
    assert_eq!(pvec.weights[person], 1.0);
    assert!((pvec.weights[vehicle] - 0.5).abs() < 1e-15);

    let later = now + 200 * 86_400;
    let stale = persal(dir.path(), &["profile", "--detections", "hist", "--now", &later.to_string()]);
    let pvec: PvecFile = serde_json::from_str(&stale.stdout).unwrap();
    assert!(pvec.weights.iter().all(|&w| w == 0.0));
}

#[test]
fn gen_gt_writes_one_distribution_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let fx = write_fixture(dir.path(), &small(), 1);
    let out = persal(
        dir.path(),
        &["gen-gt", "--annotations", p(&fx.annotations), "--pvec", "pvec.json", "--mapping", "mapping.json", "--out", "gt", "--pgm"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    for i in 0..6 {
        let g = fgrd::read_grid(dir.path().join(format!("gt/{i}.fgrd"))).unwrap();
        assert_eq!(g.dims(), (38, 38));
        assert!((g.sum() - 1.0).abs() < 1e-5);
        assert!(dir.path().join(format!("gt/{i}.pgm")).exists());
    }
    let m = RunManifest::load(&dir.path().join("gt/run_manifest.json")).unwrap();
    assert_eq!(m.command, "gen-gt");
    assert_eq!(m.config["weights"]["beta"], 0.752);
    assert!(m.inputs.contains_key("pvec.json"));
    assert_eq!(m.inputs.len(), 3 + 6);

    let coarse = persal(
        dir.path(),
        &["gen-gt", "--annotations", "annotations.json", "--pvec", "pvec.json", "--mapping", "mapping.json", "--grid", "19x19", "--out", "gt19"],
    );
    assert_eq!(coarse.code, 0, "{}", coarse.stderr);
    assert_eq!(fgrd::read_grid(dir.path().join("gt19/0.fgrd")).unwrap().dims(), (19, 19));
}

#[test]
fn gen_gt_rejects_bad_weights_and_short_pvec() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &small(), 2);
    let base = ["gen-gt", "--annotations", "annotations.json", "--mapping", "mapping.json", "--out", "gt"];
    let out = persal(dir.path(), &[&base[..], &["--pvec", "pvec.json", "--weights", "0.5,0.5,0.5"]].concat());
    assert_eq!(out.code, 1);
    fs::write(dir.path().join("short.json"), r#"{"names": ["person"], "weights": [1.0]}"#).unwrap();
    let out = persal(dir.path(), &[&base[..], &["--pvec", "short.json"]].concat());
    assert_eq!(out.code, 1, "{}", out.stderr);
    assert!(!dir.path().join("gt").exists());
}

#[test]
fn prior_and_center_prior_baseline() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &small(), 3);
    let out = persal(dir.path(), &["prior", "--fixations", "fix", "--out", "prior.fgrd"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let prior = fgrd::read_grid(dir.path().join("prior.fgrd")).unwrap();
    let max = prior.values().iter().cloned().fold(0.0, f64::max);
    assert!((max - 1.0).abs() < 1e-6);

    let out = persal(
        dir.path(),
        &["baseline", "--kind", "center-prior", "--prior", "prior.fgrd", "--detections", "annotations.json", "--out", "cp"],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let a = fgrd::read_grid(dir.path().join("cp/0.fgrd")).unwrap();
    assert!((a.sum() - 1.0).abs() < 1e-5);
    assert_eq!(fs::read(dir.path().join("cp/0.fgrd")).unwrap(), fs::read(dir.path().join("cp/5.fgrd")).unwrap());
}

#[test]
fn prior_rejects_mixed_sizes_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let fix = dir.path().join("fix");
    fs::create_dir(&fix).unwrap();
    fgrd::write_grid(&SaliencyGrid::filled(4, 4, 0.1).unwrap(), fix.join("a.fgrd")).unwrap();
    fgrd::write_grid(&SaliencyGrid::filled(4, 5, 0.1).unwrap(), fix.join("b.fgrd")).unwrap();
    let out = persal(dir.path(), &["prior", "--fixations", "fix", "--out", "prior.fgrd"]);
    assert_eq!(out.code, 1, "{}", out.stderr);
    assert!(!dir.path().join("prior.fgrd").exists());
    let ok = persal(dir.path(), &["prior", "--fixations", "fix", "--grid", "4x4", "--out", "prior.fgrd"]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
}

#[test]
fn detection_baseline_fallback_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![rec(1, None, vec![det(1, 0.9)]), rec(2, None, vec![det(1, 0.2)])];
    write_history(&dir.path().join("d.json"), &recs);
    fs::write(dir.path().join("m.json"), r#"{"super_categories": ["person", "other"], "map": {"1": 0}, "catch_all": 1}"#)
        .unwrap();
    fs::write(dir.path().join("p.json"), r#"{"names": ["person", "other"], "weights": [1.0, 0.05]}"#).unwrap();
    let args = |out: &str, seed: &str| {
        ["baseline", "--kind", "detection", "--detections", "d.json", "--mapping", "m.json", "--pvec", "p.json", "--seed", seed, "--grid", "10x10", "--out", out]
            .map(String::from)
    };
    let run = |out: &str, seed: &str| {
        let a = args(out, seed);
        persal(dir.path(), &a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    assert_eq!(run("a", "5").code, 0);
    assert_eq!(run("b", "5").code, 0);
    assert_eq!(run("c", "6").code, 0);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/baseline.json")).unwrap()).unwrap();
    assert_eq!(report["random_fallback"], serde_json::json!(["2"]));
    let read = |d: &str, f: &str| fs::read(dir.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "2.fgrd"), read("b", "2.fgrd"));
    assert_ne!(read("a", "2.fgrd"), read("c", "2.fgrd"));
    assert_eq!(read("a", "1.fgrd"), read("c", "1.fgrd"));
    let g = fgrd::read_grid(dir.path().join("a/1.fgrd")).unwrap();
    assert!((g.get(0, 0) - 0.25).abs() < 1e-7 && g.get(5, 5) == 0.0);
}

#[test]
fn eval_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    for d in ["pred", "gt"] {
        fs::create_dir(dir.path().join(d)).unwrap();
    }
    let u = SaliencyGrid::filled(4, 4, 1.0 / 16.0).unwrap();
    let peak = SaliencyGrid::from_fn(4, 4, |r, c| if (r, c) == (0, 0) { 1.0 } else { 0.0 }).unwrap();
    fgrd::write_grid(&u, dir.path().join("pred/a.fgrd")).unwrap();
    fgrd::write_grid(&u, dir.path().join("gt/a.fgrd")).unwrap();
    fgrd::write_grid(&peak, dir.path().join("pred/b.fgrd")).unwrap();
    fgrd::write_grid(&u, dir.path().join("gt/b.fgrd")).unwrap();
    let out = persal(dir.path(), &["eval", "--pred", "pred", "--gt", "gt", "--emd-res", "32", "--out", "report"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let csv = fs::read_to_string(dir.path().join("report/metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "id,cc,sim,kld_judd,kld_plain,emd,flags");
    assert!(lines[1].starts_with("a,,1,"));
    assert!(lines[1].ends_with(",0,0,cc=zero-variance"));
    assert!(lines[2].starts_with("b,,0.0625,"));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["counts"]["images"], 2);
    assert_eq!(summary["counts"]["cc_excluded"], 2);
    assert_eq!(summary["means"]["cc"], serde_json::Value::Null);
    assert_eq!(summary["config"]["emd_resolution"], 32);
    assert!(dir.path().join("report/run_manifest.json").exists());
}

#[test]
fn eval_rejects_mismatch_before_output() {
    let dir = tempfile::tempdir().unwrap();
    for d in ["pred", "gt"] {
        fs::create_dir(dir.path().join(d)).unwrap();
    }
    fgrd::write_grid(&SaliencyGrid::filled(4, 4, 1.0 / 16.0).unwrap(), dir.path().join("pred/a.fgrd")).unwrap();
    fgrd::write_grid(&SaliencyGrid::filled(4, 4, 1.0 / 16.0).unwrap(), dir.path().join("gt/a.fgrd")).unwrap();
    fgrd::write_grid(&SaliencyGrid::filled(4, 4, 1.0 / 16.0).unwrap(), dir.path().join("pred/z.fgrd")).unwrap();
    fgrd::write_grid(&SaliencyGrid::filled(5, 4, 1.0 / 20.0).unwrap(), dir.path().join("gt/z.fgrd")).unwrap();
    let out = persal(dir.path(), &["eval", "--pred", "pred", "--gt", "gt", "--out", "report"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("z.fgrd"));
    assert!(!dir.path().join("report").exists());

    fs::remove_file(dir.path().join("gt/z.fgrd")).unwrap();
    let out = persal(dir.path(), &["eval", "--pred", "pred", "--gt", "gt", "--out", "report"]);
    assert_eq!(out.code, 1);
    assert!(!dir.path().join("report").exists());
}

#[test]
fn tune_recovers_generation_weights() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &SynthConfig { images: 10, ..SynthConfig::default() }, 4);
    let gen = persal(
        dir.path(),
        &["gen-gt", "--annotations", "annotations.json", "--pvec", "pvec.json", "--mapping", "mapping.json", "--out", "labels"],
    );
    assert_eq!(gen.code, 0, "{}", gen.stderr);
    let out = persal(
        dir.path(),
        &[
            "tune", "--annotations", "annotations.json", "--labels", "labels", "--pvec", "pvec.json", "--mapping", "mapping.json",
            "--alpha-grid", "0.02,0.06,0.14", "--ratio-grid", "0.6,0.8,1.0", "--out", "sweep",
        ],
    );
    assert_eq!(out.code, 0, "{}", out.stderr);
    let best: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("sweep/best.json")).unwrap()).unwrap();
    assert_eq!(best["weights"]["alpha"], 0.06);
    assert_eq!(best["weights"]["beta"], 0.752);
    let curve = fs::read_to_string(dir.path().join("sweep/alpha_sweep.csv")).unwrap();
    assert_eq!(curve.lines().count(), 4);
    assert!(curve.starts_with("alpha,beta,gamma,beta_fraction,mean_cc,mean_sim,objective,images_used,failed"));

    let wrong = persal(
        dir.path(),
        &["tune", "--annotations", "annotations.json", "--labels", "labels", "--pvec", "pvec.json", "--mapping", "mapping.json", "--grid", "19x19", "--out", "sweep2"],
    );
    assert_eq!(wrong.code, 1);
    assert!(!dir.path().join("sweep2").exists());
}

#[test]
fn convert_between_formats() {
    let dir = tempfile::tempdir().unwrap();
    let g = SaliencyGrid::new(2, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
    fgrd::write_grid(&g, dir.path().join("g.fgrd")).unwrap();
    assert_eq!(persal(dir.path(), &["convert", "--input", "g.fgrd", "--out", "g.csv"]).code, 0);
    assert_eq!(fs::read_to_string(dir.path().join("g.csv")).unwrap(), "0,0.25\n0.5,1\n");
    assert_eq!(persal(dir.path(), &["convert", "--input", "g.csv", "--out", "h.fgrd"]).code, 0);
    assert_eq!(fs::read(dir.path().join("g.fgrd")).unwrap(), fs::read(dir.path().join("h.fgrd")).unwrap());
    assert_eq!(persal(dir.path(), &["convert", "--input", "g.fgrd", "--out", "g.pgm"]).code, 0);
    assert_eq!(fs::read(dir.path().join("g.pgm")).unwrap(), b"P5\n2 2\n255\n\x00\x40\x80\xff");
    assert_eq!(persal(dir.path(), &["convert", "--input", "g.fgrd", "--out", "g.png"]).code, 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(persal(dir.path(), &["--help"]).code, 0);
    assert_eq!(persal(dir.path(), &["frobnicate"]).code, 1);
    assert_eq!(persal(dir.path(), &["convert", "--input", "missing.fgrd", "--out", "x.csv"]).code, 2);

    let mut bytes = fgrd::encode(&SaliencyGrid::filled(3, 3, 0.5).unwrap());
    bytes[15] ^= 1;
    fs::write(dir.path().join("bad.fgrd"), &bytes).unwrap();
    let out = persal(dir.path(), &["convert", "--input", "bad.fgrd", "--out", "x.csv"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("checksum"));
    fs::write(dir.path().join("empty.fgrd"), b"").unwrap();
    let out = persal(dir.path(), &["convert", "--input", "empty.fgrd", "--out", "x.csv"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("truncated"));

    fs::write(dir.path().join("m.json"), "{not json").unwrap();
    assert_eq!(persal(dir.path(), &["profile", "--mapping", "m.json", "--ratings", "1"]).code, 1);
}

#[test]
fn jobs_from_env_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &small(), 5);
    let args = ["gen-gt", "--annotations", "annotations.json", "--pvec", "pvec.json", "--mapping", "mapping.json"];
    let one = persal_env(dir.path(), &[&args[..], &["--out", "one"]].concat(), &[("PERSAL_JOBS", "1")]);
    assert_eq!(one.code, 0, "{}", one.stderr);
    let four = persal(dir.path(), &[&args[..], &["--out", "four", "--jobs", "4"]].concat());
    assert_eq!(four.code, 0, "{}", four.stderr);
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().filter(|(n, _)| !n.ends_with("run_manifest.json")).collect::<Vec<_>>();
    assert_eq!(strip(snapshot(&dir.path().join("one"))), strip(snapshot(&dir.path().join("four"))));
    let bad = persal_env(dir.path(), &[&args[..], &["--out", "x"]].concat(), &[("PERSAL_JOBS", "many")]);
    assert_eq!(bad.code, 1);
}

#[test]
fn replay_reproduces_and_guards_inputs() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &small(), 6);
    let out = persal(
        dir.path(),
        &["gen-gt", "--annotations", "annotations.json", "--pvec", "pvec.json", "--mapping", "mapping.json", "--out", "gt"],
    );
    assert_eq!(out.code, 0);
    let other = tempfile::tempdir().unwrap();
    let again = persal(
        other.path(),
        &["replay", "--manifest", p(&dir.path().join("gt/run_manifest.json")), "--out", p(&other.path().join("gt2"))],
    );
    assert_eq!(again.code, 0, "{}", again.stderr);
    for i in 0..6 {
        let name = format!("{i}.fgrd");
        assert_eq!(fs::read(dir.path().join("gt").join(&name)).unwrap(), fs::read(other.path().join("gt2").join(&name)).unwrap());
    }

    fs::write(dir.path().join("pvec.json"), r#"{"names": ["person", "non-human"], "weights": [0.5, 0.5]}"#).unwrap();
    let refused = persal(dir.path(), &["replay", "--manifest", "gt/run_manifest.json", "--out", "gt3"]);
    assert_eq!(refused.code, 1);
    assert!(refused.stderr.contains("pvec.json"));
}
