use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rrkit::dataio::{write_task1_dir, Task1Record};
use rrkit::frm::FeatureMap;
use rrkit::geometry::RBox;
use rrkit::postproc::{rotated_nms, Detection};
use std::collections::BTreeMap;
use tempfile::TempDir;

fn rrkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rrkit")).args(args).env_remove("RRKIT_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    assert!(!o.status.success(), "expected failure, got {}", String::from_utf8_lossy(&o.stdout));
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().last().expect("an error line");
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn iou_table() {
    let d = TempDir::new().unwrap();
    let input = write(
        d.path(),
        "pairs.txt",
        "# identical, disjoint, square at 45 degrees\n\
         10 10 8 4 -0.5 | 10 10 8 4 -0.5\n\
         0 0 2 2 -1 | 50 50 2 2 -1\n\
         0 0 2 2 -1.5707963267948966 | 0 0 2 2 -0.7853981633974483\n",
    );
    assert_eq!(stdout(&rrkit(&["iou", &input])), "1.000000\n0.000000\n0.707107\n");
}

#[test]
fn iou_reports_bad_line() {
    let d = TempDir::new().unwrap();
    let input = write(d.path(), "pairs.txt", "0 0 2 2 -1 | 0 0 2 2 -1\n0 0 2 2 | 0 0 2 2 -1\n");
    let e = error_json(&rrkit(&["iou", &input]));
    assert_eq!(e["error"], "parse");
    assert_eq!(e["line"], 2);
}

#[test]
fn nms_matches_library() {
    let d = TempDir::new().unwrap();
    let dets = vec![
        Detection::new(RBox::raw(50.0, 50.0, 40.0, 10.0, -0.5), 0, 0.9),
        Detection::new(RBox::raw(51.0, 50.0, 40.0, 10.0, -0.52), 0, 0.8),
        Detection::new(RBox::raw(51.0, 50.0, 40.0, 10.0, -0.52), 1, 0.7),
        Detection::new(RBox::raw(150.0, 50.0, 20.0, 20.0, -1.0), 0, 0.6),
    ];
    let body: String = dets
        .iter()
        .map(|x| format!("{} {} {} {} {} {} {}\n", x.rbox.cx, x.rbox.cy, x.rbox.w, x.rbox.h, x.rbox.theta, x.class_id, x.score))
        .collect();
    let input = write(d.path(), "dets.txt", &body);
    for (flag, per_class) in [("--per-class", true), ("--class-agnostic", false)] {
        let out = stdout(&rrkit(&["nms", &input, "--iou", "0.3", flag]));
        let expect = rotated_nms(&dets, 0.3, per_class).unwrap();
        assert_eq!(out.lines().count(), expect.len());
        for (line, e) in out.lines().zip(&expect) {
            let score: f64 = line.split_whitespace().nth(6).unwrap().parse().unwrap();
            assert_eq!(score, e.score);
        }
    }
    let kept = stdout(&rrkit(&["nms", &input, "--iou", "0.3", "--per-class"]));
    assert_eq!(kept.lines().count(), 3);
    assert_eq!(stdout(&rrkit(&["nms", &input, "--iou", "0.3", "--class-agnostic"])).lines().count(), 2);
    assert_eq!(error_json(&rrkit(&["nms", &input, "--iou", "1.5"]))["error"], "config");
}

fn eval_fixture(d: &Path, with_dets: bool) -> (String, String) {
    let gts = d.join("gts");
    fs::create_dir_all(&gts).unwrap();
    fs::write(gts.join("P0001.txt"), "imagesource:GoogleEarth\ngsd:0.1\n10 10 50 10 50 30 10 30 plane 0\n100 100 140 100 140 110 100 110 ship 0\n").unwrap();
    fs::write(gts.join("P0002.txt"), "0 0 20 0 20 20 0 20 plane 0\n200 200 210 200 210 210 200 210 ship 1\n").unwrap();
    let dets = d.join("dets");
    fs::create_dir_all(&dets).unwrap();
    if with_dets {
        let rec = |img: &str, s: f64, q: [f64; 8]| Task1Record { image: img.into(), score: s, quad: rrkit::geometry::Quad::from_flat(q) };
        let mut by = BTreeMap::new();
        by.insert(
            "plane".to_string(),
            vec![rec("P0001", 0.9, [10.0, 10.0, 50.0, 10.0, 50.0, 30.0, 10.0, 30.0]), rec("P0002", 0.8, [0.0, 0.0, 20.0, 0.0, 20.0, 20.0, 0.0, 20.0])],
        );
        by.insert("ship".to_string(), vec![rec("P0001", 0.7, [100.0, 100.0, 140.0, 100.0, 140.0, 110.0, 100.0, 110.0])]);
        write_task1_dir(&dets, &by).unwrap();
    }
    (dets.to_string_lossy().into_owned(), gts.to_string_lossy().into_owned())
}

#[test]
fn eval_perfect_fixture_and_sweep() {
    let d = TempDir::new().unwrap();
    let (dets, gts) = eval_fixture(d.path(), true);
    let csv = d.path().join("sweep.csv");
    let out = stdout(&rrkit(&["eval", "--dets", &dets, "--gts", &gts, "--sweep", csv.to_str().unwrap()]));
    assert!(out.contains("plane\t1.0000\t2\t2"), "{out}");
    assert!(out.contains("ship\t1.0000\t1\t1"), "{out}");
    assert!(out.trim_end().ends_with("mAP\t1.0000"), "{out}");
    let rows = fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "iou_thresh,map");
    assert_eq!(lines[1], "0.50,1.000000");
    assert_eq!(lines[10], "0.95,1.000000");
}

#[test]
fn eval_without_detections_warns() {
    let d = TempDir::new().unwrap();
    let (dets, gts) = eval_fixture(d.path(), false);
    let o = rrkit(&["eval", "--dets", &dets, "--gts", &gts]);
    assert!(stdout(&o).trim_end().ends_with("mAP\t0.0000"));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("\"missing_category\"") && err.contains("\"plane\"") && err.contains("\"ship\""), "{err}");
}

#[test]
fn eval_config_supplies_directories() {
    let d = TempDir::new().unwrap();
    let (dets, gts) = eval_fixture(d.path(), true);
    let cfg = write(d.path(), "rrkit.toml", &format!("dets_dir = {dets:?}\ngts_dir = {gts:?}\neval_mode = \"all\"\n"));
    let out = stdout(&rrkit(&["eval", "--config", &cfg]));
    assert!(out.starts_with("# iou_thresh 0.5 mode all"), "{out}");
    // flags beat the file
    let out = stdout(&rrkit(&["eval", "--config", &cfg, "--mode", "11point", "--iou-thresh", "0.7"]));
    assert!(out.starts_with("# iou_thresh 0.7 mode 11point"), "{out}");
}

#[test]
fn tile_plans_and_remaps() {
    let out = stdout(&rrkit(&["tile", "--w", "1024", "--h", "1024"]));
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(rows, ["0 0 0 600 600 0 -", "1 424 0 1024 600 0 -", "2 0 424 600 1024 0 -", "3 424 424 1024 1024 0 -"]);
    assert_eq!(stdout(&rrkit(&["tile", "--w", "600", "--h", "600"])).lines().count(), 3);
    let small = stdout(&rrkit(&["tile", "--w", "300", "--h", "200"]));
    assert_eq!(small.lines().nth(2).unwrap(), "0 0 0 300 200 1 -");

    let d = TempDir::new().unwrap();
    let ann = write(d.path(), "P0007.txt", "imagesource:GoogleEarth\n100 100 140 100 140 120 100 120 plane 0\n");
    let tiles = d.path().join("tiles");
    let out = stdout(&rrkit(&["tile", "--w", "1024", "--h", "1024", "--ann", &ann, "--ann-dir", tiles.to_str().unwrap()]));
    assert!(out.lines().nth(2).unwrap().ends_with(" 1"));
    assert!(out.lines().nth(3).unwrap().ends_with(" 0"));
    let first = fs::read_to_string(tiles.join("P0007__0___0.txt")).unwrap();
    let a = rrkit::dataio::parse_dota(&first).unwrap();
    assert_eq!(a.header, ["imagesource:GoogleEarth"]);
    let scale = 800.0 / 600.0;
    assert!((a.objects[0].quad.0[0].x - 100.0 * scale).abs() < 1e-9);
    assert!(rrkit::dataio::parse_dota(&fs::read_to_string(tiles.join("P0007__424___424.txt")).unwrap()).unwrap().objects.is_empty());
    assert_eq!(error_json(&rrkit(&["tile", "--w", "10", "--h", "10", "--tile", "100", "--overlap", "100"]))["error"], "invalid_argument");
}

fn write_tensor(dir: &Path, f: &FeatureMap) -> String {
    let p = dir.join("f.bin");
    let mut buf = Vec::new();
    f.write_to(&mut buf).unwrap();
    fs::write(&p, buf).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn frm_demo_degenerate_and_zero() {
    let d = TempDir::new().unwrap();
    let (h, w, c, s) = (3, 4, 2, 8u32);
    let f = FeatureMap::from_vec(h, w, c, s, (0..h * w * c).map(|v| v as f64 * 0.5 - 4.0).collect()).unwrap();
    let tensor = write_tensor(d.path(), &f);
    let boxes: String = (0..h * w).map(|k| format!("{} {} 0 0 -1\n", (k % w) as u32 * s, (k / w) as u32 * s)).collect();
    let bpath = write(d.path(), "boxes.txt", &boxes);
    let out = d.path().join("g.bin");
    let msg = stdout(&rrkit(&["frm-demo", "--tensor", &tensor, "--boxes", &bpath, "-o", out.to_str().unwrap()]));
    assert!(msg.contains(&format!("samples={}", 5 * h * w)), "{msg}");
    let g = FeatureMap::read_from(&fs::read(&out).unwrap()[..]).unwrap();
    assert_eq!(g, f.scaled(6.0));

    let z = FeatureMap::zeros(h, w, c, s);
    let tensor = write_tensor(d.path(), &z);
    stdout(&rrkit(&["frm-demo", "--tensor", &tensor, "--boxes", &bpath, "--variant", "perm2", "-o", out.to_str().unwrap()]));
    assert!(FeatureMap::read_from(&fs::read(&out).unwrap()[..]).unwrap().data.iter().all(|v| *v == 0.0));

    let short = write(d.path(), "short.txt", "0 0 1 1 -1\n");
    assert_eq!(error_json(&rrkit(&["frm-demo", "--tensor", &tensor, "--boxes", &short, "-o", out.to_str().unwrap()]))["error"], "kernel");
    let kernels = write(d.path(), "k.json", "{\"k1\": 3}");
    assert_eq!(
        error_json(&rrkit(&["frm-demo", "--tensor", &tensor, "--boxes", &bpath, "--kernels", &kernels, "-o", out.to_str().unwrap()]))["error"],
        "parse"
    );
}

#[test]
fn bench_reports_and_rejects_empty() {
    let field = |s: &str, k: &str| s.split_whitespace().find_map(|t| t.strip_prefix(&format!("{k}=")).map(str::to_string)).unwrap();
    let a = stdout(&rrkit(&["bench", "--op", "iou", "--n", "5000", "--seed", "3"]));
    let b = stdout(&rrkit(&["bench", "--op", "iou", "--n", "5000", "--seed", "3", "--threads", "1"]));
    assert_eq!(field(&a, "checksum"), field(&b, "checksum"));
    assert!(field(&a, "ops_per_s").parse::<f64>().unwrap() > 0.0);
    for op in ["nms", "frm"] {
        let r = stdout(&rrkit(&["bench", "--op", op, "--n", "400", "--repeats", "2"]));
        assert!(r.starts_with(&format!("op={op} n=400 ")), "{r}");
        assert!(field(&r, "p50_us").parse::<f64>().unwrap() <= field(&r, "p99_us").parse::<f64>().unwrap());
    }
    assert_eq!(error_json(&rrkit(&["bench", "--op", "iou", "--n", "0"]))["error"], "invalid_argument");
}

#[test]
fn config_validation_and_threads() {
    let d = TempDir::new().unwrap();
    let good = write(d.path(), "good.toml", "num_stages = 3\nnms_iou = 0.2\n");
    let out = stdout(&rrkit(&["config", "--config", &good]));
    assert!(out.contains("nms_iou = 0.2"));
    assert!(out.contains("# stage 2: fg 0.7 bg 0.6"));
    let bad = write(d.path(), "bad.toml", "anchor_preset = \"giant\"\n");
    assert_eq!(error_json(&rrkit(&["config", "--config", &bad]))["error"], "config");
    let typo = write(d.path(), "typo.toml", "nms_iuo = 0.2\n");
    assert_eq!(error_json(&rrkit(&["config", "--config", &typo]))["error"], "config");
    assert_eq!(error_json(&rrkit(&["config", "--config", "/nonexistent/rrkit.toml"]))["error"], "io");

    let o = Command::new(env!("CARGO_BIN_EXE_rrkit")).args(["config"]).env("RRKIT_THREADS", "zero").output().unwrap();
    assert_eq!(error_json(&o)["error"], "config");
    let o = Command::new(env!("CARGO_BIN_EXE_rrkit")).args(["bench", "--op", "iou", "--n", "100"]).env("RRKIT_THREADS", "1").output().unwrap();
    assert!(o.status.success());
}
