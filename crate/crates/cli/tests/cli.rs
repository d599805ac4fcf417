use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const C: f64 = 299_792_458.0;

fn misslevel(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_misslevel"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = misslevel(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    misslevel(dir, args).status.code().unwrap()
}

/// SHA-256 of every `.lvl` file in `dir`, keyed by name.
fn digests(dir: &Path) -> BTreeMap<String, String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "lvl"))
        .map(|p| {
            let hash = Sha256::digest(fs::read(&p).unwrap());
            let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
            (p.file_name().unwrap().to_string_lossy().into_owned(), hex)
        })
        .collect()
}

/// Rows of a curve CSV as (x, y).
fn curve(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("x,"))
        .map(|l| {
            let mut f = l.split(',');
            (
                f.next().unwrap().parse().unwrap(),
                f.next().unwrap().parse().unwrap(),
            )
        })
        .collect()
}

fn levels(text: &str) -> Vec<f64> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

/// Minimal xorshift so fixtures need no extra dependencies.
struct XorShift(u64);

impl XorShift {
    fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn write_poisson(path: &Path, n: usize, seed: u64) {
    let mut rng = XorShift(seed);
    let mut e = 0.0;
    let text: String = (0..n)
        .map(|_| {
            e += -(1.0 - rng.uniform()).ln();
            format!("{e}\n")
        })
        .collect();
    fs::write(path, text).unwrap();
}

#[test]
fn simulate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let args = |out: &'static str| {
        [
            "simulate", "--n", "120", "--count", "4", "--xi", "0.35", "--phi", "0.81", "--seed",
            "7", "--out", out,
        ]
    };
    ok(tmp.path(), &args("a"));
    ok(tmp.path(), &args("b"));
    let a = digests(&tmp.path().join("a"));
    assert_eq!(a.len(), 4);
    assert_eq!(a, digests(&tmp.path().join("b")));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("a/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn different_seeds_differ() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate", "--n", "60", "--count", "1", "--xi", "0", "--seed", "1", "--out", "a",
        ],
    );
    ok(
        tmp.path(),
        &[
            "simulate", "--n", "60", "--count", "1", "--xi", "0", "--seed", "2", "--out", "b",
        ],
    );
    assert_ne!(
        digests(&tmp.path().join("a")),
        digests(&tmp.path().join("b"))
    );
}

#[test]
fn phi_one_keeps_every_bulk_level() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate", "--n", "200", "--count", "1", "--xi", "0.2", "--phi", "1", "--seed", "3",
            "--out", "a",
        ],
    );
    let n = levels(&fs::read_to_string(tmp.path().join("a/r0000.lvl")).unwrap()).len();
    assert_eq!(n, 120);
}

#[test]
fn replay_reproduces_outputs() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate", "--n", "80", "--count", "3", "--xi", "0.5", "--phi", "0.7", "--seed", "11",
            "--out", "lv",
        ],
    );
    let before = digests(&tmp.path().join("lv"));
    fs::remove_file(tmp.path().join("lv/r0001.lvl")).unwrap();
    ok(tmp.path(), &["replay", "lv/manifest.json"]);
    assert_eq!(before, digests(&tmp.path().join("lv")));
}

#[test]
fn usage_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    write_poisson(&tmp.path().join("p.lvl"), 50, 1);
    assert_eq!(
        code(
            tmp.path(),
            &["analyze", "--in", "*.lvl", "--stats", "nn,entropy"]
        ),
        2
    );
    assert_eq!(
        code(
            tmp.path(),
            &[
                "simulate", "--n", "50", "--count", "1", "--xi", "0.1", "--phi", "1.5", "--seed",
                "1"
            ]
        ),
        2
    );
    assert_eq!(
        code(
            tmp.path(),
            &[
                "simulate",
                "--n",
                "50",
                "--count",
                "1",
                "--xi",
                "0.1",
                "--seed",
                "1",
                "--unfolding",
                "spline"
            ]
        ),
        2
    );
    assert_eq!(
        code(
            tmp.path(),
            &["theory", "--xi", "0.3", "--curve", "entropy", "--grid", "0:1:0.1"]
        ),
        2
    );
    assert_eq!(
        code(
            tmp.path(),
            &["theory", "--xi", "0.3", "--curve", "sigma2", "--grid", "1:0:0.1"]
        ),
        2
    );
    assert_eq!(
        code(tmp.path(), &["analyze", "--in", "*.lvl", "--unit", "raw"]),
        2
    );
    assert_eq!(
        code(tmp.path(), &["unfold", "--in", "p.lvl", "--unit", "ghz"]),
        2
    );
    assert_eq!(code(tmp.path(), &["bogus"]), 2);
}

#[test]
fn data_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let out = misslevel(tmp.path(), &["analyze", "--in", "missing/*.lvl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no level files"));
    fs::write(tmp.path().join("bad.lvl"), "1.0\nabc\n").unwrap();
    assert_eq!(code(tmp.path(), &["analyze", "--in", "bad.lvl"]), 1);
}

#[test]
fn poisson_number_variance_is_l() {
    let tmp = TempDir::new().unwrap();
    for k in 0..20 {
        write_poisson(&tmp.path().join(format!("p{k:02}.lvl")), 2000, 1 + k);
    }
    ok(
        tmp.path(),
        &[
            "analyze", "--in", "p*.lvl", "--stats", "sigma2", "--lgrid", "1:5:1", "--out", "an",
        ],
    );
    assert!(!tmp.path().join("an/nn.csv").exists());
    let s2 = curve(&fs::read_to_string(tmp.path().join("an/sigma2.csv")).unwrap());
    assert_eq!(s2.len(), 5);
    for (l, y) in s2 {
        assert!((y - l).abs() < 0.1 * l, "L = {l}: {y}");
    }
}

#[test]
fn analyze_writes_all_four_curves() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate", "--n", "150", "--count", "6", "--xi", "0.49", "--phi", "0.85", "--seed",
            "5", "--out", "lv",
        ],
    );
    ok(
        tmp.path(),
        &[
            "analyze",
            "--in",
            "lv/*.lvl",
            "--lgrid",
            "0.5:4:0.5",
            "--out",
            "an",
        ],
    );
    for name in ["nn", "sigma2", "delta3", "power"] {
        let rows = curve(&fs::read_to_string(tmp.path().join(format!("an/{name}.csv"))).unwrap());
        assert!(!rows.is_empty(), "{name}");
        assert!(rows.iter().all(|r| r.1.is_finite()));
    }
    assert!(tmp.path().join("an/manifest.json").exists());
}

#[test]
fn theory_k_is_t_for_gue() {
    let tmp = TempDir::new().unwrap();
    let rows = curve(&ok(
        tmp.path(),
        &["theory", "--xi", "1", "--curve", "K", "--grid", "0:0.9:0.1"],
    ));
    assert_eq!(rows.len(), 10);
    for (t, k) in rows {
        assert!((k - t).abs() < 1e-9, "K({t}) = {k}");
    }
}

#[test]
fn theory_sigma2_goe_matches_asymptote() {
    let tmp = TempDir::new().unwrap();
    let rows = curve(&ok(
        tmp.path(),
        &[
            "theory", "--xi", "0", "--curve", "sigma2", "--grid", "10:10:1",
        ],
    ));
    let l = 10.0f64;
    let euler = 0.577_215_664_901_532_9;
    let asymptote = 2.0 / std::f64::consts::PI.powi(2)
        * ((2.0 * std::f64::consts::PI * l).ln() + euler + 1.0
            - std::f64::consts::PI.powi(2) / 8.0);
    assert!(
        (rows[0].1 - asymptote).abs() < 0.01,
        "{} vs {asymptote}",
        rows[0].1
    );
}

#[test]
fn theory_power_skips_singular_points() {
    let tmp = TempDir::new().unwrap();
    let rows = curve(&ok(
        tmp.path(),
        &[
            "theory", "--xi", "0.3", "--curve", "power", "--grid", "0:1:0.25",
        ],
    ));
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    assert_eq!(xs, vec![0.25, 0.5, 0.75]);
}

#[test]
fn fit_phi_round_trip() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "theory",
            "--xi",
            "0.49",
            "--phi",
            "0.85",
            "--curve",
            "power",
            "--grid",
            "0.02:0.3:0.005",
            "--out",
            "p.csv",
        ],
    );
    assert!(tmp.path().join("p.csv.manifest.json").exists());
    let report: serde_json::Value = serde_json::from_str(&ok(
        tmp.path(),
        &["fit", "phi", "--power", "p.csv", "--xi", "0.49"],
    ))
    .unwrap();
    assert_eq!(report["parameter"], "phi");
    assert_eq!(report["fixed"]["xi"], 0.49);
    let estimate = report["estimate"].as_f64().unwrap();
    assert!((estimate - 0.85).abs() < 1e-3, "{estimate}");
}

#[test]
fn fit_xi_round_trip() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "theory",
            "--xi",
            "0.35",
            "--phi",
            "0.81",
            "--curve",
            "sigma2",
            "--grid",
            "0.5:5:0.25",
            "--out",
            "s.csv",
        ],
    );
    ok(
        tmp.path(),
        &[
            "fit", "xi", "--sigma2", "s.csv", "--phi", "0.81", "--out", "fit.json",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("fit.json")).unwrap()).unwrap();
    let estimate = report["estimate"].as_f64().unwrap();
    assert!((estimate - 0.35).abs() < 1e-3, "{estimate}");
}

#[test]
fn unfold_inverts_weyl_count() {
    let tmp = TempDir::new().unwrap();
    let (area, perimeter) = (0.18285, 2.023);
    let quad = area * std::f64::consts::PI / (C * C) * 1e18;
    let lin = -perimeter / (2.0 * C) * 1e9;
    // levels placed where the minus-sign count reaches k + 1/2
    let ks: Vec<f64> = (300..500).map(|k| k as f64 + 0.5).collect();
    let freqs: Vec<f64> = ks
        .iter()
        .map(|&n| (-lin + (lin * lin + 4.0 * quad * n).sqrt()) / (2.0 * quad))
        .collect();
    let text: String = freqs.iter().map(|f| format!("{f}\n")).collect();
    fs::write(tmp.path().join("exp.lvl"), text).unwrap();
    let out = ok(
        tmp.path(),
        &[
            "unfold",
            "--area",
            "0.18285",
            "--perimeter",
            "2.023",
            "--sign",
            "minus",
            "--in",
            "exp.lvl",
        ],
    );
    let unfolded = levels(&out);
    assert_eq!(unfolded.len(), ks.len());
    for (u, k) in unfolded.iter().zip(&ks) {
        assert!((u - k).abs() < 1e-8, "{u} vs {k}");
    }
}

#[test]
fn crosscorr_values_lie_in_unit_interval() {
    let tmp = TempDir::new().unwrap();
    let mut rng = XorShift(99);
    let mut noise = String::from("freq_ghz,re_s12,im_s12,re_s21,im_s21\n");
    let mut reciprocal = noise.clone();
    for i in 0..1000 {
        let f = 2.0 + i as f64 * 0.005;
        let v: Vec<f64> = (0..4).map(|_| rng.uniform() - 0.5).collect();
        noise.push_str(&format!("{f},{},{},{},{}\n", v[0], v[1], v[2], v[3]));
        reciprocal.push_str(&format!("{f},{},{},{},{}\n", v[0], v[1], v[0], v[1]));
    }
    fs::write(tmp.path().join("noise.csv"), noise).unwrap();
    fs::write(tmp.path().join("recip.csv"), reciprocal).unwrap();

    let windows: Vec<serde_json::Value> = serde_json::from_str(&ok(
        tmp.path(),
        &["crosscorr", "--in", "noise.csv", "--window", "1.0"],
    ))
    .unwrap();
    assert_eq!(windows.len(), 5);
    for w in &windows {
        let c = w["coefficient"].as_f64().unwrap();
        assert!((-1.0..=1.0).contains(&c) && c.abs() < 0.3, "{c}");
    }
    let windows: Vec<serde_json::Value> =
        serde_json::from_str(&ok(tmp.path(), &["crosscorr", "--in", "recip.csv"])).unwrap();
    for w in &windows {
        assert!((w["coefficient"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn build_model_feeds_theory() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "build-model",
            "--xi",
            "0.35",
            "--n",
            "150",
            "--count",
            "20",
            "--out",
            "m.json",
        ],
    );
    let rows = curve(&ok(
        tmp.path(),
        &[
            "theory", "--xi", "0.35", "--phi", "0.81", "--curve", "ps", "--grid", "0:4:0.01",
            "--model", "m.json",
        ],
    ));
    let mass: f64 = rows.iter().map(|r| r.1 * 0.01).sum();
    assert!((mass - 1.0).abs() < 0.02, "{mass}");
    assert_eq!(
        code(
            tmp.path(),
            &[
                "theory", "--xi", "0.2", "--phi", "0.81", "--curve", "ps", "--grid", "0:4:0.1",
                "--model", "m.json"
            ]
        ),
        2
    );
}
