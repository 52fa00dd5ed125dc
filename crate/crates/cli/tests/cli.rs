use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_market-frag"))
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args);
    if let Some(t) = threads {
        c.env("MARKET_FRAG_THREADS", t);
    }
    c.output().expect("binary runs")
}

const SMALL: &str = r#"
seed = 3
markets = [0.3, 0.35, 0.7]

[[classes]]
p_buy = 0.8
inv_beta = 0.21
count = 300

[[classes]]
p_buy = 0.2
inv_beta = 0.21
count = 300

[simulate]
max_rounds = 1500
window = 300
bins = 40
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_string(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn count_three_markets_two_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("count");
    let o = run(&["count", "-M", "3", "-C", "2", "-o", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let patterns = fs::read_to_string(out.join("patterns.csv")).unwrap();
    assert_eq!(
        patterns,
        "markets,classes,eta,groups,disjoint_possible\n3,2,3 2,5,false\n3,2,2 3,5,false\n"
    );
    let summary = fs::read_to_string(out.join("count_summary.csv")).unwrap();
    assert!(summary.contains("3,2,5,Overdetermined,true"), "{summary}");
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"complete\""));
}

#[test]
fn simulate_writes_histograms_and_heat_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("sim");
    let o = run(&["simulate", "-c", &cfg, "-o", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["histogram_class1.csv", "histogram_class2.csv", "heatmap_class1.svg", "heatmap_class2.svg", "peaks.csv", "series.csv", "manifest.toml"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let series = fs::read_to_string(out.join("series.csv")).unwrap();
    assert!(series.starts_with("round,t,f_1,f_2,f_3,share_1,share_2,share_3\n"));
}

#[test]
fn same_seed_gives_identical_tables_for_any_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (d, threads) in dirs.iter().zip([Some("1"), Some("1"), Some("3")]) {
        let o = run(&["simulate", "-c", &cfg, "-o", d.to_str().unwrap()], threads);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = csv_files(&dirs[0]);
    assert!(!a.is_empty());
    assert_eq!(a, csv_files(&dirs[1]));
    assert_eq!(a, csv_files(&dirs[2]));
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let first = tmp.path().join("first");
    assert!(run(&["simulate", "-c", &cfg, "-o", first.to_str().unwrap(), "--seed", "11"], None).status.success());
    // the manifest embeds the full configuration under [config]
    let manifest = fs::read_to_string(first.join("manifest.toml")).unwrap();
    let table: toml::Table = toml::from_str(&manifest).unwrap();
    let mut config = table["config"].as_table().unwrap().clone();
    assert_eq!(config["seed"].as_integer(), Some(11));
    let second = tmp.path().join("second");
    config.insert("output".into(), toml::Value::String(second.to_str().unwrap().into()));
    let replay = write_config(tmp.path(), "replay.toml", &toml::to_string(&config).unwrap());
    assert!(run(&["simulate", "-c", &replay], None).status.success());
    assert_eq!(csv_files(&first), csv_files(&second));
}

#[test]
fn invalid_theta_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &SMALL.replace("0.35", "1.2"));
    let o = run(&["simulate", "-c", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta out of [0,1]"));
}

#[test]
fn unknown_key_and_syntax_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.toml", &format!("{SMALL}\n[flow]\narrows = 3\n"));
    let o = run(&["flow", "-c", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("arrows"));
    let cfg = write_config(tmp.path(), "broken.toml", "markets = [0.3,\n");
    let o = run(&["flow", "-c", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
}

#[test]
fn missing_config_is_an_io_error() {
    let o = run(&["phase", "-c", "/nonexistent/run.toml"], None);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bad_thread_count() {
    let o = run(&["count", "-M", "3", "-C", "2", "-o", "/tmp"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn incompatible_config_leaves_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let two = SMALL.replace("[0.3, 0.35, 0.7]", "[0.3, 0.7]");
    let cfg = write_config(tmp.path(), "two.toml", &two);
    let out = tmp.path().join("flow");
    let o = run(&["flow", "-c", &cfg, "-o", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"partial\""), "{manifest}");
}

#[test]
fn flow_on_fair_markets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "fair.toml",
        &SMALL.replace("[0.3, 0.35, 0.7]", "[0.5, 0.5, 0.5]").replace("0.21", "0.22"),
    );
    let out = tmp.path().join("flow");
    let o = run(&["flow", "-c", &cfg, "-o", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let points = fs::read_to_string(out.join("fixed_points.csv")).unwrap();
    // beyond beta_c'': three outer attractors per class and an unstable centre
    let class1: Vec<&str> = points.lines().filter(|l| l.starts_with("1,")).collect();
    assert_eq!(class1.iter().filter(|l| l.contains(",stable,")).count(), 3, "{points}");
    assert_eq!(class1.iter().filter(|l| l.contains(",unstable,")).count(), 1, "{points}");
    assert!(out.join("flow_class1.svg").exists());
}
