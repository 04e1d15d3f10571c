use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_infoflow");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn write_three_sectors(dir: &Path) -> PathBuf {
    use infoflow::synth::{generate_dataset, star, SyntheticDataset};
    let path = dir.join("three.csv");
    let ds = generate_dataset(&SyntheticDataset::new(3, 200, star(3, 1, 0.6), 8)).unwrap();
    infoflow::timeseries::write_dataset(&ds, fs::File::create(&path).unwrap()).unwrap();
    path
}

#[test]
fn missing_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["stats", "--input", "/no/such/file.csv", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("input not found"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn turmoil_without_dates_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("synthetic28.csv");
    let o = run(&[
        "msa",
        "--input",
        input.to_str().unwrap(),
        "--mode",
        "turmoil",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: config error"));
    assert!(listing(dir.path()).is_empty());
}

#[test]
fn bad_q_and_stray_crash_dates_are_config_errors() {
    let input = data("synthetic28.csv");
    let input = input.to_str().unwrap();
    assert_eq!(run(&["msa", "--input", input, "--q", "1"]).status.code(), Some(2));
    let o = run(&["msa", "--input", input, "--crash-start", "2001-01-02"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "date,801010\n2001-01-02,100\n2001-01-03,-5\n").unwrap();
    let o = run(&["stats", "--input", bad.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr(&o).trim_end().lines().count(), 1);
}

#[test]
fn stats_emits_one_row_per_sector() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_three_sectors(dir.path());
    let out = dir.path().join("out");
    let o = run(&["stats", "--input", input.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("stats.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("Symbol,Sector,Code,N,Mean"));
    assert!(lines[1].starts_with("010,"));
}

#[test]
fn whole_mode_writes_two_json_and_two_dot() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("synthetic28.csv");
    let o = run(&[
        "msa",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "json,dot",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        listing(dir.path()),
        ["msa_whole_in.dot", "msa_whole_in.json", "msa_whole_out.dot", "msa_whole_out.json"]
    );
}

#[test]
fn whole_mode_matches_golden_snapshot() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/whole");
    let dir = tempfile::tempdir().unwrap();
    let input = data("synthetic28.csv");
    let names = data("synthetic28_names.csv");
    let o = run(&[
        "msa",
        "--input",
        input.to_str().unwrap(),
        "--names",
        names.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    if std::env::var_os("INFOFLOW_BLESS").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for name in listing(dir.path()) {
            fs::copy(dir.path().join(&name), golden.join(&name)).unwrap();
        }
    }
    assert_eq!(listing(dir.path()), listing(&golden));
    for name in listing(&golden) {
        let got = fs::read(dir.path().join(&name)).unwrap();
        let want = fs::read(golden.join(&name)).unwrap();
        assert!(got == want, "{name} differs from snapshot");
    }
}

#[test]
fn config_file_is_used_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_three_sectors(dir.path());
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "input = {:?}\nformat = \"json\"\norientation = \"in\"\nout-dir = {:?}\n",
            input.to_str().unwrap(),
            dir.path().join("from_file").to_str().unwrap()
        ),
    )
    .unwrap();
    let o = run(&["msa", "--config", config.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(listing(&dir.path().join("from_file")), ["msa_whole_in.json"]);

    let flag_dir = dir.path().join("from_flag");
    let o = run(&[
        "msa",
        "--config",
        config.to_str().unwrap(),
        "--orientation",
        "out",
        "--out-dir",
        flag_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(listing(&flag_dir), ["msa_whole_out.json"]);
}

#[test]
fn specificity_requires_index_and_seed() {
    let input = data("synthetic28.csv");
    let input = input.to_str().unwrap();
    assert_eq!(run(&["specificity", "--input", input, "--seed", "1"]).status.code(), Some(2));
    let o = run(&["specificity", "--input", input, "--index", input]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn specificity_is_reproducible_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("synthetic28.csv");
    let index = dir.path().join("index.csv");
    let text = fs::read_to_string(&input).unwrap();
    let column: String = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            format!("{},{}\n", f[0], if f[0] == "date" { "IDX" } else { f[3] })
        })
        .collect();
    fs::write(&index, column).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = run(&[
            "specificity",
            "--input",
            input.to_str().unwrap(),
            "--index",
            index.to_str().unwrap(),
            "--seed",
            "42",
            "--samples",
            "5",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((
            fs::read(out.join("specificity.csv")).unwrap(),
            fs::read(out.join("specificity.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("control,")).count(), 15);
}

#[test]
fn synth_writes_a_loadable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("star.csv");
    let o = run(&[
        "synth", "--out", out.to_str().unwrap(), "--sectors", "4", "--length", "50", "--hub", "2",
        "--coupling", "0.7", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ds = infoflow::timeseries::load_dataset(&out).unwrap();
    assert_eq!(ds.series.len(), 4);
    assert_eq!(ds.dates().len(), 51);
    let o = run(&["synth", "--out", out.to_str().unwrap(), "--sectors", "4", "--hub", "4"]);
    assert_eq!(o.status.code(), Some(2));
}
