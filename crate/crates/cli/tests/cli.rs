use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn featgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featgen")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// 400 rows with `y = a*b + c` plus a categorical column, deterministic.
fn write_data(dir: &Path) -> PathBuf {
    let path = dir.join("data.csv");
    let mut text = String::from("a,b,c,city,y\n");
    let mut state = 12345u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..400 {
        let (a, b, c) = (next() * 2.0 - 1.0, next() * 2.0 - 1.0, next());
        let city = ["north", "south", "east"][(next() * 3.0) as usize];
        text.push_str(&format!("{a},{b},{c},{city},{}\n", a * b + c));
    }
    fs::write(&path, text).unwrap();
    path
}

/// Feature records of a spec file: the non-comment lines before `#stats`.
fn spec_records(spec: &str) -> usize {
    spec.lines().take_while(|l| *l != "#stats").filter(|l| !l.starts_with('#')).count()
}

fn generate(data: &Path, out: &Path) -> Output {
    featgen(&[
        "generate",
        "--input",
        data.to_str().unwrap(),
        "--target",
        "y",
        "--out",
        out.to_str().unwrap(),
        "--top-k",
        "3",
        "--seed",
        "3",
    ])
}

#[test]
fn generate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let (o1, o2) = (dir.path().join("r1"), dir.path().join("r2"));
    let first = generate(&data, &o1);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(generate(&data, &o2).status.success());
    let s1 = fs::read(o1.join("transforms.spec")).unwrap();
    assert_eq!(s1, fs::read(o2.join("transforms.spec")).unwrap());
    assert!(o1.join("report.txt").exists());
    assert!(String::from_utf8(s1).unwrap().starts_with("#config_hash="));
}

#[test]
fn apply_appends_spec_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = dir.path().join("run");
    assert!(generate(&data, &out).status.success());
    let spec = out.join("transforms.spec");
    let target = dir.path().join("applied.csv");
    let o = featgen(&[
        "apply",
        "--spec",
        spec.to_str().unwrap(),
        "--input",
        data.to_str().unwrap(),
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let original = fs::read_to_string(&data).unwrap();
    let applied = fs::read_to_string(&target).unwrap();
    let n_new = spec_records(&fs::read_to_string(&spec).unwrap());
    let mut reader = csv::Reader::from_path(&target).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(applied.lines().count(), original.lines().count());
    assert_eq!(header.len(), 5 + n_new);
    assert_eq!(&header[..5], &["a", "b", "c", "city", "y"]);
    for (o, a) in original.lines().zip(applied.lines()).skip(1) {
        assert!(a.starts_with(o));
    }
}

#[test]
fn apply_with_missing_column_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = dir.path().join("run");
    assert!(generate(&data, &out).status.success());
    let narrow = dir.path().join("narrow.csv");
    fs::write(&narrow, "c,city\n0.5,north\n").unwrap();
    let spec = out.join("transforms.spec");
    let o = featgen(&[
        "apply",
        "--spec",
        spec.to_str().unwrap(),
        "--input",
        narrow.to_str().unwrap(),
        "--output",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("missing base columns"), "{err}");
    assert!(err.contains('a') && err.contains('b'), "{err}");
}

#[test]
fn empty_spec_leaves_input_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("empty.spec");
    fs::write(&spec, "#config_hash=0\n#seed=0\n#dataset_fingerprint=0\n#mode=TrainFit\n#fit_rows=0\n#stats\n")
        .unwrap();
    let input = dir.path().join("in.csv");
    fs::write(&input, "p,q\n1,x\n2.5,y\n").unwrap();
    let output = dir.path().join("out.csv");
    let o = featgen(&[
        "apply",
        "--spec",
        spec.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&input).unwrap(), fs::read(&output).unwrap());
}

#[test]
fn missing_target_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let o = featgen(&["generate", "--input", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("target"));

    let o = featgen(&["generate", "--input", data.to_str().unwrap(), "--target", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("target"));
}

#[test]
fn bad_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let d = data.to_str().unwrap();
    for extra in [["--blocks", "3"], ["--mode", "sideways"], ["--operators", "frobnicate"]] {
        let mut args = vec!["generate", "--input", d, "--target", "y"];
        args.extend(extra);
        assert_eq!(featgen(&args).status.code(), Some(2), "{extra:?}");
    }
}

#[test]
fn unreadable_input_is_a_data_error() {
    let o = featgen(&["generate", "--input", "/nonexistent/data.csv", "--target", "y"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = dir.path().join("cfg_out");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("# run\ninput={}\ntarget=y\nout={}\ntop_k=2\nseed=3\n", data.display(), out.display()))
        .unwrap();
    let o = featgen(&["generate", "--config", cfg.to_str().unwrap(), "--top-k", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let spec = fs::read_to_string(out.join("transforms.spec")).unwrap();
    assert!(spec_records(&spec) <= 1);

    fs::write(&cfg, "colour=blue\n").unwrap();
    let o = featgen(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_prints_summary_and_dumps_data() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("sim");
    let o = featgen(&[
        "simulate",
        "--scenario",
        "bernoulli",
        "--k1",
        "200",
        "--k2",
        "50",
        "--h",
        "5",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,k1,k2,h,raw_mse,augmented_mse,floor");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..4], &["bernoulli", "200", "50", "5"]);
    assert_eq!(fields[6], "0.046875");
    assert!(fields[4].parse::<f64>().unwrap() >= 0.0);
    let train = fs::read_to_string(dump.join("train.csv")).unwrap();
    assert_eq!(train.lines().count(), 1 + 200 * 5);
    assert!(dump.join("test.csv").exists());
}

#[test]
fn simulate_gaussian_has_no_floor_and_unknown_scenario_fails() {
    let o = featgen(&["simulate", "--scenario", "gaussian", "--k1", "50", "--k2", "20", "--h", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().lines().nth(1).unwrap().ends_with(",NA"));
    assert_eq!(featgen(&["simulate", "--scenario", "poisson"]).status.code(), Some(2));
}
