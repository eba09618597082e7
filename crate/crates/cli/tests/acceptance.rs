//! CLI acceptance: the end-to-end `synth -> eda -> train -> evaluate`
//! pipeline with byte-reproducible outputs, plus the exit-code contracts.
//! Run with `cargo test -p alertcast-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use chrono::Duration;
use tempfile::TempDir;

use alertcast_core::eval::{time_split, EvalReport, SplitSpec};
use alertcast_core::features::assemble_dataset;
use alertcast_core::forest::{fit_forest, predict_matrix, ForestParams};
use alertcast_core::ingest::{normalize_events, parse_events, StudyWindow};
use alertcast_core::timegrid::rasterize;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alertcast"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn assert_success(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed with {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("output dir exists") {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            files.insert(entry.file_name().into_string().unwrap(), fs::read(entry.path()).unwrap());
        }
    }
    files
}

const FIXTURE_CONFIG: &str = "window_start = \"2022-03-25T00:00\"\n\
                              window_end = \"2022-09-21T00:00\"\n\
                              split = \"2022-08-22T00:00\"\n";

/// One full pipeline run on the planted fixture into `dir/<label>`.
fn pipeline_run(dir: &Path, label: &str) -> BTreeMap<String, Vec<u8>> {
    let out = format!("{label}/out");
    let events = format!("{label}/events.csv");
    fs::create_dir_all(dir.join(label)).unwrap();
    fs::write(dir.join("config.toml"), FIXTURE_CONFIG).unwrap();

    let synth = run(&["synth", "--out", &events, "--seed", "42"], dir);
    assert_success(&synth, "synth");

    let common = ["--input", &events, "--out", &out, "--config", "config.toml"];
    let mut eda_args = vec!["eda"];
    eda_args.extend(common);
    eda_args.extend(["--ref-region", "Region 01"]);
    assert_success(&run(&eda_args, dir), "eda");

    let model_flags = [
        "--regions", "Region 02", "--horizons", "5,15", "--n-trees", "30", "--stride", "5",
        "--min-leaf", "50", "--seed", "9",
    ];
    let mut train_args = vec!["train"];
    train_args.extend(common);
    train_args.extend(model_flags);
    assert_success(&run(&train_args, dir), "train");

    let mut eval_args = vec!["evaluate"];
    eval_args.extend(common);
    eval_args.extend(model_flags);
    assert_success(&run(&eval_args, dir), "evaluate");

    let mut files = read_dir_bytes(&dir.join(&out));
    files.insert("events.csv".into(), fs::read(dir.join(&events)).unwrap());
    files
}

#[test]
fn criterion_8_end_to_end_byte_reproducible() {
    let started = Instant::now();
    let dir = TempDir::new().unwrap();

    let first = pipeline_run(dir.path(), "a");
    let expected: Vec<&str> = vec![
        "cooccurrence.csv", "cooccurrence.svg", "correlation.csv", "correlation.svg",
        "daily_median.csv", "daily_median.svg", "daily_total_box.csv", "daily_total_box.svg",
        "duration_box.csv", "duration_box.svg", "events.csv",
        "importance_Region_02_h15.csv", "importance_Region_02_h15.svg",
        "importance_Region_02_h5.csv", "importance_Region_02_h5.svg",
        "model_Region_02_h15.json", "model_Region_02_h5.json",
        "report_Region_02_h15.json", "report_Region_02_h5.json",
        "roc_Region_02_h15.csv", "roc_Region_02_h15.svg",
        "roc_Region_02_h5.csv", "roc_Region_02_h5.svg",
        "totals.csv", "totals.svg", "train.log",
    ];
    assert_eq!(first.keys().map(String::as_str).collect::<Vec<_>>(), expected);

    let second = pipeline_run(dir.path(), "b");
    assert_eq!(first.len(), second.len());
    for (name, bytes) in &first {
        assert_eq!(bytes, &second[name], "output {name} differs between identical runs");
    }

    for horizon in [5, 15] {
        let report: serde_json::Value =
            serde_json::from_slice(&first[&format!("report_Region_02_h{horizon}.json")]).unwrap();
        let auc = report["auc"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&auc), "H={horizon}: auc {auc}");
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "end-to-end took {elapsed:?}");
    println!("criterion 8 (synth -> eda -> train -> evaluate, byte-reproducible, {elapsed:?}): PASS");
}

#[test]
fn cli_results_match_in_process_pipeline() {
    let dir = TempDir::new().unwrap();
    let files = pipeline_run(dir.path(), "cli");
    let cli_report: EvalReport =
        serde_json::from_slice(&files["report_Region_02_h5.json"]).unwrap();

    let records = parse_events(files["events.csv"].as_slice()).unwrap();
    let origin = StudyWindow::default().origin();
    let window = StudyWindow::new(origin, origin + Duration::days(180)).unwrap();
    let (registry, events) = normalize_events(&records, &window).unwrap();
    let grid = rasterize(&events, &registry, &window).unwrap();
    let region = registry.id_of("Region 02").unwrap();
    let matrix = assemble_dataset(&grid, region, 5, 5).unwrap();
    let spec = SplitSpec { boundary: origin + Duration::days(150) };
    let (train, test) = time_split(&matrix, &spec).unwrap();
    let params = ForestParams {
        n_trees: 30,
        max_depth: None,
        min_samples_leaf: 50,
        mtry: None,
        bootstrap: true,
        seed: 9,
    };
    let model = fit_forest(&train, &params).unwrap();
    let scores = predict_matrix(&model, &test).unwrap();
    let in_process = EvalReport::compute(test.target(), &scores, 0.5).unwrap();

    // train + evaluate through model files must equal one in-process run
    assert_eq!(cli_report, in_process);
    println!("cli pipeline equals in-process pipeline (auc {:.6})", in_process.auc);
}

#[test]
fn four_regions_two_horizons_give_eight_models() {
    let dir = TempDir::new().unwrap();
    assert_success(&run(&["synth", "--out", "events.csv", "--days", "30", "--seed", "8"], dir.path()), "synth");
    fs::write(
        dir.path().join("config.toml"),
        "window_start = \"2022-03-25T00:00\"\n\
         window_end = \"2022-04-24T00:00\"\n\
         split = \"2022-04-17T00:00\"\n\
         target_regions = [\"Region 01\", \"Region 02\", \"Region 03\", \"Region 04\"]\n\
         horizons = [5, 15]\n\
         n_trees = 1\n\
         max_depth = 1\n\
         stride = 10\n",
    )
    .unwrap();
    let started = Instant::now();
    let output = run(
        &["train", "--input", "events.csv", "--out", "out", "--config", "config.toml"],
        dir.path(),
    );
    assert_success(&output, "train");
    let models: Vec<String> = read_dir_bytes(&dir.path().join("out"))
        .into_keys()
        .filter(|name| name.starts_with("model_"))
        .collect();
    assert_eq!(models.len(), 8, "models: {models:?}");
    // the single-stump smoke configuration finishes in seconds
    assert!(started.elapsed().as_secs() < 30, "smoke train took {:?}", started.elapsed());
}

#[test]
fn missing_input_exits_2() {
    let dir = TempDir::new().unwrap();
    let output = run(&["eda", "--input", "no_such_file.csv", "--out", "out"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn unknown_target_region_exits_2() {
    let dir = TempDir::new().unwrap();
    assert_success(&run(&["synth", "--out", "events.csv", "--days", "10", "--seed", "1"], dir.path()), "synth");
    fs::write(
        dir.path().join("config.toml"),
        "window_start = \"2022-03-25T00:00\"\nwindow_end = \"2022-04-04T00:00\"\nsplit = \"2022-04-02T00:00\"\n",
    )
    .unwrap();
    let output = run(
        &["train", "--input", "events.csv", "--out", "out", "--config", "config.toml", "--regions", "Atlantis"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("Atlantis"));
}

#[test]
fn single_class_target_exits_1_naming_region_and_horizon() {
    let dir = TempDir::new().unwrap();
    // region Always is on for the whole window, so every label is 1
    let mut csv_text = String::from("region,start,end\nAlways,2022-03-10T00:00,\n");
    for day in 0..10 {
        let start = 9 + day;
        csv_text.push_str(&format!("Other,2022-03-{start:02}T10:00,2022-03-{start:02}T11:00\n"));
    }
    fs::write(dir.path().join("events.csv"), &csv_text).unwrap();
    fs::write(
        dir.path().join("config.toml"),
        "window_start = \"2022-03-10T00:00\"\nwindow_end = \"2022-03-20T00:00\"\nsplit = \"2022-03-18T00:00\"\n",
    )
    .unwrap();
    let output = run(
        &[
            "train", "--input", "events.csv", "--out", "out", "--config", "config.toml",
            "--regions", "Always", "--horizons", "5", "--n-trees", "2",
        ],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("Always") && stderr.contains('5'), "stderr: {stderr}");
}

#[test]
fn corrupt_model_file_exits_1() {
    let dir = TempDir::new().unwrap();
    assert_success(&run(&["synth", "--out", "events.csv", "--days", "30", "--seed", "3"], dir.path()), "synth");
    fs::write(
        dir.path().join("config.toml"),
        "window_start = \"2022-03-25T00:00\"\nwindow_end = \"2022-04-24T00:00\"\nsplit = \"2022-04-17T00:00\"\n",
    )
    .unwrap();
    let flags = [
        "--input", "events.csv", "--out", "out", "--config", "config.toml", "--regions",
        "Region 02", "--horizons", "5", "--n-trees", "3", "--stride", "5",
    ];
    let mut train_args = vec!["train"];
    train_args.extend(flags);
    assert_success(&run(&train_args, dir.path()), "train");

    let model_path = dir.path().join("out/model_Region_02_h5.json");
    let tampered = fs::read_to_string(&model_path).unwrap().replace("\"Region 03\"", "\"Region XX\"");
    fs::write(&model_path, tampered).unwrap();

    let mut eval_args = vec!["evaluate"];
    eval_args.extend(flags);
    let output = run(&eval_args, dir.path());
    assert_eq!(output.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&output.stderr));

    // a missing model is an input problem instead
    fs::remove_file(&model_path).unwrap();
    let output = run(&eval_args, dir.path());
    assert_eq!(output.status.code(), Some(2));
}

/// Strictly periodic fixture: Alpha on for 60 of every 120 minutes, Beta the
/// same shifted 10 minutes later. Every feature pattern determines the label.
fn periodic_fixture(days: u32) -> String {
    let origin = StudyWindow::default().origin();
    let stamp = |minute: u32| {
        (origin + Duration::minutes(i64::from(minute)))
            .format(alertcast_core::ingest::TIMESTAMP_FORMAT)
            .to_string()
    };
    let mut csv_text = String::from("region,start,end\n");
    let total = days * 1440;
    let mut cycle = 0;
    while cycle < total {
        csv_text.push_str(&format!("Alpha,{},{}\n", stamp(cycle), stamp((cycle + 60).min(total))));
        if cycle + 10 < total {
            csv_text.push_str(&format!("Beta,{},{}\n", stamp(cycle + 10), stamp((cycle + 70).min(total))));
        }
        cycle += 120;
    }
    csv_text
}

#[test]
fn perfect_pattern_fixture_reaches_auc_one() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("events.csv"), periodic_fixture(30)).unwrap();
    fs::write(
        dir.path().join("config.toml"),
        "window_start = \"2022-03-25T00:00\"\nwindow_end = \"2022-04-24T00:00\"\nsplit = \"2022-04-18T00:00\"\n",
    )
    .unwrap();
    let flags = [
        "--input", "events.csv", "--out", "out", "--config", "config.toml", "--regions", "Beta",
        "--horizons", "5", "--n-trees", "25", "--min-leaf", "5", "--stride", "2", "--seed", "3",
    ];
    let mut train_args = vec!["train"];
    train_args.extend(flags);
    assert_success(&run(&train_args, dir.path()), "train");
    let mut eval_args = vec!["evaluate"];
    eval_args.extend(flags);
    assert_success(&run(&eval_args, dir.path()), "evaluate");

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/report_Beta_h5.json")).unwrap()).unwrap();
    let auc = report["auc"].as_f64().unwrap();
    assert_eq!(auc, 1.0, "separable periodic pattern should give AUC exactly 1");
}

#[test]
fn eda_tables_match_module_oracles() {
    let dir = TempDir::new().unwrap();
    let csv_text = "region,start,end\n\
                    B,2022-03-25T00:10,2022-03-25T00:20\n\
                    A,2022-03-25T00:00,2022-03-25T01:00\n\
                    A,2022-03-25T02:00,2022-03-25T02:30\n";
    fs::write(dir.path().join("events.csv"), csv_text).unwrap();
    fs::write(
        dir.path().join("config.toml"),
        "window_start = \"2022-03-25T00:00\"\nwindow_end = \"2022-03-26T00:00\"\n",
    )
    .unwrap();
    let output = run(
        &["eda", "--input", "events.csv", "--out", "out", "--config", "config.toml", "--ref-region", "A"],
        dir.path(),
    );
    assert_success(&output, "eda");

    let totals = fs::read_to_string(dir.path().join("out/totals.csv")).unwrap();
    assert_eq!(totals, "region,total_minutes\nA,90\nB,10\n");

    let cooccurrence = fs::read_to_string(dir.path().join("out/cooccurrence.csv")).unwrap();
    assert_eq!(cooccurrence, "region,minutes_with_A\nA,90\nB,10\n");

    // durations A: {60, 30} -> interpolated quartiles; B: single event
    let boxes = fs::read_to_string(dir.path().join("out/duration_box.csv")).unwrap();
    assert_eq!(
        boxes,
        "region,min,q1,median,q3,max,whisker_low,whisker_high,n_outliers\n\
         A,30,37.5,45,52.5,60,30,60,0\n\
         B,10,10,10,10,10,10,10,0\n"
    );

    let medians = fs::read_to_string(dir.path().join("out/daily_median.csv")).unwrap();
    assert_eq!(medians, "region,day,median_minutes\nA,2022-03-25,45\nB,2022-03-25,10\n");

    // correlation matches the in-process module output at the same precision
    let records = parse_events(csv_text.as_bytes()).unwrap();
    let origin = StudyWindow::default().origin();
    let window = StudyWindow::new(origin, origin + Duration::days(1)).unwrap();
    let (registry, events) = normalize_events(&records, &window).unwrap();
    let grid = rasterize(&events, &registry, &window).unwrap();
    let corr = alertcast_core::timegrid::binary_correlation_matrix(&grid);
    let expected = format!(
        "region,A,B\nA,{:.6},{:.6}\nB,{:.6},{:.6}\n",
        corr.get(0, 0),
        corr.get(0, 1),
        corr.get(1, 0),
        corr.get(1, 1)
    );
    let correlation = fs::read_to_string(dir.path().join("out/correlation.csv")).unwrap();
    assert_eq!(correlation, expected);
}
