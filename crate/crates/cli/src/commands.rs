//! Subcommand implementations: `eda`, `train`, `evaluate`, `synth`.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chrono::NaiveDateTime;

use alertcast_core::eda::{daily_median_durations, daily_total_stats, duration_boxstats, event_durations, BoxStats};
use alertcast_core::eval::{time_split, EvalReport};
use alertcast_core::features::assemble_dataset;
use alertcast_core::forest::{feature_importance, fit_forest, predict_matrix, ForestModel};
use alertcast_core::ingest::{normalize_events, parse_events, RegionId, TIMESTAMP_FORMAT};
use alertcast_core::synth::{generate_synthetic, SynthSpec};
use alertcast_core::timegrid::{
    binary_correlation_matrix, cooccurrence_minutes, rasterize, total_alert_minutes, StatusGrid,
};

use crate::config::{PipelineArgs, RunConfig};
use crate::{chart, classify, runtime, usage, CliResult, SynthArgs};

fn slug(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(runtime)
}

fn ensure_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(runtime)
}

fn load_grid(cfg: &RunConfig) -> CliResult<StatusGrid> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| usage(anyhow!("no input CSV given (use --input or the config `input` key)")))?;
    let file = fs::File::open(input)
        .with_context(|| format!("cannot open input {}", input.display()))
        .map_err(usage)?;
    let records = parse_events(BufReader::new(file)).map_err(classify)?;
    let (registry, events) = normalize_events(&records, &cfg.window).map_err(classify)?;
    rasterize(&events, &registry, &cfg.window).map_err(classify)
}

fn region_id(grid: &StatusGrid, name: &str) -> CliResult<RegionId> {
    grid.regions().id_of(name).ok_or_else(|| {
        usage(anyhow!(
            "region `{name}` not present in the dataset (available: {})",
            grid.regions().names().join(", ")
        ))
    })
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let start = match &args.start {
        Some(text) => NaiveDateTime::parse_from_str(text, TIMESTAMP_FORMAT)
            .map_err(|_| usage(anyhow!("start `{text}` is not a timestamp like 2022-03-25T00:00")))?,
        None => SynthSpec::default().start,
    };
    let spec = SynthSpec {
        n_regions: args.n_regions,
        days: args.days,
        lead_region: args.lead_region,
        lag_region: args.lag_region,
        lag_minutes: args.lag_minutes,
        follow_prob: args.follow_prob,
        jitter: args.jitter,
        start,
    };
    let csv_text = generate_synthetic(args.seed, &spec).map_err(classify)?;
    write_file(&args.out, &csv_text)?;
    println!(
        "wrote {} ({} regions, {} days, lead {} -> lag {} after {} min, follow prob {}, seed {})",
        args.out.display(),
        spec.n_regions,
        spec.days,
        spec.region_name(spec.lead_region),
        spec.region_name(spec.lag_region),
        spec.lag_minutes,
        spec.follow_prob,
        args.seed
    );
    Ok(())
}

fn boxstats_csv(names: &[String], stats: &[BoxStats]) -> String {
    let mut text = String::from("region,min,q1,median,q3,max,whisker_low,whisker_high,n_outliers\n");
    for (name, s) in names.iter().zip(stats) {
        text.push_str(&format!(
            "{name},{},{},{},{},{},{},{},{}\n",
            s.min, s.q1, s.median, s.q3, s.max, s.whisker_low, s.whisker_high, s.n_outliers
        ));
    }
    text
}

pub fn cmd_eda(args: &PipelineArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args)?;
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| usage(anyhow!("no input CSV given (use --input or the config `input` key)")))?
        .clone();
    let file = fs::File::open(&input)
        .with_context(|| format!("cannot open input {}", input.display()))
        .map_err(usage)?;
    let records = parse_events(BufReader::new(file)).map_err(classify)?;
    let (registry, events) = normalize_events(&records, &cfg.window).map_err(classify)?;
    let grid = rasterize(&events, &registry, &cfg.window).map_err(classify)?;
    ensure_out_dir(&cfg.out)?;
    let names = registry.names().to_vec();
    let out = |name: &str| cfg.out.join(name);

    // total alert minutes per region
    let totals = total_alert_minutes(&grid);
    let mut csv_text = String::from("region,total_minutes\n");
    for (name, minutes) in names.iter().zip(&totals) {
        csv_text.push_str(&format!("{name},{minutes}\n"));
    }
    write_file(&out("totals.csv"), &csv_text)?;
    let total_values: Vec<Vec<f64>> = totals.iter().map(|&v| vec![v as f64]).collect();
    write_file(
        &out("totals.svg"),
        &chart::heatmap("Total alert minutes by region", &names, &["minutes".into()], &total_values),
    )?;

    // co-occurrence with the reference region
    let reference = region_id(&grid, &cfg.ref_region)?;
    let cooccurrence = cooccurrence_minutes(&grid, reference).map_err(classify)?;
    let ref_slug = slug(&cfg.ref_region);
    let mut csv_text = format!("region,minutes_with_{ref_slug}\n");
    for (name, minutes) in names.iter().zip(&cooccurrence) {
        csv_text.push_str(&format!("{name},{minutes}\n"));
    }
    write_file(&out("cooccurrence.csv"), &csv_text)?;
    let co_values: Vec<Vec<f64>> = cooccurrence.iter().map(|&v| vec![v as f64]).collect();
    write_file(
        &out("cooccurrence.svg"),
        &chart::heatmap(
            &format!("Alert minutes simultaneous with {}", cfg.ref_region),
            &names,
            &["minutes".into()],
            &co_values,
        ),
    )?;

    // daily median alert durations
    let medians = daily_median_durations(&events, &registry, &cfg.window);
    let mut csv_text = String::from("region,day,median_minutes\n");
    for (name, series) in names.iter().zip(&medians) {
        for point in series {
            csv_text.push_str(&format!("{name},{},{}\n", point.day, point.value));
        }
    }
    write_file(&out("daily_median.csv"), &csv_text)?;
    let origin_date = cfg.window.origin().date();
    let median_series: Vec<(String, Vec<(f64, f64)>)> = names
        .iter()
        .zip(&medians)
        .map(|(name, series)| {
            let points = series
                .iter()
                .map(|p| ((p.day - origin_date).num_days() as f64, p.value))
                .collect();
            (name.clone(), points)
        })
        .collect();
    write_file(
        &out("daily_median.svg"),
        &chart::lines(
            "Daily median alert duration by region",
            "days since window start",
            "median minutes",
            &median_series,
        ),
    )?;

    // per-event duration boxplots
    let durations = event_durations(&events, &registry);
    let duration_stats: Vec<BoxStats> = durations
        .iter()
        .map(|list| {
            let values: Vec<f64> = list.iter().map(|&v| f64::from(v)).collect();
            duration_boxstats(&values).map_err(classify)
        })
        .collect::<CliResult<_>>()?;
    write_file(&out("duration_box.csv"), &boxstats_csv(&names, &duration_stats))?;
    write_file(
        &out("duration_box.svg"),
        &chart::boxplots("Alert duration by region (minutes)", &names, &duration_stats),
    )?;

    // per-day total boxplots
    let day_stats = daily_total_stats(&grid);
    write_file(&out("daily_total_box.csv"), &boxstats_csv(&names, &day_stats))?;
    write_file(
        &out("daily_total_box.svg"),
        &chart::boxplots("Total alert minutes per day by region", &names, &day_stats),
    )?;

    // binary correlation heatmap
    let correlation = binary_correlation_matrix(&grid);
    let mut csv_text = format!("region,{}\n", names.join(","));
    let mut corr_values = Vec::with_capacity(names.len());
    for (i, name) in names.iter().enumerate() {
        let row: Vec<f64> = (0..names.len()).map(|j| correlation.get(i, j)).collect();
        let cells: Vec<String> = row
            .iter()
            .map(|v| if v.is_nan() { String::new() } else { format!("{v:.6}") })
            .collect();
        csv_text.push_str(&format!("{name},{}\n", cells.join(",")));
        corr_values.push(row);
    }
    write_file(&out("correlation.csv"), &csv_text)?;
    write_file(
        &out("correlation.svg"),
        &chart::heatmap("Correlation of binary alert series", &names, &names, &corr_values),
    )?;

    println!(
        "eda: {} regions, {} events, {} minutes -> 6 tables + 6 charts in {}",
        names.len(),
        events.len(),
        grid.n_minutes(),
        cfg.out.display()
    );
    Ok(())
}

fn model_path(out: &Path, region: &str, horizon: u32) -> PathBuf {
    out.join(format!("model_{}_h{horizon}.json", slug(region)))
}

pub fn cmd_train(args: &PipelineArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args)?;
    let grid = load_grid(&cfg)?;
    ensure_out_dir(&cfg.out)?;

    let mut log = String::new();
    for region_name in &cfg.target_regions {
        let region = region_id(&grid, region_name)?;
        for &horizon in &cfg.horizons {
            let matrix = assemble_dataset(&grid, region, horizon, cfg.stride).map_err(classify)?;
            let (train, _) = time_split(&matrix, &cfg.split).map_err(classify)?;
            let positives = train.target().iter().filter(|&&t| t == 1).count();
            let model = fit_forest(&train, &cfg.forest).map_err(|e| {
                runtime(anyhow!("training {region_name} at horizon {horizon}: {e}"))
            })?;
            write_file(&model_path(&cfg.out, region_name, horizon), &model.to_json())?;

            let importance = feature_importance(&model);
            let mut ranked: Vec<usize> = (0..importance.len()).collect();
            ranked.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
            let mut csv_text = String::from("feature,importance\n");
            for &column in &ranked {
                csv_text.push_str(&format!("{},{:.6}\n", model.column_names()[column], importance[column]));
            }
            write_file(&cfg.out.join(format!("importance_{}_h{horizon}.csv", slug(region_name))), &csv_text)?;

            let line = format!(
                "trained region={region_name} horizon={horizon} rows={} positives={positives} trees={} min_leaf={} stride={} seed={}",
                train.n_rows(),
                cfg.forest.n_trees,
                cfg.forest.min_samples_leaf,
                cfg.stride,
                cfg.seed
            );
            println!("{line}");
            log.push_str(&line);
            log.push('\n');
        }
    }
    write_file(&cfg.out.join("train.log"), &log)?;
    Ok(())
}

pub fn cmd_evaluate(args: &PipelineArgs) -> CliResult<()> {
    let cfg = RunConfig::resolve(args)?;
    let grid = load_grid(&cfg)?;
    ensure_out_dir(&cfg.out)?;

    for region_name in &cfg.target_regions {
        let region = region_id(&grid, region_name)?;
        for &horizon in &cfg.horizons {
            let path = model_path(&cfg.out, region_name, horizon);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("model {} not found (run `alertcast train` first)", path.display()))
                .map_err(usage)?;
            let model = ForestModel::from_json(&text)
                .map_err(|e| runtime(anyhow!("model {}: {e}", path.display())))?;

            let matrix = assemble_dataset(&grid, region, horizon, cfg.stride).map_err(classify)?;
            let (_, test) = time_split(&matrix, &cfg.split).map_err(classify)?;
            let scores = predict_matrix(&model, &test)
                .map_err(|e| runtime(anyhow!("model {} does not match the dataset: {e}", path.display())))?;
            let report = EvalReport::compute(test.target(), &scores, 0.5)
                .map_err(|e| runtime(anyhow!("evaluating {region_name} at horizon {horizon}: {e}")))?;

            let region_slug = slug(region_name);
            write_file(&cfg.out.join(format!("report_{region_slug}_h{horizon}.json")), &report.to_json())?;

            let mut roc_text = String::from("fpr,tpr\n");
            for (fpr, tpr) in &report.roc {
                roc_text.push_str(&format!("{fpr},{tpr}\n"));
            }
            write_file(&cfg.out.join(format!("roc_{region_slug}_h{horizon}.csv")), &roc_text)?;
            write_file(
                &cfg.out.join(format!("roc_{region_slug}_h{horizon}.svg")),
                &chart::roc(&format!("ROC: {region_name}, horizon {horizon} min"), &report.roc, report.auc),
            )?;

            let importance = feature_importance(&model);
            let mut ranked: Vec<usize> = (0..importance.len()).collect();
            ranked.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
            let labels: Vec<String> = ranked.iter().map(|&c| model.column_names()[c].clone()).collect();
            let values: Vec<f64> = ranked.iter().map(|&c| importance[c]).collect();
            write_file(
                &cfg.out.join(format!("importance_{region_slug}_h{horizon}.svg")),
                &chart::hbar(
                    &format!("Feature importance: {region_name}, horizon {horizon} min"),
                    &labels,
                    &values,
                ),
            )?;

            println!(
                "evaluated region={region_name} horizon={horizon} rows={} auc={:.4} accuracy={:.4}",
                test.n_rows(),
                report.auc,
                report.accuracy
            );
        }
    }
    Ok(())
}
