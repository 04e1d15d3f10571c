//! Command-line front end.
//!
//! Every analysis subcommand shares one set of flags, optionally pre-filled
//! from a TOML file given with `--config` (flags win). Output files are
//! written to a temporary name and renamed into place.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    degree_heatmap, root_occurrences, run_pipeline, specificity_study, turmoil_study,
    yearly_reports, DegreeKind, PartitionMode, PipelineConfig, PipelineResult, YearlyStudy,
    DURING_WINDOW_DEFINITION,
};
use crate::arborescence::{self, Orientation};
use crate::entropy::{Estimator, TeOptions};
use crate::error::{Error, Result};
use crate::symbolize::DEFAULT_Q;
use crate::synth::{bundled_spec, generate_dataset, star, SyntheticDataset};
use crate::timeseries::{
    load_dataset, load_sector_names, slice, summary_stats, write_dataset, Dataset,
    DateInterval,
};

const MISSING_DATA_POLICY: &str = "rows with a missing price in any sector are dropped for all sectors";

#[derive(Debug, Parser)]
#[command(name = "infoflow", version, about = "Transfer-entropy information-flow networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summary statistics of each sector's log returns.
    Stats(RunArgs),
    /// Maximum spanning arborescences for the whole sample, a date range,
    /// each calendar year, or the windows around a crash.
    Msa(RunArgs),
    /// Transfer-entropy and DAI matrices and the full information-flow network.
    Network(RunArgs),
    /// Correlation of yearly root sectors with an index, against random non-roots.
    Specificity(RunArgs),
    /// Write a synthetic wide-format price file.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Whole,
    Yearly,
    Range,
    Turmoil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationArg {
    Out,
    In,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Consistent,
    AllSampleMarginals,
}

/// Flags shared by the analysis subcommands; every field may also come from `--config`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunArgs {
    /// TOML file with any of these options; explicit flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Wide-format price CSV (`date,<code1>,<code2>,...`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Optional `code,name` sector metadata CSV.
    #[arg(long)]
    pub names: Option<PathBuf>,
    /// Index price CSV (`date,<index>`), for `specificity`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Number of equal-width bins.
    #[arg(long)]
    pub q: Option<usize>,
    /// Window mode (default whole).
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// First date of a `range` window (YYYY-MM-DD).
    #[arg(long)]
    pub from: Option<NaiveDate>,
    /// Last date of a `range` window, inclusive.
    #[arg(long)]
    pub to: Option<NaiveDate>,
    /// First day of the crash, for `turmoil`.
    #[arg(long)]
    pub crash_start: Option<NaiveDate>,
    /// Last day of the crash, inclusive.
    #[arg(long)]
    pub crash_end: Option<NaiveDate>,
    /// Arborescence orientation(s) to emit (default both).
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationArg>,
    /// Seed for control sampling; required by `specificity`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Control draws per year for `specificity`.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output directory (default: current directory).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated subset of csv,json,dot.
    #[arg(long)]
    pub format: Option<String>,
    /// Marginal denominators of the TE estimator (default consistent).
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Reuse whole-sample bin ranges for every window.
    #[arg(long)]
    #[serde(default)]
    pub global_partition: bool,
    /// Round table values to display precision.
    #[arg(long)]
    #[serde(default)]
    pub report: bool,
    /// Worker threads for pairwise estimation (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    /// Fills unset fields from `file`.
    fn merge(self, file: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            input: self.input.or(file.input),
            names: self.names.or(file.names),
            index: self.index.or(file.index),
            q: self.q.or(file.q),
            mode: self.mode.or(file.mode),
            from: self.from.or(file.from),
            to: self.to.or(file.to),
            crash_start: self.crash_start.or(file.crash_start),
            crash_end: self.crash_end.or(file.crash_end),
            orientation: self.orientation.or(file.orientation),
            seed: self.seed.or(file.seed),
            samples: self.samples.or(file.samples),
            out_dir: self.out_dir.or(file.out_dir),
            format: self.format.or(file.format),
            estimator: self.estimator.or(file.estimator),
            global_partition: self.global_partition || file.global_partition,
            report: self.report || file.report,
            threads: self.threads.or(file.threads),
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Destination CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a `code,name` sector metadata CSV here.
    #[arg(long)]
    pub names_out: Option<PathBuf>,
    /// The bundled 28-sector, three-year demo dataset (other flags ignored).
    #[arg(long)]
    pub bundled: bool,
    #[arg(long, default_value_t = 6)]
    pub sectors: usize,
    /// Number of daily returns.
    #[arg(long, default_value_t = 1000)]
    pub length: usize,
    /// Index of the hub sector of a planted star coupling.
    #[arg(long, default_value_t = 0)]
    pub hub: usize,
    #[arg(long, default_value_t = 0.0)]
    pub coupling: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub dot: bool,
}

impl Formats {
    fn parse(raw: &str) -> Result<Self> {
        let mut f = Formats {
            csv: false,
            json: false,
            dot: false,
        };
        for part in raw.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "dot" => f.dot = true,
                other => return Err(Error::Config(format!("unknown output format {other:?}"))),
            }
        }
        if !(f.csv || f.json || f.dot) {
            return Err(Error::Config("no output format selected".into()));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    Whole,
    Yearly,
    Range(DateInterval),
    Turmoil { start: NaiveDate, end: NaiveDate },
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub names: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub mode: WindowMode,
    pub orientations: Vec<Orientation>,
    pub seed: Option<u64>,
    pub samples: usize,
    pub out_dir: PathBuf,
    pub formats: Formats,
    pub pipeline: PipelineConfig,
    pub report: bool,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: RunArgs) -> Result<Self> {
        let args = match &args.config {
            Some(path) => {
                if !path.exists() {
                    return Err(Error::InputNotFound(path.clone()));
                }
                let text = fs::read_to_string(path)?;
                let file: RunArgs =
                    toml::from_str(&text).map_err(|e| Error::Config(e.to_string().replace('\n', " ")))?;
                args.merge(file)
            }
            None => args,
        };
        let input = args
            .input
            .ok_or_else(|| Error::Config("--input is required".into()))?;
        let q = args.q.unwrap_or(DEFAULT_Q);
        if q < 2 {
            return Err(Error::Config(format!("--q must be at least 2, got {q}")));
        }
        let mode = args.mode.unwrap_or(Mode::Whole);
        let has_crash = args.crash_start.is_some() || args.crash_end.is_some();
        if has_crash && mode != Mode::Turmoil {
            return Err(Error::Config(
                "--crash-start/--crash-end are only valid with --mode turmoil".into(),
            ));
        }
        let mode = match mode {
            Mode::Whole => WindowMode::Whole,
            Mode::Yearly => WindowMode::Yearly,
            Mode::Range => match (args.from, args.to) {
                (Some(from), Some(to)) => WindowMode::Range(
                    DateInterval::new(from, to).map_err(|e| Error::Config(e.to_string()))?,
                ),
                _ => return Err(Error::Config("range mode needs --from and --to".into())),
            },
            Mode::Turmoil => match (args.crash_start, args.crash_end) {
                (Some(start), Some(end)) if start <= end => WindowMode::Turmoil { start, end },
                (Some(_), Some(_)) => {
                    return Err(Error::Config("--crash-end precedes --crash-start".into()))
                }
                _ => {
                    return Err(Error::Config(
                        "turmoil mode needs --crash-start and --crash-end".into(),
                    ))
                }
            },
        };
        let orientations = match args.orientation.unwrap_or(OrientationArg::Both) {
            OrientationArg::Out => vec![Orientation::Outgoing],
            OrientationArg::In => vec![Orientation::Incoming],
            OrientationArg::Both => vec![Orientation::Outgoing, Orientation::Incoming],
        };
        let estimator = match args.estimator.unwrap_or(EstimatorArg::Consistent) {
            EstimatorArg::Consistent => Estimator::Consistent,
            EstimatorArg::AllSampleMarginals => Estimator::AllSampleMarginals,
        };
        let samples = args.samples.unwrap_or(1);
        if samples == 0 {
            return Err(Error::Config("--samples must be at least 1".into()));
        }
        if args.threads == Some(0) {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        Ok(RunConfig {
            input,
            names: args.names,
            index: args.index,
            mode,
            orientations,
            seed: args.seed,
            samples,
            out_dir: args.out_dir.unwrap_or_else(|| PathBuf::from(".")),
            formats: Formats::parse(args.format.as_deref().unwrap_or("csv,json,dot"))?,
            pipeline: PipelineConfig {
                q,
                te: TeOptions {
                    estimator,
                    surrogates: None,
                },
                partition: if args.global_partition {
                    PartitionMode::Global
                } else {
                    PartitionMode::WindowLocal
                },
            },
            report: args.report,
            threads: args.threads,
        })
    }

    fn metadata(&self, dataset: &Dataset) -> Value {
        json!({
            "q": self.pipeline.q,
            "estimator": self.pipeline.te.estimator,
            "partition": self.pipeline.partition,
            "missing_data_policy": MISSING_DATA_POLICY,
            "dropped_rows": dataset.dropped_rows,
            "sectors": dataset.series.len(),
            "first_date": dataset.dates()[0],
            "last_date": dataset.dates()[dataset.dates().len() - 1],
        })
    }
}

/// Collects output files; each is written to a temporary name, then renamed.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &target)?;
        self.written.push(target);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

fn warn(message: &str) {
    eprintln!("warning: {message}");
}

fn load(config: &RunConfig) -> Result<Dataset> {
    let mut dataset = load_dataset(&config.input)?;
    if dataset.dropped_rows > 0 {
        warn(&format!("dropped {} rows with missing prices", dataset.dropped_rows));
    }
    if let Some(path) = &config.names {
        dataset.apply_names(&load_sector_names(path)?);
    }
    Ok(dataset)
}

fn arborescence_json(result: &PipelineResult, o: Orientation, metadata: &Value) -> Result<Value> {
    let mut doc: Value = serde_json::from_str(&arborescence::to_json(
        result.arborescence(o),
        result.path(o),
    )?)?;
    doc["metadata"] = metadata.clone();
    Ok(doc)
}

fn write_msa_files(
    out: &mut Outputs,
    config: &RunConfig,
    tag: &str,
    result: &PipelineResult,
    metadata: &Value,
) -> Result<()> {
    for &o in &config.orientations {
        let stem = format!("msa_{tag}_{}", o.short());
        if config.formats.json {
            out.write_json(&format!("{stem}.json"), &arborescence_json(result, o, metadata)?)?;
        }
        if config.formats.dot {
            let dot = arborescence::to_dot(result.arborescence(o), result.path(o));
            out.write(&format!("{stem}.dot"), dot.as_bytes())?;
        }
    }
    Ok(())
}

fn msa_summary_csv(config: &RunConfig, result: &PipelineResult, buf: &mut Vec<u8>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(buf);
    wtr.write_record([
        "orientation",
        "Root sector",
        "Maximal information flow path",
        "No. of sectors",
        "DAI (1e-2)",
        "arborescence_weight",
    ])?;
    for &o in &config.orientations {
        let path = result.path(o);
        let label = path
            .sectors
            .iter()
            .map(|s| s.short_code.as_str())
            .collect::<Vec<_>>()
            .join("->");
        let dai = if config.report {
            format!("{:.2}", path.total_weight * 100.0)
        } else {
            format!("{:?}", path.total_weight * 100.0)
        };
        wtr.write_record([
            o.short().to_owned(),
            result.arborescence(o).root_sector().short_code.clone(),
            label,
            path.length.to_string(),
            dai,
            format!("{:?}", result.arborescence(o).total_weight),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn window_returns(
    dataset: &Dataset,
    config: &RunConfig,
) -> Result<(Vec<crate::timeseries::ReturnSeries>, Option<DateInterval>)> {
    let returns = dataset.returns()?;
    match config.mode {
        WindowMode::Whole => Ok((returns, None)),
        WindowMode::Range(w) => Ok((
            returns.iter().map(|r| slice(r, w)).collect::<Result<Vec<_>>>()?,
            Some(w),
        )),
        _ => Err(Error::Config(
            "this command supports --mode whole or range only".into(),
        )),
    }
}

fn single_window(dataset: &Dataset, config: &RunConfig) -> Result<(PipelineResult, Value)> {
    let all = dataset.returns()?;
    let (returns, window) = window_returns(dataset, config)?;
    let partitions = match config.pipeline.partition {
        PartitionMode::Global => Some(crate::analysis::global_partitions(&all, config.pipeline.q)?),
        PartitionMode::WindowLocal => None,
    };
    let result = run_pipeline(&returns, &config.pipeline, partitions.as_deref())?;
    for t in &result.network.ties {
        warn(&format!(
            "zero DAI between {} and {}; no edge",
            result.network.nodes[t.a].code, result.network.nodes[t.b].code
        ));
    }
    let mut metadata = config.metadata(dataset);
    metadata["window"] = match window {
        None => json!({"from": returns[0].dates[0], "to": returns[0].dates[returns[0].len() - 1]}),
        Some(w) => json!({"from": w.from, "to": w.to}),
    };
    metadata["trading_days"] = json!(returns[0].len());
    Ok((result, metadata))
}

pub fn cmd_stats(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = load(config)?;
    let mut out = Outputs::new(&config.out_dir)?;
    let returns = dataset.returns()?;
    let stats = returns
        .iter()
        .map(|r| summary_stats(r).map(|s| (r, s)))
        .collect::<Result<Vec<_>>>()?;
    let report = config.report;
    out.write_csv("stats.csv", |buf| {
        let mut wtr = csv::Writer::from_writer(buf);
        let mean_header = if report { "Mean (1e-3)" } else { "Mean" };
        wtr.write_record([
            "Symbol", "Sector", "Code", "N", mean_header, "Max", "Min", "Std", "Skewness",
            "Kurtosis", "JB", "JB reject 1%",
        ])?;
        for (r, s) in &stats {
            let num = |v: f64, digits: usize| {
                if report {
                    format!("{v:.digits$}")
                } else {
                    format!("{v:?}")
                }
            };
            wtr.write_record([
                r.sector.short_code.clone(),
                r.sector.name.clone(),
                r.sector.code.clone(),
                s.n.to_string(),
                if report { num(s.mean * 1e3, 3) } else { num(s.mean, 0) },
                num(s.max, 3),
                num(s.min, 3),
                num(s.std, 3),
                num(s.skewness, 3),
                num(s.kurtosis, 3),
                num(s.jb_statistic, 1),
                s.jb_reject_at_1pct.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    Ok(out.written)
}

pub fn cmd_network(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = load(config)?;
    let (result, metadata) = single_window(&dataset, config)?;
    let mut out = Outputs::new(&config.out_dir)?;
    if config.formats.csv {
        out.write_csv("te_matrix.csv", |b| result.te.0.write_csv(b))?;
        out.write_csv("dai_matrix.csv", |b| result.dai.0.write_csv(b))?;
    }
    if config.formats.json {
        let mut doc: Value = serde_json::from_str(&result.network.to_json()?)?;
        doc["metadata"] = metadata;
        out.write_json("network.json", &doc)?;
    }
    if config.formats.dot {
        out.write("network.dot", result.network.to_dot().as_bytes())?;
    }
    Ok(out.written)
}

fn write_yearly(out: &mut Outputs, config: &RunConfig, study: &YearlyStudy, metadata: Value) -> Result<()> {
    for r in &study.reports {
        if !config.orientations.contains(&r.orientation) {
            continue;
        }
        let path = arborescence::maximal_information_flow_path(&r.arborescence);
        let stem = format!("msa_{}_{}", r.year, r.orientation.short());
        if config.formats.json {
            let mut doc: Value = serde_json::from_str(&arborescence::to_json(&r.arborescence, &path)?)?;
            doc["year"] = json!(r.year);
            out.write_json(&format!("{stem}.json"), &doc)?;
        }
        if config.formats.dot {
            out.write(&format!("{stem}.dot"), arborescence::to_dot(&r.arborescence, &path).as_bytes())?;
        }
    }
    let occurrences = root_occurrences(&study.reports);
    if config.formats.csv {
        for &o in &config.orientations {
            out.write_csv(&format!("yearly_{}.csv", o.short()), |b| {
                study.write_table_csv(o, config.report, b)
            })?;
            let heatmap = degree_heatmap(&study.reports, o);
            out.write_csv(&format!("heatmap_{}.csv", o.short()), |b| {
                heatmap.write_csv(DegreeKind::Total, b)
            })?;
        }
        out.write_csv("root_occurrences.csv", |buf| {
            let mut wtr = csv::Writer::from_writer(buf);
            wtr.write_record(["orientation", "code", "count"])?;
            for (o, counts) in &occurrences {
                if !config.orientations.contains(o) {
                    continue;
                }
                for (code, count) in counts {
                    wtr.write_record([o.short(), code, &count.to_string()])?;
                }
            }
            wtr.flush()?;
            Ok(())
        })?;
    }
    if config.formats.json {
        let reports: Vec<Value> = study
            .reports
            .iter()
            .filter(|r| config.orientations.contains(&r.orientation))
            .map(|r| {
                json!({
                    "year": r.year,
                    "orientation": r.orientation,
                    "root": r.root.code,
                    "path": r.path.iter().map(|s| s.code.as_str()).collect::<Vec<_>>(),
                    "path_sectors": r.path_sectors,
                    "path_dai": r.path_dai,
                    "path_dai_1e-2": r.path_dai_percent(),
                    "arborescence_weight": r.arborescence.total_weight,
                })
            })
            .collect();
        out.write_json(
            "yearly.json",
            &json!({
                "metadata": metadata,
                "reports": reports,
                "skipped_years": study.skipped,
                "root_occurrences": occurrences,
            }),
        )?;
    }
    Ok(())
}

pub fn cmd_msa(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let dataset = load(config)?;
    let mut out = Outputs::new(&config.out_dir)?;
    match config.mode {
        WindowMode::Whole | WindowMode::Range(_) => {
            let tag = if config.mode == WindowMode::Whole { "whole" } else { "range" };
            let (result, metadata) = single_window(&dataset, config)?;
            write_msa_files(&mut out, config, tag, &result, &metadata)?;
            if config.formats.csv {
                out.write_csv(&format!("msa_{tag}.csv"), |b| msa_summary_csv(config, &result, b))?;
            }
        }
        WindowMode::Yearly => {
            let study = yearly_reports(&dataset, &config.pipeline)?;
            for s in &study.skipped {
                warn(&format!("skipped {}: only {} trading days", s.year, s.trading_days));
            }
            write_yearly(&mut out, config, &study, config.metadata(&dataset))?;
        }
        WindowMode::Turmoil { start, end } => {
            let study = turmoil_study(&dataset, &config.pipeline, start, end)?;
            let mut metadata = config.metadata(&dataset);
            metadata["during_window_definition"] = json!(DURING_WINDOW_DEFINITION);
            metadata["windows"] = serde_json::to_value(&study.windows)?;
            for r in &study.results {
                let mut m = metadata.clone();
                m["window"] = serde_json::to_value(&r.window)?;
                write_msa_files(&mut out, config, &format!("turmoil_{}", r.window.label), &r.result, &m)?;
            }
            if config.formats.csv {
                out.write_csv("turmoil.csv", |b| study.write_csv(&config.orientations, b))?;
            }
            if config.formats.json {
                let rows: Vec<Value> = study
                    .results
                    .iter()
                    .flat_map(|r| {
                        config.orientations.iter().map(move |&o| {
                            json!({
                                "window": r.window.label,
                                "orientation": o,
                                "root": r.result.arborescence(o).root_sector().code,
                                "root_degree": r.root_degree(o),
                                "path_weight": r.path_weight(o),
                            })
                        })
                    })
                    .collect();
                out.write_json("turmoil.json", &json!({"metadata": metadata, "results": rows}))?;
            }
        }
    }
    Ok(out.written)
}

pub fn cmd_specificity(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let index_path = config
        .index
        .as_ref()
        .ok_or_else(|| Error::Config("specificity needs --index".into()))?;
    let seed = config
        .seed
        .ok_or_else(|| Error::Config("specificity needs --seed".into()))?;
    if config.mode != WindowMode::Yearly && config.mode != WindowMode::Whole {
        return Err(Error::Config("specificity always runs on calendar years".into()));
    }
    let dataset = load(config)?;
    let index = load_dataset(index_path)?;
    if index.series.len() != 1 {
        return Err(Error::MalformedHeader(format!(
            "index file must have exactly one price column, found {}",
            index.series.len()
        )));
    }
    let study = yearly_reports(&dataset, &config.pipeline)?;
    let result = specificity_study(
        &dataset,
        &study.reports,
        &index.series[0],
        seed,
        config.samples,
    )?;
    let mut out = Outputs::new(&config.out_dir)?;
    if config.formats.csv {
        out.write_csv("specificity.csv", |b| result.write_csv(b))?;
    }
    if config.formats.json {
        let mut metadata = config.metadata(&dataset);
        metadata["seed"] = json!(seed);
        metadata["samples_per_year"] = json!(config.samples);
        metadata["control_sampling"] =
            json!("uniform with replacement over sectors that are neither source nor sink root that year");
        out.write_json(
            "specificity.json",
            &json!({"metadata": metadata, "result": serde_json::to_value(&result)?}),
        )?;
    }
    Ok(out.written)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let spec = if args.bundled {
        bundled_spec()
    } else {
        if args.hub >= args.sectors {
            return Err(Error::Config(format!(
                "--hub {} outside 0..{}",
                args.hub, args.sectors
            )));
        }
        SyntheticDataset::new(
            args.sectors,
            args.length,
            star(args.sectors, args.hub, args.coupling),
            args.seed,
        )
    };
    let dataset = generate_dataset(&spec)?;
    let mut written = write_file(&args.out, |b| write_dataset(&dataset, b))?;
    if let Some(path) = &args.names_out {
        written.extend(write_file(path, |buf| {
            let mut wtr = csv::Writer::from_writer(buf);
            wtr.write_record(["code", "name"])?;
            for s in &spec.sectors {
                wtr.write_record([&s.code, &s.name])?;
            }
            wtr.flush()?;
            Ok(())
        })?);
    }
    Ok(written)
}

fn write_file(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<PathBuf>> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("{} does not name a file", path.display())))?;
    let mut out = Outputs::new(dir)?;
    out.write_csv(name, f)?;
    Ok(out.written)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InputNotFound(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

type CommandFn = fn(&RunConfig) -> Result<Vec<PathBuf>>;

fn dispatch(cli: Cli) -> Result<Vec<PathBuf>> {
    let (args, f): (RunArgs, CommandFn) = match cli.command {
        Command::Synth(a) => return cmd_synth(&a),
        Command::Stats(a) => (a, cmd_stats),
        Command::Msa(a) => (a, cmd_msa),
        Command::Network(a) => (a, cmd_network),
        Command::Specificity(a) => (a, cmd_specificity),
    };
    let config = RunConfig::resolve(args)?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| f(&config)),
        None => f(&config),
    }
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(written) => {
            for p in written {
                log::info!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(input: &str) -> RunArgs {
        RunArgs {
            input: Some(input.into()),
            ..RunArgs::default()
        }
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(args("x.csv")).unwrap();
        assert_eq!(c.pipeline.q, 15);
        assert_eq!(c.mode, WindowMode::Whole);
        assert_eq!(c.orientations.len(), 2);
        assert_eq!(
            c.formats,
            Formats {
                csv: true,
                json: true,
                dot: true
            }
        );
    }

    #[test]
    fn config_errors() {
        let mut a = args("x.csv");
        a.mode = Some(Mode::Turmoil);
        assert!(matches!(RunConfig::resolve(a), Err(Error::Config(_))));

        let mut a = args("x.csv");
        a.crash_start = NaiveDate::from_ymd_opt(2007, 10, 16);
        assert!(matches!(RunConfig::resolve(a), Err(Error::Config(_))));

        let mut a = args("x.csv");
        a.q = Some(1);
        assert!(matches!(RunConfig::resolve(a), Err(Error::Config(_))));

        let mut a = args("x.csv");
        a.format = Some("csv,png".into());
        assert!(matches!(RunConfig::resolve(a), Err(Error::Config(_))));

        assert!(matches!(
            RunConfig::resolve(RunArgs::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "input = \"a.csv\"\nq = 10\nmode = \"yearly\"\nreport = true\n").unwrap();
        let mut a = RunArgs {
            config: Some(path.clone()),
            ..RunArgs::default()
        };
        a.q = Some(20);
        let c = RunConfig::resolve(a).unwrap();
        assert_eq!(c.pipeline.q, 20);
        assert_eq!(c.input, PathBuf::from("a.csv"));
        assert_eq!(c.mode, WindowMode::Yearly);
        assert!(c.report);

        fs::write(&path, "bogus = 1\n").unwrap();
        let a = RunArgs {
            config: Some(path),
            ..RunArgs::default()
        };
        assert!(matches!(RunConfig::resolve(a), Err(Error::Config(_))));
    }
}
