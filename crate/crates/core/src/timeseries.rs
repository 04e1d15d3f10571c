//! Daily price ingestion, alignment, slicing and return statistics.
//!
//! Datasets are wide-format CSV files: a `date` column in ISO-8601 followed by
//! one closing-price column per sector code. Rows where any sector is missing
//! a price are dropped for every sector so that all series share one date axis.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Critical value of the Jarque-Bera statistic used for the 1% rejection test.
pub const JB_CRITICAL_1PCT: f64 = 9.442;

const MISSING_TOKENS: [&str; 5] = ["", "na", "nan", "null", "-"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorMeta {
    pub code: String,
    /// Last three characters of `code`; the label used in reports.
    pub short_code: String,
    pub name: String,
}

impl SectorMeta {
    pub fn new(code: impl Into<String>, name: impl Into<String>) -> Self {
        let code = code.into();
        let chars: Vec<char> = code.chars().collect();
        let short_code: String = chars[chars.len().saturating_sub(3)..].iter().collect();
        Self {
            code,
            short_code,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub sector: SectorMeta,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

impl PriceSeries {
    pub fn new(sector: SectorMeta, dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: closes.len(),
            });
        }
        if dates.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: dates.len(),
            });
        }
        check_increasing(&dates)?;
        for (date, &value) in dates.iter().zip(&closes) {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositivePrice {
                    sector: sector.code.clone(),
                    date: *date,
                    value,
                });
            }
        }
        Ok(Self {
            sector,
            dates,
            closes,
        })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub sector: SectorMeta,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(sector: SectorMeta, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        check_increasing(&dates)?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegenerateSeries(format!(
                "non-finite return {bad} in sector {}",
                sector.code
            )));
        }
        Ok(Self {
            sector,
            dates,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sub-series over a half-open range of positions.
    pub fn slice_index(&self, range: std::ops::Range<usize>) -> Result<ReturnSeries> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InsufficientCoverage(format!(
                "index range {}..{} not inside series of length {}",
                range.start,
                range.end,
                self.len()
            )));
        }
        Ok(ReturnSeries {
            sector: self.sector.clone(),
            dates: self.dates[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        })
    }
}

/// A set of price series sharing one date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub series: Vec<PriceSeries>,
    /// Rows dropped because at least one sector had no price that day.
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn new(series: Vec<PriceSeries>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::MalformedHeader("dataset has no sectors".into()));
        }
        let first = &series[0].dates;
        if series.iter().any(|s| &s.dates != first) {
            return Err(Error::MisalignedDates);
        }
        let mut seen = HashSet::new();
        for s in &series {
            if !seen.insert(s.sector.code.as_str()) {
                return Err(Error::MalformedHeader(format!(
                    "duplicate sector code {}",
                    s.sector.code
                )));
            }
        }
        Ok(Self {
            series,
            dropped_rows: 0,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.series[0].dates
    }

    pub fn sectors(&self) -> Vec<SectorMeta> {
        self.series.iter().map(|s| s.sector.clone()).collect()
    }

    pub fn returns(&self) -> Result<Vec<ReturnSeries>> {
        self.series.iter().map(log_returns).collect()
    }

    /// Replace sector names from a `code -> name` map; unknown codes keep their name.
    pub fn apply_names(&mut self, names: &BTreeMap<String, String>) {
        for s in &mut self.series {
            if let Some(name) = names.get(&s.sector.code) {
                s.sector.name = name.clone();
            }
        }
    }
}

fn check_increasing(dates: &[NaiveDate]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::NonMonotoneDates(w[1]));
        }
    }
    Ok(())
}

fn parse_date(raw: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").map_err(|e| Error::MalformedRow {
        row,
        message: format!("bad ISO-8601 date {raw:?}: {e}"),
    })
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::InputNotFound(path.to_path_buf()));
    }
    read_dataset(File::open(path)?)
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::MalformedHeader(
            "expected `date` followed by at least one sector column".into(),
        ));
    }
    if !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::MalformedHeader(format!(
            "first column must be `date`, found {:?}",
            &header[0]
        )));
    }
    let codes: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for code in &codes {
        if code.is_empty() {
            return Err(Error::MalformedHeader("empty sector code".into()));
        }
        if !seen.insert(code.as_str()) {
            return Err(Error::MalformedHeader(format!("duplicate sector code {code}")));
        }
    }

    let mut dates = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); codes.len()];
    let mut dropped = 0usize;
    let mut last_date: Option<NaiveDate> = None;
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 2;
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let date = parse_date(&record[0], row)?;
        if let Some(prev) = last_date {
            if date <= prev {
                return Err(Error::NonMonotoneDates(date));
            }
        }
        last_date = Some(date);

        let mut values = Vec::with_capacity(codes.len());
        let mut missing = false;
        for (j, cell) in record.iter().skip(1).enumerate() {
            if MISSING_TOKENS.contains(&cell.to_ascii_lowercase().as_str()) {
                missing = true;
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::MalformedRow {
                row,
                message: format!("unparseable price {cell:?} for sector {}", codes[j]),
            })?;
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositivePrice {
                    sector: codes[j].clone(),
                    date,
                    value,
                });
            }
            values.push(value);
        }
        if missing {
            dropped += 1;
            continue;
        }
        dates.push(date);
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v);
        }
    }
    if dates.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: dates.len(),
        });
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing prices");
    }

    let series = codes
        .into_iter()
        .zip(columns)
        .map(|(code, closes)| {
            let sector = SectorMeta::new(code.clone(), code);
            PriceSeries::new(sector, dates.clone(), closes)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dataset = Dataset::new(series)?;
    dataset.dropped_rows = dropped;
    Ok(dataset)
}

/// Reads the optional `code,name` metadata file.
pub fn load_sector_names(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::InputNotFound(path.to_path_buf()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "code" || &header[1] != "name" {
        return Err(Error::MalformedHeader(
            "sector metadata header must be `code,name`".into(),
        ));
    }
    let mut names = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        names.insert(record[0].to_owned(), record[1].to_owned());
    }
    Ok(names)
}

/// Writes `dataset` in the wide-format CSV read by [`read_dataset`].
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["date".to_owned()];
    header.extend(dataset.series.iter().map(|s| s.sector.code.clone()));
    wtr.write_record(&header)?;
    for (t, date) in dataset.dates().iter().enumerate() {
        let mut row = vec![date.format("%Y-%m-%d").to_string()];
        row.extend(dataset.series.iter().map(|s| format!("{:?}", s.closes[t])));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Logarithmic returns `ln(p[t+1]) - ln(p[t])`, dated at the later price.
pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: p.len(),
        });
    }
    if let Some((date, &value)) = p
        .dates
        .iter()
        .zip(&p.closes)
        .find(|(_, &v)| !(v > 0.0) || !v.is_finite())
    {
        return Err(Error::NonPositivePrice {
            sector: p.sector.code.clone(),
            date: *date,
            value,
        });
    }
    let values = p.closes.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
    ReturnSeries::new(p.sector.clone(), p.dates[1..].to_vec(), values)
}

/// Closed calendar interval `[from, to]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateInterval {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateInterval {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Result<Self> {
        if from > to {
            return Err(Error::InvalidParameter(format!(
                "interval start {from} after end {to}"
            )));
        }
        Ok(Self { from, to })
    }

    pub fn year(year: i32) -> Self {
        Self {
            from: NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year"),
            to: NaiveDate::from_ymd_opt(year, 12, 31).expect("valid year"),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from <= date && date <= self.to
    }
}

pub fn slice(r: &ReturnSeries, window: DateInterval) -> Result<ReturnSeries> {
    let (dates, values): (Vec<_>, Vec<_>) = r
        .dates
        .iter()
        .zip(&r.values)
        .filter(|(d, _)| window.contains(**d))
        .map(|(d, v)| (*d, *v))
        .unzip();
    if dates.is_empty() {
        return Err(Error::EmptyWindow {
            from: window.from,
            to: window.to,
        });
    }
    Ok(ReturnSeries {
        sector: r.sector.clone(),
        dates,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    /// Sample standard deviation, `1/(n-1)` normalisation.
    pub std: f64,
    pub skewness: f64,
    /// Raw (non-excess) kurtosis; a normal sample gives about 3.
    pub kurtosis: f64,
    pub jb_statistic: f64,
    pub jb_reject_at_1pct: bool,
}

/// Table-style summary of a return series.
///
/// Skewness and kurtosis are the standardised third and fourth central
/// moments with `1/n` normalisation. The Jarque-Bera statistic is
/// `n/6 * (S^2 + (K-3)^2/4)`, rejected against [`JB_CRITICAL_1PCT`].
pub fn summary_stats(r: &ReturnSeries) -> Result<SummaryStats> {
    let x = &r.values;
    let n = x.len();
    if n < 4 {
        return Err(Error::TooShort { needed: 4, got: n });
    }
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    if s2 == 0.0 {
        return Err(Error::DegenerateSeries(format!(
            "zero variance in sector {}",
            r.sector.code
        )));
    }
    let m2 = s2 / nf;
    let m3 = s3 / nf;
    let m4 = s4 / nf;
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let jb_statistic = nf / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryStats {
        n,
        // clamp guards the last-ulp drift of the summed mean
        mean: mean.clamp(min, max),
        max,
        min,
        std: (s2 / (nf - 1.0)).sqrt(),
        skewness,
        kurtosis,
        jb_statistic,
        jb_reject_at_1pct: jb_statistic > JB_CRITICAL_1PCT,
    })
}
