use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{pearson, YearlyMsaReport};
use crate::arborescence::Orientation;
use crate::error::{Error, Result};
use crate::timeseries::{log_returns, Dataset, PriceSeries, SectorMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearCorrelation {
    pub year: i32,
    pub sector: SectorMeta,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificityResult {
    /// Roots of the outgoing arborescences.
    pub source: Vec<YearCorrelation>,
    /// Roots of the incoming arborescences.
    pub sink: Vec<YearCorrelation>,
    /// Randomly drawn non-root sectors, `samples` per year.
    pub controls: Vec<YearCorrelation>,
    pub source_mean: f64,
    pub sink_mean: f64,
    pub control_mean: f64,
    pub seed: u64,
    pub samples: usize,
}

impl SpecificityResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["group", "year", "code", "correlation"])?;
        for (group, rows) in [
            ("source", &self.source),
            ("sink", &self.sink),
            ("control", &self.controls),
        ] {
            for r in rows {
                wtr.write_record([
                    group.to_owned(),
                    r.year.to_string(),
                    r.sector.code.clone(),
                    format!("{:?}", r.correlation),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

fn mean(rows: &[YearCorrelation]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    rows.iter().map(|r| r.correlation).sum::<f64>() / rows.len() as f64
}

/// Correlates each year's root-sector daily returns with the index returns of
/// the same days, and builds a seeded control group of non-root sectors.
///
/// The index must have a price on every dataset date; index returns are taken
/// on the dataset's date axis. Controls are drawn uniformly with replacement
/// from the sectors that are neither source nor sink root that year.
pub fn specificity_study(
    dataset: &Dataset,
    reports: &[YearlyMsaReport],
    index: &PriceSeries,
    seed: u64,
    samples: usize,
) -> Result<SpecificityResult> {
    if samples == 0 {
        return Err(Error::InvalidParameter("control samples must be >= 1".into()));
    }
    let index_by_date: HashMap<NaiveDate, f64> =
        index.dates.iter().copied().zip(index.closes.iter().copied()).collect();
    let aligned = dataset
        .dates()
        .iter()
        .map(|d| {
            index_by_date.get(d).copied().ok_or_else(|| {
                Error::InsufficientCoverage(format!("index has no price on {d}"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let index_returns = log_returns(&PriceSeries::new(
        index.sector.clone(),
        dataset.dates().to_vec(),
        aligned,
    )?)?;
    let returns = dataset.returns()?;
    let position: HashMap<&str, usize> = returns
        .iter()
        .enumerate()
        .map(|(i, r)| (r.sector.code.as_str(), i))
        .collect();

    let year_positions = |year: i32| -> Vec<usize> {
        index_returns
            .dates
            .iter()
            .enumerate()
            .filter(|(_, d)| d.year() == year)
            .map(|(t, _)| t)
            .collect()
    };
    let correlate = |year: i32, sector: usize| -> Result<YearCorrelation> {
        let ts = year_positions(year);
        let x: Vec<f64> = ts.iter().map(|&t| returns[sector].values[t]).collect();
        let y: Vec<f64> = ts.iter().map(|&t| index_returns.values[t]).collect();
        Ok(YearCorrelation {
            year,
            sector: returns[sector].sector.clone(),
            correlation: pearson(&x, &y)?,
        })
    };
    let lookup = |code: &str| {
        position.get(code).copied().ok_or_else(|| {
            Error::InvalidParameter(format!("report root {code} not in dataset"))
        })
    };

    let mut roots: BTreeMap<i32, BTreeSet<usize>> = BTreeMap::new();
    let mut source = Vec::new();
    let mut sink = Vec::new();
    for r in reports {
        let i = lookup(&r.root.code)?;
        roots.entry(r.year).or_default().insert(i);
        let c = correlate(r.year, i)?;
        match r.orientation {
            Orientation::Outgoing => source.push(c),
            Orientation::Incoming => sink.push(c),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut controls = Vec::new();
    for (&year, year_roots) in &roots {
        let pool: Vec<usize> = (0..returns.len()).filter(|i| !year_roots.contains(i)).collect();
        if pool.is_empty() {
            continue;
        }
        for _ in 0..samples {
            let pick = pool[rng.random_range(0..pool.len())];
            controls.push(correlate(year, pick)?);
        }
    }

    Ok(SpecificityResult {
        source_mean: mean(&source),
        sink_mean: mean(&sink),
        control_mean: mean(&controls),
        source,
        sink,
        controls,
        seed,
        samples,
    })
}
