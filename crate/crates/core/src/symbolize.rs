//! Equal-width amplitude binning of return series into `q` symbols.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{ReturnSeries, SectorMeta};

pub const DEFAULT_Q: usize = 15;

/// `q` equal-width bins over `[x_min, x_max]`; the top bin is closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub q: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub width: f64,
}

impl Partition {
    pub fn new(q: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidBinCount(q));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::DegenerateSeries(format!(
                "partition range [{x_min}, {x_max}] has zero width"
            )));
        }
        Ok(Self {
            q,
            x_min,
            x_max,
            width: (x_max - x_min) / q as f64,
        })
    }

    /// Symbol in `1..=q` for a value inside the range.
    pub fn symbol(&self, x: f64) -> Result<u16> {
        if !(self.x_min..=self.x_max).contains(&x) {
            return Err(Error::OutOfRange {
                value: x,
                min: self.x_min,
                max: self.x_max,
            });
        }
        // q*(x-min)/(max-min) lands exactly on q at x_max, unlike dividing by width
        let k = (self.q as f64 * (x - self.x_min) / (self.x_max - self.x_min)).floor() as usize;
        Ok((k.min(self.q - 1) + 1) as u16)
    }

    pub fn midpoint(&self, symbol: u16) -> f64 {
        self.x_min + (f64::from(symbol) - 0.5) * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSeries {
    pub sector: SectorMeta,
    pub q: usize,
    /// Absent for series built directly from symbols.
    pub partition: Option<Partition>,
    pub dates: Option<Vec<NaiveDate>>,
    pub symbols: Vec<u16>,
}

impl SymbolSeries {
    /// Wraps raw symbols in `1..=q` without a backing partition or dates.
    pub fn from_symbols(sector: SectorMeta, q: usize, symbols: Vec<u16>) -> Result<Self> {
        if q < 2 || q > u16::MAX as usize {
            return Err(Error::InvalidBinCount(q));
        }
        if let Some(&symbol) = symbols.iter().find(|&&s| s == 0 || s as usize > q) {
            return Err(Error::InvalidSymbol { symbol, q });
        }
        Ok(Self {
            sector,
            q,
            partition: None,
            dates: None,
            symbols,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.q];
        for &s in &self.symbols {
            h[s as usize - 1] += 1;
        }
        h
    }
}

/// Partition spanning the observed range of `r`.
pub fn make_partition(r: &ReturnSeries, q: usize) -> Result<Partition> {
    make_partition_from_values(&r.values, q)
}

pub fn make_partition_from_values(values: &[f64], q: usize) -> Result<Partition> {
    if q < 2 {
        return Err(Error::InvalidBinCount(q));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.len() < 2 || !(max > min) {
        return Err(Error::DegenerateSeries(
            "need at least two distinct values to partition".into(),
        ));
    }
    Partition::new(q, min, max)
}

pub fn encode(r: &ReturnSeries, p: &Partition) -> Result<SymbolSeries> {
    let symbols = r
        .values
        .iter()
        .map(|&x| p.symbol(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(SymbolSeries {
        sector: r.sector.clone(),
        q: p.q,
        partition: Some(*p),
        dates: Some(r.dates.clone()),
        symbols,
    })
}

/// `make_partition` followed by `encode` on the same series.
pub fn symbolize(r: &ReturnSeries, q: usize) -> Result<SymbolSeries> {
    encode(r, &make_partition(r, q)?)
}
