use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_window, PipelineConfig, PipelineResult};
use crate::arborescence::{degrees, Orientation};
use crate::error::{Error, Result};
use crate::timeseries::Dataset;

/// Human-readable statement of how the windows are laid out; copied into outputs.
pub const DURING_WINDOW_DEFINITION: &str = "during = [start - T, start + T) in trading days, \
T = trading days from crash start to crash end inclusive; before and after are the adjacent \
windows of the same length";

/// Half-open range of trading-day positions on the return axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpan {
    pub label: String,
    pub start_index: usize,
    pub end_index: usize,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub trading_days: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurmoilWindows {
    pub crash_start: NaiveDate,
    pub crash_end: NaiveDate,
    /// Trading days from crash start to crash end, inclusive.
    pub crash_length: usize,
    pub before: WindowSpan,
    pub during: WindowSpan,
    pub after: WindowSpan,
}

impl TurmoilWindows {
    pub fn spans(&self) -> [&WindowSpan; 3] {
        [&self.before, &self.during, &self.after]
    }
}

/// Lays out before/during/after windows on the trading-day axis `dates`.
pub fn turmoil_windows(
    dates: &[NaiveDate],
    crash_start: NaiveDate,
    crash_end: NaiveDate,
) -> Result<TurmoilWindows> {
    if crash_end < crash_start {
        return Err(Error::InvalidParameter(format!(
            "crash end {crash_end} precedes crash start {crash_start}"
        )));
    }
    let start = dates.partition_point(|d| *d < crash_start);
    let end = dates.partition_point(|d| *d <= crash_end);
    if start >= end {
        return Err(Error::InsufficientCoverage(format!(
            "no trading days between {crash_start} and {crash_end}"
        )));
    }
    let t = end - start;
    if start < 3 * t || start + 3 * t > dates.len() {
        return Err(Error::InsufficientCoverage(format!(
            "crash of {t} trading days needs {} days before and {} after its start; have {} and {}",
            3 * t,
            3 * t,
            start,
            dates.len() - start
        )));
    }
    let span = |label: &str, lo: usize, hi: usize| WindowSpan {
        label: label.to_owned(),
        start_index: lo,
        end_index: hi,
        from: dates[lo],
        to: dates[hi - 1],
        trading_days: hi - lo,
    };
    Ok(TurmoilWindows {
        crash_start,
        crash_end,
        crash_length: t,
        before: span("before", start - 3 * t, start - t),
        during: span("during", start - t, start + t),
        after: span("after", start + t, start + 3 * t),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurmoilWindowResult {
    pub window: WindowSpan,
    pub outgoing_root_degree: usize,
    pub incoming_root_degree: usize,
    pub outgoing_path_weight: f64,
    pub incoming_path_weight: f64,
    pub result: PipelineResult,
}

impl TurmoilWindowResult {
    pub fn root_degree(&self, o: Orientation) -> usize {
        match o {
            Orientation::Outgoing => self.outgoing_root_degree,
            Orientation::Incoming => self.incoming_root_degree,
        }
    }

    pub fn path_weight(&self, o: Orientation) -> f64 {
        match o {
            Orientation::Outgoing => self.outgoing_path_weight,
            Orientation::Incoming => self.incoming_path_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurmoilStudy {
    pub windows: TurmoilWindows,
    /// Before, during, after.
    pub results: Vec<TurmoilWindowResult>,
}

impl TurmoilStudy {
    /// One row per window and orientation: root, root degree, path weight.
    pub fn write_csv<W: Write>(&self, orientations: &[Orientation], writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "window",
            "from",
            "to",
            "trading_days",
            "orientation",
            "root",
            "root_degree",
            "path_weight",
        ])?;
        for r in &self.results {
            for &o in orientations {
                wtr.write_record([
                    r.window.label.clone(),
                    r.window.from.to_string(),
                    r.window.to.to_string(),
                    r.window.trading_days.to_string(),
                    o.short().to_owned(),
                    r.result.arborescence(o).root_sector().code.clone(),
                    r.root_degree(o).to_string(),
                    format!("{:?}", r.path_weight(o)),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs the pipeline on the before, during and after windows of a crash.
pub fn turmoil_study(
    dataset: &Dataset,
    config: &PipelineConfig,
    crash_start: NaiveDate,
    crash_end: NaiveDate,
) -> Result<TurmoilStudy> {
    let returns = dataset.returns()?;
    let windows = turmoil_windows(&returns[0].dates, crash_start, crash_end)?;
    let results = windows
        .spans()
        .par_iter()
        .map(|span| {
            let result = run_window(
                &returns,
                |r| r.slice_index(span.start_index..span.end_index),
                config,
            )?;
            let root_degree = |o: Orientation| {
                let a = result.arborescence(o);
                degrees(a)[a.root].total
            };
            Ok(TurmoilWindowResult {
                window: (*span).clone(),
                outgoing_root_degree: root_degree(Orientation::Outgoing),
                incoming_root_degree: root_degree(Orientation::Incoming),
                outgoing_path_weight: result.outgoing_path.total_weight,
                incoming_path_weight: result.incoming_path.total_weight,
                result,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TurmoilStudy { windows, results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::business_days;

    #[test]
    fn windows_are_contiguous_and_equal() {
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), 400);
        let w = turmoil_windows(&dates, dates[200], dates[229]).unwrap();
        assert_eq!(w.crash_length, 30);
        assert_eq!((w.during.start_index, w.during.end_index), (170, 230));
        assert_eq!(w.before.end_index, w.during.start_index);
        assert_eq!(w.during.end_index, w.after.start_index);
        for s in w.spans() {
            assert_eq!(s.trading_days, 60);
            assert_eq!(s.end_index - s.start_index, 60);
        }
    }

    #[test]
    fn crash_dates_between_trading_days() {
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), 400);
        // a Saturday start snaps to the following Monday
        let sat = NaiveDate::from_ymd_opt(2000, 6, 3).unwrap();
        let w = turmoil_windows(&dates, sat, sat + chrono::Days::new(9)).unwrap();
        assert_eq!(w.during.start_index + w.crash_length, dates.partition_point(|d| *d < sat));
        assert_eq!(w.crash_length, 6);
    }

    #[test]
    fn coverage_errors() {
        let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), 100);
        assert!(matches!(
            turmoil_windows(&dates, dates[10], dates[20]),
            Err(Error::InsufficientCoverage(_))
        ));
        assert!(matches!(
            turmoil_windows(&dates, dates[20], dates[10]),
            Err(Error::InvalidParameter(_))
        ));
        let far = NaiveDate::from_ymd_opt(2030, 1, 1).unwrap();
        assert!(turmoil_windows(&dates, far, far).is_err());
    }
}
