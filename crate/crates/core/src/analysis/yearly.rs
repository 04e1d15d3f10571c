use std::collections::BTreeMap;
use std::io::Write;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_window, PipelineConfig};
use crate::arborescence::{degrees, Arborescence, NodeDegree, Orientation};
use crate::error::Result;
use crate::timeseries::{slice, Dataset, DateInterval, SectorMeta};

/// Years with fewer trading days than this are skipped.
pub const MIN_TRADING_DAYS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyMsaReport {
    pub year: i32,
    pub orientation: Orientation,
    pub root: SectorMeta,
    /// Maximal information-flow path in flow direction.
    pub path: Vec<SectorMeta>,
    pub path_sectors: usize,
    /// Total DAI along the path, in bits.
    pub path_dai: f64,
    pub arborescence: Arborescence,
}

impl YearlyMsaReport {
    /// Path DAI in units of 1e-2 bits, as printed in report tables.
    pub fn path_dai_percent(&self) -> f64 {
        self.path_dai * 100.0
    }

    pub fn path_label(&self) -> String {
        self.path
            .iter()
            .map(|s| s.short_code.as_str())
            .collect::<Vec<_>>()
            .join("->")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedYear {
    pub year: i32,
    pub trading_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyStudy {
    /// Ordered by year, outgoing before incoming.
    pub reports: Vec<YearlyMsaReport>,
    pub skipped: Vec<SkippedYear>,
}

impl YearlyStudy {
    pub fn for_orientation(&self, o: Orientation) -> impl Iterator<Item = &YearlyMsaReport> {
        self.reports.iter().filter(move |r| r.orientation == o)
    }

    /// Table with one row per year: year, root, path, sector count, DAI x 1e2.
    ///
    /// `report` rounds DAI to two decimals; otherwise it is written in full.
    pub fn write_table_csv<W: Write>(&self, o: Orientation, report: bool, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let path_header = match o {
            Orientation::Outgoing => "Maximal information outflow path",
            Orientation::Incoming => "Maximal information inflow path",
        };
        wtr.write_record(["Year", "Root sector", path_header, "No. of sectors", "DAI (1e-2)"])?;
        for r in self.for_orientation(o) {
            let dai = if report {
                format!("{:.2}", r.path_dai_percent())
            } else {
                format!("{:?}", r.path_dai_percent())
            };
            wtr.write_record([
                r.year.to_string(),
                r.root.short_code.clone(),
                r.path_label(),
                r.path_sectors.to_string(),
                dai,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// One report per calendar year and orientation, each year re-symbolised and
/// re-estimated on its own returns.
pub fn yearly_reports(dataset: &Dataset, config: &PipelineConfig) -> Result<YearlyStudy> {
    let returns = dataset.returns()?;
    let mut days_per_year: BTreeMap<i32, usize> = BTreeMap::new();
    for d in &returns[0].dates {
        *days_per_year.entry(d.year()).or_default() += 1;
    }
    let mut skipped = Vec::new();
    let mut years = Vec::new();
    for (&year, &days) in &days_per_year {
        if days < MIN_TRADING_DAYS {
            log::warn!("skipping {year}: only {days} trading days");
            skipped.push(SkippedYear {
                year,
                trading_days: days,
            });
        } else {
            years.push(year);
        }
    }

    let per_year = years
        .par_iter()
        .map(|&year| {
            let result = run_window(&returns, |r| slice(r, DateInterval::year(year)), config)?;
            Ok([Orientation::Outgoing, Orientation::Incoming].map(|o| {
                let a = result.arborescence(o).clone();
                let path = result.path(o);
                YearlyMsaReport {
                    year,
                    orientation: o,
                    root: a.root_sector().clone(),
                    path: path.sectors.clone(),
                    path_sectors: path.length,
                    path_dai: path.total_weight,
                    arborescence: a,
                }
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(YearlyStudy {
        reports: per_year.into_iter().flatten().collect(),
        skipped,
    })
}

/// How often each sector code is the root, per orientation.
pub fn root_occurrences(
    reports: &[YearlyMsaReport],
) -> BTreeMap<Orientation, BTreeMap<String, usize>> {
    let mut out: BTreeMap<Orientation, BTreeMap<String, usize>> = BTreeMap::new();
    for r in reports {
        *out.entry(r.orientation)
            .or_default()
            .entry(r.root.code.clone())
            .or_default() += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegreeKind {
    In,
    Out,
    #[default]
    Total,
}

impl DegreeKind {
    fn pick(self, d: &NodeDegree) -> usize {
        match self {
            DegreeKind::In => d.in_degree,
            DegreeKind::Out => d.out_degree,
            DegreeKind::Total => d.total,
        }
    }
}

/// Year x sector arborescence degrees for one orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeHeatmap {
    pub orientation: Orientation,
    pub sectors: Vec<SectorMeta>,
    pub years: Vec<i32>,
    pub degrees: Vec<Vec<NodeDegree>>,
}

impl DegreeHeatmap {
    pub fn row(&self, i: usize, kind: DegreeKind) -> Vec<usize> {
        self.degrees[i].iter().map(|d| kind.pick(d)).collect()
    }

    pub fn write_csv<W: Write>(&self, kind: DegreeKind, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["year".to_owned()];
        header.extend(self.sectors.iter().map(|s| s.code.clone()));
        wtr.write_record(&header)?;
        for (i, year) in self.years.iter().enumerate() {
            let mut row = vec![year.to_string()];
            row.extend(self.row(i, kind).into_iter().map(|v| v.to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn degree_heatmap(reports: &[YearlyMsaReport], orientation: Orientation) -> DegreeHeatmap {
    let chosen: Vec<&YearlyMsaReport> =
        reports.iter().filter(|r| r.orientation == orientation).collect();
    DegreeHeatmap {
        orientation,
        sectors: chosen
            .first()
            .map(|r| r.arborescence.nodes.clone())
            .unwrap_or_default(),
        years: chosen.iter().map(|r| r.year).collect(),
        degrees: chosen.iter().map(|r| degrees(&r.arborescence)).collect(),
    }
}
