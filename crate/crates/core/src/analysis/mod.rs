//! Studies built on the full pipeline: returns, symbols, transfer entropy,
//! DAI network, both arborescences and their maximal paths.

mod specificity;
mod turmoil;
mod yearly;

pub use specificity::{specificity_study, SpecificityResult, YearCorrelation};
pub use turmoil::{DURING_WINDOW_DEFINITION, turmoil_study, turmoil_windows, TurmoilStudy, TurmoilWindowResult, TurmoilWindows, WindowSpan};
pub use yearly::{
    degree_heatmap, root_occurrences, yearly_reports, DegreeHeatmap, DegreeKind, SkippedYear,
    YearlyMsaReport, YearlyStudy, MIN_TRADING_DAYS,
};

use serde::{Deserialize, Serialize};

use crate::arborescence::{
    max_spanning_arborescence, maximal_information_flow_path, Arborescence, InfoFlowPath,
    Orientation,
};
use crate::entropy::{dai_matrix, te_matrix_with, DaiMatrix, TeMatrix, TeOptions};
use crate::error::{Error, Result};
use crate::network::{build_network, InfoFlowNetwork};
use crate::symbolize::{encode, make_partition, Partition, DEFAULT_Q};
use crate::timeseries::{Dataset, ReturnSeries};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    /// Bin ranges recomputed from each analysed window.
    #[default]
    WindowLocal,
    /// Bin ranges taken from the whole sample and reused for every window.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub q: usize,
    pub te: TeOptions,
    pub partition: PartitionMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            q: DEFAULT_Q,
            te: TeOptions::default(),
            partition: PartitionMode::WindowLocal,
        }
    }
}

impl PipelineConfig {
    pub fn with_q(q: usize) -> Self {
        Self {
            q,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub te: TeMatrix,
    pub dai: DaiMatrix,
    pub network: InfoFlowNetwork,
    pub outgoing: Arborescence,
    pub incoming: Arborescence,
    pub outgoing_path: InfoFlowPath,
    pub incoming_path: InfoFlowPath,
}

impl PipelineResult {
    pub fn arborescence(&self, o: Orientation) -> &Arborescence {
        match o {
            Orientation::Outgoing => &self.outgoing,
            Orientation::Incoming => &self.incoming,
        }
    }

    pub fn path(&self, o: Orientation) -> &InfoFlowPath {
        match o {
            Orientation::Outgoing => &self.outgoing_path,
            Orientation::Incoming => &self.incoming_path,
        }
    }
}

/// Whole-sample partitions, one per series, for [`PartitionMode::Global`].
pub fn global_partitions(returns: &[ReturnSeries], q: usize) -> Result<Vec<Partition>> {
    returns.iter().map(|r| make_partition(r, q)).collect()
}

/// Runs the pipeline on aligned return series.
///
/// `partitions`, when given, replaces the per-window bin ranges.
pub fn run_pipeline(
    returns: &[ReturnSeries],
    config: &PipelineConfig,
    partitions: Option<&[Partition]>,
) -> Result<PipelineResult> {
    if returns.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: returns.len(),
        });
    }
    let symbols = returns
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p = match partitions {
                Some(ps) => ps[i],
                None => make_partition(r, config.q)?,
            };
            encode(r, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    let te = te_matrix_with(&symbols, config.te)?;
    let dai = dai_matrix(&te);
    let network = build_network(&dai);
    let outgoing = max_spanning_arborescence(&network, Orientation::Outgoing)?;
    let incoming = max_spanning_arborescence(&network, Orientation::Incoming)?;
    Ok(PipelineResult {
        outgoing_path: maximal_information_flow_path(&outgoing),
        incoming_path: maximal_information_flow_path(&incoming),
        te,
        dai,
        network,
        outgoing,
        incoming,
    })
}

/// Pipeline over the full sample of `dataset`.
pub fn whole_sample_msas(dataset: &Dataset, config: &PipelineConfig) -> Result<PipelineResult> {
    let returns = dataset.returns()?;
    run_pipeline(&returns, config, None)
}

/// Runs the pipeline on a sub-window of already computed returns.
pub(crate) fn run_window(
    returns: &[ReturnSeries],
    window: impl Fn(&ReturnSeries) -> Result<ReturnSeries>,
    config: &PipelineConfig,
) -> Result<PipelineResult> {
    let sliced = returns.iter().map(window).collect::<Result<Vec<_>>>()?;
    match config.partition {
        PartitionMode::WindowLocal => run_pipeline(&sliced, config, None),
        PartitionMode::Global => {
            let partitions = global_partitions(returns, config.q)?;
            run_pipeline(&sliced, config, Some(&partitions))
        }
    }
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSeries(
            "zero variance in correlation input".into(),
        ));
    }
    let denom = match sxx * syy {
        d if d.is_normal() => d.sqrt(),
        _ => sxx.sqrt() * syy.sqrt(),
    };
    Ok((sxy / denom).clamp(-1.0, 1.0))
}
