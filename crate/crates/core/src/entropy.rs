//! Plug-in symbolic transfer entropy and the degree of asymmetric information flow.
//!
//! For a source `y` and target `x` the estimator counts triplets
//! `(x[t+1], x[t], y[t])` and evaluates
//!
//! ```text
//! T(y -> x) = sum p(x1, x0, y0) * log2( p(x1, x0, y0) p(x0) / (p(x1, x0) p(x0, y0)) )
//! ```
//!
//! With [`Estimator::Consistent`] every probability is a marginal of the one
//! triplet histogram, which makes the estimate an empirical conditional mutual
//! information `I(x1; y0 | x0)` and therefore non-negative and at most
//! `log2(q)`. [`Estimator::AllSampleMarginals`] takes the single and pairwise
//! contemporaneous marginals over all `L'` samples instead.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolize::SymbolSeries;
use crate::timeseries::SectorMeta;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// All probabilities derived from the triplet histogram.
    #[default]
    Consistent,
    /// `p(x_t)` and `p(x_t, y_t)` over all `L'` samples, pairs and triplets over `L' - 1`.
    AllSampleMarginals,
}

/// Shuffled-source surrogate correction; off unless configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Surrogates {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeOptions {
    pub estimator: Estimator,
    pub surrogates: Option<Surrogates>,
}

/// Histogram of `(x[t+1], x[t], y[t])` triplets, stored densely over `q^3` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletDistribution {
    pub q: usize,
    counts: Vec<u64>,
    pub total: u64,
}

impl TripletDistribution {
    fn index(&self, next: u16, now: u16, source: u16) -> usize {
        let q = self.q;
        ((next as usize - 1) * q + (now as usize - 1)) * q + (source as usize - 1)
    }

    pub fn count(&self, next: u16, now: u16, source: u16) -> u64 {
        if [next, now, source].iter().any(|&s| s == 0 || s as usize > self.q) {
            return 0;
        }
        self.counts[self.index(next, now, source)]
    }

    /// Non-zero cells as `((x_next, x_now, y_now), count)`, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = ((u16, u16, u16), u64)> + '_ {
        let q = self.q;
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(i, &c)| {
            let source = (i % q) as u16 + 1;
            let now = ((i / q) % q) as u16 + 1;
            let next = (i / (q * q)) as u16 + 1;
            ((next, now, source), c)
        })
    }
}

fn check_pair(target: &SymbolSeries, source: &SymbolSeries) -> Result<()> {
    if target.len() != source.len() {
        return Err(Error::LengthMismatch {
            left: target.len(),
            right: source.len(),
        });
    }
    if target.q != source.q {
        return Err(Error::BinCountMismatch {
            left: target.q,
            right: source.q,
        });
    }
    if let (Some(a), Some(b)) = (&target.dates, &source.dates) {
        if a != b {
            return Err(Error::MisalignedDates);
        }
    }
    if target.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: target.len(),
        });
    }
    Ok(())
}

/// Counts `(x[t+1], x[t], y[t])` for `t = 0..L'-1`.
pub fn triplet_distribution(x: &SymbolSeries, y: &SymbolSeries) -> Result<TripletDistribution> {
    check_pair(x, y)?;
    let q = x.q;
    let mut dist = TripletDistribution {
        q,
        counts: vec![0; q * q * q],
        total: 0,
    };
    for t in 0..x.len() - 1 {
        let i = dist.index(x.symbols[t + 1], x.symbols[t], y.symbols[t]);
        dist.counts[i] += 1;
    }
    dist.total = (x.len() - 1) as u64;
    Ok(dist)
}

/// Transfer entropy from `source` to `target` in bits, consistent estimator.
pub fn transfer_entropy(source: &SymbolSeries, target: &SymbolSeries) -> Result<f64> {
    transfer_entropy_with(source, target, Estimator::Consistent)
}

pub fn transfer_entropy_with(
    source: &SymbolSeries,
    target: &SymbolSeries,
    estimator: Estimator,
) -> Result<f64> {
    let dist = triplet_distribution(target, source)?;
    let q = dist.q;
    let n3 = dist.total as f64;

    // marginals indexed by (next, now), (now, source) and (now)
    let mut next_now = vec![0u64; q * q];
    let mut now_source = vec![0u64; q * q];
    let mut now = vec![0u64; q];
    let (n_now_source, n_now) = match estimator {
        Estimator::Consistent => {
            for ((x1, x0, y0), c) in dist.iter() {
                let (x1, x0, y0) = (x1 as usize - 1, x0 as usize - 1, y0 as usize - 1);
                next_now[x1 * q + x0] += c;
                now_source[x0 * q + y0] += c;
                now[x0] += c;
            }
            (n3, n3)
        }
        Estimator::AllSampleMarginals => {
            for ((x1, x0, _), c) in dist.iter() {
                next_now[(x1 as usize - 1) * q + (x0 as usize - 1)] += c;
            }
            for (&x0, &y0) in target.symbols.iter().zip(&source.symbols) {
                now_source[(x0 as usize - 1) * q + (y0 as usize - 1)] += 1;
                now[x0 as usize - 1] += 1;
            }
            let n = target.len() as f64;
            (n, n)
        }
    };

    let mut te = 0.0;
    for ((x1, x0, y0), c) in dist.iter() {
        let (x1, x0, y0) = (x1 as usize - 1, x0 as usize - 1, y0 as usize - 1);
        let p3 = c as f64 / n3;
        let p_next_now = next_now[x1 * q + x0] as f64 / n3;
        let p_now_source = now_source[x0 * q + y0] as f64 / n_now_source;
        let p_now = now[x0] as f64 / n_now;
        te += p3 * (p3 * p_now / (p_next_now * p_now_source)).log2();
    }
    Ok(match estimator {
        // a conditional mutual information; only rounding can push it below zero
        Estimator::Consistent => te.max(0.0),
        Estimator::AllSampleMarginals => te,
    })
}

/// Transfer entropy minus its mean over shuffled-source surrogates.
pub fn effective_transfer_entropy(
    source: &SymbolSeries,
    target: &SymbolSeries,
    estimator: Estimator,
    surrogates: Surrogates,
) -> Result<f64> {
    let raw = transfer_entropy_with(source, target, estimator)?;
    if surrogates.count == 0 {
        return Ok(raw);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(surrogates.seed);
    let mut shuffled = source.clone();
    let mut acc = 0.0;
    for _ in 0..surrogates.count {
        shuffled.symbols.shuffle(&mut rng);
        acc += transfer_entropy_with(&shuffled, target, estimator)?;
    }
    Ok(raw - acc / surrogates.count as f64)
}

/// Row-major square matrix labelled by sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorMatrix {
    pub sectors: Vec<SectorMeta>,
    values: Vec<f64>,
}

impl SectorMatrix {
    pub fn zeros(sectors: Vec<SectorMeta>) -> Self {
        let n = sectors.len();
        Self {
            sectors,
            values: vec![0.0; n * n],
        }
    }

    pub fn from_rows(sectors: Vec<SectorMeta>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = sectors.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter(format!(
                "matrix must be {n}x{n} to match the sector list"
            )));
        }
        Ok(Self {
            sectors,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.sectors.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.n();
        self.values[i * n + j] = v;
    }

    /// CSV with sector codes on the header row and first column, full precision.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["code".to_owned()];
        header.extend(self.sectors.iter().map(|s| s.code.clone()));
        wtr.write_record(&header)?;
        for (i, s) in self.sectors.iter().enumerate() {
            let mut row = vec![s.code.clone()];
            row.extend((0..self.n()).map(|j| format!("{:?}", self.get(i, j))));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `te.get(i, j)` is the transfer entropy from sector `i` to sector `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeMatrix(pub SectorMatrix);

/// `dai.get(i, j) = te(i -> j) - te(j -> i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaiMatrix(pub SectorMatrix);

impl TeMatrix {
    pub fn from_rows(sectors: Vec<SectorMeta>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = SectorMatrix::from_rows(sectors, rows)?;
        for i in 0..m.n() {
            if m.get(i, i) != 0.0 {
                return Err(Error::InvalidParameter("TE diagonal must be zero".into()));
            }
        }
        Ok(Self(m))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }
}

impl DaiMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn sectors(&self) -> &[SectorMeta] {
        &self.0.sectors
    }
}

pub fn te_matrix(all: &[SymbolSeries]) -> Result<TeMatrix> {
    te_matrix_with(all, TeOptions::default())
}

/// All ordered-pair transfer entropies. Pairs are evaluated in parallel; each
/// cell is computed independently so the result does not depend on scheduling.
pub fn te_matrix_with(all: &[SymbolSeries], options: TeOptions) -> Result<TeMatrix> {
    let n = all.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    for s in &all[1..] {
        check_pair(&all[0], s)?;
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| match options.surrogates {
            None => transfer_entropy_with(&all[i], &all[j], options.estimator),
            Some(s) => {
                let seed = s.seed ^ ((i * n + j) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                effective_transfer_entropy(
                    &all[i],
                    &all[j],
                    options.estimator,
                    Surrogates { seed, ..s },
                )
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut m = SectorMatrix::zeros(all.iter().map(|s| s.sector.clone()).collect());
    for (&(i, j), v) in pairs.iter().zip(values) {
        m.set(i, j, v);
    }
    Ok(TeMatrix(m))
}

pub fn dai_matrix(te: &TeMatrix) -> DaiMatrix {
    let n = te.0.n();
    let mut m = SectorMatrix::zeros(te.0.sectors.clone());
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m.set(i, j, te.get(i, j) - te.get(j, i));
            }
        }
    }
    DaiMatrix(m)
}
