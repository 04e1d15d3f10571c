//! Seeded processes with known information flow.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`; the generator
//! and the order of draws below are part of the output contract, so a given
//! seed always produces the same dataset.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolize::SymbolSeries;
use crate::timeseries::{Dataset, PriceSeries, SectorMeta};

/// `x[t+1]` copies `y[t]` with probability `coupling`, otherwise it is a fresh
/// uniform draw; `y` is iid uniform on `{1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledBinaryProcess {
    pub coupling: f64,
    pub length: usize,
    pub seed: u64,
}

impl CoupledBinaryProcess {
    pub fn new(coupling: f64, length: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&coupling) {
            return Err(Error::InvalidParameter(format!(
                "coupling {coupling} outside [0, 1]"
            )));
        }
        if length < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: length,
            });
        }
        Ok(Self {
            coupling,
            length,
            seed,
        })
    }
}

/// Returns `(y, x)` where information flows from `y` to `x`.
pub fn generate_coupled_binary(p: &CoupledBinaryProcess) -> (SymbolSeries, SymbolSeries) {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut y = Vec::with_capacity(p.length);
    let mut x = Vec::with_capacity(p.length);
    x.push(rng.random_range(1..=2u16));
    for t in 0..p.length {
        let yt = rng.random_range(1..=2u16);
        y.push(yt);
        if t + 1 < p.length {
            let copy = rng.random::<f64>() < p.coupling;
            let fresh = rng.random_range(1..=2u16);
            x.push(if copy { yt } else { fresh });
        }
    }
    let wrap = |code: &str, s| {
        SymbolSeries::from_symbols(SectorMeta::new(code, code), 2, s)
            .expect("symbols are drawn from 1..=2")
    };
    (wrap("y", y), wrap("x", x))
}

fn binary_entropy(p: f64) -> f64 {
    [p, 1.0 - p]
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum()
}

/// Exact `T(y -> x)` of the coupled binary process: `1 - H2((1 + c) / 2)`.
pub fn analytic_te_coupled_binary(coupling: f64) -> f64 {
    1.0 - binary_entropy((1.0 + coupling) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub source: usize,
    pub target: usize,
    /// Probability that the target's return copies the source's previous return.
    pub strength: f64,
}

/// A run of `length` returns during which a fixed set of couplings is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub length: usize,
    pub couplings: Vec<Coupling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub sectors: Vec<SectorMeta>,
    pub segments: Vec<Segment>,
    /// Standard deviation of the idiosyncratic daily return.
    pub volatility: f64,
    /// Returns are clipped to `[-limit, limit]`, like a daily price-limit rule.
    pub limit: f64,
    pub initial_price: f64,
    /// First trading day; subsequent days skip weekends.
    pub start: NaiveDate,
    pub seed: u64,
}

impl SyntheticDataset {
    pub fn sectors(n: usize) -> Vec<SectorMeta> {
        (0..n)
            .map(|i| {
                SectorMeta::new(
                    format!("900{:03}", (i + 1) * 10),
                    format!("Synthetic sector {:02}", i + 1),
                )
            })
            .collect()
    }

    /// Defaults for `n` sectors and a single segment.
    pub fn new(n: usize, length: usize, couplings: Vec<Coupling>, seed: u64) -> Self {
        Self {
            sectors: Self::sectors(n),
            segments: vec![Segment { length, couplings }],
            volatility: 0.02,
            limit: 0.1,
            initial_price: 1000.0,
            start: NaiveDate::from_ymd_opt(2000, 1, 4).expect("valid date"),
            seed,
        }
    }

    pub fn total_length(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    fn validate(&self) -> Result<()> {
        let n = self.sectors.len();
        if n == 0 {
            return Err(Error::InvalidParameter("no sectors".into()));
        }
        if self.total_length() < 1 {
            return Err(Error::InvalidParameter("no returns to generate".into()));
        }
        if !(self.volatility > 0.0) || !(self.limit > 0.0) || !(self.initial_price > 0.0) {
            return Err(Error::InvalidParameter(
                "volatility, limit and initial price must be positive".into(),
            ));
        }
        for c in self.segments.iter().flat_map(|s| &s.couplings) {
            if c.source >= n || c.target >= n || c.source == c.target {
                return Err(Error::InvalidParameter(format!(
                    "invalid coupling {} -> {}",
                    c.source, c.target
                )));
            }
            if !(0.0..=1.0).contains(&c.strength) {
                return Err(Error::InvalidParameter(format!(
                    "coupling strength {} outside [0, 1]",
                    c.strength
                )));
            }
        }
        Ok(())
    }
}

/// Star coupling from `hub` to every other sector.
pub fn star(n: usize, hub: usize, strength: f64) -> Vec<Coupling> {
    (0..n)
        .filter(|&j| j != hub)
        .map(|target| Coupling {
            source: hub,
            target,
            strength,
        })
        .collect()
}

/// `count` weekdays starting at `start` (or the next weekday after it).
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

/// Raw returns, one vector per sector.
///
/// At each step every sector first draws clipped Gaussian noise; then, for each
/// active coupling in declaration order, a target not yet overwritten this step
/// copies its source's previous return with probability `strength`.
pub fn generate_returns(spec: &SyntheticDataset) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let n = spec.sectors.len();
    let total = spec.total_length();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut returns = vec![Vec::with_capacity(total); n];
    let mut t = 0usize;
    for segment in &spec.segments {
        for _ in 0..segment.length {
            let mut today: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (z * spec.volatility).clamp(-spec.limit, spec.limit)
                })
                .collect();
            let mut copied = vec![false; n];
            for c in &segment.couplings {
                let fire = rng.random::<f64>() < c.strength;
                if t > 0 && fire && !copied[c.target] {
                    today[c.target] = returns[c.source][t - 1];
                    copied[c.target] = true;
                }
            }
            for (series, r) in returns.iter_mut().zip(today) {
                series.push(r);
            }
            t += 1;
        }
    }
    Ok(returns)
}

/// Prices obtained by cumulative exponentiation of [`generate_returns`].
pub fn generate_dataset(spec: &SyntheticDataset) -> Result<Dataset> {
    let returns = generate_returns(spec)?;
    let dates = business_days(spec.start, spec.total_length() + 1);
    let series = spec
        .sectors
        .iter()
        .zip(returns)
        .map(|(sector, r)| {
            let mut closes = Vec::with_capacity(r.len() + 1);
            let mut p = spec.initial_price;
            closes.push(p);
            for x in r {
                p *= x.exp();
                closes.push(p);
            }
            PriceSeries::new(sector.clone(), dates.clone(), closes)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series)
}

/// The 28-sector demo dataset: three calendar years (2000-2002), each with a
/// different planted hub and a strong five-sector chain.
pub fn bundled_spec() -> SyntheticDataset {
    let n = 28;
    let start = NaiveDate::from_ymd_opt(2000, 1, 4).expect("valid date");
    let days = business_days(start, 4 * 262);
    // returns are dated at the later price, so year y holds the returns whose
    // closing date falls in y
    let per_year = |year: i32| days[1..].iter().filter(|d| d.year() == year).count();
    let plan: [(usize, [usize; 5]); 3] = [
        (4, [4, 9, 15, 21, 26]),
        (11, [11, 2, 18, 7, 24]),
        (19, [19, 13, 0, 22, 5]),
    ];
    let segments = plan
        .iter()
        .zip(2000..)
        .map(|((hub, chain), year)| {
            let mut couplings = Vec::new();
            for w in chain.windows(2) {
                couplings.push(Coupling {
                    source: w[0],
                    target: w[1],
                    strength: 0.8,
                });
            }
            couplings.extend(star(n, *hub, 0.5));
            Segment {
                length: per_year(year),
                couplings,
            }
        })
        .collect();
    SyntheticDataset {
        sectors: SyntheticDataset::sectors(n),
        segments,
        volatility: 0.02,
        limit: 0.1,
        initial_price: 1000.0,
        start,
        seed: 20_000_104,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_coupling_copies() {
        let p = CoupledBinaryProcess::new(1.0, 1000, 3).unwrap();
        let (y, x) = generate_coupled_binary(&p);
        assert_eq!(y.len(), 1000);
        assert_eq!(x.len(), 1000);
        for t in 0..999 {
            assert_eq!(x.symbols[t + 1], y.symbols[t]);
        }
    }

    #[test]
    fn zero_coupling_is_not_a_copy() {
        let p = CoupledBinaryProcess::new(0.0, 10_000, 3).unwrap();
        let (y, x) = generate_coupled_binary(&p);
        let agree = (0..9999).filter(|&t| x.symbols[t + 1] == y.symbols[t]).count();
        let frac = agree as f64 / 9999.0;
        assert!((frac - 0.5).abs() < 0.03, "agreement {frac}");
    }

    #[test]
    fn seeded_determinism() {
        let p = CoupledBinaryProcess::new(0.3, 500, 11).unwrap();
        assert_eq!(generate_coupled_binary(&p), generate_coupled_binary(&p));
        let spec = SyntheticDataset::new(4, 200, star(4, 0, 0.5), 9);
        assert_eq!(generate_dataset(&spec).unwrap(), generate_dataset(&spec).unwrap());
    }

    #[test]
    fn process_validation() {
        assert!(CoupledBinaryProcess::new(1.5, 10, 0).is_err());
        assert!(CoupledBinaryProcess::new(0.5, 1, 0).is_err());
        let mut spec = SyntheticDataset::new(3, 10, vec![], 0);
        spec.segments[0].couplings.push(Coupling {
            source: 0,
            target: 0,
            strength: 0.5,
        });
        assert!(generate_dataset(&spec).is_err());
    }

    #[test]
    fn analytic_values() {
        assert_eq!(analytic_te_coupled_binary(0.0), 0.0);
        assert_eq!(analytic_te_coupled_binary(1.0), 1.0);
        // 1 - H2(0.75) = 1 - (0.75 log2(4/3) + 0.25 log2 4)
        let expected = 1.0 - (0.75 * (4.0f64 / 3.0).log2() + 0.5);
        assert!((analytic_te_coupled_binary(0.5) - expected).abs() < 1e-15);
        assert!((analytic_te_coupled_binary(0.5) - 0.18872).abs() < 5e-6);
    }

    #[test]
    fn planted_copy_is_visible_in_returns() {
        let spec = SyntheticDataset::new(3, 400, star(3, 0, 1.0), 5);
        let r = generate_returns(&spec).unwrap();
        for t in 1..400 {
            assert_eq!(r[1][t], r[0][t - 1]);
            assert_eq!(r[2][t], r[0][t - 1]);
        }
    }

    #[test]
    fn prices_positive_and_weekdays_only() {
        let ds = generate_dataset(&bundled_spec()).unwrap();
        assert_eq!(ds.series.len(), 28);
        assert!(ds.series.iter().all(|s| s.closes.iter().all(|&p| p > 0.0)));
        assert!(ds
            .dates()
            .iter()
            .all(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun)));
        let years: std::collections::BTreeSet<i32> =
            ds.dates()[1..].iter().map(|d| d.year()).collect();
        assert_eq!(years.into_iter().collect::<Vec<_>>(), vec![2000, 2001, 2002]);
    }
}
