//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use infoflow::network::{Edge, InfoFlowNetwork};
use infoflow::timeseries::SectorMeta;

/// Transfer entropy y -> x by direct summation over time steps.
///
/// Every probability is recounted by scanning the full triplet list, and the
/// sum runs over time indices rather than over distinct cells.
pub fn te_bruteforce(x: &[u16], y: &[u16]) -> f64 {
    let m = x.len() - 1;
    let trip: Vec<(u16, u16, u16)> = (0..m).map(|t| (x[t + 1], x[t], y[t])).collect();
    let mut sum = 0.0;
    for &(a, b, c) in &trip {
        let n_abc = trip.iter().filter(|t| **t == (a, b, c)).count() as f64;
        let n_bc = trip.iter().filter(|t| t.1 == b && t.2 == c).count() as f64;
        let n_ab = trip.iter().filter(|t| t.0 == a && t.1 == b).count() as f64;
        let n_b = trip.iter().filter(|t| t.1 == b).count() as f64;
        let cond_full = n_abc / n_bc;
        let cond_self = n_ab / n_b;
        sum += (cond_full / cond_self).log2();
    }
    sum / m as f64
}

/// Same sum with single and joint (now, source) frequencies taken over all
/// `x.len()` samples instead of the triplets.
pub fn te_bruteforce_all_samples(x: &[u16], y: &[u16]) -> f64 {
    let len = x.len() as f64;
    let m = x.len() - 1;
    let trip: Vec<(u16, u16, u16)> = (0..m).map(|t| (x[t + 1], x[t], y[t])).collect();
    let mut sum = 0.0;
    for &(a, b, c) in &trip {
        let p_abc = trip.iter().filter(|t| **t == (a, b, c)).count() as f64 / m as f64;
        let p_ab = trip.iter().filter(|t| t.0 == a && t.1 == b).count() as f64 / m as f64;
        let p_bc = (0..x.len()).filter(|&t| x[t] == b && y[t] == c).count() as f64 / len;
        let p_b = x.iter().filter(|&&v| v == b).count() as f64 / len;
        sum += (p_abc * p_b / (p_ab * p_bc)).log2();
    }
    sum / m as f64
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

pub struct ExactStats {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jb: f64,
}

/// Moment statistics computed in exact rational arithmetic; only the final
/// square roots are taken in floating point.
pub fn exact_stats(values: &[f64]) -> ExactStats {
    let n = BigRational::from_integer(BigInt::from(values.len()));
    let xs: Vec<BigRational> = values.iter().map(|&v| rational(v)).collect();
    let mean = xs.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let (mut m2, mut m3, mut m4) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for x in &xs {
        let d = x - &mean;
        let d2 = &d * &d;
        m3 += &d2 * &d;
        m4 += &d2 * &d2;
        m2 += d2;
    }
    let one = BigRational::one();
    let var_sample = &m2 / (&n - &one);
    let c2 = &m2 / &n;
    let c3 = &m3 / &n;
    let c4 = &m4 / &n;
    let skew_sq = (&c3 * &c3) / (&c2 * &c2 * &c2);
    let kurt = &c4 / (&c2 * &c2);
    let three = BigRational::from_integer(BigInt::from(3));
    let excess = &kurt - &three;
    let jb = &n / BigRational::from_integer(BigInt::from(6))
        * (&skew_sq + &excess * &excess / BigRational::from_integer(BigInt::from(4)));
    let sign = if c3.is_negative() { -1.0 } else { 1.0 };
    ExactStats {
        mean: to_f64(&mean),
        std: to_f64(&var_sample).sqrt(),
        skewness: sign * to_f64(&skew_sq).sqrt(),
        kurtosis: to_f64(&kurt),
        jb: to_f64(&jb),
    }
}

/// Pearson correlation with the squared coefficient computed exactly.
pub fn exact_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = BigRational::from_integer(BigInt::from(x.len()));
    let xs: Vec<BigRational> = x.iter().map(|&v| rational(v)).collect();
    let ys: Vec<BigRational> = y.iter().map(|&v| rational(v)).collect();
    let mx = xs.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let my = ys.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let (mut sxy, mut sxx, mut syy) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for (a, b) in xs.iter().zip(&ys) {
        let dx = a - &mx;
        let dy = b - &my;
        sxy += &dx * &dy;
        sxx += &dx * &dx;
        syy += &dy * &dy;
    }
    let r_sq = (&sxy * &sxy) / (sxx * syy);
    let sign = if sxy.is_negative() { -1.0 } else { 1.0 };
    sign * to_f64(&r_sq).sqrt()
}

/// Natural log of a positive rational via the atanh series
/// ln r = 2 * sum z^(2k+1) / (2k+1), z = (r - 1) / (r + 1).
pub fn ln_ratio(r: &BigRational, terms: usize) -> f64 {
    let one = BigRational::one();
    let z = (r - &one) / (r + &one);
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = BigRational::zero();
    for k in 0..terms {
        sum += &power / BigRational::from_integer(BigInt::from(2 * k + 1));
        power *= &z2;
        // keep the numbers small; truncation far below f64 resolution
        power = round_to(&power, 200);
    }
    2.0 * to_f64(&sum)
}

fn round_to(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigInt::one() << bits;
    let scaled = (x * BigRational::from_integer(scale.clone())).round();
    scaled / BigRational::from_integer(scale)
}

pub fn sectors(n: usize) -> Vec<SectorMeta> {
    (0..n)
        .map(|i| SectorMeta::new(format!("80{:04}", 10 * (i + 1)), format!("S{i}")))
        .collect()
}

/// Best arborescence by scanning every (n-1)-subset of edges.
///
/// `outgoing` selects root-to-leaves orientation, otherwise leaves-to-root.
pub struct SubsetBest {
    pub total: f64,
    pub root: usize,
    /// Sorted `(source, target)` pairs.
    pub pairs: Vec<(usize, usize)>,
    /// False when another tree reaches the same total.
    pub unique: bool,
}

pub fn best_by_edge_subsets(g: &InfoFlowNetwork, outgoing: bool) -> Option<SubsetBest> {
    let n = g.n();
    let m = g.edges.len();
    let k = n - 1;
    let mut best: Option<SubsetBest> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    if k > m {
        return None;
    }
    loop {
        let chosen: Vec<Edge> = idx.iter().map(|&i| g.edges[i]).collect();
        if let Some(root) = tree_root(n, &chosen, outgoing) {
            let total: f64 = chosen.iter().map(|e| e.weight).sum();
            let mut pairs: Vec<(usize, usize)> = chosen.iter().map(|e| (e.source, e.target)).collect();
            pairs.sort_unstable();
            match &mut best {
                Some(b) if total == b.total => b.unique = false,
                Some(b) if total < b.total => {}
                _ => {
                    best = Some(SubsetBest {
                        total,
                        root,
                        pairs,
                        unique: true,
                    })
                }
            }
        }
        // next combination
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn tree_root(n: usize, edges: &[Edge], outgoing: bool) -> Option<usize> {
    // parent pointer toward the root
    let mut parent = vec![usize::MAX; n];
    for e in edges {
        let (child, up) = if outgoing { (e.target, e.source) } else { (e.source, e.target) };
        if parent[child] != usize::MAX {
            return None;
        }
        parent[child] = up;
    }
    let roots: Vec<usize> = (0..n).filter(|&v| parent[v] == usize::MAX).collect();
    if roots.len() != 1 {
        return None;
    }
    let root = roots[0];
    for start in 0..n {
        let mut v = start;
        let mut steps = 0;
        while v != root {
            v = parent[v];
            steps += 1;
            if steps > n {
                return None;
            }
        }
    }
    Some(root)
}

/// Complete orientation: one edge per pair; `draw` gives (forward, weight).
pub fn random_network(n: usize, mut draw: impl FnMut() -> (bool, f64)) -> InfoFlowNetwork {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (forward, w) = draw();
            edges.push(if forward { Edge::new(i, j, w) } else { Edge::new(j, i, w) });
        }
    }
    InfoFlowNetwork::from_edges(sectors(n), edges).expect("valid network")
}
