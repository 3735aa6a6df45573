//! Distances and goodness-of-fit statistics for sampler output.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("no samples")]
    EmptySample,
    #[error("need at least {0} categories")]
    TooFewCategories(usize),
}

/// Counts of observed values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDist<K: Ord> {
    pub counts: BTreeMap<K, u64>,
    pub total: u64,
}

impl<K: Ord> Default for EmpiricalDist<K> {
    fn default() -> Self {
        Self {
            counts: BTreeMap::new(),
            total: 0,
        }
    }
}

impl<K: Ord + Clone> EmpiricalDist<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, k: K) {
        *self.counts.entry(k).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn weights(&self) -> BTreeMap<K, f64> {
        self.counts
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64))
            .collect()
    }
}

impl<K: Ord + Clone> FromIterator<K> for EmpiricalDist<K> {
    fn from_iter<I: IntoIterator<Item = K>>(iter: I) -> Self {
        let mut d = Self::new();
        for k in iter {
            d.add(k);
        }
        d
    }
}

/// Half the L1 distance after normalizing both weight maps. Missing keys have weight 0.
pub fn tv_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> Result<f64, StatsError> {
    let sp: f64 = p.values().sum();
    let sq: f64 = q.values().sum();
    if sp <= 0.0 || sq <= 0.0 {
        return Err(StatsError::EmptySample);
    }
    let mut l1 = 0.0;
    for (k, &w) in p {
        l1 += (w / sp - q.get(k).copied().unwrap_or(0.0) / sq).abs();
    }
    for (k, &w) in q {
        if !p.contains_key(k) {
            l1 += w / sq;
        }
    }
    Ok((0.5 * l1).min(1.0))
}

/// TV distance between two aligned probability vectors.
pub fn tv_distance_vec(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    assert_eq!(p.len(), q.len());
    let as_map = |v: &[f64]| v.iter().copied().enumerate().collect::<BTreeMap<_, _>>();
    tv_distance(&as_map(p), &as_map(q))
}

/// Pearson statistic against equal expected counts.
pub fn chi_square_uniform(counts: &[u64]) -> Result<f64, StatsError> {
    if counts.len() < 2 {
        return Err(StatsError::TooFewCategories(2));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(StatsError::EmptySample);
    }
    let e = total as f64 / counts.len() as f64;
    Ok(counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagTest {
    pub statistic: f64,
    pub df: usize,
    /// Fewer than two distinct values on one side of the pair table; the statistic is 0 and meaningless.
    pub degenerate: bool,
}

impl LagTest {
    /// Whether the statistic stays below the critical value at `level`.
    pub fn passes(&self, level: Level) -> bool {
        !self.degenerate && chi2_critical(self.df, level).is_some_and(|c| self.statistic < c)
    }
}

/// Chi-square test of independence on the table of consecutive pairs `(x_t, x_{t+1})`.
pub fn lag_independence<K: Ord + Clone>(samples: &[K]) -> Result<LagTest, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::EmptySample);
    }
    let mut table: BTreeMap<(K, K), f64> = BTreeMap::new();
    let mut rows: BTreeMap<K, f64> = BTreeMap::new();
    let mut cols: BTreeMap<K, f64> = BTreeMap::new();
    for w in samples.windows(2) {
        *table.entry((w[0].clone(), w[1].clone())).or_default() += 1.0;
        *rows.entry(w[0].clone()).or_default() += 1.0;
        *cols.entry(w[1].clone()).or_default() += 1.0;
    }
    let n = (samples.len() - 1) as f64;
    if rows.len() < 2 || cols.len() < 2 {
        return Ok(LagTest {
            statistic: 0.0,
            df: 0,
            degenerate: true,
        });
    }
    let mut stat = 0.0;
    for (a, ra) in &rows {
        for (b, cb) in &cols {
            let e = ra * cb / n;
            let o = table.get(&(a.clone(), b.clone())).copied().unwrap_or(0.0);
            stat += (o - e).powi(2) / e;
        }
    }
    Ok(LagTest {
        statistic: stat,
        df: (rows.len() - 1) * (cols.len() - 1),
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub k: u64,
    /// Fraction of searches that accepted by attempt `k`.
    pub empirical: f64,
    /// `1 - (3/4)^k`.
    pub reference: f64,
}

/// Empirical CDF of attempts-to-acceptance for `k = 1..=max`.
pub fn acceptance_curve(attempts: &[u64]) -> Vec<CurvePoint> {
    let Some(&max) = attempts.iter().max() else {
        return Vec::new();
    };
    let n = attempts.len() as f64;
    let mut hist = vec![0u64; max as usize + 1];
    for &a in attempts {
        hist[a as usize] += 1;
    }
    let mut acc = hist[0];
    (1..=max)
        .map(|k| {
            acc += hist[k as usize];
            CurvePoint {
                k,
                empirical: acc as f64 / n,
                reference: 1.0 - 0.75f64.powi(k as i32),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    P05,
    P01,
}

const CHI2_05: [f64; 64] = [
    3.8415, 5.9915, 7.8147, 9.4877, 11.0705, 12.5916, 14.0671, 15.5073, 16.9190, 18.3070, 19.6751,
    21.0261, 22.3620, 23.6848, 24.9958, 26.2962, 27.5871, 28.8693, 30.1435, 31.4104, 32.6706,
    33.9244, 35.1725, 36.4150, 37.6525, 38.8851, 40.1133, 41.3371, 42.5570, 43.7730, 44.9853,
    46.1943, 47.3999, 48.6024, 49.8018, 50.9985, 52.1923, 53.3835, 54.5722, 55.7585, 56.9424,
    58.1240, 59.3035, 60.4809, 61.6562, 62.8296, 64.0011, 65.1708, 66.3386, 67.5048, 68.6693,
    69.8322, 70.9935, 72.1532, 73.3115, 74.4683, 75.6237, 76.7778, 77.9305, 79.0819, 80.2321,
    81.3810, 82.5287, 83.6753,
];

const CHI2_01: [f64; 64] = [
    6.6349, 9.2103, 11.3449, 13.2767, 15.0863, 16.8119, 18.4753, 20.0902, 21.6660, 23.2093,
    24.7250, 26.2170, 27.6882, 29.1412, 30.5779, 31.9999, 33.4087, 34.8053, 36.1909, 37.5662,
    38.9322, 40.2894, 41.6384, 42.9798, 44.3141, 45.6417, 46.9629, 48.2782, 49.5879, 50.8922,
    52.1914, 53.4858, 54.7755, 56.0609, 57.3421, 58.6192, 59.8925, 61.1621, 62.4281, 63.6907,
    64.9501, 66.2062, 67.4593, 68.7095, 69.9568, 71.2014, 72.4433, 73.6826, 74.9195, 76.1539,
    77.3860, 78.6158, 79.8433, 81.0688, 82.2921, 83.5134, 84.7328, 85.9502, 87.1657, 88.3794,
    89.5913, 90.8015, 92.0100, 93.2169,
];

/// Upper critical value of the chi-square distribution, tabulated for `1 <= df <= 64`.
pub fn chi2_critical(df: usize, level: Level) -> Option<f64> {
    let table = match level {
        Level::P05 => &CHI2_05,
        Level::P01 => &CHI2_01,
    };
    df.checked_sub(1).and_then(|i| table.get(i)).copied()
}

/// Largest gap between the empirical CDF of `counts` and the CDF of `probs`
/// over an ordered discrete domain.
pub fn ks_distance(counts: &[u64], probs: &[f64]) -> Result<f64, StatsError> {
    assert_eq!(counts.len(), probs.len());
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(StatsError::EmptySample);
    }
    let z: f64 = probs.iter().sum();
    let (mut fe, mut fp, mut d) = (0.0, 0.0, 0.0f64);
    for (&c, &p) in counts.iter().zip(probs) {
        fe += c as f64 / n as f64;
        fp += p / z;
        d = d.max((fe - fp).abs());
    }
    Ok(d)
}

/// Asymptotic one-sample Kolmogorov-Smirnov critical value for `n` samples.
/// Conservative for discrete distributions.
pub fn ks_critical(n: u64, level: Level) -> f64 {
    let c = match level {
        Level::P05 => 1.3581,
        Level::P01 => 1.6276,
    };
    c / (n as f64).sqrt()
}
