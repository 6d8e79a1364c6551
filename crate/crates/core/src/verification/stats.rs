use serde::Serialize;

use crate::error::{contract, Result};
use crate::gaussian::phi_std;

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_Z_MAX: f64 = 3.5;
/// Minimal number of paths for a residual test.
pub const MIN_PATHS: usize = 1000;
/// Buckets with fewer paths are skipped by the orthogonality test.
pub const MIN_BUCKET: usize = 100;
/// Number of tested points up to which `z_max` is used unchanged.
const UNWIDENED_POINTS: usize = 5;

/// Information available at a test time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservedState {
    pub alive: bool,
    pub regime: usize,
    /// Last observed log price (0 for chain-only models).
    pub log_x: f64,
}

/// Per-path ingredients of `M_t = 1{τ ≤ t} − A(t ∧ τ)` at the test times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathOutcome {
    pub tau: f64,
    /// Whether the event at `τ` is counted by the tested point process.
    pub counted: bool,
    /// `A(t_k ∧ τ)` for each test time.
    pub compensator: Vec<f64>,
    pub state: Vec<ObservedState>,
}

impl PathOutcome {
    pub fn residual(&self, k: usize, t: f64) -> f64 {
        let n = if self.counted && self.tau <= t { 1.0 } else { 0.0 };
        n - self.compensator[k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleRow {
    pub t: f64,
    /// Start of the increment for orthogonality rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bucket: Option<String>,
    pub n: usize,
    pub mean: f64,
    pub se: f64,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub format_version: u32,
    pub label: String,
    pub z_max: f64,
    /// Per-row threshold after the multiple-testing adjustment.
    pub threshold: f64,
    pub n_paths: usize,
    pub rows: Vec<MartingaleRow>,
    pub skipped_mass: f64,
    pub pass: bool,
    pub inconclusive: bool,
    pub notices: Vec<String>,
}

/// Per-point threshold for `m` simultaneous two-sided tests: `z_max` up to
/// five points, otherwise the Bonferroni split of the family error rate of
/// five tests at `z_max`.
pub fn adjusted_threshold(z_max: f64, m: usize) -> f64 {
    if m <= UNWIDENED_POINTS {
        return z_max;
    }
    let family = UNWIDENED_POINTS as f64 * 2.0 * phi_std(-z_max);
    let tail = family / (2.0 * m as f64);
    let (mut lo, mut hi) = (z_max, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_std(-mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn summarize(values: impl Iterator<Item = f64>) -> (usize, f64, f64) {
    // Welford
    let mut n = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for v in values {
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    if n < 2 {
        return (n, mean, f64::NAN);
    }
    let var = m2 / (n - 1) as f64;
    (n, mean, (var / n as f64).sqrt())
}

fn row(t: f64, s: Option<f64>, bucket: Option<String>, n: usize, mean: f64, se: f64, threshold: f64) -> MartingaleRow {
    let z = if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        mean.signum() * f64::INFINITY
    };
    MartingaleRow { t, s, bucket, n, mean, se, z, pass: z.abs() <= threshold }
}

/// Tests `E[1{τ ≤ t} − A(t ∧ τ)] = 0` at each test time.
pub fn martingale_residual_test(outcomes: &[PathOutcome], times: &[f64], z_max: f64) -> Result<MartingaleReport> {
    if outcomes.len() < MIN_PATHS {
        return contract(format!("{} paths; the residual test needs at least {MIN_PATHS}", outcomes.len()));
    }
    if outcomes.iter().any(|o| o.compensator.len() != times.len()) {
        return contract("compensator samples do not match the test times");
    }
    let threshold = adjusted_threshold(z_max, times.len());
    let rows: Vec<MartingaleRow> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let (n, mean, se) = summarize(outcomes.iter().map(|o| o.residual(k, t)));
            row(t, None, None, n, mean, se, threshold)
        })
        .collect();
    let tau0 = outcomes[0].tau;
    let inconclusive = outcomes.iter().all(|o| o.tau == tau0 && o.compensator.iter().all(|&a| a == 0.0));
    let mut notices = Vec::new();
    if inconclusive {
        notices.push("all default times equal and A identically zero".to_string());
    }
    Ok(MartingaleReport {
        format_version: FORMAT_VERSION,
        label: "martingale residual".into(),
        z_max,
        threshold,
        n_paths: outcomes.len(),
        pass: rows.iter().all(|r| r.pass),
        rows,
        skipped_mass: 0.0,
        inconclusive,
        notices,
    })
}

/// How paths are grouped by their time-`s` information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bucketing {
    /// One bucket holding every path.
    Whole,
    /// Alive paths by regime and by tercile of the observed log price;
    /// defaulted paths in their own bucket.
    RegimePrice,
    /// Alive paths by regime only.
    Regime,
}

fn tercile_edges(values: &mut [f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    (values[n / 3], values[(2 * n) / 3])
}

/// Tests `E[(M_t − M_s) 1_B] = 0` over buckets `B` of the time-`s`
/// information, for each consecutive pair of test times.
pub fn orthogonality_test(
    outcomes: &[PathOutcome],
    times: &[f64],
    bucketing: Bucketing,
    z_max: f64,
) -> Result<MartingaleReport> {
    if outcomes.len() < MIN_PATHS {
        return contract(format!("{} paths; the orthogonality test needs at least {MIN_PATHS}", outcomes.len()));
    }
    if outcomes.iter().any(|o| o.compensator.len() != times.len() || o.state.len() != times.len()) {
        return contract("path samples do not match the test times");
    }
    let mut groups: Vec<(f64, f64, String, Vec<f64>)> = Vec::new();
    let mut notices = Vec::new();
    let mut pairs: Vec<(usize, usize)> = (1..times.len()).map(|k| (k - 1, k)).collect();
    if pairs.is_empty() && !times.is_empty() {
        pairs.push((0, 0));
    }
    for &(ks, kt) in &pairs {
        let (s, t) = (times[ks], times[kt]);
        let mut alive_x: Vec<f64> = outcomes.iter().filter(|o| o.state[ks].alive).map(|o| o.state[ks].log_x).collect();
        let (e1, e2) = tercile_edges(&mut alive_x);
        let mut labels: Vec<String> = Vec::new();
        let mut buckets: Vec<Vec<f64>> = Vec::new();
        for o in outcomes {
            let st = o.state[ks];
            let label = match bucketing {
                Bucketing::Whole => "all".to_string(),
                _ if !st.alive => "defaulted".to_string(),
                Bucketing::Regime => format!("regime={}", st.regime),
                Bucketing::RegimePrice => {
                    let q = if st.log_x <= e1 {
                        0
                    } else if st.log_x <= e2 {
                        1
                    } else {
                        2
                    };
                    format!("regime={},x_tercile={q}", st.regime)
                }
            };
            let incr = if ks == kt { o.residual(kt, t) } else { o.residual(kt, t) - o.residual(ks, s) };
            match labels.iter().position(|l| *l == label) {
                Some(i) => buckets[i].push(incr),
                None => {
                    labels.push(label);
                    buckets.push(vec![incr]);
                }
            }
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        for i in order {
            let vals = std::mem::take(&mut buckets[i]);
            if vals.len() < MIN_BUCKET {
                notices.push(format!("s={s}, t={t}: bucket {} has {} paths; skipped", labels[i], vals.len()));
                continue;
            }
            if vals.iter().all(|&v| v == 0.0) {
                notices.push(format!("s={s}, t={t}: bucket {} has zero increments; skipped", labels[i]));
                continue;
            }
            groups.push((s, t, labels[i].clone(), vals));
        }
    }
    let threshold = adjusted_threshold(z_max, groups.len());
    let rows: Vec<MartingaleRow> = groups
        .into_iter()
        .map(|(s, t, label, vals)| {
            let (n, mean, se) = summarize(vals.into_iter());
            row(t, Some(s), Some(label), n, mean, se, threshold)
        })
        .collect();
    Ok(MartingaleReport {
        format_version: FORMAT_VERSION,
        label: "orthogonality".into(),
        z_max,
        threshold,
        n_paths: outcomes.len(),
        pass: rows.iter().all(|r| r.pass),
        inconclusive: rows.is_empty(),
        rows,
        skipped_mass: 0.0,
        notices,
    })
}
