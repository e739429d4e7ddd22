//! Replicated experiments with per-replication records and aggregates.
//!
//! Replication `r` draws everything from `master_seed.derive(r)`: the market
//! from sub-stream 0, each mechanism from a fixed sub-stream of its own, and
//! the manipulating subset from sub-stream [`MANIPULATION_STREAM`]. Adding or
//! removing a mechanism therefore never changes what the others see.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use matchlab::metrics::threshold_shares;
use matchlab::{
    rank_stats, run_mechanism, Allocation, Market, MechanismError, MechanismKind, ModelError, Seed,
};

use crate::generate::generate_uniform_market;
use crate::manipulation::{apply_manipulation, check_share, ManipulationError, ManipulationSpec};

pub const MARKET_STREAM: u64 = 0;
pub const MANIPULATION_STREAM: u64 = 16;

pub const CSV_HEADER: &str = "mechanism,n,reps,mean,se_mean,max_mean,se_max,variance,envy_share,unassigned,threshold_m,share_gt_m";

/// Sub-stream of a replication seed used by `kind`.
pub fn mechanism_stream(kind: MechanismKind) -> u64 {
    match kind {
        MechanismKind::Rm => 1,
        MechanismKind::Ttc => 2,
        MechanismKind::Da => 3,
        MechanismKind::Rsd => 4,
    }
}

/// Rank cutoff `m`; shares report students with rank strictly above it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// Natural log of the market size.
    LogN,
    /// A fraction of the market size.
    FractionOfN(f64),
}

impl Threshold {
    pub fn defaults() -> Vec<Threshold> {
        vec![
            Threshold::Fixed(1.0),
            Threshold::Fixed(2.0),
            Threshold::LogN,
            Threshold::FractionOfN(0.1),
            Threshold::FractionOfN(0.25),
            Threshold::FractionOfN(0.5),
        ]
    }

    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Threshold::Fixed(m) => m,
            Threshold::LogN => (n as f64).ln(),
            Threshold::FractionOfN(f) => f * n as f64,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Fixed(m) => write!(f, "{m}"),
            Threshold::LogN => f.write_str("logn"),
            Threshold::FractionOfN(x) => write!(f, "{x}n"),
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    /// Accepts `3`, `logn` (or `log`), and `0.25n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        let bad = || {
            format!("bad threshold {s:?} (expected a number, `logn`, or a fraction like `0.1n`)")
        };
        let ok = |x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(x)
            } else {
                Err(bad())
            }
        };
        if t == "log" || t == "logn" || t == "ln" || t == "lnn" {
            return Ok(Threshold::LogN);
        }
        if let Some(f) = t.strip_suffix('n') {
            let f = if f.is_empty() {
                1.0
            } else {
                f.parse::<f64>().map_err(|_| bad())?
            };
            return Ok(Threshold::FractionOfN(ok(f)?));
        }
        Ok(Threshold::Fixed(ok(t
            .parse::<f64>()
            .map_err(|_| bad())?)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MarketSource {
    /// A fresh uniform market of this size per replication.
    Uniform(usize),
    /// The same market in every replication; only mechanism seeds vary.
    Fixed(Market),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub market: MarketSource,
    pub replications: usize,
    pub master_seed: Seed,
    pub mechanisms: Vec<MechanismKind>,
    pub thresholds: Vec<Threshold>,
    pub manipulation: Option<ManipulationSpec>,
}

impl ExperimentConfig {
    pub fn uniform(
        n: usize,
        replications: usize,
        master_seed: u64,
        mechanisms: &[MechanismKind],
    ) -> Self {
        ExperimentConfig {
            market: MarketSource::Uniform(n),
            replications,
            master_seed: Seed(master_seed),
            mechanisms: mechanisms.to_vec(),
            thresholds: Threshold::defaults(),
            manipulation: None,
        }
    }

    pub fn n(&self) -> usize {
        match &self.market {
            MarketSource::Uniform(n) => *n,
            MarketSource::Fixed(m) => m.n_students(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidConfig(m.to_string()));
        if self.n() == 0 {
            return bad("market size must be at least 1");
        }
        if self.replications == 0 {
            return bad("replications must be at least 1");
        }
        if self.mechanisms.is_empty() && self.manipulation.is_none() {
            return bad("no mechanisms selected");
        }
        if let Some(spec) = &self.manipulation {
            check_share(spec.share)?;
        }
        if let MarketSource::Fixed(m) = &self.market {
            let v = m.validate();
            if !v.is_empty() {
                return Err(ExperimentError::Model(ModelError::InvalidMarket(v)));
            }
        }
        Ok(())
    }

    /// Report rows in output order. Under manipulation, truthful RM always
    /// appears, followed by the manipulated RM row.
    pub fn labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |s: String| {
            if !out.contains(&s) {
                out.push(s)
            }
        };
        if let Some(spec) = &self.manipulation {
            push(MechanismKind::Rm.to_string());
            push(manipulated_label(spec));
        }
        for k in &self.mechanisms {
            push(k.to_string());
        }
        out
    }
}

pub fn manipulated_label(spec: &ManipulationSpec) -> String {
    format!("RM:{}:{}", spec.kind, spec.share)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Manipulation(#[from] ManipulationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("replication {index}: {source}")]
    Mechanism {
        index: usize,
        source: MechanismError,
    },
    #[error("replication {index}: {source}")]
    ReplicationManipulation {
        index: usize,
        source: ManipulationError,
    },
    #[error("replication {index}: {source}")]
    ReplicationModel { index: usize, source: ModelError },
}

impl ExperimentError {
    /// True for errors caused by bad input rather than a failing run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ExperimentError::InvalidConfig(_)
                | ExperimentError::Manipulation(_)
                | ExperimentError::Model(_)
        )
    }
}

/// Statistics of one mechanism in one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub mean: f64,
    pub max: u32,
    pub variance: f64,
    pub envy_share: f64,
    pub unassigned: usize,
    pub rank_sum: u64,
    /// One entry per configured threshold.
    pub shares: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: Seed,
    /// Same order as [`ExperimentConfig::labels`].
    pub outcomes: Vec<Outcome>,
}

/// Averages over replications, with standard errors of the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub label: String,
    pub mean: f64,
    pub se_mean: f64,
    pub max_mean: f64,
    pub se_max: f64,
    pub variance: f64,
    pub envy_share: f64,
    pub unassigned: f64,
    pub shares: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub n: usize,
    pub replications: usize,
    /// Resolved cutoffs, aligned with each summary's `shares`.
    pub thresholds: Vec<f64>,
    pub summaries: Vec<Summary>,
    pub records: Vec<ReplicationRecord>,
}

impl ExperimentReport {
    pub fn summary(&self, label: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.label == label)
    }

    /// Per-replication outcomes of one row label.
    pub fn outcomes<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a Outcome> + 'a {
        self.records
            .iter()
            .flat_map(move |r| r.outcomes.iter().filter(move |o| o.label == label))
    }

    /// Long-format CSV, one row per label and threshold (a single row with
    /// empty threshold fields when no thresholds are configured).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.summaries {
            let head = format!(
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                s.label,
                self.n,
                self.replications,
                s.mean,
                s.se_mean,
                s.max_mean,
                s.se_max,
                s.variance,
                s.envy_share,
                s.unassigned
            );
            if self.thresholds.is_empty() {
                let _ = writeln!(out, "{head},,");
            }
            for (m, share) in self.thresholds.iter().zip(&s.shares) {
                let _ = writeln!(out, "{head},{m:.6},{share:.6}");
            }
        }
        out
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(values: impl ExactSizeIterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn outcome(
    label: String,
    scoring: &Market,
    a: &Allocation,
    cutoffs: &[f64],
) -> Result<Outcome, ModelError> {
    let st = rank_stats(scoring, a)?;
    Ok(Outcome {
        label,
        mean: st.mean,
        max: st.max,
        variance: st.variance,
        envy_share: st.envy_share,
        unassigned: st.unassigned_count,
        rank_sum: st.rank_sum,
        shares: threshold_shares(&st, cutoffs),
    })
}

/// Runs one replication. Exposed so single replications can be replayed.
pub fn run_replication(
    config: &ExperimentConfig,
    index: usize,
) -> Result<ReplicationRecord, ExperimentError> {
    let seed = config.master_seed.derive(index as u64);
    let generated;
    let market = match &config.market {
        MarketSource::Uniform(n) => {
            generated = generate_uniform_market(*n, seed.derive(MARKET_STREAM));
            &generated
        }
        MarketSource::Fixed(m) => m,
    };
    let cutoffs: Vec<f64> = config
        .thresholds
        .iter()
        .map(|t| t.resolve(market.n_students()))
        .collect();
    let mech_err = |source| ExperimentError::Mechanism { index, source };
    let model_err = |source| ExperimentError::ReplicationModel { index, source };

    let mut outcomes = Vec::new();
    let mut truthful_rm = None;
    if let Some(spec) = &config.manipulation {
        let rm_seed = seed.derive(mechanism_stream(MechanismKind::Rm));
        let baseline = run_mechanism(MechanismKind::Rm, market, rm_seed).map_err(mech_err)?;
        let manipulated = apply_manipulation(
            market,
            &baseline,
            spec.kind,
            spec.share,
            seed.derive(MANIPULATION_STREAM),
        )
        .map_err(|source| ExperimentError::ReplicationManipulation { index, source })?;
        let after = run_mechanism(MechanismKind::Rm, &manipulated, rm_seed).map_err(mech_err)?;
        // scored against the true preferences
        outcomes.push(
            outcome(MechanismKind::Rm.to_string(), market, &baseline, &cutoffs)
                .map_err(model_err)?,
        );
        outcomes
            .push(outcome(manipulated_label(spec), market, &after, &cutoffs).map_err(model_err)?);
        truthful_rm = Some(baseline);
    }
    for &kind in &config.mechanisms {
        let label = kind.to_string();
        if outcomes.iter().any(|o| o.label == label) {
            continue;
        }
        let a = match (kind, &truthful_rm) {
            (MechanismKind::Rm, Some(a)) => a.clone(),
            _ => run_mechanism(kind, market, seed.derive(mechanism_stream(kind)))
                .map_err(mech_err)?,
        };
        outcomes.push(outcome(label, market, &a, &cutoffs).map_err(model_err)?);
    }
    Ok(ReplicationRecord {
        index,
        seed,
        outcomes,
    })
}

/// Runs all replications in parallel and aggregates them in index order, so
/// the report does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let records: Vec<ReplicationRecord> = (0..config.replications)
        .into_par_iter()
        .map(|i| run_replication(config, i))
        .collect::<Result<_, _>>()?;

    let n = config.n();
    let labels = config.labels();
    let summaries = labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let col = |f: fn(&Outcome) -> f64| records.iter().map(move |r| f(&r.outcomes[j]));
            let (mean, se_mean) = mean_se(col(|o| o.mean));
            let (max_mean, se_max) = mean_se(col(|o| o.max as f64));
            let avg = |f: fn(&Outcome) -> f64| mean_se(col(f)).0;
            let shares = (0..config.thresholds.len())
                .map(|k| {
                    records.iter().map(|r| r.outcomes[j].shares[k]).sum::<f64>()
                        / records.len() as f64
                })
                .collect();
            Summary {
                label: label.clone(),
                mean,
                se_mean,
                max_mean,
                se_max,
                variance: avg(|o| o.variance),
                envy_share: avg(|o| o.envy_share),
                unassigned: avg(|o| o.unassigned as f64),
                shares,
            }
        })
        .collect();
    Ok(ExperimentReport {
        n,
        replications: config.replications,
        thresholds: config.thresholds.iter().map(|t| t.resolve(n)).collect(),
        summaries,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manipulation::ManipulationKind;

    #[test]
    fn threshold_parsing() {
        assert_eq!("2".parse::<Threshold>().unwrap(), Threshold::Fixed(2.0));
        assert_eq!("log n".parse::<Threshold>().unwrap(), Threshold::LogN);
        assert_eq!(
            "0.25n".parse::<Threshold>().unwrap(),
            Threshold::FractionOfN(0.25)
        );
        assert!("-1".parse::<Threshold>().is_err());
        assert!("abc".parse::<Threshold>().is_err());
        assert_eq!(Threshold::FractionOfN(0.1).resolve(500), 50.0);
        for t in Threshold::defaults() {
            assert_eq!(t.to_string().parse::<Threshold>().unwrap(), t);
        }
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_se([1.0, 2.0, 3.0, 4.0].into_iter());
        assert_eq!(m, 2.5);
        // sample sd sqrt(5/3), divided by sqrt(4)
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(mean_se([7.0].into_iter()), (7.0, 0.0));
    }

    #[test]
    fn small_experiment_shapes() {
        let cfg = ExperimentConfig::uniform(12, 5, 9, &[MechanismKind::Da, MechanismKind::Rm]);
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(rep.records.len(), 5);
        assert_eq!(
            rep.summaries
                .iter()
                .map(|s| s.label.as_str())
                .collect::<Vec<_>>(),
            ["DA", "RM"]
        );
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 6);
        assert!(csv.lines().nth(1).unwrap().starts_with("DA,12,5,"));
        assert!(rep.outcomes("DA").all(|o| o.envy_share == 0.0));
        assert_eq!(run_experiment(&cfg).unwrap().to_csv(), csv);
    }

    #[test]
    fn mechanism_streams_do_not_depend_on_the_set() {
        let both = run_experiment(&ExperimentConfig::uniform(
            15,
            4,
            1,
            &[MechanismKind::Ttc, MechanismKind::Rm],
        ))
        .unwrap();
        let alone =
            run_experiment(&ExperimentConfig::uniform(15, 4, 1, &[MechanismKind::Rm])).unwrap();
        assert_eq!(both.summary("RM"), alone.summary("RM"));
    }

    #[test]
    fn zero_share_matches_truthful_rm() {
        let mut cfg = ExperimentConfig::uniform(20, 6, 3, &[MechanismKind::Rm, MechanismKind::Da]);
        cfg.manipulation = Some(ManipulationSpec {
            kind: ManipulationKind::DropFirst,
            share: 0.0,
        });
        let rep = run_experiment(&cfg).unwrap();
        assert_eq!(cfg.labels(), ["RM", "RM:DropFirst:0", "DA"]);
        let a = rep.summary("RM").unwrap();
        let b = rep.summary("RM:DropFirst:0").unwrap();
        assert_eq!(
            (a.mean, a.max_mean, a.variance, &a.shares),
            (b.mean, b.max_mean, b.variance, &b.shares)
        );
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ExperimentConfig::uniform(0, 1, 0, &[MechanismKind::Da]);
        assert!(run_experiment(&cfg).unwrap_err().is_validation());
        cfg.market = MarketSource::Uniform(3);
        cfg.replications = 0;
        assert!(run_experiment(&cfg).unwrap_err().is_validation());
        cfg.replications = 1;
        cfg.manipulation = Some(ManipulationSpec {
            kind: ManipulationKind::DropFirst,
            share: 2.0,
        });
        assert!(matches!(
            run_experiment(&cfg),
            Err(ExperimentError::Manipulation(_))
        ));
    }

    #[test]
    fn fixed_market_is_reused() {
        let m = generate_uniform_market(6, Seed(2));
        let cfg = ExperimentConfig {
            market: MarketSource::Fixed(m),
            replications: 3,
            master_seed: Seed(0),
            mechanisms: vec![MechanismKind::Da],
            thresholds: vec![],
            manipulation: None,
        };
        let rep = run_experiment(&cfg).unwrap();
        let sums: Vec<u64> = rep.outcomes("DA").map(|o| o.rank_sum).collect();
        assert!(sums.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(rep.summary("DA").unwrap().se_mean, 0.0);
        assert!(rep.to_csv().lines().nth(1).unwrap().ends_with(",,"));
    }
}
