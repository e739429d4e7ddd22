//! `key = value` experiment files. Blank lines and `#` comments are ignored.
//!
//! ```text
//! n = 100
//! reps = 1000
//! seed = 42
//! mechanisms = RM,TTC,DA
//! thresholds = 1,2,logn,0.1n,0.25n,0.5n
//! manipulation = DropAssigned
//! share = 0.4
//! market = data/sample.txt   # fixed market instead of uniform draws
//! ```

use std::path::PathBuf;

use thiserror::Error;

use matchlab::MechanismKind;

use crate::experiment::Threshold;
use crate::manipulation::ManipulationKind;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub mechanisms: Option<Vec<MechanismKind>>,
    pub thresholds: Option<Vec<Threshold>>,
    pub manipulation: Option<ManipulationKind>,
    pub share: Option<f64>,
    pub market: Option<PathBuf>,
}

#[derive(Debug, Error, PartialEq)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

pub fn parse_mechanisms(list: &str) -> Result<Vec<MechanismKind>, String> {
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let k: MechanismKind = tok
            .parse()
            .map_err(|e: matchlab::mechanisms::ParseMechanismError| e.to_string())?;
        if !out.contains(&k) {
            out.push(k);
        }
    }
    if out.is_empty() {
        return Err("empty mechanism list".into());
    }
    Ok(out)
}

pub fn parse_thresholds(list: &str) -> Result<Vec<Threshold>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let mut cfg = ConfigFile::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError { line, message };
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got {body:?}")))?;
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        let num = |what: &str| err(format!("bad {what} {value:?}"));
        match key.as_str() {
            "n" => cfg.n = Some(value.parse().map_err(|_| num("n"))?),
            "reps" | "replications" => {
                cfg.replications = Some(value.parse().map_err(|_| num("replication count"))?)
            }
            "seed" | "master_seed" => cfg.seed = Some(value.parse().map_err(|_| num("seed"))?),
            "mechanisms" => cfg.mechanisms = Some(parse_mechanisms(value).map_err(err)?),
            "thresholds" => cfg.thresholds = Some(parse_thresholds(value).map_err(err)?),
            "manipulation" | "kind" => {
                cfg.manipulation = Some(value.parse().map_err(|e| err(format!("{e}")))?)
            }
            "share" => cfg.share = Some(value.parse().map_err(|_| num("share"))?),
            "market" => cfg.market = Some(PathBuf::from(value)),
            _ => return Err(err(format!("unknown key {key:?}"))),
        }
    }
    Ok(cfg)
}
