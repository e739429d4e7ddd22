use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use thiserror::Error;

use matchlab::{Allocation, Market, ModelError, SchoolId, Seed, StudentId};

/// Single-round list manipulations applied against a truthful baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ManipulationKind {
    /// Move the baseline school to the end of the list.
    DropAssigned,
    /// Move the first choice to the end of the list.
    DropFirst,
}

impl ManipulationKind {
    pub const ALL: [ManipulationKind; 2] =
        [ManipulationKind::DropAssigned, ManipulationKind::DropFirst];

    pub fn as_str(self) -> &'static str {
        match self {
            ManipulationKind::DropAssigned => "DropAssigned",
            ManipulationKind::DropFirst => "DropFirst",
        }
    }

    /// Whether a student with baseline `placement` and effective `rank` may
    /// manipulate. DropAssigned needs a seat that is not the first choice;
    /// DropFirst needs a result worse than the second choice.
    pub fn eligible(self, placement: Option<SchoolId>, rank: u32) -> bool {
        match self {
            ManipulationKind::DropAssigned => placement.is_some() && rank >= 2,
            ManipulationKind::DropFirst => rank >= 3,
        }
    }

    /// The manipulated list. `placement` is the baseline seat.
    pub fn transform(self, list: &[SchoolId], placement: Option<SchoolId>) -> Vec<SchoolId> {
        let moved = match self {
            ManipulationKind::DropAssigned => {
                placement.and_then(|s| list.iter().position(|&x| x == s))
            }
            ManipulationKind::DropFirst => (!list.is_empty()).then_some(0),
        };
        let mut out = list.to_vec();
        if let Some(i) = moved {
            let s = out.remove(i);
            out.push(s);
        }
        out
    }
}

impl fmt::Display for ManipulationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManipulationKind {
    type Err = ManipulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "dropassigned" => Ok(ManipulationKind::DropAssigned),
            "dropfirst" => Ok(ManipulationKind::DropFirst),
            _ => Err(ManipulationError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManipulationSpec {
    pub kind: ManipulationKind,
    pub share: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManipulationError {
    #[error("share {0} outside [0, 1]")]
    ShareOutOfRange(f64),
    #[error("unknown manipulation {0:?} (expected DropAssigned or DropFirst)")]
    UnknownKind(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn check_share(share: f64) -> Result<(), ManipulationError> {
    if (0.0..=1.0).contains(&share) {
        Ok(())
    } else {
        Err(ManipulationError::ShareOutOfRange(share))
    }
}

/// Students eligible for `kind` under `baseline`, in index order.
pub fn eligible_students(
    market: &Market,
    baseline: &Allocation,
    kind: ManipulationKind,
) -> Result<Vec<StudentId>, ManipulationError> {
    baseline.check(market)?;
    let ranks = baseline.ranks(market)?;
    Ok(baseline
        .iter()
        .filter(|&(t, p)| kind.eligible(p, ranks[t.index()]))
        .map(|(t, _)| t)
        .collect())
}

/// Rewrites the lists of `round(share * |eligible|)` eligible students,
/// chosen uniformly with `seed`. Everyone else keeps their list.
pub fn apply_manipulation(
    market: &Market,
    baseline: &Allocation,
    kind: ManipulationKind,
    share: f64,
    seed: Seed,
) -> Result<Market, ManipulationError> {
    check_share(share)?;
    let eligible = eligible_students(market, baseline, kind)?;
    let count = (share * eligible.len() as f64).round() as usize;
    let mut rng = seed.rng();
    let mut prefs = market.all_prefs().to_vec();
    for i in sample(&mut rng, eligible.len(), count).iter() {
        let t = eligible[i];
        prefs[t.index()] = kind.transform(market.prefs(t), baseline.school_of(t));
    }
    Ok(Market::from_parts(
        market.student_labels().to_vec(),
        market.school_labels().to_vec(),
        market.capacities().to_vec(),
        prefs,
        market.all_priorities().to_vec(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(ids: &[u32]) -> Vec<SchoolId> {
        ids.iter().map(|&i| SchoolId(i)).collect()
    }

    #[test]
    fn transforms() {
        let (a, b, c) = (SchoolId(0), SchoolId(1), SchoolId(2));
        assert_eq!(
            ManipulationKind::DropAssigned.transform(&[a, b, c], Some(b)),
            vec![a, c, b]
        );
        assert_eq!(
            ManipulationKind::DropFirst.transform(&[a, b, c], Some(c)),
            vec![b, c, a]
        );
        assert_eq!(
            ManipulationKind::DropAssigned.transform(&[a, b], None),
            vec![a, b]
        );
        assert!(ManipulationKind::DropFirst.transform(&[], None).is_empty());
    }

    #[test]
    fn eligibility() {
        use ManipulationKind::*;
        assert!(!DropAssigned.eligible(Some(SchoolId(0)), 1));
        assert!(DropAssigned.eligible(Some(SchoolId(0)), 2));
        assert!(!DropAssigned.eligible(None, 4));
        assert!(!DropFirst.eligible(Some(SchoolId(0)), 2));
        assert!(DropFirst.eligible(Some(SchoolId(0)), 3));
        assert!(DropFirst.eligible(None, 3));
    }

    #[test]
    fn parse_kind() {
        assert_eq!(
            "drop-assigned".parse::<ManipulationKind>().unwrap(),
            ManipulationKind::DropAssigned
        );
        assert_eq!(
            "DropFirst".parse::<ManipulationKind>().unwrap(),
            ManipulationKind::DropFirst
        );
        assert_eq!(
            "drop_first".parse::<ManipulationKind>().unwrap(),
            ManipulationKind::DropFirst
        );
        assert!("swap".parse::<ManipulationKind>().is_err());
    }

    #[test]
    fn full_share_rewrites_every_eligible_student() {
        let prefs = vec![sc(&[0, 1, 2]), sc(&[0, 1, 2]), sc(&[0, 1, 2])];
        let pri = vec![vec![StudentId(0), StudentId(1), StudentId(2)]; 3];
        let m = Market::one_to_one(prefs, pri).unwrap();
        let base = Allocation::new(vec![
            Some(SchoolId(0)),
            Some(SchoolId(1)),
            Some(SchoolId(2)),
        ]);

        let da =
            apply_manipulation(&m, &base, ManipulationKind::DropAssigned, 1.0, Seed(3)).unwrap();
        assert_eq!(da.prefs(StudentId(0)), &sc(&[0, 1, 2])[..]);
        assert_eq!(da.prefs(StudentId(1)), &sc(&[0, 2, 1])[..]);
        assert_eq!(da.prefs(StudentId(2)), &sc(&[0, 1, 2])[..]);

        let df = apply_manipulation(&m, &base, ManipulationKind::DropFirst, 1.0, Seed(3)).unwrap();
        assert_eq!(df.prefs(StudentId(2)), &sc(&[1, 2, 0])[..]);
        assert_eq!(df.prefs(StudentId(1)), &sc(&[0, 1, 2])[..]);

        assert_eq!(
            apply_manipulation(&m, &base, ManipulationKind::DropFirst, 0.0, Seed(3)).unwrap(),
            m
        );
        assert_eq!(
            apply_manipulation(&m, &base, ManipulationKind::DropFirst, 1.5, Seed(3)),
            Err(ManipulationError::ShareOutOfRange(1.5))
        );
    }

    #[test]
    fn half_share_rounds_and_samples() {
        // four eligible students, share 0.5 -> exactly two lists change
        let n = 5u32;
        let mut prefs = vec![sc(&[0, 1, 2, 3, 4]); n as usize];
        prefs[4] = sc(&[0, 1, 2, 4, 3]);
        let pri = vec![(0..n).map(StudentId).collect::<Vec<_>>(); n as usize];
        let m = Market::one_to_one(prefs, pri).unwrap();
        let base = Allocation::new((0..n).map(|i| Some(SchoolId(i))).collect());
        let mut hit = [0u32; 5];
        for s in 0..400 {
            let out = apply_manipulation(&m, &base, ManipulationKind::DropAssigned, 0.5, Seed(s))
                .unwrap();
            let changed: Vec<usize> = (0..n as usize)
                .filter(|&t| out.prefs(StudentId(t as u32)) != m.prefs(StudentId(t as u32)))
                .collect();
            assert_eq!(changed.len(), 2);
            for t in changed {
                hit[t] += 1;
            }
        }
        assert_eq!(hit[0], 0);
        // each eligible student is picked with probability 1/2
        for &h in &hit[1..] {
            assert!((150..=250).contains(&h), "{hit:?}");
        }
    }
}
