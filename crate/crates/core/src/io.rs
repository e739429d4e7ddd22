//! Plain-text market files.
//!
//! ```text
//! # comments and blank lines are ignored
//! [schools]
//! 1,1            # school_id,capacity
//! 2,1
//! [students]
//! 1,1;2          # student_id,pref1;pref2;...
//! 2,2;1
//! [priorities]
//! 1,2;1          # school_id,stud1;stud2;...
//! 2,1;2
//! ```
//!
//! Ids are non-negative integers. A student row with nothing after the comma
//! ranks no school; a school without a priority row lists no student. The
//! writer emits every section in ascending id order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{Market, SchoolId, StudentId, Violation};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no students")]
    NoStudents,
    #[error("invalid market: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Schools,
    Students,
    Priorities,
}

fn parse_id(token: &str, line: usize) -> Result<u32, LoadError> {
    token.trim().parse::<u32>().map_err(|_| LoadError::Parse {
        line,
        message: format!("bad id {token:?}"),
    })
}

fn parse_list(list: &str, line: usize) -> Result<Vec<u32>, LoadError> {
    let list = list.trim();
    if list.is_empty() {
        return Ok(Vec::new());
    }
    list.split(';').map(|t| parse_id(t, line)).collect()
}

fn split_row(body: &str, line: usize) -> Result<(&str, &str), LoadError> {
    body.split_once(',').ok_or_else(|| LoadError::Parse {
        line,
        message: format!("expected `id,...`, got {body:?}"),
    })
}

/// Parses a market from text and validates it.
pub fn parse_market(text: &str) -> Result<Market, LoadError> {
    let mut section = Section::None;
    let mut schools: Vec<(u32, u32)> = Vec::new();
    let mut students: Vec<(u32, Vec<u32>)> = Vec::new();
    let mut priorities: Vec<(usize, u32, Vec<u32>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        match body {
            "[schools]" => section = Section::Schools,
            "[students]" => section = Section::Students,
            "[priorities]" => section = Section::Priorities,
            _ if body.starts_with('[') => {
                return Err(LoadError::Parse {
                    line,
                    message: format!("unknown section {body}"),
                })
            }
            _ => match section {
                Section::None => {
                    return Err(LoadError::Parse {
                        line,
                        message: "data before the first section header".into(),
                    })
                }
                Section::Schools => {
                    let (id, cap) = split_row(body, line)?;
                    let cap = cap.trim().parse::<u32>().map_err(|_| LoadError::Parse {
                        line,
                        message: format!("bad capacity {cap:?}"),
                    })?;
                    schools.push((parse_id(id, line)?, cap));
                }
                Section::Students => {
                    let (id, list) = split_row(body, line)?;
                    students.push((parse_id(id, line)?, parse_list(list, line)?));
                }
                Section::Priorities => {
                    let (id, list) = split_row(body, line)?;
                    priorities.push((line, parse_id(id, line)?, parse_list(list, line)?));
                }
            },
        }
    }
    if students.is_empty() {
        return Err(LoadError::NoStudents);
    }

    schools.sort_by_key(|&(id, _)| id);
    students.sort_by_key(|s| s.0);

    let mut violations = Vec::new();
    let mut school_index = BTreeMap::new();
    // duplicate ids are reported by `Market::validate` below
    for (i, &(id, _)) in schools.iter().enumerate() {
        school_index.entry(id).or_insert(i);
    }
    let mut student_index = BTreeMap::new();
    for (i, (id, _)) in students.iter().enumerate() {
        student_index.entry(*id).or_insert(i);
    }

    let prefs: Vec<Vec<SchoolId>> = students
        .iter()
        .map(|(t, list)| {
            list.iter()
                .filter_map(|s| match school_index.get(s) {
                    Some(&i) => Some(SchoolId(i as u32)),
                    None => {
                        violations.push(Violation::UnknownSchool {
                            student: *t,
                            school: *s,
                        });
                        None
                    }
                })
                .collect()
        })
        .collect();

    let mut priority_lists = vec![Vec::new(); schools.len()];
    let mut seen_priority_row = vec![false; schools.len()];
    for (line, s, list) in priorities {
        let Some(&si) = school_index.get(&s) else {
            return Err(LoadError::Parse {
                line,
                message: format!("priority row for unknown school {s}"),
            });
        };
        if std::mem::replace(&mut seen_priority_row[si], true) {
            return Err(LoadError::Parse {
                line,
                message: format!("second priority row for school {s}"),
            });
        }
        priority_lists[si] = list
            .iter()
            .filter_map(|t| match student_index.get(t) {
                Some(&i) => Some(StudentId(i as u32)),
                None => {
                    violations.push(Violation::UnknownStudent {
                        school: s,
                        student: *t,
                    });
                    None
                }
            })
            .collect();
    }

    let market = Market::from_parts(
        students.iter().map(|(id, _)| *id).collect(),
        schools.iter().map(|&(id, _)| id).collect(),
        schools.iter().map(|&(_, c)| c).collect(),
        prefs,
        priority_lists,
    );
    violations.extend(market.validate());
    if violations.is_empty() {
        Ok(market)
    } else {
        Err(LoadError::Invalid(violations))
    }
}

pub fn load_market(path: impl AsRef<Path>) -> Result<Market, LoadError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_market(&text)
}

/// Canonical text form: sections in fixed order, rows by ascending id.
pub fn format_market(market: &Market) -> String {
    let mut out = String::new();
    let join = |ids: &mut dyn Iterator<Item = u32>| {
        ids.map(|i| i.to_string()).collect::<Vec<_>>().join(";")
    };

    let mut schools: Vec<SchoolId> = market.schools().collect();
    schools.sort_by_key(|&s| market.school_label(s));
    let mut students: Vec<StudentId> = market.students().collect();
    students.sort_by_key(|&t| market.student_label(t));

    out.push_str("[schools]\n");
    for &s in &schools {
        let _ = writeln!(out, "{},{}", market.school_label(s), market.capacity(s));
    }
    out.push_str("[students]\n");
    for &t in &students {
        let list = join(&mut market.prefs(t).iter().map(|&s| market.school_label(s)));
        let _ = writeln!(out, "{},{}", market.student_label(t), list);
    }
    out.push_str("[priorities]\n");
    for &s in &schools {
        let list = join(
            &mut market
                .priorities(s)
                .iter()
                .map(|&t| market.student_label(t)),
        );
        let _ = writeln!(out, "{},{}", market.school_label(s), list);
    }
    out
}

pub fn save_market(market: &Market, path: impl AsRef<Path>) -> std::io::Result<()> {
    fs::write(path, format_market(market))
}
