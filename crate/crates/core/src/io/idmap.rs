//! Tab-separated id-map tables.
//!
//! ```text
//! #semid-idmap<TAB>version=1<TAB>strategy=ecm<TAB>kvec=4,4,4<TAB>ranking=score<TAB>on_exhausted=fail[<TAB>extra=...]
//! key<TAB>tokens<TAB>suffix<TAB>ranks<TAB>score
//! doc0<TAB>3 17 5<TAB>-<TAB>1 1 2<TAB>-1.2345
//! ```
//!
//! Rows left without an id carry `-` in the last four columns.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use crate::assign::{
    AssignConfig, AssignReport, Assignment, OnExhausted, RankingStrategy, Strategy,
};
use crate::error::{Error, Result};
use crate::types::SemanticId;

const TAG: &str = "#semid-idmap";
const COLUMNS: &str = "key\ttokens\tsuffix\tranks\tscore";

/// Config recorded in the header row, plus free-form `key=value` extras
/// such as seeds and input paths.
#[derive(Debug, Clone, PartialEq)]
pub struct IdMapHeader {
    pub config: AssignConfig,
    pub extras: Vec<(String, String)>,
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}

fn bad(lineno: usize, reason: impl Into<String>) -> Error {
    Error::Malformed {
        location: format!("line {lineno}"),
        reason: reason.into(),
    }
}

pub fn format_idmap(report: &AssignReport, extras: &[(String, String)]) -> Result<String> {
    let cfg = &report.config;
    let mut out = format!(
        "{TAG}\tversion=1\tstrategy={}\tkvec={}\tranking={}\ton_exhausted={}",
        cfg.strategy,
        join(&cfg.kvec, ","),
        cfg.ranking,
        cfg.on_exhausted
    );
    for (k, v) in extras {
        if k.contains(['\t', '\n', '=']) || v.contains(['\t', '\n']) {
            return Err(Error::InvalidConfig(format!(
                "header extra {k:?}={v:?} is not representable"
            )));
        }
        let _ = write!(out, "\t{k}={v}");
    }
    out.push('\n');
    out.push_str(COLUMNS);
    out.push('\n');
    for (key, a) in report.keys.iter().zip(&report.assignments) {
        if key.contains(['\t', '\n', '\r']) {
            return Err(Error::Malformed {
                location: format!("key {key:?}"),
                reason: "key cannot be written to a tab-separated table".into(),
            });
        }
        match a {
            Some(a) => {
                let suffix = a.suffix.map_or("-".to_string(), |s| s.to_string());
                let _ = writeln!(
                    out,
                    "{key}\t{}\t{suffix}\t{}\t{}",
                    a.id,
                    join(&a.ranks, " "),
                    a.score
                );
            }
            None => {
                let _ = writeln!(out, "{key}\t-\t-\t-\t-");
            }
        }
    }
    Ok(out)
}

fn parse_ranking(v: &str) -> Option<RankingStrategy> {
    match v {
        "score" => Some(RankingStrategy::ResidualScore),
        "order" => Some(RankingStrategy::CombinationOrder),
        _ => v
            .strip_prefix("random:")
            .and_then(|s| s.parse().ok())
            .map(RankingStrategy::Random),
    }
}

pub fn parse_idmap(text: &str) -> Result<(IdMapHeader, AssignReport)> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| bad(1, "empty id map"))?;
    let mut fields = head.split('\t');
    if fields.next() != Some(TAG) {
        return Err(bad(1, "missing #semid-idmap header"));
    }
    let mut strategy = None;
    let mut kvec = None;
    let mut ranking = RankingStrategy::ResidualScore;
    let mut on_exhausted = OnExhausted::Fail;
    let mut extras = Vec::new();
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| bad(1, format!("header field {f:?}")))?;
        match k {
            "version" if v != "1" => {
                return Err(Error::VersionMismatch {
                    expected: 1,
                    found: v.parse().unwrap_or(0),
                })
            }
            "version" => {}
            "strategy" => strategy = Some(v.parse::<Strategy>()?),
            "kvec" => {
                kvec = Some(
                    v.split(',')
                        .map(|x| {
                            x.parse::<usize>()
                                .map_err(|_| bad(1, format!("kvec {v:?}")))
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "ranking" => {
                ranking = parse_ranking(v).ok_or_else(|| bad(1, format!("ranking {v:?}")))?
            }
            "on_exhausted" => {
                on_exhausted = match v {
                    "fail" => OnExhausted::Fail,
                    "widen" => OnExhausted::WidenK,
                    _ => return Err(bad(1, format!("on_exhausted {v:?}"))),
                }
            }
            _ => extras.push((k.to_string(), v.to_string())),
        }
    }
    let config = AssignConfig {
        strategy: strategy.ok_or_else(|| bad(1, "header lacks strategy"))?,
        kvec: kvec.ok_or_else(|| bad(1, "header lacks kvec"))?,
        ranking,
        on_exhausted,
    };
    match lines.next() {
        Some((_, cols)) if cols == COLUMNS => {}
        _ => return Err(bad(2, "missing column header")),
    }
    let mut keys = Vec::new();
    let mut assignments = Vec::new();
    let mut failures = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [key, tokens, suffix, ranks, score] = cols[..] else {
            return Err(bad(
                lineno,
                format!("expected 5 columns, found {}", cols.len()),
            ));
        };
        if !seen.insert(key.to_string()) {
            return Err(Error::DuplicateKey {
                key: key.to_string(),
                location: format!("line {lineno}"),
            });
        }
        if tokens == "-" {
            failures.push(keys.len());
            assignments.push(None);
        } else {
            let id: SemanticId = tokens.parse().map_err(|e| bad(lineno, format!("{e}")))?;
            let suffix = match suffix {
                "-" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| bad(lineno, format!("suffix {s:?}")))?,
                ),
            };
            let ranks = ranks
                .split_whitespace()
                .map(|r| {
                    r.parse::<u32>()
                        .map_err(|_| bad(lineno, format!("rank {r:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let score = score
                .parse::<f64>()
                .map_err(|_| bad(lineno, format!("score {score:?}")))?;
            assignments.push(Some(Assignment {
                id,
                suffix,
                ranks,
                score,
            }));
        }
        keys.push(key.to_string());
    }
    let report = AssignReport {
        config: config.clone(),
        keys,
        assignments,
        failures,
        widenings: 0,
        duration: Duration::ZERO,
    };
    Ok((IdMapHeader { config, extras }, report))
}

pub fn write_idmap(path: &Path, report: &AssignReport, extras: &[(String, String)]) -> Result<()> {
    fs::write(path, format_idmap(report, extras)?)?;
    Ok(())
}

pub fn read_idmap(path: &Path) -> Result<(IdMapHeader, AssignReport)> {
    parse_idmap(&fs::read_to_string(path)?)
}
