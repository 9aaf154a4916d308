//! Instance files, approval ballots and canonical output files.
//!
//! An instance file is a JSON document:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "budget": 3,
//!   "projects": [{"label": "park", "cost": 2}, {"label": "library", "cost": 1}],
//!   "districts": [
//!     {"label": "north", "budget_share": "3/2", "utilities": [4, 0]},
//!     {"label": "south", "budget_share": "3/2", "utilities": [1, 2]}
//!   ]
//! }
//! ```
//!
//! Instead of per-district utilities the file may name a ballots CSV (relative
//! to the instance file) with header `voter_id,district_id,approvals`, where
//! `approvals` is a `;`-separated list of project labels. Utilities are then
//! approval counts per district.
//!
//! Everything written here is pretty JSON with sorted keys and a trailing
//! newline, so rewriting a loaded file reproduces it byte for byte.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{District, Instance, Lottery, LotteryEntry, Outcome, Project};
use crate::rational::{self, Rational};
use crate::report::{LotteryRecord, RunReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub cost: u64,
}

/// A budget share written either as an integer or as a `"num/den"` string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShareValue {
    Integer(u64),
    Text(String),
}

impl ShareValue {
    pub fn to_rational(&self) -> Result<Rational> {
        match self {
            ShareValue::Integer(v) => Ok(rational::int(*v)),
            ShareValue::Text(s) => rational::parse(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistrictEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub budget_share: ShareValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utilities: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub budget: u64,
    pub projects: Vec<ProjectEntry>,
    pub districts: Vec<DistrictEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ballots: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallotRecord {
    pub voter_id: String,
    pub district_id: String,
    /// Approved project labels, `;`-separated in the CSV.
    pub approvals: BTreeSet<String>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Deserializes JSON, reporting the failing field path and position.
fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let at = if field == "." {
            String::new()
        } else {
            format!("field {field}: ")
        };
        parse_error(path, format!("{at}{inner}"))
    })
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let file: InstanceFile = parse_json(path, &read(path)?)?;
    let ballots = match &file.ballots {
        Some(rel) => {
            let csv_path = path.parent().unwrap_or(Path::new(".")).join(rel);
            Some(read_ballots(&csv_path)?)
        }
        None => None,
    };
    instance_from_file(&file, ballots.as_deref())
        .map_err(|e| match e {
            Error::Validation(msg) => parse_error(path, msg),
            other => other,
        })
}

/// Builds an instance from a parsed file and, if the file names one, its ballots.
pub fn instance_from_file(file: &InstanceFile, ballots: Option<&[BallotRecord]>) -> Result<Instance> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(format!(
            "field schema_version: unsupported version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let project_labels = labels(file.projects.iter().map(|p| p.label.as_deref()), "x", "projects")?;
    let district_labels = labels(file.districts.iter().map(|d| d.label.as_deref()), "d", "districts")?;
    let explicit = file.districts.iter().filter(|d| d.utilities.is_some()).count();
    let utilities: Vec<Vec<u64>> = match (&file.ballots, ballots) {
        (Some(_), Some(records)) => {
            if explicit > 0 {
                return Err(Error::validation(
                    "districts give utilities and a ballots file is named; use one or the other",
                ));
            }
            aggregate_ballots(&project_labels, &district_labels, records)?
        }
        (Some(_), None) => return Err(Error::validation("ballots file named but no ballots given")),
        (None, _) => file
            .districts
            .iter()
            .enumerate()
            .map(|(i, d)| {
                d.utilities.clone().ok_or_else(|| {
                    Error::validation(format!(
                        "field districts[{i}].utilities: missing (and no ballots file is named)"
                    ))
                })
            })
            .collect::<Result<_>>()?,
    };
    let projects = file
        .projects
        .iter()
        .map(|p| {
            let project = Project::new(p.cost);
            match &p.label {
                Some(l) => project.with_label(l.clone()),
                None => project,
            }
        })
        .collect();
    let districts = file
        .districts
        .iter()
        .zip(utilities)
        .enumerate()
        .map(|(i, (d, u))| {
            let share = d
                .budget_share
                .to_rational()
                .map_err(|e| Error::validation(format!("field districts[{i}].budget_share: {e}")))?;
            let district = District::new(share, u);
            Ok(match &d.label {
                Some(l) => district.with_label(l.clone()),
                None => district,
            })
        })
        .collect::<Result<_>>()?;
    Instance::new(file.budget, projects, districts)
}

/// Labels with defaults filled in, rejecting duplicates.
fn labels<'a>(given: impl Iterator<Item = Option<&'a str>>, prefix: &str, what: &str) -> Result<Vec<String>> {
    let mut seen = HashSet::new();
    given
        .enumerate()
        .map(|(i, l)| {
            let label = l.map(str::to_string).unwrap_or_else(|| format!("{prefix}{i}"));
            if !seen.insert(label.clone()) {
                return Err(Error::validation(format!(
                    "field {what}[{i}].label: duplicate label {label:?}"
                )));
            }
            Ok(label)
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct BallotRow {
    voter_id: String,
    district_id: String,
    #[serde(default)]
    approvals: String,
}

pub fn read_ballots(path: &Path) -> Result<Vec<BallotRecord>> {
    let text = read(path)?;
    parse_ballots(&text).map_err(|msg| parse_error(path, msg))
}

/// Parses ballot CSV text; errors carry the CSV line number.
pub fn parse_ballots(text: &str) -> std::result::Result<Vec<BallotRecord>, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    let expected = ["voter_id", "district_id", "approvals"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(format!(
            "line 1: header must be {}, got {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let mut records = Vec::new();
    for row in reader.deserialize::<BallotRow>() {
        let row = row.map_err(|e| match e.position() {
            Some(pos) => format!("line {}: {e}", pos.line()),
            None => e.to_string(),
        })?;
        records.push(BallotRecord {
            voter_id: row.voter_id,
            district_id: row.district_id,
            approvals: row
                .approvals
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        });
    }
    Ok(records)
}

/// utilities[i][j] = number of voters in district i approving project j.
pub fn aggregate_ballots(projects: &[String], districts: &[String], ballots: &[BallotRecord]) -> Result<Vec<Vec<u64>>> {
    let project_ids: HashMap<&str, usize> = projects.iter().enumerate().map(|(j, l)| (l.as_str(), j)).collect();
    let district_ids: HashMap<&str, usize> = districts.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut utilities = vec![vec![0u64; projects.len()]; districts.len()];
    let mut voters = HashSet::new();
    for (n, b) in ballots.iter().enumerate() {
        // records start on line 2, after the header
        let line = n + 2;
        if !voters.insert(b.voter_id.as_str()) {
            return Err(Error::validation(format!(
                "ballot line {line}: voter {:?} already voted",
                b.voter_id
            )));
        }
        let &i = district_ids.get(b.district_id.as_str()).ok_or_else(|| {
            Error::validation(format!("ballot line {line}: unknown district {:?}", b.district_id))
        })?;
        for label in &b.approvals {
            let &j = project_ids.get(label.as_str()).ok_or_else(|| {
                Error::validation(format!("ballot line {line}: unknown project {label:?}"))
            })?;
            utilities[i][j] += 1;
        }
    }
    Ok(utilities)
}

/// The file form of an instance, with explicit utilities and shares as fractions.
pub fn instance_to_file(instance: &Instance) -> InstanceFile {
    InstanceFile {
        schema_version: SCHEMA_VERSION,
        budget: instance.budget(),
        projects: instance
            .projects()
            .iter()
            .map(|p| ProjectEntry {
                label: p.label().map(str::to_string),
                cost: p.cost(),
            })
            .collect(),
        districts: instance
            .districts()
            .iter()
            .map(|d| DistrictEntry {
                label: d.label().map(str::to_string),
                budget_share: ShareValue::Text(rational::format(d.budget_share())),
                utilities: Some(d.utilities().to_vec()),
            })
            .collect(),
        ballots: None,
    }
}

/// Pretty JSON with keys sorted at every level and a trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json's Value keeps object keys in a sorted map
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable value");
    s.push('\n');
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    write(path, &to_canonical_json(&instance_to_file(instance)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeFile {
    pub members: Outcome,
}

pub fn outcome_json(w: &Outcome) -> String {
    to_canonical_json(&OutcomeFile { members: w.clone() })
}

pub fn write_outcome(path: &Path, w: &Outcome) -> Result<()> {
    write(path, &outcome_json(w))
}

/// Reads an outcome and checks its members against `instance`.
pub fn load_outcome(path: &Path, instance: &Instance) -> Result<Outcome> {
    let file: OutcomeFile = parse_json(path, &read(path)?)?;
    instance.check_outcome(&file.members)?;
    Ok(file.members)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotteryFile {
    pub entries: Vec<LotteryRecord>,
}

pub fn lottery_json(lottery: &Lottery) -> String {
    to_canonical_json(&LotteryFile {
        entries: lottery
            .entries()
            .iter()
            .map(|e| LotteryRecord {
                outcome: e.outcome.clone(),
                probability: e.probability.clone(),
            })
            .collect(),
    })
}

pub fn write_lottery(path: &Path, lottery: &Lottery) -> Result<()> {
    write(path, &lottery_json(lottery))
}

pub fn load_lottery(path: &Path, instance: &Instance) -> Result<Lottery> {
    let file: LotteryFile = parse_json(path, &read(path)?)?;
    Lottery::new(
        instance,
        file.entries
            .into_iter()
            .map(|e| LotteryEntry {
                outcome: e.outcome,
                probability: e.probability,
            })
            .collect(),
    )
}

pub fn write_report(path: &Path, report: &RunReport) -> Result<()> {
    write(path, &to_canonical_json(report))
}

pub fn load_report(path: &Path) -> Result<RunReport> {
    parse_json(path, &read(path)?)
}

/// A file holding either `{"members": ..}` or `{"entries": ..}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolutionFile {
    Outcome(Outcome),
    Lottery(Lottery),
}

pub fn load_solution(path: &Path, instance: &Instance) -> Result<SolutionFile> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(path, e.to_string()))?;
    if value.get("entries").is_some() {
        load_lottery(path, instance).map(SolutionFile::Lottery)
    } else {
        load_outcome(path, instance).map(SolutionFile::Outcome)
    }
}
