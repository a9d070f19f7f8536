//! Domain-of-interest profiles: the Target, Competitor and Stopwords files.
//!
//! All three files share one grammar: UTF-8, one entry per line, lines whose
//! first non-blank character is `#` are comments, blank lines are ignored.
//! A multi-word line is a phrase, matched as a contiguous run of tokens.
//!
//! On disk a profile directory holds `<name>.target`, `<name>.competitor`
//! and one global `stopwords` file.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{tokenize, Stopwords, Term};

pub const TARGET_EXT: &str = "target";
pub const COMPETITOR_EXT: &str = "competitor";
pub const STOPWORDS_FILE: &str = "stopwords";

/// One line of a profile file: a single keyword or a contiguous phrase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProfileEntry(Vec<Term>);

impl ProfileEntry {
    /// Returns `None` for an empty term list.
    pub fn new(terms: Vec<Term>) -> Option<Self> {
        if terms.is_empty() {
            None
        } else {
            Some(Self(terms))
        }
    }

    pub fn single(term: Term) -> Self {
        Self(vec![term])
    }

    /// Tokenize and normalize a raw line. Stopwords are not removed.
    pub fn parse(raw: &str) -> Option<Self> {
        Self::new(tokenize(raw))
    }

    pub fn terms(&self) -> &[Term] {
        &self.0
    }

    pub fn is_phrase(&self) -> bool {
        self.0.len() > 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for ProfileEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(t.as_str())?;
        }
        Ok(())
    }
}

impl Serialize for ProfileEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ProfileEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Self::parse(&raw).ok_or_else(|| serde::de::Error::custom("entry normalizes to nothing"))
    }
}

pub type EntrySet = BTreeSet<ProfileEntry>;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("line {line}: entry {text:?} consists only of stopwords")]
    MalformedLine { line: usize, text: String },
    #[error("profile not found: {0}")]
    NotFound(String),
    #[error("invalid profile name {0:?}: use letters, digits, '-' or '_'")]
    InvalidName(String),
    #[error("profile {name} is invalid: {}", join_violations(.violations))]
    Invalid { name: String, violations: Vec<Violation> },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<ProfileError>,
    },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parse a Target or Competitor file.
///
/// Lines that normalize to nothing (pure punctuation) are dropped. A line
/// whose tokens are all stopwords is reported, since it could never match.
pub fn parse_profile_file(content: &str, stopwords: &Stopwords) -> Result<EntrySet, ProfileError> {
    let mut entries = EntrySet::new();
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = tokenize(line);
        if tokens.is_empty() {
            continue;
        }
        let kept: Vec<Term> = tokens.into_iter().filter(|t| !stopwords.contains(t)).collect();
        match ProfileEntry::new(kept) {
            Some(entry) => {
                entries.insert(entry);
            }
            None => {
                return Err(ProfileError::MalformedLine {
                    line: idx + 1,
                    text: line.to_string(),
                })
            }
        }
    }
    Ok(entries)
}

/// Render entries in the file grammar, one per line, sorted.
pub fn serialize_entries<'a>(entries: impl IntoIterator<Item = &'a ProfileEntry>) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct DomainProfile {
    pub name: String,
    pub target: EntrySet,
    pub competitors: EntrySet,
    pub stopwords: Arc<Stopwords>,
}

impl DomainProfile {
    pub fn new(name: impl Into<String>, target: EntrySet, competitors: EntrySet, stopwords: Arc<Stopwords>) -> Self {
        Self {
            name: name.into(),
            target,
            competitors,
            stopwords,
        }
    }

    /// Build from raw entry lines using the file grammar.
    pub fn from_lines(
        name: impl Into<String>,
        target: &str,
        competitors: &str,
        stopwords: Arc<Stopwords>,
    ) -> Result<Self, ProfileError> {
        let target = parse_profile_file(target, &stopwords)?;
        let competitors = parse_profile_file(competitors, &stopwords)?;
        Ok(Self::new(name, target, competitors, stopwords))
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_profile(self)
    }

    pub fn ensure_valid(&self) -> Result<(), ProfileError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ProfileError::Invalid {
                name: self.name.clone(),
                violations,
            })
        }
    }
}

/// A broken profile invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "entry")]
pub enum Violation {
    EmptyTarget,
    OverlapViolation(ProfileEntry),
    StopwordInEntry(ProfileEntry),
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::EmptyTarget => "EmptyTarget",
            Violation::OverlapViolation(_) => "OverlapViolation",
            Violation::StopwordInEntry(_) => "StopwordInEntry",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTarget => f.write_str("EmptyTarget"),
            Violation::OverlapViolation(e) => write!(f, "OverlapViolation({e})"),
            Violation::StopwordInEntry(e) => write!(f, "StopwordInEntry({e})"),
        }
    }
}

pub fn validate_profile(p: &DomainProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    if p.target.is_empty() {
        out.push(Violation::EmptyTarget);
    }
    for e in p.target.intersection(&p.competitors) {
        out.push(Violation::OverlapViolation(e.clone()));
    }
    for e in p.target.iter().chain(&p.competitors) {
        if e.terms().iter().any(|t| p.stopwords.contains(t)) {
            out.push(Violation::StopwordInEntry(e.clone()));
        }
    }
    out
}

/// Profile names double as file stems, so they are kept to a safe alphabet.
pub fn check_profile_name(name: &str) -> Result<(), ProfileError> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ProfileError::InvalidName(name.to_string()))
    }
}

/// Directory-backed profile storage.
///
/// Reads share the lock; a write holds it exclusively and replaces each file
/// atomically, so readers see either the old or the new version.
#[derive(Debug)]
pub struct ProfileStore {
    dir: PathBuf,
    stopwords_path: PathBuf,
    lock: RwLock<()>,
}

impl ProfileStore {
    /// `stopwords` defaults to `<dir>/stopwords`. A missing stopwords file
    /// means an empty stopword list.
    pub fn new(dir: impl Into<PathBuf>, stopwords: Option<PathBuf>) -> Self {
        let dir = dir.into();
        let stopwords_path = stopwords.unwrap_or_else(|| dir.join(STOPWORDS_FILE));
        Self {
            dir,
            stopwords_path,
            lock: RwLock::new(()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn stopwords(&self) -> Result<Arc<Stopwords>, ProfileError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        self.read_stopwords()
    }

    fn read_stopwords(&self) -> Result<Arc<Stopwords>, ProfileError> {
        match fs::read_to_string(&self.stopwords_path) {
            Ok(content) => Ok(Arc::new(Stopwords::parse(&content))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Arc::new(Stopwords::new())),
            Err(source) => Err(ProfileError::Io {
                path: self.stopwords_path.clone(),
                source,
            }),
        }
    }

    fn path_for(&self, name: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{name}.{ext}"))
    }

    /// Names of all profiles that have a target file, sorted.
    pub fn list(&self) -> Result<Vec<String>, ProfileError> {
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => {
                return Err(ProfileError::Io {
                    path: self.dir.clone(),
                    source,
                })
            }
        };
        let mut names = Vec::new();
        for entry in rd {
            let entry = entry.map_err(|source| ProfileError::Io {
                path: self.dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some(TARGET_EXT) {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                if check_profile_name(stem).is_ok() {
                    names.push(stem.to_string());
                }
            }
        }
        names.sort();
        Ok(names)
    }

    /// Load a profile. A missing competitor file means no competitors.
    pub fn load(&self, name: &str) -> Result<DomainProfile, ProfileError> {
        check_profile_name(name)?;
        let _guard = self.lock.read().unwrap_or_else(|e| e.into_inner());
        let stopwords = self.read_stopwords()?;

        let target_path = self.path_for(name, TARGET_EXT);
        let target_text = match fs::read_to_string(&target_path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(ProfileError::NotFound(name.to_string())),
            Err(source) => {
                return Err(ProfileError::Io {
                    path: target_path,
                    source,
                })
            }
        };
        let comp_path = self.path_for(name, COMPETITOR_EXT);
        let comp_text = match fs::read_to_string(&comp_path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(source) => {
                return Err(ProfileError::Io {
                    path: comp_path,
                    source,
                })
            }
        };

        let target = parse_profile_file(&target_text, &stopwords).map_err(|e| ProfileError::Parse {
            path: target_path,
            source: Box::new(e),
        })?;
        let competitors = parse_profile_file(&comp_text, &stopwords).map_err(|e| ProfileError::Parse {
            path: comp_path,
            source: Box::new(e),
        })?;
        Ok(DomainProfile::new(name, target, competitors, stopwords))
    }

    /// Validate and persist. Invalid profiles are rejected with their
    /// violations and nothing is written.
    pub fn save(&self, profile: &DomainProfile) -> Result<(), ProfileError> {
        check_profile_name(&profile.name)?;
        profile.ensure_valid()?;
        let _guard = self.lock.write().unwrap_or_else(|e| e.into_inner());
        fs::create_dir_all(&self.dir).map_err(|source| ProfileError::Io {
            path: self.dir.clone(),
            source,
        })?;
        write_atomic(
            &self.path_for(&profile.name, TARGET_EXT),
            serialize_entries(&profile.target).as_bytes(),
        )?;
        write_atomic(
            &self.path_for(&profile.name, COMPETITOR_EXT),
            serialize_entries(&profile.competitors).as_bytes(),
        )?;
        Ok(())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ProfileError> {
    let io_err = |source| ProfileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
