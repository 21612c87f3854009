//! Blinded side-by-side voting for human preference collection.
//!
//! The arena serves pairs from a manifest with the two outputs placed on
//! randomly chosen sides. Raters see a site description and two opaque
//! preview URLs, never model or output ids. Votes say `left`, `right` or
//! `tie`; the stored side assignment turns them back into `a_wins`/`b_wins`.
//!
//! State lives in one append-only JSON lines log holding three kinds of
//! events:
//!
//! ```text
//! {"event":"assignment","pair_id":"p1","a_side":"a_right","left_token":"…","right_token":"…"}
//! {"event":"served","pair_id":"p1","rater_id":"r7","timestamp":1760000000}
//! {"event":"vote","pair_id":"p1","rater_id":"r7","choice":"left","timestamp":1760000042}
//! ```
//!
//! Every append is flushed with `fsync` before the caller sees success. On
//! restart the log is replayed; a torn final line (a crash mid-append) is
//! dropped, and was never acknowledged.

mod http;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use uitrace_core::ranking::{BlindedAssignment, ComparisonRecord, Rater, Verdict};

use crate::records::PairSpec;

pub use http::{router, serve, ADMIN_TOKEN_ENV};

/// URL prefix of candidate previews.
pub const PREVIEW_PREFIX: &str = "/preview/";

/// Shortest accepted model or output id; shorter ids would collide with
/// random tokens too often to keep URLs free of them.
pub const MIN_ID_LEN: usize = 3;

/// A rater's verdict in screen terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    /// The left preview is better.
    Left,
    /// The right preview is better.
    Right,
    /// Neither is better.
    Tie,
}

/// Turns a screen choice into a verdict on (A, B).
pub fn deblind(choice: Choice, assignment: BlindedAssignment) -> Verdict {
    match (choice, assignment) {
        (Choice::Tie, _) => Verdict::Tie,
        (Choice::Left, BlindedAssignment::ALeft) | (Choice::Right, BlindedAssignment::ARight) => Verdict::AWins,
        (Choice::Left, BlindedAssignment::ARight) | (Choice::Right, BlindedAssignment::ALeft) => Verdict::BWins,
    }
}

/// Inverse of [`deblind`].
pub fn reblind(verdict: Verdict, assignment: BlindedAssignment) -> Choice {
    match (verdict, assignment) {
        (Verdict::Tie, _) => Choice::Tie,
        (Verdict::AWins, BlindedAssignment::ALeft) | (Verdict::BWins, BlindedAssignment::ARight) => Choice::Left,
        (Verdict::AWins, BlindedAssignment::ARight) | (Verdict::BWins, BlindedAssignment::ALeft) => Choice::Right,
    }
}

/// What a rater receives for one pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPayload {
    /// Pair id.
    pub pair_id: String,
    /// Site description.
    pub description: String,
    /// Preview of the left candidate.
    pub left_url: String,
    /// Preview of the right candidate.
    pub right_url: String,
}

/// A vote as posted by a client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRequest {
    /// Pair id.
    pub pair_id: String,
    /// Opaque rater id.
    pub rater_id: String,
    /// Verdict.
    pub choice: Choice,
}

/// A stored vote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    /// Pair id.
    pub pair_id: String,
    /// Opaque rater id.
    pub rater_id: String,
    /// Verdict.
    pub choice: Choice,
    /// Seconds since the Unix epoch, stamped by the server.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Assignment {
        pair_id: String,
        a_side: BlindedAssignment,
        left_token: String,
        right_token: String,
    },
    Served {
        pair_id: String,
        rater_id: String,
        timestamp: u64,
    },
    Vote(VoteRecord),
}

/// Arena failures.
#[derive(Debug, thiserror::Error)]
pub enum ArenaError {
    /// The manifest is empty or would leak identities.
    #[error("invalid manifest: {0}")]
    Manifest(String),
    /// The vote log cannot be replayed against the manifest.
    #[error("vote log {}:{line}: {message}", path.display())]
    Log {
        /// Log file.
        path: PathBuf,
        /// One-based line.
        line: usize,
        /// What is wrong.
        message: String,
    },
    /// Pair id not in the manifest.
    #[error("unknown pair `{0}`")]
    UnknownPair(String),
    /// Empty rater id.
    #[error("rater id is empty")]
    MissingRater,
    /// Vote for a pair this rater was never shown.
    #[error("pair `{pair_id}` was not served to rater `{rater_id}`")]
    NotServed {
        /// Pair id.
        pair_id: String,
        /// Rater id.
        rater_id: String,
    },
    /// Second vote by one rater on one pair.
    #[error("rater already voted on pair `{}`", .previous.pair_id)]
    Duplicate {
        /// The stored vote.
        previous: VoteRecord,
    },
    /// The log could not be written; the request had no effect.
    #[error("vote log: {0}")]
    Io(#[from] std::io::Error),
}

/// Which output of a pair a preview token shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Output {
    A,
    B,
}

#[derive(Debug, Clone)]
struct Assignment {
    a_side: BlindedAssignment,
    left_token: String,
    right_token: String,
}

struct Log {
    path: PathBuf,
    file: File,
}

impl Log {
    /// Appends events as lines and syncs; on failure the file is cut back so
    /// no partial line is left behind.
    fn append(&mut self, events: &[Event]) -> std::io::Result<()> {
        let mut text = String::new();
        for e in events {
            text.push_str(&serde_json::to_string(e).expect("event serializes"));
            text.push('\n');
        }
        let before = self.file.metadata()?.len();
        let result = self
            .file
            .write_all(text.as_bytes())
            .and_then(|()| self.file.sync_data());
        if result.is_err() {
            let _ = self.file.set_len(before);
        }
        result
    }
}

struct State {
    log: Log,
    assignments: BTreeMap<String, Assignment>,
    tokens: HashMap<String, (String, Output)>,
    served: BTreeSet<(String, String)>,
    votes: BTreeMap<(String, String), VoteRecord>,
    vote_order: Vec<(String, String)>,
    rng: StdRng,
}

/// Arena settings.
#[derive(Debug, Clone, Default)]
pub struct ArenaOptions {
    /// Directory holding one preview directory per output id.
    pub previews: Option<PathBuf>,
    /// Seed for side assignment and tokens; entropy from the OS when absent.
    pub seed: Option<u64>,
}

/// The arena: an immutable manifest plus the mutex-guarded vote log.
pub struct Arena {
    pairs: BTreeMap<String, PairSpec>,
    previews: Option<PathBuf>,
    state: Mutex<State>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn identities(pairs: &[PairSpec]) -> BTreeSet<&str> {
    pairs
        .iter()
        .flat_map(|p| [p.model_a.as_str(), p.model_b.as_str(), p.output_a(), p.output_b()])
        .collect()
}

fn check_manifest(pairs: &[PairSpec]) -> Result<(), ArenaError> {
    if pairs.is_empty() {
        return Err(ArenaError::Manifest("no pairs".into()));
    }
    let ids = identities(pairs);
    for id in &ids {
        if id.chars().count() < MIN_ID_LEN {
            return Err(ArenaError::Manifest(format!(
                "id `{id}` is shorter than {MIN_ID_LEN} characters"
            )));
        }
        if PREVIEW_PREFIX.contains(id) {
            return Err(ArenaError::Manifest(format!(
                "id `{id}` occurs in the preview URL prefix"
            )));
        }
    }
    for p in pairs {
        for output in [p.output_a(), p.output_b()] {
            if output == "." || output == ".." || output.contains(['/', '\\']) {
                return Err(ArenaError::Manifest(format!(
                    "output id `{output}` is not a plain directory name"
                )));
            }
        }
        let shown = [Some(p.pair_id.as_str()), p.description.as_deref()];
        for text in shown.into_iter().flatten() {
            if let Some(id) = ids.iter().find(|id| text.contains(*id)) {
                return Err(ArenaError::Manifest(format!(
                    "pair `{}` would reveal `{id}` to raters",
                    p.pair_id
                )));
            }
        }
    }
    Ok(())
}

fn new_token(rng: &mut StdRng, ids: &BTreeSet<&str>, taken: &HashMap<String, (String, Output)>, other: &str) -> String {
    loop {
        let token = format!("{:032x}", rng.random::<u128>());
        if token != other && !taken.contains_key(&token) && ids.iter().all(|id| !token.contains(id)) {
            return token;
        }
    }
}

/// Reads the log, cutting off a torn final line.
fn replay(path: &Path) -> Result<Vec<(usize, Event)>, ArenaError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if complete < bytes.len() {
        log::warn!(
            "{}: dropping {} bytes of an incomplete final line",
            path.display(),
            bytes.len() - complete
        );
        OpenOptions::new().write(true).open(path)?.set_len(complete as u64)?;
    }
    let text = String::from_utf8_lossy(&bytes[..complete]);
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(line).map_err(|e| ArenaError::Log {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, event));
    }
    Ok(out)
}

impl Arena {
    /// Opens the arena, replaying `log_path` and assigning sides to every
    /// pair that has none yet.
    pub fn open(manifest: Vec<PairSpec>, log_path: &Path, options: ArenaOptions) -> Result<Self, ArenaError> {
        check_manifest(&manifest)?;
        let events = replay(log_path)?;
        let mut state = State {
            log: Log {
                path: log_path.to_path_buf(),
                file: OpenOptions::new().create(true).append(true).open(log_path)?,
            },
            assignments: BTreeMap::new(),
            tokens: HashMap::new(),
            served: BTreeSet::new(),
            votes: BTreeMap::new(),
            vote_order: Vec::new(),
            rng: options.seed.map_or_else(StdRng::from_os_rng, StdRng::seed_from_u64),
        };
        let pairs: BTreeMap<String, PairSpec> = manifest.iter().map(|p| (p.pair_id.clone(), p.clone())).collect();
        let bad = |line: usize, message: String| ArenaError::Log {
            path: log_path.to_path_buf(),
            line,
            message,
        };
        for (line, event) in events {
            let pair_id = match &event {
                Event::Assignment { pair_id, .. } | Event::Served { pair_id, .. } => pair_id,
                Event::Vote(v) => &v.pair_id,
            };
            if !pairs.contains_key(pair_id) {
                return Err(bad(line, format!("pair `{pair_id}` is not in the manifest")));
            }
            state.apply(event).map_err(|m| bad(line, m))?;
        }

        let ids = identities(&manifest);
        let mut fresh = Vec::new();
        let unassigned: Vec<String> = pairs
            .keys()
            .filter(|p| !state.assignments.contains_key(*p))
            .cloned()
            .collect();
        for p in unassigned {
            let a_side = if state.rng.random_bool(0.5) {
                BlindedAssignment::ALeft
            } else {
                BlindedAssignment::ARight
            };
            let left_token = new_token(&mut state.rng, &ids, &state.tokens, "");
            let right_token = new_token(&mut state.rng, &ids, &state.tokens, &left_token);
            let event = Event::Assignment {
                pair_id: p,
                a_side,
                left_token,
                right_token,
            };
            state.apply(event.clone()).expect("fresh assignment is consistent");
            fresh.push(event);
        }
        if !fresh.is_empty() {
            state.log.append(&fresh)?;
        }
        Ok(Self {
            pairs,
            previews: options.previews,
            state: Mutex::new(state),
        })
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(std::sync::PoisonError::into_inner)
    }

    /// The manifest, keyed by pair id.
    pub fn pairs(&self) -> &BTreeMap<String, PairSpec> {
        &self.pairs
    }

    /// Stored side assignment of a pair.
    pub fn assignment(&self, pair_id: &str) -> Option<BlindedAssignment> {
        self.lock().assignments.get(pair_id).map(|a| a.a_side)
    }

    /// A uniformly random pair the rater has not voted on, or `None` when the
    /// rater is done.
    pub fn next_pair(&self, rater_id: &str) -> Result<Option<PairPayload>, ArenaError> {
        if rater_id.is_empty() {
            return Err(ArenaError::MissingRater);
        }
        let mut state = self.lock();
        let open: Vec<&String> = self
            .pairs
            .keys()
            .filter(|p| !state.votes.contains_key(&((*p).clone(), rater_id.to_string())))
            .collect();
        if open.is_empty() {
            return Ok(None);
        }
        let pair_id = open[state.rng.random_range(0..open.len())].clone();
        let key = (pair_id.clone(), rater_id.to_string());
        if !state.served.contains(&key) {
            let event = Event::Served {
                pair_id: pair_id.clone(),
                rater_id: rater_id.to_string(),
                timestamp: now(),
            };
            state.log.append(std::slice::from_ref(&event))?;
            state.served.insert(key);
        }
        let a = &state.assignments[&pair_id];
        Ok(Some(PairPayload {
            description: self.pairs[&pair_id].description.clone().unwrap_or_default(),
            left_url: format!("{PREVIEW_PREFIX}{}/", a.left_token),
            right_url: format!("{PREVIEW_PREFIX}{}/", a.right_token),
            pair_id,
        }))
    }

    /// Records a vote durably, then acknowledges it.
    pub fn vote(&self, request: VoteRequest) -> Result<VoteRecord, ArenaError> {
        if !self.pairs.contains_key(&request.pair_id) {
            return Err(ArenaError::UnknownPair(request.pair_id));
        }
        if request.rater_id.is_empty() {
            return Err(ArenaError::MissingRater);
        }
        let mut state = self.lock();
        let key = (request.pair_id.clone(), request.rater_id.clone());
        if let Some(previous) = state.votes.get(&key) {
            return Err(ArenaError::Duplicate {
                previous: previous.clone(),
            });
        }
        if !state.served.contains(&key) {
            return Err(ArenaError::NotServed {
                pair_id: request.pair_id,
                rater_id: request.rater_id,
            });
        }
        let record = VoteRecord {
            pair_id: request.pair_id,
            rater_id: request.rater_id,
            choice: request.choice,
            timestamp: now(),
        };
        state.log.append(&[Event::Vote(record.clone())])?;
        state.apply(Event::Vote(record.clone())).expect("checked above");
        Ok(record)
    }

    /// Stored vote of a rater on a pair.
    pub fn vote_of(&self, pair_id: &str, rater_id: &str) -> Option<VoteRecord> {
        self.lock()
            .votes
            .get(&(pair_id.to_string(), rater_id.to_string()))
            .cloned()
    }

    /// All votes in the order they were cast.
    pub fn votes(&self) -> Vec<VoteRecord> {
        let state = self.lock();
        state.vote_order.iter().map(|k| state.votes[k].clone()).collect()
    }

    /// Votes joined with the side assignments, as human comparison records.
    pub fn export_records(&self) -> Vec<ComparisonRecord> {
        let state = self.lock();
        state
            .vote_order
            .iter()
            .map(|k| {
                let vote = &state.votes[k];
                let pair = &self.pairs[&vote.pair_id];
                let a_side = state.assignments[&vote.pair_id].a_side;
                ComparisonRecord {
                    blinded_assignment: Some(a_side),
                    ..ComparisonRecord::new(
                        &pair.pair_id,
                        &pair.site_id,
                        &pair.model_a,
                        &pair.model_b,
                        deblind(vote.choice, a_side),
                        Rater::Human,
                    )
                }
            })
            .collect()
    }

    /// Directory behind a preview token, when previews are configured.
    pub fn preview_dir(&self, token: &str) -> Option<PathBuf> {
        let root = self.previews.as_ref()?;
        let (pair_id, shows) = self.lock().tokens.get(token).cloned()?;
        let pair = &self.pairs[&pair_id];
        let output = match shows {
            Output::A => pair.output_a(),
            Output::B => pair.output_b(),
        };
        Some(root.join(output))
    }

    /// Path of the vote log.
    pub fn log_path(&self) -> PathBuf {
        self.lock().log.path.clone()
    }
}

impl State {
    /// Applies a replayed or freshly written event.
    fn apply(&mut self, event: Event) -> Result<(), String> {
        match event {
            Event::Assignment {
                pair_id,
                a_side,
                left_token,
                right_token,
            } => {
                if self.assignments.contains_key(&pair_id) {
                    return Err(format!("pair `{pair_id}` is assigned twice"));
                }
                let (left_shows, right_shows) = match a_side {
                    BlindedAssignment::ALeft => (Output::A, Output::B),
                    BlindedAssignment::ARight => (Output::B, Output::A),
                };
                for (token, shows) in [(&left_token, left_shows), (&right_token, right_shows)] {
                    if self.tokens.insert(token.clone(), (pair_id.clone(), shows)).is_some() {
                        return Err(format!("token reused by pair `{pair_id}`"));
                    }
                }
                self.assignments.insert(
                    pair_id,
                    Assignment {
                        a_side,
                        left_token,
                        right_token,
                    },
                );
            }
            Event::Served { pair_id, rater_id, .. } => {
                self.served.insert((pair_id, rater_id));
            }
            Event::Vote(v) => {
                let key = (v.pair_id.clone(), v.rater_id.clone());
                if !self.assignments.contains_key(&v.pair_id) {
                    return Err(format!("vote on unassigned pair `{}`", v.pair_id));
                }
                if self.votes.contains_key(&key) {
                    return Err(format!("second vote by `{}` on `{}`", v.rater_id, v.pair_id));
                }
                self.served.insert(key.clone());
                self.votes.insert(key.clone(), v);
                self.vote_order.push(key);
            }
        }
        Ok(())
    }
}
