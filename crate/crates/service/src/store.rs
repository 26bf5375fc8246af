//! Append-only newline-delimited JSON event log with periodic checkpoints.
//!
//! `events.ndjson` holds one [`Record`] per line and is fsynced after every
//! append. `checkpoint.json` holds the full state as of some sequence number
//! and is replaced atomically. Opening loads the checkpoint and replays the
//! log records that follow it. A final line cut short by a crash is dropped
//! and truncated away.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use concord_core::matching::{InstanceEdit, MatchingInstance};
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::model::{BallotRecord, IssueDecision, MatchingRun, MatchingSession, Poll, ResultsSnapshot};
use crate::state::State;

const LOG_FILE: &str = "events.ndjson";
const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    PollCreated { poll: Poll },
    BallotSubmitted { ballot: BallotRecord },
    PollClosed { poll: String, at: u64 },
    SnapshotStored { snapshot: ResultsSnapshot },
    IssueDecided { decision: IssueDecision },
    MatchingCreated { session: MatchingSession },
    InstanceReplaced { session: String, instance: MatchingInstance },
    InstanceEdited { session: String, edits: Vec<InstanceEdit> },
    MatchingRan { session: String, run: MatchingRun },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    seq: u64,
    state: State,
}

pub struct EventLog {
    dir: PathBuf,
    file: File,
    next_seq: u64,
    since_checkpoint: u64,
    checkpoint_every: u64,
}

impl EventLog {
    /// Opens or creates the log in `dir` and rebuilds the state it describes.
    pub fn open(dir: &Path, checkpoint_every: u64) -> Result<(Self, State), ServiceError> {
        fs::create_dir_all(dir)?;
        let (mut state, checkpoint_seq) = match fs::read(dir.join(CHECKPOINT_FILE)) {
            Ok(bytes) => {
                let cp: Checkpoint = serde_json::from_slice(&bytes).map_err(|e| {
                    ServiceError::CorruptLog { line: 0, message: format!("checkpoint: {e}") }
                })?;
                (cp.state, cp.seq)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (State::default(), 0),
            Err(e) => return Err(e.into()),
        };

        let path = dir.join(LOG_FILE);
        let mut last_seq = checkpoint_seq;
        let mut since_checkpoint = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            let mut good_bytes = 0u64;
            let mut lines = reader.split(b'\n').enumerate().peekable();
            while let Some((i, line)) = lines.next() {
                let line = line?;
                let is_last = lines.peek().is_none();
                let parsed: Result<Record, _> = serde_json::from_slice(&line);
                match parsed {
                    Ok(record) => {
                        if record.seq > checkpoint_seq {
                            state.apply(&record.event);
                            since_checkpoint += 1;
                        }
                        last_seq = last_seq.max(record.seq);
                        good_bytes += line.len() as u64 + 1;
                    }
                    Err(_) if line.is_empty() && is_last => {}
                    Err(_) if is_last => {
                        tracing::warn!(line = i + 1, "dropping torn final log line");
                    }
                    Err(e) => {
                        return Err(ServiceError::CorruptLog { line: i + 1, message: e.to_string() })
                    }
                }
            }
            let mut file = OpenOptions::new().write(true).open(&path)?;
            let len = file.metadata()?.len();
            if len > good_bytes {
                file.set_len(good_bytes)?;
                file.sync_all()?;
            } else if len + 1 == good_bytes {
                // last record is complete but lost its newline
                use std::io::{Seek, SeekFrom};
                file.seek(SeekFrom::End(0))?;
                file.write_all(b"\n")?;
                file.sync_all()?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let log = EventLog {
            dir: dir.to_path_buf(),
            file,
            next_seq: last_seq + 1,
            since_checkpoint,
            checkpoint_every: checkpoint_every.max(1),
        };
        Ok((log, state))
    }

    /// Durably appends one event. Returns its sequence number.
    pub fn append(&mut self, event: &Event) -> Result<u64, ServiceError> {
        let record = Record { seq: self.next_seq, event: event.clone() };
        let mut line = serde_json::to_vec(&record).expect("events serialize");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        self.next_seq += 1;
        self.since_checkpoint += 1;
        Ok(record.seq)
    }

    pub fn wants_checkpoint(&self) -> bool {
        self.since_checkpoint >= self.checkpoint_every
    }

    /// Writes `state` (which must include every appended event) as the new checkpoint.
    pub fn checkpoint(&mut self, state: &State) -> Result<(), ServiceError> {
        let cp = Checkpoint { seq: self.next_seq - 1, state: state.clone() };
        let tmp = self.dir.join("checkpoint.json.tmp");
        {
            let mut f = File::create(&tmp)?;
            serde_json::to_writer(&mut f, &cp).expect("state serializes");
            f.sync_all()?;
        }
        fs::rename(&tmp, self.dir.join(CHECKPOINT_FILE))?;
        if let Ok(d) = File::open(&self.dir) {
            let _ = d.sync_all();
        }
        self.since_checkpoint = 0;
        Ok(())
    }

    pub fn last_seq(&self) -> u64 {
        self.next_seq - 1
    }
}
