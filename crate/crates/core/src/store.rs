//! Local document store for object states, programs, attachments, execution
//! logs and snapshot blobs.
//!
//! On disk each record is one JSON file (`states/<id>.json`, ...), written to
//! a temporary file and renamed into place. Blobs live under `blobs/` named by
//! the SHA-256 of their bytes. Execution logs are JSONL, one file per
//! attachment. An in-memory index mirrors every document.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ids::{IdGenerator, IdKind};
use crate::model::{Attachment, BlobRef, CaptureSource, ExecutionRecord, ObjectState, Program};
use crate::script::{self, StateLookup, SyntaxError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt document {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error("unknown object state {0}")]
    UnknownState(String),
    #[error("unknown program {0}")]
    UnknownProgram(String),
    #[error("unknown attachment {0}")]
    UnknownAttachment(String),
    #[error("program does not parse: {0}")]
    Parse(#[from] SyntaxError),
}

const STATES: &str = "states";
const PROGRAMS: &str = "programs";
const ATTACHMENTS: &str = "attachments";
const LOGS: &str = "logs";
const BLOBS: &str = "blobs";

/// Snapshot image supplied with a new state.
#[derive(Debug, Clone)]
pub struct ImageUpload {
    pub bytes: Vec<u8>,
    pub media_type: String,
}

/// Attachments removed by a cascading delete.
pub type Cascade = Vec<String>;

#[derive(Debug, Default)]
pub struct Store {
    root: Option<PathBuf>,
    ids: IdGenerator,
    states: BTreeMap<String, ObjectState>,
    programs: BTreeMap<String, Program>,
    attachments: BTreeMap<String, Attachment>,
    // in-memory mode only
    mem_blobs: BTreeMap<String, Vec<u8>>,
    mem_logs: BTreeMap<String, Vec<ExecutionRecord>>,
}

pub fn blob_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Store {
    /// A store that keeps everything in memory.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a store rooted at `dir` and loads every
    /// document.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = dir.as_ref().to_path_buf();
        for sub in [STATES, PROGRAMS, ATTACHMENTS, LOGS, BLOBS] {
            fs::create_dir_all(root.join(sub))?;
        }
        let mut store = Store {
            root: Some(root.clone()),
            ..Self::default()
        };
        store.states = load_dir(&root.join(STATES), |s: &ObjectState| s.id.clone())?;
        store.programs = load_dir(&root.join(PROGRAMS), |p: &Program| p.id.clone())?;
        store.attachments = load_dir(&root.join(ATTACHMENTS), |a: &Attachment| a.id.clone())?;
        Ok(store)
    }

    pub fn with_ids(mut self, ids: IdGenerator) -> Self {
        self.ids = ids;
        self
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    fn fresh_id(&mut self, kind: IdKind) -> String {
        loop {
            let id = self.ids.next_id(kind);
            let taken = self.states.contains_key(&id)
                || self.programs.contains_key(&id)
                || self.attachments.contains_key(&id);
            if !taken {
                return id;
            }
        }
    }

    fn doc_path(&self, dir: &str, id: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(dir).join(format!("{id}.json")))
    }

    fn write_doc<T: Serialize>(&self, dir: &str, id: &str, doc: &T) -> Result<(), StoreError> {
        if let Some(path) = self.doc_path(dir, id) {
            let bytes = serde_json::to_vec_pretty(doc).map_err(|e| StoreError::Invalid(e.to_string()))?;
            write_atomic(&path, &bytes)?;
        }
        Ok(())
    }

    fn remove_doc(&self, dir: &str, id: &str) -> Result<(), StoreError> {
        if let Some(path) = self.doc_path(dir, id) {
            match fs::remove_file(path) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(e.into()),
                _ => {}
            }
        }
        Ok(())
    }

    // ---- object states ----

    pub fn put_state(
        &mut self,
        category: &str,
        instance: Option<&str>,
        image: Option<ImageUpload>,
        source: CaptureSource,
        now: u64,
    ) -> Result<ObjectState, StoreError> {
        if category.trim().is_empty() {
            return Err(StoreError::Invalid("category must not be empty".into()));
        }
        let image_ref = match image {
            Some(img) => Some(self.put_blob(img)?),
            None => None,
        };
        let state = ObjectState {
            id: self.fresh_id(IdKind::State),
            category: category.to_string(),
            instance: instance.filter(|i| !i.is_empty()).map(str::to_string),
            image_ref,
            source,
            created_at: now,
        };
        self.insert_state(state.clone())?;
        Ok(state)
    }

    /// Stores a fully formed state record, keeping its id.
    pub fn insert_state(&mut self, state: ObjectState) -> Result<(), StoreError> {
        if state.category.is_empty() {
            return Err(StoreError::Invalid("category must not be empty".into()));
        }
        if let Some(blob) = &state.image_ref {
            if !self.has_blob(&blob.id) {
                return Err(StoreError::Invalid(format!("blob {} does not exist", blob.id)));
            }
        }
        self.write_doc(STATES, &state.id, &state)?;
        self.states.insert(state.id.clone(), state);
        Ok(())
    }

    pub fn get_state(&self, id: &str) -> Option<&ObjectState> {
        self.states.get(id)
    }

    /// States ordered by creation time, then id.
    pub fn list_states(&self) -> Vec<ObjectState> {
        let mut v: Vec<_> = self.states.values().cloned().collect();
        v.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        v
    }

    /// Removes a state, every attachment anchored to it, and its blob when no
    /// other state uses it.
    pub fn delete_state(&mut self, id: &str) -> Result<Cascade, StoreError> {
        let state = self
            .states
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownState(id.to_string()))?;
        let doomed: Vec<String> = self
            .attachments
            .values()
            .filter(|a| a.anchor_state_id == id)
            .map(|a| a.id.clone())
            .collect();
        for a in &doomed {
            self.delete_attachment(a)?;
        }
        self.remove_doc(STATES, id)?;
        self.states.remove(id);
        if let Some(blob) = state.image_ref {
            if !self.states.values().any(|s| s.image_ref.as_ref().is_some_and(|b| b.id == blob.id)) {
                self.remove_blob(&blob.id)?;
            }
        }
        Ok(doomed)
    }

    // ---- blobs ----

    fn put_blob(&mut self, img: ImageUpload) -> Result<BlobRef, StoreError> {
        let id = blob_id(&img.bytes);
        match &self.root {
            Some(root) => {
                let path = root.join(BLOBS).join(&id);
                if !path.exists() {
                    write_atomic(&path, &img.bytes)?;
                }
            }
            None => {
                self.mem_blobs.entry(id.clone()).or_insert(img.bytes);
            }
        }
        Ok(BlobRef {
            id,
            media_type: img.media_type,
        })
    }

    fn remove_blob(&mut self, id: &str) -> Result<(), StoreError> {
        match &self.root {
            Some(root) => match fs::remove_file(root.join(BLOBS).join(id)) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e.into()),
                _ => Ok(()),
            },
            None => {
                self.mem_blobs.remove(id);
                Ok(())
            }
        }
    }

    pub fn has_blob(&self, id: &str) -> bool {
        match &self.root {
            Some(root) => root.join(BLOBS).join(id).is_file(),
            None => self.mem_blobs.contains_key(id),
        }
    }

    pub fn get_blob(&self, id: &str) -> Result<Option<Vec<u8>>, StoreError> {
        if id.len() != 64 || !id.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Ok(None);
        }
        match &self.root {
            Some(root) => match fs::read(root.join(BLOBS).join(id)) {
                Ok(b) => Ok(Some(b)),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(e.into()),
            },
            None => Ok(self.mem_blobs.get(id).cloned()),
        }
    }

    /// Ids of every stored blob.
    pub fn blob_ids(&self) -> Result<BTreeSet<String>, StoreError> {
        match &self.root {
            Some(root) => {
                let mut out = BTreeSet::new();
                for entry in fs::read_dir(root.join(BLOBS))? {
                    let name = entry?.file_name().to_string_lossy().into_owned();
                    if !name.starts_with('.') {
                        out.insert(name);
                    }
                }
                Ok(out)
            }
            None => Ok(self.mem_blobs.keys().cloned().collect()),
        }
    }

    // ---- programs ----

    pub fn put_program(&mut self, name: &str, source: &str, now: u64) -> Result<Program, StoreError> {
        script::parse_source(source)?;
        let program = Program {
            id: self.fresh_id(IdKind::Program),
            name: name.to_string(),
            source: source.to_string(),
            created_at: now,
        };
        self.write_doc(PROGRAMS, &program.id, &program)?;
        self.programs.insert(program.id.clone(), program.clone());
        Ok(program)
    }

    pub fn update_program(&mut self, id: &str, name: Option<&str>, source: &str) -> Result<Program, StoreError> {
        script::parse_source(source)?;
        let mut program = self
            .programs
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownProgram(id.to_string()))?;
        if let Some(name) = name {
            program.name = name.to_string();
        }
        program.source = source.to_string();
        self.write_doc(PROGRAMS, id, &program)?;
        self.programs.insert(id.to_string(), program.clone());
        Ok(program)
    }

    pub fn get_program(&self, id: &str) -> Option<&Program> {
        self.programs.get(id)
    }

    pub fn list_programs(&self) -> Vec<Program> {
        let mut v: Vec<_> = self.programs.values().cloned().collect();
        v.sort_by(|a, b| (a.created_at, &a.id).cmp(&(b.created_at, &b.id)));
        v
    }

    pub fn delete_program(&mut self, id: &str) -> Result<Cascade, StoreError> {
        if !self.programs.contains_key(id) {
            return Err(StoreError::UnknownProgram(id.to_string()));
        }
        let doomed: Vec<String> = self
            .attachments
            .values()
            .filter(|a| a.program_id == id)
            .map(|a| a.id.clone())
            .collect();
        for a in &doomed {
            self.delete_attachment(a)?;
        }
        self.remove_doc(PROGRAMS, id)?;
        self.programs.remove(id);
        Ok(doomed)
    }

    // ---- attachments ----

    pub fn new_attachment_id(&mut self) -> String {
        self.fresh_id(IdKind::Attachment)
    }

    /// Inserts or replaces an attachment document.
    pub fn put_attachment(&mut self, a: &Attachment) -> Result<(), StoreError> {
        if !self.programs.contains_key(&a.program_id) {
            return Err(StoreError::UnknownProgram(a.program_id.clone()));
        }
        if !self.states.contains_key(&a.anchor_state_id) {
            return Err(StoreError::UnknownState(a.anchor_state_id.clone()));
        }
        self.write_doc(ATTACHMENTS, &a.id, a)?;
        self.attachments.insert(a.id.clone(), a.clone());
        Ok(())
    }

    pub fn get_attachment(&self, id: &str) -> Option<&Attachment> {
        self.attachments.get(id)
    }

    pub fn list_attachments(&self) -> Vec<Attachment> {
        self.attachments.values().cloned().collect()
    }

    pub fn delete_attachment(&mut self, id: &str) -> Result<(), StoreError> {
        if !self.attachments.contains_key(id) {
            return Err(StoreError::UnknownAttachment(id.to_string()));
        }
        self.remove_doc(ATTACHMENTS, id)?;
        self.attachments.remove(id);
        Ok(())
    }

    // ---- execution logs ----

    pub fn append_log(&mut self, record: &ExecutionRecord) -> Result<(), StoreError> {
        match &self.root {
            Some(root) => {
                let mut line = serde_json::to_string(record).map_err(|e| StoreError::Invalid(e.to_string()))?;
                line.push('\n');
                let path = root.join(LOGS).join(format!("{}.jsonl", sanitize(&record.attachment_id)));
                let mut f = OpenOptions::new().create(true).append(true).open(path)?;
                f.write_all(line.as_bytes())?;
            }
            None => self
                .mem_logs
                .entry(record.attachment_id.clone())
                .or_default()
                .push(record.clone()),
        }
        Ok(())
    }

    /// Records for one attachment in append order. A torn final line is
    /// ignored.
    pub fn read_logs(&self, attachment_id: &str) -> Result<Vec<ExecutionRecord>, StoreError> {
        match &self.root {
            Some(root) => {
                let path = root.join(LOGS).join(format!("{}.jsonl", sanitize(attachment_id)));
                let text = match fs::read_to_string(&path) {
                    Ok(t) => t,
                    Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
                    Err(e) => return Err(e.into()),
                };
                Ok(text
                    .lines()
                    .filter_map(|l| serde_json::from_str(l).ok())
                    .collect())
            }
            None => Ok(self.mem_logs.get(attachment_id).cloned().unwrap_or_default()),
        }
    }

    /// Verifies referential integrity: every attachment points at a live
    /// program and state, every referenced blob exists, and no blob is
    /// unreferenced.
    pub fn check_integrity(&self) -> Result<(), String> {
        for a in self.attachments.values() {
            if !self.programs.contains_key(&a.program_id) {
                return Err(format!("attachment {} references missing program {}", a.id, a.program_id));
            }
            if !self.states.contains_key(&a.anchor_state_id) {
                return Err(format!("attachment {} references missing state {}", a.id, a.anchor_state_id));
            }
        }
        let referenced: BTreeSet<String> = self
            .states
            .values()
            .filter_map(|s| s.image_ref.as_ref().map(|b| b.id.clone()))
            .collect();
        let stored = self.blob_ids().map_err(|e| e.to_string())?;
        if let Some(missing) = referenced.difference(&stored).next() {
            return Err(format!("blob {missing} referenced but not stored"));
        }
        if let Some(orphan) = stored.difference(&referenced).next() {
            return Err(format!("blob {orphan} stored but unreferenced"));
        }
        Ok(())
    }
}

impl StateLookup for Store {
    fn state(&self, id: &str) -> Option<&ObjectState> {
        self.states.get(id)
    }
}

/// File-name-safe form of an id.
fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("doc");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn load_dir<T: DeserializeOwned>(
    dir: &Path,
    key: impl Fn(&T) -> String,
) -> Result<BTreeMap<String, T>, StoreError> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_doc = path.extension().is_some_and(|e| e == "json")
            && !path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'));
        if !is_doc {
            continue;
        }
        let bytes = fs::read(&path)?;
        let doc: T = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt {
            path: path.clone(),
            message: e.to_string(),
        })?;
        out.insert(key(&doc), doc);
    }
    Ok(out)
}
