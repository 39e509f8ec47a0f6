//! One file per record under `records/`, published by atomic rename.

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use super::record::ContentRecord;
use crate::error::{Error, Result};
use crate::idcodec::ContentId;

pub const STORE_FORMAT_VERSION: &str = "1";
const VERSION_FILE: &str = "VERSION";
const LOCK_FILE: &str = "LOCK";
const RECORDS_DIR: &str = "records";
const EXT: &str = "cvsr";

/// Handle to a store directory.
///
/// Readers take no lock. Writers serialize on an advisory lock over `LOCK`,
/// which also excludes writers in other processes.
#[derive(Debug, Clone)]
pub struct RecordStore {
    root: PathBuf,
}

/// A record written to its temp file but not yet published.
///
/// Dropping it without [`commit`](Self::commit) leaves the temp file behind,
/// exactly as a crash between the two steps would.
#[derive(Debug)]
pub struct PendingWrite {
    _lock: File,
    tmp: PathBuf,
    dest: PathBuf,
    id: ContentId,
}

impl PendingWrite {
    pub fn temp_path(&self) -> &Path {
        &self.tmp
    }

    /// Renames the temp file into place.
    pub fn commit(self) -> Result<()> {
        if self.dest.exists() {
            return Err(Error::Duplicate(self.id.to_string()));
        }
        fs::rename(&self.tmp, &self.dest)?;
        sync_dir(self.dest.parent().expect("record path has a parent"))?;
        Ok(())
    }

    /// Removes the temp file without publishing.
    pub fn abort(self) -> Result<()> {
        match fs::remove_file(&self.tmp) {
            Err(e) if e.kind() != ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }
}

#[cfg(unix)]
fn sync_dir(dir: &Path) -> Result<()> {
    File::open(dir)?.sync_all()?;
    Ok(())
}

#[cfg(not(unix))]
fn sync_dir(_dir: &Path) -> Result<()> {
    Ok(())
}

impl RecordStore {
    /// Opens `root`, creating it and its layout on first use.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join(RECORDS_DIR))?;
        let marker = root.join(VERSION_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&marker) {
            Ok(mut f) => {
                writeln!(f, "{STORE_FORMAT_VERSION}")?;
                f.sync_all()?;
            }
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                let v = fs::read_to_string(&marker)?;
                // A concurrent first open may not have written the marker yet.
                if !v.is_empty() && v.trim() != STORE_FORMAT_VERSION {
                    return Err(Error::StoreVersion(v.trim().to_string()));
                }
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn record_path(&self, id: &ContentId) -> PathBuf {
        self.root.join(RECORDS_DIR).join(format!("{id}.{EXT}"))
    }

    pub fn contains(&self, id: &ContentId) -> bool {
        self.record_path(id).is_file()
    }

    fn lock(&self) -> Result<File> {
        let f = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(self.root.join(LOCK_FILE))?;
        f.lock()?;
        Ok(f)
    }

    /// Takes the writer lock and writes `record` to a temp file.
    pub fn stage(&self, record: &ContentRecord) -> Result<PendingWrite> {
        let text = record.to_cvsr()?;
        let lock = self.lock()?;
        let id = record.content_id;
        let dest = self.record_path(&id);
        if dest.exists() {
            return Err(Error::Duplicate(id.to_string()));
        }
        let tmp = self.root.join(RECORDS_DIR).join(format!(".{id}.{EXT}.tmp"));
        let mut f = File::create(&tmp)?;
        let written = f.write_all(text.as_bytes()).and_then(|_| f.sync_all());
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        Ok(PendingWrite {
            _lock: lock,
            tmp,
            dest,
            id,
        })
    }

    /// Durably stores a new record; an existing id is a [`Error::Duplicate`].
    pub fn put(&self, record: &ContentRecord) -> Result<()> {
        self.stage(record)?.commit()
    }

    pub fn get(&self, id: &ContentId) -> Result<ContentRecord> {
        let path = self.record_path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => {
                return Err(Error::NotFound(id.to_string()));
            }
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| Error::Corrupt {
            path: path.clone(),
            reason,
        };
        let text = String::from_utf8(bytes).map_err(|_| corrupt("not UTF-8".into()))?;
        let record = ContentRecord::from_cvsr(&text).map_err(|e| corrupt(e.to_string()))?;
        if record.content_id != *id {
            return Err(corrupt(format!("file holds id {}", record.content_id)));
        }
        Ok(record)
    }

    /// Ids of all published records, sorted.
    pub fn list(&self) -> Result<Vec<ContentId>> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(self.root.join(RECORDS_DIR))? {
            let name = entry?.file_name();
            let Some(name) = name.to_str() else { continue };
            if let Some(stem) = name.strip_suffix(".cvsr")
                && let Ok(id) = stem.parse::<ContentId>()
            {
                ids.push(id);
            }
        }
        ids.sort();
        Ok(ids)
    }
}
