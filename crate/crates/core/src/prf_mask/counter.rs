//! Monotone, never-reused counters.
//!
//! [`CounterStore`] keeps the next value in a one-line file,
//! `TAMPERLOCK-CTR v1 next=<integer>`. Issuing `pi` first durably writes
//! `next=pi+1` (temp file, fsync, rename, fsync of the directory) and only
//! then returns `pi`. A crash before the rename leaves the old record and
//! nothing was issued; a crash after it loses `pi`, which is never handed out
//! again. Any storage error refuses to issue.
//!
//! A store holds an exclusive OS lock on `<path>.lock` for its lifetime, so a
//! second open of the same path fails instead of sharing the sequence. The
//! lock is released by the OS if the process dies.

use std::fs::{self, File, OpenOptions, TryLockError};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const HEADER: &str = "TAMPERLOCK-CTR v1";

/// Source of fresh public counter values.
pub trait Counter {
    fn next_value(&mut self) -> Result<u64>;
}

/// In-memory counter for simulations that never need durability.
#[derive(Debug, Default, Clone)]
pub struct MemoryCounter {
    next: u64,
}

impl MemoryCounter {
    pub fn starting_at(next: u64) -> Self {
        MemoryCounter { next }
    }
}

impl Counter for MemoryCounter {
    fn next_value(&mut self) -> Result<u64> {
        let pi = self.next;
        self.next = pi
            .checked_add(1)
            .ok_or_else(|| Error::Counter("counter exhausted".into()))?;
        Ok(pi)
    }
}

#[derive(Debug)]
pub struct CounterStore {
    path: PathBuf,
    next: u64,
    _lock: File,
}

impl CounterStore {
    /// Opens the store at `path`, creating it at `next=0` if it does not exist.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(sidecar(&path, "lock"))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(TryLockError::WouldBlock) => {
                return Err(Error::Counter(format!("{} is held by another issuer", path.display())));
            }
            Err(TryLockError::Error(e)) => return Err(e.into()),
        }

        // The temp file is never authoritative.
        let tmp = sidecar(&path, "tmp");
        if tmp.exists() {
            fs::remove_file(&tmp)?;
        }

        let mut store = CounterStore {
            path,
            next: 0,
            _lock: lock,
        };
        match fs::read_to_string(&store.path) {
            Ok(text) => store.next = parse_record(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => store.persist(0)?,
            Err(e) => return Err(e.into()),
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// The value the next call to [`counter_next`](Self::counter_next) returns.
    pub fn peek(&self) -> u64 {
        self.next
    }

    /// Issues the current value after durably recording its successor.
    pub fn counter_next(&mut self) -> Result<u64> {
        let pi = self.next;
        let successor = pi
            .checked_add(1)
            .ok_or_else(|| Error::Counter("counter exhausted".into()))?;
        self.persist(successor)
            .map_err(|e| Error::Counter(format!("refusing to issue {pi}: {e}")))?;
        self.next = successor;
        Ok(pi)
    }

    fn persist(&self, next: u64) -> Result<()> {
        let tmp = sidecar(&self.path, "tmp");
        {
            let mut f = File::create(&tmp)?;
            writeln!(f, "{HEADER} next={next}")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &self.path)?;
        let dir = match self.path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        File::open(dir)?.sync_all()?;
        Ok(())
    }
}

impl Counter for CounterStore {
    fn next_value(&mut self) -> Result<u64> {
        self.counter_next()
    }
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(ext);
    path.with_file_name(name)
}

fn parse_record(text: &str) -> Result<u64> {
    let line = text.trim_end_matches('\n');
    let value = line
        .strip_prefix(HEADER)
        .and_then(|rest| rest.strip_prefix(" next="))
        .ok_or_else(|| Error::Counter(format!("corrupt counter record {line:?}")))?;
    value
        .parse()
        .map_err(|e| Error::Counter(format!("corrupt counter value {value:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;
    use std::sync::{Arc, Mutex};

    #[test]
    fn fresh_store_counts_up() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = CounterStore::open(dir.path().join("ctr")).unwrap();
        assert_eq!(store.counter_next().unwrap(), 0);
        assert_eq!(store.counter_next().unwrap(), 1);
        assert_eq!(store.counter_next().unwrap(), 2);
        assert_eq!(
            fs::read_to_string(dir.path().join("ctr")).unwrap(),
            "TAMPERLOCK-CTR v1 next=3\n"
        );
    }

    #[test]
    fn reopen_continues() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctr");
        {
            let mut store = CounterStore::open(&path).unwrap();
            store.counter_next().unwrap();
            store.counter_next().unwrap();
        }
        let mut store = CounterStore::open(&path).unwrap();
        assert_eq!(store.counter_next().unwrap(), 2);
    }

    #[test]
    fn second_open_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctr");
        let _held = CounterStore::open(&path).unwrap();
        assert!(matches!(CounterStore::open(&path), Err(Error::Counter(_))));
    }

    #[test]
    fn corrupt_record_fails_closed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctr");
        fs::write(&path, "TAMPERLOCK-CTR v1 next=banana\n").unwrap();
        assert!(CounterStore::open(&path).is_err());
        fs::write(&path, "something else\n").unwrap();
        assert!(CounterStore::open(&path).is_err());
    }

    #[test]
    fn stale_temp_file_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctr");
        {
            let mut store = CounterStore::open(&path).unwrap();
            store.counter_next().unwrap();
        }
        fs::write(dir.path().join("ctr.tmp"), "TAMPERLOCK-CTR v1 ne").unwrap();
        let mut store = CounterStore::open(&path).unwrap();
        assert_eq!(store.counter_next().unwrap(), 1);
    }

    #[test]
    fn unwritable_directory_refuses_to_issue() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ctr");
        let mut store = CounterStore::open(&path).unwrap();
        assert_eq!(store.counter_next().unwrap(), 0);
        // Pre-create the temp path as a directory so the write-ahead step fails.
        fs::create_dir(dir.path().join("ctr.tmp")).unwrap();
        assert!(matches!(store.counter_next(), Err(Error::Counter(_))));
        assert_eq!(store.peek(), 1);
        fs::remove_dir(dir.path().join("ctr.tmp")).unwrap();
        assert_eq!(store.counter_next().unwrap(), 1);
    }

    #[test]
    fn concurrent_issuers_never_share_a_value() {
        let dir = tempfile::tempdir().unwrap();
        let store = Arc::new(Mutex::new(CounterStore::open(dir.path().join("ctr")).unwrap()));
        let handles: Vec<_> = (0..2)
            .map(|_| {
                let store = Arc::clone(&store);
                std::thread::spawn(move || {
                    (0..50)
                        .map(|_| store.lock().unwrap().counter_next().unwrap())
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut seen = HashSet::new();
        for h in handles {
            for v in h.join().unwrap() {
                assert!(seen.insert(v), "duplicate {v}");
            }
        }
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn memory_counter_exhausts() {
        let mut c = MemoryCounter::starting_at(u64::MAX - 1);
        assert_eq!(c.next_value().unwrap(), u64::MAX - 1);
        assert!(c.next_value().is_err());
    }
}
