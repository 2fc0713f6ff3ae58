//! Output layout: `<out>/runs/<stamp>-<verb>/` per command, mirrored into
//! `<out>/latest/`, guarded by `<out>/.lock`.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const LATEST: &str = "latest";
pub const LOCK_FILE: &str = ".lock";

struct Lock(PathBuf);

impl Lock {
    fn acquire(root: &Path) -> Result<Lock> {
        let path = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Lock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::Locked(root.to_path_buf()))
            }
            Err(e) => Err(Error::io(&path)(e)),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// One command's output directory while it is being written.
pub struct Run {
    _lock: Lock,
    root: PathBuf,
    dir: PathBuf,
    files: Vec<String>,
}

pub fn latest_dir(root: &Path) -> PathBuf {
    root.join(LATEST)
}

impl Run {
    pub fn begin(root: &Path, verb: &str) -> Result<Run> {
        fs::create_dir_all(root).map_err(Error::io(root))?;
        let lock = Lock::acquire(root)?;
        let runs = root.join("runs");
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
        let mut dir = runs.join(format!("{stamp}-{verb}"));
        let mut n = 1;
        while dir.exists() {
            n += 1;
            dir = runs.join(format!("{stamp}-{verb}-{n}"));
        }
        fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        Ok(Run {
            _lock: lock,
            root: root.to_path_buf(),
            dir,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(Error::io(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Copies every written file into `latest/` and releases the lock.
    pub fn finish(self) -> Result<PathBuf> {
        let latest = latest_dir(&self.root);
        fs::create_dir_all(&latest).map_err(Error::io(&latest))?;
        for name in &self.files {
            let tmp = latest.join(format!(".{name}.tmp"));
            fs::copy(self.dir.join(name), &tmp).map_err(Error::io(&tmp))?;
            let dest = latest.join(name);
            fs::rename(&tmp, &dest).map_err(Error::io(&dest))?;
        }
        Ok(self.dir)
    }
}
