use crate::error::CoreError;
use rand::Rng;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

/// On-disk output directory for one exploration run. Each terminated state
/// becomes a `test_NNNNNNNN.*` file group with a dense zero-padded id;
/// detector findings append to `findings.txt`, created only when a finding
/// exists.
pub struct Workspace {
    root: PathBuf,
    next_id: AtomicU64,
    findings: Mutex<u64>,
}

const NAME_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

impl Workspace {
    /// Create `mcore_<6 random lowercase alphanumerics>` under `parent`.
    pub fn create_in(parent: &Path) -> Result<Workspace, CoreError> {
        let mut rng = rand::rng();
        loop {
            let suffix: String = (0..6)
                .map(|_| NAME_CHARS[rng.random_range(0..NAME_CHARS.len())] as char)
                .collect();
            let dir = parent.join(format!("mcore_{suffix}"));
            match fs::create_dir(&dir) {
                Ok(()) => return Ok(Workspace::opened(dir)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// Use an explicit directory instead of a generated name. The directory
    /// is created if missing and must not already contain test cases.
    pub fn at_path(path: &Path) -> Result<Workspace, CoreError> {
        fs::create_dir_all(path)?;
        for entry in fs::read_dir(path)? {
            let name = entry?.file_name();
            if name.to_string_lossy().starts_with("test_") {
                return Err(CoreError::Config(format!(
                    "workspace {} already contains test cases",
                    path.display()
                )));
            }
        }
        Ok(Workspace::opened(path.to_path_buf()))
    }

    fn opened(root: PathBuf) -> Workspace {
        Workspace {
            root,
            next_id: AtomicU64::new(0),
            findings: Mutex::new(0),
        }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Number of test-case groups written so far.
    pub fn test_count(&self) -> u64 {
        self.next_id.load(Ordering::SeqCst)
    }

    pub fn findings_count(&self) -> u64 {
        *self.findings.lock().expect("findings lock")
    }

    /// Write one test-case group and return its id. `files` holds
    /// (extension, contents) pairs; the id is claimed atomically so
    /// concurrent workers never collide.
    pub fn save(&self, files: &[(String, Vec<u8>)]) -> Result<u64, CoreError> {
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        for (ext, bytes) in files {
            let path = self.root.join(format!("test_{id:08}.{ext}"));
            fs::write(path, bytes)?;
        }
        Ok(id)
    }

    /// Append one line to `findings.txt`, creating it on first use.
    pub fn add_finding(&self, line: &str) -> Result<(), CoreError> {
        let mut count = self.findings.lock().expect("findings lock");
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.root.join("findings.txt"))?;
        writeln!(file, "{line}")?;
        *count += 1;
        Ok(())
    }
}
