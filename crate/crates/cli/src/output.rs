//! Output directory with atomic file replacement.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Writes `name` through a temporary sibling that is renamed into place.
    pub fn write<E, F>(&mut self, name: &str, fill: F) -> Result<(), E>
    where
        E: From<io::Error>,
        F: FnOnce(&mut BufWriter<File>) -> Result<(), E>,
    {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.{}.tmp", std::process::id()));
        let result = (|| {
            let mut w = BufWriter::new(File::create(&tmp)?);
            fill(&mut w)?;
            let file = w.into_inner().map_err(|e| e.into_error())?;
            file.sync_all()?;
            fs::rename(&tmp, &target)?;
            Ok(())
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        } else {
            self.written.push(name.to_string());
        }
        result
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> io::Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    /// Names of the files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }
}
