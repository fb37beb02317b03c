use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Files staged in memory and written together once a command has succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stage `name` with the bytes produced by `f`.
    pub fn add(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> std::io::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn add_text(&mut self, name: &str, text: &str) {
        self.files.push((name.to_string(), text.as_bytes().to_vec()));
    }

    /// Write each file to a temporary sibling and rename it into place.
    pub fn commit(self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut done = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let target = dir.join(&name);
            let tmp = dir.join(format!(".{name}.tmp"));
            let res = (|| {
                let mut f = fs::File::create(&tmp)?;
                f.write_all(&bytes)?;
                f.sync_all()?;
                fs::rename(&tmp, &target)
            })();
            if let Err(e) = res {
                let _ = fs::remove_file(&tmp);
                return Err(e);
            }
            done.push(target);
        }
        Ok(done)
    }
}
