use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::Failure;

/// Output directory plus the header line every file starts with.
pub struct Output {
    dir: PathBuf,
    header: String,
}

impl Output {
    /// `canonical` is the full run configuration as text; its hash goes in the header.
    pub fn create(dir: &Path, command: &str, canonical: &str, seed: u64) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        let hash = config_hash(canonical);
        Ok(Self {
            dir: dir.to_path_buf(),
            header: format!(
                "# ergo-homog {} command={command} config_sha256={hash} seed={seed}\n",
                env!("CARGO_PKG_VERSION")
            ),
        })
    }

    pub fn write(&self, name: &str, body: &str) -> Result<PathBuf, Failure> {
        let path = self.dir.join(name);
        let mut text = String::with_capacity(self.header.len() + body.len());
        text.push_str(&self.header);
        text.push_str(body);
        fs::write(&path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
