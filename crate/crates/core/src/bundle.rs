//! A flat archive of named files, used for component payloads and
//! component outputs.
//!
//! ```text
//! pvbundle 1
//! file <mode-octal> <size> <relative-path>
//! <size bytes>
//! ...
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Component, Path};

use thiserror::Error;

const MAGIC: &str = "pvbundle 1\n";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("unsafe path `{0}` in bundle")]
    UnsafePath(String),
    #[error("bundle I/O: {0}")]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleFile {
    pub mode: u32,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Bundle {
    files: BTreeMap<String, BundleFile>,
}

fn check_path(path: &str) -> Result<(), BundleError> {
    let p = Path::new(path);
    let ok = !path.is_empty()
        && !path.contains('\n')
        && p.components().all(|c| matches!(c, Component::Normal(_)));
    if ok {
        Ok(())
    } else {
        Err(BundleError::UnsafePath(path.to_string()))
    }
}

impl Bundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>) -> &mut Self {
        self.insert_with_mode(path, bytes, 0o644)
    }

    pub fn insert_executable(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>) -> &mut Self {
        self.insert_with_mode(path, bytes, 0o755)
    }

    pub fn insert_with_mode(&mut self, path: impl Into<String>, bytes: impl Into<Vec<u8>>, mode: u32) -> &mut Self {
        self.files.insert(
            path.into(),
            BundleFile {
                mode,
                bytes: bytes.into(),
            },
        );
        self
    }

    pub fn get(&self, path: &str) -> Option<&[u8]> {
        self.files.get(path).map(|f| f.bytes.as_slice())
    }

    pub fn get_str(&self, path: &str) -> Option<&str> {
        self.get(path).and_then(|b| std::str::from_utf8(b).ok())
    }

    pub fn remove(&mut self, path: &str) -> Option<BundleFile> {
        self.files.remove(path)
    }

    pub fn files(&self) -> impl Iterator<Item = (&str, &BundleFile)> {
        self.files.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn total_bytes(&self) -> usize {
        self.files.values().map(|f| f.bytes.len()).sum()
    }

    /// Paths starting with `prefix`.
    pub fn find_prefixed<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.files
            .keys()
            .filter(move |k| k.starts_with(prefix))
            .map(|k| k.as_str())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = MAGIC.as_bytes().to_vec();
        for (path, f) in &self.files {
            out.extend_from_slice(format!("file {:o} {} {}\n", f.mode, f.bytes.len(), path).as_bytes());
            out.extend_from_slice(&f.bytes);
            out.push(b'\n');
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, BundleError> {
        let bad = |m: &str| BundleError::Malformed(m.to_string());
        let rest = bytes
            .strip_prefix(MAGIC.as_bytes())
            .ok_or_else(|| bad("missing header"))?;
        let mut pos = 0;
        let mut bundle = Bundle::new();
        while pos < rest.len() {
            let nl = rest[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| bad("truncated entry header"))?;
            let header = std::str::from_utf8(&rest[pos..pos + nl]).map_err(|_| bad("non-utf8 header"))?;
            pos += nl + 1;
            let mut parts = header.splitn(4, ' ');
            if parts.next() != Some("file") {
                return Err(bad("expected `file`"));
            }
            let mode = u32::from_str_radix(parts.next().ok_or_else(|| bad("no mode"))?, 8)
                .map_err(|_| bad("bad mode"))?;
            let size: usize = parts
                .next()
                .ok_or_else(|| bad("no size"))?
                .parse()
                .map_err(|_| bad("bad size"))?;
            let path = parts.next().ok_or_else(|| bad("no path"))?.to_string();
            check_path(&path)?;
            if pos + size + 1 > rest.len() || rest[pos + size] != b'\n' {
                return Err(bad("truncated file body"));
            }
            bundle.insert_with_mode(path, rest[pos..pos + size].to_vec(), mode);
            pos += size + 1;
        }
        Ok(bundle)
    }

    /// Read every regular file under `dir`, recursively.
    pub fn from_dir(dir: &Path) -> Result<Self, BundleError> {
        let mut bundle = Bundle::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d)? {
                let entry = entry?;
                let ty = entry.file_type()?;
                let path = entry.path();
                if ty.is_dir() {
                    stack.push(path);
                } else if ty.is_file() {
                    let rel = path
                        .strip_prefix(dir)
                        .expect("walked path is under root")
                        .to_string_lossy()
                        .replace('\\', "/");
                    bundle.insert_with_mode(rel, fs::read(&path)?, file_mode(&entry.metadata()?));
                }
            }
        }
        Ok(bundle)
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<(), BundleError> {
        for (path, f) in &self.files {
            check_path(path)?;
            let target = dir.join(path);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&target, &f.bytes)?;
            set_mode(&target, f.mode)?;
        }
        Ok(())
    }
}

#[cfg(unix)]
fn file_mode(meta: &fs::Metadata) -> u32 {
    use std::os::unix::fs::PermissionsExt;
    if meta.permissions().mode() & 0o111 != 0 {
        0o755
    } else {
        0o644
    }
}

#[cfg(not(unix))]
fn file_mode(_meta: &fs::Metadata) -> u32 {
    0o644
}

#[cfg(unix)]
fn set_mode(path: &Path, mode: u32) -> io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(path, fs::Permissions::from_mode(mode))
}

#[cfg(not(unix))]
fn set_mode(_path: &Path, _mode: u32) -> io::Result<()> {
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode() {
        let mut b = Bundle::new();
        b.insert("schema.txt", "a\nb\n")
            .insert("data.csv", vec![0u8, 10, 255])
            .insert_executable("bin/run", "#!/bin/sh\n");
        let back = Bundle::decode(&b.encode()).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.get_str("schema.txt"), Some("a\nb\n"));
        assert_eq!(back.find_prefixed("data.").collect::<Vec<_>>(), ["data.csv"]);
        assert!(Bundle::decode(b"garbage").is_err());
        assert!(Bundle::decode(b"pvbundle 1\nfile 644 9 x\nab\n").is_err());
    }

    #[test]
    fn rejects_escaping_paths() {
        let mut b = Bundle::new();
        b.insert("../evil", "x");
        assert!(matches!(Bundle::decode(&b.encode()), Err(BundleError::UnsafePath(_))));
    }

    #[test]
    fn dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = Bundle::new();
        b.insert("a.txt", "1").insert_executable("sub/run", "#!/bin/sh\necho hi\n");
        b.write_to_dir(dir.path()).unwrap();
        assert_eq!(Bundle::from_dir(dir.path()).unwrap(), b);
    }
}
