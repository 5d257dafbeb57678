//! Content-addressed object store with chunk-level de-duplication.
//!
//! Objects are split by [`chunker`] into content-defined chunks, each stored
//! once under its SHA-256. An [`ObjectManifest`] lists the chunks of one
//! object. The store is append-only.
//!
//! [`StoreMode::Folder`] is the copy-everything baseline: every put writes
//! every chunk again, as if each version were archived into its own folder.
//!
//! On disk:
//!
//! ```text
//! objects/<2-hex-prefix>/<digest>   chunk bytes
//! manifests/<digest>                kind, size, chunk ids (one per line)
//! folders/<seq>/<digest>            folder-mode chunk copies
//! stats                             persisted counters
//! ```

pub mod chunker;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::digest::Digest;

pub type ChunkId = Digest;
pub type ObjectId = Digest;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("missing chunk {0}")]
    MissingChunk(ChunkId),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("corrupt manifest {0}: {1}")]
    CorruptManifest(ObjectId, String),
    #[error("object {0} reassembled to {1} bytes, manifest says {2}")]
    SizeMismatch(ObjectId, u64, u64),
    #[error("only in-memory stores can be forked")]
    NotForkable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Payload,
    Output,
    Metafile,
    Commit,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectKind::Payload => "payload",
            ObjectKind::Output => "output",
            ObjectKind::Metafile => "metafile",
            ObjectKind::Commit => "commit",
        })
    }
}

impl FromStr for ObjectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "payload" => ObjectKind::Payload,
            "output" => ObjectKind::Output,
            "metafile" => ObjectKind::Metafile,
            "commit" => ObjectKind::Commit,
            other => return Err(format!("unknown object kind `{other}`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectManifest {
    /// Digest of the manifest record.
    pub id: ObjectId,
    pub kind: ObjectKind,
    pub total_size: u64,
    pub chunks: Vec<ChunkId>,
}

impl ObjectManifest {
    fn new(kind: ObjectKind, total_size: u64, chunks: Vec<ChunkId>) -> Self {
        let mut m = ObjectManifest {
            id: Digest::ZERO,
            kind,
            total_size,
            chunks,
        };
        m.id = Digest::of(m.record().as_bytes());
        m
    }

    pub fn record(&self) -> String {
        let mut out = format!("{}\n{}\n", self.kind, self.total_size);
        for c in &self.chunks {
            out.push_str(&c.to_hex());
            out.push('\n');
        }
        out
    }

    pub fn parse_record(id: ObjectId, text: &str) -> Result<Self, StoreError> {
        let bad = |why: &str| StoreError::CorruptManifest(id, why.to_string());
        let mut lines = text.lines();
        let kind = lines
            .next()
            .ok_or_else(|| bad("empty"))?
            .parse()
            .map_err(|e: String| bad(&e))?;
        let total_size = lines
            .next()
            .ok_or_else(|| bad("no size"))?
            .parse()
            .map_err(|_| bad("bad size"))?;
        let chunks = lines
            .map(|l| l.parse().map_err(|_| bad("bad chunk id")))
            .collect::<Result<_, _>>()?;
        let m = ObjectManifest::new(kind, total_size, chunks);
        if m.id != id {
            return Err(bad("digest does not match contents"));
        }
        Ok(m)
    }
}

/// Counters behind the cumulative-storage-size metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StoreStats {
    /// Chunk bytes physically written.
    pub physical_bytes: u64,
    /// Sum of the sizes of every object ever put, duplicates included.
    pub logical_bytes: u64,
    pub chunk_count: u64,
    pub object_count: u64,
    /// Bytes of manifest records written (not counted in `physical_bytes`).
    pub manifest_bytes: u64,
}

impl StoreStats {
    fn render(&self) -> String {
        format!(
            "physical_bytes={}\nlogical_bytes={}\nchunk_count={}\nobject_count={}\nmanifest_bytes={}\n",
            self.physical_bytes,
            self.logical_bytes,
            self.chunk_count,
            self.object_count,
            self.manifest_bytes
        )
    }

    fn parse(text: &str) -> Self {
        let mut s = StoreStats::default();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                let v = v.parse().unwrap_or(0);
                match k {
                    "physical_bytes" => s.physical_bytes = v,
                    "logical_bytes" => s.logical_bytes = v,
                    "chunk_count" => s.chunk_count = v,
                    "object_count" => s.object_count = v,
                    "manifest_bytes" => s.manifest_bytes = v,
                    _ => {}
                }
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoreMode {
    Dedup,
    Folder,
}

#[derive(Clone)]
enum Backend {
    Memory {
        chunks: HashMap<ChunkId, Arc<[u8]>>,
        folder_copies: Vec<Arc<[u8]>>,
    },
    Disk {
        root: PathBuf,
        /// Folder-mode chunk locations.
        folder_index: HashMap<ChunkId, PathBuf>,
    },
}

#[derive(Clone)]
struct Inner {
    backend: Backend,
    manifests: HashMap<ObjectId, ObjectManifest>,
    stats: StoreStats,
    folder_seq: u64,
}

pub struct Store {
    mode: StoreMode,
    inner: RwLock<Inner>,
}

impl fmt::Debug for Store {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Store")
            .field("mode", &self.mode)
            .field("stats", &self.stats())
            .finish()
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
    }
    fs::rename(tmp, path)
}

impl Store {
    pub fn in_memory(mode: StoreMode) -> Self {
        Store {
            mode,
            inner: RwLock::new(Inner {
                backend: Backend::Memory {
                    chunks: HashMap::new(),
                    folder_copies: Vec::new(),
                },
                manifests: HashMap::new(),
                stats: StoreStats::default(),
                folder_seq: 0,
            }),
        }
    }

    /// Open or create an on-disk store rooted at `root`.
    pub fn open(root: impl AsRef<Path>, mode: StoreMode) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(root.join("objects"))?;
        fs::create_dir_all(root.join("manifests"))?;
        let stats = match fs::read_to_string(root.join("stats")) {
            Ok(text) => StoreStats::parse(&text),
            Err(e) if e.kind() == io::ErrorKind::NotFound => StoreStats::default(),
            Err(e) => return Err(e.into()),
        };
        let mut folder_index = HashMap::new();
        let mut folder_seq = 0;
        if let Ok(dirs) = fs::read_dir(root.join("folders")) {
            for dir in dirs {
                let dir = dir?;
                if let Ok(n) = dir.file_name().to_string_lossy().parse::<u64>() {
                    folder_seq = folder_seq.max(n + 1);
                }
                for f in fs::read_dir(dir.path())? {
                    let f = f?;
                    if let Ok(id) = f.file_name().to_string_lossy().parse::<ChunkId>() {
                        folder_index.entry(id).or_insert(f.path());
                    }
                }
            }
        }
        Ok(Store {
            mode,
            inner: RwLock::new(Inner {
                backend: Backend::Disk { root, folder_index },
                manifests: HashMap::new(),
                stats,
                folder_seq,
            }),
        })
    }

    pub fn mode(&self) -> StoreMode {
        self.mode
    }

    /// Deep copy of an in-memory store.
    pub fn fork(&self) -> Result<Store, StoreError> {
        let inner = self.inner.read().expect("store lock poisoned");
        match inner.backend {
            Backend::Memory { .. } => Ok(Store {
                mode: self.mode,
                inner: RwLock::new(inner.clone()),
            }),
            Backend::Disk { .. } => Err(StoreError::NotForkable),
        }
    }

    pub fn put_object(&self, mut reader: impl Read, kind: ObjectKind) -> Result<ObjectManifest, StoreError> {
        let mut data = Vec::new();
        reader.read_to_end(&mut data)?;
        self.put_bytes(&data, kind)
    }

    pub fn put_bytes(&self, data: &[u8], kind: ObjectKind) -> Result<ObjectManifest, StoreError> {
        let mut inner = self.inner.write().expect("store lock poisoned");
        let folder = match self.mode {
            StoreMode::Dedup => None,
            StoreMode::Folder => {
                inner.folder_seq += 1;
                Some(inner.folder_seq - 1)
            }
        };
        let mut ids = Vec::new();
        let mut written = 0u64;
        let mut new_chunks = 0u64;
        for chunk in chunker::chunks(data) {
            let id = Digest::of(chunk);
            ids.push(id);
            if inner.store_chunk(id, chunk, folder)? {
                written += chunk.len() as u64;
                new_chunks += 1;
            }
        }
        let manifest = ObjectManifest::new(kind, data.len() as u64, ids);
        let manifest_new = inner.store_manifest(&manifest)?;
        let stats = &mut inner.stats;
        stats.physical_bytes += written;
        stats.chunk_count += new_chunks;
        stats.logical_bytes += data.len() as u64;
        stats.object_count += 1;
        if manifest_new {
            stats.manifest_bytes += manifest.record().len() as u64;
        }
        inner.persist_stats()?;
        Ok(manifest)
    }

    pub fn manifest(&self, id: &ObjectId) -> Result<ObjectManifest, StoreError> {
        {
            let inner = self.inner.read().expect("store lock poisoned");
            if let Some(m) = inner.manifests.get(id) {
                return Ok(m.clone());
            }
            if let Backend::Memory { .. } = inner.backend {
                return Err(StoreError::UnknownObject(*id));
            }
        }
        let mut inner = self.inner.write().expect("store lock poisoned");
        let Backend::Disk { root, .. } = &inner.backend else {
            unreachable!()
        };
        let text = match fs::read_to_string(root.join("manifests").join(id.to_hex())) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::UnknownObject(*id)),
            Err(e) => return Err(e.into()),
        };
        let m = ObjectManifest::parse_record(*id, &text)?;
        inner.manifests.insert(*id, m.clone());
        Ok(m)
    }

    pub fn get_object(&self, manifest: &ObjectManifest) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::with_capacity(manifest.total_size as usize);
        self.read_object(manifest, &mut out)?;
        Ok(out)
    }

    pub fn get(&self, id: &ObjectId) -> Result<Vec<u8>, StoreError> {
        self.get_object(&self.manifest(id)?)
    }

    pub fn read_object(&self, manifest: &ObjectManifest, mut out: impl Write) -> Result<(), StoreError> {
        let inner = self.inner.read().expect("store lock poisoned");
        let mut total = 0u64;
        for id in &manifest.chunks {
            let bytes = inner.load_chunk(id)?;
            total += bytes.len() as u64;
            out.write_all(&bytes)?;
        }
        if total != manifest.total_size {
            return Err(StoreError::SizeMismatch(manifest.id, total, manifest.total_size));
        }
        Ok(())
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        self.manifest(id).is_ok()
    }

    pub fn stats(&self) -> StoreStats {
        self.inner.read().expect("store lock poisoned").stats
    }
}

impl Inner {
    /// Returns true when the chunk bytes were physically written.
    fn store_chunk(&mut self, id: ChunkId, bytes: &[u8], folder: Option<u64>) -> Result<bool, StoreError> {
        match &mut self.backend {
            Backend::Memory {
                chunks,
                folder_copies,
            } => {
                let arc: Arc<[u8]> = Arc::from(bytes);
                if folder.is_some() {
                    folder_copies.push(arc.clone());
                    chunks.entry(id).or_insert(arc);
                    return Ok(true);
                }
                if chunks.contains_key(&id) {
                    return Ok(false);
                }
                chunks.insert(id, arc);
                Ok(true)
            }
            Backend::Disk { root, folder_index } => {
                if let Some(seq) = folder {
                    let dir = root.join("folders").join(seq.to_string());
                    fs::create_dir_all(&dir)?;
                    let path = dir.join(id.to_hex());
                    fs::write(&path, bytes)?;
                    folder_index.entry(id).or_insert(path);
                    return Ok(true);
                }
                let hex = id.to_hex();
                let dir = root.join("objects").join(&hex[..2]);
                let path = dir.join(&hex);
                if path.exists() {
                    return Ok(false);
                }
                fs::create_dir_all(&dir)?;
                write_atomic(&path, bytes)?;
                Ok(true)
            }
        }
    }

    fn load_chunk(&self, id: &ChunkId) -> Result<Arc<[u8]>, StoreError> {
        match &self.backend {
            Backend::Memory { chunks, .. } => chunks.get(id).cloned().ok_or(StoreError::MissingChunk(*id)),
            Backend::Disk { root, folder_index } => {
                let hex = id.to_hex();
                let path = root.join("objects").join(&hex[..2]).join(&hex);
                match fs::read(&path) {
                    Ok(b) => Ok(b.into()),
                    Err(e) if e.kind() == io::ErrorKind::NotFound => match folder_index.get(id) {
                        Some(p) => Ok(fs::read(p)?.into()),
                        None => Err(StoreError::MissingChunk(*id)),
                    },
                    Err(e) => Err(e.into()),
                }
            }
        }
    }

    fn store_manifest(&mut self, m: &ObjectManifest) -> Result<bool, StoreError> {
        let known = self.manifests.contains_key(&m.id);
        if let Backend::Disk { root, .. } = &self.backend {
            let path = root.join("manifests").join(m.id.to_hex());
            if path.exists() {
                self.manifests.insert(m.id, m.clone());
                return Ok(false);
            }
            write_atomic(&path, m.record().as_bytes())?;
        }
        self.manifests.insert(m.id, m.clone());
        Ok(!known)
    }

    fn persist_stats(&self) -> Result<(), StoreError> {
        if let Backend::Disk { root, .. } = &self.backend {
            write_atomic(&root.join("stats"), self.stats.render().as_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn random(n: usize, seed: u64) -> Vec<u8> {
        let mut v = vec![0; n];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut v);
        v
    }

    #[test]
    fn fresh_store_is_empty() {
        assert_eq!(Store::in_memory(StoreMode::Dedup).stats(), StoreStats::default());
    }

    #[test]
    fn round_trip_various_sizes() {
        let store = Store::in_memory(StoreMode::Dedup);
        for (n, seed) in [(0usize, 1u64), (1, 2), (4096, 3), (1 << 20, 4)] {
            let x = random(n, seed);
            let m = store.put_object(&x[..], ObjectKind::Output).unwrap();
            assert_eq!(m.total_size, n as u64);
            assert_eq!(store.get_object(&m).unwrap(), x);
            assert_eq!(store.get(&m.id).unwrap(), x);
        }
    }

    #[test]
    fn empty_object_has_no_chunks() {
        let store = Store::in_memory(StoreMode::Dedup);
        let m = store.put_bytes(&[], ObjectKind::Output).unwrap();
        assert!(m.chunks.is_empty());
        assert_eq!(m.total_size, 0);
    }

    #[test]
    fn duplicate_put_adds_no_physical_bytes() {
        let store = Store::in_memory(StoreMode::Dedup);
        let x = random(1 << 20, 9);
        store.put_bytes(&x, ObjectKind::Payload).unwrap();
        let before = store.stats();
        assert_eq!(before.logical_bytes, 1 << 20);
        assert!(before.physical_bytes <= 1 << 20);
        store.put_bytes(&x, ObjectKind::Payload).unwrap();
        let after = store.stats();
        assert_eq!(after.physical_bytes, before.physical_bytes);
        assert_eq!(after.manifest_bytes, before.manifest_bytes);
        assert_eq!(after.logical_bytes, 2 << 20);
        assert_eq!(after.object_count, 2);
    }

    #[test]
    fn appended_byte_shares_prefix_chunks() {
        let x = random(1 << 20, 11);
        let mut y = x.clone();
        y.push(0x5A);

        // Oracle: the reference chunker over both streams, diffed as sets.
        let set = |d: &[u8]| {
            let mut s = 0;
            chunker::oracle::chunk_ends(d)
                .into_iter()
                .map(|e| {
                    let c = Digest::of(&d[s..e]);
                    let len = e - s;
                    s = e;
                    (c, len)
                })
                .collect::<HashSet<_>>()
        };
        let (sx, sy) = (set(&x), set(&y));
        let expected_growth: usize = sy.difference(&sx).map(|(_, l)| l).sum();

        let store = Store::in_memory(StoreMode::Dedup);
        store.put_bytes(&x, ObjectKind::Output).unwrap();
        let p0 = store.stats().physical_bytes;
        store.put_bytes(&y, ObjectKind::Output).unwrap();
        let growth = store.stats().physical_bytes - p0;
        assert_eq!(growth as usize, expected_growth);
        assert!(growth < 17 * 1024, "growth {growth}");
    }

    #[test]
    fn fabricated_chunk_is_missing() {
        let store = Store::in_memory(StoreMode::Dedup);
        let m = ObjectManifest::new(ObjectKind::Output, 3, vec![Digest::of(b"nope")]);
        assert!(matches!(store.get_object(&m), Err(StoreError::MissingChunk(_))));
        assert!(matches!(store.manifest(&Digest::of(b"x")), Err(StoreError::UnknownObject(_))));
    }

    #[test]
    fn chunks_come_back_in_manifest_order() {
        let store = Store::in_memory(StoreMode::Dedup);
        let x = random(40_000, 5);
        let m = store.put_bytes(&x, ObjectKind::Output).unwrap();
        assert!(m.chunks.len() >= 3);
        let a = Store::in_memory(StoreMode::Dedup);
        let mut reversed = m.clone();
        reversed.chunks.reverse();
        a.put_bytes(&x, ObjectKind::Output).unwrap();
        let back = a.get_object(&reversed).unwrap();
        assert_ne!(back, x);
        assert_eq!(store.get_object(&m).unwrap(), x);
    }

    #[test]
    fn folder_mode_copies_everything() {
        let store = Store::in_memory(StoreMode::Folder);
        let x = random(100_000, 6);
        store.put_bytes(&x, ObjectKind::Output).unwrap();
        store.put_bytes(&x, ObjectKind::Output).unwrap();
        let s = store.stats();
        assert_eq!(s.physical_bytes, 200_000);
        assert_eq!(s.logical_bytes, 200_000);
    }

    #[test]
    fn same_puts_same_stats() {
        let a = Store::in_memory(StoreMode::Dedup);
        let b = Store::in_memory(StoreMode::Dedup);
        for seed in 0..5 {
            let x = random(10_000 * (seed as usize + 1), seed % 3);
            a.put_bytes(&x, ObjectKind::Output).unwrap();
            b.put_bytes(&x, ObjectKind::Output).unwrap();
        }
        assert_eq!(a.stats(), b.stats());
    }

    #[test]
    fn disk_store_persists() {
        let dir = tempfile::tempdir().unwrap();
        let x = random(50_000, 8);
        let id = {
            let s = Store::open(dir.path(), StoreMode::Dedup).unwrap();
            s.put_bytes(&x, ObjectKind::Payload).unwrap().id
        };
        let s = Store::open(dir.path(), StoreMode::Dedup).unwrap();
        assert_eq!(s.get(&id).unwrap(), x);
        let before = s.stats();
        assert_eq!(before.logical_bytes, 50_000);
        s.put_bytes(&x, ObjectKind::Payload).unwrap();
        assert_eq!(s.stats().physical_bytes, before.physical_bytes);
        let hex = id.to_hex();
        let text = fs::read_to_string(dir.path().join("manifests").join(&hex)).unwrap();
        assert!(text.starts_with("payload\n50000\n"));
    }

    #[test]
    fn disk_folder_mode_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = random(30_000, 12);
        let id = {
            let s = Store::open(dir.path(), StoreMode::Folder).unwrap();
            s.put_bytes(&x, ObjectKind::Output).unwrap();
            s.put_bytes(&x, ObjectKind::Output).unwrap().id
        };
        let s = Store::open(dir.path(), StoreMode::Folder).unwrap();
        assert_eq!(s.get(&id).unwrap(), x);
        assert_eq!(s.stats().physical_bytes, 60_000);
    }

    #[test]
    fn fork_is_independent() {
        let a = Store::in_memory(StoreMode::Dedup);
        a.put_bytes(b"hello", ObjectKind::Output).unwrap();
        let b = a.fork().unwrap();
        b.put_bytes(&random(5000, 1), ObjectKind::Output).unwrap();
        assert_ne!(a.stats(), b.stats());
    }

    proptest::proptest! {
        #[test]
        fn round_trip_and_rechunk(data in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..40_000)) {
            let store = Store::in_memory(StoreMode::Dedup);
            let m1 = store.put_bytes(&data, ObjectKind::Output).unwrap();
            let m2 = store.put_bytes(&data, ObjectKind::Output).unwrap();
            proptest::prop_assert_eq!(&m1.chunks, &m2.chunks);
            proptest::prop_assert_eq!(store.get_object(&m1).unwrap(), data);
        }
    }
}
