use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::bundle::Bundle;
use crate::exec::{ComponentRunner, MetricsLedger, RunStats, Scores};
use crate::model::{
    next_version, ComponentId, ComponentKind, ComponentMeta, ComponentVersion, PipelineSpec,
    PipelineVersion, SemanticVersion, MASTER, METAFILE_NAME,
};
use crate::store::{ObjectKind, Store, StoreMode};
use crate::vcs::{valid_branch_name, Commit, CommitId, PipelineRun, ReuseIndex, VcsError};

const LOCK_FILE: &str = "LOCK";
const SPEC_FILE: &str = "pipeline";
const HEAD_FILE: &str = "HEAD";

struct RepoLock(PathBuf);

impl RepoLock {
    fn acquire(root: &Path) -> Result<Self, VcsError> {
        let path = root.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(RepoLock(path))
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(VcsError::Locked(path)),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RepoLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn write_atomic(path: &Path, data: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, data)?;
    fs::rename(&tmp, path)
}

fn valid_component_name(name: &str) -> bool {
    valid_branch_name(name)
}

/// A pipeline repository: component repositories, commit graph and heads.
pub struct Repository {
    root: Option<PathBuf>,
    writable: bool,
    _lock: Option<RepoLock>,
    store: Arc<Store>,
    spec: Arc<PipelineSpec>,
    components: BTreeMap<String, Vec<ComponentVersion>>,
    commits: HashMap<CommitId, Arc<Commit>>,
    heads: BTreeMap<String, Option<CommitId>>,
    current: String,
    next_sequence: u64,
    reuse: ReuseIndex,
}

impl std::fmt::Debug for Repository {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Repository")
            .field("root", &self.root)
            .field("pipeline", &self.spec.name())
            .field("commits", &self.commits.len())
            .field("heads", &self.heads)
            .finish()
    }
}

impl Repository {
    /// A repository that lives only in memory, with a dedup store.
    pub fn in_memory(spec: PipelineSpec) -> Self {
        Self::fresh(None, None, Arc::new(Store::in_memory(StoreMode::Dedup)), spec)
    }

    fn fresh(root: Option<PathBuf>, lock: Option<RepoLock>, store: Arc<Store>, spec: PipelineSpec) -> Self {
        Repository {
            root,
            writable: true,
            _lock: lock,
            store,
            spec: Arc::new(spec),
            components: BTreeMap::new(),
            commits: HashMap::new(),
            heads: BTreeMap::from([(MASTER.to_string(), None)]),
            current: MASTER.to_string(),
            next_sequence: 0,
            reuse: ReuseIndex::new(),
        }
    }

    /// Create a repository under `path`, which must be absent or empty.
    pub fn init(path: impl AsRef<Path>, spec: PipelineSpec) -> Result<Self, VcsError> {
        let root = path.as_ref().to_path_buf();
        if root.exists() && fs::read_dir(&root)?.next().is_some() {
            return Err(VcsError::AlreadyExists(root));
        }
        fs::create_dir_all(root.join("refs"))?;
        fs::create_dir_all(root.join("commits"))?;
        fs::create_dir_all(root.join("components"))?;
        let lock = RepoLock::acquire(&root)?;
        write_atomic(&root.join(SPEC_FILE), spec.to_text().as_bytes())?;
        write_atomic(&root.join(HEAD_FILE), MASTER.as_bytes())?;
        write_atomic(&root.join("refs").join(MASTER), b"")?;
        let store = Arc::new(Store::open(root.join("store"), StoreMode::Dedup)?);
        Ok(Self::fresh(Some(root), Some(lock), store, spec))
    }

    /// Open for writing; holds the writer lock until dropped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, VcsError> {
        let root = path.as_ref().to_path_buf();
        if !root.join(SPEC_FILE).is_file() {
            return Err(VcsError::NotARepository(root));
        }
        let lock = RepoLock::acquire(&root)?;
        let mut repo = Self::load(root)?;
        repo._lock = Some(lock);
        Ok(repo)
    }

    /// Open without taking the lock; mutating calls fail with `ReadOnly`.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self, VcsError> {
        let root = path.as_ref().to_path_buf();
        if !root.join(SPEC_FILE).is_file() {
            return Err(VcsError::NotARepository(root));
        }
        let mut repo = Self::load(root)?;
        repo.writable = false;
        Ok(repo)
    }

    fn load(root: PathBuf) -> Result<Self, VcsError> {
        let spec = PipelineSpec::parse_text(&fs::read_to_string(root.join(SPEC_FILE))?)?;
        let store = Arc::new(Store::open(root.join("store"), StoreMode::Dedup)?);
        let mut repo = Self::fresh(Some(root.clone()), None, store, spec);
        repo.heads.clear();
        repo.current = fs::read_to_string(root.join(HEAD_FILE))?.trim().to_string();

        for entry in fs::read_dir(root.join("components"))? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".tmp") {
                continue;
            }
            let text = fs::read_to_string(entry.path())?;
            let versions = text
                .lines()
                .filter(|l| !l.is_empty())
                .map(|l| parse_component_line(&name, l))
                .collect::<Result<Vec<_>, _>>()?;
            repo.components.insert(name, versions);
        }
        for entry in fs::read_dir(root.join("refs"))? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.ends_with(".tmp") {
                continue;
            }
            let text = fs::read_to_string(entry.path())?;
            let head = match text.trim() {
                "" => None,
                hex => Some(hex.parse().map_err(|_| VcsError::Corrupt {
                    what: format!("ref {name}"),
                    detail: hex.to_string(),
                })?),
            };
            repo.heads.insert(name, head);
        }
        let mut loaded = Vec::new();
        for entry in fs::read_dir(root.join("commits"))? {
            let entry = entry?;
            if entry.file_name().to_string_lossy().ends_with(".tmp") {
                continue;
            }
            let text = fs::read_to_string(entry.path())?;
            let commit = Commit::parse(&text, &repo.spec, |id| repo.component(id).cloned())?;
            loaded.push(commit);
        }
        loaded.sort_by_key(|c| c.sequence);
        for commit in loaded {
            repo.next_sequence = repo.next_sequence.max(commit.sequence + 1);
            repo.reuse.add_commit(&commit);
            repo.commits.insert(commit.id, Arc::new(commit));
        }
        for (branch, head) in &repo.heads {
            if let Some(id) = head {
                if !repo.commits.contains_key(id) {
                    return Err(VcsError::UnknownCommit(format!("{id} (head of {branch})")));
                }
            }
        }
        if !repo.heads.contains_key(&repo.current) {
            return Err(VcsError::UnknownBranch(repo.current.clone()));
        }
        Ok(repo)
    }

    /// An independent in-memory copy sharing no state with `self`.
    pub fn fork(&self) -> Result<Repository, VcsError> {
        Ok(Repository {
            root: None,
            writable: true,
            _lock: None,
            store: Arc::new(self.store.fork()?),
            spec: self.spec.clone(),
            components: self.components.clone(),
            commits: self.commits.clone(),
            heads: self.heads.clone(),
            current: self.current.clone(),
            next_sequence: self.next_sequence,
            reuse: self.reuse.clone(),
        })
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn spec(&self) -> &Arc<PipelineSpec> {
        &self.spec
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn reuse_index(&self) -> &ReuseIndex {
        &self.reuse
    }

    fn check_writable(&self) -> Result<(), VcsError> {
        if self.writable {
            Ok(())
        } else {
            Err(VcsError::ReadOnly)
        }
    }

    // ---- branches ----

    pub fn current_branch(&self) -> &str {
        &self.current
    }

    pub fn branches(&self) -> impl Iterator<Item = (&str, Option<CommitId>)> {
        self.heads.iter().map(|(b, h)| (b.as_str(), *h))
    }

    pub fn has_branch(&self, name: &str) -> bool {
        self.heads.contains_key(name)
    }

    pub fn head(&self, branch: &str) -> Result<Option<CommitId>, VcsError> {
        self.heads
            .get(branch)
            .copied()
            .ok_or_else(|| VcsError::UnknownBranch(branch.to_string()))
    }

    pub fn head_commit(&self, branch: &str) -> Result<Arc<Commit>, VcsError> {
        let id = self
            .head(branch)?
            .ok_or_else(|| VcsError::EmptyBranch(branch.to_string()))?;
        self.commit(&id)
    }

    /// Create `name` at `from`, or at the current branch head.
    pub fn create_branch(&mut self, name: &str, from: Option<CommitId>) -> Result<CommitId, VcsError> {
        self.check_writable()?;
        if !valid_branch_name(name) {
            return Err(VcsError::BadBranchName(name.to_string()));
        }
        if self.heads.contains_key(name) {
            return Err(VcsError::DuplicateBranch(name.to_string()));
        }
        let at = match from {
            Some(id) => {
                self.commit(&id)?;
                id
            }
            None => self
                .head(&self.current)?
                .ok_or_else(|| VcsError::EmptyBranch(self.current.clone()))?,
        };
        self.set_head(name, at)?;
        Ok(at)
    }

    pub fn checkout(&mut self, branch: &str) -> Result<(), VcsError> {
        self.check_writable()?;
        self.head(branch)?;
        if let Some(root) = &self.root {
            write_atomic(&root.join(HEAD_FILE), branch.as_bytes())?;
        }
        self.current = branch.to_string();
        Ok(())
    }

    fn set_head(&mut self, branch: &str, id: CommitId) -> Result<(), VcsError> {
        if let Some(root) = &self.root {
            write_atomic(&root.join("refs").join(branch), id.to_hex().as_bytes())?;
        }
        self.heads.insert(branch.to_string(), Some(id));
        Ok(())
    }

    // ---- components ----

    pub fn component_names(&self) -> impl Iterator<Item = &str> {
        self.components.keys().map(String::as_str)
    }

    pub fn versions(&self, name: &str) -> &[ComponentVersion] {
        self.components.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn component(&self, id: &ComponentId) -> Option<&ComponentVersion> {
        self.versions(&id.name).iter().find(|c| c.version == id.version)
    }

    /// Archive a payload and register it as a version of the component its
    /// metafile names, on `branch`.
    ///
    /// A payload identical to an existing version returns that version. The
    /// predecessor is the version bound on `branch`'s head, or else the
    /// latest registered one. An unchanged schema takes the next free
    /// increment under the predecessor's schema ordinal; a changed schema
    /// opens a new ordinal. Dataset schema changes are detected from the
    /// digest; libraries must flag them in the metafile.
    pub fn register_component(&mut self, payload: &Bundle, branch: &str) -> Result<ComponentVersion, VcsError> {
        self.check_writable()?;
        self.head(branch)?;
        let meta_text = payload.get_str(METAFILE_NAME).ok_or_else(|| VcsError::Corrupt {
            what: "payload".into(),
            detail: format!("missing {METAFILE_NAME}"),
        })?;
        let meta = ComponentMeta::parse(meta_text)?;
        if !valid_component_name(&meta.name) {
            return Err(crate::model::ModelError::BadName(meta.name).into());
        }
        let existing = self.versions(&meta.name);
        if let Some(first) = existing.first() {
            if first.kind != meta.kind {
                return Err(VcsError::KindConflict {
                    name: meta.name,
                    existing: first.kind,
                });
            }
        }
        let manifest = self.store.put_bytes(&payload.encode(), ObjectKind::Payload)?;
        if let Some(same) = existing.iter().find(|c| c.payload == manifest.id) {
            return Ok(same.clone());
        }

        let on_branch = self
            .head(branch)?
            .and_then(|id| self.commits.get(&id))
            .and_then(|c| c.pipeline.bindings().iter().find(|b| b.name == meta.name).cloned());
        let predecessor = on_branch.or_else(|| existing.iter().max_by(|a, b| a.version.cmp(&b.version)).cloned());
        let digest = meta.output_schema;
        let (version, schema_changed) = match predecessor {
            None => (SemanticVersion::initial(branch, digest), false),
            Some(prev) => {
                let flagged = match meta.kind {
                    ComponentKind::Library => meta.schema_changed,
                    ComponentKind::Dataset => digest != prev.output_schema,
                };
                let checked = next_version(&prev.version, flagged, digest, branch)?;
                let (ordinal, increment) = if flagged {
                    let top = existing.iter().map(|c| c.version.schema_ordinal).max().unwrap_or(0);
                    (top + 1, 0)
                } else {
                    let o = prev.version.schema_ordinal;
                    let top = existing
                        .iter()
                        .filter(|c| c.version.schema_ordinal == o)
                        .map(|c| c.version.increment)
                        .max()
                        .unwrap_or(0);
                    (o, top + 1)
                };
                (
                    SemanticVersion {
                        schema_ordinal: ordinal,
                        increment,
                        ..checked
                    },
                    flagged,
                )
            }
        };
        let component = ComponentVersion {
            name: meta.name.clone(),
            kind: meta.kind,
            version,
            payload: manifest.id,
            input_schema: meta.input_schema,
            output_schema: digest,
            schema_changed,
        };
        if let Some(root) = &self.root {
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(root.join("components").join(&meta.name))?;
            writeln!(f, "{}", component_line(&component))?;
            f.sync_data()?;
        }
        self.components.entry(meta.name).or_default().push(component.clone());
        Ok(component)
    }

    // ---- commits ----

    pub fn commit(&self, id: &CommitId) -> Result<Arc<Commit>, VcsError> {
        self.commits
            .get(id)
            .cloned()
            .ok_or_else(|| VcsError::UnknownCommit(id.to_string()))
    }

    /// Resolve a full or abbreviated (unique prefix) commit id.
    pub fn resolve_commit(&self, text: &str) -> Result<CommitId, VcsError> {
        if let Some(id) = self.heads.get(text).copied().flatten() {
            return Ok(id);
        }
        let text = text.to_ascii_lowercase();
        let mut hits = self.commits.keys().filter(|id| id.to_hex().starts_with(&text));
        match (hits.next(), hits.next()) {
            (Some(id), None) if !text.is_empty() => Ok(*id),
            _ => Err(VcsError::UnknownCommit(text)),
        }
    }

    pub fn commit_count(&self) -> usize {
        self.commits.len()
    }

    pub fn all_commits(&self) -> Vec<Arc<Commit>> {
        let mut all: Vec<_> = self.commits.values().cloned().collect();
        all.sort_by_key(|c| c.sequence);
        all
    }

    fn validate_run(&self, pipeline: &PipelineVersion, run: &PipelineRun) -> Result<(), VcsError> {
        for (slot, c) in pipeline.iter() {
            if self.component(&c.id()).map(|r| r != c).unwrap_or(true) {
                return Err(VcsError::UnknownComponent(c.id().to_string()));
            }
            let out = run
                .outputs
                .get(slot)
                .ok_or_else(|| VcsError::MissingOutput(slot.to_string()))?;
            if out.schema != c.output_schema || !self.store.contains(&out.object) {
                return Err(VcsError::MissingOutput(slot.to_string()));
            }
        }
        Ok(())
    }

    fn append_commit(
        &mut self,
        branch: &str,
        parents: Vec<CommitId>,
        pipeline: PipelineVersion,
        run: &PipelineRun,
    ) -> Result<Arc<Commit>, VcsError> {
        let commit = Commit::build(branch, parents, self.next_sequence, pipeline, run);
        if let Some(root) = &self.root {
            write_atomic(&root.join("commits").join(commit.id.to_hex()), commit.record().as_bytes())?;
        }
        self.next_sequence += 1;
        self.reuse.add_commit(&commit);
        let commit = Arc::new(commit);
        self.commits.insert(commit.id, commit.clone());
        self.set_head(branch, commit.id)?;
        Ok(commit)
    }

    /// Commit a processed pipeline on `branch`, parented on its head.
    pub fn commit_pipeline(
        &mut self,
        branch: &str,
        bindings: BTreeMap<String, ComponentVersion>,
        run: &PipelineRun,
    ) -> Result<Arc<Commit>, VcsError> {
        self.check_writable()?;
        let parent = self.head(branch)?;
        let pipeline = PipelineVersion::new(self.spec.clone(), bindings)?;
        pipeline.check_compatibility()?;
        self.validate_run(&pipeline, run)?;
        self.append_commit(branch, parent.into_iter().collect(), pipeline, run)
    }

    /// Commit a merge result on `branch` with parents (head, `merge_head`).
    pub fn commit_merge(
        &mut self,
        branch: &str,
        merge_head: CommitId,
        pipeline: PipelineVersion,
        run: &PipelineRun,
    ) -> Result<Arc<Commit>, VcsError> {
        self.check_writable()?;
        let head = self
            .head(branch)?
            .ok_or_else(|| VcsError::EmptyBranch(branch.to_string()))?;
        self.commit(&merge_head)?;
        pipeline.check_compatibility()?;
        self.validate_run(&pipeline, run)?;
        self.append_commit(branch, vec![head, merge_head], pipeline, run)
    }

    /// Bind `changes` over the head pipeline of `branch`, run it (reusing
    /// any archived output with the same lineage) and commit.
    pub fn update(
        &mut self,
        branch: &str,
        changes: BTreeMap<String, ComponentVersion>,
        runner: &ComponentRunner,
        ledger: &MetricsLedger,
    ) -> Result<Arc<Commit>, VcsError> {
        self.check_writable()?;
        let mut bindings: BTreeMap<String, ComponentVersion> = match self.head(branch)? {
            Some(id) => self.commit(&id)?.pipeline.iter().map(|(s, c)| (s.to_string(), c.clone())).collect(),
            None => BTreeMap::new(),
        };
        bindings.extend(changes);
        let pipeline = PipelineVersion::new(self.spec.clone(), bindings.clone())?;
        pipeline.check_compatibility()?;
        let run = run_pipeline(&pipeline, runner, ledger, Some(&self.reuse))?;
        self.commit_pipeline(branch, bindings, &run)
    }

    /// Register `payloads` (slot, payload) on `branch`, then [`update`](Self::update).
    pub fn commit_payloads(
        &mut self,
        branch: &str,
        payloads: &[(String, Bundle)],
        runner: &ComponentRunner,
        ledger: &MetricsLedger,
    ) -> Result<Arc<Commit>, VcsError> {
        let mut changes = BTreeMap::new();
        for (slot, payload) in payloads {
            self.spec.slot_index(slot)?;
            changes.insert(slot.clone(), self.register_component(payload, branch)?);
        }
        self.update(branch, changes, runner, ledger)
    }

    // ---- graph queries ----

    /// `id` and every commit reachable through parents.
    pub fn ancestors(&self, id: &CommitId) -> Result<HashSet<CommitId>, VcsError> {
        let mut seen = HashSet::new();
        let mut stack = vec![*id];
        while let Some(c) = stack.pop() {
            if seen.insert(c) {
                stack.extend(self.commit(&c)?.parents.iter().copied());
            }
        }
        Ok(seen)
    }

    /// The shared ancestor with the highest sequence number (smaller id on a
    /// tie).
    pub fn common_ancestor(&self, a: &CommitId, b: &CommitId) -> Result<CommitId, VcsError> {
        let left = self.ancestors(a)?;
        let right = self.ancestors(b)?;
        left.intersection(&right)
            .map(|id| &self.commits[id])
            .max_by_key(|c| (c.sequence, Reverse(c.id)))
            .map(|c| c.id)
            .ok_or_else(|| VcsError::NoCommonAncestor(a.short(), b.short()))
    }

    pub fn is_fast_forward(&self, head_branch: &str, merge_branch: &str) -> Result<bool, VcsError> {
        let head = self.head_commit(head_branch)?.id;
        let merge = self.head_commit(merge_branch)?.id;
        Ok(self.common_ancestor(&head, &merge)? == head)
    }

    /// Adopt `merge_branch`'s pipeline on `head_branch` without running
    /// anything; the new commit has both heads as parents.
    pub fn fast_forward_merge(&mut self, head_branch: &str, merge_branch: &str) -> Result<Arc<Commit>, VcsError> {
        self.check_writable()?;
        if !self.is_fast_forward(head_branch, merge_branch)? {
            return Err(VcsError::NotFastForward {
                head: head_branch.to_string(),
                merge: merge_branch.to_string(),
            });
        }
        let head = self.head_commit(head_branch)?;
        let merge = self.head_commit(merge_branch)?;
        let run = PipelineRun {
            outputs: merge.outputs.clone(),
            scores: merge.scores.clone(),
            stats: RunStats::default(),
            executed: Vec::new(),
        };
        self.append_commit(head_branch, vec![head.id, merge.id], merge.pipeline.clone(), &run)
    }

    /// Commits reachable from `tip` that descend from `ancestor`, both
    /// inclusive, oldest first.
    pub fn commits_between(&self, ancestor: &CommitId, tip: &CommitId) -> Result<Vec<Arc<Commit>>, VcsError> {
        let mut out = Vec::new();
        for id in self.ancestors(tip)? {
            if self.ancestors(&id)?.contains(ancestor) {
                out.push(self.commit(&id)?);
            }
        }
        out.sort_by_key(|c| c.sequence);
        Ok(out)
    }

    /// History of `branch`, newest first.
    pub fn log(&self, branch: &str) -> Result<Vec<Arc<Commit>>, VcsError> {
        let Some(head) = self.head(branch)? else {
            return Ok(Vec::new());
        };
        let mut all: Vec<_> = self
            .ancestors(&head)?
            .iter()
            .map(|id| self.commits[id].clone())
            .collect();
        all.sort_by_key(|c| Reverse(c.sequence));
        Ok(all)
    }
}

/// Run every slot of `pipeline` in topological order, skipping slots whose
/// lineage is in `reuse`.
pub(crate) fn run_pipeline(
    pipeline: &PipelineVersion,
    runner: &ComponentRunner,
    ledger: &MetricsLedger,
    reuse: Option<&ReuseIndex>,
) -> Result<PipelineRun, VcsError> {
    let spec = pipeline.spec();
    let mut run = PipelineRun::default();
    let mut scores = Scores::new();
    for &i in spec.topo_order() {
        let slot = &spec.slots()[i].name;
        let lineage: Vec<ComponentId> = spec.ancestry(i).into_iter().map(|s| pipeline.at(s).id()).collect();
        if let Some((out, s)) = reuse.and_then(|r| r.get(&lineage)) {
            run.outputs.insert(slot.clone(), *out);
            scores.extend(s.iter().map(|(k, v)| (k.clone(), *v)));
            continue;
        }
        let inputs: Vec<_> = spec
            .predecessor_indices(i)
            .into_iter()
            .map(|p| {
                let name = spec.slots()[p].name.clone();
                let out = run.outputs[&name];
                (name, out)
            })
            .collect();
        let done = runner
            .run_component(pipeline.at(i), &inputs, &lineage, ledger)
            .map_err(|source| VcsError::Run {
                slot: slot.clone(),
                source,
            })?;
        run.stats.add(&done.stats);
        scores.extend(done.scores);
        run.outputs.insert(slot.clone(), done.output);
        run.executed.push(slot.clone());
    }
    run.scores = scores;
    Ok(run)
}

impl Repository {
    /// Run `pipeline` against this repository's store.
    pub fn run_pipeline(
        &self,
        pipeline: &PipelineVersion,
        runner: &ComponentRunner,
        ledger: &MetricsLedger,
        reuse: bool,
    ) -> Result<PipelineRun, VcsError> {
        run_pipeline(pipeline, runner, ledger, reuse.then_some(&self.reuse))
    }
}

fn component_line(c: &ComponentVersion) -> String {
    format!(
        "{} {} {} {} {} {}",
        c.kind,
        c.version.to_record(),
        c.payload,
        c.input_schema,
        c.output_schema,
        c.schema_changed
    )
}

fn parse_component_line(name: &str, line: &str) -> Result<ComponentVersion, VcsError> {
    let corrupt = |detail: &str| VcsError::Corrupt {
        what: format!("component {name}"),
        detail: detail.to_string(),
    };
    let f: Vec<&str> = line.split(' ').collect();
    let [kind, version, payload, input, output, changed] = f.as_slice() else {
        return Err(corrupt(line));
    };
    Ok(ComponentVersion {
        name: name.to_string(),
        kind: kind.parse()?,
        version: SemanticVersion::parse_record(version)?,
        payload: payload.parse().map_err(|_| corrupt(payload))?,
        input_schema: input.parse().map_err(|_| corrupt(input))?,
        output_schema: output.parse().map_err(|_| corrupt(output))?,
        schema_changed: changed.parse().map_err(|_| corrupt(changed))?,
    })
}
