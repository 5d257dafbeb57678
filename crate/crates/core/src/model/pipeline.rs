use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::model::{is_compatible, ComponentKind, ComponentVersion, ModelError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub kind: ComponentKind,
}

/// A pipeline DAG over named slots.
///
/// The topological order is computed once at construction (Kahn's algorithm,
/// lowest declared index first) and drives every linearized traversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineSpec {
    name: String,
    slots: Vec<Slot>,
    edges: BTreeSet<(usize, usize)>,
    topo: Vec<usize>,
}

impl PipelineSpec {
    pub fn new(
        name: impl Into<String>,
        slots: Vec<Slot>,
        edges: &[(&str, &str)],
    ) -> Result<Self, ModelError> {
        let owned: Vec<(String, String)> = edges
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        Self::from_parts(name, slots, &owned)
    }

    pub fn from_parts(
        name: impl Into<String>,
        slots: Vec<Slot>,
        edges: &[(String, String)],
    ) -> Result<Self, ModelError> {
        if slots.is_empty() {
            return Err(ModelError::EmptySpec);
        }
        let mut seen = BTreeSet::new();
        for s in &slots {
            if !seen.insert(s.name.as_str()) {
                return Err(ModelError::DuplicateSlot(s.name.clone()));
            }
        }
        let index = |n: &str| slots.iter().position(|s| s.name == n);
        let mut idx_edges = BTreeSet::new();
        for (from, to) in edges {
            match (index(from), index(to)) {
                (Some(a), Some(b)) => {
                    idx_edges.insert((a, b));
                }
                _ => {
                    return Err(ModelError::DanglingEdge {
                        from: from.clone(),
                        to: to.clone(),
                    })
                }
            }
        }
        let topo = topological_order(slots.len(), &idx_edges).ok_or(ModelError::CycleDetected)?;
        Ok(PipelineSpec {
            name: name.into(),
            slots,
            edges: idx_edges,
            topo,
        })
    }

    /// A linear chain `slots[0] -> slots[1] -> ...`.
    pub fn chain(name: impl Into<String>, slots: Vec<Slot>) -> Result<Self, ModelError> {
        let names: Vec<String> = slots.iter().map(|s| s.name.clone()).collect();
        let edges: Vec<(String, String)> = names
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        Self::from_parts(name, slots, &edges)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Slot indices in topological order.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn slot_index(&self, name: &str) -> Result<usize, ModelError> {
        self.slots
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| ModelError::UnknownSlot(name.to_string()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.slots[a].name.clone(), self.slots[b].name.clone()))
            .collect()
    }

    pub fn predecessor_indices(&self, slot: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, b)| b == slot)
            .map(|&(a, _)| a)
            .collect()
    }

    pub fn successor_indices(&self, slot: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(a, _)| a == slot)
            .map(|&(_, b)| b)
            .collect()
    }

    pub fn predecessors(&self, slot: &str) -> Result<BTreeSet<String>, ModelError> {
        let i = self.slot_index(slot)?;
        Ok(self
            .predecessor_indices(i)
            .into_iter()
            .map(|p| self.slots[p].name.clone())
            .collect())
    }

    pub fn successors(&self, slot: &str) -> Result<BTreeSet<String>, ModelError> {
        let i = self.slot_index(slot)?;
        Ok(self
            .successor_indices(i)
            .into_iter()
            .map(|s| self.slots[s].name.clone())
            .collect())
    }

    /// All transitive predecessors of `slot` plus the slot itself, in
    /// topological order.
    pub fn ancestry(&self, slot: usize) -> Vec<usize> {
        let mut keep = vec![false; self.slots.len()];
        let mut stack = vec![slot];
        while let Some(s) = stack.pop() {
            if !keep[s] {
                keep[s] = true;
                stack.extend(self.predecessor_indices(s));
            }
        }
        self.topo.iter().copied().filter(|&s| keep[s]).collect()
    }

    /// Text form: `name=`, `slot=<name>:<kind>` and `edge=<from>-><to>` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("name={}\n", self.name);
        for s in &self.slots {
            out.push_str(&format!("slot={}:{}\n", s.name, s.kind));
        }
        for (a, b) in self.edge_names() {
            out.push_str(&format!("edge={a}->{b}\n"));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, ModelError> {
        let mut name = None;
        let mut slots = Vec::new();
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || ModelError::BadSpecLine(lineno + 1, raw.to_string());
            let (key, value) = line.split_once('=').ok_or_else(bad)?;
            match key.trim() {
                "name" => name = Some(value.trim().to_string()),
                "slot" => {
                    let (n, k) = value.split_once(':').ok_or_else(bad)?;
                    slots.push(Slot {
                        name: n.trim().to_string(),
                        kind: k.parse()?,
                    });
                }
                "edge" => {
                    let (a, b) = value.split_once("->").ok_or_else(bad)?;
                    edges.push((a.trim().to_string(), b.trim().to_string()));
                }
                _ => return Err(bad()),
            }
        }
        Self::from_parts(name.unwrap_or_else(|| "pipeline".into()), slots, &edges)
    }
}

/// Check a spec is a well-formed DAG. Construction already enforces this;
/// the free function exists for callers holding raw parts.
pub fn validate_dag(slots: &[Slot], edges: &[(String, String)]) -> Result<(), ModelError> {
    PipelineSpec::from_parts("validate", slots.to_vec(), edges).map(|_| ())
}

fn topological_order(n: usize, edges: &BTreeSet<(usize, usize)>) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    for &(_, b) in edges {
        indegree[b] += 1;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(next) = ready.pop_first() {
        order.push(next);
        for &(a, b) in edges {
            if a == next {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    ready.insert(b);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A full binding of every slot of a spec to a component version.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineVersion {
    spec: Arc<PipelineSpec>,
    /// Indexed like `spec.slots()`.
    bindings: Vec<ComponentVersion>,
}

impl PipelineVersion {
    pub fn new(
        spec: Arc<PipelineSpec>,
        mut bindings: BTreeMap<String, ComponentVersion>,
    ) -> Result<Self, ModelError> {
        let mut ordered = Vec::with_capacity(spec.len());
        for slot in spec.slots() {
            let c = bindings
                .remove(&slot.name)
                .ok_or_else(|| ModelError::UnboundSlot(slot.name.clone()))?;
            if c.kind != slot.kind {
                return Err(ModelError::KindMismatch {
                    slot: slot.name.clone(),
                    expected: slot.kind,
                    found: c.kind,
                });
            }
            ordered.push(c);
        }
        if let Some(extra) = bindings.keys().next() {
            return Err(ModelError::UnknownSlot(extra.clone()));
        }
        Ok(PipelineVersion {
            spec,
            bindings: ordered,
        })
    }

    /// Build from a vector already ordered like `spec.slots()`.
    pub fn from_ordered(
        spec: Arc<PipelineSpec>,
        bindings: Vec<ComponentVersion>,
    ) -> Result<Self, ModelError> {
        let map = spec
            .slots()
            .iter()
            .map(|s| s.name.clone())
            .zip(bindings)
            .collect();
        Self::new(spec, map)
    }

    pub fn spec(&self) -> &Arc<PipelineSpec> {
        &self.spec
    }

    pub fn get(&self, slot: &str) -> Option<&ComponentVersion> {
        self.spec.slot_index(slot).ok().map(|i| &self.bindings[i])
    }

    pub fn at(&self, slot: usize) -> &ComponentVersion {
        &self.bindings[slot]
    }

    pub fn bindings(&self) -> &[ComponentVersion] {
        &self.bindings
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ComponentVersion)> {
        self.spec
            .slots()
            .iter()
            .map(|s| s.name.as_str())
            .zip(self.bindings.iter())
    }

    /// First incompatible edge, if any.
    pub fn check_compatibility(&self) -> Result<(), ModelError> {
        for (a, b) in self.spec.edges() {
            if !is_compatible(&self.bindings[a], &self.bindings[b]) {
                return Err(ModelError::IncompatibleEdge {
                    from: format!("{}={}", self.spec.slots()[a].name, self.bindings[a].display()),
                    to: format!("{}={}", self.spec.slots()[b].name, self.bindings[b].display()),
                });
            }
        }
        Ok(())
    }
}
