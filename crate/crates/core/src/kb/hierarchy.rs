use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::dedup_folded;
use crate::error::{Error, Result};

/// Id of the synthetic root placed above every parentless term. It never
/// appears in prompts or predictions.
pub const ROOT_ID: &str = "__ROOT__";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub definition: Option<String>,
}

impl Term {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Term {
            id: id.into(),
            name: name.into(),
            synonyms: Vec::new(),
            definition: None,
        }
    }
}

/// How term depth is measured from the virtual root (depth 0).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DepthConvention {
    /// Edges on the shortest root path.
    #[default]
    ShortestPath,
    /// Edges on the longest root path.
    LongestPath,
}

impl std::str::FromStr for DepthConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shortest" => Ok(DepthConvention::ShortestPath),
            "longest" => Ok(DepthConvention::LongestPath),
            other => Err(Error::Invalid(format!(
                "depth convention must be shortest or longest, got {other:?}"
            ))),
        }
    }
}

/// A validated DAG of terms with hypernym -> hyponym edges.
///
/// Terms are stored in id order, so sorting term indices also sorts ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    terms: Vec<Term>,
    index: HashMap<String, usize>,
    pairs: Vec<(String, String)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<u32>,
    convention: DepthConvention,
}

impl Hierarchy {
    pub fn new(terms: Vec<Term>, pairs: Vec<(String, String)>) -> Result<Self> {
        let mut terms = terms
            .into_iter()
            .map(|mut t| {
                if t.id.trim().is_empty() || t.id == ROOT_ID {
                    return Err(Error::Invalid(format!("invalid term id {:?}", t.id)));
                }
                if t.name.trim().is_empty() {
                    return Err(Error::Invalid(format!("term {:?} has an empty name", t.id)));
                }
                t.synonyms = dedup_folded(t.synonyms);
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        terms.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = terms.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId(w[0].id.clone()));
        }
        let index: HashMap<String, usize> = terms.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();

        let n = terms.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for (hyper, hypo) in &pairs {
            let p = *index.get(hyper).ok_or_else(|| Error::UnknownTerm(hyper.clone()))?;
            let c = *index.get(hypo).ok_or_else(|| Error::UnknownTerm(hypo.clone()))?;
            if p == c {
                return Err(Error::Cycle(vec![hyper.clone(), hypo.clone()]));
            }
            if !seen.insert((p, c)) {
                return Err(Error::DuplicatePair(hyper.clone(), hypo.clone()));
            }
            parents[c].push(p);
            children[p].push(c);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        let mut h = Hierarchy {
            terms,
            index,
            pairs,
            parents,
            children,
            depth: Vec::new(),
            convention: DepthConvention::default(),
        };
        let order = h.topological_order()?;
        h.depth = h.compute_depths(&order);
        Ok(h)
    }

    /// Recomputes depths under another convention.
    pub fn with_depth_convention(mut self, convention: DepthConvention) -> Self {
        self.convention = convention;
        let order = self.topological_order().expect("hierarchy validated at construction");
        self.depth = self.compute_depths(&order);
        self
    }

    pub fn depth_convention(&self) -> DepthConvention {
        self.convention
    }

    /// Kahn's algorithm over hypernym -> hyponym edges. On failure, reports
    /// one cycle among the terms left unprocessed.
    fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.terms.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &c in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() == n {
            return Ok(order);
        }
        // Every leftover node still has a leftover parent, so walking parents
        // must revisit a node.
        let start = (0..n).find(|&i| indegree[i] > 0).unwrap();
        let mut position = HashMap::new();
        let mut walk = Vec::new();
        let mut at = start;
        while !position.contains_key(&at) {
            position.insert(at, walk.len());
            walk.push(at);
            at = *self.parents[at].iter().find(|&&p| indegree[p] > 0).unwrap();
        }
        let mut cycle: Vec<String> = walk[position[&at]..]
            .iter()
            .rev()
            .map(|&i| self.terms[i].id.clone())
            .collect();
        cycle.push(cycle[0].clone());
        Err(Error::Cycle(cycle))
    }

    fn compute_depths(&self, order: &[usize]) -> Vec<u32> {
        let mut depth = vec![0u32; self.terms.len()];
        for &i in order {
            let parent_depths = self.parents[i].iter().map(|&p| depth[p]);
            depth[i] = 1 + match self.convention {
                DepthConvention::ShortestPath => parent_depths.min().unwrap_or(0),
                DepthConvention::LongestPath => parent_depths.max().unwrap_or(0),
            };
        }
        depth
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn term(&self, id: &str) -> Option<&Term> {
        self.index.get(id).map(|&i| &self.terms[i])
    }

    /// Terms in id order.
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Hypernym/hyponym pairs in input order.
    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn name(&self, id: &str) -> Option<&str> {
        self.term(id).map(|t| t.name.as_str())
    }

    /// Direct hypernyms of `id`, sorted by id. Never contains the virtual root.
    pub fn parents(&self, id: &str) -> Result<Vec<&str>> {
        let i = self.require(id)?;
        Ok(self.parents[i].iter().map(|&p| self.terms[p].id.as_str()).collect())
    }

    /// Direct hyponyms of `id`, sorted by id.
    pub fn children(&self, id: &str) -> Result<Vec<&str>> {
        let i = self.require(id)?;
        Ok(self.children[i].iter().map(|&c| self.terms[c].id.as_str()).collect())
    }

    /// All transitive hypernyms of `id` plus [`ROOT_ID`]; `id` itself excluded.
    pub fn ancestors(&self, id: &str) -> Result<BTreeSet<String>> {
        let i = self.require(id)?;
        let mut out: BTreeSet<String> = self
            .ancestor_indices(i)
            .into_iter()
            .map(|a| self.terms[a].id.clone())
            .collect();
        out.insert(ROOT_ID.to_string());
        Ok(out)
    }

    /// Depth of `id`; the virtual root has depth 0 and parentless terms 1.
    pub fn depth(&self, id: &str) -> Result<u32> {
        if id == ROOT_ID {
            return Ok(0);
        }
        Ok(self.depth[self.require(id)?])
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    fn require(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownTerm(id.to_string()))
    }

    pub(crate) fn index_of(&self, id: &str) -> Result<usize> {
        self.require(id)
    }

    pub(crate) fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn child_indices(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub(crate) fn depth_at(&self, i: usize) -> u32 {
        self.depth[i]
    }

    /// Strict ancestors of term index `i`, excluding the virtual root.
    pub(crate) fn ancestor_indices(&self, i: usize) -> HashSet<usize> {
        let mut seen = HashSet::new();
        let mut stack: Vec<usize> = self.parents[i].clone();
        while let Some(p) = stack.pop() {
            if seen.insert(p) {
                stack.extend_from_slice(&self.parents[p]);
            }
        }
        seen
    }
}
