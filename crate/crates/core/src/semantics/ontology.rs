use std::collections::{HashMap, VecDeque};
use std::path::Path;

use rand::seq::IndexedRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Rng;

const BUNDLED: &str = include_str!("../../data/ontology.json");

/// Node as stored in the ontology file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub gloss: String,
    pub parent: Option<String>,
    #[serde(default)]
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyNode {
    pub id: String,
    pub gloss: String,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub sources: Vec<String>,
    pub depth: u32,
}

#[derive(Debug, Clone)]
pub struct Ontology {
    nodes: Vec<OntologyNode>,
    index: HashMap<String, usize>,
    root: usize,
    leaves: Vec<usize>,
    /// Parents of leaves, each with its leaf children.
    categories: Vec<(usize, Vec<usize>)>,
}

fn structural(node: &str, reason: impl Into<String>) -> Error {
    Error::Ontology {
        node: node.to_string(),
        reason: reason.into(),
    }
}

/// Separator between a leaf id and a sense number.
pub const SENSE_SEPARATOR: char = '#';

impl Ontology {
    pub fn bundled() -> Self {
        Ontology::from_json(BUNDLED).expect("bundled ontology is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ontology::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let specs: Vec<NodeSpec> = serde_json::from_str(text)?;
        Ontology::from_nodes(specs)
    }

    /// Validate and index a node list. Entries repeating an id under the same
    /// parent are merged, pooling their sources.
    pub fn from_nodes(specs: Vec<NodeSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyInput("ontology has no nodes".into()));
        }
        let mut merged: Vec<NodeSpec> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        for spec in specs {
            if spec.id.is_empty() || spec.id.contains(SENSE_SEPARATOR) {
                return Err(structural(&spec.id, "ids must be non-empty and free of `#`"));
            }
            match index.get(&spec.id) {
                Some(&i) => {
                    if merged[i].parent != spec.parent {
                        return Err(structural(&spec.id, "node has two different parents"));
                    }
                    for s in spec.sources {
                        if !merged[i].sources.contains(&s) {
                            merged[i].sources.push(s);
                        }
                    }
                }
                None => {
                    index.insert(spec.id.clone(), merged.len());
                    merged.push(spec);
                }
            }
        }
        let roots: Vec<usize> = (0..merged.len()).filter(|&i| merged[i].parent.is_none()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] => return Err(structural(&merged[0].id, "no root node")),
            [_, second, ..] => return Err(structural(&merged[*second].id, "second root node")),
        };
        let mut nodes: Vec<OntologyNode> = Vec::with_capacity(merged.len());
        for spec in &merged {
            let parent = match &spec.parent {
                None => None,
                Some(p) => Some(
                    *index
                        .get(p)
                        .ok_or_else(|| structural(&spec.id, format!("orphan: parent `{p}` does not exist")))?,
                ),
            };
            nodes.push(OntologyNode {
                id: spec.id.clone(),
                gloss: spec.gloss.clone(),
                parent,
                children: Vec::new(),
                sources: spec.sources.clone(),
                depth: 0,
            });
        }
        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                nodes[p].children.push(i);
            }
        }
        let mut reached = vec![false; nodes.len()];
        let mut queue = VecDeque::from([root]);
        reached[root] = true;
        while let Some(n) = queue.pop_front() {
            for c in nodes[n].children.clone() {
                nodes[c].depth = nodes[n].depth + 1;
                reached[c] = true;
                queue.push_back(c);
            }
        }
        if let Some(i) = reached.iter().position(|r| !r) {
            return Err(structural(&nodes[i].id, "node lies on a cycle"));
        }
        let leaves: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].children.is_empty() && i != root).collect();
        let mut by_parent: Vec<(usize, Vec<usize>)> = Vec::new();
        for &l in &leaves {
            let p = nodes[l].parent.expect("leaf has a parent");
            match by_parent.iter_mut().find(|(q, _)| *q == p) {
                Some((_, ls)) => ls.push(l),
                None => by_parent.push((p, vec![l])),
            }
        }
        Ok(Ontology {
            nodes,
            index,
            root,
            leaves,
            categories: by_parent,
        })
    }

    pub fn root(&self) -> &OntologyNode {
        &self.nodes[self.root]
    }

    pub fn nodes(&self) -> &[OntologyNode] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&OntologyNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn leaf_ids(&self) -> impl Iterator<Item = &str> {
        self.leaves.iter().map(|&i| self.nodes[i].id.as_str())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn category_ids(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|(c, _)| self.nodes[*c].id.as_str())
    }

    /// Node index for an id, ignoring any sense suffix.
    fn resolve(&self, id: &str) -> Result<usize> {
        let base = id.split(SENSE_SEPARATOR).next().unwrap_or(id);
        self.index
            .get(base)
            .copied()
            .ok_or_else(|| Error::UnknownMeaning(id.to_string()))
    }

    pub fn depth(&self, id: &str) -> Result<u32> {
        Ok(self.nodes[self.resolve(id)?].depth)
    }

    fn distance_idx(&self, mut a: usize, mut b: usize) -> u32 {
        let (da, db) = (self.nodes[a].depth, self.nodes[b].depth);
        let mut steps = 0;
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.expect("non-root");
            steps += 1;
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.expect("non-root");
            steps += 1;
        }
        while a != b {
            a = self.nodes[a].parent.expect("non-root");
            b = self.nodes[b].parent.expect("non-root");
            steps += 2;
        }
        debug_assert_eq!(steps, da + db - 2 * self.nodes[a].depth);
        steps
    }

    /// depth(a) + depth(b) - 2 depth(lca(a, b)). Sense ids sit at distance 0 from their leaf.
    pub fn semantic_distance(&self, a: &str, b: &str) -> Result<u32> {
        Ok(self.distance_idx(self.resolve(a)?, self.resolve(b)?))
    }

    /// Pairwise distances between meanings as a flat row-major matrix.
    pub fn distance_matrix(&self, meanings: &[String]) -> Result<Vec<u8>> {
        let idx = meanings.iter().map(|m| self.resolve(m)).collect::<Result<Vec<_>>>()?;
        let n = idx.len();
        let mut cache: HashMap<(usize, usize), u8> = HashMap::new();
        let mut out = vec![0u8; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let key = (idx[i].min(idx[j]), idx[i].max(idx[j]));
                let d = *cache
                    .entry(key)
                    .or_insert_with(|| self.distance_idx(key.0, key.1).min(255) as u8);
                out[i * n + j] = d;
                out[j * n + i] = d;
            }
        }
        Ok(out)
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    Ontology::load(path)
}

/// Sampled meanings together with the category weights that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeaningSet {
    pub meanings: Vec<String>,
    pub weights_used: Vec<(String, f64)>,
}

/// Draw `n` distinct meanings: a category uniformly among those with leaves
/// left, then a leaf uniformly within it. Beyond the leaf count, further draws
/// add numbered senses (`water#2`) to leaves chosen the same way.
pub fn sample_leaf_concepts(ont: &Ontology, n: usize, rng: &mut Rng) -> Result<MeaningSet> {
    if ont.leaf_count() == 0 {
        return Err(Error::EmptyInput("ontology has no leaves".into()));
    }
    let k = ont.categories.len();
    let weights_used = ont.category_ids().map(|c| (c.to_string(), 1.0 / k as f64)).collect();
    let mut remaining: Vec<Vec<usize>> = ont.categories.iter().map(|(_, ls)| ls.clone()).collect();
    let mut meanings = Vec::with_capacity(n);
    while meanings.len() < n.min(ont.leaf_count()) {
        let open: Vec<usize> = (0..k).filter(|&c| !remaining[c].is_empty()).collect();
        let c = *open.choose(rng).expect("leaves remain");
        let pos = rand::Rng::random_range(rng, 0..remaining[c].len());
        let leaf = remaining[c].swap_remove(pos);
        meanings.push(ont.nodes[leaf].id.clone());
    }
    let mut senses: HashMap<usize, u32> = HashMap::new();
    while meanings.len() < n {
        let (_, leaves) = ont.categories.choose(rng).expect("non-empty");
        let leaf = *leaves.choose(rng).expect("category has leaves");
        let s = senses.entry(leaf).or_insert(1);
        *s += 1;
        meanings.push(format!("{}{SENSE_SEPARATOR}{}", ont.nodes[leaf].id, s));
    }
    Ok(MeaningSet { meanings, weights_used })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn spec(id: &str, parent: Option<&str>) -> NodeSpec {
        NodeSpec {
            id: id.into(),
            gloss: id.into(),
            parent: parent.map(Into::into),
            sources: vec![],
        }
    }

    #[test]
    fn bundled_ontology_loads() {
        let o = Ontology::bundled();
        assert!(o.leaf_count() >= 150, "{}", o.leaf_count());
        assert!(o.leaf_ids().all(|id| id.contains('.')));
        let water = o.node("water_body.water").unwrap();
        assert_eq!(water.sources, ["swadesh", "leipzig_jakarta"]);
        assert_eq!(water.depth, 3);
    }

    #[test]
    fn chain_depth() {
        let o = Ontology::from_nodes(vec![spec("r", None), spec("a", Some("r")), spec("b", Some("a"))]).unwrap();
        assert_eq!(o.depth("b").unwrap(), 2);
        assert_eq!(o.semantic_distance("b", "r").unwrap(), 2);
    }

    #[test]
    fn structural_errors_name_the_node() {
        let two_parents = vec![spec("r", None), spec("a", Some("r")), spec("b", Some("r")), spec("x", Some("a")), spec("x", Some("b"))];
        assert!(matches!(Ontology::from_nodes(two_parents), Err(Error::Ontology { node, .. }) if node == "x"));
        let orphan = vec![spec("r", None), spec("a", Some("missing"))];
        assert!(matches!(Ontology::from_nodes(orphan), Err(Error::Ontology { node, .. }) if node == "a"));
        let cycle = vec![spec("r", None), spec("a", Some("b")), spec("b", Some("a"))];
        assert!(matches!(Ontology::from_nodes(cycle), Err(Error::Ontology { .. })));
    }

    #[test]
    fn distances() {
        let o = Ontology::bundled();
        assert_eq!(o.semantic_distance("limb.foot", "limb.foot").unwrap(), 0);
        assert_eq!(o.semantic_distance("limb.foot", "limb.hand").unwrap(), 2);
        assert_eq!(o.semantic_distance("limb.foot", "body_inside.heart").unwrap(), 4);
        assert_eq!(o.semantic_distance("limb.foot", "sky.sun").unwrap(), 6);
        assert_eq!(o.semantic_distance("limb.foot#3", "limb.foot").unwrap(), 0);
        assert_eq!(o.semantic_distance("limb.foot#3", "limb.hand").unwrap(), 2);
        assert!(matches!(o.semantic_distance("nope", "limb.foot"), Err(Error::UnknownMeaning(_))));
    }

    #[test]
    fn full_draw_covers_all_leaves() {
        let o = Ontology::bundled();
        let m = sample_leaf_concepts(&o, o.leaf_count(), &mut rng_from_seed(1)).unwrap();
        let mut got = m.meanings.clone();
        got.sort();
        let mut want: Vec<String> = o.leaf_ids().map(String::from).collect();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn categories_are_weighted_uniformly() {
        let mut nodes = vec![spec("r", None), spec("small", Some("r")), spec("big", Some("r"))];
        nodes.extend((0..10).map(|i| spec(&format!("small.{i}"), Some("small"))));
        nodes.extend((0..90).map(|i| spec(&format!("big.{i}"), Some("big"))));
        let o = Ontology::from_nodes(nodes).unwrap();
        let mut rng = rng_from_seed(2);
        let trials = 10_000;
        let small: usize = (0..trials)
            .map(|_| {
                sample_leaf_concepts(&o, 10, &mut rng)
                    .unwrap()
                    .meanings
                    .iter()
                    .filter(|m| m.starts_with("small."))
                    .count()
            })
            .sum();
        let mean = small as f64 / trials as f64;
        assert!((mean - 5.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn sense_extension_is_distinct_and_seeded() {
        let o = Ontology::bundled();
        let a = sample_leaf_concepts(&o, 1000, &mut rng_from_seed(3)).unwrap();
        let b = sample_leaf_concepts(&o, 1000, &mut rng_from_seed(3)).unwrap();
        assert_eq!(a, b);
        let set: std::collections::HashSet<_> = a.meanings.iter().collect();
        assert_eq!(set.len(), 1000);
        assert!(a.meanings.iter().any(|m| m.contains('#')));
    }
}
