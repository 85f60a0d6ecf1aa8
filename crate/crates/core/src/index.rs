//! Subsumption hierarchy of descriptions with image links.
//!
//! Nodes are descriptions ordered by subsumption (decided by exact
//! recognition on prototypical images). Every basic shape is a root node: a
//! single colorless component with the identity pose. Images are linked to
//! the most specific nodes they satisfy (approximate recognition at the
//! global threshold). Query answering classifies the query and rescores only
//! the images linked below the nodes that subsume it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::approx::{recognize_approx, retrieve, sort_ranked, MatchResult, TextureStats};
use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::exact::{subsumes_in, DEFAULT_EPS};
use crate::geometry::Transform;
use crate::interchange::{
    description_from_doc, description_to_doc, features_agree, image_from_doc, image_to_doc,
    region_features_doc, shape_from_doc, shape_to_doc, DescriptionDoc, ImageDoc,
    RegionFeaturesDoc, ShapeDoc, ShapeLibrary,
};
use crate::model::{prototypical_image, BasicShape, CompositeDescription, SegmentedImage, ShapeComponent};

pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone)]
struct Node {
    desc: CompositeDescription,
    proto: SegmentedImage,
    aliases: BTreeSet<String>,
    parents: BTreeSet<String>,
    children: BTreeSet<String>,
    images: BTreeSet<String>,
}

/// Public view of a node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub id: String,
    pub aliases: Vec<String>,
    pub parents: Vec<String>,
    pub children: Vec<String>,
    pub images: Vec<String>,
}

/// Position of a description relative to the existing nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    /// Most specific nodes subsuming the description.
    pub parents: Vec<String>,
    /// Most general nodes the description subsumes.
    pub children: Vec<String>,
    /// Node equivalent to the description, if any; it is then both the only
    /// parent and the only child.
    pub equivalent: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    shapes: ShapeLibrary,
    nodes: BTreeMap<String, Node>,
    aliases: BTreeMap<String, String>,
    images: BTreeMap<String, SegmentedImage>,
    config: MatchConfig,
    eps: f64,
    texture_stats: TextureStats,
}

impl Default for Hierarchy {
    fn default() -> Self {
        Self::new(MatchConfig::default())
    }
}

/// A single colorless component of `shape` in its own frame.
pub fn root_description(shape: Arc<BasicShape>) -> CompositeDescription {
    let id = shape.id().to_string();
    CompositeDescription {
        id,
        components: vec![ShapeComponent {
            shape,
            transform: Transform::IDENTITY,
            color: None,
            texture: None,
        }],
    }
}

impl Hierarchy {
    pub fn new(config: MatchConfig) -> Self {
        Self {
            shapes: ShapeLibrary::new(),
            nodes: BTreeMap::new(),
            aliases: BTreeMap::new(),
            images: BTreeMap::new(),
            config,
            eps: DEFAULT_EPS,
            texture_stats: TextureStats::default(),
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn config(&self) -> &MatchConfig {
        &self.config
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn texture_stats(&self) -> &TextureStats {
        &self.texture_stats
    }

    pub fn shapes(&self) -> &ShapeLibrary {
        &self.shapes
    }

    pub fn shape(&self, id: &str) -> Option<&Arc<BasicShape>> {
        self.shapes.get(id)
    }

    /// Number of stored descriptions, aliases included.
    pub fn description_count(&self) -> usize {
        self.nodes.len() + self.aliases.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn image_count(&self) -> usize {
        self.images.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn roots(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.parents.is_empty())
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Node id for a description id or alias.
    pub fn resolve(&self, id: &str) -> Option<&str> {
        if let Some((k, _)) = self.nodes.get_key_value(id) {
            return Some(k);
        }
        self.aliases.get(id).map(String::as_str)
    }

    pub fn description(&self, id: &str) -> Option<&CompositeDescription> {
        self.nodes.get(self.resolve(id)?).map(|n| &n.desc)
    }

    pub fn node(&self, id: &str) -> Option<NodeInfo> {
        let (id, n) = self.nodes.get_key_value(self.resolve(id)?)?;
        Some(NodeInfo {
            id: id.clone(),
            aliases: n.aliases.iter().cloned().collect(),
            parents: n.parents.iter().cloned().collect(),
            children: n.children.iter().cloned().collect(),
            images: n.images.iter().cloned().collect(),
        })
    }

    pub fn nodes(&self) -> Vec<NodeInfo> {
        self.nodes.keys().filter_map(|id| self.node(id)).collect()
    }

    pub fn image(&self, id: &str) -> Option<&SegmentedImage> {
        self.images.get(id)
    }

    pub fn images(&self) -> std::collections::btree_map::Values<'_, String, SegmentedImage> {
        self.images.values()
    }

    /// Nodes an image is linked to.
    pub fn links_of(&self, image: &str) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.images.contains(image))
            .map(|(id, _)| id.clone())
            .collect()
    }

    fn id_taken(&self, id: &str) -> bool {
        self.nodes.contains_key(id) || self.aliases.contains_key(id) || self.shapes.contains_key(id)
    }

    /// Registers a basic shape and its root node.
    pub fn add_shape(&mut self, shape: BasicShape) -> Result<String> {
        if self.id_taken(shape.id()) {
            return Err(Error::DuplicateId(shape.id().to_string()));
        }
        let shape = Arc::new(shape);
        self.shapes.insert(shape.id().to_string(), shape.clone());
        self.insert_node(root_description(shape))
    }

    fn register_shapes(&mut self, d: &CompositeDescription) -> Result<()> {
        for c in &d.components {
            match self.shapes.get(c.shape.id()) {
                Some(s) if **s == *c.shape => {}
                Some(_) => return Err(Error::DuplicateId(c.shape.id().to_string())),
                None => {
                    if self.nodes.contains_key(c.shape.id()) || self.aliases.contains_key(c.shape.id()) {
                        return Err(Error::DuplicateId(c.shape.id().to_string()));
                    }
                    self.add_shape((*c.shape).clone())?;
                }
            }
        }
        Ok(())
    }

    /// Node ids with parents before children; ties in id order.
    fn topo_order(&self) -> Vec<String> {
        let mut indeg: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .map(|(id, n)| (id.as_str(), n.parents.len()))
            .collect();
        let mut ready: BTreeSet<&str> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut out = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_first() {
            out.push(id.to_string());
            for c in &self.nodes[id].children {
                if let Some(d) = indeg.get_mut(c.as_str()) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(c.as_str());
                    }
                }
            }
        }
        out
    }

    fn descendants(&self, id: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for c in &self.nodes[x].children {
                if seen.insert(c.clone()) {
                    queue.push_back(c);
                }
            }
        }
        seen
    }

    fn ancestors(&self, id: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&str> = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for p in &self.nodes[x].parents {
                if seen.insert(p.clone()) {
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    /// Images linked at `id` or any of its descendants.
    fn images_under(&self, id: &str) -> BTreeSet<String> {
        let mut out = self.nodes[id].images.clone();
        for d in self.descendants(id) {
            out.extend(self.nodes[&d].images.iter().cloned());
        }
        out
    }

    fn classify_with(&self, d: &CompositeDescription, proto: &SegmentedImage) -> Classification {
        let order = self.topo_order();
        let mut subsuming: BTreeSet<String> = BTreeSet::new();
        for id in &order {
            let n = &self.nodes[id];
            if n.parents.iter().all(|p| subsuming.contains(p)) && subsumes_in(&n.desc, d, proto, self.eps) {
                subsuming.insert(id.clone());
            }
        }
        let parents: Vec<String> = subsuming
            .iter()
            .filter(|id| !self.nodes[*id].children.iter().any(|c| subsuming.contains(c)))
            .cloned()
            .collect();
        if let Some(e) = parents.iter().find(|p| {
            let n = &self.nodes[*p];
            subsumes_in(d, &n.desc, &n.proto, self.eps)
        }) {
            return Classification {
                parents: vec![e.clone()],
                children: vec![e.clone()],
                equivalent: Some(e.clone()),
            };
        }

        let candidates: BTreeSet<String> = match parents.split_first() {
            None => self.nodes.keys().cloned().collect(),
            Some((first, rest)) => {
                let mut set = self.descendants(first);
                for p in rest {
                    let other = self.descendants(p);
                    set.retain(|x| other.contains(x));
                }
                set
            }
        };
        let mut subsumed: BTreeSet<String> = BTreeSet::new();
        for id in order.iter().filter(|id| candidates.contains(*id)) {
            let n = &self.nodes[id];
            if n.parents.iter().any(|p| subsumed.contains(p)) || subsumes_in(d, &n.desc, &n.proto, self.eps) {
                subsumed.insert(id.clone());
            }
        }
        let children = subsumed
            .iter()
            .filter(|id| !self.nodes[*id].parents.iter().any(|p| subsumed.contains(p)))
            .cloned()
            .collect();
        Classification {
            parents,
            children,
            equivalent: None,
        }
    }

    /// Position of `d` in the hierarchy, without inserting it.
    pub fn classify_description(&self, d: &CompositeDescription) -> Result<Classification> {
        let proto = prototypical_image(d)?;
        Ok(self.classify_with(d, &proto))
    }

    /// Inserts a description and relinks the images it now describes most
    /// specifically. Returns the node id, which is an existing node's id when
    /// the description is equivalent to it (the new id becomes an alias).
    pub fn insert_description(&mut self, d: CompositeDescription) -> Result<String> {
        if self.id_taken(&d.id) {
            return Err(Error::DuplicateId(d.id.clone()));
        }
        d.ensure_satisfiable()?;
        self.register_shapes(&d)?;
        self.insert_node(d)
    }

    fn insert_node(&mut self, d: CompositeDescription) -> Result<String> {
        let proto = prototypical_image(&d)?;
        let cls = self.classify_with(&d, &proto);
        if let Some(e) = cls.equivalent {
            self.aliases.insert(d.id.clone(), e.clone());
            self.nodes.get_mut(&e).expect("node").aliases.insert(d.id);
            return Ok(e);
        }
        let id = d.id.clone();
        for p in &cls.parents {
            for c in &cls.children {
                self.nodes.get_mut(p).expect("node").children.remove(c);
                self.nodes.get_mut(c).expect("node").parents.remove(p);
            }
        }
        for p in &cls.parents {
            self.nodes.get_mut(p).expect("node").children.insert(id.clone());
        }
        for c in &cls.children {
            self.nodes.get_mut(c).expect("node").parents.insert(id.clone());
        }
        self.nodes.insert(
            id.clone(),
            Node {
                desc: d,
                proto,
                aliases: BTreeSet::new(),
                parents: cls.parents.iter().cloned().collect(),
                children: cls.children.iter().cloned().collect(),
                images: BTreeSet::new(),
            },
        );
        self.reclassify_images(&id);
        Ok(id)
    }

    /// Links images to a freshly inserted node. Only images satisfying every
    /// parent can satisfy the node; those already linked below it stay where
    /// they are.
    fn reclassify_images(&mut self, id: &str) {
        let parents: Vec<String> = self.nodes[id].parents.iter().cloned().collect();
        let mut candidates: BTreeSet<String> = match parents.split_first() {
            None => self.images.keys().cloned().collect(),
            Some((first, rest)) => {
                let mut set = self.images_under(first);
                for p in rest {
                    let other = self.images_under(p);
                    set.retain(|x| other.contains(x));
                }
                set
            }
        };
        for d in self.descendants(id) {
            for img in &self.nodes[&d].images {
                candidates.remove(img);
            }
        }
        let ancestors = self.ancestors(id);
        for img_id in candidates {
            let img = &self.images[&img_id];
            let node = &self.nodes[id];
            if recognize_approx(&node.desc, img, &self.config, &self.texture_stats).is_none() {
                continue;
            }
            self.nodes.get_mut(id).expect("node").images.insert(img_id.clone());
            for a in &ancestors {
                self.nodes.get_mut(a).expect("node").images.remove(&img_id);
            }
        }
    }

    fn satisfied_top_down(&self, img: &SegmentedImage) -> BTreeSet<String> {
        let mut sat = BTreeSet::new();
        for id in self.topo_order() {
            let n = &self.nodes[&id];
            if n.parents.iter().all(|p| sat.contains(p))
                && recognize_approx(&n.desc, img, &self.config, &self.texture_stats).is_some()
            {
                sat.insert(id);
            }
        }
        sat
    }

    /// Stores an image and links it at the most specific nodes it satisfies.
    pub fn insert_image(&mut self, img: SegmentedImage) -> Result<Vec<String>> {
        if self.images.contains_key(&img.id) {
            return Err(Error::DuplicateId(img.id.clone()));
        }
        let sat = self.satisfied_top_down(&img);
        let linked: Vec<String> = sat
            .iter()
            .filter(|id| !self.nodes[*id].children.iter().any(|c| sat.contains(c)))
            .cloned()
            .collect();
        for id in &linked {
            self.nodes.get_mut(id).expect("node").images.insert(img.id.clone());
        }
        self.images.insert(img.id.clone(), img);
        Ok(linked)
    }

    /// Recomputes texture statistics from the stored images and relinks
    /// every image.
    pub fn calibrate(&mut self) {
        self.texture_stats = TextureStats::from_images(self.images.values());
        self.relink_all();
    }

    /// Replaces the matching configuration and relinks every image.
    pub fn set_config(&mut self, config: MatchConfig) -> Result<()> {
        config.validate()?;
        if config != self.config {
            self.config = config;
            self.relink_all();
        }
        Ok(())
    }

    fn relink_all(&mut self) {
        for n in self.nodes.values_mut() {
            n.images.clear();
        }
        let ids: Vec<String> = self.images.keys().cloned().collect();
        for id in ids {
            let sat = self.satisfied_top_down(&self.images[&id]);
            let linked: Vec<String> = sat
                .iter()
                .filter(|n| !self.nodes[*n].children.iter().any(|c| sat.contains(c)))
                .cloned()
                .collect();
            for n in linked {
                self.nodes.get_mut(&n).expect("node").images.insert(id.clone());
            }
        }
    }

    /// Ranked images satisfying `q`, using the hierarchy to restrict the
    /// images that are scored. With `persist`, `q` is inserted afterwards.
    pub fn answer_query(&mut self, q: &CompositeDescription, persist: bool) -> Result<Vec<(String, MatchResult)>> {
        if persist && self.id_taken(&q.id) {
            return Err(Error::DuplicateId(q.id.clone()));
        }
        let out = self.answer_query_readonly(q)?;
        if persist {
            self.insert_description(q.clone())?;
        }
        Ok(out)
    }

    /// [`Hierarchy::answer_query`] without insertion.
    pub fn answer_query_readonly(&self, q: &CompositeDescription) -> Result<Vec<(String, MatchResult)>> {
        let proto = prototypical_image(q)?;
        let cls = self.classify_with(q, &proto);
        let candidates: BTreeSet<String> = match (&cls.equivalent, cls.parents.split_first()) {
            (Some(e), _) => self.images_under(e),
            (None, None) => self.images.keys().cloned().collect(),
            (None, Some((first, rest))) => {
                let mut set = self.images_under(first);
                for p in rest {
                    let other = self.images_under(p);
                    set.retain(|x| other.contains(x));
                }
                set
            }
        };
        let mut out: Vec<(String, MatchResult)> = candidates
            .iter()
            .filter_map(|id| {
                recognize_approx(q, &self.images[id], &self.config, &self.texture_stats).map(|r| (id.clone(), r))
            })
            .collect();
        sort_ranked(&mut out);
        Ok(out)
    }

    /// Scores every stored image; the reference the hierarchy must agree with.
    pub fn flat_scan(&self, q: &CompositeDescription) -> Vec<(String, MatchResult)> {
        retrieve(q, self.images.values(), &self.config, &self.texture_stats)
    }

    /// Checks acyclicity, edge symmetry, transitive reduction and link
    /// references.
    pub fn check_integrity(&self) -> Result<()> {
        for (id, n) in &self.nodes {
            for p in &n.parents {
                let pn = self
                    .nodes
                    .get(p)
                    .ok_or_else(|| Error::Integrity(format!("{id}: unknown parent {p}")))?;
                if !pn.children.contains(id) {
                    return Err(Error::Integrity(format!("edge {p} -> {id} is one-sided")));
                }
            }
            for c in &n.children {
                let cn = self
                    .nodes
                    .get(c)
                    .ok_or_else(|| Error::Integrity(format!("{id}: unknown child {c}")))?;
                if !cn.parents.contains(id) {
                    return Err(Error::Integrity(format!("edge {id} -> {c} is one-sided")));
                }
            }
            for img in &n.images {
                if !self.images.contains_key(img) {
                    return Err(Error::Integrity(format!("{id}: unknown image {img}")));
                }
            }
            for a in &n.aliases {
                if self.aliases.get(a) != Some(id) {
                    return Err(Error::Integrity(format!("alias {a} of {id} is not registered")));
                }
            }
        }
        if self.topo_order().len() != self.nodes.len() {
            return Err(Error::Integrity("hierarchy contains a cycle".into()));
        }
        for (id, n) in &self.nodes {
            for c in &n.children {
                let via_other = n
                    .children
                    .iter()
                    .filter(|o| *o != c)
                    .any(|o| self.descendants(o).contains(c));
                if via_other {
                    return Err(Error::Integrity(format!("edge {id} -> {c} is redundant")));
                }
            }
        }
        Ok(())
    }

    pub fn to_doc(&self) -> StoreDoc {
        StoreDoc {
            version: STORE_VERSION,
            config: self.config.to_text(),
            eps: self.eps,
            texture_stats: self.texture_stats.clone(),
            shapes: self.shapes.values().map(|s| shape_to_doc(s)).collect(),
            descriptions: self
                .nodes
                .values()
                .map(|n| description_to_doc(&n.desc))
                .collect(),
            aliases: self.aliases.clone(),
            nodes: self.nodes(),
            images: self
                .images
                .values()
                .map(|img| StoredImage {
                    image: image_to_doc(img),
                    features: img.regions().iter().map(region_features_doc).collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: StoreDoc) -> Result<Self> {
        if doc.version != STORE_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: STORE_VERSION,
            });
        }
        let config = MatchConfig::parse(&doc.config)?;
        let mut h = Hierarchy::new(config).with_eps(doc.eps);
        h.texture_stats = doc.texture_stats;
        for s in &doc.shapes {
            let shape = shape_from_doc(s)?;
            if shape.is_inline() {
                // inline ids are content hashes; keep the stored one
                h.shapes.insert(s.id.clone(), Arc::new(shape));
            } else {
                h.shapes.insert(shape.id().to_string(), Arc::new(shape));
            }
        }
        let mut descs: BTreeMap<String, CompositeDescription> = BTreeMap::new();
        for d in &doc.descriptions {
            let desc = description_from_doc(d, &h.shapes)?;
            descs.insert(desc.id.clone(), desc);
        }
        for info in &doc.nodes {
            let desc = descs
                .remove(&info.id)
                .ok_or_else(|| Error::Integrity(format!("node {} has no description", info.id)))?;
            let proto = prototypical_image(&desc)?;
            h.nodes.insert(
                info.id.clone(),
                Node {
                    desc,
                    proto,
                    aliases: info.aliases.iter().cloned().collect(),
                    parents: info.parents.iter().cloned().collect(),
                    children: info.children.iter().cloned().collect(),
                    images: info.images.iter().cloned().collect(),
                },
            );
        }
        if let Some(extra) = descs.keys().next() {
            return Err(Error::Integrity(format!("description {extra} has no node")));
        }
        for (alias, target) in &doc.aliases {
            if !h.nodes.contains_key(target) {
                return Err(Error::Integrity(format!("alias {alias} points to unknown node {target}")));
            }
            h.aliases.insert(alias.clone(), target.clone());
        }
        for stored in doc.images {
            let img = image_from_doc(&stored.image)?;
            if stored.features.len() != img.len()
                || !img
                    .regions()
                    .iter()
                    .zip(&stored.features)
                    .all(|(r, f)| features_agree(r, f, 1e-9))
            {
                return Err(Error::Integrity(format!(
                    "cached features of image {} do not match its regions",
                    img.id
                )));
            }
            h.images.insert(img.id.clone(), img);
        }
        h.check_integrity()?;
        Ok(h)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StoreDoc = serde_json::from_str(text).map_err(|e| Error::Parse(format!("store: {e}")))?;
        Self::from_doc(doc)
    }

    /// Writes the store atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredImage {
    #[serde(flatten)]
    pub image: ImageDoc,
    pub features: Vec<RegionFeaturesDoc>,
}

/// The persisted store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreDoc {
    pub version: u32,
    pub config: String,
    pub eps: f64,
    pub texture_stats: TextureStats,
    pub shapes: Vec<ShapeDoc>,
    pub descriptions: Vec<DescriptionDoc>,
    pub aliases: BTreeMap<String, String>,
    pub nodes: Vec<NodeInfo>,
    pub images: Vec<StoredImage>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ColorRGB;
    use crate::geometry::{Contour, Vec2};
    use std::f64::consts::PI;

    fn square() -> BasicShape {
        BasicShape::new(
            "square",
            Contour::from_xy(&[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap(),
        )
        .unwrap()
    }

    fn circle() -> BasicShape {
        BasicShape::new(
            "circle",
            Contour::new(
                (0..64)
                    .map(|i| Vec2::new(1.0, 0.0).rotate(2.0 * PI * i as f64 / 64.0))
                    .collect(),
            )
            .unwrap(),
        )
        .unwrap()
    }

    const RED: ColorRGB = ColorRGB::from_u8(255, 0, 0);
    const BLUE: ColorRGB = ColorRGB::from_u8(0, 0, 255);

    fn comp(h: &Hierarchy, shape: &str, tx: f64, ty: f64, c: ColorRGB) -> ShapeComponent {
        ShapeComponent::new(
            h.shape(shape).unwrap().clone(),
            Transform::new(tx, ty, 0.0, 2.0).unwrap(),
            Some(c),
            None,
        )
        .unwrap()
    }

    fn seeded() -> Hierarchy {
        let mut h = Hierarchy::default();
        h.add_shape(square()).unwrap();
        h.add_shape(circle()).unwrap();
        h
    }

    fn chain(h: &Hierarchy) -> [CompositeDescription; 3] {
        let a = CompositeDescription::new("a", vec![comp(h, "square", 0.0, 0.0, RED)]).unwrap();
        let b = CompositeDescription::new(
            "b",
            vec![comp(h, "square", 0.0, 0.0, RED), comp(h, "circle", 8.0, 0.0, BLUE)],
        )
        .unwrap();
        let c = CompositeDescription::new(
            "c",
            vec![
                comp(h, "square", 0.0, 0.0, RED),
                comp(h, "circle", 8.0, 0.0, BLUE),
                comp(h, "square", 3.0, 9.0, BLUE),
            ],
        )
        .unwrap();
        [a, b, c]
    }

    #[test]
    fn composite_in_empty_hierarchy_sits_under_its_shapes() {
        let h = seeded();
        let [_, b, _] = chain(&h);
        let cls = h.classify_description(&b).unwrap();
        assert_eq!(cls.parents, vec!["circle".to_string(), "square".to_string()]);
        assert!(cls.children.is_empty());
    }

    #[test]
    fn chain_classification_and_equivalence() {
        let mut h = seeded();
        let [a, b, c] = chain(&h);
        h.insert_description(a).unwrap();
        h.insert_description(c.clone()).unwrap();
        let cls = h.classify_description(&b).unwrap();
        assert_eq!(cls.parents, vec!["a".to_string(), "circle".to_string()]);
        assert_eq!(cls.children, vec!["c".to_string()]);
        h.insert_description(b).unwrap();
        assert_eq!(h.node("c").unwrap().parents, vec!["b".to_string()]);
        h.check_integrity().unwrap();

        let same = c.renamed("c-again");
        assert_eq!(h.insert_description(same).unwrap(), "c");
        assert_eq!(h.node("c").unwrap().aliases, vec!["c-again".to_string()]);
        assert_eq!(h.resolve("c-again"), Some("c"));
        assert!(matches!(
            h.insert_description(c.renamed("a")),
            Err(Error::DuplicateId(_))
        ));
    }

    #[test]
    fn images_link_most_specifically_and_migrate() {
        let mut h = seeded();
        let [a, b, c] = chain(&h);
        h.insert_description(a).unwrap();
        let img = prototypical_image(&c).unwrap().with_id("scene");
        let linked = h.insert_image(img).unwrap();
        assert!(linked.contains(&"a".to_string()));
        h.insert_description(c).unwrap();
        assert_eq!(h.links_of("scene"), vec!["c".to_string()]);
        h.insert_description(b).unwrap();
        assert_eq!(h.links_of("scene"), vec!["c".to_string()]);
        h.check_integrity().unwrap();
    }

    #[test]
    fn query_matches_flat_scan() {
        let mut h = seeded();
        let [a, b, c] = chain(&h);
        for d in [&a, &b] {
            h.insert_description(d.clone()).unwrap();
        }
        for (i, d) in [&a, &b, &c].iter().enumerate() {
            h.insert_image(prototypical_image(d).unwrap().with_id(format!("img{i}"))).unwrap();
        }
        for q in [&a, &b, &c] {
            let got = h.answer_query_readonly(q).unwrap();
            let want = h.flat_scan(q);
            assert_eq!(got, want);
        }
        let top = h.answer_query(&c.renamed("q"), true).unwrap();
        assert_eq!(top[0].0, "img2");
        assert!(h.node("q").is_some());
    }

    #[test]
    fn persistence_round_trip_and_errors() {
        let mut h = seeded();
        let [a, b, _] = chain(&h);
        h.insert_description(a).unwrap();
        h.insert_image(prototypical_image(&b).unwrap().with_id("x")).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        h.save(&path).unwrap();
        let back = Hierarchy::load(&path).unwrap();
        assert_eq!(back.nodes(), h.nodes());
        assert_eq!(back.to_json().unwrap(), h.to_json().unwrap());
        assert!(Hierarchy::load(&dir.path().join("missing.json")).is_err());

        let mut doc = h.to_doc();
        doc.version = 99;
        assert!(matches!(Hierarchy::from_doc(doc), Err(Error::Version { found: 99, .. })));

        let mut doc = h.to_doc();
        let a_idx = doc.nodes.iter().position(|n| n.id == "a").unwrap();
        doc.nodes[a_idx].children.push("square".into());
        let sq_idx = doc.nodes.iter().position(|n| n.id == "square").unwrap();
        doc.nodes[sq_idx].parents.push("a".into());
        assert!(matches!(Hierarchy::from_doc(doc), Err(Error::Integrity(_))));
    }
}
