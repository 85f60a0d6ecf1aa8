//! JSON documents for shapes, descriptions and segmented images.
//!
//! Description: `{"id", "components": [{"shape": "<id>" | {"points": [[x, y], ...]},
//! "color": [r, g, b] | null, "texture": [24 reals] | null,
//! "transform": {"tx", "ty", "theta", "s"}}]}`, angles in radians.
//!
//! Segmented image: `{"id", "regions": [{"contour": [[x, y], ...],
//! "color": [r, g, b], "texture": [24 reals] | null}]}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ColorRGB, FourierDescriptor, TextureVec};
use crate::geometry::{Contour, Transform, Vec2};
use crate::model::{BasicShape, CompositeDescription, Region, SegmentedImage, ShapeComponent};

/// Shapes by id.
pub type ShapeLibrary = BTreeMap<String, Arc<BasicShape>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeDoc {
    pub id: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeRef {
    Id(String),
    Inline { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformDoc {
    pub tx: f64,
    pub ty: f64,
    pub theta: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDoc {
    pub shape: ShapeRef,
    #[serde(default)]
    pub color: Option<[f64; 3]>,
    #[serde(default)]
    pub texture: Option<Vec<f64>>,
    #[serde(default)]
    pub transform: Option<TransformDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionDoc {
    pub id: String,
    pub components: Vec<ComponentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub contour: Vec<[f64; 2]>,
    pub color: [f64; 3],
    #[serde(default)]
    pub texture: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageDoc {
    pub id: String,
    pub regions: Vec<RegionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// Cached region features, stored alongside images for integrity checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFeaturesDoc {
    pub centroid: [f64; 2],
    pub size: f64,
    pub descriptor: FourierDescriptor,
}

fn xy(points: &[Vec2]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p.x, p.y]).collect()
}

pub fn shape_to_doc(s: &BasicShape) -> ShapeDoc {
    ShapeDoc {
        id: s.id().to_string(),
        points: xy(s.contour().points()),
    }
}

pub fn shape_from_doc(doc: &ShapeDoc) -> Result<BasicShape> {
    let contour =
        Contour::from_xy(&doc.points).map_err(|e| Error::Parse(format!("shape `{}`: {e}", doc.id)))?;
    BasicShape::new(doc.id.clone(), contour)
}

fn color_from(v: [f64; 3], what: &str) -> Result<ColorRGB> {
    ColorRGB::new(v[0], v[1], v[2]).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn texture_from(v: &Option<Vec<f64>>, what: &str) -> Result<Option<TextureVec>> {
    v.as_ref()
        .map(|t| TextureVec::new(t).map_err(|e| Error::Parse(format!("{what}: {e}"))))
        .transpose()
}

pub fn description_to_doc(d: &CompositeDescription) -> DescriptionDoc {
    DescriptionDoc {
        id: d.id.clone(),
        components: d
            .components
            .iter()
            .map(|c| ComponentDoc {
                shape: if c.shape.is_inline() {
                    ShapeRef::Inline {
                        points: xy(c.shape.contour().points()),
                    }
                } else {
                    ShapeRef::Id(c.shape.id().to_string())
                },
                color: c.color.map(Into::into),
                texture: c.texture.clone().map(Into::into),
                transform: Some(TransformDoc {
                    tx: c.transform.tx,
                    ty: c.transform.ty,
                    theta: c.transform.theta,
                    s: c.transform.s,
                }),
            })
            .collect(),
    }
}

/// Resolves shape references against `shapes`; inline shapes get
/// content-derived ids.
pub fn description_from_doc(doc: &DescriptionDoc, shapes: &ShapeLibrary) -> Result<CompositeDescription> {
    let mut comps = Vec::with_capacity(doc.components.len());
    for (i, c) in doc.components.iter().enumerate() {
        let what = format!("description `{}` component {i}", doc.id);
        let shape = match &c.shape {
            ShapeRef::Id(id) => shapes
                .get(id)
                .cloned()
                .ok_or_else(|| Error::UnknownShape(id.clone()))?,
            ShapeRef::Inline { points } => {
                let contour = Contour::from_xy(points).map_err(|e| Error::Parse(format!("{what}: {e}")))?;
                let s = BasicShape::inline(contour)?;
                shapes.get(s.id()).cloned().unwrap_or_else(|| Arc::new(s))
            }
        };
        let transform = match &c.transform {
            None => Transform::IDENTITY,
            Some(t) => Transform::new(t.tx, t.ty, t.theta, t.s).map_err(|e| Error::Parse(format!("{what}: {e}")))?,
        };
        let color = c.color.map(|v| color_from(v, &what)).transpose()?;
        let texture = texture_from(&c.texture, &what)?;
        comps.push(ShapeComponent::new(shape, transform, color, texture)?);
    }
    CompositeDescription::new(doc.id.clone(), comps)
}

pub fn parse_description(json: &[u8], shapes: &ShapeLibrary) -> Result<CompositeDescription> {
    let doc: DescriptionDoc =
        serde_json::from_slice(json).map_err(|e| Error::Parse(format!("description: {e}")))?;
    description_from_doc(&doc, shapes)
}

pub fn image_to_doc(img: &SegmentedImage) -> ImageDoc {
    ImageDoc {
        id: img.id.clone(),
        regions: img
            .regions()
            .iter()
            .map(|r| RegionDoc {
                contour: xy(r.contour().points()),
                color: r.color.into(),
                texture: r.texture.clone().map(Into::into),
            })
            .collect(),
        source: img.source.clone(),
    }
}

pub fn image_from_doc(doc: &ImageDoc) -> Result<SegmentedImage> {
    let mut regions = Vec::with_capacity(doc.regions.len());
    for (i, r) in doc.regions.iter().enumerate() {
        let what = format!("image `{}` region {i}", doc.id);
        let contour = Contour::from_xy(&r.contour).map_err(|e| Error::Parse(format!("{what}: {e}")))?;
        let color = color_from(r.color, &what)?;
        let texture = texture_from(&r.texture, &what)?;
        regions.push(Region::new(contour, color, texture).map_err(|e| Error::Parse(format!("{what}: {e}")))?);
    }
    SegmentedImage::new(doc.id.clone(), regions, doc.source.clone())
}

/// Parses and validates a segmented-image document.
pub fn parse_segmented_image(json: &[u8]) -> Result<SegmentedImage> {
    let doc: ImageDoc =
        serde_json::from_slice(json).map_err(|e| Error::Parse(format!("segmented image: {e}")))?;
    image_from_doc(&doc)
}

pub fn serialize_segmented_image(img: &SegmentedImage) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(&image_to_doc(img))?)
}

pub fn region_features_doc(r: &Region) -> RegionFeaturesDoc {
    RegionFeaturesDoc {
        centroid: [r.centroid().x, r.centroid().y],
        size: r.size(),
        descriptor: r.descriptor().clone(),
    }
}

/// Whether recomputed features agree with stored ones within `tol`.
pub fn features_agree(r: &Region, doc: &RegionFeaturesDoc, tol: f64) -> bool {
    let c = r.centroid();
    let scale = 1.0 + r.size();
    let close = |a: f64, b: f64| (a - b).abs() <= tol * scale;
    close(c.x, doc.centroid[0])
        && close(c.y, doc.centroid[1])
        && close(r.size(), doc.size)
        && r.descriptor().coeffs().len() == doc.descriptor.coeffs().len()
        && r
            .descriptor()
            .coeffs()
            .iter()
            .zip(doc.descriptor.coeffs())
            .all(|(a, b)| close(a.re, b.re) && close(a.im, b.im))
}
