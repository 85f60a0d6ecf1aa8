//! Basic shapes, composite descriptions, regions and segmented images.

use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{fourier_descriptor, ColorRGB, FourierDescriptor, TextureVec, DEFAULT_NC};
use crate::geometry::{intersection_area, Contour, Transform, Vec2};

/// Prefix of ids generated for shapes given inline by their points.
pub const INLINE_PREFIX: &str = "inline-";

/// Fill color used for prototypical regions of colorless components.
pub const NEUTRAL_COLOR: ColorRGB = ColorRGB::from_u8(128, 128, 128);

/// A named closed contour whose centroid sits at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicShape {
    id: String,
    contour: Contour,
    centroid: Vec2,
    size: f64,
    descriptor: FourierDescriptor,
}

impl BasicShape {
    /// Re-centers the contour on its centroid when it is off by more than
    /// `1e-6·size`.
    pub fn new(id: impl Into<String>, contour: Contour) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidParameter("shape id must not be empty".into()));
        }
        let c = contour.centroid()?;
        let size = contour.size()?;
        let contour = if c.norm() > 1e-6 * size {
            contour.translated(-c)
        } else {
            contour
        };
        let centroid = contour.centroid()?;
        let descriptor = fourier_descriptor(&contour, DEFAULT_NC)?;
        Ok(Self {
            id,
            size: contour.size()?,
            contour,
            centroid,
            descriptor,
        })
    }

    /// A shape with a content-derived id, for components given as raw points.
    pub fn inline(contour: Contour) -> Result<Self> {
        let probe = Self::new("probe", contour)?;
        let mut h = Sha256::new();
        for p in probe.contour.points() {
            h.update(p.x.to_le_bytes());
            h.update(p.y.to_le_bytes());
        }
        let digest = h.finalize();
        let mut id = String::from(INLINE_PREFIX);
        for b in &digest[..8] {
            let _ = write!(id, "{b:02x}");
        }
        Ok(Self { id, ..probe })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_inline(&self) -> bool {
        self.id.starts_with(INLINE_PREFIX)
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn centroid(&self) -> Vec2 {
        self.centroid
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn descriptor(&self) -> &FourierDescriptor {
        &self.descriptor
    }
}

/// One posed basic shape inside a description. Absent color or texture is a
/// wildcard: any region value is accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeComponent {
    pub shape: Arc<BasicShape>,
    pub transform: Transform,
    pub color: Option<ColorRGB>,
    pub texture: Option<TextureVec>,
}

impl ShapeComponent {
    pub fn new(
        shape: Arc<BasicShape>,
        transform: Transform,
        color: Option<ColorRGB>,
        texture: Option<TextureVec>,
    ) -> Result<Self> {
        transform.validate()?;
        Ok(Self {
            shape,
            transform,
            color,
            texture,
        })
    }

    /// Colorless, textureless component.
    pub fn plain(shape: Arc<BasicShape>, transform: Transform) -> Result<Self> {
        Self::new(shape, transform, None, None)
    }

    pub fn contour(&self) -> Contour {
        self.transform.apply(self.shape.contour())
    }

    pub fn centroid(&self) -> Vec2 {
        self.transform.apply_point(self.shape.centroid())
    }

    pub fn size(&self) -> f64 {
        self.transform.s * self.shape.size()
    }
}

/// Conjunction of posed shape components.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeDescription {
    pub id: String,
    pub components: Vec<ShapeComponent>,
}

impl CompositeDescription {
    pub fn new(id: impl Into<String>, components: Vec<ShapeComponent>) -> Result<Self> {
        let id = id.into();
        if components.is_empty() {
            return Err(Error::EmptyDescription(id));
        }
        Ok(Self { id, components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// First pair of components whose transformed contours overlap.
    pub fn first_overlap(&self) -> Option<(usize, usize)> {
        let contours: Vec<Contour> = self.components.iter().map(|c| c.contour()).collect();
        for i in 0..contours.len() {
            for j in (i + 1)..contours.len() {
                let a = intersection_area(&contours[i], &contours[j]);
                if a > 1e-9 * contours[i].area().min(contours[j].area()) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Satisfiable iff no two transformed components share interior area.
    pub fn is_satisfiable(&self) -> bool {
        self.first_overlap().is_none()
    }

    pub fn ensure_satisfiable(&self) -> Result<()> {
        match self.first_overlap() {
            Some((first, second)) => Err(Error::Unsatisfiable {
                id: self.id.clone(),
                first,
                second,
            }),
            None => Ok(()),
        }
    }

    /// Same components with a different id.
    pub fn renamed(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            components: self.components.clone(),
        }
    }
}

/// A segmented image region with its cached shape features.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    contour: Contour,
    pub color: ColorRGB,
    pub texture: Option<TextureVec>,
    centroid: Vec2,
    size: f64,
    descriptor: FourierDescriptor,
}

impl Region {
    pub fn new(contour: Contour, color: ColorRGB, texture: Option<TextureVec>) -> Result<Self> {
        let contour = contour.canonical();
        let centroid = contour.centroid()?;
        let size = contour.size()?;
        let descriptor = fourier_descriptor(&contour, DEFAULT_NC)?;
        Ok(Self {
            contour,
            color,
            texture,
            centroid,
            size,
            descriptor,
        })
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn centroid(&self) -> Vec2 {
        self.centroid
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn descriptor(&self) -> &FourierDescriptor {
        &self.descriptor
    }

    /// Recomputes the geometric caches from the contour.
    pub fn recompute(&self) -> Result<Region> {
        Region::new(self.contour.clone(), self.color, self.texture.clone())
    }

    /// Same region under a similarity transform (features recomputed).
    pub fn transformed(&self, t: &Transform) -> Result<Region> {
        Region::new(t.apply(&self.contour), self.color, self.texture.clone())
    }
}

/// Relation between two region interiors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlap {
    Disjoint,
    /// One region lies inside the other, as with an outer contour around a
    /// hole filled by another region.
    Nested,
    Partial,
}

pub fn overlap_kind(a: &Contour, b: &Contour) -> Overlap {
    let inter = intersection_area(a, b);
    let small = a.area().min(b.area());
    if inter <= 1e-9 * small {
        Overlap::Disjoint
    } else if inter >= small * (1.0 - 1e-6) {
        Overlap::Nested
    } else {
        Overlap::Partial
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedImage {
    pub id: String,
    regions: Vec<Region>,
    pub source: Option<String>,
}

impl SegmentedImage {
    /// Validates `m ≥ 1` and rejects partially overlapping regions. Nesting
    /// is accepted: segmenters keep only outer contours, so a region with a
    /// hole encloses whatever fills the hole.
    pub fn new(id: impl Into<String>, regions: Vec<Region>, source: Option<String>) -> Result<Self> {
        let id = id.into();
        if regions.is_empty() {
            return Err(Error::EmptyImage(id));
        }
        for i in 0..regions.len() {
            for j in (i + 1)..regions.len() {
                if overlap_kind(regions[i].contour(), regions[j].contour()) == Overlap::Partial {
                    return Err(Error::OverlappingRegions {
                        image: id,
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(Self { id, regions, source })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// The whole scene under one similarity transform.
    pub fn transformed(&self, t: &Transform) -> Result<SegmentedImage> {
        Ok(SegmentedImage {
            id: self.id.clone(),
            regions: self
                .regions
                .iter()
                .map(|r| r.transformed(t))
                .collect::<Result<_>>()?,
            source: self.source.clone(),
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// One region per component: the transformed shape contour, carrying the
/// component's color and texture.
pub fn prototypical_image(d: &CompositeDescription) -> Result<SegmentedImage> {
    d.ensure_satisfiable()?;
    let regions = d
        .components
        .iter()
        .map(|c| Region::new(c.contour(), c.color.unwrap_or(NEUTRAL_COLOR), c.texture.clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentedImage {
        id: d.id.clone(),
        regions,
        source: Some("prototype".into()),
    })
}

/// Description built from a segmented example: one inline shape per
/// region, placed relative to the area-weighted centroid of all regions at
/// unit scale and zero rotation.
pub fn description_from_image(img: &SegmentedImage, id: impl Into<String>) -> Result<CompositeDescription> {
    let total: f64 = img.regions.iter().map(|r| r.contour.area()).sum();
    if img.regions.is_empty() || !(total > 0.0) {
        return Err(Error::EmptyImage(img.id.clone()));
    }
    let mut origin = Vec2::new(0.0, 0.0);
    for r in &img.regions {
        let w = r.contour.area() / total;
        origin = Vec2::new(origin.x + w * r.centroid.x, origin.y + w * r.centroid.y);
    }
    let components = img
        .regions
        .iter()
        .map(|r| {
            let shape = Arc::new(BasicShape::inline(r.contour.clone())?);
            let at = Transform::translation(r.centroid.x - origin.x, r.centroid.y - origin.y);
            ShapeComponent::new(shape, at, Some(r.color), r.texture.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    CompositeDescription::new(id, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square(side: f64) -> Contour {
        let h = side / 2.0;
        Contour::from_xy(&[[-h, -h], [h, -h], [h, h], [-h, h]]).unwrap()
    }

    fn circle(r: f64) -> Contour {
        Contour::new(
            (0..64)
                .map(|i| Vec2::new(r, 0.0).rotate(2.0 * PI * i as f64 / 64.0))
                .collect(),
        )
        .unwrap()
    }

    fn comp(shape: &Arc<BasicShape>, tx: f64, ty: f64) -> ShapeComponent {
        ShapeComponent::plain(shape.clone(), Transform::translation(tx, ty)).unwrap()
    }

    #[test]
    fn basic_shape_recentred() {
        let c = Contour::from_xy(&[[10.0, 10.0], [12.0, 10.0], [12.0, 12.0], [10.0, 12.0]]).unwrap();
        let b = BasicShape::new("sq", c).unwrap();
        assert!(b.centroid().norm() <= 1e-6 * b.size());
        let again = BasicShape::new("sq", b.contour().clone()).unwrap();
        assert_eq!(again.contour(), b.contour());
    }

    #[test]
    fn inline_ids_are_content_hashes() {
        let a = BasicShape::inline(square(2.0)).unwrap();
        let b = BasicShape::inline(square(2.0).translated(Vec2::new(5.0, 5.0))).unwrap();
        let c = BasicShape::inline(square(3.0)).unwrap();
        assert!(a.is_inline());
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
    }

    #[test]
    fn lighted_candle_prototype() {
        let rect = Arc::new(
            BasicShape::new(
                "rectangle",
                Contour::from_xy(&[[-1.0, -3.0], [1.0, -3.0], [1.0, 3.0], [-1.0, 3.0]]).unwrap(),
            )
            .unwrap(),
        );
        let flame = Arc::new(BasicShape::new("circle", circle(1.0)).unwrap());
        let d = CompositeDescription::new(
            "lighted-candle",
            vec![
                ShapeComponent::new(
                    rect,
                    Transform::IDENTITY,
                    Some(ColorRGB::from_u8(255, 255, 255)),
                    None,
                )
                .unwrap(),
                ShapeComponent::new(
                    flame,
                    Transform::new(0.0, 4.5, 0.0, 1.0).unwrap(),
                    Some(ColorRGB::from_u8(255, 0, 0)),
                    None,
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let img = prototypical_image(&d).unwrap();
        assert_eq!(img.len(), 2);
        assert!(img.regions()[1].centroid().y > img.regions()[0].centroid().y + 4.0);
        assert_eq!(img.regions()[1].color, ColorRGB::from_u8(255, 0, 0));
    }

    #[test]
    fn satisfiability() {
        let sq = Arc::new(BasicShape::new("square", square(2.0)).unwrap());
        let disjoint =
            CompositeDescription::new("a", vec![comp(&sq, 0.0, 0.0), comp(&sq, 5.0, 0.0)]).unwrap();
        let same =
            CompositeDescription::new("b", vec![comp(&sq, 0.0, 0.0), comp(&sq, 0.0, 0.0)]).unwrap();
        let touching =
            CompositeDescription::new("c", vec![comp(&sq, 0.0, 0.0), comp(&sq, 2.0, 0.0)]).unwrap();
        assert!(disjoint.is_satisfiable());
        assert!(!same.is_satisfiable());
        assert!(touching.is_satisfiable());
        assert!(matches!(
            prototypical_image(&same),
            Err(Error::Unsatisfiable { first: 0, second: 1, .. })
        ));
        assert!(CompositeDescription::new("e", vec![]).is_err());
    }

    #[test]
    fn image_rejects_partial_overlap_only() {
        let grey = ColorRGB::from_u8(10, 10, 10);
        let r = |c: Contour| Region::new(c, grey, None).unwrap();
        let outer = r(square(10.0));
        let inner = r(square(2.0));
        let shifted = r(square(10.0).translated(Vec2::new(5.0, 0.0)));
        assert!(SegmentedImage::new("n", vec![outer.clone(), inner], None).is_ok());
        assert!(matches!(
            SegmentedImage::new("p", vec![outer, shifted], None),
            Err(Error::OverlappingRegions { first: 0, second: 1, .. })
        ));
        assert!(matches!(SegmentedImage::new("e", vec![], None), Err(Error::EmptyImage(_))));
    }

    #[test]
    fn region_cache_idempotent() {
        let r = Region::new(circle(3.0), NEUTRAL_COLOR, None).unwrap();
        assert_eq!(r.recompute().unwrap(), r);
    }
}
