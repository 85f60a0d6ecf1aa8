//! Synthetic scenes: a small shape library, a polygon rasterizer and a
//! seeded retrieval suite with constructed gold rankings.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::eval::Ranking;
use crate::features::{palette, ColorRGB};
use crate::geometry::{Contour, Transform, Vec2};
use crate::ingest::{segment_synthetic, RasterImage, SegmentConfig};
use crate::model::{BasicShape, CompositeDescription, SegmentedImage, ShapeComponent};

pub const BACKGROUND: ColorRGB = ColorRGB::from_u8(255, 255, 255);
pub const SUITE_SEED: u64 = 7;
pub const SCENE_WIDTH: usize = 320;
pub const SCENE_HEIGHT: usize = 320;

fn polygon(pts: &[[f64; 2]]) -> Contour {
    Contour::from_xy(pts).expect("valid built-in polygon")
}

fn ellipse_points(a: f64, b: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            [a * t.cos(), b * t.sin()]
        })
        .collect()
}

/// The eight built-in shapes, each roughly of unit radius.
pub fn basic_shapes() -> Vec<BasicShape> {
    let star: Vec<[f64; 2]> = (0..10)
        .map(|i| {
            let r = if i % 2 == 0 { 1.2 } else { 0.5 };
            let t = PI / 2.0 + PI * i as f64 / 5.0;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    let tri: Vec<[f64; 2]> = (0..3)
        .map(|i| {
            let t = PI / 2.0 + 2.0 * PI * i as f64 / 3.0;
            [1.2 * t.cos(), 1.2 * t.sin()]
        })
        .collect();
    let defs: Vec<(&str, Contour)> = vec![
        ("circle", polygon(&ellipse_points(1.0, 1.0, 64))),
        ("square", polygon(&[[-0.9, -0.9], [0.9, -0.9], [0.9, 0.9], [-0.9, 0.9]])),
        ("rectangle", polygon(&[[-1.2, -0.6], [1.2, -0.6], [1.2, 0.6], [-1.2, 0.6]])),
        ("triangle", polygon(&tri)),
        ("ellipse", polygon(&ellipse_points(1.3, 0.7, 64))),
        ("star", polygon(&star)),
        (
            "cross",
            polygon(&[
                [-0.35, -1.0],
                [0.35, -1.0],
                [0.35, -0.35],
                [1.0, -0.35],
                [1.0, 0.35],
                [0.35, 0.35],
                [0.35, 1.0],
                [-0.35, 1.0],
                [-0.35, 0.35],
                [-1.0, 0.35],
                [-1.0, -0.35],
                [-0.35, -0.35],
            ]),
        ),
        (
            "lshape",
            polygon(&[
                [-0.8, -1.0],
                [-0.1, -1.0],
                [-0.1, 0.3],
                [0.9, 0.3],
                [0.9, 1.0],
                [-0.8, 1.0],
            ]),
        ),
    ];
    defs.into_iter()
        .map(|(id, c)| BasicShape::new(id, c).expect("valid built-in shape"))
        .collect()
}

/// Fills every pixel whose center (integer coordinates) lies inside `c`.
pub fn fill_polygon(img: &mut RasterImage, c: &Contour, color: ColorRGB) {
    let (lo, hi) = c.bbox();
    let x0 = lo.x.floor().max(0.0) as usize;
    let y0 = lo.y.floor().max(0.0) as usize;
    let x1 = (hi.x.ceil().max(0.0) as usize).min(img.width.saturating_sub(1));
    let y1 = (hi.y.ceil().max(0.0) as usize).min(img.height.saturating_sub(1));
    for y in y0..=y1 {
        for x in x0..=x1 {
            if c.contains(Vec2::new(x as f64, y as f64)) {
                img.set(x, y, color);
            }
        }
    }
}

/// One flat-colored object of a scene.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub shape: Arc<BasicShape>,
    pub transform: Transform,
    pub color: ColorRGB,
}

impl SceneObject {
    pub fn contour(&self) -> Contour {
        self.transform.apply(self.shape.contour())
    }

    fn radius(&self) -> f64 {
        let c = self.shape.centroid();
        self.shape
            .contour()
            .points()
            .iter()
            .map(|p| p.distance(c))
            .fold(0.0, f64::max)
            * self.transform.s
    }

    fn center(&self) -> Vec2 {
        self.transform.apply_point(self.shape.centroid())
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub id: String,
    pub width: usize,
    pub height: usize,
    pub objects: Vec<SceneObject>,
}

impl Scene {
    pub fn render(&self) -> RasterImage {
        let mut img = RasterImage::filled(self.width, self.height, BACKGROUND).expect("positive size");
        for o in &self.objects {
            fill_polygon(&mut img, &o.contour(), o.color);
        }
        img
    }

    pub fn segment(&self) -> Result<SegmentedImage> {
        segment_synthetic(&self.id, &self.render(), &SegmentConfig::default())
    }
}

/// Queries, scenes and gold rankings of a synthetic retrieval experiment.
#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub shapes: Vec<Arc<BasicShape>>,
    pub queries: Vec<CompositeDescription>,
    pub scenes: Vec<Scene>,
    pub gold: BTreeMap<String, Ranking>,
}

impl SyntheticSuite {
    /// Renders and segments every scene.
    pub fn segmented_images(&self) -> Result<Vec<SegmentedImage>> {
        self.scenes.iter().map(Scene::segment).collect()
    }
}

struct Arrangement {
    /// (shape index, offset in arrangement units, rotation, relative scale, color)
    parts: Vec<(usize, Vec2, f64, f64, ColorRGB)>,
}

fn chromatic(rng: &mut ChaCha8Rng) -> ColorRGB {
    // skip the gray ramp and the darkest value row of each saturation
    let p = palette();
    loop {
        let i = rng.gen_range(28..p.len());
        let v_row = ((i - 28) / 7) % 4;
        if v_row >= 2 {
            return p[i];
        }
    }
}

fn arrangement_objects(
    arr: &Arrangement,
    shapes: &[Arc<BasicShape>],
    frame: &Transform,
    skip: Option<usize>,
) -> Vec<SceneObject> {
    arr.parts
        .iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != skip)
        .map(|(_, &(si, off, rot, scale, color))| SceneObject {
            shape: shapes[si].clone(),
            transform: frame.compose(&Transform::new(off.x, off.y, rot, scale).expect("valid part")),
            color,
        })
        .collect()
}

fn fits(o: &SceneObject, others: &[SceneObject], w: usize, h: usize, gap: f64) -> bool {
    let (lo, hi) = o.contour().bbox();
    lo.x >= gap
        && lo.y >= gap
        && hi.x <= w as f64 - 1.0 - gap
        && hi.y <= h as f64 - 1.0 - gap
        && others
            .iter()
            .all(|p| o.center().distance(p.center()) >= o.radius() + p.radius() + gap)
}

/// Places the arrangement under a random similarity transform and adds
/// distractors drawn from `distractor_shapes`.
fn random_scene(
    rng: &mut ChaCha8Rng,
    id: String,
    arr: &Arrangement,
    shapes: &[Arc<BasicShape>],
    skip: Option<usize>,
    distractor_shapes: &[usize],
) -> Scene {
    let (w, h) = (SCENE_WIDTH, SCENE_HEIGHT);
    let full = loop {
        let frame = Transform::new(
            rng.gen_range(0.3..0.7) * w as f64,
            rng.gen_range(0.3..0.7) * h as f64,
            rng.gen_range(-PI..PI),
            rng.gen_range(20.0..26.0),
        )
        .expect("valid frame");
        let objs = arrangement_objects(arr, shapes, &frame, None);
        if objs.iter().all(|o| fits(o, &[], w, h, 4.0)) {
            break objs;
        }
    };
    // distractors keep clear of every part, including a skipped one
    let mut blockers = full.clone();
    let mut objects: Vec<SceneObject> = full
        .into_iter()
        .enumerate()
        .filter(|(k, _)| Some(*k) != skip)
        .map(|(_, o)| o)
        .collect();
    let wanted = rng.gen_range(1..=2);
    let mut attempts = 0;
    while objects.len() + usize::from(skip.is_some()) < arr.parts.len() + wanted && attempts < 1000 {
        attempts += 1;
        let si = distractor_shapes[rng.gen_range(0..distractor_shapes.len())];
        let o = SceneObject {
            shape: shapes[si].clone(),
            transform: Transform::new(
                rng.gen_range(0.0..w as f64),
                rng.gen_range(0.0..h as f64),
                rng.gen_range(-PI..PI),
                rng.gen_range(16.0..26.0),
            )
            .expect("valid distractor"),
            color: chromatic(rng),
        };
        if fits(&o, &blockers, w, h, 6.0) {
            blockers.push(o.clone());
            objects.push(o);
        }
    }
    Scene {
        id,
        width: w,
        height: h,
        objects,
    }
}

/// Three queries of two or three components; for each, five scenes holding
/// the arrangement and five missing one component, all with distractors.
/// Gold ranks the complete scenes above the incomplete ones.
pub fn synthetic_suite(seed: u64) -> SyntheticSuite {
    let shapes: Vec<Arc<BasicShape>> = basic_shapes().into_iter().map(Arc::new).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // shape indices: circle 0, square 1, rectangle 2, triangle 3, ellipse 4,
    // star 5, cross 6, lshape 7
    let layouts: [&[(usize, [f64; 2], f64)]; 3] = [
        &[(0, [-1.7, 0.0], 0.0), (1, [1.7, 0.0], 0.3)],
        &[(5, [0.0, -1.7], 0.0), (2, [-1.8, 1.2], 0.5), (3, [1.8, 1.2], -0.4)],
        &[(6, [-1.7, -0.6], 0.2), (7, [1.7, -0.6], 0.0), (4, [0.0, 1.9], 1.0)],
    ];
    let mut queries = Vec::new();
    let mut scenes = Vec::new();
    let mut gold = BTreeMap::new();
    for (qi, layout) in layouts.iter().enumerate() {
        let arr = Arrangement {
            parts: layout
                .iter()
                .map(|&(si, off, rot)| (si, Vec2::new(off[0], off[1]), rot, 1.0, chromatic(&mut rng)))
                .collect(),
        };
        let qid = format!("q{}", qi + 1);
        let frame = Transform::new(0.0, 0.0, 0.0, 20.0).expect("valid frame");
        let components = arrangement_objects(&arr, &shapes, &frame, None)
            .into_iter()
            .map(|o| ShapeComponent::new(o.shape, o.transform, Some(o.color), None).expect("valid component"))
            .collect();
        queries.push(CompositeDescription::new(qid.clone(), components).expect("non-empty"));

        let used: Vec<usize> = layout.iter().map(|p| p.0).collect();
        let distractors: Vec<usize> = (0..shapes.len()).filter(|i| !used.contains(i)).collect();
        let mut full = Vec::new();
        let mut partial = Vec::new();
        for k in 0..5 {
            let id = format!("s{:02}", scenes.len() + 1);
            scenes.push(random_scene(&mut rng, id.clone(), &arr, &shapes, None, &distractors));
            full.push(id);
            let id = format!("s{:02}", scenes.len() + 1);
            let skip = k % layout.len();
            scenes.push(random_scene(&mut rng, id.clone(), &arr, &shapes, Some(skip), &distractors));
            partial.push(id);
        }
        gold.insert(qid, Ranking::new([full, partial]).expect("distinct ids"));
    }
    SyntheticSuite {
        shapes,
        queries,
        scenes,
        gold,
    }
}
