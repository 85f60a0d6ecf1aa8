//! Opening, seeding and saving the on-disk store, plus ingestion helpers
//! shared by the CLI and the service.

use std::path::{Path, PathBuf};

use shapedl::config::MatchConfig;
use shapedl::index::Hierarchy;
use shapedl::ingest::{segment_synthetic, RasterImage, SegmentConfig};
use shapedl::interchange::parse_segmented_image;
use shapedl::model::SegmentedImage;
use shapedl::synth::basic_shapes;
use shapedl::Result;

pub const STORE_FILE: &str = "store.json";

pub fn store_path(data_dir: &Path) -> PathBuf {
    data_dir.join(STORE_FILE)
}

/// A fresh hierarchy holding the built-in basic shapes.
pub fn seeded(config: MatchConfig) -> Result<Hierarchy> {
    let mut h = Hierarchy::new(config);
    for s in basic_shapes() {
        h.add_shape(s)?;
    }
    Ok(h)
}

/// Loads the store in `data_dir`, or seeds a new one. A configuration file,
/// when given, replaces the stored configuration.
pub fn open(data_dir: &Path, config: Option<&Path>) -> Result<Hierarchy> {
    let path = store_path(data_dir);
    let mut h = if path.exists() {
        Hierarchy::load(&path)?
    } else {
        seeded(MatchConfig::default())?
    };
    if let Some(cfg) = config {
        h.set_config(MatchConfig::load(cfg)?)?;
    }
    Ok(h)
}

pub fn save(h: &Hierarchy, data_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(data_dir)?;
    h.save(&store_path(data_dir))
}

/// Segmented-image JSON when the bytes look like JSON, otherwise a PNG or
/// PPM raster that is segmented under `id`.
pub fn image_from_bytes(bytes: &[u8], id: &str) -> Result<SegmentedImage> {
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    if first == Some(&b'{') {
        return parse_segmented_image(bytes);
    }
    segment_raster(bytes, id)
}

pub fn segment_raster(bytes: &[u8], id: &str) -> Result<SegmentedImage> {
    let raster = RasterImage::decode(bytes)?;
    segment_synthetic(id, &raster, &SegmentConfig::default())
}

/// `base` if unused, otherwise the first free `base-N`.
pub fn fresh_image_id(h: &Hierarchy, base: &str) -> String {
    if h.image(base).is_none() {
        return base.to_string();
    }
    (2..)
        .map(|n| format!("{base}-{n}"))
        .find(|id| h.image(id).is_none())
        .expect("unbounded")
}
