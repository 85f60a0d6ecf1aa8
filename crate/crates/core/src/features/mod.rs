//! Region and shape features: Fourier descriptors, orientation, color,
//! texture and the distance-to-similarity map.

pub mod color;
pub mod fourier;
pub mod phi;
pub mod texture;

pub use color::{mean_color, palette, snap, ColorRGB, PALETTE_SIZE};
pub use fourier::{
    fourier_descriptor, fourier_descriptor_with, orientation_info, sim_ss, FourierDescriptor,
    OrientationConfig, OrientationInfo, DEFAULT_NB, DEFAULT_NC,
};
pub use phi::phi;
pub use texture::{gabor_texture, GrayImage, TextureResult, TextureVec, TEXTURE_LEN};
