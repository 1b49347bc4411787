//! Rasterizer for scene specs.

use super::vocab::{BACKGROUND_RGB, COLOR_RGB, SHAPE_SQUARE};
use super::{DatasetConfig, SceneSpec};

/// Renders row-major RGB pixels, `3 * image_size * image_size` bytes.
///
/// A square covers the `(2*object_size + 1)^2` block centered on the object;
/// a circle covers pixels with `dx^2 + dy^2 <= object_size^2`. Placement
/// guarantees objects never overlap, so draw order does not matter.
pub fn render_scene(config: &DatasetConfig, scene: &SceneSpec) -> Vec<u8> {
    let size = config.image_size as i64;
    let os = config.object_size as i64;
    let mut pixels = Vec::with_capacity(3 * (size * size) as usize);
    for _ in 0..size * size {
        pixels.extend_from_slice(&BACKGROUND_RGB);
    }
    for obj in &scene.objects {
        let color = COLOR_RGB[obj.color as usize];
        let cx = obj.x as i64;
        let cy = obj.y as i64;
        for dy in -os..=os {
            for dx in -os..=os {
                if obj.shape != SHAPE_SQUARE && dx * dx + dy * dy > os * os {
                    continue;
                }
                let x = cx + dx;
                let y = cy + dy;
                debug_assert!(x >= 0 && x < size && y >= 0 && y < size);
                let at = 3 * (y * size + x) as usize;
                pixels[at..at + 3].copy_from_slice(&color);
            }
        }
    }
    pixels
}
