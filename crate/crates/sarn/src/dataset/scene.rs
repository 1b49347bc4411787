//! Scene placement by rejection sampling.

use super::{DatasetConfig, ObjectSpec, SceneSpec};
use crate::error::{Error, Result};
use crate::rng::Pcg32;

const MAX_ATTEMPTS: u32 = 1000;

/// Draws one scene from `rng`.
///
/// Each attempt places all six objects (slot i gets color i) by drawing, in
/// order, x, y, shape for slot 0 through 5; centers land in
/// `[object_size, image_size - object_size - 1]` so shapes stay fully inside
/// the frame. The whole attempt is rejected and redrawn when any two objects
/// come within a Chebyshev distance of `2*object_size + 1` (touching or
/// overlapping footprints) or when any two of the 15 pairwise squared
/// center distances are equal, so nearest/furthest questions never have
/// ambiguous answers.
pub fn sample_scene(config: &DatasetConfig, rng: &mut Pcg32) -> Result<SceneSpec> {
    let size = config.image_size as u32;
    let os = config.object_size as u32;
    let span = size - 2 * os;
    for _ in 0..MAX_ATTEMPTS {
        let mut objects = [ObjectSpec {
            color: 0,
            shape: 0,
            x: 0,
            y: 0,
        }; DatasetConfig::N_OBJECTS];
        for (i, obj) in objects.iter_mut().enumerate() {
            let x = os + rng.next_below(span);
            let y = os + rng.next_below(span);
            let shape = rng.next_below(2) as u8;
            *obj = ObjectSpec {
                color: i as u8,
                shape,
                x: x as u16,
                y: y as u16,
            };
        }
        let scene = SceneSpec { objects };
        if scene_valid(config, &scene) {
            return Ok(scene);
        }
    }
    Err(Error::Generation(format!(
        "no valid placement after {} attempts (image_size {}, object_size {})",
        MAX_ATTEMPTS, config.image_size, config.object_size
    )))
}

fn scene_valid(config: &DatasetConfig, scene: &SceneSpec) -> bool {
    let min_gap = 2 * config.object_size as i64 + 1;
    let n = scene.objects.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let a = &scene.objects[i];
            let b = &scene.objects[j];
            let dx = (a.x as i64 - b.x as i64).abs();
            let dy = (a.y as i64 - b.y as i64).abs();
            if dx.max(dy) <= min_gap {
                return false;
            }
            dists.push(scene.dist2(i, j));
        }
    }
    dists.sort_unstable();
    dists.windows(2).all(|w| w[0] != w[1])
}
