//! Ground-truth answers computed from scene geometry.

use super::vocab::{answer, qtype};
use super::{DatasetConfig, Question, SceneSpec};

/// Answers `question` for `scene`.
///
/// Side questions split on the doubled coordinate (`2x < image_size` is
/// "left", `2y < image_size` is "up"; midpoint falls to right/down).
/// Nearest/furthest compare squared center distances; scene placement
/// rejects distance ties, so argmin/argmax are unique. Counting includes
/// the reference object itself.
pub fn answer_oracle(config: &DatasetConfig, scene: &SceneSpec, question: Question) -> u8 {
    let me = question.color as usize;
    let obj = &scene.objects[me];
    match question.qtype {
        qtype::HORIZONTAL => {
            if (obj.x as u32) * 2 < config.image_size as u32 {
                answer::LEFT
            } else {
                answer::RIGHT
            }
        }
        qtype::VERTICAL => {
            if (obj.y as u32) * 2 < config.image_size as u32 {
                answer::UP
            } else {
                answer::DOWN
            }
        }
        qtype::SHAPE => answer::shape_class(obj.shape),
        qtype::NEAREST_SHAPE => answer::shape_class(scene.objects[extreme(scene, me, true)].shape),
        qtype::FURTHEST_SHAPE => {
            answer::shape_class(scene.objects[extreme(scene, me, false)].shape)
        }
        qtype::NEAREST_COLOR => answer::color_class(scene.objects[extreme(scene, me, true)].color),
        qtype::FURTHEST_COLOR => {
            answer::color_class(scene.objects[extreme(scene, me, false)].color)
        }
        qtype::COUNT_SAME_SHAPE => {
            let k = scene
                .objects
                .iter()
                .filter(|o| o.shape == obj.shape)
                .count() as u8;
            answer::count_class(k)
        }
        other => panic!("unknown question type {}", other),
    }
}

/// Index of the nearest (or furthest) other object from `me`.
fn extreme(scene: &SceneSpec, me: usize, nearest: bool) -> usize {
    let mut best = usize::MAX;
    let mut best_d = 0u64;
    for j in 0..scene.objects.len() {
        if j == me {
            continue;
        }
        let d = scene.dist2(me, j);
        if best == usize::MAX || (nearest && d < best_d) || (!nearest && d > best_d) {
            best = j;
            best_d = d;
        }
    }
    best
}
