//! Shared reference implementations for integration tests.
//!
//! Everything here is written independently of the library internals it
//! checks: distances in f64, selection by sorting, no reuse of library
//! helper functions beyond plain data access.

#![allow(dead_code)]

pub mod shadow;

use sarn::dataset::{DatasetConfig, Question, SceneSpec};

/// Answer classes recomputed by sorting all candidate distances rather than
/// tracking a running argmin, and with all arithmetic in f64.
pub fn sorted_distance_answer(config: &DatasetConfig, scene: &SceneSpec, q: Question) -> u8 {
    let me = &scene.objects[q.color as usize];
    let half = config.image_size as f64 / 2.0;
    match q.qtype {
        0 => {
            if (me.x as f64) < half {
                2
            } else {
                3
            }
        }
        1 => {
            if (me.y as f64) < half {
                4
            } else {
                5
            }
        }
        2 => me.shape,
        5 => {
            let k = scene
                .objects
                .iter()
                .filter(|o| o.shape == me.shape)
                .count();
            (5 + k) as u8
        }
        3 | 4 | 6 | 7 => {
            let mut others: Vec<(f64, usize)> = scene
                .objects
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != q.color as usize)
                .map(|(i, o)| {
                    let dx = o.x as f64 - me.x as f64;
                    let dy = o.y as f64 - me.y as f64;
                    (dx * dx + dy * dy, i)
                })
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let pick = if q.qtype == 3 || q.qtype == 6 {
                others.first().unwrap().1
            } else {
                others.last().unwrap().1
            };
            let obj = &scene.objects[pick];
            if q.qtype <= 4 {
                obj.shape
            } else {
                12 + obj.color
            }
        }
        other => panic!("unknown question type {}", other),
    }
}

/// Every pixel an object covers, recomputed from its spec.
pub fn object_pixels(config: &DatasetConfig, scene: &SceneSpec, index: usize) -> Vec<(u16, u16)> {
    let obj = &scene.objects[index];
    let os = config.object_size as i64;
    let mut out = Vec::new();
    for dy in -os..=os {
        for dx in -os..=os {
            if obj.shape == 1 && dx * dx + dy * dy > os * os {
                continue;
            }
            out.push(((obj.x as i64 + dx) as u16, (obj.y as i64 + dy) as u16));
        }
    }
    out
}
