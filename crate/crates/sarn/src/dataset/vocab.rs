//! Fixed vocabularies: colors, shapes, question types, and answer classes.
//!
//! These tables are part of the dataset definition; reordering anything here
//! changes every generated file and label.

/// Color ids in canonical order; object slot i always carries color i.
pub const COLOR_NAMES: [&str; 6] = ["red", "green", "blue", "orange", "yellow", "violet"];

/// RGB used by the renderer, indexed by color id.
pub const COLOR_RGB: [[u8; 3]; 6] = [
    [255, 0, 0],
    [0, 255, 0],
    [0, 0, 255],
    [255, 128, 0],
    [255, 255, 0],
    [128, 0, 255],
];

pub const BACKGROUND_RGB: [u8; 3] = [255, 255, 255];

pub const SHAPE_SQUARE: u8 = 0;
pub const SHAPE_CIRCLE: u8 = 1;
pub const SHAPE_NAMES: [&str; 2] = ["square", "circle"];

/// Question types. 0..=2 are non-relational (answerable from the reference
/// object alone), 3..=7 relational.
pub mod qtype {
    pub const HORIZONTAL: u8 = 0;
    pub const VERTICAL: u8 = 1;
    pub const SHAPE: u8 = 2;
    pub const NEAREST_SHAPE: u8 = 3;
    pub const FURTHEST_SHAPE: u8 = 4;
    pub const COUNT_SAME_SHAPE: u8 = 5;
    pub const NEAREST_COLOR: u8 = 6;
    pub const FURTHEST_COLOR: u8 = 7;

    pub const COUNT: usize = 8;

    pub fn is_relational(q: u8) -> bool {
        q >= 3
    }

    /// Long names, also accepted by the CLI.
    pub fn name(q: u8) -> &'static str {
        [
            "horizontal",
            "vertical",
            "shape",
            "nearest-shape",
            "furthest-shape",
            "count-same-shape",
            "nearest-color",
            "furthest-color",
        ][q as usize]
    }

    /// Column labels used in accuracy tables.
    pub fn report_label(q: u8) -> &'static str {
        [
            "horizontal",
            "vertical",
            "shape",
            "cl_sh",
            "fur_sh",
            "count",
            "cl_col",
            "fur_col",
        ][q as usize]
    }

    /// Question types in accuracy-table column order.
    pub const REPORT_ORDER: [u8; 8] = [
        HORIZONTAL,
        VERTICAL,
        SHAPE,
        NEAREST_COLOR,
        NEAREST_SHAPE,
        FURTHEST_COLOR,
        FURTHEST_SHAPE,
        COUNT_SAME_SHAPE,
    ];
}

/// Unified answer vocabulary over all question types:
/// `[square, circle, left, right, up, down, count1..count6, red, green,
/// blue, orange, yellow, violet]`.
pub mod answer {
    use super::qtype;

    pub const SQUARE: u8 = 0;
    pub const CIRCLE: u8 = 1;
    pub const LEFT: u8 = 2;
    pub const RIGHT: u8 = 3;
    pub const UP: u8 = 4;
    pub const DOWN: u8 = 5;

    pub const COUNT: usize = 18;

    /// Class for "k objects" with k in 1..=6.
    pub fn count_class(k: u8) -> u8 {
        debug_assert!((1..=6).contains(&k));
        5 + k
    }

    /// Class for a color answer.
    pub fn color_class(color_id: u8) -> u8 {
        debug_assert!(color_id < 6);
        12 + color_id
    }

    /// Class for a shape answer.
    pub fn shape_class(shape_id: u8) -> u8 {
        debug_assert!(shape_id < 2);
        shape_id
    }

    pub fn name(class: u8) -> &'static str {
        [
            "square", "circle", "left", "right", "up", "down", "count1", "count2", "count3",
            "count4", "count5", "count6", "red", "green", "blue", "orange", "yellow", "violet",
        ][class as usize]
    }

    /// Classes a correct answer for `q` can come from.
    pub fn legal_for(q: u8) -> &'static [u8] {
        match q {
            qtype::HORIZONTAL => &[LEFT, RIGHT],
            qtype::VERTICAL => &[UP, DOWN],
            qtype::SHAPE | qtype::NEAREST_SHAPE | qtype::FURTHEST_SHAPE => &[SQUARE, CIRCLE],
            qtype::COUNT_SAME_SHAPE => &[6, 7, 8, 9, 10, 11],
            qtype::NEAREST_COLOR | qtype::FURTHEST_COLOR => &[12, 13, 14, 15, 16, 17],
            _ => panic!("unknown question type {}", q),
        }
    }
}
