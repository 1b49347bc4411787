//! The fixed question battery and its vector encoding.

use super::vocab::qtype;
use super::Question;

/// Question vectors are a color one-hot followed by a type one-hot.
pub const QUESTION_ENCODING_DIM: usize = 6 + qtype::COUNT;

/// Every image carries the same 48 questions: for each color 0..6 (major),
/// each question type 0..8 (minor).
pub fn generate_questions() -> Vec<Question> {
    let mut out = Vec::with_capacity(48);
    for color in 0..6u8 {
        for q in 0..qtype::COUNT as u8 {
            out.push(Question { color, qtype: q });
        }
    }
    out
}

/// One-hot encoding consumed by the models.
pub fn encode_question(question: Question) -> [f32; QUESTION_ENCODING_DIM] {
    debug_assert!(question.color < 6 && (question.qtype as usize) < qtype::COUNT);
    let mut v = [0.0; QUESTION_ENCODING_DIM];
    v[question.color as usize] = 1.0;
    v[6 + question.qtype as usize] = 1.0;
    v
}
