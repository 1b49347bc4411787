//! Human-readable model configuration: `key=value` lines.
//!
//! Five required keys (`kind`, `image_size`, `conv_channels`, `mlp_hidden`,
//! `n_answers`), `#` comments and blank lines allowed, duplicates and
//! unknown keys rejected. Parse errors carry the byte offset of the
//! offending line so this parser can sit on an untrusted path.

use super::ModelKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub image_size: u16,
    pub conv_channels: [usize; 4],
    pub mlp_hidden: usize,
    pub n_answers: usize,
}

impl ModelConfig {
    /// Standard geometry: four 32-kernel conv layers, 128-wide MLPs, the
    /// 18-class answer vocabulary.
    pub fn new(kind: ModelKind, image_size: u16) -> ModelConfig {
        ModelConfig {
            kind,
            image_size,
            conv_channels: [32, 32, 32, 32],
            mlp_hidden: 128,
            n_answers: 18,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_size < 16 {
            return Err(Error::InvalidArgument(format!(
                "image_size {} below the 16 px minimum",
                self.image_size
            )));
        }
        if self.conv_channels.iter().any(|&c| c == 0 || c > 4096) {
            return Err(Error::InvalidArgument(format!(
                "conv_channels {:?} outside 1..=4096",
                self.conv_channels
            )));
        }
        if self.mlp_hidden == 0 || self.mlp_hidden > 65536 {
            return Err(Error::InvalidArgument(format!(
                "mlp_hidden {} outside 1..=65536",
                self.mlp_hidden
            )));
        }
        if self.n_answers < 2 || self.n_answers > 65536 {
            return Err(Error::InvalidArgument(format!(
                "n_answers {} outside 2..=65536",
                self.n_answers
            )));
        }
        Ok(())
    }

    /// Object vector width: final conv channels plus the two coordinates.
    pub fn object_dim(&self) -> usize {
        self.conv_channels[3] + 2
    }
}

pub fn model_config_to_string(config: &ModelConfig) -> String {
    format!(
        "kind={}\nimage_size={}\nconv_channels={},{},{},{}\nmlp_hidden={}\nn_answers={}\n",
        config.kind.tag(),
        config.image_size,
        config.conv_channels[0],
        config.conv_channels[1],
        config.conv_channels[2],
        config.conv_channels[3],
        config.mlp_hidden,
        config.n_answers,
    )
}

pub fn parse_model_config(text: &str) -> Result<ModelConfig> {
    let mut kind: Option<ModelKind> = None;
    let mut image_size: Option<u16> = None;
    let mut conv_channels: Option<[usize; 4]> = None;
    let mut mlp_hidden: Option<usize> = None;
    let mut n_answers: Option<usize> = None;

    let mut offset = 0usize;
    for raw_line in text.split('\n') {
        let at = offset;
        offset += raw_line.len() + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::format(at, format!("expected key=value, got {:?}", line)))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "kind" => {
                set_once(&mut kind, ModelKind::from_tag(value).ok_or_else(|| {
                    Error::format(at, format!("kind {:?} not sarn, rn, or baseline", value))
                })?, key, at)?;
            }
            "image_size" => {
                let v = value
                    .parse::<u16>()
                    .map_err(|_| Error::format(at, format!("image_size {:?} not a u16", value)))?;
                set_once(&mut image_size, v, key, at)?;
            }
            "conv_channels" => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 4 {
                    return Err(Error::format(
                        at,
                        format!("conv_channels needs 4 entries, got {}", parts.len()),
                    ));
                }
                let mut ch = [0usize; 4];
                for (i, p) in parts.iter().enumerate() {
                    ch[i] = p.parse::<usize>().map_err(|_| {
                        Error::format(at, format!("conv channel {:?} not an integer", p))
                    })?;
                }
                set_once(&mut conv_channels, ch, key, at)?;
            }
            "mlp_hidden" => {
                let v = value
                    .parse::<usize>()
                    .map_err(|_| Error::format(at, format!("mlp_hidden {:?} not an integer", value)))?;
                set_once(&mut mlp_hidden, v, key, at)?;
            }
            "n_answers" => {
                let v = value
                    .parse::<usize>()
                    .map_err(|_| Error::format(at, format!("n_answers {:?} not an integer", value)))?;
                set_once(&mut n_answers, v, key, at)?;
            }
            other => {
                return Err(Error::format(at, format!("unknown key {:?}", other)));
            }
        }
    }

    let config = ModelConfig {
        kind: kind.ok_or_else(|| Error::format(text.len(), "missing key: kind"))?,
        image_size: image_size.ok_or_else(|| Error::format(text.len(), "missing key: image_size"))?,
        conv_channels: conv_channels
            .ok_or_else(|| Error::format(text.len(), "missing key: conv_channels"))?,
        mlp_hidden: mlp_hidden.ok_or_else(|| Error::format(text.len(), "missing key: mlp_hidden"))?,
        n_answers: n_answers.ok_or_else(|| Error::format(text.len(), "missing key: n_answers"))?,
    };
    config
        .validate()
        .map_err(|e| Error::format(0, format!("invalid configuration: {}", e)))?;
    Ok(config)
}

fn set_once<T>(slot: &mut Option<T>, value: T, key: &str, at: usize) -> Result<()> {
    if slot.is_some() {
        return Err(Error::format(at, format!("duplicate key {:?}", key)));
    }
    *slot = Some(value);
    Ok(())
}
