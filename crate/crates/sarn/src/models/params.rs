//! Parameter construction, naming, and checkpoint exchange.

use super::{ModelConfig, ModelKind, QUESTION_DIM};
use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::tensor::{he_uniform, Checkpoint, ParamId, ParamSet, Tensor};

#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvIds {
    pub w: ParamId,
    pub b: ParamId,
    pub gamma: ParamId,
    pub beta: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FcIds {
    pub w: ParamId,
    pub b: ParamId,
}

/// One model's parameters: the conv encoder, the optional attention MLP,
/// the relation MLP, and the answer head, all registered in a fixed order
/// under stable names so checkpoints are portable across runs.
pub struct ModelParams {
    config: ModelConfig,
    pub set: ParamSet,
    pub(crate) conv: [ConvIds; 4],
    pub(crate) attn: Option<[FcIds; 3]>,
    pub(crate) rel: [FcIds; 3],
    pub(crate) head: [FcIds; 3],
}

/// Width of one relation-MLP input row.
pub(crate) fn g_input_dim(config: &ModelConfig) -> usize {
    match config.kind {
        ModelKind::Sarn | ModelKind::Rn => 2 * config.object_dim() + QUESTION_DIM,
        ModelKind::Baseline => config.object_dim() + QUESTION_DIM,
    }
}

impl ModelParams {
    /// Fresh parameters: He-uniform weights drawn from a dedicated stream of
    /// `seed`, zero biases, identity layer-norm affines. The draw order is
    /// the registration order, so (config, seed) pins every value.
    pub fn new(config: ModelConfig, seed: u64) -> Result<ModelParams> {
        config.validate()?;
        let mut rng = Pcg32::new(seed, 0);
        let mut set = ParamSet::new();
        let h = config.mlp_hidden;

        let mut conv = Vec::with_capacity(4);
        let mut c_in = 3usize;
        for (l, &c_out) in config.conv_channels.iter().enumerate() {
            let w = set.add(
                &format!("cnn.conv{}.w", l + 1),
                he_uniform(&[c_out, c_in, 3, 3], c_in * 9, &mut rng),
            );
            let b = set.add(&format!("cnn.conv{}.b", l + 1), Tensor::zeros(&[c_out]));
            let gamma = set.add(
                &format!("cnn.ln{}.gamma", l + 1),
                Tensor::new(vec![c_out], vec![1.0; c_out]),
            );
            let beta = set.add(&format!("cnn.ln{}.beta", l + 1), Tensor::zeros(&[c_out]));
            conv.push(ConvIds { w, b, gamma, beta });
            c_in = c_out;
        }
        let conv: [ConvIds; 4] = conv.try_into().unwrap();

        let fc_stack = |set: &mut ParamSet, rng: &mut Pcg32, prefix: &str, dims: [(usize, usize); 3]| {
            let mut out = Vec::with_capacity(3);
            for (i, &(d_in, d_out)) in dims.iter().enumerate() {
                let w = set.add(
                    &format!("{}.fc{}.w", prefix, i + 1),
                    he_uniform(&[d_out, d_in], d_in, rng),
                );
                let b = set.add(&format!("{}.fc{}.b", prefix, i + 1), Tensor::zeros(&[d_out]));
                out.push(FcIds { w, b });
            }
            let out: [FcIds; 3] = out.try_into().unwrap();
            out
        };

        let attn = match config.kind {
            ModelKind::Sarn => Some(fc_stack(
                &mut set,
                &mut rng,
                "attn",
                [(config.object_dim() + QUESTION_DIM, h), (h, h), (h, 1)],
            )),
            ModelKind::Rn | ModelKind::Baseline => None,
        };
        let rel = fc_stack(
            &mut set,
            &mut rng,
            "rel",
            [(g_input_dim(&config), h), (h, h), (h, h)],
        );
        let head = fc_stack(
            &mut set,
            &mut rng,
            "head",
            [(h, h), (h, h), (h, config.n_answers)],
        );

        Ok(ModelParams {
            config,
            set,
            conv,
            attn,
            rel,
            head,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Snapshot of every parameter group, in registration order.
    pub fn to_checkpoint(&self, step: u64) -> Checkpoint {
        Checkpoint {
            step,
            groups: self
                .set
                .iter()
                .map(|(_, name, t)| (name.to_string(), Tensor::new(t.shape().to_vec(), t.data().to_vec())))
                .collect(),
        }
    }

    /// Rebuilds parameters from a checkpoint.
    ///
    /// Every group the architecture defines must be present with its exact
    /// shape; groups named `<param>.m` / `<param>.v` are optimizer moments
    /// and are ignored here; anything else is rejected, so a checkpoint for
    /// a different architecture cannot load silently.
    pub fn from_checkpoint(config: ModelConfig, ckpt: &Checkpoint) -> Result<ModelParams> {
        let mut params = ModelParams::new(config, 0)?;
        for (_, name, tensor) in params.set.iter_mut() {
            let stored = ckpt.find(name).ok_or_else(|| {
                Error::InvalidState(format!("checkpoint lacks parameter group {:?}", name))
            })?;
            if stored.shape() != tensor.shape() {
                return Err(Error::InvalidState(format!(
                    "group {:?} has shape {:?}, model expects {:?}",
                    name,
                    stored.shape(),
                    tensor.shape()
                )));
            }
            tensor.data_mut().copy_from_slice(stored.data());
        }
        for (name, _) in &ckpt.groups {
            let base = name
                .strip_suffix(".m")
                .or_else(|| name.strip_suffix(".v"))
                .unwrap_or(name);
            if params.set.id_of(base).is_none() {
                return Err(Error::InvalidState(format!(
                    "checkpoint group {:?} does not belong to this architecture",
                    name
                )));
            }
        }
        Ok(params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_inventory_matches_architecture() {
        let sarn = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 75), 1).unwrap();
        let names: Vec<&str> = sarn.set.iter().map(|(_, n, _)| n).collect();
        assert_eq!(names.len(), 16 + 6 + 6 + 6);
        assert!(names.contains(&"cnn.conv1.w"));
        assert!(names.contains(&"attn.fc3.b"));
        assert_eq!(names[0], "cnn.conv1.w");

        let rn = ModelParams::new(ModelConfig::new(ModelKind::Rn, 75), 1).unwrap();
        assert!(rn.set.id_of("attn.fc1.w").is_none());
        assert_eq!(rn.set.iter().count(), 16 + 6 + 6);

        // Relation input widths: paired vs single objects.
        let rel_w = rn.set.get(rn.rel[0].w);
        assert_eq!(rel_w.shape(), &[128, 2 * 34 + 14]);
        let base = ModelParams::new(ModelConfig::new(ModelKind::Baseline, 75), 1).unwrap();
        assert_eq!(base.set.get(base.rel[0].w).shape(), &[128, 34 + 14]);
        assert_eq!(base.set.get(base.head[2].w).shape(), &[18, 128]);
    }

    #[test]
    fn same_seed_same_weights_different_seed_different() {
        let a = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 64), 9).unwrap();
        let b = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 64), 9).unwrap();
        let c = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 64), 10).unwrap();
        let w = |p: &ModelParams| p.set.get(p.rel[0].w).data().to_vec();
        assert_eq!(w(&a), w(&b));
        assert_ne!(w(&a), w(&c));
    }

    #[test]
    fn checkpoint_round_trip_restores_every_group() {
        let config = ModelConfig::new(ModelKind::Sarn, 64);
        let params = ModelParams::new(config, 3).unwrap();
        let ckpt = params.to_checkpoint(17);
        assert_eq!(ckpt.step, 17);
        let back = ModelParams::from_checkpoint(config, &ckpt).unwrap();
        for ((_, n1, t1), (_, n2, t2)) in params.set.iter().zip(back.set.iter()) {
            assert_eq!(n1, n2);
            assert_eq!(t1.data(), t2.data());
        }
    }

    #[test]
    fn checkpoint_for_another_architecture_is_rejected() {
        let sarn = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 64), 3).unwrap();
        let rn_config = ModelConfig::new(ModelKind::Rn, 64);
        // SARN checkpoints carry attention groups the RN does not define.
        match ModelParams::from_checkpoint(rn_config, &sarn.to_checkpoint(0)) {
            Err(Error::InvalidState(msg)) => assert!(msg.contains("attn"), "{}", msg),
            other => panic!("expected invalid-state, got {:?}", other.map(|_| ())),
        }
        // And an RN checkpoint is missing groups the SARN requires.
        let rn = ModelParams::new(rn_config, 3).unwrap();
        let sarn_config = ModelConfig::new(ModelKind::Sarn, 64);
        assert!(matches!(
            ModelParams::from_checkpoint(sarn_config, &rn.to_checkpoint(0)),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn moment_groups_are_tolerated_shape_mismatch_is_not() {
        let config = ModelConfig::new(ModelKind::Baseline, 64);
        let params = ModelParams::new(config, 3).unwrap();
        let mut ckpt = params.to_checkpoint(5);
        ckpt.groups.push((
            "rel.fc1.w.m".into(),
            Tensor::zeros(&[128, 48]),
        ));
        ckpt.groups.push((
            "rel.fc1.w.v".into(),
            Tensor::zeros(&[128, 48]),
        ));
        assert!(ModelParams::from_checkpoint(config, &ckpt).is_ok());

        ckpt.groups[0].1 = Tensor::zeros(&[32, 4, 3, 3]);
        assert!(matches!(
            ModelParams::from_checkpoint(config, &ckpt),
            Err(Error::InvalidState(_))
        ));
    }
}
