use std::collections::BTreeSet;

use super::data::PreparedDataset;
use super::metrics::ConfusionMatrix;
use super::{HarnessError, LabelScheme, Result};
use crate::nn::{adam_step, softmax_cross_entropy, AdamConfig, AdamState, FilterPair, Gradients, Network, DEFAULT_HIDDEN_WIDTH};
use crate::pcb::Clip;
use crate::tensor::RngStream;

/// Stream indices carved out of a run seed.
pub(crate) const SPLIT_STREAM: u64 = 0;
const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_width: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 20, batch_size: 8, hidden_width: DEFAULT_HIDDEN_WIDTH, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean training loss of each completed epoch.
    pub loss_trace: Vec<f64>,
    pub train_clips: usize,
}

/// Class indices of `clips` under `scheme`.
pub fn relabel(clips: &[Clip], scheme: LabelScheme) -> Vec<usize> {
    clips.iter().map(|c| scheme.class_of(c.label)).collect()
}

/// Index of the largest logit; ties resolve to the lowest index.
pub fn argmax(logits: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

/// Trains a fresh network on the training clips of the `train` videos.
///
/// Mini-batches average per-sample gradients; the sample order is reshuffled
/// every epoch. A non-finite loss aborts with [`HarnessError::Divergence`].
pub fn train_model(
    data: &PreparedDataset,
    train: &[usize],
    scheme: LabelScheme,
    pair: FilterPair,
    seed: u64,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if config.batch_size == 0 {
        return Err(HarnessError::Config("batch size must be at least 1".into()));
    }
    let root = RngStream::new(seed);
    let mut network = Network::init(
        pair,
        scheme.num_classes(),
        data.geometry(),
        config.hidden_width,
        &mut root.substream(INIT_STREAM),
    )?;

    let mut samples: Vec<(usize, usize, usize)> = Vec::new();
    for &v in train {
        let video = &data.videos[v];
        for c in 0..video.train_clip_count() {
            samples.push((v, c, scheme.class_of(video.label)));
        }
    }
    let present: BTreeSet<usize> = data.videos.iter().map(|v| scheme.class_of(v.label)).collect();
    for class in present {
        if !samples.iter().any(|s| s.2 == class) {
            return Err(HarnessError::EmptyClass(scheme.class_name(class).to_string()));
        }
    }

    let mut shuffle = root.substream(SHUFFLE_STREAM);
    let mut grads = Gradients::zeros_like(&network)?;
    let mut adam = AdamState::new(config.adam, network.parameters())?;
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let length = data.clip.length;
    for epoch in 0..config.epochs {
        shuffle.shuffle(&mut samples);
        let mut epoch_loss = 0.0f64;
        for (step, batch) in samples.chunks(config.batch_size).enumerate() {
            grads.zero();
            for &(v, c, label) in batch {
                let clip = data.videos[v].train_clip(c, length)?;
                let (logits, cache) = network.forward_cached(&clip)?;
                let (loss, grad_logits) = softmax_cross_entropy(&logits, label)?;
                if !loss.is_finite() || !grad_logits.all_finite() {
                    return Err(HarnessError::Divergence { epoch, step, loss: loss as f64 });
                }
                epoch_loss += loss as f64;
                network.backward(&clip, &cache, &grad_logits, &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f32);
            adam_step(&mut network.parameters_mut(), &grads.refs(), &mut adam)?;
        }
        let mean = epoch_loss / samples.len() as f64;
        log::debug!("{pair} {scheme:?} epoch {epoch}: loss {mean:.5}");
        loss_trace.push(mean);
    }
    Ok(TrainOutcome { network, loss_trace, train_clips: samples.len() })
}

/// Confusion matrix of `net` over every evaluation clip of the `test` videos.
pub fn evaluate(net: &Network, data: &PreparedDataset, test: &[usize], scheme: LabelScheme) -> Result<ConfusionMatrix> {
    if net.num_classes != scheme.num_classes() {
        return Err(HarnessError::Config(format!(
            "network has {} outputs but the {scheme:?} scheme has {} classes",
            net.num_classes,
            scheme.num_classes()
        )));
    }
    let mut cm = ConfusionMatrix::new(scheme.num_classes());
    for &v in test {
        let video = &data.videos[v];
        let truth = scheme.class_of(video.label);
        for c in 0..video.eval_clip_count() {
            let logits = net.forward(&video.eval_clip(c, data.clip.length)?)?;
            if !logits.all_finite() {
                return Err(HarnessError::NonFiniteOutput(video.id.clone()));
            }
            cm.add(truth, argmax(logits.data()))?;
        }
    }
    Ok(cm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcb::{synth_video, ClassLabel, ClipConfig, SynthSpec};
    use crate::tensor::Tensor;

    fn tiny() -> PreparedDataset {
        let spec = SynthSpec { per_class: 2, clip_length: 10, classes: vec![ClassLabel::Normal, ClassLabel::Arson], ..SynthSpec::default() };
        let mut samples = Vec::new();
        for &l in &spec.classes {
            for k in 0..2 {
                samples.push(synth_video(&spec, l, k).unwrap());
            }
        }
        let clip = ClipConfig { length: 10, train_stride: 10, eval_stride: 10, ..ClipConfig::default() };
        PreparedDataset::from_samples(samples, clip).unwrap()
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0; 5]), 0);
        assert_eq!(argmax(&[-1.0, -2.0]), 0);
    }

    #[test]
    fn relabel_merges_crimes() {
        let t = Tensor::zeros(&[1]).unwrap();
        let clips: Vec<Clip> = ClassLabel::ALL
            .iter()
            .map(|&label| Clip { tensor: t.clone(), source_id: String::new(), label })
            .collect();
        assert_eq!(relabel(&clips, LabelScheme::Binary), vec![0, 1, 1, 1, 1]);
        assert_eq!(relabel(&clips, LabelScheme::Multi), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn zero_epochs_returns_initial_network() {
        let data = tiny();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let out = train_model(&data, &[0, 2], LabelScheme::Binary, FilterPair::new(2, 2), 5, &cfg).unwrap();
        let init = Network::init(FilterPair::new(2, 2), 2, data.geometry(), DEFAULT_HIDDEN_WIDTH, &mut RngStream::new(5).substream(INIT_STREAM)).unwrap();
        assert_eq!(out.network, init);
        assert!(out.loss_trace.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_evaluates_all_clips() {
        let data = tiny();
        let cfg = TrainConfig { epochs: 2, batch_size: 2, ..TrainConfig::default() };
        let a = train_model(&data, &[0, 2], LabelScheme::Binary, FilterPair::new(2, 2), 9, &cfg).unwrap();
        let b = train_model(&data, &[0, 2], LabelScheme::Binary, FilterPair::new(2, 2), 9, &cfg).unwrap();
        assert_eq!(a.network.to_checkpoint_bytes(), b.network.to_checkpoint_bytes());
        assert_eq!(a.loss_trace.len(), 2);
        let cm = evaluate(&a.network, &data, &[1, 3], LabelScheme::Binary).unwrap();
        let clips: usize = [1, 3].iter().map(|&v| data.videos[v].eval_clip_count()).sum();
        assert_eq!(cm.total() as usize, clips);
        assert!(evaluate(&a.network, &data, &[1], LabelScheme::Multi).is_err());
    }

    #[test]
    fn missing_class_in_training_set() {
        let data = tiny();
        let err = train_model(&data, &[0, 1], LabelScheme::Binary, FilterPair::new(2, 2), 1, &TrainConfig::default());
        assert!(matches!(err, Err(HarnessError::EmptyClass(_))));
    }
}
