//! End-to-end runs on in-memory synthetic data: generate, split, train every
//! requested method, hash the codebook and sweep the observation levels.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use crate::data::{
    split, synthesize, synthetic_manifest, FeatureSequence, Split, SyntheticSpec, DEFAULT_SPLIT,
};
use crate::encoder::{Autoencoder, EncoderModel, ModelFile};
use crate::error::Result;
use crate::eval::{sweep, EvalReport, MethodBundle, ReportMetadata, DEFAULT_K};
use crate::index::{build_codebook, Codebook, CodebookMode};
use crate::regime::Regime;
use crate::training::{
    default_alphas, train_primary, train_secondary, TrainingConfig, TrainingLog,
};

/// Train, codebook and query videos.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub dataset_id: String,
    pub train: Vec<FeatureSequence>,
    pub codebook: Vec<FeatureSequence>,
    pub query: Vec<FeatureSequence>,
}

impl Splits {
    /// Class of every codebook video.
    pub fn codebook_labels(&self) -> HashMap<u64, u32> {
        self.codebook
            .iter()
            .map(|v| (v.video_id, v.class_id))
            .collect()
    }
}

/// Synthesizes `spec` and splits it stratified by class.
pub fn synthetic_splits(spec: &SyntheticSpec, ratios: [f64; 3], seed: u64) -> Result<Splits> {
    let videos = synthesize(spec)?;
    let manifest = split(&synthetic_manifest(spec, &videos), ratios, seed)?;
    let assigned: HashMap<u64, Split> = manifest
        .videos
        .iter()
        .map(|e| (e.video_id, e.split))
        .collect();
    let mut out = Splits {
        dataset_id: manifest.dataset_id.clone(),
        train: Vec::new(),
        codebook: Vec::new(),
        query: Vec::new(),
    };
    for v in videos {
        match assigned[&v.video_id] {
            Split::Train => out.train.push(v),
            Split::Codebook => out.codebook.push(v),
            Split::Query => out.query.push(v),
            Split::Unassigned => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub data: SyntheticSpec,
    pub ratios: [f64; 3],
    pub n_bits: usize,
    pub k: usize,
    pub alphas: Vec<f64>,
    /// Hyperparameters of the primary encoders; the regime is set per method.
    pub primary: TrainingConfig,
    pub secondary: TrainingConfig,
    pub methods: Vec<Regime>,
}

impl Default for Experiment {
    fn default() -> Self {
        Self {
            data: SyntheticSpec::default(),
            ratios: DEFAULT_SPLIT,
            n_bits: 32,
            k: DEFAULT_K,
            alphas: default_alphas(),
            primary: TrainingConfig::for_regime(Regime::SsthRtPlus),
            secondary: TrainingConfig::for_regime(Regime::LaCode),
            methods: Regime::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub splits: Splits,
    pub report: EvalReport,
    /// Query-side model of every method.
    pub models: BTreeMap<Regime, ModelFile>,
    pub codebooks: BTreeMap<Regime, Codebook>,
    pub logs: BTreeMap<Regime, TrainingLog>,
}

/// Runs every method of `exp` with all randomness derived from `seed`.
pub fn run_experiment(exp: &Experiment, seed: u64) -> Result<ExperimentOutput> {
    let data = SyntheticSpec {
        seed,
        ..exp.data.clone()
    };
    let splits = synthetic_splits(&data, exp.ratios, seed)?;
    let mut primaries: BTreeMap<Regime, Autoencoder> = BTreeMap::new();
    let mut models = BTreeMap::new();
    let mut logs = BTreeMap::new();

    for &method in &exp.methods {
        let base = method.primary_training();
        if let Entry::Vacant(slot) = primaries.entry(base) {
            let cfg = TrainingConfig {
                regime: base,
                n_bits: exp.n_bits,
                seed,
                ..exp.primary.clone()
            };
            log::info!("training {base} primary ({} epochs)", cfg.epochs);
            let trained = train_primary(&cfg, &splits.train)?;
            logs.insert(base, trained.log);
            slot.insert(trained.model);
        }
        let primary = &primaries[&base];
        let query_model = if method.is_secondary() {
            let cfg = TrainingConfig {
                regime: method,
                n_bits: exp.n_bits,
                seed,
                ..exp.secondary.clone()
            };
            log::info!("distilling {method} ({} epochs)", cfg.epochs);
            let (enc, log) =
                train_secondary(&cfg, &primary.encoder, &primary.decoder, &splits.train)?;
            logs.insert(method, log);
            ModelFile {
                regime: method,
                encoder: enc,
                decoder: None,
            }
        } else {
            ModelFile {
                regime: method,
                encoder: primary.encoder.clone(),
                decoder: Some(primary.decoder.clone()),
            }
        };
        models.insert(method, query_model);
    }

    let labels = splits.codebook_labels();
    let mut codebooks = BTreeMap::new();
    let mut rows = Vec::new();
    for &method in &exp.methods {
        // The codebook is always hashed by the primary encoder.
        let primary: &EncoderModel = &primaries[&method.primary_training()].encoder;
        let mode = if method.duplicated_codebook() {
            CodebookMode::Duplicated(exp.alphas.clone())
        } else {
            CodebookMode::Plain
        };
        let cb = build_codebook(primary, &splits.codebook, &mode)?;
        let bundle = MethodBundle {
            method: method.name(),
            query_encoder: &models[&method].encoder,
            codebook: &cb,
        };
        rows.extend(sweep(&bundle, &splits.query, &labels, &exp.alphas, exp.k)?);
        codebooks.insert(method, cb);
    }

    let report = EvalReport {
        metadata: ReportMetadata {
            seed,
            dataset_id: splits.dataset_id.clone(),
            timestamp: None,
        },
        rows,
    };
    Ok(ExperimentOutput {
        splits,
        report,
        models,
        codebooks,
        logs,
    })
}
