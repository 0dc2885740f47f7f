//! Experiment stages: generate, train, evaluate, analyze, and the full run.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use hyperhier_core::analysis::{
    class_norm_stats, concavity_scan, default_grid, interclass_distance_cv, mean_cv, plane_distance_cv,
    scan_is_concave, LabeledEmbeddings,
};
use hyperhier_core::metrics::{accumulate, CalibrationBins, ConfusionMatrix, CweceNormalization, PredictionBatch};
use hyperhier_core::taxonomy::{level_posterior, shuffle_hierarchy, LabelTree};
use hyperhier_core::train::{train_flat, FlatModel, TrainOutcome};

use crate::config::RunConfig;
use crate::hheb::{self, EmbeddingDump};
use crate::report::{
    write_json, AnalysisReport, ConcavityEntry, ConcavityReport, CvEntry, MetricsReport, NormEntry,
};
use crate::synthetic::{generate_synthetic, SyntheticData};
use crate::{checkpoint, treefile, HarnessError};

pub const TRAIN_FILE: &str = "train.hheb";
pub const TEST_FILE: &str = "test.hheb";
pub const TREE_FILE: &str = "tree.txt";
pub const MODEL_FILE: &str = "model.ckpt";
pub const CHILD_METRICS_FILE: &str = "metrics_child.json";
pub const PARENT_METRICS_FILE: &str = "metrics_parent.json";
pub const ANALYSIS_FILE: &str = "analysis.json";

/// Allowed deviation of a posterior's sum from one.
const POSTERIOR_SUM_TOLERANCE: f64 = 1e-9;

/// The label tree of a run: the configured one, or its seeded shuffle.
pub fn experiment_tree(cfg: &RunConfig) -> Result<LabelTree, HarnessError> {
    match cfg.shuffle_tree_seed {
        Some(seed) => Ok(shuffle_hierarchy(&cfg.synthetic.tree, seed)?),
        None => Ok(cfg.synthetic.tree.clone()),
    }
}

pub fn generate(cfg: &RunConfig) -> Result<SyntheticData, HarnessError> {
    let mut data = generate_synthetic(&cfg.synthetic)?;
    data.tree = experiment_tree(cfg)?;
    info!(
        "generated {} train / {} test samples over {} classes",
        data.train.len(),
        data.test.len(),
        data.tree.level_size(0)
    );
    Ok(data)
}

pub fn train(cfg: &RunConfig, data: &LabeledEmbeddings, classes: usize) -> Result<TrainOutcome, HarnessError> {
    info!(
        "training {} head for {} steps (batch {})",
        cfg.geometry.name(),
        cfg.train.steps,
        cfg.train.batch_size
    );
    let out = train_flat(data, classes, cfg.geometry, &cfg.ball, &cfg.train)?;
    if let Some(last) = out.loss_trace.last() {
        info!("final mini-batch loss {last:.6}");
    }
    Ok(out)
}

fn check_posterior(p: &[f64], sample: usize, level: usize) -> Result<(), HarnessError> {
    let sum: f64 = p.iter().sum();
    if !((sum - 1.0).abs() <= POSTERIOR_SUM_TOLERANCE) {
        return Err(HarnessError::Invariant(format!(
            "posterior of sample {sample} at level {level} sums to {sum}"
        )));
    }
    Ok(())
}

/// Metrics at every tree level, leaves first. Higher-level posteriors are
/// sums of leaf posteriors; every labelled sample must land in each
/// level's confusion matrix exactly once.
pub fn evaluate(
    model: &FlatModel,
    test: &LabeledEmbeddings,
    tree: &LabelTree,
    bins: usize,
    norm: CweceNormalization,
) -> Result<Vec<MetricsReport>, HarnessError> {
    let classes = tree.level_size(0);
    if model.num_classes() != classes {
        return Err(HarnessError::Config(format!(
            "model has {} classes but the tree has {classes} leaves",
            model.num_classes()
        )));
    }
    let leaf_posteriors = test
        .points()
        .iter()
        .map(|x| model.posteriors(x))
        .collect::<Result<Vec<_>, _>>()?;

    let mut reports = Vec::with_capacity(tree.num_levels());
    for level in 0..tree.num_levels() {
        let mut posteriors = Vec::with_capacity(test.len());
        let mut labels = Vec::with_capacity(test.len());
        for (i, (p, &y)) in leaf_posteriors.iter().zip(test.labels()).enumerate() {
            let q = level_posterior(p, tree, level)?;
            check_posterior(&q, i, level)?;
            posteriors.push(q);
            labels.push(Some(tree.ancestor_label(y, level)?));
        }
        let k = tree.level_size(level);
        let batch = PredictionBatch::new(posteriors, labels)?;
        let mut cm = ConfusionMatrix::new(k);
        let mut cb = CalibrationBins::new(k, bins)?;
        accumulate(&batch, &mut cm, &mut cb)?;
        if cm.total() != test.len() as u64 || cb.samples() != test.len() as u64 {
            return Err(HarnessError::Invariant(format!(
                "level {level} counted {} of {} samples",
                cm.total(),
                test.len()
            )));
        }
        let report = MetricsReport::from_accumulators(level, tree.names(level), &cm, &cb, norm)?;
        info!(
            "level {level}: mIoU {:.4} mAcc {:.4} aAcc {:.4} cwECE {:.4}",
            report.miou, report.macc, report.aacc, report.cwece
        );
        reports.push(report);
    }
    Ok(reports)
}

/// Norm statistics, inter-class distance CVs and distance-to-surface CVs of
/// the model's embeddings of `data`, plus a concavity scan at the origin.
pub fn analyze(
    model: &FlatModel,
    data: &LabeledEmbeddings,
    pair_cap: usize,
    seed: u64,
) -> Result<AnalysisReport, HarnessError> {
    let classes = model.num_classes();
    let embedded = model.embed_all(data)?;
    let norms = class_norm_stats(&embedded, classes)?;
    let mut embedding_cv = Vec::new();
    let mut plane_cv = Vec::new();
    for anchor in 0..classes {
        embedding_cv.extend(interclass_distance_cv(&embedded, anchor, classes, pair_cap, seed)?);
        plane_cv.extend(plane_distance_cv(&embedded, model, anchor)?);
    }
    let rows = concavity_scan(0.0, 0.0, &default_grid())?;
    let report = AnalysisReport {
        geometry: model.geometry().name(),
        norm_stats: NormEntry::from_summaries(&norms),
        mean_embedding_cv: mean_cv(&embedding_cv),
        mean_plane_cv: mean_cv(&plane_cv),
        embedding_cv: embedding_cv.iter().map(CvEntry::from).collect(),
        plane_cv: plane_cv.iter().map(CvEntry::from).collect(),
        concavity: ConcavityReport {
            norm1: 0.0,
            norm2: 0.0,
            concave: scan_is_concave(&rows),
            rows: rows.iter().map(ConcavityEntry::from).collect(),
        },
    };
    info!(
        "mean embedding CV {:?}, mean plane CV {:?}",
        report.mean_embedding_cv, report.mean_plane_cv
    );
    Ok(report)
}

/// Everything a full run produced, kept in memory for callers.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub data: SyntheticData,
    pub outcome: TrainOutcome,
    pub child: MetricsReport,
    pub parent: MetricsReport,
    pub analysis: AnalysisReport,
}

pub fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

fn parent_level(tree: &LabelTree) -> Result<usize, HarnessError> {
    if tree.num_levels() < 2 {
        return Err(HarnessError::Config("the label tree needs a parent level".into()));
    }
    Ok(1)
}

pub fn write_data(dir: &Path, data: &SyntheticData) -> Result<(), HarnessError> {
    let dim = data.means[0].len();
    hheb::write_file(&dir.join(TRAIN_FILE), &EmbeddingDump::from_embeddings(&data.train, dim))?;
    hheb::write_file(&dir.join(TEST_FILE), &EmbeddingDump::from_embeddings(&data.test, dim))?;
    treefile::write_tree(&dir.join(TREE_FILE), &data.tree)
}

/// Reads an embedding dump, dropping samples carrying the ignore label.
pub fn read_data(path: &Path, ignore: u32) -> Result<LabeledEmbeddings, HarnessError> {
    Ok(hheb::read_file(path)?.into_embeddings(Some(ignore))?)
}

pub fn write_metrics(dir: &Path, reports: &[MetricsReport], tree: &LabelTree) -> Result<(), HarnessError> {
    let parent = parent_level(tree)?;
    write_json(&dir.join(CHILD_METRICS_FILE), &reports[0])?;
    write_json(&dir.join(PARENT_METRICS_FILE), &reports[parent])
}

/// Generate, train, evaluate both levels and analyze, writing every artifact
/// into the configured output directory.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunOutput, HarnessError> {
    let dir = cfg.out_dir.clone();
    ensure_dir(&dir)?;
    let data = generate(cfg)?;
    let parent = parent_level(&data.tree)?;
    write_data(&dir, &data)?;

    let outcome = train(cfg, &data.train, data.tree.level_size(0))?;
    checkpoint::write_checkpoint(&dir.join(MODEL_FILE), &outcome.model, &cfg.ball)?;

    let mut reports = evaluate(&outcome.model, &data.test, &data.tree, cfg.bins, cfg.cwece_norm)?;
    write_metrics(&dir, &reports, &data.tree)?;

    let analysis = analyze(&outcome.model, &data.test, cfg.pair_cap, cfg.seed)?;
    write_json(&dir.join(ANALYSIS_FILE), &analysis)?;
    info!("wrote reports to {}", dir.display());

    let parent_report = reports.swap_remove(parent);
    let child = reports.swap_remove(0);
    Ok(RunOutput {
        out_dir: dir,
        data,
        outcome,
        child,
        parent: parent_report,
        analysis,
    })
}
