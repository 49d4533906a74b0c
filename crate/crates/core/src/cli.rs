//! Command-line front end. `main.rs` only forwards to [`run`].
//!
//! Every command writes its result to `--output` (or stdout) and a run
//! manifest to `<output>.manifest.json` (or stderr).
//!
//! Exit codes: 0 success, 2 usage, 3 data or format, 4 provider.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::candidates::{FilterConfig, PipelineError, Pos};
use crate::classify::{
    classify_fixed_vocabulary, Classifier, ClassifierConfig, ClassifyError, FixedVocabulary,
    TemplateSet,
};
use crate::dense::{self, DenseError, GridSpec, Region};
use crate::embedding::Embedding;
use crate::labelmap::{palette_color, LabelMap, LabelMapError};
use crate::metrics::{self, EmbeddingKernel, ExactKernel, MetricError, SimilarityKernel};
use crate::provider::{
    protocol, EmbeddingProvider, ImageRef, MockProvider, ProviderError, ProviderSpec, Role,
};
use crate::store::{
    self, CaptionIndex, CaptionStore, EmbeddingMatrix, IndexKind, IvfParams, StoreError,
};

#[derive(Debug, Parser)]
#[command(
    name = "vocab-free",
    version,
    about = "Vocabulary-free image classification and segmentation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Caption index directory.
    #[arg(long, global = true)]
    pub index: Option<PathBuf>,
    /// mock:SEED, tcp:HOST:PORT, or a command that speaks the protocol on stdio.
    #[arg(long, global = true, default_value = "mock:0")]
    pub provider: String,
    #[arg(long, global = true, default_value_t = crate::classify::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, global = true, default_value_t = store::DEFAULT_TOP_K)]
    pub topk: usize,
    /// One prompt template per line, each containing `{}`.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',', default_value = "2,4,8")]
    pub scales: Vec<u32>,
    /// Parts of speech kept as candidates: noun, adjective, verb.
    #[arg(long, global = true, value_delimiter = ',', default_value = "noun")]
    pub pos_keep: Vec<String>,
    /// POS lexicon replacing the builtin one.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Disable the candidate filtering pipeline.
    #[arg(long, global = true)]
    pub no_filter: bool,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON output instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a caption index from a caption file.
    BuildIndex(BuildIndexArgs),
    /// Classify images.
    Classify(ClassifyArgs),
    /// Dense segmentation of images.
    Segment(SegmentArgs),
    /// Classify externally proposed regions.
    LabelRegions(LabelRegionsArgs),
    /// Candidate names for images, without scoring.
    ProposeVocab(ImagesArgs),
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Blend a label map over its image.
    ExportOverlay(OverlayArgs),
    /// Serve the mock provider over stdio or TCP.
    #[command(hide = true)]
    ServeMock(ServeMockArgs),
    /// Write a small planted demo dataset.
    #[command(hide = true)]
    MakeDemo(MakeDemoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Exact,
    Ivf,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// Caption text file, one caption per line.
    #[arg(long)]
    pub captions: PathBuf,
    /// Precomputed VFEB embeddings; captions are embedded with the provider otherwise.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KindArg::Exact)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 64)]
    pub n_lists: usize,
    #[arg(long, default_value_t = 8)]
    pub n_probe: usize,
}

#[derive(Debug, Args)]
pub struct ImagesArgs {
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Closed-set baseline: class names, one per line.
    #[arg(long)]
    pub vocabulary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(required = true)]
    pub images: Vec<PathBuf>,
    /// Directory for full-resolution label maps (`<stem>.png` + `<stem>.json`).
    #[arg(long)]
    pub maps: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelRegionsArgs {
    /// JSON lines: {"id", "bbox" | "mask_path", "embedding"?}.
    #[arg(long)]
    pub regions: PathBuf,
    /// Source image, needed for regions without embeddings.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Write the painted label map here.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Classification,
    Segmentation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Exact,
    Provider,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Classification: CSV `id,prediction,ground_truth`. Segmentation: directory of predicted maps.
    #[arg(long)]
    pub pred: PathBuf,
    /// Segmentation: directory of ground-truth maps.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = KernelArg::Exact)]
    pub kernel: KernelArg,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Label map PNG with its `.json` table.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub opacity: f32,
}

#[derive(Debug, Args)]
pub struct ServeMockArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Listen on HOST:PORT instead of stdio.
    #[arg(long)]
    pub listen: Option<String>,
}

#[derive(Debug, Args)]
pub struct MakeDemoArgs {
    pub dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Provider(_) => 4,
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvalidParams(m) => CliError::Usage(m),
            e => data(e),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidConfig(m) => CliError::Usage(m),
            e => data(e),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::Provider(p) => CliError::Provider(p),
            ClassifyError::InvalidConfig(_) | ClassifyError::BadTemplate(_) => {
                CliError::Usage(e.to_string())
            }
            ClassifyError::Pipeline(p) => p.into(),
            ClassifyError::Store(s) => s.into(),
            e => data(e),
        }
    }
}

impl From<DenseError> for CliError {
    fn from(e: DenseError) -> Self {
        match e {
            DenseError::Provider(p) => CliError::Provider(p),
            DenseError::Classify(c) => c.into(),
            DenseError::InvalidGrid(m) => CliError::Usage(m),
            e => data(e),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Provider(p) => CliError::Provider(p),
            e => data(e),
        }
    }
}

impl From<LabelMapError> for CliError {
    fn from(e: LabelMapError) -> Self {
        data(e)
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: BTreeMap<String, serde_json::Value>,
    /// path -> sha256
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_clock_ms: u128,
}

struct Ctx<'g> {
    g: &'g Global,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl Ctx<'_> {
    fn hash_input(&mut self, path: &Path) -> Result<(), CliError> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for p in entries {
                self.hash_input(&p)?;
            }
            return Ok(());
        }
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.insert(path.display().to_string(), hex(&digest));
        Ok(())
    }

    fn provider(&self) -> Result<Box<dyn EmbeddingProvider>, CliError> {
        let spec: ProviderSpec = self.g.provider.parse().map_err(CliError::Usage)?;
        Ok(spec.open()?)
    }

    fn index(&mut self) -> Result<CaptionIndex, CliError> {
        let dir = self
            .g
            .index
            .clone()
            .ok_or_else(|| CliError::Usage("--index is required".into()))?;
        self.hash_input(&dir)?;
        Ok(CaptionIndex::load(&dir)?)
    }

    fn templates(&mut self) -> Result<TemplateSet, CliError> {
        match self.g.templates.clone() {
            None => Ok(TemplateSet::default()),
            Some(p) => {
                self.hash_input(&p)?;
                TemplateSet::from_file(&p).map_err(|e| match e {
                    ClassifyError::Io { .. } => data(e),
                    e => CliError::Usage(e.to_string()),
                })
            }
        }
    }

    fn filter(&mut self) -> Result<FilterConfig, CliError> {
        let mut cfg = if self.g.no_filter {
            FilterConfig::unfiltered()
        } else {
            FilterConfig::default()
        };
        cfg.keep_pos_tags = self
            .g
            .pos_keep
            .iter()
            .map(|s| s.parse::<Pos>().map_err(CliError::Usage))
            .collect::<Result<BTreeSet<_>, _>>()?;
        if let Some(p) = self.g.lexicon.clone() {
            self.hash_input(&p)?;
            cfg.pos_lexicon_path = Some(p);
        }
        Ok(cfg)
    }

    fn classifier_config(&mut self) -> Result<ClassifierConfig, CliError> {
        let cfg = ClassifierConfig {
            alpha: self.g.alpha,
            k: self.g.topk,
            templates: self.templates()?,
            filter: self.filter()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn grid(&self) -> Result<GridSpec, CliError> {
        GridSpec::new(&self.g.scales).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn config_snapshot(&self) -> BTreeMap<String, serde_json::Value> {
        let g = self.g;
        [
            ("alpha", json!(g.alpha)),
            ("topk", json!(g.topk)),
            ("scales", json!(g.scales)),
            ("pos_keep", json!(g.pos_keep)),
            ("filter", json!(!g.no_filter)),
            ("provider", json!(g.provider)),
            ("index", json!(g.index)),
            (
                "templates",
                json!(g
                    .templates
                    .as_ref()
                    .map_or("default".to_string(), |p| p.display().to_string())),
            ),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Writes the command result: JSON, or `text` unless `--json`.
    fn emit(&mut self, value: &serde_json::Value, text: Option<String>) -> Result<(), CliError> {
        let body = match (self.g.json, text) {
            (false, Some(t)) => t,
            _ => serde_json::to_string_pretty(value).expect("json value serializes") + "\n",
        };
        match &self.g.output {
            Some(p) => {
                std::fs::write(p, body)
                    .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                self.outputs.push(p.display().to_string());
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(body.as_bytes()).map_err(data)?;
            }
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn load_rgb(path: &Path) -> Result<image::RgbImage, CliError> {
    Ok(image::open(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .to_rgb8())
}

fn embed_images(
    provider: &dyn EmbeddingProvider,
    paths: &[PathBuf],
) -> Result<Vec<Embedding>, CliError> {
    let refs = paths
        .iter()
        .map(|p| {
            let img = load_rgb(p)?;
            Ok(ImageRef::Png(dense::encode_png(&img)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(provider.embed_images(&refs)?)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::BuildIndex(_) => "build-index",
        Command::Classify(_) => "classify",
        Command::Segment(_) => "segment",
        Command::LabelRegions(_) => "label-regions",
        Command::ProposeVocab(_) => "propose-vocab",
        Command::Evaluate(_) => "evaluate",
        Command::ExportOverlay(_) => "export-overlay",
        Command::ServeMock(_) => "serve-mock",
        Command::MakeDemo(_) => "make-demo",
    }
}

/// Parses `args` (including the program name) and runs. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.global.jobs {
            if n == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(data)?
    };
    pool.install(|| execute_in_pool(cli))
}

fn execute_in_pool(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let mut ctx = Ctx {
        g: &cli.global,
        inputs: BTreeMap::new(),
        outputs: Vec::new(),
    };
    match &cli.command {
        Command::BuildIndex(a) => build_index(&mut ctx, a)?,
        Command::Classify(a) => classify(&mut ctx, a)?,
        Command::Segment(a) => segment(&mut ctx, a)?,
        Command::LabelRegions(a) => label_regions(&mut ctx, a)?,
        Command::ProposeVocab(a) => propose_vocab(&mut ctx, a)?,
        Command::Evaluate(a) => evaluate(&mut ctx, a)?,
        Command::ExportOverlay(a) => export_overlay(&mut ctx, a)?,
        Command::ServeMock(a) => return serve_mock(a),
        Command::MakeDemo(a) => make_demo(&mut ctx, a)?,
    }
    let manifest = RunManifest {
        command: command_name(&cli.command).into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: ctx.config_snapshot(),
        inputs: ctx.inputs,
        outputs: ctx.outputs,
        wall_clock_ms: started.elapsed().as_millis(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    match &cli.global.output {
        Some(p) => {
            let mp = manifest_path(p);
            std::fs::write(&mp, text + "\n")
                .map_err(|e| CliError::Data(format!("{}: {e}", mp.display())))?;
        }
        None => eprintln!("{text}"),
    }
    Ok(())
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn build_index(ctx: &mut Ctx, a: &BuildIndexArgs) -> Result<(), CliError> {
    let dir = ctx
        .g
        .index
        .clone()
        .ok_or_else(|| CliError::Usage("--index DIR is required".into()))?;
    ctx.hash_input(&a.captions)?;
    let store = match &a.embeddings {
        Some(e) => {
            ctx.hash_input(e)?;
            store::load_caption_file(e, &a.captions)?
        }
        None => {
            let texts = store::read_captions(&a.captions)?;
            if texts.is_empty() {
                return Err(CliError::Data(format!(
                    "{} has no captions",
                    a.captions.display()
                )));
            }
            let provider = ctx.provider()?;
            let embs = provider.embed_texts(Role::JointText, &texts)?;
            let dim = embs[0].dim();
            let flat = embs.into_iter().flat_map(Embedding::into_vec).collect();
            CaptionStore::from_parts(texts, EmbeddingMatrix::new(dim, flat)?)?
        }
    };
    let (kind, params) = match a.kind {
        KindArg::Exact => (IndexKind::ExactFlat, None),
        KindArg::Ivf => (
            IndexKind::QuantizedIvf,
            Some(IvfParams {
                n_lists: a.n_lists,
                n_probe: a.n_probe,
            }),
        ),
    };
    let index = CaptionIndex::build(store, kind, params)?;
    index.save(&dir)?;
    ctx.outputs.push(dir.display().to_string());
    let summary = json!({
        "index": dir,
        "kind": index.kind(),
        "count": index.len(),
        "dim": index.dim(),
        "renormalized": index.store().renormalized(),
    });
    let text = format!(
        "{} captions, dim {}, {:?} -> {}\n",
        index.len(),
        index.dim(),
        index.kind(),
        dir.display()
    );
    ctx.emit(&summary, Some(text))
}

fn classify(ctx: &mut Ctx, a: &ClassifyArgs) -> Result<(), CliError> {
    for p in &a.images {
        ctx.hash_input(p)?;
    }
    let provider = ctx.provider()?;
    let embs = embed_images(provider.as_ref(), &a.images)?;

    if let Some(vocab_path) = &a.vocabulary {
        ctx.hash_input(vocab_path)?;
        let names: Vec<String> = std::fs::read_to_string(vocab_path)
            .map_err(|e| CliError::Data(format!("{}: {e}", vocab_path.display())))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let templates = ctx.templates()?;
        let vocab = FixedVocabulary::from_names(names, &templates, provider.as_ref())?;
        let mut rows = Vec::new();
        let mut text = String::new();
        for (p, e) in a.images.iter().zip(&embs) {
            let label = classify_fixed_vocabulary(e, &vocab)?;
            text.push_str(&format!("{}\t{label}\n", p.display()));
            rows.push(json!({"image": p, "label": label}));
        }
        return ctx.emit(&json!(rows), Some(text));
    }

    let index = ctx.index()?;
    let cfg = ctx.classifier_config()?;
    let clf = Classifier::new(&index, provider.as_ref(), cfg)?;
    let preds = clf.classify_batch(&embs)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for (p, pred) in a.images.iter().zip(preds) {
        let top = &pred.ranked[0];
        text.push_str(&format!(
            "{}\t{}\t{:.4}\n",
            p.display(),
            top.name,
            top.score.s
        ));
        rows.push(json!({"image": p, "label": top.name, "prediction": pred}));
    }
    ctx.emit(&json!(rows), Some(text))
}

fn segment(ctx: &mut Ctx, a: &SegmentArgs) -> Result<(), CliError> {
    for p in &a.images {
        ctx.hash_input(p)?;
    }
    let provider = ctx.provider()?;
    let index = ctx.index()?;
    let cfg = ctx.classifier_config()?;
    let grid = ctx.grid()?;
    let clf = Classifier::new(&index, provider.as_ref(), cfg)?;
    if let Some(dir) = &a.maps {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    let mut rows = Vec::new();
    let mut text = String::new();
    for p in &a.images {
        let img = load_rgb(p)?;
        let seg = dense::segment_dense(&img, &clf, &grid)?;
        if let Some(dir) = &a.maps {
            let stem = p
                .file_stem()
                .map_or("map".into(), |s| s.to_string_lossy().into_owned());
            let out = dir.join(format!("{stem}.png"));
            seg.upsample(img.width() as usize, img.height() as usize)
                .write(&out)?;
            ctx.outputs.push(out.display().to_string());
        }
        let labels: BTreeSet<&str> = seg.cells.iter().flatten().map(String::as_str).collect();
        text.push_str(&format!(
            "{}\t{}\n",
            p.display(),
            labels.into_iter().collect::<Vec<_>>().join(",")
        ));
        for row in &seg.cells {
            text.push_str("  ");
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        rows.push(json!({"image": p, "cells": seg.cells}));
    }
    ctx.emit(&json!(rows), Some(text))
}

fn label_regions(ctx: &mut Ctx, a: &LabelRegionsArgs) -> Result<(), CliError> {
    ctx.hash_input(&a.regions)?;
    let text = std::fs::read_to_string(&a.regions)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.regions.display())))?;
    let mut regions = Region::parse_jsonl(&text, a.regions.parent())?;
    let provider = ctx.provider()?;
    let image = match &a.image {
        Some(p) => {
            ctx.hash_input(p)?;
            Some(load_rgb(p)?)
        }
        None => None,
    };
    dense::embed_regions(&mut regions, image.as_ref(), provider.as_ref())?;
    let index = ctx.index()?;
    let cfg = ctx.classifier_config()?;
    let clf = Classifier::new(&index, provider.as_ref(), cfg)?;
    let labeled = dense::label_regions(&regions, &clf)?;
    if let Some(map_path) = &a.map {
        let img = image
            .as_ref()
            .ok_or_else(|| CliError::Usage("--map needs --image".into()))?;
        dense::paint_regions(&regions, &labeled, img.width(), img.height())?.write(map_path)?;
        ctx.outputs.push(map_path.display().to_string());
    }
    let mut out = String::new();
    let rows: Vec<serde_json::Value> = labeled
        .iter()
        .map(|(id, pred)| {
            out.push_str(&format!("{id}\t{}\n", pred.top1()));
            json!({"id": id, "label": pred.top1(), "prediction": pred})
        })
        .collect();
    ctx.emit(&json!(rows), Some(out))
}

fn propose_vocab(ctx: &mut Ctx, a: &ImagesArgs) -> Result<(), CliError> {
    for p in &a.images {
        ctx.hash_input(p)?;
    }
    let provider = ctx.provider()?;
    let index = ctx.index()?;
    let filter = ctx.filter()?;
    let embs = embed_images(provider.as_ref(), &a.images)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for (p, e) in a.images.iter().zip(&embs) {
        let names = dense::propose_vocabulary(e, &index, ctx.g.topk, &filter)?;
        text.push_str(&format!("{}\t{}\n", p.display(), names.join(",")));
        rows.push(json!({"image": p, "vocabulary": names}));
    }
    ctx.emit(&json!(rows), Some(text))
}

fn evaluate(ctx: &mut Ctx, a: &EvaluateArgs) -> Result<(), CliError> {
    ctx.hash_input(&a.pred)?;
    let provider;
    let embedding_kernel;
    let kernel: &dyn SimilarityKernel = match a.kernel {
        KernelArg::Exact => &ExactKernel,
        KernelArg::Provider => {
            provider = ctx.provider()?;
            embedding_kernel = EmbeddingKernel::new(provider.as_ref())?;
            &embedding_kernel
        }
    };
    let report = match a.task {
        TaskArg::Classification => {
            let rows = metrics::read_classification_csv(&a.pred)?;
            metrics::evaluate_classification(&rows, kernel)?
        }
        TaskArg::Segmentation => {
            let gt =
                a.gt.as_ref()
                    .ok_or_else(|| CliError::Usage("segmentation needs --gt DIR".into()))?;
            ctx.hash_input(gt)?;
            let batch: Vec<metrics::SegPair> = metrics::read_segmentation_dirs(&a.pred, gt)?
                .into_iter()
                .map(|(_, p)| p)
                .collect();
            metrics::evaluate_segmentation(&batch, kernel)?
        }
    };
    let text: String = report
        .metrics
        .iter()
        .map(|(k, v)| format!("{k}\t{v:.4}\n"))
        .collect();
    ctx.emit(
        &serde_json::to_value(&report).expect("report serializes"),
        Some(text),
    )
}

fn export_overlay(ctx: &mut Ctx, a: &OverlayArgs) -> Result<(), CliError> {
    let out = ctx
        .g
        .output
        .clone()
        .ok_or_else(|| CliError::Usage("export-overlay needs --output PNG".into()))?;
    if !(0.0..=1.0).contains(&a.opacity) {
        return Err(CliError::Usage("--opacity must be in [0, 1]".into()));
    }
    ctx.hash_input(&a.image)?;
    ctx.hash_input(&a.labels)?;
    let img = load_rgb(&a.image)?;
    let labels =
        LabelMap::read(&a.labels)?.resize_nearest(img.width() as usize, img.height() as usize);
    let names = labels.labels();
    let color: BTreeMap<&str, [u8; 3]> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (*n, palette_color(i)))
        .collect();
    let blended = image::RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let base = img.get_pixel(x, y).0;
        match labels.get(x as usize, y as usize) {
            None => image::Rgb(base),
            Some(l) => {
                let c = color[l];
                image::Rgb(std::array::from_fn(|i| {
                    (base[i] as f32 * (1.0 - a.opacity) + c[i] as f32 * a.opacity).round() as u8
                }))
            }
        }
    });
    blended
        .save(&out)
        .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    ctx.outputs.push(out.display().to_string());
    let legend: BTreeMap<&str, String> = color
        .iter()
        .map(|(n, c)| (*n, format!("#{}", hex(c))))
        .collect();
    log::info!(
        "legend: {}",
        serde_json::to_string(&legend).expect("legend serializes")
    );
    Ok(())
}

fn serve_mock(a: &ServeMockArgs) -> Result<(), CliError> {
    let provider = MockProvider::new(a.seed);
    match &a.listen {
        None => {
            let stdin = std::io::stdin();
            protocol::serve(&provider, stdin.lock(), std::io::stdout().lock()).map_err(data)
        }
        Some(addr) => {
            let listener =
                TcpListener::bind(addr).map_err(|e| CliError::Usage(format!("{addr}: {e}")))?;
            eprintln!("listening on {}", listener.local_addr().map_err(data)?);
            std::thread::scope(|s| {
                for stream in listener.incoming() {
                    let Ok(stream) = stream else { continue };
                    let provider = &provider;
                    s.spawn(move || {
                        let Ok(reader) = stream.try_clone() else {
                            return;
                        };
                        if let Err(e) = protocol::serve(provider, BufReader::new(reader), stream) {
                            log::warn!("connection closed: {e}");
                        }
                    });
                }
            });
            Ok(())
        }
    }
}

fn make_demo(ctx: &mut Ctx, a: &MakeDemoArgs) -> Result<(), CliError> {
    use crate::fixtures;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let mock = MockProvider::new(0);
    let concepts = ["cat", "dog", "bird", "car", "tree"];
    let io = |p: &Path, e: &dyn std::fmt::Display| CliError::Data(format!("{}: {e}", p.display()));
    let images = a.dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| io(&images, &e))?;
    let captions = fixtures::planted_captions(&concepts, 60, &mut rng);
    let cap_path = a.dir.join("captions.txt");
    std::fs::write(&cap_path, captions.join("\n") + "\n").map_err(|e| io(&cap_path, &e))?;
    let mut written = vec![cap_path.display().to_string()];
    for c in concepts {
        let p = images.join(format!("{c}.png"));
        fixtures::solid_image(fixtures::concept_color(&mock, c), 64, 64, 20, &mut rng)
            .save(&p)
            .map_err(|e| io(&p, &e))?;
        written.push(p.display().to_string());
    }
    let split = images.join("cat_dog.png");
    let (cat, dog) = (
        fixtures::concept_color(&mock, "cat"),
        fixtures::concept_color(&mock, "dog"),
    );
    fixtures::split_image(cat, dog, 128, 128, 20, &mut rng)
        .save(&split)
        .map_err(|e| io(&split, &e))?;
    written.push(split.display().to_string());
    ctx.outputs.extend(written.iter().cloned());
    let text = written.iter().map(|w| format!("{w}\n")).collect();
    ctx.emit(&json!(written), Some(text))
}
