use std::path::{Path, PathBuf};

use artikit_core::graph::{
    infer_structure, parse_structure_response, serialize_structure, Condition, ConnectivityGraph, HttpProvider, MockProvider, PromptTemplates,
    StructurePriorProvider,
};
use artikit_core::metrics::{evaluate_sets, CacheStatus, ObjectAsset};
use artikit_core::model::{pose_object, sample_states as draw_states, validate_object, ArticulatedObject, SampleStrategy};
use artikit_core::{Error, Result};
use artikit_diffusion::{load_checkpoint, sample, save_checkpoint, synthetic_dataset, train_toy as run_training, Matrix, TrainError};
use artikit_io::{
    load_features, load_object, load_object_with_meshes, parse_mobility_urdf_with, save_obj, save_object, save_object_with_meshes, write_atomic,
    UrdfOptions, OBJECT_EXTENSION, PCA_LATENT_DIM,
};
use serde::Serialize;

use crate::config::{CliConfig, ProviderKind};
use crate::{EvaluateArgs, GenerateArgs, InferGraphArgs, IngestArgs, SampleStatesArgs, TrainToyArgs, ValidateArgs};

const DEFAULT_SGD_STEPS: usize = 2000;

fn seed_of(flag: Option<u64>, cfg: &CliConfig) -> u64 {
    flag.or(cfg.seed).unwrap_or(0)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn invalid(o: &ArticulatedObject) -> Option<Error> {
    let report = validate_object(o);
    (!report.is_valid()).then(|| Error::Structure(report.to_string().trim_end().replace('\n', "; ")))
}

pub fn ingest(cfg: &CliConfig, a: &IngestArgs) -> Result<()> {
    let opts = UrdfOptions {
        normalize: !a.no_normalize,
        latent_dim: if a.latent { PCA_LATENT_DIM } else { 0 },
        seed: seed_of(a.seed, cfg),
        ..UrdfOptions::default()
    };
    let (object, meshes) = parse_mobility_urdf_with(&a.input, &opts)?;
    save_object_with_meshes(&object, &meshes, &a.out)?;
    log::info!("{} parts, {} meshes -> {}", object.len(), meshes.len(), a.out.display());
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Result<()> {
    let (object, meshes) = load_object_with_meshes::<f64>(&a.obj)?;
    // loading already rejects violations; what is left to show are warnings
    print!("{}", validate_object(&object));
    println!("ok: {} parts, {} meshes", object.len(), meshes.len());
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    object: String,
    strategy: String,
    seed: u64,
    m: usize,
    instances: Vec<ManifestEntry>,
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    posed: String,
    states: Vec<f64>,
}

pub fn sample_states(cfg: &CliConfig, a: &SampleStatesArgs) -> Result<()> {
    let strategy: SampleStrategy = a.strategy.parse()?;
    let seed = seed_of(a.seed, cfg);
    let (object, meshes) = load_object_with_meshes::<f64>(&a.obj)?;
    let states = draw_states(&object, a.m, seed, strategy)?;
    let width = (states.len() - 1).to_string().len().max(3);
    let mut entries = Vec::with_capacity(states.len());
    for (k, s) in states.iter().enumerate() {
        let stem = format!("instance_{k:0width$}");
        let posed = pose_object(&object, s, Some(&meshes))?;
        let posed_dir = format!("{stem}_posed");
        for part in &posed.parts {
            save_obj(&part.surface(), &a.out.join(&posed_dir).join(format!("part_{}.obj", part.part_id)))?;
        }
        let file = format!("{stem}.{OBJECT_EXTENSION}");
        save_object_with_meshes(&object.with_states(s)?, &meshes, &a.out.join(&file))?;
        entries.push(ManifestEntry { file, posed: posed_dir, states: s.0.clone() });
    }
    let manifest = Manifest { object: a.obj.display().to_string(), strategy: strategy.to_string(), seed, m: a.m, instances: entries };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&a.out.join("manifest.json"), text.as_bytes())?;
    log::info!("{} instances -> {}", states.len(), a.out.display());
    Ok(())
}

/// Canonical object files directly inside `dir`, sorted by name.
fn object_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == OBJECT_EXTENSION) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn load_set(dir: &Path) -> Result<Vec<ObjectAsset>> {
    let files = object_files(dir)?;
    if files.is_empty() {
        return Err(Error::Parameter(format!("{}: no .{OBJECT_EXTENSION} objects", dir.display())));
    }
    files
        .iter()
        .map(|f| load_object_with_meshes(f).map(|(o, m)| ObjectAsset::new(o, m)))
        .collect()
}

pub fn evaluate(cfg: &CliConfig, a: &EvaluateArgs) -> Result<()> {
    let gen = load_set(&a.gen)?;
    let reference = load_set(&a.reference)?;
    let mut section = cfg.id.clone();
    section.m = a.m.unwrap_or(section.m);
    section.points_per_object = a.points.unwrap_or(section.points_per_object);
    section.orientations = a.orientations.unwrap_or(section.orientations);
    section.por_resolution = a.por_resolution.unwrap_or(section.por_resolution);
    let id = section.id_config(seed_of(a.seed, cfg));
    let cache = if a.no_cache {
        None
    } else {
        Some(a.cache_dir.clone().or_else(|| cfg.paths.cache_dir.clone()).unwrap_or_else(|| {
            a.out.parent().unwrap_or(Path::new("")).join(".artikit-cache")
        }))
    };
    if let Some(dir) = &cache {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    let eval = evaluate_sets(&gen, &reference, &id, section.por_resolution, cache.as_deref())?;
    let misses = eval.cache.iter().filter(|c| **c == CacheStatus::Miss).count();
    if cache.is_some() {
        log::info!("distance matrices: {} cached, {misses} computed", 3 - misses);
    }
    let mut text = eval.report.to_json();
    text.push('\n');
    write_atomic(&a.out, text.as_bytes())?;
    println!("POR MMD COV 1-NNA {}", eval.report.summary_line());
    Ok(())
}

pub fn train_toy(cfg: &CliConfig, a: &TrainToyArgs) -> Result<()> {
    let seed = a.seed.or(cfg.seed);
    let dataset = match &a.data {
        Some(dir) => object_files(dir)?.iter().map(|f| load_object(f)).collect::<Result<Vec<ArticulatedObject>>>()?,
        None => synthetic_dataset(),
    };
    let graphs: Vec<ConnectivityGraph> = dataset.iter().map(ConnectivityGraph::from_object).collect();
    let model_cfg = artikit_diffusion::DenoiserConfig { seed: seed.unwrap_or(cfg.denoiser.seed), ..cfg.denoiser.clone() };
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = seed.unwrap_or(train_cfg.seed);
    train_cfg.lr = a.lr.unwrap_or(train_cfg.lr);
    train_cfg.replicas = a.replicas.unwrap_or(train_cfg.replicas);
    let steps = a.sgd_steps.or(cfg.sgd_steps).unwrap_or(DEFAULT_SGD_STEPS);
    log::info!("training on {} objects for {steps} steps, lr {}, {} replicas", dataset.len(), train_cfg.lr, train_cfg.replicas);
    let outcome = run_training(&dataset, &graphs, &model_cfg, &train_cfg, steps).map_err(|e| match e {
        TrainError::Core(e) => e,
        e @ TrainError::Diverged { .. } => Error::Range(e.to_string()),
    })?;
    let trace_path = a.trace.clone().unwrap_or_else(|| a.out.with_extension("trace.tsv"));
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    save_checkpoint(&outcome.model, &a.out)?;
    write_atomic(&trace_path, outcome.trace.to_tsv().as_bytes())?;
    let window = train_cfg.smoothing_window;
    match outcome.trace.smoothed(window) {
        Some(l) => println!("final smoothed loss {l:.6} over the last {window} steps"),
        None => println!("no steps run"),
    }
    Ok(())
}

pub fn generate(cfg: &CliConfig, a: &GenerateArgs) -> Result<()> {
    let model = load_checkpoint::<f64>(&a.ckpt)?;
    let text = std::fs::read_to_string(&a.graph).map_err(|e| io_error(&a.graph, e))?;
    let graph = parse_structure_response(&text).map_err(|e| match e {
        Error::Parse { message, offset, .. } => Error::Parse { message: format!("{}: {message}", a.graph.display()), offset, payload: None },
        e => e,
    })?;
    let cond = match &a.features {
        Some(path) => {
            let f = load_features::<f64>(path)?;
            Matrix::from_vec(f.rows, f.cols, f.data)?
        }
        None => Matrix::zeros(0, model.config.cond_dim),
    };
    let sched = cfg.train.schedule::<f64>()?;
    let object = sample(&model, &cond, &graph, &sched, seed_of(a.seed, cfg))?;
    if let Some(e) = invalid(&object) {
        return Err(e);
    }
    save_object(&object, &a.out)?;
    log::info!("{} parts -> {}", object.len(), a.out.display());
    Ok(())
}

pub fn infer_graph(cfg: &CliConfig, a: &InferGraphArgs) -> Result<()> {
    let condition = match (&a.text, &a.image) {
        (Some(t), _) => Condition::Text(t.clone()),
        (None, Some(p)) => Condition::Image(p.clone()),
        (None, None) => return Err(Error::Parameter("one of --text or --image is required".into())),
    };
    let templates = match a.prompts.as_ref().or(cfg.paths.prompts.as_ref()) {
        Some(dir) => PromptTemplates::load(dir)?,
        None => PromptTemplates::default(),
    };
    let provider: Box<dyn StructurePriorProvider> = match a.provider.unwrap_or(cfg.provider.kind) {
        ProviderKind::Mock => {
            let file = a
                .recordings
                .as_ref()
                .or(cfg.provider.recordings.as_ref())
                .ok_or_else(|| Error::Parameter("the mock provider needs --recordings".into()))?;
            Box::new(MockProvider::from_file(file).map_err(|e| match e {
                Error::Io(io) => io_error(file, io),
                e => e,
            })?)
        }
        ProviderKind::Http => {
            let mut http = cfg.provider.http_config();
            http.endpoint = a.endpoint.clone().unwrap_or(http.endpoint);
            http.model = a.model.clone().unwrap_or(http.model);
            Box::new(HttpProvider::new(http)?)
        }
    };
    let graph = infer_structure(provider.as_ref(), &condition, &templates)?;
    let mut text = serialize_structure(&graph);
    text.push('\n');
    write_atomic(&a.out, text.as_bytes())?;
    log::info!("{} nodes -> {}", graph.len(), a.out.display());
    Ok(())
}
