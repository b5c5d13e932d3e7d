use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use napkit_core::cluster::ClusterParams;
use napkit_core::export::{export, fingerprint_inputs, ExportRun};
use napkit_core::pipeline::{extract, ActivationSource};
use napkit_core::study::{run_study, write_csv, StudyConfig};
use napkit_core::synthetic::{bars_dataset, toy_bar_model, IMAGE_SIZE};
use napkit_core::tensor::{convert_npy, tensor_from_npy};
use napkit_core::{
    load_metadata, load_model, load_tensor, save_tensor, ActivationTensor, MetadataTable, NapError,
    Result,
};

use crate::args::{
    ClusterArgs, ConvertArgs, ExtractArgs, ServeArgs, SourceArgs, StudyArgs, SynthArgs,
};
use crate::config::{pick, pick_list, FileConfig};

struct Source {
    activations: ActivationSource,
    /// Byte blobs identifying the inputs, for the export fingerprint.
    blobs: Vec<Vec<u8>>,
    model_name: Option<String>,
    metadata: MetadataTable,
}

fn read_tensor(path: &Path) -> Result<ActivationTensor> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("npy"))
    {
        let bytes = fs::read(path).map_err(|e| NapError::io(path.display().to_string(), e))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        tensor_from_npy(stem, &bytes)
    } else {
        load_tensor(path)
    }
}

fn load_source(args: &SourceArgs, cfg: &FileConfig) -> Result<Source> {
    let model = pick(args.model.clone(), cfg.model.clone());
    let inputs = pick(args.inputs.clone(), cfg.inputs.clone());
    let tensors = pick_list(args.tensors.clone(), cfg.tensors.clone());
    let metadata = match pick(args.metadata.clone(), cfg.metadata.clone()) {
        Some(p) => load_metadata(p)?,
        None => MetadataTable::new(),
    };
    let (activations, blobs, model_name) = match (model, inputs, tensors.is_empty()) {
        (Some(model_path), Some(inputs_path), true) => {
            let model = load_model(&model_path)?;
            let inputs = read_tensor(&inputs_path)?;
            let blobs = vec![model.to_json().into_bytes(), inputs.to_bytes()];
            let name = model.name().to_string();
            (ActivationSource::Model { model, inputs }, blobs, Some(name))
        }
        (None, None, false) => {
            let ts = tensors
                .iter()
                .map(|p| read_tensor(p))
                .collect::<Result<Vec<_>>>()?;
            let blobs = ts.iter().map(ActivationTensor::to_bytes).collect();
            (ActivationSource::Tensors(ts), blobs, None)
        }
        _ => {
            return Err(NapError::Param(
                "give either --model with --inputs, or --tensors (one file per layer)".into(),
            ))
        }
    };
    if !metadata.is_empty() {
        let n = activations.n_samples();
        if let Some(r) = metadata.iter().find(|r| r.sample_id >= n) {
            return Err(NapError::Data(format!(
                "metadata names sample {} but there are only {n} inputs",
                r.sample_id
            )));
        }
    }
    Ok(Source {
        activations,
        blobs,
        model_name,
        metadata,
    })
}

fn cluster_params(args: &ClusterArgs, cfg: &FileConfig) -> Result<ClusterParams> {
    let mut p = ClusterParams::default();
    if let Some(v) = pick(args.min_cluster_size, cfg.min_cluster_size) {
        p.min_cluster_size = v;
    }
    if let Some(v) = pick(args.min_samples, cfg.min_samples) {
        p.min_samples = v;
    }
    if let Some(s) = pick(args.selection.clone(), cfg.selection.clone()) {
        p.selection = s.parse()?;
    }
    p.validate()?;
    Ok(p)
}

/// `--created-at`, else `SOURCE_DATE_EPOCH`, else the current time.
fn created_at(flag: Option<String>) -> Result<String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    let now = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: i64 = s.trim().parse().map_err(|_| {
                NapError::Param(format!("SOURCE_DATE_EPOCH is not an integer: '{s}'"))
            })?;
            chrono::DateTime::from_timestamp(secs, 0)
                .ok_or_else(|| NapError::Param(format!("SOURCE_DATE_EPOCH out of range: {secs}")))?
        }
        Err(_) => chrono::Utc::now(),
    };
    Ok(now.format("%Y-%m-%dT%H:%M:%SZ").to_string())
}

pub fn extract_cmd(args: ExtractArgs) -> Result<()> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let source = load_source(&args.source, &cfg)?;
    let params = cluster_params(&args.cluster, &cfg)?;
    let layers = pick_list(args.layers, cfg.layers);
    if layers.is_empty() {
        return Err(NapError::Param("no layers given (--layers)".into()));
    }
    let agg = pick(args.agg, cfg.agg)
        .unwrap_or_else(|| "mean".into())
        .parse()?;
    let out = pick(args.out, cfg.out)
        .ok_or_else(|| NapError::Param("no output directory given (--out)".into()))?;
    let model_id = pick(args.model_id, cfg.model_id)
        .or(source.model_name.clone())
        .ok_or_else(|| NapError::Param("--model-id is required with --tensors".into()))?;
    let created_at = created_at(pick(args.created_at, cfg.created_at))?;

    let results = extract(
        &source.activations,
        &model_id,
        &layers,
        agg,
        &params,
        &source.metadata,
    )?;
    let run = ExportRun {
        model_id,
        created_at,
        input_fingerprint: fingerprint_inputs(source.blobs.iter().map(Vec::as_slice)),
        layers: results.into_iter().map(|r| (r.napset, r.scales)).collect(),
        metadata: source.metadata,
        assets_source: pick(args.assets, cfg.assets),
    };
    let manifest = export(&run, &out)?;
    for l in &manifest.layers {
        eprintln!(
            "{}: {} NAPs, {} noise of {} samples",
            l.layer_id, l.n_naps, l.n_noise, l.n_samples
        );
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

pub fn study_cmd(args: StudyArgs) -> Result<()> {
    let cfg = FileConfig::load(args.config.as_deref())?;
    let source = load_source(&args.source, &cfg)?;
    let cluster = cluster_params(&args.cluster, &cfg)?;
    let aggregations = pick_list(args.aggs, cfg.aggs)
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<_>>>()?;
    let config = StudyConfig {
        aggregations,
        sizes: pick_list(args.sizes, cfg.sizes),
        seed: pick(args.seed, cfg.seed).unwrap_or(0),
        layers: pick_list(args.layers, cfg.layers),
        cluster,
    };
    let rows = run_study(&config, &source.activations, &source.metadata)?;
    match pick(args.out, cfg.out) {
        Some(path) => {
            let file =
                fs::File::create(&path).map_err(|e| NapError::io(path.display().to_string(), e))?;
            write_csv(&rows, file)
        }
        None => write_csv(&rows, std::io::stdout().lock()),
    }
}

pub fn serve_cmd(args: ServeArgs) -> Result<()> {
    let store = napkit_server::Store::open(&args.dir)?;
    let addr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|_| NapError::Param(format!("bad listen address {}:{}", args.host, args.port)))?;
    let rt = runtime()?;
    rt.block_on(async move {
        let listener = napkit_server::bind(addr).await?;
        let bound = listener
            .local_addr()
            .map_err(|e| NapError::io("listener", e))?;
        let models: Vec<&str> = store.runs().map(|r| r.manifest.model_id.as_str()).collect();
        eprintln!("serving {} on http://{bound}", models.join(", "));
        napkit_server::serve(listener, napkit_server::app(Arc::new(store), args.ui)).await
    })
}

pub fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| NapError::io("starting async runtime", e))
}

pub fn convert_cmd(args: ConvertArgs) -> Result<()> {
    let t = convert_npy(&args.src, &args.dst)?;
    eprintln!(
        "{} -> {} shape {:?}",
        args.src.display(),
        args.dst.display(),
        t.shape()
    );
    Ok(())
}

/// Toy model, bar images and labels ready for `extract` and `study`.
pub fn synth_cmd(args: SynthArgs) -> Result<()> {
    let out = &args.out;
    let images_dir = out.join("images");
    fs::create_dir_all(&images_dir)
        .map_err(|e| NapError::io(images_dir.display().to_string(), e))?;
    let data = bars_dataset(args.n, args.seed);
    write(
        &out.join("model.json"),
        toy_bar_model().to_json().as_bytes(),
    )?;
    save_tensor(&data.images, out.join("inputs.napt"))?;
    write(
        &out.join("metadata.jsonl"),
        data.metadata(args.images).to_jsonl().as_bytes(),
    )?;
    if args.images {
        let side = IMAGE_SIZE as u32;
        for i in 0..args.n {
            let path = images_dir.join(format!("{i}.png"));
            image::RgbImage::from_raw(side, side, data.rgb8(i))
                .expect("image buffer matches its size")
                .save(&path)
                .map_err(|e| NapError::io(path.display().to_string(), std::io::Error::other(e)))?;
        }
    }
    eprintln!("wrote {} samples to {}", args.n, out.display());
    Ok(())
}

fn write(path: &PathBuf, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| NapError::io(path.display().to_string(), e))
}
