use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use surgphase::dataset::ShotManifest;
use surgphase::features::{read_cache, write_cache, FeatureCache, Preprocessor};
use surgphase::lstm::write_model;
use surgphase::metrics::render_report;
use surgphase::pipeline::{
    annotation_files, build_manifest, build_provider, corpus_stats, cycle_model_paths, eval_models, extract_cache,
    is_up_to_date, knn_label, load_models, load_timelines, longest_operation, open_frames, provenance, read_json,
    report_tables, run_knn, run_lstm, run_pipeline, write_json, write_text, EvalRecord, KnnSetup, LstmSetup,
    PipelineConfig, PipelineError, Provenance, ProviderConfig, RunLayout, StageError, StatsRecord,
};
use surgphase::pooling::{KnnOptions, TimeScale};
use surgphase::saliency::saliency_preview;
use surgphase::synth::{generate_timelines, write_corpus, GroundTruth, SyntheticCorpusSpec};
use surgphase::Phase;

use crate::args::*;

pub struct Ctx {
    pub cfg: PipelineConfig,
    pub force: bool,
    pub layout: RunLayout,
}

impl Ctx {
    pub fn new(global: &Global) -> Result<Self, PipelineError> {
        let mut cfg = match &global.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = global.seed {
            cfg.shots.seed = seed;
            cfg.train.seed = seed;
        }
        if let Some(dir) = &global.out_dir {
            cfg.out_dir = dir.clone();
        }
        Ok(Ctx {
            layout: RunLayout::new(&cfg.out_dir),
            cfg,
            force: global.force,
        })
    }

    fn validate(&self) -> Result<(), PipelineError> {
        self.cfg.validate()
    }

    /// True when the outputs are current and the stage can be skipped.
    fn skip(&self, stage: &str, inputs: &[PathBuf], outputs: &[PathBuf]) -> bool {
        let fresh = !self.force && is_up_to_date(inputs, outputs, &prov_path(&outputs[0]), &self.cfg.hash());
        if fresh {
            eprintln!("{stage}: outputs are up to date, skipping (use --force to redo)");
        }
        fresh
    }

    fn record(&self, stage: &'static str, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<(), PipelineError> {
        write_json(&prov_path(&outputs[0]), &provenance(stage, &self.cfg, inputs, outputs))
            .map_err(PipelineError::stage(stage))
    }
}

fn prov_path(output: &Path) -> PathBuf {
    let name = output.file_name().map_or_else(|| "out".into(), |n| n.to_string_lossy().into_owned());
    output.with_file_name(format!("{name}.provenance.json"))
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

pub fn stats(ctx: &mut Ctx, a: &StatsArgs) -> Result<()> {
    if let Some(dir) = &a.annotations {
        ctx.cfg.annotations = Some(dir.clone());
    }
    if let Some(b) = a.bin_minutes {
        ctx.cfg.overlap_bin_minutes = b;
    }
    ctx.validate()?;
    let out = a.out.clone().unwrap_or_else(|| ctx.layout.stats());
    let inputs = annotation_files(&ctx.cfg.annotations_dir());
    let record: StatsRecord = if ctx.skip("stats", &inputs, &[out.clone()]) {
        read_json(&out).map_err(PipelineError::stage("stats"))?
    } else {
        let timelines = load_timelines(&ctx.cfg.annotations_dir(), ctx.cfg.fps).map_err(PipelineError::stage("stats"))?;
        let record = corpus_stats(&timelines, ctx.cfg.overlap_bin_minutes).map_err(PipelineError::stage("stats"))?;
        write_json(&out, &record).map_err(PipelineError::stage("stats"))?;
        ctx.record("stats", &inputs, &[out.clone()])?;
        record
    };
    print_stats(&record);
    Ok(())
}

fn print_stats(r: &StatsRecord) {
    println!("{} videos, longest operation {:.2} min", r.videos, r.longest_operation_minutes);
    println!("{:<6}{:>6}{:>16}{:>9}{:>9}", "phase", "ops", "mean ± std", "min", "max");
    for p in &r.phases.phases {
        match p.summary {
            Some(s) => println!(
                "{:<6}{:>6}{:>9.2} ± {:<5.2}{:>9.2}{:>9.2}",
                p.phase, p.occurrences, s.mean, s.std, s.min, s.max
            ),
            None => println!("{:<6}{:>6}{:>16}", p.phase, 0, "-"),
        }
    }
    let peak = r.overlap.counts.iter().copied().max().unwrap_or(0);
    println!("phase overlap ({:.2} min bins): peak {peak} phases", r.overlap.bin_minutes);
    for (phase, span) in Phase::ALL.iter().zip(&r.overlap.spans) {
        if let Some((a, b)) = span {
            println!("  {phase}: {a:.2} to {b:.2} min");
        }
    }
}

pub fn extract_shots(ctx: &mut Ctx, a: &ShotsArgs) -> Result<()> {
    if let Some(dir) = &a.annotations {
        ctx.cfg.annotations = Some(dir.clone());
    }
    if let Some(n) = a.per_phase {
        ctx.cfg.shots.per_phase_target = n;
    }
    if let Some(n) = a.per_video_per_phase {
        ctx.cfg.shots.per_video_per_phase = n;
    }
    ctx.validate()?;
    let out = a.out.clone().unwrap_or_else(|| ctx.layout.shots());
    let inputs = annotation_files(&ctx.cfg.annotations_dir());
    if ctx.skip("extract-shots", &inputs, &[out.clone()]) {
        return Ok(());
    }
    let stage = PipelineError::stage("extract-shots");
    let timelines = load_timelines(&ctx.cfg.annotations_dir(), ctx.cfg.fps).map_err(stage)?;
    let manifest = build_manifest(&timelines, &ctx.cfg.shots).map_err(PipelineError::stage("extract-shots"))?;
    write_json(&out, &manifest).map_err(PipelineError::stage("extract-shots"))?;
    ctx.record("extract-shots", &inputs, &[out.clone()])?;
    for phase in Phase::ALL {
        println!("{phase}: {} shots", manifest.count(phase));
    }
    for d in &manifest.deficits {
        eprintln!("warning: {} has {} shots, target {}", d.phase, d.available, d.target);
    }
    println!("wrote {}", out.display());
    Ok(())
}

pub fn saliency_preview_cmd(ctx: &mut Ctx, a: &PreviewArgs) -> Result<()> {
    let mut bank = ctx.cfg.saliency;
    if let Some(s) = a.scales {
        bank.num_scales = s;
    }
    if let Some(o) = a.orientations {
        bank.num_orientations = o;
    }
    if let Some(w) = a.min_wavelength {
        bank.min_wavelength = w;
    }
    bank.validate().map_err(|e| config_err(e.to_string()))?;
    let frame = image::open(&a.image)
        .map_err(|e| PipelineError::Stage {
            stage: "saliency-preview",
            source: StageError::Unsupported(format!("cannot read {}: {e}", a.image.display())),
        })?
        .to_rgb8();
    let preview = saliency_preview(&frame, a.patch_side, &bank).map_err(|e| config_err(e.to_string()))?;
    let stem = a.image.file_stem().map_or_else(|| "frame".into(), |s| s.to_string_lossy().into_owned());
    let map_out = a.map_out.clone().unwrap_or_else(|| ctx.layout.root.join(format!("{stem}-saliency.png")));
    let overlay_out = a.overlay_out.clone().unwrap_or_else(|| ctx.layout.root.join(format!("{stem}-patch.png")));
    for p in [&map_out, &overlay_out] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
    }
    preview.map.to_gray_image().save(&map_out).with_context(|| format!("writing {}", map_out.display()))?;
    preview.overlay().save(&overlay_out).with_context(|| format!("writing {}", overlay_out.display()))?;
    let p = preview.patch;
    println!(
        "patch {}x{} at ({}, {}) in the {}x{} resized frame, {} maxima",
        p.side,
        p.side,
        p.top_left_x,
        p.top_left_y,
        preview.resized.width(),
        preview.resized.height(),
        preview.maxima.len()
    );
    println!("wrote {} and {}", map_out.display(), overlay_out.display());
    Ok(())
}

fn parse_provider(spec: &str, output: Option<String>, current: &ProviderConfig) -> Result<ProviderConfig, PipelineError> {
    let keep_seed = match current {
        ProviderConfig::Mock { seed } => *seed,
        ProviderConfig::Onnx { .. } => 0,
    };
    match spec.split_once(':') {
        None if spec == "mock" => Ok(ProviderConfig::Mock { seed: keep_seed }),
        Some(("mock", seed)) => seed
            .parse()
            .map(|seed| ProviderConfig::Mock { seed })
            .map_err(|_| config_err(format!("bad mock seed `{seed}`"))),
        Some(("runtime", model)) if !model.is_empty() => Ok(ProviderConfig::Onnx {
            model: model.into(),
            output,
        }),
        _ => Err(config_err(format!(
            "unknown provider `{spec}` (mock, mock:<seed>, runtime:<model-file>)"
        ))),
    }
}

pub fn extract_features(ctx: &mut Ctx, a: &FeaturesArgs) -> Result<()> {
    if let Some(f) = &a.frames {
        ctx.cfg.frames = Some(f.clone());
    }
    if let Some(b) = a.backbone {
        ctx.cfg.backbone = b;
    }
    if let Some(m) = a.mode {
        ctx.cfg.receptive_field = m;
    }
    if let Some(s) = a.stride {
        ctx.cfg.pooling_stride = s;
        // Keep the LSTM stride reachable from this cache.
        if ctx.cfg.lstm_stride % s != 0 {
            ctx.cfg.lstm_stride = s;
        }
    }
    if let Some(p) = &a.provider {
        ctx.cfg.provider = parse_provider(p, a.output_layer.clone(), &ctx.cfg.provider)?;
    } else if let (Some(layer), ProviderConfig::Onnx { output, .. }) = (&a.output_layer, &mut ctx.cfg.provider) {
        *output = Some(layer.clone());
    }
    ctx.validate()?;
    let manifest_path = a.manifest.clone().unwrap_or_else(|| ctx.layout.shots());
    let out = a.out.clone().unwrap_or_else(|| ctx.layout.features());
    let frames = ctx.cfg.frames_path();
    let mut inputs = vec![manifest_path.clone()];
    if frames.is_file() {
        inputs.push(frames.clone());
    }
    if ctx.skip("extract-features", &inputs, &[out.clone()]) {
        return Ok(());
    }
    let stage = || PipelineError::stage("extract-features");
    let manifest: ShotManifest = read_json(&manifest_path).map_err(stage())?;
    let source = open_frames(&frames).map_err(stage())?;
    let provider = build_provider(&ctx.cfg.provider, ctx.cfg.backbone).map_err(stage())?;
    let spec = ctx.cfg.backbone.spec();
    let pre = Preprocessor::new(ctx.cfg.receptive_field, spec, ctx.cfg.saliency);
    eprintln!(
        "extracting {} shots with {} ({}, stride {})",
        manifest.shots.len(),
        provider.name(),
        ctx.cfg.receptive_field,
        ctx.cfg.pooling_stride
    );
    let cache = extract_cache(
        &manifest,
        source.as_ref(),
        &pre,
        &spec,
        provider.as_ref(),
        ctx.cfg.pooling_stride,
        ctx.cfg.fps,
    )
    .map_err(stage())?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_cache(&cache, &out).map_err(|e| stage()(e.into()))?;
    ctx.record("extract-features", &inputs, &[out.clone()])?;
    println!(
        "wrote {} ({} shots, {}-d descriptors)",
        out.display(),
        cache.sequences.len(),
        cache.descriptor_dim
    );
    Ok(())
}

/// Backbone and receptive field recorded when the cache was written, so
/// labels describe the cache rather than the current defaults.
fn adopt_cache_origin(ctx: &mut Ctx, cache_path: &Path) {
    if let Ok(p) = read_json::<Provenance>(&prov_path(cache_path)) {
        ctx.cfg.backbone = p.config.backbone;
        ctx.cfg.receptive_field = p.config.receptive_field;
        ctx.cfg.provider = p.config.provider;
        ctx.cfg.pooling_stride = p.config.pooling_stride;
    }
}

fn load_cache(path: &Path, stage: &'static str) -> Result<FeatureCache, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::Stage {
            stage,
            source: StageError::MissingInput(path.to_path_buf()),
        });
    }
    read_cache(path).map_err(|e| PipelineError::Stage {
        stage,
        source: e.into(),
    })
}

/// Applies the time flags and resolves the divisor for elapsed minutes.
fn resolve_time(ctx: &mut Ctx, t: &TimeArgs, cache: &FeatureCache, stage: &'static str) -> Result<Option<f64>, PipelineError> {
    if t.with_time {
        ctx.cfg.with_time = true;
    }
    if t.no_time {
        ctx.cfg.with_time = false;
    }
    if let Some(s) = t.time_scale {
        ctx.cfg.time_scale = s;
    }
    if let Some(dir) = &t.annotations {
        ctx.cfg.annotations = Some(dir.clone());
    }
    if !ctx.cfg.with_time {
        return Ok(None);
    }
    let longest = match ctx.cfg.time_scale {
        TimeScale::Auto => {
            let dir = ctx.cfg.annotations_dir();
            if dir.is_dir() {
                let timelines = load_timelines(&dir, ctx.cfg.fps).map_err(PipelineError::stage(stage))?;
                longest_operation(&timelines)
            } else {
                let latest = cache.latest_minute();
                eprintln!(
                    "warning: {} not found; scaling time by the latest cached frame ({latest:.2} min)",
                    dir.display()
                );
                latest
            }
        }
        _ => 1.0,
    };
    ctx.cfg
        .time_scale
        .resolve(longest)
        .map(Some)
        .map_err(|e| config_err(e.to_string()))
}

fn print_record(r: &EvalRecord) {
    let m = r.row;
    print!(
        "{}: acc {:.4} pre {:.4} rec {:.4} f1 {:.4}",
        r.label, m.accuracy, m.precision, m.recall, m.f1
    );
    if let Some(s) = r.std {
        print!(" (std acc {:.4} pre {:.4} rec {:.4} f1 {:.4})", s.accuracy, s.precision, s.recall, s.f1);
    }
    println!(" one-vs-rest acc {:.4}", r.metrics.one_vs_rest_accuracy);
}

pub fn eval_knn(ctx: &mut Ctx, a: &KnnArgs) -> Result<()> {
    let cache_path = a.cache.clone().unwrap_or_else(|| ctx.layout.features());
    let cache = load_cache(&cache_path, "eval-knn")?;
    adopt_cache_origin(ctx, &cache_path);
    if let Some(p) = a.pooling {
        ctx.cfg.pooling = p;
    }
    if let Some(m) = a.metric {
        ctx.cfg.metric = m;
    }
    if a.leave_one_video_out {
        ctx.cfg.leave_one_video_out = true;
    }
    let time_scale = resolve_time(ctx, &a.time, &cache, "eval-knn")?;
    ctx.validate()?;
    let out = a.out.clone().unwrap_or_else(|| ctx.layout.knn());
    let inputs = vec![cache_path];
    if ctx.skip("eval-knn", &inputs, &[out.clone()]) {
        print_record(&read_json(&out).map_err(PipelineError::stage("eval-knn"))?);
        return Ok(());
    }
    let setup = KnnSetup {
        label: a.label.clone().unwrap_or_else(|| {
            knn_label(
                ctx.cfg.backbone,
                ctx.cfg.receptive_field,
                ctx.cfg.pooling,
                ctx.cfg.metric,
                time_scale.is_some(),
            )
        }),
        pooling: ctx.cfg.pooling,
        options: KnnOptions {
            metric: ctx.cfg.metric,
            leave_one_video_out: ctx.cfg.leave_one_video_out,
        },
        time_scale,
    };
    let record = run_knn(&cache, &setup).map_err(PipelineError::stage("eval-knn"))?;
    write_json(&out, &record).map_err(PipelineError::stage("eval-knn"))?;
    ctx.record("eval-knn", &inputs, &[out.clone()])?;
    print_record(&record);
    println!("wrote {}", out.display());
    Ok(())
}

pub fn train_lstm(ctx: &mut Ctx, a: &TrainArgs) -> Result<()> {
    let cache_path = a.cache.clone().unwrap_or_else(|| ctx.layout.features());
    let cache = load_cache(&cache_path, "train-lstm")?;
    adopt_cache_origin(ctx, &cache_path);
    let t = &mut ctx.cfg.train;
    if let Some(v) = a.cycles {
        t.cycles = v;
    }
    if let Some(v) = a.epochs {
        t.epochs = v;
    }
    if let Some(v) = a.hidden {
        t.hidden = v;
    }
    if let Some(v) = a.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = a.train_per_class {
        t.train_per_class = v;
    }
    if let Some(s) = a.stride {
        ctx.cfg.lstm_stride = s;
    }
    if ctx.cfg.lstm_stride % cache.stride != 0 {
        return Err(config_err(format!(
            "stride {} is not a multiple of the cache stride {}",
            ctx.cfg.lstm_stride, cache.stride
        ))
        .into());
    }
    ctx.cfg.pooling_stride = cache.stride;
    let time_scale = resolve_time(ctx, &a.time, &cache, "train-lstm")?;
    ctx.validate()?;

    let model_base = a.out.clone().unwrap_or_else(|| ctx.layout.root.join("models").join("lstm.splm"));
    let model_paths = cycle_model_paths(&model_base, ctx.cfg.train.cycles);
    let result = a.result.clone().unwrap_or_else(|| ctx.layout.lstm());
    let mut outputs = vec![result.clone()];
    outputs.extend(model_paths.iter().cloned());
    let inputs = vec![cache_path];
    if ctx.skip("train-lstm", &inputs, &outputs) {
        print_record(&read_json(&result).map_err(PipelineError::stage("train-lstm"))?);
        return Ok(());
    }
    let setup = LstmSetup {
        label: a
            .label
            .clone()
            .unwrap_or_else(|| format!("LSTM {} {}{}", ctx.cfg.backbone, ctx.cfg.receptive_field, if time_scale.is_some() { " +time" } else { "" })),
        train: ctx.cfg.train,
        stride: ctx.cfg.lstm_stride,
        time_scale,
    };
    eprintln!(
        "training {} cycles of {} epochs on {} shots",
        setup.train.cycles,
        setup.train.epochs,
        cache.sequences.len()
    );
    let (record, models) = run_lstm(&cache, &setup).map_err(PipelineError::stage("train-lstm"))?;
    for (m, path) in models.iter().zip(&model_paths) {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        write_model(m, path).map_err(|e| PipelineError::Stage {
            stage: "train-lstm",
            source: e.into(),
        })?;
        eprintln!(
            "cycle {}: loss {:.4} -> {:.4}",
            m.meta.cycle,
            m.meta.initial_loss,
            m.meta.loss_trace.last().copied().unwrap_or(f64::NAN)
        );
    }
    write_json(&result, &record).map_err(PipelineError::stage("train-lstm"))?;
    ctx.record("train-lstm", &inputs, &outputs)?;
    print_record(&record);
    println!("wrote {} and {} model files", result.display(), models.len());
    Ok(())
}

/// A path that does not exist stands for its `-cycle<k>` siblings.
fn expand_models(paths: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for p in paths {
        if p.exists() {
            out.push(p.clone());
            continue;
        }
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let prefix = format!("{stem}-cycle");
        let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut found: Vec<(usize, PathBuf)> = std::fs::read_dir(dir)
            .into_iter()
            .flatten()
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter_map(|q| {
                let name = q.file_name()?.to_str()?.to_string();
                let k = name.strip_prefix(&prefix)?.strip_suffix(".splm")?.parse().ok()?;
                Some((k, q))
            })
            .collect();
        found.sort();
        if found.is_empty() {
            out.push(p.clone());
        }
        out.extend(found.into_iter().map(|(_, q)| q));
    }
    out
}

pub fn eval_lstm(ctx: &mut Ctx, a: &EvalLstmArgs) -> Result<()> {
    let cache_path = a.cache.clone().unwrap_or_else(|| ctx.layout.features());
    let cache = load_cache(&cache_path, "eval-lstm")?;
    ctx.validate()?;
    let paths = expand_models(&a.models);
    let out = a.out.clone().unwrap_or_else(|| ctx.layout.root.join("lstm-eval.json"));
    let mut inputs = vec![cache_path];
    inputs.extend(paths.iter().cloned());
    if ctx.skip("eval-lstm", &inputs, &[out.clone()]) {
        print_record(&read_json(&out).map_err(PipelineError::stage("eval-lstm"))?);
        return Ok(());
    }
    let stage = || PipelineError::stage("eval-lstm");
    let models = load_models(&paths).map_err(stage())?;
    let label = a.label.clone().unwrap_or_else(|| "LSTM".to_string());
    let record = eval_models(&models, &cache, &label).map_err(stage())?;
    write_json(&out, &record).map_err(stage())?;
    ctx.record("eval-lstm", &inputs, &[out.clone()])?;
    print_record(&record);
    println!("wrote {}", out.display());
    Ok(())
}

pub fn report(ctx: &mut Ctx, a: &ReportArgs) -> Result<()> {
    let inputs: Vec<PathBuf> = if a.inputs.is_empty() {
        [ctx.layout.knn(), ctx.layout.lstm()].into_iter().filter(|p| p.exists()).collect()
    } else {
        a.inputs.clone()
    };
    if inputs.is_empty() {
        return Err(PipelineError::Stage {
            stage: "report",
            source: StageError::MissingInput(ctx.layout.knn()),
        }
        .into());
    }
    let records = inputs
        .iter()
        .map(|p| read_json::<EvalRecord>(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::stage("report"))?;
    let (rows, matrices) = report_tables(&records);
    let text = render_report(&rows, &matrices, a.format);
    match &a.out {
        Some(out) => {
            write_text(out, &text).map_err(PipelineError::stage("report"))?;
            println!("wrote {}", out.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn synth(ctx: &mut Ctx, a: &SynthArgs, seed: Option<u64>) -> Result<()> {
    let mut spec = SyntheticCorpusSpec::default();
    if let Some(v) = a.videos {
        spec.num_videos = v;
    }
    if let Some(v) = a.scale {
        spec.scale = v;
    }
    if let Some(v) = a.missing_p7 {
        spec.missing_p7 = v;
    }
    if let Some(v) = a.overlap {
        spec.visual_overlap = v;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.time_dependent = !a.no_time_dependence;
    spec.fps = ctx.cfg.fps;
    spec.validate().map_err(|e| config_err(e.to_string()))?;
    let root = a.out.clone().unwrap_or_else(|| ctx.cfg.dataset_root.clone());
    let stage = || PipelineError::stage("synth");
    let timelines = generate_timelines(&spec).map_err(|e| stage()(e.into()))?;
    let truth = GroundTruth::new(&spec, &timelines);
    write_corpus(&truth, &root, a.write_frames).map_err(|e| stage()(e.into()))?;
    let minutes: f64 = timelines.iter().map(|t| t.duration_minutes()).sum();
    println!(
        "wrote {} videos ({minutes:.1} min of annotated video) to {}",
        timelines.len(),
        root.display()
    );
    if !a.write_frames {
        println!("frames render on demand from {}", root.join("ground_truth.json").display());
    }
    Ok(())
}

pub fn run(ctx: &mut Ctx) -> Result<()> {
    let reports = run_pipeline(&ctx.cfg, ctx.force, &mut |line| eprintln!("{line}"))?;
    let ran = reports.iter().filter(|r| r.status == surgphase::pipeline::StageStatus::Ran).count();
    println!("{ran} of {} stages ran; outputs in {}", reports.len(), ctx.cfg.out_dir.display());
    let text = std::fs::read_to_string(ctx.layout.report("txt")).unwrap_or_default();
    print!("{text}");
    Ok(())
}
