//! Subcommand implementations.
//!
//! Every command reads and validates all of its inputs, computes its outputs in
//! memory, and only then writes them, so a rejected run leaves no partial
//! output behind. A [`RunManifest`] is written next to the outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use persal_core::baselines::{center_prior_baseline, detection_baseline, image_seed, BaselineConfig, BaselineKind};
use persal_core::groundtruth::{center_prior, generate_psal};
use persal_core::metrics::{score_pair, EmdConfig, GroundDistance, MetricReport, PairScores};
use persal_core::preference::extract_preferences;
use persal_core::tuning::{sweep_alpha, sweep_ratio, CandidateScore, SweepSpec};
use persal_core::{AnnotatedImage, CategoryMapping, GridWarning, GtWeights, PreferenceVector, SaliencyGrid};
use rayon::prelude::*;
use serde_json::json;

use crate::cli::{
    BaselineArgs, Cli, Command, ConvertArgs, EvalArgs, GenGtArgs, GroundArg, KindArg, PriorArgs, ProfileArgs,
    ReplayArgs, TuneArgs,
};
use crate::coco;
use crate::error::{CliError, CliResult};
use crate::fgrd;
use crate::formats::{
    ensure_unique_ids, grid_from_csv, grid_to_csv, parse_json, to_json_pretty, AnnotationRecord, DetectionRecord,
    MappingFile, OneOrMany, PvecFile,
};
use crate::manifest::{sha256_hex, RunManifest, MANIFEST_FILE, TOOL};
use crate::pgm;

/// Tracks the files a run reads so the manifest can record their digests.
#[derive(Debug)]
pub struct Session {
    cwd: PathBuf,
    inputs: BTreeMap<String, String>,
}

impl Session {
    pub fn new() -> CliResult<Self> {
        let cwd = std::env::current_dir().map_err(|e| CliError::io(".", e))?;
        Ok(Self { cwd, inputs: BTreeMap::new() })
    }

    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_json<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> CliResult<T> {
        let bytes = self.read(path)?;
        parse_json(&bytes, path)
    }

    pub fn read_grid(&mut self, path: &Path) -> CliResult<SaliencyGrid> {
        let bytes = self.read(path)?;
        fgrd::decode(&bytes).map_err(|e| CliError::grid(path, e))
    }

    fn mapping(&mut self, path: Option<&Path>) -> CliResult<(CategoryMapping, String)> {
        match path {
            Some(p) => Ok((self.read_json::<MappingFile>(p)?.to_mapping()?, p.display().to_string())),
            None => Ok((coco::default_mapping(), "<bundled>".into())),
        }
    }

    fn pvec(&mut self, path: &Path) -> CliResult<PreferenceVector> {
        self.read_json::<PvecFile>(path)?.to_pvec()
    }
}

/// What a command wants written, plus its manifest details.
#[derive(Debug, Default)]
pub struct Plan {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: Option<String>,
    pub manifest_path: PathBuf,
    pub config: serde_json::Value,
    /// Resolved defaults appended to the recorded arguments.
    pub extra_args: Vec<String>,
}

/// Runs a parsed command line. `args` are the raw arguments after the program
/// name, recorded in the manifest.
pub fn execute(cli: Cli, args: Vec<String>) -> CliResult<()> {
    if let Command::Replay(r) = &cli.command {
        return replay(r);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::invalid(format!("cannot start worker pool: {e}")))?;
    let mut session = Session::new()?;
    let name = cli.command.name();
    let plan = pool.install(|| dispatch(&cli.command, &mut session))?;
    commit(plan, session, name, args)
}

fn dispatch(command: &Command, s: &mut Session) -> CliResult<Plan> {
    match command {
        Command::Profile(a) => profile(a, s),
        Command::GenGt(a) => gen_gt(a, s),
        Command::Prior(a) => prior(a, s),
        Command::Eval(a) => eval(a, s),
        Command::Baseline(a) => baseline(a, s),
        Command::Tune(a) => tune(a, s),
        Command::Convert(a) => convert(a, s),
        Command::Replay(_) => unreachable!("replay is handled before dispatch"),
    }
}

fn commit(plan: Plan, session: Session, command: &str, mut args: Vec<String>) -> CliResult<()> {
    let mut outputs = Vec::with_capacity(plan.files.len());
    for (path, bytes) in &plan.files {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
        outputs.push(path.display().to_string());
    }
    if let Some(text) = &plan.stdout {
        print!("{text}");
    }
    args.extend(plan.extra_args);
    let manifest = RunManifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        args,
        cwd: session.cwd,
        config: plan.config,
        inputs: session.inputs,
        outputs,
    };
    if let Some(parent) = plan.manifest_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    manifest.save(&plan.manifest_path)
}

fn replay(r: &ReplayArgs) -> CliResult<()> {
    let m = RunManifest::load(&r.manifest)?;
    let changed = m.changed_inputs();
    if !changed.is_empty() {
        return Err(CliError::invalid(format!("inputs changed since the recorded run: {}", changed.join(", "))));
    }
    let mut args = m.args.clone();
    if let Some(out) = &r.out {
        let abs = std::path::absolute(out).map_err(|e| CliError::io(out, e))?;
        override_out(&mut args, &abs.display().to_string());
    }
    std::env::set_current_dir(&m.cwd).map_err(|e| CliError::io(&m.cwd, e))?;
    let cli = <Cli as clap::Parser>::try_parse_from(std::iter::once("persal".to_string()).chain(args.clone()))
        .map_err(|e| CliError::invalid(format!("recorded arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(CliError::invalid("a manifest cannot record a replay"));
    }
    execute(cli, args)
}

/// Replaces the value of `--out`, or appends one.
pub fn override_out(args: &mut Vec<String>, out: &str) {
    if let Some(i) = args.iter().position(|a| a == "--out") {
        if i + 1 < args.len() {
            args[i + 1] = out.to_string();
            return;
        }
    }
    if let Some(a) = args.iter_mut().find(|a| a.starts_with("--out=")) {
        *a = format!("--out={out}");
        return;
    }
    args.push("--out".into());
    args.push(out.to_string());
}

fn file_manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn warn(what: &str, warning: Option<GridWarning>) {
    if let Some(GridWarning::ConstantGrid) = warning {
        eprintln!("warning: {what}: constant grid");
    }
}

fn fit(grid: SaliencyGrid, (h, w): (usize, usize)) -> CliResult<SaliencyGrid> {
    let (gh, gw) = grid.dims();
    if (gh, gw) == (h, w) {
        return Ok(grid);
    }
    if h <= gh && w <= gw {
        return Ok(grid.downsample_area(h, w)?);
    }
    Ok(grid.resample(h, w)?)
}

fn load_records(s: &mut Session, path: &Path) -> CliResult<Vec<DetectionRecord>> {
    let recs = s.read_json::<OneOrMany<DetectionRecord>>(path)?.into_vec();
    ensure_unique_ids(recs.iter().map(|r| &r.image_id))?;
    Ok(recs)
}

/// Annotated images sorted by file stem, fixation maps fitted to `grid`.
fn load_annotations(
    s: &mut Session,
    path: &Path,
    grid: Option<(usize, usize)>,
) -> CliResult<Vec<(String, AnnotatedImage)>> {
    let recs = s.read_json::<OneOrMany<AnnotationRecord>>(path)?.into_vec();
    ensure_unique_ids(recs.iter().map(|r| &r.record.image_id))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::with_capacity(recs.len());
    for rec in recs {
        let stem = rec.record.image_id.file_stem()?;
        let sal = s.read_grid(&base.join(&rec.fixation))?;
        let sal = match grid {
            Some(dims) => fit(sal, dims)?,
            None => sal,
        };
        out.push((stem, AnnotatedImage::new(sal, rec.record.to_set()?)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Sorted `.fgrd` file names in a directory.
fn list_grids(dir: &Path) -> CliResult<Vec<String>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".fgrd") && entry.path().is_file() {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn now_unix() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs() as i64).unwrap_or(0)
}

fn mtime_unix(path: &Path) -> CliResult<i64> {
    let meta = fs::metadata(path).map_err(|e| CliError::io(path, e))?;
    let modified = meta.modified().map_err(|e| CliError::io(path, e))?;
    Ok(match modified.duration_since(UNIX_EPOCH) {
        Ok(d) => d.as_secs() as i64,
        Err(e) => -(e.duration().as_secs() as i64),
    })
}

pub fn profile(a: &ProfileArgs, s: &mut Session) -> CliResult<Plan> {
    let (mapping, mapping_src) = s.mapping(a.mapping.as_deref())?;
    let mut plan = Plan::default();
    let pvec = if let Some(ratings) = &a.ratings {
        let ratings: Vec<u32> = ratings
            .split(',')
            .map(|t| t.trim().parse().map_err(|_| CliError::invalid(format!("bad rating {t:?}"))))
            .collect::<CliResult<_>>()?;
        if ratings.len() != mapping.n_super() {
            return Err(CliError::invalid(format!(
                "{} ratings given for {} super categories",
                ratings.len(),
                mapping.n_super()
            )));
        }
        PreferenceVector::from_ratings(mapping.super_names().to_vec(), &ratings)?
    } else {
        let path = a.detections.as_deref().expect("clap requires detections without ratings");
        let mut history = Vec::new();
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| CliError::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            for file in files {
                let stamp = mtime_unix(&file)?;
                for mut rec in s.read_json::<OneOrMany<DetectionRecord>>(&file)?.into_vec() {
                    rec.timestamp.get_or_insert(stamp);
                    history.push(rec.to_set()?);
                }
            }
        } else {
            for rec in load_records(s, path)? {
                history.push(rec.to_set()?);
            }
        }
        let now = match a.now {
            Some(t) => t,
            None => {
                let t = now_unix();
                plan.extra_args = vec!["--now".into(), t.to_string()];
                t
            }
        };
        extract_preferences(&history, &mapping, now, a.window_days)?
    };
    let text = to_json_pretty(&PvecFile::from_pvec(&pvec));
    plan.config = json!({
        "mapping": mapping_src,
        "window_days": a.window_days,
        "now": a.now,
        "ratings": a.ratings,
        "pvec": PvecFile::from_pvec(&pvec),
    });
    match &a.out {
        Some(out) => {
            plan.files.push((out.clone(), text.into_bytes()));
            plan.manifest_path = file_manifest_path(out);
        }
        None => {
            plan.stdout = Some(text);
            plan.manifest_path = PathBuf::from(MANIFEST_FILE);
        }
    }
    Ok(plan)
}

fn weights_from(list: &[f64]) -> CliResult<GtWeights> {
    match *list {
        [a, b, g] => Ok(GtWeights::new(a, b, g)?),
        _ => Err(CliError::invalid(format!("--weights needs alpha,beta,gamma, got {} values", list.len()))),
    }
}

pub fn gen_gt(a: &GenGtArgs, s: &mut Session) -> CliResult<Plan> {
    let weights = weights_from(&a.weights.0)?;
    let (mapping, mapping_src) = s.mapping(a.mapping.as_deref())?;
    let pvec = s.pvec(&a.pvec)?;
    let grid = (!a.full_res).then_some(a.grid);
    let images = load_annotations(s, &a.annotations, grid)?;
    let generated: Vec<_> = images
        .par_iter()
        .map(|(_, img)| generate_psal(img, &mapping, &pvec, &weights))
        .collect::<Result<_, _>>()?;

    let mut plan = Plan::default();
    for ((stem, _), psal) in images.iter().zip(generated) {
        warn(&format!("image {stem}"), psal.warning);
        plan.files.push((a.out.join(format!("{stem}.fgrd")), fgrd::encode(&psal.value)));
        if a.pgm {
            plan.files.push((a.out.join(format!("{stem}.pgm")), pgm::encode(&psal.value)));
        }
    }
    plan.manifest_path = a.out.join(MANIFEST_FILE);
    plan.config = json!({
        "weights": weights,
        "grid": grid,
        "full_res": a.full_res,
        "mapping": mapping_src,
        "pvec": PvecFile::from_pvec(&pvec),
        "images": images.len(),
    });
    Ok(plan)
}

pub fn prior(a: &PriorArgs, s: &mut Session) -> CliResult<Plan> {
    let mut maps = Vec::new();
    if let Some(dir) = &a.fixations {
        for name in list_grids(dir)? {
            maps.push(s.read_grid(&dir.join(name))?);
        }
    } else {
        let path = a.annotations.as_deref().expect("clap requires one source");
        maps = load_annotations(s, path, None)?.into_iter().map(|(_, img)| img.sal).collect();
    }
    if let Some(dims) = a.grid {
        maps = maps.into_iter().map(|m| fit(m, dims)).collect::<CliResult<_>>()?;
    }
    let out = center_prior(&maps)?;
    warn("center prior", out.warning);
    Ok(Plan {
        files: vec![(a.out.clone(), fgrd::encode(&out.value))],
        manifest_path: file_manifest_path(&a.out),
        config: json!({ "maps": maps.len(), "grid": a.grid, "dims": out.value.dims() }),
        ..Plan::default()
    })
}

fn error_code(e: &persal_core::Error) -> &'static str {
    use persal_core::Error as E;
    match e {
        E::ZeroVariance => "zero-variance",
        E::NotNormalized { .. } => "not-normalized",
        E::UndefinedRatio { .. } => "undefined-ratio",
        E::ZeroMass => "zero-mass",
        E::DimMismatch { .. } => "dim-mismatch",
        _ => "error",
    }
}

fn csv_cell(v: &persal_core::Result<f64>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn flags(scores: &PairScores) -> String {
    let named = [
        ("cc", &scores.cc),
        ("sim", &scores.sim),
        ("kld_judd", &scores.kld_judd),
        ("kld_plain", &scores.kld_plain),
        ("emd", &scores.emd),
    ];
    named
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}={}", error_code(e))))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn eval(a: &EvalArgs, s: &mut Session) -> CliResult<Plan> {
    if a.emd_res == 0 {
        return Err(CliError::invalid("--emd-res must be positive"));
    }
    let pred_names = list_grids(&a.pred)?;
    let gt_names = list_grids(&a.gt)?;
    if pred_names != gt_names {
        let p: BTreeSet<_> = pred_names.iter().collect();
        let g: BTreeSet<_> = gt_names.iter().collect();
        let missing: Vec<_> = p.symmetric_difference(&g).map(|s| s.as_str()).collect();
        return Err(CliError::invalid(format!("prediction and ground-truth sets differ: {}", missing.join(", "))));
    }
    if pred_names.is_empty() {
        return Err(CliError::invalid(format!("no .fgrd files in {}", a.pred.display())));
    }
    let mut pairs = Vec::with_capacity(pred_names.len());
    for name in &pred_names {
        let p = s.read_grid(&a.pred.join(name))?;
        let q = s.read_grid(&a.gt.join(name))?;
        if p.dims() != q.dims() {
            return Err(CliError::invalid(format!(
                "{name}: prediction is {:?} but ground truth is {:?}",
                p.dims(),
                q.dims()
            )));
        }
        let (p, q) = if a.normalize { (p.sum_normalize().unwrap_or(p), q.sum_normalize().unwrap_or(q)) } else { (p, q) };
        pairs.push((p, q));
    }
    let ground = match a.ground {
        GroundArg::Euclidean => GroundDistance::Euclidean,
        GroundArg::Manhattan => GroundDistance::Manhattan,
    };
    let emd_cfg = EmdConfig { ground, ..EmdConfig::with_resolution(a.emd_res) };
    let scores: Vec<PairScores> = pairs.par_iter().map(|(p, q)| score_pair(p, q, &emd_cfg)).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e| CliError::Csv { path: a.out.join("metrics.csv"), source: e };
    w.write_record(["id", "cc", "sim", "kld_judd", "kld_plain", "emd", "flags"]).map_err(csv_err)?;
    for (name, sc) in pred_names.iter().zip(&scores) {
        let id = name.trim_end_matches(".fgrd");
        let row = [
            id.to_string(),
            csv_cell(&sc.cc),
            csv_cell(&sc.sim),
            csv_cell(&sc.kld_judd),
            csv_cell(&sc.kld_plain),
            csv_cell(&sc.emd),
            flags(sc),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    let csv_bytes = w.into_inner().map_err(|e| CliError::invalid(e.to_string()))?;
    let report = MetricReport::from_scores(scores);
    let downsampled = pairs.iter().any(|(p, _)| p.height() > a.emd_res || p.width() > a.emd_res);
    let config = json!({
        "emd_resolution": a.emd_res,
        "emd_downsampled": downsampled,
        "ground": format!("{ground:?}").to_lowercase(),
        "normalize": a.normalize,
        "pred": a.pred,
        "gt": a.gt,
    });
    let summary = json!({ "means": report.means, "counts": report.counts, "config": config });
    Ok(Plan {
        files: vec![
            (a.out.join("metrics.csv"), csv_bytes),
            (a.out.join("summary.json"), to_json_pretty(&summary).into_bytes()),
        ],
        manifest_path: a.out.join(MANIFEST_FILE),
        config,
        ..Plan::default()
    })
}

pub fn baseline(a: &BaselineArgs, s: &mut Session) -> CliResult<Plan> {
    let kind = match a.kind {
        KindArg::CenterPrior => BaselineKind::CenterPrior,
        KindArg::Detection => BaselineKind::Detection,
    };
    let cfg = BaselineConfig::new(kind, a.seed, a.threshold)?;
    let mut recs = load_records(s, &a.detections)?;
    let mut stems = Vec::with_capacity(recs.len());
    for r in &recs {
        stems.push(r.image_id.file_stem()?);
    }
    let mut order: Vec<usize> = (0..recs.len()).collect();
    order.sort_by(|&i, &j| stems[i].cmp(&stems[j]));
    let stems: Vec<String> = order.iter().map(|&i| stems[i].clone()).collect();
    recs = order.into_iter().map(|i| recs[i].clone()).collect();

    let mut plan = Plan::default();
    let mut fallback = Vec::new();
    let mut config = json!({ "kind": kind, "seed": a.seed, "threshold": a.threshold });
    match kind {
        BaselineKind::CenterPrior => {
            let path = a.prior.as_deref().expect("clap requires --prior");
            let prior = s.read_grid(path)?;
            let prior = match a.grid {
                Some(dims) => fit(prior, dims)?,
                None => prior,
            };
            let map = center_prior_baseline(&prior)?;
            let bytes = fgrd::encode(&map);
            for stem in &stems {
                plan.files.push((a.out.join(format!("{stem}.fgrd")), bytes.clone()));
            }
            config["grid"] = json!(map.dims());
            config["prior"] = json!(path);
        }
        BaselineKind::Detection => {
            let (mapping, mapping_src) = s.mapping(a.mapping.as_deref())?;
            let pvec = s.pvec(a.pvec.as_deref().expect("clap requires --pvec"))?;
            let (h, w) = a.grid.unwrap_or(persal_core::DEFAULT_GRID);
            let sets = recs.iter().map(|r| r.to_set()).collect::<CliResult<Vec<_>>>()?;
            let maps: Vec<_> = sets
                .par_iter()
                .enumerate()
                .map(|(i, set)| {
                    let per_image = BaselineConfig { seed: image_seed(a.seed, i as u64), ..cfg };
                    detection_baseline(set, &mapping, &pvec, &per_image, h, w)
                })
                .collect::<Result<_, _>>()?;
            for (stem, m) in stems.iter().zip(&maps) {
                if m.random_fallback {
                    fallback.push(stem.clone());
                }
                plan.files.push((a.out.join(format!("{stem}.fgrd")), fgrd::encode(&m.grid)));
            }
            config["grid"] = json!((h, w));
            config["mapping"] = json!(mapping_src);
            config["pvec"] = json!(PvecFile::from_pvec(&pvec));
        }
    }
    config["random_fallback"] = json!(fallback);
    plan.files.push((a.out.join("baseline.json"), to_json_pretty(&config).into_bytes()));
    plan.manifest_path = a.out.join(MANIFEST_FILE);
    plan.config = config;
    Ok(plan)
}

fn sweep_csv(rows: &[CandidateScore], path: &Path) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e| CliError::Csv { path: path.to_path_buf(), source: e };
    w.write_record(["alpha", "beta", "gamma", "beta_fraction", "mean_cc", "mean_sim", "objective", "images_used", "failed"])
        .map_err(err)?;
    for c in rows {
        w.write_record([
            c.weights.alpha.to_string(),
            c.weights.beta.to_string(),
            c.weights.gamma.to_string(),
            c.beta_fraction.to_string(),
            c.mean_cc.to_string(),
            c.mean_sim.to_string(),
            c.objective.to_string(),
            c.images_used.to_string(),
            c.failed.to_string(),
        ])
        .map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::invalid(e.to_string()))
}

pub fn tune(a: &TuneArgs, s: &mut Session) -> CliResult<Plan> {
    let (mapping, mapping_src) = s.mapping(a.mapping.as_deref())?;
    let pvec = s.pvec(&a.pvec)?;
    let grid = (!a.full_res).then_some(a.grid);
    let images = load_annotations(s, &a.annotations, grid)?;
    if images.is_empty() {
        return Err(CliError::invalid("annotation manifest has no images"));
    }
    let mut labels = Vec::with_capacity(images.len());
    for (stem, img) in &images {
        let label = s.read_grid(&a.labels.join(format!("{stem}.fgrd")))?;
        if label.dims() != img.sal.dims() {
            return Err(CliError::invalid(format!(
                "image {stem}: label is {:?} but generation runs at {:?}",
                label.dims(),
                img.sal.dims()
            )));
        }
        labels.push(label);
    }
    let dataset: Vec<AnnotatedImage> = images.into_iter().map(|(_, img)| img).collect();
    let mut spec = SweepSpec {
        alpha_grid: a.alpha_grid.0.clone(),
        ratio_grid: a.ratio_grid.0.clone(),
        fixed_ratio: a.fixed_ratio,
        fixed_alpha: a.fixed_alpha.unwrap_or(SweepSpec::default().fixed_alpha),
    };
    let alpha = sweep_alpha(&dataset, &labels, &mapping, &pvec, &spec)?;
    if a.fixed_alpha.is_none() {
        if let Some(best) = alpha.best {
            spec.fixed_alpha = best.alpha;
        }
    }
    let ratio = sweep_ratio(&dataset, &labels, &mapping, &pvec, &spec)?;

    let alpha_path = a.out.join("alpha_sweep.csv");
    let ratio_path = a.out.join("ratio_sweep.csv");
    let config = json!({
        "alpha_grid": spec.alpha_grid,
        "ratio_grid": spec.ratio_grid,
        "fixed_ratio": spec.fixed_ratio,
        "ratio_sweep_alpha": spec.fixed_alpha,
        "grid": grid,
        "mapping": mapping_src,
        "pvec": PvecFile::from_pvec(&pvec),
        "images": dataset.len(),
    });
    let best = json!({
        "alpha_sweep_best": alpha.best,
        "ratio_sweep_best": ratio.best,
        "weights": ratio.best.or(alpha.best),
    });
    Ok(Plan {
        files: vec![
            (alpha_path.clone(), sweep_csv(&alpha.candidates, &alpha_path)?),
            (ratio_path.clone(), sweep_csv(&ratio.candidates, &ratio_path)?),
            (a.out.join("best.json"), to_json_pretty(&best).into_bytes()),
        ],
        manifest_path: a.out.join(MANIFEST_FILE),
        config,
        ..Plan::default()
    })
}

fn extension(p: &Path) -> String {
    p.extension().map(|e| e.to_string_lossy().to_lowercase()).unwrap_or_default()
}

pub fn convert(a: &ConvertArgs, s: &mut Session) -> CliResult<Plan> {
    let grid = match extension(&a.input).as_str() {
        "fgrd" => s.read_grid(&a.input)?,
        "csv" => {
            let bytes = s.read(&a.input)?;
            grid_from_csv(&bytes, &a.input)?
        }
        other => return Err(CliError::invalid(format!("cannot read .{other} grids (expected .fgrd or .csv)"))),
    };
    let bytes = match extension(&a.out).as_str() {
        "fgrd" => fgrd::encode(&grid),
        "csv" => grid_to_csv(&grid).into_bytes(),
        "pgm" => pgm::encode(&grid),
        other => return Err(CliError::invalid(format!("cannot write .{other} grids (expected .fgrd, .csv or .pgm)"))),
    };
    Ok(Plan {
        files: vec![(a.out.clone(), bytes)],
        manifest_path: file_manifest_path(&a.out),
        config: json!({ "dims": grid.dims() }),
        ..Plan::default()
    })
}
