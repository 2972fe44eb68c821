use std::io::Write;
use std::path::Path;

use serde_json::json;

use super::{CliError, CommonArgs, CrossvalArgs, EvalArgs, InspectArgs, RunConfig, SynthArgs, TrainArgs, TrainOverrides, VERSION};
use crate::data::{generate_synthetic_dataset, load_dataset, make_folds, Dataset};
use crate::harness::{
    cross_dataset_eval, cross_validate, fold_seed, write_crossval_csv, write_json, CrossValConfig, HarnessError,
    LogWriter,
};
use crate::model::{read_checkpoint, write_checkpoint, Checkpoint, CheckpointHeader, RelationNetwork};
use crate::seeds::derive_seed;

fn runtime(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Creates `out`, refusing a non-empty directory unless `force`.
fn prepare_out(out: &Path, force: bool) -> Result<(), CliError> {
    if out.exists() {
        if !out.is_dir() {
            return Err(CliError::Usage(format!("output path {} is not a directory", out.display())));
        }
        let non_empty = std::fs::read_dir(out).map_err(runtime(out))?.next().is_some();
        if non_empty && !force {
            return Err(CliError::Usage(format!(
                "output directory {} is not empty (pass --force to write into it)",
                out.display()
            )));
        }
    }
    std::fs::create_dir_all(out).map_err(runtime(out))
}

/// Config echo plus `run.json` (command, version, seeds).
fn write_run_files(
    out: &Path,
    cfg: &RunConfig,
    command: &str,
    config_source: Option<&Path>,
    seeds: &[(String, u64)],
) -> Result<(), CliError> {
    let path = out.join("config.toml");
    std::fs::write(&path, cfg.to_toml()).map_err(runtime(&path))?;
    let run = json!({
        "command": command,
        "version": VERSION,
        "seed": cfg.seed,
        "seed_lineage": seeds,
        "config_source": config_source.map(|p| p.display().to_string()),
    });
    let path = out.join("run.json");
    write_json(&path, &run)?;
    Ok(())
}

fn load_config(common: &CommonArgs) -> Result<(RunConfig, Option<std::path::PathBuf>), CliError> {
    let (mut cfg, source) = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok((cfg, source))
}

fn apply_overrides(cfg: &mut RunConfig, o: &TrainOverrides) {
    if let Some(v) = o.iterations {
        cfg.train.max_iterations = v;
    }
    if let Some(v) = o.batch {
        cfg.train.batch_episodes = v;
    }
    if let Some(v) = o.lr {
        cfg.train.lr0 = v;
    }
    if let Some(v) = o.k_shot {
        cfg.train.k_shot = v;
    }
    if let Some(v) = o.eval_every {
        cfg.train.eval_every = v;
    }
    if let Some(v) = o.val_episodes {
        cfg.train.val_episodes = v;
    }
    if o.no_attention {
        cfg.model.attention_enabled = false;
    }
}

fn load(manifest: &Path) -> Result<Dataset, CliError> {
    let ds = load_dataset(manifest)?;
    for r in &ds.rejected {
        eprintln!("note: excluded trial {}: {}", r.trial_id, r.reason);
    }
    Ok(ds)
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let (mut cfg, source) = load_config(&a.common)?;
    if a.common.seed.is_some() {
        cfg.synth.seed = cfg.seed;
    }
    if let Some(v) = a.subjects {
        cfg.synth.n_subjects = v;
    }
    if let Some(v) = a.trials_per_class {
        cfg.synth.trials_per_class = v;
    }
    if let Some(v) = a.snr_db {
        cfg.synth.snr_db = v;
    }
    if let Some(v) = a.sessions {
        cfg.synth.sessions = v;
    }
    cfg.synth.validate()?;
    prepare_out(&a.out, a.common.force)?;
    let manifest = generate_synthetic_dataset(&cfg.synth, &a.out)?;
    write_run_files(&a.out, &cfg, "synth", source.as_deref(), &[("synth".into(), cfg.synth.seed)])?;
    println!(
        "wrote {} trials for {} subjects to {}",
        manifest.records.len(),
        cfg.synth.n_subjects,
        a.out.display()
    );
    Ok(())
}

fn checkpoint(
    net: &RelationNetwork,
    cfg: &RunConfig,
    iteration: u64,
    val_loss: f64,
    fold: usize,
    test_subject: &str,
    seeds: &[(String, u64)],
) -> Checkpoint {
    Checkpoint {
        header: CheckpointHeader {
            model: net.config().clone(),
            iteration,
            val_loss: Some(val_loss),
            seed_lineage: seeds.to_vec(),
            fold: Some(fold),
            test_subject: Some(test_subject.to_string()),
            run_config: serde_json::to_value(cfg).expect("config serialises"),
            crate_version: VERSION.to_string(),
        },
        params: net.params().clone(),
    }
}

fn fold_lineage(master: u64, fold: usize) -> Vec<(String, u64)> {
    let f = fold_seed(master, fold);
    vec![
        ("master".into(), master),
        (format!("fold{fold}"), f),
        ("train".into(), derive_seed(f, &["train"])),
    ]
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let (mut cfg, source) = load_config(&a.common)?;
    apply_overrides(&mut cfg, &a.overrides);
    let seeds = fold_lineage(cfg.seed, a.fold);
    cfg.train.seed = seeds[2].1;
    cfg.validate()?;
    let ds = load(&a.manifest)?;
    let folds = make_folds(&ds)?;
    let plan = folds
        .get(a.fold)
        .ok_or_else(|| CliError::Usage(format!("fold {} out of range 0..{}", a.fold, folds.len())))?;
    prepare_out(&a.out, a.common.force)?;
    write_run_files(&a.out, &cfg, "train", source.as_deref(), &seeds)?;
    let mut log = LogWriter::create(&a.out.join("train_log.jsonl"))?;
    let outcome = crate::harness::train(&ds, plan, &cfg.model, &cfg.train, &mut |r| log.append(r))?;
    let ckpt = checkpoint(
        &outcome.best,
        &cfg,
        outcome.best_iteration,
        outcome.best_val_loss,
        plan.index,
        &plan.test_subject,
        &seeds,
    );
    write_checkpoint(&a.out.join("best.ckpt"), &ckpt)?;
    println!(
        "fold {} (test subject {}): best validation loss {:.6} at iteration {}",
        plan.index, plan.test_subject, outcome.best_val_loss, outcome.best_iteration
    );
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let (mut cfg, source) = load_config(&a.common)?;
    if !a.k.is_empty() {
        cfg.eval.k = a.k.clone();
    }
    if let Some(r) = a.repeats {
        cfg.eval.repeats = r;
    }
    cfg.validate()?;
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let net = ckpt.network()?;
    let ds = load(&a.manifest)?;
    let subjects = ds.subjects();
    let subject = match &a.subject {
        Some(s) if !subjects.contains(s) => {
            return Err(CliError::Usage(format!("subject `{s}` is not in {}", a.manifest.display())));
        }
        Some(s) => Some(s.clone()),
        None => ckpt.header.test_subject.clone().filter(|s| subjects.contains(s)),
    };
    let cv = cfg.crossval(1, Vec::new());
    // A checkpoint evaluated on its own held-out subject reuses the fold's
    // seed, reproducing the numbers cross-validation reported.
    let master = if a.common.seed.is_some() {
        cfg.seed
    } else {
        ckpt.header.seed_lineage.first().map_or(cfg.seed, |s| s.1)
    };
    let fold = ckpt.header.fold;
    prepare_out(&a.out, a.common.force)?;
    let header = |mode: &str, seed: u64| {
        json!({
            "mode": mode,
            "k": cv.eval_k,
            "repeats": cv.repeats,
            "support_per_class": cv.support_per_class,
            "fold": fold,
            "subject": subject,
            "checkpoint": a.checkpoint.display().to_string(),
            "checkpoint_iteration": ckpt.header.iteration,
            "seed": seed,
            "version": VERSION,
        })
    };
    let lineage;
    match &subject {
        Some(s) => {
            let seed = match fold {
                Some(f) if ckpt.header.test_subject.as_deref() == Some(s) => fold_seed(master, f),
                _ => derive_seed(master, &["eval", s]),
            };
            lineage = vec![("master".to_string(), master), ("eval".to_string(), seed)];
            let reports = crate::harness::evaluate_all_k(&net, &ds.trials_of(s), &cv, seed)?;
            write_json(&a.out.join("report.json"), &json!({"header": header("subject", seed), "reports": reports}))?;
            write_crossval_csv(&a.out.join("report.csv"), reports.iter().map(|r| (fold, r)))?;
            for r in &reports {
                println!("subject {s} k={}: accuracy {:.1}%", r.k_shot, 100.0 * r.accuracy);
            }
        }
        None => {
            let seed = derive_seed(master, &["cross-dataset"]);
            lineage = vec![("master".to_string(), master), ("cross-dataset".to_string(), seed)];
            let report = cross_dataset_eval(&net, &ds, &cv, seed)?;
            write_json(&a.out.join("report.json"), &json!({"header": header("dataset", seed), "report": report}))?;
            write_crossval_csv(&a.out.join("report.csv"), report.subjects.iter().flatten().map(|r| (None, r)))?;
            for s in &report.summaries {
                println!("k={}: {} over {} subjects", s.k_shot, s.formatted, s.accuracies.len());
            }
        }
    }
    write_run_files(&a.out, &cfg, "eval", source.as_deref(), &lineage)?;
    Ok(())
}

pub fn crossval(a: CrossvalArgs) -> Result<(), CliError> {
    let (mut cfg, source) = load_config(&a.common)?;
    apply_overrides(&mut cfg, &a.overrides);
    if !a.k.is_empty() {
        cfg.eval.k = a.k.clone();
    }
    if let Some(r) = a.repeats {
        cfg.eval.repeats = r;
    }
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    cfg.validate()?;
    let ds = load(&a.manifest)?;
    prepare_out(&a.out, a.common.force)?;
    write_run_files(&a.out, &cfg, "crossval", source.as_deref(), &[("master".into(), cfg.seed)])?;
    let cv: CrossValConfig = cfg.crossval(a.jobs, a.folds.clone());
    let out = a.out.clone();
    let cfg_ref = &cfg;
    let save = move |plan: &crate::data::FoldPlan, outcome: &crate::harness::TrainOutcome| {
        let dir = out.join(format!("fold{}", plan.index));
        let io = |source| HarnessError::Io {
            path: dir.clone(),
            source,
        };
        std::fs::create_dir_all(&dir).map_err(io)?;
        let mut log = LogWriter::create(&dir.join("train_log.jsonl"))?;
        for r in &outcome.log {
            log.append(r)?;
        }
        let seeds = fold_lineage(cfg_ref.seed, plan.index);
        let ckpt = checkpoint(
            &outcome.best,
            cfg_ref,
            outcome.best_iteration,
            outcome.best_val_loss,
            plan.index,
            &plan.test_subject,
            &seeds,
        );
        write_checkpoint(&dir.join("best.ckpt"), &ckpt)?;
        eprintln!(
            "fold {} (test {}): best val loss {:.6} at iteration {}",
            plan.index, plan.test_subject, outcome.best_val_loss, outcome.best_iteration
        );
        Ok(())
    };
    let report = cross_validate(&ds, &cfg.model, &cv, cfg.seed, &save)?;
    write_json(&a.out.join("report.json"), &report)?;
    write_crossval_csv(
        &a.out.join("report.csv"),
        report.folds.iter().flat_map(|f| f.reports.iter().map(move |r| (Some(f.fold), r))),
    )?;
    let mut summary = String::from("k_shot,average_pm_std,mean,std,folds\n");
    for s in &report.summaries {
        summary.push_str(&format!("{},{},{},{},{}\n", s.k_shot, s.formatted, s.mean, s.std, s.accuracies.len()));
        println!("k={:>2}: {}", s.k_shot, s.formatted);
    }
    let path = a.out.join("summary.csv");
    std::fs::write(&path, summary).map_err(runtime(&path))?;
    Ok(())
}

macro_rules! outln {
    ($o:expr, $($arg:tt)*) => {{
        $o.push_str(&format!($($arg)*));
        $o.push('\n');
    }};
}

macro_rules! out {
    ($o:expr, $($arg:tt)*) => {
        $o.push_str(&format!($($arg)*))
    };
}

pub fn inspect(a: InspectArgs) -> Result<(), CliError> {
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let h = &ckpt.header;
    let mut o = String::new();
    outln!(o, "checkpoint: {}", a.checkpoint.display());
    outln!(o, "written by: {}", h.crate_version);
    outln!(o, "iteration: {}", h.iteration);
    match h.val_loss {
        Some(v) => outln!(o, "validation loss: {v}"),
        None => outln!(o, "validation loss: -"),
    }
    outln!(o, 
        "fold: {}  test subject: {}",
        h.fold.map_or("-".to_string(), |f| f.to_string()),
        h.test_subject.as_deref().unwrap_or("-")
    );
    for (label, seed) in &h.seed_lineage {
        outln!(o, "seed {label}: {seed}");
    }
    let (t, c) = h.model.embedding.output_shape();
    outln!(o, "embedding shape: [{t}, {c}]");
    outln!(o, "parameters ({} tensors, {} values):", ckpt.params.len(), ckpt.params.scalar_count());
    for (name, value) in ckpt.params.iter() {
        outln!(o, "  {name} {:?}", value.shape());
    }
    outln!(o, "model config:");
    out!(o, "{}", toml::to_string(&h.model).expect("config serialises"));
    outln!(o, "run config:");
    outln!(o, "{}", serde_json::to_string_pretty(&h.run_config).expect("json"));
    // A closed pipe (`inspect | head`) is not an error.
    let _ = std::io::stdout().write_all(o.as_bytes());
    Ok(())
}
