use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use golde_core::data::Names;
use golde_core::model::diagnostics::{orthogonality_defects, pattern_defect};
use golde_core::synthetic::toy_kg;
use golde_core::training::LogRow;
use golde_core::{
    evaluate, per_relation_report, train as run_training, Checkpoint, Dataset, Error, ManifoldConfig, MetricsReport,
    Precision, Result, TrainConfig,
};

use crate::args::{DiagnoseArgs, EvalArgs, MakeToyArgs, SelfcheckArgs, TrainArgs};
use crate::config_file;
use crate::exit;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

fn manifold_of(a: &TrainArgs) -> Result<ManifoldConfig> {
    match &a.components {
        Some(list) => ManifoldConfig::parse_components(list, a.norm),
        None => ManifoldConfig::from_partition(a.dim, a.kstar, a.mp, a.mq, a.norm),
    }
}

fn train_config_of(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        batch_size: a.batch_size,
        alpha: a.alpha,
        gamma: a.gamma,
        lr: a.lr,
        neg_size: a.neg_size,
        steps: a.steps,
        valid_every: a.valid_every,
        seed: a.seed,
        precision: a.precision,
        filter_negatives: a.filter_negatives,
        valid_max_triples: a.valid_max,
        freeze_elliptic_weights: a.freeze_elliptic,
    }
}

pub fn train(a: TrainArgs) -> Result<u8> {
    let manifold = manifold_of(&a)?;
    let cfg = train_config_of(&a);
    cfg.validate()?;
    let dataset = Dataset::load_dir(&a.data)?;
    println!("data {}", dataset.stats());
    println!("manifold {manifold}");

    fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    write_file(&a.out.join("run.cfg"), &config_file::render(&a))?;
    dataset.write_dicts(&a.out)?;

    let log_path = a.out.join("metrics.tsv");
    let mut log = BufWriter::new(File::create(&log_path).map_err(io_err(&log_path))?);
    writeln!(log, "{}", LogRow::TSV_HEADER).map_err(io_err(&log_path))?;
    let mut write_failure = None;
    let outcome = run_training(&dataset, &manifold, &cfg, &mut |row| {
        if let Err(e) = writeln!(log, "{}", row.tsv()) {
            write_failure.get_or_insert(e);
        }
        if row.metrics.is_some() {
            println!("{}", row.tsv());
        }
    })?;
    log.flush().map_err(io_err(&log_path))?;
    if let Some(e) = write_failure {
        return Err(io_err(&log_path)(e));
    }

    outcome.best.save(a.out.join("best.ckpt"))?;
    outcome.last.save(a.out.join("last.ckpt"))?;
    let fmt = |m: Option<MetricsReport>| m.map_or_else(|| "NA".to_string(), |m| m.tsv_row());
    println!("best step {}", outcome.best.step);
    println!("valid\t{}", fmt(outcome.best_valid));
    println!("test\t{}", fmt(outcome.test));
    Ok(exit::OK)
}

fn check_compatible(ck: &Checkpoint, ds: &Dataset) -> Result<()> {
    let m = &ck.model;
    if m.num_entities() != ds.num_entities() || m.num_relations() != ds.num_relations() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} entities / {} relations but the dataset has {} / {}",
            m.num_entities(),
            m.num_relations(),
            ds.num_entities(),
            ds.num_relations()
        )));
    }
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<u8> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let ds = Dataset::load_dir(&a.data)?;
    check_compatible(&ck, &ds)?;
    let split = ds.split(a.split);
    if split.is_empty() {
        return Err(Error::Config(format!("the {} split is empty", a.split)));
    }
    let filter = ds.filter_index();
    let report = evaluate(&ck.model, split, &filter)?;
    let per_relation = if a.per_relation {
        Some(per_relation_report(&ck.model, split, &filter, Some(&ds.vocab))?)
    } else {
        None
    };
    println!("split\t{}", MetricsReport::TSV_HEADER);
    println!("{}\t{}", a.split, report.tsv_row());
    if let Some(groups) = per_relation {
        println!();
        println!("relation\ttriples\t{}", MetricsReport::TSV_HEADER);
        for g in groups {
            let name = g.name.unwrap_or_else(|| g.relation.to_string());
            println!("{name}\t{}\t{}", g.triples, g.metrics.tsv_row());
        }
    }
    Ok(exit::OK)
}

fn relation_names(dir: &Path, count: usize) -> Result<Vec<String>> {
    let path = dir.join("relations.dict");
    if !path.exists() {
        return Ok((0..count).map(|r| r.to_string()).collect());
    }
    let names = Names::load_dict(&path)?;
    if names.len() != count {
        return Err(Error::Checkpoint(format!(
            "{} lists {} relations but the checkpoint has {count}",
            path.display(),
            names.len()
        )));
    }
    Ok(names.iter().map(str::to_string).collect())
}

pub fn diagnose(a: DiagnoseArgs) -> Result<u8> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let model = &ck.model;
    let dir: PathBuf = a.dicts.clone().unwrap_or_else(|| {
        a.checkpoint
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default()
    });
    let names = relation_names(&dir, model.num_relations())?;
    let ids = a
        .relations
        .iter()
        .map(|n| {
            names.iter().position(|x| x == n).ok_or_else(|| {
                Error::Config(format!("unknown relation `{n}`; available: {}", names.join(", ")))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if ids.len() > 3 {
        return Err(Error::Config(format!(
            "diagnose takes at most 3 relations, got {}",
            ids.len()
        )));
    }

    let mut lines = Vec::new();
    let singles: Vec<usize> = if ids.is_empty() {
        (0..model.num_relations()).collect()
    } else {
        ids.clone()
    };
    for &r in &singles {
        let orth = orthogonality_defects(model, r)?
            .iter()
            .map(|d| format!("{d:e}"))
            .collect::<Vec<_>>()
            .join(",");
        lines.push(format!("orthogonality\t{}\t{orth}", names[r]));
        if ids.len() <= 1 {
            lines.push(format!("symmetry\t{}\t{}", names[r], pattern_defect(model, &[r])?));
        }
    }
    match ids.len() {
        2 => lines.push(format!(
            "inversion\t{}\t{}\t{}",
            names[ids[0]],
            names[ids[1]],
            pattern_defect(model, &ids)?
        )),
        3 => lines.push(format!(
            "composition\t{}\t{}\t{}\t{}",
            names[ids[0]],
            names[ids[1]],
            names[ids[2]],
            pattern_defect(model, &ids)?
        )),
        _ => {}
    }
    for l in lines {
        println!("{l}");
    }
    Ok(exit::OK)
}

pub fn selfcheck(a: SelfcheckArgs) -> Result<u8> {
    if a.precision != Precision::F64 {
        return Err(Error::Config("selfcheck runs in double precision only".into()));
    }
    if a.trials == 0 {
        return Err(Error::Config("--trials must be at least 1".into()));
    }
    let results = golde_core::selfcheck::run(a.trials, a.seed);
    let mut failed = 0;
    for r in &results {
        if !r.passed {
            failed += 1;
        }
        println!(
            "{}\t{:<28}\tworst {:.3e}\ttol {:e}\tcases {}\t{:.2}s",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.worst,
            r.tolerance,
            r.cases,
            r.seconds
        );
    }
    println!("{} properties, {failed} failed", results.len());
    Ok(if failed == 0 { exit::OK } else { exit::SELFCHECK })
}

pub fn make_toy(a: MakeToyArgs) -> Result<u8> {
    let kg = toy_kg(a.seed);
    kg.dataset.save_dir(&a.out)?;
    let rel = |r: usize| kg.dataset.vocab.relations.name(r).unwrap_or("?").to_string();
    println!("{}", kg.dataset.stats());
    println!("symmetric\t{}", rel(kg.symmetric));
    println!("inverse\t{}\t{}", rel(kg.inverse.0), rel(kg.inverse.1));
    println!("hierarchy\t{}", rel(kg.hierarchy));
    let (c, a1, a2) = kg.composition;
    println!("composition\t{}\t{}\t{}", rel(c), rel(a1), rel(a2));
    Ok(exit::OK)
}
