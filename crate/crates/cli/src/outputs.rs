//! The stats / run / export-embeddings commands and their file outputs.
//! Everything written here is a pure function of (config, data files), so
//! re-running a command reproduces its artifacts byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use fairadapt_core::datasets::{
    self, load_dataset, split_stats, DatasetId, SideStats, SplitId,
};
use fairadapt_core::model::concat_attribute;
use fairadapt_core::trainer::{self, run_repeated, MeanStd, RepeatedOutcome};
use fairadapt_core::{Error, FairModel, Result};

use crate::config::ExperimentConfig;

/// Table-style composition rows (source and target) for one split.
pub fn cmd_stats(dataset: DatasetId, split: SplitId, data_dir: &Path, seed: u64) -> Result<String> {
    if !split.valid_for(dataset) {
        return Err(Error::Usage(format!("split {split} does not belong to dataset {dataset}")));
    }
    let table = load_dataset(dataset, data_dir)?;
    let (src, tar) = split_stats(&table, split, seed)?;
    Ok(format!(
        "{}\n{}\n{}\n",
        SideStats::CSV_HEADER,
        src.csv_row(split, "source"),
        tar.csv_row(split, "target")
    ))
}

fn fmt_ms(m: MeanStd) -> String {
    if m.n == 0 {
        "NA".to_string()
    } else {
        format!("{:.2} ± {:.2}", m.mean, m.std)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const REPORT_HEADER: &str =
    "run,seed,selected_iteration,degenerate,balanced_accuracy,delta_dp,delta_eo,delta_ao";

/// Train `cfg.runs` seeds and write every artifact into `cfg.out`:
/// `config.toml`, per-run `run-i/curves.csv` + `run-i/checkpoint.bin`,
/// `report.csv`, and `summary.md`. Returns the rendered summary table.
pub fn cmd_run(cfg: &ExperimentConfig) -> Result<String> {
    let table = load_dataset(cfg.dataset, &cfg.data_dir)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_file(&cfg.out.join("config.toml"), &cfg.to_toml())?;

    let out: RepeatedOutcome<f64> = run_repeated(&cfg.train, &table, cfg.split, cfg.runs)?;

    let mut report = String::from(REPORT_HEADER);
    report.push('\n');
    for r in &out.runs {
        let _ = writeln!(
            report,
            "{},{},{},{},{}",
            r.run_index,
            r.seed,
            r.outcome.selected.iteration,
            r.outcome.selected.degenerate,
            r.target_report.csv_row()
        );
    }
    let a = &out.aggregate;
    let _ = writeln!(
        report,
        "mean,,,,{:.4},{:.4},{:.4},{:.4}",
        a.balanced_accuracy.mean, a.delta_dp.mean, a.delta_eo.mean, a.delta_ao.mean
    );
    let _ = writeln!(
        report,
        "std,,,,{:.4},{:.4},{:.4},{:.4}",
        a.balanced_accuracy.std, a.delta_dp.std, a.delta_eo.std, a.delta_ao.std
    );
    write_file(&cfg.out.join("report.csv"), &report)?;

    for r in &out.runs {
        let dir = cfg.out.join(format!("run-{}", r.run_index));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        trainer::write_curves(&dir.join("curves.csv"), &r.outcome.curves)?;
        let ckpt = dir.join("checkpoint.bin");
        let f = fs::File::create(&ckpt).map_err(|e| Error::io(&ckpt, e))?;
        r.outcome
            .selected
            .model
            .save(BufWriter::new(f))
            .map_err(|e| Error::io(&ckpt, e))?;
    }

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "# {} {} — {} ({} runs, seed {})\n",
        cfg.dataset, cfg.split, cfg.train.ablation, cfg.runs, cfg.train.seed
    );
    let _ = writeln!(summary, "| Variant | Acc. | ΔDP | ΔEO | ΔAO |");
    let _ = writeln!(summary, "|---|---|---|---|---|");
    let _ = writeln!(
        summary,
        "| {} | {} | {} | {} | {} |",
        cfg.train.ablation,
        fmt_ms(a.balanced_accuracy),
        fmt_ms(a.delta_dp),
        fmt_ms(a.delta_eo),
        fmt_ms(a.delta_ao)
    );
    if a.all_degenerate {
        let _ = writeln!(
            summary,
            "\nWARNING: every run collapsed to single-class target predictions; \
             the row above averages degenerate models."
        );
    } else if a.runs_used < a.runs_total {
        let _ = writeln!(
            summary,
            "\nNote: {} of {} runs collapsed to single-class target predictions \
             and were excluded from the row above.",
            a.runs_total - a.runs_used,
            a.runs_total
        );
    }
    write_file(&cfg.out.join("summary.md"), &summary)?;
    Ok(summary)
}

/// Latent rows of source and target under a saved checkpoint:
/// `domain,z1..zZ,a,y` with `y = NA` on the target side.
pub fn cmd_export_embeddings(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    out_file: &Path,
) -> Result<PathBuf> {
    let f = fs::File::open(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let model = FairModel::load(BufReader::new(f))?;
    let table = load_dataset(cfg.dataset, &cfg.data_dir)?;
    let exp = datasets::prepare_experiment::<f64>(
        &table,
        cfg.split,
        cfg.train.split_seed,
        cfg.train.val_fraction,
        cfg.train.seed,
    )?;
    if model.input_width() != exp.train.n_features() + 1 {
        return Err(Error::Usage(format!(
            "checkpoint expects {} input columns but {} {} encodes to {} (+1 attribute)",
            model.input_width(),
            cfg.dataset,
            cfg.split,
            exp.train.n_features()
        )));
    }

    let z = model.latent_width();
    let mut text = String::from("domain");
    for i in 1..=z {
        let _ = write!(text, ",z{i}");
    }
    text.push_str(",a,y\n");

    let mut dump = |domain: &str, d: &datasets::DomainDataset<f64>, labels: Option<&[u8]>| {
        let latent = model.encode(&concat_attribute(&d.x, &d.a));
        for r in 0..latent.rows() {
            text.push_str(domain);
            for c in 0..z {
                let _ = write!(text, ",{:.6}", latent.get(r, c));
            }
            match labels {
                Some(y) => {
                    let _ = writeln!(text, ",{},{}", d.a[r], y[r]);
                }
                None => {
                    let _ = writeln!(text, ",{},NA", d.a[r]);
                }
            }
        }
    };
    let train_y = exp.train.labels.read().to_vec();
    let val_y = exp.val.labels.read().to_vec();
    dump("source", &exp.train, Some(&train_y));
    dump("source", &exp.val, Some(&val_y));
    dump("target", &exp.target, None);

    if let Some(parent) = out_file.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    write_file(out_file, &text)?;
    Ok(out_file.to_path_buf())
}
