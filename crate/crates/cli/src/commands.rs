use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::Serialize;
use serde_json::Value;
use sdx_core::config::RunConfig;
use sdx_core::corpus::{emit_dataset, encode as encode_record, screen, split_cross_project, split_random, Stage, PARTITIONS};
use sdx_core::ingest::{write_records, DumpReader, GitRepo};
use sdx_core::metrics::{evaluate_corpus, BleuConfig, CommandProvider, EmbeddingProvider, EvalRow, HashBagProvider};
use sdx_core::retrieval::{IndexEntry, RetrievalIndex, METHOD};
use sdx_core::sbt::diffsbt_buggy;
use sdx_core::{CommitRecord, EncoderConfig};

use crate::io::{create, lines, open_input, open_output, write_line, Row};
use crate::{data, CliError, Options, QueryField, SplitKind};

fn records(opts: &Options) -> Result<impl Iterator<Item = Result<CommitRecord, CliError>>, CliError> {
    let input = open_input(opts.input.as_deref())?;
    Ok(DumpReader::new(input).map(|r| r.map_err(data)))
}

fn finish(mut out: Box<dyn std::io::Write>) -> Result<(), CliError> {
    out.flush().map_err(data)
}

pub fn ingest(opts: &Options, repo_name: Option<String>) -> Result<(), CliError> {
    let mut out = open_output(opts.output.as_deref())?;
    let source = opts.input.as_deref().unwrap_or("-");
    let mut count = 0usize;
    if source != "-" && Path::new(source).is_dir() {
        let mut repo = GitRepo::open(source).map_err(data)?;
        if let Some(name) = repo_name {
            repo = repo.with_name(name);
        }
        for record in repo.commits().map_err(data)? {
            write_records([&record], &mut out).map_err(data)?;
            count += 1;
        }
    } else {
        for record in records(opts)? {
            let mut record = record?;
            if let Some(name) = &repo_name {
                record.repo = name.clone();
            }
            write_records([&record], &mut out).map_err(data)?;
            count += 1;
        }
    }
    eprintln!("ingest: {count} commits");
    finish(out)
}

#[derive(Serialize)]
struct DecisionRow<'a> {
    id: String,
    accepted: bool,
    reason: Option<&'a str>,
}

pub fn filter(opts: &Options, cfg: &RunConfig, report: Option<PathBuf>) -> Result<(), CliError> {
    let filter_cfg = cfg.filter_config().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = open_output(opts.output.as_deref())?;
    let mut report = report.map(|p| create(&p)).transpose()?;
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    let (mut seen, mut kept) = (0usize, 0usize);
    for record in records(opts)? {
        let record = record?;
        let (cleaned, decision) = screen(&record, &filter_cfg);
        seen += 1;
        let reason = decision.reason.map(|r| r.to_string());
        if let Some(rep) = report.as_mut() {
            write_line(rep.as_mut(), &DecisionRow { id: record.id(), accepted: decision.accepted, reason: reason.as_deref() })?;
        }
        match reason {
            None => {
                write_records([&cleaned], &mut out).map_err(data)?;
                kept += 1;
            }
            Some(r) => *rejected.entry(r).or_default() += 1,
        }
    }
    let summary: Vec<String> = rejected.iter().map(|(r, n)| format!("{r} {n}")).collect();
    eprintln!("filter: kept {kept} of {seen}; rejected: {}", if summary.is_empty() { "none".into() } else { summary.join(", ") });
    if let Some(rep) = report {
        finish(rep)?;
    }
    finish(out)
}

pub fn encode(opts: &Options, cfg: &RunConfig) -> Result<(), CliError> {
    let stage: Stage = opts.stage.ok_or_else(|| CliError::Usage("encode needs --stage pretrain|finetune".into()))?.into();
    let encoder = cfg.encoder();
    let mut examples = Vec::new();
    let mut skipped = 0usize;
    for record in records(opts)? {
        let record = record?;
        match encode_record(&record, stage, &encoder) {
            Ok(example) => examples.push(example),
            Err(e) => {
                warn!("skipping {}: {e}", record.id());
                skipped += 1;
            }
        }
    }
    let mut out = open_output(opts.output.as_deref())?;
    emit_dataset(&examples, stage, &mut out).map_err(data)?;
    eprintln!("encode: {} {stage} examples, {skipped} skipped", examples.len());
    finish(out)
}

pub fn split(opts: &Options, cfg: &RunConfig) -> Result<(), CliError> {
    let dir = match opts.output.as_deref() {
        None | Some("-") => return Err(CliError::Usage("split needs --output DIR".into())),
        Some(d) => PathBuf::from(d),
    };
    let mut rows: Vec<(String, String)> = Vec::new();
    for line in lines(open_input(opts.input.as_deref())?) {
        let (n, text) = line?;
        let value: Value = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("line {n}: {e}")))?;
        let repo = value
            .get("repo")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Data(format!("line {n}: missing string field \"repo\"")))?
            .to_string();
        rows.push((text, repo));
    }
    let splits = match opts.split {
        SplitKind::Random => split_random(rows, &cfg.split, cfg.seed),
        SplitKind::CrossProject => split_cross_project(rows, &cfg.split, cfg.seed, |row| row.1.as_str()),
    }
    .map_err(data)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    for (name, part) in splits.named() {
        let mut out = create(&dir.join(format!("{name}.jsonl")))?;
        for (text, _) in part {
            out.write_all(text.as_bytes()).and_then(|()| out.write_all(b"\n")).map_err(data)?;
        }
        finish(out)?;
    }
    let sizes: Vec<String> = PARTITIONS.iter().zip(splits.sizes()).map(|(p, n)| format!("{p} {n}")).collect();
    eprintln!("split: {}", sizes.join(", "));
    Ok(())
}

/// The text a row is indexed or queried by.
fn query_text(row: &Row, field: QueryField, encoder: &EncoderConfig) -> Result<Option<String>, CliError> {
    match (row, field) {
        (Row::Record(r), QueryField::Diff) => Ok(Some(r.render_diff())),
        (Row::Record(r), QueryField::Diffsbt) => match diffsbt_buggy(r, encoder) {
            Ok(seq) => Ok(Some(seq.to_string())),
            Err(e) => {
                warn!("skipping {}: {e}", r.id());
                Ok(None)
            }
        },
        (Row::Example(e), QueryField::Diffsbt) => Ok(Some(e.input.clone())),
        (Row::Example(e), QueryField::Diff) => Err(CliError::Data(format!(
            "{}: encoded dataset rows carry no diff; use --query-field diffsbt or index commit records",
            e.id
        ))),
    }
}

fn rows(opts: &Options) -> Result<Vec<Row>, CliError> {
    lines(open_input(opts.input.as_deref())?).map(|l| l.and_then(|(n, text)| Row::parse(n, &text))).collect()
}

pub fn index(opts: &Options, cfg: &RunConfig) -> Result<(), CliError> {
    let encoder = cfg.encoder();
    let mut entries = Vec::new();
    for row in rows(opts)? {
        if let Some(diff) = query_text(&row, opts.query_field, &encoder)? {
            entries.push(IndexEntry { id: row.id(), diff, message: row.message().to_string() });
        }
    }
    let index = RetrievalIndex::build(entries).map_err(data)?;
    let mut out = open_output(opts.output.as_deref())?;
    index.store(&mut out).map_err(data)?;
    eprintln!("index: {} entries, {} terms; {METHOD}", index.len(), index.vocabulary().len());
    finish(out)
}

#[derive(Serialize)]
struct ExplainRow<'a> {
    id: String,
    candidate: &'a str,
    reference: &'a str,
    source_id: &'a str,
    cosine: f64,
    bleu: f64,
}

pub fn explain(opts: &Options, cfg: &RunConfig, index_path: &Path) -> Result<(), CliError> {
    let file = fs::File::open(index_path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", index_path.display())))?;
    let index = RetrievalIndex::load(std::io::BufReader::new(file)).map_err(data)?;
    let encoder = cfg.encoder();
    let mut out = open_output(opts.output.as_deref())?;
    let mut count = 0usize;
    for row in rows(opts)? {
        let Some(text) = query_text(&row, opts.query_field, &encoder)? else { continue };
        let found = index.explain(&text, cfg.k);
        write_line(
            out.as_mut(),
            &ExplainRow {
                id: row.id(),
                candidate: &found.message,
                reference: row.message(),
                source_id: &found.source_id,
                cosine: found.cosine,
                bleu: found.bleu,
            },
        )?;
        count += 1;
    }
    eprintln!("explain: {count} queries, k = {}; {METHOD}", cfg.k);
    finish(out)
}

pub fn eval(opts: &Options, cfg: &RunConfig) -> Result<(), CliError> {
    let mut eval_rows = Vec::new();
    for line in lines(open_input(opts.input.as_deref())?) {
        let (n, text) = line?;
        eval_rows.push(serde_json::from_str::<EvalRow>(&text).map_err(|e| CliError::Data(format!("line {n}: {e}")))?);
    }
    let provider: Box<dyn EmbeddingProvider> = match &cfg.provider_cmd {
        Some(cmd) => Box::new(CommandProvider::new(cmd.clone())),
        None => Box::new(HashBagProvider::default()),
    };
    let report = evaluate_corpus(&eval_rows, &BleuConfig::default(), provider.as_ref()).map_err(data)?;
    let mut out = open_output(opts.output.as_deref())?;
    out.write_all(report.to_json().as_bytes()).and_then(|()| out.write_all(b"\n")).map_err(data)?;
    let a = &report.aggregates;
    eprintln!("eval: {} rows, BLEU {:.2}, exact {:.2}%, semsim {:.4}", a.count, a.mean_bleu, a.exact_match_rate, a.mean_semsim);
    finish(out)
}

#[cfg(feature = "fetch")]
pub fn fetch_repos(opts: &Options, min_stars: u64, api_base: Option<String>) -> Result<(), CliError> {
    use sdx_core::ingest::{fetch_repositories_with, token_from_env, FetchConfig, TOKEN_ENV};

    let token = token_from_env().ok_or_else(|| CliError::Network(format!("{TOKEN_ENV} is not set")))?;
    let mut fetch_cfg = FetchConfig::default();
    if let Some(base) = api_base {
        fetch_cfg.api_base = base;
    }
    let repos = fetch_repositories_with(min_stars, &token, &fetch_cfg).map_err(|e| CliError::Network(e.to_string()))?;
    let mut out = open_output(opts.output.as_deref())?;
    for repo in &repos {
        write_line(out.as_mut(), repo)?;
    }
    eprintln!("fetch-repos: {} repositories with at least {min_stars} stars", repos.len());
    finish(out)
}

#[cfg(not(feature = "fetch"))]
pub fn fetch_repos(_: &Options, _: u64, _: Option<String>) -> Result<(), CliError> {
    Err(CliError::Usage("this build has no fetch support".into()))
}
