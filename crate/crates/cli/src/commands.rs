use std::cell::RefCell;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use rayon::ThreadPool;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use kgcorpus::eval::{self, EmMode, PredictionRecord};
use kgcorpus::kg_store::{dedup_triples, write_tsv, ParseOptions, ParseSummary, TripleReader};
use kgcorpus::masker::{mask_sentence, mask_triple, record_rng, MaskedRecord};
use kgcorpus::mixer::{self, MixSource};
use kgcorpus::qa_align::{self, MatchedItem};
use kgcorpus::scalar::format_decimal;
use kgcorpus::{match_record, EmResult, KnowledgeGraph, MaskPolicy, MixSpec, QAItem, Rational, Role, Scalar, Span, Triple};

use crate::args::*;
use crate::io::{open, par_map_ordered, parse_record, require_file, trim_newline, Line, Lines, Output, Rejects};
use crate::Failure;

pub struct Context {
    pub seed: u64,
    pub strict: bool,
    pub pool: ThreadPool,
}

fn read_triples(path: &Path, strict: bool) -> Result<(Vec<Triple>, ParseSummary), Failure> {
    let mut reader = TripleReader::new(open(path)?, ParseOptions { strict });
    let mut triples = Vec::new();
    for t in reader.by_ref() {
        triples.push(t.map_err(|e| Failure::data(format!("{}: {e}", path.display())))?);
    }
    Ok((triples, reader.into_summary()))
}

fn rejects_json(r: &Rejects) -> Value {
    json!({ "count": r.count, "first": r.first })
}

pub fn ingest(ctx: &Context, a: &IngestArgs) -> Result<Value, Failure> {
    require_file(&a.input)?;
    let mut out = Output::create(&a.output)?;
    let (triples, summary) = read_triples(&a.input, ctx.strict)?;
    let (triples, removed) = if a.dedup { dedup_triples(triples) } else { (triples, 0) };
    write_tsv(out.inner(), &triples).map_err(|e| Failure::io(&a.output, e))?;
    out.commit()?;
    Ok(json!({
        "lines": summary.lines,
        "triples": triples.len(),
        "skipped": summary.skipped,
        "duplicates_removed": removed,
        "first_errors": summary.first_errors,
    }))
}

pub fn stats(ctx: &Context, a: &StatsArgs) -> Result<Value, Failure> {
    require_file(&a.triples)?;
    let (triples, summary) = read_triples(&a.triples, ctx.strict)?;
    let stats = KnowledgeGraph::new(triples).stats();
    let body = serde_json::to_string(&stats).expect("plain counters");
    match &a.output {
        Some(path) => {
            let mut out = Output::create(path)?;
            out.write_line(&body)?;
            out.commit()?;
        }
        None => println!("{body}"),
    }
    Ok(json!({ "stats": stats, "skipped": summary.skipped }))
}

#[derive(Debug, Deserialize)]
struct KelmRecord {
    sentence: String,
    triples: Vec<Triple>,
}

#[derive(Debug, Serialize)]
struct SpanSet {
    triple: usize,
    role: Role,
    spans: Vec<(usize, usize)>,
}

fn span_sets(entity_spans: &std::collections::BTreeMap<(usize, Role), Vec<Span>>) -> Vec<SpanSet> {
    entity_spans
        .iter()
        .map(|(&(triple, role), spans)| SpanSet { triple, role, spans: spans.iter().map(|s| (s.start, s.end)).collect() })
        .collect()
}

/// Parses a KELM line, keeping the original object so that extra fields
/// pass through.
fn parse_kelm(text: &str) -> Result<(serde_json::Map<String, Value>, KelmRecord), String> {
    let object: serde_json::Map<String, Value> = parse_record(text)?;
    let record: KelmRecord = serde_json::from_value(Value::Object(object.clone())).map_err(|e| e.to_string())?;
    Ok((object, record))
}

pub fn match_kelm(ctx: &Context, a: &MatchKelmArgs) -> Result<Value, Failure> {
    require_file(&a.kelm)?;
    let mut out = Output::create(&a.output)?;
    let mut rejects = Rejects::new(ctx.strict);
    let (mut records, mut matched) = (0u64, 0u64);
    let work = |line: Line| {
        let parsed = parse_kelm(&line.text).map(|(mut object, record)| {
            let m = match_record(&record.sentence, record.triples);
            object.insert("entity_spans".into(), serde_json::to_value(span_sets(&m.entity_spans)).unwrap());
            (serde_json::to_string(&object).unwrap(), m.is_matched())
        });
        (line.number, parsed)
    };
    par_map_ordered(&ctx.pool, Lines::open(&a.kelm)?, work, |(number, parsed)| match parsed {
        Ok((text, is_matched)) => {
            records += 1;
            matched += u64::from(is_matched);
            out.write_line(&text)
        }
        Err(reason) => rejects.reject(&a.kelm, number, reason),
    })?;
    out.commit()?;
    Ok(json!({ "records": records, "matched": matched, "malformed": rejects_json(&rejects) }))
}

pub fn mask(ctx: &Context, a: &MaskArgs) -> Result<Value, Failure> {
    let input = a.triples.as_ref().or(a.kelm.as_ref()).expect("clap requires one input");
    require_file(input)?;
    let policy = MaskPolicy::new(a.sentinel.clone(), a.role.into(), ctx.seed)
        .map_err(|e| Failure::config(format!("--sentinel: {e}")))?;
    let mut out = Output::create(&a.output)?;
    let (mut records, mut emitted, mut dropped) = (0u64, 0u64, 0u64);
    let mut rejects = Rejects::new(ctx.strict);

    let mut sink = |examples: Vec<MaskedRecord>| {
        records += 1;
        if examples.is_empty() {
            dropped += 1;
        }
        for e in &examples {
            emitted += 1;
            out.write_json(e)?;
        }
        Ok(())
    };

    if let Some(path) = &a.triples {
        let mut reader = TripleReader::new(open(path)?, ParseOptions { strict: ctx.strict });
        let triples = reader
            .by_ref()
            .enumerate()
            .map(|(i, t)| t.map(|t| (i as u64, t)).map_err(|e| Failure::data(format!("{}: {e}", path.display()))));
        let work = |(ordinal, t): (u64, Triple)| {
            let mut rng = record_rng(policy.seed, ordinal);
            mask_triple(&t, &policy, &mut rng).iter().map(|e| e.to_record()).collect::<Vec<_>>()
        };
        par_map_ordered(&ctx.pool, triples, work, &mut sink)?;
        let summary = reader.into_summary();
        for e in &summary.first_errors {
            rejects.first.push(format!("{}:{e}", path.display()));
        }
        rejects.count = summary.skipped;
    } else {
        let path = a.kelm.as_ref().unwrap();
        let work = |line: Line| {
            let parsed = parse_kelm(&line.text).map(|(_, record)| {
                let m = match_record(&record.sentence, record.triples);
                let mut rng = record_rng(policy.seed, line.ordinal);
                mask_sentence(&m, &policy, &mut rng).map(|e| e.to_record()).into_iter().collect::<Vec<_>>()
            });
            (line.number, parsed)
        };
        par_map_ordered(&ctx.pool, Lines::open(path)?, work, |(number, parsed)| match parsed {
            Ok(examples) => sink(examples),
            Err(reason) => rejects.reject(path, number, reason),
        })?;
    }
    out.commit()?;
    Ok(json!({
        "records": records,
        "emitted": emitted,
        "dropped": dropped,
        "malformed": rejects_json(&rejects),
    }))
}

/// `id=path:weight`, split at the first `=` and the last `:`.
fn parse_source(spec: &str) -> Result<(String, PathBuf, Rational), Failure> {
    let bad = |why: &str| Failure::config(format!("--source `{spec}`: {why} (expected id=path:weight)"));
    let (id, rest) = spec.split_once('=').ok_or_else(|| bad("missing `=`"))?;
    let (path, weight) = rest.rsplit_once(':').ok_or_else(|| bad("missing `:weight`"))?;
    if id.is_empty() || path.is_empty() {
        return Err(bad("empty id or path"));
    }
    let weight = Rational::parse_decimal(weight).ok_or_else(|| bad("weight is not a number"))?;
    Ok((id.to_string(), PathBuf::from(path), weight))
}

/// Non-empty lines of a file as raw bytes, for verbatim pass-through. A read
/// error ends the stream and is parked in `error`.
struct RawLines {
    path: PathBuf,
    reader: std::io::BufReader<std::fs::File>,
    error: Rc<RefCell<Option<Failure>>>,
}

impl Iterator for RawLines {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        loop {
            let mut buf = Vec::new();
            match self.reader.read_until(b'\n', &mut buf) {
                Ok(0) => return None,
                Ok(_) => {
                    let len = trim_newline(&buf).len();
                    if len > 0 {
                        buf.truncate(len);
                        return Some(buf);
                    }
                }
                Err(e) => {
                    self.error.borrow_mut().get_or_insert(Failure::io(&self.path, e));
                    return None;
                }
            }
        }
    }
}

pub fn mix(ctx: &Context, a: &MixArgs) -> Result<Value, Failure> {
    let parsed = a.sources.iter().map(|s| parse_source(s)).collect::<Result<Vec<_>, _>>()?;
    for (_, path, _) in &parsed {
        require_file(path)?;
    }
    let sources = parsed.iter().map(|(id, _, w)| MixSource { id: id.clone(), weight: *w }).collect();
    let spec = MixSpec::new(sources, ctx.seed, a.block).map_err(|e| Failure::config(format!("mix: {e}")))?;

    let error = Rc::new(RefCell::new(None));
    let mut streams = Vec::with_capacity(parsed.len());
    for (_, path, _) in &parsed {
        streams.push(RawLines { path: path.clone(), reader: open(path)?, error: Rc::clone(&error) });
    }
    let mut out = Output::create(&a.output)?;
    let mut mixer = mixer::mix(streams, &spec).expect("one stream per source");
    for (_, line) in mixer.by_ref() {
        out.write_bytes(&line)?;
        out.write_bytes(b"\n")?;
    }
    let report = mixer.finish();
    if let Some(e) = error.borrow_mut().take() {
        return Err(e);
    }
    out.commit()?;
    Ok(serde_json::to_value(report).expect("plain counters"))
}

pub fn match_qa(ctx: &Context, a: &MatchQaArgs) -> Result<Value, Failure> {
    require_file(&a.kg)?;
    require_file(&a.qa)?;
    let mut out = Output::create(&a.output)?;
    let (triples, _) = read_triples(&a.kg, ctx.strict)?;
    let kg = KnowledgeGraph::new(triples);
    let mut rejects = Rejects::new(ctx.strict);
    let (mut total, mut matched) = (0u64, 0u64);
    let work = |line: Line| {
        let parsed = parse_record::<QAItem>(&line.text).map(|item| {
            let witness = qa_align::is_matched(&item, &kg).into_witness();
            witness.map(|witness| MatchedItem { item, witness })
        });
        (line.number, parsed)
    };
    par_map_ordered(&ctx.pool, Lines::open(&a.qa)?, work, |(number, parsed)| match parsed {
        Ok(kept) => {
            total += 1;
            match kept {
                Some(m) => {
                    matched += 1;
                    out.write_json(&m)
                }
                None => Ok(()),
            }
        }
        Err(reason) => rejects.reject(&a.qa, number, reason),
    })?;
    out.commit()?;
    Ok(json!({ "total": total, "matched": matched, "malformed": rejects_json(&rejects) }))
}

fn raw_lines(path: &Path) -> Result<impl Iterator<Item = Result<Vec<u8>, Failure>>, Failure> {
    let mut reader = open(path)?;
    let path = path.to_path_buf();
    Ok(std::iter::from_fn(move || loop {
        let mut buf = Vec::new();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => return None,
            Ok(_) => {
                let len = trim_newline(&buf).len();
                if len > 0 {
                    buf.truncate(len);
                    return Some(Ok(buf));
                }
            }
            Err(e) => return Some(Err(Failure::io(&path, e))),
        }
    }))
}

pub fn split(_ctx: &Context, a: &SplitArgs) -> Result<Value, Failure> {
    require_file(&a.input)?;
    let fraction = Rational::parse_decimal(&a.fraction)
        .ok_or_else(|| Failure::config(format!("--fraction `{}` is not a number", a.fraction)))?;
    qa_align::tail_len(1, &fraction).map_err(|e| Failure::config(format!("--fraction: {e}")))?;

    let mut total = 0usize;
    for line in raw_lines(&a.input)? {
        line?;
        total += 1;
    }
    let tail = qa_align::tail_len(total, &fraction).expect("fraction checked");
    let head = total - tail;
    let mut head_out = Output::create(&a.head)?;
    let mut tail_out = Output::create(&a.tail)?;
    for (i, line) in raw_lines(&a.input)?.enumerate() {
        let out = if i < head { &mut head_out } else { &mut tail_out };
        out.write_bytes(&line?)?;
        out.write_bytes(b"\n")?;
    }
    head_out.commit()?;
    tail_out.commit()?;
    Ok(json!({ "total": total, "head": head, "tail": tail }))
}

fn read_json_lines<T: serde::de::DeserializeOwned>(path: &Path, rejects: &mut Rejects) -> Result<Vec<T>, Failure> {
    let mut out = Vec::new();
    for line in Lines::open(path)? {
        let line = line?;
        match parse_record::<T>(&line.text) {
            Ok(v) => out.push(v),
            Err(reason) => rejects.reject(path, line.number, reason)?,
        }
    }
    Ok(out)
}

pub fn score(ctx: &Context, a: &ScoreArgs) -> Result<Value, Failure> {
    require_file(&a.preds)?;
    require_file(&a.items)?;
    let mut out = Output::create(&a.output)?;
    let mut rejects = Rejects::new(ctx.strict);
    let preds: Vec<PredictionRecord> = read_json_lines(&a.preds, &mut rejects)?;
    let items: Vec<QAItem> = read_json_lines(&a.items, &mut rejects)?;
    let mode = match a.em_mode {
        EmModeArg::Normalized => EmMode::Normalized,
        EmModeArg::Strict => EmMode::Strict,
    };
    let outcome = eval::score::<Rational>(preds, items, &a.task, a.split, &a.model, mode)
        .map_err(|e| Failure::data(e.to_string()))?;
    if !outcome.missing.is_empty() {
        eprintln!(
            "warning: {} item(s) without a prediction count as wrong: {}",
            outcome.missing.len(),
            outcome.missing.join(", ")
        );
    }
    let body = serde_json::to_string_pretty(&[&outcome.result]).expect("finite EM");
    out.write_line(&body)?;
    out.commit()?;
    Ok(json!({
        "task": outcome.result.task,
        "split": outcome.result.split,
        "model": outcome.result.model,
        "em": format_decimal(&outcome.result.em),
        "n": outcome.result.n,
        "correct": outcome.result.correct,
        "missing": outcome.missing,
        "malformed": rejects_json(&rejects),
    }))
}

pub fn delta(_ctx: &Context, a: &DeltaArgs) -> Result<Value, Failure> {
    for p in &a.results {
        require_file(p)?;
    }
    let mut out = Output::create(&a.output)?;
    let mut results: Vec<EmResult> = Vec::new();
    for p in &a.results {
        let list: Vec<EmResult> = serde_json::from_reader(open(p)?)
            .map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        results.extend(list);
    }
    let report = eval::delta_report(&results, &a.baseline, &a.treatment).map_err(|e| Failure::data(e.to_string()))?;
    report.write_csv(out.inner()).map_err(|e| Failure::io(&a.output, std::io::Error::other(e)))?;
    out.commit()?;
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| json!({ "task": r.task, "split": r.split, "delta_em": format_decimal(&r.delta_em) }))
        .collect();
    Ok(json!({ "rows": rows, "average": format_decimal(&report.average) }))
}

pub fn selftest(_ctx: &Context) -> Result<Value, Failure> {
    let checks = crate::selftest::run();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for c in &checks {
        let _ = writeln!(lock, "{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = json!({
        "passed": passed,
        "checks": checks.iter().map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail })).collect::<Vec<_>>(),
    });
    if passed {
        Ok(report)
    } else {
        Err(Failure::data("selftest failed"))
    }
}
