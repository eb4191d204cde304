//! Streaming readers and writers shared by the subcommands.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use logsift::matcher::{parse_templates_file, CompiledTemplateSet};
use logsift::model::{ParsedEvent, RawLogRecord};

pub const BATCH: usize = 8192;

fn open_in(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
}

/// Output file, or standard output when `path` is `None` or `-`.
pub fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    std::fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))
}

/// Feeds log records to `sink` in batches. No paths means standard input.
/// Blank lines are skipped. Line numbers restart at 1 in each file.
pub fn for_each_batch<F>(paths: &[PathBuf], mut sink: F) -> Result<()>
where
    F: FnMut(Vec<RawLogRecord>) -> Result<()>,
{
    let stdin = [PathBuf::from("-")];
    let paths = if paths.is_empty() { &stdin[..] } else { paths };
    for path in paths {
        let source = (path.as_os_str() != "-").then(|| path.display().to_string());
        let mut batch = Vec::with_capacity(BATCH);
        for (i, line) in open_in(path)?.lines().enumerate() {
            let line = line.with_context(|| format!("reading {}", path.display()))?;
            let Ok(mut rec) = RawLogRecord::from_line(i as u64 + 1, &line) else {
                continue;
            };
            rec.source_file = source.clone();
            batch.push(rec);
            if batch.len() == BATCH {
                sink(std::mem::replace(&mut batch, Vec::with_capacity(BATCH)))?;
            }
        }
        if !batch.is_empty() {
            sink(batch)?;
        }
    }
    Ok(())
}

/// Reads one JSON value per non-empty line.
pub fn for_each_json<T, F>(path: &Path, mut f: F) -> Result<()>
where
    T: serde::de::DeserializeOwned,
    F: FnMut(T) -> Result<()>,
{
    for (i, line) in open_in(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: invalid JSON record", path.display(), i + 1))?;
        f(v)?;
    }
    Ok(())
}

pub fn for_each_event<F: FnMut(ParsedEvent) -> Result<()>>(path: &Path, f: F) -> Result<()> {
    for_each_json(path, f)
}

pub fn load_templates(path: &Path) -> Result<CompiledTemplateSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let templates = parse_templates_file(&text).with_context(|| format!("in {}", path.display()))?;
    CompiledTemplateSet::compile(templates).with_context(|| format!("in {}", path.display()))
}

pub fn write_jsonl<T: serde::Serialize>(out: &mut dyn Write, item: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, item)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Lazily parsed JSON-lines events.
pub fn events(path: &Path) -> Result<impl Iterator<Item = Result<ParsedEvent>>> {
    let display = path.display().to_string();
    Ok(open_in(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(move |(i, line)| {
            let line = line.with_context(|| format!("reading {display}"))?;
            serde_json::from_str(&line).with_context(|| format!("{display}:{}: invalid event", i + 1))
        }))
}

/// Runs `f` over `iter` with errors diverted: the first error is returned
/// after `f` finishes, and later items are dropped.
pub fn with_ok_items<T, I, R, F>(iter: I, f: F) -> Result<R>
where
    I: Iterator<Item = Result<T>>,
    F: FnOnce(&mut dyn Iterator<Item = T>) -> R,
{
    let mut err = None;
    let mut ok = iter.map_while(|r| match r {
        Ok(v) => Some(v),
        Err(e) => {
            err = Some(e);
            None
        }
    });
    let out = f(&mut ok);
    drop(ok);
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
