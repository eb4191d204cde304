//! Subcommand implementations.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use logsift::config::{Mode, RunConfig};
use logsift::corpus::gen_corpus;
use logsift::generation::{heuristic_all, llm_all, to_templates_file, LlmClient, LlmError, PromptSpec};
use logsift::matcher::{count_batch, CompiledTemplateSet, CoverageCounts};
use logsift::mining::{
    category_cdf, fingerprint_tsv, kde_density, read_jobs_csv, severity_shares, temporal_histogram,
    ward_cluster, CategoryDomainMatrix, CategoryRules, FingerprintTable, JobIndex, JoinedEvent,
    WeightedPoint,
};
use logsift::model::{ParsedEvent, Severity, SeverityRules, TemplateId};
use logsift::peft::{lora_apply, lora_delta, LoraAdapter, Matrix};
use logsift::robustness::{
    evaluate, rows_to_csv, EvalOptions, GoldMatchExtractor, LlmExtractor, MaskingExtractor,
    MetricLevel, PatternExtractor, PerturbationKind,
};
use logsift::signature::{Grouper, SignatureGroup};
use logsift::Exec;

use crate::io::{self, open_out, write_file, write_jsonl};
use crate::svg;
use crate::*;

struct Ctx {
    cfg: RunConfig,
    exec: Exec,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let ctx = Ctx {
        cfg,
        exec: exec_for(cli.threads)?,
    };
    match cli.command {
        Command::Signatures(a) => signatures(&ctx, a),
        Command::Templates(a) => templates(&ctx, a),
        Command::Parse(a) => parse(&ctx, a),
        Command::Coverage(a) => coverage(&ctx, a),
        Command::Perturb(a) => perturb(&ctx, a),
        Command::Mine(m) => match m {
            MineCommand::Fingerprint(a) => fingerprint(&ctx, a),
            MineCommand::Severity(a) => severity(a),
            MineCommand::Temporal(a) => temporal(&ctx, a),
            MineCommand::Jobs(a) => jobs(a),
            MineCommand::Cluster(a) => cluster(&ctx, a),
            MineCommand::Kde(a) => kde(&ctx, a),
        },
        Command::Report(a) => report(&ctx, a),
        Command::Gen(a) => gen(&ctx, a),
        Command::PeftDemo(a) => peft_demo(&ctx, a),
    }
}

/// Every named input must exist before any stage runs.
fn check_paths<'a>(paths: impl IntoIterator<Item = &'a Path>) -> Result<()> {
    for p in paths {
        if p.as_os_str() != "-" && !p.exists() {
            return Err(usage(format!("no such file: {}", p.display())));
        }
    }
    Ok(())
}

fn inputs(ctx: &Ctx, flag: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    let v = if flag.is_empty() { ctx.cfg.inputs.clone() } else { flag };
    check_paths(v.iter().map(PathBuf::as_path))?;
    Ok(v)
}

fn templates_path(ctx: &Ctx, flag: Option<PathBuf>) -> Result<PathBuf> {
    let p = flag
        .or_else(|| ctx.cfg.templates.clone())
        .ok_or_else(|| usage("--templates is required"))?;
    check_paths([p.as_path()])?;
    Ok(p)
}

fn out_dir(ctx: &Ctx, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| ctx.cfg.out_dir.clone())
        .ok_or_else(|| usage("--out directory is required"))
}

fn signatures(ctx: &Ctx, a: SignaturesArgs) -> Result<()> {
    let inputs = inputs(ctx, a.inputs)?;
    let n = a.samples.unwrap_or(ctx.cfg.n_samples);
    let mut grouper = Grouper::new(n, ctx.cfg.seed, ctx.exec).map_err(|e| usage(e.to_string()))?;
    io::for_each_batch(&inputs, |b| {
        grouper.push_batch(b);
        Ok(())
    })?;
    let total = grouper.total();
    let groups = grouper.finish()?;
    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Jsonl | Format::Json => {
            for g in &groups {
                write_jsonl(&mut out, g)?;
            }
        }
        Format::Tsv | Format::Csv => {
            writeln!(out, "signature\tmember_count\ttoken_count\tmasked_form")?;
            for g in &groups {
                writeln!(out, "{}\t{}\t{}\t{}", g.signature, g.member_count, g.token_count, g.masked_form)?;
            }
        }
    }
    out.flush()?;
    eprintln!("{total} lines -> {} signature groups", groups.len());
    Ok(())
}

fn read_groups(path: &Path) -> Result<Vec<SignatureGroup>> {
    check_paths([path])?;
    let mut groups = Vec::new();
    io::for_each_json(path, |g: SignatureGroup| {
        groups.push(g);
        Ok(())
    })?;
    Ok(groups)
}

fn llm_client(ctx: &Ctx, base_url: Option<String>, model: Option<String>) -> Result<(LlmClient, RunConfig)> {
    let mut cfg = ctx.cfg.clone();
    let ep = cfg.endpoint_or_env();
    if let Some(u) = base_url {
        ep.base_url = u;
    }
    if let Some(m) = model {
        ep.model_name = m;
    }
    let client = LlmClient::new(ep.clone()).map_err(|e| match e {
        LlmError::InvalidConfig(m) => usage(m),
        other => anyhow::Error::new(EndpointError(other.to_string())),
    })?;
    Ok((client, cfg))
}

fn templates(ctx: &Ctx, a: TemplatesArgs) -> Result<()> {
    let groups = read_groups(&a.groups)?;
    let mode = a.mode.unwrap_or(ctx.cfg.mode);
    let results = match mode {
        Mode::Heuristic => heuristic_all(&groups, ctx.exec),
        Mode::Llm => {
            let mut cfg = ctx.cfg.clone();
            {
                let ep = cfg.endpoint_or_env();
                if let Some(n) = a.max_concurrent {
                    ep.max_concurrent_requests = n;
                }
                if let Some(t) = a.timeout {
                    ep.timeout = std::time::Duration::from_secs(t);
                }
            }
            let ctx2 = Ctx { cfg, exec: ctx.exec };
            let (client, _) = llm_client(&ctx2, a.base_url, a.model)?;
            let spec = PromptSpec {
                max_examples: ctx.cfg.n_samples,
                ..PromptSpec::default()
            };
            llm_all(&client, &groups, &spec)
        }
    };
    if let Some(p) = &a.report {
        let mut w = open_out(Some(p))?;
        for r in &results {
            write_jsonl(&mut w, r)?;
        }
        w.flush()?;
    }
    let failed = results.iter().filter(|r| r.endpoint_failed).count();
    let empty = results.iter().filter(|r| r.templates.is_empty()).count();
    for r in results.iter().filter(|r| !r.errors.is_empty()) {
        for e in &r.errors {
            eprintln!("group {}: {e}", r.signature);
        }
    }
    if !results.is_empty() && failed == results.len() {
        return Err(EndpointError(format!("all {failed} endpoint requests failed")).into());
    }
    let text = to_templates_file(&results);
    let mut out = open_out(a.out.as_deref())?;
    out.write_all(text.as_bytes())?;
    out.flush()?;
    let n: usize = results.iter().map(|r| r.templates.len()).sum();
    eprintln!(
        "{} groups -> {n} templates ({empty} groups without templates, {failed} request failures)",
        results.len()
    );
    Ok(())
}

fn severity_rules(path: Option<&Path>) -> Result<SeverityRules> {
    match path {
        None => Ok(SeverityRules::default()),
        Some(p) => {
            check_paths([p])?;
            let text = std::fs::read_to_string(p)?;
            Ok(SeverityRules::parse(&text).with_context(|| format!("in {}", p.display()))?)
        }
    }
}

fn category_rules(path: Option<&Path>) -> Result<CategoryRules> {
    match path {
        None => Ok(CategoryRules::default()),
        Some(p) => {
            check_paths([p])?;
            let text = std::fs::read_to_string(p)?;
            Ok(CategoryRules::parse(&text).with_context(|| format!("in {}", p.display()))?)
        }
    }
}

fn parse(ctx: &Ctx, a: ParseArgs) -> Result<()> {
    let tp = templates_path(ctx, a.templates)?;
    let inputs = inputs(ctx, a.inputs)?;
    let rules = severity_rules(a.severity_rules.as_deref())?;
    let set = io::load_templates(&tp)?;
    let mut out = open_out(a.out.as_deref())?;
    let (mut total, mut parsed) = (0u64, 0u64);
    io::for_each_batch(&inputs, |b| {
        total += b.len() as u64;
        for e in set.parse_batch(&b, &rules, ctx.exec).into_iter().flatten() {
            parsed += 1;
            write_jsonl(&mut out, &e)?;
        }
        Ok(())
    })?;
    out.flush()?;
    eprintln!("{parsed}/{total} lines parsed");
    Ok(())
}

fn coverage(ctx: &Ctx, a: CoverageArgs) -> Result<()> {
    let tp = templates_path(ctx, a.templates)?;
    let inputs = inputs(ctx, a.inputs)?;
    let set = io::load_templates(&tp)?;
    let mut counts = CoverageCounts::default();
    io::for_each_batch(&inputs, |b| {
        counts = std::mem::take(&mut counts).merge(count_batch(&set, &b, ctx.exec));
        Ok(())
    })?;
    let report = counts.report();
    if let Some(w) = &report.warning {
        eprintln!("warning: {w}");
    }
    let mut out = open_out(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    eprintln!("coverage {:.1}% ({}/{})", report.coverage_pct, report.parsed, report.total);
    Ok(())
}

/// Up to `per` messages for each of the first `patterns` gold templates seen.
fn sample_messages(
    set: &CompiledTemplateSet,
    inputs: &[PathBuf],
    patterns: usize,
    per: usize,
) -> Result<Vec<String>> {
    let mut order: Vec<TemplateId> = Vec::new();
    let mut kept: HashMap<TemplateId, Vec<String>> = HashMap::new();
    io::for_each_batch(inputs, |b| {
        for r in b {
            let Some(m) = set.match_line(&r.message) else { continue };
            let id = m.template.id();
            if !kept.contains_key(&id) {
                if order.len() == patterns {
                    continue;
                }
                order.push(id);
            }
            let v = kept.entry(id).or_default();
            if v.len() < per {
                v.push(r.message);
            }
        }
        Ok(())
    })?;
    Ok(order.iter().flat_map(|id| kept.remove(id).unwrap_or_default()).collect())
}

fn perturb(ctx: &Ctx, a: PerturbArgs) -> Result<()> {
    let tp = templates_path(ctx, a.templates)?;
    let inputs = inputs(ctx, a.inputs)?;
    let kinds: Vec<PerturbationKind> = if a.kinds.is_empty() {
        PerturbationKind::ALL.to_vec()
    } else {
        a.kinds
            .iter()
            .map(|k| k.parse().map_err(|e: logsift::robustness::UnknownKind| usage(e.to_string())))
            .collect::<Result<_>>()?
    };
    let set = io::load_templates(&tp)?;
    let messages = sample_messages(&set, &inputs, a.patterns, a.instances)?;
    if messages.is_empty() {
        bail!("no input line matches a gold template");
    }
    let opts = EvalOptions {
        seed: ctx.cfg.seed,
        level: if a.message_level { MetricLevel::Message } else { MetricLevel::Pattern },
        exec: ctx.exec,
    };
    let gold_extractor = GoldMatchExtractor(&set);
    let client;
    let llm;
    let extractor: &dyn PatternExtractor = match a.extractor {
        ExtractorKind::Masking => &MaskingExtractor,
        ExtractorKind::Gold => &gold_extractor,
        ExtractorKind::Llm => {
            client = llm_client(ctx, a.base_url, a.model)?.0;
            llm = LlmExtractor {
                client: &client,
                spec: PromptSpec::default(),
            };
            &llm
        }
    };
    let rows = evaluate(&set, &messages, &kinds, extractor, &opts)?;
    if a.extractor == ExtractorKind::Llm
        && rows.iter().all(|r| r.sample_count > 0 && r.extractor_errors == r.sample_count)
    {
        return Err(EndpointError("every extraction request failed".into()).into());
    }
    let mut out = open_out(a.out.as_deref())?;
    out.write_all(rows_to_csv(&rows).as_bytes())?;
    out.flush()?;
    if let Some(p) = &a.failures {
        let mut w = open_out(Some(p))?;
        for r in &rows {
            for f in &r.failure_examples {
                write_jsonl(&mut w, f)?;
            }
        }
        w.flush()?;
    }
    eprintln!("{} messages x {} kinds", messages.len(), kinds.len());
    Ok(())
}

fn pattern_lookup(templates: Option<&Path>) -> Result<Option<CompiledTemplateSet>> {
    match templates {
        None => Ok(None),
        Some(p) => {
            check_paths([p])?;
            Ok(Some(io::load_templates(p)?))
        }
    }
}

fn fingerprint_table(path: &Path) -> Result<FingerprintTable> {
    let mut t = FingerprintTable::new();
    io::for_each_event(path, |e| {
        t.observe(&e);
        Ok(())
    })?;
    Ok(t)
}

fn fingerprint(ctx: &Ctx, a: FingerprintArgs) -> Result<()> {
    check_paths([a.events.as_path()])?;
    let tp = a.templates.or_else(|| ctx.cfg.templates.clone());
    let set = pattern_lookup(tp.as_deref())?;
    let rows = fingerprint_table(&a.events)?
        .rows(|id| set.as_ref().and_then(|s| s.get(id)).map(|t| t.raw().to_string()));
    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Jsonl | Format::Json => {
            for r in &rows {
                write_jsonl(&mut out, r)?;
            }
        }
        Format::Tsv | Format::Csv => out.write_all(fingerprint_tsv(&rows).as_bytes())?,
    }
    out.flush()?;
    eprintln!("{} fingerprint rows", rows.len());
    Ok(())
}

fn severity_counts(path: &Path) -> Result<BTreeMap<Severity, u64>> {
    let mut counts = BTreeMap::new();
    io::for_each_event(path, |e: ParsedEvent| {
        *counts.entry(e.severity).or_default() += 1;
        Ok(())
    })?;
    Ok(counts)
}

fn severity_csv(counts: &BTreeMap<Severity, u64>) -> String {
    let mut s = String::from("severity,count,percent\n");
    for r in severity_shares(counts.iter().map(|(k, v)| (*k, *v))) {
        s.push_str(&format!("{},{},{:.3}\n", r.severity, r.count, r.percent));
    }
    s
}

fn severity(a: SeverityArgs) -> Result<()> {
    check_paths([a.events.as_path()])?;
    let counts = severity_counts(&a.events)?;
    let mut out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Jsonl | Format::Json => {
            for r in severity_shares(counts) {
                write_jsonl(&mut out, &r)?;
            }
        }
        _ => out.write_all(severity_csv(&counts).as_bytes())?,
    }
    out.flush()?;
    Ok(())
}

/// Maps an event to its histogram series name.
struct Keyer {
    by: GroupBy,
    set: Option<CompiledTemplateSet>,
    rules: CategoryRules,
    cache: HashMap<TemplateId, String>,
}

impl Keyer {
    fn new(by: GroupBy, set: Option<CompiledTemplateSet>, rules: CategoryRules) -> Result<Self> {
        if by == GroupBy::Category && set.is_none() {
            return Err(usage("--by category needs --templates"));
        }
        Ok(Keyer {
            by,
            set,
            rules,
            cache: HashMap::new(),
        })
    }

    fn key(&mut self, e: &ParsedEvent) -> String {
        match self.by {
            GroupBy::Severity => e.severity.as_str().to_string(),
            GroupBy::Template => e.template_id.to_string(),
            GroupBy::Category => {
                let (set, rules) = (&self.set, &self.rules);
                self.cache
                    .entry(e.template_id)
                    .or_insert_with(|| {
                        let pattern = set.as_ref().and_then(|s| s.get(e.template_id)).map(|t| t.raw());
                        rules.categorize(pattern.unwrap_or("")).to_string()
                    })
                    .clone()
            }
        }
    }
}

fn histogram(path: &Path, keyer: &mut Keyer, window: i64) -> Result<logsift::mining::Histogram> {
    let h = io::with_ok_items(io::events(path)?, |it| {
        temporal_histogram(it.filter_map(|e| Some((e.timestamp?, keyer.key(&e)))), window)
    })?;
    Ok(h?)
}

fn temporal(ctx: &Ctx, a: TemporalArgs) -> Result<()> {
    check_paths([a.events.as_path()])?;
    let window = a.window.unwrap_or(ctx.cfg.window_secs);
    let tp = a.templates.or_else(|| ctx.cfg.templates.clone());
    let mut keyer = Keyer::new(a.by, pattern_lookup(tp.as_deref())?, category_rules(a.rules.as_deref())?)?;
    let h = histogram(&a.events, &mut keyer, window).map_err(|e| {
        if e.downcast_ref::<logsift::mining::TemporalError>() == Some(&logsift::mining::TemporalError::BadWindow) {
            usage(e.to_string())
        } else {
            e
        }
    })?;
    let mut out = open_out(a.out.as_deref())?;
    out.write_all(h.to_csv().as_bytes())?;
    out.flush()?;
    if let Some(p) = &a.cdf_out {
        let mut w = open_out(Some(p))?;
        w.write_all(category_cdf(&h).to_csv().as_bytes())?;
        w.flush()?;
    }
    eprintln!("{} events in {} windows of {window}s", h.total(), h.windows.len());
    Ok(())
}

fn load_jobs(path: &Path) -> Result<JobIndex> {
    check_paths([path])?;
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let jobs = read_jobs_csv(f).with_context(|| format!("in {}", path.display()))?;
    Ok(JobIndex::build(jobs)?)
}

fn joined(index: &JobIndex, event: ParsedEvent) -> JoinedEvent {
    let job = match (&event.host, event.timestamp) {
        (Some(h), Some(t)) => index.lookup(h, t),
        _ => None,
    };
    JoinedEvent {
        job_id: job.map(|j| j.job_id.clone()),
        account: job.map(|j| j.account.clone()),
        matched: job.is_some(),
        event,
    }
}

fn jobs(a: JobsArgs) -> Result<()> {
    check_paths([a.events.as_path()])?;
    let index = load_jobs(&a.jobs)?;
    let mut out = open_out(a.out.as_deref())?;
    let (mut n, mut matched) = (0u64, 0u64);
    io::for_each_event(&a.events, |e| {
        let j = joined(&index, e);
        n += 1;
        matched += j.matched as u64;
        write_jsonl(&mut out, &j)
    })?;
    out.flush()?;
    eprintln!("{matched}/{n} events joined to {} jobs", index.jobs().len());
    Ok(())
}

fn category_account_matrix(
    events: &Path,
    index: &JobIndex,
    keyer: &mut Keyer,
) -> Result<CategoryDomainMatrix> {
    let mut counts: BTreeMap<(String, String), f64> = BTreeMap::new();
    io::for_each_event(events, |e| {
        let j = joined(index, e);
        if let Some(acct) = j.account {
            *counts.entry((keyer.key(&j.event), acct)).or_default() += 1.0;
        }
        Ok(())
    })?;
    if counts.is_empty() {
        bail!("no event falls inside any job");
    }
    Ok(CategoryDomainMatrix::from_counts(counts)?)
}

fn cluster(ctx: &Ctx, a: ClusterArgs) -> Result<()> {
    let m = match (&a.matrix, &a.events) {
        (Some(p), _) => {
            check_paths([p.as_path()])?;
            let text = std::fs::read_to_string(p)?;
            CategoryDomainMatrix::from_csv(&text).with_context(|| format!("in {}", p.display()))?
        }
        (None, Some(ev)) => {
            check_paths([ev.as_path()])?;
            let index = load_jobs(a.jobs.as_deref().ok_or_else(|| usage("--jobs is required"))?)?;
            let tp = templates_path(ctx, a.templates.clone())?;
            let mut keyer = Keyer::new(
                GroupBy::Category,
                Some(io::load_templates(&tp)?),
                category_rules(a.rules.as_deref())?,
            )?;
            category_account_matrix(ev, &index, &mut keyer)?
        }
        (None, None) => return Err(usage("give --matrix or --events/--jobs/--templates")),
    };
    let c = ward_cluster(&m)?;
    if c.row_dendrogram.degenerate || c.col_dendrogram.degenerate {
        eprintln!("warning: degenerate matrix (identical rows or columns); order follows labels");
    }
    let ordered = m.reordered(&c.row_order, &c.col_order);
    match a.out {
        None => {
            let mut out = open_out(None)?;
            out.write_all(ordered.to_csv().as_bytes())?;
            out.flush()?;
        }
        Some(dir) => {
            write_file(&dir, "matrix.csv", &m.to_csv())?;
            write_file(&dir, "matrix_ordered.csv", &ordered.to_csv())?;
            write_file(&dir, "row_order.txt", &(ordered.rows.join("\n") + "\n"))?;
            write_file(&dir, "col_order.txt", &(ordered.cols.join("\n") + "\n"))?;
            write_file(&dir, "dendrograms.json", &serde_json::to_string_pretty(&c)?)?;
        }
    }
    Ok(())
}

/// Numeric part of an id like `nid001234` or `x1000c2s3b0n1` (leading digits
/// after the first non-digit prefix).
fn numeric_id(v: &str) -> Option<f64> {
    let rest = v.trim_start_matches(|c: char| !c.is_ascii_digit());
    let end = rest.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(rest.len());
    rest[..end].parse().ok()
}

fn read_pairs(path: &Path) -> Result<Vec<WeightedPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| rec.get(k).map(|s| s.trim().parse::<f64>());
        match (num(0), num(1)) {
            (Some(Ok(x)), Some(Ok(y))) => {
                let w = match num(2) {
                    None => 1.0,
                    Some(Ok(w)) => w,
                    Some(Err(_)) => bail!("{}:{}: bad weight", path.display(), i + 1),
                };
                pts.push(WeightedPoint::new(x, y, w));
            }
            _ if i == 0 => continue,
            _ => bail!("{}:{}: expected x,y[,weight]", path.display(), i + 1),
        }
    }
    Ok(pts)
}

fn kde(ctx: &Ctx, a: KdeArgs) -> Result<()> {
    let pts = match (&a.pairs, &a.events) {
        (Some(p), _) => {
            check_paths([p.as_path()])?;
            read_pairs(p)?
        }
        (None, Some(ev)) => {
            check_paths([ev.as_path()])?;
            let (xv, yv) = (a.x_var.as_deref().unwrap_or(""), a.y_var.as_deref().unwrap_or(""));
            let mut pts = Vec::new();
            io::for_each_event(ev, |e| {
                let x = e.variables.get(xv).and_then(|v| numeric_id(v));
                let y = e.variables.get(yv).and_then(|v| numeric_id(v));
                if let (Some(x), Some(y)) = (x, y) {
                    pts.push(WeightedPoint::new(x, y, 1.0));
                }
                Ok(())
            })?;
            pts
        }
        (None, None) => return Err(usage("give --pairs or --events with --x-var/--y-var")),
    };
    let grid = kde_density(&pts, a.grid, a.bandwidth, ctx.exec).map_err(|e| match e {
        logsift::mining::KdeError::EmptyInput => anyhow!(e),
        other => usage(other.to_string()),
    })?;
    let mut out = open_out(a.out.as_deref())?;
    out.write_all(grid.to_csv().as_bytes())?;
    out.flush()?;
    eprintln!(
        "{} points, bandwidth ({:.4}, {:.4}), grid mass {:.4} before normalisation",
        pts.len(),
        grid.bandwidth.0,
        grid.bandwidth.1,
        grid.raw_mass
    );
    Ok(())
}

fn report(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    check_paths([a.events.as_path()])?;
    let dir = out_dir(ctx, a.out)?;
    let window = a.window.unwrap_or(ctx.cfg.window_secs);
    let tp = templates_path(ctx, a.templates)?;
    let set = io::load_templates(&tp)?;
    let jobs = a.jobs.as_deref().map(load_jobs).transpose()?;

    let rows = fingerprint_table(&a.events)?.rows(|id| set.get(id).map(|t| t.raw().to_string()));
    write_file(&dir, "fingerprint.tsv", &fingerprint_tsv(&rows))?;

    let counts = severity_counts(&a.events)?;
    write_file(&dir, "severity.csv", &severity_csv(&counts))?;
    let bars: Vec<(String, f64)> = severity_shares(counts.iter().map(|(k, v)| (*k, *v)))
        .into_iter()
        .map(|s| (s.severity.as_str().to_string(), s.percent))
        .collect();
    write_file(&dir, "severity.svg", &svg::bar_chart("Severity distribution", &bars, "%"))?;

    let mut keyer = Keyer::new(GroupBy::Category, Some(set), category_rules(a.rules.as_deref())?)?;
    let h = histogram(&a.events, &mut keyer, window)?;
    write_file(&dir, "temporal.csv", &h.to_csv())?;
    let cdf = category_cdf(&h);
    write_file(&dir, "cdf.csv", &cdf.to_csv())?;
    let t0 = h.windows.first().map_or(0.0, |(t, _)| t.as_secs_f64());
    let xs: Vec<f64> = cdf.window_ends.iter().map(|t| (t.as_secs_f64() - t0) / 86_400.0).collect();
    let mut totals: Vec<(u64, usize)> = h.category_totals().into_iter().zip(0..).collect();
    totals.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let series: Vec<(String, Vec<f64>)> = totals
        .iter()
        .take(10)
        .map(|&(_, c)| (cdf.categories[c].clone(), cdf.curves[c].clone()))
        .collect();
    write_file(
        &dir,
        "cdf.svg",
        &svg::line_chart("Cumulative events by category", &xs, &series, "days since first window"),
    )?;

    let mut written = 6;
    if let Some(index) = jobs {
        let m = category_account_matrix(&a.events, &index, &mut keyer)?;
        let c = ward_cluster(&m)?;
        let ordered = m.reordered(&c.row_order, &c.col_order);
        write_file(&dir, "matrix_ordered.csv", &ordered.to_csv())?;
        write_file(
            &dir,
            "heatmap.svg",
            &svg::heatmap("log10(1+count), Ward-ordered", &ordered.rows, &ordered.cols, &ordered.log_scaled()),
        )?;
        written += 2;
    }
    eprintln!("{written} files written to {}", dir.display());
    Ok(())
}

fn gen(ctx: &Ctx, a: GenArgs) -> Result<()> {
    if a.templates == 0 || a.lines < a.templates {
        return Err(usage("need --templates >= 1 and --lines >= --templates"));
    }
    let corpus = gen_corpus(a.templates, a.lines, ctx.cfg.seed);
    corpus
        .write_to(&a.out)
        .with_context(|| format!("writing corpus to {}", a.out.display()))?;
    eprintln!(
        "{} lines from {} templates written to {}",
        corpus.records.len(),
        corpus.templates.len(),
        a.out.display()
    );
    Ok(())
}

fn show(name: &str, m: &Matrix) -> String {
    let rows: Vec<String> = m
        .to_rows()
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("{name} = [{}]", rows.join(", "))
}

fn peft_demo(ctx: &Ctx, a: PeftArgs) -> Result<()> {
    let ad = LoraAdapter::new(
        Matrix::from_rows(&[vec![1.0], vec![2.0]])?,
        Matrix::from_rows(&[vec![3.0, 4.0]])?,
        2.0,
    )?;
    let w0 = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]])?;
    let mut out = open_out(None)?;
    writeln!(out, "W' = W0 + (alpha / r) * A * B")?;
    writeln!(out, "{}", show("A", &ad.a))?;
    writeln!(out, "{}", show("B", &ad.b))?;
    writeln!(out, "alpha = {}, r = {}, alpha / r = {}", ad.alpha, ad.rank, ad.scaling())?;
    writeln!(out, "{}", show("dW", &lora_delta(&ad)?))?;
    writeln!(out, "{}", show("W0", &w0))?;
    writeln!(out, "{}", show("W'", &lora_apply(&w0, &ad)?))?;
    if let Some(spec) = a.random {
        let dims: Vec<usize> = spec
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| usage("--random expects D,K,R"))?;
        let [d, k, r] = dims[..] else {
            return Err(usage("--random expects D,K,R"));
        };
        let ad = LoraAdapter::random(d, k, r, 16.0, ctx.cfg.seed).map_err(|e| usage(e.to_string()))?;
        let dw = lora_delta(&ad)?;
        writeln!(out, "random {d}x{k} adapter, r = {r}: rank(dW) = {}", dw.rank(1e-9))?;
    }
    out.flush()?;
    Ok(())
}
