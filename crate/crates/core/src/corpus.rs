//! Synthetic corpora with known generating templates.
//!
//! Literal words are letters (plus an optional trailing `:`), so masking never
//! touches them, and every placeholder is filled from its masking class. Lines
//! of one template therefore share one signature, and each line's own
//! template is its unique most specific match.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::model::{LogTemplate, RawLogRecord, Timestamp, Token};
use crate::signature::VarClass;

pub const ZIPF_EXPONENT: f64 = 1.1;
/// 2025-01-01T00:00:00Z
pub const CORPUS_EPOCH: i64 = 1_735_689_600;
pub const CORPUS_SPAN_SECS: i64 = 28 * 86_400;
pub const CORPUS_HOSTS: u32 = 256;

const SOURCES: &[&str] = &[
    "kernel:", "slurmd:", "sshd:", "systemd:", "cxi_core:", "lnet:", "lustre:", "amdgpu:",
    "nvme:", "mce:", "hsn:", "rasdaemon:", "crond:", "munged:", "dvs:", "pcieport:",
];

const WORDS: &[&str] = &[
    "error", "warning", "info", "failed", "timeout", "timed", "out", "retry", "link", "down",
    "up", "node", "job", "started", "stopped", "completed", "session", "opened", "closed",
    "user", "connection", "accepted", "refused", "memory", "allocation", "page", "fault",
    "queue", "request", "reply", "client", "server", "mount", "port", "switch", "fabric",
    "congestion", "reset", "heartbeat", "lost", "sync", "daemon", "corrected", "ecc",
    "critical", "fatal", "panic", "degraded", "notice", "debug", "buffer", "flush", "cache",
    "thermal", "throttle", "power", "state", "change", "device", "driver", "loaded",
    "unloaded", "interface", "route", "peer", "target", "object", "lock", "granted",
    "blocked", "evicted", "recovery", "complete", "pending", "scheduled", "signal",
    "terminated", "exit", "status", "from", "to", "on", "for", "with", "at", "by", "in",
    "(ok)", "[main]", "{fabric}", "(retry)", "[hsn]",
];

const BRACKETS: &[(char, char)] = &[('(', ')'), ('[', ']'), ('{', '}')];

const KEYS: &[&str] = &["pid", "job", "nid", "addr", "size", "rc", "port", "uid", "lba", "seq"];

/// Generated templates, lines and the template index of each line.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub templates: Vec<LogTemplate>,
    pub records: Vec<RawLogRecord>,
    pub gold: Vec<usize>,
}

impl Corpus {
    /// Writes `corpus.log`, `gold_templates.txt` and `gold_map.tsv`
    /// (`line_no<TAB>template_id`) into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut log = io::BufWriter::new(std::fs::File::create(dir.join("corpus.log"))?);
        for r in &self.records {
            writeln!(log, "{}", r.to_line())?;
        }
        log.flush()?;
        let mut t = io::BufWriter::new(std::fs::File::create(dir.join("gold_templates.txt"))?);
        for tpl in &self.templates {
            writeln!(t, "{}", tpl.raw())?;
        }
        t.flush()?;
        let mut m = io::BufWriter::new(std::fs::File::create(dir.join("gold_map.tsv"))?);
        for (r, &g) in self.records.iter().zip(&self.gold) {
            writeln!(m, "{}\t{}", r.line_no, self.templates[g].id())?;
        }
        m.flush()
    }

    /// Line counts per template index.
    pub fn template_counts(&self) -> Vec<u64> {
        let mut c = vec![0u64; self.templates.len()];
        for &g in &self.gold {
            c[g] += 1;
        }
        c
    }
}

#[derive(Debug, Clone)]
struct Slot {
    prefix: String,
    class: VarClass,
    suffix: String,
}

#[derive(Debug, Clone)]
enum Word {
    Lit(String),
    Var(Slot),
}

/// A template plus the class of each placeholder, ready for instantiation.
#[derive(Debug, Clone)]
pub struct TemplateSpec {
    template: LogTemplate,
    words: Vec<Word>,
}

impl TemplateSpec {
    pub fn template(&self) -> &LogTemplate {
        &self.template
    }

    /// Fills every placeholder with a fresh value of its class.
    pub fn instantiate<R: Rng + ?Sized>(&self, rng: &mut R) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match w {
                Word::Lit(s) => out.push_str(s),
                Word::Var(slot) => {
                    out.push_str(&slot.prefix);
                    out.push_str(&slot.class.sample(rng));
                    out.push_str(&slot.suffix);
                }
            }
        }
        out
    }
}

fn random_spec<R: Rng + ?Sized>(rng: &mut R) -> (TemplateSpec, String) {
    let len = rng.random_range(2..=12usize);
    let n_vars = rng.random_range(0..=4usize.min(len - 1));
    let mut var_pos: Vec<usize> = rand::seq::index::sample(rng, len - 1, n_vars)
        .into_iter()
        .map(|p| p + 1)
        .collect();
    var_pos.sort_unstable();
    let mut counters: BTreeMap<VarClass, u32> = BTreeMap::new();
    let mut words = Vec::with_capacity(len);
    let mut tokens = Vec::with_capacity(len);
    let mut shape = String::new();
    for pos in 0..len {
        if var_pos.binary_search(&pos).is_ok() {
            let class = *VarClass::GENERATED.choose(rng).expect("non-empty");
            let (prefix, suffix) = match rng.random_range(0..20u8) {
                0..=5 => (format!("{}=", KEYS.choose(rng).expect("non-empty")), String::new()),
                6..=8 => {
                    let (o, c) = *BRACKETS.choose(rng).expect("non-empty");
                    (o.to_string(), c.to_string())
                }
                _ => (String::new(), String::new()),
            };
            let n = counters.entry(class).or_insert(0);
            *n += 1;
            let mut toks = Vec::new();
            if !prefix.is_empty() {
                toks.push(Token::Literal(prefix.clone()));
            }
            toks.push(Token::Placeholder(format!("{}{}", class.stem(), n)));
            if !suffix.is_empty() {
                toks.push(Token::Literal(suffix.clone()));
            }
            shape.push_str(&prefix);
            shape.push('\u{1}');
            shape.push_str(&suffix);
            tokens.push(toks);
            words.push(Word::Var(Slot { prefix, class, suffix }));
        } else {
            let w = if pos == 0 {
                SOURCES.choose(rng)
            } else {
                WORDS.choose(rng)
            }
            .expect("non-empty")
            .to_string();
            shape.push_str(&w);
            tokens.push(vec![Token::Literal(w.clone())]);
            words.push(Word::Lit(w));
        }
        shape.push(' ');
    }
    let template = LogTemplate::from_words(tokens).expect("generated template is well formed");
    (TemplateSpec { template, words }, shape)
}

/// `k` distinct templates. Two templates never differ only in placeholder
/// classes, so no line can match two of them equally well.
pub fn gen_templates(k: usize, seed: u64) -> Vec<TemplateSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e3d_1a55_0000_0001);
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let (spec, shape) = random_spec(&mut rng);
        if seen.insert(shape) {
            out.push(spec);
        }
    }
    out
}

/// `n` lines over `k` templates, picked with Zipf weights (template 0 is the
/// most frequent). Timestamps rise evenly over four weeks; hosts are drawn
/// from `frontier00001..`.
///
/// # Panics
/// If `k == 0` or `n < k`.
pub fn gen_corpus(k: usize, n: usize, seed: u64) -> Corpus {
    assert!(k >= 1 && n >= k, "need k >= 1 and n >= k");
    let specs = gen_templates(k, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = Zipf::new(k as f64, ZIPF_EXPONENT).expect("valid Zipf parameters");
    let span_ns = CORPUS_SPAN_SECS as i128 * 1_000_000_000;
    let mut records = Vec::with_capacity(n);
    let mut gold = Vec::with_capacity(n);
    for i in 0..n {
        let t = zipf.sample(&mut rng) as usize - 1;
        let msg = specs[t].instantiate(&mut rng);
        let ns = CORPUS_EPOCH as i128 * 1_000_000_000 + span_ns * i as i128 / n as i128;
        let host = format!("frontier{:05}", rng.random_range(1..=CORPUS_HOSTS));
        records.push(
            RawLogRecord::new(i as u64 + 1, msg).with_meta(Some(Timestamp(ns as i64)), Some(host)),
        );
        gold.push(t);
    }
    Corpus {
        templates: specs.into_iter().map(|s| s.template).collect(),
        records,
        gold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::CompiledTemplateSet;
    use crate::robustness::class_template;
    use crate::signature::mask;

    #[test]
    fn one_template_three_lines() {
        let c = gen_corpus(1, 3, 1);
        assert_eq!(c.templates.len(), 1);
        assert_eq!(c.gold, vec![0, 0, 0]);
    }

    #[test]
    fn lines_match_their_own_template() {
        let c = gen_corpus(60, 3000, 9);
        let set = CompiledTemplateSet::compile(c.templates.clone()).unwrap();
        for (r, &g) in c.records.iter().zip(&c.gold) {
            let m = set.match_line(&r.message).expect("every line parses");
            assert_eq!(m.template.id(), c.templates[g].id(), "{}", r.message);
            assert_eq!(class_template(&r.message).unwrap().raw(), c.templates[g].raw());
        }
    }

    #[test]
    fn one_masked_form_per_template() {
        let c = gen_corpus(40, 2000, 3);
        let mut forms: BTreeMap<usize, String> = BTreeMap::new();
        for (r, &g) in c.records.iter().zip(&c.gold) {
            let m = mask(&r.message);
            assert_eq!(forms.entry(g).or_insert_with(|| m.clone()), &m);
        }
        let distinct: HashSet<&String> = forms.values().collect();
        assert_eq!(distinct.len(), forms.len());
    }

    #[test]
    fn zipf_head_beats_uniform_share() {
        let c = gen_corpus(50, 20_000, 5);
        let counts = c.template_counts();
        assert!(counts[0] as f64 >= 20_000.0 / 50.0);
        assert_eq!(counts.iter().sum::<u64>(), 20_000);
    }

    #[test]
    fn deterministic() {
        let a = gen_corpus(20, 500, 11);
        let b = gen_corpus(20, 500, 11);
        assert_eq!(a.records, b.records);
        assert_eq!(a.templates, b.templates);
    }

    #[test]
    fn template_shape_limits() {
        for s in gen_templates(300, 2) {
            let t = s.template();
            assert!((2..=12).contains(&t.word_count()));
            assert!(t.placeholder_count() <= 4);
        }
    }
}
