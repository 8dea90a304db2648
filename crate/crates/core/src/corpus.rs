//! Corpus model and ingestion of CoNLL-style and JSONL span files.
//!
//! A [`Corpus`] is one split of a dataset. Labels are validated and
//! normalized at construction time, so everything downstream can assume
//! well-formed spans: BIO2 and IOB1 input is stored as BIO2, BIOES input
//! stays BIOES.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker written in place of whitespace inside a token when serializing to
/// CoNLL, which cannot represent whitespace tokens.
pub const WHITESPACE_TOKEN_MARKER: char = '\u{2581}';

const DOCSTART: &str = "-DOCSTART-";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: malformed line, expected `token<WS>tag`: {content:?}")]
    MalformedLine { line: usize, content: String },
    #[error("line {line}: invalid tag {tag:?} for scheme {scheme}")]
    InvalidTag { line: usize, tag: String, scheme: Scheme },
    #[error("line {line}: inconsistent tag {tag:?}: {reason}")]
    InconsistentTag {
        line: usize,
        tag: String,
        reason: &'static str,
    },
    #[error("line {line}: instance has no tokens")]
    EmptyInstance { line: usize },
    #[error("line {line}: tokens and labels differ in length ({tokens} vs {labels})")]
    LengthMismatch { line: usize, tokens: usize, labels: usize },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: span [{start}, {end}] out of range for text of {len} characters")]
    SpanOutOfRange {
        line: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("line {line}: overlapping spans at character {position}")]
    OverlappingSpans { line: usize, position: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::MalformedLine { line, .. }
            | ParseError::InvalidTag { line, .. }
            | ParseError::InconsistentTag { line, .. }
            | ParseError::EmptyInstance { line }
            | ParseError::LengthMismatch { line, .. }
            | ParseError::Json { line, .. }
            | ParseError::SpanOutOfRange { line, .. }
            | ParseError::OverlappingSpans { line, .. } => Some(*line),
            ParseError::Io(_) => None,
        }
    }
}

/// Token-level tagging scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Bio2,
    Bioes,
    /// Accepted on input only; normalized to BIO2.
    Iob1,
}

impl Scheme {
    /// The scheme labels are stored in after normalization.
    pub fn normalized(self) -> Scheme {
        match self {
            Scheme::Iob1 => Scheme::Bio2,
            s => s,
        }
    }

    fn allows(self, prefix: char) -> bool {
        match self {
            Scheme::Bio2 | Scheme::Iob1 => matches!(prefix, 'B' | 'I'),
            Scheme::Bioes => matches!(prefix, 'B' | 'I' | 'E' | 'S'),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Bio2 => "bio2",
            Scheme::Bioes => "bioes",
            Scheme::Iob1 => "iob1",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bio2" | "bio" => Ok(Scheme::Bio2),
            "bioes" | "iobes" => Ok(Scheme::Bioes),
            "iob1" | "iob" => Ok(Scheme::Iob1),
            other => Err(format!("unknown tagging scheme `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Dev,
    Test,
}

impl SplitKind {
    pub const ALL: [SplitKind; 3] = [SplitKind::Train, SplitKind::Dev, SplitKind::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Dev => "dev",
            SplitKind::Test => "test",
        }
    }
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitKind::Train),
            "dev" | "valid" | "validation" => Ok(SplitKind::Dev),
            "test" => Ok(SplitKind::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParseOptions {
    pub scheme: Scheme,
    /// Reject scheme violations instead of repairing them.
    pub strict: bool,
    /// Tokens are characters; mention surfaces are joined without a separator.
    pub char_tokenized: bool,
}

/// One sentence: tokens with aligned labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance {
    id: usize,
    tokens: Vec<String>,
    labels: Vec<String>,
}

impl Instance {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Identity used for duplicate and leakage checks.
    pub fn key(&self) -> (&[String], &[String]) {
        (&self.tokens, &self.labels)
    }

    /// Entity spans as `(start, end, type)` with `end` exclusive.
    pub fn spans(&self) -> Vec<(usize, usize, &str)> {
        let mut spans = Vec::new();
        let mut open: Option<(usize, &str)> = None;
        for (i, label) in self.labels.iter().enumerate() {
            let Some((prefix, etype)) = split_label(label) else {
                if let Some((start, t)) = open.take() {
                    spans.push((start, i, t));
                }
                continue;
            };
            let continues = matches!(prefix, 'I' | 'E') && open.is_some_and(|(_, t)| t == etype);
            if !continues {
                if let Some((start, t)) = open.take() {
                    spans.push((start, i, t));
                }
                open = Some((i, etype));
            }
            if matches!(prefix, 'E' | 'S') {
                let (start, t) = open.take().expect("span opened above");
                spans.push((start, i + 1, t));
            }
        }
        if let Some((start, t)) = open {
            spans.push((start, self.labels.len(), t));
        }
        spans
    }

    pub fn mention_count(&self) -> usize {
        self.spans().len()
    }

    pub fn has_entity(&self) -> bool {
        self.labels.iter().any(|l| l != "O")
    }

    pub fn surface(&self, start: usize, end: usize, separator: &str) -> String {
        self.tokens[start..end].join(separator)
    }
}

/// A typed span occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EntityMention {
    pub surface: String,
    pub etype: String,
    pub start: usize,
    pub end: usize,
    pub instance_id: usize,
}

/// Maximal tagged spans of `instance`, left to right.
pub fn extract_mentions(instance: &Instance, separator: &str) -> Vec<EntityMention> {
    instance
        .spans()
        .into_iter()
        .map(|(start, end, etype)| EntityMention {
            surface: instance.surface(start, end, separator),
            etype: etype.to_owned(),
            start,
            end,
            instance_id: instance.id,
        })
        .collect()
}

/// Unique mention surfaces. Type is not part of the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntitySet(BTreeSet<String>);

impl EntitySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, surface: String) -> bool {
        self.0.insert(surface)
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.0.contains(surface)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// `|self \ other|`
    pub fn difference_len(&self, other: &EntitySet) -> usize {
        self.0.difference(&other.0).count()
    }
}

impl FromIterator<String> for EntitySet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        EntitySet(iter.into_iter().collect())
    }
}

/// One split of a dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    split: SplitKind,
    scheme: Scheme,
    char_tokenized: bool,
    instances: Vec<Instance>,
    type_inventory: BTreeSet<String>,
    repaired_tags: usize,
}

impl Corpus {
    pub fn split(&self) -> SplitKind {
        self.split
    }

    /// Scheme the labels are stored in.
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn char_tokenized(&self) -> bool {
        self.char_tokenized
    }

    pub fn surface_separator(&self) -> &'static str {
        if self.char_tokenized {
            ""
        } else {
            " "
        }
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.instances.iter().map(Instance::len).sum()
    }

    /// Entity types observed (or explicitly supplied); `O` is never a member.
    pub fn type_inventory(&self) -> &BTreeSet<String> {
        &self.type_inventory
    }

    /// Number of labels rewritten by non-strict repair.
    pub fn repaired_tags(&self) -> usize {
        self.repaired_tags
    }

    pub fn mentions(&self, instance: &Instance) -> Vec<EntityMention> {
        extract_mentions(instance, self.surface_separator())
    }

    pub fn all_mentions(&self) -> impl Iterator<Item = EntityMention> + '_ {
        self.instances.iter().flat_map(|inst| self.mentions(inst))
    }

    pub fn entity_set(&self) -> EntitySet {
        let sep = self.surface_separator();
        self.instances
            .iter()
            .flat_map(|inst| inst.spans().into_iter().map(move |(s, e, _)| inst.surface(s, e, sep)))
            .collect()
    }

    /// Adds explicitly declared types to the inventory (observed types are always kept).
    pub fn with_type_inventory<I, S>(mut self, types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.type_inventory.extend(types.into_iter().map(Into::into));
        self
    }

    /// Copy of the instances whose ids are listed, in the given order. Ids are kept.
    pub fn select(&self, ids: &[usize]) -> Corpus {
        let by_id: BTreeMap<usize, &Instance> = self.instances.iter().map(|i| (i.id, i)).collect();
        let instances = ids
            .iter()
            .map(|id| (*by_id.get(id).expect("id belongs to corpus")).clone())
            .collect();
        Corpus {
            split: self.split,
            scheme: self.scheme,
            char_tokenized: self.char_tokenized,
            instances,
            type_inventory: self.type_inventory.clone(),
            repaired_tags: 0,
        }
    }

    pub fn write_conll<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (n, inst) in self.instances.iter().enumerate() {
            if n > 0 {
                out.write_all(b"\n")?;
            }
            for (tok, label) in inst.tokens.iter().zip(&inst.labels) {
                if tok.chars().any(char::is_whitespace) {
                    let escaped: String = tok
                        .chars()
                        .map(|c| if c.is_whitespace() { WHITESPACE_TOKEN_MARKER } else { c })
                        .collect();
                    writeln!(out, "{escaped}\t{label}")?;
                } else {
                    writeln!(out, "{tok}\t{label}")?;
                }
            }
        }
        Ok(())
    }

    pub fn to_conll(&self) -> String {
        let mut buf = Vec::new();
        self.write_conll(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("corpus text is UTF-8")
    }
}

/// Accumulates validated instances for one split.
///
/// Error line numbers for pushed instances refer to the position the token
/// would have in the CoNLL serialization of the corpus.
#[derive(Debug)]
pub struct CorpusBuilder {
    split: SplitKind,
    options: ParseOptions,
    instances: Vec<Instance>,
    repaired_tags: usize,
    next_line: usize,
}

impl CorpusBuilder {
    pub fn new(split: SplitKind, options: ParseOptions) -> Self {
        CorpusBuilder {
            split,
            options,
            instances: Vec::new(),
            repaired_tags: 0,
            next_line: 1,
        }
    }

    pub fn push(&mut self, tokens: Vec<String>, labels: Vec<String>) -> Result<(), ParseError> {
        let line = self.next_line;
        self.push_at(tokens, labels, line)
    }

    fn push_at(&mut self, tokens: Vec<String>, mut labels: Vec<String>, first_line: usize) -> Result<(), ParseError> {
        if tokens.is_empty() {
            return Err(ParseError::EmptyInstance { line: first_line });
        }
        if tokens.len() != labels.len() {
            return Err(ParseError::LengthMismatch {
                line: first_line,
                tokens: tokens.len(),
                labels: labels.len(),
            });
        }
        self.repaired_tags += normalize_labels(&mut labels, self.options, first_line)?;
        self.next_line = first_line + tokens.len() + 1;
        self.instances.push(Instance {
            id: self.instances.len(),
            tokens,
            labels,
        });
        Ok(())
    }

    pub fn build(self) -> Corpus {
        let type_inventory = self
            .instances
            .iter()
            .flat_map(|inst| inst.spans().into_iter().map(|(_, _, t)| t.to_owned()))
            .collect();
        Corpus {
            split: self.split,
            scheme: self.options.scheme.normalized(),
            char_tokenized: self.options.char_tokenized,
            instances: self.instances,
            type_inventory,
            repaired_tags: self.repaired_tags,
        }
    }
}

fn split_label(label: &str) -> Option<(char, &str)> {
    if label == "O" {
        return None;
    }
    let (prefix, etype) = label.split_once('-')?;
    let mut chars = prefix.chars();
    match (chars.next(), chars.next()) {
        (Some(p), None) if !etype.is_empty() => Some((p, etype)),
        _ => None,
    }
}

fn retag(label: &mut String, prefix: char) {
    let etype = label[label.find('-').expect("validated label") + 1..].to_owned();
    *label = format!("{prefix}-{etype}");
}

/// Validates `labels` against the scheme and rewrites them into normalized
/// form. Returns the number of repaired labels.
fn normalize_labels(labels: &mut [String], options: ParseOptions, first_line: usize) -> Result<usize, ParseError> {
    for (k, label) in labels.iter().enumerate() {
        let valid = label == "O" || split_label(label).is_some_and(|(p, _)| options.scheme.allows(p));
        if !valid {
            return Err(ParseError::InvalidTag {
                line: first_line + k,
                tag: label.clone(),
                scheme: options.scheme,
            });
        }
    }
    match options.scheme {
        Scheme::Bio2 | Scheme::Iob1 => normalize_bio(labels, options, first_line),
        Scheme::Bioes => normalize_bioes(labels, options.strict, first_line),
    }
}

fn normalize_bio(labels: &mut [String], options: ParseOptions, first_line: usize) -> Result<usize, ParseError> {
    let mut repaired = 0;
    let mut open: Option<String> = None;
    for (k, label) in labels.iter_mut().enumerate() {
        let Some((prefix, etype)) = split_label(label) else {
            open = None;
            continue;
        };
        let etype = etype.to_owned();
        if prefix == 'I' && open.as_deref() != Some(etype.as_str()) {
            match options.scheme {
                // IOB1 marks span starts with I-; this is normalization, not noise.
                Scheme::Iob1 => retag(label, 'B'),
                _ if options.strict => {
                    return Err(ParseError::InconsistentTag {
                        line: first_line + k,
                        tag: label.clone(),
                        reason: "I- tag does not continue a span of the same type",
                    })
                }
                _ => {
                    retag(label, 'B');
                    repaired += 1;
                }
            }
        }
        open = Some(etype);
    }
    Ok(repaired)
}

fn normalize_bioes(labels: &mut [String], strict: bool, first_line: usize) -> Result<usize, ParseError> {
    let mut repaired = 0;
    // (index of the last label of the open span, its type)
    let mut open: Option<(usize, String)> = None;

    fn close_unterminated(
        labels: &mut [String],
        open: &mut Option<(usize, String)>,
        strict: bool,
        line: usize,
        repaired: &mut usize,
    ) -> Result<(), ParseError> {
        if let Some((last, _)) = open.take() {
            if strict {
                return Err(ParseError::InconsistentTag {
                    line,
                    tag: labels[last].clone(),
                    reason: "span is not terminated by E- tag",
                });
            }
            let closing = if labels[last].starts_with('B') { 'S' } else { 'E' };
            retag(&mut labels[last], closing);
            *repaired += 1;
        }
        Ok(())
    }

    for k in 0..labels.len() {
        let line = first_line + k;
        let parsed = split_label(&labels[k]).map(|(p, t)| (p, t.to_owned()));
        let Some((prefix, etype)) = parsed else {
            close_unterminated(labels, &mut open, strict, line, &mut repaired)?;
            continue;
        };
        let continues = open.as_ref().is_some_and(|(_, t)| *t == etype);
        match prefix {
            'I' | 'E' if continues => {
                open = if prefix == 'I' { Some((k, etype)) } else { None };
            }
            'I' | 'E' => {
                close_unterminated(labels, &mut open, strict, line, &mut repaired)?;
                if strict {
                    return Err(ParseError::InconsistentTag {
                        line,
                        tag: labels[k].clone(),
                        reason: "tag does not continue a span of the same type",
                    });
                }
                let start = if prefix == 'I' { 'B' } else { 'S' };
                retag(&mut labels[k], start);
                repaired += 1;
                open = if prefix == 'I' { Some((k, etype)) } else { None };
            }
            'B' => {
                close_unterminated(labels, &mut open, strict, line, &mut repaired)?;
                open = Some((k, etype));
            }
            _ => {
                close_unterminated(labels, &mut open, strict, line, &mut repaired)?;
            }
        }
    }
    let line = first_line + labels.len().saturating_sub(1);
    close_unterminated(labels, &mut open, strict, line, &mut repaired)?;
    Ok(repaired)
}

/// Reads a CoNLL-style file: one `token ... tag` line per token (first field
/// is the token, last is the tag), blank lines between instances,
/// `-DOCSTART-` lines ignored.
pub fn read_conll<R: BufRead>(reader: R, split: SplitKind, options: ParseOptions) -> Result<Corpus, ParseError> {
    let mut builder = CorpusBuilder::new(split, options);
    let mut tokens = Vec::new();
    let mut labels = Vec::new();
    let mut first_line = 0;

    let mut flush = |tokens: &mut Vec<String>, labels: &mut Vec<String>, first_line: usize| {
        if tokens.is_empty() {
            return Ok(());
        }
        builder.push_at(std::mem::take(tokens), std::mem::take(labels), first_line)
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(DOCSTART) {
            flush(&mut tokens, &mut labels, first_line)?;
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let token = fields.next().expect("line is non-blank");
        let Some(tag) = fields.last() else {
            return Err(ParseError::MalformedLine {
                line: lineno,
                content: line.clone(),
            });
        };
        if tokens.is_empty() {
            first_line = lineno;
        }
        tokens.push(token.to_owned());
        labels.push(tag.to_owned());
    }
    flush(&mut tokens, &mut labels, first_line)?;
    Ok(builder.build())
}

pub fn parse_conll(text: &str, split: SplitKind, options: ParseOptions) -> Result<Corpus, ParseError> {
    read_conll(text.as_bytes(), split, options)
}

#[derive(Deserialize)]
struct SpanRecord {
    text: String,
    #[serde(default)]
    label: BTreeMap<String, BTreeMap<String, Vec<[usize; 2]>>>,
}

/// Reads a JSONL span file (`{"text": ..., "label": {type: {surface: [[start, end]]}}}`,
/// inclusive character offsets). Tokens are characters; labels become BIO2.
pub fn read_jsonl_spans<R: BufRead>(reader: R, split: SplitKind) -> Result<Corpus, ParseError> {
    let options = ParseOptions {
        scheme: Scheme::Bio2,
        strict: true,
        char_tokenized: true,
    };
    let mut builder = CorpusBuilder::new(split, options);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: SpanRecord =
            serde_json::from_str(&line).map_err(|source| ParseError::Json { line: lineno, source })?;
        let tokens: Vec<String> = record.text.chars().map(String::from).collect();
        let len = tokens.len();
        let mut labels: Vec<Option<String>> = vec![None; len];
        for (etype, surfaces) in &record.label {
            for spans in surfaces.values() {
                for &[start, end] in spans {
                    if start > end || end >= len {
                        return Err(ParseError::SpanOutOfRange {
                            line: lineno,
                            start,
                            end,
                            len,
                        });
                    }
                    for (pos, slot) in labels.iter_mut().enumerate().take(end + 1).skip(start) {
                        if slot.is_some() {
                            return Err(ParseError::OverlappingSpans {
                                line: lineno,
                                position: pos,
                            });
                        }
                        let prefix = if pos == start { 'B' } else { 'I' };
                        *slot = Some(format!("{prefix}-{etype}"));
                    }
                }
            }
        }
        let labels = labels
            .into_iter()
            .map(|l| l.unwrap_or_else(|| "O".to_owned()))
            .collect();
        builder.push_at(tokens, labels, lineno)?;
    }
    Ok(builder.build())
}

pub fn parse_jsonl_spans(text: &str, split: SplitKind) -> Result<Corpus, ParseError> {
    read_jsonl_spans(text.as_bytes(), split)
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{split} split uses scheme {found}, expected {expected}")]
    SchemeMismatch {
        split: SplitKind,
        expected: Scheme,
        found: Scheme,
    },
    #[error("{split} split tokenization differs from the train split")]
    TokenizationMismatch { split: SplitKind },
    #[error("corpus passed as {expected} is tagged as {found}")]
    WrongSplit { expected: SplitKind, found: SplitKind },
}

/// Train split plus optional dev and test splits sharing one scheme.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    train: Corpus,
    dev: Option<Corpus>,
    test: Option<Corpus>,
}

impl DatasetBundle {
    pub fn new(train: Corpus, dev: Option<Corpus>, test: Option<Corpus>) -> Result<Self, BundleError> {
        for (expected, corpus) in [
            (SplitKind::Train, Some(&train)),
            (SplitKind::Dev, dev.as_ref()),
            (SplitKind::Test, test.as_ref()),
        ] {
            let Some(corpus) = corpus else { continue };
            if corpus.split != expected {
                return Err(BundleError::WrongSplit {
                    expected,
                    found: corpus.split,
                });
            }
            if corpus.scheme != train.scheme {
                return Err(BundleError::SchemeMismatch {
                    split: expected,
                    expected: train.scheme,
                    found: corpus.scheme,
                });
            }
            if corpus.char_tokenized != train.char_tokenized {
                return Err(BundleError::TokenizationMismatch { split: expected });
            }
        }
        Ok(DatasetBundle { train, dev, test })
    }

    pub fn train(&self) -> &Corpus {
        &self.train
    }

    pub fn dev(&self) -> Option<&Corpus> {
        self.dev.as_ref()
    }

    pub fn test(&self) -> Option<&Corpus> {
        self.test.as_ref()
    }

    pub fn get(&self, split: SplitKind) -> Option<&Corpus> {
        match split {
            SplitKind::Train => Some(&self.train),
            SplitKind::Dev => self.dev(),
            SplitKind::Test => self.test(),
        }
    }

    /// Present splits in train, dev, test order.
    pub fn splits(&self) -> impl Iterator<Item = &Corpus> {
        std::iter::once(&self.train)
            .chain(self.dev.as_ref())
            .chain(self.test.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bio2() -> ParseOptions {
        ParseOptions::default()
    }

    fn strict(scheme: Scheme) -> ParseOptions {
        ParseOptions {
            scheme,
            strict: true,
            char_tokenized: false,
        }
    }

    fn labels_of(c: &Corpus, i: usize) -> Vec<&str> {
        c.instances()[i].labels().iter().map(String::as_str).collect()
    }

    #[test]
    fn two_line_fixture() {
        let c = parse_conll("EU B-ORG\nrejects O\n", SplitKind::Train, bio2()).unwrap();
        assert_eq!(c.len(), 1);
        let m = c.all_mentions().collect::<Vec<_>>();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].surface.as_str(), m[0].etype.as_str()), ("EU", "ORG"));
    }

    #[test]
    fn empty_input() {
        let c = parse_conll("", SplitKind::Test, bio2()).unwrap();
        assert!(c.is_empty());
        assert!(c.type_inventory().is_empty());
    }

    #[test]
    fn strict_dangling_inside() {
        let err = parse_conll("x I-PER\n", SplitKind::Train, strict(Scheme::Bio2)).unwrap_err();
        assert!(matches!(err, ParseError::InconsistentTag { line: 1, .. }), "{err}");
    }

    #[test]
    fn strict_type_switch_reports_line() {
        let text = "a O\n\nb B-PER\nc I-LOC\n";
        let err = parse_conll(text, SplitKind::Train, strict(Scheme::Bio2)).unwrap_err();
        assert_eq!(err.line(), Some(4));
    }

    #[test]
    fn lenient_repairs_dangling_inside() {
        let c = parse_conll("x I-PER\ny I-PER\nz I-LOC\n", SplitKind::Train, bio2()).unwrap();
        assert_eq!(labels_of(&c, 0), ["B-PER", "I-PER", "B-LOC"]);
        assert_eq!(c.repaired_tags(), 2);
    }

    #[test]
    fn iob1_normalized_without_repair_count() {
        let opts = ParseOptions {
            scheme: Scheme::Iob1,
            strict: true,
            char_tokenized: false,
        };
        let c = parse_conll("a I-PER\nb I-PER\nc B-PER\nd O\ne I-LOC\n", SplitKind::Train, opts).unwrap();
        assert_eq!(labels_of(&c, 0), ["B-PER", "I-PER", "B-PER", "O", "B-LOC"]);
        assert_eq!(c.repaired_tags(), 0);
        assert_eq!(c.scheme(), Scheme::Bio2);
    }

    #[test]
    fn malformed_line() {
        let err = parse_conll("a O\nlonely\n", SplitKind::Train, bio2()).unwrap_err();
        assert!(matches!(err, ParseError::MalformedLine { line: 2, .. }));
    }

    #[test]
    fn invalid_tag() {
        let err = parse_conll("a X-PER\n", SplitKind::Train, bio2()).unwrap_err();
        assert!(matches!(err, ParseError::InvalidTag { .. }));
        let err = parse_conll("a S-PER\n", SplitKind::Train, bio2()).unwrap_err();
        assert!(matches!(err, ParseError::InvalidTag { .. }));
        let err = parse_conll("a B-\n", SplitKind::Train, bio2()).unwrap_err();
        assert!(matches!(err, ParseError::InvalidTag { .. }));
    }

    #[test]
    fn docstart_and_multi_column() {
        let text = "-DOCSTART- -X- -X- O\n\nEU NNP B-NP B-ORG\nrejects VBZ B-VP O\r\n\n\n\nPeter NNP B-NP B-PER\n";
        let c = parse_conll(text, SplitKind::Train, bio2()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.instances()[0].tokens(), ["EU", "rejects"]);
        assert_eq!(labels_of(&c, 1), ["B-PER"]);
        assert_eq!(c.instances()[1].id(), 1);
    }

    #[test]
    fn mentions_multi_token() {
        let c = parse_conll("John B-PER\nSmith I-PER\nruns O\n", SplitKind::Train, bio2()).unwrap();
        let m = c.mentions(&c.instances()[0]);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "John Smith");
        assert_eq!((m[0].start, m[0].end), (0, 2));
    }

    #[test]
    fn mentions_all_outside() {
        let c = parse_conll("a O\nb O\n", SplitKind::Train, bio2()).unwrap();
        assert!(c.mentions(&c.instances()[0]).is_empty());
    }

    #[test]
    fn adjacent_begin_starts_new_span() {
        let c = parse_conll("a B-PER\nb B-PER\n", SplitKind::Train, bio2()).unwrap();
        let m = c.mentions(&c.instances()[0]);
        assert_eq!(m.len(), 2);
        assert_eq!((m[1].start, m[1].end), (1, 2));
    }

    #[test]
    fn char_tokenized_surfaces_have_no_separator() {
        let opts = ParseOptions {
            char_tokenized: true,
            ..bio2()
        };
        let c = parse_conll("北 B-LOC\n京 I-LOC\n", SplitKind::Train, opts).unwrap();
        assert!(c.entity_set().contains("北京"));
    }

    #[test]
    fn bioes_spans_and_strictness() {
        let text = "a B-PER\nb I-PER\nc E-PER\nd S-LOC\ne O\n";
        let c = parse_conll(text, SplitKind::Train, strict(Scheme::Bioes)).unwrap();
        let spans = c.instances()[0].spans();
        assert_eq!(spans, vec![(0, 3, "PER"), (3, 4, "LOC")]);

        let err = parse_conll("a B-PER\nb O\n", SplitKind::Train, strict(Scheme::Bioes)).unwrap_err();
        assert!(matches!(err, ParseError::InconsistentTag { line: 2, .. }), "{err}");
        let err = parse_conll("a E-PER\n", SplitKind::Train, strict(Scheme::Bioes)).unwrap_err();
        assert!(matches!(err, ParseError::InconsistentTag { line: 1, .. }));
    }

    #[test]
    fn bioes_lenient_repair() {
        let opts = ParseOptions {
            scheme: Scheme::Bioes,
            ..bio2()
        };
        let c = parse_conll("a B-PER\nb O\nc I-LOC\nd I-LOC\ne E-ORG\n", SplitKind::Train, opts).unwrap();
        assert_eq!(labels_of(&c, 0), ["S-PER", "O", "B-LOC", "E-LOC", "S-ORG"]);
        assert_eq!(c.repaired_tags(), 4);
        assert_eq!(c.instances()[0].mention_count(), 3);
    }

    #[test]
    fn jsonl_single_char_span() {
        let c = parse_jsonl_spans(r#"{"text": "ab", "label": {"PER": {"a": [[0, 0]]}}}"#, SplitKind::Train).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(labels_of(&c, 0), ["B-PER", "O"]);
        assert!(c.char_tokenized());
    }

    #[test]
    fn jsonl_multi_char_and_unlabeled() {
        let text = "{\"text\": \"去北京玩\", \"label\": {\"LOC\": {\"北京\": [[1, 2]]}}}\n\n{\"text\": \"好\"}\n";
        let c = parse_jsonl_spans(text, SplitKind::Dev).unwrap();
        assert_eq!(labels_of(&c, 0), ["O", "B-LOC", "I-LOC", "O"]);
        assert_eq!(labels_of(&c, 1), ["O"]);
        assert!(c.entity_set().contains("北京"));
    }

    #[test]
    fn jsonl_errors() {
        let err =
            parse_jsonl_spans(r#"{"text": "ab", "label": {"PER": {"b": [[1, 2]]}}}"#, SplitKind::Train).unwrap_err();
        assert!(matches!(err, ParseError::SpanOutOfRange { end: 2, len: 2, .. }));

        let err = parse_jsonl_spans(
            r#"{"text": "ab", "label": {"PER": {"a": [[0, 0]]}, "LOC": {"ab": [[0, 1]]}}}"#,
            SplitKind::Train,
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::OverlappingSpans { position: 0, .. }));

        let err = parse_jsonl_spans("{\"text\": \"a\"}\nnot json\n", SplitKind::Train).unwrap_err();
        assert!(matches!(err, ParseError::Json { line: 2, .. }));

        let err = parse_jsonl_spans(r#"{"text": ""}"#, SplitKind::Train).unwrap_err();
        assert!(matches!(err, ParseError::EmptyInstance { line: 1 }));
    }

    #[test]
    fn whitespace_tokens_escaped_on_write() {
        let c = parse_jsonl_spans(r#"{"text": "a b"}"#, SplitKind::Train).unwrap();
        assert_eq!(c.to_conll(), "a\tO\n\u{2581}\tO\nb\tO\n");
    }

    #[test]
    fn builder_rejects_length_mismatch() {
        let mut b = CorpusBuilder::new(SplitKind::Train, bio2());
        let err = b.push(vec!["a".into()], vec![]).unwrap_err();
        assert!(matches!(err, ParseError::LengthMismatch { .. }));
    }

    #[test]
    fn explicit_inventory_keeps_observed_types() {
        let c = parse_conll("a B-PER\n", SplitKind::Train, bio2())
            .unwrap()
            .with_type_inventory(["LOC"]);
        assert_eq!(c.type_inventory().iter().collect::<Vec<_>>(), ["LOC", "PER"]);
    }

    #[test]
    fn bundle_rejects_scheme_mismatch() {
        let train = parse_conll("a B-PER\n", SplitKind::Train, bio2()).unwrap();
        let test = parse_conll(
            "a S-PER\n",
            SplitKind::Test,
            ParseOptions {
                scheme: Scheme::Bioes,
                ..bio2()
            },
        )
        .unwrap();
        assert!(matches!(
            DatasetBundle::new(train, None, Some(test)),
            Err(BundleError::SchemeMismatch { .. })
        ));
    }
}
