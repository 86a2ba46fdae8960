//! Finite prefixes of the limiting random elements of `S(N, N*)`.
//!
//! Each limit is a concatenation of independent segments. The generators
//! draw segments until at least `m` entries exist and truncate; the
//! [`SegmentTrace`] keeps the full extent and the draws of every segment
//! that was started, plus the stream position the run began at, so any
//! prefix can be regenerated bit for bit.
//!
//! Avoider blocks have heavy-tailed lengths (`P(X ≥ k) ~ (πk)^{-1/2}`), so
//! only the entries that land in the prefix are produced; see
//! [`crate::sampler::sample_avoider_prefix`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::{EmpiricalDist, Histogram};
use crate::error::{Error, Result};
use crate::par::fold_trials;
use crate::perm::Pattern;
use crate::rng::RngStream;
use crate::sampler::{sample_avoider_prefix, sample_birr_321, DEFAULT_MATERIALIZE_LIMIT};
use crate::variates::{sample_chi, sample_hat_x, sample_x, sample_y};

/// An element of `N* = N ∪ {∞}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtEntry {
    Finite(u64),
    Infinity,
}

impl ExtEntry {
    pub fn finite(self) -> Option<u64> {
        match self {
            ExtEntry::Finite(v) => Some(v),
            ExtEntry::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == ExtEntry::Infinity
    }
}

impl fmt::Display for ExtEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtEntry::Finite(v) => write!(f, "{v}"),
            ExtEntry::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for ExtEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" => Ok(ExtEntry::Infinity),
            tok => match tok.parse::<u64>() {
                Ok(v) if v >= 1 => Ok(ExtEntry::Finite(v)),
                _ => Err(Error::Parse(format!("expected a positive integer or \"inf\", got {tok:?}"))),
            },
        }
    }
}

/// Which limiting object a generator produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitKind {
    #[serde(rename = "312")]
    L312,
    #[serde(rename = "231")]
    L231,
    #[serde(rename = "213")]
    L213,
    #[serde(rename = "321-partial")]
    L321Partial,
}

impl LimitKind {
    pub fn for_pattern(pattern: Pattern) -> Result<Self> {
        match pattern {
            Pattern::P312 => Ok(LimitKind::L312),
            Pattern::P231 => Ok(LimitKind::L231),
            Pattern::P213 => Ok(LimitKind::L213),
            Pattern::P321 => Ok(LimitKind::L321Partial),
            Pattern::P123 | Pattern::P132 => Err(Error::UnsupportedPattern {
                pattern,
                reason: "degenerate limit: the uniform measures converge to the constant sequence (∞, ∞, ...), so there is nothing to sample",
            }),
        }
    }

    pub fn pattern(self) -> Pattern {
        match self {
            LimitKind::L312 => Pattern::P312,
            LimitKind::L231 => Pattern::P231,
            LimitKind::L213 => Pattern::P213,
            LimitKind::L321Partial => Pattern::P321,
        }
    }
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitKind::L321Partial => f.write_str("321-partial"),
            other => write!(f, "{}", other.pattern()),
        }
    }
}

impl FromStr for LimitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "321-partial" | "321" => Ok(LimitKind::L321Partial),
            other => LimitKind::for_pattern(other.parse()?),
        }
    }
}

/// How the second geometric sequence in the 213 limit is read.
///
/// The statement of the 213 limit names two geometric sequences but its
/// interval formula refers to a third index. Under either reading the
/// sweep counts are i.i.d. Geom(1/2) independent of everything else, so
/// the law is the same; the flag only changes which stream supplies them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepReading {
    /// Sweep counts are the `Y^(0)` sequence, drawn in line with the rest.
    #[default]
    ReuseY0,
    /// Sweep counts come from a dedicated child stream.
    ThirdSequence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitOptions {
    /// Avoider blocks up to this length are sampled whole.
    pub materialize_limit: u64,
    /// Block-irreducible 321 blocks longer than this are not materialised;
    /// the prefix stops before them.
    pub max_birr_block: u64,
    pub sweep_reading: SweepReading,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            materialize_limit: DEFAULT_MATERIALIZE_LIMIT,
            max_birr_block: 1 << 16,
            sweep_reading: SweepReading::ReuseY0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    AvoiderBlock,
    Singleton,
    InfinityRun,
    BirrBlock,
    TailMarker,
}

/// A random quantity consumed while building a segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Draw {
    X(u64),
    Y(u64),
    HatX(u64),
    Chi(bool),
    /// `Y^(0)`: number of sweeps in a 213 escape phase.
    Y0(u64),
    /// `Y^(1)`: number of singletons in a 213 visible phase.
    Y1(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Position (0-based) of the segment's first entry in the full object.
    pub offset: u64,
    /// Number of entries the segment occupies in the full object.
    pub len: u64,
    /// Value block `[a, b]` of avoider and irreducible blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<(u64, u64)>,
    /// Singleton value; for the tail marker, the largest value used so far.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<u64>,
    /// Entries of this segment present in the prefix.
    pub emitted: u64,
    pub draws: Vec<Draw>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentTrace {
    pub kind: LimitKind,
    pub seed: u64,
    pub stream: u64,
    /// Stream position at the start of the run, as a decimal string.
    pub word_pos: String,
    /// Requested prefix length; `None` asks for the whole finite object
    /// (only meaningful for `321-partial`).
    pub prefix_len: Option<u64>,
    pub options: LimitOptions,
    /// Set when a block was too large to materialise and the prefix ends
    /// before it.
    pub truncated: bool,
    pub segments: Vec<Segment>,
}

impl SegmentTrace {
    /// Sum of segment lengths (saturating).
    pub fn covered_len(&self) -> u64 {
        self.segments.iter().fold(0u64, |acc, s| acc.saturating_add(s.len))
    }

    pub fn draws(&self) -> impl Iterator<Item = &Draw> {
        self.segments.iter().flat_map(|s| s.draws.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtPrefix {
    pub entries: Vec<ExtEntry>,
    pub trace: SegmentTrace,
}

impl ExtPrefix {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Finite entries are pairwise distinct.
    pub fn is_injective_on_finite(&self) -> bool {
        let mut seen: Vec<u64> = self.entries.iter().filter_map(|e| e.finite()).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Entries `offset..offset + emitted` of a segment.
    pub fn segment_entries(&self, segment: &Segment) -> &[ExtEntry] {
        let start = segment.offset as usize;
        &self.entries[start..start + segment.emitted as usize]
    }

    /// Comma-separated line with `inf` for ∞.
    pub fn to_line(&self) -> String {
        format_entries(&self.entries)
    }

    /// Regenerate from the trace's recorded seed, stream and position.
    pub fn replay(trace: &SegmentTrace) -> Result<ExtPrefix> {
        let word_pos: u128 = trace
            .word_pos
            .parse()
            .map_err(|e| Error::Parse(format!("word_pos {:?}: {e}", trace.word_pos)))?;
        let mut rng = RngStream::at_word_pos(trace.seed, trace.stream, word_pos);
        let m = trace.prefix_len.map(|m| m as usize);
        Ok(match trace.kind {
            LimitKind::L312 => limit_prefix_312_with(m.unwrap_or(0), &mut rng, &trace.options),
            LimitKind::L231 => limit_prefix_231_with(m.unwrap_or(0), &mut rng, &trace.options),
            LimitKind::L213 => limit_prefix_213_with(m.unwrap_or(0), &mut rng, &trace.options),
            LimitKind::L321Partial => limit_prefix_321_partial_with(m, &mut rng, &trace.options),
        })
    }

    /// Replays `trace` and checks that it reproduces `expected` and itself.
    pub fn verify_replay(trace: &SegmentTrace, expected: &[ExtEntry]) -> Result<ExtPrefix> {
        let again = Self::replay(trace)?;
        if again.trace != *trace {
            return Err(Error::ReplayMismatch("segment records differ".into()));
        }
        if again.entries != expected {
            return Err(Error::ReplayMismatch(format!(
                "prefix differs: recorded {}, regenerated {}",
                format_entries(expected),
                again.to_line()
            )));
        }
        Ok(again)
    }
}

pub fn format_entries(entries: &[ExtEntry]) -> String {
    entries.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_entries(line: &str) -> Result<Vec<ExtEntry>> {
    let line = line.trim();
    if line.is_empty() {
        return Ok(Vec::new());
    }
    line.split(',').map(str::parse).collect()
}

struct Builder {
    entries: Vec<ExtEntry>,
    segments: Vec<Segment>,
    offset: u64,
    target: Option<usize>,
}

impl Builder {
    fn new(target: Option<usize>) -> Self {
        Self { entries: Vec::new(), segments: Vec::new(), offset: 0, target }
    }

    fn full(&self) -> bool {
        self.target.is_some_and(|m| self.entries.len() >= m)
    }

    fn room(&self) -> usize {
        match self.target {
            Some(m) => m.saturating_sub(self.entries.len()),
            None => usize::MAX,
        }
    }

    fn push_segment(&mut self, mut segment: Segment, entries: impl IntoIterator<Item = ExtEntry>) {
        let before = self.entries.len();
        self.entries.extend(entries.into_iter().take(self.room()));
        segment.offset = self.offset;
        segment.emitted = (self.entries.len() - before) as u64;
        self.offset = self.offset.saturating_add(segment.len);
        self.segments.push(segment);
    }

    fn finish(self, kind: LimitKind, start: &RngStream, options: &LimitOptions, truncated: bool) -> ExtPrefix {
        ExtPrefix {
            entries: self.entries,
            trace: SegmentTrace {
                kind,
                seed: start.seed(),
                stream: start.stream(),
                word_pos: start.word_pos().to_string(),
                prefix_len: self.target.map(|m| m as u64),
                options: *options,
                truncated,
                segments: self.segments,
            },
        }
    }
}

fn segment(kind: SegmentKind, len: u64, draws: Vec<Draw>) -> Segment {
    Segment { kind, offset: 0, len, block: None, value: None, emitted: 0, draws }
}

/// First `m` entries of the 312 limit: blocks
/// `Π^{312}_{[T^Y_n + T^X_{n-1} + 1, T^Y_n + T^X_n]}` each followed by the
/// singleton `T^Y_n + T^X_{n-1}`, the value just below its block.
pub fn limit_prefix_312(m: usize, rng: &mut RngStream) -> ExtPrefix {
    limit_prefix_312_with(m, rng, &LimitOptions::default())
}

pub fn limit_prefix_312_with(m: usize, rng: &mut RngStream, options: &LimitOptions) -> ExtPrefix {
    let start = rng.clone();
    let mut out = Builder::new(Some(m));
    let (mut ty, mut tx) = (0u64, 0u64);
    while !out.full() {
        let y = sample_y(rng);
        let x = sample_x(rng);
        ty = ty.saturating_add(y);
        let lo = ty.saturating_add(tx).saturating_add(1);
        tx = tx.saturating_add(x);
        let hi = ty.saturating_add(tx);
        let need = out.room().min(usize::try_from(x).unwrap_or(usize::MAX));
        let image = sample_avoider_prefix(x, lo, Pattern::P312, need, options.materialize_limit, rng)
            .expect("312 splits at its minimum");
        let mut block = segment(SegmentKind::AvoiderBlock, x, vec![Draw::Y(y), Draw::X(x)]);
        block.block = Some((lo, hi));
        out.push_segment(block, image.into_iter().map(ExtEntry::Finite));
        if out.full() {
            break;
        }
        let mut single = segment(SegmentKind::Singleton, 1, Vec::new());
        single.value = Some(lo - 1);
        out.push_segment(single, [ExtEntry::Finite(lo - 1)]);
    }
    out.finish(LimitKind::L312, &start, options, false)
}

/// First `m` entries of the 231 limit: uniform 231-avoiding images of the
/// consecutive blocks `[T^X_{n-1} + 1, T^X_n]`, each followed by one ∞.
pub fn limit_prefix_231(m: usize, rng: &mut RngStream) -> ExtPrefix {
    limit_prefix_231_with(m, rng, &LimitOptions::default())
}

pub fn limit_prefix_231_with(m: usize, rng: &mut RngStream, options: &LimitOptions) -> ExtPrefix {
    let start = rng.clone();
    let mut out = Builder::new(Some(m));
    let mut tx = 0u64;
    while !out.full() {
        let x = sample_x(rng);
        let lo = tx.saturating_add(1);
        tx = tx.saturating_add(x);
        let need = out.room().min(usize::try_from(x).unwrap_or(usize::MAX));
        let image = sample_avoider_prefix(x, lo, Pattern::P231, need, options.materialize_limit, rng)
            .expect("231 splits at its maximum");
        let mut block = segment(SegmentKind::AvoiderBlock, x, vec![Draw::X(x)]);
        block.block = Some((lo, tx));
        out.push_segment(block, image.into_iter().map(ExtEntry::Finite));
        if out.full() {
            break;
        }
        out.push_segment(segment(SegmentKind::InfinityRun, 1, Vec::new()), [ExtEntry::Infinity]);
    }
    out.finish(LimitKind::L231, &start, options, false)
}

/// Produces the increasing singleton values `i_1 < i_2 < ...` of the 213
/// limit.
///
/// With `χ = 1` the values run through
/// `∪_{n≥0} [T^{Y1}_n + S_n + 1, T^{Y1}_{n+1} + S_n]`, and with `χ = 0`
/// through the same intervals shifted by `S_{n+1}` instead of `S_n`, where
/// `S_n = T^{X̂}_{T^{Y0}_n}`. Between visible intervals an escape phase of
/// `Y0` steps sweeps `X̂_1 + ... + X̂_{Y0}` values off to ∞.
struct SingletonValues {
    chi: bool,
    /// Completed visible intervals.
    intervals: u64,
    /// `T^{Y1}_n + S`: values below this have been emitted or swept.
    base: u64,
    /// Values left in the current visible interval.
    left: u64,
    sweep_rng: Option<RngStream>,
}

impl SingletonValues {
    fn new(chi: bool, reading: SweepReading, rng: &RngStream) -> Self {
        let sweep_rng = match reading {
            SweepReading::ReuseY0 => None,
            SweepReading::ThirdSequence => Some(rng.child(0x5ee9)),
        };
        Self { chi, intervals: 0, base: 0, left: 0, sweep_rng }
    }

    fn next(&mut self, rng: &mut RngStream, draws: &mut Vec<Draw>) -> u64 {
        while self.left == 0 {
            let sweep_first = self.intervals > 0 || !self.chi;
            if sweep_first {
                let sweep_source = self.sweep_rng.as_mut().unwrap_or(&mut *rng);
                let steps = sample_y(sweep_source);
                draws.push(Draw::Y0(steps));
                for _ in 0..steps {
                    let hx = sample_hat_x(rng);
                    draws.push(Draw::HatX(hx));
                    self.base = self.base.saturating_add(hx);
                }
            }
            let visible = sample_y(rng);
            draws.push(Draw::Y1(visible));
            self.left = visible;
            self.intervals += 1;
        }
        self.left -= 1;
        self.base = self.base.saturating_add(1);
        self.base
    }
}

/// First `m` entries of the 213 limit: `∞^{(X_1)} * (i_1) * ∞^{(X_2)} * (i_2) * ...`.
pub fn limit_prefix_213(m: usize, rng: &mut RngStream) -> ExtPrefix {
    limit_prefix_213_with(m, rng, &LimitOptions::default())
}

pub fn limit_prefix_213_with(m: usize, rng: &mut RngStream, options: &LimitOptions) -> ExtPrefix {
    let start = rng.clone();
    let mut out = Builder::new(Some(m));
    if m == 0 {
        return out.finish(LimitKind::L213, &start, options, false);
    }
    let chi = sample_chi(rng);
    let mut singletons = SingletonValues::new(chi, options.sweep_reading, rng);
    let mut first = true;
    while !out.full() {
        let x = sample_x(rng);
        let mut draws = Vec::new();
        if first {
            draws.push(Draw::Chi(chi));
            first = false;
        }
        draws.push(Draw::X(x));
        let run = usize::try_from(x).unwrap_or(usize::MAX).min(out.room());
        out.push_segment(segment(SegmentKind::InfinityRun, x, draws), std::iter::repeat_n(ExtEntry::Infinity, run));
        if out.full() {
            break;
        }
        let mut draws = Vec::new();
        let value = singletons.next(rng, &mut draws);
        let mut single = segment(SegmentKind::Singleton, 1, draws);
        single.value = Some(value);
        out.push_segment(single, [ExtEntry::Finite(value)]);
    }
    out.finish(LimitKind::L213, &start, options, false)
}

/// The finite part of the 321 limit: `Y - 1` consecutive uniform
/// block-irreducible 321-avoiding blocks of lengths `X̂_1, ..., X̂_{Y-1}`,
/// then an opaque tail marker for the unresolved continuation.
///
/// With `m = Some(k)` generation stops once `k` entries exist. A block
/// longer than `options.max_birr_block` ends the prefix (marked
/// `truncated`); its length and the remaining block lengths are still
/// drawn and recorded.
pub fn limit_prefix_321_partial(rng: &mut RngStream) -> ExtPrefix {
    limit_prefix_321_partial_with(None, rng, &LimitOptions::default())
}

pub fn limit_prefix_321_partial_with(m: Option<usize>, rng: &mut RngStream, options: &LimitOptions) -> ExtPrefix {
    let start = rng.clone();
    let mut out = Builder::new(m);
    let y = sample_y(rng);
    let mut t = 0u64;
    let mut truncated = false;
    for n in 0..y - 1 {
        if out.full() {
            break;
        }
        let hx = sample_hat_x(rng);
        let mut draws = Vec::new();
        if n == 0 {
            draws.push(Draw::Y(y));
        }
        draws.push(Draw::HatX(hx));
        let lo = t + 1;
        t = t.saturating_add(hx);
        let mut block = segment(SegmentKind::BirrBlock, hx, draws);
        block.block = Some((lo, t));
        if truncated || hx > options.max_birr_block {
            truncated = true;
            out.push_segment(block, std::iter::empty());
            continue;
        }
        let perm = sample_birr_321(hx as usize, rng).expect("hx >= 1").shifted_to(lo);
        out.push_segment(block, perm.into_values().into_iter().map(ExtEntry::Finite));
    }
    if !out.full() {
        let mut draws = Vec::new();
        if y == 1 {
            draws.push(Draw::Y(y));
        }
        let mut tail = segment(SegmentKind::TailMarker, 0, draws);
        tail.value = Some(t);
        out.push_segment(tail, std::iter::empty());
    }
    out.finish(LimitKind::L321Partial, &start, options, truncated)
}

/// Prefix of length `m` for one of the three complete limits.
pub fn limit_prefix(kind: LimitKind, m: usize, rng: &mut RngStream, options: &LimitOptions) -> ExtPrefix {
    match kind {
        LimitKind::L312 => limit_prefix_312_with(m, rng, options),
        LimitKind::L231 => limit_prefix_231_with(m, rng, options),
        LimitKind::L213 => limit_prefix_213_with(m, rng, options),
        LimitKind::L321Partial => limit_prefix_321_partial_with(Some(m), rng, options),
    }
}

fn record(hist: &mut Histogram, entry: ExtEntry) {
    match entry {
        ExtEntry::Finite(v) => hist.record_value(v),
        ExtEntry::Infinity => hist.record_infinity(),
    }
}

/// Empirical laws of coordinates `coords` (1-based) of a complete limit,
/// from `trials` independent prefixes; trial `k` uses `base.substream(k)`.
pub fn coordinate_pmfs_limit(
    kind: LimitKind,
    coords: &[usize],
    cap: usize,
    trials: u64,
    base: &RngStream,
    options: &LimitOptions,
) -> Result<Vec<EmpiricalDist>> {
    if kind == LimitKind::L321Partial {
        return Err(Error::UnsupportedPattern {
            pattern: Pattern::P321,
            reason: "only part of the 321 limit is known",
        });
    }
    if let Some(&bad) = coords.iter().find(|&&i| i == 0) {
        return Err(Error::TooSmall { what: "coordinate", min: 1, got: bad as u64 });
    }
    if cap == 0 {
        return Err(Error::TooSmall { what: "cap", min: 1, got: 0 });
    }
    if trials == 0 {
        return Err(Error::TooSmall { what: "trials", min: 1, got: 0 });
    }
    let m = coords.iter().copied().max().unwrap_or(0);
    let hists = fold_trials(
        base,
        trials,
        || vec![Histogram::new(cap); coords.len()],
        |hists, rng| {
            let prefix = limit_prefix(kind, m, rng, options);
            for (hist, &i) in hists.iter_mut().zip(coords) {
                record(hist, prefix.entries[i - 1]);
            }
        },
        |a, b| a.into_iter().zip(&b).map(|(x, y)| x.merge(y)).collect(),
    );
    hists.into_iter().map(Histogram::into_dist).collect()
}

/// Empirical law of coordinate `i` of the 312, 231 or 213 limit.
pub fn coordinate_pmf_limit(pattern: Pattern, i: usize, cap: usize, trials: u64, base: &RngStream) -> Result<EmpiricalDist> {
    let kind = LimitKind::for_pattern(pattern)?;
    let mut out = coordinate_pmfs_limit(kind, &[i], cap, trials, base, &LimitOptions::default())?;
    Ok(out.remove(0))
}
