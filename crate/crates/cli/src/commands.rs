use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context};
use permlimit::limit::{limit_prefix, limit_prefix_321_partial_with, parse_entries, LimitKind, SegmentKind};
use permlimit::report::{Meta, Report, Table};
use permlimit::verify::{
    check_positional_law_exact, check_positional_law_mc, check_uniformity, convergence_report, count_check,
    escape_scan, stable_cf_check,
};
use permlimit::{
    enumerate::{enumerate_avoiders_bounded, enumerate_birr_321},
    sample_avoider, sample_birr_321, ExtPrefix, LimitOptions, Pattern, RngStream, SegmentTrace,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::{
    Cli, Command, ConvergenceArgs, CountsArgs, EnumerateArgs, EscapeArgs, Format, LimitArgs, PositionalArgs,
    SampleArgs, StableArgs, UniformityArgs, VerifyCommand,
};

pub struct Output {
    pub text: String,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, passed: true, failures: Vec::new() }
    }
}

pub enum Failure {
    /// Bad flags or configuration.
    Usage(anyhow::Error),
    /// A consistency check (such as trace replay) did not hold.
    Check(anyhow::Error),
}

impl From<permlimit::Error> for Failure {
    fn from(e: permlimit::Error) -> Self {
        match e {
            permlimit::Error::ReplayMismatch(_) => Failure::Check(e.into()),
            other => Failure::Usage(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

type Outcome = Result<Output, Failure>;

/// The file written by `limit --trace` and read by `limit --replay`.
#[derive(Debug, Serialize, Deserialize)]
struct TraceFile {
    prefix: String,
    trace: SegmentTrace,
}

pub fn run(cli: &Cli) -> Outcome {
    let base = RngStream::new(cli.seed, 0);
    match &cli.command {
        Command::Sample(a) => sample(cli, a, &base),
        Command::Enumerate(a) => enumerate(cli, a),
        Command::Limit(a) => limit(cli, a, &base),
        Command::Verify(v) => {
            let format = match cli.format.unwrap_or(Format::Json) {
                Format::Lines => return Err(Failure::Usage(anyhow!("verify writes json or csv, not lines"))),
                f => f,
            };
            let report = match v {
                VerifyCommand::Positional(a) => positional(cli, a, &base)?,
                VerifyCommand::Convergence(a) => convergence(cli, a, &base)?,
                VerifyCommand::Escape(a) => escape(cli, a, &base)?,
                VerifyCommand::Stable(a) => stable(cli, a, &base)?,
                VerifyCommand::Uniformity(a) => uniformity(cli, a, &base)?,
                VerifyCommand::Counts(a) => counts(cli, a)?,
            };
            render_report(report, format)
        }
    }
}

fn line_format(cli: &Cli) -> Result<Format, Failure> {
    match cli.format.unwrap_or(Format::Lines) {
        Format::Csv => Err(Failure::Usage(anyhow!("this command writes lines or json, not csv"))),
        f => Ok(f),
    }
}

fn meta<T: Serialize>(cli: &Cli, command: &str, args: &T) -> Meta {
    Meta::new(command, cli.seed, serde_json::to_value(args).expect("arguments serialise"))
}

fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json");
    s.push('\n');
    s
}

const AUDIT_STRIDE: usize = 100;

fn sample(cli: &Cli, a: &SampleArgs, base: &RngStream) -> Outcome {
    let format = line_format(cli)?;
    if a.birr_only && a.pattern != Pattern::P321 {
        return Err(Failure::Usage(anyhow!("--birr-only applies to --pattern 321 only")));
    }
    if a.birr_only && a.n == 0 {
        return Err(Failure::Usage(anyhow!("block-irreducible permutations need n >= 1")));
    }
    let perms = permlimit::par::map_trials(base, a.trials, |_, rng| {
        if a.birr_only {
            sample_birr_321(a.n, rng).expect("n >= 1")
        } else {
            sample_avoider(a.n, a.pattern, rng)
        }
    });
    // audit one sample in a hundred
    if let Some(k) = perms.iter().step_by(AUDIT_STRIDE).position(|p| p.contains(a.pattern)) {
        return Err(Failure::Check(anyhow!("sample {} contains {}", k * AUDIT_STRIDE, a.pattern)));
    }
    let lines: Vec<String> = perms.iter().map(ToString::to_string).collect();
    Ok(Output::ok(match format {
        Format::Json => json_text(&json!({ "meta": meta(cli, "sample", a), "permutations": lines })),
        _ => lines.iter().map(|l| format!("{l}\n")).collect(),
    }))
}

fn enumerate(cli: &Cli, a: &EnumerateArgs) -> Outcome {
    let format = line_format(cli)?;
    let perms: Vec<String> = if a.birr_only {
        if a.pattern != Pattern::P321 {
            return Err(Failure::Usage(anyhow!("--birr-only applies to --pattern 321 only")));
        }
        if a.n > a.bound {
            return Err(permlimit::Error::AboveExhaustiveBound { n: a.n, bound: a.bound }.into());
        }
        enumerate_birr_321(a.n)?.map(|p| p.to_string()).collect()
    } else {
        enumerate_avoiders_bounded(a.n, a.pattern, a.bound)?.map(|p| p.to_string()).collect()
    };
    Ok(Output::ok(match format {
        Format::Json => json_text(&json!({
            "meta": meta(cli, "enumerate", a),
            "permutations": perms,
            "count": perms.len(),
        })),
        _ => {
            let mut out: String = perms.iter().map(|l| format!("{l}\n")).collect();
            writeln!(out, "count={}", perms.len()).expect("string write");
            out
        }
    }))
}

fn limit(cli: &Cli, a: &LimitArgs, base: &RngStream) -> Outcome {
    let format = line_format(cli)?;
    let prefix = if let Some(path) = &a.replay {
        replay(path)?
    } else {
        let kind: LimitKind = a.pattern.as_deref().expect("clap requires a pattern").parse()?;
        let options = LimitOptions {
            materialize_limit: a.materialize_limit,
            max_birr_block: a.max_birr_block,
            sweep_reading: a.sweep_reading.into(),
        };
        let mut rng = base.clone();
        let prefix = match (kind, a.prefix_len) {
            (LimitKind::L321Partial, m) => limit_prefix_321_partial_with(m, &mut rng, &options),
            (kind, Some(m)) => limit_prefix(kind, m, &mut rng, &options),
            (_, None) => return Err(Failure::Usage(anyhow!("--prefix-len is required for pattern {kind}"))),
        };
        if let Some(path) = &a.trace {
            let file = TraceFile { prefix: prefix.to_line(), trace: prefix.trace.clone() };
            std::fs::write(path, json_text(&serde_json::to_value(&file).expect("trace serialises")))
                .with_context(|| format!("writing trace to {}", path.display()))?;
        }
        prefix
    };
    Ok(Output::ok(match format {
        Format::Json => json_text(&json!({
            "meta": meta(cli, "limit", a),
            "prefix": prefix.to_line(),
            "truncated": prefix.trace.truncated,
            "trace": prefix.trace,
        })),
        _ => format!("{}\n", line_with_tail(&prefix)),
    }))
}

/// The prefix line, closed by `Z` when the object ends in an unresolved tail.
fn line_with_tail(prefix: &ExtPrefix) -> String {
    let line = prefix.to_line();
    match prefix.trace.segments.last() {
        Some(s) if s.kind == SegmentKind::TailMarker && line.is_empty() => "Z".into(),
        Some(s) if s.kind == SegmentKind::TailMarker => format!("{line},Z"),
        _ => line,
    }
}

fn replay(path: &Path) -> Result<ExtPrefix, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading trace {}", path.display()))?;
    let file: TraceFile =
        serde_json::from_str(&text).with_context(|| format!("parsing trace {}", path.display()))?;
    let recorded = parse_entries(&file.prefix)?;
    Ok(ExtPrefix::verify_replay(&file.trace, &recorded)?)
}

fn render_report(report: Report, format: Format) -> Outcome {
    let failures = report.notes.iter().filter_map(|n| n.strip_prefix("FAIL: ").map(String::from)).collect();
    let passed = report.passed;
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).expect("in-memory write");
            String::from_utf8(buf).expect("utf-8")
        }
        _ => report.to_json(),
    };
    Ok(Output { text, passed, failures })
}

/// Records a failed check on the report.
fn fail(report: &mut Report, msg: String) {
    report.passed = false;
    report.notes.push(format!("FAIL: {msg}"));
}

fn positional(cli: &Cli, a: &PositionalArgs, base: &RngStream) -> Result<Report, Failure> {
    let law = if a.exact {
        check_positional_law_exact(a.n, a.pattern)?
    } else {
        check_positional_law_mc(a.n, a.pattern, a.trials, base)?
    };
    let mut table = Table::new(["j", "observed", "expected", "abs_error"]);
    for (j, (o, e)) in law.observed.iter().zip(&law.expected).enumerate() {
        table.push(vec![json!(j + 1), json!(o), json!(e), json!((o - e).abs())]);
    }
    let mut report = Report::new(meta(cli, "verify positional", a), table);
    if a.exact {
        report = report.threshold("max_abs_error", 0.0);
        report.notes.push(format!("max_abs_error={}", law.max_abs_error));
        if law.max_abs_error != 0.0 {
            fail(&mut report, format!("exact law differs by {}", law.max_abs_error));
        }
    } else {
        report = report.threshold("max_z", a.max_z);
        report.notes.push(format!("max_abs_error={} max_z={}", law.max_abs_error, law.max_z));
        if law.max_z > a.max_z {
            fail(&mut report, format!("largest deviation is {:.3} standard errors", law.max_z));
        }
    }
    Ok(report)
}

fn convergence(cli: &Cli, a: &ConvergenceArgs, base: &RngStream) -> Result<Report, Failure> {
    let r = convergence_report(a.pattern, &a.coords, a.cap, &a.n_grid, a.trials, base, &LimitOptions::default())?;
    let mut table = Table::new(["i", "n", "tv"]);
    for row in &r.rows {
        table.push(vec![json!(row.i), json!(row.n), json!(row.tv)]);
    }
    let mut report = Report::new(meta(cli, "verify convergence", a), table)
        .threshold("max_tv_at_largest_n", a.max_tv)
        .threshold("noise_allowance", r.noise_allowance());
    for (&i, d) in r.coords.iter().zip(&r.limit) {
        report.notes.push(format!(
            "limit coordinate {i}: masses {:?} over {:?}",
            d.masses(),
            d.labels()
        ));
    }
    if !r.is_nonincreasing() {
        fail(&mut report, "TV increases along the n-grid by more than the noise allowance".into());
    }
    let last = r.max_tv_at_largest_n();
    if last > a.max_tv {
        fail(&mut report, format!("TV {last} at the largest n exceeds {}", a.max_tv));
    }
    Ok(report)
}

fn escape(cli: &Cli, a: &EscapeArgs, base: &RngStream) -> Result<Report, Failure> {
    let rows = escape_scan(a.pattern, a.j, a.l, &a.n_grid, a.trials, base)?;
    let mut table = Table::new(["n", "trials", "estimate", "exact", "exact_log10"]);
    for r in &rows {
        table.push(vec![json!(r.n), json!(r.trials), json!(r.estimate), json!(r.exact), json!(r.exact_log10)]);
    }
    let allowance = 2.0 / (a.trials as f64).sqrt();
    let mut report = Report::new(meta(cli, "verify escape", a), table)
        .threshold("max_final", a.max_final)
        .threshold("noise_allowance", allowance);
    report.notes.push(
        "exact values come from enumeration (n <= 8) or the first-entry recursion (j = 1); \
         Monte-Carlo estimates of probabilities far below 1/trials are 0"
            .into(),
    );
    if rows.windows(2).any(|w| w[1].estimate > w[0].estimate + allowance) {
        fail(&mut report, "estimates increase along the n-grid beyond the noise allowance".into());
    }
    if rows.windows(2).any(|w| matches!((w[0].exact_log10, w[1].exact_log10), (Some(x), Some(y)) if y >= x)) {
        fail(&mut report, "exact probabilities do not strictly decrease".into());
    }
    if let Some(last) = rows.last() {
        if last.estimate >= a.max_final {
            fail(&mut report, format!("P(σ_j ≤ L) = {} at n = {} is not below {}", last.estimate, last.n, a.max_final));
        }
    }
    Ok(report)
}

fn stable(cli: &Cli, a: &StableArgs, base: &RngStream) -> Result<Report, Failure> {
    let points = stable_cf_check(a.n, a.trials, &a.ts, base)?;
    let mut table = Table::new(["t", "empirical_re", "empirical_im", "reference_re", "reference_im", "abs_error"]);
    for p in &points {
        table.push(vec![
            json!(p.t),
            json!(p.empirical.re),
            json!(p.empirical.im),
            json!(p.reference.re),
            json!(p.reference.im),
            json!(p.abs_error),
        ]);
    }
    let mut report = Report::new(meta(cli, "verify stable", a), table).threshold("tolerance", a.tolerance);
    for p in &points {
        if p.abs_error > a.tolerance {
            fail(&mut report, format!("t = {}: error {} exceeds {}", p.t, p.abs_error, a.tolerance));
        }
        if p.empirical.norm() > 1.0 + 1e-12 {
            fail(&mut report, format!("t = {}: empirical value has modulus above 1", p.t));
        }
    }
    Ok(report)
}

fn uniformity(cli: &Cli, a: &UniformityArgs, base: &RngStream) -> Result<Report, Failure> {
    let patterns: Vec<Pattern> = a.pattern.map_or_else(|| Pattern::ALL.to_vec(), |p| vec![p]);
    let mut table =
        Table::new(["pattern", "n", "classes", "trials", "statistic", "critical", "violations", "passed"]);
    let mut results = Vec::new();
    for (k, &pattern) in patterns.iter().enumerate() {
        for n in 1..=a.max_n {
            let stream = base.child((k as u64) << 32 | n as u64);
            let r = check_uniformity(pattern, n, a.trials, a.level, &stream)?;
            table.push(vec![
                json!(pattern.to_string()),
                json!(n),
                json!(r.classes),
                json!(r.trials),
                json!(r.statistic),
                json!(r.critical),
                json!(r.violations),
                json!(r.passed()),
            ]);
            results.push(r);
        }
    }
    let mut report = Report::new(meta(cli, "verify uniformity", a), table).threshold("level", a.level);
    for r in results.iter().filter(|r| !r.passed()) {
        fail(&mut report, format!("{} at n = {}: statistic {} vs critical {}, {} violations", r.pattern, r.n, r.statistic, r.critical, r.violations));
    }
    Ok(report)
}

fn counts(cli: &Cli, a: &CountsArgs) -> Result<Report, Failure> {
    let rows = count_check(a.max_n)?;
    let mut table = Table::new(["class", "n", "count", "expected", "match"]);
    for r in &rows {
        table.push(vec![json!(r.class), json!(r.n), json!(r.count), json!(r.expected), json!(r.matches())]);
    }
    let mut report = Report::new(meta(cli, "verify counts", a), table);
    for r in rows.iter().filter(|r| !r.matches()) {
        fail(&mut report, format!("{} at n = {}: {} vs {}", r.class, r.n, r.count, r.expected));
    }
    Ok(report)
}
