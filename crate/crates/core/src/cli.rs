//! The `zkmap` command line. Exit codes: 0 success, 1 failure, 2 usage or unreadable input.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::artifact::{Artifact, ArtifactError};
use crate::backend::decode;
use crate::bench::{bench, render_accuracy, render_overhead};
use crate::corpus::load_dir;
use crate::debugger::{render_trace, trace_transactions, DebugError};
use crate::exec::{TxSuite, DEFAULT_REPETITIONS};
use crate::ir::dump_module;
use crate::mapgen::{export, query_offset, query_span, ExportFormat, RichEntry, RichSourceMap};
use crate::model::{MappingEntry, MappingTable, SourceSpan};
use crate::optimizer::PassConfig;
use crate::pipeline::{compile, CompileError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "zkmap",
    version,
    about = "Compile MiniSol with a verified source map and debug against it"
)]
struct Cli {
    /// Report style.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Structured,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a source file into an artifact.
    Compile(CompileArgs),
    /// Run both validators over an artifact's stored source map.
    Validate { artifact: PathBuf },
    /// Look up a bytecode offset or the offsets of a source span.
    Query(QueryArgs),
    /// Disassemble an artifact with source annotations.
    Disasm { artifact: PathBuf },
    /// Replay transactions and print the source-level trace.
    Trace(TraceArgs),
    /// Accuracy and overhead over a corpus directory.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct CompileArgs {
    file: PathBuf,
    /// Artifact path; without it the artifact goes to stdout (unless --emit-ir).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Comma-separated pass list, e.g. `inline,const_fold,dce`.
    #[arg(long, conflicts_with = "no_opt")]
    passes: Option<String>,
    #[arg(long)]
    no_opt: bool,
    /// Compile without provenance or a source map.
    #[arg(long)]
    no_mapping: bool,
    /// Print the optimized IR to stdout.
    #[arg(long)]
    emit_ir: bool,
    #[arg(long)]
    sourcemap_out: Option<PathBuf>,
    #[arg(long)]
    sourcemap_compressed_out: Option<PathBuf>,
    #[arg(long)]
    unroll_max: Option<u32>,
    #[arg(long)]
    inline_max: Option<usize>,
    /// Leave stage timings out of the artifact.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("what").required(true).args(["offset", "span"]))]
struct QueryArgs {
    artifact: PathBuf,
    /// Bytecode offset, hex (`0x1f`) or decimal.
    #[arg(long, value_parser = parse_offset)]
    offset: Option<u32>,
    /// Source span as `start:length:file`.
    #[arg(long)]
    span: Option<SourceSpan>,
}

#[derive(Debug, Args)]
struct TraceArgs {
    artifact: PathBuf,
    /// Transaction suite (`.txs.json`).
    #[arg(long)]
    tx: PathBuf,
    /// Trace only this transaction; earlier ones still run to build up storage.
    #[arg(long)]
    index: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,
    /// Skip the overhead measurement so the report is reproducible.
    #[arg(long)]
    no_timing: bool,
}

fn parse_offset(s: &str) -> Result<u32, String> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16),
        None => s.parse(),
    };
    r.map_err(|e| format!("bad offset {s:?}: {e}"))
}

/// A reason to stop, mapped to an exit code.
enum Stop {
    Usage(String),
    Failed(String),
}

impl From<ArtifactError> for Stop {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Recompile(_) => Stop::Failed(e.to_string()),
            _ => Stop::Usage(e.to_string()),
        }
    }
}

struct Io<'a> {
    out: &'a mut dyn Write,
    format: Format,
}

impl Io<'_> {
    fn print(&mut self, s: &str) -> Result<(), Stop> {
        self.out
            .write_all(s.as_bytes())
            .map_err(|e| Stop::Failed(e.to_string()))
    }

    fn json<T: Serialize>(&mut self, v: &T) -> Result<(), Stop> {
        let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
        s.push('\n');
        self.print(&s)
    }
}

fn read(path: &Path) -> Result<String, Stop> {
    fs::read_to_string(path).map_err(|e| Stop::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Stop> {
    fs::write(path, text).map_err(|e| Stop::Failed(format!("{}: {e}", path.display())))
}

fn load_artifact(path: &Path) -> Result<Artifact, Stop> {
    Artifact::from_json(&read(path)?).map_err(|e| Stop::Usage(format!("{}: {e}", path.display())))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let mut io = Io {
        out,
        format: cli.format,
    };
    let r = match cli.command {
        Command::Compile(a) => cmd_compile(&mut io, a),
        Command::Validate { artifact } => cmd_validate(&mut io, &artifact),
        Command::Query(a) => cmd_query(&mut io, a),
        Command::Disasm { artifact } => cmd_disasm(&mut io, &artifact),
        Command::Trace(a) => cmd_trace(&mut io, a),
        Command::Bench(a) => cmd_bench(&mut io, a),
    };
    match r {
        Ok(code) => code,
        Err(Stop::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Stop::Failed(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_FAILURE
        }
    }
}

#[derive(Serialize)]
struct CompileSummary {
    file: String,
    bytecode_bytes: usize,
    functions: usize,
    sourcemap_entries: usize,
    synthetic_excluded: u32,
    passes: Vec<String>,
    instructions_created: usize,
    instructions_deleted: usize,
}

fn cmd_compile(io: &mut Io, a: CompileArgs) -> Result<i32, Stop> {
    let source = read(&a.file)?;
    let mut config = PassConfig::default();
    if a.no_opt {
        config.passes.clear();
    } else if let Some(list) = &a.passes {
        config.passes = PassConfig::parse_list(list).map_err(|e| Stop::Usage(e.to_string()))?;
    }
    config.validate().map_err(|e| Stop::Usage(e.to_string()))?;
    if let Some(n) = a.unroll_max {
        config.unroll_max_trips = n;
    }
    if let Some(n) = a.inline_max {
        config.inline_max_instrs = n;
    }
    config.mapping_enabled = !a.no_mapping;

    let name = a.file.file_name().map_or_else(
        || a.file.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    let c = compile(&source, &name, &config).map_err(|e| match e {
        CompileError::Frontend(_) | CompileError::Type(_) => {
            Stop::Failed(format!("{}: {e}", a.file.display()))
        }
        other => Stop::Failed(other.to_string()),
    })?;
    let artifact = Artifact::from_compilation(&c, !a.no_timing);
    let table = artifact.table();

    if let Some(p) = &a.sourcemap_out {
        let mut s = export(&table, ExportFormat::Rich);
        s.push('\n');
        write(p, &s)?;
    }
    if let Some(p) = &a.sourcemap_compressed_out {
        write(
            p,
            &format!("{}\n", export(&table, ExportFormat::Compressed)),
        )?;
    }
    if a.emit_ir {
        io.print(&dump_module(&c.module))?;
    }
    match &a.output {
        Some(p) => {
            write(p, &artifact.to_json())?;
            let summary = CompileSummary {
                file: name,
                bytecode_bytes: c.program.code.len(),
                functions: c.program.functions.len(),
                sourcemap_entries: table.entries.len(),
                synthetic_excluded: table.synthetic_excluded,
                passes: config.passes.iter().map(|p| p.name().to_string()).collect(),
                instructions_created: c.report.total_created(),
                instructions_deleted: c.report.total_deleted(),
            };
            match io.format {
                Format::Structured => io.json(&summary)?,
                Format::Human => io.print(&format!(
                    "{}: {} bytes, {} functions, {} map entries ({} synthetic excluded) -> {}\n",
                    summary.file,
                    summary.bytecode_bytes,
                    summary.functions,
                    summary.sourcemap_entries,
                    summary.synthetic_excluded,
                    p.display()
                ))?,
            }
        }
        None if !a.emit_ir => io.print(&artifact.to_json())?,
        None => {}
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ValidateSummary {
    checked: usize,
    violations: Vec<ViolationLine>,
}

#[derive(Serialize)]
struct ViolationLine {
    message: String,
    #[serde(flatten)]
    detail: crate::mapgen::Violation,
}

fn cmd_validate(io: &mut Io, path: &Path) -> Result<i32, Stop> {
    let artifact = load_artifact(path)?;
    let report = artifact.validate()?;
    let clean = report.is_clean();
    match io.format {
        Format::Structured => io.json(&ValidateSummary {
            checked: report.checked,
            violations: report
                .violations
                .into_iter()
                .map(|v| ViolationLine {
                    message: v.to_string(),
                    detail: v,
                })
                .collect(),
        })?,
        Format::Human => {
            let mut s = String::new();
            for v in &report.violations {
                s.push_str(&format!("violation: {v}\n"));
            }
            s.push_str(&format!(
                "{} entries checked, {} violations\n",
                report.checked,
                report.violations.len()
            ));
            io.print(&s)?;
        }
    }
    Ok(if clean { EXIT_OK } else { EXIT_FAILURE })
}

#[derive(Serialize)]
struct EntryView {
    #[serde(flatten)]
    entry: RichEntry,
    line: usize,
    column: usize,
    text: String,
}

fn entry_view(e: &MappingEntry, source: &str) -> EntryView {
    let one = MappingTable {
        entries: vec![e.clone()],
        ..Default::default()
    };
    let (line, column) = e.span.line_col(source);
    EntryView {
        entry: RichSourceMap::from(&one).entries.remove(0),
        line,
        column,
        text: e
            .span
            .snippet(source)
            .lines()
            .next()
            .unwrap_or("")
            .trim()
            .to_string(),
    }
}

fn describe(v: &EntryView) -> String {
    let e = &v.entry;
    let zk = e
        .zk_constraint
        .map(|k| format!(" zk={k}"))
        .unwrap_or_default();
    format!(
        "{:#06x} {}:{}:{} {} md={} %{}{zk} {}:{} {}",
        e.offset, e.s, e.l, e.f, e.jump, e.modifier_depth, e.ir_id, v.line, v.column, v.text
    )
}

fn cmd_query(io: &mut Io, a: QueryArgs) -> Result<i32, Stop> {
    let artifact = load_artifact(&a.artifact)?;
    let source = artifact.source()?.content.clone();
    let table = artifact.table();
    if let Some(offset) = a.offset {
        let code = artifact.program()?.code;
        let hit = query_offset(&table, &code, offset).map_err(|e| Stop::Failed(e.to_string()))?;
        let view = hit.map(|e| entry_view(e, &source));
        match io.format {
            Format::Structured => io.json(&view)?,
            Format::Human => match &view {
                Some(v) => io.print(&format!("{}\n", describe(v)))?,
                None => io.print(&format!("{offset:#06x} has no source mapping\n"))?,
            },
        }
    }
    if let Some(span) = a.span {
        let offsets = query_span(&table, span);
        match io.format {
            Format::Structured => io.json(&offsets)?,
            Format::Human => {
                let list: Vec<String> = offsets.iter().map(|o| format!("{o:#06x}")).collect();
                io.print(&format!(
                    "{span}: {} offsets{}{}\n",
                    offsets.len(),
                    if list.is_empty() { "" } else { " " },
                    list.join(" ")
                ))?;
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DisasmLine {
    offset: u32,
    instruction: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    span: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

fn cmd_disasm(io: &mut Io, path: &Path) -> Result<i32, Stop> {
    let artifact = load_artifact(path)?;
    let source = artifact.source()?.content.clone();
    let table = artifact.table();
    let code = artifact.program()?.code;
    let insns = decode(&code).map_err(|e| Stop::Failed(e.to_string()))?;
    let lines: Vec<DisasmLine> = insns
        .iter()
        .map(|(offset, insn)| {
            let hit = table.entry_at(*offset);
            DisasmLine {
                offset: *offset,
                instruction: insn.to_string(),
                span: hit.map(|e| e.span.to_string()),
                text: hit.map(|e| {
                    e.span
                        .snippet(&source)
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim()
                        .to_string()
                }),
            }
        })
        .collect();
    match io.format {
        Format::Structured => io.json(&lines)?,
        Format::Human => {
            let mut s = String::new();
            for l in &lines {
                match (&l.span, &l.text) {
                    (Some(sp), Some(t)) => s.push_str(&format!(
                        "{:#06x} {:<22} ; {sp} {t}\n",
                        l.offset, l.instruction
                    )),
                    _ => s.push_str(&format!("{:#06x} {}\n", l.offset, l.instruction)),
                }
            }
            io.print(&s)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_trace(io: &mut Io, a: TraceArgs) -> Result<i32, Stop> {
    let artifact = load_artifact(&a.artifact)?;
    let suite =
        TxSuite::load(&a.tx).map_err(|e| Stop::Usage(format!("{}: {e}", a.tx.display())))?;
    let traces = trace_transactions(&artifact, &suite, a.index).map_err(|e| match e {
        DebugError::Index { .. } => Stop::Usage(e.to_string()),
        other => Stop::Failed(other.to_string()),
    })?;
    match io.format {
        Format::Structured => io.json(&traces)?,
        Format::Human => {
            let text: String = traces.iter().map(render_trace).collect();
            io.print(&text)?;
        }
    }
    let mismatch = traces.iter().any(|t| !t.mismatches.is_empty());
    Ok(if mismatch { EXIT_FAILURE } else { EXIT_OK })
}

fn cmd_bench(io: &mut Io, a: BenchArgs) -> Result<i32, Stop> {
    let fixtures = load_dir(&a.corpus).map_err(|e| Stop::Usage(e.to_string()))?;
    if fixtures.is_empty() {
        return Err(Stop::Usage(format!(
            "{}: no fixtures found",
            a.corpus.display()
        )));
    }
    let report = bench(&fixtures, a.reps, !a.no_timing).map_err(|e| match e {
        crate::bench::BenchError::Overhead(crate::exec::OverheadError::TooFewRepetitions(_)) => {
            Stop::Usage(e.to_string())
        }
        other => Stop::Failed(other.to_string()),
    })?;
    match io.format {
        Format::Structured => io.json(&report)?,
        Format::Human => {
            let mut s = String::new();
            for r in &report.accuracy {
                s.push_str(&render_accuracy(r));
                s.push('\n');
            }
            if let Some(o) = &report.overhead {
                s.push_str(&render_overhead(o));
            }
            io.print(&s)?;
        }
    }
    let failed = report
        .accuracy
        .iter()
        .any(|r| r.discrepancies() > 0 || r.expectation_failures() > 0);
    Ok(if failed { EXIT_FAILURE } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("zkmap").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["query", "a.json"]).0, EXIT_USAGE);
        assert_eq!(call(&["validate", "/nonexistent/a.zkb.json"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("trace"));
    }

    #[test]
    fn offsets_parse_hex_and_decimal() {
        assert_eq!(parse_offset("0x1f"), Ok(31));
        assert_eq!(parse_offset("31"), Ok(31));
        assert!(parse_offset("0xzz").is_err());
    }
}
