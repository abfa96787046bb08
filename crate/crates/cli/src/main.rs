use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use arth_core::convert::{convert, DEFAULT_CAPACITY};
use arth_core::datagen::{
    gen_arith_qa, gen_dot_place, gen_numbers_ops, mix_datasets, read_qa_records, read_raw_records,
    to_json_array, to_jsonl, to_lines, GenConfig, Stage,
};
use arth_core::gates::{agreement, label_events, train_gates, GateEvent, TrainConfig};
use arth_core::infix::{parse_infix, to_postfix};
use arth_core::pipeline::{run_reference, GateSource, PipelineConfig, DEFAULT_DRAFT_LEN, DEFAULT_INJECT_LEN};
use arth_core::{encode, evaluate_traced, render, GateParams};

#[derive(Parser)]
#[command(name = "arth", version, about = "Arithmetic co-processor: postfix conversion, evaluation and prompt injection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a postfix expression and print the rendered result
    Eval {
        postfix: String,
        /// Print the reduction trace as JSON instead of the bare result
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        gates: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CAPACITY)]
        capacity: usize,
    },
    /// Print the dense program of a postfix expression as JSON
    Convert {
        postfix: String,
        #[arg(long)]
        gates: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CAPACITY)]
        capacity: usize,
    },
    /// Translate an infix question to postfix
    ToPostfix { infix: String },
    /// Render a number as it would be injected
    Render {
        #[arg(allow_negative_numbers = true)]
        number: f64,
    },
    /// Generate a training corpus
    Gen {
        kind: Corpus,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = StageArg::Easy)]
        stage: StageArg,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// QA records to mix (mix only)
        #[arg(long)]
        arith: Option<PathBuf>,
        /// Other instruction records to mix (mix only)
        #[arg(long)]
        other: Option<PathBuf>,
        #[arg(long, default_value_t = 0.6)]
        fraction: f64,
        /// Write one JSON array instead of JSONL (mix only)
        #[arg(long)]
        array: bool,
    },
    /// Train the gate heads and write their parameters
    TrainGates {
        /// Corpus files, consumed in order: plain lines or QA JSONL
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        epoch_size: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long)]
        steps_max: Option<usize>,
        #[arg(long, default_value_t = 5.0)]
        dot_weight: f64,
        #[arg(long, default_value_t = 5.0)]
        op_weight: f64,
        /// Leading small epochs that only record losses
        #[arg(long, default_value_t = 0)]
        freeze: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start from these parameters instead of zeros
        #[arg(long)]
        init: Option<PathBuf>,
        /// Do not mix the 36 labelled domain cases into each small epoch
        #[arg(long)]
        no_anchors: bool,
        /// Write per-event losses as JSONL
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Compare learned gates with the rule gates on every (token, decimal) case
    VerifyGates {
        #[arg(long)]
        gates: PathBuf,
    },
    /// Answer a question through the full pipeline and print the result as JSON
    Run {
        question: String,
        #[arg(long)]
        gates: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DRAFT_LEN)]
        draft_len: usize,
        #[arg(long, default_value_t = DEFAULT_INJECT_LEN)]
        inject_len: usize,
        #[arg(long, default_value_t = DEFAULT_CAPACITY)]
        capacity: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Corpus {
    DotPlace,
    NumbersOps,
    Qa,
    Mix,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Easy,
    Priority,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Easy => Stage::Easy,
            StageArg::Priority => Stage::Priority,
        }
    }
}

/// Failure with a one-line diagnostic and exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn runtime(e: impl Display) -> Self {
        Failure { code: 1, message: e.to_string() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<arth_core::Error> for Failure {
    fn from(e: arth_core::Error) -> Self {
        Failure::runtime(e)
    }
}

type CliResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(Failure::runtime),
    }
}

fn gate_source(gates: Option<&Path>) -> Result<GateSource, Failure> {
    Ok(match gates {
        Some(p) => GateSource::Learned(Box::new(GateParams::load(p)?)),
        None => GateSource::Rule,
    })
}

fn eval_cmd(postfix: &str, trace: bool, gates: Option<&Path>, capacity: usize) -> CliResult {
    let policy = gate_source(gates)?;
    let program = convert::<f64, _>(&encode(postfix), &policy, capacity)?;
    let t = evaluate_traced(&program)?;
    let rendered = render(t.value)?;
    if trace {
        println!("{}", json!({ "result": rendered, "steps": t.steps, "final": t.value }));
    } else {
        println!("{rendered}");
    }
    Ok(())
}

fn gen_cmd(
    kind: Corpus,
    count: Option<usize>,
    seed: u64,
    stage: StageArg,
    out: Option<&Path>,
    mix: (Option<&Path>, Option<&Path>, f64, bool),
) -> CliResult {
    if count == Some(0) {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let text = match kind {
        Corpus::DotPlace => to_lines(&gen_dot_place(count.unwrap_or(100), seed)),
        Corpus::NumbersOps => to_lines(&gen_numbers_ops(count.unwrap_or(500), seed)),
        Corpus::Qa => {
            let config = GenConfig::for_stage(stage.into(), count.unwrap_or(1000), seed);
            to_jsonl(&gen_arith_qa(&config)?)
        }
        Corpus::Mix => {
            let (Some(arith), Some(other), fraction, array) = mix else {
                return Err(Failure::usage("gen mix needs --arith and --other"));
            };
            let arith = read_qa_records(&read(arith)?)?;
            let other = read_raw_records(&read(other)?)?;
            let mixed = mix_datasets(&arith, &other, fraction, seed)?;
            if array {
                to_json_array(&mixed)
            } else {
                to_jsonl(&mixed)
            }
        }
    };
    write_out(out, &text)
}

/// Labels every line of a corpus file. QA files contribute their postfix field.
fn load_examples(path: &Path) -> Result<Vec<Vec<GateEvent>>, Failure> {
    let text = read(path)?;
    let first = text.trim_start().chars().next();
    let lines: Vec<String> = if matches!(first, Some('{' | '[')) {
        read_qa_records(&text)?.into_iter().map(|r| r.swift_express).collect()
    } else {
        text.lines().filter(|l| !l.is_empty()).map(str::to_string).collect()
    };
    lines
        .iter()
        .map(|l| label_events(l).map_err(|e| Failure::runtime(format!("{}: {l:?}: {e}", path.display()))))
        .collect()
}

fn verify_cmd(gates: &Path) -> CliResult {
    let params = GateParams::load(gates)?;
    let a = agreement(&params);
    let pct = |n: usize| 100.0 * n as f64 / a.cases as f64;
    println!("{:<14} {:>7} {:>8}", "head", "agree", "percent");
    for (name, n) in [
        ("ignore", a.ignore),
        ("move", a.move_pos),
        ("decimal_start", a.decimal_start),
        ("dense_mode", a.dense_mode),
        ("digit", a.digit),
        ("op", a.op),
        ("all", a.full),
    ] {
        println!("{name:<14} {:>7} {:>7.1}%", format!("{n}/{}", a.cases), pct(n));
    }
    for m in &a.mismatches {
        println!(
            "mismatch token={:?} decimal_started={} expected={} actual={}",
            m.token,
            u8::from(m.decimal_started),
            serde_json::to_string(&m.expected).unwrap_or_default(),
            serde_json::to_string(&m.actual).unwrap_or_default(),
        );
    }
    if a.is_perfect() {
        Ok(())
    } else {
        Err(Failure::runtime(format!("gate agreement {}/{}", a.full, a.cases)))
    }
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Eval { postfix, trace, gates, capacity } => eval_cmd(&postfix, trace, gates.as_deref(), capacity),
        Command::Convert { postfix, gates, capacity } => {
            let policy = gate_source(gates.as_deref())?;
            let program = convert::<f64, _>(&encode(&postfix), &policy, capacity)?;
            println!("{}", serde_json::to_string(&program).map_err(Failure::runtime)?);
            Ok(())
        }
        Command::ToPostfix { infix } => {
            println!("{}", to_postfix(&parse_infix::<f64>(&infix)?)?);
            Ok(())
        }
        Command::Render { number } => {
            println!("{}", render(number)?);
            Ok(())
        }
        Command::Gen { kind, count, seed, stage, out, arith, other, fraction, array } => gen_cmd(
            kind,
            count,
            seed,
            stage,
            out.as_deref(),
            (arith.as_deref(), other.as_deref(), fraction, array),
        ),
        Command::TrainGates {
            data,
            out,
            epoch_size,
            repeats,
            lr,
            steps_max,
            dot_weight,
            op_weight,
            freeze,
            seed,
            init,
            no_anchors,
            events_out,
        } => {
            let mut corpus = Vec::new();
            for path in &data {
                corpus.extend(load_examples(path)?);
            }
            let config = TrainConfig {
                epoch_size,
                repeats,
                lr,
                steps_max,
                dot_weight,
                op_weight,
                freeze_epochs: freeze,
                anchor_domain: !no_anchors,
                seed,
            };
            let init = init.as_deref().map(GateParams::load).transpose()?;
            let report = train_gates::<f64>(&corpus, &config, init)?;
            report
                .params
                .save(&out)
                .map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
            if let Some(path) = events_out {
                write_out(Some(&path), &to_jsonl(&report.events))?;
            }
            print!("{}", to_jsonl(&report.epochs));
            Ok(())
        }
        Command::VerifyGates { gates } => verify_cmd(&gates),
        Command::Run { question, gates, draft_len, inject_len, capacity } => {
            let config = PipelineConfig {
                draft_len,
                inject_len,
                capacity,
                gates: gate_source(gates.as_deref())?,
            };
            println!("{}", run_reference(&question, &config).to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("arth: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
