//! `ibn`: run scripts, check and export models, and compare the engine
//! against the exact oracle.
//!
//! Exit codes: 0 ok, 1 expectation failure (or oracle violation),
//! 2 contradiction, 3 parse or input error.

use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ibn_core::model::{parse_model, parse_script, to_dot, to_json, RunStatus, Session, SessionError};
use ibn_core::oracle::{check_model, soundness_check, SoundnessReport};

const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "ibn", version, about = "Interval belief networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a script and print its transcript.
    Run { script: PathBuf },
    /// Read commands from standard input, one per line.
    Repl {
        /// Model to load first.
        #[arg(long)]
        load: Option<PathBuf>,
    },
    /// Load a model, print every state and the consistency verdict.
    Check { model: PathBuf },
    /// Load a model and write its network as DOT or JSON.
    Export {
        model: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the engine with exact LP bounds on a model, and optionally
    /// on a batch of random models.
    Oracle {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random models to check after the given one.
        #[arg(long, default_value_t = 0)]
        count: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { script } => run(&script),
        Command::Repl { load } => repl(load.as_deref()),
        Command::Check { model } => check(&model),
        Command::Export { model, format, out } => export(&model, format, &out),
        Command::Oracle {
            model,
            seed,
            count,
            json,
        } => oracle(&model, seed, count, json),
    };
    ExitCode::from(code)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INPUT
    })
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = io::stdout().lock().write_all(text.as_bytes());
}

fn status_code(status: RunStatus) -> u8 {
    status.exit_code() as u8
}

fn run(script: &Path) -> u8 {
    let text = match read(script) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let mut session = Session::new(base_dir(script));
    let result = session.run_text(&text, script);
    emit(session.transcript());
    match result {
        Ok(()) => status_code(session.status()),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Loads a model file into a fresh session.
fn load_model(model: &Path) -> Result<Session, u8> {
    let text = read(model)?;
    let doc = parse_model(&text).map_err(|e| {
        eprintln!("error: {}: {e}", model.display());
        EXIT_INPUT
    })?;
    let mut session = Session::new(base_dir(model));
    session.run(&doc).map_err(|e| {
        eprintln!("error: {}: {e}", model.display());
        EXIT_INPUT
    })?;
    Ok(session)
}

fn check(model: &Path) -> u8 {
    let mut session = match load_model(model) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let commands = parse_script("show\ncheck").expect("fixed commands");
    if let Err(e) = session.run(&commands) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    emit(session.transcript());
    status_code(session.status())
}

fn export(model: &Path, format: Format, out: &Path) -> u8 {
    let session = match load_model(model) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let text = match format {
        Format::Dot => to_dot(session.engine()),
        Format::Json => to_json(session.engine()),
    };
    if let Err(e) = std::fs::write(out, text) {
        eprintln!("error: {}: {e}", out.display());
        return EXIT_INPUT;
    }
    match session.status() {
        RunStatus::Contradiction => 2,
        _ => 0,
    }
}

fn oracle(model: &Path, seed: u64, count: usize, json: bool) -> u8 {
    let session = match load_model(model) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let label = model.display().to_string();
    let given = match check_model(&label, &session.network().to_model()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut models = vec![given];
    if count > 0 {
        models.extend(soundness_check(seed, count).models);
    }
    let report = SoundnessReport::from_models(seed, models);
    if json {
        emit(&serde_json::to_string_pretty(&report).expect("report serializes"));
        emit("\n");
    } else {
        let mut text = report.render_text();
        for s in &report.models[0].states {
            text.push_str(&format!(
                "  {} engine [{:.6} {:.6}] tight [{:.6} {:.6}]\n",
                s.state, s.engine[0], s.engine[1], s.tight[0], s.tight[1]
            ));
        }
        emit(&text);
    }
    if report.violations > 0 {
        1
    } else {
        0
    }
}

fn repl(load: Option<&Path>) -> u8 {
    let mut session = match load {
        Some(m) => match load_model(m) {
            Ok(s) => s,
            Err(code) => return code,
        },
        None => Session::new("."),
    };
    let interactive = io::stdin().is_terminal();
    let stdout = io::stdout();
    let mut line_no = 0;
    loop {
        if interactive {
            print!("ibn> ");
            let _ = stdout.lock().flush();
        }
        let mut line = String::new();
        match io::stdin().lock().read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
        }
        line_no += 1;
        let trimmed = line.trim();
        if trimmed == "quit" || trimmed == "exit" {
            break;
        }
        match parse_script(&line) {
            Ok(doc) => {
                for l in &doc.lines {
                    if let Err(e) = session.execute(&l.statement, line_no) {
                        report_repl_error(&e);
                    }
                }
            }
            Err(e) => emit(&format!("error: column {}: {}\n", e.column, e.message)),
        }
        emit(&session.take_transcript());
        let _ = stdout.lock().flush();
    }
    status_code(session.status())
}

fn report_repl_error(e: &SessionError) {
    match e {
        SessionError::Input { message, .. } => emit(&format!("error: {message}\n")),
        other => emit(&format!("error: {other}\n")),
    }
}
