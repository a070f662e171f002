use std::fs;
use std::path::Path;

use channelforge::channel::{choi_from_stinespring, stinespring_from_choi, tensor_power};
use channelforge::degradability::{test_property, Property};
use channelforge::dnorm::{diamond_norm_with_limits, theorem_parameters, Decision};
use channelforge::embed::{
    antidegradable_embedding_with_limits, degradable_embedding_with_limits, verify_with_limits,
};
use channelforge::io::{
    self, ChoiDoc, DiamondNormDoc, EmbeddingDoc, FeasibilityDoc, StinespringDoc,
};
use channelforge::{ChannelPair, ChoiMatrix, Error, Limits, StinespringRep};
use serde::Serialize;
use serde_json::json;

use crate::{demo, render, Cli, Command, Mode};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SIZE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;
pub const EXIT_PROMISE: u8 = 5;
pub const EXIT_DEMO: u8 = 6;

pub const DIM_CAP_VAR: &str = "CHANNELFORGE_DIM_CAP";

/// Channel files are CPTP to this tolerance when converted to a dilation.
const CHANNEL_TOL: f64 = 1e-8;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SizeLimit { .. } => EXIT_SIZE,
            Error::NonConvergence { .. } => EXIT_VERIFY,
            Error::Shape(_) | Error::Contract(_) | Error::Parse { .. } | Error::Circuit { .. } => {
                EXIT_CONFIG
            }
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn limits() -> Result<Limits, Failure> {
    match std::env::var(DIM_CAP_VAR) {
        Err(_) => Ok(Limits::default()),
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(cap) if cap > 0 => Ok(Limits::new(cap)),
            _ => Err(Failure::config(format!(
                "{DIM_CAP_VAR} must be a positive integer, got {raw:?}"
            ))),
        },
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))
}

fn check_tol(tol: f64, max: f64) -> Result<(), Failure> {
    if tol.is_finite() && tol > 0.0 && tol <= max {
        Ok(())
    } else {
        Err(Failure::config(format!(
            "tolerance must lie in (0, {max:e}], got {tol}"
        )))
    }
}

fn is_circuit_document(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text)
        .map(|v| v.get("gates").is_some())
        .unwrap_or(false)
}

/// A channel file holds either a circuit document or a Choi document.
fn load_channel(path: &Path, limits: &Limits) -> Result<ChoiMatrix, Failure> {
    let text = read(path)?;
    if is_circuit_document(&text) {
        let rep = io::parse_circuit(&text)?.compile(limits)?;
        Ok(choi_from_stinespring(&rep, limits)?)
    } else {
        Ok(io::parse_choi(&text)?)
    }
}

fn load_dilation(path: &Path, limits: &Limits) -> Result<StinespringRep, Failure> {
    let text = read(path)?;
    if is_circuit_document(&text) {
        Ok(io::parse_circuit(&text)?.compile(limits)?)
    } else {
        let choi = io::parse_choi(&text)?;
        limits.check_product(&[choi.dim_in(), choi.dim_out()])?;
        Ok(stinespring_from_choi(&choi, CHANNEL_TOL)?)
    }
}

fn emit<T: Serialize>(cli: &Cli, value: &T) -> Result<(), Failure> {
    let text = if cli.pretty {
        render::table(&serde_json::to_value(value).expect("serializable"))
    } else {
        io::to_json(value) + "\n"
    };
    match &cli.output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn property(mode: Mode) -> Property {
    match mode {
        Mode::Degradable => Property::Degradable,
        Mode::Antidegradable => Property::Antidegradable,
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let limits = limits()?;
    match &cli.command {
        Command::Compile {
            circuit,
            stinespring,
        } => {
            let rep = io::parse_circuit(&read(circuit)?)?.compile(&limits)?;
            if *stinespring {
                emit(cli, &StinespringDoc::from(&rep))?;
            } else {
                emit(cli, &ChoiDoc::from(&choi_from_stinespring(&rep, &limits)?))?;
            }
            Ok(EXIT_OK)
        }
        Command::Embed {
            circuit,
            mode,
            verify,
            tol,
        } => {
            check_tol(*tol, 1e-3)?;
            let phi = io::parse_circuit(&read(circuit)?)?;
            let e = match mode {
                Mode::Degradable => degradable_embedding_with_limits(&phi, &limits)?,
                Mode::Antidegradable => antidegradable_embedding_with_limits(&phi, &limits)?,
            };
            emit(cli, &EmbeddingDoc::from(&e))?;
            if !verify {
                return Ok(EXIT_OK);
            }
            let report = verify_with_limits(&e, *tol, &limits)?;
            eprintln!("{}", io::to_json(&report));
            Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Verify { embedding, tol } => {
            check_tol(*tol, 1e-3)?;
            let doc: EmbeddingDoc = io::from_json(&read(embedding)?)?;
            let as_verification_failure = |e: Error| -> Failure {
                match e {
                    Error::SizeLimit { .. } => e.into(),
                    other => Failure {
                        code: EXIT_VERIFY,
                        message: format!("embedding does not verify: {other}"),
                    },
                }
            };
            let e = doc.to_embedding().map_err(as_verification_failure)?;
            let report = verify_with_limits(&e, *tol, &limits).map_err(as_verification_failure)?;
            emit(cli, &report)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Dnorm {
            first,
            second,
            tol,
            witness,
        } => {
            check_tol(*tol, 1e-2)?;
            let pair = ChannelPair::new(
                load_channel(first, &limits)?,
                load_channel(second, &limits)?,
            )?;
            let r = diamond_norm_with_limits(&pair, *tol, &limits)?;
            emit(cli, &DiamondNormDoc::new(&r, *witness))?;
            Ok(EXIT_OK)
        }
        Command::Distinguish {
            first,
            second,
            a,
            b,
            tol,
        } => {
            let (a, b, tol) = (*a, *b, *tol);
            if !(0.0 <= b && b < a && a <= 2.0) {
                return Err(Failure::config(format!(
                    "thresholds must satisfy 0 <= b < a <= 2, got a={a}, b={b}"
                )));
            }
            if !(tol > 0.0 && tol < (a - b) / 2.0) {
                return Err(Failure::config(format!(
                    "tolerance {tol} must be positive and below (a - b)/2"
                )));
            }
            let pair = ChannelPair::new(
                load_channel(first, &limits)?,
                load_channel(second, &limits)?,
            )?;
            let r = diamond_norm_with_limits(&pair, tol, &limits)?;
            let decision = Decision::classify(r.value, a, b, tol);
            emit(
                cli,
                &json!({
                    "decision": decision,
                    "value": r.value,
                    "primal_bound": r.primal_bound,
                    "dual_bound": r.dual_bound,
                    "a": a,
                    "b": b,
                }),
            )?;
            Ok(match decision {
                Decision::Yes => EXIT_OK,
                Decision::No => EXIT_NO,
                Decision::Indeterminate => EXIT_PROMISE,
            })
        }
        Command::Repeat { channel, k } => {
            let c = load_channel(channel, &limits)?;
            emit(cli, &ChoiDoc::from(&tensor_power(&c, *k, &limits)?))?;
            Ok(EXIT_OK)
        }
        Command::Params { a, b } => {
            let p = theorem_parameters(*a, *b)?;
            emit(cli, &json!({ "k": p.k, "epsilon": p.epsilon }))?;
            Ok(EXIT_OK)
        }
        Command::Feasibility {
            channel,
            property: mode,
            tol,
            certificate,
        } => {
            check_tol(*tol, 1e-2)?;
            let rep = load_dilation(channel, &limits)?;
            let report = test_property(&rep, property(*mode), *tol, &limits)?;
            #[derive(Serialize)]
            struct Doc {
                property: Property,
                #[serde(flatten)]
                report: FeasibilityDoc,
            }
            emit(
                cli,
                &Doc {
                    property: property(*mode),
                    report: FeasibilityDoc::new(&report, *certificate),
                },
            )?;
            Ok(if report.feasible { EXIT_OK } else { EXIT_NO })
        }
        Command::Demo { seed, tol } => {
            check_tol(*tol, 1e-4)?;
            let outcome = demo::run(*seed, *tol, &limits)?;
            emit(cli, &outcome.report)?;
            if outcome.failures.is_empty() {
                Ok(EXIT_OK)
            } else {
                Err(Failure {
                    code: EXIT_DEMO,
                    message: format!("property check failed: {}", outcome.failures.join(", ")),
                })
            }
        }
    }
}
