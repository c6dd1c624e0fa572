use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use geocodes::capacity::{self, NamespaceSpec};
use geocodes::eval::{self, ErrorModel, LocalityScheme, PerturbScheme, StabilityScheme};
use geocodes::grid::{self, GridCode};
use geocodes::robocode::{self, CityConfig, RoadNetwork, Robocode};
use geocodes::short::{Registry, RegistryConfig};
use geocodes::words::{self, WordList, WordTriple};
use geocodes::{CellBounds, GeoPoint};

#[derive(Parser)]
#[command(
    name = "geocodes",
    version,
    about = "Encode, decode and evaluate location codes offline"
)]
struct Cli {
    /// Print a single JSON object instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hierarchical grid codes.
    #[command(subcommand)]
    Grid(GridCmd),
    /// Three-word codes.
    #[command(subcommand)]
    Words(WordsCmd),
    /// Registered short codes.
    #[command(subcommand)]
    Short(ShortCmd),
    /// Street-relative robocodes.
    #[command(subcommand)]
    Robo(RoboCmd),
    /// Namespace arithmetic.
    #[command(subcommand)]
    Capacity(CapacityCmd),
    /// Evaluation runs that write CSV reports.
    #[command(subcommand)]
    Eval(EvalCmd),
}

#[derive(Args)]
struct Coords {
    /// Latitude in decimal degrees.
    #[arg(long, allow_negative_numbers = true)]
    lat: f64,
    /// Longitude in decimal degrees.
    #[arg(long, allow_negative_numbers = true)]
    lng: f64,
}

#[derive(Subcommand)]
enum GridCmd {
    Encode {
        #[command(flatten)]
        at: Coords,
        #[arg(long, default_value_t = 11)]
        length: usize,
    },
    Decode {
        #[arg(long)]
        code: String,
    },
}

#[derive(Subcommand)]
enum WordsCmd {
    Encode {
        #[command(flatten)]
        at: Coords,
        /// Word list file; the embedded list is used when omitted.
        #[arg(long)]
        wordlist: Option<PathBuf>,
    },
    Decode {
        /// Three words joined by '.'.
        #[arg(long)]
        words: String,
        #[arg(long)]
        wordlist: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ShortCmd {
    /// Allocate a code, creating the registry file if needed.
    Alloc {
        #[command(flatten)]
        at: Coords,
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        vanity: Option<String>,
        /// Seed for a new registry; must match an existing one.
        #[arg(long)]
        seed: Option<u64>,
    },
    Resolve {
        #[arg(long)]
        code: String,
        #[arg(long)]
        registry: PathBuf,
    },
}

#[derive(Subcommand)]
enum RoboCmd {
    Build {
        #[arg(long)]
        geojson: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Encode {
        #[command(flatten)]
        at: Coords,
        #[arg(long)]
        net: PathBuf,
    },
    Decode {
        #[arg(long)]
        code: String,
        #[arg(long)]
        net: PathBuf,
    },
}

#[derive(Subcommand)]
enum CapacityCmd {
    /// Shortest code length covering a population.
    Minlen {
        #[arg(long)]
        alphabet: u64,
        #[arg(long)]
        population: u128,
    },
    /// Ordered arrangements of k distinct words.
    Arrangements {
        #[arg(long)]
        words: u64,
        #[arg(long)]
        k: u64,
    },
    /// Square cells of a given side needed to tile the Earth.
    Cells {
        #[arg(long = "side-m")]
        side_m: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Grid,
    Word,
    Short,
    Robo,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gps,
    Map,
    Zero,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: u64,
    /// CSV report destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Displacement caused by one-symbol edits (grid, word).
    Perturb {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 11)]
        length: usize,
        /// Only edit the final character of grid codes.
        #[arg(long)]
        last_char_only: bool,
        #[arg(long)]
        wordlist: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Code similarity against distance (grid, word, short).
    Locality {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 1000)]
        pairs: u64,
        #[arg(long)]
        wordlist: Option<PathBuf>,
        #[arg(long)]
        registry: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Share of codes unchanged by location error (grid, word, robo).
    Stability {
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "gps")]
        model: ModelArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 11)]
        length: usize,
        #[arg(long)]
        wordlist: Option<PathBuf>,
        #[arg(long)]
        net: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Error of interpolating between neighbouring robocodes.
    Interp {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// What a command produced: text lines and the equivalent JSON object.
struct Output {
    text: String,
    json: Value,
}

/// A data error, reported on stderr with exit code 2.
struct Failure(String);

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<Output, Failure>;

fn context<T, E: Display>(r: Result<T, E>, what: &Path) -> Result<T, Failure> {
    r.map_err(|e| {
        let msg = e.to_string();
        let shown = what.display().to_string();
        if msg.contains(&shown) {
            Failure(msg)
        } else {
            Failure(format!("{shown}: {msg}"))
        }
    })
}

fn point(at: &Coords) -> Result<GeoPoint, Failure> {
    Ok(GeoPoint::new(at.lat, at.lng)?)
}

fn bounds_output(b: &CellBounds, extra: Value) -> Output {
    let c = b.center();
    let text = format!(
        "center {} {} deg\nbounds {} {} {} {} deg (south west north east)\nsize {:.2} x {:.2} m",
        c.lat(),
        c.lng(),
        b.south,
        b.west,
        b.north,
        b.east,
        b.width_m(),
        b.height_m()
    );
    let mut json = json!({
        "lat": c.lat(),
        "lng": c.lng(),
        "south": b.south,
        "west": b.west,
        "north": b.north,
        "east": b.east,
        "width_m": b.width_m(),
        "height_m": b.height_m(),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut json, extra) {
        m.extend(e);
    }
    Output { text, json }
}

fn wordlist(path: &Option<PathBuf>) -> Result<WordList, Failure> {
    match path {
        Some(p) => context(WordList::load(p), p),
        None => Ok(WordList::builtin()),
    }
}

fn load_net(path: &Path) -> Result<RoadNetwork, Failure> {
    context(RoadNetwork::load(path), path)
}

fn load_registry(path: &Path) -> Result<Registry, Failure> {
    context(Registry::load(path), path)
}

fn run_grid(cmd: GridCmd) -> Outcome {
    match cmd {
        GridCmd::Encode { at, length } => {
            let code = grid::encode(point(&at)?, length)?;
            Ok(Output {
                text: code.to_string(),
                json: json!({ "code": code.to_string(), "length": code.len() }),
            })
        }
        GridCmd::Decode { code } => {
            let parsed: GridCode = code.parse()?;
            let b = grid::decode(&parsed);
            Ok(bounds_output(&b, json!({ "code": parsed.to_string() })))
        }
    }
}

fn run_words(cmd: WordsCmd) -> Outcome {
    match cmd {
        WordsCmd::Encode { at, wordlist: path } => {
            let list = wordlist(&path)?;
            let triple = words::encode(point(&at)?, &list)?;
            Ok(Output {
                text: triple.to_string(),
                json: json!({ "words": triple.to_string() }),
            })
        }
        WordsCmd::Decode {
            words: w,
            wordlist: path,
        } => {
            let list = wordlist(&path)?;
            let triple: WordTriple = w.parse()?;
            let b = words::decode(&triple, &list)?;
            Ok(bounds_output(&b, json!({ "words": triple.to_string() })))
        }
    }
}

fn run_short(cmd: ShortCmd) -> Outcome {
    match cmd {
        ShortCmd::Alloc {
            at,
            registry,
            vanity,
            seed,
        } => {
            let p = point(&at)?;
            let mut reg = if registry.exists() {
                let reg = load_registry(&registry)?;
                if let Some(s) = seed.filter(|&s| s != reg.seed()) {
                    return Err(Failure(format!(
                        "{}: registry was created with seed {}, not {s}",
                        registry.display(),
                        reg.seed()
                    )));
                }
                reg
            } else {
                Registry::new(RegistryConfig::default().with_seed(seed.unwrap_or(0)))?
            };
            let rec = match vanity {
                Some(code) => reg.allocate_vanity(p, &code)?,
                None => reg.allocate(p)?,
            };
            context(reg.save(&registry), &registry)?;
            Ok(Output {
                text: rec.code.clone(),
                json: json!({ "code": rec.code, "lat": p.lat(), "lng": p.lng(), "created": rec.created }),
            })
        }
        ShortCmd::Resolve { code, registry } => {
            let reg = load_registry(&registry)?;
            let p = reg.resolve(&code)?;
            Ok(Output {
                text: format!("{} {} deg", p.lat(), p.lng()),
                json: json!({ "code": reg.canonicalize(&code)?, "lat": p.lat(), "lng": p.lng() }),
            })
        }
    }
}

fn run_robo(cmd: RoboCmd) -> Outcome {
    match cmd {
        RoboCmd::Build {
            geojson,
            config,
            out,
        } => {
            let roads = context(std::fs::read_to_string(&geojson), &geojson)?;
            let features = context(robocode::parse_geojson(&roads), &geojson)?;
            let cfg_text = context(std::fs::read_to_string(&config), &config)?;
            let cfg = context(CityConfig::from_json(&cfg_text), &config)?;
            let net = RoadNetwork::build(features, cfg)?;
            context(net.save(&out), &out)?;
            let derived = net
                .streets()
                .iter()
                .filter(|s| s.derived_name.is_some())
                .count();
            Ok(Output {
                text: format!(
                    "{} streets ({derived} with derived names) written to {}",
                    net.streets().len(),
                    out.display()
                ),
                json: json!({
                    "streets": net.streets().len(),
                    "derived_names": derived,
                    "out": out.display().to_string(),
                }),
            })
        }
        RoboCmd::Encode { at, net } => {
            let net = load_net(&net)?;
            let p = point(&at)?;
            let pos = net.locate(p);
            let code = net.code_for(pos.street, pos.offset_m);
            Ok(Output {
                text: code.to_string(),
                json: json!({
                    "code": code.to_string(),
                    "offset_m": code.offset_m,
                    "street": code.street_name,
                    "distance_to_street_m": pos.distance_m,
                }),
            })
        }
        RoboCmd::Decode { code, net } => {
            let parsed: Robocode = code.parse()?;
            let net = load_net(&net)?;
            let p = net.decode(&parsed)?;
            Ok(Output {
                text: format!("{} {} deg", p.lat(), p.lng()),
                json: json!({ "code": parsed.to_string(), "lat": p.lat(), "lng": p.lng() }),
            })
        }
    }
}

fn run_capacity(cmd: CapacityCmd) -> Outcome {
    match cmd {
        CapacityCmd::Minlen {
            alphabet,
            population,
        } => {
            let n = capacity::min_code_length(NamespaceSpec::new(alphabet, population)?);
            Ok(Output {
                text: n.to_string(),
                json: json!({ "min_code_length": n }),
            })
        }
        CapacityCmd::Arrangements { words, k } => {
            let n = capacity::distinct_word_arrangements(words, k)?;
            Ok(Output {
                text: n.to_string(),
                // may exceed any JSON number type
                json: json!({ "arrangements": n.to_string() }),
            })
        }
        CapacityCmd::Cells { side_m } => {
            let n = capacity::earth_cell_count(side_m)?;
            Ok(Output {
                text: n.to_string(),
                json: json!({ "cells": n.to_string(), "side_m": side_m }),
            })
        }
    }
}

fn write_report(run: &RunArgs, csv: String, summary: Value) -> Outcome {
    context(std::fs::write(&run.out, &csv), &run.out)?;
    let mut json = json!({ "out": run.out.display().to_string(), "seed": run.seed });
    if let (Value::Object(m), Value::Object(s)) = (&mut json, summary) {
        m.extend(s);
    }
    Ok(Output {
        text: format!("report written to {}", run.out.display()),
        json,
    })
}

fn unsupported(scheme: SchemeArg, what: &str) -> Failure {
    let name = scheme
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    Failure(format!("scheme {name} is not supported by eval {what}"))
}

fn run_eval(cmd: EvalCmd) -> Outcome {
    match cmd {
        EvalCmd::Perturb {
            scheme,
            trials,
            length,
            last_char_only,
            wordlist: path,
            run,
        } => {
            let list;
            let s = match scheme {
                SchemeArg::Grid => {
                    if !grid::VALID_LENGTHS.contains(&length) {
                        return Err(grid::GridError::InvalidLength(length).into());
                    }
                    PerturbScheme::Grid {
                        length,
                        last_char_only,
                    }
                }
                SchemeArg::Word => {
                    list = wordlist(&path)?;
                    PerturbScheme::Words(&list)
                }
                other => return Err(unsupported(other, "perturb")),
            };
            let r = eval::perturbation_displacement(s, trials, run.seed);
            let q = r.quantiles;
            write_report(
                &run,
                r.to_csv(),
                json!({
                    "valid": r.valid,
                    "invalid": r.invalid,
                    "p50_m": q.map(|q| q.p50),
                    "p90_m": q.map(|q| q.p90),
                    "max_m": q.map(|q| q.max),
                }),
            )
        }
        EvalCmd::Locality {
            scheme,
            pairs,
            wordlist: path,
            registry,
            run,
        } => {
            let list;
            let reg;
            let s = match scheme {
                SchemeArg::Grid => LocalityScheme::Grid,
                SchemeArg::Word => {
                    list = wordlist(&path)?;
                    LocalityScheme::Words(&list)
                }
                SchemeArg::Short => {
                    let path = registry.ok_or_else(|| {
                        Failure("eval locality --scheme short needs --registry".into())
                    })?;
                    reg = load_registry(&path)?;
                    LocalityScheme::Short(&reg)
                }
                other => return Err(unsupported(other, "locality")),
            };
            let p = eval::locality_profile(s, pairs, run.seed)?;
            write_report(
                &run,
                p.to_csv(),
                json!({ "p_value": p.independence.p_value }),
            )
        }
        EvalCmd::Stability {
            scheme,
            model,
            trials,
            length,
            wordlist: path,
            net,
            run,
        } => {
            let model = match model {
                ModelArg::Gps => ErrorModel::gps(),
                ModelArg::Map => ErrorModel::map_marking(),
                ModelArg::Zero => ErrorModel::zero(),
            };
            let list;
            let network;
            let s = match scheme {
                SchemeArg::Grid => {
                    if !grid::VALID_LENGTHS.contains(&length) {
                        return Err(grid::GridError::InvalidLength(length).into());
                    }
                    StabilityScheme::Grid { length }
                }
                SchemeArg::Word => {
                    list = wordlist(&path)?;
                    StabilityScheme::Words(&list)
                }
                SchemeArg::Robo => {
                    let path = net.ok_or_else(|| {
                        Failure("eval stability --scheme robo needs --net".into())
                    })?;
                    network = load_net(&path)?;
                    StabilityScheme::Robo(&network)
                }
                other => return Err(unsupported(other, "stability")),
            };
            let r = eval::code_stability(s, &model, trials, run.seed);
            write_report(
                &run,
                r.to_csv(),
                json!({ "stable": r.stable, "fraction": r.fraction }),
            )
        }
        EvalCmd::Interp { net, samples, run } => {
            let network = load_net(&net)?;
            let r = eval::interpolation_error(&network, samples, run.seed)?;
            let q = r.quantiles;
            write_report(
                &run,
                r.to_csv(),
                json!({ "p50_m": q.map(|q| q.p50), "p90_m": q.map(|q| q.p90), "max_m": q.map(|q| q.max) }),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Grid(c) => run_grid(c),
        Command::Words(c) => run_words(c),
        Command::Short(c) => run_short(c),
        Command::Robo(c) => run_robo(c),
        Command::Capacity(c) => run_capacity(c),
        Command::Eval(c) => run_eval(c),
    };
    match result {
        Ok(out) => {
            if cli.json {
                println!("{}", out.json);
            } else {
                println!("{}", out.text);
            }
            ExitCode::SUCCESS
        }
        Err(Failure(msg)) => {
            if cli.json {
                eprintln!("{}", json!({ "error": msg }));
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(2)
        }
    }
}
