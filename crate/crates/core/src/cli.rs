//! Command-line front end. Exit codes: 0 success, 1 verification failed,
//! 2 usage or input error.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::blocks::{build_block, embed_into_block, BlockSpec};
use crate::dendrogram::{export_dot, export_newick};
use crate::error::{Error, Result};
use crate::generate::gen_random_ultrametric;
use crate::groups::{embed_into_group, group_space, ElementSet, SubgroupChain};
use crate::json::{
    embedding_json, group_embedding_json, pretty, read_chain, read_label_map, read_space,
    read_union_spec, write_chain, write_space,
};
use crate::metric::{
    asdim0_witness, distance_set, find_isometric_embedding, validate_ultrametric,
    verify_isometric_embedding, DistanceSet, SearchLimits,
};
use crate::unions::{check_union_spec, PointedSpace};
use crate::universal::{
    build_cu, build_pu, coarse_moduli, embed_into_cu, embed_into_cu_auto, embed_into_pu,
    embed_into_pu_auto, Truncation,
};

pub const DEFAULT_MAX_POINTS: usize = 4096;
pub const DEFAULT_GROW_CAP: u128 = 10_000;
pub const MAX_POINTS_ENV: &str = "ULTRACOARSE_MAX_POINTS";

#[derive(Parser, Debug)]
#[command(name = "ultracoarse", version, about = "Finite ultrametric spaces and universal spaces for asymptotic dimension 0")]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    /// Size guard on materialized spaces (default: $ULTRACOARSE_MAX_POINTS or 4096).
    #[arg(long, global = true)]
    max_points: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a space.
    #[command(subcommand)]
    Gen(Gen),
    /// Embed a space into a universal target.
    #[command(subcommand)]
    Embed(Embed),
    /// Check a property and report it as JSON.
    #[command(subcommand)]
    Verify(Verify),
    /// Convert a space to another format.
    #[command(subcommand)]
    Export(Export),
}

#[derive(Args, Debug)]
struct Input {
    /// Input file, `-` for standard input.
    #[arg(long, short = 'i', default_value = "-")]
    input: String,
}

#[derive(Args, Debug)]
struct BlockArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dset: Vec<u64>,
    /// Uniform width.
    #[arg(long, conflicts_with = "widths")]
    m: Option<usize>,
    /// Per-level widths, lowest level first.
    #[arg(long, value_delimiter = ',')]
    widths: Vec<usize>,
}

impl BlockArgs {
    fn spec(&self) -> Result<BlockSpec> {
        let d = DistanceSet::new(self.dset.clone())?;
        match self.m {
            Some(m) => BlockSpec::uniform(d, m),
            None if !self.widths.is_empty() => BlockSpec::new(d, self.widths.clone()),
            None => Err(Error::Invalid("give --m or --widths".into())),
        }
    }
}

#[derive(Args, Debug)]
struct ChainArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    cutoffs: Vec<u32>,
}

impl ChainArgs {
    fn chain(&self) -> Result<SubgroupChain> {
        SubgroupChain::new(DistanceSet::new(self.levels.clone())?, self.cutoffs.clone())
    }
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// The block FU(m, D), or the block with per-level widths.
    Fu(BlockArgs),
    /// Truncation of CU.
    Cu {
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 2)]
        width: usize,
    },
    /// Truncation of PU.
    Pu {
        #[arg(long)]
        blocks: usize,
    },
    /// The group on all vectors supported below the top cutoff.
    Group {
        #[command(flatten)]
        chain: ChainArgs,
        /// Emit the chain JSON instead of the group space.
        #[arg(long)]
        chain_only: bool,
    },
    /// Random D-ultrametric space.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        dset: Vec<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum Embed {
    /// Isometric embedding into a block.
    Fu {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        block: BlockArgs,
    },
    Cu {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long, default_value_t = 1)]
        width: usize,
        /// Grow the truncation to the stated requirement.
        #[arg(long)]
        auto_grow: bool,
        /// Largest truncation auto-grow may reach, in points.
        #[arg(long, default_value_t = DEFAULT_GROW_CAP)]
        cap: u128,
    },
    Pu {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 1)]
        blocks: usize,
        #[arg(long)]
        auto_grow: bool,
        #[arg(long, default_value_t = DEFAULT_GROW_CAP)]
        cap: u128,
    },
    Group {
        #[command(flatten)]
        input: Input,
        /// Chain JSON file.
        #[arg(long)]
        chain: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Ultrametric axioms (and the declared distance set).
    Ultrametric(Input),
    /// Whether a map (or, without --map, some map) is an isometric embedding.
    Isometry {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        target: PathBuf,
        /// JSON object from source labels to target labels.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Coarse disjoint union conditions of a union spec.
    Cdu {
        #[command(flatten)]
        input: Input,
        /// Scales M; default 1 up to the largest radius.
        #[arg(long, value_delimiter = ',')]
        scales: Vec<u64>,
    },
    /// Coarse moduli tables of a map.
    Moduli {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        map: PathBuf,
    },
    /// Largest r-component diameter per scale.
    Asdim0 {
        #[command(flatten)]
        input: Input,
        /// Scales r; default every positive distance.
        #[arg(long, value_delimiter = ',')]
        scales: Vec<u64>,
    },
}

#[derive(Subcommand, Debug)]
enum Export {
    Newick(Input),
    Dot(Input),
    /// Canonical space JSON.
    Json(Input),
}

struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn report(value: &Value, ok: bool) -> Self {
        Self {
            text: pretty(value),
            ok,
        }
    }

    fn text(text: String) -> Self {
        Self { text, ok: true }
    }
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let max_points = cli
        .max_points
        .or_else(|| std::env::var(MAX_POINTS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_MAX_POINTS);
    let outcome = dispatch(cli.command, max_points).and_then(|outcome| {
        write_output(cli.output.as_ref(), &outcome.text)?;
        Ok(outcome)
    });
    match outcome {
        Ok(o) => i32::from(!o.ok),
        Err(e) if is_failure(&e) => {
            let report = json!({ "ok": false, "error": e.to_string(), "requirement": requirement(&e) });
            let _ = write_output(cli.output.as_ref(), &pretty(&report));
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Errors meaning "this input does not embed here" rather than bad input.
fn is_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::TruncationTooSmall(_)
            | Error::TruncationCap { .. }
            | Error::CapacityShortfall { .. }
            | Error::ChainTooShort { .. }
            | Error::WidthExhausted { .. }
            | Error::DistanceNotInSet { .. }
            | Error::AnnulusHypothesis { .. }
    )
}

fn requirement(e: &Error) -> Value {
    match e {
        Error::TruncationTooSmall(req) => json!(req),
        Error::TruncationCap { required, cap } => json!({ "points": required.to_string(), "cap": cap.to_string() }),
        Error::CapacityShortfall { level, required, capacity } => {
            json!({ "level": level, "classes": required, "capacity": capacity.to_string() })
        }
        Error::ChainTooShort { required, top } => json!({ "level_above": required, "top": top }),
        _ => Value::Null,
    }
}

fn read_input(path: &str) -> Result<String> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)?;
    }
    Ok(text)
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_space(input: &Input) -> Result<crate::metric::UltrametricSpace> {
    read_space(&read_input(&input.input)?)
}

/// Embedding inputs must be genuine ultrametrics.
fn load_valid_space(input: &Input) -> Result<PointedSpace> {
    let space = load_space(input)?;
    let report = validate_ultrametric(&space);
    if !report.ok {
        return Err(Error::Invalid(format!("input is not an ultrametric: {}", report.summary())));
    }
    Ok(PointedSpace::from_space(space))
}

fn dispatch(command: Command, max_points: usize) -> Result<Outcome> {
    match command {
        Command::Gen(g) => gen(g, max_points),
        Command::Embed(e) => embed(e),
        Command::Verify(v) => verify(v),
        Command::Export(e) => export(e),
    }
}

fn gen(cmd: Gen, max_points: usize) -> Result<Outcome> {
    let space = match cmd {
        Gen::Fu(b) => {
            let spec = b.spec()?;
            build_block(&spec, max_points)?
                .with_basepoint(0)?
                .with_declared_dset(spec.dset().clone())?
        }
        Gen::Cu { blocks, width } => build_cu(blocks, width, max_points)?.0,
        Gen::Pu { blocks } => build_pu(blocks, max_points)?.0,
        Gen::Group { chain, chain_only } => {
            let chain = chain.chain()?;
            if chain_only {
                return Ok(Outcome::text(write_chain(&chain)));
            }
            group_space(&chain, &ElementSet::All(chain.max_cutoff()), max_points)?
                .with_basepoint(0)?
                .with_declared_dset(chain.levels().clone())?
        }
        Gen::Random { seed, n, dset } => {
            if n > max_points {
                return Err(Error::GuardExceeded {
                    what: "random space",
                    size: n as u128,
                    limit: max_points as u128,
                });
            }
            let d = DistanceSet::new(dset)?;
            gen_random_ultrametric(seed, n, &d)?.with_declared_dset(d)?
        }
    };
    Ok(Outcome::text(write_space(&space)))
}

fn embed(cmd: Embed) -> Result<Outcome> {
    match cmd {
        Embed::Fu { input, block } => {
            let x = load_valid_space(&input)?;
            let spec = block.spec()?;
            let emb = embed_into_block(x.space(), &spec)?;
            let assignment: serde_json::Map<String, Value> = x
                .space()
                .labels()
                .iter()
                .zip(&emb.addresses)
                .map(|(l, a)| (l.clone(), json!({ "block": 0, "address": a })))
                .collect();
            let ok = emb.report.ok;
            Ok(Outcome::report(
                &json!({ "assignment": assignment, "isometry": emb.report, "verified": ok }),
                ok,
            ))
        }
        Embed::Cu {
            input,
            blocks,
            width,
            auto_grow,
            cap,
        } => {
            let x = load_valid_space(&input)?;
            let start = Truncation { blocks, width };
            let (map, used) = if auto_grow {
                embed_into_cu_auto(&x, start, cap)?
            } else {
                (embed_into_cu(&x, start)?, start)
            };
            let mut v = embedding_json(&map);
            v["truncation"] = json!({ "blocks": used.blocks, "width": used.width });
            Ok(Outcome::report(&v, map.verified))
        }
        Embed::Pu {
            input,
            blocks,
            auto_grow,
            cap,
        } => {
            let x = load_valid_space(&input)?;
            let (map, used) = if auto_grow {
                embed_into_pu_auto(&x, blocks, cap)?
            } else {
                (embed_into_pu(&x, blocks)?, blocks)
            };
            let mut v = embedding_json(&map);
            v["truncation"] = json!({ "blocks": used });
            Ok(Outcome::report(&v, map.verified))
        }
        Embed::Group { input, chain } => {
            let x = load_valid_space(&input)?;
            let chain = read_chain(&std::fs::read_to_string(chain)?)?;
            let e = embed_into_group(&x, &chain)?;
            Ok(Outcome::report(&group_embedding_json(&e), e.map.verified))
        }
    }
}

fn verify(cmd: Verify) -> Result<Outcome> {
    match cmd {
        Verify::Ultrametric(input) => {
            let report = validate_ultrametric(&load_space(&input)?);
            Ok(Outcome::report(&json!(report), report.ok))
        }
        Verify::Isometry { input, target, map } => {
            let src = load_space(&input)?;
            let dst = read_space(&std::fs::read_to_string(target)?)?;
            let map = match map {
                Some(path) => Some(read_label_map(&std::fs::read_to_string(path)?, &src, &dst)?),
                None => find_isometric_embedding(&src, &dst, SearchLimits::default())?,
            };
            let Some(map) = map else {
                return Ok(Outcome::report(&json!({ "ok": false, "map": null }), false));
            };
            let report = verify_isometric_embedding(&map, &src, &dst)?;
            let labels: serde_json::Map<String, Value> = src
                .labels()
                .iter()
                .zip(&map)
                .map(|(l, &t)| (l.clone(), json!(dst.label(t))))
                .collect();
            Ok(Outcome::report(
                &json!({ "ok": report.ok, "violations": report.violations, "map": labels }),
                report.ok,
            ))
        }
        Verify::Cdu { input, scales } => {
            let spec = read_union_spec(&read_input(&input.input)?)?;
            let scales = if scales.is_empty() {
                (1..=spec.radii().iter().copied().max().unwrap_or(1)).collect()
            } else {
                scales
            };
            let report = check_union_spec(&spec, &scales)?;
            Ok(Outcome::report(&json!(report), report.pass))
        }
        Verify::Moduli { input, target, map } => {
            let src = load_space(&input)?;
            let dst = read_space(&std::fs::read_to_string(target)?)?;
            let map = read_label_map(&std::fs::read_to_string(map)?, &src, &dst)?;
            let moduli = coarse_moduli(&map, &src, &dst, None, None)?;
            let ok = moduli.is_monotone();
            Ok(Outcome::report(&json!({ "ok": ok, "moduli": moduli }), ok))
        }
        Verify::Asdim0 { input, scales } => {
            let space = load_space(&input)?;
            let scales = if scales.is_empty() {
                distance_set(&space).levels().to_vec()
            } else {
                scales
            };
            let witness = asdim0_witness(&space, &scales)?;
            let table: Vec<(u64, u64)> = witness.into_iter().collect();
            Ok(Outcome::report(&json!({ "ok": true, "component_diameters": table }), true))
        }
    }
}

fn export(cmd: Export) -> Result<Outcome> {
    let (input, format): (&Input, fn(&crate::metric::UltrametricSpace) -> String) = match &cmd {
        Export::Newick(i) => (i, |s| export_newick(s) + "\n"),
        Export::Dot(i) => (i, export_dot),
        Export::Json(i) => (i, write_space),
    };
    let space = match cmd {
        Export::Json(_) => load_space(input)?,
        _ => load_valid_space(input)?.into_space(),
    };
    Ok(Outcome::text(format(&space)))
}
