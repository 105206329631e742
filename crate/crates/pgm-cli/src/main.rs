//! pgm: batch front-end for etale (phi, Gamma)-module computations.
//!
//! Usage: pgm <command> [--input f.json] [--precision N] [--seed S] [--out r.json]
//!
//! Commands: validate | cohomology | euler-check | dual | tensor | twist |
//! ext-build | class-of | pair | identify | weight2 | obstruct | lift-dim |
//! random-suite.
//!
//! Exit codes: 0 success, 2 validation failure, 3 certificate failure,
//! 4 budget or precision exceeded, 5 malformed input.

use pgm_core::error::Error;
use pgm_core::herr;
use pgm_core::json::{CocycleJson, ModuleJson, SeriesJson};
use pgm_core::pgmod::{Config, PhiGammaModule, SeriesMat};
use pgm_core::rankone;
use pgm_core::suite::{run_suite, SuiteChecks, SuiteParams};
use serde::Deserialize;
use serde_json::{json, Value};
use std::process::ExitCode;

struct Args {
    command: String,
    input: Option<String>,
    precision: Option<i64>,
    seed: Option<u64>,
    out: Option<String>,
}

fn parse_args() -> Result<Args, String> {
    let mut argv = std::env::args().skip(1);
    let command = argv.next().ok_or_else(usage)?;
    let mut args = Args {
        command,
        input: None,
        precision: None,
        seed: None,
        out: None,
    };
    while let Some(flag) = argv.next() {
        let mut take = |name: &str| -> Result<String, String> {
            argv.next().ok_or(format!("{name} needs a value"))
        };
        match flag.as_str() {
            "--input" => args.input = Some(take("--input")?),
            "--precision" => {
                args.precision = Some(
                    take("--precision")?
                        .parse()
                        .map_err(|_| "bad --precision".to_string())?,
                )
            }
            "--seed" => {
                args.seed = Some(
                    take("--seed")?
                        .parse()
                        .map_err(|_| "bad --seed".to_string())?,
                )
            }
            "--out" => args.out = Some(take("--out")?),
            other => return Err(format!("unknown flag {other}\n{}", usage())),
        }
    }
    Ok(args)
}

fn usage() -> String {
    "usage: pgm <command> [--input f.json] [--precision N] [--seed S] [--out r.json]\n\
     commands: validate cohomology euler-check dual tensor twist ext-build \
     class-of pair identify weight2 obstruct lift-dim random-suite"
        .to_string()
}

fn exit_code_of(e: &Error) -> u8 {
    match e {
        Error::NotEtale
        | Error::CommutationFailure { .. }
        | Error::DeltaOrderFailure
        | Error::NotContinuous
        | Error::NonIntegralAction { .. }
        | Error::NotACocycle { .. }
        | Error::NonUnit
        | Error::NotLocal { .. }
        | Error::NotAssociative { .. }
        | Error::NotCommutative { .. }
        | Error::NotBlockTriangular { .. }
        | Error::NotMaximallyNonsplit
        | Error::NotALift
        | Error::NoMatch
        | Error::ZeroInput => 2,
        Error::CertificateFailure { .. } => 3,
        Error::BoundExceeded { .. }
        | Error::StabilizationBudgetExceeded { .. }
        | Error::InsufficientPrecision { .. }
        | Error::InsufficientPadicPrecision { .. }
        | Error::PrecisionOverflow { .. } => 4,
        _ => 5,
    }
}

fn read_input(args: &Args) -> Result<Value, Error> {
    let text = match &args.input {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::MalformedInput(format!("cannot read input: {e}")))?,
        None => {
            use std::io::Read;
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Error::MalformedInput(format!("cannot read stdin: {e}")))?;
            buf
        }
    };
    serde_json::from_str(&text).map_err(|e| Error::MalformedInput(format!("bad JSON: {e}")))
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value) -> Result<T, Error> {
    serde_json::from_value(v).map_err(|e| Error::MalformedInput(format!("bad input shape: {e}")))
}

fn config_of(args: &Args) -> Config {
    let mut c = Config::default();
    if let Some(w) = args.precision {
        c.width = w;
    }
    c
}

fn module_from(v: Value, config: Config) -> Result<PhiGammaModule, Error> {
    let mj: ModuleJson = from_value(v)?;
    mj.to_module(config)
}

fn lattice_json(m: &PhiGammaModule) -> Value {
    let lat = m.stabilize_lattice();
    json!({
        "shift": lat.shift,
        "phi_stable": lat.phi_stable,
        "psi_stable": lat.psi_stable,
        "height_bound": lat.height_bound,
        "m0": lat.m0,
        "phi_shift": lat.phi_shift,
    })
}

fn run(args: &Args) -> Result<(Value, u8), Error> {
    let (v, code) = run_inner(args)?;
    Ok((v, code))
}

fn run_inner(args: &Args) -> Result<(Value, u8), Error> {
    let config = config_of(args);
    let ok = |v: Value| Ok((v, 0u8));
    match args.command.as_str() {
        "validate" => {
            let m = module_from(read_input(args)?, config)?;
            ok(json!({
                "valid": true,
                "rank": m.rank,
                "height": m.height,
                "height_plus": m.height_plus,
                "continuity": {"n": m.continuity.n, "s": m.continuity.s},
                "lattice": lattice_json(&m),
                "chi_gamma_convention": "1+p",
            }))
        }
        "cohomology" | "euler-check" => {
            let m = module_from(read_input(args)?, config)?;
            let report = herr::cohomology(&m)?;
            let v = serde_json::to_value(&report)
                .map_err(|e| Error::MalformedInput(format!("serialize: {e}")))?;
            ok(v)
        }
        "dual" => {
            let m = module_from(read_input(args)?, config)?;
            ok(serde_json::to_value(ModuleJson::of_module(&m.dual()?)).unwrap())
        }
        "tensor" => {
            #[derive(Deserialize)]
            struct In {
                m1: ModuleJson,
                m2: ModuleJson,
            }
            let input: In = from_value(read_input(args)?)?;
            let m1 = input.m1.to_module(config)?;
            let m2 = input.m2.to_module(config)?;
            ok(serde_json::to_value(ModuleJson::of_module(&m1.tensor(&m2)?)).unwrap())
        }
        "twist" => {
            #[derive(Deserialize)]
            struct In {
                module: ModuleJson,
                n: i64,
            }
            let input: In = from_value(read_input(args)?)?;
            let m = input.module.to_module(config)?;
            ok(serde_json::to_value(ModuleJson::of_module(&m.tate_twist(input.n)?)).unwrap())
        }
        "ext-build" => {
            #[derive(Deserialize)]
            struct In {
                quot: ModuleJson,
                sub: ModuleJson,
                cocycle: CocycleJson,
            }
            let input: In = from_value(read_input(args)?)?;
            let quot = input.quot.to_module(config)?;
            let sub = input.sub.to_module(config)?;
            let c = input.cocycle.to_cocycle(&quot.algebra)?;
            let f = herr::hom_of_vec(&quot.algebra, &c.a, sub.rank, quot.rank);
            let g = herr::hom_of_vec(&quot.algebra, &c.b, sub.rank, quot.rank);
            let e = PhiGammaModule::extension_from_cocycle(&quot, &sub, &f, &g)?;
            ok(serde_json::to_value(ModuleJson::of_module(&e)).unwrap())
        }
        "class-of" => {
            #[derive(Deserialize)]
            struct In {
                module: ModuleJson,
                sub_rank: usize,
            }
            let input: In = from_value(read_input(args)?)?;
            let m = input.module.to_module(config)?;
            let cls = herr::class_of_extension(&m, input.sub_rank)?;
            ok(json!({
                "cocycle": CocycleJson::of_cocycle(&cls.cocycle),
                "hom": ModuleJson::of_module(&cls.hom),
            }))
        }
        "pair" => {
            #[derive(Deserialize)]
            struct In {
                module: ModuleJson,
                alpha: CocycleJson,
                beta: CocycleJson,
            }
            let input: In = from_value(read_input(args)?)?;
            let m = input.module.to_module(config)?;
            let m_star = m.cartier_dual()?;
            let alpha = input.alpha.to_cocycle(&m.algebra)?;
            let beta = input.beta.to_cocycle(&m.algebra)?;
            let lo = alpha.window.0.min(0) + beta.window.0.min(0) - 2;
            let cup = herr::CupContext::new(&m.algebra, config, lo)?;
            let value = cup.pair(&m, &m_star, &alpha, &beta)?;
            let zero = m.algebra.is_zero(&value);
            ok(json!({"value": value, "zero": zero, "normalization": "up to a fixed global unit"}))
        }
        "identify" => {
            let m = module_from(read_input(args)?, config)?;
            let label = rankone::identify_rank1(&m)?;
            ok(json!({"n": label.n, "a": label.a}))
        }
        "weight2" => {
            let m = module_from(read_input(args)?, config)?;
            let w = rankone::weight_rank2(&m)?;
            ok(json!({"k1": w.k1, "k2": w.k2}))
        }
        "obstruct" => {
            #[derive(Deserialize)]
            struct In {
                module: ModuleJson,
                f_dim: usize,
                phi_lift: Vec<Vec<SeriesJson>>,
                gamma_lift: Vec<Vec<SeriesJson>>,
            }
            let input: In = from_value(read_input(args)?)?;
            let m = input.module.to_module(config)?;
            let ext = herr::SquareZeroExtension::split(&m.algebra, input.f_dim)?;
            let lift = |rows: &[Vec<SeriesJson>]| -> Result<SeriesMat, Error> {
                let rank = rows.len();
                let mut entries = Vec::new();
                for row in rows {
                    for s in row {
                        entries.push(s.to_series(&ext.big)?);
                    }
                }
                SeriesMat::from_entries(&ext.big, rank, rank, entries)
            };
            let phi_l = lift(&input.phi_lift)?;
            let gamma_l = lift(&input.gamma_lift)?;
            let o = herr::obstruction_class(&m, &ext, &phi_l, &gamma_l)?;
            ok(json!({
                "components": o.components,
                "lifts_exist": o.lifts_exist,
            }))
        }
        "lift-dim" => {
            #[derive(Deserialize)]
            struct In {
                module: ModuleJson,
                f_dim: usize,
            }
            let input: In = from_value(read_input(args)?)?;
            let m = input.module.to_module(config)?;
            ok(json!({"dim": herr::lift_space_dim(&m, input.f_dim)?}))
        }
        "random-suite" => {
            #[derive(Deserialize)]
            struct In {
                p: u64,
                /// Either the field size q = p^e or q_degree = e directly.
                #[serde(default)]
                q: Option<u64>,
                #[serde(default)]
                q_degree: Option<usize>,
                d_max: usize,
                count: usize,
                #[serde(default)]
                width: Option<i64>,
                #[serde(default)]
                checks: Option<SuiteChecks>,
            }
            let input: In = from_value(read_input(args)?)?;
            let q_degree = match (input.q_degree, input.q) {
                (Some(e), _) => e,
                (None, Some(q)) => {
                    let mut e = 0usize;
                    let mut acc = 1u64;
                    while acc < q {
                        acc *= input.p;
                        e += 1;
                    }
                    if acc != q || e == 0 {
                        return Err(Error::MalformedInput(format!(
                            "q = {q} is not a positive power of p = {}",
                            input.p
                        )));
                    }
                    e
                }
                (None, None) => 1,
            };
            let params = SuiteParams {
                seed: args.seed.unwrap_or(0),
                p: input.p,
                q_degree,
                d_max: input.d_max,
                count: input.count,
                width: input.width.or(args.precision).unwrap_or(96),
                checks: input.checks.unwrap_or_default(),
            };
            let report = run_suite(&params)?;
            // the report is written either way; failures exit 3
            let code = if report.all_pass { 0 } else { 3 };
            Ok((serde_json::to_value(&report).unwrap(), code))
        }
        other => Err(Error::MalformedInput(format!(
            "unknown command {other}\n{}",
            usage()
        ))),
    }
}

fn write_output(args: &Args, value: &Value) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::MalformedInput(format!("serialize: {e}")))?;
    text.push('\n');
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::MalformedInput(format!("cannot write output: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match parse_args() {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(5);
        }
    };
    match run(&args) {
        Ok((value, code)) => match write_output(&args, &value) {
            Ok(()) => ExitCode::from(code),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(5)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}
