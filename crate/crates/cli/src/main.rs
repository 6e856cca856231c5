use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use holoapprox_cli::{
    cmd_mesh, cmd_oracle, cmd_slice, cmd_solve, config::Config, exit_code_for, parse_float_list,
    parse_rows,
};

/// Holonomic approximation by convex integration: solve, certify and export.
///
/// Exit codes: 0 = PASS, 1 = FAIL certificate, 2 = input error,
/// 3 = solver error. Grid sweeps parallelize; set RAYON_NUM_THREADS to
/// control the worker count.
#[derive(Parser)]
#[command(name = "holoapprox", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a config-defined problem, certify, and write result files.
    Solve {
        /// Path to the TOML config.
        config: PathBuf,
        /// Output directory for tables, closed forms and the certificate.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Closed-form slice report for given λ, ψ and ε.
    Slice {
        /// Comma-separated λ entries; empty for m = 1.
        #[arg(long, default_value = "")]
        lambda: String,
        /// Semicolon-separated ψ rows of comma-separated entries.
        #[arg(long, default_value = "")]
        psi: String,
        #[arg(long)]
        eps: f64,
        /// Hull certificate target `a` coordinate.
        #[arg(long, default_value_t = 0.0)]
        target_a: f64,
        /// Hull certificate target `b` coordinates (comma-separated).
        #[arg(long, default_value = "")]
        target_b: String,
        /// Hull certificate ball radius.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    /// Export the extended solution as an OBJ mesh (CSV in higher dims).
    Mesh {
        config: PathBuf,
        /// Corrugation frequency override.
        #[arg(long)]
        n: Option<u32>,
        /// Tolerance override.
        #[arg(long)]
        eps: Option<f64>,
        /// Tubular half-width of the exported strip.
        #[arg(long, default_value_t = 0.1)]
        width: f64,
        /// Grid resolution as `RX,RY`.
        #[arg(long, default_value = "256,16")]
        res: String,
        /// Output file.
        #[arg(long, default_value = "surface.obj")]
        out: PathBuf,
    },
    /// Run the sampling oracle suite against the closed forms.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

fn read_config(path: &PathBuf) -> Result<Config, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        2
    })?;
    Config::parse(&text).map_err(|e| {
        eprintln!("error: {e}");
        2
    })
}

fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = match read_config(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match cmd_solve(&cfg, &out) {
                Ok(cert) => {
                    print!("{}", cert.to_text());
                    if cert.pass {
                        println!("PASS (files in {})", out.display());
                        0
                    } else {
                        println!("FAIL: worst clause {} at {:?}", cert.worst_clause, cert.worst_point);
                        1
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Slice {
            lambda,
            psi,
            eps,
            target_a,
            target_b,
            radius,
        } => {
            let parsed = (|| -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>), holoapprox::Error> {
                let l = parse_float_list(&lambda)?;
                let rows = if psi.trim().is_empty() {
                    vec![vec![0.0; l.len()]]
                } else {
                    parse_rows(&psi)?
                };
                let tb = if target_b.trim().is_empty() {
                    vec![0.0; rows.len()]
                } else {
                    parse_float_list(&target_b)?
                };
                Ok((l, rows, tb))
            })();
            match parsed {
                Ok((l, rows, tb)) => match cmd_slice(&l, &rows, eps, (target_a, &tb), radius) {
                    Ok(report) => {
                        print!("{report}");
                        0
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        exit_code_for(&e)
                    }
                },
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
        Command::Mesh {
            config,
            n,
            eps,
            width,
            res,
            out,
        } => {
            let cfg = match read_config(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let res_pair = match parse_float_list(&res) {
                Ok(v) if v.len() == 2 && v[0] >= 1.0 && v[1] >= 1.0 => {
                    (v[0] as usize, v[1] as usize)
                }
                _ => {
                    eprintln!("error: --res wants `RX,RY` with RX, RY ≥ 1");
                    return 2;
                }
            };
            match cmd_mesh(&cfg, n, eps, width, res_pair) {
                Ok(outcome) => {
                    if !outcome.is_obj {
                        eprintln!(
                            "warning: OBJ export needs m = 1, k = 0, n = 1; writing a CSV point cloud"
                        );
                    }
                    if let Err(e) = std::fs::write(&out, outcome.content) {
                        eprintln!("error: cannot write {}: {e}", out.display());
                        return 2;
                    }
                    println!("wrote {}", out.display());
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Oracle { seed, trials } => match cmd_oracle(seed, trials) {
            Ok(report) => {
                print!("{report}");
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_code_for(&e)
            }
        },
    }
}

fn main() -> ExitCode {
    ExitCode::from(u8::try_from(run()).unwrap_or(3))
}
