//! `caretrust` command line: scenario replay, gas and cost reports, key
//! generation, and the HTTP node.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use clap::{Parser, Subcommand, ValueEnum};

use caretrust_core::config::{ChainConfig, Genesis};
use caretrust_core::crypto::PrivateKey;
use caretrust_core::gas::{G_JUMPDEST, G_SLOAD, G_SSET, INTRINSIC_GAS};
use caretrust_core::harness::cost::{cost_report, ingest_prices, table_gas, Workflow};
use caretrust_core::harness::{run_scenario, Scenario};
use caretrust_core::Chain;
use caretrust_node::{serve, ApiConfig};

#[derive(Parser)]
#[command(name = "caretrust", version, about = "Deterministic healthcare-trust ledger simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a scenario file and check its assertions.
    Run {
        scenario: PathBuf,
        /// Chain config JSON; the scenario's embedded config wins if present.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for the block dump and assertion report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the gas cost table.
    GasTable {
        #[arg(long, value_enum, default_value_t = Mode::Measured)]
        mode: Mode,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compute workflow costs over a price series.
    Costs {
        #[arg(long)]
        prices: PathBuf,
        /// One of: treatment-approval, evaluation, transfer.
        #[arg(long)]
        workflow: String,
        /// Override the gas price (wei) for every price point.
        #[arg(long)]
        gas_price: Option<u128>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        out: OutFormat,
    },
    /// Generate random keypairs.
    Keygen {
        #[arg(long, default_value_t = 1)]
        count: u32,
    },
    /// Serve the HTTP query/submit interface.
    Serve {
        /// Port; CARETRUST_PORT overrides the default.
        #[arg(long)]
        port: Option<u16>,
        /// Chain config JSON; CARETRUST_CONFIG overrides the default path.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Disable timer mining; blocks come only from POST /mine.
        #[arg(long)]
        manual_mining: bool,
        /// Reject POST /tx and POST /mine.
        #[arg(long)]
        read_only: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Measured,
    Micro,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Svg,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<(ChainConfig, Option<Genesis>), String> {
    let Some(path) = path else {
        return Ok((ChainConfig::default(), None));
    };
    let config = ChainConfig::load(path).map_err(|e| e.to_string())?;
    let genesis = if config.genesis_path.is_some() {
        Some(
            config
                .load_genesis(path.parent())
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };
    Ok((config, genesis))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            report,
        } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| format!("cannot read {}: {e}", scenario.display()))?;
            let scenario = Scenario::from_json(&text).map_err(|e| e.to_string())?;
            let (config, genesis) = load_config(config.as_deref())?;
            let outcome = run_scenario(&scenario, Some((&config, genesis.as_ref())))
                .map_err(|e| e.to_string())?;

            for result in &outcome.assertion_results {
                let mark = if result.passed { "PASS" } else { "FAIL" };
                println!(
                    "[{mark}] {} expected={} actual={}",
                    serde_json::to_string(&result.query).unwrap_or_default(),
                    result.expected,
                    result.actual
                );
            }
            println!("state root: {}", outcome.final_state_root.0);

            if let Some(dir) = report {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
                std::fs::write(dir.join("blocks.jsonl"), outcome.chain.dump_jsonl())
                    .map_err(|e| e.to_string())?;
                std::fs::write(
                    dir.join("assertions.json"),
                    serde_json::to_string_pretty(&outcome.assertion_results)
                        .expect("results serialize"),
                )
                .map_err(|e| e.to_string())?;
                let per_op: std::collections::BTreeMap<String, u64> = outcome
                    .per_op_gas
                    .iter()
                    .map(|(k, v)| (k.name(), *v))
                    .collect();
                std::fs::write(
                    dir.join("per_op_gas.json"),
                    serde_json::to_string_pretty(&per_op).expect("map serializes"),
                )
                .map_err(|e| e.to_string())?;
            }
            Ok(if outcome.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::GasTable { mode, config } => {
            let (config, _) = load_config(config.as_deref())?;
            match mode {
                Mode::Measured => {
                    println!("{:<34} {:>10}", "method", "gas");
                    for (key, cost) in config.gas_table().entries() {
                        println!("{:<34} {:>10}", key.name(), cost);
                    }
                }
                Mode::Micro => {
                    println!("{:<34} {:>10}", "operation", "gas");
                    println!("{:<34} {:>10}", "intrinsic (per transaction)", INTRINSIC_GAS);
                    println!("{:<34} {:>10}", "sstore (zero to non-zero)", G_SSET);
                    println!("{:<34} {:>10}", "sload", G_SLOAD);
                    println!("{:<34} {:>10}", "jumpdest", G_JUMPDEST);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Costs {
            prices,
            workflow,
            gas_price,
            out,
        } => {
            let file = std::fs::File::open(&prices)
                .map_err(|e| format!("cannot read {}: {e}", prices.display()))?;
            let mut points = ingest_prices(file).map_err(|e| e.to_string())?;
            if let Some(gas_price) = gas_price {
                for point in &mut points {
                    point.gas_price_wei = gas_price;
                }
            }
            let workflow = Workflow::builtin(&workflow).map_err(|e| e.to_string())?;
            let per_op = table_gas(&ChainConfig::default().gas_table());
            let report = cost_report(&per_op, &[workflow], &points);
            match out {
                OutFormat::Csv => print!("{}", report.to_csv()),
                OutFormat::Svg => print!("{}", report.to_svg()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Keygen { count } => {
            use rand::RngCore;
            let mut rng = rand::rngs::OsRng;
            for _ in 0..count {
                let key = loop {
                    let mut bytes = [0u8; 32];
                    rng.fill_bytes(&mut bytes);
                    if let Ok(key) = PrivateKey::from_bytes(bytes) {
                        break key;
                    }
                };
                println!(
                    "{}",
                    serde_json::json!({
                        "private_key": key.to_hex(),
                        "address": key.address().to_checksum_hex(),
                    })
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            config,
            manual_mining,
            read_only,
        } => {
            let port = match port {
                Some(p) => p,
                None => std::env::var("CARETRUST_PORT")
                    .ok()
                    .map(|p| p.parse().map_err(|_| format!("bad CARETRUST_PORT {p:?}")))
                    .transpose()?
                    .unwrap_or(8545),
            };
            let config_path = config.or_else(|| {
                std::env::var("CARETRUST_CONFIG").ok().map(PathBuf::from)
            });
            let (config, genesis) = load_config(config_path.as_deref())?;
            let genesis = genesis.ok_or_else(|| {
                "serve needs a config file whose genesis_path names the genesis JSON".to_string()
            })?;
            let chain = Arc::new(Mutex::new(Chain::new(config, &genesis)));
            let api = ApiConfig { port, read_only };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            runtime
                .block_on(serve(chain, api, !manual_mining))
                .map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
