use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use meshnet::image::{load_grid, ImageModel};
use meshnet::io::{export_dot, ingest_csv, load_mesh, read_schema, save_mesh, DotScope};
use meshnet::tabular::{
    add_bias_rule, bias_rules, confirm, evaluate_loo, init_mesh, predict, stored_schema, train_all,
    BiasRule,
};
use meshnet::{Decimal, EngineConfig, Mesh};

#[derive(Parser)]
#[command(name = "meshnet", version, about = "Associative mesh learning engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build prior knowledge and schema subnets into a new mesh.
    Init {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a mesh on every row of a CSV file.
    Train {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Predict the target for `name=value,...` inputs.
    Predict {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        input: String,
        /// Bias tags to apply, comma separated.
        #[arg(long, value_delimiter = ',')]
        bias: Vec<String>,
        /// Print the full prediction trace after the value.
        #[arg(long)]
        trace: bool,
    },
    /// Store a verified prediction as a training record.
    Confirm {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long)]
        target: String,
    },
    /// Leave-one-out evaluation over a CSV file.
    Evaluate(EvaluateArgs),
    /// Register and classify images.
    Image {
        #[command(subcommand)]
        command: ImageCommand,
    },
    /// Write the mesh as DOT or as an archive.
    Export {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long)]
        out: PathBuf,
        /// Restrict DOT output to these subnets.
        #[arg(long)]
        subnet: Vec<String>,
    },
    /// List the values and connections of one subnet.
    Inspect {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        subnet: String,
    },
    /// Manage bias rules.
    Bias {
        #[command(subcommand)]
        command: BiasCommand,
    },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
struct EvaluateArgs {
    /// Mesh holding prior knowledge and the schema.
    #[arg(long, group = "source")]
    mesh_template: Option<PathBuf>,
    /// Schema file, used to build a fresh template.
    #[arg(long, group = "source")]
    schema: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::Loo)]
    mode: EvalMode,
}

#[derive(Subcommand)]
enum ImageCommand {
    /// Store an image as a shape subnet under a label.
    Register {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        label: String,
        /// Store background pixels as neurons too.
        #[arg(long)]
        keep_background: bool,
    },
    /// Print the label of the best matching registered image.
    Classify {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        file: PathBuf,
        /// Print the ranking after the label.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Subcommand)]
enum BiasCommand {
    /// Add a rule that shifts numeric predictions when its tag is given.
    Add {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        tag: String,
        #[arg(long, allow_hyphen_values = true)]
        adjustment: String,
    },
    /// List the stored rules.
    List {
        #[arg(long)]
        mesh: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Dot,
    Archive,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    Loo,
}

fn load(path: &Path) -> Result<Mesh> {
    load_mesh(path).with_context(|| format!("reading mesh {}", path.display()))
}

fn save(mesh: &Mesh, path: &Path) -> Result<()> {
    save_mesh(mesh, path).with_context(|| format!("writing mesh {}", path.display()))
}

fn load_or_new(path: &Path) -> Result<Mesh> {
    if path.exists() {
        load(path)
    } else {
        Ok(Mesh::new())
    }
}

fn grid(mesh: &Mesh, path: &Path) -> Result<meshnet::image::PixelGrid> {
    let grid = load_grid(path).with_context(|| format!("reading image {}", path.display()))?;
    Ok(grid.quantize(mesh.config().image_threshold))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Init { schema, out } => {
            let schema = read_schema(&schema)?;
            let mesh = init_mesh(EngineConfig::default(), &schema)?;
            save(&mesh, &out)?;
        }
        Command::Train { mesh: path, data } => {
            let mut mesh = load(&path)?;
            let schema = stored_schema(&mesh)?;
            let records = ingest_csv(&data, &schema)?;
            let report = train_all(&mut mesh, &schema, &records)?;
            save(&mesh, &path)?;
            println!(
                "trained {} records: {} neurons created, {} connections created, {} updated",
                records.len(),
                report.neurons_created,
                report.connections_created,
                report.connections_updated
            );
        }
        Command::Predict {
            mesh,
            input,
            bias,
            trace,
        } => {
            let mesh = load(&mesh)?;
            let schema = stored_schema(&mesh)?;
            let query = schema.parse_assignments(&input)?;
            let tags: Vec<&str> = bias.iter().map(String::as_str).collect();
            let p = predict(&mesh, &schema, &query, &tags)?;
            println!("{}", p.value);
            if trace {
                print!("{}", p.trace);
            }
        }
        Command::Confirm {
            mesh: path,
            input,
            target,
        } => {
            let mut mesh = load(&path)?;
            let schema = stored_schema(&mesh)?;
            let mut record = schema.parse_assignments(&input)?;
            let t = schema.target();
            record.insert(&t.name, t.kind.parse_value(&target)?);
            let report = confirm(&mut mesh, &schema, &record)?;
            save(&mesh, &path)?;
            println!(
                "confirmed: {} neurons created, {} connections created, {} updated",
                report.neurons_created, report.connections_created, report.connections_updated
            );
        }
        Command::Evaluate(args) => {
            let (template, schema) = match (&args.mesh_template, &args.schema) {
                (Some(path), _) => {
                    let mesh = load(path)?;
                    let schema = stored_schema(&mesh)?;
                    (mesh, schema)
                }
                (None, Some(path)) => {
                    let schema = read_schema(path)?;
                    (init_mesh(EngineConfig::default(), &schema)?, schema)
                }
                (None, None) => bail!("give --mesh-template or --schema"),
            };
            let records = ingest_csv(&args.data, &schema)?;
            match args.mode {
                EvalMode::Loo => print!("{}", evaluate_loo(&template, &schema, &records)?),
            }
        }
        Command::Image { command } => match command {
            ImageCommand::Register {
                mesh: path,
                file,
                label,
                keep_background,
            } => {
                let mut mesh = load_or_new(&path)?;
                let grid = grid(&mesh, &file)?;
                let mut model = ImageModel::open(&mut mesh)?;
                let shape = model.register(&mut mesh, &grid, &label, keep_background)?;
                save(&mesh, &path)?;
                println!(
                    "registered {} as `{label}` ({} neurons)",
                    mesh.subnet(shape)?.name,
                    mesh.subnet_len(shape)?
                );
            }
            ImageCommand::Classify {
                mesh: path,
                file,
                trace,
            } => {
                let mut mesh = load(&path)?;
                let model = ImageModel::open(&mut mesh)?;
                if model.entries.is_empty() {
                    bail!("no images registered in {}", path.display());
                }
                let result = model.classify(&mesh, &grid(&mesh, &file)?)?;
                println!("{}", result.label);
                if trace {
                    print!("{result}");
                }
            }
        },
        Command::Export {
            mesh,
            format,
            out,
            subnet,
        } => {
            let mesh = load(&mesh)?;
            match format {
                ExportFormat::Archive => save(&mesh, &out)?,
                ExportFormat::Dot => {
                    let scope = if subnet.is_empty() {
                        DotScope::All
                    } else {
                        DotScope::Subnets(
                            subnet
                                .iter()
                                .map(|name| Ok(mesh.subnet_named(name)?.id))
                                .collect::<Result<_>>()?,
                        )
                    };
                    std::fs::write(&out, export_dot(&mesh, &scope)?)
                        .with_context(|| format!("writing {}", out.display()))?;
                }
            }
        }
        Command::Inspect { mesh, subnet } => {
            let mesh = load(&mesh)?;
            print!("{}", inspect(&mesh, &subnet)?);
        }
        Command::Bias { command } => match command {
            BiasCommand::Add {
                mesh: path,
                tag,
                adjustment,
            } => {
                let mut mesh = load(&path)?;
                let schema = stored_schema(&mesh)?;
                let adjustment: Decimal = adjustment.parse()?;
                add_bias_rule(&mut mesh, &schema, &BiasRule::new(tag, adjustment))?;
                save(&mesh, &path)?;
            }
            BiasCommand::List { mesh } => {
                for rule in bias_rules(&load(&mesh)?)?.values() {
                    println!("{}\t{}", rule.tag, rule.adjustment.to_signed_string());
                }
            }
        },
    }
    Ok(())
}

fn inspect(mesh: &Mesh, name: &str) -> Result<String> {
    use std::fmt::Write;
    let subnet = mesh.subnet_named(name)?;
    let mut out = String::new();
    writeln!(
        out,
        "subnet {} {} {:?}, {} neurons",
        subnet.id,
        subnet.name,
        subnet.role,
        subnet.neurons.len()
    )?;
    for n in mesh.members(subnet.id)? {
        let links = mesh.connections_of(n.id.into()).count();
        writeln!(out, "{}\t{}\t{} connections", n.id, n.payload, links)?;
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
