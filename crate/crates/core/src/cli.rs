//! Command-line front end. Data goes to stdout or files, logs to stderr.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error, 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::homogenize::{homogenize_with, mesh_for, BoundaryMode, HomogenizeOptions, ResultRecord, DEFAULT_STRAIN};
use crate::meshbuild::{CaseKind, StiffnessCase, DEFAULT_DEPTH, DEFAULT_EDGE_LENGTH};
use crate::studies::{
    export, format_ranking, rank_report, read_results_csv, run_study_with, comparison_point, Execution, StudyConfig,
};
use crate::tiling::{Bbox, TopologyId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable holding the log filter (e.g. `info`, `debug`).
pub const LOG_ENV: &str = "LATTICE_HOMOG_LOG";

#[derive(Debug, Parser)]
#[command(name = "lattice-homog", version, about = "Homogenized elastic properties of uniform-tiling actuator lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the eleven tilings.
    ListTopologies {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build a beam mesh and write it as JSON.
    GenMesh {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Homogenize one configuration and print the record.
    Homogenize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_STRAIN)]
        strain: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a study and write the output set.
    Study {
        /// JSON or TOML study file; the default matrix when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Rebuild reports from an existing `results.csv`.
    Report {
        /// Results file written by `study`.
        #[arg(long)]
        input: PathBuf,
        /// Output directory; rankings go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub topology: TopologyId,
    /// Box side in mm, or `WIDTHxHEIGHT`.
    #[arg(long, default_value = "750")]
    pub size: SizeArg,
    /// Edge length in mm.
    #[arg(long, default_value_t = DEFAULT_EDGE_LENGTH)]
    pub edge: f64,
    #[arg(long, default_value_t = CaseKind::ActuatorStiff)]
    pub case: CaseKind,
    /// Out-of-plane depth in mm.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: f64,
    /// mirror, affine-window[:MARGIN] or affine-box.
    #[arg(long, default_value = "mirror")]
    pub boundary: BoundaryMode,
}

impl ModelArgs {
    fn options(&self) -> HomogenizeOptions {
        HomogenizeOptions { edge_length: self.edge, depth: self.depth, boundary: self.boundary, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeArg(pub Bbox);

impl FromStr for SizeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |t: &str| {
            t.trim().parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0).ok_or(format!("bad size `{s}`"))
        };
        match s.split_once(['x', 'X']) {
            Some((w, h)) => Ok(SizeArg(Bbox::new(num(w)?, num(h)?))),
            None => Ok(SizeArg(Bbox::square(num(s)?))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Parse `argv` (program name first).
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_DOMAIN,
    }
}

fn write_out(path: Option<&Path>, body: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn topology_table(format: Format) -> Result<String> {
    let mut rows = Vec::new();
    for t in TopologyId::ALL {
        rows.push((t.code(), t.vertex_config_string(), t.vertex_degree(), t.orthotropic_rve()));
    }
    Ok(match format {
        Format::Csv => {
            let mut s = String::from("code,vertex_configuration,vertex_degree,orthotropic\n");
            for (code, cfg, z, ortho) in rows {
                s.push_str(&format!("{code},{cfg},{z},{ortho}\n"));
            }
            s
        }
        Format::Json => {
            let v: Vec<_> = rows
                .into_iter()
                .map(|(code, cfg, z, ortho)| {
                    serde_json::json!({"code": code, "vertex_configuration": cfg, "vertex_degree": z, "orthotropic": ortho})
                })
                .collect();
            serde_json::to_string_pretty(&v)? + "\n"
        }
    })
}

/// Execute a parsed command.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::ListTopologies { format } => stdout.write_all(topology_table(format)?.as_bytes())?,
        Command::GenMesh { model, out } => {
            if !model.topology.orthotropic_rve() && model.boundary == BoundaryMode::Mirror {
                return Err(Error::NotOrthotropic(model.topology));
            }
            let mesh = mesh_for(model.topology, model.size.0, StiffnessCase::preset(model.case), &model.options())?;
            log::info!("mesh: {} fe-nodes, {} segments", mesh.fe_nodes.len(), mesh.segments.len());
            write_out(out.as_deref(), &(mesh.to_json()? + "\n"), stdout)?;
        }
        Command::Homogenize { model, strain, format } => {
            let r = homogenize_with(model.topology, model.size.0, StiffnessCase::preset(model.case), strain, &model.options())?;
            log::info!("{} solved in {:.3} s ({} dofs)", r.topology, r.wall_time_s, r.dof_count);
            let body = match format {
                Format::Json => r.to_json()? + "\n",
                Format::Csv => format!("{}\n{}\n", ResultRecord::CSV_HEADER, r.csv_row(false)),
            };
            stdout.write_all(body.as_bytes())?;
        }
        Command::Study { config, out, jobs } => {
            let mut cfg = match &config {
                Some(p) => StudyConfig::from_file(p)?,
                None => StudyConfig::default(),
            };
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if jobs == Some(0) {
                return Err(Error::InvalidParameter("--jobs must be at least 1".into()));
            }
            let table = run_study_with(&cfg, Execution::Parallel(jobs))?;
            let files = export(&table, &cfg.output_dir)?;
            for f in files {
                writeln!(stdout, "{}", f.display())?;
            }
        }
        Command::Report { input, out } => {
            let table = read_results_csv(&fs::read_to_string(&input)?)?;
            match out {
                Some(dir) => {
                    for f in export(&table, &dir)? {
                        writeln!(stdout, "{}", f.display())?;
                    }
                }
                None => {
                    let (strain, case) = comparison_point(&table).ok_or(Error::EmptyTable)?;
                    let r = rank_report(&table, strain, case)?;
                    let title = |m: &str| format!("{m} ranking, {case}, strain {strain}");
                    write!(stdout, "{}\n{}", format_ranking(&title("E"), &r.e), format_ranking(&title("G"), &r.g))?;
                }
            }
        }
    }
    stdout.flush()?;
    Ok(())
}

/// Process entry point: logging, parsing, running, exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gen_mesh_args() {
        let cli = parse_args(["lattice-homog", "gen-mesh", "--topology", "THTH", "--size", "1000", "--edge", "50", "--out", "mesh.json"])
            .unwrap();
        match cli.command {
            Command::GenMesh { model, out } => {
                assert_eq!(model.topology, TopologyId::Trihexagonal);
                assert_eq!(model.size.0, Bbox::square(1000.0));
                assert_eq!(out, Some(PathBuf::from("mesh.json")));
            }
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn study_args() {
        let cli = parse_args(["lattice-homog", "study", "--config", "study.toml"]).unwrap();
        assert!(matches!(cli.command, Command::Study { config: Some(_), out: None, jobs: None }));
    }

    #[test]
    fn rectangular_size() {
        assert_eq!("750x1000".parse::<SizeArg>().unwrap().0, Bbox::new(750.0, 1000.0));
        assert!("0".parse::<SizeArg>().is_err());
        assert!("axb".parse::<SizeArg>().is_err());
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        let e = parse_args(["lattice-homog", "homogenize", "--topology", "S", "--bogus", "1"]).unwrap_err();
        assert!(e.use_stderr());
        assert!(e.to_string().contains("--bogus"));
        assert_eq!(main_with_args(["lattice-homog", "homogenize", "--topology", "S", "--bogus", "1"]), EXIT_USAGE);
    }

    #[test]
    fn chiral_topology_is_a_domain_error() {
        let cli = parse_args(["lattice-homog", "homogenize", "--topology", "T4H"]).unwrap();
        let e = run(cli, &mut Vec::new()).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_DOMAIN);
        assert!(e.to_string().contains("orthotropic"));
    }

    #[test]
    fn list_topologies_has_eleven_rows() {
        let mut out = Vec::new();
        run(parse_args(["lattice-homog", "list-topologies"]).unwrap(), &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 12);
    }

    #[test]
    fn homogenize_square_prints_json_record() {
        let mut out = Vec::new();
        let argv = ["lattice-homog", "homogenize", "--topology", "S", "--size", "750", "--case", "actuator-stiff", "--strain", "0.01"];
        run(parse_args(argv).unwrap(), &mut out).unwrap();
        let r: ResultRecord = serde_json::from_slice(&out).unwrap();
        assert!((r.c1111 - 200.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn missing_config_is_an_io_error() {
        let cli = parse_args(["lattice-homog", "study", "--config", "/nonexistent/study.toml"]).unwrap();
        assert_eq!(exit_code(&run(cli, &mut Vec::new()).unwrap_err()), EXIT_IO);
    }
}
