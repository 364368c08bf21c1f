//! `vem`: mesh generation, eigenvalue solves, interpolation checks and
//! convergence studies for the rigid acoustic cavity.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use vem_core::assembly::assemble;
use vem_core::eigensolve::{solve, EigenOptions, Method};
use vem_core::interp::{commuting_residual, interpolation_rate_study, AnalyticField};
use vem_core::io::{
    export_eigenfunction, read_mesh_json, write_matrix_market_file, write_mesh_json,
};
use vem_core::mesh::{generate, MeshFamily};
use vem_core::study::{configure_threads_from_env, run_study, StudyConfig};

#[derive(Parser)]
#[command(
    name = "vem",
    version,
    about = "Virtual element solver for acoustic cavity modes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a structured mesh of (0,a) x (0,b) and write it as JSON.
    Mesh {
        #[arg(long)]
        family: MeshFamily,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.1)]
        b: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble and solve the eigenproblem on a mesh; prints the spectrum as JSON.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 5)]
        modes: usize,
        /// auto, dense or si (shift-invert Lanczos).
        #[arg(long, default_value = "auto")]
        method: Method,
        #[arg(long, default_value_t = 4.0)]
        shift: f64,
        /// Write the pressure and displacement of a mode as legacy VTK.
        #[arg(long)]
        vtk: Option<PathBuf>,
        /// Mode exported with --vtk (1 = lowest).
        #[arg(long, default_value_t = 1)]
        vtk_mode: usize,
        /// Count the kernel with the rank oracle when the solver does not see it.
        #[arg(long)]
        kernel_oracle: bool,
        /// Include the local matrices of this cell in the output.
        #[arg(long)]
        dump_element: Option<usize>,
        /// Write PREFIX.K.mtx and PREFIX.M.mtx.
        #[arg(long)]
        dump_system: Option<String>,
    },
    /// Commuting-diagram residuals and interpolation rates for an analytic field.
    InterpCheck {
        #[arg(long)]
        family: MeshFamily,
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// wNM (cavity mode), const or linear.
        #[arg(long, default_value = "w11")]
        field: String,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.1)]
        b: f64,
        /// Sub-mesh refinement of the local Neumann solves.
        #[arg(long, default_value_t = 4)]
        refinement: usize,
    },
    /// Run a convergence study described by a JSON config.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        table: Option<PathBuf>,
        /// Write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    configure_threads_from_env();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

/// Writes to stdout; a closed pipe (`vem ... | head`) is not an error.
fn print_text(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print_json(v: &Value) -> Result<()> {
    print_text(&(serde_json::to_string_pretty(v)? + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mesh {
            family,
            a,
            b,
            n,
            out,
        } => {
            let mesh = generate(family, a, b, n)?;
            write_mesh_json(&mesh, &out)?;
            print_json(&json!({
                "family": family,
                "n": n,
                "vertices": mesh.num_vertices(),
                "cells": mesh.num_cells(),
                "edges": mesh.num_edges(),
                "h": mesh.mesh_size(),
                "out": out,
            }))
        }
        Command::Solve {
            mesh,
            k,
            sigma,
            modes,
            method,
            shift,
            vtk,
            vtk_mode,
            kernel_oracle,
            dump_element,
            dump_system,
        } => {
            let mesh = read_mesh_json(&mesh)?;
            if let Some(c) = dump_element {
                if c >= mesh.num_cells() {
                    bail!(
                        "cell {c} out of range (mesh has {} cells)",
                        mesh.num_cells()
                    );
                }
            }
            let system = assemble(&mesh, k, sigma)?;
            if let Some(prefix) = &dump_system {
                write_matrix_market_file(&system.stiffness, Path::new(&format!("{prefix}.K.mtx")))?;
                write_matrix_market_file(&system.mass, Path::new(&format!("{prefix}.M.mtx")))?;
            }
            let opts = EigenOptions {
                method,
                modes,
                shift,
                kernel_oracle,
                ..Default::default()
            };
            let spectrum = solve(&system, &opts)?;
            if let Some(path) = &vtk {
                let Some(v) = vtk_mode
                    .checked_sub(1)
                    .and_then(|i| spectrum.eigenvectors.get(i))
                else {
                    bail!(
                        "mode {vtk_mode} not computed ({} available)",
                        spectrum.eigenvectors.len()
                    );
                };
                export_eigenfunction(&system, v, path)?;
            }
            let mut out = json!({
                "eigenvalues": spectrum.eigenvalues,
                "scaled": spectrum.scaled(),
                "kernel_multiplicity": spectrum.kernel_multiplicity,
                "residuals": spectrum.residuals,
                "method": spectrum.method,
                "shift": spectrum.shift,
                "dofs": system.len(),
                "iterations": spectrum.iterations,
            });
            if let Some(c) = dump_element {
                out["element"] = serde_json::to_value(system.locals[c].to_dump())?;
            }
            print_json(&out)
        }
        Command::InterpCheck {
            family,
            k,
            field,
            n,
            a,
            b,
            refinement,
        } => {
            let field = AnalyticField::from_name(&field, a, b)?;
            let mut residuals = Vec::new();
            let mut div_excess = Vec::new();
            for &ni in &n {
                let mesh = generate(family, a, b, ni)?;
                let r = commuting_residual(&mesh, k, &field)?;
                residuals.push(r.max_residual);
                div_excess.push(r.max_div_excess);
            }
            let rates = if n.len() >= 2 {
                Some(interpolation_rate_study(
                    family, a, b, k, &field, &n, refinement,
                )?)
            } else {
                None
            };
            print_json(&json!({
                "family": family,
                "k": k,
                "field": field.name,
                "n": n,
                "residuals": residuals,
                "max_div_excess": div_excess,
                "rates": rates.as_ref().map(|r| json!({
                    "l2": r.rate,
                    "projected": r.projected_rate,
                    "asymptotic": r.asymptotic_rate,
                    "exact": r.exact,
                })),
                "levels": rates.map(|r| r.levels),
            }))
        }
        Command::Study {
            config,
            csv,
            table,
            json,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg: StudyConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            let report = run_study(&cfg)?;
            let table_text = report.to_table();
            if let Some(path) = csv.or(cfg.csv.as_ref().map(PathBuf::from)) {
                write_text(&path, &report.to_csv())?;
            }
            match table.or(cfg.table.as_ref().map(PathBuf::from)) {
                Some(path) => write_text(&path, &table_text)?,
                None => print_text(&table_text)?,
            }
            if let Some(path) = json {
                write_text(&path, &serde_json::to_string_pretty(&report)?)?;
            }
            Ok(())
        }
    }
}
