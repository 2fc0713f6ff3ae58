use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use uvsam::fixture::{self, FixtureConfig};
use uvsam::pipeline::{self, ClassifyParams, Reference};
use uvsam::service::{self, ServiceConfig};
use uvsam::{Error, Project, Result};

/// Calibrate VIS/UVF texture atlases, stack them into a spectral cube and
/// classify it by spectral angle.
#[derive(Debug, Parser)]
#[command(name = "uvsam", version)]
struct Cli {
    /// Worker threads for per-texel work (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Output directory, overriding the manifest's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Radiometric calibration of the acquired VIS and UVF textures.
    Calibrate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Rasterize the mesh occupancy and assemble the spectral cube.
    BuildCube {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Classify the cube against a reference texel or a list of references.
    #[command(group(ArgGroup::new("reference").required(true).args(["uv", "texel", "refs"])))]
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, num_args = 2, value_names = ["U", "V"], allow_negative_numbers = true)]
        uv: Option<Vec<f64>>,
        #[arg(long, num_args = 2, value_names = ["C", "R"])]
        texel: Option<Vec<usize>>,
        /// TOML file of `[[reference]]` entries for multi-label output.
        #[arg(long)]
        refs: Option<PathBuf>,
        /// Angular threshold in radians [default: manifest value, else 0.15].
        #[arg(long, allow_negative_numbers = true)]
        theta_max: Option<f64>,
        /// Reference averaging radius in texels [default: manifest value, else 0].
        #[arg(long)]
        radius: Option<usize>,
        /// Keep only the region connected to the reference texel.
        #[arg(long)]
        connected: bool,
        /// Share of a face's texels that must be selected to list the face.
        #[arg(long)]
        min_face_fraction: Option<f64>,
    },
    /// Serve the mesh, previews and classification over HTTP.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory of viewer files served under /ui/.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Write the synthetic two-material fixture project into --out.
    MakeFixture {
        #[arg(long, default_value_t = 1024)]
        size: usize,
        #[arg(long, default_value_t = FixtureConfig::default().seed)]
        seed: u64,
    },
}

fn execute(cli: Cli) -> Result<()> {
    let workers = cli.workers;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Calibrate { manifest } => {
            let project = Project::load(&manifest, out)?;
            let (report, dir) = pipeline::calibrate(&project, workers)?;
            println!("calibrated into {}", dir.display());
            println!("R_norm   = {:?}", report.r_norm);
            println!("S_target = {:?}", report.s_target);
            println!(
                "UVF clamped samples = {} (max undershoot {:e})",
                report.uvf_clamped, report.uvf_max_undershoot
            );
        }
        Command::BuildCube { manifest } => {
            let project = Project::load(&manifest, out)?;
            let (report, dir) = pipeline::build_cube(&project, workers)?;
            println!("cube written to {}", dir.display());
            println!(
                "{}x{} texels, {} bands, {} valid, {} degenerate faces",
                report.width,
                report.height,
                report.bands.len(),
                report.valid_texels,
                report.degenerate_faces
            );
        }
        Command::Classify {
            manifest,
            uv,
            texel,
            refs,
            theta_max,
            radius,
            connected,
            min_face_fraction,
        } => {
            let project = Project::load(&manifest, out)?;
            let theta_max = theta_max.unwrap_or(project.theta_max);
            let radius = radius.unwrap_or(project.radius);
            if let Some(path) = refs {
                let references = pipeline::load_reference_file(&path)?;
                let (stats, dir) =
                    pipeline::classify_labels(&project, &references, theta_max, radius, workers)?;
                println!("labels written to {}", dir.display());
                for l in &stats.labels {
                    println!("{}: {} texels", l.label, l.texels);
                }
                return Ok(());
            }
            let reference = match (uv, texel) {
                (Some(uv), _) => Reference::Uv([uv[0], uv[1]]),
                (_, Some(t)) => Reference::Texel(t[0], t[1]),
                _ => unreachable!("clap requires one reference form"),
            };
            let params = ClassifyParams {
                theta_max,
                radius,
                connected,
                min_face_fraction: min_face_fraction.unwrap_or(project.min_face_fraction),
            };
            let (stats, dir) = pipeline::classify(&project, &reference, &params, workers)?;
            println!("classification written to {}", dir.display());
            println!(
                "{} texels, {} faces selected at theta_max {}",
                stats.selected_texels, stats.selected_faces, stats.theta_max
            );
        }
        Command::Serve {
            manifest,
            port,
            host,
            ui,
        } => {
            let project = Project::load(&manifest, out)?;
            service::serve_forever(ServiceConfig {
                project,
                addr: SocketAddr::new(host, port),
                ui_dir: ui,
                workers,
            })?;
        }
        Command::MakeFixture { size, seed } => {
            let dir = out.ok_or_else(|| Error::Validation("make-fixture needs --out DIR".into()))?;
            let info = fixture::make_fixture(dir, &FixtureConfig { size, seed })?;
            println!("fixture written to {}", dir.display());
            println!(
                "material A: {} texels, material B: {} texels",
                info.texels_a, info.texels_b
            );
            println!("manifest: {}", fixture::manifest_path(dir).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
