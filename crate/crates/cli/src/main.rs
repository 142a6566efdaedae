mod spec;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use entire_approx::hoischen::{approximate, certify, grid, Artifact, Certificate, Mode};

use crate::spec::{Loaded, SpecFile};

#[derive(Parser)]
#[command(version, about = "Simultaneous polynomial approximation of a function and its derivatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline and write the artifact.
    Approximate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the certificate of an artifact.
    Certify {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Write f^(i), g^(i) and the envelope on the certification grid.
    Dump {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = 0)]
        deriv: i64,
    },
}

enum Outcome {
    Pass,
    CertificationFailure,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Approximate { spec, out } => cmd_approximate(&spec, &out),
        Command::Certify { artifact, spec } => cmd_certify(&artifact, &spec),
        Command::Dump {
            artifact,
            spec,
            csv,
            deriv,
        } => cmd_dump(&artifact, &spec, &csv, deriv),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::CertificationFailure) => {
            eprintln!("certification failed");
            ExitCode::from(2)
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_spec(path: &Path) -> Result<Loaded, String> {
    SpecFile::read(path)?.load().map_err(|e| format!("spec {}: {e}", path.display()))
}

fn load_artifact(path: &Path) -> Result<Artifact, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("parsing artifact {}: {e}", path.display()))
}

fn outcome(c: &Certificate) -> Outcome {
    if c.pass {
        Outcome::Pass
    } else {
        Outcome::CertificationFailure
    }
}

fn cmd_approximate(spec_path: &Path, out: &Path) -> Result<Outcome, String> {
    let loaded = load_spec(spec_path)?;
    let art = approximate(&loaded.spec, loaded.grid_per_unit).map_err(|e| format!("approximate: {e}"))?;
    let mut json = serde_json::to_string_pretty(&art).map_err(|e| format!("serializing artifact: {e}"))?;
    json.push('\n');
    std::fs::write(out, json).map_err(|e| format!("writing {}: {e}", out.display()))?;
    println!(
        "wrote {} (degree {}, {})",
        out.display(),
        art.g.degree().unwrap_or(0),
        if art.certificate.pass { "pass" } else { "FAIL" }
    );
    Ok(outcome(&art.certificate))
}

fn cmd_certify(artifact_path: &Path, spec_path: &Path) -> Result<Outcome, String> {
    let loaded = load_spec(spec_path)?;
    let art = load_artifact(artifact_path)?;
    let cert = certify(&art, &loaded.spec, loaded.grid_per_unit).map_err(|e| format!("certify: {e}"))?;
    print!("{}", table(&cert));
    Ok(outcome(&cert))
}

fn table(c: &Certificate) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "interval [{}, {}], {} grid points",
        c.interval.0, c.interval.1, c.grid_points
    );
    let _ = writeln!(
        s,
        "{:>5}  {:>24}  {:>24}  {:>24}  {:>24}",
        "order", "max_error", "max_ratio", "worst_x", "node_residual"
    );
    for o in &c.orders {
        let _ = writeln!(
            s,
            "{:>5}  {:>24.16e}  {:>24.16e}  {:>24.16e}  {:>24.16e}",
            o.order, o.max_error, o.max_ratio, o.worst_x, o.node_residual
        );
    }
    if !c.moment_residuals.is_empty() {
        let _ = writeln!(s, "max unit-cell residual {:.16e}", c.max_moment_residual());
    }
    let _ = writeln!(
        s,
        "ratios {}, residuals {}: {}",
        if c.ratios_pass { "ok" } else { "exceeded" },
        if c.residuals_pass { "ok" } else { "exceeded" },
        if c.pass { "PASS" } else { "FAIL" }
    );
    s
}

fn cmd_dump(artifact_path: &Path, spec_path: &Path, csv: &Path, deriv: i64) -> Result<Outcome, String> {
    let loaded = load_spec(spec_path)?;
    let art = load_artifact(artifact_path)?;
    if art.m != loaded.spec.m {
        return Err(format!("dump: artifact has m = {}, spec has m = {}", art.m, loaded.spec.m));
    }
    if deriv < 0 || deriv as usize > art.m {
        return Err(format!("dump: --deriv {deriv} outside 0..={}", art.m));
    }
    let i = deriv as usize;
    let fi = loaded
        .spec
        .f
        .nth_derivative(i)
        .map_err(|e| format!("dump: derivative {i}: {e}"))?;
    let gi = art.g.nth_derivative(i);
    let (lo, hi) = loaded.spec.window();
    let mut out = String::from("x,f_re,f_im,g_re,g_im,eps,abs_err\n");
    for x in grid(lo, hi, loaded.grid_per_unit) {
        let f = fi.eval(x).map_err(|e| format!("dump: f^({i}) at {x}: {e}"))?;
        let g = gi.eval_real(x);
        let eps = match &loaded.spec.mode {
            Mode::Compact { eps, .. } => *eps,
            Mode::Line { eps, .. } => eps.eval(x).map_err(|err| format!("dump: epsilon at {x}: {err}"))?.re,
        };
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            x,
            f.re,
            f.im,
            g.re,
            g.im,
            eps,
            (f - g).norm()
        );
    }
    std::fs::write(csv, out).map_err(|e| format!("writing {}: {e}", csv.display()))?;
    Ok(Outcome::Pass)
}
