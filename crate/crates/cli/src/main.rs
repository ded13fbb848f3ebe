//! Experiment harness. Every subcommand reads an optional JSON config,
//! renders its artifacts into the output directory, and writes a manifest
//! with the config hash, check verdicts, and a file inventory. Artifacts
//! are byte-identical across runs with the same config and seed; the
//! manifest is the one file that is not (it records wall-clock time).

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::json;

use minsurf::ambient::AmbientSpace;
use minsurf::error::MinsurfError;
use minsurf::jacobi::{assemble_with, index_lower_bound_phi_ab, AssembleOptions};
use minsurf::mcf::{
    dumbbell_profile, extract_foliation, sphere_profile, DumbbellSpec, FlowParams, FlowState,
    SliceKind,
};
use minsurf::mesh::{ellipsoid_slice_mesh, great_sphere_mesh, planar_sphere_area};
use minsurf::sweepout::{
    annulus_modulus, build_optimal_foliation, build_two_param, catenoid_modify,
    degeneration_experiment, width_report, TwoParamConfig,
};

const PI: f64 = std::f64::consts::PI;

#[derive(Parser)]
#[command(
    name = "minsurf",
    version,
    about = "Experiments on minimal two-spheres in positively curved three-manifolds"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON config file; absent fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for any randomized mesh jitter; recorded in the manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run the acceptance checks; any failure exits with code 1.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Planar-sphere areas: ordering, crossover bisection, axis growth.
    EllipsoidAreas,
    /// Stability spectra: great-sphere golden values, index table over
    /// the long axis, cutoff Rayleigh quotients.
    Jacobi,
    /// Flow with surgery: event log, summary, slices, nesting report.
    Mcf,
    /// Foliation exported from a flow run.
    Foliate,
    /// Two-parameter sweepout family: area grid, moduli, certificates.
    TwoParam,
    /// Width upper bounds with the doubling margin.
    Widths,
    /// Slab degeneration table over the long axis.
    Degeneration,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Cmd::EllipsoidAreas => cmd_ellipsoid_areas(cli),
        Cmd::Jacobi => cmd_jacobi(cli),
        Cmd::Mcf => cmd_mcf(cli),
        Cmd::Foliate => cmd_foliate(cli),
        Cmd::TwoParam => cmd_two_param(cli),
        Cmd::Widths => cmd_widths(cli),
        Cmd::Degeneration => cmd_degeneration(cli),
    }
}

// ---------------------------------------------------------------------
// Errors and exit codes.

enum CliError {
    /// Bad flags, unreadable or invalid config: exit code 2.
    Config(String),
    /// The computation itself failed: exit code 3.
    Numeric(String),
}

impl From<MinsurfError> for CliError {
    fn from(e: MinsurfError) -> Self {
        match e {
            MinsurfError::InvalidInput(_) | MinsurfError::Json(_) | MinsurfError::Io(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

// ---------------------------------------------------------------------
// Run manifest and artifact bookkeeping.

#[derive(Serialize)]
struct CheckRecord {
    name: String,
    passed: bool,
    detail: String,
}

#[derive(Serialize)]
struct FileRecord {
    path: String,
    bytes: usize,
    fnv64: String,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    config_hash: String,
    seed: u64,
    versions: Versions,
    /// The only nondeterministic field of a run; everything else is
    /// byte-stable for a fixed config and seed.
    wall_clock_s: f64,
    checks: Vec<CheckRecord>,
    files: Vec<FileRecord>,
}

#[derive(Serialize)]
struct Versions {
    harness: &'static str,
    core: &'static str,
}

/// FNV-1a over the bytes, rendered as fixed-width hex.
fn fnv64(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

struct Runner {
    out_dir: PathBuf,
    command: &'static str,
    config_hash: String,
    seed: u64,
    check: bool,
    started: Instant,
    checks: Vec<CheckRecord>,
    files: Vec<FileRecord>,
    /// JSON-lines event log; no timestamps, so it is byte-stable.
    log: String,
}

impl Runner {
    /// Parse the config (empty object when no file is given), create the
    /// output directory, and open the run.
    fn open<C>(cli: &Cli, command: &'static str) -> Result<(Self, C), CliError>
    where
        C: DeserializeOwned + Serialize + Default,
    {
        let text = match &cli.config {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?,
            None => "{}".to_owned(),
        };
        let cfg: C = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("parsing config: {e}")))?;
        // Hash the canonical serialization, not the file text, so
        // defaulted and explicitly-written configs hash alike.
        let canon = serde_json::to_string(&cfg)
            .map_err(|e| CliError::Config(format!("serializing config: {e}")))?;
        let config_hash = fnv64(format!("{command}:{canon}:{}", cli.seed).as_bytes());
        fs::create_dir_all(&cli.out)
            .map_err(|e| CliError::Config(format!("creating {}: {e}", cli.out.display())))?;
        let mut runner = Runner {
            out_dir: cli.out.clone(),
            command,
            config_hash,
            seed: cli.seed,
            check: cli.check,
            started: Instant::now(),
            checks: Vec::new(),
            files: Vec::new(),
            log: String::new(),
        };
        runner.event(json!({
            "event": "start",
            "command": command,
            "config": serde_json::from_str::<serde_json::Value>(&canon).unwrap(),
            "seed": cli.seed,
        }));
        Ok((runner, cfg))
    }

    fn event(&mut self, v: serde_json::Value) {
        self.log.push_str(&v.to_string());
        self.log.push('\n');
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::Config(format!("writing {}: {e}", path.display())))?;
        self.files.push(FileRecord {
            path: name.to_owned(),
            bytes: bytes.len(),
            fnv64: fnv64(bytes),
        });
        self.event(json!({"event": "artifact", "file": name, "bytes": bytes.len()}));
        Ok(())
    }

    fn write_json(&mut self, name: &str, v: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v)
            .map_err(|e| CliError::Numeric(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        println!("[{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        self.event(json!({"event": "check", "name": name, "passed": passed, "detail": detail}));
        self.checks.push(CheckRecord { name: name.to_owned(), passed, detail });
    }

    /// Write the event log and the manifest, then map failed checks to
    /// the exit code.
    fn finish(mut self) -> Result<ExitCode, CliError> {
        let log = std::mem::take(&mut self.log);
        self.write("run.log.jsonl", log.as_bytes())?;
        let manifest = RunManifest {
            command: self.command.to_owned(),
            config_hash: self.config_hash,
            seed: self.seed,
            versions: Versions { harness: env!("CARGO_PKG_VERSION"), core: minsurf::VERSION },
            wall_clock_s: self.started.elapsed().as_secs_f64(),
            checks: self.checks,
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numeric(format!("serializing manifest: {e}")))?;
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| CliError::Config(format!("writing {}: {e}", path.display())))?;
        let failed = manifest.checks.iter().filter(|c| !c.passed).count();
        if failed > 0 {
            eprintln!("{failed} check(s) failed");
            return Ok(ExitCode::from(1));
        }
        Ok(ExitCode::SUCCESS)
    }
}

fn positive(v: f64, what: &str) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CliError::Config(format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

fn space_from(value: &serde_json::Value) -> Result<AmbientSpace<f64>, CliError> {
    Ok(AmbientSpace::from_json(&value.to_string())?)
}

fn default_space() -> serde_json::Value {
    json!({"kind": "roundsphere3", "radius": 1.0})
}

// ---------------------------------------------------------------------
// ellipsoid-areas

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EllipsoidAreasConfig {
    /// Semiaxes for the slice-area table.
    semiaxes: [f64; 4],
    /// Transverse semiaxes held fixed for the crossover and growth scans.
    bcd: [f64; 3],
    /// Bisection bracket for the crossover axis.
    a_bracket: [f64; 2],
    /// Axis values for the linear-growth table.
    growth_grid: Vec<f64>,
    /// Relative quadrature tolerance for all areas.
    quad_rel_tol: f64,
    /// Relative width at which the crossover bisection stops.
    bisect_rel_tol: f64,
}

impl Default for EllipsoidAreasConfig {
    fn default() -> Self {
        EllipsoidAreasConfig {
            semiaxes: [4.0, 3.0, 2.0, 1.0],
            bcd: [1.5, 1.2, 1.0],
            a_bracket: [2.0, 64.0],
            growth_grid: vec![16.0, 32.0, 64.0, 128.0],
            quad_rel_tol: 1e-10,
            bisect_rel_tol: 1e-6,
        }
    }
}

impl EllipsoidAreasConfig {
    fn validate(&self) -> Result<(), CliError> {
        for &v in &self.semiaxes {
            positive(v, "semiaxis")?;
        }
        for &v in &self.bcd {
            positive(v, "transverse semiaxis")?;
        }
        positive(self.quad_rel_tol, "quad_rel_tol")?;
        positive(self.bisect_rel_tol, "bisect_rel_tol")?;
        if !(self.a_bracket[0] > self.bcd[0] && self.a_bracket[1] > self.a_bracket[0]) {
            return Err(CliError::Config(
                "a_bracket must increase and start above the second semiaxis".into(),
            ));
        }
        if self.growth_grid.len() < 2 || self.growth_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("growth_grid must increase strictly".into()));
        }
        if self.growth_grid[0] <= self.bcd[0] {
            return Err(CliError::Config(
                "growth_grid must start above the second semiaxis".into(),
            ));
        }
        Ok(())
    }
}

fn cmd_ellipsoid_areas(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<EllipsoidAreasConfig>(cli, "ellipsoid-areas")?;
    cfg.validate()?;
    let tol = cfg.quad_rel_tol;
    let [b, c, d] = cfg.bcd;

    // Slice-area table for the configured semiaxes.
    let areas: Vec<f64> = (0..4).map(|k| planar_sphere_area(cfg.semiaxes, k, tol)).collect();
    let mut csv = String::from("slice,area\n");
    for (k, a) in areas.iter().enumerate() {
        let _ = writeln!(csv, "{},{a:.12e}", k + 1);
    }
    run.write("slice_areas.csv", csv.as_bytes())?;

    // Crossover of |Gamma_2(a)| past twice the fixed |Gamma_1|.
    let gamma1 = planar_sphere_area([cfg.a_bracket[0], b, c, d], 0, tol);
    let target = 2.0 * gamma1;
    let gamma2 = |a: f64| planar_sphere_area([a, b, c, d], 1, tol);
    let (mut lo, mut hi) = (cfg.a_bracket[0], cfg.a_bracket[1]);
    let (f_lo, f_hi) = (gamma2(lo) - target, gamma2(hi) - target);
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(CliError::Numeric(format!(
            "crossover bracket does not straddle the target: f({lo}) = {f_lo:.3e}, f({hi}) = {f_hi:.3e}"
        )));
    }
    // Uniqueness witness: the area is strictly monotone on a coarse scan.
    let scan: Vec<(f64, f64)> = (0..=8)
        .map(|i| {
            let a = lo + (hi - lo) * i as f64 / 8.0;
            (a, gamma2(a))
        })
        .collect();
    let monotone = scan.windows(2).all(|w| w[1].1 > w[0].1);
    let mut iterations = 0usize;
    while hi - lo > cfg.bisect_rel_tol * 0.5 * (hi + lo) {
        let mid = 0.5 * (lo + hi);
        if gamma2(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 200 {
            return Err(CliError::Numeric("crossover bisection stalled".into()));
        }
    }
    let a_star = 0.5 * (lo + hi);
    run.write_json(
        "crossover.json",
        &json!({
            "bcd": cfg.bcd,
            "gamma1": gamma1,
            "target": target,
            "a_star": a_star,
            "bracket": [lo, hi],
            "iterations": iterations,
            "monotone_scan": scan.iter().map(|&(a, v)| json!([a, v])).collect::<Vec<_>>(),
        }),
    )?;

    // Linear growth of the long slice.
    let growth: Vec<(f64, f64)> = cfg.growth_grid.iter().map(|&a| (a, gamma2(a))).collect();
    let mut csv = String::from("a,gamma2,gamma2_over_a\n");
    for &(a, v) in &growth {
        let _ = writeln!(csv, "{a},{v:.12e},{:.12e}", v / a);
    }
    run.write("axis_growth.csv", csv.as_bytes())?;

    if run.check {
        let round: Vec<f64> = (0..4).map(|k| planar_sphere_area([1.0; 4], k, tol)).collect();
        let worst =
            round.iter().map(|a| (a / (4.0 * PI) - 1.0).abs()).fold(0.0, f64::max);
        run.check(
            "round_unit_areas",
            worst < 1e-8,
            format!("max relative deviation from 4 pi: {worst:.3e}"),
        );
        let ordered = areas.windows(2).all(|w| w[1] > w[0]);
        run.check(
            "areas_strictly_increasing",
            ordered,
            format!("areas: {areas:?}"),
        );
        run.check(
            "crossover_unique",
            monotone,
            format!("strictly monotone on a 9-point scan of [{:.1}, {:.1}]", cfg.a_bracket[0], cfg.a_bracket[1]),
        );
        let rel = (hi - lo) / a_star;
        run.check(
            "crossover_resolved",
            rel <= cfg.bisect_rel_tol,
            format!("a* = {a_star:.8} with relative bracket {rel:.2e}"),
        );
        let (prev, last) = (growth[growth.len() - 2], growth[growth.len() - 1]);
        let change = (last.1 / last.0 / (prev.1 / prev.0) - 1.0).abs();
        run.check(
            "growth_converged",
            change < 1e-3,
            format!(
                "gamma2/a changed by {change:.2e} between a = {} and a = {}",
                prev.0, last.0
            ),
        );
    }
    run.finish()
}

// ---------------------------------------------------------------------
// jacobi

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct JacobiConfig {
    /// Icosphere refinement of the great-sphere mesh (level 5 is ~20k
    /// triangles).
    level: u32,
    /// Number of eigenpairs of the great-sphere spectrum.
    eigs: usize,
    /// Kernel tolerance for the great-sphere index and nullity.
    zero_tol: f64,
    /// Transverse semiaxes of the stretched quadric.
    bcd: [f64; 3],
    /// Long-axis grid of the index table.
    a_grid: Vec<f64>,
    /// Cutoff plateau half-width.
    n_param: f64,
    /// Axial mesh step of the tube meshes.
    dx: f64,
    /// Vertices per cross-section ring of the tube meshes.
    cols: usize,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        JacobiConfig {
            level: 5,
            eigs: 8,
            zero_tol: 0.05,
            bcd: [1.5, 1.2, 1.0],
            a_grid: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            n_param: 3.0,
            dx: 0.2,
            cols: 48,
        }
    }
}

impl JacobiConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.level > 7 {
            return Err(CliError::Config("refinement level above 7 is not sensible".into()));
        }
        if self.eigs < 5 {
            return Err(CliError::Config("need at least 5 eigenpairs".into()));
        }
        positive(self.zero_tol, "zero_tol")?;
        for &v in &self.bcd {
            positive(v, "transverse semiaxis")?;
        }
        positive(self.n_param, "n_param")?;
        positive(self.dx, "dx")?;
        if self.a_grid.is_empty() || self.a_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("a_grid must increase strictly".into()));
        }
        Ok(())
    }
}

fn cmd_jacobi(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<JacobiConfig>(cli, "jacobi")?;
    cfg.validate()?;

    // Great sphere in the round three-sphere.
    let space = AmbientSpace::RoundSphere3 { radius: 1.0 };
    let surf = great_sphere_mesh::<f64>(1.0, 3, cfg.level);
    let opts = AssembleOptions { geodesic_certificate: true, ..AssembleOptions::default() };
    let op = assemble_with(&surf, &space, &opts)?;
    let spec = op.spectrum(cfg.eigs, Some(cfg.zero_tol))?;
    run.write_json(
        "great_sphere_spectrum.json",
        &json!({"triangles": surf.nt(), "vertices": surf.nv(), "spectrum": spec}),
    )?;

    // Index table of the long planar sphere over the axis grid.
    let report = index_lower_bound_phi_ab(cfg.bcd, &cfg.a_grid, cfg.n_param, cfg.dx, cfg.cols)?;
    let mut csv = String::from(
        "a,fem_index,q_left,q_mid,q_right,mu_hat,max_a2,boundary_strip_area,vertices\n",
    );
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{:.8e},{:.8e},{:.8e},{:.6e},{:.3e},{:.8e},{}",
            r.a,
            r.fem_index,
            r.quotients[0],
            r.quotients[1],
            r.quotients[2],
            r.mu_hat,
            r.max_a2,
            r.boundary_strip_area,
            r.vertices
        );
    }
    run.write("index_table.csv", csv.as_bytes())?;

    // Index-one witness: the short planar sphere is independent of the
    // axis, close to round, strictly stable in all but one direction.
    let a_max = *cfg.a_grid.last().unwrap();
    let [b, c, d] = cfg.bcd;
    let gsurf = ellipsoid_slice_mesh([a_max, b, c, d], 0, 4);
    let gspace = AmbientSpace::Ellipsoid4 { semiaxes: [a_max, b, c, d] };
    let gop = assemble_with(&gsurf, &gspace, &opts)?;
    let gspec = gop.spectrum(5, Some(1e-3))?;
    run.write_json(
        "phi_ab.json",
        &json!({
            "report": report,
            "gamma1": {
                "semiaxes": [b, c, d],
                "eigenvalues": gspec.eigenvalues,
                "index": gspec.index,
                "nullity": gspec.nullity,
            },
        }),
    )?;

    if run.check {
        let golden = [-2.0, 0.0, 0.0, 0.0, 4.0];
        let mut worst = 0.0f64;
        for (k, &g) in golden.iter().enumerate() {
            let dev = if g == 0.0 {
                // 1% of the spectral gap around the kernel.
                spec.eigenvalues[k].abs() / 2.0
            } else {
                (spec.eigenvalues[k] / g - 1.0).abs()
            };
            worst = worst.max(dev);
        }
        run.check(
            "great_sphere_golden_spectrum",
            worst < 0.01,
            format!(
                "lowest five {:?} vs {golden:?} (worst deviation {worst:.2e})",
                &spec.eigenvalues[..5]
            ),
        );
        run.check(
            "great_sphere_index_nullity",
            spec.index == 1 && spec.nullity == 3,
            format!("index {} nullity {}", spec.index, spec.nullity),
        );
        let indices: Vec<usize> = report.rows.iter().map(|r| r.fem_index).collect();
        let nondecreasing = indices.windows(2).all(|w| w[1] >= w[0]);
        run.check(
            "fem_index_growth",
            nondecreasing && *indices.last().unwrap() >= 3,
            format!("indices along the axis grid: {indices:?}"),
        );
        let last = report.rows.last().unwrap();
        run.check(
            "cutoff_quotients_negative",
            last.quotients.iter().all(|&q| q.is_finite() && q < 0.0),
            format!("quotients at a = {}: {:?}", last.a, last.quotients),
        );
        let worst_a2 = report.rows.iter().map(|r| r.max_a2).fold(0.0, f64::max);
        run.check(
            "totally_geodesic_certificate",
            worst_a2 < 1e-10,
            format!("max |A|^2 over all meshes: {worst_a2:.2e}"),
        );
        run.check(
            "short_slice_index_one",
            gspec.index == 1 && gspec.nullity == 0,
            format!("index {} nullity {}", gspec.index, gspec.nullity),
        );
    }
    run.finish()
}

// ---------------------------------------------------------------------
// mcf and foliate share the flow configuration.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FlowConfig {
    /// Initial surface: "sphere" or "dumbbell".
    preset: String,
    /// Sphere preset radius.
    radius: f64,
    /// Dumbbell preset knobs.
    ball_radius: f64,
    tube_radius: f64,
    ball_center: f64,
    fillet_radius: f64,
    cone_slope: f64,
    tube_taper: f64,
    /// Profile sample spacing.
    spacing: f64,
    /// Slice pairs scanned by the nesting report.
    nesting_pairs: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        let spec = DumbbellSpec::<f64>::default();
        FlowConfig {
            preset: "dumbbell".to_owned(),
            radius: 1.0,
            ball_radius: spec.ball_radius,
            tube_radius: spec.tube_radius,
            ball_center: spec.ball_center,
            fillet_radius: spec.fillet_radius,
            cone_slope: spec.cone_slope,
            tube_taper: spec.tube_taper,
            spacing: 0.01,
            nesting_pairs: 1000,
        }
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.preset != "sphere" && self.preset != "dumbbell" {
            return Err(CliError::Config(format!(
                "unknown preset {:?}; use \"sphere\" or \"dumbbell\"",
                self.preset
            )));
        }
        positive(self.radius, "radius")?;
        positive(self.ball_radius, "ball_radius")?;
        positive(self.tube_radius, "tube_radius")?;
        positive(self.ball_center, "ball_center")?;
        positive(self.fillet_radius, "fillet_radius")?;
        positive(self.cone_slope, "cone_slope")?;
        positive(self.spacing, "spacing")?;
        if self.tube_taper < 0.0 {
            return Err(CliError::Config("tube_taper must be nonnegative".into()));
        }
        if self.nesting_pairs == 0 {
            return Err(CliError::Config("nesting_pairs must be positive".into()));
        }
        Ok(())
    }

    fn build_profile(&self) -> Result<minsurf::Profile, CliError> {
        match self.preset.as_str() {
            "sphere" => Ok(sphere_profile(0.0, self.radius, self.spacing)),
            _ => {
                let spec = DumbbellSpec {
                    ball_radius: self.ball_radius,
                    tube_radius: self.tube_radius,
                    ball_center: self.ball_center,
                    fillet_radius: self.fillet_radius,
                    cone_slope: self.cone_slope,
                    tube_taper: self.tube_taper,
                };
                Ok(dumbbell_profile(&spec, self.spacing)?)
            }
        }
    }
}

/// Run the flow to extinction and extract the foliation on the way out.
fn run_flow(
    cfg: &FlowConfig,
) -> Result<(FlowState<f64>, minsurf::mcf::RunSummary), CliError> {
    let profile = cfg.build_profile()?;
    let mut state = FlowState::new(vec![profile], FlowParams::default())?;
    let summary = state.run_to_extinction()?;
    Ok((state, summary))
}

fn slices_csv(fol: &minsurf::mcf::FoliationSlices<f64>) -> String {
    let mut csv = String::from("index,t,time,kind,components,area\n");
    for (i, slice) in fol.slices.iter().enumerate() {
        let kind = match slice.kind {
            SliceKind::Flow => "flow",
            SliceKind::String => "string",
        };
        let _ = writeln!(
            csv,
            "{i},{:.8},{:.8},{kind},{},{:.10e}",
            fol.t_values[i],
            slice.time,
            slice.profiles.len(),
            fol.areas[i]
        );
    }
    csv
}

fn nesting_checks(
    run: &mut Runner,
    fol: &minsurf::mcf::FoliationSlices<f64>,
    pairs: usize,
) -> Result<(), CliError> {
    let nesting = fol.check_nesting(pairs)?;
    let skeleton = fol.skeleton_report();
    run.write_json("nesting.json", &json!({"nesting": nesting, "skeleton": skeleton}))?;
    if run.check {
        run.check(
            "slices_strictly_nested",
            nesting.strictly_nested && nesting.areas_strictly_decreasing,
            format!(
                "{} pairs, min clearance {:.3e}, areas decreasing: {}",
                nesting.pairs_checked, nesting.min_clearance, nesting.areas_strictly_decreasing
            ),
        );
        run.check(
            "final_slices_reach_skeleton",
            skeleton.worst_ratio <= 1.0,
            format!(
                "max Hausdorff {:.4e} over {} components (ratio {:.3} of the bound)",
                skeleton.max_hausdorff, skeleton.components, skeleton.worst_ratio
            ),
        );
    }
    Ok(())
}

fn cmd_mcf(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<FlowConfig>(cli, "mcf")?;
    cfg.validate()?;
    let (state, summary) = run_flow(&cfg)?;
    let events = state.event_log();
    run.write("events.jsonl", events.as_bytes())?;
    run.write_json(
        "summary.json",
        &serde_json::to_value(&summary).map_err(|e| CliError::Numeric(e.to_string()))?,
    )?;
    let fol = extract_foliation(&state)?;
    run.write("slices.csv", slices_csv(&fol).as_bytes())?;

    let mut csv = String::from("kind,time,x_left,x_right\n");
    for s in &fol.strings {
        let _ = writeln!(csv, "string,{:.8},{:.8},{:.8}", s.time, s.x_left, s.x_right);
    }
    for e in &fol.extinctions {
        let _ = writeln!(csv, "point,{:.8},{:.8},{:.8}", e.time, e.center_x, e.center_x);
    }
    run.write("skeleton.csv", csv.as_bytes())?;

    if run.check {
        match cfg.preset.as_str() {
            "sphere" => {
                let expect = cfg.radius * cfg.radius / 4.0;
                let rel = (summary.extinction_time / expect - 1.0).abs();
                run.check(
                    "sphere_extinction_time",
                    rel < 0.01,
                    format!(
                        "extinct at {:.6} vs {expect:.6} (relative error {rel:.2e})",
                        summary.extinction_time
                    ),
                );
                run.check(
                    "sphere_no_surgeries",
                    summary.cap_replacements == 0 && summary.discards == 0,
                    format!(
                        "{} cap replacements, {} discards",
                        summary.cap_replacements, summary.discards
                    ),
                );
            }
            _ => {
                run.check(
                    "one_cap_replacement",
                    summary.cap_replacements == 1,
                    format!("{} cap replacement(s)", summary.cap_replacements),
                );
                // Every component born from the surgery must leave the
                // flow through the discard classifier.
                run.check(
                    "post_surgery_components_discarded",
                    summary.discards == 2,
                    format!("{} discard(s) of 2 post-surgery components", summary.discards),
                );
                // A second run from the same config must reproduce the
                // event log byte for byte.
                let (state2, _) = run_flow(&cfg)?;
                run.check(
                    "event_log_byte_stable",
                    state2.event_log() == events,
                    format!("{} log bytes", events.len()),
                );
            }
        }
        run.check(
            "extinct_before_circumsphere_bound",
            summary.extinction_time < summary.circumsphere_bound,
            format!(
                "extinct at {:.6}, bound {:.6}",
                summary.extinction_time, summary.circumsphere_bound
            ),
        );
    }
    nesting_checks(&mut run, &fol, cfg.nesting_pairs)?;
    run.finish()
}

fn cmd_foliate(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<FlowConfig>(cli, "foliate")?;
    cfg.validate()?;
    let (state, _) = run_flow(&cfg)?;
    let fol = extract_foliation(&state)?;
    run.write("foliation.csv", slices_csv(&fol).as_bytes())?;
    run.write_json(
        "foliation.json",
        &json!({
            "slices": fol.slices.len(),
            "resolution": fol.resolution,
            "strings": fol.strings,
            "extinctions": fol.extinctions,
        }),
    )?;
    nesting_checks(&mut run, &fol, cfg.nesting_pairs)?;
    run.finish()
}

// ---------------------------------------------------------------------
// two-param

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TwoParamCmdConfig {
    /// Ambient space spec (round sphere or quadric).
    space: serde_json::Value,
    /// Icosphere refinement of the leaf meshes.
    level: u32,
    /// Foliation slice count (odd).
    n_t: usize,
    /// Family construction knobs.
    family: TwoParamConfig,
    /// Apply the catenoid modification over the diagonal band.
    modify: bool,
}

impl Default for TwoParamCmdConfig {
    fn default() -> Self {
        TwoParamCmdConfig {
            space: default_space(),
            level: 4,
            n_t: 129,
            family: TwoParamConfig::default(),
            modify: true,
        }
    }
}

fn cmd_two_param(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<TwoParamCmdConfig>(cli, "two-param")?;
    let space = space_from(&cfg.space)?;
    cfg.family.validate()?;
    let fol = build_optimal_foliation(&space, cfg.level, cfg.n_t)?;
    let mut fam = build_two_param(&fol, &cfg.family)?;
    if cfg.modify {
        fam = catenoid_modify(&fol, fam)?;
    }
    run.write("area_grid.csv", fam.to_csv().as_bytes())?;

    // Modulus tables driving the band half-width choice.
    let mut csv = String::from("table,x,value\n");
    for &(w, g) in &fam.b1 {
        let _ = writeln!(csv, "b1,{w:.10},{g:.10e}");
    }
    for &(dp, g) in &fam.b2 {
        let _ = writeln!(csv, "b2,{dp:.10},{g:.10e}");
    }
    for i in 0..=16 {
        let w = fam.mu * i as f64 / 16.0;
        let _ = writeln!(csv, "modulus,{w:.10},{:.10e}", annulus_modulus(&fol, w));
    }
    run.write("moduli.csv", csv.as_bytes())?;

    run.write_json(
        "family.json",
        &json!({
            "grid_n": fam.grid_len(),
            "eps": fam.eps,
            "eps_clamped": fam.eps_clamped,
            "mu": fam.mu,
            "tau_bar": fam.tau_bar,
            "min_slide_frac": fam.min_slide_frac,
            "belt_frac": fam.belt_frac,
            "c_quad": fam.c_quad,
            "center_area": fam.center_area,
            "modified": fam.modified,
            "sup": fam.sup,
            "sup_off_diagonal": fam.sup_off_diagonal,
            "sup_band": fam.sup_band,
            "neck_cost_max": fam.neck_cost_max,
            "quad_saving_min": fam.quad_saving_min,
        }),
    )?;

    if run.check {
        let n = fam.grid_len();
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((fam.area_at(i, j) - fam.area_at(j, i)).abs());
            }
        }
        run.check(
            "area_grid_symmetric",
            asym == 0.0,
            format!("max |A(s,t) - A(t,s)| = {asym:.1e}"),
        );
        let mut edge_dev = 0.0f64;
        for j in 0..n {
            let t = fam.param_grid[j];
            if (t + 1.0).abs() < 2.0 * fam.eps {
                continue;
            }
            edge_dev = edge_dev.max((fam.area_at(0, j) - fol.slice_area(t)).abs());
        }
        run.check(
            "boundary_loop_is_the_foliation",
            edge_dev == 0.0,
            format!("max edge deviation off the band corners: {edge_dev:.1e}"),
        );
        if fam.modified {
            let double = 2.0 * fam.center_area;
            run.check(
                "sup_below_double_area",
                fam.sup < double,
                format!("sup {:.8} vs 2|Sigma_0| = {double:.8}", fam.sup),
            );
            run.check(
                "neck_cost_below_saving",
                fam.neck_cost_max < fam.quad_saving_min,
                format!(
                    "worst neck cost {:.3e} < least saving {:.3e}",
                    fam.neck_cost_max, fam.quad_saving_min
                ),
            );
        }
    }
    run.finish()
}

// ---------------------------------------------------------------------
// widths

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct WidthsConfig {
    space: serde_json::Value,
    level: u32,
    family: TwoParamConfig,
    /// Window half-width of the unmodified near-doubling probe.
    probe_mu: f64,
}

impl Default for WidthsConfig {
    fn default() -> Self {
        WidthsConfig {
            space: default_space(),
            level: 4,
            family: TwoParamConfig::default(),
            probe_mu: 0.2,
        }
    }
}

fn cmd_widths(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<WidthsConfig>(cli, "widths")?;
    let space = space_from(&cfg.space)?;
    cfg.family.validate()?;
    positive(cfg.probe_mu, "probe_mu")?;
    let report = width_report(&space, &cfg.family, cfg.level)?;

    // The near-doubling probe shows the unmodified supremum approaching
    // twice the center area as the window narrows.
    let probe = if run.check {
        let fol = build_optimal_foliation(&space, cfg.level, 129)?;
        let probe_cfg =
            TwoParamConfig { mu: cfg.probe_mu, grid_n: 65, ..TwoParamConfig::default() };
        let fam = build_two_param(&fol, &probe_cfg)?;
        Some((fam.sup, 2.0 * fam.center_area))
    } else {
        None
    };

    let mut doc = json!({"report": report});
    if let Some((sup, double)) = probe {
        doc["probe"] = json!({"mu": cfg.probe_mu, "sup": sup, "double_area": double});
    }
    run.write_json("width.json", &doc)?;

    if run.check {
        let round = matches!(space, AmbientSpace::RoundSphere3 { .. });
        if round {
            let rel = (report.omega1_upper / (4.0 * PI) - 1.0).abs();
            run.check(
                "omega1_is_4pi",
                rel < 1e-3,
                format!("omega1 upper {:.8} (relative error {rel:.2e})", report.omega1_upper),
            );
        }
        run.check(
            "doubling_margin_positive",
            report.margin > 0.0,
            format!(
                "omega2 upper {:.6} < 2 x omega1 upper {:.6} (margin {:.4})",
                report.omega2_upper,
                2.0 * report.omega1_upper,
                report.margin
            ),
        );
        if let Some((sup, double)) = probe {
            run.check(
                "unmodified_sup_near_double",
                sup >= double - 0.05 && sup < double,
                format!("probe sup {sup:.6} in [2|Sigma_0| - 0.05, 2|Sigma_0|) = [{:.6}, {double:.6})", double - 0.05),
            );
        }
    }
    run.finish()
}

// ---------------------------------------------------------------------
// degeneration

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DegenerationConfig {
    /// Transverse semiaxes held fixed while the slab stretches.
    bcd: [f64; 3],
    /// Long-axis grid, strictly increasing.
    a_grid: Vec<f64>,
    /// Icosphere refinement of the leaf meshes.
    level: u32,
    /// Family construction knobs.
    family: TwoParamConfig,
}

impl Default for DegenerationConfig {
    fn default() -> Self {
        DegenerationConfig {
            bcd: [1.5, 1.2, 1.0],
            a_grid: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            level: 3,
            family: TwoParamConfig::default(),
        }
    }
}

fn cmd_degeneration(cli: &Cli) -> Result<ExitCode, CliError> {
    let (mut run, cfg) = Runner::open::<DegenerationConfig>(cli, "degeneration")?;
    for &v in &cfg.bcd {
        positive(v, "transverse semiaxis")?;
    }
    cfg.family.validate()?;
    let report = degeneration_experiment(cfg.bcd, &cfg.a_grid, &cfg.family, cfg.level)?;
    run.write("degeneration.csv", report.to_csv().as_bytes())?;
    run.write_json(
        "degeneration.json",
        &serde_json::to_value(&report).map_err(|e| CliError::Numeric(e.to_string()))?,
    )?;

    if run.check {
        let rows = &report.rows;
        let g1 = rows[0].gamma1_area;
        let drift = rows
            .iter()
            .map(|r| (r.gamma1_area / g1 - 1.0).abs())
            .fold(0.0, f64::max);
        run.check(
            "center_slice_constant",
            drift < 1e-12,
            format!("relative drift of |Gamma_1| over the grid: {drift:.1e}"),
        );
        let increasing = rows.windows(2).all(|w| w[1].normalized_sup > w[0].normalized_sup);
        let last = rows.last().unwrap();
        run.check(
            "normalized_sup_increasing",
            increasing,
            format!(
                "normalized sup: {:?}",
                rows.iter().map(|r| r.normalized_sup).collect::<Vec<_>>()
            ),
        );
        run.check(
            "normalized_sup_past_0_9",
            last.normalized_sup > 0.9,
            format!("normalized sup {:.4} at a = {}", last.normalized_sup, last.a),
        );
        let linear = rows.iter().all(|r| {
            r.omega_upper
                .iter()
                .enumerate()
                .all(|(k, &w)| w <= (k + 1) as f64 * r.gamma1_area * (1.0 + 1e-12))
        });
        run.check(
            "stacked_slice_linear_bound",
            linear,
            "omega_k upper bounds within k x |Gamma_1| for k = 1..4".to_owned(),
        );
    }
    run.finish()
}
