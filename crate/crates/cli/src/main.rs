use clap::{Args, Parser, Subcommand, ValueEnum};
use mpk::flow::{self, QuadraticHamiltonian, KNUTSEN_MASS};
use mpk::hardy::{self, DecayCertificate, PhaseConvention, VerdictStatus};
use mpk::io;
use mpk::linalg::{self, Mat};
use mpk::metaplectic::{apply_metaplectic, NumericWarning};
use mpk::symplectic::{mu_s, verify_block_relations_tol};
use mpk::{Complex64 as C64, GridFunction, MpkError, SymplecticMatrix, Tolerances};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "mpk", version, about = "Metaplectic operators, Hardy certificates and quadratic flows")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Matrix (.json/.csv), Hamiltonian (.json) or grid (.mpgf) depending on the command
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Where artifacts are written; nothing is written without it
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Grid points per axis (power of two in [16, 4096])
    #[arg(long, global = true, default_value_t = 256)]
    n: usize,
    /// Grid half extent
    #[arg(long = "L", global = true, default_value_t = 8.0)]
    l: f64,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tau_eig: f64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tau_symp: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Turn aliasing warnings into errors (exit 2)
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Json,
    Csv,
    Bin,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Symplecticity residual, rank of B, mu_S and the eight block relations
    Sympcheck,
    /// Apply the metaplectic operator of --input to a grid function
    Apply {
        /// Grid file (.mpgf); default is e^{-pi|x|^2} on the --n/--L grid
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Wigner distribution of a grid function (d <= 2); with --input also checks covariance
    Wigner {
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Hardy verdict for the matrix in --input
    Hardy {
        /// Certificate JSON {"M","N","alpha","beta"}
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Isotropic certificate a P, b Q when no --cert is given
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
    },
    /// Flow of the Hamiltonian in --input, trajectory export and propagation
    Evolve {
        #[arg(long, default_value_t = PI)]
        t_end: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Certificate for the dynamical check at each time
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Initial state (.mpgf); default e^{-pi|x|^2}
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Named reproductions
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        #[command(flatten)]
        p: DemoParams,
    },
    /// One verdict row per parameter value
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepKind::Frft)]
        kind: SweepKind,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = PI)]
        to: f64,
        /// Number of points (0 gives a header-only CSV)
        #[arg(long, default_value_t = 64)]
        steps: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DemoName {
    #[value(name = "example-1-4")]
    RankOneExample,
    #[value(name = "sharpness-1-4")]
    SharpnessRankOne,
    ClassicalHardy,
    FrftCorollary,
    AnisotropicOscillator,
    HarmonicOscillator,
    KnutsenComparison,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SweepKind {
    Frft,
    Oscillator,
}

#[derive(Args, Debug)]
struct DemoParams {
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    /// FrFT angles
    #[arg(long, value_delimiter = ',', default_values_t = vec![PI / 2.0, PI / 4.0])]
    theta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 3.0])]
    omega: Vec<f64>,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, default_value_t = 0.25)]
    beta: f64,
}

enum Failure {
    Usage(String),
    Mpk(MpkError),
}

impl From<MpkError> for Failure {
    fn from(e: MpkError) -> Self {
        Failure::Mpk(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Ctx {
    c: Common,
    tol: Tolerances,
}

impl Ctx {
    fn new(c: Common) -> Res<Self> {
        if !c.n.is_power_of_two() || !(16..=4096).contains(&c.n) {
            return Err(Failure::Usage(format!("--n must be a power of two in [16, 4096], got {}", c.n)));
        }
        if !(c.l > 0.0 && c.l.is_finite()) {
            return Err(Failure::Usage(format!("--L must be positive, got {}", c.l)));
        }
        for (name, v) in [("--tau-eig", c.tau_eig), ("--tau-symp", c.tau_symp), ("--tol-rank", c.tol_rank.unwrap_or(1.0))] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::Usage(format!("{name} must be positive")));
            }
        }
        let tol = Tolerances { tau_symp: c.tau_symp, tau_eig: c.tau_eig, tol_rank: c.tol_rank, strict: c.strict };
        Ok(Ctx { c, tol })
    }

    fn input(&self) -> Res<&Path> {
        self.c.input.as_deref().ok_or_else(|| Failure::Usage("--input is required".into()))
    }

    fn matrix(&self) -> Res<SymplecticMatrix> {
        let m = io::read_matrix(self.input()?)?;
        Ok(SymplecticMatrix::with_tolerance(m, self.tol.tau_symp)?)
    }

    fn gaussian(&self, d: usize) -> Res<GridFunction> {
        Ok(GridFunction::from_fn(d, self.c.n, self.c.l, |x| {
            C64::new((-PI * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        })?)
    }

    fn grid_or_gaussian(&self, path: &Option<PathBuf>, d: usize) -> Res<GridFunction> {
        match path {
            Some(p) => Ok(io::read_grid(p)?),
            None => self.gaussian(d),
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Res<Option<String>> {
        let Some(dir) = &self.c.output_dir else { return Ok(None) };
        std::fs::create_dir_all(dir).map_err(MpkError::from)?;
        let p = dir.join(name);
        std::fs::write(&p, bytes).map_err(MpkError::from)?;
        Ok(Some(p.display().to_string()))
    }

    /// Grid artifact in the requested format (json falls back to the binary grid).
    fn write_grid(&self, stem: &str, f: &GridFunction) -> Res<Option<String>> {
        match self.c.format {
            Format::Csv => self.write(&format!("{stem}.csv"), io::grid_to_csv(f)?.as_bytes()),
            _ => self.write(&format!("{stem}.mpgf"), &io::grid_to_bytes(f)),
        }
    }
}

fn warnings_json(w: &[NumericWarning]) -> Value {
    serde_json::to_value(w).unwrap()
}

fn mat_json(m: &Mat) -> Value {
    json!(linalg::to_rows(m))
}

fn sympcheck(ctx: &Ctx) -> Res<Value> {
    let m = io::read_matrix(ctx.input()?)?;
    let residual = mpk::symplectic::symplectic_residual(&m);
    let s = SymplecticMatrix::with_tolerance(m, ctx.tol.tau_symp)?;
    let rank_tol = s.rank_tol(ctx.tol.tol_rank);
    let rank = s.rank_b(rank_tol);
    let relations = verify_block_relations_tol(&s, rank_tol, ctx.tol.tau_symp);
    let all = relations.iter().all(|r| r.satisfied);
    let mu = if rank > 0 { Some(mu_s(&s, rank_tol)?) } else { None };
    Ok(json!({
        "d": s.dim(),
        "symplectic_residual": residual,
        "rank_tol": rank_tol,
        "rank_b": rank,
        "mu_s": mu,
        "relations_satisfied": all,
        "relations": relations,
    }))
}

fn apply(ctx: &Ctx, grid: &Option<PathBuf>) -> Res<Value> {
    let s = ctx.matrix()?;
    let f = ctx.grid_or_gaussian(grid, s.dim())?;
    let out = apply_metaplectic(&s, &f, &ctx.tol)?;
    let path = ctx.write_grid("apply", &out.grid)?;
    Ok(json!({
        "d": s.dim(),
        "n": f.n(),
        "L": f.half_extent(),
        "rank_b": s.rank_b(s.rank_tol(ctx.tol.tol_rank)),
        "input_norm": f.norm_l2(),
        "output_norm": out.grid.norm_l2(),
        "warnings": warnings_json(&out.warnings),
        "artifact": path,
    }))
}

fn wigner_cmd(ctx: &Ctx, grid: &Option<PathBuf>, dim: usize) -> Res<Value> {
    let s = match &ctx.c.input {
        Some(_) => Some(ctx.matrix()?),
        None => None,
    };
    let d = s.as_ref().map(|s| s.dim()).unwrap_or(dim);
    let f = ctx.grid_or_gaussian(grid, d)?;
    let w = mpk::wigner::wigner(&f, &f)?;
    let mut csv = String::new();
    for j in 1..=w.dim {
        csv.push_str(&format!("x{j},"));
    }
    for j in 1..=w.dim {
        csv.push_str(&format!("xi{j},"));
    }
    csv.push_str("w\n");
    for (i, v) in w.values.iter().enumerate() {
        for c in w.point(i) {
            csv.push_str(&format!("{c:.16e},"));
        }
        csv.push_str(&format!("{:.16e}\n", v));
    }
    let artifact = match ctx.c.format {
        Format::Csv => ctx.write("wigner.csv", csv.as_bytes())?,
        _ => ctx.write("wigner.json", serde_json::to_string(&w).unwrap().as_bytes())?,
    };
    let covariance = match &s {
        Some(s) => Some(serde_json::to_value(mpk::wigner::check_covariance(s, &f, &ctx.tol, ctx.c.seed)?).unwrap()),
        None => None,
    };
    Ok(json!({
        "d": w.dim,
        "n": w.n,
        "x_half_extent": w.x_half_extent,
        "xi_half_extent": w.xi_half_extent,
        "covariance": covariance,
        "artifact": artifact,
    }))
}

fn hardy_cmd(ctx: &Ctx, cert: &Option<PathBuf>, a: f64, b: f64) -> Res<Value> {
    let s = ctx.matrix()?;
    let cert = match cert {
        Some(p) => io::parse_certificate(&std::fs::read_to_string(p).map_err(MpkError::from)?)?,
        None => DecayCertificate::isotropic_for(&s, a, b, s.rank_tol(ctx.tol.tol_rank))?,
    };
    let v = hardy::classify(&cert, &s, &ctx.tol);
    let value = serde_json::to_value(&v).unwrap();
    ctx.write("verdict.json", io::verdict_to_json(&v).as_bytes())?;
    Ok(value)
}

fn evolve(ctx: &Ctx, t_end: f64, steps: usize, cert: &Option<PathBuf>, grid: &Option<PathBuf>) -> Res<Value> {
    let text = std::fs::read_to_string(ctx.input()?).map_err(MpkError::from)?;
    let h = io::parse_hamiltonian(&text)?;
    let d = h.dim();
    let cert = match cert {
        Some(p) => Some(io::parse_certificate(&std::fs::read_to_string(p).map_err(MpkError::from)?)?),
        None => None,
    };
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = if steps == 0 { 0.0 } else { t_end * k as f64 / steps as f64 };
        let fs = flow::flow(&h, t)?;
        let (a, b, c, dd) = fs.blocks();
        let block_norms = [a, b.clone(), c, dd].map(|m| linalg::spectral_norm(&m));
        let (eigenvalues, status) = match &cert {
            None => (linalg::singular_values(&b), None),
            Some(cert) => match flow::dynamical_hardy_check(cert, &h, t, &ctx.tol) {
                Ok(v) => (v.eigenvalues.clone(), Some(format!("{:?}", v.status))),
                Err(MpkError::DegenerateTime { .. }) => (vec![], Some("DegenerateTime".to_string())),
                Err(e) => return Err(e.into()),
            },
        };
        rows.push(io::TrajectoryRow { t, block_norms, eigenvalues, status });
    }
    let traj = ctx.write("trajectory.csv", io::trajectory_csv(&rows, d).as_bytes())?;
    let u0 = ctx.grid_or_gaussian(grid, d)?;
    let out = flow::propagate(&u0, &h, t_end, &ctx.tol)?;
    let state = ctx.write_grid("state", &out.grid)?;
    let last = flow::flow(&h, t_end)?;
    Ok(json!({
        "d": d,
        "t_end": t_end,
        "steps": steps,
        "final_matrix": mat_json(last.s.matrix()),
        "final_norm": out.grid.norm_l2(),
        "warnings": warnings_json(&out.warnings),
        "trajectory": traj,
        "state": state,
    }))
}

fn sweep(ctx: &Ctx, kind: SweepKind, a: f64, b: f64, from: f64, to: f64, steps: usize) -> Res<Value> {
    let mut csv = String::from("param,criterion,max_eigenvalue,status\n");
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for k in 0..steps {
        let p = if steps == 1 { from } else { from + (to - from) * k as f64 / (steps - 1) as f64 };
        let (crit, status, lmax) = match kind {
            SweepKind::Frft => {
                // one-dimensional FrFT by angle p
                let s = SymplecticMatrix::fractional_fourier(&[p]);
                let crit = a * b * p.sin().powi(2);
                match DecayCertificate::isotropic_for(&s, a, b, s.rank_tol(ctx.tol.tol_rank)) {
                    Ok(cert) => {
                        let v = hardy::classify(&cert, &s, &ctx.tol);
                        (crit, format!("{:?}", v.status), v.max_eigenvalue)
                    }
                    Err(_) => (crit, "DegenerateTime".to_string(), None),
                }
            }
            SweepKind::Oscillator => {
                let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
                let cert = DecayCertificate::new(diag(&[0.0, a]), diag(&[0.0, b]), 1.0, 1.0)?;
                let crit = a * b * p.sin().powi(2);
                match flow::dynamical_hardy_check(&cert, &h, p, &ctx.tol) {
                    Ok(v) => (crit, format!("{:?}", v.status), v.max_eigenvalue),
                    Err(MpkError::DegenerateTime { .. }) => (crit, "DegenerateTime".to_string(), None),
                    Err(e) => return Err(e.into()),
                }
            }
        };
        *counts.entry(status.clone()).or_default() += 1;
        let l = lmax.map(|v| format!("{v:.16e}")).unwrap_or_default();
        csv.push_str(&format!("{p:.16e},{crit:.16e},{l},{status}\n"));
    }
    let artifact = ctx.write("sweep.csv", csv.as_bytes())?;
    if ctx.c.format == Format::Csv && artifact.is_none() {
        let _ = std::io::stdout().write_all(csv.as_bytes());
        return Ok(Value::Null);
    }
    Ok(json!({ "kind": format!("{kind:?}").to_lowercase(), "rows": steps, "counts": counts, "artifact": artifact }))
}

fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&linalg::Vector::from_column_slice(v))
}

fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    }
}

fn rank_one_example() -> SymplecticMatrix {
    let e = Mat::from_row_slice(2, 2, &[-1.0, 2.0, -1.0, 1.0]);
    SymplecticMatrix::dilation(&e).unwrap().compose(&SymplecticMatrix::partial_fourier(&[false, true])).unwrap()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

fn demo(ctx: &Ctx, name: DemoName, p: &DemoParams) -> Res<Value> {
    let (n, l) = (ctx.c.n, ctx.c.l);
    match name {
        DemoName::RankOneExample => {
            let s = rank_one_example();
            let f = GridFunction::from_fn(2, n, l, |x| C64::new(bump(x[0]) * (-2.0 * PI * x[1] * x[1]).exp(), 0.0))?;
            let out = apply_metaplectic(&s, &f, &ctx.tol)?;
            let got = out.grid.modulus();
            let shape: Vec<f64> = (0..f.len())
                .map(|i| {
                    let q = f.point(i);
                    bump(-q[0] + 2.0 * q[1]) * (-PI * (-q[0] + q[1]).powi(2) / 2.0).exp()
                })
                .collect();
            let half: Vec<f64> = shape.iter().map(|v| 0.5 * v).collect();
            let unit: Vec<f64> = shape.iter().map(|v| v / 2f64.sqrt()).collect();
            let (e_half, e_unit) = (rel_l2(&got, &half), rel_l2(&got, &unit));
            let artifact = ctx.write_grid("example_1_4_output", &out.grid)?;
            Ok(json!({
                "demo": "example-1-4",
                "n": n, "L": l,
                "rank_b": s.rank_b(s.default_rank_tol()),
                "mu_s": mu_s(&s, s.default_rank_tol())?,
                "rel_l2_vs_half_amplitude": e_half,
                "rel_l2_vs_unitary_amplitude": e_unit,
                "half_amplitude_within_1e-3": e_half < 1e-3,
                "unitary_amplitude_within_1e-3": e_unit < 1e-3,
                "norm_ratio": out.grid.norm_l2() / f.norm_l2(),
                "note": "the 1/2 amplitude is not norm preserving; the unitary amplitude is 1/sqrt(2)",
                "warnings": warnings_json(&out.warnings),
                "artifact": artifact,
            }))
        }
        DemoName::SharpnessRankOne => {
            let r = hardy::sharpness_witness(&rank_one_example(), 1.0, n, l, &ctx.tol)?;
            let input = ctx.write_grid("sharpness_input", &r.input)?;
            let output = ctx.write_grid("sharpness_output", &r.output)?;
            let dil = SymplecticMatrix::dilation(&Mat::from_row_slice(2, 2, &[1.5, 0.2, 0.0, 0.8]))?;
            let r0 = hardy::sharpness_witness(&dil, 2.0, n.max(512), l, &ctx.tol)?;
            Ok(json!({
                "demo": "sharpness-1-4",
                "rank_b": r.rank,
                "outside_fraction": r.outside_fraction,
                "below_1e-2": r.outside_fraction < 1e-2,
                "b_zero_outside_fraction": r0.outside_fraction,
                "b_zero_below_1e-10": r0.outside_fraction < 1e-10,
                "warnings": warnings_json(&r.warnings),
                "artifacts": [input, output],
            }))
        }
        DemoName::ClassicalHardy => {
            let s = SymplecticMatrix::standard_j(1);
            let cert = DecayCertificate::new(diag(&[p.a]), diag(&[p.b]), 1.0, 1.0)?;
            let v = hardy::classify(&cert, &s, &ctx.tol);
            let mut out = json!({
                "demo": "classical-hardy",
                "a": p.a, "b": p.b, "ab": p.a * p.b,
                "verdict": v.status,
                "max_eigenvalue": v.max_eigenvalue,
            });
            if v.status == VerdictStatus::Extremal {
                let f = hardy::extremal_function(&s, &diag(&[p.a]), |_| C64::new(1.0, 0.0), 1, n, l, PhaseConvention::AsStated, &ctx.tol)?;
                let want = GridFunction::from_fn(1, n, l, |x| C64::new((-PI * p.a * x[0] * x[0]).exp(), 0.0))?;
                out["witness"] = json!(format!("exp(-pi*{}*|x|^2)", p.a));
                out["witness_rel_l2"] = json!(mpk::grid::relative_l2_up_to_phase(f.samples(), want.samples()));
                out["artifact"] = json!(ctx.write_grid("classical_witness", &f)?);
            }
            Ok(out)
        }
        DemoName::FrftCorollary => {
            let s = SymplecticMatrix::fractional_fourier(&p.theta);
            let d = p.theta.len();
            let cert = DecayCertificate::isotropic_for(&s, p.a, p.b, s.rank_tol(ctx.tol.tol_rank))?;
            let v = hardy::classify(&cert, &s, &ctx.tol);
            let per_axis: Vec<f64> = p.theta.iter().map(|t| p.a * p.b * t.sin().powi(2)).collect();
            Ok(json!({
                "demo": "frft-corollary",
                "d": d,
                "theta": p.theta,
                "ab_sin2": per_axis,
                "verdict": v.status,
                "eigenvalues": v.eigenvalues,
                "notes": v.notes,
            }))
        }
        DemoName::AnisotropicOscillator => {
            let h = QuadraticHamiltonian::anisotropic_oscillator_2d();
            let cert = DecayCertificate::new(diag(&[0.0, p.a]), diag(&[0.0, p.b]), 1.0, 1.0)?;
            let fs = flow::flow(&h, p.t1)?;
            let (c, s) = (p.t1.cos(), p.t1.sin());
            let want = Mat::from_row_slice(4, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, c, 0.0, s, 0.0, 0.0, 1.0, 0.0, 0.0, -s, 0.0, c]);
            let block_err = (fs.s.matrix() - want).amax();
            let v = flow::dynamical_hardy_check(&cert, &h, p.t1, &ctx.tol)?;
            let mut out = json!({
                "demo": "anisotropic-oscillator",
                "a": p.a, "b": p.b, "t1": p.t1,
                "ab_sin2_t1": p.a * p.b * s * s,
                "flow_block_error": block_err,
                "verdict": v.status,
                "eigenvalues": v.eigenvalues,
            });
            if v.status == VerdictStatus::Extremal {
                let f = hardy::extremal_function(
                    &fs.s,
                    &cert.m,
                    |w| C64::new((-PI * w[0] * w[0]).exp(), 0.0),
                    2,
                    n.min(128),
                    l,
                    PhaseConvention::AsStated,
                    &ctx.tol,
                )?;
                out["artifact"] = json!(ctx.write_grid("anisotropic_extremal", &f)?);
            }
            Ok(out)
        }
        DemoName::HarmonicOscillator => {
            let h = QuadraticHamiltonian::harmonic_oscillator(&p.omega, 1.0)?;
            let d = p.omega.len();
            let mut err: f64 = 0.0;
            for k in 0..=100 {
                let t = 2.0 * PI * k as f64 / 100.0;
                let fs = flow::flow(&h, t)?;
                let (a, b, c, dd) = flow::oscillator_blocks(&p.omega, 1.0, t);
                let got = fs.blocks();
                err = err.max((got.0 - a).amax()).max((got.1 - b).amax()).max((got.2 - c).amax()).max((got.3 - dd).amax());
            }
            // the ground state is stationary up to phase
            let dims = if d == 1 { (n, l) } else { (n.min(64), l.min(5.0)) };
            let u0 = GridFunction::from_fn(d, dims.0, dims.1, |x| {
                C64::new(x.iter().zip(&p.omega).map(|(v, w)| (-PI * w * v * v).exp()).product::<f64>(), 0.0)
            })?;
            let ut = flow::propagate(&u0, &h, p.t1, &ctx.tol)?;
            let stationary = mpk::grid::relative_l2_modulus(ut.grid.samples(), u0.samples());
            Ok(json!({
                "demo": "harmonic-oscillator",
                "omega": p.omega,
                "closed_form_block_error": err,
                "t1": p.t1,
                "ground_state_modulus_drift": stationary,
                "warnings": warnings_json(&ut.warnings),
            }))
        }
        DemoName::KnutsenComparison => {
            let d = p.omega.len();
            let h = QuadraticHamiltonian::harmonic_oscillator(&p.omega, KNUTSEN_MASS)?;
            let cert = DecayCertificate::new(
                Mat::identity(d, d) * (p.alpha / PI),
                Mat::identity(d, d) * (p.beta / PI),
                1.0,
                1.0,
            )?;
            let r = flow::knutsen_comparison(&cert, &h, p.t1, &ctx.tol)?;
            let crit = 16.0 * p.alpha * p.beta * p.omega.iter().map(|w| ((w * p.t1).sin() / w).powi(2)).fold(0.0, f64::max);
            Ok(json!({
                "demo": "knutsen-comparison",
                "omega": p.omega, "alpha": p.alpha, "beta": p.beta, "t1": p.t1,
                "closed_form_criterion": crit,
                "report": r,
            }))
        }
    }
}

fn run(cli: Cli) -> Res<Value> {
    let ctx = Ctx::new(cli.common)?;
    match &cli.command {
        Command::Sympcheck => sympcheck(&ctx),
        Command::Apply { grid } => apply(&ctx, grid),
        Command::Wigner { grid, dim } => wigner_cmd(&ctx, grid, *dim),
        Command::Hardy { cert, a, b } => hardy_cmd(&ctx, cert, *a, *b),
        Command::Evolve { t_end, steps, cert, grid } => evolve(&ctx, *t_end, *steps, cert, grid),
        Command::Demo { name, p } => demo(&ctx, *name, p),
        Command::Sweep { kind, a, b, from, to, steps } => sweep(&ctx, *kind, *a, *b, *from, *to, *steps),
    }
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("Usage", e.to_string().trim().to_string(), 1);
        }
    };
    if let Some(t) = std::env::var("MPK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
    match run(cli) {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(v) => {
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).unwrap());
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(m)) => fail("Usage", m, 1),
        Err(Failure::Mpk(e)) => fail(e.kind(), e.to_string(), if e.is_numerical_guard() { 2 } else { 1 }),
    }
}
