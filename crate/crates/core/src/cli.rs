//! `vacfric` command-line front end.
//!
//! Data goes to stdout or `--output`; diagnostics go to stderr. Exit codes:
//! 0 success, 1 self-test failure, 2 invalid input, 3 numerical guard.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::{json, Value};

use crate::dynamics::{
    integrate_scenario, mass_defect, mass_excess_analytic, sci, velocity_excess_analytic, Branch, DecayScenario,
};
use crate::error::{Error, Result};
use crate::force::{
    friction_force, friction_force_montecarlo, friction_force_quadrature_primed,
    friction_force_quadrature_unprimed, naive_doppler_force, ForceMethod, ForceResult, McSpec,
};
use crate::kinematics::{Direction, Tier, Vec3, Velocity};
use crate::pattern::{dipole_decay_rate, AngularDensity, DipoleMoment, EmissionPattern, TabulatedDensity};
use crate::quadrature::QuadratureSpec;
use crate::trap::{feasibility_report, human_duration, IonCatalog, IonSpec, TrapSpec, PUBLISHED_YB_EPSILON};
use crate::validation;

pub const SCHEMA_VERSION: &str = "1";

pub const EXIT_SELFTEST_FAILED: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "vacfric", version, about = "Recoil force, mass loss and trap-frequency shift of a decaying emitter")]
pub struct Cli {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for every random draw; a fresh one is chosen and reported if omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = TierArg::FirstOrder)]
    pub tier: TierArg,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TierArg {
    FirstOrder,
    Exact,
}

impl From<TierArg> for Tier {
    fn from(t: TierArg) -> Tier {
        match t {
            TierArg::FirstOrder => Tier::FirstOrder,
            TierArg::Exact => Tier::Exact,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Friction force on a moving excited emitter.
    Force(ForceArgs),
    /// Trajectory of mass or velocity through the decay.
    Decay(DecayArgs),
    /// Trapped-ion feasibility report.
    Trap(TrapArgs),
    /// Tabulate outputs over one parameter.
    Sweep(SweepArgs),
    /// Run the acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TransitionArgs {
    /// Transition frequency nu0 in THz.
    #[arg(long, conflicts_with = "omega0_rad_s")]
    pub nu0_thz: Option<f64>,

    /// Transition angular frequency omega0 in rad/s.
    #[arg(long)]
    pub omega0_rad_s: Option<f64>,

    /// Total decay rate Gamma in 1/s.
    #[arg(long, conflicts_with = "dipole_cm")]
    pub gamma_per_s: Option<f64>,

    /// Transition dipole moment in C*m; sets Gamma.
    #[arg(long)]
    pub dipole_cm: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MotionArgs {
    /// Speed as a fraction of c.
    #[arg(long, conflicts_with = "v0_mps")]
    pub beta: Option<f64>,

    /// Speed in m/s.
    #[arg(long, alias = "v0")]
    pub v0_mps: Option<f64>,

    /// Direction of motion as "x,y,z".
    #[arg(long, default_value = "0,0,1")]
    pub direction: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternArg {
    Isotropic,
    Dipole,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Unprimed,
    Primed,
    Mc,
    Naive,
}

#[derive(Debug, Clone, Args)]
pub struct PatternArgs {
    #[arg(long, value_enum, default_value_t = PatternArg::Isotropic)]
    pub pattern: PatternArg,

    /// Dipole axis as "x,y,z".
    #[arg(long, default_value = "0,0,1")]
    pub dipole_axis: String,

    /// Tabulated pattern CSV (cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight).
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NumericsArgs {
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,

    /// Draw independent directions instead of +n/-n pairs.
    #[arg(long)]
    pub no_antithetic: bool,

    #[arg(long, default_value_t = QuadratureSpec::DEFAULT_N_COS)]
    pub n_cos: usize,

    #[arg(long, default_value_t = QuadratureSpec::DEFAULT_N_PHI)]
    pub n_phi: usize,

    /// Worker threads for Monte Carlo; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ForceArgs {
    #[command(flatten)]
    pub transition: TransitionArgs,
    #[command(flatten)]
    pub motion: MotionArgs,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[command(flatten)]
    pub numerics: NumericsArgs,

    /// Time since excitation in s.
    #[arg(long, default_value_t = 0.0)]
    pub t_s: f64,

    #[arg(long, value_enum, default_value_t = MethodArg::Closed, conflicts_with = "compare")]
    pub method: MethodArg,

    /// Run every method and report the naive/correct ratio.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    ConstantMass,
    ConstantVelocity,
}

#[derive(Debug, Clone, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub transition: TransitionArgs,
    #[command(flatten)]
    pub motion: MotionArgs,

    #[arg(long, value_enum)]
    pub branch: BranchArg,

    /// Take mass and transition from the ion catalog.
    #[arg(long)]
    pub ion: Option<String>,

    /// Ion catalog CSV replacing the built-in one.
    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Emitter mass in atomic mass units.
    #[arg(long)]
    pub mass_u: Option<f64>,

    /// Step as a fraction of the lifetime, Gamma*dt.
    #[arg(long, default_value_t = 1e-3)]
    pub gamma_dt: f64,

    /// Integration span in lifetimes.
    #[arg(long, default_value_t = 10.0)]
    pub lifetimes: f64,

    /// Write every n-th step.
    #[arg(long, default_value_t = 100)]
    pub every: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrapArgs {
    #[arg(long, default_value = "yb171")]
    pub ion: String,

    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Ground-state trap frequency in MHz.
    #[arg(long, conflicts_with = "stiffness_n_per_m")]
    pub trap_mhz: Option<f64>,

    /// Trap stiffness kappa in N/m.
    #[arg(long)]
    pub stiffness_n_per_m: Option<f64>,

    /// Use the published mass shift ratio 1.36e-11 instead of the constants.
    #[arg(long, alias = "paper-epsilon")]
    pub published_epsilon: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVar {
    Beta,
    Omega0,
    Gamma,
    TrapFrequency,
    Samples,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long = "var", value_enum)]
    pub var: SweepVar,

    /// First value, in the variable's unit (beta, rad/s, 1/s, MHz, count).
    #[arg(long)]
    pub from: f64,

    #[arg(long)]
    pub to: f64,

    /// Number of points; a zero-length range gives one row.
    #[arg(long, default_value_t = 11)]
    pub points: usize,

    /// Space points geometrically.
    #[arg(long)]
    pub log: bool,

    #[command(flatten)]
    pub transition: TransitionArgs,
    #[command(flatten)]
    pub motion: MotionArgs,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[command(flatten)]
    pub numerics: NumericsArgs,

    #[arg(long, default_value_t = 0.0)]
    pub t_s: f64,

    /// Ion for trap-frequency sweeps.
    #[arg(long, default_value = "yb171")]
    pub ion: String,

    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Use the published mass shift ratio 1.36e-11 instead of the constants.
    #[arg(long, alias = "paper-epsilon")]
    pub published_epsilon: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Run a single criterion.
    #[arg(long)]
    pub criterion: Option<u8>,
}

/// Defaults: the 171Yb+ octupole line.
const DEFAULT_NU0_THZ: f64 = 642.0;
const DEFAULT_GAMMA: f64 = 1.0;
const DEFAULT_BETA: f64 = 1e-3;

/// Tabular or document output with a metadata header.
struct Report {
    meta: Vec<(String, Value)>,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    extra: Vec<(String, Value)>,
}

#[derive(Debug, Clone)]
enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sci(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

impl Report {
    fn new(command: &str, seed: u64, tier: Tier) -> Self {
        Report {
            meta: vec![
                ("schema_version".into(), json!(SCHEMA_VERSION)),
                ("command".into(), json!(command)),
                ("seed".into(), json!(seed)),
                ("tier".into(), json!(tier.as_str())),
            ],
            columns: Vec::new(),
            rows: Vec::new(),
            extra: Vec::new(),
        }
    }

    fn meta(&mut self, key: &str, value: Value) {
        self.meta.push((key.into(), value));
    }

    /// Summary values: `#` lines in CSV, top-level keys in JSON.
    fn extra(&mut self, key: &str, value: Value) {
        self.extra.push((key.into(), value));
    }

    fn columns(&mut self, cols: &[&str]) {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
    }

    fn write(&self, format: Format, w: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                for (k, v) in self.meta.iter().chain(&self.extra) {
                    writeln!(w, "# {k}: {}", value_text(v))?;
                }
                if !self.columns.is_empty() {
                    writeln!(w, "{}", self.columns.join(","))?;
                    for r in &self.rows {
                        let line: Vec<String> = r.iter().map(Cell::csv).collect();
                        writeln!(w, "{}", line.join(","))?;
                    }
                }
            }
            Format::Json => {
                let mut doc = serde_json::Map::new();
                for (k, v) in self.meta.iter().chain(&self.extra) {
                    doc.insert(k.clone(), v.clone());
                }
                if !self.columns.is_empty() {
                    let rows: Vec<Value> = self
                        .rows
                        .iter()
                        .map(|r| {
                            let obj: serde_json::Map<String, Value> =
                                self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                            Value::Object(obj)
                        })
                        .collect();
                    doc.insert("rows".into(), Value::Array(rows));
                }
                serde_json::to_writer_pretty(&mut *w, &Value::Object(doc)).map_err(io::Error::other)?;
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if !n.is_i64() && !n.is_u64() => sci(x),
            _ => n.to_string(),
        },
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

fn parse_vec3(s: &str, what: &str) -> Result<Vec3> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Domain(format!("{what} '{s}': {e}")))?;
    match parts[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(Error::Domain(format!("{what} '{s}' must have three components"))),
    }
}

fn parse_direction(s: &str, what: &str) -> Result<Direction> {
    let v = parse_vec3(s, what)?;
    Direction::new(v.x, v.y, v.z)
}

impl TransitionArgs {
    fn omega0(&self, fallback: Option<f64>) -> Result<f64> {
        let w = match (self.nu0_thz, self.omega0_rad_s) {
            (Some(nu), _) => 2.0 * PI * nu * 1e12,
            (None, Some(w)) => w,
            (None, None) => fallback.unwrap_or(2.0 * PI * DEFAULT_NU0_THZ * 1e12),
        };
        if w.is_finite() && w > 0.0 {
            Ok(w)
        } else {
            Err(Error::Domain(format!("transition angular frequency {w} rad/s must be positive")))
        }
    }

    /// Gamma and where it came from.
    fn gamma(&self, omega0: f64, fallback: Option<f64>) -> Result<(f64, &'static str)> {
        let (g, source) = match (self.gamma_per_s, self.dipole_cm) {
            (Some(g), _) => (g, "flag"),
            (None, Some(d)) => (dipole_decay_rate(omega0, DipoleMoment::new(d)?)?, "dipole moment"),
            (None, None) => match fallback {
                Some(g) => (g, "ion lifetime"),
                None => (DEFAULT_GAMMA, "default"),
            },
        };
        if g.is_finite() && g > 0.0 {
            Ok((g, source))
        } else {
            Err(Error::Domain(format!("decay rate {g} 1/s must be positive")))
        }
    }
}

impl MotionArgs {
    fn velocity(&self, default_beta: f64) -> Result<Velocity> {
        let dir = parse_direction(&self.direction, "--direction")?;
        match (self.beta, self.v0_mps) {
            (_, Some(v)) => {
                if !(v >= 0.0) {
                    return Err(Error::Domain(format!("--v0-mps {v} must be non-negative")));
                }
                Velocity::from_vec(dir.vec() * v)
            }
            (b, None) => Velocity::from_beta(b.unwrap_or(default_beta), dir),
        }
    }
}

impl PatternArgs {
    fn build(&self, omega0: f64, gamma: f64) -> Result<EmissionPattern> {
        let angular = match self.pattern {
            PatternArg::Isotropic => AngularDensity::Isotropic,
            PatternArg::Dipole => AngularDensity::dipole(parse_direction(&self.dipole_axis, "--dipole-axis")?),
            PatternArg::Table => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Domain("--pattern table needs --table PATH".into()))?;
                AngularDensity::Tabulated(TabulatedDensity::from_csv_path(path)?)
            }
        };
        EmissionPattern::new(omega0, gamma, angular)
    }
}

impl NumericsArgs {
    fn quadrature(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.n_cos, self.n_phi)
    }

    fn mc(&self, seed: u64) -> Result<McSpec> {
        McSpec::new(self.samples, seed, !self.no_antithetic)
    }
}

fn load_catalog(path: &Option<PathBuf>) -> Result<IonCatalog> {
    match path {
        Some(p) => IonCatalog::from_csv_path(p),
        None => Ok(IonCatalog::builtin()),
    }
}

fn run_method(
    m: MethodArg,
    p: &EmissionPattern,
    v: Velocity,
    t: f64,
    num: &NumericsArgs,
    seed: u64,
    tier: Tier,
) -> Result<ForceResult> {
    match m {
        MethodArg::Closed => friction_force(p, v, t),
        MethodArg::Unprimed => friction_force_quadrature_unprimed(p, v, t, num.quadrature()?, tier),
        MethodArg::Primed => friction_force_quadrature_primed(p, v, t, num.quadrature()?, tier),
        MethodArg::Mc => friction_force_montecarlo(p, v, t, num.mc(seed)?, tier),
        MethodArg::Naive => naive_doppler_force(p, v, t),
    }
}

fn force_row(r: &ForceResult) -> Vec<Cell> {
    vec![
        Cell::Text(r.method.as_str().into()),
        r.tier.map_or(Cell::Empty, |t| Cell::Text(t.as_str().into())),
        Cell::Num(r.force.x),
        Cell::Num(r.force.y),
        Cell::Num(r.force.z),
        Cell::Num(r.stderr.x),
        Cell::Num(r.stderr.y),
        Cell::Num(r.stderr.z),
        Cell::Int(r.samples),
    ]
}

fn cmd_force(a: &ForceArgs, seed: u64, tier: Tier) -> Result<Report> {
    let omega0 = a.transition.omega0(None)?;
    let (gamma, gamma_source) = a.transition.gamma(omega0, None)?;
    let p = a.pattern.build(omega0, gamma)?;
    let v = a.motion.velocity(DEFAULT_BETA)?;
    let mut rep = Report::new("force", seed, tier);
    rep.meta("omega0_rad_s", json!(omega0));
    rep.meta("gamma_per_s", json!(gamma));
    rep.meta("gamma_source", json!(gamma_source));
    rep.meta("pattern", json!(p.angular().kind()));
    rep.meta("beta", json!(v.beta()));
    rep.meta("t_s", json!(a.t_s));
    rep.columns(&["method", "tier", "fx_n", "fy_n", "fz_n", "stderr_x_n", "stderr_y_n", "stderr_z_n", "samples"]);
    let methods: Vec<MethodArg> = if a.compare {
        let mut all = vec![MethodArg::Closed, MethodArg::Unprimed, MethodArg::Primed, MethodArg::Mc];
        if p.is_isotropic() {
            all.push(MethodArg::Naive);
        }
        all
    } else {
        vec![a.method]
    };
    let mut results = Vec::new();
    for m in methods {
        let r = run_method(m, &p, v, a.t_s, &a.numerics, seed, tier)?;
        rep.rows.push(force_row(&r));
        results.push(r);
    }
    if a.compare {
        let find = |m: ForceMethod| results.iter().find(|r| r.method == m).map(|r| r.force);
        let ratio = match (find(ForceMethod::Naive), find(ForceMethod::ClosedForm)) {
            (Some(n), Some(c)) if c.norm() > 0.0 => json!(n.dot(c) / c.dot(c)),
            _ => Value::Null,
        };
        rep.extra("naive_to_correct_ratio", ratio);
    }
    Ok(rep)
}

fn cmd_decay(a: &DecayArgs, seed: u64, tier: Tier) -> Result<Report> {
    let ion: Option<IonSpec> = match &a.ion {
        Some(name) => Some(load_catalog(&a.catalog)?.get(name)?),
        None => None,
    };
    let omega0 = a.transition.omega0(ion.as_ref().map(IonSpec::omega0))?;
    let lifetime_gamma = ion.as_ref().and_then(|i| match i.lifetime() {
        crate::trap::Lifetime::Finite(tau) => Some(1.0 / tau),
        crate::trap::Lifetime::EffectivelyInfinite => None,
    });
    let (gamma, gamma_source) = a.transition.gamma(omega0, lifetime_gamma)?;
    let mass = match (a.mass_u, &ion) {
        (Some(u), _) => u * crate::constants::AMU,
        (None, Some(i)) => i.mass(),
        (None, None) => return Err(Error::Domain("decay needs --ion or --mass-u".into())),
    };
    let v = a.motion.velocity(DEFAULT_BETA)?;
    let branch = match a.branch {
        BranchArg::ConstantMass => Branch::ConstantMass,
        BranchArg::ConstantVelocity => Branch::ConstantVelocity,
    };
    let s = DecayScenario::new(branch, omega0, gamma, mass, v)?;
    if !(a.gamma_dt.is_finite() && a.gamma_dt > 0.0 && a.lifetimes.is_finite() && a.lifetimes > 0.0) {
        return Err(Error::Domain("--gamma-dt and --lifetimes must be positive".into()));
    }
    if a.every == 0 {
        return Err(Error::Domain("--every must be at least 1".into()));
    }
    let n_steps = (a.lifetimes / a.gamma_dt).round().max(1.0) as usize;
    let tr = integrate_scenario(&s, a.gamma_dt / gamma, n_steps)?;

    let mut rep = Report::new("decay", seed, tier);
    rep.meta("branch", json!(branch.as_str()));
    rep.meta("omega0_rad_s", json!(omega0));
    rep.meta("gamma_per_s", json!(gamma));
    rep.meta("gamma_source", json!(gamma_source));
    rep.meta("mass_kg", json!(mass));
    rep.meta("epsilon", json!(s.epsilon()));
    rep.meta("step_s", json!(tr.step));
    rep.meta("coarse_step", json!(tr.coarse_step));
    match branch {
        Branch::ConstantVelocity => {
            rep.extra("mass_change_at_infinity_kg", json!(mass_excess_analytic(&s, f64::INFINITY)?));
            rep.extra("mass_defect_kg", json!(mass_defect(omega0)));
        }
        Branch::ConstantMass => {
            let dv = velocity_excess_analytic(&s, f64::INFINITY)?;
            let ratio_minus_one = if v.speed() > 0.0 {
                json!(dv.dot(v.vec()) / v.vec().dot(v.vec()))
            } else {
                json!(0.0)
            };
            rep.extra("speed_ratio_at_infinity_minus_one", ratio_minus_one);
            rep.extra("expected_exp_minus_epsilon_minus_one", json!((-s.epsilon()).exp_m1()));
        }
    }
    rep.columns(&["t_s", "mass_excess_kg", "vx_mps", "vy_mps", "vz_mps", "excited_prob"]);
    let last = tr.samples.len() - 1;
    for (i, smp) in tr.samples.iter().enumerate() {
        if i % a.every != 0 && i != last {
            continue;
        }
        let vi = tr.velocity_at(i);
        rep.rows.push(vec![
            Cell::Num(smp.time),
            Cell::Num(smp.mass_excess),
            Cell::Num(vi.x),
            Cell::Num(vi.y),
            Cell::Num(vi.z),
            Cell::Num(smp.excited_prob),
        ]);
    }
    Ok(rep)
}

fn trap_spec(mhz: Option<f64>, kappa: Option<f64>) -> Result<TrapSpec> {
    match (mhz, kappa) {
        (Some(f), _) => TrapSpec::ground_frequency(f * 1e6),
        (None, Some(k)) => TrapSpec::stiffness(k),
        (None, None) => Err(Error::Domain("trap needs --trap-mhz or --stiffness-n-per-m".into())),
    }
}

fn trap_ion(name: &str, catalog: &Option<PathBuf>, published_epsilon: bool) -> Result<IonSpec> {
    let ion = load_catalog(catalog)?.get(name)?;
    if published_epsilon {
        ion.with_epsilon(PUBLISHED_YB_EPSILON)
    } else {
        Ok(ion)
    }
}

fn cmd_trap(a: &TrapArgs, seed: u64, tier: Tier) -> Result<Report> {
    let ion = trap_ion(&a.ion, &a.catalog, a.published_epsilon)?;
    let trap = trap_spec(a.trap_mhz, a.stiffness_n_per_m)?;
    let r = feasibility_report(trap, &ion)?;
    let mut rep = Report::new("trap", seed, tier);
    rep.meta("ion", json!(ion.name));
    rep.meta("mass_kg", json!(ion.mass()));
    rep.meta("transition_hz", json!(ion.transition_frequency()));
    rep.meta("kappa_n_per_m", json!(trap.kappa(ion.mass())));
    let report = serde_json::to_value(&r).map_err(|e| Error::Domain(e.to_string()))?;
    rep.extra("report", report);
    rep.extra("separation_time_human", json!(human_duration(r.separation_time)));
    rep.extra("exact_separation_time_human", json!(human_duration(r.exact.separation_time)));
    rep.extra(
        "lifetime_human",
        json!(match ion.lifetime() {
            crate::trap::Lifetime::Finite(t) => human_duration(t),
            crate::trap::Lifetime::EffectivelyInfinite => human_duration(f64::INFINITY),
        }),
    );
    rep.columns(&["quantity", "first_order", "exact"]);
    let pairs = [
        ("epsilon", r.epsilon, r.epsilon),
        ("omega_ground_rad_s", r.omega_ground, r.omega_ground),
        ("omega_excited_rad_s", r.omega_excited, r.exact.omega_excited),
        ("delta_omega_rad_s", r.delta_omega, r.exact.delta_omega),
        ("separation_time_s", r.separation_time, r.exact.separation_time),
        ("period_count", r.period_count, r.exact.period_count),
    ];
    for (q, f, e) in pairs {
        rep.rows.push(vec![Cell::Text(q.into()), Cell::Num(f), Cell::Num(e)]);
    }
    Ok(rep)
}

fn sweep_points(a: &SweepArgs) -> Result<Vec<f64>> {
    if !(a.from.is_finite() && a.to.is_finite()) {
        return Err(Error::Domain("sweep range must be finite".into()));
    }
    if a.points == 0 {
        return Err(Error::Domain("--points must be at least 1".into()));
    }
    if a.from == a.to || a.points == 1 {
        return Ok(vec![a.from]);
    }
    if a.log && !(a.from > 0.0 && a.to > 0.0) {
        return Err(Error::Domain("--log needs a positive range".into()));
    }
    let n = a.points - 1;
    Ok((0..=n)
        .map(|i| {
            let f = i as f64 / n as f64;
            if i == n {
                a.to
            } else if a.log {
                (a.from.ln() + f * (a.to.ln() - a.from.ln())).exp()
            } else {
                a.from + f * (a.to - a.from)
            }
        })
        .collect())
}

fn cmd_sweep(a: &SweepArgs, seed: u64, tier: Tier) -> Result<Report> {
    let points = sweep_points(a)?;
    let mut rep = Report::new("sweep", seed, tier);
    rep.meta("variable", json!(format!("{:?}", a.var).to_lowercase()));
    if a.var == SweepVar::TrapFrequency {
        let ion = trap_ion(&a.ion, &a.catalog, a.published_epsilon)?;
        rep.meta("ion", json!(ion.name));
        rep.columns(&["trap_mhz", "epsilon", "period_count", "separation_time_s", "exact_separation_time_s"]);
        for f in points {
            let r = feasibility_report(TrapSpec::ground_frequency(f * 1e6)?, &ion)?;
            rep.rows.push(vec![
                Cell::Num(f),
                Cell::Num(r.epsilon),
                Cell::Num(r.period_count),
                Cell::Num(r.separation_time),
                Cell::Num(r.exact.separation_time),
            ]);
        }
        return Ok(rep);
    }
    let base_omega0 = a.transition.omega0(None)?;
    let (base_gamma, _) = a.transition.gamma(base_omega0, None)?;
    let base_v = a.motion.velocity(DEFAULT_BETA)?;
    let dir = parse_direction(&a.motion.direction, "--direction")?;
    rep.meta("pattern", json!(format!("{:?}", a.pattern.pattern).to_lowercase()));
    rep.columns(&[
        "value",
        "beta",
        "closed_f_par_n",
        "unprimed_f_par_n",
        "primed_f_par_n",
        "naive_f_par_n",
        "mc_f_par_n",
        "mc_stderr_par_n",
        "mc_samples",
    ]);
    for x in points {
        let (mut omega0, mut gamma, mut v, mut samples) = (base_omega0, base_gamma, base_v, a.numerics.samples);
        match a.var {
            SweepVar::Beta => v = Velocity::from_beta(x, dir)?,
            SweepVar::Omega0 => omega0 = x,
            SweepVar::Gamma => gamma = x,
            SweepVar::Samples => samples = x.round() as u64,
            SweepVar::TrapFrequency => unreachable!(),
        }
        let p = a.pattern.build(omega0, gamma)?;
        let mut num = a.numerics.clone();
        num.samples = samples;
        let par = |f: Vec3| f.dot(dir.vec());
        let run = |m| run_method(m, &p, v, a.t_s, &num, seed, tier);
        let closed = run(MethodArg::Closed)?;
        let unprimed = run(MethodArg::Unprimed)?;
        let primed = run(MethodArg::Primed)?;
        let naive = if p.is_isotropic() {
            Cell::Num(par(run(MethodArg::Naive)?.force))
        } else {
            Cell::Empty
        };
        let mc = run(MethodArg::Mc)?;
        rep.rows.push(vec![
            Cell::Num(x),
            Cell::Num(v.beta()),
            Cell::Num(par(closed.force)),
            Cell::Num(par(unprimed.force)),
            Cell::Num(par(primed.force)),
            naive,
            Cell::Num(par(mc.force)),
            Cell::Num(par(Vec3::new(mc.stderr.x.abs(), mc.stderr.y.abs(), mc.stderr.z.abs())).abs()),
            Cell::Int(mc.samples),
        ]);
    }
    Ok(rep)
}

fn cmd_selftest(a: &SelftestArgs, seed: u64, tier: Tier) -> Result<(Report, bool)> {
    let outcomes = match a.criterion {
        Some(id) => vec![validation::run_criterion(id)
            .ok_or_else(|| Error::Domain(format!("no criterion {id}; expected 1 to 9")))?],
        None => validation::run_all(),
    };
    let all_passed = outcomes.iter().all(|o| o.passed);
    let mut rep = Report::new("selftest", seed, tier);
    rep.extra("all_passed", json!(all_passed));
    rep.columns(&["criterion", "title", "passed", "elapsed_s", "limit_s", "detail"]);
    for o in &outcomes {
        eprintln!("{}", o.line());
        rep.rows.push(vec![
            Cell::Int(o.id as u64),
            Cell::Text(o.title.into()),
            Cell::Text(o.passed.to_string()),
            Cell::Num(o.elapsed_s),
            Cell::Num(o.limit_s),
            Cell::Text(format!("\"{}\"", o.detail.replace('"', "'"))),
        ]);
    }
    Ok((rep, all_passed))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    let seed = cli.seed.unwrap_or_else(|| rand::rng().random());
    let tier = Tier::from(cli.tier);
    let threads = match &cli.command {
        Command::Force(a) => a.numerics.threads,
        Command::Sweep(a) => a.numerics.threads,
        _ => None,
    };
    let work = || -> Result<(Report, u8)> {
        Ok(match &cli.command {
            Command::Force(a) => (cmd_force(a, seed, tier)?, 0),
            Command::Decay(a) => (cmd_decay(a, seed, tier)?, 0),
            Command::Trap(a) => (cmd_trap(a, seed, tier)?, 0),
            Command::Sweep(a) => (cmd_sweep(a, seed, tier)?, 0),
            Command::Selftest(a) => {
                let (rep, ok) = cmd_selftest(a, seed, tier)?;
                (rep, if ok { 0 } else { EXIT_SELFTEST_FAILED })
            }
        })
    };
    let (report, code) = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Domain(format!("cannot build worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    report.write(cli.format, &mut out)?;
    out.flush()?;
    Ok(code)
}
