//! Configuration-driven experiment runner behind the `glauber-lab` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{
    self, exact_mixing_time, glauber_matrix, mixing_bound_from_certificate, mixing_bound_from_marginals, Sampler,
};
use crate::error::{Error, Result};
use crate::exact::ExactDistribution;
use crate::factorization::{self, Check, Kind};
use crate::graph::{generators, Graph};
use crate::matching;
use crate::models::{self, critical_fugacity, rational_to_f64, uniqueness_gap, Instance, ModelSpec, TwoSpin};
use crate::optimize::SearchParams;
use crate::simplicial::{build_levels, closed_form};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Enumerate,
    Influence,
    Certificate,
    Factorization,
    Mixing,
    MatchingBounds,
    VerifyAll,
    Sweep,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Enumerate => "enumerate",
            Task::Influence => "influence",
            Task::Certificate => "certificate",
            Task::Factorization => "factorization",
            Task::Mixing => "mixing",
            Task::MatchingBounds => "matching-bounds",
            Task::VerifyAll => "verify-all",
            Task::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "glauber-lab", version, about = "Exact experiments on small spin systems")]
pub struct Cli {
    /// Task to run.
    #[arg(value_enum)]
    pub task: Task,
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    /// Text graph file; relative paths resolve against the configuration file.
    File { path: PathBuf },
    Edges { n: usize, edges: Vec<(usize, usize)> },
    Path { n: usize },
    Cycle { n: usize },
    Star { leaves: usize },
    Complete { n: usize },
    RandomRegular { n: usize, d: usize, seed: u64 },
}

impl GraphSource {
    pub fn build(&self, base: &Path) -> Result<Graph> {
        match self {
            GraphSource::File { path } => {
                let p = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Graph::parse(&text)
            }
            GraphSource::Edges { n, edges } => Graph::new(*n, edges),
            GraphSource::Path { n } => Ok(generators::path(*n)),
            GraphSource::Cycle { n } => generators::cycle(*n),
            GraphSource::Star { leaves } => Ok(generators::star(*leaves)),
            GraphSource::Complete { n } => Ok(generators::complete(*n)),
            GraphSource::RandomRegular { n, d, seed } => generators::random_regular(*n, *d, *seed),
        }
    }
}

/// Size limits applied before any exponential computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Sites of the spin system (edges for monomer-dimer). 12 sites of a
    /// two-spin system need well under 100 MB.
    pub max_sites: usize,
    /// Edges for the exhaustive monomer-dimer pinning sweep (2^m reduced graphs).
    pub max_sweep_edges: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_sites: 12, max_sweep_edges: 15 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Spectral independence against the activity.
    Lambda,
    /// Hard-core critical activity against the maximum degree.
    MaxDegree,
    /// Exact heat-bath block gap against the block size.
    Ell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.stop < self.start {
            return Err(Error::Config("sweep needs step > 0 and stop >= start".into()));
        }
        let k = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        Ok((0..=k).map(|i| self.start + i as f64 * self.step).collect())
    }
}

fn default_epsilon() -> f64 {
    0.25
}
fn default_trials() -> usize {
    20
}
fn default_iterations() -> usize {
    300
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub model: ModelSpec,
    pub graph: GraphSource,
    /// Total-variation target for mixing times.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Block fraction for the comparison pipeline; defaults to `b^2/(12 Delta)`.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Block sizes for factorization; defaults to all.
    #[serde(default)]
    pub ell: Option<Vec<usize>>,
    /// Random functions and search restarts.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Ascent iterations per restart.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported schema {} (expected {SCHEMA_VERSION})", cfg.schema)));
        }
        if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
            return Err(Error::Config(format!("epsilon = {} must lie in (0, 1)", cfg.epsilon)));
        }
        if cfg.trials == 0 || cfg.iterations == 0 {
            return Err(Error::Config("trials and iterations must be positive".into()));
        }
        Ok(cfg)
    }

    fn params(&self, seed: u64) -> SearchParams {
        SearchParams { restarts: self.trials, iterations: self.iterations, seed }
    }
}

/// Result of one task: JSON results, named checks and CSV files.
#[derive(Debug, Default)]
pub struct TaskOutput {
    pub results: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
    pub files: Vec<(String, String)>,
}

impl TaskOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    fn absorb(&mut self, prefix: &str, other: TaskOutput) {
        self.results.insert(prefix.to_string(), Value::Object(other.results));
        for mut c in other.checks {
            c.name = format!("{prefix}: {}", c.name);
            self.checks.push(c);
        }
        self.files.extend(other.files);
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf8")
}

fn num(x: f64) -> String {
    if x.is_finite() { format!("{x}") } else { String::new() }
}

/// An instance together with its exact distribution.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub base: Graph,
    pub instance: Instance,
    pub dist: ExactDistribution,
}

impl Context {
    pub fn new(cfg: ExperimentConfig, seed: u64, config_dir: &Path) -> Result<Self> {
        let base = cfg.graph.build(config_dir)?;
        let instance = cfg.model.instantiate(&base)?;
        let sites = instance.graph.n();
        if sites > cfg.caps.max_sites {
            return Err(Error::InstanceTooLarge(format!(
                "{sites} sites exceed caps.max_sites = {}; use a smaller graph or raise the cap",
                cfg.caps.max_sites
            )));
        }
        let dist = ExactDistribution::enumerate(&instance.graph, &instance.system)?;
        Ok(Context { cfg, seed, base, instance, dist })
    }

    fn params(&self) -> SearchParams {
        self.cfg.params(self.seed)
    }
}

pub fn task_enumerate(ctx: &Context) -> Result<TaskOutput> {
    let d = &ctx.dist;
    let mut out = TaskOutput::default();
    let total: f64 = crate::util::ksum(d.probs().iter().copied());
    out.results.insert("sites".into(), json!(d.n()));
    out.results.insert("q".into(), json!(d.q()));
    out.results.insert("support_size".into(), json!(d.support().len()));
    out.results.insert("partition_function".into(), json!(d.partition_function()));
    out.results.insert("min_probability".into(), json!(d.min_prob()));
    out.results.insert("marginals".into(), to_value(&d.marginals()));
    out.checks.push(Check { name: "probabilities sum to 1".into(), lhs: (total - 1.0).abs(), rhs: 1e-12, holds: (total - 1.0).abs() <= 1e-12 });
    out.files.push(("distribution.csv".into(), d.to_csv()));
    out.files.push(("distribution.json".into(), serde_json::to_string_pretty(&d.to_json()).expect("json") + "\n"));
    Ok(out)
}

pub fn task_influence(ctx: &Context) -> Result<TaskOutput> {
    let d = &ctx.dist;
    let mut out = TaskOutput::default();
    let im = d.influence_matrix()?;
    out.results.insert("lambda_max".into(), json!(im.lambda_max));
    out.results.insert("lambda_max_symmetric".into(), json!(im.symmetric_lambda_max));
    out.results.insert("eigenvalues".into(), to_value(&im.eigenvalues));
    out.checks.push(Check::le("root eigenvalues real", im.max_imag, 1e-8, 0.0));
    out.checks.push(Check::le(
        "root lambda_max agrees with symmetric route",
        (im.lambda_max - im.symmetric_lambda_max).abs(),
        1e-8,
        0.0,
    ));
    match d.spectral_independence() {
        Ok(sr) => {
            out.results.insert("eta".into(), json!(sr.eta));
            out.results.insert("eta_symmetric".into(), json!(sr.eta_symmetric));
            out.results.insert("pinnings_checked".into(), json!(sr.pinnings_checked));
            out.results.insert("argmax_pinning".into(), to_value(&sr.argmax.0));
            out.checks.push(Check::le("eigenvalues real over all pinnings", sr.max_imag, 1e-8, 0.0));
            if let ModelSpec::MonomerDimer { lambda } = &ctx.cfg.model {
                let bound = matching::total_influence_bound(*lambda, ctx.base.max_degree());
                out.results.insert("eta_bound".into(), json!(bound));
                out.checks.push(Check::le("eta <= min{2 lambda Delta, 2 sqrt(1 + lambda Delta)}", sr.eta, bound, 1e-9));
            }
        }
        Err(Error::ComplexEigenvalue(x)) => {
            out.checks.push(Check::le("eigenvalues real over all pinnings", x, 1e-8, 0.0));
        }
        Err(e) => return Err(e),
    }
    let dob = models::dobrushin_check(&ctx.instance.system, &ctx.instance.graph)?;
    out.results.insert("dobrushin".into(), to_value(&dob));
    let rows = im
        .index
        .iter()
        .enumerate()
        .flat_map(|(i, &(u, a))| {
            let m = &im.matrix;
            im.index
                .iter()
                .enumerate()
                .map(move |(j, &(v, b))| vec![u.to_string(), a.to_string(), v.to_string(), b.to_string(), num(m[(i, j)])])
        })
        .collect();
    out.files.push(("influence.csv".into(), csv_string(&["vertex", "spin", "target_vertex", "target_spin", "influence"], rows)));
    Ok(out)
}

pub fn task_certificate(ctx: &Context) -> Result<TaskOutput> {
    let d = &ctx.dist;
    let mut out = TaskOutput::default();
    let cx = build_levels(d)?;
    let n = cx.n();
    let cert = cx.exact_certificate(n)?;
    let b = d.marginal_bound()?.b;
    let eta = d.spectral_independence()?.eta.max(0.0);
    let zeta = cx.local_expansion()?;
    let bk = cx.marginal_bounds()?;
    for (k, &x) in bk.iter().enumerate() {
        out.checks.push(Check::le(&format!("b/(n-k) <= b_{k}"), b / (n - k) as f64, x, 1e-10));
    }
    for (k, &z) in zeta.iter().enumerate() {
        out.checks.push(Check::le(&format!("zeta_{k} <= eta/(n-k-1)"), z, eta / (n - k - 1) as f64, 1e-9));
    }
    let mut contraction = Vec::new();
    let mut variance = Vec::new();
    for r in 0..n {
        let kappa = cert.kappa(r);
        let rep = cx.measured_entropy_contraction(r, n, ctx.cfg.trials, ctx.params())?;
        out.checks.push(Check::le(&format!("kappa({r},{n}) <= observed contraction"), kappa, rep.min_observed(), 1e-9));
        contraction.push(json!({"r": r, "kappa": kappa, "min_random": rep.min_random, "min_adversarial": rep.min_adversarial}));
        let vc = cx.variance_certificate(n, r)?;
        out.checks.push(Check::le(&format!("variance bound <= gap of ({n},{r}) walk"), vc.gap_bound, vc.exact_gap, 1e-9));
        variance.push(to_value(&vc));
    }
    out.results.insert("b".into(), json!(b));
    out.results.insert("eta".into(), json!(eta));
    out.results.insert("certificate".into(), to_value(&cert));
    out.results.insert("contraction".into(), Value::Array(contraction));
    out.results.insert("variance".into(), Value::Array(variance));
    if let Ok(cf) = closed_form(b, eta, n, 1) {
        out.results.insert("closed_form_single_site".into(), to_value(&cf));
    }
    let rows = (0..n)
        .map(|k| {
            vec![
                k.to_string(),
                num(cert.b_k[k]),
                zeta.get(k).map_or(String::new(), |z| num(*z)),
                cert.alpha_k.get(k).map_or(String::new(), |a| num(*a)),
                num(cert.gamma_k[k]),
            ]
        })
        .collect();
    out.files.push(("certificate.csv".into(), csv_string(&["k", "b_k", "zeta_k", "alpha_k", "Gamma_k"], rows)));
    Ok(out)
}

pub fn task_factorization(ctx: &Context) -> Result<TaskOutput> {
    let d = &ctx.dist;
    let mut out = TaskOutput::default();
    let n = d.free_vertices().len();
    let ells = ctx.cfg.ell.clone().unwrap_or_else(|| (1..=n).collect());
    let gap = glauber_matrix(d)?.spectral_gap();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &ell in &ells {
        for kind in [Kind::Entropy, Kind::Variance] {
            let rep = factorization::block_factorization_ratio(d, ell, kind, ctx.params())?;
            rows.push(vec![
                ell.to_string(),
                format!("{kind:?}").to_lowercase(),
                num(rep.c_measured),
                rep.c_certified.map_or(String::new(), num),
            ]);
            for c in &rep.chain {
                let mut c = c.clone();
                c.name = format!("ell={ell} {kind:?}: {}", c.name);
                out.checks.push(c);
            }
            if ell == 1 && kind == Kind::Variance {
                let exact = 1.0 / (n as f64 * gap);
                out.checks.push(Check {
                    name: "variance tensorization equals 1/(n gap)".into(),
                    lhs: (rep.c_measured - exact).abs(),
                    rhs: 1e-4,
                    holds: (rep.c_measured - exact).abs() <= 1e-4,
                });
            }
            reports.push(to_value(&rep));
        }
    }
    out.results.insert("reports".into(), Value::Array(reports));
    let b = d.marginal_bound()?.b;
    let limit = b * b / (12.0 * ctx.instance.graph.max_degree().max(1) as f64);
    let theta = ctx.cfg.theta.unwrap_or(limit);
    let pipe = factorization::comparison_pipeline(d, theta, ctx.cfg.trials, ctx.params())?;
    out.checks.push(Check {
        name: "comparison chain nondecreasing".into(),
        lhs: 0.0,
        rhs: 0.0,
        holds: pipe.chains_hold,
    });
    out.checks.extend(pipe.checks.iter().cloned());
    out.results.insert("pipeline".into(), to_value(&pipe));
    out.files.push(("factorization.csv".into(), csv_string(&["ell", "kind", "measured", "certified"], rows)));
    Ok(out)
}

pub fn task_mixing(ctx: &Context) -> Result<TaskOutput> {
    let d = &ctx.dist;
    let mut out = TaskOutput::default();
    let n = d.free_vertices().len();
    let eps = ctx.cfg.epsilon;
    let chain = glauber_matrix(d)?;
    let rep = exact_mixing_time(&chain, eps)?;
    let cert = build_levels(d)?.exact_certificate(n)?;
    let kappa = cert.kappa(n - 1);
    let b = d.marginal_bound()?.b;
    let c1 = cert.c1_at.unwrap_or(f64::INFINITY);
    let bound_cert = mixing_bound_from_certificate(kappa, rep.min_stationary, eps);
    let bound_tens = mixing_bound_from_marginals(c1, n, b, eps);
    out.checks.push(Check::le("T_mix <= certificate bound", rep.t_mix as f64, bound_cert as f64, 0.0));
    out.checks.push(Check::le("T_mix <= tensorization bound", rep.t_mix as f64, bound_tens as f64, 0.0));
    let params = ctx.params();
    let mlsi = dynamics::mlsi_estimate(&chain, params)?;
    let ls = dynamics::log_sobolev_estimate(&chain, params)?;
    let ls_lower = dynamics::log_sobolev_from_gap(rep.spectral_gap, rep.min_stationary);
    out.checks.push(Check::le("kappa <= modified log-Sobolev estimate", kappa, mlsi, 1e-6));
    out.checks.push(Check::le("gap/(2 + log(1/pi_min)) <= log-Sobolev estimate", ls_lower, ls, 1e-6));
    out.checks.push(Check::le("log-Sobolev estimate <= gap/2", ls, rep.spectral_gap / 2.0, 1e-4));
    out.results.insert("t_mix".into(), json!(rep.t_mix));
    out.results.insert("epsilon".into(), json!(eps));
    out.results.insert("spectral_gap".into(), json!(rep.spectral_gap));
    out.results.insert("min_stationary".into(), json!(rep.min_stationary));
    out.results.insert("kappa".into(), json!(kappa));
    out.results.insert("c1_certified".into(), json!(c1));
    out.results.insert("bound_certificate".into(), json!(bound_cert));
    out.results.insert("bound_tensorization".into(), json!(bound_tens));
    out.results.insert("mlsi_estimate".into(), json!(mlsi));
    out.results.insert("log_sobolev_estimate".into(), json!(ls));
    let rows = rep.distance.iter().enumerate().map(|(t, x)| vec![t.to_string(), num(*x)]).collect();
    out.files.push(("mixing.csv".into(), csv_string(&["t", "distance"], rows)));
    let mut sampler = Sampler::new(
        &ctx.instance.graph,
        &ctx.instance.system,
        d.support()[0].clone(),
        d.free_vertices(),
        ctx.seed,
    )?;
    let mut traj = vec![sampler.state().clone()];
    for _ in 0..rep.t_mix.max(1) {
        sampler.step();
        traj.push(sampler.state().clone());
    }
    out.files.push(("trajectory.csv".into(), dynamics::trajectory_csv(&traj)));
    Ok(out)
}

pub fn task_matching_bounds(ctx: &Context) -> Result<TaskOutput> {
    let ModelSpec::MonomerDimer { lambda } = ctx.cfg.model else {
        return Err(Error::Config("matching-bounds needs the monomer_dimer model".into()));
    };
    let g = &ctx.base;
    let mut out = TaskOutput::default();
    let bound = matching::total_influence_bound(lambda, g.max_degree());
    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for e in 0..g.m() {
        let t = matching::edge_influence_table(g, lambda, e, &vec![None; g.m()])?;
        out.checks.push(Check::le(&format!("row total of edge {e} <= bound"), t.total, bound, 1e-9));
        totals.push(t.total);
        for (f, v) in &t.entries {
            rows.push(vec![e.to_string(), f.to_string(), num(*v)]);
        }
    }
    out.results.insert("bound".into(), json!(bound));
    out.results.insert("row_totals".into(), to_value(&totals));
    if g.m() <= ctx.cfg.caps.max_sweep_edges {
        let sweep = matching::pinning_sweep(g, lambda)?;
        out.checks.push(Check::le("all pinnings: row totals <= bound", sweep.max_row_total, bound, 1e-9));
        out.checks.push(Check::le("all pinnings: eta <= bound", sweep.max_eta, bound, 1e-9));
        out.results.insert("pinning_sweep".into(), to_value(&sweep));
    }
    let mut tree_errors = Vec::new();
    for r in 0..g.n() {
        for e in (0..g.m()).filter(|&e| g.edges()[e].0 == r || g.edges()[e].1 == r) {
            let rep = matching::graph_to_tree_check_uniform(g, r, lambda, e)?;
            tree_errors.push(rep.max_error());
        }
        if g.degree(r) > 0 {
            let x = vec![lambda; g.m()];
            let dc = matching::divisibility_check(g, r, &x)?;
            out.checks.push(Check::le(
                &format!("graph and path-tree ratios agree at root {r}"),
                (dc.graph_ratio - dc.tree_ratio).abs(),
                1e-10 * dc.graph_ratio.max(1.0),
                0.0,
            ));
        }
    }
    let worst = tree_errors.iter().copied().fold(0.0, f64::max);
    out.checks.push(Check::le("graph influences equal path-tree copy sums", worst, 1e-10, 0.0));
    for (v, s, b) in matching::saturation_check(g, lambda)? {
        out.checks.push(Check::le(&format!("saturation of {v} <= lambda Delta/(1 + lambda Delta)"), s, b, 1e-12));
    }
    if g.n() > 0 && g.m() + 1 == g.n() && g.is_connected() {
        for e in 0..g.m() {
            let rep = matching::tree_total_influence_bound(g, lambda, e)?;
            out.checks.push(Check { name: format!("tree bound chain for edge {e}"), lhs: rep.total, rhs: rep.bound, holds: rep.holds(1e-9) });
        }
    }
    out.results.insert("path_tree_max_error".into(), json!(worst));
    out.files.push(("influence_table.csv".into(), csv_string(&["edge", "target", "influence"], rows)));
    Ok(out)
}

pub fn task_verify_all(ctx: &Context) -> Result<TaskOutput> {
    let mut out = TaskOutput::default();
    out.absorb("enumerate", task_enumerate(ctx)?);
    out.absorb("influence", task_influence(ctx)?);
    out.absorb("certificate", task_certificate(ctx)?);
    out.absorb("factorization", task_factorization(ctx)?);
    out.absorb("mixing", task_mixing(ctx)?);
    if matches!(ctx.cfg.model, ModelSpec::MonomerDimer { .. }) {
        out.absorb("matching-bounds", task_matching_bounds(ctx)?);
    }
    Ok(out)
}

/// Smallest activity where the hard-core recursion derivative reaches 1.
fn uniqueness_boundary(max_degree: usize) -> Result<f64> {
    let (mut lo, mut hi) = (1e-9, 1.0);
    let slope = |l: f64| uniqueness_gap(TwoSpin::hardcore(l), max_degree).map(|r| r.max_abs_derivative);
    while slope(hi)? < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn task_sweep(cfg: &ExperimentConfig, seed: u64, config_dir: &Path) -> Result<TaskOutput> {
    let spec = cfg.sweep.clone().ok_or_else(|| Error::Config("sweep task needs a \"sweep\" section".into()))?;
    let grid = spec.grid()?;
    let mut out = TaskOutput::default();
    let mut rows = Vec::new();
    match spec.parameter {
        SweepParameter::Lambda => {
            if cfg.model.lambda().is_none() {
                return Err(Error::Config("lambda sweep needs a model with an activity".into()));
            }
            let base = cfg.graph.build(config_dir)?;
            for &l in &grid {
                let mut c = cfg.clone();
                c.model = cfg.model.with_lambda(l).unwrap();
                let ctx = Context::new(c, seed, config_dir)?;
                let eta = ctx.dist.spectral_independence()?.eta;
                let certified = match cfg.model {
                    ModelSpec::MonomerDimer { .. } => {
                        let b = matching::total_influence_bound(l, base.max_degree());
                        out.checks.push(Check::le(&format!("eta <= bound at lambda = {l}"), eta, b, 1e-9));
                        b
                    }
                    _ => f64::NAN,
                };
                rows.push(vec![num(l), num(eta), num(certified)]);
            }
        }
        SweepParameter::MaxDegree => {
            for &x in &grid {
                let delta = x.round() as usize;
                if delta < 2 {
                    return Err(Error::Config("max_degree sweep starts at 2 or more".into()));
                }
                let exact = rational_to_f64(&critical_fugacity(delta)?);
                let measured = uniqueness_boundary(delta)?;
                out.checks.push(Check::le(
                    &format!("recursion boundary matches critical activity at Delta = {delta}"),
                    (measured - exact).abs(),
                    1e-9 * exact,
                    0.0,
                ));
                rows.push(vec![delta.to_string(), num(measured), num(exact)]);
            }
        }
        SweepParameter::Ell => {
            let ctx = Context::new(cfg.clone(), seed, config_dir)?;
            let n = ctx.dist.free_vertices().len();
            let cx = build_levels(&ctx.dist)?;
            let mut last = 0.0;
            for &x in &grid {
                let ell = x.round() as usize;
                if ell == 0 || ell > n {
                    return Err(Error::Config(format!("ell = {ell} outside 1..={n}")));
                }
                let gap = dynamics::block_matrix(&ctx.dist, ell)?.spectral_gap();
                let certified = cx.variance_certificate(n, n - ell)?.gap_bound;
                out.checks.push(Check::le(&format!("certified gap <= exact gap at ell = {ell}"), certified, gap, 1e-9));
                out.checks.push(Check::le(&format!("gap nondecreasing at ell = {ell}"), last, gap, 1e-12));
                last = gap;
                rows.push(vec![ell.to_string(), num(gap), num(certified)]);
            }
        }
    }
    out.results.insert("parameter".into(), to_value(&spec.parameter));
    out.results.insert("rows".into(), json!(rows.len()));
    out.files.push(("sweep.csv".into(), csv_string(&["parameter", "measured", "certified"], rows)));
    Ok(out)
}

/// Runs one task and returns its output; used by the binary and by tests.
pub fn run_task(task: Task, cfg: &ExperimentConfig, seed: u64, config_dir: &Path) -> Result<TaskOutput> {
    if task == Task::Sweep {
        return task_sweep(cfg, seed, config_dir);
    }
    let ctx = Context::new(cfg.clone(), seed, config_dir)?;
    match task {
        Task::Enumerate => task_enumerate(&ctx),
        Task::Influence => task_influence(&ctx),
        Task::Certificate => task_certificate(&ctx),
        Task::Factorization => task_factorization(&ctx),
        Task::Mixing => task_mixing(&ctx),
        Task::MatchingBounds => task_matching_bounds(&ctx),
        Task::VerifyAll => task_verify_all(&ctx),
        Task::Sweep => unreachable!(),
    }
}

fn write_outputs(dir: &Path, task: Task, cfg: &ExperimentConfig, seed: u64, out: &TaskOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let report = json!({
        "tool": "glauber-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "task": task.name(),
        "seed": seed,
        "config": cfg,
        "passed": out.passed(),
        "checks": out.checks,
        "results": out.results,
    });
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&report).expect("json") + "\n")?;
    let mut names = vec!["report.json".to_string()];
    for (name, body) in &out.files {
        fs::write(dir.join(name), body)?;
        names.push(name.clone());
    }
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = json!({"generated_unix_seconds": stamp, "files": names});
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta).expect("json") + "\n")?;
    Ok(())
}

fn hint(e: &Error) -> String {
    match e {
        Error::InstanceTooLarge(msg) => format!("instance too large: {msg}"),
        Error::GraphParse { line, msg } => format!("graph file, line {line}: {msg}"),
        other => other.to_string(),
    }
}

/// Parses arguments, runs the task and writes outputs. Returns the exit code:
/// 0 when every check passed, 2 when a check failed, 1 on usage, configuration
/// or computation errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return 1;
        }
    };
    let cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {}", cli.config.display(), hint(&e));
            return 1;
        }
    };
    let seed = cli.seed.unwrap_or(cfg.seed);
    let dir = cli.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let out = match run_task(cli.task, &cfg, seed, &dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}", hint(&e));
            return 1;
        }
    };
    if let Err(e) = write_outputs(&cli.out, cli.task, &cfg, seed, &out) {
        eprintln!("error: writing {}: {e}", cli.out.display());
        return 1;
    }
    let failed: Vec<&Check> = out.checks.iter().filter(|c| !c.holds).collect();
    println!("{}: {} checks, {} failed; report in {}", cli.task.name(), out.checks.len(), failed.len(), cli.out.display());
    for c in &failed {
        println!("FAILED {}: {} > {}", c.name, c.lhs, c.rhs);
    }
    if failed.is_empty() { 0 } else { 2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn parses_config_with_defaults() {
        let c = cfg(r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "path", "n": 3}}"#);
        assert_eq!(c.model, ModelSpec::Hardcore { lambda: 1.0 });
        assert_eq!(c.epsilon, 0.25);
        assert_eq!(c.caps, Caps::default());
    }

    #[test]
    fn rejects_bad_schema_and_unknown_fields() {
        let bad = r#"{"schema": 2, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "path", "n": 3}}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))));
        let extra = r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "path", "n": 3}, "bogus": 1}"#;
        assert!(matches!(ExperimentConfig::from_json(extra), Err(Error::Config(_))));
    }

    #[test]
    fn sweep_grid_size() {
        let s = SweepSpec { parameter: SweepParameter::Lambda, start: 0.5, stop: 4.0, step: 0.5 };
        assert_eq!(s.grid().unwrap().len(), 8);
    }

    #[test]
    fn boundary_matches_critical_activity() {
        assert!((uniqueness_boundary(3).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn caps_are_enforced() {
        let mut c = cfg(r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "path", "n": 3}}"#);
        c.caps.max_sites = 2;
        assert!(matches!(run_task(Task::Enumerate, &c, 0, Path::new(".")), Err(Error::InstanceTooLarge(_))));
    }
}
