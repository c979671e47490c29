//! Command-line front end.
//!
//! Each subcommand produces a set of artifacts (CSV, JSON and, for the two
//! plotting commands, SVG). The artifact in the selected `--format` goes to
//! stdout; `--out DIR` additionally writes every artifact to `DIR`. Every
//! artifact starts with a header carrying the fully resolved configuration,
//! and nothing time- or host-dependent is ever written, so repeated runs are
//! byte-identical.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::chain::{Alpha, ChainSpec, Epsilon, Family};
use crate::density::{
    density_dp, normalized_partition_on_circle_many, z_composition, DensityTable, DEFAULT_COMPOSITION_CAP,
    DEFAULT_MEMORY_BUDGET,
};
use crate::error::{Error, Result};
use crate::moments::{closed_form_moments, empirical_moments, format_rational};
use crate::motif::{brute_force_density, DEFAULT_ENUMERATION_CAP};
use crate::oracle::{oracle_compare, DEFAULT_DENSE_CAP};
use crate::stats::{ks_distance, spacing_distribution, unfold, SpacingBins};
use crate::svg::{Plot, Series, SeriesKind};
use crate::transfer::{
    charfn_exact, charfn_series, convergence_report, symmetric_t_grid, DEFAULT_T_MAX, DEFAULT_T_POINTS,
};

/// Exit status for a crosscheck that found a disagreement.
pub const EXIT_INCONSISTENT: i32 = 2;
/// Exit status for validation, parse and cap errors.
pub const EXIT_INVALID: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "hschain", version, about = "Level densities of su(m) spin chains of Haldane-Shastry type")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact level density (energy, degeneracy).
    Density {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value_t = Backend::Dp)]
        backend: Backend,
        #[command(flatten)]
        caps: CapArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Closed-form mean and variance of the spectrum.
    Moments {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Exact and asymptotic characteristic function on a symmetric t-grid.
    Charfn {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sup-norm distance to the Gaussian over an N sweep, with log-log slopes.
    Convergence {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_name = "SWEEP", default_value = "16:1024:geometric")]
        n_sweep: String,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Nearest-neighbour spacing histogram of the unfolded spectrum.
    Spacings {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Right edge of the histogram range.
        #[arg(long, default_value_t = 4.0)]
        s_max: f64,
        #[command(flatten)]
        caps: CapArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Kolmogorov-Smirnov distance to the Gaussian over an N sweep.
    Kscan {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_name = "SWEEP", default_value = "16:128:geometric")]
        n_sweep: String,
        #[command(flatten)]
        caps: CapArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Dense Hamiltonian spectrum against the motif spectrum.
    Oracle {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = DEFAULT_DENSE_CAP)]
        dense_cap: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full consistency suite over small chains; exits 2 on any disagreement.
    Crosscheck {
        #[arg(long = "max-N", default_value_t = 12)]
        max_n: usize,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        caps: CapArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Chain spec as inline JSON or a path to a JSON file.
    #[arg(long, value_name = "JSON|PATH", conflicts_with_all = ["family", "n", "m", "alpha", "ferro", "antiferro"])]
    pub spec: Option<String>,
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "m")]
    pub m: Option<usize>,
    #[arg(long, conflicts_with = "antiferro")]
    pub ferro: bool,
    #[arg(long)]
    pub antiferro: bool,
    /// FI parameter as `p` or `p/q`.
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<Alpha>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub t_max: f64,
    #[arg(long, default_value_t = DEFAULT_T_POINTS)]
    pub t_points: usize,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// Largest m^N enumerated by the brute-force backend.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub enum_cap: u64,
    /// Largest N expanded by the composition backend.
    #[arg(long, default_value_t = DEFAULT_COMPOSITION_CAP)]
    pub composition_cap: usize,
    /// Memory budget of the DP backend in bytes.
    #[arg(long, default_value_t = DEFAULT_MEMORY_BUDGET)]
    pub memory_budget: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Dp,
    Composition,
    Brute,
}

impl Backend {
    fn name(self) -> &'static str {
        match self {
            Backend::Dp => "dp",
            Backend::Composition => "composition",
            Backend::Brute => "brute",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_alpha(s: &str) -> std::result::Result<Alpha, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `a:b:geometric` (doubling), `a:b:linear`, `a:b:STEP` or a comma
/// list. Values must be at least 2 and strictly increasing.
pub fn parse_n_sweep(s: &str) -> Result<Vec<usize>> {
    let bad = |why: &str| Error::InvalidSpec(format!("--n-sweep {s:?}: {why}"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad("expected integers"));
    let values: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected a:b:geometric, a:b:linear or a:b:STEP"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        if a < 2 || b < a {
            return Err(bad("need 2 <= a <= b"));
        }
        match parts[2].trim() {
            "geometric" => std::iter::successors(Some(a), |&x| x.checked_mul(2)).take_while(|&x| x <= b).collect(),
            "linear" => (a..=b).collect(),
            step => {
                let step = num(step)?;
                if step == 0 {
                    return Err(bad("step must be positive"));
                }
                (a..=b).step_by(step).collect()
            }
        }
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if values.is_empty() || values[0] < 2 || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("values must be >= 2 and strictly increasing"));
    }
    Ok(values)
}

impl ChainArgs {
    /// Resolves the flags into a spec. `needs_n` is false for sweep commands,
    /// which take `N` from `--n-sweep` and use `placeholder_n` here.
    fn resolve(&self, needs_n: bool, placeholder_n: usize) -> Result<ChainSpec> {
        if let Some(text) = &self.spec {
            let body = if text.trim_start().starts_with('{') {
                text.clone()
            } else {
                std::fs::read_to_string(text)
                    .map_err(|e| Error::InvalidSpec(format!("cannot read spec file {text:?}: {e}")))?
            };
            let spec = ChainSpec::from_json(&body)?;
            return if needs_n { Ok(spec) } else { spec.with_n(placeholder_n) };
        }
        let family = self.family.ok_or_else(|| Error::InvalidSpec("missing --family (or --spec)".into()))?;
        let n = match (needs_n, self.n) {
            (true, Some(n)) => n,
            (true, None) => return Err(Error::InvalidSpec("missing --N".into())),
            (false, None) => placeholder_n,
            (false, Some(_)) => return Err(Error::InvalidSpec("this subcommand takes --n-sweep, not --N".into())),
        };
        let epsilon = if self.antiferro { Epsilon::Antiferro } else { Epsilon::Ferro };
        ChainSpec::new(family, n, self.m.unwrap_or(2), epsilon, self.alpha)
    }
}

/// A rendered output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub format: Format,
    pub file_name: String,
    pub content: String,
}

/// Result of one invocation before anything is written.
#[derive(Debug)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    pub default_format: Format,
    pub consistent: bool,
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_header(command: &str, config: &Value) -> String {
    format!("# hschain {command}\n# config: {config}\n")
}

fn json_artifact(command: &str, config: &Value, result: Value) -> Artifact {
    let body = json!({ "command": command, "config": config, "result": result });
    Artifact {
        format: Format::Json,
        file_name: format!("{command}.json"),
        content: format!("{}\n", serde_json::to_string_pretty(&body).expect("json values serialize")),
    }
}

fn csv_artifact(command: &str, config: &Value, body: String) -> Artifact {
    Artifact { format: Format::Csv, file_name: format!("{command}.csv"), content: csv_header(command, config) + &body }
}

fn svg_artifact(command: &str, config: &Value, plot: &Plot) -> Artifact {
    let comment = format!("hschain {command} config: {config}");
    Artifact { format: Format::Svg, file_name: format!("{command}.svg"), content: plot.render(&comment) }
}

fn grid_config(grid: &GridArgs) -> Value {
    json!({ "t_max": grid.t_max, "t_points": grid.t_points })
}

fn caps_config(caps: &CapArgs) -> Value {
    json!({
        "enum_cap": caps.enum_cap,
        "composition_cap": caps.composition_cap,
        "memory_budget": caps.memory_budget,
    })
}

fn spec_value(spec: &ChainSpec) -> Value {
    serde_json::to_value(spec).expect("spec serializes")
}

fn check_grid(grid: &GridArgs) -> Result<Vec<f64>> {
    if !(grid.t_max > 0.0 && grid.t_max.is_finite()) || grid.t_points < 2 {
        return Err(Error::InvalidSpec("--t-max must be positive and --t-points at least 2".into()));
    }
    Ok(symmetric_t_grid(grid.t_max, grid.t_points))
}

fn compute_density(spec: &ChainSpec, backend: Backend, caps: &CapArgs) -> Result<DensityTable> {
    match backend {
        Backend::Dp => density_dp(spec, spec.epsilon().into(), caps.memory_budget),
        Backend::Composition => z_composition(spec, spec.epsilon(), caps.composition_cap),
        Backend::Brute => brute_force_density(spec, spec.epsilon().into(), caps.enum_cap),
    }
}

/// Executes a parsed command without touching stdout or the filesystem.
pub fn execute(command: &Command) -> Result<Report> {
    let report = |artifacts, default_format| Report { artifacts, default_format, consistent: true };
    match command {
        Command::Density { chain, backend, caps, .. } => {
            let spec = chain.resolve(true, 0)?;
            let d = compute_density(&spec, *backend, caps)?;
            let config = json!({ "spec": spec_value(&spec), "backend": backend.name(), "caps": caps_config(caps) });
            let csv = csv_artifact("density", &config, d.to_csv());
            let body = format!(
                "{{\n  \"command\": \"density\",\n  \"config\": {config},\n  \"total\": {},\n  \"density\": {}\n}}\n",
                d.total(),
                d.to_json()
            );
            let json = Artifact { format: Format::Json, file_name: "density.json".into(), content: body };
            Ok(report(vec![csv, json], Format::Csv))
        }
        Command::Moments { chain, .. } => {
            let spec = chain.resolve(true, 0)?;
            let s = closed_form_moments(&spec);
            let config = json!({ "spec": spec_value(&spec) });
            let mut csv = String::from("quantity,exact,decimal\n");
            let _ = writeln!(csv, "mu,{},{}", format_rational(&s.mu), fmt_f64(s.mu_f64()));
            let _ = writeln!(csv, "sigma2,{},{}", format_rational(&s.sigma2), fmt_f64(s.sigma2.to_f64().unwrap_or(f64::NAN)));
            let _ = writeln!(csv, "sigma,,{}", fmt_f64(s.sigma));
            Ok(report(
                vec![
                    csv_artifact("moments", &config, csv),
                    json_artifact("moments", &config, serde_json::to_value(s.summary())?),
                ],
                Format::Csv,
            ))
        }
        Command::Charfn { chain, grid, .. } => {
            let spec = chain.resolve(true, 0)?;
            let t = check_grid(grid)?;
            let series = charfn_series(&spec, &t);
            let config = json!({ "spec": spec_value(&spec), "grid": grid_config(grid) });
            let mut csv = String::from("t,re_exact,im_exact,re_asym,im_asym,gauss_ref\n");
            let mut rows = Vec::with_capacity(t.len());
            for k in 0..t.len() {
                let (e, a, g) = (series.exact[k], series.asymptotic[k], series.gaussian[k]);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    fmt_f64(t[k]),
                    fmt_f64(e.re),
                    fmt_f64(e.im),
                    fmt_f64(a.re),
                    fmt_f64(a.im),
                    fmt_f64(g)
                );
                rows.push(json!([t[k], e.re, e.im, a.re, a.im, g]));
            }
            let result = json!({
                "columns": ["t", "re_exact", "im_exact", "re_asym", "im_asym", "gauss_ref"],
                "rows": rows,
                "max_gaussian_deviation": series.max_gaussian_deviation(),
                "max_asymptotic_deviation": series.max_asymptotic_deviation(),
            });
            Ok(report(
                vec![csv_artifact("charfn", &config, csv), json_artifact("charfn", &config, result)],
                Format::Csv,
            ))
        }
        Command::Convergence { chain, n_sweep, grid, .. } => {
            let sweep = parse_n_sweep(n_sweep)?;
            let template = chain.resolve(false, sweep[0])?;
            let t = check_grid(grid)?;
            let rep = convergence_report(&template, &sweep, &t)?;
            let mut template_cfg = spec_value(&template);
            template_cfg.as_object_mut().map(|o| o.remove("N"));
            let config = json!({ "template": template_cfg, "n_sweep": sweep, "grid": grid_config(grid) });
            let mut csv = String::from("N,D,D_asym\n");
            for r in &rep.rows {
                let _ = writeln!(csv, "{},{},{}", r.n, fmt_f64(r.d), fmt_f64(r.d_asym));
            }
            let _ = writeln!(csv, "# slope_D: {}", fmt_f64(rep.slope_d));
            let _ = writeln!(csv, "# slope_D_asym: {}", fmt_f64(rep.slope_d_asym));
            let plot = Plot {
                title: format!("Gaussian convergence, {} m={} {}", template.family(), template.m(), eps_name(&template)),
                x_label: "N".into(),
                y_label: "sup |t| <= t_max deviation".into(),
                log_x: true,
                log_y: true,
                series: vec![
                    Series {
                        label: format!("D (slope {:.3})", rep.slope_d),
                        points: rep.rows.iter().map(|r| (r.n as f64, r.d)).collect(),
                        kind: SeriesKind::Line,
                        color: "#1f77b4",
                    },
                    Series {
                        label: format!("D_asym (slope {:.3})", rep.slope_d_asym),
                        points: rep.rows.iter().map(|r| (r.n as f64, r.d_asym)).collect(),
                        kind: SeriesKind::Line,
                        color: "#d62728",
                    },
                ],
            };
            Ok(report(
                vec![
                    csv_artifact("convergence", &config, csv),
                    json_artifact("convergence", &config, serde_json::to_value(&rep)?),
                    svg_artifact("convergence", &config, &plot),
                ],
                Format::Csv,
            ))
        }
        Command::Spacings { chain, bins, s_max, caps, .. } => {
            let spec = chain.resolve(true, 0)?;
            let d = density_dp(&spec, spec.epsilon().into(), caps.memory_budget)?;
            let stats = closed_form_moments(&spec);
            let unfolded = unfold(&d, &stats)?;
            let h = spacing_distribution(&unfolded, SpacingBins { count: *bins, upper: *s_max })?;
            let config = json!({ "spec": spec_value(&spec), "bins": bins, "s_max": s_max, "caps": caps_config(caps) });
            let mut csv = String::from("bin_center,density,poisson_ref,wigner_ref\n");
            for k in 0..h.centers.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    fmt_f64(h.centers[k]),
                    fmt_f64(h.density[k]),
                    fmt_f64(h.poisson[k]),
                    fmt_f64(h.wigner[k])
                );
            }
            let width = h.edges.get(1).copied().unwrap_or(0.0);
            let plot = Plot {
                title: format!("Spacing distribution, {spec}"),
                x_label: "s".into(),
                y_label: "P(s)".into(),
                log_x: false,
                log_y: false,
                series: vec![
                    Series {
                        label: "histogram".into(),
                        points: h.centers.iter().cloned().zip(h.density.iter().cloned()).collect(),
                        kind: SeriesKind::Bars { width_milli: (width * 1000.0).round() as u32 },
                        color: "#7f7f7f",
                    },
                    Series {
                        label: "Poisson".into(),
                        points: h.centers.iter().cloned().zip(h.poisson.iter().cloned()).collect(),
                        kind: SeriesKind::Line,
                        color: "#2ca02c",
                    },
                    Series {
                        label: "Wigner".into(),
                        points: h.centers.iter().cloned().zip(h.wigner.iter().cloned()).collect(),
                        kind: SeriesKind::Line,
                        color: "#d62728",
                    },
                ],
            };
            let result = json!({
                "levels": unfolded.eta().len(),
                "mean_spacing": h.mean_spacing(),
                "bin_centers": h.centers,
                "density": h.density,
                "poisson_ref": h.poisson,
                "wigner_ref": h.wigner,
            });
            Ok(report(
                vec![
                    csv_artifact("spacings", &config, csv),
                    json_artifact("spacings", &config, result),
                    svg_artifact("spacings", &config, &plot),
                ],
                Format::Csv,
            ))
        }
        Command::Kscan { chain, n_sweep, caps, .. } => {
            let sweep = parse_n_sweep(n_sweep)?;
            let template = chain.resolve(false, sweep[0])?;
            let mut rows = Vec::new();
            for &n in &sweep {
                let spec = template.with_n(n)?;
                let d = density_dp(&spec, spec.epsilon().into(), caps.memory_budget)?;
                rows.push((n, ks_distance(&d, &closed_form_moments(&spec))?));
            }
            let mut template_cfg = spec_value(&template);
            template_cfg.as_object_mut().map(|o| o.remove("N"));
            let config = json!({ "template": template_cfg, "n_sweep": sweep, "caps": caps_config(caps) });
            let mut csv = String::from("N,ks_distance\n");
            for (n, ks) in &rows {
                let _ = writeln!(csv, "{n},{}", fmt_f64(*ks));
            }
            let result = json!(rows.iter().map(|(n, ks)| json!({ "N": n, "ks_distance": ks })).collect::<Vec<_>>());
            Ok(report(
                vec![csv_artifact("kscan", &config, csv), json_artifact("kscan", &config, result)],
                Format::Csv,
            ))
        }
        Command::Oracle { chain, dense_cap, .. } => {
            let spec = chain.resolve(true, 0)?;
            let rep = oracle_compare(&spec, *dense_cap)?;
            let config = json!({ "spec": spec_value(&spec), "dense_cap": dense_cap });
            let mut csv = String::from("index,motif,hamiltonian\n");
            for (k, (a, b)) in rep.motif_spectrum.iter().zip(&rep.hamiltonian_spectrum).enumerate() {
                let _ = writeln!(csv, "{k},{},{}", fmt_f64(*a), fmt_f64(*b));
            }
            let _ = writeln!(csv, "# direct_deviation: {}", fmt_f64(rep.direct_deviation));
            let _ = writeln!(csv, "# affine_deviation: {}", fmt_f64(rep.affine_deviation));
            let _ = writeln!(csv, "# multiplicities_match: {}", rep.multiplicities_match);
            Ok(report(
                vec![csv_artifact("oracle", &config, csv), json_artifact("oracle", &config, serde_json::to_value(&rep)?)],
                Format::Json,
            ))
        }
        Command::Crosscheck { max_n, grid, caps, .. } => crosscheck(*max_n, grid, caps),
    }
}

fn eps_name(spec: &ChainSpec) -> &'static str {
    match spec.epsilon() {
        Epsilon::Ferro => "ferro",
        Epsilon::Antiferro => "antiferro",
    }
}

/// Largest `m^N` checked against brute-force enumeration.
pub const CROSSCHECK_BRUTE_LIMIT: u64 = 1_000_000;
/// Largest `N` checked against the composition expansion.
pub const CROSSCHECK_COMPOSITION_LIMIT: usize = 18;
/// Tolerance of the characteristic-function check.
pub const CROSSCHECK_CHARFN_TOL: f64 = 1e-10;

/// One comparison performed by `crosscheck`.
#[derive(Clone, Debug)]
pub struct CheckRow {
    pub spec: ChainSpec,
    pub check: &'static str,
    pub value: String,
    pub pass: bool,
}

/// Families used by the crosscheck sweep.
pub fn crosscheck_templates(m: usize) -> Result<Vec<ChainSpec>> {
    Ok(vec![
        ChainSpec::hs(2, m, Epsilon::Ferro)?,
        ChainSpec::pf(2, m, Epsilon::Ferro)?,
        ChainSpec::fi(2, m, Epsilon::Ferro, Alpha::integer(1)?)?,
        ChainSpec::fi(2, m, Epsilon::Ferro, Alpha::new(3, 2)?)?,
    ])
}

/// Runs every consistency check on one spec.
pub fn crosscheck_spec(spec: &ChainSpec, t_grid: &[f64], caps: &CapArgs) -> Result<Vec<CheckRow>> {
    let mut rows = Vec::new();
    let mut push = |check, value: String, pass| rows.push(CheckRow { spec: spec.clone(), check, value, pass });
    let dp = density_dp(spec, spec.epsilon().into(), caps.memory_budget)?;

    let states = (spec.m() as u64).checked_pow(spec.n() as u32);
    if states.is_some_and(|s| s <= CROSSCHECK_BRUTE_LIMIT.min(caps.enum_cap)) {
        let brute = brute_force_density(spec, spec.epsilon().into(), caps.enum_cap)?;
        push("dp_vs_brute", format!("{} levels", brute.len()), brute == dp);
    }
    if spec.n() <= CROSSCHECK_COMPOSITION_LIMIT.min(caps.composition_cap) {
        let comp = z_composition(spec, spec.epsilon(), caps.composition_cap)?;
        push("dp_vs_composition", format!("{} levels", comp.len()), comp == dp);
    }

    let closed = closed_form_moments(spec);
    let empirical = empirical_moments(&dp)?;
    push(
        "moments_closed_vs_empirical",
        format!("{};{}", format_rational(&empirical.mu), format_rational(&empirical.sigma2)),
        closed == empirical,
    );

    let exact = charfn_exact(spec, &closed, t_grid);
    let mu = closed.mu_f64();
    let thetas: Vec<f64> = t_grid.iter().map(|t| t / closed.sigma).collect();
    let via_density = normalized_partition_on_circle_many(&dp, &thetas);
    let dev = t_grid
        .iter()
        .zip(exact.iter().zip(&via_density))
        .map(|(&t, (phi, z))| (phi - Complex64::from_polar(1.0, -mu * t / closed.sigma) * z).norm())
        .fold(0.0, f64::max);
    push("charfn_vs_density", fmt_f64(dev), dev < CROSSCHECK_CHARFN_TOL);
    Ok(rows)
}

fn crosscheck(max_n: usize, grid: &GridArgs, caps: &CapArgs) -> Result<Report> {
    if max_n < 2 {
        return Err(Error::InvalidSpec("--max-N must be at least 2".into()));
    }
    let t = check_grid(grid)?;
    let mut rows = Vec::new();
    for m in [2usize, 3] {
        for template in crosscheck_templates(m)? {
            for n in 2..=max_n {
                for eps in Epsilon::BOTH {
                    let spec = template.with_n(n)?.with_epsilon(eps);
                    rows.extend(crosscheck_spec(&spec, &t, caps)?);
                }
            }
        }
    }
    let failures = rows.iter().filter(|r| !r.pass).count();
    let config = json!({ "max_N": max_n, "m": [2, 3], "grid": grid_config(grid), "caps": caps_config(caps) });

    let mut csv = String::from("family,alpha,m,N,epsilon,check,value,status\n");
    let mut json_rows = Vec::new();
    for r in &rows {
        let alpha = r.spec.alpha().map(|a| a.to_string()).unwrap_or_default();
        let status = if r.pass { "pass" } else { "FAIL" };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.spec.family(),
            alpha,
            r.spec.m(),
            r.spec.n(),
            r.spec.epsilon().sign(),
            r.check,
            r.value,
            status
        );
        json_rows.push(json!({
            "spec": spec_value(&r.spec),
            "check": r.check,
            "value": r.value,
            "pass": r.pass,
        }));
    }
    let _ = writeln!(csv, "# checks: {}, failures: {failures}", rows.len());
    let result = json!({ "checks": rows.len(), "failures": failures, "rows": json_rows });
    Ok(Report {
        artifacts: vec![csv_artifact("crosscheck", &config, csv), json_artifact("crosscheck", &config, result)],
        default_format: Format::Csv,
        consistent: failures == 0,
    })
}

fn output_args(command: &Command) -> &OutputArgs {
    match command {
        Command::Density { output, .. }
        | Command::Moments { output, .. }
        | Command::Charfn { output, .. }
        | Command::Convergence { output, .. }
        | Command::Spacings { output, .. }
        | Command::Kscan { output, .. }
        | Command::Oracle { output, .. }
        | Command::Crosscheck { output, .. } => output,
    }
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.file_name), &a.content)?;
    }
    Ok(())
}

/// Runs a parsed command: prints the selected artifact, writes files, and
/// returns the process exit status.
pub fn run(cli: &Cli) -> Result<i32> {
    let output = output_args(&cli.command);
    let report = execute(&cli.command)?;
    let format = output.format.unwrap_or(report.default_format);
    let selected = report
        .artifacts
        .iter()
        .find(|a| a.format == format)
        .ok_or_else(|| Error::InvalidSpec(format!("this subcommand has no {} output", format.extension())))?;
    if let Some(dir) = &output.out {
        write_artifacts(dir, &report.artifacts)?;
    }
    print!("{}", selected.content);
    if report.consistent {
        Ok(0)
    } else {
        eprintln!("hschain: crosscheck found inconsistencies");
        Ok(EXIT_INCONSISTENT)
    }
}

/// Parses `args` (including the program name) and runs; never panics on bad
/// input. Help and version requests exit 0, every other parse error exits 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hschain: error: {e}");
            match e {
                Error::Inconsistent(_) => EXIT_INCONSISTENT,
                _ => EXIT_INVALID,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("hschain").chain(args.iter().copied())).unwrap()
    }

    fn artifact(report: &Report, format: Format) -> &str {
        &report.artifacts.iter().find(|a| a.format == format).unwrap().content
    }

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_n_sweep("16:1024:geometric").unwrap(), vec![16, 32, 64, 128, 256, 512, 1024]);
        assert_eq!(parse_n_sweep("4:7:linear").unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_n_sweep("4:10:3").unwrap(), vec![4, 7, 10]);
        assert_eq!(parse_n_sweep("8, 16,64").unwrap(), vec![8, 16, 64]);
        for bad in ["1:8:geometric", "8:4:linear", "4:8", "4:8:0", "a,b", "8,8", ""] {
            assert!(parse_n_sweep(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn density_brute_example() {
        let cli = parse(&["density", "--family", "PF", "--N", "3", "--m", "2", "--ferro", "--backend", "brute"]);
        let report = execute(&cli.command).unwrap();
        let csv = artifact(&report, Format::Csv);
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, ["energy,degeneracy", "0,4", "1,2", "2,2"]);
        assert!(csv.starts_with("# hschain density\n# config: {"));
        let json: Value = serde_json::from_str(artifact(&report, Format::Json)).unwrap();
        assert_eq!(json["density"], json!({"0": 4, "1": 2, "2": 2}));
        assert_eq!(json["config"]["backend"], "brute");
    }

    #[test]
    fn moments_example() {
        let cli = parse(&["moments", "--family", "hs", "--N", "4", "--m", "2", "--ferro"]);
        let csv = artifact(&execute(&cli.command).unwrap(), Format::Csv).to_string();
        assert!(csv.contains("\nmu,5/2,2.5000000000000000e0\n"), "{csv}");
        assert!(csv.contains("\nsigma2,27/8,3.3750000000000000e0\n"), "{csv}");
    }

    #[test]
    fn spec_flag_inline_and_file() {
        let inline = r#"{"family":"FI","N":4,"m":3,"epsilon":-1,"alpha":[3,2]}"#;
        let a = execute(&parse(&["density", "--spec", inline]).command).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.json");
        std::fs::write(&path, inline).unwrap();
        let b = execute(&parse(&["density", "--spec", path.to_str().unwrap()]).command).unwrap();
        assert_eq!(a.artifacts, b.artifacts);
        let flags = execute(
            &parse(&["density", "--family", "fi", "--N", "4", "--m", "3", "--antiferro", "--alpha", "3/2"]).command,
        )
        .unwrap();
        assert_eq!(a.artifacts, flags.artifacts);
    }

    #[test]
    fn validation_errors() {
        let err = |args: &[&str]| execute(&parse(args).command).unwrap_err();
        assert!(matches!(err(&["density", "--N", "3"]), Error::InvalidSpec(_)));
        assert!(matches!(err(&["density", "--family", "pf"]), Error::InvalidSpec(_)));
        assert!(matches!(err(&["density", "--family", "fi", "--N", "3"]), Error::InvalidSpec(_)));
        assert!(matches!(err(&["density", "--family", "hs", "--N", "30", "--backend", "brute"]), Error::SizeLimit { .. }));
        assert!(matches!(err(&["convergence", "--family", "hs", "--N", "30"]), Error::InvalidSpec(_)));
        assert!(matches!(err(&["charfn", "--family", "hs", "--N", "4", "--t-points", "1"]), Error::InvalidSpec(_)));
        assert!(Cli::try_parse_from(["hschain", "density", "--spec", "{}", "--N", "3"]).is_err());
        assert!(Cli::try_parse_from(["hschain", "nosuch"]).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["hschain", "nosuch"]), EXIT_INVALID);
        assert_eq!(main_with_args(["hschain", "moments", "--family", "pf"]), EXIT_INVALID);
        assert_eq!(main_with_args(["hschain", "--help"]), 0);
        assert_eq!(main_with_args(["hschain", "moments", "--family", "pf", "--N", "3", "--format", "svg"]), EXIT_INVALID);
    }

    #[test]
    fn crosscheck_small_passes() {
        let cli = parse(&["crosscheck", "--max-N", "5", "--t-points", "21"]);
        let report = execute(&cli.command).unwrap();
        assert!(report.consistent);
        let csv = artifact(&report, Format::Csv);
        assert!(csv.contains("HS,,2,5,-1,dp_vs_brute,"));
        assert!(csv.contains("FI,3/2,3,5,1,charfn_vs_density,"));
        assert!(!csv.contains("FAIL"));
    }

    #[test]
    fn charfn_columns_and_precision() {
        let cli = parse(&["charfn", "--family", "pf", "--N", "3", "--t-points", "5", "--t-max", "2"]);
        let csv = artifact(&execute(&cli.command).unwrap(), Format::Csv).to_string();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "t,re_exact,im_exact,re_asym,im_asym,gauss_ref");
        assert_eq!(rows.len(), 6);
        let middle: Vec<&str> = rows[3].split(',').collect();
        assert_eq!(middle[0], "0.0000000000000000e0");
        assert_eq!(middle[1], "1.0000000000000000e0");
    }

    #[test]
    fn plots_and_sweeps() {
        let cli = parse(&["convergence", "--family", "pf", "--n-sweep", "8:32:geometric", "--t-points", "31"]);
        let report = execute(&cli.command).unwrap();
        let svg = artifact(&report, Format::Svg);
        assert!(svg.starts_with("<!-- hschain convergence config: "));
        assert!(svg.contains("<svg"));
        let csv = artifact(&report, Format::Csv);
        assert!(csv.contains("\n8,") && csv.contains("\n32,") && csv.contains("# slope_D_asym: "));

        let cli = parse(&["spacings", "--family", "hs", "--N", "12", "--bins", "10"]);
        let report = execute(&cli.command).unwrap();
        assert!(artifact(&report, Format::Csv).contains("bin_center,density,poisson_ref,wigner_ref\n"));
        assert!(artifact(&report, Format::Svg).contains("Wigner"));

        let cli = parse(&["kscan", "--family", "fi", "--alpha", "2", "--m", "3", "--n-sweep", "8,16"]);
        let csv = artifact(&execute(&cli.command).unwrap(), Format::Csv).to_string();
        assert!(csv.contains("N,ks_distance\n8,") && csv.contains("\n16,"));
    }

    #[test]
    fn oracle_defaults_to_json() {
        let cli = parse(&["oracle", "--family", "hs", "--N", "3"]);
        let report = execute(&cli.command).unwrap();
        assert_eq!(report.default_format, Format::Json);
        let v: Value = serde_json::from_str(artifact(&report, Format::Json)).unwrap();
        assert_eq!(v["result"]["multiplicities_match"], true);
        assert_eq!(v["result"]["motif_spectrum"].as_array().unwrap().len(), 8);
    }
}
