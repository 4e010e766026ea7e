//! Experiment driver: generate fields and maps for a named family, verify
//! exported fields, and emit polylines of the image of the coordinate grid.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use harmap_core::backlund::{bt_residual_fields, sine_gordon_residual};
use harmap_core::family::{Construction, Family, Route};
use harmap_core::field::{GridSpec, MapField, ScalarField};
use harmap_core::kernel::OdeSpec;
use harmap_core::map_builder::BaseValues;
use harmap_core::sinh_gordon::sinh_gordon_residual;
use harmap_core::verifier::{
    beltrami_residual, derivative_identity_check, harmonicity_residual, hopf_residual, lemma_system_residual,
    ResidualReport, VerificationSummary, DEFAULT_TOLERANCE,
};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.toml";

/// Tolerance keys accepted in configs and on the command line.
pub const SUITES: &[&str] = &[
    "default",
    "sinh_gordon",
    "sine_gordon",
    "backlund",
    "harmonicity",
    "beltrami",
    "hopf",
    "derivative_identity",
    "lemma_system",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    W,
    Theta,
    U,
}

impl Output {
    pub fn file_name(&self) -> &'static str {
        match self {
            Output::W => "w.csv",
            Output::Theta => "theta.csv",
            Output::U => "u.csv",
        }
    }
}

fn all_outputs() -> Vec<Output> {
    vec![Output::W, Output::Theta, Output::U]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSettings {
    pub ode_step_tol: f64,
    pub ode_max_step: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        let d = OdeSpec::default();
        Self { ode_step_tol: d.step_tol, ode_max_step: d.max_step }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    #[serde(default)]
    pub route: Option<Route>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub grid: GridSpec,
    pub base: BaseValues,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "all_outputs")]
    pub outputs: Vec<Output>,
    #[serde(default)]
    pub kernel: KernelSettings,
}

fn check_tolerances(t: &BTreeMap<String, f64>) -> Result<()> {
    for (k, v) in t {
        if !SUITES.contains(&k.as_str()) {
            bail!("unknown tolerance `{k}` (expected one of {})", SUITES.join(", "));
        }
        if !(*v > 0.0 && v.is_finite()) {
            bail!("tolerance `{k}` must be positive and finite");
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        BaseValues::new(self.base.r00, self.base.s00)?;
        check_tolerances(&self.tolerances)?;
        OdeSpec::new(self.kernel.ode_step_tol, self.kernel.ode_max_step, true)?;
        if self.outputs.is_empty() {
            bail!("outputs is empty");
        }
        Ok(())
    }

    pub fn route(&self) -> Route {
        self.route.unwrap_or_else(|| self.family.default_route())
    }
}

/// Everything needed to re-run verification on the exported fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub family: Family,
    pub route: Route,
    pub parameters: BTreeMap<String, f64>,
    pub grid: GridSpec,
    pub base: BaseValues,
    pub tolerances: BTreeMap<String, f64>,
    pub kernel: KernelSettings,
    pub files: BTreeMap<String, String>,
    pub residuals: Vec<ResidualReport>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))
    }
}

/// Write to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let file = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        let mut out = BufWriter::new(file);
        write(&mut out)?;
        out.flush()?;
        out.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", tmp.display()))?;
    Ok(())
}

fn tolerance_for(name: &str, tolerances: &BTreeMap<String, f64>) -> f64 {
    let suite = suite_of(name);
    tolerances
        .get(suite)
        .or_else(|| tolerances.get("default"))
        .copied()
        .unwrap_or(DEFAULT_TOLERANCE)
}

/// Suite a report belongs to, by report name.
pub fn suite_of(name: &str) -> &'static str {
    for s in SUITES.iter().skip(1) {
        if name.starts_with(s) {
            return s;
        }
    }
    if name.starts_with("lemma_") {
        return "lemma_system";
    }
    "default"
}

/// Run every residual suite on `(w, θ, u)`.
pub fn verify_fields(
    w: &ScalarField,
    theta: &ScalarField,
    u: &MapField,
    tolerances: &BTreeMap<String, f64>,
) -> Result<VerificationSummary> {
    let tol = |name: &str| tolerance_for(name, tolerances);
    let mut reports = vec![
        sinh_gordon_residual(w, tol("sinh_gordon"))?,
        sine_gordon_residual(theta, tol("sine_gordon"))?,
    ];
    reports.extend(bt_residual_fields(w, theta, tol("backlund"))?);
    let (h1, h2) = harmonicity_residual(u, tol("harmonicity"))?;
    reports.push(h1);
    reports.push(h2);
    reports.push(beltrami_residual(u, w, tol("beltrami"))?);
    reports.push(hopf_residual(u, tol("hopf"))?);
    let (d1, d2) = derivative_identity_check(u, w, theta, tol("derivative_identity"))?;
    reports.push(d1);
    reports.push(d2);
    reports.extend(lemma_system_residual(u, w, theta, tol("lemma_system"))?);
    Ok(VerificationSummary { grid: u.grid, reports })
}

pub struct Generated {
    pub manifest: Manifest,
    pub summary: VerificationSummary,
}

pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<Generated> {
    cfg.validate()?;
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let spec = OdeSpec::new(cfg.kernel.ode_step_tol, cfg.kernel.ode_max_step, true)?;
    let construction = Construction::new(cfg.family, &cfg.parameters, &cfg.grid, &spec)?;
    let route = cfg.route();
    let (w, theta) = construction.sample(cfg.grid)?;
    let u = construction.build(route, cfg.base, cfg.grid)?;
    u.check_invariants()?;
    let summary = verify_fields(&w, &theta, &u, &cfg.tolerances)?;

    let mut files = BTreeMap::new();
    let mut outputs = cfg.outputs.clone();
    outputs.sort();
    outputs.dedup();
    for o in outputs {
        let path = out.join(o.file_name());
        match o {
            Output::W => write_atomic(&path, |f| Ok(w.write_csv(f)?))?,
            Output::Theta => write_atomic(&path, |f| Ok(theta.write_csv(f)?))?,
            Output::U => write_atomic(&path, |f| Ok(u.write_csv(f)?))?,
        }
        let key = match o {
            Output::W => "w",
            Output::Theta => "theta",
            Output::U => "u",
        };
        files.insert(key.to_string(), o.file_name().to_string());
    }
    let manifest = Manifest {
        family: cfg.family,
        route,
        parameters: cfg.parameters.clone(),
        grid: cfg.grid,
        base: cfg.base,
        tolerances: cfg.tolerances.clone(),
        kernel: cfg.kernel,
        files,
        residuals: summary.reports.clone(),
    };
    let text = toml::to_string_pretty(&manifest)?;
    write_atomic(&out.join(MANIFEST), |f| Ok(f.write_all(text.as_bytes())?))?;
    Ok(Generated { manifest, summary })
}

fn open(dir: &Path, manifest: &Manifest, key: &str) -> Result<BufReader<fs::File>> {
    let name = manifest.files.get(key).with_context(|| format!("manifest lists no `{key}` file"))?;
    let path = dir.join(name);
    let f = fs::File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub struct Loaded {
    pub manifest: Manifest,
    pub w: ScalarField,
    pub theta: ScalarField,
    pub u: MapField,
}

pub fn load_outputs(dir: &Path) -> Result<Loaded> {
    let manifest = Manifest::load(dir)?;
    let w = ScalarField::read_csv(open(dir, &manifest, "w")?).context("w field")?;
    let theta = ScalarField::read_csv(open(dir, &manifest, "theta")?).context("theta field")?;
    let u = MapField::read_csv(open(dir, &manifest, "u")?, (manifest.base.r00, manifest.base.s00)).context("u field")?;
    if w.grid != manifest.grid || theta.grid != manifest.grid || u.grid != manifest.grid {
        bail!("exported fields do not match the manifest grid");
    }
    Ok(Loaded { manifest, w, theta, u })
}

/// Parse `NAME=VALUE` tolerance overrides.
pub fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = item.split_once('=').with_context(|| format!("expected NAME=VALUE, got `{item}`"))?;
        let v: f64 = v.trim().parse().with_context(|| format!("bad tolerance value in `{item}`"))?;
        out.insert(k.trim().to_string(), v);
    }
    check_tolerances(&out)?;
    Ok(out)
}

pub fn verify(dir: &Path, overrides: &BTreeMap<String, f64>) -> Result<VerificationSummary> {
    let loaded = load_outputs(dir)?;
    let mut tol = loaded.manifest.tolerances.clone();
    tol.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
    verify_fields(&loaded.w, &loaded.theta, &loaded.u, &tol)
}

/// Polylines of the images of `xlines` lines `x = const` and `ylines` lines
/// `y = const`, split at masked nodes.
pub fn polylines(u: &MapField, xlines: usize, ylines: usize) -> Vec<(String, Vec<(f64, f64)>)> {
    let g = u.grid;
    let pick = |n: usize, count: usize| -> Vec<usize> {
        match count {
            0 => vec![],
            1 => vec![n / 2],
            _ => {
                let mut v: Vec<usize> = (0..count).map(|k| k * (n - 1) / (count - 1)).collect();
                v.dedup();
                v
            }
        }
    };
    let mut out = Vec::new();
    let mut push_runs = |label: String, nodes: Vec<usize>| {
        let mut run = Vec::new();
        for k in nodes {
            if u.mask[k] {
                run.push((u.r[k], u.s[k]));
            } else if !run.is_empty() {
                out.push((label.clone(), std::mem::take(&mut run)));
            }
        }
        if !run.is_empty() {
            out.push((label, run));
        }
    };
    for i in pick(g.nx, xlines) {
        push_runs(format!("x = {:.6}", g.x(i)), (0..g.ny).map(|j| g.index(i, j)).collect());
    }
    for j in pick(g.ny, ylines) {
        push_runs(format!("y = {:.6}", g.y(j)), (0..g.nx).map(|i| g.index(i, j)).collect());
    }
    out
}

pub fn plotdata(dir: &Path, xlines: usize, ylines: usize, out: &Path) -> Result<usize> {
    let manifest = Manifest::load(dir)?;
    let u = MapField::read_csv(open(dir, &manifest, "u")?, (manifest.base.r00, manifest.base.s00))?;
    if u.valid_count() == 0 {
        bail!("map is masked everywhere");
    }
    u.check_invariants()?;
    let lines = polylines(&u, xlines, ylines);
    write_atomic(out, |f| {
        for (n, (label, pts)) in lines.iter().enumerate() {
            if n > 0 {
                writeln!(f)?;
            }
            writeln!(f, "# {label}")?;
            for (r, s) in pts {
                writeln!(f, "{r:.16e} {s:.16e}")?;
            }
        }
        Ok(())
    })?;
    Ok(lines.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE3: &str = r#"
family = "example3"
route = "quadrature"

[grid]
x_min = -0.1
x_max = 0.1
y_min = -0.05
y_max = 0.05
nx = 21
ny = 11

[base]
R00 = 0.0
S00 = -0.25
"#;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_toml(EXAMPLE3).unwrap();
        assert_eq!(c.family, Family::Example3);
        assert_eq!(c.outputs, all_outputs());
        assert_eq!(c.kernel, KernelSettings::default());
    }

    #[test]
    fn unknown_keys_fail_closed() {
        let bad = EXAMPLE3.replace("route =", "rout =");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = format!("{EXAMPLE3}\n[tolerances]\nhopff = 1e-4\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = EXAMPLE3.replace("S00 = -0.25", "S00 = 0.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn suites_of_report_names() {
        assert_eq!(suite_of("backlund_poly_x"), "backlund");
        assert_eq!(suite_of("lemma_sx"), "lemma_system");
        assert_eq!(suite_of("harmonicity_conformal_ratio"), "harmonicity");
        assert_eq!(suite_of("hopf_normalization"), "hopf");
        assert_eq!(suite_of("derivative_identity_uz"), "derivative_identity");
        assert_eq!(suite_of("sine_gordon"), "sine_gordon");
    }

    #[test]
    fn overrides() {
        let o = parse_overrides(&["hopf=1e-3".into(), "default = 2e-4".into()]).unwrap();
        assert_eq!(o["hopf"], 1e-3);
        assert_eq!(tolerance_for("hopf_normalization", &o), 1e-3);
        assert_eq!(tolerance_for("lemma_rx", &o), 2e-4);
        assert!(parse_overrides(&["nope=1".into()]).is_err());
        assert!(parse_overrides(&["hopf".into()]).is_err());
    }

    #[test]
    fn polylines_of_exponential_map() {
        let g = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 11, 11).unwrap();
        let u = MapField::from_fn(g, (0.0, 1.0), |x, _| (0.0, (2.0 * x).exp()));
        let lines = polylines(&u, 3, 2);
        assert_eq!(lines.len(), 5);
        for (label, pts) in &lines[..3] {
            assert!(label.starts_with("x ="));
            assert!(pts.iter().all(|p| p.0 == 0.0 && p.1 == pts[0].1));
        }
        assert!(lines[3].1.windows(2).all(|p| p[1].1 > p[0].1));
    }
}
