use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const EXAMPLE3: &str = r#"
family = "example3"

[grid]
x_min = -0.2
x_max = 0.2
y_min = -0.1
y_max = 0.1
nx = 401
ny = 201

[base]
R00 = 0.0
S00 = -0.25
"#;

fn harmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmap")).args(args).output().expect("spawn harmap")
}

fn generate(dir: &Path, config: &str) -> Output {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    harmap(&["generate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn example3_round_trip_then_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(dir.path(), EXAMPLE3);
    assert_eq!(g.status.code(), Some(0), "{}", text(&g));
    let out = dir.path().join("out");
    for f in ["manifest.toml", "w.csv", "theta.csv", "u.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("family = \"example3\""));
    assert!(manifest.contains("route = \"quadrature\""));

    let v = harmap(&["verify", "--in", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v));

    let plot = dir.path().join("lines.dat");
    let p = harmap(&["plotdata", "--in", out.to_str().unwrap(), "--xlines", "5", "--ylines", "3", "--out", plot.to_str().unwrap()]);
    assert_eq!(p.status.code(), Some(0), "{}", text(&p));
    let data = fs::read_to_string(&plot).unwrap();
    assert_eq!(data.lines().filter(|l| l.starts_with("# x =")).count(), 5);
    assert_eq!(data.lines().filter(|l| l.starts_with("# y =")).count(), 3);
    for line in data.lines().filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let s: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!(s < 0.0, "image left the lower half-plane: {line}");
    }
    // along x = const, y² = c(S + c/4) and R = x/2 + y² tanh 2x with c = cosh 2x
    let mut x = f64::NAN;
    for line in data.lines() {
        if let Some(rest) = line.strip_prefix("# x = ") {
            x = rest.parse().unwrap();
        } else if line.starts_with("# y") {
            x = f64::NAN;
        } else if !line.is_empty() && x.is_finite() {
            let v: Vec<f64> = line.split_whitespace().map(|t| t.parse().unwrap()).collect();
            let c = (2.0 * x).cosh();
            let y2 = c * (v[1] + c / 4.0);
            assert!((v[0] - (x / 2.0 + y2 * (2.0 * x).tanh())).abs() < 1e-9, "x = {x}: {line}");
        }
    }

    // corrupt θ by a constant shift and re-verify
    let path = out.join("theta.csv");
    let csv = fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    let mut shifted = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let mut cols: Vec<String> = l.split(',').map(str::to_string).collect();
        let v: f64 = cols[2].parse().unwrap();
        cols[2] = format!("{:.17e}", v + 0.01);
        shifted.push_str(&cols.join(","));
        shifted.push('\n');
    }
    fs::write(&path, shifted).unwrap();
    let v = harmap(&["verify", "--in", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(1), "{}", text(&v));
    assert!(text(&v).contains("backlund"));

    fs::remove_file(out.join("w.csv")).unwrap();
    let v = harmap(&["verify", "--in", out.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2), "{}", text(&v));
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = EXAMPLE3.replace("[base]", "[base]\nT00 = 1.0");
    assert_eq!(generate(dir.path(), &bad).status.code(), Some(2));
    let bad = EXAMPLE3.replace("family = \"example3\"", "family = \"example3\"\nroute = \"soliton\"");
    assert_eq!(generate(dir.path(), &bad).status.code(), Some(2));
    let bad = EXAMPLE3.replace("nx = 401", "nx = 1");
    assert_eq!(generate(dir.path(), &bad).status.code(), Some(2));
    let bad = EXAMPLE3.replace("family = \"example3\"", "family = \"kenmotsu\"\n[parameters]\nalpha = 1.0");
    assert_eq!(generate(dir.path(), &bad).status.code(), Some(2));
    let v = harmap(&["verify", "--in", dir.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn tolerance_override_can_fail_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let small = EXAMPLE3.replace("nx = 401", "nx = 41").replace("ny = 201", "ny = 21");
    let g = generate(dir.path(), &small);
    let out = dir.path().join("out");
    assert!(g.status.code().is_some_and(|c| c <= 1), "{}", text(&g));
    let v = harmap(&["verify", "--in", out.to_str().unwrap(), "--tol", "sinh_gordon=1e-12"]);
    assert_eq!(v.status.code(), Some(1), "{}", text(&v));
    assert!(text(&v).contains("sinh_gordon"));
    let v = harmap(&["verify", "--in", out.to_str().unwrap(), "--tol", "bogus=1"]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn manifest_reproduces_residuals_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = harmap_cli::ExperimentConfig::from_toml(
        r#"
family = "soliton"
parameters = { theta0 = 0.0, dtheta0 = 1.0, w00 = 0.0 }
grid = { x_min = -0.3, x_max = 0.3, y_min = -0.2, y_max = 0.2, nx = 61, ny = 41 }
base = { R00 = 0.0, S00 = 1.0 }
"#,
    )
    .unwrap();
    let g = harmap_cli::generate(&cfg, dir.path()).unwrap();
    assert_eq!(g.manifest.route.to_string(), "soliton");
    let again = harmap_cli::verify(dir.path(), &Default::default()).unwrap();
    assert_eq!(again.reports, g.manifest.residuals);
    let text = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    let parsed: harmap_cli::Manifest = toml::from_str(&text).unwrap();
    assert_eq!(parsed, g.manifest);
}
