//! End-to-end tests of the `holoapprox` binary: exit codes, file outputs,
//! report formats, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holoapprox"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("holoapprox-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const MOUNTAIN: &str = r#"
[dims]
m = 1
k = 0
n = 1

[sigma]
f = "x1"
phi = "0"

[solver]
eps = 1.0
loop = "mountain"

[grid]
x_res = 2048
fiber_res = 8
tube_radius = 0.02
"#;

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_mountain_passes_and_writes_files() {
    let dir = tmpdir("solve");
    let cfg = write_config(&dir, "mountain.toml", MOUNTAIN);
    let out_dir = dir.join("out");
    let out = bin()
        .args(["solve", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("pass: true"));
    assert!(text.contains("freqs: 2"));
    for file in [
        "core_samples.csv",
        "tube_samples.csv",
        "forms.json",
        "certificate.txt",
    ] {
        assert!(out_dir.join(file).exists(), "missing {file}");
    }
    let core = std::fs::read_to_string(out_dir.join("core_samples.csv")).unwrap();
    assert!(core.starts_with("x1,delta,h1\n"));
    let tube = std::fs::read_to_string(out_dir.join("tube_samples.csv")).unwrap();
    assert!(tube.starts_with("x1,y,f1_1\n"));
    let forms = std::fs::read_to_string(out_dir.join("forms.json")).unwrap();
    assert!(forms.contains("\"schema\": \"holoapprox-forms v1\""));
    assert!(forms.contains("\"frequency\": 2"));
}

#[test]
fn solve_outputs_are_deterministic() {
    let dir = tmpdir("determinism");
    let cfg = write_config(&dir, "mountain.toml", MOUNTAIN);
    let run = |tag: &str| {
        let out_dir = dir.join(tag);
        let out = bin()
            .args(["solve", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        (
            std::fs::read_to_string(out_dir.join("certificate.txt")).unwrap(),
            std::fs::read_to_string(out_dir.join("forms.json")).unwrap(),
        )
    };
    let (cert_a, forms_a) = run("a");
    let (cert_b, forms_b) = run("b");
    assert_eq!(cert_a, cert_b);
    assert_eq!(forms_a, forms_b);
}

#[test]
fn failing_certificate_exits_one() {
    // margins survive (N = 6 at ε = 0.5 leaves ≈ 0.076 on |δ|) but a
    // 16-point grid cannot clear the inflation rule
    let dir = tmpdir("fail");
    let cfg = write_config(
        &dir,
        "coarse.toml",
        r#"
[dims]
m = 1
k = 0
n = 1

[sigma]
f = "x1"
phi = "0"

[solver]
eps = 0.5
loop = "mountain"

[grid]
x_res = 16
"#,
    );
    let out = bin()
        .args(["solve", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tmpdir("badcfg");
    let cfg = write_config(&dir, "bad.toml", "[dims]\nm = \"one\"\n");
    let out = bin()
        .args(["solve", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.join("nope.toml");
    let out = bin()
        .args(["solve", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // expression typo: unknown function
    let cfg = write_config(
        &dir,
        "badexpr.toml",
        "[dims]\nm = 1\nk = 0\nn = 1\n[sigma]\nf = \"son(x1)\"\nphi = \"0\"\n",
    );
    let out = bin()
        .args(["solve", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_errors_exit_three() {
    // N = 1 cannot satisfy |δ| < 1/2; the forced frequency turns the failed
    // search into a solver error
    let dir = tmpdir("solver-error");
    let cfg = write_config(
        &dir,
        "forced.toml",
        r#"
[dims]
m = 1
k = 0
n = 1

[sigma]
f = "x1"
phi = "0"

[solver]
eps = 0.5
loop = "mountain"
n = 1
"#,
    );
    let out = bin()
        .args(["solve", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stdout(&out));
}

#[test]
fn slice_reports_match_closed_forms() {
    // trivial slice: m0 = 0, κ = ε, η = ε
    let out = bin()
        .args(["slice", "--eps", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("m0: 0\n"));
    assert!(text.contains("kappa: 1\n"));
    assert!(text.contains("eta: 1\n"));

    // K = 1/26 for λ = (3,4)
    let out = bin()
        .args(["slice", "--lambda", "3,4", "--psi", "0.2,0.1", "--eps", "1"])
        .output()
        .unwrap();
    let text = stdout(&out);
    assert!(text.contains("K: 0.03846153846"), "{text}");

    // ‖ψ/ε‖ too large: empty
    let out = bin()
        .args(["slice", "--lambda", "0,0", "--psi", "1.1,0", "--eps", "1"])
        .output()
        .unwrap();
    assert!(stdout(&out).contains("verdict: empty"));

    // malformed vectors exit 2
    let out = bin()
        .args(["slice", "--lambda", "3;4", "--psi", "x", "--eps", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mesh_width_zero_degenerates_to_core_curve() {
    let dir = tmpdir("ribbon");
    let cfg = write_config(&dir, "mountain.toml", MOUNTAIN);
    let out_file = dir.join("core.obj");
    let out = bin()
        .args([
            "mesh",
            cfg.to_str().unwrap(),
            "--n",
            "6",
            "--width",
            "0",
            "--res",
            "64,4",
            "--out",
            out_file.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let obj = std::fs::read_to_string(&out_file).unwrap();
    assert!(obj.contains("o core_curve"));
    assert!(obj.contains("\nl 1 2 3"));
    // core vertices are (x, δ(x), h(x)): check the turning point x = 0
    let first = obj.lines().find(|l| l.starts_with("v ")).unwrap();
    assert_eq!(first, "v 0 0 0");
}

#[test]
fn mesh_higher_dimensions_fall_back_to_csv() {
    let dir = tmpdir("csv-fallback");
    let cfg = write_config(
        &dir,
        "plane.toml",
        r#"
[dims]
m = 2
k = 0
n = 1

[sigma]
f = "0.05*x1 + 0.05*x2"
phi = "0"

[solver]
eps = 1.0
"#,
    );
    let out_file = dir.join("cloud.csv");
    let out = bin()
        .args([
            "mesh",
            cfg.to_str().unwrap(),
            "--width",
            "0.02",
            "--res",
            "8,2",
            "--out",
            out_file.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let csv = std::fs::read_to_string(&out_file).unwrap();
    assert!(csv.starts_with("x1,x2,y,f1_1\n"));
}

#[test]
fn doubling_frequency_doubles_the_corrugation_count() {
    // count the flat spots of ∂f₁/∂x on the core line via the library
    use holoapprox::corrugation::{solve, SolveOptions};
    use holoapprox::jetmodel::{Dims, JetSection};

    let section = JetSection::from_sources(
        Dims::new(1, 0, 1).unwrap(),
        &["x1"],
        &[vec!["0", "0"]],
        0.1,
    )
    .unwrap();
    let dips = |n: u32| -> usize {
        let opts = SolveOptions {
            mountain_ansatz: true,
            forced_frequency: Some(n),
            ..SolveOptions::default()
        };
        let (pair, _) = solve(&section, 1.0, &opts).unwrap();
        // h′(x) = 1 − cos(4πNx) dips to zero 2N times on [0, 1)
        let samples = 4096;
        let mut count = 0;
        let mut inside = false;
        let mut first_low = false;
        for i in 0..samples {
            let x = i as f64 / samples as f64;
            let (_, _, _, dh) = pair.jet(&[x]).unwrap();
            let low = dh.get(0, 0) < 1e-3;
            if i == 0 {
                first_low = low;
            }
            if low && !inside {
                count += 1;
            }
            inside = low;
        }
        // h′ is 1-periodic in N·x: merge the dip wrapping around x = 1
        if first_low && inside {
            count -= 1;
        }
        count
    };
    assert_eq!(dips(3), 6);
    assert_eq!(dips(6), 12);
}

#[test]
fn oracle_subcommand_is_deterministic() {
    let run = || {
        let out = bin()
            .args(["oracle", "--seed", "11", "--trials", "30"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        stdout(&out)
    };
    let a = run();
    assert_eq!(a, run());
    assert!(a.contains("slice_disagreements: 0"));
    assert!(a.contains("hull_failures: 0"));
}
