use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use coadjoint::embeddings::{su_grassmann_set, EmbeddingCertificate, EmbeddingSpec, TriangleLocus};
use coadjoint::export::TrajectoryFile;
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coadjoint"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn orbit_info_examples() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], u64); 4] = [
        (
            &[
                "--group", "so-even", "--n", "3", "--mult", "1,1,1", "--eig", "1,2,3",
            ],
            12,
        ),
        (&["--group", "su", "--n", "3", "--mult", "1,2"], 4),
        (&["--group", "sp", "--n", "1", "--mult", "1"], 2),
        (
            &["--group", "so-even", "--n", "3", "--mult", "2,1", "--eig", "0,1"],
            8,
        ),
    ];
    for (args, expected) in cases {
        let out = run(&[&["orbit-info"], args].concat(), dir.path());
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let v = stdout_json(&out);
        assert_eq!(v["orbit_dim"], expected, "{args:?}");
        assert_eq!(
            v["orbit_dim"].as_u64().unwrap() + v["stabilizer_dim"].as_u64().unwrap(),
            v["algebra_dim"].as_u64().unwrap()
        );
        assert!(v["family"].is_string());
    }
}

#[test]
fn orbit_info_rejects_bad_spec() {
    let dir = TempDir::new().unwrap();
    // Multiplicities do not sum to n.
    let out = run(
        &["orbit-info", "--group", "su", "--n", "3", "--mult", "1,1"],
        dir.path(),
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    // Unknown flag value is a parse error.
    let out = run(
        &["orbit-info", "--group", "g2", "--n", "3", "--mult", "3"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn builtin_certificates() {
    let dir = TempDir::new().unwrap();
    let cases: [(&[&str], bool); 3] = [
        (
            &["--builtin", "su-grassmann", "--n", "3", "--mult", "1,1,1"],
            true,
        ),
        (&["--builtin", "so6-lagrangian"], true),
        (&["--builtin", "so-upsilon", "--n", "4", "--mult", "1,1,2"], false),
    ];
    for (args, lagrangian) in cases {
        let out = run(
            &[&["check-embedding", "--samples", "10"], args].concat(),
            dir.path(),
        );
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        let cert: EmbeddingCertificate = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(cert.lagrangian, lagrangian, "{args:?}");
        assert!(cert.isotropic);
    }
}

#[test]
fn spec_file_round_trip_and_errors() {
    let dir = TempDir::new().unwrap();
    let spec = su_grassmann_set(4, &[1, 1, 2]).unwrap();
    fs::write(
        dir.path().join("spec.json"),
        serde_json::to_string(&spec).unwrap(),
    )
    .unwrap();
    let out = run(
        &[
            "check-embedding",
            "--spec",
            "spec.json",
            "--samples",
            "5",
            "--out",
            "cert.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("cert.json")).unwrap();
    let cert: EmbeddingCertificate = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&cert).unwrap() + "\n", text);
    assert!(cert.lagrangian);

    fs::write(dir.path().join("broken.json"), "{\"group\": \"SU\", \"n\": ").unwrap();
    let out = run(&["check-embedding", "--spec", "broken.json"], dir.path());
    assert_eq!(code(&out), 2);

    // A decomposition that does not reproduce the target violates a spec invariant.
    let mut bad: EmbeddingSpec = spec.clone();
    bad.coefficients[0] += 0.25;
    fs::write(dir.path().join("bad.json"), serde_json::to_string(&bad).unwrap()).unwrap();
    let out = run(
        &["check-embedding", "--spec", "bad.json", "--samples", "2"],
        dir.path(),
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn outputs_are_not_overwritten_without_force() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("t.json"), "keep").unwrap();
    let out = run(&["triangle", "--eig", "1,1,1", "--out", "t.json"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("--force"));
    assert_eq!(fs::read_to_string(dir.path().join("t.json")).unwrap(), "keep");

    let out = run(
        &["triangle", "--eig", "1,1,1", "--out", "t.json", "--force"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let locus: TriangleLocus =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert!(locus.witness_residual([1.0, 1.0, 1.0]).unwrap() < 1e-12);
}

#[test]
fn triangle_cases() {
    let dir = TempDir::new().unwrap();
    for (w, kind) in [
        ("1,1,1", "regular_orbit"),
        ("1,1,2", "degenerate_isotropic"),
        ("1,1,5", "empty"),
    ] {
        let out = run(&["triangle", "--weights", w], dir.path());
        assert_eq!(code(&out), 0);
        assert_eq!(stdout_json(&out)["kind"], kind);
    }
    assert_eq!(code(&run(&["triangle", "--eig", "1,2"], dir.path())), 2);
    assert_eq!(code(&run(&["triangle", "--eig", "1,0,1"], dir.path())), 3);
}

#[test]
fn default_two_spin_both_modes_agree() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &["simulate", "--n", "2", "--mode", "both", "--out", "run.csv"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = stdout_json(&out);
    assert!(summary["max_deviation"].as_f64().unwrap() < 1e-6);
    assert_eq!(summary["passed"], true);
    let on_disk: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, summary);
    for name in ["run.numeric.csv", "run.closed_form.csv"] {
        let text = fs::read(dir.path().join(name)).unwrap();
        let file = TrajectoryFile::read_csv(&text[..]).unwrap();
        assert_eq!(file.samples.len(), 10001);
        assert_eq!(file.samples.last().unwrap().t, 10.0);
    }
}

#[test]
fn three_spins_nested_and_not() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("nested.json"),
        r#"{"p":[1.0,1.5,0.8],"alpha":[[0,0.7,1.3],[0.7,0,1.3],[1.3,1.3,0]]}"#,
    )
    .unwrap();
    fs::write(
        dir.path().join("split.json"),
        r#"{"p":[1.0,1.5,0.8],"alpha":[[0,0.7,1.3],[0.7,0,1.1],[1.3,1.1,0]]}"#,
    )
    .unwrap();

    let out = run(
        &[
            "geodesic",
            "--spec",
            "nested.json",
            "--mode",
            "both",
            "--out",
            "g.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout_json(&out)["max_deviation"].as_f64().unwrap() < 1e-5);

    let out = run(
        &["simulate", "--spec", "split.json", "--mode", "closed_form"],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("α₁₃ = α₂₃"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());

    // The numerical integrator handles any symmetric coupling.
    let out = run(
        &[
            "simulate",
            "--spec",
            "split.json",
            "--t-end",
            "1",
            "--out",
            "s.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout_json(&out)["gauge"], "zero");
}

#[test]
fn json_trajectories_round_trip_and_match_csv() {
    let dir = TempDir::new().unwrap();
    let common = [
        "geodesic", "--n", "3", "--t-end", "0.5", "--dt", "0.01", "--seed", "4",
    ];
    let out = run(
        &[&common[..], &["--format", "json", "--out", "g.json"]].concat(),
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = run(&[&common[..], &["--out", "g.csv"]].concat(), dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = fs::read_to_string(dir.path().join("g.json")).unwrap();
    let from_json = TrajectoryFile::from_json(&text).unwrap();
    assert_eq!(from_json.to_json().unwrap() + "\n", text);
    let from_csv = TrajectoryFile::read_csv(&fs::read(dir.path().join("g.csv")).unwrap()[..]).unwrap();
    assert_eq!(from_csv, from_json);
    assert!(from_json.meta.unitary);
    assert_eq!(from_json.meta.charges.as_ref().unwrap().len(), 2);
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = run(
            &[
                "simulate", "--n", "3", "--seed", "9", "--t-end", "1", "--out", name,
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
    }
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
    let a = run(
        &[
            "check-embedding",
            "--builtin",
            "two-step-so",
            "--n",
            "3",
            "--seed",
            "2",
            "--samples",
            "8",
        ],
        dir.path(),
    );
    let b = run(
        &[
            "check-embedding",
            "--builtin",
            "two-step-so",
            "--n",
            "3",
            "--seed",
            "2",
            "--samples",
            "8",
        ],
        dir.path(),
    );
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn divisor_proximity_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    fs::write(
        dir.path().join("singular.json"),
        format!(r#"{{"p":[1.0,1.0],"levels":[1.0],"z0":{{"re":[[{s},{s}],[{s},{s}]],"im":[[0,0],[0,0]]}}}}"#),
    )
    .unwrap();
    let out = run(
        &["geodesic", "--spec", "singular.json", "--t-end", "1"],
        dir.path(),
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    assert!(stderr(&out).contains("min singular value"), "{}", stderr(&out));
    assert!(stderr(&out).contains("t = 0"), "{}", stderr(&out));
}

#[test]
fn help_documents_csv_schema() {
    let dir = TempDir::new().unwrap();
    for cmd in ["simulate", "geodesic"] {
        let out = run(&[cmd, "--help"], dir.path());
        assert_eq!(code(&out), 0);
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Re_Zij") && text.contains("det_ZZ"), "{text}");
    }
}
