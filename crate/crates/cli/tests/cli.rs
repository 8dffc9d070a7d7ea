use std::fs;
use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schauder-lab"))
}

const KERNEL: &str = r#"
kind = "kernel"
seed = 5
[model]
kind = "isotropic_fractional"
alpha = 0.5
dim = 1
[grid]
points = 16384
[time]
t = [1.0]
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn kernel_run_lists_every_artifact_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "k.toml", KERNEL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let st = lab().args(["kernel", "--config"]).arg(&cfg).arg("--out").arg(out).status().unwrap();
        assert_eq!(st.code(), Some(0));
    }
    let m: serde_like::Manifest = serde_like::load(&a.join("manifest.json"));
    for f in &m.artifacts {
        assert!(a.join(f).exists(), "{f}");
    }
    let listed: Vec<String> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(listed.len(), m.artifacts.len(), "{listed:?}");
    assert!(m.text.contains("\"PASS\""));
    for f in ["radial_t1.csv", "kernel_t1.sipk"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let mb = serde_like::load(&b.join("manifest.json"));
    assert_eq!(m.hash, mb.hash);
    let out = lab().arg("compare").arg(&a).arg(&b).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no differences"));
}

#[test]
fn validation_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", &KERNEL.replace("dim = 1", "dim = 1\nflavour = 2"));
    let out = lab().args(["kernel", "--config"]).arg(&bad).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));
    let ok = write(tmp.path(), "ok.toml", KERNEL);
    let out = lab().args(["pbeta", "--config"]).arg(&ok).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn busy_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "k.toml", KERNEL);
    let out = tmp.path().join("o");
    fs::create_dir_all(&out).unwrap();
    fs::write(out.join(".lock"), "1").unwrap();
    let st = lab().args(["kernel", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_one_and_compare_flags_flips() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write(tmp.path(), "g.toml", KERNEL);
    // a window far too narrow for the heavy tail trips the tail guard
    let narrow = write(tmp.path(), "n.toml", &KERNEL.replace("points = 16384", "points = 1024\nhalf_extent = 2.0"));
    let a = tmp.path().join("a");
    assert_eq!(lab().args(["kernel", "--config"]).arg(&good).arg("--out").arg(&a).status().unwrap().code(), Some(0));
    let out = lab().args(["kernel", "--config"]).arg(&narrow).arg("--out").arg(tmp.path().join("n")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario `kernel`"));
    let flipped = fs::read_to_string(a.join("manifest.json")).unwrap().replace("\"PASS\"", "\"FAIL\"");
    let b = write(tmp.path(), "flipped.json", &flipped);
    let out = lab().arg("compare").arg(&a).arg(&b).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS -> FAIL"));
}

#[test]
fn cylindrical_critical_moment_is_divergent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.toml",
        r#"
kind = "pbeta"
[model]
kind = "cylindrical"
alpha = 0.6
dim = 2
spectral = { atoms = [1.0, 1.0] }
[grid]
points = 512
[time]
ladder = 6
[params]
beta = 0.6
"#,
    );
    let out = lab().args(["pbeta", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("DIVERGENT"));
}

/// Minimal manifest reader, enough for the assertions above.
mod serde_like {
    use std::path::Path;

    pub struct Manifest {
        pub text: String,
        pub hash: String,
        pub artifacts: Vec<String>,
    }

    pub fn load(p: &Path) -> Manifest {
        let text = std::fs::read_to_string(p).unwrap();
        let hash = text.split("\"config_hash\": \"").nth(1).unwrap().split('"').next().unwrap().to_string();
        let block = text.split("\"artifacts\": [").nth(1).unwrap().split(']').next().unwrap();
        let artifacts = block.split('"').enumerate().filter(|(i, _)| i % 2 == 1).map(|(_, s)| s.to_string()).collect();
        Manifest { text, hash, artifacts }
    }
}
