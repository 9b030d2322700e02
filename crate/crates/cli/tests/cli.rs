use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &PathBuf, body: &str) -> String {
    let path = dir.join("sweep.cfg");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_sorted_csv() {
    let dir = scratch("run_ok");
    let cfg = write_config(
        &dir,
        "name = small\nN = [1..3]\nspacing = [0.4, 0.2]\nangles = [end-fire]\nmethods = [ElementWise, Decoupled]\nmax_sweeps = 30\n",
    );
    let out = dir.join("out");
    let res = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out.join("small.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario_id,method,N,spacing,alpha_tx,alpha_rx,gamma_loss,sweep_index,array_gain,array_gain_db,wall_time_s,flags"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..3], ["0", "Decoupled", "1"]);
    assert_eq!(first[7], "-1");
    assert!(!out.join("small_elements.csv").exists());
}

#[test]
fn element_traces_are_opt_in() {
    let dir = scratch("run_trace");
    let cfg = write_config(
        &dir,
        "name = traced\nN = 3\nspacing = 0.3\nangles = [corner]\nmethods = [ElementWise]\nmax_sweeps = 5\n",
    );
    let out = dir.join("out");
    let res = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--trace-elements"]);
    assert!(res.status.success());
    let trace = fs::read_to_string(out.join("traced_elements.csv")).unwrap();
    assert!(trace.starts_with("scenario_id,method,update_index,sweep_index,element,array_gain\n"));
    assert!(trace.lines().count() > 3);
}

#[test]
fn invalid_config_exits_with_one() {
    let dir = scratch("bad_config");
    let cfg = write_config(&dir, "N = 4\nspacing = 0.3\nangles = [sideways]\nmethods = [Decoupled]\n");
    let res = bin(&["run", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("sideways"));

    let res = bin(&["run", "--config", "does/not/exist.cfg", "--out", dir.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn strict_turns_failed_rows_into_exit_two() {
    let dir = scratch("strict");
    // the phase grid refuses more than three elements
    let cfg = write_config(&dir, "N = 4\nspacing = 0.3\nangles = [end-fire]\nmethods = [GridOracle]\n");
    let out = dir.to_str().unwrap();
    let lenient = bin(&["run", "--config", &cfg, "--out", out]);
    assert_eq!(lenient.status.code(), Some(0));
    let strict = bin(&["run", "--config", &cfg, "--out", out, "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
    let text = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("error="));
}

#[test]
fn figure_ids_are_listed_and_runnable() {
    let res = bin(&["list-figures"]);
    assert!(res.status.success());
    let listing = String::from_utf8(res.stdout).unwrap();
    for id in ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"] {
        assert!(listing.contains(id), "{listing}");
    }
    let dir = scratch("figure");
    let res = bin(&["run", "--config", "fig3", "--out", dir.to_str().unwrap()]);
    assert!(res.status.success());
    assert!(dir.join("fig3.csv").exists());
}
