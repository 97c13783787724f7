use std::fs;
use std::path::Path;
use std::process::Command as Process;

use zetadist_cli::{emit_csv, parse_config, run_command, Command, Table};

const BIN: &str = env!("CARGO_BIN_EXE_zetadist");

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn zetadist(args: &[&str]) -> (i32, String, String) {
    let o = Process::new(BIN).args(args).output().unwrap();
    (
        o.status.code().unwrap(),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    )
}

const RIEMANN: &str = "\
[function]
kind = \"special\"
name = \"riemann\"

[action]
s = [[2.0, 0.0]]
sigma = [2.0]
t = { start = -1.0, stop = 1.0, step = 0.5 }
count = 200
seed = 11
";

#[test]
fn eval_prints_zeta_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", RIEMANN);
    let out = tmp.path().join("out");
    let (code, stdout, stderr) = zetadist(&["eval", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let printed: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("value = "))
        .and_then(|v| v.split(' ').next())
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(format!("{printed:.8}"), "1.64493407", "{stdout}");
    let csv = fs::read_to_string(out.join("eval.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re_value,im_value,tail_bound,rounding,certified"));
    let re: f64 = lines.next().unwrap().split(',').next().unwrap().parse().unwrap();
    assert!((re - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-10);
}

fn chi_minus_4(n: u64) -> i64 {
    match n % 4 {
        1 => 1,
        3 => -1,
        _ => 0,
    }
}

#[test]
fn dedekind_coefficients_count_gaussian_ideals() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "[function]\nkind = \"euler\"\nd = 1\na = [[1.0], [1.0]]\n\
         alpha = [{{ rule = \"constant\", value = [1.0, 0.0] }}, {{ rule = \"chi_minus_4\" }}]\n\
         [action]\nn_max = 20\n[output]\ndir = \"{}\"\n",
        tmp.path().join("out").display()
    );
    let cfg = parse_config(&text).unwrap();
    let rep = run_command(Command::Coeffs, &cfg).unwrap();
    let csv = fs::read_to_string(&rep.files[0]).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,re_a,im_a"));
    for n in 1..=20u64 {
        let ideals: i64 = (1..=n).filter(|d| n % d == 0).map(chi_minus_4).sum();
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], n.to_string());
        assert_eq!(row[1].parse::<f64>().unwrap(), ideals as f64, "n = {n}");
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
    }
    assert!(lines.next().is_none());
}

#[test]
fn sampling_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.toml", RIEMANN);
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let (code, _, stderr) = zetadist(&["sample", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{stderr}");
        bodies.push(fs::read(out.join("samples.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies.pop().unwrap()).unwrap();
    assert_eq!(text.lines().next(), Some("x_1"));
    assert_eq!(text.lines().count(), 201);
    // Atoms of the Riemann distribution sit at -ln n.
    for line in text.lines().skip(1) {
        let x: f64 = line.parse().unwrap();
        let n = (-x).exp();
        assert!((n - n.round()).abs() < 1e-6 * n, "{x}");
    }

    let out = tmp.path().join("c");
    let (code, _, _) =
        zetadist(&["sample", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "12"]);
    assert_eq!(code, 0);
    assert_ne!(fs::read(out.join("samples.csv")).unwrap(), bodies[0]);
}

#[test]
fn empty_table_writes_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("nested/empty.csv");
    emit_csv(&Table::new(["re", "im", "residual"]), &path).unwrap();
    assert_eq!(fs::read_to_string(path).unwrap(), "re,im,residual\n");
}

#[test]
fn cf_and_atom_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(RIEMANN).unwrap();
    cfg.output.dir = tmp.path().to_str().unwrap().to_string();

    let rep = run_command(Command::Cf, &cfg).unwrap();
    let cf = fs::read_to_string(&rep.files[0]).unwrap();
    assert_eq!(cf.lines().next(), Some("t,re_f,im_f,abs_f"));
    assert_eq!(cf.lines().count(), 1 + 5);
    let at_zero: Vec<f64> = cf.lines().nth(3).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(at_zero[0], 0.0);
    assert!((at_zero[1] - 1.0).abs() < 1e-12 && at_zero[2].abs() < 1e-12);

    let rep = run_command(Command::Dist, &cfg).unwrap();
    let atoms = fs::read_to_string(&rep.files[0]).unwrap();
    assert_eq!(atoms.lines().next(), Some("loc_1,mass"));
    let total: f64 = atoms
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!(total <= 1.0 + 1e-12 && total > 1.0 - 1e-5, "{total}");

    let multi = "\
[function]
kind = \"shintani\"
d = 2
m = 2
r = 2
lambda = [[1.0, 0.0], [0.0, 1.0]]
u = [1.0, 1.0]
c = [[1.0, 0.0], [0.0, 1.0]]

[action]
sigma = [3.0, 3.0]
delta = 0.001
";
    let mut cfg = parse_config(multi).unwrap();
    cfg.output.dir = tmp.path().join("two").to_str().unwrap().to_string();
    let rep = run_command(Command::Dist, &cfg).unwrap();
    let atoms = fs::read_to_string(&rep.files[0]).unwrap();
    assert_eq!(atoms.lines().next(), Some("loc_1,loc_2,mass"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();

    let bad_u = write(
        tmp.path(),
        "u.toml",
        "[function]\nkind = \"shintani\"\nd = 1\nm = 1\nr = 1\nlambda = [[1.0]]\nu = [-1.0]\nc = [[1.0]]\n",
    );
    let (code, _, stderr) = zetadist(&["eval", "--config", &bad_u]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 7") && stderr.contains("u_j must be positive"), "{stderr}");

    let unknown = write(tmp.path(), "k.toml", "[function]\nkind = \"special\"\nname = \"riemann\"\nbogus = 1\n");
    let (code, _, stderr) = zetadist(&["eval", "--config", &unknown]);
    assert_eq!(code, 2);
    assert!(stderr.contains("bogus"), "{stderr}");

    let (code, _, _) = zetadist(&["eval"]);
    assert_eq!(code, 2);

    let outside = write(
        tmp.path(),
        "o.toml",
        "[function]\nkind = \"special\"\nname = \"riemann\"\n[action]\ns = [[0.5, 0.0]]\n",
    );
    let (code, _, _) = zetadist(&["eval", "--config", &outside, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code, 3);

    let missing = tmp.path().join("nope.toml");
    let (code, _, _) = zetadist(&["eval", "--config", missing.to_str().unwrap()]);
    assert_eq!(code, 4);

    let cfg = write(tmp.path(), "r.toml", RIEMANN);
    let blocker = write(tmp.path(), "file", "");
    let (code, _, _) = zetadist(&["eval", "--config", &cfg, "--out", &format!("{blocker}/sub")]);
    assert_eq!(code, 4);
}
