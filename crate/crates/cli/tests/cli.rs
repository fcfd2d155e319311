//! End-to-end behavior of the `rqa` binary: exit codes, provenance
//! headers, determinism, and the documented command examples.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn rqa(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqa"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Non-comment lines of an output.
fn body(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn header_map(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            l.trim_start_matches('#')
                .trim()
                .split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
        })
        .collect()
}

#[test]
fn help_lists_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = rqa(&["--help"], dir.path());
    assert!(out.status.success());
    for cmd in ["generate", "analyze", "window", "jra", "pipeline", "render"] {
        assert!(stdout(&out).contains(cmd), "missing {cmd} in help");
    }
    let out = rqa(&["analyze", "--help"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    for flag in ["--epsilon", "--target-rr", "--norm", "--theiler", "--lmin", "--vmin"] {
        assert!(text.contains(flag), "missing {flag} in analyze help");
    }
    assert!(text.contains("default"), "defaults not shown");
}

#[test]
fn generate_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = rqa(
        &["generate", "--kind", "sine", "--period", "24", "--n", "200", "--seed", "7", "-o", "a.csv"],
        dir.path(),
    );
    assert!(a.status.success(), "{}", stderr(&a));
    let b = rqa(
        &["generate", "--kind", "sine", "--period", "24", "--n", "200", "--seed", "7", "-o", "b.csv"],
        dir.path(),
    );
    assert!(b.status.success());
    let fa = std::fs::read(dir.path().join("a.csv")).unwrap();
    let fb = std::fs::read(dir.path().join("b.csv")).unwrap();
    // bodies identical; headers differ only in the output name
    let sa = String::from_utf8(fa).unwrap();
    let sb = String::from_utf8(fb).unwrap();
    assert_eq!(body(&sa), body(&sb));
}

#[test]
fn analyze_sine_reports_high_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "sine", "--period", "24", "--n", "200", "--seed", "7", "-o", "s.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    let a = rqa(
        &["analyze", "s.csv", "--embedding-dim", "2", "--delay", "6", "--target-rr", "0.10"],
        dir.path(),
    );
    assert!(a.status.success(), "{}", stderr(&a));
    let out = stdout(&a);
    let rows = body(&out);
    assert_eq!(rows[0], "pixel_id,rr,det,lam,div,lmax");
    assert_eq!(rows.len(), 2, "one data row expected: {rows:?}");
    let cells: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(cells[0], "series");
    let det: f64 = cells[2].parse().unwrap();
    assert!(det >= 0.99, "DET = {det}");
}

#[test]
fn usage_errors_exit_one_and_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), "time,value\n0,1\n1,2\n").unwrap();
    let out = rqa(&["analyze", "s.csv", "--epsilon", "-1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--epsilon"), "{}", stderr(&out));
    assert_eq!(stderr(&out).trim().lines().count(), 1, "one-line diagnostic");

    let out = rqa(&["analyze", "s.csv", "--lmin", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--lmin"));

    let out = rqa(&["analyze", "s.csv", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--no-such-flag"));
}

#[test]
fn data_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let out = rqa(&["analyze", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.csv"));

    std::fs::write(dir.path().join("bad.csv"), "time,value\n0,1\n1,zap\n").unwrap();
    let out = rqa(&["analyze", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("bad.csv") && msg.contains("row 3"), "{msg}");

    // ragged long stack names the pixel situation
    std::fs::write(
        dir.path().join("ragged.csv"),
        "pixel_id,t_index,value\na,0,1\na,1,2\nb,0,1\nb,1,2\nb,2,3\n",
    )
    .unwrap();
    let out = rqa(&["analyze", "ragged.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn provenance_header_is_complete_and_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "white-noise", "--n", "64", "--seed", "3", "-o", "n.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    let a = rqa(&["analyze", "n.csv"], dir.path());
    assert!(a.status.success());
    let out = stdout(&a);
    for line in out.lines().take_while(|l| l.starts_with('#')) {
        assert!(
            line.trim_start_matches('#').trim().contains('='),
            "header line not key=value: {line}"
        );
    }
    let h = header_map(&out);
    // defaulted flags are present too
    for key in [
        "tool", "version", "command", "input", "format", "scale", "fill-missing",
        "embedding-dim", "delay", "auto-embed", "threshold-mode", "target-rr", "norm",
        "theiler", "lmin", "vmin", "shared-epsilon",
    ] {
        assert!(h.contains_key(key), "missing header key {key}");
    }
    assert_eq!(h["command"], "analyze");
    assert_eq!(h["norm"], "max");
    assert_eq!(h["target-rr"], "0.3");
}

#[test]
fn rerun_from_header_reproduces_the_body() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &[
            "generate", "--kind", "lorenz", "--n", "128", "--seed", "5", "--dt", "0.02",
            "--stride", "3", "--component", "x", "-o", "lx.csv",
        ],
        dir.path(),
    );
    assert!(g.status.success(), "{}", stderr(&g));
    let first = std::fs::read_to_string(dir.path().join("lx.csv")).unwrap();
    let h = header_map(&first);

    // rebuild the argv from the recorded parameter set
    let mut args: Vec<String> = vec!["generate".into()];
    for key in [
        "kind", "n", "seed", "period", "phase", "sigma", "rho", "beta", "dt", "initial",
        "transient", "stride", "component",
    ] {
        args.push(format!("--{key}"));
        args.push(h[key].clone());
    }
    args.push("-o".into());
    args.push("again.csv".into());
    let arg_refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let again = rqa(&arg_refs, dir.path());
    assert!(again.status.success(), "{}", stderr(&again));
    let second = std::fs::read_to_string(dir.path().join("again.csv")).unwrap();
    assert_eq!(body(&first), body(&second));
}

#[test]
fn inputs_are_never_mutated() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "sine", "--n", "120", "-o", "s.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    let before = std::fs::read(dir.path().join("s.csv")).unwrap();
    let a = rqa(
        &["analyze", "s.csv", "--target-rr", "0.2", "-o", "out.csv"],
        dir.path(),
    );
    assert!(a.status.success());
    let w = rqa(
        &["window", "s.csv", "--window-len", "40", "-o", "w.csv"],
        dir.path(),
    );
    assert!(w.status.success());
    let after = std::fs::read(dir.path().join("s.csv")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn window_csv_schema_and_na_fields() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "white-noise", "--n", "80", "--seed", "2", "-o", "n.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    // epsilon 0 on continuous noise leaves only the identity line:
    // DET and DIV are undefined
    let w = rqa(
        &["window", "n.csv", "--epsilon", "0", "--window-len", "40"],
        dir.path(),
    );
    assert!(w.status.success(), "{}", stderr(&w));
    let rows = body(&stdout(&w));
    assert_eq!(rows[0], "start_index,end_index,rr,det,lam,div,lmax");
    let cells: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(cells[0], "0");
    assert_eq!(cells[1], "39");
    assert_eq!(cells[3], "NA");
    assert_eq!(cells[5], "NA");
    assert_eq!(cells[6], "0");
}

#[test]
fn jra_against_self_equals_window() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "sine", "--period", "17", "--n", "150", "-o", "s.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    let w = rqa(
        &["window", "s.csv", "--window-len", "50", "--step", "5", "--target-rr", "0.2"],
        dir.path(),
    );
    let j = rqa(
        &[
            "jra", "-a", "s.csv", "-b", "s.csv", "--window-len", "50", "--step", "5",
            "--target-rr", "0.2",
        ],
        dir.path(),
    );
    assert!(w.status.success() && j.status.success());
    assert_eq!(body(&stdout(&w)), body(&stdout(&j)));
}

#[test]
fn render_pgm_shape_and_ascii() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "sine", "--period", "8", "--n", "20", "-o", "s.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    let r = rqa(
        &[
            "render", "s.csv", "--embedding-dim", "1", "--delay", "1", "--epsilon", "0.5",
            "-o", "p.pgm",
        ],
        dir.path(),
    );
    assert!(r.status.success(), "{}", stderr(&r));
    let bytes = std::fs::read(dir.path().join("p.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n20 20\n255\n"));
    assert_eq!(bytes.len(), b"P5\n20 20\n255\n".len() + 400);
    assert!(bytes.iter().skip(13).all(|&b| b == 0 || b == 255));

    let a = rqa(
        &[
            "render", "s.csv", "--embedding-dim", "1", "--delay", "1", "--epsilon", "0.5",
            "--plot-format", "ascii",
        ],
        dir.path(),
    );
    assert!(a.status.success());
    let art = stdout(&a);
    assert_eq!(art.lines().count(), 20);
    assert!(art.lines().all(|l| l.len() == 20));
    assert!(art.chars().all(|c| c == '#' || c == '.' || c == '\n'));
}

#[test]
fn evi_command_computes_the_index() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bands.csv"),
        "time,nir,red,blue\n0,0.1,0.1,0.05\n16,0.5,0.1,0.05\n",
    )
    .unwrap();
    let out = rqa(&["evi", "bands.csv"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = body(&stdout(&out));
    assert_eq!(rows[0], "time,value");
    let v0: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    let v1: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(v0, 0.0);
    assert!((v1 - 1.0 / 1.725).abs() < 1e-12);

    // scaled integer reflectances
    std::fs::write(
        dir.path().join("ints.csv"),
        "nir,red,blue\n5000,1000,500\n",
    )
    .unwrap();
    let out = rqa(&["evi", "ints.csv", "--scale", "1e-4"], dir.path());
    assert!(out.status.success());
    let rows = body(&stdout(&out));
    let v: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 1.0 / 1.725).abs() < 1e-12);
}

#[test]
fn embed_params_selects_sine_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let g = rqa(
        &["generate", "--kind", "sine", "--period", "24", "--n", "1000", "-o", "s.csv"],
        dir.path(),
    );
    assert!(g.status.success());
    let out = rqa(&["embed-params", "s.csv", "--max-lag", "20"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let h = header_map(&text);
    let tau: i64 = h["selected-delay"].parse().unwrap();
    assert!((4..=8).contains(&tau), "tau = {tau}");
    assert_eq!(h["selected-dimension"], "2");
    // curves present
    assert!(text.lines().any(|l| l.starts_with("mi,0,")));
    assert!(text.lines().any(|l| l.starts_with("fnn,1,")));
}

#[test]
fn pipeline_pooled_flag_changes_the_test() {
    let dir = tempfile::tempdir().unwrap();
    let mut content = String::from("pixel_id,t_index,value\n");
    for (pixel, jitter) in [("a", 0.11), ("b", 0.23), ("c", 0.37), ("d", 0.52)] {
        for t in 0..100 {
            let v = 0.4
                + 0.1 * (2.0 * std::f64::consts::PI * t as f64 / 23.0 + jitter * 7.0).sin()
                + jitter * ((t * t % 17) as f64) * 0.002;
            content.push_str(&format!("{pixel},{t},{v}\n"));
        }
    }
    std::fs::write(dir.path().join("g1.csv"), &content).unwrap();
    std::fs::write(dir.path().join("g2.csv"), content.replace("0.4", "0.45")).unwrap();
    let run = |extra: &[&str], out: &str| {
        let mut args = vec![
            "pipeline", "--stack", "g1=g1.csv", "--stack", "g2=g2.csv", "--split-pre-end",
            "44", "--split-post-start", "55", "--window-lens", "40", "--out-dir", out,
        ];
        args.extend_from_slice(extra);
        let o = rqa(&args, dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(dir.path().join(out).join("ttests.csv")).unwrap()
    };
    let welch = run(&[], "w");
    let pooled = run(&["--pooled"], "p");
    let df_col = |text: &str| -> Vec<String> {
        body(text)
            .iter()
            .skip(1)
            .map(|row| row.split(',').nth(4).unwrap().to_string())
            .collect()
    };
    let dw = df_col(&welch);
    let dp = df_col(&pooled);
    assert_eq!(dw.len(), dp.len());
    assert_ne!(dw, dp, "pooled test should change degrees of freedom");
    // pooled df is always the integer n_a + n_b - 2
    assert!(dp.iter().all(|d| d == "6"), "{dp:?}");
}

#[test]
fn analyze_long_stack_yields_row_per_pixel() {
    let dir = tempfile::tempdir().unwrap();
    let mut content = String::from("pixel_id,t_index,value\n");
    for pixel in ["a", "b", "c"] {
        for t in 0..60 {
            let v = ((t as f64) * 0.3 + pixel.len() as f64).sin();
            content.push_str(&format!("{pixel},{t},{v}\n"));
        }
    }
    std::fs::write(dir.path().join("stack.csv"), content).unwrap();
    let out = rqa(
        &["analyze", "stack.csv", "--embedding-dim", "1", "--target-rr", "0.2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = body(&stdout(&out));
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("a,"));
    assert!(rows[3].starts_with("c,"));
}
