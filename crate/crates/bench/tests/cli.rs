use std::process::Command;

use sem_bench::report::{read_csv, read_json_lines, PerfRow, RooflineRow};

fn sembench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sembench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("sembench-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const SMALL: [&str; 8] = [
    "--elements",
    "512",
    "--degree",
    "4",
    "--iterations",
    "3",
    "--workers",
    "1",
];

#[test]
fn verify_filter_passes() {
    let out = sembench(&["verify", "--filter", "ax"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.matches("[PASS] ax.").count(), 6);
    assert!(!text.contains("[PASS] cg."));
}

#[test]
fn bench_writes_one_csv_row_per_variant() {
    let path = tmp("bench.csv");
    let mut args = vec!["bench", "--variant", "all", "--output", path.to_str().unwrap()];
    args.extend(SMALL);
    let out = sembench(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# sembench-report/1\n"));
    let rows: Vec<PerfRow> = read_csv(text.as_bytes()).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.variant.as_str()).collect::<Vec<_>>(),
        ["reference", "scratch", "layered"]
    );
    for r in &rows {
        assert!(r.is_ok() && r.all_finite());
        assert_eq!((r.elements, r.dofs, r.iterations, r.workers), (512, 64_000, 3, 1));
        assert_eq!(r.model_flops_per_iteration, 64_000 * 94);
    }
}

#[test]
fn bench_defaults_to_one_layered_row_in_json() {
    let mut args = vec!["bench", "--format", "json", "--include-dssum"];
    args.extend(SMALL);
    let out = sembench(&args);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<PerfRow> = read_json_lines(&out.stdout[..]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].variant, "layered");
    assert!(rows[0].include_dssum);
    assert!(rows[0].ax_seconds > 0.0 && rows[0].ax_dssum_seconds >= rows[0].ax_seconds);
}

#[test]
fn sweep_gnuplot_blocks() {
    let out = sembench(&[
        "sweep",
        "--sweep",
        "64,512",
        "--degree",
        "4",
        "--iterations",
        "2",
        "--workers",
        "1",
        "--format",
        "gnuplot",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for block in [
        "# variant layered",
        "# variant reference",
        "# variant scratch",
        "# roofline",
    ] {
        assert!(text.contains(block), "{text}");
    }
    assert!(text.lines().any(|l| l.starts_with("512 ")));
}

#[test]
fn roofline_reports_probe() {
    let out = sembench(&["roofline", "--elements", "512", "--degree", "4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<RooflineRow> = read_json_lines(&out.stdout[..]).unwrap();
    assert_eq!(rows[0].dofs, 64_000);
    assert_eq!(rows[0].payload_bytes, 15_360_000);
    assert!(rows[0].measured_bandwidth_gbs > 0.0 && rows[0].roofline_peak_gflops > 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(sembench(&["bench", "--iterations", "0"]).status.code(), Some(2));
    assert_eq!(sembench(&["sweep", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(sembench(&["frobnicate"]).status.code(), Some(2));
    let mut args = vec!["bench", "--output", "/nonexistent-dir/report.csv"];
    args.extend(SMALL);
    assert_eq!(sembench(&args).status.code(), Some(3));
    assert_eq!(sembench(&["--help"]).status.code(), Some(0));
}
