mod support;

use support::{p, ucdi, ucdi_env};
use ucdi_cli::fixtures::{bundled_dir, CLEAN};
use ucdi_cli::report::ReportDocument;

fn analyze_with(args: &[&str], env: &[(&str, &str)], dir: &std::path::Path) -> (Option<i32>, Option<ReportDocument>) {
    let clean = bundled_dir().join(CLEAN);
    let out = dir.join("r.json");
    let mut full = vec!["analyze", p(&clean), p(&clean), "--out", p(&out)];
    full.extend_from_slice(args);
    let o = ucdi_env(&full, env);
    let doc = std::fs::read_to_string(&out).ok().map(|t| serde_json::from_str(&t).unwrap());
    (o.status.code(), doc)
}

#[test]
fn file_values_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, "[ucdi]\nz_max = 12\n[detector]\nmax_keypoints = 900\n").unwrap();
    let (code, doc) = analyze_with(&["--config", p(&cfg)], &[], dir.path());
    assert_eq!(code, Some(0));
    let doc = doc.unwrap();
    assert_eq!(doc.config.analysis.ucdi.z_max, 12.0);
    assert_eq!(doc.config.analysis.align.detector.max_keypoints, 900);
}

#[test]
fn env_var_names_the_config_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, "[align]\nratio_test = 0.7\nseed = 4\n").unwrap();
    let env = [("UCDI_CONFIG", p(&cfg))];
    let (code, doc) = analyze_with(&["--set", "align.ratio_test=0.8"], &env, dir.path());
    assert_eq!(code, Some(0));
    let a = doc.unwrap().config.analysis.align;
    assert_eq!((a.ratio_test, a.seed), (0.8, 4));
    let (_, doc) = analyze_with(&["--seed", "6"], &env, dir.path());
    assert_eq!(doc.unwrap().config.analysis.align.seed, 6);
}

#[test]
fn invalid_config_exits_2_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    for body in ["[align]\nratio = 0.7\n", "[nope]\nx = 1\n", "[align]\nratio_test = 1.5\n", "[enhance]\nclahe_tiles = 8\n"] {
        std::fs::write(&cfg, body).unwrap();
        let (code, doc) = analyze_with(&["--config", p(&cfg)], &[], dir.path());
        assert_eq!(code, Some(2), "{body:?}");
        assert!(doc.is_none());
    }
    let (code, _) = analyze_with(&["--set", "ucdi.z_max"], &[], dir.path());
    assert_eq!(code, Some(2));
    let missing = dir.path().join("absent.ini");
    assert_eq!(analyze_with(&["--config", p(&missing)], &[], dir.path()).0, Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(ucdi(&[]).status.code(), Some(2));
    assert_eq!(ucdi(&["analyze", "only-one.png"]).status.code(), Some(2));
    assert_eq!(ucdi(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(ucdi(&["--help"]).status.code(), Some(0));
}
