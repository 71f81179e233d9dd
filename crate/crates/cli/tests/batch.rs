mod support;

use support::{batch_corpus, p, ucdi};
use ucdi_cli::analysis::{BatchLine, ItemStatus};
use ucdi_cli::report::ReportDocument;

fn read_lines(path: &std::path::Path) -> Vec<BatchLine> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn batch_of_one_matches_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let (photos, map) = batch_corpus(dir.path(), 1, 480, 300, 3);
    let out = dir.path().join("out.ndjson");
    let o = ucdi(&["batch", p(&photos), "--templates", p(&map), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = read_lines(&out);
    assert_eq!(lines.len(), 1);

    let photo = photos.join("ten/note000.png");
    let report = dir.path().join("single.json");
    let reference = dir.path().join("refs/ten.png");
    let o = ucdi(&["analyze", p(&reference), p(&photo), "--out", p(&report)]);
    assert_eq!(o.status.code(), Some(0));
    let doc: ReportDocument = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(lines[0].status, ItemStatus::Ok);
    assert_eq!(lines[0].report.as_ref(), Some(&doc.report));
    assert_eq!(lines[0].sha256.as_deref(), Some(doc.inputs.damaged.sha256.as_str()));
}

#[test]
fn unreadable_item_is_recorded_inline() {
    let dir = tempfile::tempdir().unwrap();
    let (photos, map) = batch_corpus(dir.path(), 4, 400, 250, 5);
    std::fs::write(photos.join("ten/broken.png"), b"\x89PNG truncated").unwrap();
    let out = dir.path().join("out.ndjson");
    let o = ucdi(&["batch", p(&photos), "--templates", p(&map), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let lines = read_lines(&out);
    assert_eq!(lines.len(), 5);
    let errors: Vec<_> = lines.iter().filter(|l| l.status == ItemStatus::Error).collect();
    assert_eq!(errors.len(), 1);
    assert!(errors[0].input.ends_with("broken.png") && errors[0].error.is_some());
    let inputs: Vec<_> = lines.iter().map(|l| l.input.clone()).collect();
    let mut sorted = inputs.clone();
    sorted.sort();
    assert_eq!(inputs, sorted);
    assert!(support::stdout(&o).contains("error 1"));
}

#[test]
fn unknown_denomination_is_an_item_error() {
    let dir = tempfile::tempdir().unwrap();
    let (photos, map) = batch_corpus(dir.path(), 2, 400, 250, 6);
    std::fs::create_dir_all(photos.join("hundred")).unwrap();
    std::fs::copy(photos.join("ten/note000.png"), photos.join("hundred/x.png")).unwrap();
    let out = dir.path().join("out.ndjson");
    let o = ucdi(&["batch", p(&photos), "--templates", p(&map), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let lines = read_lines(&out);
    let odd = lines.iter().find(|l| l.denomination == "hundred").unwrap();
    assert_eq!(odd.status, ItemStatus::Error);
    assert!(odd.reference.is_none());
}

#[test]
fn list_file_input_and_stdout_stream() {
    let dir = tempfile::tempdir().unwrap();
    let (_, map) = batch_corpus(dir.path(), 2, 400, 250, 7);
    let list = dir.path().join("items.txt");
    std::fs::write(&list, "photos/fifty/note001.png\n# skipped\nphotos/ten/note000.png\n").unwrap();
    let o = ucdi(&["batch", p(&list), "--templates", p(&map)]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<BatchLine> = support::stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].input < lines[1].input);
    assert!(String::from_utf8_lossy(&o.stderr).contains("items 2"));
}

#[test]
fn worker_count_does_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (photos, map) = batch_corpus(dir.path(), 12, 400, 250, 8);
    let run = |workers: &str| {
        let out = dir.path().join(format!("w{workers}.ndjson"));
        let o = ucdi(&["batch", p(&photos), "--templates", p(&map), "--out", p(&out), "--workers", workers, "--seed", "9"]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("1"), run("8"));
}

#[test]
fn bad_template_map_or_empty_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let map = dir.path().join("t.map");
    std::fs::write(&map, "ten = ref.png\n").unwrap();
    assert_eq!(ucdi(&["batch", p(&empty), "--templates", p(&map)]).status.code(), Some(2));
    let missing = dir.path().join("absent.map");
    assert_eq!(ucdi(&["batch", p(&empty), "--templates", p(&missing)]).status.code(), Some(2));
}
