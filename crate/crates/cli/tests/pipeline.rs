mod common;

use common::{error_kind, Project};

#[test]
fn stage_before_its_dependency_fails_with_kind() {
    let p = Project::new();
    let out = p.run(&["dedup"]);
    assert!(!out.status.success());
    assert_eq!(error_kind(&out), "ordered-dependency");
}

#[test]
fn extract_resumes_after_limit() {
    let p = Project::new();
    p.ok(&["fetch"]);
    let first = p.ok(&["extract", "--limit", "1"]);
    assert_eq!(first[0]["complete"], false);
    assert_eq!(first[0]["counts"]["archives_extracted"], 1);

    let out = p.run(&["clean"]);
    assert_eq!(error_kind(&out), "ordered-dependency");

    let second = p.ok(&["extract"]);
    assert_eq!(second[0]["complete"], true);
    assert_eq!(second[0]["counts"]["archives_extracted_this_run"], 2);
    assert_eq!(second[0]["counts"]["archives_extracted"], 3);

    let again = p.ok(&["extract"]);
    assert_eq!(again[0]["up_to_date"], true);

    // The resumed run ends where an uninterrupted one does.
    p.ok(&["run-all"]);
    let fresh = Project::new();
    fresh.ok(&["run-all"]);
    assert_eq!(p.files("work/shards"), fresh.files("work/shards"));
}

#[test]
fn run_all_is_deterministic() {
    let a = Project::new();
    let b = Project::new();
    let sa = a.ok(&["run-all"]);
    b.ok(&["run-all"]);
    assert_eq!(sa.len(), 7);
    assert!(sa.iter().all(|s| s["complete"] == true));
    for dir in ["work/shards", "work/report", "work/audit", "work/dedup"] {
        let (fa, fb) = (a.files(dir), b.files(dir));
        assert!(!fa.is_empty(), "{dir} is empty");
        assert_eq!(fa, fb, "{dir} differs");
    }
}

#[test]
fn fixture_corpus_outcome() {
    let p = Project::new();
    let s = p.ok(&["run-all"]);
    let by_stage = |name: &str| s.iter().find(|x| x["stage"] == name).unwrap()["counts"].clone();

    let fetch = by_stage("fetch");
    assert_eq!(fetch["archives"], 3);
    assert_eq!(fetch["missing"], 1);

    let extract = by_stage("extract");
    assert_eq!(extract["quarantined"], 1);

    let clean = by_stage("clean");
    assert_eq!(clean["excluded_form"], 1);
    assert_eq!(clean["too_short"], 1);

    let dedup = by_stage("dedup");
    assert_eq!(dedup["removed"], 1);
    assert_eq!(dedup["fraud_documents"], 1);

    let split = by_stage("split");
    assert_eq!((split["clean"].clone(), split["fraud"].clone(), split["final"].clone()), (5.into(), 1.into(), 4.into()));

    let quarantined = p.root().join("work/extract/quarantine/20210105/0000009999-21-000001.nc");
    assert!(quarantined.exists());

    let overlap: serde_json::Value =
        serde_json::from_slice(&std::fs::read(p.root().join("work/audit/overlap.json")).unwrap()).unwrap();
    assert_eq!(overlap["overlap"]["matched"], 1);

    let report = std::fs::read_to_string(p.root().join("work/report/volume_by_industry.txt")).unwrap();
    assert!(report.contains("Automobiles and Trucks"));
    assert!(report.contains("Banks"));
}

#[test]
fn audit_subset_then_rest() {
    let p = Project::new();
    for stage in ["fetch", "extract", "clean", "dedup", "split"] {
        p.ok(&[stage]);
    }
    let s = p.ok(&["audit", "pronouns", "volume"]);
    assert_eq!(s[0]["complete"], false);
    assert!(p.root().join("work/audit/pronouns.json").exists());
    assert!(!p.root().join("work/audit/toxicity.json").exists());
    assert_eq!(error_kind(&p.run(&["report"])), "ordered-dependency");

    let s = p.ok(&["audit", "descriptors", "toxicity", "overlap"]);
    assert_eq!(s[0]["complete"], true);
    p.ok(&["report"]);
}

#[test]
fn changed_config_needs_restart() {
    let p = Project::new();
    p.ok(&["fetch"]);
    let out = p.run(&["--seed", "7", "fetch"]);
    assert_eq!(error_kind(&out), "config-digest-mismatch");
    let s = p.ok(&["--seed", "7", "--restart", "fetch"]);
    assert_eq!(s[0]["complete"], true);
}

#[test]
fn restart_discards_later_checkpoints() {
    let p = Project::new();
    p.ok(&["run-all"]);
    p.ok(&["--restart", "clean"]);
    assert!(!p.root().join("work/checkpoints/dedup.json").exists());
    assert_eq!(error_kind(&p.run(&["split"])), "ordered-dependency");
    let s = p.ok(&["run-all"]);
    assert!(s.iter().all(|x| x["complete"] == true));
}
