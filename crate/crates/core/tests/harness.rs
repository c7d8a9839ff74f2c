use brownian_lab::harness::{compare_outputs, run, ExperimentConfig, ExperimentKind};
use serde_json::Value;

fn summary(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn heat_content_reports_duality_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::HeatContent);
    cfg.s_list = vec![2.0, 1.0];
    cfg.t_list = vec![1.0, 2.0];
    cfg.replicas = 20;
    cfg.h_rel = Some(0.3);
    cfg.output = dir.path().into();
    let out = run(&cfg).unwrap();
    let rows = csv::Reader::from_path(&out.csv).unwrap().records().count();
    assert_eq!(rows, 4);
    let v = summary(&out.summary);
    let duality = v["duality"].as_array().unwrap();
    assert_eq!(duality.len(), 1);
    assert_eq!(duality[0]["s"], 1.0);
    assert_eq!(duality[0]["t"], 2.0);
    assert!(duality[0]["z"].as_f64().unwrap().is_finite());
    assert!(v["config"].get("output").is_none());
    let svg = std::fs::read_to_string(&out.plots[0]).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn inradius_summary_carries_theory_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Inradius);
    cfg.s_list = vec![1.0, 2.0, 4.0];
    cfg.replicas = 4;
    cfg.g = Some(12);
    cfg.output = dir.path().into();
    let v = summary(&run(&cfg).unwrap().summary);
    let limit = v["theory"]["levelled_constant"].as_f64().unwrap();
    assert!((limit - 3.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-12);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert!(!v["fit"].is_null() || !v["fit_error"].is_null());
}

#[test]
fn thread_count_does_not_change_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::CoverTime);
    cfg.m = 2;
    cfg.s_list = vec![0.3];
    cfg.eps_list = vec![0.05, 0.1];
    cfg.replicas = 6;
    cfg.g = Some(16);
    let outs: Vec<_> = [1usize, 4]
        .into_iter()
        .map(|threads| {
            let mut c = cfg.clone();
            c.output = dir.path().join(format!("t{threads}"));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run(&c)).unwrap()
        })
        .collect();
    compare_outputs(&outs[0], &outs[1]).unwrap();
}

#[test]
fn invalid_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::new(ExperimentKind::Spectrum);
    cfg.eps_list = vec![0.3];
    cfg.output = dir.path().join("never");
    assert!(run(&cfg).is_err());
    assert!(!cfg.output.exists());
}
