use rsmask_core::campaign::*;
use rsmask_core::datapath::Model;
use rsmask_core::fault::{FaultKind, FaultSpec};
use rsmask_core::leakage::Partition;

fn cfg(json: &str) -> CampaignConfig {
    CampaignConfig::from_json(json).unwrap()
}

#[test]
fn config_defaults_and_round_trip() {
    let c = CampaignConfig::default();
    assert_eq!(c.model, Model::Ti);
    assert_eq!(c.sigma, 1.0);
    assert_eq!(c.partition, Partition::default());
    assert_eq!(CampaignConfig::from_json(&c.to_json()).unwrap(), c);
    let k = cfg(r#"{"key":"000102030405060708090a0b0c0d0e0f","model":"rs-mask"}"#);
    assert_eq!(k.resolved_key()[15], 0x0f);
    assert_ne!(c.hash(), k.hash());
}

#[test]
fn config_rejects_unknown_fields_and_bad_keys() {
    assert!(matches!(CampaignConfig::from_json(r#"{"modle":"ti"}"#), Err(ConfigError::Parse(_))));
    assert!(matches!(CampaignConfig::from_json(r#"{"key":"abcd"}"#), Err(ConfigError::Parse(_))));
    assert!(matches!(CampaignConfig::from_json(r#"{"model":"aes"}"#), Err(ConfigError::Parse(_))));
}

#[test]
fn unknown_node_rejected_before_running() {
    let c = cfg(r#"{"faults":[{"node":"inv8.nowhere","kind":"stuck-at-0","round":9,"byte":0}]}"#);
    assert!(matches!(run_sifa(&c, None), Err(ConfigError::Datapath(_))));
    assert!(matches!(run_distribution(&c, None), Err(ConfigError::Datapath(_))));
    let d = cfg(r#"{"models":["ti"]}"#);
    assert!(matches!(run_differential(&d, None), Err(ConfigError::Datapath(_))));
}

#[test]
fn invalid_values_rejected() {
    assert!(run_sifa(&cfg(r#"{"traces":0}"#), None).is_err());
    assert!(run_sifa(&cfg(r#"{"checkpoints":[500,250]}"#), None).is_err());
    assert!(run_tvla(&cfg(r#"{"sigma":-1}"#), None).is_err());
    let faulted = cfg(r#"{"faults":[{"node":"in.x.s0","kind":"stuck-at-0","round":1,"byte":0}]}"#);
    assert!(run_tvla(&faulted, None).is_err());
}

#[test]
fn geometric_checkpoints() {
    let c = cfg(r#"{"traces":3000}"#);
    assert_eq!(c.checkpoint_list(), vec![250, 500, 1000, 2000, 3000]);
    let c = cfg(r#"{"traces":1000,"checkpoints":[100,400,1000,5000]}"#);
    assert_eq!(c.checkpoint_list(), vec![100, 400, 1000]);
}

#[test]
fn no_faults_means_all_ineffective_and_ties() {
    let c = cfg(r#"{"faults":[],"traces":2000,"target":"single-byte"}"#);
    let r = run_sifa(&c, None).unwrap();
    assert_eq!(r.ineffective, 2000);
    assert_eq!(r.effective, 0);
    assert!(r.all_keys_tied);
    assert!(r.correct_hist.chi_square_uniform().unwrap().p_value > 1e-6);
}

#[test]
fn final_round_single_byte_sifa_is_blind() {
    // InvSbox(c ^ k) permutes the ciphertext histogram for every k.
    let c = CampaignConfig {
        faults: Some(vec![FaultSpec::new("inv8.d.x01.gf4m0", FaultKind::StuckAt1, 10, 3)]),
        target: TargetKind::SingleByte,
        traces: 3000,
        ..CampaignConfig::default()
    };
    let r = run_sifa(&c, None).unwrap();
    assert!(r.effective > 0);
    assert!(r.all_keys_tied);
}

#[test]
fn ti_sifa_recovers_key() {
    let c = cfg(r#"{"model":"ti","traces":4000,"seed":3}"#);
    let r = run_sifa(&c, None).unwrap();
    assert_eq!(r.rank, Some(1));
    assert!(r.sustained_rank1_from.is_some());
    assert!(r.correct_hist.chi_square_uniform().unwrap().p_value < 1e-6);
}

#[test]
fn sifa_artifacts_are_deterministic() {
    let c = cfg(r#"{"model":"rs-mask","traces":1500,"seed":11}"#);
    let a = run_sifa(&c, None).unwrap().artifacts(&c);
    let b = run_sifa(&c, None).unwrap().artifacts(&c);
    assert_eq!(a, b);
    let names: Vec<_> = a.iter().map(|x| x.name.as_str()).collect();
    assert_eq!(names, ["sei_curve.csv", "histograms.csv", "key_ranking.csv", "summary.json"]);
    let curve = &a[0].body;
    assert!(curve.starts_with(&format!("# rsmask {VERSION}\n# config-sha256 {}\n# seed 11\n", c.hash())));
    assert!(curve.contains("\nn,encryptions,sei_correct,sei_max_wrong,rank\n250,"));
    assert_eq!(a[1].body.lines().filter(|l| !l.starts_with('#')).count(), 257);
    assert_eq!(a[2].body.lines().filter(|l| !l.starts_with('#')).count(), 257);
    let other = cfg(r#"{"model":"rs-mask","traces":1500,"seed":12}"#);
    assert_ne!(run_sifa(&other, None).unwrap().artifacts(&other)[0], a[0]);
}

#[test]
fn full_engine_sifa_run() {
    let c = cfg(r#"{"model":"ti","traces":500,"engine":"full","seed":5}"#);
    let r = run_sifa(&c, None).unwrap();
    assert_eq!(r.ineffective, 500);
    assert!(r.effective > 0);
}

#[test]
fn distribution_small_run() {
    let c = cfg(r#"{"model":"rs-mask","traces":20000,"seed":1}"#);
    let r = run_distribution(&c, None).unwrap();
    assert_eq!((r.faulty_n, r.correct_n), (20000, 20000));
    let art = r.artifacts(&c);
    assert_eq!(art, run_distribution(&c, None).unwrap().artifacts(&c));
    assert!(art[1].body.contains("\"faulty_p\""));
}

#[test]
fn differential_small_run() {
    let c = cfg(r#"{"traces":1000,"seed":2}"#);
    let r = run_differential(&c, None).unwrap();
    assert_eq!(r.runs.len(), 2);
    assert!(r.runs[0].recovered, "plain rs-mask");
    assert!(!r.runs[1].recovered, "infective");
    let art = r.artifacts(&c);
    assert!(art[0].body.contains("\nrs-mask,250,"));
    assert!(art[0].body.contains("\ninfective,1000,"));
}

#[test]
fn tvla_small_runs() {
    let c = cfg(r#"{"model":"unprotected","traces":5000}"#);
    let r = run_tvla(&c, None).unwrap();
    assert!(r.leakage_detected);
    assert_eq!(r.n_a + r.n_b, 5000);
    let art = r.artifacts(&c);
    assert_eq!(art, run_tvla(&c, None).unwrap().artifacts(&c));
    let noisy = cfg(r#"{"model":"unprotected","traces":5000,"sigma":1000}"#);
    assert!(!run_tvla(&noisy, None).unwrap().leakage_detected);
    let fvr = cfg(r#"{"model":"unprotected","traces":4000,"partition":{"kind":"fixed-vs-random","fixed":"00112233445566778899aabbccddeeff"}}"#);
    assert!(run_tvla(&fvr, None).unwrap().leakage_detected);
}

#[test]
fn stop_flag_truncates() {
    let stop = std::sync::atomic::AtomicBool::new(true);
    let c = cfg(r#"{"traces":1000}"#);
    let r = run_sifa(&c, Some(&stop)).unwrap();
    assert!(r.truncated);
    assert_eq!(r.encryptions, 0);
    let art = r.artifacts(&c);
    assert!(art[0].body.contains("# truncated\n"));
    assert!(art.iter().all(|a| a.name != "key_ranking.csv"));
}
