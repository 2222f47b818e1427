mod common;

use common::*;
use pdd_core::ingest::Provenance;
use pdd_core::lattice::PeriodicSet;
use pdd_core::pipeline::InvariantRecord;
use pdd_core::{build_mst, emd, scan_duplicates, InvariantStore};
use rand::seq::SliceRandom;
use rand::Rng;

fn record(label: &str, set: &PeriodicSet, k: usize) -> InvariantRecord {
    let prov = Provenance { path: format!("{label}.json"), block: None };
    InvariantRecord::compute(label, &set.clone().into(), prov, k, 0.0).unwrap()
}

fn store_of(entries: &[(String, PeriodicSet)], k: usize) -> InvariantStore {
    let mut store = InvariantStore::new(k);
    for (label, set) in entries {
        store.insert(record(label, set, k)).unwrap();
    }
    store
}

/// A random store in which some records are rigid or slightly perturbed copies of others.
fn random_entries(rng: &mut TestRng, count: usize) -> Vec<(String, PeriodicSet)> {
    let mut out: Vec<(String, PeriodicSet)> = Vec::new();
    while out.len() < count {
        let i = out.len();
        let set = if i > 0 && rng.gen_bool(0.4) {
            let base = out[rng.gen_range(0..i)].1.clone();
            let copy = rigid_copy(rng, &base);
            if rng.gen_bool(0.5) {
                copy
            } else {
                let eps = rng.gen_range(0.0..0.01);
                let pts: Vec<Vec<f64>> = copy
                    .to_cartesian()
                    .iter()
                    .map(|p| p.iter().map(|x| x + rng.gen_range(-eps..=eps)).collect())
                    .collect();
                PeriodicSet::from_cartesian(copy.lattice().clone(), &pts).unwrap()
            }
        } else {
            let n = rng.gen_range(1..=3);
            let m = rng.gen_range(1..=4);
            random_periodic_set(rng, n, m)
        };
        out.push((format!("r{i:02}"), set));
    }
    out
}

/// All pairs by exact EMD, sorted like the scan output.
fn brute_force_pairs(store: &InvariantStore, threshold: f64) -> Vec<(String, String, f64)> {
    let records = store.records();
    let mut out = Vec::new();
    for (s, a) in records.iter().enumerate() {
        for b in &records[s + 1..] {
            let d = emd(&a.pdd, &b.pdd).unwrap().0;
            if d <= threshold {
                out.push((a.label.clone(), b.label.clone(), d));
            }
        }
    }
    out.sort_by(|x, y| x.2.total_cmp(&y.2).then_with(|| (&x.0, &x.1).cmp(&(&y.0, &y.1))));
    out
}

fn scanned(store: &InvariantStore, amd_t: f64, emd_t: f64) -> Vec<(String, String, f64)> {
    scan_duplicates(store, amd_t, emd_t)
        .unwrap()
        .pairs
        .into_iter()
        .map(|p| (p.label_a, p.label_b, p.emd))
        .collect()
}

#[test]
fn scan_equals_all_pairs_thresholding() {
    let mut rng = rng(71);
    for trial in 0..12 {
        let count = rng.gen_range(2..=50);
        let store = store_of(&random_entries(&mut rng, count), 12);
        for threshold in [0.0, 1e-9, 0.01, 0.05, 0.3] {
            assert_eq!(scanned(&store, threshold, threshold), brute_force_pairs(&store, threshold), "trial {trial}");
        }
        // a smaller AMD threshold is raised, so nothing is lost
        assert_eq!(scanned(&store, 0.0, 0.05), brute_force_pairs(&store, 0.05));
    }
}

#[test]
fn moved_copy_is_the_only_duplicate() {
    let mut rng = rng(72);
    let s = s_of(0.5);
    let entries = vec![
        ("s".to_string(), s.clone()),
        ("s-moved".to_string(), rigid_copy(&mut rng, &s)),
        ("q".to_string(), q_of(0.5)),
    ];
    let store = store_of(&entries, 8);
    let report = scan_duplicates(&store, 0.01, 0.01).unwrap();
    assert_eq!(report.pairs.len(), 1);
    let p = &report.pairs[0];
    assert_eq!((p.label_a.as_str(), p.label_b.as_str()), ("s", "s-moved"));
    assert!(p.emd <= 1e-9 && p.amd_gap <= p.emd + 1e-12);
}

#[test]
fn zero_threshold_keeps_exact_matches() {
    let s = s_of(0.25);
    // a translate along the line has bit-identical distances
    let shifted: Vec<Vec<f64>> = s.to_cartesian().iter().map(|p| vec![p[0] + 2.0]).collect();
    let entries = vec![
        ("a".to_string(), s.clone()),
        ("b".to_string(), PeriodicSet::from_cartesian(s.lattice().clone(), &shifted).unwrap()),
        ("c".to_string(), s_of(0.75)),
    ];
    let store = store_of(&entries, 8);
    let pairs = scanned(&store, 0.0, 0.0);
    let brute = brute_force_pairs(&store, 0.0);
    assert_eq!(pairs, brute);
    for (a, b, d) in &pairs {
        assert_eq!(*d, 0.0);
        assert_eq!(store.get(a).unwrap().pdd, store.get(b).unwrap().pdd);
    }
}

fn exhaustive_weight(store: &InvariantStore) -> f64 {
    let records = store.records();
    exhaustive_mst_weight(records.len(), |i, j| emd(&records[i].pdd, &records[j].pdd).unwrap().0)
}

#[test]
fn mst_matches_exhaustive_oracle() {
    let mut rng = rng(73);
    for _ in 0..25 {
        let store = store_of(&random_entries(&mut rng, 5), 10);
        let mst = build_mst(&store, 4).unwrap();
        assert!(!mst.approximate);
        assert_eq!(mst.edges.len(), 4);
        assert!((mst.total_weight - exhaustive_weight(&store)).abs() <= 1e-9);
        // pruning can only make the tree heavier
        let pruned = build_mst(&store, 1).unwrap();
        assert!(pruned.approximate);
        assert_eq!(pruned.edges.len(), 4);
        assert!(pruned.total_weight >= mst.total_weight - 1e-12);
    }
    for _ in 0..10 {
        let store = store_of(&random_entries(&mut rng, 3), 10);
        let mst = build_mst(&store, 2).unwrap();
        assert!((mst.total_weight - exhaustive_weight(&store)).abs() <= 1e-9);
    }
}

#[test]
fn isometric_copies_are_joined_at_zero() {
    let mut rng = rng(74);
    let base = random_periodic_set(&mut rng, 3, 3);
    let entries = vec![
        ("base".to_string(), base.clone()),
        ("copy".to_string(), rigid_copy(&mut rng, &base)),
        ("other".to_string(), random_periodic_set(&mut rng, 3, 2)),
    ];
    let mst = build_mst(&store_of(&entries, 10), 2).unwrap();
    let edge = &mst.edges[0];
    assert_eq!((edge.label_a.as_str(), edge.label_b.as_str()), ("base", "copy"));
    assert!(edge.emd <= 1e-9);
}

#[test]
fn results_ignore_insertion_order() {
    let mut rng = rng(75);
    let mut entries = random_entries(&mut rng, 20);
    let first = store_of(&entries, 10);
    entries.shuffle(&mut rng);
    let second = store_of(&entries, 10);
    assert_eq!(scan_duplicates(&first, 0.1, 0.05).unwrap(), scan_duplicates(&second, 0.1, 0.05).unwrap());
    assert_eq!(build_mst(&first, 3).unwrap(), build_mst(&second, 3).unwrap());
}

#[test]
fn results_ignore_thread_count() {
    let mut rng = rng(76);
    let entries = random_entries(&mut rng, 30);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let store = store_of(&entries, 10);
            (scan_duplicates(&store, 0.1, 0.05).unwrap(), build_mst(&store, 3).unwrap())
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn stores_persist() {
    let mut rng = rng(77);
    let store = store_of(&random_entries(&mut rng, 8), 10);
    let dir = tempfile::tempdir().unwrap();
    store.save(dir.path()).unwrap();
    let loaded = InvariantStore::load(dir.path()).unwrap();
    assert_eq!(loaded.k(), 10);
    assert_eq!(loaded.len(), store.len());
    for (a, b) in store.records().iter().zip(loaded.records()) {
        assert_eq!(a.label, b.label);
        assert_eq!(a.pdd, b.pdd);
        assert_eq!(a.amd, b.amd);
        assert_eq!(a.ppc, b.ppc);
        assert_eq!(a.provenance, b.provenance);
    }
    assert_eq!(scan_duplicates(&store, 0.1, 0.1).unwrap(), scan_duplicates(&loaded, 0.1, 0.1).unwrap());
}

#[test]
fn mixed_k_is_refused() {
    let mut store = InvariantStore::new(10);
    assert!(store.insert(record("a", &s_of(0.5), 8)).is_err());
    store.insert(record("a", &s_of(0.5), 10)).unwrap();
    assert!(store.insert(record("a", &s_of(0.25), 10)).is_err());
    assert!(build_mst(&store, 1).is_err());
}
