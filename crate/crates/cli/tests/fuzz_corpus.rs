//! Replays the fuzz seed corpora, plus random mutations of them, through the
//! parser entry points on a stable toolchain.

use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;

fn corpus(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {target}");
    files.into_iter().map(|p| fs::read(p).unwrap()).collect()
}

fn points_csv(data: &[u8]) {
    if let Ok(cloud) = fasc::io::read_points_csv(data) {
        let mut buf = Vec::new();
        fasc::io::write_points_csv(&mut buf, &cloud).unwrap();
        assert_eq!(fasc::io::read_points_csv(buf.as_slice()).unwrap(), cloud);
    }
}

fn text_targets(data: &[u8]) {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = fasc::io::parse_manifest(text) {
        let _ = m.spec();
    }
    if let Ok(p) = fasc::io::parse_predictions(text) {
        let _ = p.zero_based();
        let _ = p.affinity_matrix();
    }
    if let Ok(layer) = fasc_cli::parse_config(text) {
        let _ = fasc_cli::ExperimentConfig::resolve(layer);
    }
    let _ = fasc_cli::commands::parse_bench(text);
}

#[test]
fn seeds_parse_as_expected() {
    let csv = corpus("points_csv");
    assert!(csv.iter().filter(|d| fasc::io::read_points_csv(d.as_slice()).is_ok()).count() >= 3);
    for m in corpus("manifest") {
        fasc::io::parse_manifest(std::str::from_utf8(&m).unwrap()).unwrap();
    }
    for c in corpus("config") {
        fasc_cli::parse_config(std::str::from_utf8(&c).unwrap()).unwrap();
    }
    for b in corpus("bench_table") {
        assert!(!fasc_cli::commands::parse_bench(std::str::from_utf8(&b).unwrap()).unwrap().rows.is_empty());
    }
    let preds = corpus("predictions");
    assert!(preds.iter().filter(|d| fasc::io::parse_predictions(std::str::from_utf8(d).unwrap()).is_ok()).count() >= 2);
    for d in csv.iter().chain(&preds) {
        points_csv(d);
        text_targets(d);
    }
}

fn all_seeds() -> Vec<Vec<u8>> {
    ["points_csv", "manifest", "predictions", "config", "bench_table"].iter().flat_map(|t| corpus(t)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn arbitrary_bytes_never_panic(data in proptest::collection::vec(any::<u8>(), 0..256)) {
        points_csv(&data);
        text_targets(&data);
    }

    #[test]
    fn mutated_seeds_never_panic(
        pick in any::<prop::sample::Index>(),
        edits in proptest::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8),
        cut in any::<prop::sample::Index>(),
    ) {
        let seeds = all_seeds();
        let mut data = pick.get(&seeds).clone();
        for (at, byte) in edits {
            let i = at.index(data.len());
            data[i] = byte;
        }
        data.truncate(cut.index(data.len() + 1));
        points_csv(&data);
        text_targets(&data);
    }
}
