mod common;

use std::collections::BTreeMap;

use lightwaves::classifier::{RidgeModel, Standardizer};
use lightwaves::io::{
    load_dataset, load_model, parse_ts_str, read_binary_dataset, save_binary_dataset, save_model,
    write_binary_dataset, ModelArtifact, TimeSeriesDataset,
};
use lightwaves::scattering::{FeatureDescriptor, Level, Stat, Variant};
use lightwaves::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = TimeSeriesDataset> {
    (1usize..6, 1usize..4, 2usize..8, 1usize..4).prop_flat_map(|(n, c, l, k)| {
        (
            prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), n * c * l),
            prop::collection::vec(0..k, n),
        )
            .prop_map(move |(values, labels)| {
                let names = (0..k).map(|i| format!("c{i}")).collect();
                TimeSeriesDataset::new("p", (n, c, l), values, Some(labels), names).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn binary_round_trip_is_bit_exact(ds in dataset_strategy()) {
        let bytes = write_binary_dataset(&ds).unwrap();
        let back = read_binary_dataset(&bytes).unwrap();
        let a: Vec<u64> = ds.values().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.values().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
        prop_assert_eq!(ds.labels(), back.labels());
        prop_assert_eq!(ds.class_names(), back.class_names());
        prop_assert_eq!(write_binary_dataset(&back).unwrap(), bytes);
    }

    #[test]
    fn ts_parse_preserves_order_and_values(ds in dataset_strategy()) {
        let parsed = parse_ts_str(&common::to_ts(&ds)).unwrap();
        prop_assert_eq!(parsed.values(), ds.values());
        prop_assert_eq!(parsed.labels(), ds.labels());
        prop_assert_eq!(parsed.n_channels(), ds.n_channels());
        prop_assert_eq!(parsed.series_length(), ds.series_length());
    }

    #[test]
    fn truncated_binary_is_rejected(ds in dataset_strategy(), cut in 1usize..64) {
        let bytes = write_binary_dataset(&ds).unwrap();
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(read_binary_dataset(&bytes[..keep]).is_err());
    }

    #[test]
    fn ts_rejects_carry_line_numbers(bad_row in 0usize..3, token in "[a-z]{1,4}") {
        let mut rows = ["1,2:3,4:a".to_string(), "5,6:7,8:b".to_string(), "9,1:2,3:a".to_string()];
        rows[bad_row] = format!("1,{token}:3,4:a");
        let text = format!(
            "@problemName t\n@dimensions 2\n@equalLength true\n@seriesLength 2\n@classLabel true a b\n@data\n{}\n",
            rows.join("\n")
        );
        match parse_ts_str(&text) {
            Err(Error::Parse { line, .. }) => prop_assert_eq!(line, 7 + bad_row),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }
}

#[test]
fn ts_header_example() {
    let ds = parse_ts_str(
        "@problemName x\n@univariate false\n@dimensions 2\n@equalLength true\n@seriesLength 2\n@classLabel true a b\n@data\n1.0,2.0:3.0,4.0:b\n",
    )
    .unwrap();
    assert_eq!(ds.values(), &[1., 2., 3., 4.]);
    assert_eq!(ds.labels(), Some(&[1usize][..]));
}

#[test]
fn ts_error_messages() {
    let head = "@problemName x\n@dimensions 2\n@equalLength true\n@seriesLength 2\n@classLabel true a b\n@data\n";
    let e = parse_ts_str(&format!("{head}1,2:3,4:5,6:a\n")).unwrap_err();
    assert!(e.to_string().contains("channel count mismatch"), "{e}");
    let e = parse_ts_str("@problemName x\n@equalLength false\n@data\n").unwrap_err();
    assert!(e.to_string().contains("variable-length unsupported"), "{e}");
    let e = parse_ts_str(&format!("{head}1,2:3,4:c\n")).unwrap_err();
    assert!(e.to_string().contains("unknown class label"), "{e}");
    let e = parse_ts_str(&format!("{head}1,2:3,4,5:a\n")).unwrap_err();
    assert!(matches!(e, Error::VariableLength { line: 7 }), "{e}");
}

#[test]
fn binary_bad_magic_and_label_range() {
    let ds = TimeSeriesDataset::new("m", (1, 1, 2), vec![1.0, 2.0], Some(vec![0]), vec!["a".into()]).unwrap();
    let mut bytes = write_binary_dataset(&ds).unwrap();
    assert_eq!(bytes.len(), 4 + 1 + 32 + (4 + 1) + 4 + 16);
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"XXXX");
    assert!(read_binary_dataset(&bad).unwrap_err().to_string().contains("bad magic"));
    let label_at = 4 + 1 + 32 + 5;
    bytes[label_at] = 1;
    assert!(read_binary_dataset(&bytes).is_err());
}

#[test]
fn files_dispatch_on_content() {
    let dir = tempfile::tempdir().unwrap();
    let ds = common::noise(4, 2, 5, 2, 3);
    let ts = common::write_ts(&ds, &dir.path().join("a.ts"));
    let bin = dir.path().join("a.lwds");
    save_binary_dataset(&ds, &bin).unwrap();
    let a = load_dataset(&ts).unwrap();
    let b = load_dataset(&bin).unwrap();
    assert_eq!(a.values(), b.values());
    assert_eq!(a.labels(), b.labels());
}

fn random_model(seed: u64, f: usize, k: usize) -> ModelArtifact {
    let mut r = lightwaves::distrib::SplitMix64::new(seed);
    let mut descriptors: Vec<FeatureDescriptor> = Vec::new();
    while descriptors.len() < f {
        let d = FeatureDescriptor::new(
            r.below(5) as usize,
            r.below(84) as usize,
            r.below(6) as usize,
            if r.below(2) == 0 { Level::One } else { Level::Two },
            Stat::ALL[r.below(4) as usize],
        );
        if !descriptors.contains(&d) {
            descriptors.push(d);
        }
    }
    let mut val = || f64::from_bits(0x3ff0_0000_0000_0000 | (r.next_u64() >> 12)) - 1.5;
    let std = Standardizer {
        means: (0..f).map(|_| val()).collect(),
        stds: (0..f).map(|_| val().abs()).collect(),
    };
    let weights = DMatrix::from_fn(f, k, |_, _| val());
    let ridge = RidgeModel { weights, alpha: 0.1 };
    let mut meta = BTreeMap::new();
    meta.insert("seed".to_string(), seed.to_string());
    ModelArtifact::new(
        Variant::L1L2,
        descriptors,
        &std,
        &ridge,
        (0..k).map(|i| format!("k{i}")).collect(),
        meta,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn model_round_trip_is_byte_exact(seed in any::<u64>(), f in 1usize..40, k in 2usize..5) {
        let dir = tempfile::tempdir().unwrap();
        let model = random_model(seed, f, k);
        let p1 = dir.path().join("m1.json");
        let p2 = dir.path().join("m2.json");
        save_model(&model, &p1).unwrap();
        let back = load_model(&p1).unwrap();
        prop_assert_eq!(&back, &model);
        save_model(&back, &p2).unwrap();
        prop_assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}

#[test]
fn model_rejects_version_and_shape() {
    let model = random_model(1, 5, 2);
    let json = model.to_json().unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();

    let mut bad = v.clone();
    bad["format_version"] = 999.into();
    let e = ModelArtifact::from_json(&bad.to_string()).unwrap_err();
    assert!(e.to_string().contains("unsupported version"), "{e}");

    let mut bad = v.clone();
    bad["weights"].as_array_mut().unwrap().pop();
    let e = ModelArtifact::from_json(&bad.to_string()).unwrap_err();
    assert!(e.to_string().contains("shape mismatch"), "{e}");

    let mut bad = v;
    bad["channels_used"] = serde_json::json!([0, 1, 2, 3, 4, 5, 6]);
    assert!(ModelArtifact::from_json(&bad.to_string()).is_err());
}
