use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wsense::tensor_io::{
    decode_named, encode_named, load_checkpoint, read_named, read_stream, read_tensor, save_checkpoint,
    save_split, write_named, write_stream, write_tensor,
};
use wsense_core::dataset::{make_split, SensorStream};
use wsense_core::synthetic::SyntheticConfig;
use wsense_core::zoo::{build_model, Arch};
use wsense_core::Tensor;

fn random_tensor(shape: Vec<usize>, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1e6..1e6)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn named_sets_round_trip(shapes in proptest::collection::vec(proptest::collection::vec(1usize..5, 1..4), 0..6), seed in 0u64..100) {
        let tensors: Vec<(String, Tensor)> = shapes
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("layer_{i}/w"), random_tensor(s, seed + i as u64)))
            .collect();
        let bytes = encode_named(tensors.iter().map(|(n, t)| (n.as_str(), t)));
        let back = decode_named(&bytes).unwrap();
        prop_assert_eq!(&back, &tensors);
        if !bytes.is_empty() {
            prop_assert!(decode_named(&bytes[..bytes.len() - 1]).is_err());
        }
    }
}

#[test]
fn tensor_and_named_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = random_tensor(vec![3, 4, 5], 1);
    write_tensor(&dir.path().join("t.wsnt"), &t).unwrap();
    assert_eq!(read_tensor(&dir.path().join("t.wsnt")).unwrap(), t);
    let u = Tensor::vector(&[f64::MIN_POSITIVE, -0.0, 1e300]);
    write_named(&dir.path().join("s.wsns"), [("a", &t), ("b", &u)]).unwrap();
    let back = read_named(&dir.path().join("s.wsns")).unwrap();
    assert_eq!(back[1].1.data()[1].to_bits(), (-0.0f64).to_bits());
    assert_eq!(back, vec![("a".to_string(), t), ("b".to_string(), u)]);
}

#[test]
fn streams_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let x = random_tensor(vec![50, 3], 9);
    let labels = (0..50).map(|i| i / 10).collect();
    let s = SensorStream::new(7, x, labels, 20.0).unwrap();
    let path = dir.path().join("s.stream");
    write_stream(&path, &s).unwrap();
    let back = read_stream(&path).unwrap();
    assert_eq!(back, s);
    let bits = |s: &SensorStream| s.channels.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&s));
}

#[test]
fn checkpoint_restores_predictions() {
    let dir = tempfile::tempdir().unwrap();
    for arch in [Arch::CnnWSense, Arch::ConvLstmSe] {
        let model = build_model(arch, 40, 3, 6, 123).unwrap();
        // perturb so the file must carry the weights, not just the seed
        let mut model = model;
        for p in model.params_mut() {
            for v in p.data_mut() {
                *v += 0.01;
            }
        }
        let sub = dir.path().join(arch.as_str());
        save_checkpoint(&sub, &model).unwrap();
        let back = load_checkpoint(&sub).unwrap();
        let x = random_tensor(vec![2, 40, 3], 4);
        assert_eq!(model.predict(&x).unwrap(), back.predict(&x).unwrap());
        assert_eq!(model.snapshot(), back.snapshot());
    }
}

#[test]
fn split_files_describe_the_partition() {
    let dir = tempfile::tempdir().unwrap();
    let ws = SyntheticConfig::new(3, 6, 2).windows(20, 10).unwrap();
    let names = (0..6).map(|i| format!("c{i}")).collect();
    let split = make_split(ws, 0.2, 2, names).unwrap();
    save_split(dir.path(), &split).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join("split.txt")).unwrap();
    assert!(manifest.contains(&format!("train_windows={}", split.train.len())));
    assert!(manifest.contains(&format!("test_windows={}", split.test.len())));
    let mut rdr = csv::Reader::from_path(dir.path().join("test_windows.csv")).unwrap();
    assert_eq!(rdr.records().count(), split.test.len());
    let t = read_tensor(&dir.path().join("train.wsnt")).unwrap();
    assert_eq!(t.shape(), &[split.train.len(), 20, 3]);
    assert_eq!(&t.data()[..60], split.train[0].values.data());
}
