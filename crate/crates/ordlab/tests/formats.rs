use ordlab::formats::{
    decode_cifar10, decode_mnist, encode_cifar10, encode_mnist, load_cifar10, load_mnist_idx, write_cifar10,
    write_mnist_idx, CIFAR_RECORD,
};
use ordlab::Error;
use ordlab_core::data::synthetic::{cifar_like, digits};
use ordlab_core::data::Dataset;
use proptest::prelude::*;

fn same(a: &Dataset, b: &Dataset) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.samples().iter().zip(b.samples()) {
        assert_eq!(x.label, y.label);
        assert_eq!(x.image.shape(), y.image.shape());
        assert!(x
            .image
            .data()
            .iter()
            .zip(y.image.data())
            .all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn cifar_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data = cifar_like(3, 11).unwrap();
    let path = dir.path().join("data_batch_1.bin");
    write_cifar10(&path, &data).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 30 * CIFAR_RECORD);
    let back = load_cifar10(&[&path]).unwrap();
    same(&data, &back);
    assert_eq!(encode_cifar10(&back).unwrap(), bytes);
}

#[test]
fn idx_file_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let data = digits(5, 4).unwrap();
    let (ip, lp) = (dir.path().join("img.idx"), dir.path().join("lab.idx"));
    write_mnist_idx(&ip, &lp, &data).unwrap();
    let back = load_mnist_idx(&ip, &lp).unwrap();
    same(&data, &back);
    let (i2, l2) = encode_mnist(&back).unwrap();
    assert_eq!(i2, std::fs::read(&ip).unwrap());
    assert_eq!(l2, std::fs::read(&lp).unwrap());
}

fn is_format(r: Result<impl std::fmt::Debug, Error>) -> String {
    match r {
        Err(e @ Error::Format { .. }) => e.to_string(),
        other => panic!("expected format error, got {other:?}"),
    }
}

#[test]
fn malformed_files_are_rejected() {
    let data = digits(2, 1).unwrap();
    let (img, lab) = encode_mnist(&data).unwrap();

    let mut bad = img.clone();
    bad[3] = 0x04;
    assert!(is_format(decode_mnist(&bad, &lab, "i", "l")).contains("magic"));
    let mut bad = lab.clone();
    bad[2] = 0x09;
    assert!(is_format(decode_mnist(&img, &bad, "i", "l")).contains("magic"));
    assert!(is_format(decode_mnist(&img[..img.len() - 1], &lab, "i", "l")).contains("bytes"));
    assert!(is_format(decode_mnist(&img, &lab[..lab.len() - 1], "i", "l")).contains("labels"));
    assert!(is_format(decode_mnist(&img[..10], &lab, "i", "l")).contains("truncated"));

    let cifar = encode_cifar10(&cifar_like(1, 0).unwrap()).unwrap();
    assert!(is_format(decode_cifar10(&cifar[..cifar.len() - 5], "c")).contains("multiple"));
    assert!(is_format(decode_cifar10(&[], "c")).contains("multiple"));
    let mut bad = cifar.clone();
    bad[0] = 10;
    assert!(is_format(decode_cifar10(&bad, "c")).contains("label"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn any_cifar_bytes_round_trip(records in prop::collection::vec((0u8..10, prop::collection::vec(any::<u8>(), 3072)), 1..4)) {
        let bytes: Vec<u8> = records.iter().flat_map(|(l, px)| std::iter::once(*l).chain(px.iter().copied())).collect();
        let samples = decode_cifar10(&bytes, "p").unwrap();
        let data = Dataset::new(samples, 10, "p").unwrap();
        prop_assert_eq!(encode_cifar10(&data).unwrap(), bytes);
    }

    #[test]
    fn any_idx_bytes_round_trip(rows in 1usize..6, cols in 1usize..6, labels in prop::collection::vec(0u8..10, 1..6), seed in any::<u64>()) {
        let n = labels.len();
        let mut img = Vec::new();
        for v in [0x803u32, n as u32, rows as u32, cols as u32] {
            img.extend(v.to_be_bytes());
        }
        img.extend((0..n * rows * cols).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 7) as u8));
        let mut lab = Vec::new();
        lab.extend(0x801u32.to_be_bytes());
        lab.extend((n as u32).to_be_bytes());
        lab.extend(&labels);
        let data = decode_mnist(&img, &lab, "i", "l").unwrap();
        let (i2, l2) = encode_mnist(&data).unwrap();
        prop_assert_eq!(i2, img);
        prop_assert_eq!(l2, lab);
    }
}
