use last_core::net::init_params;
use last_core::{Checkpoint, InputLayout, NetworkSpec};
use last_tools::formats::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, parse_cifar, parse_idx, save_checkpoint, CheckpointError,
    CifarError, IdxError, CIFAR_RECORD, IMAGES_MAGIC, LABELS_MAGIC,
};
use proptest::prelude::*;

fn checkpoint(seed: u64) -> Checkpoint {
    let spec = NetworkSpec::new(5, vec![4, 3], 2).unwrap();
    let mut ck = Checkpoint::new(spec.clone(), init_params(&spec, seed).unwrap());
    ck.metadata.insert("mode".into(), "last".into());
    ck.metadata.insert("note".into(), "two\nlines \\ here".into());
    ck
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let ck = checkpoint(3);
    let bytes = encode_checkpoint(&ck);
    let back = decode_checkpoint(&bytes).unwrap();
    assert_eq!(back.spec, ck.spec);
    assert_eq!(back.metadata, ck.metadata);
    assert!(back.params.values().iter().zip(ck.params.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(encode_checkpoint(&back), bytes);
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let ck = checkpoint(4);
    save_checkpoint(&path, &ck).unwrap();
    assert_eq!(load_checkpoint(&path).unwrap().params, ck.params);
}

#[test]
fn short_blob_is_rejected() {
    let bytes = encode_checkpoint(&checkpoint(5));
    let err = decode_checkpoint(&bytes[..bytes.len() - 4]).unwrap_err();
    assert!(matches!(err, CheckpointError::TruncatedBlob { .. }), "{err}");
}

#[test]
fn foreign_bytes_are_rejected() {
    let mut bytes = encode_checkpoint(&checkpoint(6));
    bytes[0] = b'X';
    assert!(matches!(decode_checkpoint(&bytes), Err(CheckpointError::BadMagic)));
    let mut bytes = encode_checkpoint(&checkpoint(6));
    bytes[8] = 99;
    assert!(matches!(decode_checkpoint(&bytes), Err(CheckpointError::Version(99))));
    let bytes = encode_checkpoint(&checkpoint(6));
    assert!(matches!(decode_checkpoint(&bytes[..10]), Err(CheckpointError::TruncatedHeader)));
}

#[test]
fn missing_checkpoint_file_is_io() {
    let err = load_checkpoint(std::path::Path::new("/nonexistent/x.ckpt")).unwrap_err();
    assert!(matches!(err, CheckpointError::Io(_)));
}

fn idx_images(h: u32, w: u32, pixels: &[u8]) -> Vec<u8> {
    let n = pixels.len() as u32 / (h * w);
    let mut out = IMAGES_MAGIC.to_be_bytes().to_vec();
    for v in [n, h, w] {
        out.extend(v.to_be_bytes());
    }
    out.extend(pixels);
    out
}

fn idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = LABELS_MAGIC.to_be_bytes().to_vec();
    out.extend((labels.len() as u32).to_be_bytes());
    out.extend(labels);
    out
}

#[test]
fn idx_pixels_are_scaled_to_unit_range() {
    let ds = parse_idx(&idx_images(2, 2, &[0, 128, 255, 64]), &idx_labels(&[3]), 10).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds.labels(), &[3]);
    assert_eq!(ds.inputs().row(0), &[0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0]);
    assert_eq!(ds.layout(), InputLayout::Image { channels: 1, height: 2, width: 2 });
}

#[test]
fn idx_label_file_in_place_of_images_is_rejected() {
    let labels = idx_labels(&[1, 2]);
    let err = parse_idx(&labels, &labels, 10).unwrap_err();
    assert!(matches!(err, IdxError::BadMagic { expected: IMAGES_MAGIC, found: LABELS_MAGIC }));
}

#[test]
fn idx_counts_must_agree() {
    let err = parse_idx(&idx_images(1, 2, &[1, 2, 3, 4]), &idx_labels(&[0]), 10).unwrap_err();
    assert!(matches!(err, IdxError::CountMismatch { images: 2, labels: 1 }));
    let mut short = idx_images(2, 2, &[1, 2, 3, 4]);
    short.pop();
    assert!(matches!(parse_idx(&short, &idx_labels(&[0]), 10), Err(IdxError::Truncated { .. })));
}

#[test]
fn cifar_record_decodes_label_and_channels() {
    let mut record = vec![7u8];
    record.extend((0..3072).map(|i| (i / 1024) as u8 * 100));
    let ds = parse_cifar(&[&record]).unwrap();
    assert_eq!(ds.labels(), &[7]);
    assert_eq!(ds.layout(), InputLayout::Image { channels: 3, height: 32, width: 32 });
    let row = ds.inputs().row(0);
    assert_eq!((row[0], row[1024], row[2048]), (0.0, 100.0 / 255.0, 200.0 / 255.0));
}

#[test]
fn cifar_length_must_be_whole_records() {
    let bytes = vec![0u8; CIFAR_RECORD - 1];
    assert!(matches!(parse_cifar(&[&bytes]), Err(CifarError::Length(3072))));
    let mut bad = vec![10u8];
    bad.extend(vec![0u8; 3072]);
    assert!(matches!(parse_cifar(&[&bad]), Err(CifarError::Label { record: 0, label: 10 })));
}

proptest! {
    #[test]
    fn arbitrary_checkpoints_round_trip(
        hidden in prop::collection::vec(1usize..5, 0..3), d in 1usize..6, k in 2usize..5,
        seed in any::<u64>(), key in ".{1,6}", value in ".{0,12}",
    ) {
        let spec = NetworkSpec::new(d, hidden, k).unwrap();
        let mut ck = Checkpoint::new(spec.clone(), init_params(&spec, seed).unwrap());
        ck.metadata.insert(key, value);
        let back = decode_checkpoint(&encode_checkpoint(&ck)).unwrap();
        prop_assert_eq!(back.metadata, ck.metadata);
        prop_assert_eq!(back.params, ck.params);
    }

    #[test]
    fn truncated_checkpoints_never_decode(cut in 1usize..64) {
        let bytes = encode_checkpoint(&checkpoint(1));
        let cut = cut.min(bytes.len());
        prop_assert!(decode_checkpoint(&bytes[..bytes.len() - cut]).is_err());
    }
}
