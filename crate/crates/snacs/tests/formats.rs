use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::Path;

use proptest::prelude::*;
use snacs::bundle::{export_fixture, load_bundle, mlp_from_network, LayerEntry, Manifest};
use snacs::formats::{pack_bits, parse_curves_csv, curves_csv, unpack_bits, MaskFile, MaskRecord};
use snacs::npy::{npy_bytes, read_npy_bytes, read_tensor_spec, write_npz, write_npz_file, NpzBundle};
use snacs::AppError;
use snacs_core::network::LayerKind;
use snacs_core::pruning::GroupScheme;
use snacs_core::toynet::teacher_fixture;
use snacs_core::{DType, PruneMask, QualityCurve, Tensor};

fn tensor() -> impl Strategy<Value = Tensor> {
    (prop::collection::vec(1usize..5, 0..4), any::<bool>()).prop_flat_map(|(shape, f32)| {
        let n = shape.iter().product::<usize>();
        if f32 {
            prop::collection::vec(-1e6f32..1e6, n)
                .prop_map(move |v| Tensor::from_f32(shape.clone(), &v).unwrap())
                .boxed()
        } else {
            prop::collection::vec(-1e12f64..1e12, n)
                .prop_map(move |v| Tensor::new(DType::F64, shape.clone(), v).unwrap())
                .boxed()
        }
    })
}

fn bits_of(t: &Tensor) -> Vec<u64> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn npy_round_trip_is_bit_exact(t in tensor()) {
        let back = read_npy_bytes(&npy_bytes(&t), Path::new("mem.npy")).unwrap();
        prop_assert_eq!(back.dtype(), t.dtype());
        prop_assert_eq!(back.shape(), t.shape());
        prop_assert_eq!(bits_of(&back), bits_of(&t));
    }

    #[test]
    fn npz_round_trip_keeps_names_and_values(a in tensor(), b in tensor(), c in tensor()) {
        let mut entries = BTreeMap::new();
        entries.insert("conv1.weight".to_string(), a);
        entries.insert("conv1.act".to_string(), b);
        entries.insert("labels".to_string(), c);
        let buf = write_npz(Cursor::new(Vec::new()), &entries).unwrap().into_inner();
        let again = write_npz(Cursor::new(Vec::new()), &entries).unwrap().into_inner();
        prop_assert_eq!(&buf, &again);
        let mut npz = NpzBundle::from_reader(Cursor::new(buf), Path::new("mem.npz")).unwrap();
        prop_assert_eq!(npz.names(), vec!["conv1.act", "conv1.weight", "labels"]);
        let all = npz.read_all().unwrap();
        for (k, v) in &entries {
            prop_assert_eq!(bits_of(&all[k]), bits_of(v));
            prop_assert_eq!(all[k].shape(), v.shape());
        }
    }

    #[test]
    fn packed_bits_round_trip(bits in prop::collection::vec(any::<bool>(), 0..100)) {
        let bytes = pack_bits(&bits);
        prop_assert_eq!(bytes.len(), bits.len().div_ceil(8));
        prop_assert_eq!(unpack_bits(&bytes, bits.len()), Some(bits));
    }

    #[test]
    fn mask_record_round_trip(o in 1usize..9, i in 1usize..9, seed in prop::collection::vec(any::<bool>(), 81)) {
        let mask = PruneMask::new(
            (2, 3),
            GroupScheme::new(3, o * 2, o).unwrap(),
            GroupScheme::new(2, i, i).unwrap(),
            seed[..o * i].to_vec(),
        )
        .unwrap();
        let rec = MaskRecord::from_mask("fc3", &mask);
        let json = serde_json::to_string(&rec).unwrap();
        let back: MaskRecord = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.to_mask().unwrap(), mask);
    }
}

#[test]
fn npy_header_matches_numpy_layout() {
    let t = Tensor::new(DType::F64, vec![2, 3], vec![0.0; 6]).unwrap();
    let bytes = npy_bytes(&t);
    assert_eq!(&bytes[..8], b"\x93NUMPY\x01\x00");
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    assert_eq!((10 + header_len) % 64, 0);
    let header = std::str::from_utf8(&bytes[10..10 + header_len]).unwrap();
    assert!(header.starts_with("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3"), "{header}");
    assert!(header.ends_with('\n'));
    assert_eq!(bytes.len(), 10 + header_len + 48);
}

#[test]
fn missing_entry_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.npz");
    let mut entries = BTreeMap::new();
    entries.insert("a".to_string(), Tensor::new(DType::F64, vec![1], vec![1.0]).unwrap());
    write_npz_file(&path, &entries).unwrap();
    let err = read_tensor_spec(&format!("{}:zz", path.display())).unwrap_err();
    assert!(matches!(err, AppError::Format { .. }));
    assert!(err.to_string().contains("zz"), "{err}");
    assert_eq!(read_tensor_spec(&format!("{}:a", path.display())).unwrap().data(), &[1.0]);
}

#[test]
fn fixture_export_loads_back() {
    let fix = teacher_fixture(&[6, 8, 5, 3], 50, 2.0, 12).unwrap();
    let (manifest, entries) = export_fixture(&fix);
    let dir = tempfile::tempdir().unwrap();
    let (mp, bp) = (dir.path().join("manifest.json"), dir.path().join("bundle.npz"));
    std::fs::write(&mp, manifest.to_json()).unwrap();
    write_npz_file(&bp, &entries).unwrap();
    let loaded = load_bundle(&mp, &bp).unwrap();
    assert_eq!(loaded.network, fix.network().unwrap());
    assert_eq!(loaded.num_classes, Some(fix.num_classes));
    let (spec, inputs) = mlp_from_network(&loaded.network).unwrap();
    assert_eq!(spec.weights, fix.spec.weights);
    assert_eq!(inputs, fix.inputs);
}

#[test]
fn conv_activations_are_spatially_averaged() {
    let mut entries = BTreeMap::new();
    // 2 samples, 1 channel, 2x2 spatial
    entries.insert("in.act".to_string(), Tensor::new(DType::F32, vec![2, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 8.0]).unwrap());
    entries.insert("c1.weight".to_string(), Tensor::new(DType::F32, vec![2, 1, 3, 3], vec![0.5; 18]).unwrap());
    entries.insert("c1.act".to_string(), Tensor::new(DType::F32, vec![2, 2, 1, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap());
    let manifest = Manifest {
        layers: vec![
            LayerEntry {
                name: "in".into(),
                kind: LayerKind::Input,
                weight_entry: None,
                activation_entry: "in.act".into(),
                out_filters: 1,
                in_filters: 0,
            },
            LayerEntry {
                name: "c1".into(),
                kind: LayerKind::Conv,
                weight_entry: Some("c1.weight".into()),
                activation_entry: "c1.act".into(),
                out_filters: 2,
                in_filters: 1,
            },
        ],
        labels_entry: None,
        num_classes: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let (mp, bp) = (dir.path().join("m.json"), dir.path().join("b.npz"));
    std::fs::write(&mp, manifest.to_json()).unwrap();
    write_npz_file(&bp, &entries).unwrap();
    let net = load_bundle(&mp, &bp).unwrap().network;
    assert_eq!(net.layers()[0].activations.column(0), vec![2.5, 2.0]);
    assert_eq!(net.layers()[1].kernel.as_ref().unwrap().area(), 9);

    let bad = manifest.to_json().replace("\"out_filters\": 2", "\"out_filters\": 3");
    std::fs::write(&mp, bad).unwrap();
    let err = load_bundle(&mp, &bp).unwrap_err();
    assert!(err.to_string().contains("c1"), "{err}");
}

#[test]
fn manifest_rejects_unknown_fields() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    std::fs::write(&p, r#"{"layers": [], "extra": 1}"#).unwrap();
    assert!(matches!(Manifest::load(&p), Err(AppError::Format { .. })));
}

#[test]
fn mask_file_resolves_by_layer_name() {
    let fix = teacher_fixture(&[4, 6, 6, 3], 40, 2.0, 1).unwrap();
    let net = fix.network().unwrap();
    let m = PruneMask::new((1, 2), GroupScheme::new(2, 6, 3).unwrap(), GroupScheme::new(1, 6, 2).unwrap(), vec![true, false, true, true, false, true]).unwrap();
    let masks = vec![None, None, Some(m), None];
    let file = MaskFile::from_masks(&net, &masks);
    let json = serde_json::to_string_pretty(&file).unwrap();
    let back: MaskFile = serde_json::from_str(&json).unwrap();
    assert_eq!(back.resolve(&net).unwrap(), masks);

    let mut wrong = back.clone();
    wrong.masks[0].layer = "nope".into();
    assert!(wrong.resolve(&net).is_err());
    let mut tampered = back;
    tampered.masks[0].kept = 99;
    assert!(tampered.resolve(&net).is_err());
}

#[test]
fn curves_csv_round_trip() {
    let curves = vec![
        QualityCurve::new(2, vec![1.0, 6.0], vec![0.5, 0.25]).unwrap(),
        QualityCurve::new(3, vec![1.0, 6.0], vec![0.75, 0.125]).unwrap(),
    ];
    assert_eq!(parse_curves_csv(&curves_csv(&curves)).unwrap(), curves);
}
