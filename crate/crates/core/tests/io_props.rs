use dapotion_core::descriptor::{decode_descriptor, encode_descriptor};
use dapotion_core::encoder::{encode_clip, EncoderConfig, Scheme};
use dapotion_core::pose_io::{
    bbox_to_image_frame, normalize_to_grid, parse_pose_sequence, BBox, BBoxSequence,
    GridPoseSequence, GridSpec, PoseSequence,
};
use dapotion_core::render::{render_slice, PnmKind};
use dapotion_core::synth::{generate_clip, generate_dataset, SynthClass, SynthSpec};
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    0.0f64..255.999
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| [x, y, z])
}

fn bbox() -> impl Strategy<Value = BBox> {
    (-500.0f64..500.0, -500.0f64..500.0, 0.5f64..800.0, 0.5f64..800.0).prop_map(
        |(x_ul, y_ul, width, height)| BBox {
            x_ul,
            y_ul,
            width,
            height,
        },
    )
}

fn pose_sequence() -> impl Strategy<Value = PoseSequence> {
    (2usize..6, 1usize..4).prop_flat_map(|(t, j)| {
        (
            proptest::collection::vec(point(), t * j),
            1u32..2000,
            1u32..2000,
            proptest::option::of("[a-z_]{1,8}"),
            proptest::option::of(proptest::collection::vec(bbox(), t)),
        )
            .prop_map(move |(pos, w, h, label, boxes)| {
                let mut p = PoseSequence::new(t, j, pos, (w, h)).unwrap();
                p.label = label;
                p.joint_names = Some((0..j).map(|k| format!("j{k}_L")).collect());
                match boxes {
                    Some(b) => p.bboxes = Some(BBoxSequence::new(b).unwrap()),
                    None => p.frame = dapotion_core::pose_io::CoordFrame::Image,
                }
                p
            })
    })
}

proptest! {
    #[test]
    fn pose_files_round_trip(p in pose_sequence()) {
        let text = p.to_json();
        let back = parse_pose_sequence(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn bbox_transform_is_affine(
        p1 in point(), p2 in point(), alpha in 0.0f64..=1.0, b in bbox(),
    ) {
        let mix: [f64; 3] = std::array::from_fn(|k| alpha * p1[k] + (1.0 - alpha) * p2[k]);
        let seq = PoseSequence::new(2, 3, vec![p1, p2, mix, p1, p2, mix], (640, 480)).unwrap();
        let boxes = BBoxSequence::new(vec![b, b]).unwrap();
        let out = bbox_to_image_frame(&seq, &boxes).unwrap();
        for t in 0..2 {
            let (a, c, m) = (out.position(t, 0), out.position(t, 1), out.position(t, 2));
            for k in 0..2 {
                let expected = alpha * a[k] + (1.0 - alpha) * c[k];
                prop_assert!((m[k] - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
            }
            for j in 0..3 {
                prop_assert_eq!(out.position(t, j)[2].to_bits(), seq.position(t, j)[2].to_bits());
            }
        }
        let left = PoseSequence::new(2, 1, vec![[0.0, 0.0, 5.0]; 2], (1, 1)).unwrap();
        let out = bbox_to_image_frame(&left, &boxes).unwrap();
        prop_assert_eq!(out.position(0, 0)[0], b.x_ul);
    }

    #[test]
    fn grid_clamp_invariant(
        raw in proptest::collection::vec((-2000.0f64..2000.0, -2000.0f64..2000.0, -500.0f64..800.0), 6),
        dims in (4usize..40, 4usize..40, 4usize..40),
        w in 1u32..1000, h in 1u32..1000,
    ) {
        let dims = [dims.0, dims.1, dims.2];
        let grid = GridSpec::fit_image(dims, (w, h)).unwrap();
        let pts: Vec<[f64; 3]> = raw.iter().map(|&(x, y, z)| [x, y, z]).collect();
        let g = GridPoseSequence::new(2, 3, pts.iter().map(|&p| grid.to_voxel(p)).collect(), grid).unwrap();
        for p in g.positions() {
            for a in 0..3 {
                prop_assert!(p[a] >= 0.0 && p[a] <= (dims[a] - 1) as f64);
            }
        }
    }

    #[test]
    fn grid_map_inverts_for_interior_points(p in point(), w in 16u32..1000, h in 16u32..1000) {
        let grid = GridSpec::fit_image([32, 24, 16], (w, h)).unwrap();
        let img = [p[0] * w as f64 / 256.0, p[1] * h as f64 / 256.0, p[2]];
        let back = grid.from_voxel(grid.to_voxel(img));
        for k in 0..3 {
            prop_assert!((back[k] - img[k]).abs() <= 1e-9 * (1.0 + img[k].abs()));
        }
    }

    #[test]
    fn synth_clips_are_legal_and_parse(class_idx in 0usize..6, seed in any::<u64>(), noise in 0.0f64..20.0) {
        let spec = SynthSpec { noise_std: noise, seed, ..SynthSpec::new(SynthClass::ALL[class_idx]) };
        let clip = generate_clip(&spec).unwrap();
        prop_assert!(clip.positions().iter().flatten().all(|&v| (0.0..256.0).contains(&v)));
        let back = parse_pose_sequence(clip.to_json().as_bytes()).unwrap();
        prop_assert_eq!(back, clip);
    }

    #[test]
    fn descriptor_bytes_round_trip(
        (dims, t, j, flat) in (4usize..=7, 4usize..=7, 4usize..=7, 2usize..=3, 1usize..=3)
            .prop_flat_map(|(w, h, d, t, j)| {
                let p = (0.0..(w - 1) as f64, 0.0..(h - 1) as f64, 0.0..(d - 1) as f64)
                    .prop_map(|(x, y, z)| [x, y, z]);
                (Just([w, h, d]), Just(t), Just(j), proptest::collection::vec(p, t * j))
            }),
        scheme in prop_oneof![Just(Scheme::U), Just(Scheme::I), Just(Scheme::N), Just(Scheme::Nui)],
    ) {
        let grid = GridSpec::fit_image(dims, (64, 64)).unwrap();
        let poses = GridPoseSequence::new(t, j, flat, grid).unwrap();
        let cfg = EncoderConfig { dims, scheme, ..EncoderConfig::cube(dims[0]) };
        let d = encode_clip(&poses, &cfg).unwrap();
        let bytes = encode_descriptor(&d).unwrap();
        let back = decode_descriptor(&bytes).unwrap();
        prop_assert_eq!(&back.volume, &d.volume);
        prop_assert_eq!(encode_descriptor(&back).unwrap(), bytes);
    }
}

#[test]
fn full_ingestion_applies_boxes_then_grid() {
    let text = r#"{"frames": 2, "joints": 1, "image_size": [200, 100],
        "positions": [[[128, 128, 128]], [[0, 0, 0]]],
        "bboxes": [[50, 0, 100, 100], [0, 0, 200, 100]]}"#;
    let p = parse_pose_sequence(text.as_bytes()).unwrap();
    let g = dapotion_core::pose_io::prepare_for_grid(p, [11, 11, 11]).unwrap();
    // Frame 0: x_img = 50 + 0.5 * 100 = 100 (image center), y_img = 50.
    assert_eq!(g.position(0, 0), [5.0, 5.0, 5.0]);
    assert_eq!(g.position(1, 0), [0.0, 0.0, 0.0]);
}

#[test]
fn out_of_image_points_clamp() {
    let p = PoseSequence::new(2, 1, vec![[250.0, 10.0, 10.0]; 2], (100, 100)).unwrap();
    let grid = GridSpec::fit_image([8, 8, 8], (100, 100)).unwrap();
    let g = normalize_to_grid(&p, &grid).unwrap();
    assert_eq!(g.position(0, 0)[0], 7.0);
}

#[test]
fn dataset_generation_is_reproducible() {
    let templates: Vec<SynthSpec> = SynthClass::ALL.iter().map(|&c| SynthSpec::new(c)).collect();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_dataset(&templates, 4, 0.5, 99, a.path()).unwrap();
    generate_dataset(&templates, 4, 0.5, 99, b.path()).unwrap();
    for name in ["train.tsv", "test.tsv", "clips/zigzag_xz_0003.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let m = dapotion_core::manifest::Manifest::read(&a.path().join("train.tsv")).unwrap();
    for r in &m.records {
        dapotion_core::pose_io::read_pose_file(&r.path).unwrap();
    }
}

#[test]
fn render_peak_at_gaussian_center() {
    let dims = [12, 10, 9];
    let grid = GridSpec::fit_image(dims, (64, 64)).unwrap();
    let center = [7.0, 3.0, 5.0];
    let poses = GridPoseSequence::new(2, 1, vec![center; 2], grid).unwrap();
    for (scheme, channels) in [(Scheme::U, 3), (Scheme::I, 2), (Scheme::Nui, 3), (Scheme::N, 2)] {
        let cfg = EncoderConfig {
            dims,
            scheme,
            channels,
            sigma: 1.0,
            ..EncoderConfig::cube(12)
        };
        let d = encode_clip(&poses, &cfg).unwrap();
        let img = render_slice(&d, 0, 5).unwrap();
        let expected_kind = if channels == 3 { PnmKind::Rgb } else { PnmKind::Gray };
        assert_eq!(img.kind, expected_kind);
        let mut best = (0, 0, 0u8);
        for y in 0..img.height {
            for x in 0..img.width {
                if img.intensity(x, y) > best.2 {
                    best = (x, y, img.intensity(x, y));
                }
            }
        }
        assert_eq!((best.0, best.1), (7, 3), "{scheme}");
    }
}
