use edgeloc_core::geometry::{CandidateGrid, MicArray, Vec3};
use edgeloc_core::signal::FrameSpec;
use edgeloc_core::simroom::{
    ism_rir, order_for_duration, simulate, white_noise, Absorption, Scene, Segment, ShoeboxRoom,
};
use edgeloc_core::srp::{srp_sequence, SrpMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FS: u32 = 16_000;
const C: f64 = 343.0;

fn dist(a: &Vec3, b: &Vec3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[test]
fn schroeder_t60_tracks_target() {
    let dims = [6.0, 5.0, 3.0];
    let room = ShoeboxRoom::new(dims, Absorption::T60(0.5)).unwrap();
    let order = order_for_duration(dims, 0.5, C) as i32;
    let rir = ism_rir(&room, [4.2, 3.1, 1.7], [1.9, 1.8, 1.4], order, FS, C).unwrap();
    let t60 = rir.schroeder_t60().unwrap();
    assert!((t60 / 0.5 - 1.0).abs() <= 0.2, "estimated T60 {t60:.3} s");
}

#[test]
fn direct_path_lands_on_geometric_delay() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..1000 {
        let dims = [
            rng.random_range(3.0..10.0),
            rng.random_range(3.0..10.0),
            rng.random_range(2.5..4.0),
        ];
        let point = |rng: &mut ChaCha8Rng| -> Vec3 {
            [
                rng.random_range(0.1..0.9) * dims[0],
                rng.random_range(0.1..0.9) * dims[1],
                rng.random_range(0.1..0.9) * dims[2],
            ]
        };
        let (src, mic) = (point(&mut rng), point(&mut rng));
        let beta = rng.random_range(0.0..0.9);
        let room = ShoeboxRoom::new(dims, Absorption::Beta(beta)).unwrap();
        let rir = ism_rir(&room, src, mic, 1, FS, C).unwrap();
        let expected = (dist(&src, &mic) / C * f64::from(FS)).round() as i64;
        let got = rir.direct_path_index().unwrap() as i64;
        assert!((got - expected).abs() <= 1, "direct path at {got}, expected {expected}");
    }
}

#[test]
fn reflections_decay() {
    let dims = [5.0, 4.0, 3.0];
    let room = ShoeboxRoom::new(dims, Absorption::Beta(0.8)).unwrap();
    let rir = ism_rir(&room, [3.5, 2.5, 1.2], [1.5, 1.5, 1.5], 12, FS, C).unwrap();
    assert!(rir.energy().is_finite());
    let quarter = rir.taps.len() / 4;
    let early: f64 = rir.taps[..quarter].iter().map(|x| x * x).sum();
    let late: f64 = rir.taps[3 * quarter..].iter().map(|x| x * x).sum();
    assert!(late < early);
}

fn two_segment_scene(snr_db: Option<f64>) -> Scene {
    Scene {
        room_dims: [8.0, 7.0, 3.5],
        absorption: Absorption::Beta(0.0),
        trajectory: vec![
            Segment { start_s: 0.0, position: [6.5, 3.5, 1.5] },
            Segment { start_s: 1.0, position: [4.0, 6.0, 2.5] },
        ],
        array_center: [4.0, 3.5, 1.5],
        snr_db,
        seed: 9,
        max_order: None,
    }
}

#[test]
fn simulation_is_deterministic() {
    let array = MicArray::default_12();
    let dry = white_noise(24_000, 3);
    let scene = two_segment_scene(Some(10.0));
    let a = simulate(&scene, &array, &dry, FS).unwrap();
    let b = simulate(&scene, &array, &dry, FS).unwrap();
    assert_eq!(a, b);
}

#[test]
fn srp_follows_piecewise_trajectory() {
    let array = MicArray::default_12();
    let grid = CandidateGrid::new(8, 16).unwrap();
    let spec = FrameSpec::standard();
    let dry = white_noise(2 * FS as usize, 11);
    let scene = two_segment_scene(None);
    let clip = simulate(&scene, &array, &dry, FS).unwrap();
    let frames = srp_sequence(&clip, SrpMethod::LcEdge, &array, &grid, spec).unwrap();
    let hop = spec.hop() as f64;
    let k = spec.window_len as f64;
    let mut checked = 0;
    for f in &frames {
        let start = f.frame_index as f64 * hop / f64::from(FS);
        let end = start + k / f64::from(FS);
        // skip frames straddling the segment change
        if start < 1.0 && end > 1.0 {
            continue;
        }
        let truth = grid.cell_of(&scene.doa_at(start));
        assert!(grid.within_one_cell(f.argmax_cell(), truth), "frame {}", f.frame_index);
        checked += 1;
    }
    assert!(checked >= 6);
}

#[test]
fn ism_direct_path_agrees_with_far_field() {
    let array = MicArray::default_12();
    let grid = CandidateGrid::new(8, 16).unwrap();
    let spec = FrameSpec::standard();
    let dry = white_noise(12_288, 5);
    let scene = Scene {
        room_dims: [20.0, 20.0, 10.0],
        absorption: Absorption::Beta(0.0),
        trajectory: vec![Segment { start_s: 0.0, position: [16.0, 13.0, 7.0] }],
        array_center: [10.0, 10.0, 5.0],
        snr_db: None,
        seed: 0,
        max_order: Some(0),
    };
    let clip = simulate(&scene, &array, &dry, FS).unwrap();
    let truth = grid.cell_of(&scene.doa_at(0.0));
    for method in SrpMethod::ALL {
        let frames = srp_sequence(&clip, method, &array, &grid, spec).unwrap();
        for f in &frames {
            assert_eq!(f.argmax_cell(), truth, "{method}");
        }
    }
}
