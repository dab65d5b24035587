use edgeloc_core::feature::assemble;
use edgeloc_core::geometry::{direction_from_angles, CandidateGrid, MicArray};
use edgeloc_core::net::{build_graph, NetConfig, Network, Variant, WeightBundle};
use edgeloc_core::signal::FrameSpec;
use edgeloc_core::simroom::{anechoic_far_field, white_noise};
use edgeloc_core::srp::{srp_sequence, SrpMethod};

const FS: u32 = 16_000;

fn clip_from(elevation_deg: f64, azimuth_deg: f64, len: usize) -> edgeloc_core::signal::AudioClip {
    let array = MicArray::default_12();
    let dir = direction_from_angles(elevation_deg.to_radians(), azimuth_deg.to_radians());
    anechoic_far_field(dir, &white_noise(len, 77), FS, &array).unwrap()
}

#[test]
fn maps_ignore_input_gain() {
    let array = MicArray::default_12();
    let grid = CandidateGrid::new(8, 16).unwrap();
    let clip = clip_from(20.0, 130.0, 12_288);
    let louder = clip.scaled(37.5);
    for method in SrpMethod::ALL {
        let a = srp_sequence(&clip, method, &array, &grid, FrameSpec::standard()).unwrap();
        let b = srp_sequence(&louder, method, &array, &grid, FrameSpec::standard()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.argmax(), y.argmax());
            for (p, q) in x.power().iter().zip(y.power()) {
                assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()), "{method}: {p} vs {q}");
            }
        }
    }
}

#[test]
fn exact_and_edge_peaks_agree() {
    let array = MicArray::default_12();
    let grid = CandidateGrid::new(8, 16).unwrap();
    let clip = clip_from(-10.0, 250.0, 3 * 4096);
    let fd = srp_sequence(&clip, SrpMethod::Fd, &array, &grid, FrameSpec::standard()).unwrap();
    let edge = srp_sequence(&clip, SrpMethod::LcEdge, &array, &grid, FrameSpec::standard()).unwrap();
    assert_eq!(fd.len(), edge.len());
    for (a, b) in fd.iter().zip(&edge) {
        assert_eq!(a.frame_index, b.frame_index);
        assert!(grid.within_one_cell(a.argmax_cell(), b.argmax_cell()));
    }
}

#[test]
fn features_feed_the_network() {
    let array = MicArray::default_12();
    let grid = CandidateGrid::new(4, 8).unwrap();
    let clip = clip_from(40.0, 10.0, 5 * 4096);
    let frames = srp_sequence(&clip, SrpMethod::LcEdge, &array, &grid, FrameSpec::standard()).unwrap();
    let x = assemble(&frames).unwrap();
    assert_eq!(x.shape(), (3, frames.len(), 4, 8));
    let graph = build_graph(NetConfig::variant(Variant::Es, 4, 8)).unwrap();
    let net = Network::new(&graph, &WeightBundle::random(&graph, 1)).unwrap();
    let y = net.infer(&x).unwrap();
    assert_eq!(y.len(), frames.len());
    assert!(y.iter().flatten().all(|v| v.is_finite()));
}
