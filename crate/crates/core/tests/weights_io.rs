use edgeloc_core::net::{build_graph, NetConfig, Network, Variant, WeightBundle};
use edgeloc_core::Error;

fn em_graph() -> edgeloc_core::net::NetworkGraph {
    build_graph(NetConfig::new(8, 16, 32, true)).unwrap()
}

#[test]
fn save_load_roundtrip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.c3de");
    let graph = em_graph();
    let bundle = WeightBundle::random(&graph, 12);
    bundle.save(&path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let loaded = WeightBundle::load(&path).unwrap();
    assert_eq!(loaded, bundle);
    loaded.save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
    assert_eq!(loaded.config, NetConfig::new(8, 16, 32, true));
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.c3de");
    WeightBundle::random(&em_graph(), 3).save(&path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 100]).unwrap();
    assert!(matches!(WeightBundle::load(&path), Err(Error::Checksum { .. })));
}

#[test]
fn bundle_for_other_width_is_a_shape_error() {
    let bundle = WeightBundle::random(&em_graph(), 4);
    let narrower = build_graph(NetConfig::variant(Variant::Em, 8, 16)).unwrap();
    match Network::new(&narrower, &bundle) {
        Err(Error::Shape { layer, .. }) => assert!(!layer.is_empty()),
        other => panic!("expected a shape error, got {:?}", other.map(|_| ())),
    }
}
