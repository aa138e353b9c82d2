mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zkmap::mapgen::{export, import_rich, ExportFormat};
use zkmap::model::{decode_compressed, encode_compressed, encode_stream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn compressed_round_trip(seed in any::<u64>()) {
        let t = common::random_table(&mut ChaCha8Rng::seed_from_u64(seed));
        let text = encode_compressed(&t);
        let decoded = decode_compressed(&text).unwrap();
        prop_assert_eq!(&decoded, &t.legacy_stream());
        prop_assert_eq!(encode_stream(&decoded), text);
    }

    #[test]
    fn rich_round_trip(seed in any::<u64>()) {
        let t = common::random_table(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(import_rich(&export(&t, ExportFormat::Rich)).unwrap(), t);
    }
}

#[test]
fn malformed_compressed_is_rejected() {
    for bad in ["1:2:x", "1:2:0:q", "a", "1:2:0:-:z"] {
        assert!(decode_compressed(bad).is_err(), "{bad}");
    }
}
