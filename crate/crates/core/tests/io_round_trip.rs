use floquet_east::io::{load_record, save_record, sidecar_path};
use floquet_east::MeasurementRecord;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn records_survive_disk(sites in 1usize..9, steps in 1usize..12, bits in proptest::collection::vec(0u8..2, 96), seed: u64) {
        let outcomes: Vec<u8> = bits.iter().cycle().take(sites * steps).copied().collect();
        let record = MeasurementRecord::from_outcomes(sites, steps, outcomes, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("record.csv");
        save_record(&path, &record, 0.1, 1.2345678901234567).unwrap();
        prop_assert!(sidecar_path(&path).exists());
        let (back, meta) = load_record(&path).unwrap();
        prop_assert_eq!(back, record);
        prop_assert_eq!(meta.gamma, 1.2345678901234567);
        prop_assert_eq!(meta.seed, seed);
    }
}
