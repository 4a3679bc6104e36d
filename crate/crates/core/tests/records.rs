mod common;

use common::{random_record, setup};
use deeplcp_core::ingest::{parse_records_str, records_to_string};
use deeplcp_core::{parse_records, PersonRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn six_hundred_one_rows() {
    let (schema, _, _) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let records: Vec<PersonRecord> = (0..601).map(|_| random_record(&schema, &mut rng)).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.csv");
    std::fs::write(&path, records_to_string(&records, &schema)).unwrap();

    // independent count: non-empty lines minus the header
    let text = std::fs::read_to_string(&path).unwrap();
    let data_rows = text.lines().filter(|l| !l.trim().is_empty()).count() - 1;
    assert_eq!(data_rows, 601);

    let (parsed, issues) = parse_records(&path, &schema).unwrap();
    assert!(issues.is_empty());
    assert_eq!(parsed.len(), data_rows);
    assert_eq!(parsed, records);
}

#[test]
fn bad_rows_are_counted_not_parsed() {
    let (schema, _, _) = setup();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let records: Vec<PersonRecord> = (0..10).map(|_| random_record(&schema, &mut rng)).collect();
    let mut lines: Vec<String> = records_to_string(&records, &schema).lines().map(String::from).collect();
    // drop the first field of data rows 3 and 7
    for i in [3, 7] {
        lines[i] = lines[i].split_once(',').unwrap().1.to_string();
    }
    let text = lines.join("\n") + "\n";
    let (parsed, issues) = parse_records_str(&text, &schema).unwrap();
    assert_eq!(parsed.len() + issues.len(), 10);
    assert_eq!(issues.len(), 2);
    assert_eq!(issues.iter().map(|i| i.line).collect::<Vec<_>>(), vec![4, 8]);
}
