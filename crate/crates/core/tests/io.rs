use lumber_dol::inference::FailureRecord;
use lumber_dol::io::*;
use lumber_dol::profile::generate_residential;
use lumber_dol::*;

#[test]
fn dataset_csv_round_trips_exactly() {
    let records = vec![
        FailureRecord {
            profile_id: "ramp".into(),
            time: 0.013_379_874_123_5,
            censored: false,
        },
        FailureRecord {
            profile_id: "constant_3000".into(),
            time: 35040.0,
            censored: true,
        },
        FailureRecord {
            profile_id: "constant_4500".into(),
            time: 1.0 / 3.0,
            censored: false,
        },
    ];
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &records).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("profile_id,time_hours,censored\n"));
    assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), records);
}

#[test]
fn malformed_row_is_reported_by_line() {
    let text = "profile_id,time_hours,censored\nramp,0.01,0\nramp,abc,0\n";
    let err = read_dataset_csv(text.as_bytes()).unwrap_err().to_string();
    assert!(err.contains('3'), "{err}");
}

#[test]
fn curve_csv_round_trips() {
    let t = [0.0, 0.5, 1e-9, 1e6];
    let v = [1.0, 0.25, 0.123_456_789_012_345_67, 0.0];
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &t, &v).unwrap();
    let (t2, v2) = read_curve_csv(buf.as_slice()).unwrap();
    assert_eq!((t2.as_slice(), v2.as_slice()), (&t[..], &v[..]));
}

#[test]
fn profile_json_round_trips() {
    let profile = generate_residential(&ResidentialConfig::default()).unwrap();
    let dir = std::env::temp_dir().join(format!("lumber-dol-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("profile.json");
    write_json(&path, &profile).unwrap();
    let back: LoadProfile = read_json(&path).unwrap();
    assert_eq!(back, profile);
    std::fs::remove_dir_all(&dir).unwrap();
}
