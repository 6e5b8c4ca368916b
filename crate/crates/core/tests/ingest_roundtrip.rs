use lccde::ingest::{load_can_hex_csv, load_numeric_csv, read_numeric_csv, relabel_to_reference, write_numeric_csv};
use lccde::{validate_dataset, Dataset, LccdeError};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = Dataset> {
    (2usize..5, 1usize..5, 4usize..40).prop_flat_map(|(k, f, n)| {
        (
            prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, f), n),
            prop::collection::vec(0..k, n),
            Just(k),
        )
            .prop_map(|(rows, mut labels, k)| {
                for c in 0..k.min(labels.len()) {
                    labels[c] = c;
                }
                let f = rows[0].len();
                let names = (0..k).map(|c| format!("class {c}")).collect();
                Dataset::new(rows, labels, Dataset::default_feature_names(f), names).unwrap()
            })
    })
}

proptest! {
    #[test]
    fn numeric_csv_round_trips_bitwise(d in dataset()) {
        let mut buf = Vec::new();
        write_numeric_csv(&d, &mut buf, "label").unwrap();
        let (back, report) = load_numeric_csv(buf.as_slice(), "label").unwrap();
        prop_assert_eq!(report.rows_kept, d.n_rows());
        let back = relabel_to_reference(&back, &d.class_names).unwrap();
        prop_assert_eq!(&back.feature_names, &d.feature_names);
        prop_assert_eq!(&back.labels, &d.labels);
        for (a, b) in back.features.iter().zip(&d.features) {
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn ingested_can_data_always_validates(lines in prop::collection::vec(can_line(), 1..40)) {
        let text = lines.join("\n");
        match load_can_hex_csv(text.as_bytes()) {
            Ok((d, report)) => {
                prop_assert!(validate_dataset(&d).is_empty());
                prop_assert_eq!(report.rows_kept, d.n_rows());
                prop_assert_eq!(report.rows_read, report.rows_kept + report.rows_dropped_malformed + report.rows_dropped_nonfinite);
            }
            Err(e) => prop_assert!(matches!(e, LccdeError::NoUsableRows { .. } | LccdeError::InvalidDataset(_)), "{e}"),
        }
    }

    #[test]
    fn numeric_rows_with_bad_cells_are_dropped(values in prop::collection::vec(prop::sample::select(vec!["1.5", "-2", "nan", "inf", "x", ""]), 12)) {
        let mut text = String::from("a,b,label\n");
        for pair in values.chunks(2) {
            text.push_str(&format!("{},{},L{}\n", pair[0], pair[1], pair[0].len() % 2));
        }
        let (table, report) = read_numeric_csv(text.as_bytes(), Some("label")).unwrap();
        prop_assert!(table.rows.iter().flatten().all(|v| v.is_finite()));
        prop_assert_eq!(report.rows_read, 6);
        prop_assert_eq!(report.rows_kept + report.rows_dropped_malformed + report.rows_dropped_nonfinite, 6);
    }
}

fn can_line() -> impl Strategy<Value = String> {
    let good = (0u32..0x800, 0u8..=8, prop::collection::vec(any::<u8>(), 8), prop::sample::select(vec!["R", "T"]))
        .prop_map(|(id, dlc, bytes, label)| {
            let data: Vec<String> = bytes[..dlc as usize].iter().map(|b| format!("{b:02x}")).collect();
            let mut fields = vec!["1478198376.5".to_string(), format!("{id:04x}"), dlc.to_string()];
            fields.extend(data);
            fields.push(label.to_string());
            fields.join(",")
        });
    prop_oneof![4 => good, 1 => "[0-9a-z,]{0,20}"]
}

#[test]
fn short_frames_take_the_label_after_their_bytes() {
    let text = "1.0,0100,2,aa,bb,R\n2.0,0200,8,00,01,02,03,04,05,06,07,T\n";
    let (d, _) = load_can_hex_csv(text.as_bytes()).unwrap();
    assert_eq!(d.features[0], vec![256.0, 170.0, 187.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(d.class_names, vec!["R", "T"]);
}

#[test]
fn missing_label_column_lists_the_header() {
    let err = load_numeric_csv("a,b\n1,2\n".as_bytes(), "y").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('y') && msg.contains('a') && msg.contains('b'), "{msg}");
}

#[test]
fn single_class_input_is_rejected_for_training() {
    let err = load_numeric_csv("a,label\n1,x\n2,x\n".as_bytes(), "label").unwrap_err();
    assert!(matches!(err, LccdeError::InvalidDataset(_)), "{err}");
}
