//! CSV tables parse back bit-exactly.

use hopfield_cli::output::{format_float, TableData};
use proptest::prelude::*;

fn cell() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        8 => any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(Some),
    ]
}

proptest! {
    #[test]
    fn floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn tables_round_trip(
        width in 1usize..5,
        cells in prop::collection::vec(cell(), 0..60),
        with_errors in any::<bool>(),
    ) {
        let rows: Vec<Vec<Option<f64>>> = cells.chunks_exact(width).map(<[_]>::to_vec).collect();
        let errors = with_errors.then(|| {
            rows.iter().enumerate().map(|(i, _)| (i % 3 == 1).then(|| format!("point {i}: failed, \"quoted\""))).collect()
        });
        let data = TableData {
            columns: (0..width).map(|i| format!("c{i}")).collect(),
            rows,
            errors,
        };
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = TableData::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(&back.columns, &data.columns);
        prop_assert_eq!(&back.errors, &data.errors);
        prop_assert_eq!(back.rows.len(), data.rows.len());
        for (a, b) in back.rows.iter().zip(&data.rows) {
            let bits = |r: &[Option<f64>]| r.iter().map(|v| v.map(f64::to_bits)).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
    }
}
