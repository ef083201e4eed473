#![no_main]

use hypercurv::cli::table::{parse_table, table_to_field};
use hypercurv::sphere_grid::SphereGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_table(text) {
        assert!(rows.iter().all(|r| r.value.is_finite()));
        let grid = SphereGrid::axisymmetric(2, 16).unwrap();
        if let Ok(field) = table_to_field(&rows, &grid) {
            assert_eq!(field.len(), grid.len());
        }
    }
});
