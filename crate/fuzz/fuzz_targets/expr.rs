#![no_main]

use hypercurv::cli::expr::parse_expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(e) = parse_expr(src) {
        let printed = e.to_string();
        let again = parse_expr(&printed).expect("printed expression must re-parse");
        assert_eq!(again, e);
        let _ = e.eval(0.3, 1.2);
    }
});
