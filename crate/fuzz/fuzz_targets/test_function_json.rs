#![no_main]

use libfuzzer_sys::fuzz_target;
use perpetua::analysis::TestFunction;
use perpetua::harness::parse_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(f) = parse_json::<TestFunction>(text) else {
        return;
    };
    if f.validate().is_empty() {
        for x in [-5.0, 0.0, 0.5, 3.0, 1e6] {
            let _ = f.eval(x);
            let _ = f.antiderivative(x);
        }
        let _ = f.segment_time_integral(-1.0, 2.0, 0.1);
    }
});
