#![no_main]

use libfuzzer_sys::fuzz_target;
use perpetua::levy::CharExponent;
use perpetua::LevyTriplet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(t) = LevyTriplet::from_json(text) else {
        return;
    };
    assert_eq!(LevyTriplet::from_json(&t.to_json()).unwrap(), t);
    if let Ok(psi) = CharExponent::new(&t) {
        for lambda in [-3.0, 0.5, 10.0] {
            let _ = psi.eval(lambda);
        }
        let _ = t.classify();
        let _ = t.mean();
    }
});
