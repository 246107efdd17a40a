#![no_main]

use libfuzzer_sys::fuzz_target;
use perpetua::montecarlo::EmpiricalDistribution;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = EmpiricalDistribution::read_csv(data) {
        assert!(d.samples().windows(2).all(|w| w[0] <= w[1]));
        let mut out = Vec::new();
        d.write_csv(&mut out, "overshoot").unwrap();
        assert_eq!(EmpiricalDistribution::read_csv(out.as_slice()).unwrap(), d);
    }
});
