#![no_main]

use frog_harness::{Experiment, ExperimentConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_toml(text) {
        let digest = config.digest();
        if let Ok(exp) = Experiment::resolve(config, None) {
            assert_eq!(exp.digest, digest);
            assert!(!exp.horizons().is_empty());
        }
    }
});
