#![allow(dead_code)]

pub mod gen;
pub mod oracles;
pub mod props;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Runs `check` on `cases` independently seeded cases and returns the first failure.
pub fn run_cases<F>(name: &str, cases: u64, check: F) -> Result<(), String>
where
    F: Fn(&mut ChaCha8Rng) -> Result<(), String>,
{
    for case in 0..cases {
        let mut rng = ChaCha8Rng::seed_from_u64(case.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5eed);
        check(&mut rng).map_err(|e| format!("{name}: case {case}: {e}"))?;
    }
    Ok(())
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
