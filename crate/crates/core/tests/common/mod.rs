#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vigil::signal_io::{AlphaSpec, BlinkSpec, SyntheticScenario};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load_scenario(name: &str) -> SyntheticScenario {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    SyntheticScenario::parse(&text).unwrap()
}

pub fn fixture_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixture(""))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".scenario"))
        .collect();
    names.sort();
    names
}

/// Randomised blink-only scenario: 150–300 µV, 150–400 ms, 10 µV background.
pub fn random_blink_scenario(seed: u64, rate: f64) -> SyntheticScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration_s = 40.0;
    let mut blinks = Vec::new();
    let mut t = 1.0 + rng.gen_range(0.0..1.0);
    loop {
        let d: f64 = rng.gen_range(0.15..0.4);
        if t + 2.0 * d > duration_s - 1.0 {
            break;
        }
        blinks.push(BlinkSpec {
            onset_s: t,
            duration_s: d,
            peak_amplitude_uv: rng.gen_range(150.0..300.0),
        });
        t += 2.0 * d + rng.gen_range(1.0..3.0);
    }
    SyntheticScenario {
        duration_s,
        sample_rate: rate,
        background_noise_uv_rms: 10.0,
        blink_specs: blinks,
        seed,
        ..SyntheticScenario::default()
    }
}

/// Builds event schedules left to right, keeping blinks clear of alpha.
pub struct Schedule {
    pub rng: ChaCha8Rng,
    pub t: f64,
    pub blinks: Vec<BlinkSpec>,
    pub alpha: Vec<AlphaSpec>,
}

impl Schedule {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            t: 1.0,
            blinks: Vec::new(),
            alpha: Vec::new(),
        }
    }

    pub fn blinks_until(&mut self, end: f64, dur: (f64, f64), peak: (f64, f64), gap: (f64, f64)) {
        loop {
            let d = self.rng.gen_range(dur.0..dur.1);
            let onset = self.t + d / 2.0;
            if onset + 1.5 * d > end {
                break;
            }
            self.blinks.push(BlinkSpec {
                onset_s: onset,
                duration_s: d,
                peak_amplitude_uv: self.rng.gen_range(peak.0..peak.1),
            });
            self.t = onset + 1.5 * d + self.rng.gen_range(gap.0..gap.1);
        }
        self.t = self.t.max(end);
    }

    /// Alpha with a 2.5 s clear margin on each side.
    pub fn alpha(&mut self, duration_s: f64, amplitude_uv: f64) {
        let onset = self.t + 2.5;
        let frequency_hz = self.rng.gen_range(9.0..11.5);
        self.alpha.push(AlphaSpec {
            onset_s: onset,
            duration_s,
            amplitude_uv,
            frequency_hz,
        });
        self.t = onset + duration_s + 2.5;
    }

    pub fn build(self, duration_s: f64, seed: u64) -> SyntheticScenario {
        SyntheticScenario {
            duration_s,
            sample_rate: 500.0,
            background_noise_uv_rms: 10.0,
            blink_specs: self.blinks,
            alpha_specs: self.alpha,
            seed,
            ..SyntheticScenario::default()
        }
    }
}

/// One scenario of the labelled end-to-end suite. Every scenario starts
/// with 30 s of alert blinking; `seed % 5` picks what follows.
pub fn suite_scenario(seed: u64) -> SyntheticScenario {
    let duration_s = 120.0;
    let mut s = Schedule::new(seed);
    s.blinks_until(30.0, (0.15, 0.3), (180.0, 260.0), (2.5, 5.0));
    match seed % 5 {
        0 => s.blinks_until(duration_s - 1.0, (0.15, 0.3), (180.0, 260.0), (2.5, 5.0)),
        1 => s.blinks_until(duration_s - 1.0, (0.5, 0.62), (280.0, 340.0), (2.0, 3.5)),
        2 => {
            s.blinks_until(45.0, (0.15, 0.3), (180.0, 260.0), (2.5, 5.0));
            for _ in 0..4 {
                let d = s.rng.gen_range(1.0..2.0);
                s.alpha(d, 16.0);
                s.t += s.rng.gen_range(1.0..4.0);
            }
            s.blinks_until(duration_s - 1.0, (0.15, 0.3), (180.0, 260.0), (2.5, 5.0));
        }
        3 => {
            s.blinks_until(50.0, (0.15, 0.3), (180.0, 260.0), (2.5, 5.0));
            let d = s.rng.gen_range(10.0..25.0);
            s.alpha(d, 20.0);
            s.blinks_until(duration_s - 1.0, (0.15, 0.3), (180.0, 260.0), (2.5, 5.0));
        }
        _ => {
            s.blinks_until(60.0, (0.5, 0.62), (280.0, 340.0), (2.0, 3.5));
            for _ in 0..3 {
                let d = s.rng.gen_range(1.0..2.0);
                s.alpha(d, 16.0);
                s.t += s.rng.gen_range(1.0..3.0);
            }
            let d = s.rng.gen_range(10.0..20.0);
            s.alpha(d, 20.0);
            s.blinks_until(duration_s - 1.0, (0.5, 0.62), (280.0, 340.0), (2.0, 3.5));
        }
    }
    s.build(duration_s, 1000 + seed)
}
