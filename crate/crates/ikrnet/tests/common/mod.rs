//! Shared verification machinery: the finite-difference harness, the
//! brute-force metric oracles, reference signals, and experiment helpers.
//! Both the granular suites and the acceptance suite run this exact code.

pub mod experiment;
pub mod gradcheck;
pub mod oracles;

use ikrnet::model::IKrNetConfig;
use ikrnet::signal::GaussianWave;

/// A 10-second ECG-like test signal band-limited to `f_max` by Fourier
/// truncation. Beats repeat every second, so the window is exactly periodic
/// and truncation introduces no wrap discontinuity.
pub fn band_limited_ecg(fs: f64, f_max: f64) -> Vec<f64> {
    let duration = 10.0;
    let n = (duration * fs) as usize;
    let beats: Vec<GaussianWave> = (0..10)
        .flat_map(|i| {
            let r = i as f64 + 0.3;
            vec![
                GaussianWave { amplitude: 0.12, center_s: r - 0.16, width_s: 0.025 },
                GaussianWave { amplitude: -0.1, center_s: r - 0.04, width_s: 0.01 },
                GaussianWave { amplitude: 1.1, center_s: r, width_s: 0.012 },
                GaussianWave { amplitude: -0.25, center_s: r + 0.04, width_s: 0.012 },
                GaussianWave { amplitude: 0.3, center_s: r + 0.24, width_s: 0.05 },
            ]
        })
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            beats.iter().map(|w| w.evaluate(t)).sum()
        })
        .collect();

    let k_max = (f_max * duration).floor() as usize;
    let mut out = vec![0.0; n];
    for k in 0..=k_max {
        let (mut a, mut b) = (0.0, 0.0);
        for (i, x) in raw.iter().enumerate() {
            let phase = std::f64::consts::TAU * k as f64 * i as f64 / n as f64;
            a += x * phase.cos();
            b += x * phase.sin();
        }
        let scale = if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
        for (i, y) in out.iter_mut().enumerate() {
            let phase = std::f64::consts::TAU * k as f64 * i as f64 / n as f64;
            *y += scale * (a * phase.cos() + b * phase.sin());
        }
    }
    out
}

/// Two-block micro configuration for end-to-end gradient checks.
pub fn micro_config() -> IKrNetConfig {
    IKrNetConfig {
        branches: vec![(7, 3)],
        strides: vec![2, 2],
        initial_filters: 4,
        n_blocks: 2,
        filter_growth_every: 4,
        filter_growth_factor: 2,
        branch_out_len: 2,
        branch_out_channels: 4,
        bilstm_layers: 1,
        bilstm_hidden: 3,
        se_reduction: 2,
        expansion_factor: 2,
        use_skip_link: true,
        use_batchnorm: true,
        ..IKrNetConfig::toy()
    }
}
