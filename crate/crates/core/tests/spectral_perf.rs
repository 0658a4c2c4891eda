//! Rough timing probe for the transform engine; run explicitly with
//! `cargo test --release -p vkns2d --test spectral_perf -- --ignored --nocapture`.

use std::time::Instant;
use vkns2d::{spectral, Grid, RealField};

#[test]
#[ignore]
fn transform_throughput() {
    let grid = Grid::new(64).unwrap();
    let f = RealField::from_fn(grid, |x1, x2| {
        (7.3 * x1).sin() * (2.0 * x2).cos() + 0.3 * (11.0 * (x1 + x2)).sin()
    });

    // warm up the engine cache
    let _ = spectral::derivative(&f, spectral::Axis::X1);

    let reps = 5000;
    let t0 = Instant::now();
    let mut acc = 0.0;
    for _ in 0..reps {
        let d = spectral::derivative(&f, spectral::Axis::X1);
        acc += d.values()[0];
    }
    let dt = t0.elapsed();
    // each derivative = 1 forward + 1 inverse
    println!(
        "n=64 forward+inverse pair: {:.2} us (acc={acc:.3e})",
        dt.as_secs_f64() * 1e6 / reps as f64
    );
}

#[test]
#[ignore]
fn step_cost_n64() {
    use vkns2d::dynamics::{simulate, StepControl};
    use vkns2d::state::{InitConfig, InitKind, Params};

    let grid = Grid::new(64).unwrap();
    let p = Params::new(1.0, 2.0, 2.0).unwrap();
    let init = InitConfig {
        kind: InitKind::ConstantPlusMode,
        density_amplitude: 0.05,
        velocity_amplitude: 0.05,
        ..Default::default()
    }
    .build(grid)
    .unwrap();
    let ctl = StepControl { cfl: 0.55, t_end: 0.2, output_interval: 0.05, ..Default::default() };
    let t0 = Instant::now();
    let summary = simulate(init, &p, &ctl, |_, _| {}).unwrap();
    let el = t0.elapsed().as_secs_f64();
    println!(
        "n=64 simulate: {} steps in {:.2}s -> {:.0} us/step (dt_last={:.3e})",
        summary.steps,
        el,
        el * 1e6 / summary.steps as f64,
        summary.stats.dt_last
    );
    let avg_dt = ctl.t_end / summary.steps as f64;
    let t10_steps = 10.0 / avg_dt;
    println!("projected T=10 run: {:.1} min", t10_steps * el / summary.steps as f64 / 60.0);
}

#[test]
#[ignore]
fn raw_fft_breakdown() {
    use rustfft::num_complex::Complex;
    use rustfft::FftPlanner;

    let n = 64usize;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);

    // single len-64 c2c, called row by row over 33 rows
    let mut buf = vec![Complex::new(1.0f64, 0.5); 33 * n];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len().max(1)];
    let reps = 20000;
    let t0 = Instant::now();
    for _ in 0..reps {
        for j in 0..33 {
            fft.process_with_scratch(&mut buf[j * n..(j + 1) * n], &mut scratch);
        }
    }
    println!(
        "33 row c2c(64), per-row calls: {:.2} us",
        t0.elapsed().as_secs_f64() * 1e6 / reps as f64
    );

    // same rows in one batched call
    let mut scratch2 =
        vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len().max(1) * 33];
    let t0 = Instant::now();
    for _ in 0..reps {
        fft.process_with_scratch(&mut buf[..33 * n], &mut scratch2);
    }
    println!(
        "33 row c2c(64), one batched call: {:.2} us",
        t0.elapsed().as_secs_f64() * 1e6 / reps as f64
    );

    // 64-row batch (the other axis)
    let mut buf64 = vec![Complex::new(1.0f64, 0.5); 64 * n];
    let t0 = Instant::now();
    for _ in 0..reps {
        fft.process_with_scratch(&mut buf64[..], &mut scratch2);
    }
    println!(
        "64 row c2c(64), one batched call: {:.2} us",
        t0.elapsed().as_secs_f64() * 1e6 / reps as f64
    );

    // realfft rows
    let mut rplanner = realfft::RealFftPlanner::<f64>::new();
    let r2c = rplanner.plan_fft_forward(n);
    let mut rin = vec![1.0f64; n];
    let mut rout = r2c.make_output_vec();
    let mut rscratch = r2c.make_scratch_vec();
    let t0 = Instant::now();
    for _ in 0..reps {
        for _ in 0..64 {
            r2c.process_with_scratch(&mut rin, &mut rout, &mut rscratch).unwrap();
        }
    }
    println!(
        "64 row r2c(64), per-row calls: {:.2} us",
        t0.elapsed().as_secs_f64() * 1e6 / reps as f64
    );
}
