//! Plans a hybrid allocation from sensing requirements.
//!
//! ```text
//! cargo run --example plan_allocation -- [MAX_RANGE_M MAX_DOPPLER_HZ]
//! ```
//!
//! Derives the grid spacings and burst for the reference numerology, prints
//! the plan summary of all four modes and draws the first resource block
//! (12 subcarriers x 14 symbols): `S` sensing grid, `.` regular data.

use hybrid_isac::planner::{
    build_re_map, check_burst_fits, compute_burst, compute_spacings, plan_summary, AllocationMode, FramePlan, ReClass,
    SensingRequirements,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    let (max_range, max_doppler) = match args[..] {
        [r, d] => (r, d),
        [] => (312.0, 15_000.0),
        _ => return Err("expected MAX_RANGE_M MAX_DOPPLER_HZ".into()),
    };
    let req = SensingRequirements {
        max_range,
        max_doppler,
        range_resolution: 1.578,
        doppler_resolution: 214.3,
    };

    let mut plan = FramePlan::reference(AllocationMode::Hybrid);
    let spacings = compute_spacings(&plan.numerology, &req)?;
    let burst = compute_burst(&req)?;
    check_burst_fits(&plan.numerology, &burst)?;
    println!(
        "requirements: {max_range} m, {max_doppler} Hz -> K_F = {} ({:.3}), K_T = {} ({:.3})",
        spacings.k_f, spacings.k_f_exact, spacings.k_t, spacings.k_t_exact
    );
    println!(
        "burst: {:.1} MHz x {:.3} ms\n",
        burst.bandwidth / 1e6,
        burst.duration * 1e3
    );
    plan.k_f = spacings.k_f;
    plan.k_t = spacings.k_t;
    print!("{}", plan_summary(&plan)?);

    let map = build_re_map(&plan)?;
    println!("\nfirst resource block (rows: subcarriers, columns: symbols)");
    for n in 0..12 {
        let row: String = (0..14)
            .map(|m| match map.class_at(n, m) {
                ReClass::SensingGrid => 'S',
                ReClass::Regular => '.',
                ReClass::Filler => 'f',
            })
            .collect();
        println!("  {row}");
    }
    Ok(())
}
