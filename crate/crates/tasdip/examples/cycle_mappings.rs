//! The three cross-domain mapping functions evaluated by hand: TAS to DIP,
//! DIP to DIP forwarding, and DIP to TAS recovery.

use tasdip::cyclemap::{theta_dip_to_tas, theta_tas_to_dip, vartheta_dip_to_dip, CycleShift};
use tasdip::model::time::TimeConfig;

fn main() {
    // The experiment tick: 10 us DIP cycles, 2 ms cycle time, 200 cycles.
    let time = TimeConfig::new(2_000_000, 10_000).expect("valid config");
    println!(
        "t_ct = t_hc = {} ns, t_dip = {} ns, n_dip = {}",
        time.t_ct, time.t_dip, time.n_dip
    );

    // A packet leaving the TAS edge at offset 3 us, 12 us transmission,
    // 1.5 us wire, aligned clocks, one cycle of shift.
    let shift = CycleShift::new(1, 8).expect("valid shift");
    let cycle = theta_tas_to_dip(3_000, 12_000, 1_500, 0, shift, &time).expect("maps");
    println!("TAS->DIP: offset 3000 + tx 12000 + d 1500 lands in cycle {cycle}");

    // Forwarding between routers 150 us apart: 15 cycles of flight time.
    let next = vartheta_dip_to_dip(cycle, 150_000, 0, &time).expect("maps");
    println!("DIP->DIP: cycle {cycle} is retransmitted downstream in cycle {next}");

    // Recovery into the egress TAS edge's cycle time.
    let theta = theta_dip_to_tas(next, 1_500, 500, &time).expect("maps");
    println!("DIP->TAS: cycle {next} arrives by offset {theta} ns of the cycle time");

    // With no wire delay and aligned clocks, forwarding is simply the next
    // cycle, wrapping at the hypercycle boundary.
    let small = TimeConfig::new(50_000, 10_000).unwrap();
    let wrapped = vartheta_dip_to_dip(4, 0, 0, &small).unwrap();
    println!(
        "with n_dip = {} and an ideal hop, cycle 4 forwards in cycle {wrapped}",
        small.n_dip
    );
}
