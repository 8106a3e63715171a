//! Prints static lateral force against slip angle for the three tire sets at
//! a few vertical loads, and the cornering stiffness at each load.
//!
//! ```text
//! cargo run --example tire_curves
//! ```

use semitrailer::tire::{cornering_stiffness, lateral_tire_force_static};
use semitrailer::{TireSet, VehicleParameters};

fn main() {
    let params = VehicleParameters::default();
    let loads = [10e3, 25e3, 40e3];
    for set in [TireSet::Front, TireSet::Rear, TireSet::Trailer] {
        let tire = params.tire(set);
        println!("{} tires", set.prefix());
        for &fz in &loads {
            println!("  F_z = {:>5.1} kN, C_alpha = {:>7.1} kN/rad", fz * 1e-3, cornering_stiffness(&tire, fz) * 1e-3);
        }
        print!("  {:>8}", "alpha[deg]");
        for &fz in &loads {
            print!(" {:>12}", format!("F_y@{:.0}kN", fz * 1e-3));
        }
        println!();
        for deg in [0.0, 1.0, 2.0, 4.0, 6.0, 10.0, 15.0, 20.0] {
            print!("  {deg:>10.1}");
            for &fz in &loads {
                let f = lateral_tire_force_static(&tire, f64::to_radians(deg), fz).force;
                print!(" {:>12.2}", f * 1e-3);
            }
            println!();
        }
    }
}
