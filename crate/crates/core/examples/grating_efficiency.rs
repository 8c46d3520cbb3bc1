//! First-order efficiency of binary and quantized blazed gratings versus
//! modulation depth, and the amplitude-to-depth inversion used for encoding.

use qudit_slm::mask::{amplitude_to_depth_binary, amplitude_to_depth_blazed, GratingSpec};
use qudit_slm::optics::grating::{binary_efficiency_continuous, blazed_efficiency_continuous};
use qudit_slm::optics::order_efficiency;

fn main() -> qudit_slm::Result<()> {
    let period = 10;
    let binary = GratingSpec::binary();
    let blazed = GratingSpec::blazed(10)?;

    println!("depth/max  binary(S=64)  binary(cont)  blazed(S=8)  blazed(cont)");
    for step in 0..=8 {
        let t = step as f64 / 8.0;
        let db = t * binary.max_depth();
        let dz = t * blazed.max_depth();
        println!(
            "{t:9.3}  {:12.5}  {:12.5}  {:11.5}  {:12.5}",
            order_efficiency(&binary, period, db, 1, 64),
            binary_efficiency_continuous(db),
            order_efficiency(&blazed, period, dz, 1, 8),
            blazed_efficiency_continuous(dz),
        );
    }

    println!("\namplitude -> depth (rad)");
    for mag in [0.1, 0.25, 0.5, 0.75, 1.0] {
        println!(
            "{mag:5.2}  binary {:.4}  blazed {:.4}",
            amplitude_to_depth_binary(mag)?,
            amplitude_to_depth_blazed(mag, 10)?
        );
    }
    Ok(())
}
