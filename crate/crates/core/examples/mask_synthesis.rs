//! Encodes a qubit into a phase mask and writes it as an 8-bit image with a
//! JSON sidecar.
//!
//! Usage: `cargo run --example mask_synthesis -- [out_dir]`

use std::f64::consts::PI;
use std::path::PathBuf;

use qudit_slm::formats::{write_json, write_pgm, MaskSidecar};
use qudit_slm::mask::{render_mask_gray, synthesize_mask, GratingSpec, SlitGeometry};
use qudit_slm::optics::noise::GRAY_LEVELS;
use qudit_slm::{QuditState, C64};

fn main() -> qudit_slm::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/mask_synthesis".into()));
    std::fs::create_dir_all(&out)?;

    let state = QuditState::normalize(&[C64::new(0.56, 0.0), C64::from_polar(0.83, 0.63 * PI)])?;
    let geom = SlitGeometry::with_defaults(2)?;
    for spec in [GratingSpec::binary(), GratingSpec::blazed(10)?] {
        let mask = synthesize_mask(&state, &geom, &spec)?;
        let name = spec.kind.name();
        let image = format!("mask_{name}.pgm");
        write_pgm(&out.join(&image), &render_mask_gray(&mask, GRAY_LEVELS)?)?;
        write_json(&out.join(format!("mask_{name}.json")), &MaskSidecar::new(&mask, &image, GRAY_LEVELS))?;
        println!("{name}: {}x{} px, depths {:?}", mask.rows(), mask.cols(), mask.depths);
    }
    println!("written to {}", out.display());
    Ok(())
}
