//! Mapping accuracy of the bundled corpus under every pass configuration in the matrix.

use zkmap::bench::{config_matrix, measure_accuracy, render_accuracy};
use zkmap::corpus::load_bundled;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = load_bundled()?;
    for (label, config) in config_matrix() {
        let report = measure_accuracy(&fixtures, &label, &config)?;
        print!("{}", render_accuracy(&report));
        println!();
    }
    Ok(())
}
