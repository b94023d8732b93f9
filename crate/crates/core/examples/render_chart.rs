//! Draws two loss curves to an SVG on standard output.
//!
//! ```text
//! cargo run --example render_chart > curves.svg
//! ```

use embfuse::chart::{emit_svg_linechart, Axes, Series};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curve = |rate: f64| {
        (1..=20)
            .map(|e| (e as f64, 1.1 * (-rate * e as f64).exp() + 0.05))
            .collect()
    };
    let series = [
        Series::new("fast", curve(0.4)),
        Series::new("slow", curve(0.1)),
    ];
    let svg = emit_svg_linechart(&series, &Axes::new("training loss", "epoch", "loss"))?;
    print!("{svg}");
    Ok(())
}
