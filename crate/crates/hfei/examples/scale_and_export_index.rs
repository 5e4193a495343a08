//! Producing the publishable index: rescale factor draws to match the
//! sample moments of observed GDP growth and export the table with 68%
//! credible bands.
//!
//! Run with: `cargo run --example scale_and_export_index`

use hfei::estimator::run_gibbs;
use hfei::index::{scale_index, write_gdp_companion, write_index};
use hfei::simulate::{simulate_panel, TrueParams};
use hfei::statespace::{FreqClass, ModelSpec};

fn main() -> hfei::Result<()> {
    let mut spec = ModelSpec::new(1, 0, 2);
    spec.p_f = 2;
    spec.p_q = 1;
    spec.chain.iterations = 400;
    spec.chain.burn_in = 150;
    let mut params = TrueParams::baseline(&spec);
    params.phi = vec![0.85, 0.0];
    params.sigma_idio = vec![0.3, 0.25, 0.3];
    let (panel, _) = simulate_panel(&params, &spec, 384, 5)?;

    let draws = run_gibbs(&spec, &panel, 12)?;

    // The observed GDP growth column drives the rescaling target.
    let gdp_idx = panel
        .meta
        .iter()
        .position(|m| m.frequency == FreqClass::Quarterly)
        .expect("a quarterly series is present");
    let gdp_column = &panel.columns[gdp_idx];
    let gdp_values: Vec<f64> = gdp_column.iter().copied().filter(|v| v.is_finite()).collect();

    let series = scale_index(&draws.factor, &draws.spine, &gdp_values)?;

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "scaled index mean {:.5} vs GDP growth mean {:.5}",
        mean(&series.mean),
        mean(&gdp_values)
    );
    println!("\nlast eight stamps:");
    println!("date        week   p16      median   p84");
    for pos in series.stamps.len() - 8..series.stamps.len() {
        let s = series.stamps[pos];
        println!(
            "{}  {}      {:7.4}  {:7.4}  {:7.4}",
            s.first_day(),
            s.week(),
            series.p16[pos],
            series.median[pos],
            series.p84[pos]
        );
    }

    let out = std::env::temp_dir().join("hfei_index_example");
    std::fs::create_dir_all(&out)?;
    write_index(&series, &out.join("index.csv"))?;
    write_gdp_companion(&panel.spine, gdp_column, &out.join("index_gdp.csv"))?;
    println!("\nwrote {} and index_gdp.csv", out.join("index.csv").display());
    Ok(())
}
