//! Parameter recovery on a simulated panel: draw data from the model's
//! own process, run the Gibbs sampler, and compare posterior summaries
//! with the generating values.
//!
//! Run with: `cargo run --example simulate_and_estimate`
//! (about half a minute; lower the iteration count for a shorter demo)

use hfei::estimator::run_gibbs;
use hfei::simulate::{simulate_panel, TrueParams};
use hfei::statespace::ModelSpec;

fn main() -> hfei::Result<()> {
    // One quarterly series (the GDP anchor), one monthly, three weekly.
    let mut spec = ModelSpec::new(1, 1, 3);
    spec.p_f = 2;
    spec.p_q = 3;
    spec.chain.iterations = 1_000;
    spec.chain.burn_in = 400;

    let mut params = TrueParams::baseline(&spec);
    params.phi = vec![0.8, 0.0];
    let lambda = [1.0, 1.5, 0.6, 2.0, 0.9];
    let rho1 = [0.3, -0.2, 0.5, 0.1, -0.3];
    for i in 0..5 {
        params.loadings[[i, 0]] = lambda[i];
        params.rho[[i, 0]] = rho1[i];
    }
    params.sigma_idio = vec![0.5, 0.4, 0.6, 0.3, 0.5];

    let (panel, truth) = simulate_panel(&params, &spec, 480, 42)?;
    println!(
        "simulated panel: {} series x {} pseudo-weeks",
        panel.n_series(),
        panel.len()
    );

    let draws = run_gibbs(&spec, &panel, 7)?;
    let kept = draws.kept() as f64;

    let mean_factor = draws.factor_mean();
    let corr = {
        let n = mean_factor.len() as f64;
        let ma = mean_factor.iter().sum::<f64>() / n;
        let mb = truth.factor.iter().sum::<f64>() / n;
        let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
        for (x, y) in mean_factor.iter().zip(&truth.factor) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    };
    println!("factor path correlation with truth: {corr:.4}\n");

    println!("parameter        truth   posterior mean");
    let phi1 = draws.phi.column(0).sum() / kept;
    let phi2 = draws.phi.column(1).sum() / kept;
    println!("factor AR lag 1   0.800   {phi1:7.3}");
    println!("factor AR lag 2   0.000   {phi2:7.3}");
    for i in 0..5 {
        let mut lam = 0.0;
        let mut r1 = 0.0;
        for k in 0..draws.kept() {
            lam += draws.loadings[[k, i, 0]];
            r1 += draws.rho[[k, i, 0]];
        }
        println!(
            "loading {i}         {:6.3}  {:7.3}{}",
            lambda[i],
            lam / kept,
            if i == 0 { "  (normalized)" } else { "" }
        );
        println!("idio AR {i} lag 1  {:6.3}  {:7.3}", rho1[i], r1 / kept);
    }
    Ok(())
}
