use selectt::diagnostics::{gelman_rubin, summarize};
use selectt::gibbs::continuous::run_chain_continuous;
use selectt::gibbs::ChainConfig;
use selectt::model::{ModelVariant, PriorSpec};
use selectt::simgen::{gen_scenario, Scenario};

fn main() {
    let (records, _) = gen_scenario(Scenario::Mixture, 1000, 1);
    let prior = PriorSpec::default_for(5);
    for variant in [ModelVariant::SelectionNormal, ModelVariant::SelectionT] {
        let chains: Vec<_> = (0..3)
            .map(|c| {
                let cfg = ChainConfig {
                    iterations: 10_000,
                    burnin: 2_000,
                    thin: 1,
                    seed: 9100 + c,
                    variant,
                };
                run_chain_continuous(&records, &prior, &cfg).unwrap()
            })
            .collect();
        for name in ["gamma_1", "gamma_2"] {
            let widths: Vec<f64> = chains
                .iter()
                .map(|ch| {
                    let s = summarize(ch, 0.95).unwrap();
                    let p = s.iter().find(|(n, _)| n == name).unwrap().1;
                    p.ci_upper - p.ci_lower
                })
                .collect();
            let rhat = gelman_rubin(&chains, name, false).unwrap();
            println!(
                "{} {name}: widths {:.4} {:.4} {:.4}, rhat {rhat:.4}",
                variant.name(),
                widths[0],
                widths[1],
                widths[2]
            );
        }
    }
}
