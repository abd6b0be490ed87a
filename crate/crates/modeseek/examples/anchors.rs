use modeseek::env::blackjack::*;

fn main() {
    let chart = StrategyChart::standard();
    let seeds: Vec<u64> = (0..150u64).map(|i| 1_000_000 + i * 10_000).collect();
    for (name, policy) in [
        ("basic", DecisionPolicy::BasicStrategy(&chart)),
        ("s17", DecisionPolicy::S17),
        ("h17", DecisionPolicy::H17),
        ("random", DecisionPolicy::PurelyRandom),
        ("stayhit", DecisionPolicy::RandomStayHit),
    ] {
        let rs = evaluate_nights(&policy, &BetPolicy::Unit, 1000, &seeds, 8).unwrap();
        let n = rs.len() as f64;
        let roi = rs.iter().map(|r| r.0).sum::<f64>() / n * 100.0;
        let hit = rs.iter().map(|r| r.1).sum::<f64>() / n;
        let sd = (rs.iter().map(|r| (r.0 * 100.0 - roi).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        println!("{name:8} hit_rate {hit:.4}  mean ROI% {roi:+.4}  sd {sd:.4}");
    }
}
