use modeseek::env::blackjack::*;

fn main() {
    let chart = StrategyChart::standard();
    let mut naturals = 0usize;
    let mut doubles = 0usize;
    let mut splits = 0usize;
    let mut surrenders = 0usize;
    let mut total = 0usize;
    let mut ev_by_len: std::collections::HashMap<String, (f64, usize)> = Default::default();
    let mut settle_hist: std::collections::HashMap<String, usize> = Default::default();
    for night in 0..100u64 {
        let out = play_night(&DecisionPolicy::BasicStrategy(&chart), &BetPolicy::Unit, 1000, 5_000_000 + night * 10_000, 8).unwrap();
        for h in &out.hands {
            total += 1;
            *settle_hist.entry(format!("{:+.1}", h.settlement)).or_insert(0) += 1;
            // classify: settlement 1.5 => natural; |s|==2 => doubled (or split both-win); etc
            if h.settlement == 1.5 { naturals += 1; }
            if h.settlement == -0.5 { surrenders += 1; }
            if h.settlement.abs() == 2.0 { doubles += 1; }
            let _ = (&mut splits, &mut ev_by_len);
        }
    }
    let t = total as f64;
    println!("hands {total}");
    println!("naturals(win) {:.4}", naturals as f64 / t);
    println!("surrender     {:.4}", surrenders as f64 / t);
    println!("abs2 (dbl/split) {:.4}", doubles as f64 / t);
    let mut keys: Vec<_> = settle_hist.keys().cloned().collect();
    keys.sort_by(|a, b| a.parse::<f64>().unwrap().partial_cmp(&b.parse::<f64>().unwrap()).unwrap());
    for k in keys {
        println!("settle {k}: {:.5}", settle_hist[&k] as f64 / t);
    }
    let ev: f64 = settle_hist.iter().map(|(k, v)| k.parse::<f64>().unwrap() * *v as f64).sum::<f64>() / t;
    println!("overall EV per unit {:.5}", ev);
}
